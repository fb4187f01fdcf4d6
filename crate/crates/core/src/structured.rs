//! Structured H2 synthesis: minimize `J(K)` subject to `K ∘ I^c = 0` by the
//! method of multipliers on
//!
//! ```text
//! L_γ(K, Λ) = J(K) + trace(Λᵀ (K ∘ I^c)) + (γ/2) ‖K ∘ I^c‖²_F
//! ```
//!
//! Each outer step minimizes `L_γ` over unstructured `K`, then sets
//! `Λ ← Λ + γ (K ∘ I^c)` and `γ ← α γ`. Once the violation is below `eps_stop`
//! the gain is projected onto the pattern and polished by descent restricted
//! to the free entries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::descent::{self, DescentSettings, StopReason};
use crate::error::{Error, Result};
use crate::lti::{
    cost_and_gradient, cost_of, lqr_centralized, Cost, GainMatrix, LtiPlant, SparsityPattern,
};
use crate::scalar::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct AugLagConfig<T: Real> {
    pub gamma0: T,
    /// Penalty growth factor, must exceed one.
    pub alpha: T,
    /// Outer stopping tolerance on `‖K ∘ I^c‖_F`.
    pub eps_stop: T,
    pub max_outer: usize,
    /// Inner minimization of `L_γ`.
    pub inner: DescentSettings<T>,
    /// Descent over the free entries after projection.
    pub polish: DescentSettings<T>,
}

impl<T: Real> Default for AugLagConfig<T> {
    fn default() -> Self {
        Self {
            gamma0: T::one(),
            alpha: T::lit(5.0),
            eps_stop: T::tol(1e-6),
            max_outer: 50,
            inner: DescentSettings {
                max_iter: 5_000,
                grad_tol: T::tol(1e-7),
                ..Default::default()
            },
            polish: DescentSettings {
                max_iter: 20_000,
                grad_tol: T::tol(1e-8),
                ..Default::default()
            },
        }
    }
}

impl<T: Real> AugLagConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::one()) || !(self.gamma0 > T::zero()) || !(self.eps_stop > T::zero()) {
            return Err(Error::InvalidConfig(
                "augmented Lagrangian needs alpha > 1, gamma0 > 0, eps_stop > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Snapshot after one multiplier update.
#[derive(Clone, Debug)]
pub struct AugLagState<T: Real> {
    pub k: DMatrix<T>,
    /// Multiplier after the update.
    pub lambda: DMatrix<T>,
    /// Penalty used for this step's minimization.
    pub gamma: T,
    pub iteration: usize,
    /// `‖K ∘ I^c‖_F` of this step's minimizer.
    pub violation: T,
}

#[derive(Clone, Debug)]
pub struct StructuredGain<T: Real> {
    pub gain: GainMatrix<T>,
    pub pattern: SparsityPattern,
    pub cost: T,
    /// Outer multiplier iterations (zero when the start point was already structured).
    pub outer_iterations: usize,
    /// Outer loop reached `eps_stop` and the polish met its gradient tolerance.
    pub converged: bool,
    /// `‖∇J(K) ∘ I_Ω‖_F` at the returned gain.
    pub stationarity: T,
    /// Descent iterations spent in the structured polish.
    pub polish_iterations: usize,
    pub history: Vec<AugLagState<T>>,
}

fn check_pattern<T: Real>(plant: &LtiPlant<T>, pattern: &SparsityPattern) -> Result<()> {
    if !pattern.matches(plant.partition()) {
        return Err(Error::DimensionMismatch(format!(
            "pattern is {}x{} blocks, partition {}x{}",
            pattern.rows(),
            pattern.cols(),
            plant.partition().row_blocks(),
            plant.partition().col_blocks()
        )));
    }
    Ok(())
}

fn al_value_and_gradient<T: Real>(
    plant: &LtiPlant<T>,
    k: &DMatrix<T>,
    lambda: &DMatrix<T>,
    gamma: T,
    comp: &DMatrix<T>,
) -> Option<(T, DMatrix<T>)> {
    let (j, g) = cost_and_gradient(plant, k)?;
    let viol = k.component_mul(comp);
    let value = j + lambda.dot(&viol) + gamma * T::lit(0.5) * viol.norm_squared();
    let grad = g + lambda.component_mul(comp) + viol * gamma;
    Some((value, grad))
}

/// `L_γ(K, Λ)` for a stabilizing `K`.
pub fn augmented_lagrangian<T: Real>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
    lambda: &DMatrix<T>,
    gamma: T,
    pattern: &SparsityPattern,
) -> Result<T> {
    check_pattern(plant, pattern)?;
    let comp = pattern.complement_indicator(plant.partition());
    al_value_and_gradient(plant, k.matrix(), lambda, gamma, &comp)
        .map(|(v, _)| v)
        .ok_or(Error::NotStabilizing)
}

/// `∇L_γ = ∇J(K) + Λ ∘ I^c + γ (K ∘ I^c)`.
pub fn augmented_lagrangian_gradient<T: Real>(
    plant: &LtiPlant<T>,
    k: &GainMatrix<T>,
    lambda: &DMatrix<T>,
    gamma: T,
    pattern: &SparsityPattern,
) -> Result<DMatrix<T>> {
    check_pattern(plant, pattern)?;
    let comp = pattern.complement_indicator(plant.partition());
    al_value_and_gradient(plant, k.matrix(), lambda, gamma, &comp)
        .map(|(_, g)| g)
        .ok_or(Error::NotStabilizing)
}

/// Minimizes `L_γ(·, Λ)` over unstructured `K` from `k_init`.
pub fn minimize_inner<T: Real>(
    plant: &LtiPlant<T>,
    lambda: &DMatrix<T>,
    gamma: T,
    pattern: &SparsityPattern,
    k_init: &GainMatrix<T>,
    settings: &DescentSettings<T>,
) -> Result<GainMatrix<T>> {
    check_pattern(plant, pattern)?;
    let comp = pattern.complement_indicator(plant.partition());
    let out = descent::minimize(
        k_init.matrix().clone(),
        None,
        |k| al_value_and_gradient(plant, k, lambda, gamma, &comp),
        settings,
    )
    .ok_or(Error::NotStabilizing)?;
    match out.stop {
        StopReason::Converged => k_init.with_matrix(out.x),
        StopReason::MaxIterations => Err(Error::MaxIterations(settings.max_iter)),
        StopReason::Stalled => Err(Error::LineSearchFailure(settings.max_backtracks)),
        StopReason::Unstable => Err(Error::LostStabilizability),
    }
}

/// Structured H2 gain on `pattern`, starting from the centralized LQR gain.
pub fn synthesize_structured<T: Real>(
    plant: &LtiPlant<T>,
    pattern: &SparsityPattern,
    config: &AugLagConfig<T>,
) -> Result<StructuredGain<T>> {
    synthesize_structured_from(plant, pattern, config, None)
}

/// As [`synthesize_structured`], but warm-started from `init` when it is
/// stabilizing. A stabilizing `init` that already satisfies the pattern
/// skips the multiplier loop and goes straight to the polish.
pub fn synthesize_structured_from<T: Real>(
    plant: &LtiPlant<T>,
    pattern: &SparsityPattern,
    config: &AugLagConfig<T>,
    init: Option<&GainMatrix<T>>,
) -> Result<StructuredGain<T>> {
    check_pattern(plant, pattern)?;
    config.validate()?;
    let part = plant.partition();
    let mask: DMatrix<T> = pattern.indicator(part);
    let comp: DMatrix<T> = pattern.complement_indicator(part);

    let start = match init.filter(|g| cost_of(plant, g.matrix()).is_finite()) {
        Some(g) => g.matrix().clone(),
        None => lqr_centralized(plant)?.into_matrix(),
    };

    let mut k = start;
    let mut lambda = DMatrix::<T>::zeros(k.nrows(), k.ncols());
    let mut gamma = config.gamma0;
    let mut history = Vec::new();
    let mut outer_converged = k.component_mul(&comp).norm() < config.eps_stop;

    let mut outer = 0;
    while !outer_converged && outer < config.max_outer {
        let out = descent::minimize(
            k.clone(),
            None,
            |x| al_value_and_gradient(plant, x, &lambda, gamma, &comp),
            &config.inner,
        )
        .ok_or(Error::NotStabilizing)?;
        k = out.x;
        let viol_m = k.component_mul(&comp);
        let violation = viol_m.norm();
        lambda += viol_m * gamma;
        history.push(AugLagState {
            k: k.clone(),
            lambda: lambda.clone(),
            gamma,
            iteration: outer,
            violation,
        });
        gamma *= config.alpha;
        outer += 1;
        outer_converged = violation < config.eps_stop;
    }

    let projected = k.component_mul(&mask);
    if !cost_of(plant, &projected).is_finite() {
        return Err(Error::PatternNotStabilizable(format!(
            "projected iterate is not stabilizing after {outer} outer iterations"
        )));
    }
    let polished = descent::minimize(
        projected,
        Some(&mask),
        |x| cost_and_gradient(plant, x),
        &config.polish,
    )
    .expect("projected gain was checked to be stabilizing");
    let polish_converged = polished.converged();
    let gain = GainMatrix::new(polished.x, part.clone())?;
    Ok(StructuredGain {
        gain,
        pattern: pattern.clone(),
        cost: polished.value,
        outer_iterations: outer,
        converged: outer_converged && polish_converged,
        stationarity: polished.grad_norm,
        polish_iterations: polished.iterations,
        history,
    })
}

/// `J*` on `pattern`, or [`Cost::Unbounded`] when no stabilizing structured
/// gain was found.
pub fn structured_optimal_cost<T: Real>(
    plant: &LtiPlant<T>,
    pattern: &SparsityPattern,
    config: &AugLagConfig<T>,
    init: Option<&GainMatrix<T>>,
) -> Result<(Cost<T>, Option<StructuredGain<T>>)> {
    match synthesize_structured_from(plant, pattern, config, init) {
        Ok(s) => Ok((Cost::Finite(s.cost), Some(s))),
        Err(Error::PatternNotStabilizable(_)) | Err(Error::NotStabilizing) => {
            Ok((Cost::Unbounded, None))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{cost_gradient, is_stabilizing, BlockPartition};

    fn two_node_plant() -> LtiPlant<f64> {
        LtiPlant::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.3, -0.2]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            BlockPartition::new(vec![1, 1], vec![1, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn structured_gain_with_zero_violation_equals_cost() {
        let p = two_node_plant();
        let pat = SparsityPattern::diagonal(2, 2);
        let k = GainMatrix::new(DMatrix::from_row_slice(2, 2, &[2., 0., 0., 2.]), p.partition().clone())
            .unwrap();
        let lam = DMatrix::from_row_slice(2, 2, &[3., -7., 1.5, 9.]);
        let al = augmented_lagrangian(&p, &k, &lam, 4.0, &pat).unwrap();
        let j = cost_of(&p, k.matrix()).finite().unwrap();
        assert_eq!(al, j);
    }

    #[test]
    fn single_violation_adds_square() {
        let p = two_node_plant();
        let pat = SparsityPattern::diagonal(2, 2);
        let v = 0.3;
        let k = GainMatrix::new(DMatrix::from_row_slice(2, 2, &[2., v, 0., 2.]), p.partition().clone())
            .unwrap();
        let al = augmented_lagrangian(&p, &k, &DMatrix::zeros(2, 2), 2.0, &pat).unwrap();
        let j = cost_of(&p, k.matrix()).finite().unwrap();
        assert!((al - (j + v * v)).abs() < 1e-14);
    }

    #[test]
    fn inner_from_lqr_with_no_penalty_stays_put() {
        let p = two_node_plant();
        let kc = lqr_centralized(&p).unwrap();
        let out = minimize_inner(
            &p,
            &DMatrix::zeros(2, 2),
            0.0,
            &SparsityPattern::diagonal(2, 2),
            &kc,
            &DescentSettings {
                grad_tol: 1e-6,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((out.matrix() - kc.matrix()).norm() < 1e-12);
    }

    #[test]
    fn diagonal_pattern_converges_and_is_stationary() {
        let p = two_node_plant();
        let pat = SparsityPattern::diagonal(2, 2);
        let s = synthesize_structured(&p, &pat, &AugLagConfig::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.gain.matrix()[(0, 1)], 0.0);
        assert_eq!(s.gain.matrix()[(1, 0)], 0.0);
        assert!(is_stabilizing(&p, &s.gain).unwrap());
        let g = cost_gradient(&p, &s.gain).unwrap();
        let free = g.component_mul(&pat.indicator(p.partition()));
        assert!(free.norm() <= 1e-5 * (1.0 + s.gain.matrix().norm()));
        let kc = lqr_centralized(&p).unwrap();
        assert!(s.cost >= cost_of(&p, kc.matrix()).finite().unwrap() - 1e-8);
        // multiplier update contract
        for w in s.history.windows(2) {
            assert!((w[1].gamma - 5.0 * w[0].gamma).abs() < 1e-12 * w[1].gamma);
        }
        let comp: DMatrix<f64> = pat.complement_indicator(p.partition());
        let mut lam = DMatrix::zeros(2, 2);
        for st in &s.history {
            lam += st.k.component_mul(&comp) * st.gamma;
            assert!((&lam - &st.lambda).norm() < 1e-12);
        }
    }

    #[test]
    fn unstabilizable_pattern_is_reported() {
        // node 0 is unstable and only its own controller can act on it
        let p = LtiPlant::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            BlockPartition::new(vec![1, 1], vec![1, 1]).unwrap(),
        )
        .unwrap();
        let mut pat = SparsityPattern::empty(2, 2);
        pat.set(1, 1, true);
        let cfg = AugLagConfig {
            max_outer: 12,
            ..Default::default()
        };
        let err = synthesize_structured(&p, &pat, &cfg).unwrap_err();
        assert!(matches!(err, Error::PatternNotStabilizable(_)), "{err:?}");
    }

    #[test]
    fn bad_config_rejected() {
        let p = two_node_plant();
        let cfg = AugLagConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_structured(&p, &SparsityPattern::full(2, 2), &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }
}
