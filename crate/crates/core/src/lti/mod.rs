//! LTI plant types, Lyapunov/Riccati solvers and the closed-loop H2 cost.

mod cost;
mod gain;
pub mod lyapunov;
pub(crate) mod matio;
mod partition;
mod pattern;
mod plant;
pub mod riccati;
mod simulate;

pub use cost::{
    closed_loop_cost, controllability_gramian, cost_gradient, is_stabilizing,
    observability_gramian, Cost,
};
pub(crate) use cost::{cost_and_gradient, cost_of};
pub use gain::{GainDocument, GainMatrix};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_kronecker, spectral_abscissa, SchurLyapunov};
pub use partition::BlockPartition;
pub use pattern::SparsityPattern;
pub use plant::{LtiPlant, PlantDocument};
pub use riccati::{lqr_centralized, solve_care, CareSolution, RiccatiOptions};
pub use simulate::{simulate_closed_loop, SimulationTrace};
