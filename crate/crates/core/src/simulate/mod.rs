//! Time integration: kinetics trajectories, attractors, periodic orbits and the 1-D PDE.

pub mod attractor;
pub mod cycles;
pub mod ode;
pub mod pattern;
pub mod pde;

pub use attractor::{basin_probe, detect_attractor, find_cycle, Attractor, BasinLabel, BasinMap, CycleInfo, DetectConfig};
pub use cycles::{
    amplitude_exponent, cycle_branch, cycles_at, homoclinic_scan, hopf_branch_equilibrium, BlowUpEvidence, BranchSample, CycleBranch,
    CycleSearch, HomoclinicEstimate, HomoclinicRule,
};
pub use ode::{integrate_directed, integrate_ode, invariant_bounds, Direction, OdeTrajectory};
pub use pattern::{classify_pattern, mean_oscillation, Pattern, PatternOutcome, PatternThresholds};
pub use pde::{simulate_pde, InitialProfile, PdeConfig, PdeField, Scheme};
