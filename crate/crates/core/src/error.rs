use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("state outside the kinetic domain (w = {w})")]
    Domain { w: f64 },
    #[error("kinetic residual {residual:.3e} too large for an equilibrium")]
    ResidualTooLarge { residual: f64 },
    #[error("degenerate equilibrium: {0}")]
    DegenerateEquilibrium(String),
    #[error("region geometry requires mu > rho (mu = {mu}, rho = {rho})")]
    MortalityAssumption { mu: f64, rho: f64 },
    #[error("coefficient {name} = {value:.3e} too close to zero to fix its sign")]
    SignBoundary { name: &'static str, value: f64 },
    #[error("newton iteration did not converge (last iterate R = {r}, b = {b}, residual {residual:.3e})")]
    NoConvergence { r: f64, b: f64, residual: f64 },
    #[error("branch switch detected: b jumped from {from} to {to}")]
    BranchSwitch { from: f64, to: f64 },
    #[error("singular denominator in {0}")]
    Singular(&'static str),
    #[error("no Turing window: a22 = {a22:.6e} <= 0")]
    NoTuringWindow { a22: f64 },
    #[error("no intersection: {0}")]
    NoIntersection(String),
    #[error("degenerate cubic coefficient {name} = {value:.3e}")]
    DegenerateCubic { name: &'static str, value: f64 },
    #[error("point lies on critical line {0}")]
    OnBoundary(&'static str),
    #[error("amplitude equilibria do not match any region of the stability ledger")]
    UnmatchedRegion,
    #[error("step size collapsed at t = {t}")]
    StepCollapse { t: f64 },
    #[error("trajectory left the invariant bounds at t = {t} (w = {w}, b = {b})")]
    BoundViolation { t: f64, w: f64, b: f64 },
    #[error("simulation blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("no period blow-up detected: {0}")]
    NoBlowUp(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
