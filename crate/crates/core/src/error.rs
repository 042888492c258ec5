use crate::system::PhasePoint;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reduced flow is undefined at the fold abscissa x = {x}")]
    FoldSingularity { x: f64 },

    #[error("x = {x} is not an equilibrium of the reduced flow (residual {residual:e})")]
    NotAnEquilibrium { x: f64, residual: f64 },

    #[error("start point ({}, {}) lies on the critical manifold", .0.x, .0.y)]
    OnManifold(PhasePoint),

    #[error("an equilibrium sits exactly on a fold (x = {x}); non-generic configuration")]
    FoldEquilibrium { x: f64 },

    #[error("slow transit hits an equilibrium at x = {x}")]
    EquilibriumInPath { x: f64 },

    #[error("no relaxation cycle: the reduced flow does not carry D to P+ and F to P-")]
    NoRelaxationCycle,

    #[error("y = {y} is outside the validity interval ({lo}, {hi}) of the branch graph")]
    OutOfValidity { y: f64, lo: f64, hi: f64 },

    #[error("step size collapsed to {h:e} at t = {t}")]
    StepSizeCollapse { t: f64, h: f64, last: PhasePoint },

    #[error("state became non-finite after t = {t}")]
    NonFinite { t: f64, last: PhasePoint },

    #[error("no periodic orbit found within the time budget")]
    NoCycle,

    #[error("trajectory converged to the equilibrium ({}, {})", .0.x, .0.y)]
    ConvergedToEquilibrium(PhasePoint),

    #[error("loop is degenerate: {0}")]
    DegenerateLoop(String),

    #[error("bracket [{lo}, {hi}] does not contain a sign change of the discriminant")]
    BracketFailure { lo: f64, hi: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
