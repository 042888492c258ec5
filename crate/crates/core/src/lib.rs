//! Fast-slow analysis of the FitzHugh–Nagumo system
//!
//! ```text
//!   x' = −y + 4x − x³
//!   y' = ε (x − b y − c)
//! ```
//!
//! The crate covers the singular limit (critical manifold, folds, reduced
//! flow, singular orbits and the relaxation period), first-order slow
//! manifolds, stiff integration of the regular system with limit-cycle
//! detection, the Hopf, pitchfork and homoclinic bifurcations, and canard
//! explosions. The `book/` directory next to the workspace walks through the
//! same material with runnable snippets.

// `!(x > 0.0)` is used on purpose to reject NaN; quadrature nodes keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bifurcation;
pub mod canard;
pub mod cubic;
pub mod dynamics;
pub mod error;
mod ode;
pub mod quad;
pub mod singular;
pub mod slow_manifold;
pub mod system;

pub use error::{Error, Result};
pub use system::{eval_fast, eval_slow, jacobian, Jacobian2x2, PhasePoint, SystemParams, TimeScale};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/singular.md")]
    struct Singular;
    #[doc = include_str!("../../../book/src/slow_manifold.md")]
    struct SlowManifold;
    #[doc = include_str!("../../../book/src/dynamics.md")]
    struct Dynamics;
    #[doc = include_str!("../../../book/src/bifurcation.md")]
    struct Bifurcation;
    #[doc = include_str!("../../../book/src/canard.md")]
    struct Canard;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
