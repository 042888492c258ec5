//! The FitzHugh–Nagumo vector field
//!
//! ```text
//!   ε dx/dτ = f(x, y) = -y + 4x - x³          dx/dt = f(x, y)
//!     dy/dτ = g(x, y) =  x - b y - c          dy/dt = ε g(x, y)
//! ```
//!
//! in slow time τ (left) and fast time t = τ/ε (right), together with its
//! exact Jacobian. Everything here is closed-form and is used as the oracle
//! for the rest of the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(b, c, ε)`. `eps == 0` selects the singular limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub b: f64,
    pub c: f64,
    pub eps: f64,
}

impl SystemParams {
    pub fn new(b: f64, c: f64, eps: f64) -> Result<Self> {
        if !b.is_finite() || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("b and c must be finite (b = {b}, c = {c})")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be finite and >= 0 (eps = {eps})")));
        }
        Ok(Self { b, c, eps })
    }

    /// The singular (`ε = 0`) system.
    pub fn singular(b: f64, c: f64) -> Result<Self> {
        Self::new(b, c, 0.0)
    }

    pub fn is_singular(&self) -> bool {
        self.eps == 0.0
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    pub fn with_c(self, c: f64) -> Self {
        Self { c, ..self }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }
}

/// A point of the phase plane: `x` fast, `y` slow.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Point reflection through the origin.
    pub fn mirrored(self) -> Self {
        Self::new(-self.x, -self.y)
    }

    pub fn distance(self, other: PhasePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for PhasePoint {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Which independent variable the equations are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeScale {
    /// `t`, with `y' = ε g`.
    Fast,
    /// `τ = ε t`, with `ε ẋ = f`.
    Slow,
}

/// A real 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2x2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2x2 {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Roots of `λ² − Tr λ + det = 0`, ordered `(λ+, λ−)`: larger real part
    /// first, and for a complex pair the root with positive imaginary part
    /// first.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            // Avoid cancellation: the larger-magnitude root from the formula,
            // the other from Vieta.
            let s = disc.sqrt();
            let big = 0.5 * (tr + s.copysign(tr));
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
            (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
        } else {
            let im = 0.5 * (-disc).sqrt();
            (Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im))
        }
    }
}

/// `f(x, y) = −y + 4x − x³`.
pub fn eval_fast(p: PhasePoint) -> f64 {
    -p.y + 4.0 * p.x - p.x * p.x * p.x
}

/// `g(x, y) = x − b y − c`.
pub fn eval_slow(p: PhasePoint, params: &SystemParams) -> f64 {
    p.x - params.b * p.y - params.c
}

/// Right-hand side in the requested time scale. The slow scale divides by
/// `ε` and is only meaningful for `ε > 0`.
pub fn vector_field(p: PhasePoint, params: &SystemParams, scale: TimeScale) -> (f64, f64) {
    let f = eval_fast(p);
    let g = eval_slow(p, params);
    match scale {
        TimeScale::Fast => (f, params.eps * g),
        TimeScale::Slow => (f / params.eps, g),
    }
}

/// Exact Jacobian of [`vector_field`].
pub fn jacobian(p: PhasePoint, params: &SystemParams, scale: TimeScale) -> Jacobian2x2 {
    let fx = 4.0 - 3.0 * p.x * p.x;
    match scale {
        TimeScale::Fast => Jacobian2x2 {
            a11: fx,
            a12: -1.0,
            a21: params.eps,
            a22: -params.eps * params.b,
        },
        TimeScale::Slow => Jacobian2x2 {
            a11: fx / params.eps,
            a12: -1.0 / params.eps,
            a21: 1.0,
            a22: -params.b,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(b: f64, c: f64, eps: f64) -> SystemParams {
        SystemParams::new(b, c, eps).unwrap()
    }

    #[test]
    fn fast_field_values() {
        assert_eq!(eval_fast(PhasePoint::new(0.0, 0.0)), 0.0);
        assert_eq!(eval_fast(PhasePoint::new(1.0, 3.0)), 0.0);
        let x = 2.0 / 3f64.sqrt();
        // 4x − x³ at x = 2/√3 is 16/(3√3)
        assert_relative_eq!(eval_fast(PhasePoint::new(x, 0.0)), 16.0 / (3.0 * 3f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(eval_fast(PhasePoint::new(x, 0.0)), 3.0792014356780038, max_relative = 1e-15);
    }

    #[test]
    fn slow_field_values() {
        assert_eq!(eval_slow(PhasePoint::new(0.0, 0.0), &params(0.2, 0.0, 0.1)), 0.0);
        assert_eq!(eval_slow(PhasePoint::new(1.0, 3.0), &params(0.0, 1.0, 0.1)), 0.0);
        assert_eq!(eval_slow(PhasePoint::new(2.0, 0.0), &params(1.0, 0.0, 0.1)), 2.0);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, 0.0, -1e-3).is_err());
        assert!(SystemParams::new(f64::NAN, 0.0, 0.1).is_err());
        assert!(SystemParams::new(0.0, 0.0, f64::NAN).is_err());
        assert!(SystemParams::singular(0.3, 0.0).unwrap().is_singular());
    }

    #[test]
    fn jacobian_at_case_i_equilibrium() {
        let c = 0.7;
        let phi_c = 4.0 * c - c * c * c;
        let j = jacobian(PhasePoint::new(c, phi_c), &params(0.0, c, 0.3), TimeScale::Fast);
        assert_eq!(j, Jacobian2x2 { a11: 4.0 - 3.0 * c * c, a12: -1.0, a21: 0.3, a22: -0.0 });
    }

    #[test]
    fn jacobian_trace_det_at_e_plus() {
        for &(b, eps) in &[(0.3f64, 0.5f64), (0.36, 0.1), (1.0, 1.0), (0.8, 0.01)] {
            let x = (4.0 - 1.0 / b).sqrt();
            let p = PhasePoint::new(x, x / b);
            let j = jacobian(p, &params(b, 0.0, eps), TimeScale::Fast);
            assert_relative_eq!(j.trace(), -eps * b + 3.0 / b - 8.0, max_relative = 1e-12, epsilon = 1e-13);
            assert_relative_eq!(j.det(), 2.0 * eps * (4.0 * b - 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn singular_origin_eigenvalues() {
        let j = jacobian(PhasePoint::new(0.0, 0.0), &params(0.0, 0.0, 0.0), TimeScale::Fast);
        let (l1, l2) = j.eigenvalues();
        assert_eq!(l1, Complex64::new(4.0, 0.0));
        assert_eq!(l2, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn slow_scale_is_fast_scale_over_eps() {
        let p = PhasePoint::new(0.4, -1.2);
        let pr = params(0.3, 0.1, 0.05);
        let (f1, g1) = vector_field(p, &pr, TimeScale::Fast);
        let (f2, g2) = vector_field(p, &pr, TimeScale::Slow);
        assert_relative_eq!(f2, f1 / 0.05, max_relative = 1e-15);
        assert_relative_eq!(g2, g1 / 0.05, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn fast_field_is_odd(x in -5.0..5.0f64, y in -20.0..20.0f64) {
            let p = PhasePoint::new(x, y);
            prop_assert_eq!(eval_fast(p.mirrored()), -eval_fast(p));
        }

        #[test]
        fn slow_field_is_odd_without_offset(x in -5.0..5.0f64, y in -20.0..20.0f64, b in -2.0..2.0f64) {
            let pr = params(b, 0.0, 0.1);
            let p = PhasePoint::new(x, y);
            prop_assert_eq!(eval_slow(p.mirrored(), &pr), -eval_slow(p, &pr));
        }

        #[test]
        fn jacobian_matches_central_differences(
            x in -3.0..3.0f64, y in -10.0..10.0f64,
            b in -1.0..1.0f64, c in -2.0..2.0f64, eps in 1e-3..1.0f64,
        ) {
            let pr = params(b, c, eps);
            let p = PhasePoint::new(x, y);
            let h = 1e-6;
            for scale in [TimeScale::Fast, TimeScale::Slow] {
                let j = jacobian(p, &pr, scale);
                let fd = |dx: f64, dy: f64| {
                    let (fp, gp) = vector_field(PhasePoint::new(x + dx, y + dy), &pr, scale);
                    let (fm, gm) = vector_field(PhasePoint::new(x - dx, y - dy), &pr, scale);
                    ((fp - fm) / (2.0 * h), (gp - gm) / (2.0 * h))
                };
                let (dfdx, dgdx) = fd(h, 0.0);
                let (dfdy, dgdy) = fd(0.0, h);
                // slow scale entries carry a 1/ε factor, so compare relatively
                let s = match scale { TimeScale::Fast => 1.0, TimeScale::Slow => 1.0 / eps };
                prop_assert!((j.a11 - dfdx).abs() <= 1e-6 * s.max(j.a11.abs()));
                prop_assert!((j.a12 - dfdy).abs() <= 1e-6 * s);
                prop_assert!((j.a21 - dgdx).abs() <= 1e-6 * s);
                prop_assert!((j.a22 - dgdy).abs() <= 1e-6 * s);
            }
        }

        #[test]
        fn eigenvalues_satisfy_vieta(
            a11 in -10.0..10.0f64, a12 in -10.0..10.0f64,
            a21 in -10.0..10.0f64, a22 in -10.0..10.0f64,
        ) {
            let j = Jacobian2x2 { a11, a12, a21, a22 };
            let (l1, l2) = j.eigenvalues();
            let tr = j.trace();
            let det = j.det();
            let scale = tr.abs().max(det.abs().sqrt()).max(1.0);
            prop_assert!(((l1 + l2).re - tr).abs() <= 1e-12 * scale);
            prop_assert!((l1 + l2).im.abs() <= 1e-12 * scale);
            let prod = l1 * l2;
            prop_assert!((prod.re - det).abs() <= 1e-12 * scale * scale);
            prop_assert!(prod.im.abs() <= 1e-12 * scale * scale);
            // each root satisfies the characteristic polynomial
            for l in [l1, l2] {
                let r = l * l - l * tr + det;
                prop_assert!(r.norm() <= 1e-11 * scale * scale);
            }
        }
    }
}
