//! Closed-form real roots of cubic polynomials.
//!
//! Three real roots use the trigonometric form, a single real root uses the
//! cancellation-free Cardano form, and a vanishing discriminant is reported
//! as one simple and one double root. Simple roots get one Newton step.

use serde::Serialize;

/// A real root together with its multiplicity (1, 2 or 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub x: f64,
    pub multiplicity: u8,
}

impl Root {
    fn simple(x: f64) -> Self {
        Self { x, multiplicity: 1 }
    }
}

/// Relative discriminant threshold below which two roots are merged.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;

/// `φ(x) = 4x − x³`, the critical manifold as a graph over `x`.
pub fn phi(x: f64) -> f64 {
    4.0 * x - x * x * x
}

/// `φ'(x) = 4 − 3x²`.
pub fn phi_prime(x: f64) -> f64 {
    4.0 - 3.0 * x * x
}

/// All real solutions of `4x − x³ = y`, ascending.
pub fn phi_roots(y: f64) -> Vec<Root> {
    // x³ − 4x + y = 0
    solve_cubic(1.0, 0.0, -4.0, y)
}

/// Distinct real roots of `a x³ + b x² + c x + d`, ascending. Degenerate
/// leading coefficients fall back to the quadratic and linear cases; the
/// zero polynomial has no reported roots.
pub fn solve_cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<Root> {
    if a == 0.0 {
        return solve_quadratic(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // x = t − b/3 turns the monic cubic into t³ + p t + q.
    let shift = -b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;

    let half_q = 0.5 * q;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let scale = half_q * half_q + third_p.abs().powi(3);

    let poly = |x: f64| ((x + b) * x + c) * x + d;
    let dpoly = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let polish = |x: f64| {
        let dp = dpoly(x);
        if dp != 0.0 {
            let step = poly(x) / dp;
            let y = x - step;
            if poly(y).abs() <= poly(x).abs() {
                return y;
            }
        }
        x
    };

    let mut roots = if scale == 0.0 {
        vec![Root { x: shift, multiplicity: 3 }]
    } else if disc.abs() <= DOUBLE_ROOT_TOL * scale {
        // t_simple = 3q/p, t_double = −3q/(2p)
        let simple = 3.0 * q / p + shift;
        let double = -1.5 * q / p + shift;
        vec![Root::simple(polish(simple)), Root { x: double, multiplicity: 2 }]
    } else if disc < 0.0 {
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        (0..3)
            .map(|k| Root::simple(polish(m * (theta - tau * k as f64).cos() + shift)))
            .collect()
    } else {
        let s = disc.sqrt();
        let u = (-half_q - s.copysign(half_q)).cbrt();
        let t = if u != 0.0 { u - third_p / u } else { 0.0 };
        vec![Root::simple(polish(t + shift))]
    };
    roots.sort_by(|l, r| l.x.total_cmp(&r.x));
    roots
}

fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<Root> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![Root::simple(-c / b)];
    }
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc.abs() <= DOUBLE_ROOT_TOL * scale {
        return vec![Root { x: -b / (2.0 * a), multiplicity: 2 }];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let mut r = [q / a, if q != 0.0 { c / q } else { 0.0 }];
    r.sort_by(f64::total_cmp);
    r.iter().map(|&x| Root::simple(x)).collect()
}
