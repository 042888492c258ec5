//! A stiffly accurate, L-stable SDIRK method of order 4 for planar
//! autonomous systems, with an embedded order-3 error estimate and cubic
//! Hermite dense output.
//!
//! The tableau is the five-stage method of Hairer and Wanner with
//! `γ = 1/4`. Each stage is solved by full Newton iteration on the 2×2
//! system `(I − hγJ) δ = −r`.

use crate::error::{Error, Result};
use crate::system::PhasePoint;

pub(crate) type Vec2 = [f64; 2];
pub(crate) type Mat2 = [[f64; 2]; 2];

pub(crate) const GAMMA: f64 = 0.25;
// Stage abscissae; the field is autonomous so only the tests use them.
#[cfg(test)]
pub(crate) const C: [f64; 5] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
pub(crate) const A: [[f64; 5]; 5] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
pub(crate) const B: [f64; 5] = A[4];
pub(crate) const B_HAT: [f64; 5] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

/// Smallest accepted step before giving up.
pub const MIN_STEP: f64 = 1e-14;
/// States beyond this magnitude count as a blow-up.
const BLOWUP: f64 = 1e10;
const MAX_NEWTON: usize = 10;
const NEWTON_TOL: f64 = 1e-3;

fn solve2(m: Mat2, r: Vec2) -> Option<Vec2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([(r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - r[0] * m[1][0]) / det])
}

fn newton_matrix(j: Mat2, hg: f64) -> Mat2 {
    [[1.0 - hg * j[0][0], -hg * j[0][1]], [-hg * j[1][0], 1.0 - hg * j[1][1]]]
}

/// One accepted step, kept for dense output.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step {
    pub t0: f64,
    pub t1: f64,
    pub u0: Vec2,
    pub u1: Vec2,
    pub f0: Vec2,
    pub f1: Vec2,
}

impl Step {
    /// Cubic Hermite interpolant at `t ∈ [t0, t1]`.
    pub fn eval(&self, t: f64) -> Vec2 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        std::array::from_fn(|i| h00 * self.u0[i] + h10 * h * self.f0[i] + h01 * self.u1[i] + h11 * h * self.f1[i])
    }
}

pub(crate) struct Stepper<F, J> {
    f: F,
    jac: J,
    tol: f64,
    pub t: f64,
    pub u: Vec2,
    pub fu: Vec2,
    h: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl<F, J> Stepper<F, J>
where
    F: Fn(Vec2) -> Vec2,
    J: Fn(Vec2) -> Mat2,
{
    pub fn new(f: F, jac: J, t0: f64, u0: Vec2, tol: f64, h0: Option<f64>) -> Self {
        let fu = f(u0);
        let h = h0.unwrap_or_else(|| {
            let scale = u0[0].abs().max(u0[1].abs()) + 1.0;
            let rate = fu[0].abs().max(fu[1].abs()) + 1e-300;
            (0.01 * tol.powf(0.25) * scale / rate).clamp(1e-10, 0.1)
        });
        Self { f, jac, tol, t: t0, u: u0, fu, h, steps: 0, rejected: 0 }
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Attempts a step of size `h` from `(u, f(u))`. Returns the new state
    /// and the scaled error norm, or `None` if a stage solve failed.
    fn attempt_from(&self, u: Vec2, fu: Vec2, h: f64) -> Option<(Vec2, f64)> {
        let hg = h * GAMMA;
        let mut k = [[0.0; 2]; 5];
        let mut z = u;
        for i in 0..5 {
            let mut r = u;
            for (j, kj) in k.iter().enumerate().take(i) {
                r[0] += h * A[i][j] * kj[0];
                r[1] += h * A[i][j] * kj[1];
            }
            let prev = if i == 0 { fu } else { k[i - 1] };
            z = [r[0] + hg * prev[0], r[1] + hg * prev[1]];
            let mut converged = false;
            for _ in 0..MAX_NEWTON {
                let fz = (self.f)(z);
                let res = [z[0] - r[0] - hg * fz[0], z[1] - r[1] - hg * fz[1]];
                let d = solve2(newton_matrix((self.jac)(z), hg), [-res[0], -res[1]])?;
                z = [z[0] + d[0], z[1] + d[1]];
                if !(z[0].is_finite() && z[1].is_finite()) {
                    return None;
                }
                let n = (d[0] / self.scale(z[0], r[0])).hypot(d[1] / self.scale(z[1], r[1]));
                if n < NEWTON_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return None;
            }
            k[i] = [(z[0] - r[0]) / hg, (z[1] - r[1]) / hg];
        }
        let mut e = [0.0; 2];
        for (i, ki) in k.iter().enumerate() {
            e[0] += h * (B[i] - B_HAT[i]) * ki[0];
            e[1] += h * (B[i] - B_HAT[i]) * ki[1];
        }
        // filtering through (I − hγJ)⁻¹ keeps the estimate bounded on stiff modes
        let e = solve2(newton_matrix((self.jac)(u), hg), e)?;
        let err = ((e[0] / self.scale(u[0], z[0])).powi(2) + (e[1] / self.scale(u[1], z[1])).powi(2)) / 2.0;
        Some((z, err.sqrt()))
    }

    /// Takes one accepted step that does not pass `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<Step> {
        loop {
            let remaining = t_limit - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h < MIN_STEP && !last {
                return Err(Error::StepSizeCollapse { t: self.t, h, last: self.point() });
            }
            match self.attempt_from(self.u, self.fu, h) {
                Some((u1, err)) if err <= 1.0 => {
                    if !(u1[0].is_finite() && u1[1].is_finite()) || u1[0].abs().max(u1[1].abs()) > BLOWUP {
                        return Err(Error::NonFinite { t: self.t, last: self.point() });
                    }
                    let f1 = (self.f)(u1);
                    let step = Step { t0: self.t, t1: if last { t_limit } else { self.t + h }, u0: self.u, u1, f0: self.fu, f1 };
                    self.t = step.t1;
                    self.u = u1;
                    self.fu = f1;
                    self.steps += 1;
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.25)).clamp(0.2, 5.0) };
                    if !last || fac < 1.0 {
                        self.h = h * fac;
                    }
                    return Ok(step);
                }
                Some((_, err)) => {
                    self.rejected += 1;
                    self.h = h * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                }
                None => {
                    self.rejected += 1;
                    self.h = h * 0.25;
                }
            }
            if self.h < MIN_STEP {
                return Err(Error::StepSizeCollapse { t: self.t, h: self.h, last: self.point() });
            }
        }
    }

    /// An accurate state at `t` inside `step`, by a fresh step of the exact
    /// length from the step start. Falls back to the interpolant.
    pub fn resolve(&self, step: &Step, t: f64) -> Vec2 {
        if t <= step.t0 {
            return step.u0;
        }
        match self.attempt_from(step.u0, step.f0, t - step.t0) {
            Some((u, _)) => u,
            None => step.eval(t),
        }
    }

    pub fn point(&self) -> PhasePoint {
        PhasePoint::new(self.u[0], self.u[1])
    }

    pub fn eval_f(&self, u: Vec2) -> Vec2 {
        (self.f)(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_satisfies_order_conditions() {
        let c = C;
        let b = B;
        for i in 0..5 {
            let row: f64 = A[i].iter().sum();
            assert!((row - c[i]).abs() < 1e-15, "row {i}");
            assert_eq!(A[i][i], GAMMA);
        }
        let dot = |w: &[f64; 5], v: &dyn Fn(usize) -> f64| (0..5).map(|i| w[i] * v(i)).sum::<f64>();
        let ac = |i: usize| (0..5).map(|j| A[i][j] * c[j]).sum::<f64>();
        let ac2 = |i: usize| (0..5).map(|j| A[i][j] * c[j] * c[j]).sum::<f64>();
        let aac = |i: usize| (0..5).map(|j| A[i][j] * ac(j)).sum::<f64>();
        let conds: [(f64, f64); 8] = [
            (dot(&b, &|_| 1.0), 1.0),
            (dot(&b, &|i| c[i]), 0.5),
            (dot(&b, &|i| c[i] * c[i]), 1.0 / 3.0),
            (dot(&b, &ac), 1.0 / 6.0),
            (dot(&b, &|i| c[i].powi(3)), 0.25),
            (dot(&b, &|i| c[i] * ac(i)), 0.125),
            (dot(&b, &ac2), 1.0 / 12.0),
            (dot(&b, &aac), 1.0 / 24.0),
        ];
        for (k, (got, want)) in conds.iter().enumerate() {
            assert!((got - want).abs() < 1e-13, "condition {k}: {got} vs {want}");
        }
        let bh = B_HAT;
        assert!((dot(&bh, &|_| 1.0) - 1.0).abs() < 1e-13);
        assert!((dot(&bh, &|i| c[i]) - 0.5).abs() < 1e-13);
        assert!((dot(&bh, &|i| c[i] * c[i]) - 1.0 / 3.0).abs() < 1e-13);
        assert!((dot(&bh, &ac) - 1.0 / 6.0).abs() < 1e-13);
        // the embedded method is genuinely of lower order
        assert!((dot(&bh, &|i| c[i].powi(3)) - 0.25).abs() > 1e-3);
    }

    #[test]
    fn stability_function_is_l_stable() {
        // R(z) for y' = λy from one step with hλ = z
        let r = |z: f64| {
            let mut k = [0.0; 5];
            for i in 0..5 {
                let s: f64 = (0..i).map(|j| A[i][j] * k[j]).sum();
                k[i] = z * (1.0 + s) / (1.0 - GAMMA * z);
            }
            1.0 + (0..5).map(|i| B[i] * k[i]).sum::<f64>()
        };
        assert!(r(-1e8).abs() < 1e-6);
        for z in [-0.1, -1.0, -10.0, -100.0] {
            assert!(r(z).abs() < 1.0);
        }
        assert!((r(-1e-3) - (-1e-3f64).exp()).abs() < 1e-15);
    }

    fn linear_stepper(lambda: f64, tol: f64) -> Stepper<impl Fn(Vec2) -> Vec2, impl Fn(Vec2) -> Mat2> {
        Stepper::new(move |u: Vec2| [lambda * u[0], -u[1]], move |_| [[lambda, 0.0], [0.0, -1.0]], 0.0, [1.0, 1.0], tol, None)
    }

    #[test]
    fn stiff_linear_decay_is_accurate() {
        let mut s = linear_stepper(-1e6, 1e-8);
        while s.t < 2.0 {
            s.advance(2.0).unwrap();
        }
        assert_eq!(s.t, 2.0);
        assert!(s.u[0].abs() < 1e-8);
        assert!((s.u[1] - (-2f64).exp()).abs() < 1e-7);
        assert!(s.steps < 2000, "{} steps", s.steps);
    }

    #[test]
    fn global_error_tracks_tolerance() {
        let err = |tol: f64| {
            let mut s = linear_stepper(-2.0, tol);
            while s.t < 3.0 {
                s.advance(3.0).unwrap();
            }
            (s.u[1] - (-3f64).exp()).abs().max((s.u[0] - (-6f64).exp()).abs())
        };
        assert!(err(1e-6) < 1e-5);
        assert!(err(1e-10) < 1e-9);
        assert!(err(1e-10) < err(1e-6));
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |t: f64| [t * t * t - t, 2.0 * t * t];
        let dp = |t: f64| [3.0 * t * t - 1.0, 4.0 * t];
        let st = Step { t0: 0.5, t1: 2.0, u0: p(0.5), u1: p(2.0), f0: dp(0.5), f1: dp(2.0) };
        for t in [0.5, 0.7, 1.3, 2.0] {
            let v = st.eval(t);
            assert!((v[0] - p(t)[0]).abs() < 1e-13 && (v[1] - p(t)[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn blowup_is_reported() {
        let mut s = Stepper::new(|u: Vec2| [u[0] * u[0], 0.0], |u: Vec2| [[2.0 * u[0], 0.0], [0.0, 0.0]], 0.0, [1.0, 0.0], 1e-8, None);
        let mut out = Ok(());
        for _ in 0..100_000 {
            if let Err(e) = s.advance(2.0) {
                out = Err(e);
                break;
            }
        }
        assert!(matches!(out, Err(Error::NonFinite { .. }) | Err(Error::StepSizeCollapse { .. })), "{out:?}");
    }
}
