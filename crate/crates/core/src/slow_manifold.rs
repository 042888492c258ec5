//! First-order slow manifolds on the attracting branches.
//!
//! Away from the folds an attracting branch of `C0` is a graph `x = h0(y)`.
//! For small `ε > 0` the invariant slow manifold is `O(ε)`-close to it and
//! is approximated by `x = h0(y) + ε h1(y)` with
//!
//! ```text
//!   h1 = −f_y g / f_x² − f_ε / f_x = (h0 − b y − c) / (4 − 3 h0²)²
//! ```
//!
//! evaluated at `(h0(y), y, 0)`.

use serde::Serialize;

use crate::cubic::{phi_prime, phi_roots};
use crate::error::{Error, Result};
use crate::singular::{Branch, FOLD_X, FOLD_Y};
use crate::system::SystemParams;

/// Default distance kept from the fold ordinate.
pub const DEFAULT_FOLD_MARGIN: f64 = 1e-3;
/// Default far end of the validity interval, `|y| ≤ 10`.
pub const DEFAULT_Y_EXTENT: f64 = 10.0;
const MIN_FOLD_MARGIN: f64 = 1e-6;

/// An attracting branch of `C0` seen as a graph over `y ∈ (lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchGraph {
    branch: Branch,
    lo: f64,
    hi: f64,
}

impl BranchGraph {
    /// The default interval: the left branch covers `(−16/(3√3) + 1e-3, 10)`,
    /// the right branch the mirror image.
    pub fn new(branch: Branch) -> Result<Self> {
        Self::with_interval(branch, f64::NEG_INFINITY, f64::INFINITY).map(|(g, _)| g)
    }

    /// Intersects `(lo, hi)` with the admissible interval of `branch`.
    /// Returns the graph and whether the request had to be clipped.
    pub fn with_interval(branch: Branch, lo: f64, hi: f64) -> Result<(Self, bool)> {
        let (alo, ahi) = match branch {
            Branch::LeftAttracting => (-FOLD_Y + DEFAULT_FOLD_MARGIN, DEFAULT_Y_EXTENT),
            Branch::RightAttracting => (-DEFAULT_Y_EXTENT, FOLD_Y - DEFAULT_FOLD_MARGIN),
            other => {
                return Err(Error::InvalidParameter(format!("{other:?} is not an attracting branch")));
            }
        };
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(format!("empty y-interval ({lo}, {hi})")));
        }
        let (clo, chi) = (lo.max(alo), hi.min(ahi));
        if clo >= chi {
            return Err(Error::InvalidParameter(format!(
                "y-interval ({lo}, {hi}) does not meet the admissible range ({alo}, {ahi})"
            )));
        }
        let clipped = clo != lo && lo.is_finite() || chi != hi && hi.is_finite();
        Ok((Self { branch, lo: clo, hi: chi }, clipped))
    }

    /// Uses an explicit margin from the fold ordinate (at least `1e-6`) and
    /// far extent.
    pub fn with_margin(branch: Branch, margin: f64, extent: f64) -> Result<Self> {
        if !(margin >= MIN_FOLD_MARGIN) || !(extent > FOLD_Y) {
            return Err(Error::InvalidParameter(format!("margin {margin} / extent {extent} out of range")));
        }
        let (lo, hi) = match branch {
            Branch::LeftAttracting => (-FOLD_Y + margin, extent),
            Branch::RightAttracting => (-extent, FOLD_Y - margin),
            other => {
                return Err(Error::InvalidParameter(format!("{other:?} is not an attracting branch")));
            }
        };
        Ok(Self { branch, lo, hi })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn check(&self, y: f64) -> Result<()> {
        if y > self.lo && y < self.hi || self.contains_endpoint(y) {
            Ok(())
        } else {
            Err(Error::OutOfValidity { y, lo: self.lo, hi: self.hi })
        }
    }

    // The far end is a closed bound; only the fold side is open.
    fn contains_endpoint(&self, y: f64) -> bool {
        match self.branch {
            Branch::LeftAttracting => y == self.hi,
            _ => y == self.lo,
        }
    }

    /// `h0(y)`: the root of `4x − x³ = y` on this branch.
    pub fn h0(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        let roots = phi_roots(y);
        let x = match self.branch {
            Branch::LeftAttracting => roots.first().map(|r| r.x).filter(|&x| x < -FOLD_X),
            _ => roots.last().map(|r| r.x).filter(|&x| x > FOLD_X),
        };
        x.ok_or(Error::OutOfValidity { y, lo: self.lo, hi: self.hi })
    }

    /// `h1(y) = (h0 − b y − c) / (4 − 3 h0²)²`.
    pub fn h1(&self, y: f64, params: &SystemParams) -> Result<f64> {
        let x = self.h0(y)?;
        let fx = phi_prime(x);
        Ok((x - params.b * y - params.c) / (fx * fx))
    }

    /// `h0(y) + ε h1(y)`.
    pub fn h_eps(&self, y: f64, params: &SystemParams) -> Result<f64> {
        let x = self.h0(y)?;
        if params.eps == 0.0 {
            return Ok(x);
        }
        Ok(x + params.eps * self.h1(y, params)?)
    }

    /// `dh0/dy = −f_y / f_x = 1 / (4 − 3 h0²)`.
    pub fn dh0_dy(&self, y: f64) -> Result<f64> {
        Ok(1.0 / phi_prime(self.h0(y)?))
    }

    /// Invariance defect of the truncated graph, `ε dh/dy · g − f` at
    /// `(h_eps(y), y)`, with `dh/dy` by central differences.
    pub fn invariance_defect(&self, y: f64, params: &SystemParams) -> Result<f64> {
        let d = 1e-5;
        let x = self.h_eps(y, params)?;
        let xp = self.h_eps(y + d, params)?;
        let xm = self.h_eps(y - d, params)?;
        let slope = (xp - xm) / (2.0 * d);
        let p = crate::system::PhasePoint::new(x, y);
        Ok(params.eps * slope * crate::system::eval_slow(p, params) - crate::system::eval_fast(p))
    }
}

/// The nested-radical closed form of `h0` on the left branch, valid for
/// `27 y² > 256` with `y > 0`.
pub fn h0_left_radical(y: f64) -> f64 {
    let s = (9.0 * y + (3.0 * (27.0 * y * y - 256.0)).sqrt()).cbrt();
    -4.0 * (2.0f64 / 3.0).cbrt() / s - s / 18f64.cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::phi;

    fn left() -> BranchGraph {
        BranchGraph::new(Branch::LeftAttracting).unwrap()
    }

    fn right() -> BranchGraph {
        BranchGraph::new(Branch::RightAttracting).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn h0_at_zero_level() {
        assert!((left().h0(0.0).unwrap() + 2.0).abs() < 1e-15);
        assert!((right().h0(0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn h0_near_the_fold_matches_bisection() {
        let delta = 1e-3;
        let y = -FOLD_Y + delta + 1e-9;
        let oracle = bisect(|x| 4.0 * x - x * x * x - y, -3.0, -FOLD_X);
        let h = left().h0(y).unwrap();
        assert!((h - oracle).abs() < 1e-10, "{h} vs {oracle}");
        // frozen oracle value: the root sits just left of the fold abscissa
        assert!((h + 1.171_649_576).abs() < 1e-8, "{h}");
        let m = right().h0(-y).unwrap();
        assert!((m + h).abs() < 1e-12);
    }

    #[test]
    fn out_of_validity() {
        assert!(matches!(left().h0(-FOLD_Y), Err(Error::OutOfValidity { .. })));
        assert!(matches!(left().h0(11.0), Err(Error::OutOfValidity { .. })));
        assert!(left().h0(10.0).is_ok());
        assert!(matches!(right().h0(FOLD_Y - 1e-4), Err(Error::OutOfValidity { .. })));
        assert!(BranchGraph::new(Branch::MiddleRepelling).is_err());
        assert!(BranchGraph::with_margin(Branch::LeftAttracting, 1e-7, 10.0).is_err());
    }

    #[test]
    fn interval_clipping() {
        let (g, clipped) = BranchGraph::with_interval(Branch::LeftAttracting, -5.0, 5.0).unwrap();
        assert!(clipped);
        assert_eq!(g.interval(), (-FOLD_Y + DEFAULT_FOLD_MARGIN, 5.0));
        let (_, clipped) = BranchGraph::with_interval(Branch::RightAttracting, -2.0, 2.0).unwrap();
        assert!(!clipped);
        assert!(BranchGraph::with_interval(Branch::RightAttracting, 4.0, 5.0).is_err());
    }

    #[test]
    fn h1_values() {
        let p = SystemParams::new(0.0, 0.0, 0.1).unwrap();
        assert!((left().h1(0.0, &p).unwrap() + 1.0 / 32.0).abs() < 1e-15);
        let p = SystemParams::new(0.0, -2.0, 0.1).unwrap();
        assert!(left().h1(0.0, &p).unwrap().abs() < 1e-15);
        // an equilibrium on the right branch: b = 1, c = 0, x* = √3
        let p = SystemParams::new(1.0, 0.0, 0.1).unwrap();
        let ys = phi(3f64.sqrt());
        assert!(right().h1(ys, &p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn h_eps_values() {
        let p0 = SystemParams::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(left().h_eps(1.3, &p0).unwrap(), left().h0(1.3).unwrap());
        let p = SystemParams::new(0.0, 0.0, 0.1).unwrap();
        assert!((left().h_eps(0.0, &p).unwrap() + 2.003125).abs() < 1e-14);
        let p = SystemParams::new(0.0, 0.0, 0.05).unwrap();
        assert!((left().h_eps(0.0, &p).unwrap() + 2.0015625).abs() < 1e-14);
    }

    #[test]
    fn radical_form_agrees_above_fold_band() {
        for y in [3.2, 4.0, 5.5, 8.0, 10.0] {
            let r = h0_left_radical(y);
            let h = left().h0(y).unwrap();
            assert!((r - h).abs() < 1e-12, "y = {y}: {r} vs {h}");
        }
    }

    #[test]
    fn slope_of_h0_matches_finite_differences() {
        let g = left();
        for y in [-2.5, -1.0, 0.0, 2.0, 6.0, 9.5] {
            let d = 1e-6;
            let fd = (g.h0(y + d).unwrap() - g.h0(y - d).unwrap()) / (2.0 * d);
            assert!((fd - g.dh0_dy(y).unwrap()).abs() < 1e-6, "y = {y}");
        }
    }

    #[test]
    fn invariance_defect_is_second_order() {
        let g = BranchGraph::with_interval(Branch::LeftAttracting, 0.0, 10.0).unwrap().0;
        let max_defect = |eps: f64| {
            let p = SystemParams::new(0.0, 0.0, eps).unwrap();
            (0..=200)
                .map(|i| g.interval().0 + 1e-4 + (9.9 - 1e-4) * i as f64 / 200.0)
                .map(|y| g.invariance_defect(y, &p).unwrap().abs())
                .fold(0.0, f64::max)
        };
        let ratio = max_defect(0.1) / max_defect(0.05);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
