//! Singular folds, the canard normal form and canard explosions in `c`.
//!
//! The normal-form coefficients `A` and `B` are computed from the two
//! translated systems of case (i) (`b = 0`, parameter `c̄ = c^H − c`) and
//! case (ii) (`c = 0`, parameter `λ = b − 3/8`). The asymptotic canard
//! locus is reported for comparison only: the numerical explosion locator
//! is what pins canard parameter values down.

use rayon::prelude::*;
use serde::Serialize;

use crate::bifurcation::Parameter;
use crate::cubic::phi;
use crate::dynamics::{find_limit_cycle_with, CycleOptions, Direction, LimitCycle};
use crate::error::{Error, Result};
use crate::singular::FOLD_X;
use crate::system::{eval_fast, eval_slow, PhasePoint, SystemParams};

const FOLD_CHECK_TOL: f64 = 1e-10;

/// One condition of the singular-fold test with its evaluated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldCondition {
    pub name: &'static str,
    pub value: f64,
    /// `true` for conditions of the form `= 0`, `false` for `≠ 0`.
    pub vanishes: bool,
    pub holds: bool,
}

impl FoldCondition {
    fn new(name: &'static str, value: f64, vanishes: bool) -> Self {
        let holds = if vanishes { value.abs() <= FOLD_CHECK_TOL } else { value.abs() > FOLD_CHECK_TOL };
        Self { name, value, vanishes, holds }
    }
}

/// The five singular-fold conditions followed by the two regularity
/// conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularFoldReport {
    pub point: PhasePoint,
    pub parameter: Parameter,
    pub lambda: f64,
    pub conditions: [FoldCondition; 7],
}

impl SingularFoldReport {
    /// `f = f_x = g = 0` with `f_xx, f_y ≠ 0`.
    pub fn is_singular_fold(&self) -> bool {
        self.conditions[..5].iter().all(|c| c.holds)
    }

    /// A singular fold with `g_x, g_λ ≠ 0`.
    pub fn is_regular(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

/// Evaluates the singular-fold and regularity conditions at `point` with
/// `parameter` as the bifurcation parameter.
pub fn check_singular_fold(point: PhasePoint, params: &SystemParams, parameter: Parameter) -> SingularFoldReport {
    let x = point.x;
    let g_lambda = match parameter {
        Parameter::C => -1.0,
        Parameter::B => -point.y,
    };
    let lambda = match parameter {
        Parameter::C => params.c,
        Parameter::B => params.b,
    };
    SingularFoldReport {
        point,
        parameter,
        lambda,
        conditions: [
            FoldCondition::new("f", eval_fast(point), true),
            FoldCondition::new("f_x", 4.0 - 3.0 * x * x, true),
            FoldCondition::new("f_xx", -6.0 * x, false),
            FoldCondition::new("f_y", -1.0, false),
            FoldCondition::new("g", eval_slow(point, params), true),
            FoldCondition::new("g_x", 1.0, false),
            FoldCondition::new("g_lambda", g_lambda, false),
        ],
    }
}

/// Values at the origin of the normal-form functions `l1..l6` and the
/// derivatives entering `A` and `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFormCoeffs {
    pub l: [f64; 6],
    pub dl1_dx: f64,
    pub dl2_dx: f64,
    pub dl3_dx: f64,
    pub dl4_dx: f64,
    pub a: f64,
    pub b: f64,
    /// Direction of the normal-form parameter relative to the original one.
    pub orientation: f64,
    /// Slope of the canard locus in `ε` as stated alongside the case, when
    /// it is stated.
    pub stated_canard_slope: Option<f64>,
    /// `x_+` as stated for case (ii).
    pub stated_x_plus: Option<f64>,
}

/// `A = (−∂l1/∂x + 3∂l2/∂x − 2∂l4/∂x + 2 l6) / 8`.
pub fn coefficient_a(dl1_dx: f64, dl2_dx: f64, dl4_dx: f64, l6: f64) -> f64 {
    (-dl1_dx + 3.0 * dl2_dx - 2.0 * dl4_dx + 2.0 * l6) / 8.0
}

/// `B = (∂l3/∂x + l6) / 2`.
pub fn coefficient_b(dl3_dx: f64, l6: f64) -> f64 {
    (dl3_dx + l6) / 2.0
}

impl NormalFormCoeffs {
    fn build(l: [f64; 6], d: [f64; 4], orientation: f64) -> Self {
        Self {
            l,
            dl1_dx: d[0],
            dl2_dx: d[1],
            dl3_dx: d[2],
            dl4_dx: d[3],
            a: coefficient_a(d[0], d[1], d[3], l[5]),
            b: coefficient_b(d[2], l[5]),
            orientation,
            stated_canard_slope: None,
            stated_x_plus: None,
        }
    }
}

/// Case (i) at `(c^H, φ(c^H))` with `c̄ = c^H − c`:
/// `x' = −y + x²(−2√3 − x)`, `y' = ε(x + c̄)`.
pub fn normal_form_case_i() -> NormalFormCoeffs {
    let mut n = NormalFormCoeffs::build([1.0, -2.0 * 3f64.sqrt(), 0.0, 1.0, -1.0, 0.0], [0.0, -1.0, 0.0, 0.0], -1.0);
    n.stated_canard_slope = Some(-3.0 / 8.0);
    n
}

/// Case (ii) at `E+` for `b = 3/8` with `λ = b − 3/8`:
/// `x' = −y − x³ − 3x²x_+`, `y' = ε(x − λy − 3y/8)`.
///
/// `l2(0) = −3x_+` uses the stated `x_+ = 4/3`; `A` and `B` do not
/// depend on it.
pub fn normal_form_case_ii() -> NormalFormCoeffs {
    let x_plus = 4.0 / 3.0;
    let mut n = NormalFormCoeffs::build([-1.0, -3.0 * x_plus, 0.0, 1.0, 1.0, -3.0 / 8.0], [0.0, -1.0, 0.0, 0.0], 1.0);
    n.stated_x_plus = Some(x_plus);
    n
}

/// Largest `ε` accepted by [`asymptotic_loci`].
pub const LOCI_EPS_MAX: f64 = 0.5;

/// Leading-order Hopf and canard loci in the normal-form parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLoci {
    pub lambda_h: f64,
    pub lambda_c: f64,
    /// `λ_H − λ_c = A ε`.
    pub separation: f64,
    /// The canard locus as stated with the case, if any.
    pub stated_lambda_c: Option<f64>,
    /// The stated locus has the opposite sign to `−(B + A) ε`.
    pub sign_discrepancy: bool,
}

/// `λ_H = −Bε` and `λ_c = −(B + A)ε`.
pub fn asymptotic_loci(coeffs: &NormalFormCoeffs, eps: f64) -> Result<AsymptoticLoci> {
    if !(eps > 0.0 && eps <= LOCI_EPS_MAX) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, {LOCI_EPS_MAX}]")));
    }
    let lambda_h = -coeffs.b * eps;
    let lambda_c = -(coeffs.b + coeffs.a) * eps;
    let stated = coeffs.stated_canard_slope.map(|s| s * eps);
    Ok(AsymptoticLoci {
        lambda_h,
        lambda_c,
        separation: lambda_h - lambda_c,
        stated_lambda_c: stated,
        sign_discrepancy: stated.is_some_and(|s| s * lambda_c < 0.0),
    })
}

/// Cycle lengths below this count as small.
pub const SMALL_LENGTH: f64 = 5.0;
/// Cycle lengths above this count as large.
pub const LARGE_LENGTH: f64 = 15.0;
/// The bisection discriminant `𝒜 ≥ 10`.
pub const EXPLOSION_LENGTH: f64 = 10.0;
const EXPLOSION_BRACKET: f64 = 1e-7;

/// Offset of the cycle seed above the equilibrium.
pub const SEED_OFFSET: f64 = 0.2;

// Near the maximal canard the return map contracts slowly.
fn explosion_opts() -> CycleOptions {
    CycleOptions { tol: 1e-11, budget_periods: 400.0, ..CycleOptions::default() }
}

/// The stable cycle of case (i) at `c`, seeded above the equilibrium.
pub fn cycle_at(c: f64, eps: f64) -> Result<LimitCycle> {
    cycle_at_with(c, eps, &explosion_opts())
}

fn cycle_at_with(c: f64, eps: f64, opts: &CycleOptions) -> Result<LimitCycle> {
    let params = SystemParams::new(0.0, c, eps)?;
    find_limit_cycle_with(&params, PhasePoint::new(c, phi(c) + SEED_OFFSET), Direction::Forward, opts)
}

/// Cycle length at `c`; a cycle collapsed onto the equilibrium has
/// length zero.
fn length_at(c: f64, eps: f64) -> Result<f64> {
    match cycle_at(c, eps) {
        Ok(lc) => Ok(lc.length),
        Err(Error::ConvergedToEquilibrium(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Explosion {
    /// Midpoint of the final bracket.
    pub c: f64,
    /// Final bracket: large cycles at `.0`, small at `.1`.
    pub bracket: (f64, f64),
    pub eps: f64,
    pub evaluations: usize,
}

/// Coarse bracket for the explosion from 41 cycle lengths on
/// `[c^H − 0.05, c^H − 1e-5]`.
pub fn default_bracket(eps: f64) -> Result<(f64, f64)> {
    let n = 41;
    let cs: Vec<f64> = (0..n).map(|i| FOLD_X - 0.05 + (0.05 - 1e-5) * i as f64 / (n - 1) as f64).collect();
    let lens: Vec<Result<f64>> = cs.par_iter().map(|&c| length_at(c, eps)).collect();
    for i in 0..n - 1 {
        if let (Ok(a), Ok(b)) = (&lens[i], &lens[i + 1]) {
            if *a >= EXPLOSION_LENGTH && *b < EXPLOSION_LENGTH {
                return Ok((cs[i], cs[i + 1]));
            }
        }
    }
    Err(Error::BracketFailure { lo: cs[0], hi: cs[n - 1] })
}

/// Bisection on `c` (with `b = 0`) for the jump of the cycle length
/// through `𝒜 = 10`, down to a bracket narrower than `1e-7`.
///
/// The bracket (either order) must have a large cycle (`𝒜 > 15`) at its
/// lower end and a small one (`𝒜 < 5`) at its upper end: the length
/// decreases towards the Hopf point. Without a bracket one is taken from
/// [`default_bracket`]. An upper end whose cycle cannot be resolved is
/// moved inwards in steps of 1% of the width, at most ten times.
pub fn locate_canard_explosion(eps: f64, bracket: Option<(f64, f64)>) -> Result<Explosion> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let bracket = match bracket {
        Some(b) => b,
        None => default_bracket(eps)?,
    };
    let (mut lo, mut hi) = if bracket.0 < bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let a_lo = length_at(lo, eps)?;
    // right next to the Hopf point the small cycle attracts too weakly to
    // be resolved; move the upper end inwards until it is
    let width = hi - lo;
    let mut evaluations = 1;
    let mut a_hi = Err(Error::NoCycle);
    for k in 0..=10 {
        evaluations += 1;
        a_hi = length_at(hi - width * k as f64 / 100.0, eps);
        if !matches!(a_hi, Err(Error::NoCycle)) {
            hi -= width * k as f64 / 100.0;
            break;
        }
    }
    let a_hi = a_hi?;
    if !(a_lo > LARGE_LENGTH && a_hi < SMALL_LENGTH) {
        return Err(Error::BracketFailure { lo, hi });
    }
    while hi - lo > EXPLOSION_BRACKET {
        let mid = 0.5 * (lo + hi);
        let a = match cycle_at(mid, eps) {
            Ok(lc) => lc.length,
            Err(Error::ConvergedToEquilibrium(_)) => return Err(Error::NoCycle),
            Err(e) => return Err(e),
        };
        evaluations += 1;
        if a >= EXPLOSION_LENGTH {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Explosion { c: 0.5 * (lo + hi), bracket: (lo, hi), eps, evaluations })
}

/// End of the family of small unstable cycles around `E+` in case (ii)
/// (`c = 0`), by bisection on `b` between a small cycle (`𝒜 < 10`) and a
/// large or missing one. Default bracket `(b^H + 1e-4, b^H + 0.02)`.
///
/// There is no reference value for this locus. At moderate `ε` the family
/// is cut off by the homoclinic connection before its length grows, and
/// the result then sits at the homoclinic value.
pub fn locate_canard_in_b(eps: f64, bracket: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let b_h = crate::bifurcation::hopf_b_value(eps);
    let (mut lo, mut hi) = bracket.unwrap_or((b_h + 1e-4, b_h + 0.02));
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let opts = CycleOptions { tol: 1e-11, budget_periods: 200.0, ..CycleOptions::default() };
    let small = |b: f64, seed: Option<PhasePoint>| -> Result<Option<LimitCycle>> {
        let params = SystemParams::new(b, 0.0, eps)?;
        let e = crate::bifurcation::e_plus(b).ok_or(Error::BracketFailure { lo: b, hi: b })?;
        let seed = seed.unwrap_or(PhasePoint::new(e.x, e.y + 0.01));
        match find_limit_cycle_with(&params, seed, Direction::Backward, &opts) {
            Ok(lc) if lc.length < EXPLOSION_LENGTH => Ok(Some(lc)),
            Ok(_) | Err(Error::NoCycle | Error::ConvergedToEquilibrium(_) | Error::NonFinite { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut cycle = small(lo, None)?.ok_or(Error::BracketFailure { lo, hi })?;
    if small(hi, None)?.is_some() {
        return Err(Error::BracketFailure { lo, hi });
    }
    while hi - lo > EXPLOSION_BRACKET {
        let mid = 0.5 * (lo + hi);
        match small(mid, Some(cycle.samples[0]))? {
            Some(lc) => {
                lo = mid;
                cycle = lc;
            }
            None => hi = mid,
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CanardClass {
    HopfSmall,
    Headless,
    Headed,
    Relaxation,
}

/// Distance band around the middle branch.
pub const MIDDLE_BAND: f64 = 0.05;
/// Minimal arc length inside the band.
pub const MIDDLE_ARC: f64 = 0.5;
/// Cycles with a smaller diameter are Hopf-type.
pub const SMALL_DIAMETER: f64 = 0.5;
const MIDDLE_SAMPLES: usize = 2000;

fn middle_branch() -> Vec<PhasePoint> {
    (0..MIDDLE_SAMPLES)
        .map(|i| {
            let x = -FOLD_X + 2.0 * FOLD_X * i as f64 / (MIDDLE_SAMPLES - 1) as f64;
            PhasePoint::new(x, phi(x))
        })
        .collect()
}

/// Distance from each cycle sample to the sampled middle branch.
pub fn middle_branch_distances(cycle: &LimitCycle) -> Vec<f64> {
    let m = middle_branch();
    cycle.samples.iter().map(|p| m.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min)).collect()
}

/// Longest arc of the loop staying within `band` of the middle branch.
pub fn longest_middle_arc(cycle: &LimitCycle, band: f64) -> f64 {
    let d = middle_branch_distances(cycle);
    let (mut best, mut run) = (0.0f64, 0.0f64);
    for i in 1..cycle.samples.len() {
        if d[i] <= band && d[i - 1] <= band {
            run += cycle.samples[i].distance(cycle.samples[i - 1]);
            best = best.max(run);
        } else {
            run = 0.0;
        }
    }
    best
}

/// Slow time the loop spends within `band` of the middle branch.
pub fn time_near_middle_branch(cycle: &LimitCycle, band: f64) -> f64 {
    let d = middle_branch_distances(cycle);
    (1..cycle.samples.len())
        .filter(|&i| d[i] <= band && d[i - 1] <= band)
        .map(|i| (cycle.times[i] - cycle.times[i - 1]).abs())
        .sum()
}

/// Headless and headed canards track the middle branch for an arc of
/// length at least 0.5 within distance 0.05; headed ones also pass left of
/// the left fold. Relaxation cycles reach the left branch without such an
/// arc.
pub fn classify_canard(cycle: &LimitCycle) -> Result<CanardClass> {
    if cycle.samples.len() < 3 {
        return Err(Error::DegenerateLoop(format!("{} samples", cycle.samples.len())));
    }
    if exact_diameter(&cycle.samples) < SMALL_DIAMETER {
        return Ok(CanardClass::HopfSmall);
    }
    let tracks_middle = longest_middle_arc(cycle, MIDDLE_BAND) >= MIDDLE_ARC;
    let headed = cycle.samples.iter().any(|p| p.x < -FOLD_X);
    Ok(match (tracks_middle, headed) {
        (true, true) => CanardClass::Headed,
        (true, false) => CanardClass::Headless,
        (false, true) => CanardClass::Relaxation,
        (false, false) => CanardClass::HopfSmall,
    })
}

fn exact_diameter(p: &[PhasePoint]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d = d.max(p[i].distance(p[j]));
        }
    }
    d
}

/// One point of a canard scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanardRecord {
    pub c: f64,
    pub period: f64,
    pub length: f64,
    pub class: CanardClass,
}

/// Classified cycles at the given values of `c` (with `b = 0`), in the
/// given order. Values without a cycle are skipped.
pub fn canard_scan(eps: f64, cs: &[f64]) -> Result<Vec<CanardRecord>> {
    let out: Vec<Result<Option<CanardRecord>>> = cs
        .par_iter()
        .map(|&c| match cycle_at(c, eps) {
            Ok(lc) => Ok(Some(CanardRecord { c, period: lc.period, length: lc.length, class: classify_canard(&lc)? })),
            Err(Error::ConvergedToEquilibrium(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    out.into_iter().filter_map(|r| r.transpose()).collect()
}

/// `n` scan values across the explosion at `c_star`, clustered
/// logarithmically on both sides: from `c^H − 1e-4` down through `c_star`
/// to `c_star − 0.01`.
pub fn explosion_scan_points(c_star: f64, n: usize) -> Vec<f64> {
    let above = n / 2;
    let below = n - above;
    let top = (FOLD_X - 1e-4 - c_star).max(1e-12);
    let log_span = |k: usize, m: usize, hi: f64| {
        let (l0, l1) = (1e-12f64.ln(), hi.ln());
        (l0 + (l1 - l0) * k as f64 / (m.max(2) - 1) as f64).exp()
    };
    let mut cs: Vec<f64> = (0..above).map(|k| c_star + log_span(above - 1 - k, above, top)).collect();
    cs.extend((0..below).map(|k| c_star - log_span(k, below, 0.01)));
    cs
}
