//! Equilibria, the Hopf, pitchfork and homoclinic bifurcations, and
//! one-parameter sweeps.
//!
//! Case (i) fixes `b = 0` and varies `c`; case (ii) fixes `c = 0` and
//! varies `b`. Direction labels (`HopfSub`, `HopfSuper`) follow the
//! orientation convention of the normal-form coefficient `A` and say
//! nothing about the stability of the cycles that are born.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::canard::{normal_form_case_i, normal_form_case_ii};
use crate::cubic::phi;
use crate::dynamics::{find_limit_cycle_with, CycleOptions, Direction, LimitCycle, Stability};
use crate::error::{Error, Result};
use crate::ode::{Mat2, Stepper, Vec2};
use crate::singular::{equilibrium_abscissae, equilibrium_polynomial, FOLD_X};
use crate::system::{jacobian, PhasePoint, SystemParams, TimeScale};

/// Real parts below this are treated as zero.
pub const HYPERBOLICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    NonHyperbolic,
}

impl EquilibriumKind {
    pub fn is_stable(self) -> bool {
        matches!(self, EquilibriumKind::StableNode | EquilibriumKind::StableFocus)
    }

    pub fn is_repelling(self) -> bool {
        matches!(self, EquilibriumKind::UnstableNode | EquilibriumKind::UnstableFocus)
    }
}

/// An equilibrium with the eigenvalues of the fast-time Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub point: PhasePoint,
    pub eigenvalues: (Complex64, Complex64),
    pub kind: EquilibriumKind,
}

/// Classifies an eigenvalue pair.
pub fn classify_eigenvalues(l: (Complex64, Complex64)) -> EquilibriumKind {
    let (a, b) = l;
    if a.re.abs() < HYPERBOLICITY_TOL || b.re.abs() < HYPERBOLICITY_TOL {
        return EquilibriumKind::NonHyperbolic;
    }
    let complex = a.im != 0.0 || b.im != 0.0;
    match (complex, a.re < 0.0, b.re < 0.0) {
        (true, true, _) => EquilibriumKind::StableFocus,
        (true, false, _) => EquilibriumKind::UnstableFocus,
        (false, true, true) => EquilibriumKind::StableNode,
        (false, false, false) => EquilibriumKind::UnstableNode,
        _ => EquilibriumKind::Saddle,
    }
}

fn equilibrium_at(x: f64, params: &SystemParams) -> Equilibrium {
    let point = PhasePoint::new(x, phi(x));
    let eigenvalues = jacobian(point, params, TimeScale::Fast).eigenvalues();
    Equilibrium { point, eigenvalues, kind: classify_eigenvalues(eigenvalues) }
}

/// All equilibria, ascending in `x`.
pub fn equilibria(params: &SystemParams) -> Vec<Equilibrium> {
    equilibrium_abscissae(params).into_iter().map(|x| equilibrium_at(x, params)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BifurcationKind {
    HopfSub,
    HopfSuper,
    Pitchfork,
    Homoclinic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parameter {
    B,
    C,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::B => "b",
            Parameter::C => "c",
        }
    }

    pub fn set(self, p: SystemParams, v: f64) -> SystemParams {
        match self {
            Parameter::B => p.with_b(v),
            Parameter::C => p.with_c(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub parameter: Parameter,
    pub value: f64,
    /// `None` where the location does not depend on `ε`.
    pub eps: Option<f64>,
    pub equilibrium: PhasePoint,
}

fn require_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

// The normal-form parameter of case (i) is c̄ = c^H − c, opposite to c;
// that of case (ii) is b − 3/8, aligned with b.
fn hopf_direction(a: f64, orientation: f64) -> BifurcationKind {
    if a * orientation > 0.0 {
        BifurcationKind::HopfSub
    } else {
        BifurcationKind::HopfSuper
    }
}

/// The Hopf points `c = ±2/√3` of case (i).
pub fn hopf_in_c(eps: f64) -> Result<(BifurcationPoint, BifurcationPoint)> {
    require_eps(eps)?;
    let kind = hopf_direction(normal_form_case_i().a, -1.0);
    let at = |c: f64| BifurcationPoint {
        kind,
        parameter: Parameter::C,
        value: c,
        eps: Some(eps),
        equilibrium: PhasePoint::new(c, phi(c)),
    };
    Ok((at(-FOLD_X), at(FOLD_X)))
}

/// The pitchfork at `b = 1/4` in case (ii), where `E±` split off the origin.
pub fn pitchfork_in_b() -> BifurcationPoint {
    BifurcationPoint {
        kind: BifurcationKind::Pitchfork,
        parameter: Parameter::B,
        value: 0.25,
        eps: None,
        equilibrium: PhasePoint::new(0.0, 0.0),
    }
}

/// `E+ = (√(4 − 1/b), x/b)` for `c = 0`, when it exists.
pub fn e_plus(b: f64) -> Option<PhasePoint> {
    if b == 0.0 {
        return None;
    }
    let s = 4.0 - 1.0 / b;
    if s < 0.0 {
        return None;
    }
    let x = s.sqrt();
    Some(PhasePoint::new(x, x / b))
}

/// `b_ε^H = (√(16 + 3ε) − 4)/ε`, where `E±` change stability.
pub fn hopf_b_value(eps: f64) -> f64 {
    // rationalized so that small ε does not cancel
    3.0 / (4.0 + (16.0 + 3.0 * eps).sqrt())
}

/// The Hopf point of `E+` in case (ii).
pub fn hopf_in_b(eps: f64) -> Result<BifurcationPoint> {
    require_eps(eps)?;
    let b = hopf_b_value(eps);
    let e = e_plus(b).expect("b^H lies above 1/4");
    Ok(BifurcationPoint {
        kind: hopf_direction(normal_form_case_ii().a, 1.0),
        parameter: Parameter::B,
        value: b,
        eps: Some(eps),
        equilibrium: e,
    })
}

/// `Tr J(E+)` at `(b, c = 0, ε)`.
pub fn e_plus_trace(b: f64, eps: f64) -> Option<f64> {
    let e = e_plus(b)?;
    Some(jacobian(e, &SystemParams { b, c: 0.0, eps }, TimeScale::Fast).trace())
}

/// Distance below which a cycle counts as captured by the saddle.
pub const CAPTURE_DISTANCE: f64 = 1e-2;
/// Width of the search bracket above `b^H`.
pub const HOMOCLINIC_WINDOW: f64 = 0.02;
const HOMOCLINIC_BRACKET: f64 = 1e-6;

/// The homoclinic bifurcation together with an approximation of the
/// homoclinic loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Homoclinic {
    pub point: BifurcationPoint,
    /// Final bracket of the cycle-existence bisection.
    pub bracket: (f64, f64),
    /// Largest unstable cycle found, at the lower bracket end.
    pub last_cycle: Option<LimitCycle>,
    /// The loop: the unstable manifold of the saddle up to the matching
    /// section, followed by the stable manifold back into the saddle.
    pub orbit: Vec<PhasePoint>,
    /// `y` mismatch of the two manifold pieces on the matching section.
    pub gap: f64,
}

impl Homoclinic {
    pub fn saddle_distance(&self) -> f64 {
        self.orbit.iter().map(|p| p.distance(PhasePoint::new(0.0, 0.0))).fold(f64::INFINITY, f64::min)
    }

    pub fn min_distance_to(&self, q: PhasePoint) -> f64 {
        self.orbit.iter().map(|p| p.distance(q)).fold(f64::INFINITY, f64::min)
    }
}

fn homoclinic_cycle_opts() -> CycleOptions {
    CycleOptions { tol: 1e-11, budget_periods: 200.0, ..CycleOptions::default() }
}

/// `Some(cycle)` when the unstable cycle around `E+` exists and keeps
/// clear of the saddle; `None` once it is destroyed or captured.
fn uncaptured_cycle(b: f64, eps: f64, seed: Option<PhasePoint>) -> Result<Option<LimitCycle>> {
    let params = SystemParams { b, c: 0.0, eps };
    let e = e_plus(b).ok_or_else(|| Error::InvalidParameter(format!("E+ does not exist at b = {b}")))?;
    let seed = seed.unwrap_or(PhasePoint::new(e.x, e.y + 0.01));
    match find_limit_cycle_with(&params, seed, Direction::Backward, &homoclinic_cycle_opts()) {
        Ok(lc) if lc.min_distance_to(PhasePoint::new(0.0, 0.0)) >= CAPTURE_DISTANCE => Ok(Some(lc)),
        Ok(_) => Ok(None),
        Err(Error::NoCycle | Error::ConvergedToEquilibrium(_) | Error::StepSizeCollapse { .. } | Error::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Locates the homoclinic bifurcation of case (ii) by bisection on `b`
/// over `(b^H, b^H + 0.02)`: below it the unstable cycle around `E+`
/// exists and stays away from the saddle, above it the cycle is gone or
/// captured. The location is then polished by matching the saddle's
/// unstable and stable manifolds on a vertical section.
pub fn homoclinic_in_b(eps: f64) -> Result<Homoclinic> {
    require_eps(eps)?;
    let b_h = hopf_b_value(eps);
    let top = b_h + HOMOCLINIC_WINDOW;
    if uncaptured_cycle(top, eps, None)?.is_some() {
        return Err(Error::BracketFailure { lo: b_h, hi: top });
    }
    // the cycle is born at b^H itself; step in until it is resolvable
    let mut found = None;
    for off in [1e-3, 3e-4, 1e-4] {
        let b = b_h + off;
        if let Some(lc) = uncaptured_cycle(b, eps, None)? {
            found = Some((b, lc));
            break;
        }
    }
    let (mut lo, mut cycle) = found.ok_or(Error::BracketFailure { lo: b_h, hi: top })?;
    let mut hi = top;
    while hi - lo > HOMOCLINIC_BRACKET {
        let mid = 0.5 * (lo + hi);
        match uncaptured_cycle(mid, eps, Some(cycle.samples[0]))? {
            Some(lc) => {
                lo = mid;
                cycle = lc;
            }
            None => hi = mid,
        }
    }
    let coarse = 0.5 * (lo + hi);
    let (value, orbit, gap) = match polish_homoclinic(eps, lo, hi)? {
        Some(m) => m,
        None => {
            let m = manifold_match(coarse, eps)?;
            (coarse, m.orbit, m.split.abs())
        }
    };
    Ok(Homoclinic {
        point: BifurcationPoint {
            kind: BifurcationKind::Homoclinic,
            parameter: Parameter::B,
            value,
            eps: Some(eps),
            equilibrium: PhasePoint::new(0.0, 0.0),
        },
        bracket: (lo, hi),
        last_cycle: Some(cycle),
        orbit,
        gap,
    })
}

struct ManifoldMatch {
    split: f64,
    orbit: Vec<PhasePoint>,
}

const MANIFOLD_OFFSET: f64 = 1e-7;

/// Shoots one branch (`x > 0` side) of a saddle manifold of the origin
/// to the section `x = xs`. Returns the crossing and the samples.
fn shoot_manifold(params: SystemParams, unstable: bool, xs: f64) -> Result<Option<(f64, Vec<PhasePoint>)>> {
    let j = jacobian(PhasePoint::new(0.0, 0.0), &params, TimeScale::Fast);
    let (lp, lm) = j.eigenvalues();
    let lambda = if unstable { lp.re } else { lm.re };
    // eigenvector of [[a11, a12], [a21, a22]] for λ: (−a12, a11 − λ)
    let mut v = [-j.a12, j.a11 - lambda];
    if v[0] < 0.0 {
        v = [-v[0], -v[1]];
    }
    let n = v[0].hypot(v[1]);
    let u0 = [MANIFOLD_OFFSET * v[0] / n, MANIFOLD_OFFSET * v[1] / n];
    let sign = if unstable { 1.0 } else { -1.0 };
    let SystemParams { b, c, eps } = params;
    let (sx, sy) = (sign / eps, sign);
    let f = move |u: Vec2| [sx * (-u[1] + 4.0 * u[0] - u[0] * u[0] * u[0]), sy * (u[0] - b * u[1] - c)];
    let jf = move |u: Vec2| -> Mat2 { [[sx * (4.0 - 3.0 * u[0] * u[0]), -sx], [sy, -sy * b]] };
    let mut s = Stepper::new(f, jf, 0.0, u0, 1e-12, None);
    let mut pts = vec![PhasePoint::new(u0[0], u0[1])];
    // the unstable branch leaves rightwards and meets the section on its
    // way back; the stable branch (backward) climbs the middle branch
    let want = if unstable { -1.0 } else { 1.0 };
    let budget = 2000.0;
    let mut armed = !unstable;
    while s.t < budget {
        let step = s.advance(budget)?;
        let (x0, x1) = (step.u0[0], step.u1[0]);
        if unstable && x1 > xs {
            armed = true;
        }
        if armed && (x0 - xs) * (x1 - xs) <= 0.0 && (x1 - x0) * want > 0.0 {
            let (mut a, mut bb) = (step.t0, step.t1);
            for _ in 0..80 {
                let m = 0.5 * (a + bb);
                if (step.eval(m)[0] - xs) * (x0 - xs) > 0.0 {
                    a = m;
                } else {
                    bb = m;
                }
            }
            let u = s.resolve(&step, 0.5 * (a + bb));
            let fu = s.eval_f(u);
            let y = u[1] - fu[1] * (u[0] - xs) / fu[0];
            pts.push(PhasePoint::new(xs, y));
            return Ok(Some((y, pts)));
        }
        pts.push(PhasePoint::new(step.u1[0], step.u1[1]));
        if step.u1[0].abs().max(step.u1[1].abs()) > 1e3 {
            return Ok(None);
        }
    }
    Ok(None)
}

fn manifold_match(b: f64, eps: f64) -> Result<ManifoldMatch> {
    let params = SystemParams { b, c: 0.0, eps };
    let xs = 0.75 * FOLD_X;
    let up = shoot_manifold(params, true, xs)?;
    let st = shoot_manifold(params, false, xs)?;
    match (up, st) {
        (Some((yu, mut pu)), Some((ys, ps))) => {
            pu.extend(ps.into_iter().rev());
            Ok(ManifoldMatch { split: yu - ys, orbit: pu })
        }
        // the unstable manifold is swallowed by E+ before reaching the
        // section: the far side of the connection
        (None, Some(_)) => Ok(ManifoldMatch { split: f64::NEG_INFINITY, orbit: Vec::new() }),
        _ => Err(Error::BracketFailure { lo: b, hi: b }),
    }
}

/// Bisects the manifold split over a small neighborhood of the coarse
/// bracket. `None` if the split does not change sign there.
fn polish_homoclinic(eps: f64, lo: f64, hi: f64) -> Result<Option<(f64, Vec<PhasePoint>, f64)>> {
    let w = 1e-4;
    let (mut a, mut b) = (lo - w, hi + w);
    let fa = manifold_match(a, eps)?.split;
    let fb = manifold_match(b, eps)?.split;
    if !(fa > 0.0 && fb < 0.0) {
        return Ok(None);
    }
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if manifold_match(m, eps)?.split > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let best = manifold_match(a, eps)?;
    if !best.split.is_finite() {
        return Ok(None);
    }
    Ok(Some((0.5 * (a + b), best.orbit, best.split.abs())))
}

/// Period, length and stability of a cycle found during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    pub period: f64,
    pub length: f64,
    pub stability: Stability,
}

impl From<&LimitCycle> for CycleRecord {
    fn from(lc: &LimitCycle) -> Self {
        Self { period: lc.period, length: lc.length, stability: lc.stability }
    }
}

/// One parameter value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramRow {
    pub value: f64,
    pub equilibria: Vec<Equilibrium>,
    pub stable_cycle: Option<CycleRecord>,
    pub unstable_cycle: Option<CycleRecord>,
    /// Failures other than "no cycle here", recorded instead of aborting.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub stable_cycles: bool,
    pub unstable_cycles: bool,
    /// Seed each row from the previous row's cycle.
    pub warm_start: bool,
    /// Contiguous chunks processed independently; fixed so results do not
    /// depend on the worker count.
    pub chunks: usize,
    pub cycle: CycleOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            stable_cycles: true,
            unstable_cycles: true,
            warm_start: true,
            chunks: 8,
            cycle: CycleOptions { tol: 1e-10, ..CycleOptions::default() },
        }
    }
}

/// Offset of a fresh seed from its equilibrium, in `y`.
pub const SEED_OFFSET: f64 = 0.2;

fn fresh_seed(e: &Equilibrium) -> PhasePoint {
    PhasePoint::new(e.point.x, e.point.y + SEED_OFFSET)
}

fn search(
    params: &SystemParams,
    seeds: impl Iterator<Item = PhasePoint>,
    dir: Direction,
    opts: &CycleOptions,
    error: &mut Option<String>,
) -> Option<LimitCycle> {
    for seed in seeds {
        match find_limit_cycle_with(params, seed, dir, opts) {
            Ok(lc) => return Some(lc),
            Err(Error::NoCycle | Error::ConvergedToEquilibrium(_)) => {}
            Err(e) => {
                error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    None
}

fn sweep_row(
    value: f64,
    params: SystemParams,
    opts: &SweepOptions,
    warm: &mut (Option<PhasePoint>, Option<PhasePoint>),
) -> DiagramRow {
    let eq = equilibria(&params);
    let mut error = None;
    let mut stable_cycle = None;
    let mut unstable_cycle = None;
    if params.eps > 0.0 {
        if opts.stable_cycles {
            let seeds = warm.0.into_iter().chain(eq.iter().filter(|e| e.kind.is_repelling()).map(fresh_seed));
            let lc = search(&params, seeds, Direction::Forward, &opts.cycle, &mut error);
            warm.0 = lc.as_ref().map(|l| l.samples[0]);
            stable_cycle = lc.as_ref().map(CycleRecord::from);
        }
        if opts.unstable_cycles {
            let near = eq.iter().filter(|e| e.kind.is_stable()).map(|e| PhasePoint::new(e.point.x, e.point.y + 0.01));
            let seeds = warm.1.into_iter().chain(near);
            let lc = search(&params, seeds, Direction::Backward, &opts.cycle, &mut error);
            warm.1 = lc.as_ref().map(|l| l.samples[0]);
            unstable_cycle = lc.as_ref().map(CycleRecord::from);
        }
        if !opts.warm_start {
            *warm = (None, None);
        }
    }
    DiagramRow { value, equilibria: eq, stable_cycle, unstable_cycle, error }
}

/// [`sweep_with`] using [`SweepOptions::default`].
pub fn sweep(param: Parameter, range: (f64, f64), steps: usize, params0: &SystemParams) -> Result<Vec<DiagramRow>> {
    sweep_with(param, range, steps, params0, &SweepOptions::default())
}

/// Equilibria and cycles at `steps` evenly spaced values of `param` from
/// `range.0` to `range.1` (either order), rows in sweep order.
pub fn sweep_with(
    param: Parameter,
    range: (f64, f64),
    steps: usize,
    params0: &SystemParams,
    opts: &SweepOptions,
) -> Result<Vec<DiagramRow>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("a sweep needs at least 2 steps, got {steps}")));
    }
    if !range.0.is_finite() || !range.1.is_finite() || range.0 == range.1 {
        return Err(Error::InvalidParameter(format!("empty sweep range {range:?}")));
    }
    let values: Vec<f64> = (0..steps)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (steps - 1) as f64)
        .collect();
    let chunk = values.len().div_ceil(opts.chunks.max(1));
    let rows: Vec<Vec<DiagramRow>> = values
        .par_chunks(chunk)
        .map(|vals| {
            let mut warm = (None, None);
            vals.iter()
                .map(|&v| sweep_row(v, param.set(*params0, v), opts, &mut warm))
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Residual of the equilibrium equation, for checks.
pub fn equilibrium_residual(e: &Equilibrium, params: &SystemParams) -> f64 {
    equilibrium_polynomial(e.point.x, params).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{eval_fast, eval_slow};
    use proptest::prelude::*;

    fn sp(b: f64, c: f64, eps: f64) -> SystemParams {
        SystemParams::new(b, c, eps).unwrap()
    }

    #[test]
    fn case_i_single_equilibrium() {
        let e = equilibria(&sp(0.0, 0.5, 0.5));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].point, PhasePoint::new(0.5, 1.875));
        assert!(e[0].kind.is_repelling());
    }

    #[test]
    fn case_ii_three_equilibria() {
        let e = equilibria(&sp(0.3, 0.0, 0.5));
        assert_eq!(e.len(), 3);
        let r = (2.0f64 / 3.0).sqrt();
        assert!((e[0].point.x + r).abs() < 1e-14);
        assert!(e[1].point.x.abs() < 1e-14);
        assert!((e[2].point.x - r).abs() < 1e-14);
        assert_eq!(e[1].kind, EquilibriumKind::Saddle);
        assert_eq!(equilibria(&sp(0.2, 0.0, 0.5)).len(), 1);
    }

    #[test]
    fn pitchfork_point_is_coalesced() {
        let e = equilibria(&sp(0.25, 0.0, 0.5));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].point.x, 0.0);
        assert_eq!(pitchfork_in_b().value, 0.25);
        let x = e_plus(0.25 + 1e-4).unwrap().x;
        assert!((x - 0.04).abs() < 1e-3, "{x}");
        assert!((e_plus(0.375).unwrap().x - FOLD_X).abs() < 1e-12);
        assert!(e_plus(0.1).is_none());
        assert!(e_plus(-0.5).is_some());
        assert_eq!(equilibria(&sp(0.25 - 1e-6, 0.0, 0.5)).len(), 1);
        assert_eq!(equilibria(&sp(0.25 + 1e-6, 0.0, 0.5)).len(), 3);
    }

    #[test]
    fn hopf_in_c_is_a_centre() {
        for eps in [0.1, 0.5] {
            let (m, p) = hopf_in_c(eps).unwrap();
            assert_eq!(p.kind, BifurcationKind::HopfSub);
            assert_eq!(m.value, -p.value);
            let e = equilibria(&sp(0.0, p.value, eps));
            let (l1, l2) = e[0].eigenvalues;
            assert!(l1.re.abs() < 1e-10 && l2.re.abs() < 1e-10);
            assert!((l1.im.abs() - eps.sqrt()).abs() < 1e-10);
            assert!((l1.im + l2.im).abs() < 1e-15);
        }
        assert!(hopf_in_c(0.0).is_err());
    }

    #[test]
    fn hopf_in_c_transversality() {
        // Re λ = (4 − 3c²)/2 near c^H, slope −3c^H
        let c = FOLD_X;
        let h = 1e-6;
        let re = |c: f64| equilibria(&sp(0.0, c, 0.5))[0].eigenvalues.0.re;
        let slope = (re(c + h) - re(c - h)) / (2.0 * h);
        assert!((slope + 3.0 * c).abs() < 1e-5, "{slope}");
    }

    #[test]
    fn hopf_in_b_values() {
        let p = hopf_in_b(0.5).unwrap();
        assert_eq!(p.kind, BifurcationKind::HopfSuper);
        assert!((p.value - 0.36660).abs() < 1e-4);
        assert!(e_plus_trace(p.value, 0.5).unwrap().abs() < 1e-12);
        let naive = |e: f64| (-4.0 + (16.0 + 3.0 * e).sqrt()) / e;
        assert!((hopf_b_value(1.0) - naive(1.0)).abs() < 1e-15);
        assert!((hopf_b_value(1.0) - 0.35890).abs() < 1e-5);
        assert!((hopf_b_value(1e-6) - 0.375).abs() < 1e-6);
        let d = (e_plus_trace(p.value + 1e-6, 0.5).unwrap() - e_plus_trace(p.value - 1e-6, 0.5).unwrap()) / 2e-6;
        assert!(d < 0.0);
    }

    #[test]
    fn equilibrium_kinds() {
        let c = |re1: f64, im: f64, re2: f64| classify_eigenvalues((Complex64::new(re1, im), Complex64::new(re2, -im)));
        assert_eq!(c(-1.0, 1.0, -1.0), EquilibriumKind::StableFocus);
        assert_eq!(c(1.0, 1.0, 1.0), EquilibriumKind::UnstableFocus);
        assert_eq!(c(-1.0, 0.0, -2.0), EquilibriumKind::StableNode);
        assert_eq!(c(1.0, 0.0, 2.0), EquilibriumKind::UnstableNode);
        assert_eq!(c(1.0, 0.0, -2.0), EquilibriumKind::Saddle);
        assert_eq!(c(1e-10, 1.0, 1e-10), EquilibriumKind::NonHyperbolic);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let p = sp(0.0, 0.0, 0.5);
        assert!(sweep(Parameter::B, (0.2, 0.3), 1, &p).is_err());
        assert!(sweep(Parameter::B, (0.2, 0.2), 5, &p).is_err());
    }

    #[test]
    fn sweep_over_pitchfork_counts_equilibria() {
        let opts = SweepOptions { stable_cycles: false, unstable_cycles: false, ..SweepOptions::default() };
        let rows = sweep_with(Parameter::B, (0.24, 0.26), 3, &sp(0.0, 0.0, 0.5), &opts).unwrap();
        let counts: Vec<usize> = rows.iter().map(|r| r.equilibria.len()).collect();
        assert_eq!(counts, [1, 1, 3]);
        assert_eq!(rows[1].value, 0.25);
    }

    #[test]
    fn reversed_sweep_gives_reversed_rows() {
        let opts = SweepOptions { warm_start: false, unstable_cycles: false, ..SweepOptions::default() };
        let p = sp(0.0, 0.0, 0.5);
        let fwd = sweep_with(Parameter::C, (1.10, 1.16), 4, &p, &opts).unwrap();
        let rev = sweep_with(Parameter::C, (1.16, 1.10), 4, &p, &opts).unwrap();
        for (a, b) in fwd.iter().zip(rev.iter().rev()) {
            assert!((a.value - b.value).abs() < 1e-15);
            assert_eq!(a.equilibria, b.equilibria);
            match (a.stable_cycle, b.stable_cycle) {
                (Some(x), Some(y)) => assert!((x.length - y.length).abs() < 1e-9 * x.length),
                (None, None) => {}
                other => panic!("{other:?}"),
            }
        }
        assert!(fwd[0].stable_cycle.is_some());
        assert!(fwd[3].stable_cycle.is_none());
    }

    proptest! {
        #[test]
        fn equilibria_satisfy_both_nullclines(b in -2.0..2.0f64, c in -3.0..3.0f64, eps in 0.01..1.0f64) {
            let p = sp(b, c, eps);
            for e in equilibria(&p) {
                let scale = 1.0 + e.point.x.abs().powi(3);
                prop_assert!(equilibrium_residual(&e, &p) <= 1e-10 * scale);
                prop_assert!(eval_fast(e.point).abs() <= 1e-10 * scale);
                prop_assert!(eval_slow(e.point, &p).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn e_plus_determinant_is_positive(b in 0.2501..2.0f64, eps in 0.001..1.0f64) {
            let e = e_plus(b).unwrap();
            let det = jacobian(e, &sp(b, 0.0, eps), TimeScale::Fast).det();
            prop_assert!(det > 0.0);
            prop_assert!((det - 2.0 * eps * (4.0 * b - 1.0)).abs() <= 1e-12 * (1.0 + det.abs()));
        }

        #[test]
        fn origin_is_a_saddle_beyond_the_pitchfork(b in 0.2501..2.0f64, eps in 0.001..1.0f64) {
            let e = equilibria(&sp(b, 0.0, eps));
            let o = e.iter().find(|e| e.point.x.abs() < 1e-12).unwrap();
            prop_assert_eq!(o.kind, EquilibriumKind::Saddle);
            prop_assert!(o.eigenvalues.0.im == 0.0 && o.eigenvalues.0.re * o.eigenvalues.1.re < 0.0);
        }
    }
}
