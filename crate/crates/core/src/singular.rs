//! The singular limit `ε = 0`.
//!
//! At `ε = 0` the phase plane splits into horizontal fast fibres (`y` frozen)
//! and the critical manifold `C0 = { y = φ(x) }`, on which the reduced flow
//! is written as an ODE in `x` alone:
//!
//! ```text
//!   ẋ = ψ(x) = (b x³ + (1 − 4b) x − c) / (4 − 3x²)
//! ```
//!
//! The folds at `x = ±2/√3` split `C0` into two attracting outer branches
//! and a repelling middle branch. [`classify_singular_fate`] composes the
//! singular orbit of a start point by alternating fast fibres and slow arcs,
//! and [`relaxation_period`] evaluates the period of the relaxation cycle
//! `D → P+ → F → P− → D` by quadrature.

use serde::Serialize;

use crate::cubic::{phi, phi_prime, phi_roots, solve_cubic};
use crate::error::{Error, Result};
use crate::quad;
use crate::system::{eval_fast, PhasePoint, SystemParams};

/// Fold abscissa `2/√3`.
pub const FOLD_X: f64 = 1.154_700_538_379_251_5;
/// Fold ordinate `16/(3√3)`.
pub const FOLD_Y: f64 = 3.079_201_435_678_004;
/// Abscissa `4/√3` of the jump landing point `D` (and `−4/√3` of `F`).
pub const JUMP_X: f64 = 2.309_401_076_758_503;

/// Level at which a diverging slow arc is cut off.
pub const ESCAPE_Y: f64 = 100.0;

const ON_MANIFOLD_TOL: f64 = 1e-9;
const FOLD_ARRIVAL_TOL: f64 = 1e-8;
const REVISIT_TOL: f64 = 1e-9;
const MAX_JUMPS: usize = 10;
const SLOW_TRANSIT_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-9;

/// Pieces of the critical manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    LeftAttracting,
    MiddleRepelling,
    RightAttracting,
    FoldMinus,
    FoldPlus,
}

impl Branch {
    pub fn is_attracting(self) -> bool {
        matches!(self, Branch::LeftAttracting | Branch::RightAttracting)
    }
}

/// `P− = (−2/√3, −16/(3√3))` and `P+ = (2/√3, 16/(3√3))`.
pub fn fold_points() -> (PhasePoint, PhasePoint) {
    (PhasePoint::new(-FOLD_X, -FOLD_Y), PhasePoint::new(FOLD_X, FOLD_Y))
}

pub fn branch_of(x: f64) -> Branch {
    if x == FOLD_X {
        Branch::FoldPlus
    } else if x == -FOLD_X {
        Branch::FoldMinus
    } else if x < -FOLD_X {
        Branch::LeftAttracting
    } else if x > FOLD_X {
        Branch::RightAttracting
    } else {
        Branch::MiddleRepelling
    }
}

/// `g(x, φ(x)) = b x³ + (1 − 4b) x − c`: its roots are the equilibria.
pub fn equilibrium_polynomial(x: f64, params: &SystemParams) -> f64 {
    params.b * x * x * x + (1.0 - 4.0 * params.b) * x - params.c
}

/// Distinct abscissae of the equilibria (all of which lie on `C0`),
/// ascending. `|b| < 1e-14` is solved as the linear equation `x = c`.
pub fn equilibrium_abscissae(params: &SystemParams) -> Vec<f64> {
    if params.b.abs() < 1e-14 {
        return vec![params.c];
    }
    solve_cubic(params.b, 0.0, 1.0 - 4.0 * params.b, -params.c)
        .into_iter()
        .map(|r| r.x)
        .collect()
}

/// The reduced flow `ψ(x)`.
pub fn slow_flow(x: f64, params: &SystemParams) -> Result<f64> {
    let den = phi_prime(x);
    if den.abs() < 1e-12 {
        return Err(Error::FoldSingularity { x });
    }
    Ok(equilibrium_polynomial(x, params) / den)
}

/// `ψ_x` at an equilibrium of the reduced flow, `(1 − b(4 − 3x²)) / (4 − 3x²)`.
pub fn slow_flow_linearization(x_star: f64, params: &SystemParams) -> Result<f64> {
    let den = phi_prime(x_star);
    if den.abs() < 1e-12 {
        return Err(Error::FoldSingularity { x: x_star });
    }
    let residual = equilibrium_polynomial(x_star, params) / den;
    if residual.abs() > 1e-10 {
        return Err(Error::NotAnEquilibrium { x: x_star, residual });
    }
    Ok((1.0 - params.b * den) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    Fast,
    Slow,
}

/// One piece of a singular orbit. `duration` is in slow time and is zero
/// for fast fibres and infinite for an arc that ends at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: PhasePoint,
    pub end: PhasePoint,
    pub duration: f64,
}

impl Segment {
    /// `n ≥ 2` points along the segment: a horizontal line for fast fibres,
    /// the graph of `φ` for slow arcs.
    pub fn sample(&self, n: usize) -> Vec<PhasePoint> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                let x = self.start.x + s * (self.end.x - self.start.x);
                match self.kind {
                    SegmentKind::Fast => PhasePoint::new(x, self.start.y),
                    SegmentKind::Slow => PhasePoint::new(x, phi(x)),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminalFate {
    EquilibriumReached,
    DivergesPlusY,
    DivergesMinusY,
    PeriodicCycle,
    /// The landing point is itself a slow-unstable equilibrium, a case the
    /// geometric scenarios leave open.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularOrbit {
    pub segments: Vec<Segment>,
    pub fate: TerminalFate,
    /// For a periodic fate, the index of the first segment of the loop; the
    /// loop runs to the end of `segments`.
    pub cycle_start: Option<usize>,
}

impl SingularOrbit {
    /// The periodic loop, when there is one.
    pub fn cycle(&self) -> Option<&[Segment]> {
        self.cycle_start.map(|k| &self.segments[k..])
    }

    /// Slow time summed over one loop of the periodic cycle.
    pub fn cycle_period(&self) -> Option<f64> {
        self.cycle().map(|segs| segs.iter().map(|s| s.duration).sum())
    }
}

/// Composes the singular orbit starting at `start ∉ C0`.
///
/// The start moves horizontally onto an attracting branch, then follows the
/// sign of the reduced flow. Arcs end at the nearest equilibrium in the
/// direction of motion, at a fold (followed by a jump to the other branch),
/// or at `|y| = ESCAPE_Y`. Durations come from integrating `ẋ = ψ(x)`.
pub fn classify_singular_fate(start: PhasePoint, params: &SystemParams) -> Result<SingularOrbit> {
    if !start.is_finite() {
        return Err(Error::InvalidParameter("start point must be finite".into()));
    }
    if eval_fast(start).abs() <= ON_MANIFOLD_TOL {
        return Err(Error::OnManifold(start));
    }
    let equilibria = equilibrium_abscissae(params);
    if let Some(&x) = equilibria.iter().find(|x| (x.abs() - FOLD_X).abs() < 1e-9) {
        return Err(Error::FoldEquilibrium { x });
    }

    let mut segments = Vec::new();
    let landing = fast_landing(start);
    segments.push(Segment { kind: SegmentKind::Fast, start, end: landing, duration: 0.0 });

    let mut here = landing;
    let mut jumps = 0;
    loop {
        let branch = branch_of(here.x);
        let fold = match branch {
            // landing exactly on a fold: the jump follows immediately
            Branch::FoldMinus | Branch::FoldPlus => here,
            _ => match slow_arc(here, branch, &equilibria, params)? {
                ArcEnd::Fold(seg) => {
                    let end = seg.end;
                    segments.push(seg);
                    end
                }
                ArcEnd::Terminal(seg, fate) => {
                    segments.extend(seg);
                    return Ok(SingularOrbit { segments, fate, cycle_start: None });
                }
            },
        };

        if jumps == MAX_JUMPS {
            return Ok(SingularOrbit { segments, fate: TerminalFate::Degenerate, cycle_start: None });
        }
        jumps += 1;
        let target = PhasePoint::new(jump_target(fold), fold.y);
        segments.push(Segment { kind: SegmentKind::Fast, start: fold, end: target, duration: 0.0 });

        let revisit = segments.iter().position(|s| {
            s.kind == SegmentKind::Slow && s.start.distance(target) <= REVISIT_TOL
        });
        if let Some(k) = revisit {
            return Ok(SingularOrbit { segments, fate: TerminalFate::PeriodicCycle, cycle_start: Some(k) });
        }
        here = target;
    }
}

/// Endpoint of the horizontal fast fibre through `p`: the nearest root of
/// `φ(x) = p.y` in the direction of `f`.
fn fast_landing(p: PhasePoint) -> PhasePoint {
    let moving_right = eval_fast(p) > 0.0;
    let roots = phi_roots(p.y);
    let x = if moving_right {
        roots.iter().map(|r| r.x).find(|&x| x > p.x)
    } else {
        roots.iter().rev().map(|r| r.x).find(|&x| x < p.x)
    }
    .expect("a cubic fibre always meets C0 in the direction of motion");
    let x = if (x.abs() - FOLD_X).abs() < 1e-12 { FOLD_X.copysign(x) } else { x };
    PhasePoint::new(x, p.y)
}

/// The root of `φ(x) = φ(x_fold)` that is not the fold itself.
fn jump_target(fold: PhasePoint) -> f64 {
    phi_roots(fold.y)
        .into_iter()
        .map(|r| r.x)
        .max_by(|a, b| (a - fold.x).abs().total_cmp(&(b - fold.x).abs()))
        .expect("fold level has a second root")
}

enum ArcEnd {
    Fold(Segment),
    Terminal(Option<Segment>, TerminalFate),
}

fn slow_arc(here: PhasePoint, branch: Branch, equilibria: &[f64], params: &SystemParams) -> Result<ArcEnd> {
    // An equilibrium at the landing point ends the orbit immediately.
    if let Some(&xe) = equilibria.iter().find(|&&xe| (xe - here.x).abs() <= 1e-10 * here.x.abs().max(1.0)) {
        let fate = match slow_flow_linearization(xe, params) {
            Ok(l) if l < 0.0 => TerminalFate::EquilibriumReached,
            _ => TerminalFate::Degenerate,
        };
        return Ok(ArcEnd::Terminal(None, fate));
    }

    let direction = slow_flow(here.x, params)?.signum();
    let (fold_x, toward_fold) = match branch {
        Branch::LeftAttracting => (-FOLD_X, direction > 0.0),
        Branch::RightAttracting => (FOLD_X, direction < 0.0),
        _ => unreachable!("slow arcs start on attracting branches"),
    };

    // nearest equilibrium ahead, restricted to this branch
    let ahead = equilibria
        .iter()
        .copied()
        .filter(|&xe| branch_of(xe) == branch && (xe - here.x) * direction > 0.0)
        .min_by(|a, b| (a - here.x).abs().total_cmp(&(b - here.x).abs()));
    if let Some(xe) = ahead {
        let seg = Segment {
            kind: SegmentKind::Slow,
            start: here,
            end: PhasePoint::new(xe, phi(xe)),
            duration: f64::INFINITY,
        };
        return Ok(ArcEnd::Terminal(Some(seg), TerminalFate::EquilibriumReached));
    }

    if toward_fold {
        let (_, duration) = slow_transit(here.x, Stop::Fold(fold_x), params)?;
        let (p_minus, p_plus) = fold_points();
        let fold = if fold_x > 0.0 { p_plus } else { p_minus };
        Ok(ArcEnd::Fold(Segment { kind: SegmentKind::Slow, start: here, end: fold, duration }))
    } else {
        let (x_end, duration) = slow_transit(here.x, Stop::Escape { guard: fold_x }, params)?;
        let end = PhasePoint::new(x_end, phi(x_end));
        let fate = if end.y > 0.0 { TerminalFate::DivergesPlusY } else { TerminalFate::DivergesMinusY };
        let seg = Segment { kind: SegmentKind::Slow, start: here, end, duration };
        Ok(ArcEnd::Terminal(Some(seg), fate))
    }
}

#[derive(Clone, Copy)]
enum Stop {
    Fold(f64),
    Escape { guard: f64 },
}

// Dormand–Prince 5(4) tableau.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates `ẋ = ψ(x)` from `x0` until the stop condition, never letting a
/// stage cross the fold abscissa. Returns the final `x` and elapsed slow time.
fn slow_transit(x0: f64, stop: Stop, params: &SystemParams) -> Result<(f64, f64)> {
    let guard = match stop {
        Stop::Fold(f) => f,
        Stop::Escape { guard } => guard,
    };
    // the branch side of the guard: admissible iff side * (x - guard) > 0
    let side = (x0 - guard).signum();
    let admissible = |x: f64| side * (x - guard) > 1e-14;
    let rhs = |x: f64| equilibrium_polynomial(x, params) / phi_prime(x);

    let mut x = x0;
    let mut t = 0.0;
    let mut h = 1e-3;
    let mut k = [0.0; 7];
    for _ in 0..1_000_000 {
        match stop {
            Stop::Fold(f) if (x - f).abs() < FOLD_ARRIVAL_TOL => return Ok((f, t)),
            Stop::Escape { .. } if phi(x).abs() >= ESCAPE_Y => return Ok((x, t)),
            _ => {}
        }
        k[0] = rhs(x);
        let mut ok = true;
        for (i, row) in DP_A.iter().enumerate() {
            let xi = x + h * row.iter().zip(&k[..=i]).map(|(a, k)| a * k).sum::<f64>();
            if !admissible(xi) {
                ok = false;
                break;
            }
            k[i + 1] = rhs(xi);
        }
        if !ok {
            h *= 0.25;
            continue;
        }
        let x_new = x + h * DP_A[5].iter().zip(&k[..6]).map(|(a, k)| a * k).sum::<f64>();
        let err = (h * DP_E.iter().zip(&k).map(|(e, k)| e * k).sum::<f64>()).abs();
        let sc = SLOW_TRANSIT_TOL * (1.0 + x.abs().max(x_new.abs()));
        let ratio = err / sc;
        if ratio <= 1.0 {
            x = x_new;
            t += h;
        }
        let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-300 {
            break;
        }
    }
    Err(Error::StepSizeCollapse { t, h, last: PhasePoint::new(x, phi(x)) })
}

/// Integrand `(4 − 3x²) / (b x³ + (1 − 4b) x − c)` of the slow transit time.
pub fn relaxation_integrand(x: f64, params: &SystemParams) -> f64 {
    phi_prime(x) / equilibrium_polynomial(x, params)
}

/// Period of the singular relaxation cycle: slow time from `D` to `P+` on
/// the right branch plus from `F` to `P−` on the left branch, each by
/// adaptive quadrature of `dτ = dx / ψ(x)`. Only `b` and `c` are used.
/// For `c = 0` the two transits are equal.
pub fn relaxation_period(params: &SystemParams) -> Result<f64> {
    for x in equilibrium_abscissae(params) {
        if (FOLD_X..=JUMP_X).contains(&x.abs()) {
            return Err(Error::EquilibriumInPath { x });
        }
    }
    let (right, _) = quad::integrate(|x| relaxation_integrand(x, params), JUMP_X, FOLD_X, 0.5 * QUAD_TOL);
    let (left, _) = quad::integrate(|x| relaxation_integrand(x, params), -JUMP_X, -FOLD_X, 0.5 * QUAD_TOL);
    if !(right > 0.0 && left > 0.0) {
        return Err(Error::NoRelaxationCycle);
    }
    Ok(right + left)
}

/// Slow time of the right-branch transit `D → P+` alone.
pub fn right_branch_transit(params: &SystemParams) -> f64 {
    quad::integrate(|x| relaxation_integrand(x, params), JUMP_X, FOLD_X, 0.5 * QUAD_TOL).0
}
