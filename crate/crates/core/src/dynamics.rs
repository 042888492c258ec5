//! Stiff simulation of the regular system and limit-cycle detection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Mat2, Stepper, Step, Vec2};
use crate::singular::equilibrium_abscissae;
use crate::cubic::phi;
use crate::system::{PhasePoint, SystemParams, TimeScale};

/// Loose end of the admissible integration tolerances.
pub const MAX_TOL: f64 = 1e-3;
/// Tight end of the admissible integration tolerances.
pub const MIN_TOL: f64 = 1e-12;

/// Step counts and the tolerance a trajectory was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub tol: f64,
}

/// Samples of an integrated orbit at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scale: TimeScale,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectories hold at least the start")
    }
}

/// Time direction of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
}

/// One period of a limit cycle, starting and ending on the section.
///
/// `times[i]` is the slow time elapsed since the section crossing, in the
/// integration direction; for a backward search the loop is traversed
/// against the flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycle {
    pub samples: Vec<PhasePoint>,
    pub times: Vec<f64>,
    /// Slow-time period.
    pub period: f64,
    /// Polygonal arc length `𝒜`.
    pub length: f64,
    pub stability: Stability,
    /// Abscissa of the vertical Poincaré section.
    pub section_x: f64,
    /// Mismatch between the first and last sample.
    pub closure: f64,
}

impl LimitCycle {
    /// Largest distance between two samples.
    pub fn diameter(&self) -> f64 {
        diameter(&self.samples)
    }

    pub fn min_distance_to(&self, p: PhasePoint) -> f64 {
        self.samples.iter().map(|q| q.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)))
    }
}

fn diameter(points: &[PhasePoint]) -> f64 {
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        xl = xl.min(p.x);
        xh = xh.max(p.x);
        yl = yl.min(p.y);
        yh = yh.max(p.y);
    }
    // bounding-box diagonal: within √2 of the true diameter, and O(n)
    (xh - xl).hypot(yh - yl)
}

/// Settings for [`find_limit_cycle_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleOptions {
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Convergence threshold on successive section returns, in `y`.
    pub return_tol: f64,
    /// Time budget in estimated periods.
    pub budget_periods: f64,
    /// Dense-output samples over the returned period.
    pub samples_per_period: usize,
    /// Loops smaller than this count as an equilibrium.
    pub equilibrium_diameter: f64,
    /// Leaving the box `|x|, |y| ≤ escape` counts as no cycle.
    pub escape: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            return_tol: 1e-8,
            budget_periods: 50.0,
            samples_per_period: 2000,
            equilibrium_diameter: 1e-5,
            escape: 1e3,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} outside [{MIN_TOL}, {MAX_TOL}]")));
    }
    Ok(())
}

fn check_regular(params: &SystemParams) -> Result<()> {
    if !(params.eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {} but the regular system needs eps > 0", params.eps)));
    }
    Ok(())
}

/// Vector field and Jacobian in the chosen scale and direction.
fn field(params: SystemParams, scale: TimeScale, sign: f64) -> (impl Fn(Vec2) -> Vec2, impl Fn(Vec2) -> Mat2) {
    let SystemParams { b, c, eps } = params;
    let (sx, sy) = match scale {
        TimeScale::Fast => (sign, sign * eps),
        TimeScale::Slow => (sign / eps, sign),
    };
    let f = move |u: Vec2| [sx * (-u[1] + 4.0 * u[0] - u[0] * u[0] * u[0]), sy * (u[0] - b * u[1] - c)];
    let j = move |u: Vec2| [[sx * (4.0 - 3.0 * u[0] * u[0]), -sx], [sy, -sy * b]];
    (f, j)
}

fn pt(u: Vec2) -> PhasePoint {
    PhasePoint::new(u[0], u[1])
}

/// Integrates from `start` to `t_end` with output every `t_end / 1000`.
pub fn integrate(start: PhasePoint, params: &SystemParams, t_end: f64, scale: TimeScale, tol: f64) -> Result<Trajectory> {
    integrate_sampled(start, params, t_end, scale, tol, t_end / 1000.0)
}

/// Integrates from `start` to `t_end` with dense output every `spacing`
/// (and at `t_end`).
pub fn integrate_sampled(
    start: PhasePoint,
    params: &SystemParams,
    t_end: f64,
    scale: TimeScale,
    tol: f64,
    spacing: f64,
) -> Result<Trajectory> {
    check_regular(params)?;
    check_tol(tol)?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} must be positive")));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("output spacing {spacing} must be positive")));
    }
    if !start.is_finite() {
        return Err(Error::InvalidParameter(format!("start {start:?} is not finite")));
    }
    let (f, j) = field(*params, scale, 1.0);
    let mut s = Stepper::new(f, j, 0.0, [start.x, start.y], tol, None);
    let mut times = vec![0.0];
    let mut points = vec![start];
    let mut k = 1usize;
    while s.t < t_end {
        let step = s.advance(t_end)?;
        loop {
            let t = k as f64 * spacing;
            if t > step.t1 || t >= t_end {
                break;
            }
            times.push(t);
            points.push(pt(step.eval(t)));
            k += 1;
        }
    }
    times.push(t_end);
    points.push(s.point());
    Ok(Trajectory { scale, times, points, stats: IntegrationStats { steps: s.steps, rejected: s.rejected, tol } })
}

/// Polygonal length of a closed loop, closing segment included.
pub fn cycle_length(points: &[PhasePoint]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateLoop(format!("{} points", points.len())));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegenerateLoop("non-finite sample".into()));
    }
    let open: f64 = points.windows(2).map(|w| w[0].distance(w[1])).sum();
    Ok(open + points[points.len() - 1].distance(points[0]))
}

enum Pass {
    Returned { y: f64, time: f64, diameter: f64, samples: Vec<(f64, PhasePoint)> },
    Escaped,
    OutOfTime { last: PhasePoint },
}

struct Section {
    x: f64,
    /// +1 for crossings with increasing x, −1 for decreasing.
    dir: f64,
}

/// Slow-time flow in one direction, with section-return machinery.
struct Flow {
    params: SystemParams,
    sign: f64,
    opts: CycleOptions,
    h: Option<f64>,
}

impl Flow {
    /// Integrates from `u0` until the orbit crosses `x = sec.x` in the
    /// direction `sec.dir` (or either direction while `sec.dir == 0`,
    /// returning the direction found). Samples are recorded every
    /// `spacing` when given.
    fn pass(&mut self, u0: Vec2, sec: &Section, budget: f64, spacing: Option<f64>) -> Result<(Pass, f64)> {
        let (f, j) = field(self.params, TimeScale::Slow, self.sign);
        let mut s = Stepper::new(f, j, 0.0, u0, self.opts.tol, self.h);
        let mut samples = vec![(0.0, pt(u0))];
        let mut next = 1usize;
        let (mut xl, mut xh, mut yl, mut yh) = (u0[0], u0[0], u0[1], u0[1]);
        // the start itself lies on the section; ignore it until we leave
        let mut prev_g = 0.0f64;
        loop {
            let step = match s.advance(budget) {
                Ok(st) => st,
                Err(Error::NonFinite { .. }) => return Ok((Pass::Escaped, 0.0)),
                Err(e) => return Err(e),
            };
            let g1 = step.u1[0] - sec.x;
            let crossed = prev_g != 0.0 && prev_g.signum() != g1.signum() && g1 != prev_g;
            let dir = if g1 > prev_g { 1.0 } else { -1.0 };
            if crossed && (sec.dir == 0.0 || dir == sec.dir) {
                let (t, u) = self.locate(&s, &step, sec.x);
                if let Some(dt) = spacing {
                    push_samples(&mut samples, &mut next, &step, dt, t);
                }
                samples.push((t, pt(u)));
                xl = xl.min(u[0]);
                xh = xh.max(u[0]);
                yl = yl.min(u[1]);
                yh = yh.max(u[1]);
                self.h = Some(s.step_size());
                let diameter = (xh - xl).hypot(yh - yl);
                return Ok((Pass::Returned { y: u[1], time: t, diameter, samples }, dir));
            }
            if let Some(dt) = spacing {
                push_samples(&mut samples, &mut next, &step, dt, step.t1);
            }
            xl = xl.min(step.u1[0]);
            xh = xh.max(step.u1[0]);
            yl = yl.min(step.u1[1]);
            yh = yh.max(step.u1[1]);
            if step.u1[0].abs().max(step.u1[1].abs()) > self.opts.escape {
                return Ok((Pass::Escaped, 0.0));
            }
            if g1 != 0.0 {
                prev_g = g1;
            }
            if s.t >= budget {
                return Ok((Pass::OutOfTime { last: s.point() }, 0.0));
            }
        }
    }

    /// Crossing time and state inside `step`: secant on the interpolant,
    /// then an exact step and a first-order correction onto the section.
    fn locate<F, J>(&self, s: &Stepper<F, J>, step: &Step, xs: f64) -> (f64, Vec2)
    where
        F: Fn(Vec2) -> Vec2,
        J: Fn(Vec2) -> Mat2,
    {
        let g = |t: f64| step.eval(t)[0] - xs;
        let (mut a, mut b) = (step.t0, step.t1);
        let (mut ga, mut gb) = (step.u0[0] - xs, step.u1[0] - xs);
        let mut t = b;
        for _ in 0..60 {
            // Illinois-free regula falsi guarded by bisection
            let mut m = b - gb * (b - a) / (gb - ga);
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let gm = g(m);
            t = m;
            if gm == 0.0 || (b - a) < 1e-15 * (1.0 + b.abs()) {
                break;
            }
            if gm.signum() == ga.signum() {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
            if (b - a).abs() < 1e-14 * (1.0 + t.abs()) {
                break;
            }
        }
        let mut u = s.resolve(step, t);
        let fu = s.eval_f(u);
        if fu[0] != 0.0 {
            let dt = -(u[0] - xs) / fu[0];
            u = [xs, u[1] + fu[1] * dt];
            t += dt;
        }
        (t, u)
    }
}

fn push_samples(samples: &mut Vec<(f64, PhasePoint)>, next: &mut usize, step: &Step, dt: f64, upto: f64) {
    loop {
        let t = *next as f64 * dt;
        if t > upto || t > step.t1 {
            break;
        }
        if t > samples.last().map_or(f64::NEG_INFINITY, |s| s.0) {
            samples.push((t, pt(step.eval(t))));
        }
        *next += 1;
    }
}

fn near_equilibrium(p: PhasePoint, params: &SystemParams, tol: f64) -> bool {
    equilibrium_abscissae(params).into_iter().any(|x| p.distance(PhasePoint::new(x, phi(x))) < tol)
}

/// [`find_limit_cycle_with`] using [`CycleOptions::default`].
pub fn find_limit_cycle(params: &SystemParams, seed: PhasePoint, direction: Direction) -> Result<LimitCycle> {
    find_limit_cycle_with(params, seed, direction, &CycleOptions::default())
}

/// Searches for the limit cycle attracting `seed` in the given time
/// direction, by iterating the return map of the vertical section through
/// the seed with Aitken acceleration.
pub fn find_limit_cycle_with(
    params: &SystemParams,
    seed: PhasePoint,
    direction: Direction,
    opts: &CycleOptions,
) -> Result<LimitCycle> {
    check_regular(params)?;
    check_tol(opts.tol)?;
    if !seed.is_finite() {
        return Err(Error::InvalidParameter(format!("seed {seed:?} is not finite")));
    }
    let mut flow = Flow { params: *params, sign: direction.sign(), opts: *opts, h: None };
    let mut estimate = (12.0 - 8.0 * 2f64.ln()).max(2.0 * std::f64::consts::PI * params.eps.sqrt());
    let mut elapsed = 0.0;
    let mut sec = Section { x: seed.x, dir: 0.0 };

    let fail = |last: PhasePoint| {
        if near_equilibrium(last, params, 1e-4) {
            Error::ConvergedToEquilibrium(last)
        } else {
            Error::NoCycle
        }
    };

    // transient: the first crossing fixes the orientation
    let (first, dir) = flow.pass([seed.x, seed.y], &sec, opts.budget_periods * estimate, None)?;
    let mut y = match first {
        Pass::Returned { y, time, .. } => {
            elapsed += time;
            y
        }
        Pass::Escaped => return Err(Error::NoCycle),
        Pass::OutOfTime { last } => return Err(fail(last)),
    };
    sec.dir = dir;

    let mut history: Vec<f64> = vec![y];
    loop {
        let budget = opts.budget_periods * estimate - elapsed;
        if budget <= 0.0 {
            return Err(fail(PhasePoint::new(sec.x, y)));
        }
        let (p, _) = flow.pass([sec.x, y], &sec, budget, None)?;
        let (y1, time, diam) = match p {
            Pass::Returned { y, time, diameter, .. } => (y, time, diameter),
            Pass::Escaped => return Err(Error::NoCycle),
            Pass::OutOfTime { last } => return Err(fail(last)),
        };
        elapsed += time;
        estimate = time;
        if diam < opts.equilibrium_diameter {
            return Err(Error::ConvergedToEquilibrium(PhasePoint::new(sec.x, y1)));
        }
        if (y1 - y).abs() < opts.return_tol {
            y = y1;
            break;
        }
        history.push(y1);
        y = y1;
        if history.len() >= 3 {
            let n = history.len();
            let (a, b, c) = (history[n - 3], history[n - 2], history[n - 1]);
            let (d1, d2) = (b - a, c - b);
            let q = d2 / d1;
            if q.is_finite() && q.abs() > 0.2 && q.abs() < 0.999 && d2 != d1 {
                let cand = c - d2 * d2 / (d2 - d1);
                if let Some(accepted) = try_candidate(&mut flow, &sec, cand, d2.abs(), opts, &mut elapsed, estimate)? {
                    history.clear();
                    history.push(accepted.0);
                    history.push(accepted.1);
                    y = accepted.1;
                    if (accepted.1 - accepted.0).abs() < opts.return_tol {
                        break;
                    }
                    continue;
                }
            }
        }
    }

    // final period with dense samples
    let spacing = estimate / opts.samples_per_period as f64;
    let budget = (opts.budget_periods * estimate).max(2.0 * estimate);
    let (p, _) = flow.pass([sec.x, y], &sec, budget, Some(spacing))?;
    let (samples, period, y_end) = match p {
        Pass::Returned { samples, time, y, .. } => (samples, time, y),
        Pass::Escaped => return Err(Error::NoCycle),
        Pass::OutOfTime { last } => return Err(fail(last)),
    };
    let (times, samples): (Vec<f64>, Vec<PhasePoint>) = samples.into_iter().unzip();
    if diameter(&samples) < opts.equilibrium_diameter {
        return Err(Error::ConvergedToEquilibrium(samples[0]));
    }
    let length = cycle_length(&samples)?;
    let stability = match direction {
        Direction::Forward => Stability::Stable,
        Direction::Backward => Stability::Unstable,
    };
    Ok(LimitCycle { samples, times, period, length, stability, section_x: sec.x, closure: (y_end - y).abs() })
}

/// Runs the return map from an Aitken candidate; keeps it only if it
/// improves on the last plain difference.
fn try_candidate(
    flow: &mut Flow,
    sec: &Section,
    cand: f64,
    last_diff: f64,
    opts: &CycleOptions,
    elapsed: &mut f64,
    estimate: f64,
) -> Result<Option<(f64, f64)>> {
    if !cand.is_finite() {
        return Ok(None);
    }
    let budget = (opts.budget_periods * estimate - *elapsed).min(4.0 * estimate);
    if budget <= 0.0 {
        return Ok(None);
    }
    let (p, _) = flow.pass([sec.x, cand], sec, budget, None)?;
    match p {
        Pass::Returned { y, time, .. } => {
            *elapsed += time;
            if (y - cand).abs() < last_diff {
                Ok(Some((cand, y)))
            } else {
                Ok(None)
            }
        }
        _ => {
            *elapsed += budget;
            Ok(None)
        }
    }
}
