use fhn_core::bifurcation::{
    homoclinic_in_b, hopf_in_b, hopf_in_c, pitchfork_in_b, sweep_with, BifurcationPoint, CycleRecord, DiagramRow, Equilibrium,
    Parameter, SweepOptions,
};
use fhn_core::canard::{
    asymptotic_loci, canard_scan, explosion_scan_points, locate_canard_explosion, locate_canard_in_b, normal_form_case_i,
    normal_form_case_ii, LOCI_EPS_MAX, MIDDLE_ARC, MIDDLE_BAND, SMALL_DIAMETER,
};
use fhn_core::cubic::phi;
use fhn_core::dynamics::integrate_sampled;
use fhn_core::singular::{branch_of, classify_singular_fate, relaxation_period, SegmentKind};
use fhn_core::slow_manifold::BranchGraph;
use fhn_core::{singular::Branch, PhasePoint, SystemParams, TimeScale};
use serde_json::json;

use crate::args::{BifurcateArgs, BranchArg, CanardArgs, Param, Scale, SimulateArgs, SingularArgs, SlowManifoldArgs};
use crate::output::{num, opt, Failure, Outcome, Run};

fn params(b: f64, c: f64, eps: f64) -> Result<SystemParams, Failure> {
    Ok(SystemParams::new(b, c, eps)?)
}

pub fn singular(run: &mut Run, a: &SingularArgs) -> Outcome {
    let p = params(a.b, a.c, 0.0)?;
    if a.manifold {
        let rows = (0..=2000).map(|i| {
            let x = -3.0 + 6.0 * i as f64 / 2000.0;
            vec![num(x), num(phi(x)), format!("{:?}", branch_of(x))]
        });
        run.csv("critical_manifold.csv", &["x", "y", "branch"], rows.collect::<Vec<_>>())?;
    }
    if a.period || a.period_only {
        let t = run.timed("relaxation_period", || relaxation_period(&p))?;
        println!("period: {}", num(t));
        run.result("period", t);
        run.csv("period.csv", &["b", "c", "period"], [vec![num(a.b), num(a.c), num(t)]])?;
    }
    if a.period_only {
        return Ok(());
    }
    let (Some(x0), Some(y0)) = (a.x0, a.y0) else {
        if a.manifold || a.period {
            return Ok(());
        }
        return Err(Failure::Config("singular needs --x0 and --y0, or --period-only".into()));
    };
    let orbit = run.timed("classify_singular_fate", || classify_singular_fate(PhasePoint::new(x0, y0), &p))?;
    let rows = orbit.segments.iter().map(|s| {
        let kind = match s.kind {
            SegmentKind::Fast => "fast",
            SegmentKind::Slow => "slow",
        };
        vec![kind.to_string(), num(s.start.x), num(s.start.y), num(s.end.x), num(s.end.y), num(s.duration)]
    });
    run.csv("segments.csv", &["segment_kind", "x0", "y0", "x1", "y1", "duration"], rows.collect::<Vec<_>>())?;
    println!("fate: {:?}", orbit.fate);
    run.result("fate", orbit.fate);
    run.result("cycle_start", orbit.cycle_start);
    if let Some(t) = orbit.cycle_period() {
        println!("cycle period: {}", num(t));
        run.result("cycle_period", t);
    }
    Ok(())
}

pub fn simulate(run: &mut Run, a: &SimulateArgs) -> Outcome {
    if a.eps == 0.0 {
        return Err(Failure::Config("eps = 0 is the singular limit; use `fhn singular`".into()));
    }
    let p = params(a.b, a.c, a.eps)?;
    let scale = match a.scale {
        Scale::Slow => TimeScale::Slow,
        Scale::Fast => TimeScale::Fast,
    };
    let spacing = a.spacing.unwrap_or(a.tmax / 1000.0);
    let tol = run.tol;
    let tr = run.timed("integrate", || integrate_sampled(PhasePoint::new(a.x0, a.y0), &p, a.tmax, scale, tol, spacing))?;
    let rows = tr.times.iter().zip(&tr.points).map(|(t, q)| vec![num(*t), num(q.x), num(q.y)]);
    run.csv("trajectory.csv", &["time", "x", "y"], rows.collect::<Vec<_>>())?;
    run.result("stats", tr.stats);
    run.result("last", tr.last());
    Ok(())
}

fn cycle_cols(c: &Option<CycleRecord>) -> [String; 3] {
    match c {
        Some(c) => [num(c.period), num(c.length), format!("{:?}", c.stability)],
        None => Default::default(),
    }
}

fn equilibrium_cols(e: Option<&Equilibrium>) -> [String; 7] {
    match e {
        Some(e) => [
            num(e.point.x),
            num(e.point.y),
            format!("{:?}", e.kind),
            num(e.eigenvalues.0.re),
            num(e.eigenvalues.0.im),
            num(e.eigenvalues.1.re),
            num(e.eigenvalues.1.im),
        ],
        None => Default::default(),
    }
}

const EQ_FIELDS: [&str; 7] = ["x", "y", "kind", "re1", "im1", "re2", "im2"];

fn diagram_header(param: &str) -> Vec<String> {
    let mut h = vec![param.to_string(), "n_equilibria".to_string()];
    for i in 1..=3 {
        h.extend(EQ_FIELDS.iter().map(|f| format!("eq{i}_{f}")));
    }
    h.extend(["cycle_T", "cycle_A", "cycle_stability", "unstable_T", "unstable_A", "unstable_stability", "error"].map(String::from));
    h
}

fn diagram_row(r: &DiagramRow) -> Vec<String> {
    let mut v = vec![num(r.value), r.equilibria.len().to_string()];
    for i in 0..3 {
        v.extend(equilibrium_cols(r.equilibria.get(i)));
    }
    v.extend(cycle_cols(&r.stable_cycle));
    v.extend(cycle_cols(&r.unstable_cycle));
    v.push(r.error.clone().unwrap_or_default());
    v
}

fn landmark(lm: &BifurcationPoint, range: (f64, f64)) -> serde_json::Value {
    let (lo, hi) = if range.0 < range.1 { range } else { (range.1, range.0) };
    json!({
        "kind": lm.kind,
        "parameter": lm.parameter.name(),
        "value": lm.value,
        "eps": lm.eps,
        "equilibrium": lm.equilibrium,
        "in_range": lm.value >= lo && lm.value <= hi,
    })
}

pub fn bifurcate(run: &mut Run, a: &BifurcateArgs) -> Outcome {
    let p = params(a.b, a.c, a.eps)?;
    let param = match a.param {
        Param::B => Parameter::B,
        Param::C => Parameter::C,
    };
    let mut opts = SweepOptions { unstable_cycles: !a.no_unstable, warm_start: !a.cold, ..SweepOptions::default() };
    opts.cycle.tol = run.tol;
    let rows = run.timed("sweep", || sweep_with(param, (a.from, a.to), a.steps, &p, &opts))?;
    let header = diagram_header(param.name());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.csv("diagram.csv", &header, rows.iter().map(diagram_row).collect::<Vec<_>>())?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        run.warn(format!("{failed} rows recorded errors"));
    }
    if !a.landmarks {
        return Ok(());
    }
    let range = (a.from, a.to);
    let mut marks = Vec::new();
    match param {
        Parameter::C => {
            if a.b != 0.0 {
                run.warn("Hopf points in c are located for b = 0 only");
            } else if a.eps > 0.0 {
                let (m, pl) = hopf_in_c(a.eps)?;
                marks.push(landmark(&pl, range));
                marks.push(landmark(&m, range));
            }
        }
        Parameter::B => {
            if a.c != 0.0 {
                run.warn("pitchfork, Hopf and homoclinic points in b are located for c = 0 only");
            } else {
                marks.push(landmark(&pitchfork_in_b(), range));
                if a.eps > 0.0 {
                    marks.push(landmark(&hopf_in_b(a.eps)?, range));
                    match run.timed("homoclinic_in_b", || homoclinic_in_b(a.eps)) {
                        Ok(h) => {
                            let mut m = landmark(&h.point, range);
                            m["bracket"] = json!(h.bracket);
                            m["saddle_distance"] = json!(h.saddle_distance());
                            m["gap"] = json!(h.gap);
                            marks.push(m);
                            let rows = h.orbit.iter().map(|q| vec![num(q.x), num(q.y)]);
                            run.csv("homoclinic_orbit.csv", &["x", "y"], rows.collect::<Vec<_>>())?;
                        }
                        Err(e) => run.warn(format!("homoclinic search failed: {e}")),
                    }
                }
            }
        }
    }
    run.json("landmarks.json", &marks)?;
    run.result("landmarks", &marks);
    Ok(())
}

pub fn canard(run: &mut Run, a: &CanardArgs) -> Outcome {
    if a.eps.is_nan() || a.eps <= 0.0 {
        return Err(Failure::Config(format!("eps = {} must be positive", a.eps)));
    }
    if a.points < 2 {
        return Err(Failure::Config("--points must be at least 2".into()));
    }
    let bracket = a.from.zip(a.to);
    let x = run.timed("locate_canard_explosion", || locate_canard_explosion(a.eps, bracket))?;
    println!("explosion: c = {}", num(x.c));
    let cs = explosion_scan_points(x.c, a.points);
    let recs = run.timed("canard_scan", || canard_scan(a.eps, &cs))?;
    let rows = recs.iter().map(|r| vec![num(r.c), num(r.period), num(r.length), format!("{:?}", r.class)]);
    run.csv("canard.csv", &["c", "T", "A", "class"], rows.collect::<Vec<_>>())?;

    let mut report = json!({
        "eps": a.eps,
        "explosion": x,
        "thresholds": { "middle_band": MIDDLE_BAND, "middle_arc": MIDDLE_ARC, "small_diameter": SMALL_DIAMETER },
    });
    if a.eps <= LOCI_EPS_MAX {
        let (ci, cii) = (normal_form_case_i(), normal_form_case_ii());
        let li = asymptotic_loci(&ci, a.eps)?;
        let lii = asymptotic_loci(&cii, a.eps)?;
        if li.sign_discrepancy {
            run.warn(format!(
                "case (i) canard locus: the normal-form formula gives {} while the stated value is {}; both reported",
                num(li.lambda_c),
                opt(li.stated_lambda_c)
            ));
        }
        let c_h = 2.0 / 3f64.sqrt();
        report["loci"] = json!({
            "case_i": { "coeffs": ci, "loci": li, "c_hopf": c_h, "c_canard": c_h - li.lambda_c },
            "case_ii": { "coeffs": cii, "loci": lii, "b_hopf": 0.375 + lii.lambda_h, "b_canard": 0.375 + lii.lambda_c },
        });
    } else {
        run.warn(format!("asymptotic loci are reported for eps <= {LOCI_EPS_MAX} only"));
    }
    if a.b_locus {
        match run.timed("locate_canard_in_b", || locate_canard_in_b(a.eps, None)) {
            Ok((lo, hi)) => {
                report["b_locus"] = json!({ "bracket": [lo, hi], "value": 0.5 * (lo + hi), "validated": false });
                run.warn("the b-locus has no reference value and is unvalidated");
            }
            Err(e) => run.warn(format!("b-locus search failed: {e}")),
        }
    }
    run.json("explosion.json", &report)?;
    run.result("explosion_c", x.c);
    Ok(())
}

pub fn slow_manifold(run: &mut Run, a: &SlowManifoldArgs) -> Outcome {
    let p = params(a.b, a.c, a.eps)?;
    let branch = match a.branch {
        BranchArg::Left => Branch::LeftAttracting,
        BranchArg::Right => Branch::RightAttracting,
    };
    if a.points < 2 {
        return Err(Failure::Config("--points must be at least 2".into()));
    }
    let (g, clipped) = BranchGraph::with_interval(branch, a.y_from.unwrap_or(f64::NEG_INFINITY), a.y_to.unwrap_or(f64::INFINITY))?;
    if clipped {
        let (lo, hi) = g.interval();
        run.warn(format!("y-range clipped to the validity interval ({}, {})", num(lo), num(hi)));
    }
    let (lo, hi) = g.interval();
    // the fold side is open: keep the grid strictly inside
    let (lo, hi) = match branch {
        Branch::LeftAttracting => (lo + (hi - lo) * 1e-9, hi),
        _ => (lo, hi - (hi - lo) * 1e-9),
    };
    let mut ys: Vec<f64> = (0..a.points).map(|i| lo + (hi - lo) * i as f64 / (a.points - 1) as f64).collect();
    ys.extend(&a.at);
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut rows = Vec::with_capacity(ys.len());
    for y in ys {
        let h0 = g.h0(y)?;
        let h1 = g.h1(y, &p)?;
        rows.push(vec![num(y), num(h0), num(h1), num(g.h_eps(y, &p)?)]);
    }
    run.csv("slow_manifold.csv", &["y", "h0", "h1", "h_eps"], rows)?;
    Ok(())
}
