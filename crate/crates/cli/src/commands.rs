use std::fmt::Write as _;
use std::path::Path;

use ldgas_core::{
    apply_steepness, build_curve_with, check_steepness, cumulants as cumulant_report,
    detect_transitions, integrate_j, integrate_psi, invert_curve, joint_build_surface,
    joint_integrate, legendre_check, mixed_partial_asymmetry, solve_one_cut, tilt,
    tilted_mean_check, BoundaryFlag, ChainConfig, CurveOptions, DualityCurve, TiltedMeanCheck,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{num, Table};
use crate::CliError;

#[derive(Serialize)]
struct SupportSummary {
    s: f64,
    a: f64,
    b: f64,
    edge_type_a: String,
    edge_type_b: String,
    regime: String,
    euler_lagrange_residual: f64,
    normalization: f64,
    statistic_value: f64,
}

pub fn equilibrium(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let v = cfg.potential()?;
    let f = cfg.statistic()?;
    let s = cfg.equilibrium.s;
    let m = solve_one_cut(&tilt(&v, &f, s)?)?;
    let sup = *m.support();
    let n = cfg.equilibrium.points;
    let mut table = Table::new(&["lambda", "density"]);
    for k in 0..n {
        let x = sup.a + (sup.b - sup.a) * (k as f64 + 0.5) / n as f64;
        table.row(&[num(x), num(m.density(x))]);
    }
    table.write(out, "density.csv")?;
    let summary = SupportSummary {
        s,
        a: sup.a,
        b: sup.b,
        edge_type_a: sup.edge_type_a.to_string(),
        edge_type_b: sup.edge_type_b.to_string(),
        regime: m.regime().to_string(),
        euler_lagrange_residual: m.euler_lagrange_residual(256),
        normalization: m.normalization(),
        statistic_value: m.statistic_value(&f),
    };
    let json = serde_json::to_string_pretty(&summary).expect("plain struct serializes");
    std::fs::write(out.join("support.json"), json + "\n")?;
    Ok(())
}

fn flag_name(flag: BoundaryFlag) -> &'static str {
    match flag {
        BoundaryFlag::Interior => "interior",
        BoundaryFlag::DomainBoundary => "domain boundary",
        BoundaryFlag::NonSteepBoundary => "non-steep boundary",
    }
}

fn curve(cfg: &RunConfig, s_min: f64, s_max: f64, points: usize) -> Result<DualityCurve, CliError> {
    let options = CurveOptions {
        continue_past_confinement: cfg.ldf.continue_past_confinement,
        ..CurveOptions::default()
    };
    Ok(build_curve_with(
        &cfg.potential()?,
        &cfg.statistic()?,
        s_min,
        s_max,
        points,
        &options,
    )?)
}

pub fn ldf(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let c = &cfg.ldf;
    let mut curve = curve(cfg, c.s_min, c.s_max, c.points)?;
    let steepness = check_steepness(&curve);
    apply_steepness(&mut curve, &steepness);
    let curve = integrate_j(curve);
    let x0 = curve.x_values()[curve.origin()];
    let table = integrate_psi(invert_curve(&curve)?, x0)?;
    let residual = legendre_check(&curve, &table).unwrap_or(f64::NAN);

    let j = curve.j_values().expect("integrated");
    let mut dual = Table::new(&["s", "x_star", "J", "regime", "metastable"]);
    for i in 0..curve.len() {
        dual.row(&[
            num(curve.s_grid()[i]),
            num(curve.x_values()[i]),
            num(j[i]),
            curve.regimes()[i].to_string(),
            curve.metastable()[i].to_string(),
        ]);
    }
    dual.write(out, "duality.csv")?;

    let psi = table.psi_values().expect("integrated");
    let mut rate = Table::new(&["x", "s_star", "Psi"]);
    for i in 0..table.len() {
        rate.row(&[
            num(table.x_grid()[i]),
            num(table.s_star_values()[i]),
            num(psi[i]),
        ]);
    }
    rate.write(out, "rate.csv")?;

    let mut report = String::new();
    let s = curve.s_grid();
    let _ = writeln!(
        report,
        "s range: [{}, {}] ({} points)",
        num(s[0]),
        num(s[s.len() - 1]),
        s.len()
    );
    let _ = writeln!(report, "lower end: {}", flag_name(curve.lower_flag()));
    let _ = writeln!(report, "upper end: {}", flag_name(curve.upper_flag()));
    let _ = writeln!(report, "typical value x*(0): {}", num(x0));
    for (lo, hi) in curve.kinks() {
        let _ = writeln!(report, "regime switch in [{}, {}]", num(*lo), num(*hi));
    }
    if curve.metastable().iter().any(|&m| m) {
        let _ = writeln!(
            report,
            "metastable branch: tilted potential not confining on part of the range"
        );
    }
    for r in &steepness {
        let _ = writeln!(report, "steepness: {}", r.note);
    }
    let _ = writeln!(report, "legendre residual: {}", num(residual));
    let ok = residual <= c.legendre_tolerance;
    let _ = writeln!(
        report,
        "legendre check: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    std::fs::write(out.join("report.txt"), report)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Consistency(format!(
            "Legendre residual {residual:e} exceeds {:e}",
            c.legendre_tolerance
        )))
    }
}

pub fn cumulants(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let gas = cfg.gas()?;
    let report = cumulant_report(&cfg.potential()?, &cfg.statistic()?, cfg.cumulants.m_max)?;
    let finite = report.finite_n_values(&gas);
    let planar = report.planar_values(gas.beta());
    let mut table = Table::new(&["m", "derivative", "cumulant", "planar"]);
    for (i, &m) in report.orders().iter().enumerate() {
        table.row(&[
            m.to_string(),
            num(report.scaled_values()[i]),
            num(finite[i]),
            num(planar[i]),
        ]);
    }
    table.write(out, "cumulants.csv")?;
    Ok(())
}

pub fn transitions(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let t = &cfg.transitions;
    let curve = curve(
        cfg,
        t.s_min.unwrap_or(cfg.ldf.s_min),
        t.s_max.unwrap_or(cfg.ldf.s_max),
        t.points.unwrap_or(cfg.ldf.points),
    )?;
    let points = detect_transitions(&curve, t.max_order);
    let mut table = Table::new(&["s_cr", "bracket_lo", "bracket_hi", "order", "jump"]);
    for p in &points {
        table.row(&[
            num(p.s_cr),
            num(p.bracket.0),
            num(p.bracket.1),
            p.order.to_string(),
            num(p.jump),
        ]);
    }
    table.write(out, "transitions.csv")?;

    let mut text = String::new();
    for r in check_steepness(&curve) {
        let _ = writeln!(
            text,
            "boundary_s={} boundary_x={} steep={} note={}",
            num(r.boundary_s),
            num(r.boundary_slope),
            r.steep,
            r.note
        );
    }
    std::fs::write(out.join("steepness.txt"), text)?;
    Ok(())
}

pub fn verify_mc(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mc = &cfg.mc;
    let gas = cfg.gas()?;
    let v = cfg.potential()?;
    let f = cfg.statistic()?;
    let configs: Vec<ChainConfig> = mc
        .s_values
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut c = ChainConfig::new(gas, v.clone(), f.clone()).tilted(s);
            c.seed = cfg.seed.wrapping_add(k as u64);
            c.n_sweeps = mc.sweeps;
            c.burn_in = mc.burn_in;
            c.thinning = mc.thinning;
            c.step_scale = mc.step_scale;
            c.auto_tune = mc.auto_tune;
            c.histogram_bins = mc.bins;
            c
        })
        .collect();
    let checks: Vec<TiltedMeanCheck> = configs
        .par_iter()
        .map(tilted_mean_check)
        .collect::<Result<_, _>>()?;

    let speed = gas.speed();
    let mut summary = Table::new(&["s", "quantity", "estimate", "stderr"]);
    let mut hist = Table::new(&["s", "bin_lo", "bin_hi", "count"]);
    let mut verdict = String::new();
    let mut failures = Vec::new();
    for (&s, r) in mc.s_values.iter().zip(&checks) {
        let sm = &r.summary;
        let var_err = sm.var_f * (2.0 / sm.n_effective).sqrt();
        let rows: [(&str, f64, Option<f64>); 9] = [
            ("mean_F", sm.mean_f, Some(sm.stderr)),
            ("predicted_mean_F", r.predicted, None),
            ("z_score", r.z_score, None),
            ("var_F", sm.var_f, Some(var_err)),
            ("var_F_scaled", sm.var_f * speed, Some(var_err * speed)),
            ("autocorrelation_time", sm.autocorrelation_time, None),
            ("n_effective", sm.n_effective, None),
            ("acceptance_rate", sm.acceptance_rate, None),
            ("step_scale", sm.step, None),
        ];
        for (name, est, err) in rows {
            summary.row(&[
                num(s),
                name.into(),
                num(est),
                err.map(num).unwrap_or_default(),
            ]);
        }
        let h = &sm.histogram;
        for (k, &count) in h.counts.iter().enumerate() {
            hist.row(&[
                num(s),
                num(h.edges[k]),
                num(h.edges[k + 1]),
                count.to_string(),
            ]);
        }

        let z_ok = r.z_score.abs() < mc.z_threshold;
        let _ = writeln!(
            verdict,
            "s={} mean={} predicted={} stderr={} z={} {}",
            num(s),
            num(sm.mean_f),
            num(r.predicted),
            num(sm.stderr),
            num(r.z_score),
            if z_ok { "PASS" } else { "FAIL" }
        );
        if !z_ok {
            failures.push(format!("|z| = {:.3} at s = {s}", r.z_score.abs()));
        }
        if let (Some([lo, hi]), true) = (mc.variance_band, s == 0.0) {
            let scaled = sm.var_f * speed;
            let ok = (lo..=hi).contains(&scaled);
            let _ = writeln!(
                verdict,
                "s={} var_F*beta*N^2={} band=[{}, {}] {}",
                num(s),
                num(scaled),
                num(lo),
                num(hi),
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                failures.push(format!("var_F*beta*N^2 = {scaled:.4} outside [{lo}, {hi}]"));
            }
        }
        if sm.coincident_rejections > 0 {
            let _ = writeln!(
                verdict,
                "s={} coincident proposals rejected: {}",
                num(s),
                sm.coincident_rejections
            );
        }
    }
    let _ = writeln!(
        verdict,
        "verdict: {}",
        if failures.is_empty() { "PASS" } else { "FAIL" }
    );
    summary.write(out, "mc_summary.csv")?;
    hist.write(out, "mc_hist.csv")?;
    std::fs::write(out.join("verdict.txt"), verdict)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::MonteCarlo(failures.join("; ")))
    }
}

pub fn joint(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let j = &cfg.joint;
    let g1 = j.s1.grid();
    let g2 = j.s2.grid();
    let surface = joint_build_surface(
        &cfg.potential()?,
        &cfg.statistic()?,
        &cfg.statistic2()?,
        &g1,
        &g2,
    )?;
    let tables = joint_integrate(&surface)?;
    let asymmetry = mixed_partial_asymmetry(&surface, j.mixed_step)?;

    let mut table = Table::new(&[
        "s1",
        "s2",
        "x1_star",
        "x2_star",
        "J",
        "J_alternative",
        "Psi",
        "regime",
    ]);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for (i1, &s1) in g1.iter().enumerate() {
        for (i2, &s2) in g2.iter().enumerate() {
            table.row(&[
                num(s1),
                num(s2),
                opt(surface.x1(i1, i2)),
                opt(surface.x2(i1, i2)),
                opt(tables.j[i1][i2]),
                opt(tables.j_alternative[i1][i2]),
                opt(tables.psi[i1][i2]),
                surface
                    .regime(i1, i2)
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
            ]);
        }
    }
    table.write(out, "joint.csv")?;

    let ok = asymmetry <= j.symmetry_tolerance;
    let mut report = String::new();
    let _ = writeln!(report, "grid: {} x {}", g1.len(), g2.len());
    let _ = writeln!(report, "infeasible nodes: {}", surface.infeasible_nodes());
    let _ = writeln!(report, "path mismatch: {}", num(tables.path_mismatch));
    let _ = writeln!(report, "mixed partial asymmetry: {}", num(asymmetry));
    let _ = writeln!(
        report,
        "symmetry check: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    std::fs::write(out.join("joint_report.txt"), report)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Consistency(format!(
            "mixed partials differ by {asymmetry:e} (tolerance {:e})",
            j.symmetry_tolerance
        )))
    }
}
