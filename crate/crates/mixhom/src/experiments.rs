//! The named experiments. Each one turns a validated config into a report;
//! nothing here touches the filesystem.

use mixhom_core::calderon::{calderon_reconstruct, fit_almost_orthogonality, ReconstructOptions};
use mixhom_core::hormander::{hormander_constant, sample_pairs, HormanderOptions};
use mixhom_core::lp::{build_generator, build_generator_with, hardy_norm, HardyVariant};
use mixhom_core::maximal::{alpha_ladder, cotlar_fit_kernel, weak_type_probe, weak_type_spread, MaximalConfig};
use mixhom_core::spaces::{decay_exponent_fit_from, lip_norm, lip_norm_lp};
use mixhom_core::testfields::{isotropic_decay, parabolic_decay, smooth_bump, smooth_suite, trig_polynomial};
use mixhom_core::truncation::{log_slope, truncated_apply_with, truncation_sweep, TruncatedOperator};
use mixhom_core::{FieldOperator, Geometry, GridField, LPSetup, LatticeRule, Metric, MetricKind};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::plot::PlotSpec;
use crate::report::{Cell, ExperimentReport, Table};

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rep = ExperimentReport::new(cfg);
    match cfg.experiment.as_str() {
        "calderon-condition" => calderon_condition(cfg, &mut rep)?,
        "reconstruct" => reconstruct(cfg, &mut rep)?,
        "truncation-sweep" => sweep(cfg, &mut rep)?,
        "cotlar" => cotlar(cfg, &mut rep)?,
        "hormander" => hormander(cfg, &mut rep)?,
        "weak-type" => weak_type(cfg, &mut rep)?,
        "test-decay" => test_decay(cfg, &mut rep)?,
        "almost-orth" => almost_orth(cfg, &mut rep)?,
        "lip-norms" => lip_norms(cfg, &mut rep)?,
        "hardy-ratio" => hardy_ratio(cfg, &mut rep)?,
        other => return Err(HarnessError::config("experiment", format!("unknown experiment '{other}'"))),
    }
    Ok(rep)
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

fn calderon_condition(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let mut t = Table::new("partition", &["metric", "j_min", "j_max", "max_deviation"]);
    let mut worst = 0.0f64;
    for (name, field, metric, range) in [
        ("isotropic", "iso_min", Metric::isotropic(cfg.dim)?, cfg.iso_range()?),
        ("parabolic", "para_min", Metric::parabolic(cfg.dim)?, cfg.para_range()?),
    ] {
        let g = build_generator(metric, geom)?;
        let dev = g.partition_deviation(&range)?.ok_or_else(|| {
            HarnessError::config(field, format!("no in-band frequencies for the {name} range"))
        })?;
        worst = worst.max(dev);
        rep.row(&format!("partition_max_deviation_{name}"), dev);
        t.push(vec![name.into(), (range.min as f64).into(), (range.max as f64).into(), dev.into()]);
    }
    rep.row("partition_max_deviation", worst);
    rep.tables.push(t);
    Ok(())
}

fn reconstruct(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let iso = build_generator(Metric::isotropic(cfg.dim)?, geom)?;
    let para = build_generator(Metric::parabolic(cfg.dim)?, geom)?;
    let (r1, r2) = (cfg.iso_range()?, cfg.para_range()?);
    let f = trig_polynomial(geom, &[&iso.in_band(&r1), &para.in_band(&r2)], 12, cfg.seed)?;
    let mut t = Table::new("refinement", &["coarsen", "residual", "frame_energy", "input_energy"]);
    let mut residuals = Vec::new();
    for coarsen in (0..=cfg.coarsen_levels).rev() {
        let opts = ReconstructOptions { rule: LatticeRule::Max, coarsen };
        let (_, r) = calderon_reconstruct(&f, &iso, &para, &r1, &r2, opts)?;
        t.push(vec![(coarsen as f64).into(), r.residual.into(), r.frame_energy().into(), r.input_energy.into()]);
        residuals.push(r.residual);
        if coarsen == 0 {
            rep.row("reconstruction_residual", r.residual);
            rep.row("band_truncation", r.band_truncation);
            rep.row("frame_energy_ratio", r.frame_energy() / r.input_energy);
        }
    }
    // non-increasing up to 10% (the finest lattice sits at roundoff)
    let monotone = residuals.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-12);
    rep.row("refinement_monotone", if monotone { 1.0 } else { 0.0 });
    rep.row("residual_coarsest", residuals[0]);
    rep.tables.push(t);
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let kernel = cfg.build_kernel()?;
    let f = smooth_bump(geom, &vec![0.0; cfg.dim], 1.0);
    let rows = truncation_sweep(&kernel, &f, &cfg.eps, cfg.metric()?, &cfg.truncation_options())?;
    let mut t = Table::new("sweep", &["epsilon", "l2_ratio", "cauchy_diff"]);
    for r in &rows {
        t.push(vec![r.epsilon.into(), r.l2_ratio.into(), r.cauchy_diff.into()]);
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.l2_ratio).collect();
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.row("ratio_max", max);
    rep.row("ratio_max_over_min", max / min);
    let (slope, r2) = log_slope(&rows);
    rep.row("log_slope", slope);
    rep.row("log_slope_r2", r2);
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.cauchy_diff).collect();
    if diffs.len() >= 3 {
        let n = diffs.len();
        let last = diffs[n - 1] / diffs[n - 2];
        let prev = diffs[n - 2] / diffs[n - 3];
        rep.row("cauchy_ratio_last", last);
        rep.row("cauchy_ratio_prev", prev);
        rep.row("cauchy_ratio_max", last.max(prev));
    }
    rep.plots.push(
        PlotSpec::new("sweep", "truncated operator norms", "epsilon", "||T_eps f|| / ||f||")
            .log_x()
            .series("l2 ratio", rows.iter().map(|r| (r.epsilon, r.l2_ratio)).collect()),
    );
    rep.tables.push(t);
    Ok(())
}

fn cotlar(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kernel = cfg.build_kernel()?;
    let metric = cfg.metric()?;
    let other = cfg.compare_size.unwrap_or(cfg.size / 2);
    let mut t = Table::new("cotlar", &["size", "constant", "cells", "tstar_sup", "term1_sup", "term2_sup", "term3_sup"]);
    let mut constants = Vec::new();
    for (i, size) in [cfg.size, other].into_iter().enumerate() {
        let geom = if i == 0 { cfg.geometry()? } else { cfg.geometry_at(size)? };
        let f = smooth_bump(geom, &vec![0.0; cfg.dim], 1.0);
        let r = cotlar_fit_kernel(
            &kernel,
            &f,
            &cfg.eps,
            cfg.delta,
            cfg.p,
            metric,
            &MaximalConfig::dyadic(&geom),
            &cfg.truncation_options(),
        )?;
        t.push(vec![
            (size as f64).into(),
            r.constant.into(),
            (r.cells as f64).into(),
            r.maximal_truncation_sup.into(),
            r.term_sups[0].into(),
            r.term_sups[1].into(),
            r.term_sups[2].into(),
        ]);
        constants.push(r.constant);
    }
    rep.row("cotlar_constant", constants[0]);
    rep.row("cotlar_constant_compare", constants[1]);
    rep.row("cotlar_relative_change", rel_change(constants[0], constants[1]));
    rep.row("ladder_step_ratio", MaximalConfig::dyadic(&cfg.geometry()?).step_ratio());
    rep.tables.push(t);
    Ok(())
}

fn hormander(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    if cfg.dim != 2 {
        return Err(HarnessError::config("dim", "the Hormander integral is implemented for n = 2"));
    }
    let kernel = cfg.build_kernel()?;
    let metric = cfg.metric()?;
    let pairs = sample_pairs(metric, &cfg.pair_scales, cfg.pairs_per_scale, cfg.seed);
    let opts = HormanderOptions::default();
    let base = hormander_constant(&kernel, metric, &pairs, &opts)?;
    let fine = hormander_constant(&kernel, metric, &pairs, &opts.refined())?;
    rep.row("pairs", pairs.len() as f64);
    rep.row("hormander_constant", base);
    rep.row("hormander_constant_refined", fine);
    rep.row("hormander_relative_change", rel_change(fine, base));
    Ok(())
}

fn weak_type(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let kernel = cfg.build_kernel()?;
    let f = smooth_bump(geom, &vec![0.0; cfg.dim], cfg.bump_radius);
    let f = f.scaled(1.0 / f.integral());
    let op = TruncatedOperator::new(&kernel, geom, cfg.smallest_eps(), cfg.metric()?, &cfg.truncation_options())?;
    let sup = op.apply(&f)?.max_abs();
    let alphas = alpha_ladder(sup, cfg.alpha_count);
    let rows = weak_type_probe(&op, &f, &alphas)?;
    let mut t = Table::new("weak_type", &["alpha", "statistic"]);
    for r in &rows {
        t.push(vec![r.alpha.into(), r.statistic.into()]);
    }
    rep.row("alpha_span", alphas[0] / alphas[alphas.len() - 1]);
    rep.row("weak_type_spread", weak_type_spread(&rows));
    rep.row("weak_type_max", rows.iter().map(|r| r.statistic).fold(0.0, f64::max));
    rep.plots.push(
        PlotSpec::new("weak_type", "weak-type statistic", "alpha", "alpha |{|Tf| > alpha}| / ||f||_1")
            .log_x()
            .series("statistic", rows.iter().map(|r| (r.alpha, r.statistic)).collect()),
    );
    rep.tables.push(t);
    Ok(())
}

/// `(1 + |x|)^{-(Q + gamma)} - c exp(-|x|^2)` with zero grid sum.
fn decay_test_function(geom: Geometry, kind: MetricKind, gamma: f64) -> GridField {
    let n = geom.dim();
    let base = match kind {
        MetricKind::Parabolic => parabolic_decay(geom, (n + 1) as f64 + gamma),
        MetricKind::Isotropic => isotropic_decay(geom, n as f64 + gamma),
    };
    let gauss = GridField::from_fn(geom, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let c = base.integral() / gauss.integral();
    base.combine(1.0, &gauss, -c).expect("same geometry")
}

fn test_decay(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let kernel = cfg.build_kernel()?;
    let metric = cfg.metric()?;
    let f = decay_test_function(geom, cfg.metric, cfg.gamma);
    let origin = vec![0.0; cfg.dim];
    let planted = decay_exponent_fit_from(&f, metric, &origin, cfg.decay_inner)?;
    let tf = truncated_apply_with(&kernel, &f, cfg.smallest_eps(), metric, &cfg.truncation_options())?;
    let fit = decay_exponent_fit_from(&tf, metric, &origin, cfg.decay_inner)?;
    let expected = metric.homogeneous_dimension() as f64 + cfg.gamma;
    rep.row("decay_expected", expected);
    rep.row("decay_planted", planted.exponent);
    rep.row("decay_exponent", fit.exponent);
    rep.row("decay_relative_error", (fit.exponent - expected).abs() / expected);
    rep.row("decay_r2", fit.r_squared);
    let mut t = Table::new("shells", &["radius", "input_max", "output_max"]);
    for (a, b) in planted.shells.iter().zip(&fit.shells) {
        t.push(vec![b.0.into(), a.1.into(), b.1.into()]);
    }
    rep.plots.push(
        PlotSpec::new("decay", "shell maxima", "|x|", "max |.|")
            .log_x()
            .log_y()
            .series("input", planted.shells.iter().map(|s| (s.0, s.1)).collect())
            .series("T_eps input", fit.shells.iter().map(|s| (s.0, s.1)).collect()),
    );
    rep.tables.push(t);
    Ok(())
}

fn almost_orth(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let kernel = cfg.build_kernel()?;
    let metric = cfg.metric()?;
    let op = TruncatedOperator::new(&kernel, geom, cfg.smallest_eps(), metric, &cfg.truncation_options())?;
    let g = build_generator_with(metric, geom, cfg.window)?;
    let offsets: Vec<i32> = (-cfg.max_offset..=cfg.max_offset).collect();
    let fit = fit_almost_orthogonality(&op, &g, cfg.j0, &offsets)?;
    rep.row("almost_orth_epsilon", fit.epsilon);
    rep.row("almost_orth_r2", fit.r_squared);
    let mut t = Table::new("probes", &["j", "j_prime", "sup", "normalized"]);
    for (r, p) in fit.records.iter().zip(&fit.points) {
        t.push(vec![(r.j as f64).into(), (r.j_prime as f64).into(), r.sup.into(), p.1.into()]);
    }
    rep.plots.push(
        PlotSpec::new("almost_orth", "almost orthogonality", "|j - j'|", "normalized sup")
            .log_y()
            .scatter()
            .series("probes", fit.points.iter().map(|p| (p.0 as f64, p.1)).collect()),
    );
    rep.tables.push(t);
    Ok(())
}

fn lip_norms(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let geom = cfg.geometry()?;
    let mut t = Table::new("lipschitz", &["function", "metric", "lip_norm", "lip_norm_lp", "ratio"]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for metric in [Metric::isotropic(cfg.dim)?, Metric::parabolic(cfg.dim)?] {
        let g = build_generator(metric, geom)?;
        let range = g.resolvable_range();
        let label = match metric.kind {
            MetricKind::Isotropic => "isotropic",
            MetricKind::Parabolic => "parabolic",
        };
        for (name, f) in smooth_suite(geom) {
            let a = lip_norm(&f, cfg.alpha, metric)?;
            let b = lip_norm_lp(&f, cfg.alpha, &g, &range)?;
            let ratio = b / a;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            t.push(vec![Cell::from(name), label.into(), a.into(), b.into(), ratio.into()]);
        }
    }
    rep.row("lip_ratio_min", lo);
    rep.row("lip_ratio_max", hi);
    rep.tables.push(t);
    Ok(())
}

fn hardy_ratio(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<()> {
    let kernel = cfg.build_kernel()?;
    let metric = cfg.metric()?;
    let other = cfg.compare_size.unwrap_or(2 * cfg.size);
    let mut t = Table::new("hardy", &["function", "size", "ratio"]);
    let mut per_size: Vec<Vec<f64>> = Vec::new();
    for (i, size) in [cfg.size, other].into_iter().enumerate() {
        let geom = if i == 0 { cfg.geometry()? } else { cfg.geometry_at(size)? };
        let setup = LPSetup::new(geom, cfg.iso_range()?, cfg.para_range()?)?;
        let mut ratios = Vec::new();
        for (name, f) in smooth_suite(geom) {
            let tf = truncated_apply_with(&kernel, &f, cfg.smallest_eps(), metric, &cfg.truncation_options())?;
            let a = hardy_norm(&tf, HardyVariant::Composite, 1.0, &setup)?;
            let b = hardy_norm(&f, HardyVariant::Composite, 1.0, &setup)?;
            t.push(vec![Cell::from(name), (size as f64).into(), (a / b).into()]);
            ratios.push(a / b);
        }
        per_size.push(ratios);
    }
    let c0 = per_size[0].iter().cloned().fold(0.0, f64::max);
    let c1 = per_size[1].iter().cloned().fold(0.0, f64::max);
    let worst = per_size[0].iter().zip(&per_size[1]).map(|(a, b)| rel_change(*a, *b)).fold(0.0, f64::max);
    rep.row("hardy_constant", c0);
    rep.row("hardy_constant_compare", c1);
    rep.row("hardy_relative_change", rel_change(c0, c1));
    rep.row("hardy_max_function_change", worst);
    rep.tables.push(t);
    Ok(())
}
