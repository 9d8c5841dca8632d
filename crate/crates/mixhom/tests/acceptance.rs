//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails. Criteria backed by experiments come from
//! `configs/acceptance.toml` (grouped by assertion label); the rest are
//! checked directly here.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mixhom::suite::Suite;
use mixhom::{emit_report, run_experiment, ExperimentConfig, Formats};
use mixhom_core::kernel::{catalog_kernel, enforce_cancellation, spherical_mean, ProductKernel, Profile};
use mixhom_core::lp::{build_generator, square_function, square_function_com, ScaleRange};
use mixhom_core::maximal::{hl_maximal, maximal_truncation_kernel, strong_maximal};
use mixhom_core::testfields::{smooth_bump, trig_polynomial};
use mixhom_core::truncation::TruncationOptions;
use mixhom_core::{lp_norm, Geometry, GridField, Metric, MaximalConfig};

/// Runtime budget in seconds per criterion.
const BUDGETS: [(u32, f64); 13] = [
    (1, 5.0),
    (2, 30.0),
    (3, 60.0),
    (4, 120.0),
    (5, 120.0),
    (6, 60.0),
    (7, 120.0),
    (8, 120.0),
    (9, 180.0),
    (10, 60.0),
    (11, 60.0),
    (12, 180.0),
    (13, 60.0),
];

#[derive(Default)]
struct Outcome {
    ok: bool,
    notes: Vec<String>,
    elapsed: Duration,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn plancherel() -> Result<Vec<String>, String> {
    let geom = Geometry::desk();
    let iso = build_generator(Metric::isotropic(2).map_err(e)?, geom).map_err(e)?;
    let para = build_generator(Metric::parabolic(2).map_err(e)?, geom).map_err(e)?;
    let r = ScaleRange::new(-2, 4).map_err(e)?;
    let (a, b) = (iso.in_band(&r), para.in_band(&r));
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let f = trig_polynomial(geom, &[&a, &b], 12, 100 + seed).map_err(e)?;
        let nf = lp_norm(&f, 2.0).map_err(e)?;
        for g in [
            square_function(&f, &iso, &r).map_err(e)?,
            square_function(&f, &para, &r).map_err(e)?,
            square_function_com(&f, &iso, &para, &r, &r).map_err(e)?,
        ] {
            worst = worst.max(rel(lp_norm(&g, 2.0).map_err(e)?, nf));
        }
    }
    let note = format!("max relative L2 defect {worst:.2e} < 1e-6");
    if worst < 1e-6 {
        Ok(vec![note])
    } else {
        Err(note)
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn homogeneity() -> Result<String, String> {
    let mut worst = 0.0f64;
    let samples: Vec<[f64; 2]> = (0..50).map(|i| {
        let t = i as f64 * 0.7 + 0.3;
        [2.5 * t.sin(), 1.7 * (1.3 * t).cos()]
    }).collect();
    let dilations = [0.13, 0.5, 2.0, 7.3];
    for name in ["constant", "odd-xn", "first-harmonic", "tilted-odd", "random-trig"] {
        let k = ProductKernel::new(2, 0.25, 2.75, Profile::from_name(name, 5).map_err(e)?, Profile::from_name(name, 6).map_err(e)?)
            .map_err(e)?
            .with_cutoff(false);
        for x in &samples {
            for &d in &dilations {
                let e0 = k.eval_e(x);
                let e1 = k.eval_e(&[d * x[0], d * x[1]]);
                if e0 != 0.0 {
                    worst = worst.max(rel(e1, d.powf(-k.k) * e0));
                }
                let h0 = k.eval_h(x);
                let h1 = k.eval_h(&[d * x[0], d * d * x[1]]);
                if h0.abs() > 1e-12 {
                    worst = worst.max(rel(h1, d.powf(-k.l) * h0));
                }
            }
        }
    }
    for m in [Metric::isotropic(2).map_err(e)?, Metric::parabolic(2).map_err(e)?] {
        for x in &samples {
            for &d in &dilations {
                let y = m.dilate(x, d).map_err(e)?;
                worst = worst.max(rel(m.norm(&y).map_err(e)?, d * m.norm(x).map_err(e)?));
            }
        }
    }
    let note = format!("homogeneity defect {worst:.1e}");
    if worst <= 1e-12 {
        Ok(note)
    } else {
        Err(note)
    }
}

fn dominated(a: &GridField, b: &GridField) -> bool {
    let scale = b.max_abs().max(1.0);
    a.values().iter().zip(b.values()).all(|(x, y)| *x <= *y + 1e-12 * scale)
}

fn maximal_properties() -> Result<String, String> {
    let geom = Geometry::new(2, 64, 4.0).map_err(e)?;
    let cfg = MaximalConfig::dyadic(&geom);
    let all = vec![true; geom.len()];
    let f = trig_polynomial(geom, &[&all], 6, 3).map_err(e)?.add(&smooth_bump(geom, &[1.0, -0.5], 1.5)).map_err(e)?;
    let g = trig_polynomial(geom, &[&all], 6, 4).map_err(e)?;
    let sum = f.add(&g).map_err(e)?;
    let bigger = f.abs().add(&g.abs()).map_err(e)?;
    let mut ok = true;
    for m in [Metric::isotropic(2).map_err(e)?, Metric::parabolic(2).map_err(e)?] {
        let (mf, mg) = (hl_maximal(&f, m, &cfg).map_err(e)?, hl_maximal(&g, m, &cfg).map_err(e)?);
        ok &= dominated(&hl_maximal(&sum, m, &cfg).map_err(e)?, &mf.add(&mg).map_err(e)?);
        ok &= dominated(&mf, &hl_maximal(&bigger, m, &cfg).map_err(e)?);
    }
    let (sf, sg) = (strong_maximal(&f, &cfg).map_err(e)?, strong_maximal(&g, &cfg).map_err(e)?);
    ok &= dominated(&strong_maximal(&sum, &cfg).map_err(e)?, &sf.add(&sg).map_err(e)?);
    ok &= dominated(&sf, &strong_maximal(&bigger, &cfg).map_err(e)?);
    let k = catalog_kernel("caseh-cancellative").map_err(e)?;
    let m = Metric::parabolic(2).map_err(e)?;
    let opts = TruncationOptions::default();
    let eps = [0.5, 0.25, 0.125];
    let tf = maximal_truncation_kernel(&k, &f, &eps, m, &opts).map_err(e)?;
    let tg = maximal_truncation_kernel(&k, &g, &eps, m, &opts).map_err(e)?;
    let ts = maximal_truncation_kernel(&k, &sum, &eps, m, &opts).map_err(e)?;
    ok &= dominated(&ts, &tf.add(&tg).map_err(e)?);
    let t2 = maximal_truncation_kernel(&k, &f.scaled(2.0), &eps, m, &opts).map_err(e)?;
    ok &= t2.values().iter().zip(tf.values()).all(|(a, b)| (a - 2.0 * b).abs() <= 1e-12 * tf.max_abs().max(1.0));
    if ok {
        Ok("maximal operators sublinear and monotone".into())
    } else {
        Err("a maximal operator violated sublinearity or monotonicity".into())
    }
}

fn cancellation_idempotent() -> Result<String, String> {
    let mut worst = 0.0f64;
    for name in ["caseh-positive", "caseh-odd", "casee-odd"] {
        let once = enforce_cancellation(&catalog_kernel(name).map_err(e)?).map_err(e)?;
        let twice = enforce_cancellation(&once).map_err(e)?;
        worst = worst.max((twice.cancellation_shift - once.cancellation_shift).abs());
        worst = worst.max(spherical_mean(&twice).map_err(e)?.mean.abs());
    }
    let note = format!("enforce_cancellation idempotent (defect {worst:.1e})");
    if worst < 1e-9 {
        Ok(note)
    } else {
        Err(note)
    }
}

fn read_all(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(e)? {
        let path = entry.map_err(e)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, std::fs::read(&path).map_err(e)?);
    }
    Ok(out)
}

fn determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(e)?;
    let mut cfg = ExperimentConfig::named("truncation-sweep");
    cfg.size = 128;
    let mut runs = Vec::new();
    for i in 0..2 {
        let dir = tmp.path().join(format!("run{i}"));
        let rep = run_experiment(&cfg).map_err(e)?;
        emit_report(&rep, &dir, Formats { svg: true }).map_err(e)?;
        runs.push(read_all(&dir)?);
    }
    if runs[0] == runs[1] && !runs[0].is_empty() {
        Ok(format!("{} report files byte-identical across reruns", runs[0].len()))
    } else {
        Err("reruns produced different report files".into())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn main() -> ExitCode {
    let mut results: BTreeMap<u32, Outcome> = BTreeMap::new();

    let (r, t) = timed(plancherel);
    results.insert(2, match r {
        Ok(notes) => Outcome { ok: true, notes, elapsed: t },
        Err(n) => Outcome { ok: false, notes: vec![n], elapsed: t },
    });

    let (checks, t) = timed(|| [homogeneity(), maximal_properties(), cancellation_idempotent(), determinism()]);
    let mut c13 = Outcome { ok: true, notes: Vec::new(), elapsed: t };
    for c in checks {
        match c {
            Ok(n) => c13.notes.push(n),
            Err(n) => {
                c13.ok = false;
                c13.notes.push(n);
            }
        }
    }
    results.insert(13, c13);

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/acceptance.toml");
    let suite = Suite::from_path(&path).expect("acceptance suite parses");
    suite.validate().expect("acceptance suite validates");
    for run in &suite.runs {
        let (rep, t) = timed(|| run_experiment(&run.config));
        let labels: Vec<u32> = run
            .asserts
            .iter()
            .filter_map(|a| a.label.as_deref()?.strip_prefix("criterion ")?.parse().ok())
            .collect();
        for (a, label) in run.asserts.iter().zip(&labels) {
            let out = results.entry(*label).or_insert_with(|| Outcome { ok: true, ..Default::default() });
            match &rep {
                Ok(rep) => {
                    let actual = rep.get(&a.row);
                    let passed = actual.is_some_and(|v| a.op.holds(v, a.value));
                    out.ok &= passed;
                    out.notes.push(match actual {
                        Some(v) => format!("{} = {v:.4e} {} {:e}", a.row, a.op.symbol(), a.value),
                        None => format!("{} missing", a.row),
                    });
                }
                Err(err) => {
                    out.ok = false;
                    out.notes.push(format!("{} failed: {err}", run.config.experiment));
                }
            }
        }
        let mut charged: Vec<u32> = labels.clone();
        charged.dedup();
        for label in charged {
            results.get_mut(&label).unwrap().elapsed += t;
        }
    }

    let mut all = true;
    for (id, budget) in BUDGETS {
        let line = match results.get(&id) {
            None => {
                all = false;
                format!("FAIL criterion {id:2}: no check ran")
            }
            Some(o) => {
                let secs = o.elapsed.as_secs_f64();
                let in_time = secs < budget;
                let ok = o.ok && in_time;
                all &= ok;
                format!(
                    "{} criterion {id:2} ({secs:.1} s of {budget:.0} s): {}",
                    if ok { "PASS" } else { "FAIL" },
                    o.notes.join("; ")
                )
            }
        };
        println!("{line}");
    }
    if all {
        println!("acceptance: all 13 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
