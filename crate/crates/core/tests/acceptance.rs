//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{adam_trace_fields, pv, salo_single_step_fields};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salo_core::fuzzy::{
    build_lookup_table, centroid, default_system, monotonicity_violations, FuzzySet, Shape, Universe, DEFAULT_GRID,
};
use salo_core::harness::{compare, fd_report_csv, run_experiment, ExperimentConfig, ProblemSpec, RUN_CSV_HEADER};
use salo_core::hessian_fd::fd_error_report;
use salo_core::objective::{Objective, Quadratic, Rosenbrock};
use salo_core::optim::{run, HyperParams, Sgd};
use salo_core::salo::{salo_step, SaloState};
use salo_core::{FdMode, LookupTable, OptimizerKind, Salo, SaloHyper};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fd_error(rows: &[salo_core::FdErrorRow], r: f64, mode: FdMode) -> f64 {
    rows.iter().find(|x| x.r == r && x.mode == mode).map(|x| x.max_abs_error).unwrap()
}

fn c1_fd_exactness() -> Outcome {
    let cases: Vec<(&str, Box<dyn Objective>, Vec<f64>)> = vec![
        ("w1^2+3w2^2 at (1,2)", Box::new(Quadratic::new(vec![1.0, 3.0]).unwrap()), vec![1.0, 2.0]),
        ("10-D cond 1e4 at ones", Box::new(Quadratic::ill_conditioned(10, 1e4).unwrap()), vec![1.0; 10]),
    ];
    let rs = [1e-2, 1e-4, 1e-7];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, obj, w) in &cases {
        let rows = fd_error_report(obj.as_ref(), &pv(w), &rs).unwrap();
        let errs: Vec<String> = rs
            .iter()
            .map(|&r| {
                let e = fd_error(&rows, r, FdMode::Forward).max(fd_error(&rows, r, FdMode::Central));
                ok &= e <= 1e-9;
                format!("r={r:e} {e:.1e}")
            })
            .collect();
        parts.push(format!("{label}: {}", errs.join(" ")));
    }
    check(ok, format!("max abs error (limit 1e-9) {}", parts.join("; ")))
}

fn c2_fd_order() -> Outcome {
    let rows = fd_error_report(&Rosenbrock, &pv(&[0.5, 0.5]), &[1e-2, 5e-3]).unwrap();
    let central = fd_error(&rows, 1e-2, FdMode::Central) / fd_error(&rows, 5e-3, FdMode::Central);
    let forward = fd_error(&rows, 1e-2, FdMode::Forward) / fd_error(&rows, 5e-3, FdMode::Forward);
    check(
        (3.0..=5.0).contains(&central) && (1.6..=2.6).contains(&forward),
        format!("central ratio {central:.4} (want [3, 5]), forward ratio {forward:.4} (want [1.6, 2.6])"),
    )
}

fn c3_salo_golden() -> Outcome {
    let fields = salo_single_step_fields();
    let worst = fields.iter().map(|(_, g, w)| (g - w).abs()).fold(0.0, f64::max);
    let w1 = fields.iter().find(|f| f.0 == "w").unwrap().1;
    check(worst <= 1e-12 && fields.len() == 10, format!("w1={w1:.6e}, max field error {worst:.1e} over {} fields", fields.len()))
}

fn c4_adam_golden() -> Outcome {
    let fields = adam_trace_fields();
    let worst = fields.iter().map(|(_, _, g, w)| (g - w).abs()).fold(0.0, f64::max);
    check(worst <= 1e-12 && fields.len() == 12, format!("max error {worst:.1e} over 3 steps"))
}

/// Curvature and update extremes over 10,000 seeded random steps.
fn random_salo_steps(seed: u64) -> (f64, f64, Vec<u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_curv = f64::INFINITY;
    let mut max_update_ratio: f64 = 0.0;
    let mut fingerprint = Vec::new();
    for _ in 0..10_000 {
        let dim = rng.random_range(1..5);
        let mut vec = |lo: f64, hi: f64| pv(&(0..dim).map(|_| rng.random_range(lo..hi)).collect::<Vec<_>>());
        let mut s = SaloState::new(dim);
        s.m = vec(-2.0, 2.0);
        s.v = vec(0.0, 4.0);
        s.hess = vec(-50.0, 50.0);
        s.prev_grad = vec(-2.0, 2.0);
        s.delta_w = vec(-0.1, 0.1);
        let w = vec(-3.0, 3.0);
        let g = vec(-100.0, 100.0);
        s.t = rng.random_range(0..1000);
        let h = SaloHyper {
            alpha: rng.random_range(1e-4..10.0),
            hess_floor: rng.random_range(1e-4..0.1),
            step_cap: rng.random_range(1e-3..1.0),
            ..SaloHyper::default()
        };
        let out = salo_step(&w, &g, &s, &h).unwrap();
        for i in 0..dim {
            min_curv = min_curv.min(out.curvature[i] / h.hess_floor);
            max_update_ratio = max_update_ratio.max(out.update[i].abs() / h.step_cap);
            fingerprint.push(out.params[i].to_bits());
        }
    }
    (min_curv, max_update_ratio, fingerprint)
}

fn c5_curvature_floor() -> Outcome {
    let (min_curv, max_ratio, _) = random_salo_steps(5);
    check(
        min_curv >= 1.0 && max_ratio <= 1.0,
        format!("min curvature/floor {min_curv:.4}, max |update|/cap {max_ratio:.4}"),
    )
}

fn c6_convergence() -> Outcome {
    let q = Quadratic::new(vec![1.0, 3.0]).unwrap();
    let mut salo = Salo::new(2, SaloHyper::default()).unwrap();
    let out = run(&mut salo, &q, pv(&[1.0, 1.0]), 5000, None).unwrap();
    let final_loss = q.value(&out.params);
    let best = out.records.iter().map(|r| r.loss).chain([final_loss]).fold(f64::INFINITY, f64::min);
    let salo_ok = best < 1e-6;

    let mut sgd = Sgd::new(2, HyperParams { alpha: 1.0, ..HyperParams::sgd() }).unwrap();
    let diverged = run(&mut sgd, &q, pv(&[1.0, 1.0]), 5000, None).unwrap();
    check(
        salo_ok && diverged.diverged(),
        format!(
            "SALO on w1^2+3w2^2 from (1,1): best loss {best:.3e} in 5000 steps (want < 1e-6), final {final_loss:.3e}; \
             SGD lr=1.0 status {:?}",
            diverged.status
        ),
    )
}

fn c7_fuzzy_golden() -> Outcome {
    let tri = |a, b, c| FuzzySet::new("s", Shape::Triangle { a, b, c });
    let asym = Universe::new("u", 0.0, 1.0, vec![tri(0.1, 0.6, 0.9)], DEFAULT_GRID).unwrap();
    let mu: Vec<f64> = asym.grid().iter().map(|&x| asym.sets()[0].membership(x)).collect();
    let c_asym = centroid(&mu, &asym).unwrap();
    let sym = Universe::new("u", 0.0, 1.0, vec![tri(0.2, 0.5, 0.8)], DEFAULT_GRID).unwrap();
    let mu: Vec<f64> = sym.grid().iter().map(|&x| sym.sets()[0].membership(x)).collect();
    let c_sym = centroid(&mu, &sym).unwrap();
    check(
        (c_asym - 1.6 / 3.0).abs() <= 1e-4 && (c_sym - 0.5).abs() <= 1e-9,
        format!("triangle(0.1,0.6,0.9) centroid {c_asym:.6}, symmetric centroid {c_sym:.12}"),
    )
}

fn c8_monotonicity() -> Outcome {
    let sys = default_system(1000).unwrap();
    let table = build_lookup_table(&sys, 61, 61).unwrap();
    let violations = monotonicity_violations(&table);
    let along_iter = violations.iter().filter(|v| v.0 .0 == v.1 .0).count();
    let worst = violations.iter().map(|v| v.2.abs() / 1.5e-7).fold(0.0, f64::max);
    let coverage = sys.inputs().iter().map(|u| u.check_coverage(10_001)).collect::<Result<Vec<_>, _>>();
    check(
        violations.is_empty() && coverage.is_ok(),
        format!(
            "T=1000: lr rises along iter at {along_iter} node pairs, falls along loss at {}; largest {:.2}% of span; \
             input coverage at 10001 points {}",
            violations.len() - along_iter,
            worst * 100.0,
            if coverage.is_ok() { "ok" } else { "FAILED" }
        ),
    )
}

fn c9_table_agreement() -> Outcome {
    let sys = default_system(1000).unwrap();
    let table = build_lookup_table(&sys, 61, 61).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spans = [1.5e-7, 0.99, 0.99];
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let (loss, it) = (rng.random_range(0.0..6.0), rng.random_range(0.0..1.0));
        let d = sys.infer_hyper(loss, it).unwrap();
        let t = table.lookup(loss, it);
        for (k, (a, b)) in [(d.lr, t.lr), (d.beta1, t.beta1), (d.beta3, t.beta3)].into_iter().enumerate() {
            worst[k] = worst[k].max((a - b).abs() / spans[k]);
        }
    }
    check(
        worst.iter().all(|&w| w <= 0.02),
        format!("T=1000, 100 points, max deviation / span: lr {:.3}%, beta1 {:.3}%, beta3 {:.3}%", worst[0] * 100.0, worst[1] * 100.0, worst[2] * 100.0),
    )
}

fn mlp_configs() -> Vec<ExperimentConfig> {
    let problem = ProblemSpec::SpiralMlp { layers: vec![2, 16, 2], samples: 512 };
    OptimizerKind::ALL
        .iter()
        .map(|&k| {
            let mut c = ExperimentConfig::new(problem.clone(), k, 1);
            c.epochs = 5;
            c.batch = 32;
            c
        })
        .collect()
}

fn schema_problem(csv: &str) -> Option<String> {
    let mut lines = csv.lines();
    if lines.next() != Some(&format!("optimizer,{RUN_CSV_HEADER}")) {
        return Some("bad header".into());
    }
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 || !["step", "epoch", "summary"].contains(&f[1]) {
            return Some(format!("malformed row `{line}`"));
        }
        for (i, v) in f.iter().enumerate().skip(2) {
            if v.is_empty() || i == 10 {
                continue;
            }
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() => {}
                _ => return Some(format!("non-finite or non-numeric field `{v}`")),
            }
        }
    }
    None
}

fn c10_end_to_end() -> Outcome {
    let cmp = compare(&mlp_configs()).map_err(|e| e.to_string())?;
    let csv = cmp.to_csv();
    let schema = schema_problem(&csv);
    let mut ok = schema.is_none() && !cmp.diverged() && cmp.runs.len() == 4;
    let mut parts = Vec::new();
    for r in &cmp.runs {
        let train = r.summary.metrics.map_or(f64::NAN, |m| m.train_loss);
        ok &= train < r.summary.initial_loss;
        parts.push(format!("{} {:.4}->{:.4}", r.config.optimizer, r.summary.initial_loss, train));
    }
    let val = |k: OptimizerKind| {
        cmp.runs.iter().find(|r| r.config.optimizer == k).and_then(|r| r.summary.metrics).map(|m| (m.train_loss, m.val_acc))
    };
    let (salo, adam) = (val(OptimizerKind::Salo), val(OptimizerKind::Adam));
    parts.push(format!("salo vs adam (train loss, val acc): {salo:?} vs {adam:?}"));
    if let Some(s) = schema {
        parts.push(s);
    }
    check(ok, format!("train loss {}", parts.join("; ")))
}

fn strip_timing(csv: &str) -> String {
    let col = 1 + RUN_CSV_HEADER.split(',').position(|c| c == "elapsed_ms").unwrap();
    csv.lines()
        .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != col).map(|(_, f)| f).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c11_determinism() -> Outcome {
    let mut mismatched = Vec::new();
    let mlp = || compare(&mlp_configs()).map(|c| strip_timing(&c.to_csv())).map_err(|e| e.to_string());
    if mlp()? != mlp()? {
        mismatched.push("mlp compare");
    }
    if random_salo_steps(5).2 != random_salo_steps(5).2 {
        mismatched.push("random salo steps");
    }
    let table = || build_lookup_table(&default_system(1000).unwrap(), 61, 61).unwrap().to_csv();
    let t = table();
    if t != table() || LookupTable::from_csv(&t).map(|x| x.to_csv()).ok() != Some(t) {
        mismatched.push("lookup table");
    }
    let fd = || fd_report_csv(&fd_error_report(&Rosenbrock, &pv(&[0.5, 0.5]), &[1e-2, 5e-3, 1e-7]).unwrap());
    if fd() != fd() {
        mismatched.push("fd report");
    }
    let quad = || {
        let mut c = ExperimentConfig::new(ProblemSpec::from_id("quadratic").unwrap(), OptimizerKind::Salo, 1);
        c.steps = 5000;
        run_experiment(&c).map(|r| r.to_csv())
    };
    let col = RUN_CSV_HEADER.split(',').position(|c| c == "elapsed_ms").unwrap();
    let untimed = |s: String| {
        s.lines()
            .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != col).map(|(_, f)| f).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
    };
    if untimed(quad().map_err(|e| e.to_string())?) != untimed(quad().map_err(|e| e.to_string())?) {
        mismatched.push("salo quadratic run");
    }
    check(mismatched.is_empty(), format!("repeated outputs differing: {mismatched:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        ("FD exactness on quadratics", c1_fd_exactness, Duration::from_secs(1)),
        ("FD convergence order", c2_fd_order, Duration::from_secs(1)),
        ("SALO golden trace", c3_salo_golden, Duration::from_secs(1)),
        ("Adam golden trace", c4_adam_golden, Duration::from_secs(1)),
        ("curvature floor and step cap", c5_curvature_floor, Duration::from_secs(5)),
        ("convergence regression", c6_convergence, Duration::from_secs(5)),
        ("fuzzy golden values", c7_fuzzy_golden, Duration::from_secs(1)),
        ("fuzzy monotonicity and coverage", c8_monotonicity, Duration::from_secs(10)),
        ("table/direct agreement", c9_table_agreement, Duration::from_secs(5)),
        ("end-to-end MLP comparison", c10_end_to_end, Duration::from_secs(120)),
        ("determinism", c11_determinism, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (n, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (verdict, detail) = match (&outcome, took <= *limit) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over time limit {limit:?}")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {verdict} {name}: {detail} [{:.0} ms]", n + 1, took.as_secs_f64() * 1e3);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
