#![allow(dead_code)]

use std::path::PathBuf;

use salo_core::optim::{adam_step, HyperParams, MomentState};
use salo_core::salo::{estimate_der2nd, salo_step, SaloState};
use salo_core::{ParamVector, SaloHyper};

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

pub fn pv(v: &[f64]) -> ParamVector {
    ParamVector::new(v.to_vec()).unwrap()
}

/// `(field, computed, expected)` for one SALO step from `w = 0` with `g = 1`.
pub fn salo_single_step_fields() -> Vec<(String, f64, f64)> {
    let text = read("salo_single_step.csv");
    let state = SaloState::new(1);
    let h = SaloHyper::default();
    let step = salo_step(&pv(&[0.0]), &pv(&[1.0]), &state, &h).unwrap();
    let (der2nd, _) = estimate_der2nd(&state.prev_grad, &step.state.m, &state.delta_w, h.eps).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let (field, value) = line.split_once(',').unwrap();
            let expected: f64 = value.parse().unwrap();
            let got = match field {
                "t" => step.state.t as f64,
                "w" => step.params[0],
                "m" => step.state.m[0],
                "v" => step.state.v[0],
                "hess" => step.state.hess[0],
                "prev_grad" => step.state.prev_grad[0],
                "delta_w" => step.state.delta_w[0],
                "der2nd" => der2nd[0],
                "curvature" => step.curvature[0],
                "update" => step.update[0],
                other => panic!("unknown golden field {other}"),
            };
            (field.to_string(), got, expected)
        })
        .collect()
}

/// `(t, column, computed, expected)` for three Adam steps on `f = w²` from
/// `w = 1` with `α = 0.1`.
pub fn adam_trace_fields() -> Vec<(u64, &'static str, f64, f64)> {
    let text = read("adam_w2_trace.csv");
    let h = HyperParams { alpha: 0.1, ..HyperParams::adam() };
    let mut w = pv(&[1.0]);
    let mut state = MomentState::new(1);
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let g = pv(&[2.0 * w[0]]);
        let (next, s) = adam_step(&w, &g, &state, &h).unwrap();
        let t = f[0] as u64;
        out.push((t, "grad", g[0], f[1]));
        out.push((t, "m", s.m[0], f[2]));
        out.push((t, "v", s.v[0], f[3]));
        out.push((t, "w", next[0], f[4]));
        w = next;
        state = s;
    }
    out
}
