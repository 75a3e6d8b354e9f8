//! Second-order adaptive learning optimizer.
//!
//! Per parameter, the step combines Adam's bias-corrected first and second
//! gradient moments with an online estimate of the diagonal curvature:
//!
//! ```text
//! m  ← β₁ m + (1 − β₁) g
//! v  ← β₂ v + (1 − β₂) g²
//! d  ← (P_G − m) / (Δw + ε)          // change in gradient EMA over last step
//! P_G ← m
//! H  ← β₃ H + (1 − β₃) d
//! Ĥ  ← max(|H / (1 − β₃ᵗ)|, floor)
//! u  ← clamp(α m̂ / ((Ĥ + ε)(√v̂ + ε)), ±cap)
//! w  ← w − u,   Δw ← −u
//! ```
//!
//! The curvature estimate costs nothing beyond the gradient already computed:
//! it divides the change in the gradient EMA by the parameter change that
//! produced it. `Δw` starts at [`INITIAL_STEP`] and `H` at
//! [`INITIAL_CURVATURE`].

use crate::error::{Error, Result};
use crate::optim::{Optimizer, OptimizerKind, StepHyper};
use crate::param::{check_finite, ParamVector};

/// Initial per-parameter step `Δw`.
pub const INITIAL_STEP: f64 = 0.01;
/// Initial curvature EMA `H`.
pub const INITIAL_CURVATURE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaloHyper {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub eps: f64,
    /// Smallest curvature magnitude allowed in the update denominator.
    pub hess_floor: f64,
    /// Largest per-parameter step magnitude.
    pub step_cap: f64,
}

impl Default for SaloHyper {
    fn default() -> Self {
        Self { alpha: 1e-3, beta1: 0.95, beta2: 0.97, beta3: 0.9, eps: 1e-8, hess_floor: 0.01, step_cap: 1.0 }
    }
}

impl SaloHyper {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("eps", self.eps)?;
        positive("hess_floor", self.hess_floor)?;
        positive("step_cap", self.step_cap)?;
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2), ("beta3", self.beta3)] {
            check_beta(name, b)?;
        }
        Ok(())
    }
}

fn check_beta(name: &str, beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1), got {beta}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaloState {
    /// First-moment EMA of the gradient.
    pub m: ParamVector,
    /// EMA of the squared gradient.
    pub v: ParamVector,
    /// EMA of the estimated second derivative.
    pub hess: ParamVector,
    /// First-moment EMA from the previous step.
    pub prev_grad: ParamVector,
    /// Signed change applied to each parameter by the previous step.
    pub delta_w: ParamVector,
    pub t: u64,
    /// Second-derivative estimates that came out non-finite and were zeroed.
    pub nonfinite_der2nd: u64,
}

impl SaloState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: ParamVector::zeros(dim),
            v: ParamVector::zeros(dim),
            hess: ParamVector::filled(dim, INITIAL_CURVATURE),
            prev_grad: ParamVector::zeros(dim),
            delta_w: ParamVector::filled(dim, INITIAL_STEP),
            t: 0,
            nonfinite_der2nd: 0,
        }
    }

    fn ensure_dim(&self, dim: usize) -> Result<()> {
        for part in [&self.m, &self.v, &self.hess, &self.prev_grad, &self.delta_w] {
            part.ensure_dim(dim)?;
        }
        Ok(())
    }
}

/// `(P_G − m) / (Δw + eps)` elementwise. Non-finite quotients are replaced
/// by zero; the second return value counts them.
pub fn estimate_der2nd(prev_grad: &[f64], m: &[f64], delta_w: &[f64], eps: f64) -> Result<(ParamVector, u64)> {
    if prev_grad.len() != m.len() || delta_w.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: m.len(), got: prev_grad.len().max(delta_w.len()) });
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let mut zeroed = 0;
    let der2nd = prev_grad
        .iter()
        .zip(m)
        .zip(delta_w)
        .map(|((p, m), dw)| {
            let d = (p - m) / (dw + eps);
            if d.is_finite() {
                d
            } else {
                zeroed += 1;
                0.0
            }
        })
        .collect();
    Ok((ParamVector::new(der2nd)?, zeroed))
}

/// Divides an EMA started at zero by `1 − βᵗ`.
pub fn bias_correct(x: &[f64], beta: f64, t: u64) -> Result<ParamVector> {
    if t == 0 {
        return Err(Error::invalid("bias correction needs t >= 1"));
    }
    check_beta("beta", beta)?;
    let denom = 1.0 - beta.powi(t.min(i32::MAX as u64) as i32);
    ParamVector::new(x.iter().map(|v| v / denom).collect())
}

/// `max(|ĥ|, floor)` elementwise.
pub fn clip_curvature(h_hat: &[f64], floor: f64) -> Result<ParamVector> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::invalid(format!("curvature floor must be positive, got {floor}")));
    }
    ParamVector::new(h_hat.iter().map(|h| h.abs().max(floor)).collect())
}

/// Result of one [`salo_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct SaloStep {
    pub params: ParamVector,
    pub state: SaloState,
    /// Clipped curvature `Ĥ` that entered the update.
    pub curvature: ParamVector,
    /// Update `u` subtracted from the parameters.
    pub update: ParamVector,
}

pub fn salo_step(w: &ParamVector, g: &ParamVector, state: &SaloState, h: &SaloHyper) -> Result<SaloStep> {
    h.validate()?;
    g.ensure_dim(w.dim())?;
    state.ensure_dim(w.dim())?;
    check_finite("gradient", g)?;

    let t = state.t + 1;
    let ema = |prev: &[f64], new: &mut dyn Iterator<Item = f64>, beta: f64| -> Result<ParamVector> {
        ParamVector::new(prev.iter().zip(new).map(|(p, x)| beta * p + (1.0 - beta) * x).collect())
    };
    let m = ema(&state.m, &mut g.iter().copied(), h.beta1)?;
    let v = ema(&state.v, &mut g.iter().map(|x| x * x), h.beta2)?;
    let (der2nd, zeroed) = estimate_der2nd(&state.prev_grad, &m, &state.delta_w, h.eps)?;
    let hess = ema(&state.hess, &mut der2nd.iter().copied(), h.beta3)?;

    let m_hat = bias_correct(&m, h.beta1, t)?;
    let v_hat = bias_correct(&v, h.beta2, t)?;
    let curvature = clip_curvature(&bias_correct(&hess, h.beta3, t)?, h.hess_floor)?;

    let update: Vec<f64> = (0..w.dim())
        .map(|i| {
            let raw = h.alpha * m_hat[i] / ((curvature[i] + h.eps) * (v_hat[i].sqrt() + h.eps));
            raw.clamp(-h.step_cap, h.step_cap)
        })
        .collect();
    check_finite("update", &update)?;
    let params = ParamVector::new(w.iter().zip(&update).map(|(w, u)| w - u).collect())?;
    let delta_w = ParamVector::from_vec_unchecked(update.iter().map(|u| -u).collect());

    Ok(SaloStep {
        params,
        state: SaloState {
            prev_grad: m.clone(),
            m,
            v,
            hess,
            delta_w,
            t,
            nonfinite_der2nd: state.nonfinite_der2nd + zeroed,
        },
        curvature,
        update: ParamVector::from_vec_unchecked(update),
    })
}

/// [`salo_step`] packaged as a stateful [`Optimizer`].
#[derive(Debug, Clone)]
pub struct Salo {
    pub hyper: SaloHyper,
    pub state: SaloState,
}

impl Salo {
    pub fn new(dim: usize, hyper: SaloHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(Self { hyper, state: SaloState::new(dim) })
    }
}

impl Optimizer for Salo {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Salo
    }

    fn step(&mut self, w: &ParamVector, g: &ParamVector) -> Result<ParamVector> {
        let out = salo_step(w, g, &self.state, &self.hyper)?;
        self.state = out.state;
        Ok(out.params)
    }

    fn hyper(&self) -> StepHyper {
        StepHyper { lr: self.hyper.alpha, beta1: self.hyper.beta1, beta3: self.hyper.beta3 }
    }

    fn set_hyper(&mut self, h: StepHyper) {
        self.hyper.alpha = h.lr;
        self.hyper.beta1 = h.beta1;
        self.hyper.beta3 = h.beta3;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn der2nd_arithmetic() {
        let (d, zeroed) = estimate_der2nd(&[0.0], &[0.05], &[0.01], 1e-8).unwrap();
        assert!((d[0] + 4.999995000005).abs() < 1e-9, "{}", d[0]);
        assert_eq!(zeroed, 0);
        let (d, _) = estimate_der2nd(&[0.3, -0.1], &[0.3, -0.1], &[0.01, 0.2], 1e-8).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn der2nd_cancelling_denominator_is_zeroed_and_counted() {
        let (d, zeroed) = estimate_der2nd(&[1.0, 0.0], &[0.5, 0.0], &[-1e-8, -1e-8], 1e-8).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
        assert_eq!(zeroed, 2);
    }

    #[test]
    fn bias_correction() {
        assert!((bias_correct(&[0.05], 0.95, 1).unwrap()[0] - 1.0).abs() < 1e-12);
        assert!((bias_correct(&[0.0975], 0.95, 2).unwrap()[0] - 1.0).abs() < 1e-12);
        assert_eq!(bias_correct(&[0.3, -2.0], 0.0, 7).unwrap().as_slice(), &[0.3, -2.0]);
        assert!(bias_correct(&[1.0], 0.9, 0).is_err());
        assert!(bias_correct(&[1.0], 1.0, 3).is_err());
    }

    #[test]
    fn clipping() {
        assert_eq!(clip_curvature(&[-5.0, 0.001, 0.02], 0.01).unwrap().as_slice(), &[5.0, 0.01, 0.02]);
        assert_eq!(clip_curvature(&[0.0; 3], 0.01).unwrap().as_slice(), &[0.01; 3]);
        assert!(clip_curvature(&[1.0], 0.0).is_err());
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut state = SaloState::new(2);
        state.hess = ParamVector::zeros(2);
        let out = salo_step(&pv(&[0.7, -0.2]), &pv(&[0.0, 0.0]), &state, &SaloHyper::default()).unwrap();
        assert_eq!(out.params.as_slice(), &[0.7, -0.2]);
        assert_eq!(out.curvature.as_slice(), &[0.01, 0.01]);
        assert_eq!(out.update.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn saturated_updates_hit_the_cap_exactly() {
        let h = SaloHyper { alpha: 10.0, step_cap: 1e-3, ..SaloHyper::default() };
        let mut state = SaloState::new(3);
        state.hess = ParamVector::zeros(3);
        state.prev_grad = pv(&[0.05, -0.05, 0.1]);
        let out = salo_step(&pv(&[0.0; 3]), &pv(&[1.0, -1.0, 2.0]), &state, &h).unwrap();
        assert!(out.curvature.iter().all(|&c| c == h.hess_floor));
        assert!(out.update.iter().all(|u| u.abs() == 1e-3), "{:?}", out.update);
    }

    #[test]
    fn delta_w_records_applied_change() {
        let out = salo_step(&pv(&[0.5]), &pv(&[0.8]), &SaloState::new(1), &SaloHyper::default()).unwrap();
        assert_eq!(out.state.delta_w[0], -out.update[0]);
        assert_eq!(out.state.prev_grad, out.state.m);
        assert_eq!(out.state.t, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = SaloState::new(2);
        let h = SaloHyper::default();
        assert!(salo_step(&pv(&[0.0, 0.0]), &pv(&[1.0]), &s, &h).is_err());
        assert!(salo_step(&pv(&[0.0]), &pv(&[1.0]), &s, &h).is_err());
        let bad_g = ParamVector::from_vec_unchecked(vec![f64::INFINITY, 0.0]);
        assert!(salo_step(&pv(&[0.0, 0.0]), &bad_g, &s, &h).is_err());
        let h = SaloHyper { hess_floor: 0.0, ..SaloHyper::default() };
        assert!(salo_step(&pv(&[0.0, 0.0]), &pv(&[1.0, 1.0]), &s, &h).is_err());
    }
}
