//! First-order baselines (SGD with momentum, Adam, AdamW) behind the
//! [`Optimizer`] interface shared with [`crate::salo::Salo`], plus the
//! sequential training loop in [`run`].

mod run;

pub use run::{run, RunOutcome, RunStatus, TrainRecord, BLOWUP_FACTOR};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::param::{check_finite, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub eps: f64,
}

impl HyperParams {
    pub fn sgd() -> Self {
        Self { alpha: 0.01, beta1: 0.9, beta2: 0.999, weight_decay: 0.0, momentum: 0.9, eps: 1e-8 }
    }

    pub fn adam() -> Self {
        Self { alpha: 1e-3, beta1: 0.9, beta2: 0.999, weight_decay: 0.0, momentum: 0.0, eps: 1e-8 }
    }

    pub fn adamw() -> Self {
        Self { weight_decay: 0.01, ..Self::adam() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [0, 1), got {x}")))
            }
        };
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.alpha)));
        }
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("momentum", self.momentum)?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("eps must be positive"));
        }
        Ok(())
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub m: ParamVector,
    pub v: ParamVector,
    pub t: u64,
}

impl MomentState {
    pub fn new(dim: usize) -> Self {
        Self { m: ParamVector::zeros(dim), v: ParamVector::zeros(dim), t: 0 }
    }
}

fn check_step_inputs(w: &ParamVector, g: &ParamVector, state: &MomentState) -> Result<()> {
    g.ensure_dim(w.dim())?;
    state.m.ensure_dim(w.dim())?;
    state.v.ensure_dim(w.dim())?;
    check_finite("gradient", g)
}

fn finish(w: Vec<f64>) -> Result<ParamVector> {
    check_finite("updated parameters", &w)?;
    Ok(ParamVector::from_vec_unchecked(w))
}

/// Heavy-ball SGD: `m ← μ·m + g`, `w ← w − α·m`.
pub fn sgd_step(w: &ParamVector, g: &ParamVector, state: &MomentState, h: &HyperParams) -> Result<(ParamVector, MomentState)> {
    check_step_inputs(w, g, state)?;
    let m: Vec<f64> = state.m.iter().zip(g.iter()).map(|(m, g)| h.momentum * m + g).collect();
    let next: Vec<f64> = w.iter().zip(&m).map(|(w, m)| w - h.alpha * m).collect();
    check_finite("momentum", &m)?;
    let state = MomentState { m: ParamVector::from_vec_unchecked(m), v: state.v.clone(), t: state.t + 1 };
    Ok((finish(next)?, state))
}

/// Bias-corrected Adam. `decay_first` applies decoupled weight decay to `w`
/// before the moment update (AdamW).
fn adam_like(w: &ParamVector, g: &ParamVector, state: &MomentState, h: &HyperParams, decay_first: bool) -> Result<(ParamVector, MomentState)> {
    check_step_inputs(w, g, state)?;
    let t = state.t + 1;
    let c1 = 1.0 - h.beta1.powi(t as i32);
    let c2 = 1.0 - h.beta2.powi(t as i32);
    let n = w.dim();
    let (mut m, mut v, mut next) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let mi = h.beta1 * state.m[i] + (1.0 - h.beta1) * g[i];
        let vi = h.beta2 * state.v[i] + (1.0 - h.beta2) * g[i] * g[i];
        let base = if decay_first { w[i] - h.alpha * h.weight_decay * w[i] } else { w[i] };
        let m_hat = mi / c1;
        let v_hat = vi / c2;
        next.push(base - h.alpha * m_hat / (v_hat.sqrt() + h.eps));
        m.push(mi);
        v.push(vi);
    }
    check_finite("first moment", &m)?;
    check_finite("second moment", &v)?;
    let state = MomentState {
        m: ParamVector::from_vec_unchecked(m),
        v: ParamVector::from_vec_unchecked(v),
        t,
    };
    Ok((finish(next)?, state))
}

pub fn adam_step(w: &ParamVector, g: &ParamVector, state: &MomentState, h: &HyperParams) -> Result<(ParamVector, MomentState)> {
    adam_like(w, g, state, h, false)
}

pub fn adamw_step(w: &ParamVector, g: &ParamVector, state: &MomentState, h: &HyperParams) -> Result<(ParamVector, MomentState)> {
    adam_like(w, g, state, h, true)
}

/// Hyperparameters a scheduler may overwrite before a step, and that get
/// logged with every training record. Optimizers without a third moment
/// report `beta3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta3: f64,
}

/// A stateful optimizer driven by the training loop.
pub trait Optimizer: Send {
    fn kind(&self) -> OptimizerKind;

    fn step(&mut self, w: &ParamVector, g: &ParamVector) -> Result<ParamVector>;

    /// Values in effect for the next step.
    fn hyper(&self) -> StepHyper;

    /// Overwrites the scheduled hyperparameters. Each optimizer takes the
    /// fields it has: SGD the rate, Adam/AdamW the rate and `beta1`.
    fn set_hyper(&mut self, h: StepHyper);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    AdamW,
    Salo,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::AdamW, OptimizerKind::Salo];

    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::Salo => "salo",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownId { kind: "optimizer", id: s.to_string() })
    }
}

#[derive(Debug, Clone)]
pub struct Sgd {
    pub hyper: HyperParams,
    pub state: MomentState,
}

impl Sgd {
    pub fn new(dim: usize, hyper: HyperParams) -> Result<Self> {
        hyper.validate()?;
        Ok(Self { hyper, state: MomentState::new(dim) })
    }
}

impl Optimizer for Sgd {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Sgd
    }

    fn step(&mut self, w: &ParamVector, g: &ParamVector) -> Result<ParamVector> {
        let (next, state) = sgd_step(w, g, &self.state, &self.hyper)?;
        self.state = state;
        Ok(next)
    }

    fn hyper(&self) -> StepHyper {
        StepHyper { lr: self.hyper.alpha, beta1: self.hyper.momentum, beta3: 0.0 }
    }

    fn set_hyper(&mut self, h: StepHyper) {
        self.hyper.alpha = h.lr;
    }
}

/// Adam, or AdamW when `decoupled` is set.
#[derive(Debug, Clone)]
pub struct Adam {
    pub hyper: HyperParams,
    pub state: MomentState,
    decoupled: bool,
}

impl Adam {
    pub fn new(dim: usize, hyper: HyperParams) -> Result<Self> {
        hyper.validate()?;
        Ok(Self { hyper, state: MomentState::new(dim), decoupled: false })
    }

    pub fn adamw(dim: usize, hyper: HyperParams) -> Result<Self> {
        Ok(Self { decoupled: true, ..Self::new(dim, hyper)? })
    }
}

impl Optimizer for Adam {
    fn kind(&self) -> OptimizerKind {
        if self.decoupled {
            OptimizerKind::AdamW
        } else {
            OptimizerKind::Adam
        }
    }

    fn step(&mut self, w: &ParamVector, g: &ParamVector) -> Result<ParamVector> {
        let (next, state) = adam_like(w, g, &self.state, &self.hyper, self.decoupled)?;
        self.state = state;
        Ok(next)
    }

    fn hyper(&self) -> StepHyper {
        StepHyper { lr: self.hyper.alpha, beta1: self.hyper.beta1, beta3: 0.0 }
    }

    fn set_hyper(&mut self, h: StepHyper) {
        self.hyper.alpha = h.lr;
        self.hyper.beta1 = h.beta1;
    }
}
