//! Maximizes the weight objectives over scaled simplices.
//!
//! Constraints are enforced by construction: weights are a scaled softmax
//! of free parameters, so every iterate satisfies its budget exactly and
//! the search stays smooth. Ascent is Adam with fixed moment defaults; the
//! first restart starts from uniform weights (θ = 0), later restarts from
//! standard-normal θ.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::softmax;
use crate::objective::{
    eval_grad_k1, eval_grad_multi, eval_grad_single, MultiLevelContext, ObjectiveValue,
    SingleLevelContext, WeightAssignment,
};
use crate::rng::stream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub step_size: f64,
    /// Absolute objective change over a 20-iteration window that counts as
    /// converged.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Keep the multi-level group weights v pinned at their uniform budget
    /// value instead of optimizing them jointly with the mixture weights.
    ///
    /// Virtual groups are exchangeable draws, so the uniform v is the
    /// symmetric solution; at finite S the joint objective's v-gradient is
    /// dominated by the handful of posterior samples the atom mixtures
    /// cover worst and drives v onto a single group. Pinning v removes
    /// that failure mode; it only matters for K̂ > 1.
    #[serde(default)]
    pub pin_group_weights: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 5000,
            step_size: 0.05,
            tolerance: 1e-6,
            restarts: 5,
            seed: 0,
            pin_group_weights: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::usage("max_iters must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::usage("tolerance must be positive"));
        }
        if self.restarts < 1 {
            return Err(Error::usage("restarts must be at least 1"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::usage("step_size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub weights: WeightAssignment,
    pub objective: ObjectiveValue,
    /// Objective value at every iterate of the winning restart.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub best_restart: usize,
}

/// w_i = budget * exp(θ_i) / Σ_j exp(θ_j), computed with the max shift.
pub fn reparam_scaled_softmax(theta: &[f64], budget: f64) -> Vec<f64> {
    let mut w = softmax(theta);
    for wi in &mut w {
        *wi *= budget;
    }
    w
}

/// Pulls an objective gradient w.r.t. weights back through the scaled
/// softmax: dL/dθ_j = w_j (g_j - Σ_i g_i w_i / budget).
fn softmax_chain(weights: &[f64], grad_w: &[f64], budget: f64, out: &mut [f64]) {
    let mean: f64 =
        grad_w.iter().zip(weights).map(|(g, w)| g * w).sum::<f64>() / budget;
    for ((o, &w), &g) in out.iter_mut().zip(weights).zip(grad_w) {
        *o = w * (g - mean);
    }
}

trait Problem {
    fn dim(&self) -> usize;
    /// Objective value and gradient w.r.t. the free parameters θ.
    fn eval(&self, theta: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)>;
    fn weights(&self, theta: &[f64]) -> WeightAssignment;
}

struct SingleProblem<'a> {
    ctx: &'a SingleLevelContext,
}

impl Problem for SingleProblem<'_> {
    fn dim(&self) -> usize {
        self.ctx.n_virtual()
    }

    fn eval(&self, theta: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)> {
        let w = reparam_scaled_softmax(theta, self.ctx.budget);
        let (value, grad_w) = eval_grad_single(self.ctx, &w)?;
        let mut grad = vec![0.0; theta.len()];
        softmax_chain(&w, &grad_w, self.ctx.budget, &mut grad);
        Ok((value, grad))
    }

    fn weights(&self, theta: &[f64]) -> WeightAssignment {
        WeightAssignment::Single { weights: reparam_scaled_softmax(theta, self.ctx.budget) }
    }
}

struct K1Problem<'a> {
    ctx: &'a MultiLevelContext,
}

impl Problem for K1Problem<'_> {
    fn dim(&self) -> usize {
        self.ctx.m_virtual()
    }

    fn eval(&self, theta: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)> {
        let w = reparam_scaled_softmax(theta, 1.0);
        let (value, grad_w) = eval_grad_k1(self.ctx, &w)?;
        let mut grad = vec![0.0; theta.len()];
        softmax_chain(&w, &grad_w, 1.0, &mut grad);
        Ok((value, grad))
    }

    fn weights(&self, theta: &[f64]) -> WeightAssignment {
        WeightAssignment::Multi {
            group_weights: vec![1.0],
            within_weights: vec![reparam_scaled_softmax(theta, 1.0)],
        }
    }
}

struct MultiProblem<'a> {
    ctx: &'a MultiLevelContext,
    pin_v: bool,
}

impl MultiProblem<'_> {
    fn v_dim(&self) -> usize {
        if self.pin_v {
            0
        } else {
            self.ctx.n_groups()
        }
    }

    fn split(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let kk = self.ctx.n_groups();
        let m = self.ctx.m_virtual();
        let vd = self.v_dim();
        let v = if self.pin_v {
            vec![self.ctx.group_budget / kk as f64; kk]
        } else {
            reparam_scaled_softmax(&theta[..kk], self.ctx.group_budget)
        };
        let w: Vec<Vec<f64>> = (0..kk)
            .map(|k| reparam_scaled_softmax(&theta[vd + k * m..vd + (k + 1) * m], 1.0))
            .collect();
        (v, w)
    }
}

impl Problem for MultiProblem<'_> {
    fn dim(&self) -> usize {
        self.v_dim() + self.ctx.n_groups() * self.ctx.m_virtual()
    }

    fn eval(&self, theta: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)> {
        let kk = self.ctx.n_groups();
        let m = self.ctx.m_virtual();
        let vd = self.v_dim();
        let (v, w) = self.split(theta);
        let (value, grad_v, grad_w) = eval_grad_multi(self.ctx, &v, &w)?;
        let mut grad = vec![0.0; theta.len()];
        if !self.pin_v {
            softmax_chain(&v, &grad_v, self.ctx.group_budget, &mut grad[..kk]);
        }
        for k in 0..kk {
            softmax_chain(&w[k], &grad_w[k], 1.0, &mut grad[vd + k * m..vd + (k + 1) * m]);
        }
        Ok((value, grad))
    }

    fn weights(&self, theta: &[f64]) -> WeightAssignment {
        let (v, w) = self.split(theta);
        WeightAssignment::Multi { group_weights: v, within_weights: w }
    }
}

/// Maximizes the single-level objective; weights satisfy Σ w_i = N*.
pub fn optimize_single(
    ctx: &SingleLevelContext,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    run_restarts(&SingleProblem { ctx }, config)
}

/// Maximizes the K=1 mixture objective; weights satisfy Σ w_i = 1.
pub fn optimize_k1(
    ctx: &MultiLevelContext,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if ctx.n_groups() != 1 {
        return Err(Error::usage("optimize_k1 requires a single-group context"));
    }
    run_restarts(&K1Problem { ctx }, config)
}

/// Maximizes the multi-level objective; Σ v_k = K* and Σ_i w_ki = 1.
pub fn optimize_multi(
    ctx: &MultiLevelContext,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    run_restarts(&MultiProblem { ctx, pin_v: config.pin_group_weights }, config)
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const WINDOW: usize = 20;

fn run_restarts<P: Problem>(problem: &P, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let mut best: Option<OptimizationResult> = None;

    for restart in 0..config.restarts {
        let theta0 = if restart == 0 {
            vec![0.0; problem.dim()]
        } else {
            let mut rng = stream(config.seed, restart as u64);
            (0..problem.dim()).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let outcome = run_one(problem, config, theta0, restart == 0)?;
        let replace = match &best {
            None => true,
            Some(b) => outcome.objective.total > b.objective.total,
        };
        if replace {
            best = Some(OptimizationResult {
                weights: problem.weights(&outcome.best_theta),
                objective: outcome.objective,
                trace: outcome.trace,
                converged: outcome.converged,
                best_restart: restart,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

struct RestartOutcome {
    best_theta: Vec<f64>,
    objective: ObjectiveValue,
    trace: Vec<f64>,
    converged: bool,
}

fn run_one<P: Problem>(
    problem: &P,
    config: &OptimizerConfig,
    mut theta: Vec<f64>,
    is_uniform_start: bool,
) -> Result<RestartOutcome> {
    let d = theta.len();
    let mut m = vec![0.0; d];
    let mut v = vec![0.0; d];
    let mut trace = Vec::new();
    let mut best_theta = theta.clone();
    let mut best_value: Option<ObjectiveValue> = None;
    let mut converged = false;

    for t in 0..config.max_iters {
        let (value, grad) = match problem.eval(&theta) {
            Ok(pair) => pair,
            Err(e) => {
                if t == 0 && is_uniform_start {
                    return Err(e);
                }
                break; // keep the best iterate found so far
            }
        };
        if !value.total.is_finite() {
            if t == 0 && is_uniform_start {
                return Err(Error::DegenerateContext(format!(
                    "objective at uniform weights is {}",
                    value.total
                )));
            }
            break;
        }
        trace.push(value.total);
        if best_value.map_or(true, |b| value.total > b.total) {
            best_value = Some(value);
            best_theta.copy_from_slice(&theta);
        }

        let grad_inf = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad_inf == 0.0 {
            converged = true;
            break;
        }
        if t >= WINDOW && (trace[t] - trace[t - WINDOW]).abs() < config.tolerance {
            converged = true;
            break;
        }

        let b1t = 1.0 - ADAM_BETA1.powi(t as i32 + 1);
        let b2t = 1.0 - ADAM_BETA2.powi(t as i32 + 1);
        for j in 0..d {
            m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * grad[j];
            v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * grad[j] * grad[j];
            let m_hat = m[j] / b1t;
            let v_hat = v[j] / b2t;
            theta[j] += config.step_size * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    let objective = match best_value {
        Some(v) => v,
        None => {
            return Err(Error::DegenerateContext(
                "no finite objective value was reached".into(),
            ))
        }
    };
    Ok(RestartOutcome { best_theta, objective, trace, converged })
}
