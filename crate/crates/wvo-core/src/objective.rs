//! Monte Carlo objectives over precomputed log-likelihood contexts.
//!
//! A context captures everything the objectives need — the virtual-value
//! log densities per posterior sample and the per-sample baseline
//! log p(y*|x*_s) — so weight optimization never touches the model again.
//!
//! All weighted reductions over virtual values run in a canonical order
//! (products sorted before summation), which makes every objective exactly
//! invariant under permuting virtual observations together with their
//! weights, and makes the identity configuration (ŷ = y*, unit weights)
//! cancel bit-exactly against the baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{logsumexp_unchecked, softmax};
use crate::model::{ModelFamily, ObservationSet};
use crate::sampler::{GroupLikTable, PosteriorSamples};
use crate::virtualobs::VirtualObservationSet;

/// Dense row-major matrix of log densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Mat {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::usage("matrix must be nonempty"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::usage("ragged matrix rows"));
            }
            for &v in row {
                if v.is_nan() {
                    return Err(Error::usage("NaN entry in log-likelihood matrix"));
                }
                data.push(v);
            }
        }
        Ok(Mat { data, rows: rows.len(), cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                out[c] += v;
            }
        }
        out
    }
}

/// Sum of w_i * v_i in canonical (sorted) order. Zero weights contribute
/// exactly zero even against -inf values.
fn canonical_weighted_sum(buf: &mut Vec<f64>, weights: &[f64], values: &[f64]) -> f64 {
    buf.clear();
    for (&w, &v) in weights.iter().zip(values) {
        if w != 0.0 {
            buf.push(w * v);
        }
    }
    if buf.is_empty() {
        return 0.0;
    }
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

/// Canonical sum of plain values (unit weights).
fn canonical_sum(buf: &mut Vec<f64>, values: &[f64]) -> f64 {
    buf.clear();
    buf.extend_from_slice(values);
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

/// Objective value with its two terms kept separate: `fit` is the average
/// weighted log probability, `penalty` the log-sum-exp term that stops the
/// weighted set from dominating the original observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub fit: f64,
    pub penalty: f64,
}

impl ObjectiveValue {
    fn new(fit: f64, penalty: f64) -> Self {
        ObjectiveValue { total: fit - penalty, fit, penalty }
    }
}

/// Precomputed single-level context: L[s,i] = log p(ŷ_i | x*_s) and
/// base[s] = Σ_i log p(y*_i | x*_s); the weight budget is N*.
#[derive(Debug, Clone)]
pub struct SingleLevelContext {
    pub l: Mat,
    pub base: Vec<f64>,
    pub budget: f64,
    col_sums: Vec<f64>,
}

impl SingleLevelContext {
    pub fn new(l: Mat, base: Vec<f64>, budget: f64) -> Result<Self> {
        if base.len() != l.rows() {
            return Err(Error::usage("base length must equal the sample count"));
        }
        if base.iter().any(|v| v.is_nan()) {
            return Err(Error::usage("NaN in context base"));
        }
        if !(budget > 0.0) {
            return Err(Error::usage("budget must be positive"));
        }
        let col_sums = l.col_sums();
        Ok(SingleLevelContext { l, base, budget, col_sums })
    }

    pub fn n_samples(&self) -> usize {
        self.l.rows()
    }

    pub fn n_virtual(&self) -> usize {
        self.l.cols()
    }
}

/// Precomputed multi-level context: Lz_k[s,i] = log p(ẑ_ki | x*_s) and
/// base[s] = Σ_k log p̂(y*_k | x*_s); the group-weight budget is K*.
#[derive(Debug, Clone)]
pub struct MultiLevelContext {
    pub lz: Vec<Mat>,
    pub base: Vec<f64>,
    pub group_budget: f64,
    /// Per group: row maxima of Lz and exp(Lz - rowmax), so mixture terms
    /// reduce to dot products.
    row_max: Vec<Vec<f64>>,
    exp_shifted: Vec<Mat>,
}

impl MultiLevelContext {
    pub fn new(lz: Vec<Mat>, base: Vec<f64>, group_budget: f64) -> Result<Self> {
        if lz.is_empty() {
            return Err(Error::usage("multi-level context needs at least one group"));
        }
        let s = lz[0].rows();
        let m = lz[0].cols();
        for mat in &lz {
            if mat.rows() != s || mat.cols() != m {
                return Err(Error::usage("all group matrices must share one shape"));
            }
        }
        if base.len() != s {
            return Err(Error::usage("base length must equal the sample count"));
        }
        if base.iter().any(|v| v.is_nan()) {
            return Err(Error::usage("NaN in context base"));
        }
        if !(group_budget > 0.0) {
            return Err(Error::usage("group budget must be positive"));
        }

        let mut row_max = Vec::with_capacity(lz.len());
        let mut exp_shifted = Vec::with_capacity(lz.len());
        for mat in &lz {
            let mut maxima = Vec::with_capacity(s);
            let mut shifted = Vec::with_capacity(s);
            for r in 0..s {
                let row = mat.row(r);
                let rmax = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                maxima.push(rmax);
                if rmax == f64::NEG_INFINITY {
                    shifted.push(vec![0.0; m]);
                } else {
                    shifted.push(row.iter().map(|&v| (v - rmax).exp()).collect());
                }
            }
            row_max.push(maxima);
            exp_shifted.push(Mat::from_rows(shifted)?);
        }
        Ok(MultiLevelContext { lz, base, group_budget, row_max, exp_shifted })
    }

    pub fn n_samples(&self) -> usize {
        self.lz[0].rows()
    }

    pub fn n_groups(&self) -> usize {
        self.lz.len()
    }

    pub fn m_virtual(&self) -> usize {
        self.lz[0].cols()
    }

    /// log Σ_i w_i exp(Lz_k[s,i]) through the row-max shift.
    fn mixture_logpdf(&self, buf: &mut Vec<f64>, k: usize, s: usize, w: &[f64]) -> f64 {
        let rmax = self.row_max[k][s];
        if rmax == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let dot = canonical_weighted_sum(buf, w, self.exp_shifted[k].row(s));
        if dot <= 0.0 {
            f64::NEG_INFINITY
        } else {
            rmax + dot.ln()
        }
    }
}

/// Weight set for either structural shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightAssignment {
    /// w on the N*-scaled simplex.
    Single { weights: Vec<f64> },
    /// v on the K*-scaled simplex, each w_k on the unit simplex.
    Multi { group_weights: Vec<f64>, within_weights: Vec<Vec<f64>> },
}

impl WeightAssignment {
    pub fn validate(&self, budget: f64, tol: f64) -> Result<()> {
        match self {
            WeightAssignment::Single { weights } => {
                check_simplex(weights, budget, tol)?;
            }
            WeightAssignment::Multi { group_weights, within_weights } => {
                check_simplex(group_weights, budget, tol)?;
                for w in within_weights {
                    check_simplex(w, 1.0, tol)?;
                }
            }
        }
        Ok(())
    }
}

fn check_simplex(w: &[f64], budget: f64, tol: f64) -> Result<()> {
    if w.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::usage("weights must be nonnegative"));
    }
    let sum: f64 = w.iter().sum();
    if (sum - budget).abs() > tol * budget.abs().max(1.0) {
        return Err(Error::usage(format!("weights sum to {sum}, expected {budget}")));
    }
    Ok(())
}

fn check_weights_finite(w: &[f64]) -> Result<()> {
    if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::usage("weights must be finite and nonnegative"));
    }
    Ok(())
}

/// Builds the single-level context from a family, posterior samples, the
/// original observations, and the candidate virtual observations.
pub fn build_single_context(
    family: &dyn ModelFamily,
    samples: &PosteriorSamples,
    originals: &ObservationSet,
    virtuals: &ObservationSet,
) -> Result<SingleLevelContext> {
    if family.is_multi_level() {
        return Err(Error::usage(format!(
            "{} is multi-level; build a multi-level context instead",
            family.name()
        )));
    }
    if samples.dim() != family.latent_dim() {
        return Err(Error::usage("sample dimension does not match family"));
    }
    for y in virtuals.iter() {
        family.validate_observation(y)?;
    }

    let s = samples.n_samples();
    let mut buf = Vec::new();
    let mut l_rows = Vec::with_capacity(s);
    let mut base = Vec::with_capacity(s);
    for si in 0..s {
        let x = samples.latent_point(si);
        let row: Vec<f64> = virtuals.iter().map(|y| family.obs_logpdf(y, &x)).collect();
        l_rows.push(row);
        let lls: Vec<f64> = originals.iter().map(|y| family.obs_logpdf(y, &x)).collect();
        base.push(canonical_sum(&mut buf, &lls));
    }
    SingleLevelContext::new(Mat::from_rows(l_rows)?, base, originals.len() as f64)
}

/// Builds the multi-level context from virtual group parameters and the
/// precomputed group marginal likelihood table.
pub fn build_multi_context(
    family: &dyn ModelFamily,
    samples: &PosteriorSamples,
    table: &GroupLikTable,
    virtuals: &VirtualObservationSet,
) -> Result<MultiLevelContext> {
    if !family.is_multi_level() {
        return Err(Error::usage(format!(
            "{} is single-level; build a single-level context instead",
            family.name()
        )));
    }
    if samples.dim() != family.latent_dim() {
        return Err(Error::usage("sample dimension does not match family"));
    }
    if table.n_samples() != samples.n_samples() {
        return Err(Error::usage("group table rows must match the sample count"));
    }
    let groups = match virtuals {
        VirtualObservationSet::Multi { groups, .. } => groups,
        VirtualObservationSet::Single { .. } => {
            return Err(Error::usage("expected multi-level virtual observations"))
        }
    };

    let s = samples.n_samples();
    let mut buf = Vec::new();
    let mut lz = Vec::with_capacity(groups.len());
    for group in groups {
        let mut rows = Vec::with_capacity(s);
        for si in 0..s {
            let x = samples.latent_point(si);
            rows.push(group.iter().map(|z| family.group_logpdf(z, &x)).collect());
        }
        lz.push(Mat::from_rows(rows)?);
    }
    let base: Vec<f64> = (0..s).map(|si| canonical_sum(&mut buf, table.row(si))).collect();
    MultiLevelContext::new(lz, base, table.n_groups() as f64)
}

// ---------------------------------------------------------------------------
// single-level objective
// ---------------------------------------------------------------------------

/// (1/S) Σ_s Σ_i w_i L[s,i] - log Σ_s exp(Σ_i w_i L[s,i] - base[s])
pub fn objective_single(ctx: &SingleLevelContext, w: &[f64]) -> Result<ObjectiveValue> {
    Ok(eval_single(ctx, w, false)?.0)
}

/// Analytic gradient: ∂/∂w_i = (1/S) Σ_s L[s,i] - Σ_s ρ_s L[s,i] with
/// ρ = softmax_s(Σ_i w_i L[s,i] - base[s]).
pub fn grad_single(ctx: &SingleLevelContext, w: &[f64]) -> Result<Vec<f64>> {
    Ok(eval_single(ctx, w, true)?.1.expect("gradient requested"))
}

pub fn eval_grad_single(
    ctx: &SingleLevelContext,
    w: &[f64],
) -> Result<(ObjectiveValue, Vec<f64>)> {
    let (value, grad) = eval_single(ctx, w, true)?;
    Ok((value, grad.expect("gradient requested")))
}

fn eval_single(
    ctx: &SingleLevelContext,
    w: &[f64],
    with_grad: bool,
) -> Result<(ObjectiveValue, Option<Vec<f64>>)> {
    if w.len() != ctx.n_virtual() {
        return Err(Error::usage(format!(
            "weight vector has length {}, context expects {}",
            w.len(),
            ctx.n_virtual()
        )));
    }
    check_weights_finite(w)?;

    let s = ctx.n_samples();
    let s_f = s as f64;
    let mut buf = Vec::with_capacity(w.len());

    let fit = canonical_weighted_sum(&mut buf, w, &ctx.col_sums) / s_f;
    let mut shifted: Vec<f64> = Vec::with_capacity(s);
    for si in 0..s {
        let row_dot = canonical_weighted_sum(&mut buf, w, ctx.l.row(si));
        shifted.push(row_dot - ctx.base[si]);
    }
    let penalty = logsumexp_unchecked(&shifted);
    if penalty == f64::NEG_INFINITY {
        return Err(Error::DegenerateContext(
            "all posterior samples have -inf shifted log likelihood".into(),
        ));
    }
    let value = ObjectiveValue::new(fit, penalty);

    if !with_grad {
        return Ok((value, None));
    }

    let rho = softmax(&shifted);
    let mut grad = vec![0.0; w.len()];
    for (i, g) in grad.iter_mut().enumerate() {
        *g = ctx.col_sums[i] / s_f;
    }
    for si in 0..s {
        let r = rho[si];
        if r == 0.0 {
            continue;
        }
        for (i, &l) in ctx.l.row(si).iter().enumerate() {
            grad[i] -= r * l;
        }
    }
    Ok((value, Some(grad)))
}

// ---------------------------------------------------------------------------
// multi-level K = 1 objective
// ---------------------------------------------------------------------------

/// (1/S) Σ_s log Σ_i w_i p(ẑ_i|x*_s) - log Σ_s exp(log Σ_i w_i p(ẑ_i|x*_s) - base[s])
pub fn objective_k1(ctx: &MultiLevelContext, w: &[f64]) -> Result<ObjectiveValue> {
    Ok(eval_k1(ctx, w, false)?.0)
}

pub fn grad_k1(ctx: &MultiLevelContext, w: &[f64]) -> Result<Vec<f64>> {
    Ok(eval_k1(ctx, w, true)?.1.expect("gradient requested"))
}

pub fn eval_grad_k1(ctx: &MultiLevelContext, w: &[f64]) -> Result<(ObjectiveValue, Vec<f64>)> {
    let (value, grad) = eval_k1(ctx, w, true)?;
    Ok((value, grad.expect("gradient requested")))
}

fn eval_k1(
    ctx: &MultiLevelContext,
    w: &[f64],
    with_grad: bool,
) -> Result<(ObjectiveValue, Option<Vec<f64>>)> {
    if ctx.n_groups() != 1 {
        return Err(Error::usage(format!(
            "K=1 objective requires a single-group context, got {} groups",
            ctx.n_groups()
        )));
    }
    if w.len() != ctx.m_virtual() {
        return Err(Error::usage("weight length must match the virtual group size"));
    }
    check_weights_finite(w)?;
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::usage("at least one mixture weight must be positive"));
    }

    let s = ctx.n_samples();
    let s_f = s as f64;
    let mut buf = Vec::with_capacity(w.len());

    let mut mixture = Vec::with_capacity(s);
    for si in 0..s {
        mixture.push(ctx.mixture_logpdf(&mut buf, 0, si, w));
    }
    let fit = mixture.iter().sum::<f64>() / s_f;
    let shifted: Vec<f64> = mixture.iter().zip(&ctx.base).map(|(m, b)| m - b).collect();
    let penalty = logsumexp_unchecked(&shifted);
    if penalty == f64::NEG_INFINITY {
        return Err(Error::DegenerateContext(
            "all posterior samples have -inf shifted log likelihood".into(),
        ));
    }
    let value = ObjectiveValue::new(fit, penalty);

    if !with_grad {
        return Ok((value, None));
    }

    let rho = softmax(&shifted);
    let mut grad = vec![0.0; w.len()];
    for si in 0..s {
        let coeff = 1.0 / s_f - rho[si];
        if coeff == 0.0 {
            continue;
        }
        // d m(s) / d w_i = exp(Lz[s,i] - m(s)) = A[s,i] / Σ_j w_j A[s,j]
        let a_row = ctx.exp_shifted[0].row(si);
        let dot = canonical_weighted_sum(&mut buf, w, a_row);
        if dot <= 0.0 {
            continue;
        }
        for (i, &a) in a_row.iter().enumerate() {
            grad[i] += coeff * a / dot;
        }
    }
    Ok((value, Some(grad)))
}

// ---------------------------------------------------------------------------
// multi-level objective
// ---------------------------------------------------------------------------

/// (1/S) Σ_s Σ_k v_k m_k(s) - log Σ_s exp(Σ_k v_k m_k(s) - base[s]) with
/// m_k(s) = log Σ_i w_ki p(ẑ_ki|x*_s).
pub fn objective_multi(
    ctx: &MultiLevelContext,
    v: &[f64],
    w: &[Vec<f64>],
) -> Result<ObjectiveValue> {
    Ok(eval_multi(ctx, v, w, false)?.0)
}

pub fn grad_multi(
    ctx: &MultiLevelContext,
    v: &[f64],
    w: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (_, grads) = eval_multi(ctx, v, w, true)?;
    Ok(grads.expect("gradient requested"))
}

pub fn eval_grad_multi(
    ctx: &MultiLevelContext,
    v: &[f64],
    w: &[Vec<f64>],
) -> Result<(ObjectiveValue, Vec<f64>, Vec<Vec<f64>>)> {
    let (value, grads) = eval_multi(ctx, v, w, true)?;
    let (gv, gw) = grads.expect("gradient requested");
    Ok((value, gv, gw))
}

#[allow(clippy::type_complexity)]
fn eval_multi(
    ctx: &MultiLevelContext,
    v: &[f64],
    w: &[Vec<f64>],
    with_grad: bool,
) -> Result<(ObjectiveValue, Option<(Vec<f64>, Vec<Vec<f64>>)>)> {
    let kk = ctx.n_groups();
    if v.len() != kk || w.len() != kk {
        return Err(Error::usage("group weight shapes must match the context"));
    }
    check_weights_finite(v)?;
    for wk in w {
        if wk.len() != ctx.m_virtual() {
            return Err(Error::usage("within-group weight length must match the context"));
        }
        check_weights_finite(wk)?;
        if wk.iter().all(|&x| x == 0.0) {
            return Err(Error::usage("each group needs at least one positive mixture weight"));
        }
    }

    let s = ctx.n_samples();
    let s_f = s as f64;
    let mut buf = Vec::with_capacity(ctx.m_virtual().max(kk));

    // m[k][s]
    let mut mixtures: Vec<Vec<f64>> = Vec::with_capacity(kk);
    for k in 0..kk {
        let mut col = Vec::with_capacity(s);
        for si in 0..s {
            col.push(ctx.mixture_logpdf(&mut buf, k, si, &w[k]));
        }
        mixtures.push(col);
    }

    let mut t = Vec::with_capacity(s);
    let mut m_row = vec![0.0; kk];
    for si in 0..s {
        for k in 0..kk {
            m_row[k] = mixtures[k][si];
        }
        t.push(canonical_weighted_sum(&mut buf, v, &m_row));
    }
    let fit = t.iter().sum::<f64>() / s_f;
    let shifted: Vec<f64> = t.iter().zip(&ctx.base).map(|(ts, b)| ts - b).collect();
    let penalty = logsumexp_unchecked(&shifted);
    if penalty == f64::NEG_INFINITY {
        return Err(Error::DegenerateContext(
            "all posterior samples have -inf shifted log likelihood".into(),
        ));
    }
    let value = ObjectiveValue::new(fit, penalty);

    if !with_grad {
        return Ok((value, None));
    }

    let rho = softmax(&shifted);
    let mut grad_v = vec![0.0; kk];
    let mut grad_w: Vec<Vec<f64>> = (0..kk).map(|_| vec![0.0; ctx.m_virtual()]).collect();
    for si in 0..s {
        let coeff = 1.0 / s_f - rho[si];
        if coeff == 0.0 {
            continue;
        }
        for k in 0..kk {
            grad_v[k] += coeff * mixtures[k][si];
            if v[k] == 0.0 {
                continue;
            }
            let a_row = ctx.exp_shifted[k].row(si);
            let dot = canonical_weighted_sum(&mut buf, &w[k], a_row);
            if dot <= 0.0 {
                continue;
            }
            let scale = coeff * v[k] / dot;
            for (i, &a) in a_row.iter().enumerate() {
                grad_w[k][i] += scale * a;
            }
        }
    }
    Ok((value, Some((grad_v, grad_w))))
}
