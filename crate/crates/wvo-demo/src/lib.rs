//! Interactive browser demo of posterior reconstruction with weighted
//! virtual observations. Exposes three operations to JavaScript, each
//! returning a JSON payload of posterior curves and weights for plotting.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wvo_core::diagnostics::{recondition, uniform_weights, ReconditionedTarget};
use wvo_core::math::{beta_logpdf, ln_beta_fn};
use wvo_core::model::{family_by_name, DataSet, Observation, ObservationSet};
use wvo_core::objective::{build_multi_context, build_single_context, WeightAssignment};
use wvo_core::optimizer::{optimize_multi, optimize_single, OptimizerConfig};
use wvo_core::rng::{seeded, sub_seed};
use wvo_core::sampler::{
    estimate_group_logliks, run_mh, run_mh_target, PosteriorSamples, SamplerConfig,
};
use wvo_core::virtualobs::{draw_virtual_groups, draw_virtual_obs_single};

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize)]
struct BetaBernoulliOut {
    original: Curve,
    unweighted: Curve,
    reconstructed: Curve,
    virtual_values: Vec<f64>,
    weights: Vec<f64>,
    weighted_successes: f64,
    weighted_failures: f64,
    original_successes: f64,
    original_failures: f64,
    objective: f64,
}

fn beta_curve(alpha: f64, beta: f64, n: usize) -> Curve {
    let ln_b = ln_beta_fn(alpha, beta);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        x.push(t);
        let _ = ln_b;
        y.push(beta_logpdf(t, alpha, beta).exp());
    }
    Curve { x, y }
}

fn err_json(msg: &str) -> String {
    format!("{{\"error\":{}}}", serde_json::to_string(msg).unwrap_or_default())
}

/// Beta-Bernoulli reconstruction: `bits` is a string of 0s and 1s, e.g.
/// "111010011101". Uses exact conjugate posterior samples, so everything
/// is fast enough to rerun on every UI change.
#[wasm_bindgen]
pub fn beta_bernoulli_demo(bits: &str, n_virtual: usize, seed: u32) -> String {
    let values: Vec<f64> = bits
        .chars()
        .filter_map(|c| match c {
            '0' => Some(0.0),
            '1' => Some(1.0),
            _ => None,
        })
        .collect();
    if values.len() < 2 {
        return err_json("need at least two observations (characters 0/1)");
    }
    if n_virtual == 0 || n_virtual > 200 {
        return err_json("virtual observation count must be between 1 and 200");
    }
    let successes: f64 = values.iter().sum();
    let failures = values.len() as f64 - successes;
    let (a_post, b_post) = (1.0 + successes, 1.0 + failures);

    // exact posterior samples by inverse-free rejection-free construction:
    // theta = Gamma(a)/(Gamma(a)+Gamma(b)) via two gamma draws
    let mut rng = seeded(seed as u64);
    let s = 4000;
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            use rand_distr::{Distribution, Gamma};
            let ga: f64 = Gamma::new(a_post, 1.0).unwrap().sample(&mut rng);
            let gb: f64 = Gamma::new(b_post, 1.0).unwrap().sample(&mut rng);
            vec![(ga / (ga + gb)).clamp(1e-9, 1.0 - 1e-9)]
        })
        .collect();
    let samples = match PosteriorSamples::from_rows(vec!["theta".into()], rows) {
        Ok(s) => s,
        Err(e) => return err_json(&e.to_string()),
    };

    let family = family_by_name("beta-bernoulli").expect("registered");
    let originals = ObservationSet::from_values(&values).expect("nonempty");
    let run = (|| -> wvo_core::Result<BetaBernoulliOut> {
        let virtuals =
            draw_virtual_obs_single(family.as_ref(), &samples, n_virtual, seed as u64 + 1)?;
        let vset = virtuals.to_observation_set()?;
        let ctx = build_single_context(family.as_ref(), &samples, &originals, &vset)?;
        let cfg = OptimizerConfig { max_iters: 1500, restarts: 3, ..Default::default() };
        let result = optimize_single(&ctx, &cfg)?;
        let weights = match &result.weights {
            WeightAssignment::Single { weights } => weights.clone(),
            _ => unreachable!(),
        };
        let virtual_values: Vec<f64> = vset.iter().map(|o| o.value).collect();
        let ws: f64 = weights.iter().zip(&virtual_values).map(|(w, y)| w * y).sum();
        let wf: f64 = weights.iter().zip(&virtual_values).map(|(w, y)| w * (1.0 - y)).sum();
        let vs: f64 = virtual_values.iter().sum();
        let vf = virtual_values.len() as f64 - vs;
        Ok(BetaBernoulliOut {
            original: beta_curve(a_post, b_post, 240),
            unweighted: beta_curve(
                1.0 + vs * values.len() as f64 / n_virtual as f64,
                1.0 + vf * values.len() as f64 / n_virtual as f64,
                240,
            ),
            reconstructed: beta_curve(1.0 + ws, 1.0 + wf, 240),
            virtual_values,
            weights,
            weighted_successes: ws,
            weighted_failures: wf,
            original_successes: successes,
            original_failures: failures,
            objective: result.objective.total,
        })
    })();
    match run {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(&e.to_string())),
        Err(e) => err_json(&e.to_string()),
    }
}

#[derive(Serialize)]
struct MarginalSet {
    name: String,
    original: Curve,
    unweighted: Curve,
    reconstructed: Curve,
}

#[derive(Serialize)]
struct PipelineOut {
    marginals: Vec<MarginalSet>,
    virtual_values: Vec<f64>,
    weights: Vec<f64>,
    objective: f64,
    converged: bool,
}

/// Gaussian KDE on a fixed grid, Silverman bandwidth.
fn kde_curve(samples: &[f64], lo: f64, hi: f64, n: usize) -> Curve {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let bw = (1.06 * sd * m.powf(-0.2)).max(1e-6);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let g = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mut acc = 0.0;
        for &s in samples {
            let z = (g - s) / bw;
            acc += (-0.5 * z * z).exp();
        }
        x.push(g);
        y.push(acc / (m * bw * (2.0 * std::f64::consts::PI).sqrt()));
    }
    Curve { x, y }
}

fn marginal_sets(
    names: &[String],
    original: &PosteriorSamples,
    unweighted: &PosteriorSamples,
    reconstructed: &PosteriorSamples,
) -> Vec<MarginalSet> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let o = original.column(j);
            let u = unweighted.column(j);
            let r = reconstructed.column(j);
            let lo = o
                .iter()
                .chain(&u)
                .chain(&r)
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let hi = o
                .iter()
                .chain(&u)
                .chain(&r)
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.05 * (hi - lo);
            MarginalSet {
                name: name.clone(),
                original: kde_curve(&o, lo - pad, hi + pad, 200),
                unweighted: kde_curve(&u, lo - pad, hi + pad, 200),
                reconstructed: kde_curve(&r, lo - pad, hi + pad, 200),
            }
        })
        .collect()
}

/// Normal model with unknown mean and scale: full pipeline on a
/// comma-separated list of observations.
#[wasm_bindgen]
pub fn normal_demo(obs_csv: &str, n_virtual: usize, seed: u32) -> String {
    let values: Vec<f64> = obs_csv
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse::<f64>().ok())
        .collect();
    if values.len() < 3 {
        return err_json("need at least three numeric observations");
    }
    if n_virtual == 0 || n_virtual > 100 {
        return err_json("virtual observation count must be between 1 and 100");
    }

    let family = family_by_name("normal-noninformative").expect("registered");
    let run = (|| -> wvo_core::Result<PipelineOut> {
        let originals = ObservationSet::from_values(&values)?;
        let data = DataSet::Flat(originals.clone());
        let scfg = SamplerConfig {
            n_samples: 2500,
            warmup: 1000,
            thin: 8,
            seed: seed as u64,
            ..Default::default()
        };
        let samples = run_mh(family.as_ref(), &data, &scfg)?;

        let virtuals = draw_virtual_obs_single(
            family.as_ref(),
            &samples,
            n_virtual,
            sub_seed(seed as u64, &[10]),
        )?;
        let vset = virtuals.to_observation_set()?;
        let ctx = build_single_context(family.as_ref(), &samples, &originals, &vset)?;
        let ocfg = OptimizerConfig { max_iters: 1200, restarts: 2, ..Default::default() };
        let result = optimize_single(&ctx, &ocfg)?;

        let model = recondition(family.as_ref(), &virtuals, result.weights.clone())?;
        let mut rcfg = scfg.clone();
        rcfg.seed = sub_seed(seed as u64, &[20]);
        let reconstructed =
            run_mh_target(&ReconditionedTarget::new(&model), &rcfg)?.to_natural(family.as_ref())?;

        let control = recondition(
            family.as_ref(),
            &virtuals,
            uniform_weights(&virtuals, originals.len() as f64),
        )?;
        let mut ccfg = scfg.clone();
        ccfg.seed = sub_seed(seed as u64, &[21]);
        let unweighted =
            run_mh_target(&ReconditionedTarget::new(&control), &ccfg)?.to_natural(family.as_ref())?;

        let original = samples.to_natural(family.as_ref())?;
        let weights = match &result.weights {
            WeightAssignment::Single { weights } => weights.clone(),
            _ => unreachable!(),
        };
        Ok(PipelineOut {
            marginals: marginal_sets(original.names(), &original, &unweighted, &reconstructed),
            virtual_values: vset.iter().map(|o| o.value).collect(),
            weights,
            objective: result.objective.total,
            converged: result.converged,
        })
    })();
    match run {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(&e.to_string())),
        Err(e) => err_json(&e.to_string()),
    }
}

/// Eight-schools study bundled with the crate: multi-level reconstruction
/// with M̂ virtual group parameters per virtual group.
#[wasm_bindgen]
pub fn eight_schools_demo(m_virtual: usize, t_draws: usize, seed: u32) -> String {
    if m_virtual == 0 || m_virtual > 60 {
        return err_json("virtual group size must be between 1 and 60");
    }
    if t_draws == 0 || t_draws > 500 {
        return err_json("forward draw count must be between 1 and 500");
    }

    let family = family_by_name("eight-schools").expect("registered");
    let run = (|| -> wvo_core::Result<PipelineOut> {
        let csv = include_str!("../../../data/eight_schools.csv");
        let mut groups = Vec::new();
        let mut labels = Vec::new();
        for line in csv.lines().skip(1) {
            let mut parts = line.split(',');
            let label = parts.next().unwrap_or("").to_string();
            let y: f64 = parts.next().unwrap_or("0").trim().parse().unwrap_or(0.0);
            let sigma: f64 = parts.next().unwrap_or("1").trim().parse().unwrap_or(1.0);
            groups.push(ObservationSet::new(vec![Observation::with_aux(y, sigma)])?);
            labels.push(label);
        }
        let grouped = wvo_core::model::GroupedData::new(groups, labels)?;
        let data = DataSet::Grouped(grouped.clone());

        let scfg = SamplerConfig {
            n_samples: 2000,
            warmup: 1500,
            thin: 10,
            seed: seed as u64,
            ..Default::default()
        };
        let samples = run_mh(family.as_ref(), &data, &scfg)?;
        let table = estimate_group_logliks(
            family.as_ref(),
            &grouped,
            &samples,
            t_draws,
            sub_seed(seed as u64, &[1]),
        )?;
        let virtuals = draw_virtual_groups(
            family.as_ref(),
            &samples,
            grouped.n_groups(),
            m_virtual,
            sub_seed(seed as u64, &[10]),
        )?;
        let ctx = build_multi_context(family.as_ref(), &samples, &table, &virtuals)?;
        let ocfg = OptimizerConfig {
            max_iters: 1200,
            restarts: 1,
            pin_group_weights: true,
            ..Default::default()
        };
        let result = optimize_multi(&ctx, &ocfg)?;

        let model = recondition(family.as_ref(), &virtuals, result.weights.clone())?;
        let mut rcfg = scfg.clone();
        rcfg.seed = sub_seed(seed as u64, &[20]);
        let reconstructed =
            run_mh_target(&ReconditionedTarget::new(&model), &rcfg)?.to_natural(family.as_ref())?;

        let control = recondition(
            family.as_ref(),
            &virtuals,
            uniform_weights(&virtuals, grouped.n_groups() as f64),
        )?;
        let mut ccfg = scfg.clone();
        ccfg.seed = sub_seed(seed as u64, &[21]);
        let unweighted =
            run_mh_target(&ReconditionedTarget::new(&control), &ccfg)?.to_natural(family.as_ref())?;

        let original = samples.to_natural(family.as_ref())?;
        let (flat_values, flat_weights) = match (&virtuals, &result.weights) {
            (
                wvo_core::virtualobs::VirtualObservationSet::Multi { groups, .. },
                WeightAssignment::Multi { group_weights, within_weights },
            ) => {
                let mut values = Vec::new();
                let mut ws = Vec::new();
                for ((g, v), w) in groups.iter().zip(group_weights).zip(within_weights) {
                    for (z, wi) in g.iter().zip(w) {
                        values.push(z.values[0]);
                        ws.push(v * wi);
                    }
                }
                (values, ws)
            }
            _ => unreachable!(),
        };
        Ok(PipelineOut {
            marginals: marginal_sets(original.names(), &original, &unweighted, &reconstructed),
            virtual_values: flat_values,
            weights: flat_weights,
            objective: result.objective.total,
            converged: result.converged,
        })
    })();
    match run {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(&e.to_string())),
        Err(e) => err_json(&e.to_string()),
    }
}
