//! Candidate virtual observations drawn from the posterior predictive.
//!
//! Single-level: draw a posterior sample index, then an observation from
//! the likelihood at that sample. Multi-level: draw group parameters from
//! p(z|x) at uniformly chosen posterior samples, which keeps virtual groups
//! exchangeable. Every drawn value records its source sample index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroupLatent, ModelFamily, Observation, ObservationSet};
use crate::rng::{seeded, Prng};
use crate::sampler::PosteriorSamples;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VirtualObservationSet {
    Single {
        observations: Vec<Observation>,
        /// Posterior-sample index each observation was generated from.
        source_samples: Vec<usize>,
        seed: u64,
    },
    Multi {
        /// groups[k][i] = ẑ_ki
        groups: Vec<Vec<GroupLatent>>,
        source_samples: Vec<Vec<usize>>,
        seed: u64,
    },
}

impl VirtualObservationSet {
    pub fn n_virtual(&self) -> usize {
        match self {
            VirtualObservationSet::Single { observations, .. } => observations.len(),
            VirtualObservationSet::Multi { groups, .. } => {
                groups.iter().map(|g| g.len()).sum()
            }
        }
    }

    pub fn n_groups(&self) -> usize {
        match self {
            VirtualObservationSet::Single { .. } => 0,
            VirtualObservationSet::Multi { groups, .. } => groups.len(),
        }
    }

    pub fn as_single(&self) -> Result<&[Observation]> {
        match self {
            VirtualObservationSet::Single { observations, .. } => Ok(observations),
            VirtualObservationSet::Multi { .. } => {
                Err(Error::usage("expected single-level virtual observations"))
            }
        }
    }

    pub fn as_multi(&self) -> Result<&[Vec<GroupLatent>]> {
        match self {
            VirtualObservationSet::Multi { groups, .. } => Ok(groups),
            VirtualObservationSet::Single { .. } => {
                Err(Error::usage("expected multi-level virtual observations"))
            }
        }
    }

    pub fn to_observation_set(&self) -> Result<ObservationSet> {
        ObservationSet::new(self.as_single()?.to_vec())
    }
}

/// Draws N̂ virtual observations from the single-level posterior predictive.
pub fn draw_virtual_obs_single(
    family: &dyn ModelFamily,
    samples: &PosteriorSamples,
    n_virtual: usize,
    seed: u64,
) -> Result<VirtualObservationSet> {
    if family.is_multi_level() {
        return Err(Error::usage(format!(
            "{} is multi-level; draw virtual groups instead",
            family.name()
        )));
    }
    if samples.dim() != family.latent_dim() {
        return Err(Error::usage("sample dimension does not match family"));
    }
    if n_virtual == 0 {
        return Err(Error::usage("n_virtual must be positive"));
    }
    let mut rng: Prng = seeded(seed);
    let s = samples.n_samples();
    let mut observations = Vec::with_capacity(n_virtual);
    let mut source_samples = Vec::with_capacity(n_virtual);
    for _ in 0..n_virtual {
        let idx = rng.random_range(0..s);
        let x = samples.latent_point(idx);
        observations.push(family.sample_obs(&x, &mut rng));
        source_samples.push(idx);
    }
    Ok(VirtualObservationSet::Single { observations, source_samples, seed })
}

/// Draws K̂ groups of M̂ virtual group parameters from the hyper-posterior
/// predictive p(z|x), x uniform over the posterior samples.
pub fn draw_virtual_groups(
    family: &dyn ModelFamily,
    samples: &PosteriorSamples,
    k_virtual: usize,
    m_virtual: usize,
    seed: u64,
) -> Result<VirtualObservationSet> {
    if !family.is_multi_level() {
        return Err(Error::usage(format!(
            "{} is single-level; draw virtual observations instead",
            family.name()
        )));
    }
    if samples.dim() != family.latent_dim() {
        return Err(Error::usage("sample dimension does not match family"));
    }
    if k_virtual == 0 || m_virtual == 0 {
        return Err(Error::usage("virtual set sizes must be positive"));
    }
    let mut rng: Prng = seeded(seed);
    let s = samples.n_samples();
    let mut groups = Vec::with_capacity(k_virtual);
    let mut source_samples = Vec::with_capacity(k_virtual);
    for _ in 0..k_virtual {
        let mut group = Vec::with_capacity(m_virtual);
        let mut sources = Vec::with_capacity(m_virtual);
        for _ in 0..m_virtual {
            let idx = rng.random_range(0..s);
            let x = samples.latent_point(idx);
            group.push(family.sample_group(&x, &mut rng).value);
            sources.push(idx);
        }
        groups.push(group);
        source_samples.push(sources);
    }
    Ok(VirtualObservationSet::Multi { groups, source_samples, seed })
}
