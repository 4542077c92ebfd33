use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in a family's internal (unconstrained) latent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    values: Vec<f64>,
}

impl LatentPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("latent point must have at least one dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("latent point components must be finite"));
        }
        Ok(LatentPoint { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A single scalar observation plus an optional known per-observation
/// constant (`sigma` for eight-schools, trial count for rats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aux: Option<f64>,
}

impl Observation {
    pub fn plain(value: f64) -> Self {
        Observation { value, aux: None }
    }

    pub fn with_aux(value: f64, aux: f64) -> Self {
        Observation { value, aux: Some(aux) }
    }
}

/// Ordered, nonempty list of observations for one model (or one group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    observations: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::data("observation set must be nonempty"));
        }
        if observations.iter().any(|o| !o.value.is_finite()) {
            return Err(Error::data("observation values must be finite"));
        }
        Ok(ObservationSet { observations })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        ObservationSet::new(values.iter().map(|&v| Observation::plain(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced nonempty at construction
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.observations.iter()
    }

    pub fn get(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.observations
    }
}

/// K* nonempty groups with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    groups: Vec<ObservationSet>,
    labels: Vec<String>,
}

impl GroupedData {
    pub fn new(groups: Vec<ObservationSet>, labels: Vec<String>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::data("grouped data must have at least one group"));
        }
        if labels.len() != groups.len() {
            return Err(Error::usage("one label per group required"));
        }
        Ok(GroupedData { groups, labels })
    }

    pub fn unlabeled(groups: Vec<ObservationSet>) -> Result<Self> {
        let labels = (0..groups.len()).map(|k| k.to_string()).collect();
        GroupedData::new(groups, labels)
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[ObservationSet] {
        &self.groups
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// All groups except `held_out`, preserving order.
    pub fn leave_one_out(&self, held_out: usize) -> Result<(GroupedData, ObservationSet)> {
        if held_out >= self.groups.len() {
            return Err(Error::usage(format!("group index {held_out} out of range")));
        }
        if self.groups.len() < 2 {
            return Err(Error::usage("leave-one-out requires at least two groups"));
        }
        let mut groups = Vec::with_capacity(self.groups.len() - 1);
        let mut labels = Vec::with_capacity(self.groups.len() - 1);
        for (k, (g, l)) in self.groups.iter().zip(&self.labels).enumerate() {
            if k != held_out {
                groups.push(g.clone());
                labels.push(l.clone());
            }
        }
        Ok((GroupedData::new(groups, labels)?, self.groups[held_out].clone()))
    }
}

/// A draw of a group-level parameter (nu in eight-schools, eta in rats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLatent {
    pub values: Vec<f64>,
}

impl GroupLatent {
    pub fn new(values: Vec<f64>) -> Self {
        GroupLatent { values }
    }

    pub fn scalar(v: f64) -> Self {
        GroupLatent { values: vec![v] }
    }
}

/// Input data for either structural shape.
#[derive(Debug, Clone)]
pub enum DataSet {
    Flat(ObservationSet),
    Grouped(GroupedData),
}

impl DataSet {
    pub fn as_flat(&self) -> Result<&ObservationSet> {
        match self {
            DataSet::Flat(o) => Ok(o),
            DataSet::Grouped(_) => Err(Error::usage("expected flat data, got grouped")),
        }
    }

    pub fn as_grouped(&self) -> Result<&GroupedData> {
        match self {
            DataSet::Grouped(g) => Ok(g),
            DataSet::Flat(_) => Err(Error::usage("expected grouped data, got flat")),
        }
    }

    pub fn n_observations(&self) -> usize {
        match self {
            DataSet::Flat(o) => o.len(),
            DataSet::Grouped(g) => g.groups().iter().map(|o| o.len()).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_point_rejects_non_finite() {
        assert!(LatentPoint::new(vec![f64::NAN]).is_err());
        assert!(LatentPoint::new(vec![f64::INFINITY, 0.0]).is_err());
        assert!(LatentPoint::new(vec![]).is_err());
    }

    #[test]
    fn observation_set_rejects_empty() {
        assert!(ObservationSet::new(vec![]).is_err());
        assert!(ObservationSet::from_values(&[1.0]).is_ok());
    }

    #[test]
    fn leave_one_out_splits() {
        let groups = vec![
            ObservationSet::from_values(&[1.0]).unwrap(),
            ObservationSet::from_values(&[2.0]).unwrap(),
            ObservationSet::from_values(&[3.0]).unwrap(),
        ];
        let data = GroupedData::unlabeled(groups).unwrap();
        let (rest, held) = data.leave_one_out(1).unwrap();
        assert_eq!(rest.n_groups(), 2);
        assert_eq!(held.get(0).value, 2.0);
        assert_eq!(rest.labels(), &["0".to_string(), "2".to_string()]);
    }
}
