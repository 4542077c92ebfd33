//! File formats: CSV data ingestion, posterior sample and table caches,
//! context snapshots, the weighted-virtual-observation JSON interchange
//! file, and the plot-ready report tables.
//!
//! Everything written here is deterministic — no timestamps, no absolute
//! paths — so identical runs produce byte-identical artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DimComparison, PosteriorComparison};
use crate::error::{Error, Result};
use crate::loo::{FoldRecord, SweepReport};
use crate::model::{
    DataSet, GroupedData, ModelFamily, Observation, ObservationSet,
};
use crate::objective::{Mat, MultiLevelContext, ObjectiveValue, SingleLevelContext, WeightAssignment};
use crate::sampler::{GroupLikTable, PosteriorSamples};
use crate::virtualobs::VirtualObservationSet;

pub const WVO_SCHEMA_VERSION: u32 = 1;

/// Weights below this fraction of the budget are serialized as exact
/// zeros; the survivors are rescaled so budgets still hold to 1e-9.
pub const NEAR_ZERO_WEIGHT: f64 = 1e-8;

// ---------------------------------------------------------------------------
// dataset loading
// ---------------------------------------------------------------------------

/// Loads a dataset for `family` from CSV.
///
/// Columns: `y` always; `sigma` or `n` when the family needs a known
/// per-observation constant; `group` for multi-level data. A multi-level
/// family reading a file with no `group` column gets a single group.
pub fn load_dataset(family: &dyn ModelFamily, path: &Path) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(format!("bad header in {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let y_col = col("y")
        .ok_or_else(|| Error::format(format!("{} needs a 'y' column", path.display())))?;
    let aux_col = col("sigma").or_else(|| col("n"));
    let group_col = col("group");

    let mut flat = Vec::new();
    let mut group_order: Vec<String> = Vec::new();
    let mut grouped: Vec<(String, Vec<Observation>)> = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::format(format!("bad row in {}: {e}", path.display())))?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::format("short row"))?
                .parse::<f64>()
                .map_err(|e| Error::format(format!("bad number in {}: {e}", path.display())))
        };
        let value = parse(y_col)?;
        let aux = match aux_col {
            Some(i) => Some(parse(i)?),
            None => None,
        };
        let obs = Observation { value, aux };
        match group_col {
            Some(i) => {
                let label = record.get(i).unwrap_or("").to_string();
                match grouped.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, v)) => v.push(obs),
                    None => {
                        group_order.push(label.clone());
                        grouped.push((label, vec![obs]));
                    }
                }
            }
            None => flat.push(obs),
        }
    }

    let data = if group_col.is_some() {
        let mut groups = Vec::with_capacity(grouped.len());
        let mut labels = Vec::with_capacity(grouped.len());
        for (label, obs) in grouped {
            groups.push(ObservationSet::new(obs)?);
            labels.push(label);
        }
        DataSet::Grouped(GroupedData::new(groups, labels)?)
    } else if family.is_multi_level() {
        // flat file for a multi-level family: one group holding everything
        DataSet::Grouped(GroupedData::new(
            vec![ObservationSet::new(flat)?],
            vec!["0".to_string()],
        )?)
    } else {
        DataSet::Flat(ObservationSet::new(flat)?)
    };
    family.check_data(&data)?;
    Ok(data)
}

// ---------------------------------------------------------------------------
// posterior samples and group table caches
// ---------------------------------------------------------------------------

/// Header = parameter names, one row per draw, internal coordinates.
pub fn write_samples_csv(path: &Path, samples: &PosteriorSamples) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(samples.names())?;
    for s in 0..samples.n_samples() {
        w.write_record(samples.row(s).iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<PosteriorSamples> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = r
        .headers()
        .map_err(|e| Error::format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::format(e.to_string()))?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|v| v.parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::format(format!("bad sample value: {e}")))?);
    }
    PosteriorSamples::from_rows(names, rows)
}

pub fn write_grouplik_csv(path: &Path, table: &GroupLikTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..table.n_groups()).map(|k| format!("group{k}")))?;
    for s in 0..table.n_samples() {
        w.write_record(table.row(s).iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grouplik_csv(path: &Path, t_draws: usize) -> Result<GroupLikTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::format(e.to_string()))?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|v| parse_f64(v)).collect();
        rows.push(row?);
    }
    GroupLikTable::from_rows(rows, t_draws)
}

fn format_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other.parse::<f64>().map_err(|e| Error::format(format!("bad value {other}: {e}"))),
    }
}

// ---------------------------------------------------------------------------
// context snapshots (CSV matrices + JSON manifest)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ContextManifest {
    kind: String,
    n_samples: usize,
    budget: f64,
    matrix_files: Vec<String>,
    base_file: String,
}

fn write_matrix_csv(path: &Path, mat: &Mat) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..mat.cols()).map(|c| format!("c{c}")))?;
    for r in 0..mat.rows() {
        w.write_record(mat.row(r).iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::format(e.to_string()))?;
        let row: Result<Vec<f64>> = record.iter().map(parse_f64).collect();
        rows.push(row?);
    }
    Mat::from_rows(rows)
}

fn write_base_csv(path: &Path, base: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["base"])?;
    for v in base {
        w.write_record([format_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_base_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::format(e.to_string()))?;
        out.push(parse_f64(record.get(0).unwrap_or(""))?);
    }
    Ok(out)
}

pub fn save_single_context(dir: &Path, ctx: &SingleLevelContext) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("loglik.csv"), &ctx.l)?;
    write_base_csv(&dir.join("base.csv"), &ctx.base)?;
    let manifest = ContextManifest {
        kind: "single".into(),
        n_samples: ctx.n_samples(),
        budget: ctx.budget,
        matrix_files: vec!["loglik.csv".into()],
        base_file: "base.csv".into(),
    };
    write_json(&dir.join("context.json"), &manifest)
}

pub fn load_single_context(dir: &Path) -> Result<SingleLevelContext> {
    let manifest: ContextManifest = read_json(&dir.join("context.json"))?;
    if manifest.kind != "single" {
        return Err(Error::format("context manifest is not single-level"));
    }
    let l = read_matrix_csv(&dir.join(&manifest.matrix_files[0]))?;
    let base = read_base_csv(&dir.join(&manifest.base_file))?;
    SingleLevelContext::new(l, base, manifest.budget)
}

pub fn save_multi_context(dir: &Path, ctx: &MultiLevelContext) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut matrix_files = Vec::new();
    for (k, mat) in ctx.lz.iter().enumerate() {
        let name = format!("loglik_g{k}.csv");
        write_matrix_csv(&dir.join(&name), mat)?;
        matrix_files.push(name);
    }
    write_base_csv(&dir.join("base.csv"), &ctx.base)?;
    let manifest = ContextManifest {
        kind: "multi".into(),
        n_samples: ctx.n_samples(),
        budget: ctx.group_budget,
        matrix_files,
        base_file: "base.csv".into(),
    };
    write_json(&dir.join("context.json"), &manifest)
}

pub fn load_multi_context(dir: &Path) -> Result<MultiLevelContext> {
    let manifest: ContextManifest = read_json(&dir.join("context.json"))?;
    if manifest.kind != "multi" {
        return Err(Error::format("context manifest is not multi-level"));
    }
    let lz: Result<Vec<Mat>> =
        manifest.matrix_files.iter().map(|f| read_matrix_csv(&dir.join(f))).collect();
    let base = read_base_csv(&dir.join(&manifest.base_file))?;
    MultiLevelContext::new(lz?, base, manifest.budget)
}

// ---------------------------------------------------------------------------
// the weighted-virtual-observation interchange file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WvoFile {
    pub schema_version: u32,
    pub model: String,
    /// "single" or "multi"
    pub level: String,
    /// N* for single-level weights, K* for group weights.
    pub budget: f64,
    pub seed: u64,
    pub config_hash: String,
    pub virtuals: VirtualObservationSet,
    pub weights: WeightAssignment,
    pub objective: ObjectiveValue,
    pub converged: bool,
}

impl WvoFile {
    pub fn new(
        model: &str,
        budget: f64,
        seed: u64,
        config_hash: String,
        virtuals: VirtualObservationSet,
        weights: WeightAssignment,
        objective: ObjectiveValue,
        converged: bool,
    ) -> Self {
        let level = match &virtuals {
            VirtualObservationSet::Single { .. } => "single",
            VirtualObservationSet::Multi { .. } => "multi",
        };
        WvoFile {
            schema_version: WVO_SCHEMA_VERSION,
            model: model.to_string(),
            level: level.to_string(),
            budget,
            seed,
            config_hash,
            virtuals,
            weights: round_weights(&weights, budget),
            objective,
            converged,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != WVO_SCHEMA_VERSION {
            return Err(Error::format(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        self.weights.validate(self.budget, 1e-9)
    }
}

/// Zeroes weights below `NEAR_ZERO_WEIGHT` x budget and rescales the rest,
/// so serialized budgets hold exactly.
pub fn round_weights(weights: &WeightAssignment, budget: f64) -> WeightAssignment {
    match weights {
        WeightAssignment::Single { weights } => {
            WeightAssignment::Single { weights: round_simplex(weights, budget) }
        }
        WeightAssignment::Multi { group_weights, within_weights } => WeightAssignment::Multi {
            group_weights: round_simplex(group_weights, budget),
            within_weights: within_weights.iter().map(|w| round_simplex(w, 1.0)).collect(),
        },
    }
}

fn round_simplex(w: &[f64], budget: f64) -> Vec<f64> {
    let threshold = NEAR_ZERO_WEIGHT * budget;
    let mut out: Vec<f64> = w.iter().map(|&x| if x < threshold { 0.0 } else { x }).collect();
    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        for x in &mut out {
            *x *= budget / sum;
        }
    }
    out
}

pub fn write_wvo_file(path: &Path, file: &WvoFile) -> Result<()> {
    file.validate()?;
    write_json(path, file)
}

pub fn read_wvo_file(path: &Path) -> Result<WvoFile> {
    let file: WvoFile = read_json(path)?;
    file.validate()?;
    Ok(file)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(format!("serialize: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("cannot parse {}: {e}", path.display())))
}

/// FNV-1a over a canonical settings string; embedded in every artifact.
pub fn config_hash(canonical: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in canonical.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

// ---------------------------------------------------------------------------
// report tables
// ---------------------------------------------------------------------------

pub fn write_comparison_csv(
    path: &Path,
    rows: &[(String, PosteriorComparison, bool)],
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "case",
        "param",
        "mean_diff",
        "std_ratio",
        "ks",
        "pass",
        "config_hash",
        "seed",
    ])?;
    for (case, cmp, pass) in rows {
        for DimComparison { name, mean_diff, std_ratio, ks } in &cmp.dims {
            w.write_record([
                case.as_str(),
                name.as_str(),
                &format_f64(*mean_diff),
                &format_f64(*std_ratio),
                &format_f64(*ks),
                if *pass { "true" } else { "false" },
                config_hash,
                &seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_fold_report_csv(
    path: &Path,
    records: &[FoldRecord],
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let names = &records[0].param_names;
    let mut header = vec!["fold".to_string(), "label".to_string()];
    for n in names {
        header.push(format!("wvo_mean_{n}"));
        header.push(format!("wvo_std_{n}"));
    }
    if records[0].meb_mean.is_some() {
        for n in names {
            header.push(format!("meb_mean_{n}"));
            header.push(format!("meb_std_{n}"));
        }
    }
    if records[0].reconstruction.is_some() {
        for n in names {
            header.push(format!("recon_mean_diff_{n}"));
            header.push(format!("recon_std_ratio_{n}"));
            header.push(format!("recon_ks_{n}"));
        }
    }
    header.push("reconstruction_pass".to_string());
    header.push("objective".to_string());
    header.push("converged".to_string());
    header.push("config_hash".to_string());
    header.push("seed".to_string());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.fold.to_string(), r.label.clone()];
        for j in 0..names.len() {
            row.push(format_f64(r.wvo_mean[j]));
            row.push(format_f64(r.wvo_std[j]));
        }
        if let (Some(mm), Some(ms)) = (&r.meb_mean, &r.meb_std) {
            for j in 0..names.len() {
                row.push(format_f64(mm[j]));
                row.push(format_f64(ms[j]));
            }
        }
        if let Some(cmp) = &r.reconstruction {
            for d in &cmp.dims {
                row.push(format_f64(d.mean_diff));
                row.push(format_f64(d.std_ratio));
                row.push(format_f64(d.ks));
            }
        }
        row.push(match r.reconstruction_pass {
            Some(true) => "true".into(),
            Some(false) => "false".into(),
            None => "".into(),
        });
        row.push(format_f64(r.objective));
        row.push(r.converged.to_string());
        row.push(config_hash.to_string());
        row.push(seed.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(
    rows_path: &Path,
    summary_path: &Path,
    report: &SweepReport,
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(rows_path)?;
    let mut header = vec!["k_virtual".to_string(), "fold".to_string(), "label".to_string()];
    for n in &report.param_names {
        header.push(format!("mean_{n}"));
    }
    header.push("config_hash".to_string());
    header.push("seed".to_string());
    w.write_record(&header)?;
    for r in &report.rows {
        let mut row = vec![r.k_virtual.to_string(), r.fold.to_string(), r.label.clone()];
        for v in &r.mean {
            row.push(format_f64(*v));
        }
        row.push(config_hash.to_string());
        row.push(seed.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(summary_path)?;
    let mut header = vec!["k_virtual".to_string()];
    for n in &report.param_names {
        header.push(format!("std_of_means_{n}"));
    }
    header.push("config_hash".to_string());
    header.push("seed".to_string());
    w.write_record(&header)?;
    for s in &report.summary {
        let mut row = vec![s.k_virtual.to_string()];
        for v in &s.std_of_means {
            row.push(format_f64(*v));
        }
        row.push(config_hash.to_string());
        row.push(seed.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ess_csv(path: &Path, samples: &PosteriorSamples) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["param", "ess", "acceptance_rate"])?;
    for (name, e) in samples.names().iter().zip(&samples.ess) {
        w.write_record([name.as_str(), &format_f64(*e), &format_f64(samples.acceptance_rate)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::family_by_name;
    use tempfile::tempdir;

    #[test]
    fn dataset_roundtrip_flat_and_grouped() {
        let dir = tempdir().unwrap();
        let flat = dir.path().join("flat.csv");
        fs::write(&flat, "y\n1\n0\n1\n").unwrap();
        let fam = family_by_name("beta-bernoulli").unwrap();
        let data = load_dataset(fam.as_ref(), &flat).unwrap();
        assert_eq!(data.as_flat().unwrap().len(), 3);

        let grouped = dir.path().join("grouped.csv");
        fs::write(&grouped, "group,y,sigma\nA,28,15\nA,8,10\nB,-3,16\n").unwrap();
        let fam = family_by_name("eight-schools").unwrap();
        let data = load_dataset(fam.as_ref(), &grouped).unwrap();
        let g = data.as_grouped().unwrap();
        assert_eq!(g.n_groups(), 2);
        assert_eq!(g.labels(), &["A".to_string(), "B".to_string()]);
        assert_eq!(g.groups()[0].len(), 2);
    }

    #[test]
    fn flat_file_for_multi_level_family_becomes_one_group() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        fs::write(&path, "y\n0.5\n-0.2\n1.4\n").unwrap();
        let fam = family_by_name("normal-hyperprior").unwrap();
        let data = load_dataset(fam.as_ref(), &path).unwrap();
        assert_eq!(data.as_grouped().unwrap().n_groups(), 1);
    }

    #[test]
    fn bad_observation_is_a_data_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "y\n2\n").unwrap();
        let fam = family_by_name("beta-bernoulli").unwrap();
        assert!(matches!(load_dataset(fam.as_ref(), &path), Err(Error::Data(_))));
    }

    #[test]
    fn samples_csv_roundtrip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let samples = PosteriorSamples::from_rows(
            vec!["mu".into(), "log_sigma".into()],
            vec![vec![0.1234567890123456, -1.5e-17], vec![3.0f64.sqrt(), 2.0 / 3.0]],
        )
        .unwrap();
        write_samples_csv(&path, &samples).unwrap();
        let back = read_samples_csv(&path).unwrap();
        assert_eq!(back.names(), samples.names());
        for s in 0..2 {
            assert_eq!(back.row(s), samples.row(s));
        }
    }

    #[test]
    fn grouplik_roundtrip_preserves_neg_inf() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let table = GroupLikTable::from_rows(
            vec![vec![-1.5, f64::NEG_INFINITY], vec![-0.25, -3.75]],
            40,
        )
        .unwrap();
        write_grouplik_csv(&path, &table).unwrap();
        let back = read_grouplik_csv(&path, 40).unwrap();
        assert_eq!(back.entry(0, 1), f64::NEG_INFINITY);
        assert_eq!(back.entry(1, 0), -0.25);
        assert_eq!(back.n_neg_inf, 1);
    }

    #[test]
    fn context_snapshot_roundtrip() {
        let dir = tempdir().unwrap();
        let l = Mat::from_rows(vec![vec![-0.5, -1.25], vec![-2.0, -0.125]]).unwrap();
        let ctx = SingleLevelContext::new(l, vec![-1.0, -2.0], 5.0).unwrap();
        save_single_context(dir.path(), &ctx).unwrap();
        let back = load_single_context(dir.path()).unwrap();
        assert_eq!(back.l, ctx.l);
        assert_eq!(back.base, ctx.base);
        assert_eq!(back.budget, 5.0);

        let lz = vec![
            Mat::from_rows(vec![vec![-0.5], vec![-1.0]]).unwrap(),
            Mat::from_rows(vec![vec![-2.5], vec![-0.75]]).unwrap(),
        ];
        let mctx = MultiLevelContext::new(lz, vec![-1.0, -1.5], 2.0).unwrap();
        let mdir = dir.path().join("multi");
        save_multi_context(&mdir, &mctx).unwrap();
        let back = load_multi_context(&mdir).unwrap();
        assert_eq!(back.lz, mctx.lz);
        assert_eq!(back.group_budget, 2.0);
    }

    #[test]
    fn wvo_file_rounding_keeps_budget_exact() {
        let virtuals = VirtualObservationSet::Single {
            observations: vec![
                Observation::plain(1.0),
                Observation::plain(0.0),
                Observation::plain(1.0),
            ],
            source_samples: vec![0, 1, 2],
            seed: 7,
        };
        let weights =
            WeightAssignment::Single { weights: vec![2.0 - 1e-12, 1e-12, 1.0] };
        let file = WvoFile::new(
            "beta-bernoulli",
            3.0,
            7,
            config_hash("test"),
            virtuals,
            weights,
            ObjectiveValue { total: -1.0, fit: -0.5, penalty: 0.5 },
            true,
        );
        match &file.weights {
            WeightAssignment::Single { weights } => {
                assert_eq!(weights[1], 0.0);
                let sum: f64 = weights.iter().sum();
                assert!((sum - 3.0).abs() < 1e-9);
            }
            _ => panic!(),
        }
        file.validate().unwrap();

        let dir = tempdir().unwrap();
        let path = dir.path().join("wvo.json");
        write_wvo_file(&path, &file).unwrap();
        let back = read_wvo_file(&path).unwrap();
        assert_eq!(back.model, "beta-bernoulli");
        assert_eq!(back.weights, file.weights);
        assert_eq!(back.schema_version, WVO_SCHEMA_VERSION);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = config_hash("model=x seed=1");
        assert_eq!(a, config_hash("model=x seed=1"));
        assert_ne!(a, config_hash("model=x seed=2"));
        assert_eq!(a.len(), 16);
    }
}
