//! MADELON-style synthetic data and loading of the NIPS-2003 text format.
//!
//! Generated points sit in Gaussian clusters on the vertices of a hypercube
//! spanned by the informative features. Each cluster carries one class label,
//! assigned at random. Combination features are random linear mixtures of the
//! informative ones, and distractors are label-independent noise. All columns
//! are then permuted, so the useful features are scattered among the
//! distractors.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Role of a feature column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Informative,
    Combination,
    Distractor,
    Unknown,
}

impl FeatureKind {
    fn code(self) -> char {
        match self {
            FeatureKind::Informative => 'I',
            FeatureKind::Combination => 'C',
            FeatureKind::Distractor => 'D',
            FeatureKind::Unknown => 'U',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        Some(match c {
            'I' => FeatureKind::Informative,
            'C' => FeatureKind::Combination,
            'D' => FeatureKind::Distractor,
            'U' => FeatureKind::Unknown,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MadelonParams {
    pub n_clusters_per_class: usize,
    pub n_informative: usize,
    pub n_combination: usize,
    pub n_distractor: usize,
    /// Edge length of the hypercube; vertices sit at `±cluster_separation / 2`.
    pub cluster_separation: f64,
    /// Isotropic standard deviation of every cluster.
    pub noise_sigma: f64,
    pub n_points: usize,
    /// Require exactly `n_points / 2` points per class.
    pub balanced: bool,
    pub seed: u64,
}

impl Default for MadelonParams {
    fn default() -> Self {
        MadelonParams {
            n_clusters_per_class: 16,
            n_informative: 5,
            n_combination: 15,
            n_distractor: 480,
            cluster_separation: 2.0,
            noise_sigma: 1.0,
            n_points: 300,
            balanced: true,
            seed: 0,
        }
    }
}

impl MadelonParams {
    pub fn n_features(&self) -> usize {
        self.n_informative + self.n_combination + self.n_distractor
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::param("n_points must be at least 1"));
        }
        if self.balanced && !self.n_points.is_multiple_of(2) {
            return Err(Error::param(format!(
                "n_points = {} is odd but balanced classes were requested",
                self.n_points
            )));
        }
        if self.n_informative == 0 {
            return Err(Error::param("n_informative must be at least 1"));
        }
        if self.n_clusters_per_class == 0 {
            return Err(Error::param("n_clusters_per_class must be at least 1"));
        }
        if self.n_informative > 63 {
            return Err(Error::param("n_informative must be at most 63"));
        }
        let needed = 2 * self.n_clusters_per_class;
        if (needed as u128) > (1u128 << self.n_informative) {
            return Err(Error::param(format!(
                "{} clusters do not fit on the {} vertices of a {}-cube",
                needed,
                1u128 << self.n_informative,
                self.n_informative
            )));
        }
        if !(self.cluster_separation.is_finite() && self.cluster_separation >= 0.0) {
            return Err(Error::param("cluster_separation must be finite and >= 0"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Everything needed to reconstruct how a generated dataset was built.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub params: MadelonParams,
    /// `layout[j]` is the logical feature stored in output column `j`. Logical
    /// order is informative, then combination, then distractor features.
    pub layout: Vec<usize>,
    /// Hypercube vertex (bit pattern) of each cluster; clusters
    /// `0..n_clusters_per_class` belong to class -1, the rest to +1.
    pub cluster_vertices: Vec<u64>,
    /// Cluster index of every row.
    pub row_cluster: Vec<usize>,
    /// `n_combination × n_informative` mixing coefficients.
    pub combination_weights: DMatrix<f64>,
    /// `n_points × n_combination` noise added to each combination feature.
    pub combination_noise: DMatrix<f64>,
}

impl GenerationRecord {
    /// Output column holding the given logical feature.
    pub fn column_of(&self, logical: usize) -> usize {
        self.layout
            .iter()
            .position(|&l| l == logical)
            .expect("logical feature index out of range")
    }

    pub fn informative_columns(&self) -> Vec<usize> {
        (0..self.params.n_informative)
            .map(|l| self.column_of(l))
            .collect()
    }

    pub fn combination_columns(&self) -> Vec<usize> {
        let start = self.params.n_informative;
        (start..start + self.params.n_combination)
            .map(|l| self.column_of(l))
            .collect()
    }

    pub fn distractor_columns(&self) -> Vec<usize> {
        let start = self.params.n_informative + self.params.n_combination;
        (start..start + self.params.n_distractor)
            .map(|l| self.column_of(l))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `P × F` feature matrix.
    pub features: DMatrix<f64>,
    /// One label per row, each -1 or +1.
    pub labels: Vec<i32>,
    pub feature_meta: Vec<FeatureKind>,
    pub seed: Option<u64>,
    pub generation: Option<GenerationRecord>,
}

impl Dataset {
    pub fn n_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self, label: i32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let features = self.features.select_columns(cols);
        Dataset {
            features,
            labels: self.labels.clone(),
            feature_meta: cols.iter().map(|&c| self.feature_meta[c]).collect(),
            seed: self.seed,
            generation: None,
        }
    }
}

fn vertex_coord(vertex: u64, dim: usize, half_edge: f64) -> f64 {
    if (vertex >> dim) & 1 == 1 {
        half_edge
    } else {
        -half_edge
    }
}

pub fn generate_madelon(params: &MadelonParams) -> Result<Dataset> {
    params.validate()?;
    let mut rng = seed::rng(params.seed);
    let p = params.n_points;
    let k = params.n_clusters_per_class;
    let n_inf = params.n_informative;
    let n_comb = params.n_combination;
    let n_dis = params.n_distractor;
    let f = params.n_features();

    // Distinct vertices for all 2k clusters; the first k are class -1.
    let cluster_vertices: Vec<u64> = if n_inf < 32 {
        index::sample(&mut rng, 1usize << n_inf, 2 * k)
            .into_iter()
            .map(|v| v as u64)
            .collect()
    } else {
        let mask = (1u64 << n_inf) - 1;
        let mut picked: Vec<u64> = Vec::with_capacity(2 * k);
        while picked.len() < 2 * k {
            let v = rng.random::<u64>() & mask;
            if !picked.contains(&v) {
                picked.push(v);
            }
        }
        picked
    };

    let mut row_cluster: Vec<usize> = if params.balanced {
        let half = p / 2;
        (0..half)
            .map(|i| i % k)
            .chain((0..half).map(|i| k + i % k))
            .collect()
    } else {
        (0..p).map(|_| rng.random_range(0..2 * k)).collect()
    };
    row_cluster.shuffle(&mut rng);
    let labels: Vec<i32> = row_cluster
        .iter()
        .map(|&c| if c < k { -1 } else { 1 })
        .collect();

    let half_edge = params.cluster_separation / 2.0;
    let mut logical = DMatrix::<f64>::zeros(p, f);
    for (i, &c) in row_cluster.iter().enumerate() {
        for d in 0..n_inf {
            let z: f64 = StandardNormal.sample(&mut rng);
            logical[(i, d)] =
                vertex_coord(cluster_vertices[c], d, half_edge) + params.noise_sigma * z;
        }
    }

    let combination_weights =
        DMatrix::<f64>::from_fn(n_comb, n_inf, |_, _| rng.random_range(-1.0..=1.0));
    let mut combination_noise = DMatrix::<f64>::zeros(p, n_comb);
    for j in 0..n_comb {
        let mixed: Vec<f64> = (0..p)
            .map(|i| {
                (0..n_inf)
                    .map(|d| combination_weights[(j, d)] * logical[(i, d)])
                    .sum()
            })
            .collect();
        let sd = population_std(&mixed);
        let noise = Normal::new(0.0, 0.05 * sd).expect("finite non-negative sigma");
        for (i, m) in mixed.iter().enumerate() {
            let e = noise.sample(&mut rng);
            combination_noise[(i, j)] = e;
            logical[(i, n_inf + j)] = m + e;
        }
    }

    for i in 0..p {
        for j in 0..n_dis {
            logical[(i, n_inf + n_comb + j)] = StandardNormal.sample(&mut rng);
        }
    }

    let mut layout: Vec<usize> = (0..f).collect();
    layout.shuffle(&mut rng);
    let features = DMatrix::from_fn(p, f, |i, j| logical[(i, layout[j])]);
    let feature_meta = layout
        .iter()
        .map(|&l| {
            if l < n_inf {
                FeatureKind::Informative
            } else if l < n_inf + n_comb {
                FeatureKind::Combination
            } else {
                FeatureKind::Distractor
            }
        })
        .collect();

    Ok(Dataset {
        features,
        labels,
        feature_meta,
        seed: Some(params.seed),
        generation: Some(GenerationRecord {
            params: params.clone(),
            layout,
            cluster_vertices,
            row_cluster,
            combination_weights,
            combination_noise,
        }),
    })
}

fn population_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Column-wise standardisation to zero mean and unit population variance.
///
/// Constant columns become all zeros; one warning is returned per such column.
pub fn standardize(ds: &Dataset) -> (Dataset, Vec<String>) {
    let mut out = ds.clone();
    let mut warnings = Vec::new();
    let n = ds.n_points();
    if n == 0 {
        return (out, warnings);
    }
    for j in 0..ds.n_features() {
        let col: Vec<f64> = ds.features.column(j).iter().copied().collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        let constant = sd == 0.0 || col.iter().all(|&x| x == col[0]);
        for (i, &x) in col.iter().enumerate() {
            out.features[(i, j)] = if constant { 0.0 } else { (x - mean) / sd };
        }
        if constant {
            warnings.push(format!(
                "feature column {j} has zero variance; mapped to zeros"
            ));
        }
    }
    (out, warnings)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn non_empty_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Load the whitespace-separated NIPS-2003 format: one datapoint per line in
/// the data file, one label (`-1` or `1`) per line in the labels file.
pub fn load_madelon_files(data_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let data = read_to_string(data_path)?;
    let labels_text = read_to_string(labels_path)?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in non_empty_lines(&data) {
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::format(
                            data_path,
                            format!("line {}: non-numeric token {tok:?}", lineno + 1),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    data_path,
                    format!(
                        "line {}: {} values, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }

    let mut labels = Vec::new();
    for (lineno, line) in non_empty_lines(&labels_text) {
        let tok = line.trim();
        let label = match tok.parse::<i32>() {
            Ok(l @ (-1 | 1)) => l,
            _ => {
                return Err(Error::format(
                    labels_path,
                    format!("line {}: label {tok:?} is not -1 or 1", lineno + 1),
                ))
            }
        };
        labels.push(label);
    }

    if rows.len() != labels.len() {
        return Err(Error::format(
            data_path,
            format!("{} data rows but {} labels", rows.len(), labels.len()),
        ));
    }
    let ncols = rows.first().map_or(0, Vec::len);
    let features = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(Dataset {
        features,
        labels,
        feature_meta: vec![FeatureKind::Unknown; ncols],
        seed: None,
        generation: None,
    })
}

/// Paths of a dataset written by [`write_dataset`].
#[derive(Clone, Debug)]
pub struct DatasetFiles {
    pub data: PathBuf,
    pub labels: PathBuf,
    pub meta: PathBuf,
}

impl DatasetFiles {
    pub fn in_dir(dir: &Path, stem: &str) -> Self {
        DatasetFiles {
            data: dir.join(format!("{stem}.data")),
            labels: dir.join(format!("{stem}.labels")),
            meta: dir.join(format!("{stem}.meta")),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Write data and labels in the NIPS-2003 layout plus a `key = value`
/// metadata sidecar.
pub fn write_dataset(ds: &Dataset, files: &DatasetFiles) -> Result<()> {
    let mut data = String::new();
    for i in 0..ds.n_points() {
        let line: Vec<String> = ds.features.row(i).iter().map(|v| v.to_string()).collect();
        data.push_str(&line.join(" "));
        data.push('\n');
    }
    write_file(&files.data, &data)?;

    let mut labels = String::new();
    for l in &ds.labels {
        labels.push_str(&l.to_string());
        labels.push('\n');
    }
    write_file(&files.labels, &labels)?;

    write_file(&files.meta, &DatasetMeta::of(ds).to_string())
}

/// Key-value sidecar describing a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub n_points: usize,
    pub n_features: usize,
    pub seed: Option<u64>,
    pub params: Option<MadelonParams>,
    pub feature_meta: Vec<FeatureKind>,
}

impl DatasetMeta {
    pub fn of(ds: &Dataset) -> Self {
        DatasetMeta {
            n_points: ds.n_points(),
            n_features: ds.n_features(),
            seed: ds.seed,
            params: ds.generation.as_ref().map(|g| g.params.clone()),
            feature_meta: ds.feature_meta.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_to_string(path)?
            .parse()
            .map_err(|msg: String| Error::format(path, msg))
    }
}

impl fmt::Display for DatasetMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# dataset metadata")?;
        writeln!(f, "n_points = {}", self.n_points)?;
        writeln!(f, "n_features = {}", self.n_features)?;
        if let Some(seed) = self.seed {
            writeln!(f, "seed = {seed}")?;
        }
        if let Some(p) = &self.params {
            writeln!(f, "n_clusters_per_class = {}", p.n_clusters_per_class)?;
            writeln!(f, "n_informative = {}", p.n_informative)?;
            writeln!(f, "n_combination = {}", p.n_combination)?;
            writeln!(f, "n_distractor = {}", p.n_distractor)?;
            writeln!(f, "cluster_separation = {}", p.cluster_separation)?;
            writeln!(f, "noise_sigma = {}", p.noise_sigma)?;
            writeln!(f, "balanced = {}", p.balanced)?;
        }
        let codes: String = self.feature_meta.iter().map(|k| k.code()).collect();
        writeln!(f, "feature_meta = {codes}")
    }
}

impl FromStr for DatasetMeta {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut kv = std::collections::BTreeMap::new();
        for line in s.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("expected key = value, got {line:?}"))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn get<T: FromStr>(
            kv: &std::collections::BTreeMap<String, String>,
            key: &str,
        ) -> std::result::Result<Option<T>, String> {
            kv.get(key)
                .map(|v| {
                    v.parse::<T>()
                        .map_err(|_| format!("bad value for {key}: {v:?}"))
                })
                .transpose()
        }
        let n_points = get(&kv, "n_points")?.ok_or("missing n_points")?;
        let n_features = get(&kv, "n_features")?.ok_or("missing n_features")?;
        let seed = get(&kv, "seed")?;
        let params = match get::<usize>(&kv, "n_informative")? {
            Some(n_informative) => Some(MadelonParams {
                n_clusters_per_class: get(&kv, "n_clusters_per_class")?.unwrap_or(16),
                n_informative,
                n_combination: get(&kv, "n_combination")?.unwrap_or(0),
                n_distractor: get(&kv, "n_distractor")?.unwrap_or(0),
                cluster_separation: get(&kv, "cluster_separation")?.unwrap_or(2.0),
                noise_sigma: get(&kv, "noise_sigma")?.unwrap_or(1.0),
                n_points,
                balanced: get(&kv, "balanced")?.unwrap_or(true),
                seed: seed.unwrap_or(0),
            }),
            None => None,
        };
        let feature_meta = kv
            .get("feature_meta")
            .map(|codes| {
                codes
                    .chars()
                    .map(|c| FeatureKind::from_code(c).ok_or(format!("bad feature code {c:?}")))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .transpose()?
            .unwrap_or_else(|| vec![FeatureKind::Unknown; n_features]);
        if feature_meta.len() != n_features {
            return Err(format!(
                "feature_meta has {} entries for {} features",
                feature_meta.len(),
                n_features
            ));
        }
        Ok(DatasetMeta {
            n_points,
            n_features,
            seed,
            params,
            feature_meta,
        })
    }
}

/// Load a dataset directory written by [`write_dataset`], restoring feature
/// tags from the sidecar when it exists.
pub fn read_dataset(files: &DatasetFiles) -> Result<Dataset> {
    let mut ds = load_madelon_files(&files.data, &files.labels)?;
    if files.meta.exists() {
        let meta = DatasetMeta::read(&files.meta)?;
        if meta.n_points != ds.n_points() || meta.n_features != ds.n_features() {
            return Err(Error::format(
                &files.meta,
                "metadata shape does not match the data file",
            ));
        }
        ds.feature_meta = meta.feature_meta;
        ds.seed = meta.seed;
    }
    Ok(ds)
}
