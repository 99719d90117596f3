//! Readout training on binary spike rasters.
//!
//! Two trainers produce an `N_v × C` weight matrix used as
//! `argmax(S · W)`:
//!
//! * ordinary least squares against one-hot targets, solved with the
//!   Moore-Penrose pseudoinverse (minimum-norm solution);
//! * significance training, which counts spikes per node and class, scores
//!   each node by `z = s² / Σ_classes s`, and gives weight 1 to the `N_n`
//!   best-scoring nodes of every class.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::SpikeRaster;
use crate::seed;

/// Class labels in readout column order.
pub const BINARY_CLASSES: [i32; 2] = [-1, 1];

/// Relative singular-value cutoff of the pseudoinverse.
pub const PINV_RCOND: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ols,
    Significance,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ols => "ols",
            Method::Significance => "significance",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Method::Ols),
            "significance" | "sig" => Ok(Method::Significance),
            other => Err(Error::param(format!("unknown training method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutWeights {
    /// `N_v × C`.
    pub w: DMatrix<f64>,
    pub method: Method,
    /// Nodes selected per class, significance training only.
    pub n_n: Option<usize>,
    pub class_order: Vec<i32>,
    pub warnings: Vec<String>,
}

impl ReadoutWeights {
    pub fn n_v(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.w.ncols()
    }
}

/// Training rows drawn from a full raster.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub raster: SpikeRaster,
    pub labels: Vec<i32>,
    /// Row indices into the source raster.
    pub indices: Vec<usize>,
    pub class_order: Vec<i32>,
    pub selection_seed: Option<u64>,
}

impl TrainingSet {
    /// Use every row of `raster` for training.
    pub fn new(raster: SpikeRaster, labels: Vec<i32>, class_order: Vec<i32>) -> Result<Self> {
        if raster.n_rows() != labels.len() {
            return Err(Error::param(format!(
                "{} raster rows but {} labels",
                raster.n_rows(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| !class_order.contains(l)) {
            return Err(Error::param(format!("label {l} is not in the class order")));
        }
        let indices = (0..labels.len()).collect();
        Ok(TrainingSet {
            raster,
            labels,
            indices,
            class_order,
            selection_seed: None,
        })
    }

    /// Draw `n_t` rows of every class uniformly without replacement.
    ///
    /// Indices come out grouped by class in `class_order`, each group in
    /// ascending row order.
    pub fn select(
        raster: &SpikeRaster,
        labels: &[i32],
        class_order: &[i32],
        n_t: usize,
        selection_seed: u64,
    ) -> Result<Self> {
        if raster.n_rows() != labels.len() {
            return Err(Error::param(format!(
                "{} raster rows but {} labels",
                raster.n_rows(),
                labels.len()
            )));
        }
        let mut rng = seed::rng(selection_seed);
        let mut indices = Vec::with_capacity(n_t * class_order.len());
        for &class in class_order {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if n_t > members.len() {
                return Err(Error::param(format!(
                    "n_t = {n_t} exceeds the {} points of class {class}",
                    members.len()
                )));
            }
            let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), n_t)
                .into_iter()
                .map(|k| members[k])
                .collect();
            picked.sort_unstable();
            indices.extend(picked);
        }
        Ok(TrainingSet {
            raster: raster.select_rows(&indices),
            labels: indices.iter().map(|&i| labels[i]).collect(),
            indices,
            class_order: class_order.to_vec(),
            selection_seed: Some(selection_seed),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn class_index(&self, label: i32) -> usize {
        self.class_order
            .iter()
            .position(|&c| c == label)
            .expect("labels validated against class order")
    }

    /// Raster rows as a real `rows × N_v` matrix of 0.0/1.0.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        let r = &self.raster;
        DMatrix::from_fn(r.n_rows(), r.n_v(), |i, j| r.get(i, j) as f64)
    }

    /// One-hot targets, `rows × C`.
    pub fn targets(&self) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(self.len(), self.class_order.len());
        for (i, &l) in self.labels.iter().enumerate() {
            y[(i, self.class_index(l))] = 1.0;
        }
        y
    }
}

/// Moore-Penrose pseudoinverse through the SVD, discarding singular values
/// below `rcond · σ_max`.
pub fn pinv(x: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return DMatrix::zeros(n, m);
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let s_max = svd.singular_values.max();
    let cutoff = rcond * s_max;
    let mut out = DMatrix::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (v_t.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

/// Minimum-norm least-squares readout `W = pinv(X) · Y` with one-hot `Y`.
pub fn train_ols(train: &TrainingSet) -> Result<ReadoutWeights> {
    if train.is_empty() {
        return Err(Error::param("OLS training needs at least one row"));
    }
    let x = train.design_matrix();
    let y = train.targets();
    let mut warnings = Vec::new();
    let w = if x.iter().all(|&v| v == 0.0) {
        warnings.push("training raster has no spikes; OLS weights are zero".to_string());
        DMatrix::zeros(x.ncols(), y.ncols())
    } else {
        pinv(&x, PINV_RCOND) * y
    };
    Ok(ReadoutWeights {
        w,
        method: Method::Ols,
        n_n: None,
        class_order: train.class_order.clone(),
        warnings,
    })
}

/// Per-node spike counts `s[n, i]` and significance scores `z[n, i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceTable {
    /// `N_v × C` spike counts.
    pub s: DMatrix<u64>,
    /// `N_v × C` scores; zero until [`score`] runs.
    pub z: DMatrix<f64>,
    pub class_order: Vec<i32>,
}

impl SignificanceTable {
    pub fn from_counts(s: DMatrix<u64>, class_order: Vec<i32>) -> Self {
        let z = DMatrix::zeros(s.nrows(), s.ncols());
        SignificanceTable { s, z, class_order }
    }

    pub fn n_v(&self) -> usize {
        self.s.nrows()
    }
}

pub fn count_spikes(train: &TrainingSet) -> SignificanceTable {
    let n_v = train.raster.n_v();
    let mut s = DMatrix::<u64>::zeros(n_v, train.class_order.len());
    for (row, &label) in train.raster.rows().zip(&train.labels) {
        let c = train.class_index(label);
        for (n, &b) in row.iter().enumerate() {
            s[(n, c)] += b as u64;
        }
    }
    SignificanceTable::from_counts(s, train.class_order.clone())
}

/// Score of one count given the node's total over classes; a silent node
/// scores 0.
pub fn significance(count: u64, node_total: u64) -> f64 {
    if node_total == 0 {
        0.0
    } else {
        (count as f64).powi(2) / node_total as f64
    }
}

pub fn score(mut table: SignificanceTable) -> SignificanceTable {
    for n in 0..table.s.nrows() {
        let total: u64 = table.s.row(n).iter().sum();
        for i in 0..table.s.ncols() {
            table.z[(n, i)] = significance(table.s[(n, i)], total);
        }
    }
    table
}

/// Per class, indices of the `n_n` highest-scoring nodes with positive score.
/// Ties go to the lower node index.
pub fn top_nodes(table: &SignificanceTable, class: usize, n_n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.n_v())
        .filter(|&n| table.z[(n, class)] > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        table.z[(b, class)]
            .total_cmp(&table.z[(a, class)])
            .then(a.cmp(&b))
    });
    order.truncate(n_n);
    order
}

/// Binary weights from an already scored table.
pub fn weights_from_table(table: &SignificanceTable, n_n: usize) -> Result<ReadoutWeights> {
    if n_n == 0 || n_n > table.n_v() {
        return Err(Error::param(format!(
            "n_n = {n_n} must lie in 1..={}",
            table.n_v()
        )));
    }
    let mut w = DMatrix::zeros(table.n_v(), table.class_order.len());
    let mut warnings = Vec::new();
    for (c, &label) in table.class_order.iter().enumerate() {
        let chosen = top_nodes(table, c, n_n);
        if chosen.len() < n_n {
            warnings.push(format!(
                "class {label}: only {} nodes have a positive score, {n_n} requested",
                chosen.len()
            ));
        }
        for n in chosen {
            w[(n, c)] = 1.0;
        }
    }
    Ok(ReadoutWeights {
        w,
        method: Method::Significance,
        n_n: Some(n_n),
        class_order: table.class_order.clone(),
        warnings,
    })
}

pub fn train_significance(train: &TrainingSet, n_n: usize) -> Result<ReadoutWeights> {
    weights_from_table(&score(count_spikes(train)), n_n)
}

/// Class scores `S · W`.
pub fn class_scores(s_row: &[u8], weights: &ReadoutWeights) -> Vec<f64> {
    (0..weights.n_classes())
        .map(|c| {
            s_row
                .iter()
                .zip(weights.w.column(c).iter())
                .filter(|(&b, _)| b != 0)
                .map(|(_, &w)| w)
                .sum()
        })
        .collect()
}

/// Position of the largest score; the first wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn predict(s_row: &[u8], weights: &ReadoutWeights) -> Result<i32> {
    if s_row.len() != weights.n_v() {
        return Err(Error::param(format!(
            "spike vector has {} nodes, weights expect {}",
            s_row.len(),
            weights.n_v()
        )));
    }
    Ok(weights.class_order[argmax(&class_scores(s_row, weights))])
}

pub fn predict_rows(raster: &SpikeRaster, weights: &ReadoutWeights) -> Result<Vec<i32>> {
    raster.rows().map(|r| predict(r, weights)).collect()
}
