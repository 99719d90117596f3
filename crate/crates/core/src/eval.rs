//! Random cross-validation, confusion matrices, training-size sweeps and
//! class-sorted temporal maps.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir::SpikeRaster;
use crate::seed;
use crate::training::{
    self, argmax, count_spikes, score, top_nodes, Method, TrainingSet, BINARY_CLASSES,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: Method,
    pub n_t: usize,
    pub n_n: Option<usize>,
    pub repeats: usize,
    pub class_order: Vec<i32>,
    /// Correct predictions over all test predictions of all repeats.
    pub accuracy: f64,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
    pub per_repeat_accuracies: Vec<f64>,
    /// Rows are true classes, columns predicted classes, summed over repeats.
    pub confusion: Vec<Vec<u64>>,
    pub warnings: Vec<String>,
}

impl EvalResult {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvConfig {
    pub method: Method,
    pub n_t: usize,
    /// Required for significance training.
    pub n_n: Option<usize>,
    pub repeats: usize,
    pub seed: u64,
}

/// Training-split seed of one repeat. It depends on `n_t` but not on `n_n`,
/// so all `n_n` values at a given `n_t` see the same splits.
pub fn split_seed(seed: u64, n_t: usize, repeat: usize) -> u64 {
    seed::derive_indexed(seed, "cv", &[n_t as u64, repeat as u64])
}

fn check_inputs(raster: &SpikeRaster, labels: &[i32], n_t: usize, repeats: usize) -> Result<()> {
    if raster.n_rows() != labels.len() {
        return Err(Error::param(format!(
            "{} raster rows but {} labels",
            raster.n_rows(),
            labels.len()
        )));
    }
    if repeats == 0 {
        return Err(Error::param("repeats must be at least 1"));
    }
    if n_t == 0 {
        return Err(Error::param("n_t must be at least 1"));
    }
    for &class in &BINARY_CLASSES {
        let count = labels.iter().filter(|&&l| l == class).count();
        if n_t >= count {
            return Err(Error::param(format!(
                "n_t = {n_t} leaves no test point for class {class} ({count} points)"
            )));
        }
    }
    if let Some(l) = labels.iter().find(|l| !BINARY_CLASSES.contains(l)) {
        return Err(Error::param(format!("label {l} is not -1 or +1")));
    }
    Ok(())
}

fn complement(n: usize, train: &[usize]) -> Vec<usize> {
    let mut in_train = vec![false; n];
    for &i in train {
        in_train[i] = true;
    }
    (0..n).filter(|&i| !in_train[i]).collect()
}

fn class_idx(label: i32) -> usize {
    BINARY_CLASSES
        .iter()
        .position(|&c| c == label)
        .expect("validated label")
}

struct RepeatOutcome {
    confusion: Vec<Vec<u64>>,
    warnings: Vec<String>,
}

impl RepeatOutcome {
    fn accuracy(&self) -> f64 {
        let total: u64 = self.confusion.iter().flatten().sum();
        let correct: u64 = (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum();
        correct as f64 / total as f64
    }
}

fn aggregate(cfg: &CvConfig, outcomes: Vec<RepeatOutcome>) -> EvalResult {
    let c = BINARY_CLASSES.len();
    let mut confusion = vec![vec![0u64; c]; c];
    let mut warnings = Vec::new();
    let mut per_repeat = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        per_repeat.push(o.accuracy());
        for (row, add) in confusion.iter_mut().zip(&o.confusion) {
            for (x, y) in row.iter_mut().zip(add) {
                *x += y;
            }
        }
        for w in o.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..c).map(|i| confusion[i][i]).sum();
    EvalResult {
        method: cfg.method,
        n_t: cfg.n_t,
        n_n: cfg.n_n,
        repeats: cfg.repeats,
        class_order: BINARY_CLASSES.to_vec(),
        accuracy: correct as f64 / total as f64,
        mean_accuracy: per_repeat.iter().sum::<f64>() / per_repeat.len() as f64,
        max_accuracy: per_repeat.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        per_repeat_accuracies: per_repeat,
        confusion,
        warnings,
    }
}

/// Repeated random-split evaluation. Every repeat trains on `n_t` points
/// per class and tests on all remaining points.
pub fn cross_validate(raster: &SpikeRaster, labels: &[i32], cfg: &CvConfig) -> Result<EvalResult> {
    check_inputs(raster, labels, cfg.n_t, cfg.repeats)?;
    if cfg.method == Method::Significance && cfg.n_n.is_none() {
        return Err(Error::param("significance training needs n_n"));
    }
    let outcomes = (0..cfg.repeats)
        .into_par_iter()
        .map(|rep| {
            let train = TrainingSet::select(
                raster,
                labels,
                &BINARY_CLASSES,
                cfg.n_t,
                split_seed(cfg.seed, cfg.n_t, rep),
            )?;
            let weights = match cfg.method {
                Method::Ols => training::train_ols(&train)?,
                Method::Significance => training::train_significance(&train, cfg.n_n.unwrap_or(1))?,
            };
            let mut confusion = vec![vec![0u64; 2]; 2];
            for i in complement(labels.len(), &train.indices) {
                let pred = training::predict(raster.row(i), &weights)?;
                confusion[class_idx(labels[i])][class_idx(pred)] += 1;
            }
            Ok(RepeatOutcome {
                confusion,
                warnings: weights.warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, outcomes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_t: usize,
    pub n_n: Option<usize>,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_t: usize,
    /// Highest mean accuracy over the `n_n` grid.
    pub best_accuracy: f64,
    /// Smallest `n_n` attaining `best_accuracy`; `None` for OLS.
    pub best_n_n: Option<usize>,
    /// Best single-split accuracy within the best cell.
    pub best_cell_max_accuracy: f64,
    /// Highest single-split accuracy anywhere in the row.
    pub peak_max_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: Method,
    pub n_t_grid: Vec<usize>,
    pub n_n_grid: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub method: Method,
    pub n_t_grid: Vec<usize>,
    /// Ignored for OLS.
    pub n_n_grid: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
}

/// Per-split accuracy for every `n_n` in the grid.
///
/// Binary weights make `S · W` a count of spikes on the chosen nodes, so the
/// score for `n_n` is a prefix count over each class's ranked node list.
fn significance_grid_accuracies(
    raster: &SpikeRaster,
    labels: &[i32],
    train: &TrainingSet,
    n_n_grid: &[usize],
) -> Vec<f64> {
    let table = score(count_spikes(train));
    let max_nn = n_n_grid.iter().copied().max().unwrap_or(0);
    let ranked: Vec<Vec<usize>> = (0..BINARY_CLASSES.len())
        .map(|c| top_nodes(&table, c, max_nn))
        .collect();
    let test = complement(labels.len(), &train.indices);
    let mut correct = vec![0u64; n_n_grid.len()];
    let mut prefix: Vec<Vec<u32>> = ranked.iter().map(|r| vec![0; r.len() + 1]).collect();
    for &i in &test {
        let row = raster.row(i);
        for (c, nodes) in ranked.iter().enumerate() {
            for (k, &n) in nodes.iter().enumerate() {
                prefix[c][k + 1] = prefix[c][k] + row[n] as u32;
            }
        }
        let truth = labels[i];
        for (g, &n_n) in n_n_grid.iter().enumerate() {
            let scores: Vec<f64> = prefix
                .iter()
                .map(|p| p[n_n.min(p.len() - 1)] as f64)
                .collect();
            if BINARY_CLASSES[argmax(&scores)] == truth {
                correct[g] += 1;
            }
        }
    }
    correct
        .into_iter()
        .map(|c| c as f64 / test.len() as f64)
        .collect()
}

pub fn sweep(raster: &SpikeRaster, labels: &[i32], cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.n_t_grid.is_empty() {
        return Err(Error::param("n_t grid is empty"));
    }
    if cfg.method == Method::Significance {
        if cfg.n_n_grid.is_empty() {
            return Err(Error::param("n_n grid is empty"));
        }
        if let Some(&bad) = cfg.n_n_grid.iter().find(|&&n| n == 0 || n > raster.n_v()) {
            return Err(Error::param(format!(
                "n_n = {bad} outside 1..={}",
                raster.n_v()
            )));
        }
    }
    for &n_t in &cfg.n_t_grid {
        check_inputs(raster, labels, n_t, cfg.repeats)?;
    }

    let mut rows = Vec::with_capacity(cfg.n_t_grid.len());
    let mut cells = Vec::new();
    for &n_t in &cfg.n_t_grid {
        let row_cells: Vec<SweepCell> = match cfg.method {
            Method::Ols => {
                let r = cross_validate(
                    raster,
                    labels,
                    &CvConfig {
                        method: Method::Ols,
                        n_t,
                        n_n: None,
                        repeats: cfg.repeats,
                        seed: cfg.seed,
                    },
                )?;
                vec![SweepCell {
                    n_t,
                    n_n: None,
                    mean_accuracy: r.mean_accuracy,
                    max_accuracy: r.max_accuracy,
                }]
            }
            Method::Significance => {
                let per_repeat: Vec<Vec<f64>> = (0..cfg.repeats)
                    .into_par_iter()
                    .map(|rep| {
                        let train = TrainingSet::select(
                            raster,
                            labels,
                            &BINARY_CLASSES,
                            n_t,
                            split_seed(cfg.seed, n_t, rep),
                        )?;
                        Ok(significance_grid_accuracies(
                            raster,
                            labels,
                            &train,
                            &cfg.n_n_grid,
                        ))
                    })
                    .collect::<Result<_>>()?;
                cfg.n_n_grid
                    .iter()
                    .enumerate()
                    .map(|(g, &n_n)| {
                        let accs: Vec<f64> = per_repeat.iter().map(|r| r[g]).collect();
                        SweepCell {
                            n_t,
                            n_n: Some(n_n),
                            mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
                            max_accuracy: accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                        }
                    })
                    .collect()
            }
        };
        let mut best = 0;
        for (i, c) in row_cells.iter().enumerate() {
            let b = &row_cells[best];
            if c.mean_accuracy > b.mean_accuracy
                || (c.mean_accuracy == b.mean_accuracy && c.n_n < b.n_n)
            {
                best = i;
            }
        }
        rows.push(SweepRow {
            n_t,
            best_accuracy: row_cells[best].mean_accuracy,
            best_n_n: row_cells[best].n_n,
            best_cell_max_accuracy: row_cells[best].max_accuracy,
            peak_max_accuracy: row_cells
                .iter()
                .map(|c| c.max_accuracy)
                .fold(f64::NEG_INFINITY, f64::max),
        });
        cells.extend(row_cells);
    }
    Ok(SweepResult {
        method: cfg.method,
        n_t_grid: cfg.n_t_grid.clone(),
        n_n_grid: if cfg.method == Method::Ols {
            Vec::new()
        } else {
            cfg.n_n_grid.clone()
        },
        repeats: cfg.repeats,
        seed: cfg.seed,
        rows,
        cells,
    })
}

/// Raster rows regrouped by class (class order -1, +1), original order kept
/// within each class.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalMap {
    pub raster: SpikeRaster,
    pub labels: Vec<i32>,
    /// `order[k]` is the source row shown at map row `k`.
    pub order: Vec<usize>,
    /// First map row of the second class.
    pub boundary: usize,
}

impl TemporalMap {
    /// Undo the class grouping.
    pub fn original_raster(&self) -> SpikeRaster {
        let mut inverse = vec![0; self.order.len()];
        for (k, &src) in self.order.iter().enumerate() {
            inverse[src] = k;
        }
        self.raster.select_rows(&inverse)
    }

    pub fn original_labels(&self) -> Vec<i32> {
        let mut out = vec![0; self.order.len()];
        for (k, &src) in self.order.iter().enumerate() {
            out[src] = self.labels[k];
        }
        out
    }

    /// Headerless CSV, one map row per line: `source_row,label,bits...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        for k in 0..self.order.len() {
            let mut rec = vec![self.order[k].to_string(), self.labels[k].to_string()];
            rec.extend(self.raster.row(k).iter().map(|b| b.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)?;
        let mut order = Vec::new();
        let mut labels = Vec::new();
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = |what: &str| Error::format(path, format!("bad {what} in temporal map"));
            let mut fields = rec.iter();
            order.push(
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| bad("row index"))?,
            );
            labels.push(
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| bad("label"))?,
            );
            rows.push(
                fields
                    .map(|f| match f {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        _ => Err(bad("bit")),
                    })
                    .collect::<Result<_>>()?,
            );
        }
        let boundary = labels
            .iter()
            .take_while(|&&l| l == BINARY_CLASSES[0])
            .count();
        Ok(TemporalMap {
            raster: SpikeRaster::from_rows(&rows)?,
            labels,
            order,
            boundary,
        })
    }
}

pub fn temporal_map(raster: &SpikeRaster, labels: &[i32]) -> Result<TemporalMap> {
    if raster.n_rows() != labels.len() {
        return Err(Error::param(format!(
            "{} raster rows but {} labels",
            raster.n_rows(),
            labels.len()
        )));
    }
    let mut order = Vec::with_capacity(labels.len());
    for &class in &BINARY_CLASSES {
        order.extend((0..labels.len()).filter(|&i| labels[i] == class));
    }
    if order.len() != labels.len() {
        return Err(Error::param("labels must be -1 or +1"));
    }
    let boundary = labels.iter().filter(|&&l| l == BINARY_CLASSES[0]).count();
    Ok(TemporalMap {
        raster: raster.select_rows(&order),
        labels: order.iter().map(|&i| labels[i]).collect(),
        order,
        boundary,
    })
}

/// Aligned text rendering of a confusion matrix.
pub fn render_confusion(confusion: &[Vec<u64>], class_order: &[i32]) -> String {
    let name = |c: i32| {
        if c > 0 {
            format!("+{c}")
        } else {
            c.to_string()
        }
    };
    let width = confusion
        .iter()
        .flatten()
        .map(|v| v.to_string().len())
        .max()
        .unwrap_or(1)
        .max(7);
    let mut out = format!("{:<10}", "");
    for &c in class_order {
        out.push_str(&format!(" {:>width$}", format!("pred {}", name(c))));
    }
    out.push('\n');
    for (i, &c) in class_order.iter().enumerate() {
        out.push_str(&format!("{:<10}", format!("true {}", name(c))));
        for v in &confusion[i] {
            out.push_str(&format!(" {v:>width$}"));
        }
        out.push('\n');
    }
    out
}
