//! LBG codebook training: grow from the global centroid by splitting, with
//! Lloyd iterations at each size.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Codebook;
use crate::error::{Error, Result};

/// Training vectors, optionally with a per-vector importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    data: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            weights: None,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut set = Self::new(dim);
        for row in rows {
            set.push(row)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        self.data.extend_from_slice(x);
        if let Some(w) = &mut self.weights {
            w.push(1.0);
        }
        Ok(())
    }

    pub fn push_weighted(&mut self, x: &[f64], weight: f64) -> Result<()> {
        if !(weight > 0.0) {
            return Err(Error::InvalidParameter(format!("weight {weight} must be > 0")));
        }
        let n = self.len();
        self.push(x)?;
        let w = self.weights.get_or_insert_with(|| vec![1.0; n + 1]);
        w[n] = weight;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbgConfig {
    pub target_size: usize,
    pub max_iterations: usize,
    /// Stop a Lloyd run when `(D_prev - D) / D_prev` falls below this.
    pub rel_tolerance: f64,
    /// Split offset as a fraction of each dimension's standard deviation.
    pub perturbation: f64,
    /// Per-dimension weights of the distortion measure.
    pub dim_weights: Option<Vec<f64>>,
}

impl LbgConfig {
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            max_iterations: 100,
            rel_tolerance: 1e-5,
            perturbation: 0.01,
            dim_weights: None,
        }
    }
}

/// Mean distortion after one Lloyd assignment pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbgRecord {
    pub size: usize,
    pub iteration: usize,
    pub distortion: f64,
}

#[derive(Debug, Clone)]
pub struct LbgOutcome {
    pub codebook: Codebook,
    pub log: Vec<LbgRecord>,
    /// Weighted mean distortion of the final `f32` codebook on the data.
    pub final_distortion: f64,
}

struct Trainer<'a> {
    set: &'a TrainingSet,
    dim_weights: Option<&'a [f64]>,
    delta: Vec<f64>,
    total_weight: f64,
}

impl Trainer<'_> {
    fn distance(&self, x: &[f64], c: &[f64]) -> f64 {
        match self.dim_weights {
            None => x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum(),
            Some(w) => x
                .iter()
                .zip(c)
                .zip(w)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum(),
        }
    }

    fn nearest(&self, x: &[f64], codewords: &[Vec<f64>]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in codewords.iter().enumerate() {
            let d = self.distance(x, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    fn assign(&self, codewords: &[Vec<f64>]) -> Vec<(usize, f64)> {
        let n = self.set.len();
        #[cfg(feature = "parallel")]
        {
            (0..n)
                .into_par_iter()
                .map(|i| self.nearest(self.set.row(i), codewords))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n)
                .map(|i| self.nearest(self.set.row(i), codewords))
                .collect()
        }
    }

    fn mean_distortion(&self, assignment: &[(usize, f64)]) -> f64 {
        let sum: f64 = assignment
            .iter()
            .enumerate()
            .map(|(i, &(_, d))| self.set.weight(i) * d)
            .sum();
        sum / self.total_weight
    }

    fn lloyd(&self, codewords: &mut Vec<Vec<f64>>, cfg: &LbgConfig, log: &mut Vec<LbgRecord>) {
        let size = codewords.len();
        let dim = self.set.dim();
        let mut prev: Option<(f64, Vec<Vec<f64>>)> = None;

        for iteration in 0..cfg.max_iterations {
            let assignment = self.assign(codewords);
            let distortion = self.mean_distortion(&assignment);
            if let Some((p, saved)) = &prev {
                if distortion > *p {
                    *codewords = saved.clone();
                    break;
                }
            }
            log.push(LbgRecord {
                size,
                iteration,
                distortion,
            });
            if distortion == 0.0 {
                break;
            }

            let mut sums = vec![vec![0.0; dim]; size];
            let mut mass = vec![0.0; size];
            let mut cell_error = vec![0.0; size];
            for (i, &(cell, d)) in assignment.iter().enumerate() {
                let w = self.set.weight(i);
                for (s, x) in sums[cell].iter_mut().zip(self.set.row(i)) {
                    *s += w * x;
                }
                mass[cell] += w;
                cell_error[cell] += w * d;
            }

            let saved = codewords.clone();
            let mut repaired = false;
            for cell in 0..size {
                if mass[cell] > 0.0 {
                    for (c, s) in codewords[cell].iter_mut().zip(&sums[cell]) {
                        *c = s / mass[cell];
                    }
                }
            }
            for cell in 0..size {
                if mass[cell] > 0.0 {
                    continue;
                }
                let (worst, err) = cell_error
                    .iter()
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc });
                if err <= 0.0 {
                    break;
                }
                let moved: Vec<f64> = codewords[worst]
                    .iter()
                    .zip(&self.delta)
                    .map(|(c, d)| c + d)
                    .collect();
                codewords[cell] = moved;
                cell_error[worst] = 0.0;
                repaired = true;
            }

            if let Some((p, _)) = &prev {
                if !repaired && (p - distortion) <= cfg.rel_tolerance * p {
                    break;
                }
            }
            prev = Some((distortion, saved));
        }
    }
}

/// Trains a codebook of `cfg.target_size` entries on `set`.
///
/// Deterministic: the same data and configuration always give a
/// bit-identical codebook, independent of thread count.
pub fn lbg_train(set: &TrainingSet, cfg: &LbgConfig) -> Result<LbgOutcome> {
    if set.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    if cfg.target_size == 0 || !cfg.target_size.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "codebook size {} is not a power of two",
            cfg.target_size
        )));
    }
    if set.len() < cfg.target_size {
        return Err(Error::InsufficientData {
            have: set.len(),
            need: cfg.target_size,
        });
    }
    let dim = set.dim();
    if let Some(w) = &cfg.dim_weights {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: w.len(),
            });
        }
    }

    let n = set.len();
    let total_weight: f64 = (0..n).map(|i| set.weight(i)).sum();
    let mut centroid = vec![0.0; dim];
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        let w = set.weight(i);
        for (k, x) in set.row(i).iter().enumerate() {
            centroid[k] += w * x;
            mean[k] += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= total_weight);
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for i in 0..n {
        for (k, x) in set.row(i).iter().enumerate() {
            var[k] += (x - mean[k]).powi(2);
        }
    }
    let delta: Vec<f64> = var
        .iter()
        .map(|v| cfg.perturbation * (v / n as f64).sqrt())
        .collect();

    let trainer = Trainer {
        set,
        dim_weights: cfg.dim_weights.as_deref(),
        delta,
        total_weight,
    };
    let mut log = Vec::new();
    let mut codewords = vec![centroid];
    trainer.lloyd(&mut codewords, cfg, &mut log);
    while codewords.len() < cfg.target_size {
        let mut split = Vec::with_capacity(codewords.len() * 2);
        for c in &codewords {
            split.push(c.iter().zip(&trainer.delta).map(|(c, d)| c + d).collect());
            split.push(c.iter().zip(&trainer.delta).map(|(c, d)| c - d).collect());
        }
        codewords = split;
        trainer.lloyd(&mut codewords, cfg, &mut log);
    }

    let codebook = Codebook::new(
        dim,
        codewords.iter().flatten().map(|&v| v as f32).collect(),
    )?;
    let rounded: Vec<Vec<f64>> = codebook
        .entries()
        .map(|c| c.iter().map(|&v| v as f64).collect())
        .collect();
    let final_distortion = trainer.mean_distortion(&trainer.assign(&rounded));
    Ok(LbgOutcome {
        codebook,
        log,
        final_distortion,
    })
}
