//! Vector quantization: codebooks, weighted nearest-neighbour search, LBG
//! training, two-stage split search and leaky predictive quantization.

mod file;
pub mod lbg;
pub mod predictive;

use crate::error::{Error, Result};

pub use file::{read_codebook, write_codebook, CODEBOOK_MAGIC, CODEBOOK_VERSION};
pub use lbg::{lbg_train, LbgConfig, LbgOutcome, LbgRecord, TrainingSet};
pub use predictive::{
    predictive_dequantize, predictive_quantize, PredictiveState, PredictorConfig,
};

/// Trained code vectors stored row-major as `f32`, the on-disk precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dim: usize,
    entries: Vec<f32>,
}

impl Codebook {
    pub fn new(dim: usize, entries: Vec<f32>) -> Result<Self> {
        if dim == 0 || entries.is_empty() || entries.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} values do not form rows of dimension {dim}",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Self::new(dim, rows.iter().flatten().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index width: `ceil(log2(len))`.
    pub fn bits(&self) -> u32 {
        let n = self.len();
        if n <= 1 {
            0
        } else {
            usize::BITS - (n - 1).leading_zeros()
        }
    }

    pub fn entry(&self, index: usize) -> &[f32] {
        &self.entries[index * self.dim..(index + 1) * self.dim]
    }

    pub fn entries(&self) -> impl Iterator<Item = &[f32]> {
        self.entries.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f32] {
        &self.entries
    }

    /// Nearest code vector under `Σ w_i (x_i - c_i)^2`; ties go to the lowest
    /// index.
    pub fn nearest(&self, x: &[f64], weights: Option<&[f64]>) -> Result<(usize, f64)> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        if let Some(w) = weights {
            if w.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    actual: w.len(),
                });
            }
        }
        Ok(self.nearest_unchecked(x, weights))
    }

    pub(crate) fn nearest_unchecked(&self, x: &[f64], weights: Option<&[f64]>) -> (usize, f64) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.entries().enumerate() {
            let d = weighted_distance(x, c, weights);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        (best, best_d)
    }
}

pub(crate) fn weighted_distance(x: &[f64], c: &[f32], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => x
            .iter()
            .zip(c)
            .map(|(a, &b)| {
                let d = a - b as f64;
                d * d
            })
            .sum(),
        Some(w) => x
            .iter()
            .zip(c)
            .zip(w)
            .map(|((a, &b), w)| {
                let d = a - b as f64;
                w * d * d
            })
            .sum(),
    }
}

/// Free-function form of [`Codebook::nearest`].
pub fn nearest_code(cb: &Codebook, x: &[f64], weights: Option<&[f64]>) -> Result<(usize, f64)> {
    cb.nearest(x, weights)
}

/// Indices and reconstruction of a two-stage split quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitIndices {
    pub stage1: usize,
    pub odd: usize,
    pub even: usize,
}

/// Positions 0, 2, 4, 6, 8: the odd orders (1st, 3rd, ...) of a 10-vector.
pub fn odd_order(x: &[f64]) -> Vec<f64> {
    x.iter().step_by(2).copied().collect()
}

/// Positions 1, 3, 5, 7, 9: the even orders.
pub fn even_order(x: &[f64]) -> Vec<f64> {
    x.iter().skip(1).step_by(2).copied().collect()
}

/// Rebuilds `stage1 + interleave(odd, even)` for given indices.
pub fn split_reconstruct(
    stage1: &Codebook,
    odd: &Codebook,
    even: &Codebook,
    idx: SplitIndices,
) -> Vec<f64> {
    let base = stage1.entry(idx.stage1);
    let o = odd.entry(idx.odd);
    let e = even.entry(idx.even);
    base.iter()
        .enumerate()
        .map(|(i, &b)| {
            let r = if i % 2 == 0 { o[i / 2] } else { e[i / 2] };
            b as f64 + r as f64
        })
        .collect()
}

/// Stage-1 search over the full vector, then the residual split into odd- and
/// even-order halves searched independently.
pub fn quantize_two_stage_split(
    stage1: &Codebook,
    odd: &Codebook,
    even: &Codebook,
    x: &[f64],
) -> Result<(SplitIndices, Vec<f64>)> {
    if odd.dim() * 2 != stage1.dim() || even.dim() * 2 != stage1.dim() {
        return Err(Error::DimensionMismatch {
            expected: stage1.dim() / 2,
            actual: odd.dim().max(even.dim()),
        });
    }
    let (i1, _) = stage1.nearest(x, None)?;
    let residual: Vec<f64> = x
        .iter()
        .zip(stage1.entry(i1))
        .map(|(a, &c)| a - c as f64)
        .collect();
    let (io, _) = odd.nearest_unchecked(&odd_order(&residual), None);
    let (ie, _) = even.nearest_unchecked(&even_order(&residual), None);
    let idx = SplitIndices {
        stage1: i1,
        odd: io,
        even: ie,
    };
    Ok((idx, split_reconstruct(stage1, odd, even, idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_book(rng: &mut ChaCha8Rng, size: usize, dim: usize) -> Codebook {
        Codebook::new(dim, (0..size * dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn scan(cb: &Codebook, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for i in 0..cb.len() {
            let d: f64 = (0..cb.dim())
                .map(|k| (x[k] - cb.entry(i)[k] as f64).powi(2))
                .sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    #[test]
    fn exact_member_has_zero_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cb = random_book(&mut rng, 64, 2);
        let x: Vec<f64> = cb.entry(17).iter().map(|&v| v as f64).collect();
        assert_eq!(cb.nearest(&x, None).unwrap(), (17, 0.0));
    }

    #[test]
    fn single_entry_book() {
        let cb = Codebook::new(2, vec![1.0, 2.0]).unwrap();
        let (i, d) = cb.nearest(&[0.0, 0.0], None).unwrap();
        assert_eq!(i, 0);
        assert_eq!(d, 5.0);
        assert_eq!(cb.bits(), 0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let cb = Codebook::new(1, vec![1.0, -1.0, 1.0]).unwrap();
        assert_eq!(cb.nearest(&[0.0], None).unwrap().0, 0);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let cb = Codebook::new(2, vec![0.0; 8]).unwrap();
        assert!(matches!(
            cb.nearest(&[0.0; 3], None),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn bit_widths() {
        for (n, bits) in [(64, 6), (128, 7), (256, 8), (512, 9), (100, 7)] {
            assert_eq!(Codebook::new(1, vec![0.0; n]).unwrap().bits(), bits);
        }
    }

    #[test]
    fn weights_change_the_winner() {
        let cb = Codebook::new(2, vec![1.0, 0.0, 0.0, 1.5]).unwrap();
        assert_eq!(cb.nearest(&[0.0, 0.0], None).unwrap().0, 0);
        assert_eq!(cb.nearest(&[0.0, 0.0], Some(&[4.0, 1.0])).unwrap().0, 1);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cb = random_book(&mut rng, 512, 10);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.5..1.5)).collect();
            assert_eq!(cb.nearest(&x, None).unwrap().0, scan(&cb, &x));
        }
    }

    #[test]
    fn split_exact_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let stage1 = random_book(&mut rng, 512, 10);
        let mut odd = random_book(&mut rng, 128, 5);
        let mut even = random_book(&mut rng, 128, 5);
        odd.entries[..5].fill(0.0);
        even.entries[..5].fill(0.0);
        let x: Vec<f64> = stage1.entry(300).iter().map(|&v| v as f64).collect();
        let (idx, rec) = quantize_two_stage_split(&stage1, &odd, &even, &x).unwrap();
        assert_eq!(idx, SplitIndices { stage1: 300, odd: 0, even: 0 });
        assert_eq!(rec, x);
        assert_eq!(stage1.bits() + odd.bits() + even.bits(), 23);
    }

    proptest! {
        #[test]
        fn second_stage_never_hurts_with_zero_vector(seed in 0u64..1000, xs in prop::collection::vec(-1.0f64..1.0, 10)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stage1 = random_book(&mut rng, 32, 10);
            let mut odd = random_book(&mut rng, 16, 5);
            let mut even = random_book(&mut rng, 16, 5);
            let last = odd.len() - 1;
            odd.entries[last * 5..].fill(0.0);
            even.entries[last * 5..].fill(0.0);
            let (i1, d1) = stage1.nearest(&xs, None).unwrap();
            let (idx, rec) = quantize_two_stage_split(&stage1, &odd, &even, &xs).unwrap();
            prop_assert_eq!(idx.stage1, i1);
            let d2: f64 = xs.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(d2 <= d1 + 1e-12);
        }
    }
}
