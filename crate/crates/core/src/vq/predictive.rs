//! Leaky first-order predictive VQ.
//!
//! The prediction is `coeff ⊙ prev`, where `prev` is the previous
//! reconstruction (zero before the first vector). The encoder quantizes
//! `x - prediction` and both sides rebuild `prediction + codeword` through
//! the same function, so their states cannot drift apart.

use super::Codebook;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub coeffs: Vec<f64>,
}

impl PredictorConfig {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::InvalidParameter(format!(
                "prediction coefficient {c} outside [0, 1)"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveState {
    prev_decoded: Vec<f64>,
    initialized: bool,
}

impl PredictiveState {
    pub fn new(dim: usize) -> Self {
        Self {
            prev_decoded: vec![0.0; dim],
            initialized: false,
        }
    }

    pub fn prev_decoded(&self) -> &[f64] {
        &self.prev_decoded
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn prediction(&self, cfg: &PredictorConfig) -> Vec<f64> {
        if self.initialized {
            self.prev_decoded
                .iter()
                .zip(&cfg.coeffs)
                .map(|(p, c)| c * p)
                .collect()
        } else {
            vec![0.0; self.prev_decoded.len()]
        }
    }
}

fn check_dims(cb: &Codebook, cfg: &PredictorConfig, st: &PredictiveState) -> Result<()> {
    for actual in [cfg.dim(), st.prev_decoded.len()] {
        if actual != cb.dim() {
            return Err(Error::DimensionMismatch {
                expected: cb.dim(),
                actual,
            });
        }
    }
    Ok(())
}

/// Shared reconstruction path of encoder and decoder.
fn reconstruct(cb: &Codebook, cfg: &PredictorConfig, st: &mut PredictiveState, index: usize) -> Vec<f64> {
    let prediction = st.prediction(cfg);
    let rec: Vec<f64> = prediction
        .iter()
        .zip(cb.entry(index))
        .map(|(p, &c)| p + c as f64)
        .collect();
    st.prev_decoded.copy_from_slice(&rec);
    st.initialized = true;
    rec
}

/// Quantizes `x` against the prediction from `st` and advances the state.
/// Returns the chosen index and the reconstruction.
pub fn predictive_quantize(
    cb: &Codebook,
    cfg: &PredictorConfig,
    st: &mut PredictiveState,
    x: &[f64],
    weights: Option<&[f64]>,
) -> Result<(usize, Vec<f64>)> {
    check_dims(cb, cfg, st)?;
    let prediction = st.prediction(cfg);
    let residual: Vec<f64> = x.iter().zip(&prediction).map(|(a, p)| a - p).collect();
    let (index, _) = cb.nearest(&residual, weights)?;
    Ok((index, reconstruct(cb, cfg, st, index)))
}

pub fn predictive_dequantize(
    cb: &Codebook,
    cfg: &PredictorConfig,
    st: &mut PredictiveState,
    index: usize,
) -> Result<Vec<f64>> {
    check_dims(cb, cfg, st)?;
    if index >= cb.len() {
        return Err(Error::InvalidParameter(format!(
            "index {index} outside codebook of {}",
            cb.len()
        )));
    }
    Ok(reconstruct(cb, cfg, st, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> PredictorConfig {
        PredictorConfig::new(vec![0.8, 0.9]).unwrap()
    }

    #[test]
    fn first_vector_exact_when_in_book() {
        let cb = Codebook::new(2, vec![0.0, 0.0, 1.5, -20.0, 3.0, 1.0]).unwrap();
        let mut st = PredictiveState::new(2);
        let (i, rec) = predictive_quantize(&cb, &cfg(), &mut st, &[1.5, -20.0], None).unwrap();
        assert_eq!(i, 1);
        assert_eq!(rec, vec![1.5, -20.0]);
        assert!(st.is_initialized());
    }

    #[test]
    fn constant_input_settles_at_fixed_point() {
        let target = [1.0, -20.0];
        let cfg = cfg();
        // (1 - coeff) * target is the steady-state residual
        let steady = [0.2f32 * 1.0, 0.1f32 * -20.0];
        let cb = Codebook::new(
            2,
            vec![5.0, 5.0, steady[0], steady[1], 1.0, -20.0, -3.0, 9.0],
        )
        .unwrap();
        let mut st = PredictiveState::new(2);
        let mut errors = Vec::new();
        for _ in 0..10 {
            let (_, rec) = predictive_quantize(&cb, &cfg, &mut st, &target, None).unwrap();
            errors.push(((rec[0] - target[0]).powi(2) + (rec[1] - target[1]).powi(2)).sqrt());
        }
        assert!(errors.iter().all(|&e| e < 1e-6), "{errors:?}");
    }

    #[test]
    fn coefficient_range_checked() {
        assert!(PredictorConfig::new(vec![1.0]).is_err());
        assert!(PredictorConfig::new(vec![-0.1]).is_err());
    }

    #[test]
    fn index_out_of_range() {
        let cb = Codebook::new(2, vec![0.0; 4]).unwrap();
        let mut st = PredictiveState::new(2);
        assert!(predictive_dequantize(&cb, &cfg(), &mut st, 2).is_err());
    }

    proptest! {
        #[test]
        fn encoder_and_decoder_states_agree(xs in prop::collection::vec((0.0f64..3.0, -40.0f64..0.0), 1..200)) {
            let cb = Codebook::new(2, (0..128).map(|i| ((i * 37) % 23) as f32 * 0.3 - 3.0).collect()).unwrap();
            let cfg = cfg();
            let mut enc = PredictiveState::new(2);
            let mut dec = PredictiveState::new(2);
            for (p, e) in xs {
                let (i, rec_enc) = predictive_quantize(&cb, &cfg, &mut enc, &[p, e], None).unwrap();
                let rec_dec = predictive_dequantize(&cb, &cfg, &mut dec, i).unwrap();
                prop_assert_eq!(rec_enc, rec_dec);
                prop_assert_eq!(&enc, &dec);
            }
        }
    }
}
