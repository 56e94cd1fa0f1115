//! Autocorrelation-method LPC analysis.
//!
//! Coefficients follow the convention `A(z) = 1 + a[0] z^-1 + ... + a[9] z^-10`,
//! so the predictor is `x̂[n] = -Σ a[i] x[n-1-i]`.

use std::f64::consts::PI;

use super::LPC_ORDER;
use crate::error::{Error, Result};

/// Per-coefficient bandwidth expansion applied after Levinson-Durbin.
pub const BANDWIDTH_EXPANSION: f64 = 0.994;

/// Output of [`lpc_analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpcAnalysis {
    pub coeffs: [f64; LPC_ORDER],
    /// Prediction error energy after each recursion order, `errors[0] = R[0]`.
    pub errors: [f64; LPC_ORDER + 1],
    pub reflection: [f64; LPC_ORDER],
    /// Set when the windowed segment carries no energy.
    pub silent: bool,
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

pub fn autocorrelation(signal: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            signal
                .iter()
                .zip(signal.iter().skip(k))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Levinson-Durbin recursion on `r[0..=order]`.
///
/// Returns `(a, reflection, errors)`. If the prediction error reaches zero
/// the recursion stops and the remaining coefficients stay zero.
pub fn levinson_durbin(r: &[f64], order: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; order];
    let mut k_out = vec![0.0; order];
    let mut errors = vec![0.0; order + 1];
    errors[0] = r[0];
    if r[0] <= 0.0 {
        return (a, k_out, errors);
    }
    let mut err = r[0];
    let mut prev = vec![0.0; order];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc += a[j] * r[i - j];
        }
        if err <= 0.0 {
            errors[i + 1] = err;
            continue;
        }
        let k = -acc / err;
        if k.abs() >= 1.0 {
            // numerically singular; keep the lower-order solution
            errors[i + 1..].fill(err);
            break;
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] + k * prev[i - 1 - j];
        }
        a[i] = k;
        k_out[i] = k;
        err *= 1.0 - k * k;
        errors[i + 1] = err;
    }
    (a, k_out, errors)
}

/// Hamming-windowed autocorrelation LPC of `segment`, followed by bandwidth
/// expansion. The analyzer passes 160 samples (previous frame + current).
pub fn lpc_analyze(segment: &[f64], order: usize) -> Result<LpcAnalysis> {
    if order != LPC_ORDER {
        return Err(Error::InvalidParameter(format!(
            "LPC order must be {LPC_ORDER}, got {order}"
        )));
    }
    if segment.len() <= order {
        return Err(Error::InvalidParameter(format!(
            "segment of {} samples is too short for order {order}",
            segment.len()
        )));
    }
    let window = hamming(segment.len());
    let windowed: Vec<f64> = segment.iter().zip(&window).map(|(x, w)| x * w).collect();
    let r = autocorrelation(&windowed, order);

    let mut out = LpcAnalysis {
        coeffs: [0.0; LPC_ORDER],
        errors: [0.0; LPC_ORDER + 1],
        reflection: [0.0; LPC_ORDER],
        silent: false,
    };
    if r[0] <= f64::MIN_POSITIVE {
        out.silent = true;
        return Ok(out);
    }
    let (a, k, errors) = levinson_durbin(&r, order);
    let mut gamma = 1.0;
    for i in 0..order {
        gamma *= BANDWIDTH_EXPANSION;
        out.coeffs[i] = a[i] * gamma;
    }
    out.reflection.copy_from_slice(&k);
    out.errors.copy_from_slice(&errors);
    Ok(out)
}

/// Step-down recursion: reflection coefficients of `A(z)`. The filter is
/// stable iff every returned coefficient has magnitude below one.
pub fn lpc_to_reflection(lpc: &[f64]) -> Vec<f64> {
    let p = lpc.len();
    let mut a = lpc.to_vec();
    let mut k = vec![0.0; p];
    for i in (0..p).rev() {
        let ki = a[i];
        k[i] = ki;
        let denom = 1.0 - ki * ki;
        if denom <= 0.0 {
            // |k| >= 1, the caller only needs to see it
            break;
        }
        let prev = a.clone();
        for j in 0..i {
            a[j] = (prev[j] - ki * prev[i - 1 - j]) / denom;
        }
    }
    k
}

/// Step-up recursion from reflection coefficients to direct-form LPC.
pub fn reflection_to_lpc(k: &[f64]) -> Vec<f64> {
    let p = k.len();
    let mut a = vec![0.0; p];
    let mut prev = vec![0.0; p];
    for i in 0..p {
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] + k[i] * prev[i - 1 - j];
        }
        a[i] = k[i];
    }
    a
}

pub fn is_stable(lpc: &[f64]) -> bool {
    lpc_to_reflection(lpc).iter().all(|k| k.abs() < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white_noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_frame_is_silent() {
        let lpc = lpc_analyze(&[0.0; 160], 10).unwrap();
        assert!(lpc.silent);
        assert_eq!(lpc.coeffs, [0.0; 10]);
    }

    #[test]
    fn prediction_error_non_increasing() {
        for seed in 0..20 {
            let x = white_noise(160, seed);
            let lpc = lpc_analyze(&x, 10).unwrap();
            assert!(!lpc.silent);
            for w in lpc.errors.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", lpc.errors);
            }
            assert!(lpc.errors[10] <= lpc.errors[0]);
            assert!(is_stable(&lpc.coeffs));
        }
    }

    #[test]
    fn residual_energy_below_frame_energy() {
        let x = white_noise(160, 7);
        let lpc = lpc_analyze(&x, 10).unwrap();
        let window = hamming(160);
        let windowed: Vec<f64> = x.iter().zip(&window).map(|(a, w)| a * w).collect();
        let frame_energy: f64 = windowed.iter().map(|v| v * v).sum();
        assert!((lpc.errors[0] - frame_energy).abs() < 1e-12);
        assert!(lpc.errors[10] <= frame_energy);
    }

    #[test]
    fn reflection_round_trip() {
        let k = [0.5, -0.3, 0.9, 0.1, -0.7, 0.2, 0.0, 0.4, -0.95, 0.3];
        let a = reflection_to_lpc(&k);
        let back = lpc_to_reflection(&a);
        for (x, y) in k.iter().zip(&back) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_wrong_order() {
        assert!(lpc_analyze(&[0.1; 160], 12).is_err());
    }
}
