//! Normalized-autocorrelation pitch tracker on a 1 kHz low-passed signal.

use std::collections::VecDeque;
use std::f64::consts::PI;

use super::{AudioFrame, SAMPLE_RATE};

pub const MIN_F0_HZ: f64 = 50.0;
pub const MAX_F0_HZ: f64 = 400.0;
/// Shortest and longest candidate lags in samples (400 Hz and 50 Hz).
pub const MIN_LAG: usize = (SAMPLE_RATE / MAX_F0_HZ) as usize;
pub const MAX_LAG: usize = (SAMPLE_RATE / MIN_F0_HZ) as usize;

const BUFFER_LEN: usize = 3 * MAX_LAG;
const LOWPASS_TAPS: usize = 31;
const LOWPASS_CUTOFF_HZ: f64 = 1000.0;
const CONTINUITY_BIAS: f64 = 1.05;
const CONTINUITY_RANGE: f64 = 0.1;
const SUBMULTIPLE_RATIO: f64 = 0.85;

pub fn min_wo() -> f64 {
    2.0 * PI * MIN_F0_HZ / SAMPLE_RATE
}

pub fn max_wo() -> f64 {
    2.0 * PI * MAX_F0_HZ / SAMPLE_RATE
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    /// Pitch in radians per sample.
    pub wo: f64,
    /// Normalized autocorrelation at the chosen lag, in [-1, 1].
    pub confidence: f64,
}

impl PitchEstimate {
    pub fn f0_hz(&self) -> f64 {
        self.wo * SAMPLE_RATE / (2.0 * PI)
    }
}

fn lowpass_kernel() -> [f64; LOWPASS_TAPS] {
    let mut h = [0.0; LOWPASS_TAPS];
    let fc = LOWPASS_CUTOFF_HZ / SAMPLE_RATE;
    let mid = (LOWPASS_TAPS / 2) as f64;
    let window = super::lpc::hamming(LOWPASS_TAPS);
    for (n, tap) in h.iter_mut().enumerate() {
        let t = n as f64 - mid;
        let sinc = if t == 0.0 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * t).sin() / (PI * t)
        };
        *tap = sinc * window[n];
    }
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Stateful tracker: keeps the low-passed history and the previous lag.
#[derive(Debug, Clone)]
pub struct PitchTracker {
    kernel: [f64; LOWPASS_TAPS],
    fir_state: VecDeque<f64>,
    history: VecDeque<f64>,
    prev_lag: Option<f64>,
}

impl Default for PitchTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl PitchTracker {
    pub fn new() -> Self {
        Self {
            kernel: lowpass_kernel(),
            fir_state: VecDeque::from(vec![0.0; LOWPASS_TAPS - 1]),
            history: VecDeque::from(vec![0.0; BUFFER_LEN]),
            prev_lag: None,
        }
    }

    fn push_samples(&mut self, frame: &AudioFrame) {
        for &x in frame.samples.iter() {
            self.fir_state.push_back(x);
            let y: f64 = self
                .fir_state
                .iter()
                .rev()
                .zip(self.kernel.iter())
                .map(|(s, h)| s * h)
                .sum();
            self.fir_state.pop_front();
            self.history.push_back(y);
            self.history.pop_front();
        }
    }

    /// Normalized autocorrelation of the buffered low-passed signal at `lag`.
    fn nacf(buf: &[f64], lag: usize) -> f64 {
        let n = buf.len() - lag;
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let a = buf[i];
            let b = buf[i + lag];
            xy += a * b;
            xx += a * a;
            yy += b * b;
        }
        let denom = (xx * yy).sqrt();
        if denom <= 1e-20 {
            0.0
        } else {
            xy / denom
        }
    }

    /// Estimates the pitch of `frame` given the frames seen so far.
    pub fn estimate(&mut self, frame: &AudioFrame) -> PitchEstimate {
        self.push_samples(frame);
        let buf: Vec<f64> = self.history.iter().copied().collect();
        let corr: Vec<f64> = (0..=MAX_LAG + 1)
            .map(|lag| if lag < MIN_LAG - 1 { 0.0 } else { Self::nacf(&buf, lag) })
            .collect();

        let score = |lag: usize| -> f64 {
            let mut s = corr[lag];
            if let Some(prev) = self.prev_lag {
                if (lag as f64 - prev).abs() <= CONTINUITY_RANGE * prev && s > 0.0 {
                    s *= CONTINUITY_BIAS;
                }
            }
            s
        };

        let mut best = MIN_LAG;
        let mut best_score = f64::NEG_INFINITY;
        for lag in MIN_LAG..=MAX_LAG {
            let s = score(lag);
            if s > best_score {
                best_score = s;
                best = lag;
            }
        }

        // Local maximum of corr within one sample of `center`.
        let local_peak = |center: f64| -> (usize, f64) {
            let lo = (center.floor() as usize).saturating_sub(1).max(MIN_LAG);
            let hi = ((center.ceil() as usize) + 1).min(MAX_LAG);
            (lo..=hi)
                .map(|l| (l, corr[l]))
                .fold((lo, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
        };

        // Prefer the shortest submultiple that is nearly as periodic, provided
        // every multiple of it up to the peak is too.
        let peak = corr[best];
        let threshold = SUBMULTIPLE_RATIO * peak;
        for divisor in (2..=best / MIN_LAG).rev() {
            let center = best as f64 / divisor as f64;
            let (cand, value) = local_peak(center);
            if !(value >= threshold && value > 0.0) {
                continue;
            }
            if (2..divisor).all(|k| local_peak(k as f64 * center).1 >= threshold) {
                best = cand;
                break;
            }
        }

        let confidence = corr[best];
        let mut lag = best as f64;
        if best > MIN_LAG && best < MAX_LAG {
            let (y0, y1, y2) = (corr[best - 1], corr[best], corr[best + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            if denom < 0.0 {
                let offset = 0.5 * (y0 - y2) / denom;
                if offset.abs() < 1.0 {
                    lag += offset;
                }
            }
        }
        let wo = (2.0 * PI / lag).clamp(min_wo(), max_wo());
        self.prev_lag = Some(lag);
        PitchEstimate { wo, confidence }
    }
}
