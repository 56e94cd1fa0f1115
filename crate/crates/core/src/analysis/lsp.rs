//! LPC <-> line spectrum pair conversion.
//!
//! With `A(z)` of order 10, `P(z) = A(z) + z^-11 A(1/z)` and
//! `Q(z) = A(z) - z^-11 A(1/z)`. After removing the trivial roots at
//! `z = -1` (P) and `z = 1` (Q) both become symmetric degree-10 polynomials
//! whose unit-circle roots interlace: the lowest LSP belongs to P.

use std::f64::consts::PI;

use super::LPC_ORDER;
use crate::error::{Error, Result};

const HALF: usize = LPC_ORDER / 2;
const GRID_POINTS: usize = 4096;
const BISECTION_STEPS: usize = 64;

/// Coefficients of the symmetric degree-10 polynomials `P(z)/(1+z^-1)` and
/// `Q(z)/(1-z^-1)`, first six taps each (the rest mirror them).
fn symmetric_halves(lpc: &[f64; LPC_ORDER]) -> ([f64; HALF + 1], [f64; HALF + 1]) {
    let mut a = [0.0; LPC_ORDER + 2];
    a[0] = 1.0;
    a[1..=LPC_ORDER].copy_from_slice(lpc);
    // P and Q of degree 11
    let mut p = [0.0; LPC_ORDER + 2];
    let mut q = [0.0; LPC_ORDER + 2];
    for i in 0..=LPC_ORDER + 1 {
        p[i] = a[i] + a[LPC_ORDER + 1 - i];
        q[i] = a[i] - a[LPC_ORDER + 1 - i];
    }
    // deflate by (1 + z^-1) and (1 - z^-1)
    let mut p1 = [0.0; HALF + 1];
    let mut q1 = [0.0; HALF + 1];
    let mut pp = 0.0;
    let mut qq = 0.0;
    for i in 0..=HALF {
        pp = p[i] - pp;
        qq += q[i];
        p1[i] = pp;
        q1[i] = qq;
    }
    (p1, q1)
}

/// Real-valued `e^{j5ω} F(e^{jω})` for a symmetric degree-10 polynomial `F`.
fn eval_symmetric(half: &[f64; HALF + 1], omega: f64) -> f64 {
    let mut sum = half[HALF];
    for (k, c) in half.iter().take(HALF).enumerate() {
        sum += 2.0 * c * (((HALF - k) as f64) * omega).cos();
    }
    sum
}

fn bisect(half: &[f64; HALF + 1], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval_symmetric(half, lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval_symmetric(half, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn roots_on_grid(half: &[f64; HALF + 1]) -> Vec<f64> {
    let step = PI / GRID_POINTS as f64;
    let mut roots = Vec::with_capacity(HALF);
    let mut prev_w = 0.0;
    let mut prev_f = eval_symmetric(half, 0.0);
    for i in 1..=GRID_POINTS {
        let w = step * i as f64;
        let f = eval_symmetric(half, w);
        if f == 0.0 {
            roots.push(w);
        } else if prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0) {
            roots.push(bisect(half, prev_w, w));
        }
        prev_w = w;
        prev_f = f;
    }
    roots.retain(|&w| w > 0.0 && w < PI);
    roots
}

/// Converts LPC coefficients to 10 LSP frequencies in radians.
///
/// `frame` is only used to label the error when the root search does not
/// find ten interlaced roots (unstable or near-degenerate input).
pub fn lpc_to_lsp(lpc: &[f64; LPC_ORDER], frame: usize) -> Result<[f64; LPC_ORDER]> {
    let (p1, q1) = symmetric_halves(lpc);
    let p_roots = roots_on_grid(&p1);
    let q_roots = roots_on_grid(&q1);
    let found = p_roots.len() + q_roots.len();
    if p_roots.len() != HALF || q_roots.len() != HALF {
        return Err(Error::LspConversion { frame, found });
    }
    let mut lsp = [0.0; LPC_ORDER];
    for i in 0..HALF {
        lsp[2 * i] = p_roots[i];
        lsp[2 * i + 1] = q_roots[i];
    }
    if check_lsp_order(&lsp).is_err() {
        return Err(Error::LspConversion { frame, found });
    }
    Ok(lsp)
}

pub fn check_lsp_order(lsp: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for (position, &w) in lsp.iter().enumerate() {
        if !(w > prev && w < PI) {
            return Err(Error::LspOrdering { position });
        }
        prev = w;
    }
    Ok(())
}

/// Multiplies out `Π (1 - 2cos(ω) z^-1 + z^-2)` over the given frequencies.
fn product_of_quadratics(freqs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut poly = vec![1.0];
    for w in freqs {
        let c = -2.0 * w.cos();
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &v) in poly.iter().enumerate() {
            next[i] += v;
            next[i + 1] += c * v;
            next[i + 2] += v;
        }
        poly = next;
    }
    poly
}

/// Converts strictly increasing LSPs in (0, π) back to LPC coefficients.
pub fn lsp_to_lpc(lsp: &[f64; LPC_ORDER]) -> Result<[f64; LPC_ORDER]> {
    check_lsp_order(lsp)?;
    let p1 = product_of_quadratics(lsp.iter().step_by(2).copied());
    let q1 = product_of_quadratics(lsp.iter().skip(1).step_by(2).copied());
    // P = P1 (1 + z^-1), Q = Q1 (1 - z^-1), A = (P + Q) / 2
    let mut a = [0.0; LPC_ORDER];
    for (i, coeff) in a.iter_mut().enumerate() {
        let n = i + 1;
        let p = p1[n] + p1[n - 1];
        let q = q1[n] - q1[n - 1];
        *coeff = 0.5 * (p + q);
    }
    Ok(a)
}
