//! Trigonometric interpolation of real periodic samples taken at the
//! uniform parameters `t_j = 2πj/M`, `M` even.
//!
//! The Nyquist mode is split symmetrically between `±M/2`, so the
//! interpolant of real data is real and `cos(Mt/2)` carries the Nyquist
//! coefficient.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Fourier coefficients `c_k` with `f(t_j) = Σ c_k e^{ikt_j}`, stored in FFT
/// order (non-negative frequencies first).
pub fn coefficients(samples: &[f64]) -> Vec<Complex64> {
    let m = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`coefficients`], returning the real part.
pub fn synthesize(coeffs: &[Complex64]) -> Vec<f64> {
    let m = coeffs.len();
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Signed wavenumber of FFT slot `idx` for length `m`; the Nyquist slot
/// reports `+m/2`.
pub fn wavenumber(idx: usize, m: usize) -> i64 {
    if idx <= m / 2 {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

/// Spectral derivative of order `order` with respect to `t ∈ [0, 2π)`.
pub fn derivative(samples: &[f64], order: u32) -> Vec<f64> {
    let m = samples.len();
    let mut c = coefficients(samples);
    for (idx, ck) in c.iter_mut().enumerate() {
        let k = wavenumber(idx, m);
        if m % 2 == 0 && idx == m / 2 && order % 2 == 1 {
            *ck = Complex64::new(0.0, 0.0);
            continue;
        }
        let factor = Complex64::new(0.0, k as f64).powu(order);
        *ck *= factor;
    }
    synthesize(&c)
}

/// Multiplies mode `|k|` by `response(|k|)`.
pub fn filter(samples: &[f64], response: impl Fn(u64) -> f64) -> Vec<f64> {
    let m = samples.len();
    let mut c = coefficients(samples);
    for (idx, ck) in c.iter_mut().enumerate() {
        *ck *= response(wavenumber(idx, m).unsigned_abs());
    }
    synthesize(&c)
}

/// Zero-padded resampling of the trigonometric interpolant onto `target`
/// uniform nodes (`target ≥ samples.len()`, both even).
pub fn upsample(samples: &[f64], target: usize) -> Vec<f64> {
    let m = samples.len();
    debug_assert!(target >= m && m % 2 == 0);
    if target == m {
        return samples.to_vec();
    }
    let c = coefficients(samples);
    let mut padded = vec![Complex64::new(0.0, 0.0); target];
    let half = m / 2;
    for k in 0..half {
        padded[k] = c[k];
    }
    for k in 1..half {
        padded[target - k] = c[m - k];
    }
    // split the Nyquist coefficient
    padded[half] = c[half] * 0.5;
    padded[target - half] = c[half] * 0.5;
    synthesize(&padded)
}

/// Real trigonometric series ready for pointwise evaluation.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    mean: f64,
    // (cos, sin) amplitudes for k = 1..=M/2
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigSeries {
    pub fn new(samples: &[f64]) -> Self {
        let m = samples.len();
        let c = coefficients(samples);
        let half = m / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for k in 1..=half {
            if m % 2 == 0 && k == half {
                cos.push(c[k].re);
                sin.push(0.0);
            } else {
                cos.push(2.0 * c[k].re);
                sin.push(-2.0 * c[k].im);
            }
        }
        TrigSeries { mean: c[0].re, cos, sin }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.mean;
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * ck + b * sk;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }

    /// Value of `∫₀ᵗ (f − mean) dt'`, i.e. the periodic part of the antiderivative.
    pub fn eval_periodic_antiderivative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (idx + 1) as f64;
            let (s, c) = (k * t).sin_cos();
            acc += a * s / k + b * (1.0 - c) / k;
        }
        acc
    }

    /// Drops trailing modes whose amplitude is below `tol` relative to the largest.
    pub fn truncate(mut self, tol: f64) -> Self {
        let peak = self
            .cos
            .iter()
            .zip(&self.sin)
            .map(|(a, b)| a.hypot(*b))
            .fold(self.mean.abs(), f64::max);
        let keep = self
            .cos
            .iter()
            .zip(&self.sin)
            .rposition(|(a, b)| a.hypot(*b) > tol * peak)
            .map_or(0, |p| p + 1);
        self.cos.truncate(keep);
        self.sin.truncate(keep);
        self
    }
}

/// Uniform parameter of node `j` out of `m`.
pub fn node_parameter(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}
