//! Shared FFT plumbing: cached plans, normalized transform pairs, and
//! band-limited spectral operations on periodic sample vectors.
//!
//! The forward transform is the plain unnormalized discrete Fourier sum; the
//! inverse divides by the length, so `inverse(forward(x)) == x` to rounding.
//! Spectral derivatives and shifts act on the band-limited trigonometric
//! interpolant of the samples, which keeps them exactly unitary operations
//! on the discrete model.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type Plan = Arc<dyn rustfft::Fft<f64>>;

// plan cache shared by every transform in the crate; plans are immutable
// once created and cheap to clone via Arc
static PLANS: Lazy<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
    Lazy::new(|| Mutex::new((FftPlanner::new(), HashMap::new())));

fn plan(len: usize, forward: bool) -> Plan {
    let mut guard = PLANS.lock().expect("fft plan cache poisoned");
    let (planner, cache) = &mut *guard;
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// In-place unnormalized forward FFT.
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// In-place inverse FFT normalized by 1/n, so it exactly inverts
/// [`fft_forward`].
pub fn fft_inverse(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Wavenumber of FFT bin `j` for a periodic box of length `len_x` sampled at
/// `n` points, in the standard order (non-negative bins first).
pub fn bin_wavenumber(j: usize, n: usize, len_x: f64) -> f64 {
    let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * std::f64::consts::PI * m / len_x
}

/// Differentiates periodic samples spectrally: multiplies bin j by i·k_j.
///
/// The Nyquist bin is zeroed; its derivative has no consistent sign on a
/// real sampling and the fields handled here carry no Nyquist mass.
pub fn spectral_derivative(samples: &[Complex64], len_x: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft_forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        if n % 2 == 0 && j == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, bin_wavenumber(j, n, len_x));
        }
    }
    fft_inverse(&mut buf);
    buf
}

/// Second spectral derivative of periodic samples: multiplies bin j by −k_j².
pub fn spectral_second_derivative(samples: &[Complex64], len_x: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft_forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let k = bin_wavenumber(j, n, len_x);
        *v *= -k * k;
    }
    fft_inverse(&mut buf);
    buf
}

/// Shifts periodic samples by `a`: returns the band-limited interpolant of
/// the input evaluated at x − a. Exact for grid-multiple shifts; unitary for
/// every `a`.
pub fn spectral_shift(samples: &[Complex64], len_x: f64, a: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft_forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let k = bin_wavenumber(j, n, len_x);
        *v *= Complex64::from_polar(1.0, -k * a);
    }
    fft_inverse(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian_samples(n: usize, len_x: f64) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let x = -len_x / 2.0 + len_x * j as f64 / n as f64;
                Complex64::new((-x * x / 2.0).exp(), 0.0)
            })
            .collect()
    }

    /// Round trip forward then inverse reproduces the input to rounding.
    #[test]
    fn round_trip_identity() {
        let samples = gaussian_samples(256, 40.0);
        let mut buf = samples.clone();
        fft_forward(&mut buf);
        fft_inverse(&mut buf);
        for (a, b) in samples.iter().zip(buf.iter()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    /// Spectral derivative of a Gaussian matches the closed form −x e^{−x²/2}.
    #[test]
    fn derivative_matches_closed_form() {
        let n = 512;
        let len_x = 40.0;
        let samples = gaussian_samples(n, len_x);
        let d = spectral_derivative(&samples, len_x);
        for (j, v) in d.iter().enumerate() {
            let x = -len_x / 2.0 + len_x * j as f64 / n as f64;
            let expect = -x * (-x * x / 2.0).exp();
            assert_abs_diff_eq!(v.re, expect, epsilon = 1e-9);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-9);
        }
    }

    /// A half-cell spectral shift of a plane wave equals the exact phase.
    #[test]
    fn shift_of_plane_wave_is_exact() {
        let n = 128;
        let len_x = 32.0;
        let k0 = 2.0 * std::f64::consts::PI * 5.0 / len_x;
        let samples: Vec<Complex64> = (0..n)
            .map(|j| {
                let x = len_x * j as f64 / n as f64;
                Complex64::from_polar(1.0, k0 * x)
            })
            .collect();
        let a = 0.5 * len_x / n as f64;
        let shifted = spectral_shift(&samples, len_x, a);
        for (j, v) in shifted.iter().enumerate() {
            let x = len_x * j as f64 / n as f64;
            let expect = Complex64::from_polar(1.0, k0 * (x - a));
            assert_abs_diff_eq!(v.re, expect.re, epsilon = 1e-12);
            assert_abs_diff_eq!(v.im, expect.im, epsilon = 1e-12);
        }
    }

    /// Spectral shift preserves the discrete L² norm for non-grid shifts.
    #[test]
    fn shift_is_unitary() {
        let samples = gaussian_samples(256, 40.0);
        let shifted = spectral_shift(&samples, 40.0, 0.318309886);
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm(&samples), norm(&shifted), epsilon = 1e-12);
    }
}
