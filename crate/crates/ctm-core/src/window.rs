//! Smooth spatial windows and the windowed norm suite.
//!
//! All cutoffs are erf-style ramps of width 2ε rather than sharp
//! indicators; sharp cuts would put Gibbs oscillations into every weighted
//! norm at the window edges.

use crate::field::SpinorField;
use crate::track::ModelConfig;
use serde::Serialize;

/// Default ramp half-width ε of the smooth windows, in length units.
pub const DEFAULT_RAMP_EPS: f64 = 1.0;

/// Smooth step rising from 0 to 1 across `center`, with ramp half-width
/// `eps`.
pub fn ramp_up(x: f64, center: f64, eps: f64) -> f64 {
    0.5 * (1.0 + libm::erf((x - center) / eps))
}

/// Smooth plateau equal to 1 on [a, b] and 0 outside, with erf ramps of
/// half-width `eps` at both edges. Pass −∞ or +∞ to drop an edge.
pub fn plateau(x: f64, a: f64, b: f64, eps: f64) -> f64 {
    let left = if a.is_finite() { ramp_up(x, a, eps) } else { 1.0 };
    let right = if b.is_finite() { 1.0 - ramp_up(x, b, eps) } else { 1.0 };
    left * right
}

/// Cell boundaries [a_ℓ, b_ℓ] of track ℓ at time `tau`: midpoints with the
/// neighboring tracks, the outer edges open.
pub fn cell_bounds(config: &ModelConfig, ell: usize, tau: f64) -> (f64, f64) {
    let pos = |i: usize| config.tracks[i].y + config.tracks[i].v * tau;
    let m = config.tracks.len();
    // tracks are sorted by decreasing position, so the right neighbor of
    // cell ell is track ell - 1
    let right = if ell == 0 { f64::INFINITY } else { 0.5 * (pos(ell) + pos(ell - 1)) };
    let left = if ell + 1 == m { f64::NEG_INFINITY } else { 0.5 * (pos(ell) + pos(ell + 1)) };
    (left, right)
}

/// Samples the smooth window of cell ℓ at time `tau` on the grid of `f`.
pub fn cell_window(config: &ModelConfig, ell: usize, tau: f64, eps: f64, grid: &crate::grid::Grid1D) -> Vec<f64> {
    let (a, b) = cell_bounds(config, ell, tau);
    (0..grid.n_x).map(|j| plateau(grid.node(j), a, b, eps)).collect()
}

/// Windowed norms of one field at one time.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    /// Plain L² norm.
    pub l2: f64,
    /// Sup of the pointwise magnitude.
    pub linf: f64,
    /// H¹ norm (spectral derivative).
    pub h1: f64,
    /// Per track: ‖⟨x − y_ℓ − v_ℓ·τ⟩^j χ_ℓ f‖ for j = 0, 1, 2.
    pub weighted: Vec<[f64; 3]>,
}

/// Computes the norm suite of `f` with the windows of `config` at time
/// `tau`.
pub fn norm_suite(f: &SpinorField, config: &ModelConfig, tau: f64) -> NormReport {
    let grid = f.grid;
    let mut weighted = Vec::with_capacity(config.tracks.len());
    for (ell, track) in config.tracks.iter().enumerate() {
        let chi = cell_window(config, ell, tau, DEFAULT_RAMP_EPS, &grid);
        let center = track.y + track.v * tau;
        let mut acc = [0.0f64; 3];
        for (j, v) in f.values.iter().enumerate() {
            let x = grid.node(j);
            let mag2 = (v[0].norm_sqr() + v[1].norm_sqr()) * chi[j] * chi[j];
            let bracket2 = 1.0 + (x - center) * (x - center);
            acc[0] += mag2;
            acc[1] += mag2 * bracket2;
            acc[2] += mag2 * bracket2 * bracket2;
        }
        weighted.push([
            (acc[0] * grid.h).sqrt(),
            (acc[1] * grid.h).sqrt(),
            (acc[2] * grid.h).sqrt(),
        ]);
    }
    NormReport {
        l2: f.l2_norm(),
        linf: f.linf_norm(),
        h1: f.h1_norm(),
        weighted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpinorField;
    use crate::grid::Grid1D;
    use crate::track::{ModelConfig, Profile, SolitonTrack};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn two_track_config() -> ModelConfig {
        let mk = |v: f64, y: f64| SolitonTrack {
            omega: 1.0,
            v,
            y,
            gamma: 0.0,
            profile_u: Profile::sech2(-2.0, 1.0),
            profile_w: Profile::zero(),
        };
        ModelConfig {
            tracks: vec![mk(4.0, 15.0), mk(-4.0, -15.0)],
            l_sep: 30.0,
            c_sep: 8.0,
            t_final: 2.0,
            dt: 1e-3,
        }
    }

    /// Plateau is 1 well inside, 0 well outside, and the two cell windows
    /// sum to 1 between the tracks.
    #[test]
    fn windows_partition_between_tracks() {
        let config = two_track_config();
        let grid = Grid1D::new(-120.0, 120.0, 2048).unwrap();
        let w0 = cell_window(&config, 0, 0.0, DEFAULT_RAMP_EPS, &grid);
        let w1 = cell_window(&config, 1, 0.0, DEFAULT_RAMP_EPS, &grid);
        for j in 0..grid.n_x {
            assert_abs_diff_eq!(w0[j] + w1[j], 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w0[grid.nearest_index(15.0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w0[grid.nearest_index(-15.0)], 0.0, epsilon = 1e-9);
    }

    /// A field supported far on the left has zero weighted norm in the
    /// rightmost window.
    #[test]
    fn disjoint_support_gives_zero_weighted_norm() {
        let config = two_track_config();
        let grid = Grid1D::new(-120.0, 120.0, 2048).unwrap();
        let f = SpinorField::from_fn(grid, |x| {
            [Complex64::new((-(x + 60.0) * (x + 60.0)).exp(), 0.0), Complex64::default()]
        });
        let report = norm_suite(&f, &config, 0.0);
        assert!(report.weighted[0][2] < 1e-10);
        assert!(report.weighted[1][0] > 0.1);
    }

    /// j = 0 weighted norms of a partition of unity recombine to the L²
    /// norm.
    #[test]
    fn weighted_zero_order_recombines() {
        let config = two_track_config();
        let grid = Grid1D::new(-120.0, 120.0, 2048).unwrap();
        let f = SpinorField::from_fn(grid, |x| {
            [Complex64::new((-x * x / 100.0).exp(), 0.0), Complex64::default()]
        });
        let report = norm_suite(&f, &config, 0.0);
        // windows overlap only on the shared ramp where chi0 + chi1 = 1;
        // the sum of squares there is <= 1, so the recombination is a lower
        // bound within the ramp mass
        let recomb = (report.weighted[0][0].powi(2) + report.weighted[1][0].powi(2)).sqrt();
        assert!(recomb <= report.l2 + 1e-12);
        assert!(recomb >= 0.9 * report.l2);
    }
}
