//! Spatial and frequency grids.
//!
//! [`Grid1D`] is the uniform periodic spatial grid every field lives on.
//! [`KGrid`] is the symmetric frequency grid used by the distorted
//! transforms; it is a plain closed-interval trapezoid grid, deliberately
//! incommensurate with the FFT dual of the spatial grid, so transforms
//! between the two are dense quadratures.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic spatial grid on [x_min, x_max) with a power-of-two
/// number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    /// Left end of the periodic box.
    pub x_min: f64,
    /// Right end of the periodic box (not itself a node).
    pub x_max: f64,
    /// Number of nodes; a power of two.
    pub n_x: usize,
    /// Node spacing (x_max − x_min)/n_x.
    pub h: f64,
}

impl Grid1D {
    /// Builds a grid, validating the box and the power-of-two node count.
    pub fn new(x_min: f64, x_max: f64, n_x: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::ConfigError(format!(
                "invalid box [{x_min}, {x_max})"
            )));
        }
        if n_x < 4 || !n_x.is_power_of_two() {
            return Err(Error::ConfigError(format!(
                "n_x = {n_x} must be a power of two >= 4"
            )));
        }
        let h = (x_max - x_min) / n_x as f64;
        Ok(Self { x_min, x_max, n_x, h })
    }

    /// Box length x_max − x_min.
    pub fn len_x(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Coordinate of node `j`.
    pub fn node(&self, j: usize) -> f64 {
        self.x_min + self.h * j as f64
    }

    /// All node coordinates in index order.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.node(j)).collect()
    }

    /// Index of the node at −node(j) on a symmetric grid, modulo the period.
    ///
    /// Requires x_min = −x_max; node 0 maps to itself through the periodic
    /// wrap.
    pub fn mirror_index(&self, j: usize) -> usize {
        debug_assert!(self.is_symmetric(), "mirror_index needs a symmetric box");
        (self.n_x - j) % self.n_x
    }

    /// True when the box is symmetric about the origin.
    pub fn is_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() < 1e-12 * self.len_x()
    }

    /// Index of the node nearest to `x` (clamped to the box).
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.h).round();
        raw.clamp(0.0, (self.n_x - 1) as f64) as usize
    }

    /// Checks that every track support stays `margin` away from the box
    /// boundary for the whole run, so the periodic wrap never sees the
    /// potentials.
    pub fn assert_box_covers(
        &self,
        positions: &[(f64, f64)],
        t_final: f64,
        margin: f64,
    ) -> Result<()> {
        for &(y, v) in positions {
            let reach = y.abs().max((y + v * t_final).abs());
            if 2.0 * (reach + margin) > self.len_x() {
                return Err(Error::ConfigError(format!(
                    "box [{}, {}) too small: track at y = {y}, v = {v} reaches |x| = {reach} \
                     by t = {t_final} (margin {margin})",
                    self.x_min, self.x_max
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric closed frequency grid on [−k_max, k_max] with `n_k` intervals
/// (so n_k + 1 nodes) and trapezoid quadrature weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    /// Half-width of the frequency interval.
    pub k_max: f64,
    /// Number of intervals; even, so k = 0 is a node.
    pub n_k: usize,
    /// Node spacing 2·k_max/n_k.
    pub dk: f64,
}

impl KGrid {
    /// Builds a frequency grid, requiring an even interval count so the
    /// nodes are symmetric about 0 with 0 itself a node.
    pub fn new(k_max: f64, n_k: usize) -> Result<Self> {
        if !(k_max > 0.0) || !k_max.is_finite() {
            return Err(Error::ConfigError(format!("invalid k_max = {k_max}")));
        }
        if n_k < 4 || n_k % 2 != 0 {
            return Err(Error::ConfigError(format!(
                "n_k = {n_k} must be even and >= 4"
            )));
        }
        Ok(Self { k_max, n_k, dk: 2.0 * k_max / n_k as f64 })
    }

    /// Number of nodes, n_k + 1.
    pub fn n_nodes(&self) -> usize {
        self.n_k + 1
    }

    /// Coordinate of node `j` (j = 0 is −k_max, j = n_k is +k_max).
    pub fn node(&self, j: usize) -> f64 {
        -self.k_max + self.dk * j as f64
    }

    /// All node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// Trapezoid quadrature weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n_k {
            0.5 * self.dk
        } else {
            self.dk
        }
    }

    /// Index of the node at −node(j).
    pub fn negate_index(&self, j: usize) -> usize {
        self.n_k - j
    }

    /// Index of the node k = 0.
    pub fn zero_index(&self) -> usize {
        self.n_k / 2
    }
}
