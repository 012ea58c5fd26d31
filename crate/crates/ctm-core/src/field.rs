//! Complex 2-vector fields on the spatial grid and frequency pairs on the
//! k-grid, with the σ₃-weighted pairing and the norms used throughout.
//!
//! Norm reductions run in a fixed left-to-right order so repeated runs of
//! the same configuration produce bit-identical reports.

use crate::error::{Error, Result};
use crate::fftutil;
use crate::grid::{Grid1D, KGrid};
use num_complex::Complex64;

/// Complex 2-vector-valued function sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    /// Grid the samples live on.
    pub grid: Grid1D,
    /// One complex pair per node, index-aligned with `grid.node(j)`.
    pub values: Vec<[Complex64; 2]>,
}

impl SpinorField {
    /// Zero field on `grid`.
    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![[Complex64::default(); 2]; grid.n_x] }
    }

    /// Field sampled from a closure of the node coordinate.
    pub fn from_fn(grid: Grid1D, mut f: impl FnMut(f64) -> [Complex64; 2]) -> Self {
        let values = (0..grid.n_x).map(|j| f(grid.node(j))).collect();
        Self { grid, values }
    }

    /// Checks that the two fields share a grid.
    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ConfigError("grid mismatch between fields".into()));
        }
        Ok(())
    }

    /// Copies one component out as a plain sample vector.
    pub fn component(&self, c: usize) -> Vec<Complex64> {
        self.values.iter().map(|v| v[c]).collect()
    }

    /// Builds a field from two component sample vectors.
    pub fn from_components(grid: Grid1D, c0: &[Complex64], c1: &[Complex64]) -> Self {
        debug_assert_eq!(c0.len(), grid.n_x);
        debug_assert_eq!(c1.len(), grid.n_x);
        let values = c0.iter().zip(c1.iter()).map(|(&a, &b)| [a, b]).collect();
        Self { grid, values }
    }

    /// Applies a closure to every nodal pair in place.
    pub fn map_in_place(&mut self, mut f: impl FnMut(usize, &mut [Complex64; 2])) {
        for (j, v) in self.values.iter_mut().enumerate() {
            f(j, v);
        }
    }

    /// self += alpha * other, nodewise.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            a[0] += alpha * b[0];
            a[1] += alpha * b[1];
        }
    }

    /// Scales every value by `alpha`.
    pub fn scale(&mut self, alpha: Complex64) {
        for v in self.values.iter_mut() {
            v[0] *= alpha;
            v[1] *= alpha;
        }
    }

    /// Nodewise difference self − other.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        Self { grid: self.grid, values }
    }

    /// Trapezoid L² norm, h·Σ(|ψ₁|² + |ψ₂|²) summed left to right.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.values {
            acc += v[0].norm_sqr() + v[1].norm_sqr();
        }
        (acc * self.grid.h).sqrt()
    }

    /// Sup of the pointwise Euclidean magnitude over the nodes.
    pub fn linf_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for v in &self.values {
            best = best.max((v[0].norm_sqr() + v[1].norm_sqr()).sqrt());
        }
        best
    }

    /// H¹ norm with the spatial derivative taken spectrally.
    pub fn h1_norm(&self) -> f64 {
        let d = self.derivative();
        let a = self.l2_norm();
        let b = d.l2_norm();
        (a * a + b * b).sqrt()
    }

    /// Spectral derivative of both components.
    pub fn derivative(&self) -> Self {
        let len = self.grid.len_x();
        let d0 = fftutil::spectral_derivative(&self.component(0), len);
        let d1 = fftutil::spectral_derivative(&self.component(1), len);
        Self::from_components(self.grid, &d0, &d1)
    }

    /// Spectral second derivative of both components.
    pub fn second_derivative(&self) -> Self {
        let len = self.grid.len_x();
        let d0 = fftutil::spectral_second_derivative(&self.component(0), len);
        let d1 = fftutil::spectral_second_derivative(&self.component(1), len);
        Self::from_components(self.grid, &d0, &d1)
    }

    /// Band-limited shift of both components: returns f(x − a).
    pub fn shift(&self, a: f64) -> Self {
        let len = self.grid.len_x();
        let s0 = fftutil::spectral_shift(&self.component(0), len, a);
        let s1 = fftutil::spectral_shift(&self.component(1), len, a);
        Self::from_components(self.grid, &s0, &s1)
    }

    /// True when every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v[0].re.is_finite() && v[0].im.is_finite() && v[1].re.is_finite() && v[1].im.is_finite())
    }
}

/// σ₃-weighted inner product ⟨f, σ₃g⟩ = ∫ f₁ḡ₁ − f₂ḡ₂ dx by trapezoid
/// quadrature on the periodic grid.
pub fn sigma3_pairing(f: &SpinorField, g: &SpinorField) -> Complex64 {
    debug_assert_eq!(f.grid, g.grid);
    let mut acc = Complex64::default();
    for (a, b) in f.values.iter().zip(g.values.iter()) {
        acc += a[0] * b[0].conj() - a[1] * b[1].conj();
    }
    acc * f.grid.h
}

/// Plain L² inner product ⟨f, g⟩ = ∫ f₁ḡ₁ + f₂ḡ₂ dx.
pub fn l2_pairing(f: &SpinorField, g: &SpinorField) -> Complex64 {
    debug_assert_eq!(f.grid, g.grid);
    let mut acc = Complex64::default();
    for (a, b) in f.values.iter().zip(g.values.iter()) {
        acc += a[0] * b[0].conj() + a[1] * b[1].conj();
    }
    acc * f.grid.h
}

/// Complex pair (u₁(k), u₂(k)) sampled on a [`KGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPair {
    /// Frequency grid the samples live on.
    pub kgrid: KGrid,
    /// One complex pair per node, index-aligned with `kgrid.node(j)`.
    pub values: Vec<[Complex64; 2]>,
}

impl FrequencyPair {
    /// Zero pair on `kgrid`.
    pub fn zeros(kgrid: KGrid) -> Self {
        Self { kgrid, values: vec![[Complex64::default(); 2]; kgrid.n_nodes()] }
    }

    /// Pair sampled from a closure of the node frequency.
    pub fn from_fn(kgrid: KGrid, mut f: impl FnMut(f64) -> [Complex64; 2]) -> Self {
        let values = (0..kgrid.n_nodes()).map(|j| f(kgrid.node(j))).collect();
        Self { kgrid, values }
    }

    /// Trapezoid L² norm over the truncated k-range.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_l2_norm(|_| 1.0)
    }

    /// Trapezoid L² norm with a real weight w(k) applied inside the square.
    pub fn weighted_l2_norm(&self, mut w: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let wt = self.kgrid.weight(j) * w(self.kgrid.node(j)).powi(2);
            acc += wt * (v[0].norm_sqr() + v[1].norm_sqr());
        }
        acc.sqrt()
    }

    /// self += alpha * other, nodewise.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &Self) {
        debug_assert_eq!(self.kgrid, other.kgrid);
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            a[0] += alpha * b[0];
            a[1] += alpha * b[1];
        }
    }

    /// Nodewise difference self − other.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.kgrid, other.kgrid);
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        Self { kgrid: self.kgrid, values }
    }
}
