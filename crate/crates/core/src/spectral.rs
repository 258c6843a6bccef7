//! Multi-dimensional FFT plan and Fourier multipliers on periodic grids.
//!
//! The forward transform is unnormalized, the inverse divides by `N^n`.
//! Wavenumbers follow the `2L`-periodic convention
//! `xi_k = (pi / L) k`, `k` in `{-N/2, ..., N/2 - 1}` stored in FFT order.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, Grid, MAX_DIM};

/// Largest imaginary residue silently dropped when a multiplier is expected to
/// produce a real field, relative to the output's max modulus.
pub const REAL_RESIDUE_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct SpectralPlan {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralPlan {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.points();
        let mut planner = FftPlanner::new();
        let scale = std::f64::consts::PI / grid.half_len();
        let wavenumbers = (0..n)
            .map(|k| {
                let signed = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                scale * signed
            })
            .collect();
        Self {
            grid: *grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumbers,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Angular wavenumbers along one axis, in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the Nyquist mode (`k = -N/2`) along an axis.
    pub fn nyquist(&self) -> usize {
        self.grid.points() / 2
    }

    /// Frequency vector of a flat spectral index; unused axes are zero.
    pub fn xi(&self, idx: usize) -> [f64; MAX_DIM] {
        let ks = self.grid.unflatten(idx);
        let mut xi = [0.0; MAX_DIM];
        for axis in 0..self.grid.dim() {
            xi[axis] = self.wavenumbers[ks[axis]];
        }
        xi
    }

    /// `|xi|` for every flat spectral index.
    pub fn xi_norms(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| crate::grid::norm(&self.xi(i)))
            .collect()
    }

    pub fn forward(&self, f: &Field) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Normalized inverse transform; returns complex samples.
    pub fn inverse_complex(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spectrum, &self.inverse);
        let norm = 1.0 / self.grid.len() as f64;
        for c in &mut spectrum {
            *c *= norm;
        }
        spectrum
    }

    /// Normalized inverse transform, keeping the real part. Returns the field
    /// and the largest discarded imaginary part.
    pub fn inverse_real(&self, spectrum: Vec<Complex64>) -> (Field, f64) {
        let data = self.inverse_complex(spectrum);
        let residue = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let values = data.into_iter().map(|c| c.re).collect();
        (Field::from_raw(self.grid, values), residue)
    }

    /// Applies a Fourier multiplier `m(flat spectral index)` and keeps the
    /// real part of the result.
    pub fn apply(&self, f: &Field, m: impl Fn(usize) -> Complex64) -> Field {
        debug_assert_eq!(f.grid(), &self.grid);
        let mut spec = self.forward(f);
        for (i, c) in spec.iter_mut().enumerate() {
            *c *= m(i);
        }
        self.inverse_real(spec).0
    }

    /// Applies a real, even multiplier given as a function of `|xi|`.
    pub fn apply_radial(&self, f: &Field, m: impl Fn(f64) -> f64) -> Field {
        let norms = self.xi_norms();
        self.apply(f, |i| Complex64::new(m(norms[i]), 0.0))
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points();
        let dim = self.grid.dim();
        let total = data.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (k, value) in line.iter().enumerate() {
                        data[base + k * stride] = *value;
                    }
                }
            }
        }
    }
}
