//! Harmonic-analysis operators on sampled fields.
//!
//! Spectral operators annihilate the zero mode. Odd multipliers (Riesz
//! transforms, derivatives) also annihilate the Nyquist mode along the axis
//! they act on, which keeps their output real.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Field, Grid, MAX_DIM};
use crate::quadrature;
use crate::spectral::SpectralPlan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("Riesz potential order must lie in (0, n) = (0, {dim}), got {beta}")]
    BetaOutOfRange { beta: f64, dim: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("fractional order alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

/// Radii `h, 2h, 4h, ..., L` used by the dyadic maximal function, in units of
/// the grid spacing.
pub fn dyadic_radii(grid: &Grid) -> Vec<usize> {
    let mut out = Vec::new();
    let mut r = 1usize;
    while r <= grid.points() / 2 {
        out.push(r);
        r *= 2;
    }
    out
}

/// Offsets `delta` in `[-N/2, N/2)^n` with `|delta| <= r`, as per-axis tuples.
fn ball_offsets(grid: &Grid, r: usize) -> Vec<[i64; MAX_DIM]> {
    let n = grid.points() as i64;
    let r = r as i64;
    let lo = (-r).max(-n / 2);
    let hi = r.min(n / 2 - 1);
    let dim = grid.dim();
    let mut out = Vec::new();
    let mut d = [0i64; MAX_DIM];
    let ranges: Vec<(i64, i64)> = (0..MAX_DIM)
        .map(|a| if a < dim { (lo, hi) } else { (0, 0) })
        .collect();
    for d0 in ranges[0].0..=ranges[0].1 {
        d[0] = d0;
        for d1 in ranges[1].0..=ranges[1].1 {
            d[1] = d1;
            for d2 in ranges[2].0..=ranges[2].1 {
                d[2] = d2;
                if d0 * d0 + d1 * d1 + d2 * d2 <= r * r {
                    out.push(d);
                }
            }
        }
    }
    out
}

/// Centered dyadic Hardy-Littlewood maximal function: at each point, the
/// largest average of `|f|` over discrete periodic balls of radius
/// `h, 2h, ..., L`.
pub fn maximal_function(f: &Field) -> Field {
    let grid = *f.grid();
    let n = grid.points() as i64;
    let dim = grid.dim();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0f64; grid.len()];
    let strides: Vec<usize> = (0..dim)
        .map(|a| grid.points().pow((dim - 1 - a) as u32))
        .collect();
    for r in dyadic_radii(&grid) {
        let offsets = ball_offsets(&grid, r);
        let count = offsets.len() as f64;
        for (idx, slot) in out.iter_mut().enumerate() {
            let ks = grid.unflatten(idx);
            let mut sum = 0.0;
            for d in &offsets {
                let mut j = 0usize;
                for a in 0..dim {
                    let k = (ks[a] as i64 + d[a]).rem_euclid(n) as usize;
                    j += k * strides[a];
                }
                sum += abs[j];
            }
            *slot = slot.max(sum / count);
        }
    }
    Field::from_raw(grid, out)
}

/// `integral over [-1/2, 1/2]^n of |z|^{beta - n} dz`, by integrating the
/// radial profile over the cube faces.
pub fn unit_cell_integral(dim: usize, beta: f64) -> f64 {
    let face = |y: f64, z: f64| (0.25 + y * y + z * z).powf(0.5 * (beta - dim as f64));
    let panels = 16;
    let face_integral = match dim {
        1 => face(0.0, 0.0),
        2 => quadrature::gauss_composite(|y| face(y, 0.0), -0.5, 0.5, panels),
        3 => quadrature::gauss_composite(
            |y| quadrature::gauss_composite(|z| face(y, z), -0.5, 0.5, panels),
            -0.5,
            0.5,
            panels,
        ),
        _ => unreachable!("grid dimension is 1..=3"),
    };
    dim as f64 / beta * face_integral
}

/// Riesz potential `I_beta f(x) = integral |f(y)| |x - y|^{beta - n} dy` by
/// direct summation. Displacements are taken in box coordinates (no wrap) and
/// the kernel is truncated to `|x - y| <= L`; the self-cell uses the exact
/// cell integral of the kernel.
pub fn riesz_potential(f: &Field, beta: f64) -> Result<Field, OperatorError> {
    let grid = *f.grid();
    let dim = grid.dim();
    if !(beta > 0.0 && beta < dim as f64) {
        return Err(OperatorError::BetaOutOfRange { beta, dim });
    }
    let n = grid.points();
    let h = grid.spacing();
    let cell = grid.cell_volume();
    // kernel table over offsets (-(N-1)..=N-1)^n, already multiplied by h^n
    let side = 2 * n - 1;
    let table_len = side.pow(dim as u32);
    let self_weight = unit_cell_integral(dim, beta) * h.powf(beta);
    let max_r2 = (n as f64 / 2.0).powi(2);
    let mut table = vec![0.0f64; table_len];
    for (t, w) in table.iter_mut().enumerate() {
        let mut rem = t;
        let mut r2 = 0.0;
        for _ in 0..dim {
            let d = (rem % side) as f64 - (n as f64 - 1.0);
            rem /= side;
            r2 += d * d;
        }
        *w = if r2 == 0.0 {
            self_weight
        } else if r2 <= max_r2 + 1e-9 {
            cell * (h * r2.sqrt()).powf(beta - dim as f64)
        } else {
            0.0
        };
    }
    // table offset of each source point, so that `base(i) - offset(j)` indexes the table
    let strides: Vec<usize> = (0..dim).map(|a| side.pow((dim - 1 - a) as u32)).collect();
    let offset = |k: [usize; 3]| -> usize { (0..dim).map(|a| k[a] * strides[a]).sum() };
    let support: Vec<(usize, f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (offset(grid.unflatten(j)), v.abs()))
        .collect();
    let shift: usize = strides.iter().map(|s| s * (n - 1)).sum();
    let mut out = vec![0.0f64; grid.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let base = offset(grid.unflatten(i)) + shift;
        *slot = support.iter().map(|&(o, v)| table[base - o] * v).sum();
    }
    Ok(Field::from_raw(grid, out))
}

fn check_axis(grid: &Grid, axis: usize) -> Result<(), OperatorError> {
    if axis >= grid.dim() {
        return Err(OperatorError::AxisOutOfRange {
            axis,
            dim: grid.dim(),
        });
    }
    Ok(())
}

/// Riesz transform along `axis` (0-based): multiplier `-i xi_j / |xi|`.
pub fn riesz_transform(f: &Field, axis: usize) -> Result<Field, OperatorError> {
    check_axis(f.grid(), axis)?;
    let plan = SpectralPlan::new(f.grid());
    Ok(riesz_transform_with(&plan, f, axis))
}

pub(crate) fn riesz_transform_with(plan: &SpectralPlan, f: &Field, axis: usize) -> Field {
    let grid = *plan.grid();
    let nyq = plan.nyquist();
    plan.apply(f, |idx| {
        let xi = plan.xi(idx);
        let norm = crate::grid::norm(&xi);
        if norm == 0.0 || grid.unflatten(idx)[axis] == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -xi[axis] / norm)
        }
    })
}

/// Fractional Laplacian `(-Delta)^alpha`, multiplier `|xi|^{2 alpha}`.
pub fn fractional_laplacian(f: &Field, alpha: f64) -> Result<Field, OperatorError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(OperatorError::AlphaOutOfRange(alpha));
    }
    Ok(fractional_power(
        &SpectralPlan::new(f.grid()),
        f,
        2.0 * alpha,
    ))
}

/// Multiplier `|xi|^s` for any `s > 0`; the zero mode maps to 0.
pub(crate) fn fractional_power(plan: &SpectralPlan, f: &Field, s: f64) -> Field {
    plan.apply_radial(f, |k| if k == 0.0 { 0.0 } else { k.powf(s) })
}

/// Spectral partial derivative along `axis`.
pub fn partial(f: &Field, axis: usize) -> Result<Field, OperatorError> {
    check_axis(f.grid(), axis)?;
    Ok(partial_with(&SpectralPlan::new(f.grid()), f, axis))
}

pub(crate) fn partial_with(plan: &SpectralPlan, f: &Field, axis: usize) -> Field {
    let grid = *plan.grid();
    let nyq = plan.nyquist();
    plan.apply(f, |idx| {
        if grid.unflatten(idx)[axis] == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, plan.xi(idx)[axis])
        }
    })
}

/// `1 . grad f = sum_j d_j f`, spectrally.
pub fn grad_dot_ones(f: &Field) -> Field {
    grad_dot_ones_with(&SpectralPlan::new(f.grid()), f)
}

pub(crate) fn grad_dot_ones_with(plan: &SpectralPlan, f: &Field) -> Field {
    let symbol = grad_dot_ones_symbol(plan);
    plan.apply(f, |idx| symbol[idx])
}

/// Multiplier `i sum_j xi_j` per flat spectral index.
pub(crate) fn grad_dot_ones_symbol(plan: &SpectralPlan) -> Vec<Complex64> {
    let grid = *plan.grid();
    let nyq = plan.nyquist();
    (0..grid.len())
        .map(|idx| {
            let ks = grid.unflatten(idx);
            let xi = plan.xi(idx);
            let sum: f64 = (0..grid.dim())
                .filter(|&a| ks[a] != nyq)
                .map(|a| xi[a])
                .sum();
            Complex64::new(0.0, sum)
        })
        .collect()
}
