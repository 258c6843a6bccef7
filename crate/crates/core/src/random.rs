//! Reproducible random test fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Field, Grid};
use crate::spectral::SpectralPlan;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian white noise low-pass filtered to wavenumbers `|k_j| < N/8` on
/// every axis (the lowest `N/4` modes), normalized to unit max modulus.
/// Never returns the zero field.
pub fn band_limited(grid: &Grid, rng: &mut Rng) -> Field {
    band_limited_with(&SpectralPlan::new(grid), rng)
}

pub fn band_limited_with(plan: &SpectralPlan, rng: &mut Rng) -> Field {
    let grid = *plan.grid();
    let cutoff = (grid.points() / 8).max(1) as i64;
    loop {
        let noise: Vec<f64> = (0..grid.len())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let noise = Field::from_raw(grid, noise);
        let n = grid.points() as i64;
        let smooth = plan.apply(&noise, |idx| {
            let ks = grid.unflatten(idx);
            let inside = ks[..grid.dim()].iter().all(|&k| {
                let k = k as i64;
                let signed = if k < n / 2 { k } else { k - n };
                signed.abs() < cutoff
            });
            if inside {
                1.0.into()
            } else {
                0.0.into()
            }
        });
        let peak = smooth.max_abs();
        if peak > 0.0 {
            return smooth.scale(1.0 / peak);
        }
    }
}
