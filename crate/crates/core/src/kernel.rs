//! Fractional heat kernel `g_t^alpha = F^{-1}(exp(-t |xi|^{2 alpha}))`, its
//! semigroup, and numerical certification of the kernel's decay, smoothing
//! and time-integral estimates.
//!
//! The kernel is normalized as a convolution kernel with unit mass.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{self, Field, Grid};
use crate::quadrature;
use crate::spectral::{SpectralPlan, REAL_RESIDUE_TOL};
use crate::varexp::lq_norm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("alpha must lie in {range}, got {alpha}")]
    AlphaOutOfRange { alpha: f64, range: &'static str },
    #[error("time must be {req}, got {t}")]
    Time { t: f64, req: &'static str },
    #[error("kernel has imaginary residue {residue:e} above tolerance")]
    SymmetryViolation { residue: f64 },
    #[error("sweep has {0} usable points, need at least {1}")]
    DegenerateSweep(usize, usize),
    #[error("exponents must satisfy 1 <= p <= q <= inf and nu >= 0")]
    Exponents,
    #[error("r must be positive, got {0}")]
    Radius(f64),
}

/// Whether the gradient nonlinearity is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gamma {
    Zero,
    One,
}

impl Gamma {
    pub fn from_int(g: u8) -> Option<Self> {
        match g {
            0 => Some(Gamma::Zero),
            1 => Some(Gamma::One),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Gamma::Zero => 0.0,
            Gamma::One => 1.0,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), KernelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(KernelError::AlphaOutOfRange {
            alpha,
            range: "(0, 1]",
        });
    }
    Ok(())
}

/// Precomputed symbol `|xi|^{2 alpha}` on a grid's frequency lattice.
#[derive(Debug, Clone)]
pub struct HeatSemigroup {
    alpha: f64,
    plan: SpectralPlan,
    symbol: Vec<f64>,
}

impl HeatSemigroup {
    pub fn new(grid: &Grid, alpha: f64) -> Result<Self, KernelError> {
        check_alpha(alpha)?;
        let plan = SpectralPlan::new(grid);
        let symbol = plan
            .xi_norms()
            .into_iter()
            .map(|k| k.powf(2.0 * alpha))
            .collect();
        Ok(Self {
            alpha,
            plan,
            symbol,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    /// `|xi|^{2 alpha}` per flat spectral index.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `g_t * f`; `t = 0` returns `f` unchanged.
    pub fn apply(&self, t: f64, f: &Field) -> Field {
        if t == 0.0 {
            return f.clone();
        }
        let mut spec = self.plan.forward(f);
        self.damp(t, &mut spec);
        self.plan.inverse_real(spec).0
    }

    /// Multiplies a spectrum in place by `exp(-t |xi|^{2 alpha})`.
    pub fn damp(&self, t: f64, spec: &mut [Complex64]) {
        if t == 0.0 {
            return;
        }
        for (c, s) in spec.iter_mut().zip(&self.symbol) {
            *c *= (-t * s).exp();
        }
    }

    /// Kernel samples centered at the grid origin.
    pub fn kernel(&self, t: f64) -> Result<Field, KernelError> {
        self.kernel_with(t, |_| Complex64::new(1.0, 0.0))
    }

    /// Partial derivative of the kernel along `axis`.
    pub fn kernel_partial(&self, t: f64, axis: usize) -> Result<Field, KernelError> {
        let grid = *self.plan.grid();
        let nyq = self.plan.nyquist();
        self.kernel_with(t, |idx| {
            if grid.unflatten(idx)[axis] == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, self.plan.xi(idx)[axis])
            }
        })
    }

    fn kernel_with(
        &self,
        t: f64,
        extra: impl Fn(usize) -> Complex64,
    ) -> Result<Field, KernelError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(KernelError::Time { t, req: "positive" });
        }
        let grid = *self.plan.grid();
        let n = grid.points();
        let spec: Vec<Complex64> = (0..grid.len())
            .map(|idx| {
                let ks = grid.unflatten(idx);
                // exp(i xi x_j) = (-1)^k exp(2 pi i k j / N) with x_j = -L + j h
                let parity: usize = ks[..grid.dim()]
                    .iter()
                    .map(|&k| if k < n / 2 { k } else { n - k })
                    .sum();
                let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
                extra(idx) * (sign * (-t * self.symbol[idx]).exp())
            })
            .collect();
        let data = self.plan.inverse_complex(spec);
        let inv_cell = 1.0 / grid.cell_volume();
        let peak = data.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let residue = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if residue > REAL_RESIDUE_TOL * peak.max(f64::MIN_POSITIVE) {
            return Err(KernelError::SymmetryViolation {
                residue: residue * inv_cell,
            });
        }
        let values = data.into_iter().map(|c| c.re * inv_cell).collect();
        Ok(Field::from_raw(grid, values))
    }
}

/// `g_t^alpha` sampled on the grid (centered at the origin).
pub fn heat_kernel(alpha: f64, t: f64, grid: &Grid) -> Result<Field, KernelError> {
    HeatSemigroup::new(grid, alpha)?.kernel(t)
}

/// `g_t^alpha * f`, spectrally; `t = 0` is the identity.
pub fn semigroup_apply(alpha: f64, t: f64, f: &Field) -> Result<Field, KernelError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(KernelError::Time {
            t,
            req: "non-negative",
        });
    }
    Ok(HeatSemigroup::new(f.grid(), alpha)?.apply(t, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Pointwise,
    Gradient,
    Smoothing,
    GradientIntegral,
    SourceIntegral,
}

impl EstimateKind {
    pub fn id(&self) -> &'static str {
        match self {
            EstimateKind::Pointwise => "pointwise",
            EstimateKind::Gradient => "gradient",
            EstimateKind::Smoothing => "smoothing",
            EstimateKind::GradientIntegral => "integral-gradient",
            EstimateKind::SourceIntegral => "integral-source",
        }
    }
}

/// Per-time constant from a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub t: f64,
    pub value: f64,
}

/// Log-log regression result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub theoretical: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimateReport {
    pub estimate: EstimateKind,
    pub alpha: f64,
    pub cells: Vec<SweepCell>,
    /// Largest per-time constant.
    pub constant: f64,
    pub fit: Option<SlopeFit>,
    pub pass: bool,
}

/// Allowed spread `max/min - 1` of per-time decay constants.
pub const DECAY_STABILITY: f64 = 0.10;

/// Allowed relative slope error for smoothing fits.
pub const SLOPE_TOLERANCE: f64 = 0.03;

/// Allowed absolute slope for zero-slope smoothing cells.
pub const ZERO_SLOPE_TOLERANCE: f64 = 0.02;

/// Times of the sweep inside `[h^{2 alpha}, (L/4)^{2 alpha}]`.
fn admissible_times(grid: &Grid, alpha: f64, sweep: &[f64]) -> Vec<f64> {
    let lo = grid.spacing().powf(2.0 * alpha);
    let hi = (grid.half_len() / 4.0).powf(2.0 * alpha);
    sweep
        .iter()
        .copied()
        .filter(|&t| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12))
        .collect()
}

fn decay_report(
    kind: EstimateKind,
    alpha: f64,
    cells: Vec<SweepCell>,
) -> Result<KernelEstimateReport, KernelError> {
    if cells.is_empty() {
        return Err(KernelError::DegenerateSweep(0, 1));
    }
    let constant = cells.iter().fold(0.0f64, |m, c| m.max(c.value));
    let min = cells.iter().fold(f64::INFINITY, |m, c| m.min(c.value));
    let pass = constant.is_finite() && min > 0.0 && constant / min - 1.0 <= DECAY_STABILITY;
    Ok(KernelEstimateReport {
        estimate: kind,
        alpha,
        cells,
        constant,
        fit: None,
        pass,
    })
}

/// Empirical constant of `|g_t(x)| <= C t / (t^{1/2a} + |x|)^{n + 2a}` over
/// `|x| <= L/2`, per admissible sweep time.
pub fn verify_pointwise_decay(
    alpha: f64,
    sweep: &[f64],
    grid: &Grid,
) -> Result<KernelEstimateReport, KernelError> {
    let semigroup = HeatSemigroup::new(grid, alpha)?;
    let n = grid.dim() as f64;
    let mut cells = Vec::new();
    for t in admissible_times(grid, alpha, sweep) {
        let g = semigroup.kernel(t)?;
        let scale = t.powf(1.0 / (2.0 * alpha));
        let value = inner_points(grid)
            .map(|(i, r)| g.values()[i].abs() * (scale + r).powf(n + 2.0 * alpha) / t)
            .fold(0.0, f64::max);
        cells.push(SweepCell { t, value });
    }
    decay_report(EstimateKind::Pointwise, alpha, cells)
}

/// Empirical constant of `|grad g_t(x)| <= C / (t^{1/2a} + |x|)^{n + 1}` over
/// `|x| <= L/2`.
pub fn verify_gradient_decay(
    alpha: f64,
    sweep: &[f64],
    grid: &Grid,
) -> Result<KernelEstimateReport, KernelError> {
    let semigroup = HeatSemigroup::new(grid, alpha)?;
    let n = grid.dim() as f64;
    let mut cells = Vec::new();
    for t in admissible_times(grid, alpha, sweep) {
        let partials = (0..grid.dim())
            .map(|a| semigroup.kernel_partial(t, a))
            .collect::<Result<Vec<_>, _>>()?;
        let scale = t.powf(1.0 / (2.0 * alpha));
        let value = inner_points(grid)
            .map(|(i, r)| {
                let grad2: f64 = partials.iter().map(|p| p.values()[i].powi(2)).sum();
                grad2.sqrt() * (scale + r).powf(n + 1.0)
            })
            .fold(0.0, f64::max);
        cells.push(SweepCell { t, value });
    }
    decay_report(EstimateKind::Gradient, alpha, cells)
}

/// Flat indices and radii of grid points with `|x| <= L/2`.
fn inner_points(grid: &Grid) -> impl Iterator<Item = (usize, f64)> + '_ {
    let bound = grid.half_len() / 2.0;
    (0..grid.len())
        .map(|i| (i, grid.radius(i)))
        .filter(move |&(_, r)| r <= bound + 1e-12)
}

/// Theoretical smoothing exponent `-nu/2a - (n/2a)(1/p - 1/q)`.
pub fn smoothing_exponent(alpha: f64, dim: usize, p: f64, q: f64, nu: f64) -> f64 {
    -nu / (2.0 * alpha) - dim as f64 / (2.0 * alpha) * (1.0 / p - 1.0 / q)
}

/// Least squares fit of `y = a + s x`; returns `(s, R^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).max(0.0)
    };
    (slope, r2)
}

/// Measures the `L^p -> L^q` smoothing rate of `(-Delta)^{nu/2} g_t`.
///
/// For each sweep time in the resolved range `2h <= t^{1/2a} <= L/8` the
/// probe is the Gaussian bump `f_t(x) = exp(-|x|^2 / t^{1/a})`, whose width
/// tracks the kernel scale; this family saturates the estimate, so
/// `log(||(-Delta)^{nu/2} g_t * f_t||_q / ||f_t||_p)` is affine in `log t` with
/// the theoretical slope. `p` or `q` equal to `f64::INFINITY` selects the max
/// norm.
pub fn verify_smoothing(
    alpha: f64,
    p: f64,
    q: f64,
    nu: f64,
    sweep: &[f64],
    grid: &Grid,
) -> Result<KernelEstimateReport, KernelError> {
    if !(p >= 1.0 && q >= p && nu >= 0.0) {
        return Err(KernelError::Exponents);
    }
    let semigroup = HeatSemigroup::new(grid, alpha)?;
    let plan = semigroup.plan();
    let norms = plan.xi_norms();
    let lo = (2.0 * grid.spacing()).powf(2.0 * alpha);
    let hi = (grid.half_len() / 8.0).powf(2.0 * alpha);
    let times: Vec<f64> = sweep
        .iter()
        .copied()
        .filter(|&t| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12))
        .collect();
    if times.len() < 4 {
        return Err(KernelError::DegenerateSweep(times.len(), 4));
    }
    let theoretical = smoothing_exponent(alpha, grid.dim(), p, q, nu);
    let mut cells = Vec::with_capacity(times.len());
    for &t in &times {
        let width2 = t.powf(1.0 / alpha);
        let bump = grid::sample(grid, |x| {
            (-x.iter().map(|v| v * v).sum::<f64>() / width2).exp()
        })
        .expect("gaussian samples are finite");
        let mut spec = plan.forward(&bump);
        semigroup.damp(t, &mut spec);
        if nu > 0.0 {
            for (c, k) in spec.iter_mut().zip(&norms) {
                *c *= if *k == 0.0 { 0.0 } else { k.powf(nu) };
            }
        }
        let (smoothed, _) = plan.inverse_real(spec);
        let ratio = lq_norm(&smoothed, q) / lq_norm(&bump, p);
        cells.push(SweepCell { t, value: ratio });
    }
    let xs: Vec<f64> = cells.iter().map(|c| c.t.ln()).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.value.ln()).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    let constant = cells
        .iter()
        .map(|c| c.value * c.t.powf(-theoretical))
        .fold(0.0, f64::max);
    let pass = if theoretical == 0.0 {
        slope.abs() <= ZERO_SLOPE_TOLERANCE
    } else {
        (slope - theoretical).abs() <= SLOPE_TOLERANCE * theoretical.abs()
    };
    Ok(KernelEstimateReport {
        estimate: EstimateKind::Smoothing,
        alpha,
        cells,
        constant,
        fit: Some(SlopeFit {
            slope,
            theoretical,
            r2,
        }),
        pass,
    })
}

/// Outcome of a semi-infinite time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeIntegral {
    Finite {
        value: f64,
        abs_err: f64,
    },
    /// The integrand's tail `s^{-decay}` is not integrable (`decay <= 1`).
    Divergent {
        decay: f64,
    },
}

impl TimeIntegral {
    pub fn value(&self) -> Option<f64> {
        match self {
            TimeIntegral::Finite { value, .. } => Some(*value),
            TimeIntegral::Divergent { .. } => None,
        }
    }
}

/// Relative accuracy requested from the adaptive quadrature.
const TIME_INTEGRAL_REL: f64 = 1e-12;

struct TimeIntegrand {
    inv_two_alpha: f64,
    power: f64,
    /// `true` for the `s ds` (γ = 0) integrand.
    weighted: bool,
    /// Tail exponent.
    decay: f64,
}

impl TimeIntegrand {
    fn new(alpha: f64, dim: usize, gamma: Gamma) -> Self {
        let n = dim as f64;
        match gamma {
            Gamma::One => Self {
                inv_two_alpha: 1.0 / (2.0 * alpha),
                power: n + 1.0,
                weighted: false,
                decay: (n + 1.0) / (2.0 * alpha),
            },
            Gamma::Zero => Self {
                inv_two_alpha: 1.0 / (2.0 * alpha),
                power: n + 2.0 * alpha,
                weighted: true,
                decay: n / (2.0 * alpha),
            },
        }
    }

    fn eval(&self, s: f64, r: f64) -> f64 {
        let base = (s.powf(self.inv_two_alpha) + r).powf(-self.power);
        if self.weighted {
            s * base
        } else {
            base
        }
    }

    fn diverges(&self) -> bool {
        self.decay <= 1.0 + 1e-12
    }

    /// `integral_0^inf eval(s, r) ds` split at `split`.
    fn integrate(&self, r: f64, split: f64) -> TimeIntegral {
        if self.diverges() {
            return TimeIntegral::Divergent { decay: self.decay };
        }
        let head = quadrature::adaptive(|s| self.eval(s, r), 0.0, split, TIME_INTEGRAL_REL, 0.0);
        let tail = quadrature::tail(|s| self.eval(s, r), split, self.decay, TIME_INTEGRAL_REL);
        TimeIntegral::Finite {
            value: head.value + tail.value,
            abs_err: head.abs_err + tail.abs_err,
        }
    }
}

fn check_time_integral_args(alpha: f64, r: f64) -> Result<(), KernelError> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(KernelError::AlphaOutOfRange {
            alpha,
            range: "(1/2, 1]",
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(KernelError::Radius(r));
    }
    Ok(())
}

/// `integral_0^inf ds / (s^{1/2a} + r)^{n+1}` (γ = 1) or
/// `integral_0^inf s ds / (s^{1/2a} + r)^{n+2a}` (γ = 0), evaluated through
/// `s = r^{2a} beta`, which factors out `r^{2a-n-1}` (γ = 1) or `r^{2a-n}`
/// (γ = 0) and leaves an `r`-free integral. Non-integrable tails are reported
/// as [`TimeIntegral::Divergent`].
pub fn time_integral(
    alpha: f64,
    dim: usize,
    r: f64,
    gamma: Gamma,
) -> Result<TimeIntegral, KernelError> {
    check_time_integral_args(alpha, r)?;
    let integrand = TimeIntegrand::new(alpha, dim, gamma);
    let n = dim as f64;
    let factor = match gamma {
        Gamma::One => r.powf(2.0 * alpha - n - 1.0),
        Gamma::Zero => r.powf(2.0 * alpha - n),
    };
    Ok(match integrand.integrate(1.0, 1.0) {
        TimeIntegral::Finite { value, abs_err } => TimeIntegral::Finite {
            value: factor * value,
            abs_err: factor * abs_err,
        },
        d => d,
    })
}

/// Same integral evaluated directly in the `s` variable, without the scaling
/// substitution.
pub fn time_integral_direct(
    alpha: f64,
    dim: usize,
    r: f64,
    gamma: Gamma,
) -> Result<TimeIntegral, KernelError> {
    check_time_integral_args(alpha, r)?;
    Ok(TimeIntegrand::new(alpha, dim, gamma).integrate(r, r.powf(2.0 * alpha)))
}

/// Maximum of `|a - b| / max|b|` over points with `|x| <= L/2`.
pub fn relative_inner_error(a: &Field, b: &Field) -> f64 {
    let grid = a.grid();
    let mut diff = 0.0f64;
    let mut peak = 0.0f64;
    for (i, _) in inner_points(grid) {
        diff = diff.max((a.values()[i] - b.values()[i]).abs());
        peak = peak.max(b.values()[i].abs());
    }
    if peak == 0.0 {
        diff
    } else {
        diff / peak
    }
}

/// Radius `|x|` of every grid point, as a field.
pub fn radius_field(grid: &Grid) -> Field {
    Field::from_raw(*grid, (0..grid.len()).map(|i| grid.radius(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, sample};
    use std::f64::consts::PI;

    fn gaussian(t: f64) -> impl Fn(&[f64]) -> f64 {
        move |x| {
            (4.0 * PI * t).powf(-0.5 * x.len() as f64)
                * (-x.iter().map(|v| v * v).sum::<f64>() / (4.0 * t)).exp()
        }
    }

    /// Poisson kernel summed over all 2L-periodic images.
    fn periodic_poisson(t: f64, period: f64) -> impl Fn(&[f64]) -> f64 {
        move |x| {
            let a = 2.0 * PI * t / period;
            let b = 2.0 * PI * x[0] / period;
            a.sinh() / (period * (a.cosh() - b.cos()))
        }
    }

    #[test]
    fn gaussian_oracle() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let k = heat_kernel(1.0, 1.0, &g).unwrap();
        let oracle = sample(&g, gaussian(1.0)).unwrap();
        assert!(relative_inner_error(&k, &oracle) <= 1e-6);
    }

    #[test]
    fn poisson_oracle() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let k = heat_kernel(0.5, 1.0, &g).unwrap();
        let oracle = sample(&g, periodic_poisson(1.0, 40.0)).unwrap();
        assert!(relative_inner_error(&k, &oracle) <= 1e-6);
        // the free-space kernel differs by the periodic images
        let free = sample(&g, |x| 1.0 / (PI * (1.0 + x[0] * x[0]))).unwrap();
        assert!(relative_inner_error(&k, &free) > 1e-4);
    }

    #[test]
    fn kernel_mass_and_positivity() {
        for (dim, n) in [(1, 256), (2, 64)] {
            let g = Grid::new(dim, 8.0, n).unwrap();
            for alpha in [0.3, 0.6, 1.0] {
                for t in [0.1, 1.0] {
                    let k = heat_kernel(alpha, t, &g).unwrap();
                    assert!((integrate(&k) - 1.0).abs() < 1e-10);
                    // positivity survives truncation only once the spectrum is resolved
                    if alpha >= 0.5 && t >= 1.0 {
                        assert!(
                            k.values().iter().all(|&v| v >= -1e-10),
                            "alpha {alpha} t {t}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_arguments() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        assert!(matches!(
            heat_kernel(0.0, 1.0, &g),
            Err(KernelError::AlphaOutOfRange { .. })
        ));
        assert!(matches!(
            heat_kernel(1.2, 1.0, &g),
            Err(KernelError::AlphaOutOfRange { .. })
        ));
        assert!(matches!(
            heat_kernel(1.0, 0.0, &g),
            Err(KernelError::Time { .. })
        ));
    }

    #[test]
    fn semigroup_examples() {
        let g = Grid::new(1, PI, 64).unwrap();
        let f = sample(&g, |x| (2.0 * x[0]).sin() + 0.3 * (5.0 * x[0]).cos()).unwrap();
        assert_eq!(semigroup_apply(0.7, 0.0, &f).unwrap(), f);

        let a = semigroup_apply(0.75, 0.3, &semigroup_apply(0.75, 0.2, &f).unwrap()).unwrap();
        let b = semigroup_apply(0.75, 0.5, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }

        let s = sample(&g, |x| (3.0 * x[0]).sin()).unwrap();
        let out = semigroup_apply(1.0, 0.1, &s).unwrap();
        for (x, y) in out.values().iter().zip(s.values()) {
            assert!((x - (-0.9f64).exp() * y).abs() < 1e-12);
        }
        assert!(semigroup_apply(1.0, -1.0, &s).is_err());
    }

    #[test]
    fn self_similarity() {
        // g_t(x) = t^{-n/2a} g_1(t^{-1/2a} x); with t = 4^{a} the lattices
        // match at every other point. Periodic images break the identity by
        // the tail mass outside the box, which is tiny for alpha = 1.
        let g = Grid::new(1, 20.0, 512).unwrap();
        for (alpha, tol) in [(1.0, 1e-12), (0.75, 3e-3)] {
            let t = 4f64.powf(alpha);
            let k1 = heat_kernel(alpha, 1.0, &g).unwrap();
            let kt = heat_kernel(alpha, t, &g).unwrap();
            let c = g.origin_index();
            for j in 0..60 {
                let lhs = kt.values()[c + 2 * j];
                let rhs = t.powf(-1.0 / (2.0 * alpha)) * k1.values()[c + j];
                assert!(
                    (lhs - rhs).abs() < tol * k1.values()[c],
                    "alpha {alpha} j {j}: {lhs} {rhs}"
                );
            }
        }
    }

    #[test]
    fn pointwise_decay_against_gaussian() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let sweep = [0.25, 0.5, 1.0, 2.0, 4.0];
        let report = verify_pointwise_decay(1.0, &sweep, &g).unwrap();
        assert!(report.pass, "{report:?}");
        // the same functional evaluated on the closed-form Gaussian
        let mut oracle = 0.0f64;
        for &t in &sweep {
            let gk = sample(&g, gaussian(t)).unwrap();
            for (i, r) in inner_points(&g) {
                oracle = oracle.max(gk.values()[i] * (t.sqrt() + r).powi(3) / t);
            }
        }
        assert!((report.constant / oracle - 1.0).abs() < 0.2);

        let fine = Grid::new(1, 20.0, 1024).unwrap();
        let refined = verify_pointwise_decay(1.0, &sweep, &fine).unwrap();
        assert!((refined.constant / report.constant - 1.0).abs() < 0.05);
    }

    #[test]
    fn decay_constant_t_sweep_stability() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        for alpha in [0.6, 0.75, 1.0] {
            let a = verify_pointwise_decay(alpha, &[0.5], &g).unwrap().constant;
            let b = verify_pointwise_decay(alpha, &[2.0], &g).unwrap().constant;
            assert!((a / b - 1.0).abs() < 0.1, "alpha {alpha}: {a} vs {b}");
            let a = verify_gradient_decay(alpha, &[0.5], &g).unwrap().constant;
            let b = verify_gradient_decay(alpha, &[2.0], &g).unwrap().constant;
            assert!((a / b - 1.0).abs() < 0.1, "alpha {alpha}: {a} vs {b}");
        }
    }

    #[test]
    fn gradient_decay_against_gaussian() {
        let g = Grid::new(1, 20.0, 512).unwrap();
        let sweep = [0.25, 1.0, 4.0];
        let report = verify_gradient_decay(1.0, &sweep, &g).unwrap();
        assert!(report.pass, "{report:?}");
        let mut oracle = 0.0f64;
        for &t in &sweep {
            for (i, r) in inner_points(&g) {
                let x = g.point(i)[0];
                let d = gaussian(t)(&[x]) * x.abs() / (2.0 * t);
                oracle = oracle.max(d * (t.sqrt() + r).powi(2));
            }
        }
        assert!((report.constant / oracle - 1.0).abs() < 0.2);
        let fine = Grid::new(1, 20.0, 1024).unwrap();
        let refined = verify_gradient_decay(1.0, &sweep, &fine).unwrap();
        assert!((refined.constant / report.constant - 1.0).abs() < 0.05);
    }

    fn sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect()
    }

    #[test]
    fn smoothing_examples() {
        let g = Grid::new(1, 20.0, 1024).unwrap();
        let r = verify_smoothing(1.0, 2.0, 2.0, 0.0, &sweep(0.05, 5.0, 8), &g).unwrap();
        assert!(r.fit.unwrap().slope.abs() <= 0.02, "{r:?}");

        let r = verify_smoothing(0.75, 1.0, 2.0, 0.0, &sweep(0.05, 5.0, 8), &g).unwrap();
        let fit = r.fit.unwrap();
        assert!((fit.theoretical + 1.0 / 3.0).abs() < 1e-15);
        assert!(r.pass, "{fit:?}");

        let r = verify_smoothing(1.0, 2.0, 2.0, 1.0, &sweep(0.05, 5.0, 8), &g).unwrap();
        assert!(r.pass, "{:?}", r.fit);
        assert!((r.fit.unwrap().theoretical + 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothing_rejects_degenerate_sweeps() {
        let g = Grid::new(1, 20.0, 256).unwrap();
        assert_eq!(
            verify_smoothing(1.0, 1.0, 2.0, 0.0, &[0.5, 1.0, 2.0], &g),
            Err(KernelError::DegenerateSweep(3, 4))
        );
        assert_eq!(
            verify_smoothing(1.0, 2.0, 1.0, 0.0, &[0.5, 1.0, 2.0, 3.0], &g),
            Err(KernelError::Exponents)
        );
    }

    #[test]
    fn time_integral_scaling_and_divergence() {
        for alpha in [0.6, 0.75] {
            let a = time_integral(alpha, 1, 0.5, Gamma::One)
                .unwrap()
                .value()
                .unwrap();
            let b = time_integral(alpha, 1, 2.0, Gamma::One)
                .unwrap()
                .value()
                .unwrap();
            let e = 2.0 - 2.0 * alpha;
            assert!((a * 0.5f64.powf(e) / (b * 2f64.powf(e)) - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            time_integral(1.0, 1, 1.0, Gamma::One).unwrap(),
            TimeIntegral::Divergent { .. }
        ));
        assert!(matches!(
            time_integral_direct(0.75, 1, 1.0, Gamma::Zero).unwrap(),
            TimeIntegral::Divergent { .. }
        ));
        assert!(matches!(
            time_integral(1.0, 2, 1.0, Gamma::Zero).unwrap(),
            TimeIntegral::Divergent { .. }
        ));
        assert!(time_integral(0.5, 1, 1.0, Gamma::One).is_err());
        assert!(time_integral(0.75, 1, 0.0, Gamma::One).is_err());
    }

    #[test]
    fn time_integral_closed_form() {
        // alpha = 1/2 is outside the admissible range, so check a closed form
        // in the admissible one: n = 2, alpha = 1, γ = 1:
        // integral_0^inf ds/(sqrt s + r)^3 = 2 integral_0^inf u du/(u + r)^3 = 1/r.
        for r in [0.5, 1.0, 3.0] {
            let v = time_integral_direct(1.0, 2, r, Gamma::One)
                .unwrap()
                .value()
                .unwrap();
            assert!((v - 1.0 / r).abs() < 1e-10 / r, "{v}");
            let w = time_integral(1.0, 2, r, Gamma::One)
                .unwrap()
                .value()
                .unwrap();
            assert!((w - 1.0 / r).abs() < 1e-10 / r);
        }
        // n = 2, alpha = 3/4, γ = 0 with u = s^{2/3}:
        // integral s ds/(s^{2/3} + 1)^{3.5} = 1.5 integral u^2 du/(u + 1)^{3.5}
        // = 1.5 B(3, 1/2) = 1.5 * 16/15.
        let v = time_integral_direct(0.75, 2, 1.0, Gamma::Zero)
            .unwrap()
            .value()
            .unwrap();
        assert!((v - 1.6).abs() < 1e-9, "{v}");
    }
}
