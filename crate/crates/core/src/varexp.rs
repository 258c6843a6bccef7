//! Variable-exponent Lebesgue spaces: exponents, the modular, Luxemburg and
//! mixed norms, Hölder/duality/embedding diagnostics, and the two
//! solution-space norms.
//!
//! Every norm of the zero function is 0, and every defect ratio with a zero
//! denominator is 0.

use rand_distr::{Distribution, Uniform};
use thiserror::Error;

use crate::grid::{self, sup_over_time, Field, Grid, GridError, SpaceTimeField, MAX_DIM};
use crate::random;
use crate::spectral::SpectralPlan;

/// Default relative bisection width for Luxemburg norms.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Maximum number of doublings/halvings used to bracket a Luxemburg norm.
pub const BRACKET_LIMIT: usize = 1100;

/// Default divergence threshold for the finite-box embedding-class proxy.
pub const EMB_THRESHOLD: f64 = 1e3;

/// Pointwise tolerance for `1/p1 = 1/p2 + 1/p3`.
pub const EXPONENT_RELATION_TOL: f64 = 1e-12;

/// Target number of sample points for strided log-Hölder scans.
const LOG_HOLDER_SAMPLES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarExpError {
    #[error("exponent must satisfy 1 < p- <= p+ < inf, got p- = {min}, p+ = {max}")]
    ExponentRange { min: f64, max: f64 },
    #[error("exponent sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("exponent and field are sampled on different domains")]
    GridMismatch,
    #[error("limit exponent p_inf is required for the log-Hölder decay test")]
    MissingPInf,
    #[error("bisection could not bracket the Luxemburg norm within {0} doublings")]
    BracketFailure(usize),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("exponents violate 1/p1 = 1/p2 + 1/p3 at sample {index}")]
    ExponentMismatch { index: usize },
    #[error("constant exponent must be > 1, got {0}")]
    ConstantExponent(f64),
    #[error("need at least one trial")]
    Trials,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Where an exponent is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentDomain {
    Space(Grid),
    Time(Vec<f64>),
}

/// Sampled exponent function `p(.)` with an optional limit value at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableExponent {
    domain: ExponentDomain,
    values: Vec<f64>,
    p_inf: Option<f64>,
}

impl VariableExponent {
    /// Spatial exponent from samples on a grid.
    pub fn spatial(samples: Field, p_inf: Option<f64>) -> Result<Self, VarExpError> {
        let grid = *samples.grid();
        Self::checked(ExponentDomain::Space(grid), samples.into_values(), p_inf)
    }

    pub fn constant(grid: &Grid, p: f64) -> Result<Self, VarExpError> {
        Self::checked(ExponentDomain::Space(*grid), vec![p; grid.len()], Some(p))
    }

    /// Spatial exponent sampled from a pointwise function.
    pub fn from_fn(
        grid: &Grid,
        p_inf: Option<f64>,
        p: impl Fn(&[f64]) -> f64,
    ) -> Result<Self, VarExpError> {
        Self::spatial(grid::sample(grid, p)?, p_inf)
    }

    /// Temporal exponent sampled at the given instants.
    pub fn temporal(times: Vec<f64>, values: Vec<f64>) -> Result<Self, VarExpError> {
        if values.len() != times.len() {
            return Err(GridError::Length {
                expected: times.len(),
                got: values.len(),
            }
            .into());
        }
        Self::checked(ExponentDomain::Time(times), values, None)
    }

    pub fn temporal_constant(times: Vec<f64>, p: f64) -> Result<Self, VarExpError> {
        let values = vec![p; times.len()];
        let mut e = Self::temporal(times, values)?;
        e.p_inf = Some(p);
        Ok(e)
    }

    fn checked(
        domain: ExponentDomain,
        values: Vec<f64>,
        p_inf: Option<f64>,
    ) -> Result<Self, VarExpError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(VarExpError::NonFinite { index });
        }
        let e = Self {
            domain,
            values,
            p_inf,
        };
        let (min, max) = e.limits();
        if !(min > 1.0) {
            return Err(VarExpError::ExponentRange { min, max });
        }
        Ok(e)
    }

    /// Exponent without the `p- > 1` check, for quasi-norm computations.
    /// Samples must still be positive and finite.
    pub(crate) fn unchecked(domain: ExponentDomain, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v > 0.0));
        Self {
            domain,
            values,
            p_inf: None,
        }
    }

    pub fn with_p_inf(mut self, p_inf: Option<f64>) -> Self {
        self.p_inf = p_inf;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &ExponentDomain {
        &self.domain
    }

    pub fn p_inf(&self) -> Option<f64> {
        self.p_inf
    }

    pub fn grid(&self) -> Option<&Grid> {
        match &self.domain {
            ExponentDomain::Space(g) => Some(g),
            ExponentDomain::Time(_) => None,
        }
    }

    /// `(p-, p+)`.
    pub fn limits(&self) -> (f64, f64) {
        limit_exponents(self)
    }

    /// Pointwise `p(x) / k`.
    pub(crate) fn divided(&self, k: f64) -> Self {
        Self::unchecked(
            self.domain.clone(),
            self.values.iter().map(|p| p / k).collect(),
        )
    }

    /// Sample positions; times are embedded on the first axis.
    fn positions(&self) -> Vec<[f64; MAX_DIM]> {
        match &self.domain {
            ExponentDomain::Space(g) => (0..g.len()).map(|i| g.point(i)).collect(),
            ExponentDomain::Time(ts) => ts.iter().map(|&t| [t, 0.0, 0.0]).collect(),
        }
    }

    fn check_field(&self, f: &Field) -> Result<(), VarExpError> {
        match &self.domain {
            ExponentDomain::Space(g) if g == f.grid() => Ok(()),
            _ => Err(VarExpError::GridMismatch),
        }
    }
}

/// `(p-, p+)` over the samples.
pub fn limit_exponents(p: &VariableExponent) -> (f64, f64) {
    p.values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Empirical log-Hölder constants of `1/p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHolderReport {
    pub local_constant: f64,
    pub decay_constant: f64,
    pub budget: f64,
    pub pass: bool,
}

fn log_holder_sample_indices(p: &VariableExponent) -> Vec<usize> {
    match &p.domain {
        ExponentDomain::Time(ts) => (0..ts.len()).collect(),
        ExponentDomain::Space(g) if g.dim() == 1 => (0..g.len()).collect(),
        ExponentDomain::Space(g) => {
            let per_axis = (LOG_HOLDER_SAMPLES as f64)
                .powf(1.0 / g.dim() as f64)
                .floor() as usize;
            let stride = (g.points() / per_axis.max(1)).max(1);
            (0..g.len())
                .filter(|&i| g.unflatten(i)[..g.dim()].iter().all(|k| k % stride == 0))
                .collect()
        }
    }
}

/// Smallest `C` with `|1/p(x) - 1/p(y)| <= C / log(e + 1/|x - y|)` over the
/// sampled pairs. Exhaustive in one dimension, strided otherwise.
pub fn local_log_holder_constant(p: &VariableExponent) -> f64 {
    let pos = p.positions();
    let idx = log_holder_sample_indices(p);
    let mut c = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        let inv_i = 1.0 / p.values[i];
        for &j in &idx[a + 1..] {
            let diff = (inv_i - 1.0 / p.values[j]).abs();
            if diff == 0.0 {
                continue;
            }
            let d = [
                pos[i][0] - pos[j][0],
                pos[i][1] - pos[j][1],
                pos[i][2] - pos[j][2],
            ];
            let dist = grid::norm(&d);
            c = c.max(diff * (std::f64::consts::E + 1.0 / dist).ln());
        }
    }
    c
}

/// Smallest `C` with `|1/p(x) - 1/p_inf| <= C / log(e + |x|)` over all samples.
pub fn decay_log_holder_constant(p: &VariableExponent) -> Result<f64, VarExpError> {
    let p_inf = p.p_inf.ok_or(VarExpError::MissingPInf)?;
    let pos = p.positions();
    Ok(p.values
        .iter()
        .zip(&pos)
        .map(|(&v, x)| (1.0 / v - 1.0 / p_inf).abs() * (std::f64::consts::E + grid::norm(x)).ln())
        .fold(0.0, f64::max))
}

pub fn check_log_holder(p: &VariableExponent, budget: f64) -> Result<LogHolderReport, VarExpError> {
    let decay_constant = decay_log_holder_constant(p)?;
    let local_constant = local_log_holder_constant(p);
    Ok(LogHolderReport {
        local_constant,
        decay_constant,
        budget,
        pass: local_constant <= budget && decay_constant <= budget,
    })
}

/// Finite-box proxy for membership of `qbar` in the embedding class of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbClassReport {
    /// `q <= qbar-`.
    pub lower_ok: bool,
    /// Minimum of `q qbar / (qbar - q)` on each radial shell of width `h`,
    /// from the center out to `|x| <= L`; `+inf` where `qbar = q`.
    pub shell_values: Vec<f64>,
    pub monotone: bool,
    pub threshold: f64,
    pub pass: bool,
}

/// Checks `q <= qbar-` and that `q qbar(x)/(qbar(x) - q)` grows monotonically
/// along radial shells past `threshold` by the box boundary. A proxy for the
/// asymptotic condition, which is undecidable on a bounded box.
pub fn emb_class_profile(qbar: &VariableExponent, q: f64, threshold: f64) -> EmbClassReport {
    let (lo, _) = qbar.limits();
    let lower_ok = q <= lo * (1.0 + 1e-12);
    let pos = qbar.positions();
    let (width, outer) = match &qbar.domain {
        ExponentDomain::Space(g) => (g.spacing(), g.half_len()),
        ExponentDomain::Time(ts) => {
            let t_max = *ts.last().unwrap_or(&0.0);
            (t_max / ts.len().max(1) as f64, t_max)
        }
    };
    let shells = (outer / width).floor() as usize + 1;
    let mut shell_values = vec![f64::NAN; shells];
    for (x, &qb) in pos.iter().zip(&qbar.values) {
        let r = grid::norm(x);
        if r > outer {
            continue;
        }
        let shell = ((r / width).floor() as usize).min(shells - 1);
        let gap = qb - q;
        let value = if gap.abs() <= 1e-14 * q {
            f64::INFINITY
        } else {
            q * qb / gap
        };
        let slot = &mut shell_values[shell];
        if slot.is_nan() || value < *slot {
            *slot = value;
        }
    }
    shell_values.retain(|v| !v.is_nan());
    let monotone = shell_values
        .windows(2)
        .all(|w| w[1] == f64::INFINITY || (w[0].is_finite() && w[1] >= w[0] * (1.0 - 1e-12)));
    let diverged = shell_values.last().is_some_and(|&v| v >= threshold);
    EmbClassReport {
        lower_ok,
        pass: lower_ok && monotone && diverged,
        shell_values,
        monotone,
        threshold,
    }
}

pub fn check_emb_class(qbar: &VariableExponent, q: f64) -> bool {
    emb_class_profile(qbar, q, EMB_THRESHOLD).pass
}

/// Quadrature weights attached to a set of samples.
#[derive(Debug, Clone, Copy)]
enum Weights<'a> {
    Uniform(f64),
    PerPoint(&'a [f64]),
}

impl Weights<'_> {
    fn at(&self, i: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerPoint(ws) => ws[i],
        }
    }
}

fn modular_raw(values: &[f64], exps: &[f64], weights: Weights<'_>, lambda: f64) -> f64 {
    values
        .iter()
        .zip(exps)
        .enumerate()
        .map(|(i, (&v, &p))| {
            if v == 0.0 {
                0.0
            } else {
                weights.at(i) * (v.abs() / lambda).powf(p)
            }
        })
        .sum()
}

/// Luxemburg functional by bisection on the strictly decreasing map
/// `lambda -> modular(f / lambda)`.
fn luxemburg_raw(
    values: &[f64],
    exps: &[f64],
    weights: Weights<'_>,
    tol: f64,
) -> Result<f64, VarExpError> {
    if !(tol > 0.0) {
        return Err(VarExpError::Tolerance(tol));
    }
    if values
        .iter()
        .enumerate()
        .all(|(i, &v)| v == 0.0 || weights.at(i) == 0.0)
    {
        return Ok(0.0);
    }
    let m = |lambda: f64| modular_raw(values, exps, weights, lambda);
    let (mut lo, mut hi);
    if m(1.0) > 1.0 {
        lo = 1.0;
        hi = 2.0;
        let mut steps = 0;
        while m(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > BRACKET_LIMIT || !hi.is_finite() {
                return Err(VarExpError::BracketFailure(BRACKET_LIMIT));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut steps = 0;
        while m(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > BRACKET_LIMIT || lo == 0.0 {
                return Err(VarExpError::BracketFailure(BRACKET_LIMIT));
            }
        }
    }
    // Invariant: m(lo) > 1 >= m(hi).
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `integral |f(x)|^p(x) dx`.
pub fn modular(f: &Field, p: &VariableExponent) -> Result<f64, VarExpError> {
    p.check_field(f)?;
    Ok(modular_raw(
        f.values(),
        &p.values,
        Weights::Uniform(f.grid().cell_volume()),
        1.0,
    ))
}

/// Luxemburg norm `inf { lambda > 0 : modular(f / lambda) <= 1 }`, resolved to
/// relative width `tol`.
pub fn luxemburg_norm(f: &Field, p: &VariableExponent, tol: f64) -> Result<f64, VarExpError> {
    p.check_field(f)?;
    luxemburg_raw(
        f.values(),
        &p.values,
        Weights::Uniform(f.grid().cell_volume()),
        tol,
    )
}

/// Classical `L^q` norm; `q = inf` is the max norm.
pub fn lq_norm(f: &Field, q: f64) -> f64 {
    if q == f64::INFINITY {
        return f.max_abs();
    }
    // Scale by the max to keep |f|^q representable.
    let peak = f.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = f.values().iter().map(|v| (v.abs() / peak).powf(q)).sum();
    peak * (f.grid().cell_volume() * sum).powf(1.0 / q)
}

/// Parameters of the mixed space `L^{p(.)} ∩ L^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpaceParams {
    p: VariableExponent,
    q_const: f64,
}

impl MixedSpaceParams {
    pub fn new(p: VariableExponent, q_const: f64) -> Result<Self, VarExpError> {
        if !(q_const > 1.0 && q_const.is_finite()) {
            return Err(VarExpError::ConstantExponent(q_const));
        }
        Ok(Self { p, q_const })
    }

    /// Same construction without the `q > 1` requirement, for quasi-norms.
    pub(crate) fn unchecked(p: VariableExponent, q_const: f64) -> Self {
        Self { p, q_const }
    }

    pub fn p(&self) -> &VariableExponent {
        &self.p
    }

    pub fn q_const(&self) -> f64 {
        self.q_const
    }
}

/// `max { ||f||_{p(.)}, ||f||_{q} }`.
pub fn mixed_norm(f: &Field, params: &MixedSpaceParams, tol: f64) -> Result<f64, VarExpError> {
    let lux = luxemburg_norm(f, &params.p, tol)?;
    Ok(lux.max(lq_norm(f, params.q_const)))
}

/// Pointwise `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: &VariableExponent) -> VariableExponent {
    let conj = |v: f64| v / (v - 1.0);
    VariableExponent {
        domain: p.domain.clone(),
        values: p.values.iter().map(|&v| conj(v)).collect(),
        p_inf: p.p_inf.map(conj),
    }
}

/// `||fg||_{p1} / (||f||_{p2} ||g||_{p3})`.
pub fn holder_defect(
    f: &Field,
    g: &Field,
    p1: &VariableExponent,
    p2: &VariableExponent,
    p3: &VariableExponent,
    tol: f64,
) -> Result<f64, VarExpError> {
    f.check_same_grid(g)?;
    for p in [p1, p2, p3] {
        p.check_field(f)?;
    }
    for (index, ((a, b), c)) in p1.values.iter().zip(&p2.values).zip(&p3.values).enumerate() {
        if (1.0 / a - 1.0 / b - 1.0 / c).abs() > EXPONENT_RELATION_TOL {
            return Err(VarExpError::ExponentMismatch { index });
        }
    }
    let denom = luxemburg_norm(f, p2, tol)? * luxemburg_norm(g, p3, tol)?;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(luxemburg_norm(&f.mul(g)?, p1, tol)? / denom)
}

/// Norm of `L^{p(.)}_q(R^n, L^inf_t)`: the mixed norm of `sup_t |u|`.
#[allow(non_snake_case)]
pub fn E_norm(u: &SpaceTimeField, params: &MixedSpaceParams, tol: f64) -> Result<f64, VarExpError> {
    mixed_norm(&sup_over_time(u), params, tol)
}

/// Trapezoid weights on a strictly increasing lattice.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let m = times.len();
    let mut w = vec![0.0; m];
    for i in 1..m {
        let dt = times[i] - times[i - 1];
        w[i - 1] += 0.5 * dt;
        w[i] += 0.5 * dt;
    }
    w
}

/// Luxemburg norm of a scalar time trace with a temporal exponent.
pub fn time_luxemburg_norm(
    trace: &[f64],
    p_time: &VariableExponent,
    tol: f64,
) -> Result<f64, VarExpError> {
    let ExponentDomain::Time(times) = &p_time.domain else {
        return Err(VarExpError::GridMismatch);
    };
    if times.len() != trace.len() {
        return Err(VarExpError::GridMismatch);
    }
    let w = trapezoid_weights(times);
    luxemburg_raw(trace, &p_time.values, Weights::PerPoint(&w), tol)
}

/// Norm of `L^{p(.)}([0,T], L^q)`: the time-Luxemburg norm of
/// `t_i -> ||u(t_i)||_{L^q}` with trapezoid weights.
#[allow(non_snake_case)]
pub fn ET_norm(
    u: &SpaceTimeField,
    p_time: &VariableExponent,
    q_space: f64,
    tol: f64,
) -> Result<f64, VarExpError> {
    match &p_time.domain {
        ExponentDomain::Time(ts) if ts.as_slice() == u.times() => {}
        _ => return Err(VarExpError::GridMismatch),
    }
    if !(q_space > 1.0) {
        return Err(VarExpError::ConstantExponent(q_space));
    }
    let trace: Vec<f64> = u.frames().iter().map(|f| lq_norm(f, q_space)).collect();
    time_luxemburg_norm(&trace, p_time, tol)
}

/// Two-sided duality diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityDefect {
    /// `max_g integral |f||g| / ||f||_{p(.)}` over trials with `||g||_{p'(.)} = 1`.
    /// Bounded by 2.
    pub upper: f64,
    /// `||f||_{p(.)} / max_g integral |f||g|`. Bounded by 2.
    pub lower: f64,
}

/// Draws `trials` random `g` normalized to `||g||_{p'} = 1` and measures how
/// well `integral |f||g|` reproduces `||f||_{p(.)}`. The extremal
/// `g = (|f|/||f||)^{p-1}` is always included as a deterministic trial.
pub fn norm_duality_defect(
    f: &Field,
    p: &VariableExponent,
    trials: usize,
    seed: u64,
) -> Result<DualityDefect, VarExpError> {
    if trials == 0 {
        return Err(VarExpError::Trials);
    }
    p.check_field(f)?;
    let norm_f = luxemburg_norm(f, p, DEFAULT_TOL)?;
    if norm_f == 0.0 {
        return Ok(DualityDefect {
            upper: 0.0,
            lower: 0.0,
        });
    }
    let grid = *f.grid();
    let conj = conjugate_exponent(p);
    let pairing = |g: &Field| -> Result<f64, VarExpError> {
        let gn = luxemburg_norm(g, &conj, DEFAULT_TOL)?;
        if gn == 0.0 {
            return Ok(0.0);
        }
        Ok(grid::integrate(&f.abs().mul(&g.abs())?) / gn)
    };

    let extremal = Field::new(
        grid,
        f.values()
            .iter()
            .zip(&p.values)
            .map(|(v, &pe)| (v.abs() / norm_f).powf(pe - 1.0))
            .collect(),
    )?;
    let mut best = pairing(&extremal)?;

    let plan = SpectralPlan::new(&grid);
    let mut rng = random::rng(seed);
    let shift = Uniform::new(0.0, 1.0).expect("valid range");
    for _ in 0..trials {
        let base = random::band_limited_with(&plan, &mut rng);
        let offset: f64 = shift.sample(&mut rng);
        let g = base.try_map(|v| v.abs() + offset)?;
        best = best.max(pairing(&g)?);
    }
    Ok(DualityDefect {
        upper: best / norm_f,
        lower: if best > 0.0 { norm_f / best } else { 0.0 },
    })
}
