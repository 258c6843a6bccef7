//! Picard iteration for the mild formulation of
//! `d_t u + (-Delta)^alpha u = eps grad^gamma(|u|^b u) + f`, with smallness
//! and contraction diagnostics.

use num_complex::Complex64;
use rand::Rng as _;
use thiserror::Error;

use crate::grid::{self, sup_over_time, Field, Grid, GridError, SpaceTimeField};
use crate::kernel::{HeatSemigroup, KernelError};
use crate::operators::{fractional_power, grad_dot_ones_symbol};
use crate::random::{self, Rng};
use crate::spectral::SpectralPlan;
use crate::varexp::{
    self, check_emb_class, lq_norm, luxemburg_norm, mixed_norm, ET_norm, E_norm, MixedSpaceParams,
    VarExpError, VariableExponent, EXPONENT_RELATION_TOL,
};

pub use crate::kernel::Gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("alpha must lie in (1/2, 1], got {0}")]
    Alpha(f64),
    #[error("power b must be at least 1")]
    Power,
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("need at least {required} time steps, got {got}")]
    Steps { required: usize, got: usize },
    #[error("coupling must be finite, got {0}")]
    Coupling(f64),
    #[error("space exponent q = {got} must equal nb/(2 alpha - <1>_gamma) = {expected}")]
    CriticalExponent { expected: f64, got: f64 },
    #[error("time exponent p- = {min} must exceed b + 1 = {bound}")]
    TimeExponent { min: f64, bound: f64 },
    #[error("space exponent q = {got} must exceed nb/(2 alpha - <1>_gamma) = {bound}")]
    SpaceExponent { got: f64, bound: f64 },
    #[error("alpha b/p + nb/(2q) = {lhs} must stay below alpha - <1/2>_gamma = {rhs} (time node {index})")]
    ExponentInequality { index: usize, lhs: f64, rhs: f64 },
    #[error("exponent lives on the wrong domain")]
    ExponentDomain,
    #[error("field does not live on the problem's grid and time lattice")]
    LatticeMismatch,
    #[error("Picard iteration diverged at iteration {0}")]
    Diverged(usize),
    #[error("operation needs the {0} mode")]
    WrongMode(&'static str),
    #[error("smallness check needs the force in potential form")]
    WrongForceForm,
    #[error("q-bar is not in the embedding class for q = {0}")]
    EmbClass(f64),
    #[error("no lattice horizon passes the smallness test")]
    NoAdmissibleT,
    #[error("{0} must be at least 1")]
    Count(&'static str),
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    VarExp(#[from] VarExpError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// `<s>_gamma`: 0 for γ = 0, `s` for γ = 1.
pub fn gamma_bracket(s: f64, gamma: Gamma) -> f64 {
    match gamma {
        Gamma::Zero => 0.0,
        Gamma::One => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Force {
    None,
    /// `f` itself.
    Direct(SpaceTimeField),
    /// `F` with `f = grad^gamma F`.
    Potential(SpaceTimeField),
}

/// Solution space and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// `L^{p(.)}_q(R^n, L^inf_t)` with the critical `q`.
    Global { space: MixedSpaceParams },
    /// `L^{p(.)}([0,T], L^q)`; `qbar` is the data exponent.
    Local {
        p_time: VariableExponent,
        q_space: f64,
        qbar: VariableExponent,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Global { .. } => "global",
            Mode::Local { .. } => "local",
        }
    }
}

/// A validated Cauchy problem on the uniform lattice `t_i = i T / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    alpha: f64,
    b: u32,
    gamma: Gamma,
    u0: Field,
    force: Force,
    horizon: f64,
    steps: usize,
    mode: Mode,
    coupling: f64,
    seed: u64,
    trials: usize,
}

/// Trials used by the smallness checks.
pub const DEFAULT_TRIALS: usize = 64;

impl ProblemSpec {
    pub fn new(
        alpha: f64,
        b: u32,
        gamma: Gamma,
        u0: Field,
        horizon: f64,
        steps: usize,
        mode: Mode,
    ) -> Result<Self> {
        if !(alpha > 0.5 && alpha <= 1.0) {
            return Err(SolverError::Alpha(alpha));
        }
        if b < 1 {
            return Err(SolverError::Power);
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SolverError::Horizon(horizon));
        }
        if steps < 1 {
            return Err(SolverError::Steps {
                required: 1,
                got: steps,
            });
        }
        let spec = Self {
            alpha,
            b,
            gamma,
            u0,
            force: Force::None,
            horizon,
            steps,
            mode,
            coupling: 1.0,
            seed: 0,
            trials: DEFAULT_TRIALS,
        };
        spec.validate_mode()?;
        Ok(spec)
    }

    pub fn with_force(mut self, force: Force) -> Result<Self> {
        match &force {
            Force::None => {}
            Force::Direct(f) | Force::Potential(f) => self.check_lattice(f)?,
        }
        self.force = force;
        Ok(self)
    }

    /// Scales the nonlinear term by `eps`.
    pub fn with_coupling(mut self, eps: f64) -> Result<Self> {
        if !eps.is_finite() {
            return Err(SolverError::Coupling(eps));
        }
        self.coupling = eps;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Result<Self> {
        if trials < 1 {
            return Err(SolverError::Count("trials"));
        }
        self.trials = trials;
        Ok(self)
    }

    /// Same problem with new initial data.
    pub fn with_u0(mut self, u0: Field) -> Result<Self> {
        if u0.grid() != self.u0.grid() {
            return Err(SolverError::LatticeMismatch);
        }
        self.u0 = u0;
        Ok(self)
    }

    fn validate_mode(&self) -> Result<()> {
        let grid = self.grid();
        let n = grid.dim() as f64;
        let b = self.b as f64;
        let critical = n * b / (2.0 * self.alpha - gamma_bracket(1.0, self.gamma));
        match &self.mode {
            Mode::Global { space } => {
                if space.p().grid() != Some(grid) {
                    return Err(SolverError::ExponentDomain);
                }
                let q = space.q_const();
                if (q - critical).abs() > EXPONENT_RELATION_TOL * critical {
                    return Err(SolverError::CriticalExponent {
                        expected: critical,
                        got: q,
                    });
                }
            }
            Mode::Local {
                p_time,
                q_space,
                qbar,
            } => {
                match p_time.domain() {
                    varexp::ExponentDomain::Time(ts) if lattice_matches(ts, &self.times()) => {}
                    _ => return Err(SolverError::ExponentDomain),
                }
                if qbar.grid() != Some(grid) {
                    return Err(SolverError::ExponentDomain);
                }
                let (min, _) = p_time.limits();
                if !(min > b + 1.0) {
                    return Err(SolverError::TimeExponent {
                        min,
                        bound: b + 1.0,
                    });
                }
                if !(*q_space > critical) {
                    return Err(SolverError::SpaceExponent {
                        got: *q_space,
                        bound: critical,
                    });
                }
                let rhs = self.alpha - gamma_bracket(0.5, self.gamma);
                for (index, p) in p_time.values().iter().enumerate() {
                    let lhs = self.alpha * b / p + n * b / (2.0 * q_space);
                    if !(lhs < rhs) {
                        return Err(SolverError::ExponentInequality { index, lhs, rhs });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_lattice(&self, u: &SpaceTimeField) -> Result<()> {
        if u.grid() != self.grid() || !lattice_matches(u.times(), &self.times()) {
            return Err(SolverError::LatticeMismatch);
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn gamma(&self) -> Gamma {
        self.gamma
    }

    pub fn grid(&self) -> &Grid {
        self.u0.grid()
    }

    pub fn u0(&self) -> &Field {
        &self.u0
    }

    pub fn force(&self) -> &Force {
        &self.force
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn times(&self) -> Vec<f64> {
        SpaceTimeField::uniform_times(self.horizon, self.steps)
    }

    /// Norm of the active solution space.
    pub fn norm(&self, u: &SpaceTimeField, tol: f64) -> Result<f64> {
        Ok(match &self.mode {
            Mode::Global { space } => E_norm(u, space, tol)?,
            Mode::Local {
                p_time, q_space, ..
            } => ET_norm(u, p_time, *q_space, tol)?,
        })
    }

    /// The problem restricted to the first `steps` steps of the lattice.
    fn truncated(&self, steps: usize) -> Result<Self> {
        let count = steps + 1;
        let horizon = self.times()[steps];
        let force = match &self.force {
            Force::None => Force::None,
            Force::Direct(f) => Force::Direct(f.truncated(count)?),
            Force::Potential(f) => Force::Potential(f.truncated(count)?),
        };
        let mode = match &self.mode {
            Mode::Global { .. } => self.mode.clone(),
            Mode::Local {
                p_time,
                q_space,
                qbar,
            } => Mode::Local {
                p_time: VariableExponent::temporal(
                    SpaceTimeField::uniform_times(horizon, steps),
                    p_time.values()[..count].to_vec(),
                )?,
                q_space: *q_space,
                qbar: qbar.clone(),
            },
        };
        let mut out = Self {
            horizon,
            steps,
            mode,
            ..self.clone()
        };
        out.force = force;
        Ok(out)
    }
}

fn lattice_matches(a: &[f64], b: &[f64]) -> bool {
    let scale = b.last().copied().unwrap_or(1.0).abs().max(1.0);
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// Pointwise `|u|^b u`, followed by `1 . grad` when γ = 1.
pub fn nonlinearity(u: &Field, b: u32, gamma: Gamma) -> Field {
    let power = u
        .try_map(|v| v.abs().powi(b as i32) * v)
        .unwrap_or_else(|_| u.scale(f64::NAN));
    match gamma {
        Gamma::Zero => power,
        Gamma::One => crate::operators::grad_dot_ones(&power),
    }
}

/// Spectral Duhamel machinery for one problem.
struct Duhamel<'a> {
    spec: &'a ProblemSpec,
    semigroup: HeatSemigroup,
    /// `exp(-dt |xi|^{2 alpha})`.
    step: Vec<f64>,
    grad: Option<Vec<Complex64>>,
    dt: f64,
    times: Vec<f64>,
    /// Spectra of `Psi(0)` per frame.
    linear: Vec<Vec<Complex64>>,
}

impl<'a> Duhamel<'a> {
    fn new(spec: &'a ProblemSpec) -> Result<Self> {
        let semigroup = HeatSemigroup::new(spec.grid(), spec.alpha)?;
        let times = spec.times();
        let dt = spec.horizon / spec.steps as f64;
        let step = semigroup.symbol().iter().map(|s| (-dt * s).exp()).collect();
        let grad = match spec.gamma {
            Gamma::Zero => None,
            Gamma::One => Some(grad_dot_ones_symbol(semigroup.plan())),
        };
        let mut d = Self {
            spec,
            semigroup,
            step,
            grad,
            dt,
            times,
            linear: Vec::new(),
        };
        let plan = d.semigroup.plan();
        let mut free = Vec::with_capacity(d.times.len());
        let mut current = plan.forward(&spec.u0);
        for i in 0..d.times.len() {
            if i > 0 {
                d.decay(&mut current);
            }
            free.push(current.clone());
        }
        let forcing = match &spec.force {
            Force::None => None,
            Force::Direct(f) => Some(f.frames().iter().map(|g| plan.forward(g)).collect()),
            Force::Potential(f) => Some(
                f.frames()
                    .iter()
                    .map(|g| d.apply_grad(plan.forward(g)))
                    .collect::<Vec<_>>(),
            ),
        };
        if let Some(sources) = forcing {
            for (lin, add) in free.iter_mut().zip(d.history(sources)) {
                for (a, b) in lin.iter_mut().zip(add) {
                    *a += b;
                }
            }
        }
        d.linear = free;
        Ok(d)
    }

    fn plan(&self) -> &SpectralPlan {
        self.semigroup.plan()
    }

    fn decay(&self, spec: &mut [Complex64]) {
        for (c, d) in spec.iter_mut().zip(&self.step) {
            *c *= d;
        }
    }

    fn apply_grad(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        if let Some(g) = &self.grad {
            for (c, m) in spec.iter_mut().zip(g) {
                *c *= m;
            }
        }
        spec
    }

    /// Trapezoid approximations of `integral_0^{t_i} g_{t_i - s} * src(s) ds`
    /// from source spectra on the lattice, via
    /// `S_i = D S_{i-1} + src_i`, `I_i = dt (S_i - src_i / 2)`.
    fn history(&self, sources: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(sources.len());
        let mut acc: Vec<Complex64> = Vec::new();
        for (i, src) in sources.into_iter().enumerate() {
            if i == 0 {
                acc = src.iter().map(|c| 0.5 * c).collect();
                out.push(vec![Complex64::new(0.0, 0.0); src.len()]);
                continue;
            }
            self.decay(&mut acc);
            for (a, s) in acc.iter_mut().zip(&src) {
                *a += s;
            }
            out.push(
                acc.iter()
                    .zip(&src)
                    .map(|(a, s)| self.dt * (a - 0.5 * s))
                    .collect(),
            );
        }
        out
    }

    /// Spectra of `eps integral g * grad^gamma(|u|^b u)`.
    fn nonlinear_spectra(&self, u: &SpaceTimeField) -> Result<Vec<Vec<Complex64>>> {
        self.spec.check_lattice(u)?;
        let b = self.spec.b as i32;
        let eps = self.spec.coupling;
        let sources = u
            .frames()
            .iter()
            .map(|f| {
                let power = Field::new(
                    *f.grid(),
                    f.values()
                        .iter()
                        .map(|v| eps * v.abs().powi(b) * v)
                        .collect(),
                )?;
                Ok(self.apply_grad(self.plan().forward(&power)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.history(sources))
    }

    fn to_field(&self, spectra: Vec<Vec<Complex64>>) -> Result<SpaceTimeField> {
        let frames = spectra
            .into_iter()
            .map(|s| self.plan().inverse_real(s).0)
            .collect();
        Ok(SpaceTimeField::new(
            *self.spec.grid(),
            self.times.clone(),
            frames,
        )?)
    }

    fn linear_part(&self) -> Result<SpaceTimeField> {
        self.to_field(self.linear.clone())
    }

    fn nonlinear(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let s = self.nonlinear_spectra(u)?;
        self.to_field(s)
    }

    fn map(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        let mut s = self.nonlinear_spectra(u)?;
        for (frame, lin) in s.iter_mut().zip(&self.linear) {
            for (a, b) in frame.iter_mut().zip(lin) {
                *a += b;
            }
        }
        self.to_field(s)
    }
}

/// `Phi(u)(t_i) = g_{t_i} * u0 + integral g * f + eps integral g * grad^gamma(|u|^b u)`
/// with composite trapezoid quadrature in time.
pub fn duhamel_map(u: &SpaceTimeField, spec: &ProblemSpec) -> Result<SpaceTimeField> {
    Duhamel::new(spec)?.map(u)
}

/// Only the nonlinear part of [`duhamel_map`].
pub fn nonlinear_term(u: &SpaceTimeField, spec: &ProblemSpec) -> Result<SpaceTimeField> {
    Duhamel::new(spec)?.nonlinear(u)
}

/// `Psi(0)`: data and force terms only.
pub fn linear_solution(spec: &ProblemSpec) -> Result<SpaceTimeField> {
    Duhamel::new(spec)?.linear_part()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardStep {
    pub k: usize,
    /// Active norm of the new iterate.
    pub norm: f64,
    pub increment: f64,
    /// `increment_k / increment_{k-1}`, from `k = 2`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardTrace {
    pub steps: Vec<PicardStep>,
    pub iterations: usize,
    pub converged: bool,
    /// Strong-form residual of the returned iterate (`M >= 2` only).
    pub residual: Option<f64>,
}

/// Consecutive growing increments tolerated before giving up.
const DIVERGENCE_RUN: usize = 3;

/// Growth factor over the first increment that arms the divergence check.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Iterates `u_{k+1} = Phi(u_k)` from `Psi(0)` until the active norm of the
/// increment drops to `tol`.
pub fn picard_solve(
    spec: &ProblemSpec,
    k_max: usize,
    tol: f64,
) -> Result<(SpaceTimeField, PicardTrace)> {
    let duhamel = Duhamel::new(spec)?;
    let start = duhamel.linear_part()?;
    iterate(spec, &duhamel, start, k_max, tol)
}

/// [`picard_solve`] from a caller-supplied first iterate.
pub fn picard_solve_from(
    spec: &ProblemSpec,
    start: SpaceTimeField,
    k_max: usize,
    tol: f64,
) -> Result<(SpaceTimeField, PicardTrace)> {
    spec.check_lattice(&start)?;
    let duhamel = Duhamel::new(spec)?;
    iterate(spec, &duhamel, start, k_max, tol)
}

fn iterate(
    spec: &ProblemSpec,
    duhamel: &Duhamel,
    mut u: SpaceTimeField,
    k_max: usize,
    tol: f64,
) -> Result<(SpaceTimeField, PicardTrace)> {
    if k_max < 1 {
        return Err(SolverError::Count("K_max"));
    }
    let norm_tol = varexp::DEFAULT_TOL;
    let mut steps: Vec<PicardStep> = Vec::new();
    let mut converged = false;
    let mut growing = 0usize;
    for k in 1..=k_max {
        let next = duhamel.map(&u)?;
        if !next.max_abs().is_finite() {
            return Err(SolverError::Diverged(k));
        }
        let increment = spec.norm(&next.sub(&u)?, norm_tol)?;
        let norm = spec.norm(&next, norm_tol)?;
        let prev = steps.last().map(|s| s.increment);
        let ratio = prev.map(|p| if p > 0.0 { increment / p } else { 0.0 });
        let first = steps.first().map_or(increment, |s| s.increment);
        if prev.is_some_and(|p| increment > p) && increment > DIVERGENCE_FACTOR * first {
            growing += 1;
        } else {
            growing = 0;
        }
        steps.push(PicardStep {
            k,
            norm,
            increment,
            ratio,
        });
        u = next;
        if growing >= DIVERGENCE_RUN {
            return Err(SolverError::Diverged(k));
        }
        if increment <= tol {
            converged = true;
            break;
        }
    }
    let residual = if spec.steps >= 2 {
        Some(residual(&u, spec)?)
    } else {
        None
    };
    let trace = PicardTrace {
        iterations: steps.len(),
        steps,
        converged,
        residual,
    };
    Ok((u, trace))
}

/// `||N(u) - N(v)|| / (||u - v|| (||u||^b + ||v||^b))` for the nonlinear
/// Duhamel term `N`; `None` when `u = v`.
pub fn contraction_ratio(
    spec: &ProblemSpec,
    u: &SpaceTimeField,
    v: &SpaceTimeField,
) -> Result<Option<f64>> {
    ratio_with(spec, &Duhamel::new(spec)?, u, v)
}

fn ratio_with(
    spec: &ProblemSpec,
    duhamel: &Duhamel,
    u: &SpaceTimeField,
    v: &SpaceTimeField,
) -> Result<Option<f64>> {
    let tol = varexp::DEFAULT_TOL;
    let diff = spec.norm(&u.sub(v)?, tol)?;
    if diff == 0.0 {
        return Ok(None);
    }
    let b = spec.b as i32;
    let scale = spec.norm(u, tol)?.powi(b) + spec.norm(v, tol)?.powi(b);
    if scale == 0.0 {
        return Ok(None);
    }
    let top = spec.norm(&duhamel.nonlinear(u)?.sub(&duhamel.nonlinear(v)?)?, tol)?;
    Ok(Some(top / (diff * scale)))
}

/// Random smooth space-time field `A(x) + (t/T) B(x)` scaled to active norm
/// `rho R` with `rho` uniform in `[1/4, 1]`.
fn random_in_ball(
    spec: &ProblemSpec,
    plan: &SpectralPlan,
    radius: f64,
    rng: &mut Rng,
) -> Result<SpaceTimeField> {
    let a = random::band_limited_with(plan, rng);
    let b = random::band_limited_with(plan, rng);
    let times = spec.times();
    let frames = times
        .iter()
        .map(|t| a.axpby(1.0, &b, t / spec.horizon))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let u = SpaceTimeField::new(*spec.grid(), times, frames)?;
    let rho: f64 = rng.random_range(0.25..=1.0);
    let norm = spec.norm(&u, varexp::DEFAULT_TOL)?;
    Ok(u.scale(rho * radius / norm))
}

/// Largest contraction ratio found in the ball of radius `R`: `trials`
/// random pairs plus a fixed family of bumps, then a hill-climb from the best
/// pair. Deterministic for a given seed.
pub fn estimate_contraction(
    spec: &ProblemSpec,
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 1 {
        return Err(SolverError::Count("trials"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SolverError::Radius(radius));
    }
    let duhamel = Duhamel::new(spec)?;
    let mut rng = random::rng(seed);
    let mut best = 0.0f64;
    let mut best_pair = None;
    for _ in 0..trials {
        let u = random_in_ball(spec, duhamel.plan(), radius, &mut rng)?;
        let v = random_in_ball(spec, duhamel.plan(), radius, &mut rng)?;
        if let Some(r) = ratio_with(spec, &duhamel, &u, &v)? {
            if r > best {
                best = r;
                best_pair = Some((u, v));
            }
        }
    }
    for (u, v) in bump_pairs(spec, radius)? {
        if let Some(r) = ratio_with(spec, &duhamel, &u, &v)? {
            if r > best {
                best = r;
                best_pair = Some((u, v));
            }
        }
    }
    let Some((mut u, mut v)) = best_pair else {
        return Ok(best);
    };
    // hill-climb from the best pair with shrinking perturbations
    let mut step = REFINE_STEP;
    for _ in 0..trials * REFINE_FACTOR {
        let cu = perturbed(spec, duhamel.plan(), &u, step, radius, &mut rng)?;
        let cv = perturbed(spec, duhamel.plan(), &v, step, radius, &mut rng)?;
        match ratio_with(spec, &duhamel, &cu, &cv)? {
            Some(r) if r > best => {
                best = r;
                u = cu;
                v = cv;
            }
            _ => step = (step * REFINE_SHRINK).max(REFINE_MIN_STEP),
        }
    }
    Ok(best)
}

/// Widths of the bump family, from `h/2` to `L/2`.
const BUMP_WIDTHS: usize = 12;
/// `v = c u` partners of each bump.
const BUMP_PARTNERS: [f64; 5] = [0.0, 0.5, 0.9, 0.99, -1.0];

/// Steady centered Gaussian bumps of norm `R` over a geometric range of
/// widths, paired with multiples of themselves. Concentrated profiles drive
/// the ratio up and random band-limited fields rarely reach them.
fn bump_pairs(spec: &ProblemSpec, radius: f64) -> Result<Vec<(SpaceTimeField, SpaceTimeField)>> {
    let grid = spec.grid();
    let (lo, hi) = (0.5 * grid.spacing(), 0.5 * grid.half_len());
    let mut pairs = Vec::new();
    for i in 0..BUMP_WIDTHS {
        let w = lo * (hi / lo).powf(i as f64 / (BUMP_WIDTHS - 1) as f64);
        let f = grid::sample(grid, |x| {
            (-x.iter().map(|c| c * c).sum::<f64>() / (w * w)).exp()
        })?;
        let u = SpaceTimeField::steady(&f, spec.times())?;
        let u = u.scale(radius / spec.norm(&u, varexp::DEFAULT_TOL)?);
        for c in BUMP_PARTNERS {
            pairs.push((u.clone(), u.scale(c)));
        }
    }
    Ok(pairs)
}

/// Relative size of the first refinement perturbation.
const REFINE_STEP: f64 = 0.5;
const REFINE_SHRINK: f64 = 0.97;
const REFINE_MIN_STEP: f64 = 0.02;
/// Refinement steps per random trial.
const REFINE_FACTOR: usize = 2;

/// `u` plus a random field of relative norm `step`, pulled back into the
/// ball of radius `R` if it left it.
fn perturbed(
    spec: &ProblemSpec,
    plan: &SpectralPlan,
    u: &SpaceTimeField,
    step: f64,
    radius: f64,
    rng: &mut Rng,
) -> Result<SpaceTimeField> {
    let w = random_in_ball(spec, plan, 1.0, rng)?;
    let w_norm = spec.norm(&w, varexp::DEFAULT_TOL)?;
    let u_norm = spec.norm(u, varexp::DEFAULT_TOL)?;
    let c = u.axpby(1.0, &w, step * u_norm / w_norm)?;
    let n = spec.norm(&c, varexp::DEFAULT_TOL)?;
    Ok(if n > radius { c.scale(radius / n) } else { c })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessReport {
    /// Data aggregate `B`.
    pub data: f64,
    /// `R = 2B`.
    pub radius: f64,
    /// Empirical contraction constant.
    pub constant: f64,
    /// `C R^b`.
    pub product: f64,
    pub pass: bool,
}

/// Verdict threshold on `C R^b`.
pub const SMALLNESS_BOUND: f64 = 0.5;

impl SmallnessReport {
    fn new(data: f64, constant: f64, b: u32) -> Self {
        let radius = 2.0 * data;
        let product = constant * radius.powi(b as i32);
        Self {
            data,
            radius,
            constant,
            product,
            pass: product <= SMALLNESS_BOUND,
        }
    }
}

/// Global smallness test: `B = ||u0||_{L^{p(.)}_q} + ||sup_t |F| ||` in the
/// space with exponents divided by `b + 1`, `R = 2B`, pass iff `C R^b <= 1/2`.
pub fn check_smallness_global(spec: &ProblemSpec, tol: f64) -> Result<SmallnessReport> {
    let Mode::Global { space } = &spec.mode else {
        return Err(SolverError::WrongMode("global"));
    };
    let potential = match &spec.force {
        Force::None => None,
        Force::Potential(f) => Some(f),
        Force::Direct(_) => return Err(SolverError::WrongForceForm),
    };
    let data_u0 = mixed_norm(&spec.u0, space, tol)?;
    let data_force = match potential {
        Some(f) => {
            let k = spec.b as f64 + 1.0;
            let quasi = MixedSpaceParams::unchecked(space.p().divided(k), space.q_const() / k);
            mixed_norm(&sup_over_time(f), &quasi, tol)?
        }
        None => 0.0,
    };
    let data = data_u0 + data_force;
    // C is scale-invariant; R = 1 probes the same constant when B = 0.
    let probe = if data > 0.0 { 2.0 * data } else { 1.0 };
    let constant = estimate_contraction(spec, probe, spec.trials, spec.seed)?;
    Ok(SmallnessReport::new(data, constant, spec.b))
}

/// One candidate horizon of the local existence scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonCandidate {
    pub horizon: f64,
    pub steps: usize,
    pub report: SmallnessReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalExistence {
    /// Largest passing lattice horizon.
    pub horizon: f64,
    pub report: SmallnessReport,
    /// Every candidate tried, from `spec.T` downwards.
    pub candidates: Vec<HorizonCandidate>,
    /// Empirical embedding constant `||.||_q / ||.||_{qbar(.)}`.
    pub embedding_constant: f64,
    /// Contraction constant measured at the full horizon.
    pub bilinear_constant: f64,
}

/// Empirical constant of `||phi||_q <= C ||phi||_{qbar(.)}` over random
/// band-limited fields.
pub fn embedding_constant(
    qbar: &VariableExponent,
    q: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    let grid = qbar.grid().ok_or(SolverError::ExponentDomain)?;
    let plan = SpectralPlan::new(grid);
    let mut rng = random::rng(seed);
    let mut best = 0.0f64;
    for _ in 0..trials.max(1) {
        let phi = random::band_limited_with(&plan, &mut rng);
        best = best.max(lq_norm(&phi, q) / luxemburg_norm(&phi, qbar, tol)?);
    }
    Ok(best)
}

/// Local smallness scan over `T = spec.T / 2^k` (lattice-representable
/// horizons): `B(T) = C_emb max{T^{1/p-}, T^{1/p+}} (||u0||_{qbar} +
/// ||f||_{L^1_t L^{qbar}})` and contraction constant `C (1+T)/(1+spec.T)`.
pub fn check_local_existence(spec: &ProblemSpec, tol: f64) -> Result<LocalExistence> {
    let Mode::Local { q_space, qbar, .. } = &spec.mode else {
        return Err(SolverError::WrongMode("local"));
    };
    if !check_emb_class(qbar, *q_space) {
        return Err(SolverError::EmbClass(*q_space));
    }
    let duhamel = Duhamel::new(spec)?;
    let force_norms: Vec<f64> = match &spec.force {
        Force::None => vec![0.0; spec.steps + 1],
        Force::Direct(f) => f
            .frames()
            .iter()
            .map(|g| luxemburg_norm(g, qbar, tol))
            .collect::<std::result::Result<_, _>>()?,
        Force::Potential(f) => f
            .frames()
            .iter()
            .map(|g| {
                let spec_g = duhamel.apply_grad(duhamel.plan().forward(g));
                luxemburg_norm(&duhamel.plan().inverse_real(spec_g).0, qbar, tol)
            })
            .collect::<std::result::Result<_, _>>()?,
    };
    let u0_norm = luxemburg_norm(&spec.u0, qbar, tol)?;
    let c_emb = embedding_constant(qbar, *q_space, spec.trials, spec.seed, tol)?;
    let c_bil = estimate_contraction(spec, 1.0, spec.trials, spec.seed)?;

    let mut candidates = Vec::new();
    let mut steps = spec.steps;
    loop {
        let sub = spec.truncated(steps)?;
        let horizon = sub.horizon;
        let (pm, pp) = match sub.mode() {
            Mode::Local { p_time, .. } => p_time.limits(),
            Mode::Global { .. } => unreachable!("mode is preserved"),
        };
        let times = sub.times();
        let weights = varexp::trapezoid_weights(&times);
        let force_l1: f64 = weights.iter().zip(&force_norms).map(|(w, f)| w * f).sum();
        let factor = horizon.powf(1.0 / pm).max(horizon.powf(1.0 / pp));
        let data = c_emb * factor * (u0_norm + force_l1);
        let constant = c_bil * (1.0 + horizon) / (1.0 + spec.horizon);
        candidates.push(HorizonCandidate {
            horizon,
            steps,
            report: SmallnessReport::new(data, constant, spec.b),
        });
        if !steps.is_multiple_of(2) || steps < 2 {
            break;
        }
        steps /= 2;
    }
    let chosen = candidates
        .iter()
        .find(|c| c.report.pass)
        .ok_or(SolverError::NoAdmissibleT)?;
    Ok(LocalExistence {
        horizon: chosen.horizon,
        report: chosen.report,
        candidates: candidates.clone(),
        embedding_constant: c_emb,
        bilinear_constant: c_bil,
    })
}

/// `max_i ||D_t u + (-Delta)^alpha u - eps grad^gamma(|u|^b u) - f||_{L^2}`
/// over interior nodes, with the centered difference `D_t`.
pub fn residual(u: &SpaceTimeField, spec: &ProblemSpec) -> Result<f64> {
    spec.check_lattice(u)?;
    if spec.steps < 2 {
        return Err(SolverError::Steps {
            required: 2,
            got: spec.steps,
        });
    }
    let plan = SpectralPlan::new(spec.grid());
    let dt = spec.horizon / spec.steps as f64;
    let force: Option<Vec<Field>> = match &spec.force {
        Force::None => None,
        Force::Direct(f) => Some(f.frames().to_vec()),
        Force::Potential(f) => Some(
            f.frames()
                .iter()
                .map(|g| match spec.gamma {
                    Gamma::Zero => g.clone(),
                    Gamma::One => crate::operators::grad_dot_ones(g),
                })
                .collect(),
        ),
    };
    let mut worst = 0.0f64;
    for i in 1..spec.steps {
        let dtu = u.frame(i + 1).axpby(0.5 / dt, u.frame(i - 1), -0.5 / dt)?;
        let lap = fractional_power(&plan, u.frame(i), 2.0 * spec.alpha);
        let nl = nonlinearity(u.frame(i), spec.b, spec.gamma).scale(spec.coupling);
        let mut r = dtu.add(&lap)?.sub(&nl)?;
        if let Some(f) = &force {
            r = r.sub(&f[i])?;
        }
        worst = worst.max(lq_norm(&r, 2.0));
    }
    Ok(worst)
}

/// Bracket `[passing, failing]` of the data amplitude at which the smallness
/// verdict flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeThreshold {
    pub passing: f64,
    pub failing: f64,
}

/// Doubling limit for the amplitude search.
const MAX_DOUBLINGS: usize = 60;

/// Starting from `start`, doubles the amplitude until `verdict` fails (or
/// halves it until it passes), then bisects the bracket `bisections` times.
pub fn amplitude_threshold(
    mut verdict: impl FnMut(f64) -> Result<bool>,
    start: f64,
    bisections: usize,
) -> Result<AmplitudeThreshold> {
    if !(start > 0.0 && start.is_finite()) {
        return Err(SolverError::Radius(start));
    }
    let (mut lo, mut hi);
    if verdict(start)? {
        lo = start;
        hi = 2.0 * start;
        let mut n = 0;
        while verdict(hi)? {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(SolverError::NoAdmissibleT);
            }
        }
    } else {
        hi = start;
        lo = 0.5 * start;
        let mut n = 0;
        while !verdict(lo)? {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS {
                return Err(SolverError::NoAdmissibleT);
            }
        }
    }
    for _ in 0..bisections {
        let mid = 0.5 * (lo + hi);
        if verdict(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AmplitudeThreshold {
        passing: lo,
        failing: hi,
    })
}

/// Manufactured test problem: `u*(t, x) = a e^{-t} sin(pi x / L)` in one
/// dimension with `alpha = 1`, `b = 1`, `γ = 0` and the force
/// `f = d_t u* + (-Delta) u* - |u*| u*`.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub spec: ProblemSpec,
    pub exact: SpaceTimeField,
}

impl Manufactured {
    pub const HALF_LENGTH: f64 = 2.0;
    pub const HORIZON: f64 = 1.0;

    pub fn new(points: usize, steps: usize, amplitude: f64) -> Result<Self> {
        let grid = Grid::new(1, Self::HALF_LENGTH, points)?;
        let k = std::f64::consts::PI / Self::HALF_LENGTH;
        let times = SpaceTimeField::uniform_times(Self::HORIZON, steps);
        let exact = SpaceTimeField::sample(&grid, times.clone(), |t, x| {
            amplitude * (-t).exp() * (k * x[0]).sin()
        })?;
        let force = SpaceTimeField::sample(&grid, times.clone(), |t, x| {
            let u = amplitude * (-t).exp() * (k * x[0]).sin();
            (k * k - 1.0) * u - u.abs() * u
        })?;
        let mode = Mode::Local {
            p_time: VariableExponent::temporal_constant(times, 3.0)?,
            q_space: 2.0,
            qbar: VariableExponent::constant(&grid, 2.001)?,
        };
        let spec = ProblemSpec::new(
            1.0,
            1,
            Gamma::Zero,
            exact.frame(0).clone(),
            Self::HORIZON,
            steps,
            mode,
        )?
        .with_force(Force::Direct(force))?;
        Ok(Self { spec, exact })
    }
}
