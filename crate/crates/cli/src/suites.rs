//! Verification suites behind `verify-kernel`, `verify-operators` and
//! `report`. Every row carries its value and the bound it was checked against.

use std::f64::consts::PI;

use vlp_core::grid::{integrate, sample, Field, Grid};
use vlp_core::kernel::{
    heat_kernel, relative_inner_error, semigroup_apply, time_integral, verify_gradient_decay,
    verify_pointwise_decay, verify_smoothing, EstimateKind, Gamma, KernelEstimateReport,
    TimeIntegral,
};
use vlp_core::operators::{maximal_function, riesz_potential, riesz_transform};
use vlp_core::random::{band_limited, rng};
use vlp_core::solver::{
    amplitude_threshold, check_smallness_global, picard_solve, Manufactured, Mode, ProblemSpec,
};
use vlp_core::varexp::{
    conjugate_exponent, holder_defect, lq_norm, luxemburg_norm, norm_duality_defect,
    MixedSpaceParams, VariableExponent,
};

use crate::report::Row;
use crate::CliError;

pub const ORACLE_TOL: f64 = 1e-6;
pub const MASS_TOL: f64 = 1e-10;
pub const SEMIGROUP_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const SCALING_TOL: f64 = 1e-6;
pub const RIESZ_IDENTITY_TOL: f64 = 1e-10;
pub const MAXIMAL_EXACT_TOL: f64 = 1e-12;
pub const MAXIMAL_REFINEMENT_TOL: f64 = 0.10;
pub const POTENTIAL_ORACLE_TOL: f64 = 0.01;
pub const CLASSICAL_TOL: f64 = 1e-10;
pub const DEFECT_BOUND: f64 = 2.0;
pub const MANUFACTURED_TOL: f64 = 1e-3;
pub const TIME_ORDER: f64 = 1.8;
pub const CONTRACTION_RATIO: f64 = 0.55;

/// `(p, q, nu)` cells of the smoothing matrix; infinity is the max norm.
pub const SMOOTHING_CELLS: [(f64, f64, f64); 6] = [
    (2.0, 2.0, 0.0),
    (1.0, 2.0, 0.0),
    (1.0, f64::INFINITY, 0.0),
    (2.0, f64::INFINITY, 0.0),
    (2.0, 2.0, 1.0),
    (1.0, 2.0, 0.5),
];

/// Geometric sweep of `count` times between `lo` and `hi`.
pub fn geometric_sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Default sweep: kernel scales `t^{1/2a}` from `2h` to `L/8`.
pub fn default_sweep(grid: &Grid, alpha: f64) -> Vec<f64> {
    let lo = (2.0 * grid.spacing()).powf(2.0 * alpha);
    let hi = (grid.half_len() / 8.0).powf(2.0 * alpha);
    geometric_sweep(lo, hi, 6)
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

fn decay_rows(check: &str, report: &KernelEstimateReport) -> Vec<Row> {
    let min = report
        .cells
        .iter()
        .fold(f64::INFINITY, |m, c| m.min(c.value));
    let bound = 1.0 + vlp_core::kernel::DECAY_STABILITY;
    let mut rows: Vec<Row> = report
        .cells
        .iter()
        .map(|c| {
            Row::new(
                check,
                format!("alpha={};t={}", report.alpha, c.t),
                c.value,
                bound * min,
                c.value.is_finite() && c.value <= bound * min,
            )
        })
        .collect();
    rows.push(Row::new(
        check,
        format!("alpha={};spread", report.alpha),
        report.constant / min,
        bound,
        report.pass,
    ));
    rows
}

/// Closed-form kernel oracles (Gaussian at alpha = 1, periodized Poisson at
/// alpha = 1/2 in one dimension), relative max error on `|x| <= L/2`.
pub fn kernel_oracle(alpha: f64, grid: &Grid, t: f64) -> Result<Option<(String, f64)>, CliError> {
    let n = grid.dim() as f64;
    let oracle = if alpha == 1.0 {
        let f = sample(grid, |x| {
            (4.0 * PI * t).powf(-0.5 * n)
                * (-x.iter().map(|v| v * v).sum::<f64>() / (4.0 * t)).exp()
        })?;
        Some(("gaussian", f))
    } else if alpha == 0.5 && grid.dim() == 1 {
        let period = 2.0 * grid.half_len();
        let f = sample(grid, |x| {
            let a = 2.0 * PI * t / period;
            let b = 2.0 * PI * x[0] / period;
            a.sinh() / (period * (a.cosh() - b.cos()))
        })?;
        Some(("poisson", f))
    } else {
        None
    };
    let Some((name, oracle)) = oracle else {
        return Ok(None);
    };
    let k = heat_kernel(alpha, t, grid)?;
    Ok(Some((
        format!("{name};t={t}"),
        relative_inner_error(&k, &oracle),
    )))
}

/// Kernel rows for one `alpha` on `grid` with the default sweep.
pub fn kernel_suite(alpha: f64, grid: &Grid, seed: u64) -> Result<Vec<Row>, CliError> {
    kernel_suite_with(alpha, grid, &default_sweep(grid, alpha), seed)
}

pub fn kernel_suite_with(
    alpha: f64,
    grid: &Grid,
    sweep: &[f64],
    seed: u64,
) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    if let Some((name, err)) = kernel_oracle(alpha, grid, 1.0)? {
        rows.push(Row::at_most("oracle", name, err, ORACLE_TOL));
    }
    let f = band_limited(grid, &mut rng(seed));
    for t in [0.1, 1.0] {
        let k = heat_kernel(alpha, t, grid)?;
        rows.push(Row::at_most(
            "mass",
            format!("alpha={alpha};t={t}"),
            (integrate(&k) - 1.0).abs(),
            MASS_TOL,
        ));
        let min = k.values().iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(Row::at_most(
            "positivity",
            format!("alpha={alpha};t={t}"),
            (-min).max(0.0),
            POSITIVITY_TOL,
        ));
    }
    let (t1, t2) = (0.1, 1.0);
    let a = semigroup_apply(alpha, t1, &semigroup_apply(alpha, t2, &f)?)?;
    let b = semigroup_apply(alpha, t1 + t2, &f)?;
    rows.push(Row::at_most(
        "semigroup",
        format!("alpha={alpha};t1={t1};t2={t2}"),
        a.sub(&b)?.max_abs(),
        SEMIGROUP_TOL,
    ));

    rows.extend(decay_rows(
        "pointwise",
        &verify_pointwise_decay(alpha, sweep, grid)?,
    ));
    rows.extend(decay_rows(
        "gradient",
        &verify_gradient_decay(alpha, sweep, grid)?,
    ));
    for (p, q, nu) in SMOOTHING_CELLS {
        let r = verify_smoothing(alpha, p, q, nu, sweep, grid)?;
        let fit = r.fit.expect("smoothing reports carry a fit");
        rows.push(Row::new(
            "smoothing",
            format!(
                "alpha={alpha};p={};q={};nu={nu};r2={:.6}",
                fmt_p(p),
                fmt_p(q),
                fit.r2
            ),
            fit.slope,
            fit.theoretical,
            r.pass,
        ));
    }
    if alpha > 0.5 {
        rows.extend(time_integral_rows(alpha)?);
    }
    Ok(rows)
}

/// Scaling-law rows for both time integrals and `n in {1, 2}`.
pub fn time_integral_rows(alpha: f64) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for (kind, gamma) in [
        (EstimateKind::GradientIntegral, Gamma::One),
        (EstimateKind::SourceIntegral, Gamma::Zero),
    ] {
        for n in [1usize, 2] {
            let exponent = match gamma {
                Gamma::One => n as f64 + 1.0 - 2.0 * alpha,
                Gamma::Zero => n as f64 - 2.0 * alpha,
            };
            let check = kind.id();
            let mut raw = Vec::new();
            let mut scaled = Vec::new();
            let mut divergent = None;
            for r in [0.5, 1.0, 2.0] {
                match vlp_core::kernel::time_integral_direct(alpha, n, r, gamma)? {
                    TimeIntegral::Finite { value, .. } => {
                        raw.push(value);
                        scaled.push(value * r.powf(exponent));
                    }
                    TimeIntegral::Divergent { decay } => divergent = Some(decay),
                }
            }
            let name = format!("alpha={alpha};n={n}");
            if let Some(decay) = divergent {
                // flagged: the tail exponent is at most 1
                rows.push(Row::new(
                    check,
                    format!("{name};divergent"),
                    decay,
                    1.0,
                    decay <= 1.0 + 1e-12,
                ));
                continue;
            }
            let mid = scaled[1];
            let spread = scaled
                .iter()
                .map(|v| (v / mid - 1.0).abs())
                .fold(0.0, f64::max);
            rows.push(Row::at_most(
                check,
                format!("{name};scaling"),
                spread,
                SCALING_TOL,
            ));
            let sub = time_integral(alpha, n, 2.0, gamma)?
                .value()
                .expect("convergent case");
            rows.push(Row::at_most(
                check,
                format!("{name};routes;r=2"),
                (sub / raw[2] - 1.0).abs(),
                SCALING_TOL,
            ));
        }
    }
    Ok(rows)
}

/// Sum of `R_j^2 f` plus `f - mean f`, in max norm.
pub fn riesz_identity_error(f: &Field) -> Result<f64, CliError> {
    let mut sum = Field::zeros(*f.grid());
    for axis in 0..f.grid().dim() {
        let r = riesz_transform(&riesz_transform(f, axis)?, axis)?;
        sum = sum.add(&r)?;
    }
    let centered = f.sub(&Field::constant(*f.grid(), f.mean()))?;
    Ok(sum.add(&centered)?.max_abs())
}

/// Radius of the compact bump used for the potential oracle.
pub const BUMP_RADIUS: f64 = 1.0;

/// `I_beta f` on `grid` against the same potential on a 4x refined grid for
/// the bump `(1 - |x|^2)^2` (radius [`BUMP_RADIUS`]). Compared pointwise,
/// relatively, at grid points off the support out to `|x| <= L/2`, where
/// the self-cell carries no mass.
pub fn potential_refinement_error(grid: &Grid, beta: f64) -> Result<f64, CliError> {
    let bump = |x: &[f64]| {
        let r2 = x.iter().map(|v| v * v).sum::<f64>() / (BUMP_RADIUS * BUMP_RADIUS);
        if r2 < 1.0 {
            (1.0 - r2).powi(2)
        } else {
            0.0
        }
    };
    let fine = Grid::new(grid.dim(), grid.half_len(), 4 * grid.points())?;
    let coarse = riesz_potential(&sample(grid, bump)?, beta)?;
    let refined = riesz_potential(&sample(&fine, bump)?, beta)?;
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let r = grid.radius(i);
        if r < BUMP_RADIUS + grid.spacing() || r > grid.half_len() / 2.0 {
            continue;
        }
        let ks = grid.unflatten(i);
        let fks: Vec<usize> = ks[..grid.dim()].iter().map(|k| 4 * k).collect();
        let o = refined.values()[fine.flatten(&fks)];
        worst = worst.max((coarse.values()[i] / o - 1.0).abs());
    }
    Ok(worst)
}

/// Exponents used by the maximal-function refinement study: all log-Hölder
/// with `p- > 1`.
pub fn suite_exponents(grid: &Grid) -> Result<Vec<(String, VariableExponent)>, CliError> {
    let r2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    Ok(vec![
        (
            "bump".into(),
            VariableExponent::from_fn(grid, Some(2.0), |x| 2.0 + 1.0 / (1.0 + r2(x)))?,
        ),
        (
            "dip".into(),
            VariableExponent::from_fn(grid, Some(3.0), |x| 3.0 - 1.5 * (-r2(x)).exp())?,
        ),
        (
            "log".into(),
            VariableExponent::from_fn(grid, Some(1.5), |x| 1.5 + 0.5 / (1.0 + (1.0 + r2(x)).ln()))?,
        ),
    ])
}

/// `||M f||_{p(.)} / ||f||_{p(.)}` for a smooth bump.
pub fn maximal_ratio(grid: &Grid, which: usize) -> Result<f64, CliError> {
    let (_, p) = suite_exponents(grid)?.swap_remove(which);
    let f = sample(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())?;
    let tol = 1e-12;
    Ok(luxemburg_norm(&maximal_function(&f), &p, tol)? / luxemburg_norm(&f, &p, tol)?)
}

/// Operator rows on `n = 1` and `n = 2` grids with `points` per axis.
pub fn operator_suite(points: usize, seed: u64) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    let mut stream = rng(seed);
    for (dim, n) in [(1usize, points), (2, points / 2)] {
        let grid = Grid::new(dim, 4.0, n)?;
        let f = band_limited(&grid, &mut stream);
        rows.push(Row::at_most(
            "riesz-identity",
            format!("n={dim};N={n}"),
            riesz_identity_error(&f)?,
            RIESZ_IDENTITY_TOL,
        ));
        let g = band_limited(&grid, &mut stream);
        let mf = maximal_function(&f);
        let mg = maximal_function(&g);
        let msum = maximal_function(&f.add(&g)?);
        let excess = msum
            .values()
            .iter()
            .zip(mf.values().iter().zip(mg.values()))
            .map(|(s, (a, b))| s - a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(Row::at_most(
            "maximal-sublinearity",
            format!("n={dim};N={n}"),
            excess.max(0.0),
            MAXIMAL_EXACT_TOL,
        ));
        let c = -2.5;
        let homog = maximal_function(&f.scale(c))
            .sub(&mf.scale(c.abs()))?
            .max_abs();
        rows.push(Row::at_most(
            "maximal-homogeneity",
            format!("n={dim};N={n}"),
            homog,
            MAXIMAL_EXACT_TOL,
        ));
        let beta = if dim == 1 { 0.5 } else { 1.0 };
        let coarse = Grid::new(dim, 4.0, if dim == 1 { points } else { points / 2 })?;
        rows.push(Row::at_most(
            "riesz-potential-oracle",
            format!("n={dim};N={};beta={beta}", coarse.points()),
            potential_refinement_error(&coarse, beta)?,
            POTENTIAL_ORACLE_TOL,
        ));
    }
    let coarse = Grid::new(1, 4.0, points)?;
    let fine = Grid::new(1, 4.0, 2 * points)?;
    for (i, (name, _)) in suite_exponents(&coarse)?.into_iter().enumerate() {
        let a = maximal_ratio(&coarse, i)?;
        let b = maximal_ratio(&fine, i)?;
        rows.push(Row::at_most(
            "maximal-refinement",
            format!("p={name};N={points}"),
            (b / a - 1.0).abs(),
            MAXIMAL_REFINEMENT_TOL,
        ));
    }
    let grid = Grid::new(1, 4.0, points)?;
    for q in [1.5, 2.0, 4.0] {
        let f = band_limited(&grid, &mut stream);
        let p = VariableExponent::constant(&grid, q)?;
        let lux = luxemburg_norm(&f, &p, 1e-13)?;
        let classical = lq_norm(&f, q);
        rows.push(Row::at_most(
            "luxemburg-classical",
            format!("q={q}"),
            (lux / classical - 1.0).abs(),
            CLASSICAL_TOL,
        ));
    }
    let exps = suite_exponents(&grid)?;
    for (name, p) in &exps {
        let f = band_limited(&grid, &mut stream);
        let g = band_limited(&grid, &mut stream);
        // 1/r = 1/p + 1/(2p')
        let pc = conjugate_exponent(p);
        let p3 = VariableExponent::spatial(
            Field::new(grid, pc.values().iter().map(|v| 2.0 * v).collect())?,
            None,
        )?;
        let r_vals: Vec<f64> = p
            .values()
            .iter()
            .zip(p3.values())
            .map(|(a, b)| 1.0 / (1.0 / a + 1.0 / b))
            .collect();
        let r = VariableExponent::spatial(Field::new(grid, r_vals)?, None)?;
        rows.push(Row::at_most(
            "holder-defect",
            format!("p={name}"),
            holder_defect(&f, &g, &r, p, &p3, 1e-12)?,
            DEFECT_BOUND,
        ));
        let d = norm_duality_defect(&f, p, 16, seed)?;
        rows.push(Row::at_most(
            "duality-defect",
            format!("p={name};upper"),
            d.upper,
            DEFECT_BOUND,
        ));
        rows.push(Row::at_most(
            "duality-defect",
            format!("p={name};lower"),
            d.lower,
            DEFECT_BOUND,
        ));
    }
    Ok(rows)
}

/// Global-mode test problem: `n = 1`, `b = 2`, `alpha = 3/4`, `γ = 0`, so
/// the critical space exponent is `q = 4/3`.
pub fn contraction_problem(amplitude: f64, seed: u64) -> vlp_core::solver::Result<ProblemSpec> {
    let grid = Grid::new(1, 4.0, 32)?;
    let p = VariableExponent::from_fn(&grid, Some(1.8), |x| 1.8 + 0.4 * (-x[0] * x[0]).exp())?;
    let space = MixedSpaceParams::new(p, 4.0 / 3.0)?;
    let u0 = sample(&grid, |x| amplitude * (-x[0] * x[0]).exp())?;
    Ok(ProblemSpec::new(0.75, 2, Gamma::Zero, u0, 1.0, 8, Mode::Global { space })?.with_seed(seed))
}

/// Bisection steps after the doubling search.
pub const THRESHOLD_BISECTIONS: usize = 4;

/// Solver rows: zero data, manufactured solution with refinement, and
/// contraction behavior.
pub fn solver_suite(seed: u64) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    let zero = contraction_problem(0.0, seed)?;
    let (u, trace) = picard_solve(&zero, 10, 1e-12)?;
    rows.push(Row::new(
        "picard-zero",
        "iterations",
        trace.iterations as f64,
        1.0,
        trace.iterations == 1 && trace.converged && u.max_abs() == 0.0,
    ));

    let mut errors = Vec::new();
    for (n, m) in [(32, 16), (64, 32), (128, 64)] {
        let case = Manufactured::new(n, m, 0.5)?;
        let (u, trace) = picard_solve(&case.spec, 50, 1e-12)?;
        let err = u.sub(&case.exact)?.max_abs();
        errors.push(err);
        rows.push(Row::new(
            "manufactured",
            format!("N={n};M={m};converged={}", trace.converged),
            err,
            MANUFACTURED_TOL,
            trace.converged && (n < 128 || err <= MANUFACTURED_TOL),
        ));
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let slope = (errors[1] / errors[2]).log2();
    rows.push(Row::new(
        "manufactured",
        format!("time-order;monotone={monotone}"),
        slope,
        TIME_ORDER,
        monotone && slope >= TIME_ORDER,
    ));

    let small = contraction_problem(0.05, seed)?;
    let report = check_smallness_global(&small, 1e-10)?;
    rows.push(Row::at_most("smallness", "a=0.05", report.product, 0.5));
    let (_, trace) = picard_solve(&small, 50, 1e-12)?;
    let tail = trace
        .steps
        .iter()
        .rev()
        .take(3)
        .filter_map(|s| s.ratio)
        .fold(0.0, f64::max);
    rows.push(Row::new(
        "contraction",
        format!("trailing-ratio;smallness={}", report.pass),
        tail,
        CONTRACTION_RATIO,
        report.pass && trace.converged && tail <= CONTRACTION_RATIO,
    ));
    let threshold = |s: u64| {
        amplitude_threshold(
            |a| Ok(check_smallness_global(&contraction_problem(a, s)?, 1e-10)?.pass),
            0.05,
            THRESHOLD_BISECTIONS,
        )
    };
    let t1 = threshold(seed)?;
    let t2 = threshold(seed + 1)?;
    let step = t1.failing - t1.passing;
    rows.push(Row::new(
        "threshold",
        format!(
            "seeds={},{};passing={};{}",
            seed,
            seed + 1,
            t1.passing,
            t2.passing
        ),
        (t1.passing - t2.passing).abs(),
        step,
        (t1.passing - t2.passing).abs() <= step * (1.0 + 1e-9),
    ));
    Ok(rows)
}
