//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::process::Command;

use rand::Rng as _;
use vlp_cli::suites::{
    contraction_problem, kernel_oracle, maximal_ratio, potential_refinement_error,
    riesz_identity_error, suite_exponents, time_integral_rows, SMOOTHING_CELLS,
};
use vlp_core::grid::{integrate, Field, Grid};
use vlp_core::kernel::{heat_kernel, semigroup_apply, verify_smoothing};
use vlp_core::operators::maximal_function;
use vlp_core::random::{band_limited, rng, Rng};
use vlp_core::solver::{amplitude_threshold, check_smallness_global, picard_solve, Manufactured};
use vlp_core::varexp::{
    check_log_holder, holder_defect, limit_exponents, lq_norm, luxemburg_norm, modular,
    norm_duality_defect, VariableExponent,
};

const ORACLE_TOL: f64 = 1e-6;
const MASS_TOL: f64 = 1e-10;
const SEMIGROUP_TOL: f64 = 1e-12;
const SCALING_TOL: f64 = 1e-6;
const CLASSICAL_TOL: f64 = 1e-10;
const HOMOGENEITY_TOL: f64 = 1e-9;
const UNIT_BALL_TOL: f64 = 1e-8;
const DEFECT_BOUND: f64 = 2.0;
const MAXIMAL_EXACT_TOL: f64 = 1e-12;
const MAXIMAL_REFINEMENT_TOL: f64 = 0.10;
const RIESZ_IDENTITY_TOL: f64 = 1e-10;
const POTENTIAL_TOL: f64 = 0.01;
const MANUFACTURED_TOL: f64 = 1e-3;
const TIME_ORDER: f64 = 1.8;
const TRAILING_RATIO: f64 = 0.55;
const RANDOM_CASES: usize = 100;
const LUX_TOL: f64 = 1e-12;

const ALPHAS: [f64; 3] = [0.6, 0.75, 1.0];

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn kernel_grid() -> Grid {
    Grid::new(1, 20.0, 512).unwrap()
}

/// Band-limited exponent with values in `[lo, hi]`.
fn random_exponent(grid: &Grid, lo: f64, hi: f64, stream: &mut Rng) -> VariableExponent {
    let phi = band_limited(grid, stream);
    let values = phi
        .values()
        .iter()
        .map(|v| lo + (hi - lo) * 0.5 * (v + 1.0))
        .collect();
    VariableExponent::spatial(Field::new(*grid, values).unwrap(), None).unwrap()
}

fn random_field(grid: &Grid, stream: &mut Rng) -> Field {
    let scale = stream.random_range(0.1..10.0);
    band_limited(grid, stream).scale(scale)
}

fn kernel_closed_forms() -> Outcome {
    let grid = kernel_grid();
    let mut worst = 0.0f64;
    let mut names = Vec::new();
    for alpha in [1.0, 0.5] {
        let (name, err) = kernel_oracle(alpha, &grid, 1.0)
            .unwrap()
            .expect("oracle exists");
        worst = worst.max(err);
        names.push(format!("{name} {err:.1e}"));
    }
    (
        worst <= ORACLE_TOL,
        format!("{} (bound {ORACLE_TOL:e})", names.join(", ")),
    )
}

fn mass_and_semigroup() -> Outcome {
    let grid = kernel_grid();
    let f = band_limited(&grid, &mut rng(11));
    let times = [0.1, 1.0];
    let (mut mass, mut semi) = (0.0f64, 0.0f64);
    for alpha in ALPHAS {
        for t in times {
            mass = mass.max((integrate(&heat_kernel(alpha, t, &grid).unwrap()) - 1.0).abs());
            for s in times {
                let a = semigroup_apply(alpha, t, &semigroup_apply(alpha, s, &f).unwrap()).unwrap();
                let b = semigroup_apply(alpha, t + s, &f).unwrap();
                semi = semi.max(a.sub(&b).unwrap().max_abs());
            }
        }
    }
    (
        mass <= MASS_TOL && semi <= SEMIGROUP_TOL,
        format!(
            "mass {mass:.1e} (bound {MASS_TOL:e}), semigroup {semi:.1e} (bound {SEMIGROUP_TOL:e})"
        ),
    )
}

fn smoothing_rates() -> Outcome {
    let grid = Grid::new(1, 20.0, 1024).unwrap();
    let sweep: Vec<f64> = (0..8).map(|i| 0.05 * 100f64.powf(i as f64 / 7.0)).collect();
    let mut cells = 0;
    let mut failed = Vec::new();
    let mut worst = 0.0f64;
    for alpha in ALPHAS {
        for (p, q, nu) in SMOOTHING_CELLS {
            let r = verify_smoothing(alpha, p, q, nu, &sweep, &grid).unwrap();
            let fit = r.fit.unwrap();
            if fit.theoretical != 0.0 {
                worst = worst.max((fit.slope / fit.theoretical - 1.0).abs());
            }
            cells += 1;
            if !r.pass {
                failed.push(format!(
                    "alpha={alpha} p={p} q={q} nu={nu} slope={}",
                    fit.slope
                ));
            }
        }
    }
    (
        failed.is_empty(),
        format!(
            "{cells} cells, worst relative slope error {worst:.2e} (bound 3%){}",
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failed.join("; "))
            }
        ),
    )
}

fn time_integral_scaling() -> Outcome {
    let mut worst = 0.0f64;
    let mut flagged = 0;
    let mut ok = true;
    for alpha in ALPHAS {
        for row in time_integral_rows(alpha).unwrap() {
            ok &= row.pass;
            if row.name.ends_with("divergent") {
                flagged += 1;
            } else {
                ok &= row.bound == SCALING_TOL;
                worst = worst.max(row.value);
            }
        }
    }
    (
        ok,
        format!(
            "worst spread {worst:.1e} (bound {SCALING_TOL:e}), {flagged} divergent cases flagged"
        ),
    )
}

fn luxemburg_norm_properties() -> Outcome {
    let grid = Grid::new(1, 4.0, 64).unwrap();
    let mut stream = rng(5);
    let (mut classical, mut homog, mut unit) = (0.0f64, 0.0f64, 0.0f64);
    let mut ball = true;
    for _ in 0..RANDOM_CASES {
        let f = random_field(&grid, &mut stream);
        let q = stream.random_range(1.1..6.0);
        let lux =
            luxemburg_norm(&f, &VariableExponent::constant(&grid, q).unwrap(), LUX_TOL).unwrap();
        classical = classical.max((lux / lq_norm(&f, q) - 1.0).abs());

        let p = random_exponent(&grid, 1.1, 4.0, &mut stream);
        let n = luxemburg_norm(&f, &p, LUX_TOL).unwrap();
        let c = stream.random_range(-5.0..5.0);
        let m = luxemburg_norm(&f.scale(c), &p, LUX_TOL).unwrap();
        homog = homog.max((m - c.abs() * n).abs() / n);
        unit = unit.max((modular(&f.scale(1.0 / n), &p).unwrap() - 1.0).abs());
        ball &= modular(&f.scale(1.0 / (1.01 * n)), &p).unwrap() < 1.0
            && modular(&f.scale(1.0 / (0.99 * n)), &p).unwrap() > 1.0;
    }
    (
        classical <= CLASSICAL_TOL && homog <= HOMOGENEITY_TOL && unit <= UNIT_BALL_TOL && ball,
        format!(
            "classical {classical:.1e} (bound {CLASSICAL_TOL:e}), homogeneity {homog:.1e} (bound {HOMOGENEITY_TOL:e}), unit ball {unit:.1e} (bound {UNIT_BALL_TOL:e}), {RANDOM_CASES} fields"
        ),
    )
}

fn holder_and_duality() -> Outcome {
    let grid = Grid::new(1, 4.0, 64).unwrap();
    let mut stream = rng(6);
    let (mut holder, mut upper, mut lower) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..RANDOM_CASES {
        let f = random_field(&grid, &mut stream);
        let g = random_field(&grid, &mut stream);
        let p2 = random_exponent(&grid, 2.0, 5.0, &mut stream);
        let p3 = random_exponent(&grid, 2.0, 5.0, &mut stream);
        let p1_values = p2
            .values()
            .iter()
            .zip(p3.values())
            .map(|(a, b)| 1.0 / (1.0 / a + 1.0 / b))
            .collect();
        let p1 = VariableExponent::spatial(Field::new(grid, p1_values).unwrap(), None).unwrap();
        holder = holder.max(holder_defect(&f, &g, &p1, &p2, &p3, LUX_TOL).unwrap());
        let p = random_exponent(&grid, 1.2, 4.0, &mut stream);
        let d = norm_duality_defect(&f, &p, 16, case as u64).unwrap();
        upper = upper.max(d.upper);
        lower = lower.max(d.lower);
    }
    (
        holder <= DEFECT_BOUND && upper <= DEFECT_BOUND && lower <= DEFECT_BOUND,
        format!("holder {holder:.3}, duality upper {upper:.3} lower {lower:.3} (bound {DEFECT_BOUND}), {RANDOM_CASES} triples"),
    )
}

fn maximal_function_properties() -> Outcome {
    let mut stream = rng(7);
    let mut exact = 0.0f64;
    for grid in [
        Grid::new(1, 4.0, 64).unwrap(),
        Grid::new(2, 4.0, 16).unwrap(),
    ] {
        for _ in 0..20 {
            let f = random_field(&grid, &mut stream);
            let g = random_field(&grid, &mut stream);
            let c = stream.random_range(-5.0..5.0);
            let mf = maximal_function(&f);
            let mg = maximal_function(&g);
            let msum = maximal_function(&f.add(&g).unwrap());
            let mc = maximal_function(&f.scale(c));
            for i in 0..grid.len() {
                let scale = 1.0 + mf.values()[i];
                exact = exact
                    .max((msum.values()[i] - mf.values()[i] - mg.values()[i]).max(0.0) / scale);
                exact = exact.max((mc.values()[i] - c.abs() * mf.values()[i]).abs() / scale);
            }
        }
    }
    let coarse = Grid::new(1, 4.0, 64).unwrap();
    let fine = Grid::new(1, 4.0, 128).unwrap();
    let mut drift = 0.0f64;
    let mut admissible = true;
    let mut detail = Vec::new();
    for (i, (name, p)) in suite_exponents(&coarse).unwrap().into_iter().enumerate() {
        let lh = check_log_holder(&p, 1.0).unwrap();
        admissible &= limit_exponents(&p).0 > 1.0
            && lh.local_constant.is_finite()
            && lh.decay_constant.is_finite();
        let a = maximal_ratio(&coarse, i).unwrap();
        let b = maximal_ratio(&fine, i).unwrap();
        drift = drift.max((b / a - 1.0).abs());
        detail.push(format!("{name} {a:.4}->{b:.4}"));
    }
    (
        exact <= MAXIMAL_EXACT_TOL && drift <= MAXIMAL_REFINEMENT_TOL && admissible,
        format!(
            "exact {exact:.1e} (bound {MAXIMAL_EXACT_TOL:e}), N->2N drift {drift:.2e} (bound {MAXIMAL_REFINEMENT_TOL}): {}",
            detail.join(", ")
        ),
    )
}

fn riesz_identities() -> Outcome {
    let mut stream = rng(8);
    let mut identity = 0.0f64;
    for grid in [
        Grid::new(1, 4.0, 64).unwrap(),
        Grid::new(2, 4.0, 32).unwrap(),
        Grid::new(3, 4.0, 16).unwrap(),
    ] {
        for _ in 0..5 {
            identity =
                identity.max(riesz_identity_error(&band_limited(&grid, &mut stream)).unwrap());
        }
    }
    let one = potential_refinement_error(&Grid::new(1, 4.0, 64).unwrap(), 0.5).unwrap();
    let two = potential_refinement_error(&Grid::new(2, 4.0, 32).unwrap(), 1.0).unwrap();
    (
        identity <= RIESZ_IDENTITY_TOL && one <= POTENTIAL_TOL && two <= POTENTIAL_TOL,
        format!(
            "identity {identity:.1e} (bound {RIESZ_IDENTITY_TOL:e}), potential vs 4x oracle n=1 {one:.1e}, n=2 {two:.1e} (bound {POTENTIAL_TOL})"
        ),
    )
}

fn picard_solver() -> Outcome {
    let zero = contraction_problem(0.0, 0).unwrap();
    let (u, trace) = picard_solve(&zero, 10, 1e-12).unwrap();
    let zero_ok = trace.iterations == 1 && trace.converged && u.max_abs() == 0.0;
    let mut errors = Vec::new();
    let mut converged = true;
    for (n, m) in [(32, 16), (64, 32), (128, 64)] {
        let case = Manufactured::new(n, m, 0.5).unwrap();
        let (u, trace) = picard_solve(&case.spec, 50, 1e-12).unwrap();
        converged &= trace.converged;
        errors.push(u.sub(&case.exact).unwrap().max_abs());
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let slope = (errors[1] / errors[2]).log2();
    let last = errors[2];
    (
        zero_ok && converged && last <= MANUFACTURED_TOL && monotone && slope >= TIME_ORDER,
        format!(
            "zero data k={}, errors {:.2e} {:.2e} {:.2e} (bound {MANUFACTURED_TOL:e}), slope {slope:.3} (bound {TIME_ORDER})",
            trace.iterations, errors[0], errors[1], errors[2]
        ),
    )
}

fn contraction_behavior() -> Outcome {
    let spec = contraction_problem(0.05, 0).unwrap();
    let report = check_smallness_global(&spec, 1e-10).unwrap();
    let (_, trace) = picard_solve(&spec, 50, 1e-12).unwrap();
    let trailing: Vec<f64> = trace
        .steps
        .iter()
        .rev()
        .take(3)
        .filter_map(|s| s.ratio)
        .collect();
    let worst = trailing.iter().copied().fold(0.0, f64::max);
    let ratios_ok =
        report.pass && trace.converged && !trailing.is_empty() && worst <= TRAILING_RATIO;

    let verdict = |seed: u64| {
        move |a: f64| Ok(check_smallness_global(&contraction_problem(a, seed)?, 1e-10)?.pass)
    };
    let t1 = amplitude_threshold(verdict(1), 0.05, 4).unwrap();
    let t2 = amplitude_threshold(verdict(2), 0.05, 4).unwrap();
    let step = t1.failing - t1.passing;
    let flips = verdict(1)(t1.passing).unwrap() && !verdict(1)(t1.failing).unwrap();
    let reproducible = (t1.passing - t2.passing).abs() <= step * (1.0 + 1e-9);
    (
        ratios_ok && flips && reproducible,
        format!(
            "product {:.3} (bound 0.5), trailing ratio {worst:.2e} (bound {TRAILING_RATIO}), threshold seed1 {:.4} seed2 {:.4} (step {step:.4})",
            report.product, t1.passing, t2.passing
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "vlp-config v1\nalpha = 0.75\nb = 2\ngamma = 0\nn = 1\nL = 4\nN = 32\nT = 1\nM = 8\nmode = global\np = 1.8\nu0 = gauss:0.05\nseed = 3\n",
    )
    .unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_vlp"))
            .args(args)
            .output()
            .expect("binary runs")
    };
    let mut identical = true;
    let mut checked = Vec::new();
    for tag in ["a", "b"] {
        let report = dir.path().join(format!("report_{tag}.csv"));
        let check = dir.path().join(format!("check_{tag}.csv"));
        let solve = dir.path().join(format!("solve_{tag}"));
        for out in [
            run(&["report", "--seed", "3", "--out", report.to_str().unwrap()]),
            run(&[
                "check",
                config.to_str().unwrap(),
                "--out",
                check.to_str().unwrap(),
            ]),
            run(&[
                "solve",
                config.to_str().unwrap(),
                "--out",
                solve.to_str().unwrap(),
            ]),
        ] {
            identical &= out.status.code() == Some(0);
        }
    }
    for (a, b) in [
        ("report_a.csv", "report_b.csv"),
        ("check_a.csv", "check_b.csv"),
        ("solve_a/trace.csv", "solve_b/trace.csv"),
    ] {
        let x = std::fs::read(dir.path().join(a));
        let y = std::fs::read(dir.path().join(b));
        let same = matches!((&x, &y), (Ok(x), Ok(y)) if x == y && !x.is_empty());
        identical &= same;
        checked.push(format!(
            "{a} {}",
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    (identical, checked.join(", "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("kernel closed forms", kernel_closed_forms),
        ("kernel mass and semigroup", mass_and_semigroup),
        ("smoothing rates", smoothing_rates),
        ("time-integral scaling", time_integral_scaling),
        ("Luxemburg norm", luxemburg_norm_properties),
        ("Holder and duality", holder_and_duality),
        ("maximal function", maximal_function_properties),
        ("Riesz identities", riesz_identities),
        ("Picard solver", picard_solver),
        ("contraction behavior", contraction_behavior),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let (pass, detail) = check();
        if !pass {
            failures += 1;
        }
        println!(
            "acceptance {:>2} {:<26} {} [{:.1}s] {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
