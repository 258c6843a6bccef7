use proptest::prelude::*;

use vlp_core::grid::{integrate, sup_over_time, Field, Grid, SpaceTimeField};
use vlp_core::kernel::semigroup_apply;
use vlp_core::operators::maximal_function;
use vlp_core::solver::{nonlinearity, Gamma};
use vlp_core::varexp::{lq_norm, luxemburg_norm, modular, VariableExponent};

const TOL: f64 = 1e-12;

fn grid() -> Grid {
    Grid::new(1, 2.0, 32).unwrap()
}

fn field() -> impl Strategy<Value = Field> {
    prop::collection::vec(-5.0f64..5.0, 32).prop_map(|v| Field::new(grid(), v).unwrap())
}

fn nonzero_field() -> impl Strategy<Value = Field> {
    field().prop_filter("non-zero", |f| f.max_abs() > 1e-3)
}

fn exponent() -> impl Strategy<Value = VariableExponent> {
    (1.1f64..3.0, 0.0f64..1.5, -2.0f64..2.0).prop_map(|(base, amp, shift)| {
        VariableExponent::from_fn(&grid(), None, |x| {
            base + amp / (1.0 + (x[0] - shift).powi(2))
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_linear(f in field(), g in field(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = integrate(&f.axpby(a, &g, b).unwrap());
        let rhs = a * integrate(&f) + b * integrate(&g);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn sup_dominates_every_frame(f in field(), g in field()) {
        let u = SpaceTimeField::new(grid(), vec![0.0, 0.5], vec![f.clone(), g.clone()]).unwrap();
        let s = sup_over_time(&u);
        for frame in [&f, &g] {
            for (a, b) in s.values().iter().zip(frame.values()) {
                prop_assert!(*a >= b.abs());
            }
        }
    }

    #[test]
    fn modular_is_monotone_in_scaling(f in field(), p in exponent(), a in 0.0f64..1.0) {
        prop_assert!(modular(&f.scale(a), &p).unwrap() <= modular(&f, &p).unwrap() * (1.0 + TOL));
    }

    #[test]
    fn luxemburg_homogeneity_and_unit_ball(f in nonzero_field(), p in exponent(), c in -4.0f64..4.0) {
        let tol = 1e-12;
        let n = luxemburg_norm(&f, &p, tol).unwrap();
        let m = luxemburg_norm(&f.scale(c), &p, tol).unwrap();
        prop_assert!((m - c.abs() * n).abs() <= 1e-9 * (1.0 + n));
        let unit = modular(&f.scale(1.0 / n), &p).unwrap();
        prop_assert!((unit - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn luxemburg_triangle_inequality(f in field(), g in field(), p in exponent()) {
        let tol = 1e-12;
        let lhs = luxemburg_norm(&f.add(&g).unwrap(), &p, tol).unwrap();
        let rhs = luxemburg_norm(&f, &p, tol).unwrap() + luxemburg_norm(&g, &p, tol).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn constant_exponent_is_classical(f in field(), q in 1.1f64..6.0) {
        let p = VariableExponent::constant(&grid(), q).unwrap();
        let a = luxemburg_norm(&f, &p, 1e-13).unwrap();
        let b = lq_norm(&f, q);
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
    }

    #[test]
    fn maximal_function_is_sublinear(f in field(), g in field(), c in -3.0f64..3.0) {
        let mf = maximal_function(&f);
        let mg = maximal_function(&g);
        let mfg = maximal_function(&f.add(&g).unwrap());
        let mc = maximal_function(&f.scale(c));
        for i in 0..mf.len() {
            prop_assert!(mfg.values()[i] <= mf.values()[i] + mg.values()[i] + TOL);
            prop_assert!((mc.values()[i] - c.abs() * mf.values()[i]).abs() <= TOL * (1.0 + mf.values()[i]));
        }
    }

    #[test]
    fn semigroup_property(f in field(), s in 0.0f64..1.0, t in 0.0f64..1.0, alpha in 0.55f64..1.0) {
        let a = semigroup_apply(alpha, s, &semigroup_apply(alpha, t, &f).unwrap()).unwrap();
        let b = semigroup_apply(alpha, s + t, &f).unwrap();
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn semigroup_conserves_mass(f in field(), t in 0.0f64..2.0, alpha in 0.55f64..1.0) {
        let out = semigroup_apply(alpha, t, &f).unwrap();
        prop_assert!((integrate(&out) - integrate(&f)).abs() <= 1e-11 * (1.0 + f.max_abs()));
    }

    #[test]
    fn nonlinearity_is_odd(f in field(), b in 1u32..4) {
        for gamma in [Gamma::Zero, Gamma::One] {
            let a = nonlinearity(&f.scale(-1.0), b, gamma);
            let c = nonlinearity(&f, b, gamma).scale(-1.0);
            prop_assert!(a.sub(&c).unwrap().max_abs() <= 1e-12 * (1.0 + c.max_abs()));
        }
    }
}
