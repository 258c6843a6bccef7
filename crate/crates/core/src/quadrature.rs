//! Adaptive Gauss-Kronrod (7/15) quadrature with power-law tail mapping.

#![allow(clippy::excessive_precision)]

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (`XGK[1]`, `XGK[3]`,
/// `XGK[5]`, `XGK[7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7/K15 panel: `(kronrod estimate, |kronrod - gauss|)`.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_err: f64,
    pub panels: usize,
}

const MAX_PANELS: usize = 4000;

/// Globally adaptive bisection on `[a, b]` until the summed error estimate is
/// below `max(rel * |value|, abs)`.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> Quadrature {
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    panels.push((a, b, v, e));
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= (rel * value.abs()).max(abs) || panels.len() >= MAX_PANELS {
            return Quadrature {
                value,
                abs_err: err,
                panels: panels.len(),
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Panel can no longer be split in floating point.
            return Quadrature {
                value,
                abs_err: err,
                panels: panels.len() + 1,
            };
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// `integral_a^inf f(s) ds` for an integrand decaying like `s^{-decay}`,
/// `decay > 1`. The substitution `s = a u^{-1/(decay-1)}`, `u in (0, 1]`,
/// turns the leading power law into a constant.
pub fn tail(f: impl Fn(f64) -> f64, a: f64, decay: f64, rel: f64) -> Quadrature {
    assert!(decay > 1.0 && a > 0.0);
    let k = 1.0 / (decay - 1.0);
    let mapped = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let s = a * u.powf(-k);
        // ds/du = -k a u^{-k-1}; orientation flip absorbs the sign.
        let jac = k * a * u.powf(-k - 1.0);
        let v = f(s) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(mapped, 0.0, 1.0, rel, 0.0)
}

/// Composite 7-point Gauss-Legendre rule with `panels` equal panels.
pub fn gauss_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * width;
            let center = lo + 0.5 * width;
            let half = 0.5 * width;
            let mut s = WG[3] * f(center);
            for j in 0..3 {
                let dx = half * XGK[2 * j + 1];
                s += WG[j] * (f(center - dx) + f(center + dx));
            }
            s * half
        })
        .sum()
}
