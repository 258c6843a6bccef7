//! `vlp-config v1` problem files.
//!
//! ```text
//! vlp-config v1
//! # comment
//! alpha = 0.75
//! b = 2
//! gamma = 0
//! n = 1
//! L = 4
//! N = 64
//! T = 1
//! M = 16
//! mode = global
//! p = 1.8
//! u0 = gauss:0.05
//! ```
//!
//! Keys: `alpha b gamma n L N T M mode p p_time q_space qbar u0 force
//! force_kind tol K_max seed trials p_inf log_holder_budget`. Exponents (`p`,
//! `qbar`) take a number or an exponent file; `p_time` takes a number or a
//! linear ramp `a:b`. Data (`u0`, `force`) take `zero`, `gauss:<amplitude>` or
//! a field file; the force profile is held constant in time and read as a
//! potential unless `force_kind = direct`. `p_inf` sets the limit at infinity
//! of an exponent read from a file (constant exponents use their value).
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use vlp_core::grid::{sample, Field, Grid, SpaceTimeField};
use vlp_core::io::{read_field, EXPONENT_TAG, FIELD_TAG};
use vlp_core::solver::{gamma_bracket, Force, Gamma, Mode, ProblemSpec, DEFAULT_TRIALS};
use vlp_core::varexp::{MixedSpaceParams, VariableExponent, DEFAULT_TOL};

use crate::CliError;

pub const CONFIG_TAG: &str = "vlp-config v1";

const KEYS: [&str; 22] = [
    "alpha",
    "b",
    "gamma",
    "n",
    "L",
    "N",
    "T",
    "M",
    "mode",
    "p",
    "p_time",
    "q_space",
    "qbar",
    "u0",
    "force",
    "force_kind",
    "tol",
    "K_max",
    "seed",
    "trials",
    "p_inf",
    "log_holder_budget",
];

/// Default budget for both log-Hölder constants.
pub const LOG_HOLDER_BUDGET: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
    base: PathBuf,
}

/// A problem plus the solver settings read alongside it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub tol: f64,
    pub k_max: usize,
    /// The space exponent that the log-Hölder check applies to.
    pub checked_exponent: VariableExponent,
    pub log_holder_budget: f64,
}

fn config_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        msg: msg.into(),
    }
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == CONFIG_TAG => {}
            _ => return Err(config_err(1, format!("expected header `{CONFIG_TAG}`"))),
        }
        let mut entries = BTreeMap::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(i + 1, "expected `key = value`"));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_err(i + 1, format!("unknown key `{key}`")));
            }
            if entries
                .insert(key.to_string(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(config_err(i + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            entries,
            base: base.to_path_buf(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Fs {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str), CliError> {
        self.raw(key)
            .ok_or_else(|| config_err(0, format!("missing key `{key}`")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let (line, v) = self.required(key)?;
        v.parse()
            .map_err(|_| config_err(line, format!("`{key}` is not a valid number: {v}")))
    }

    fn number_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        if self.raw(key).is_some() {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn path(&self, value: &str) -> PathBuf {
        self.base.join(value)
    }

    fn spatial_exponent(&self, key: &str, grid: &Grid) -> Result<VariableExponent, CliError> {
        let (line, v) = self.required(key)?;
        let e = match v.parse::<f64>() {
            Ok(p) => VariableExponent::constant(grid, p)?,
            Err(_) => {
                let field = read_field(&self.path(v), EXPONENT_TAG)?;
                if field.grid() != grid {
                    return Err(config_err(
                        line,
                        format!("`{key}` file is on a different grid"),
                    ));
                }
                let p_inf = match self.raw("p_inf") {
                    Some(_) => Some(self.number("p_inf")?),
                    None => None,
                };
                VariableExponent::spatial(field, p_inf)?
            }
        };
        Ok(e)
    }

    fn data(&self, key: &str, grid: &Grid) -> Result<Field, CliError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(Field::zeros(*grid));
        };
        if v == "zero" {
            return Ok(Field::zeros(*grid));
        }
        if let Some(a) = v.strip_prefix("gauss:") {
            let a: f64 = a
                .parse()
                .map_err(|_| config_err(line, format!("bad amplitude in `{v}`")))?;
            return Ok(sample(grid, |x| {
                a * (-x.iter().map(|c| c * c).sum::<f64>()).exp()
            })?);
        }
        let field = read_field(&self.path(v), FIELD_TAG)?;
        if field.grid() != grid {
            return Err(config_err(
                line,
                format!("`{key}` file is on a different grid"),
            ));
        }
        Ok(field)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.number_or("seed", 0)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let alpha: f64 = self.number("alpha")?;
        let b: u32 = self.number("b")?;
        let gamma = match self.number::<u8>("gamma").map(Gamma::from_int)? {
            Some(g) => g,
            None => {
                return Err(config_err(
                    self.required("gamma")?.0,
                    "gamma must be 0 or 1",
                ))
            }
        };
        let grid = Grid::new(self.number("n")?, self.number("L")?, self.number("N")?)?;
        let horizon: f64 = self.number("T")?;
        let steps: usize = self.number("M")?;
        let times = SpaceTimeField::uniform_times(horizon, steps);
        let (mode_line, mode_name) = self.required("mode")?;
        let (mode, checked_exponent) = match mode_name {
            "global" => {
                let p = self.spatial_exponent("p", &grid)?;
                let q = grid.dim() as f64 * b as f64 / (2.0 * alpha - gamma_bracket(1.0, gamma));
                let space = MixedSpaceParams::new(p.clone(), q)?;
                (Mode::Global { space }, p)
            }
            "local" => {
                let (line, v) = self.required("p_time")?;
                let values: Vec<f64> = match v.split_once(':') {
                    Some((a, z)) => {
                        let parse = |s: &str| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| config_err(line, format!("bad ramp `{v}`")))
                        };
                        let (a, z) = (parse(a)?, parse(z)?);
                        times.iter().map(|t| a + (z - a) * t / horizon).collect()
                    }
                    None => {
                        let p: f64 = self.number("p_time")?;
                        vec![p; times.len()]
                    }
                };
                let p_time = VariableExponent::temporal(times.clone(), values)?;
                let qbar = self.spatial_exponent("qbar", &grid)?;
                let mode = Mode::Local {
                    p_time,
                    q_space: self.number("q_space")?,
                    qbar: qbar.clone(),
                };
                (mode, qbar)
            }
            other => return Err(config_err(mode_line, format!("unknown mode `{other}`"))),
        };
        let u0 = self.data("u0", &grid)?;
        let profile = self.data("force", &grid)?;
        let force = if profile.max_abs() == 0.0 {
            Force::None
        } else {
            let f = SpaceTimeField::steady(&profile, times)?;
            match self.raw("force_kind") {
                None | Some((_, "potential")) => Force::Potential(f),
                Some((_, "direct")) => Force::Direct(f),
                Some((line, other)) => {
                    return Err(config_err(line, format!("unknown force_kind `{other}`")))
                }
            }
        };
        let spec = ProblemSpec::new(alpha, b, gamma, u0, horizon, steps, mode)?
            .with_force(force)?
            .with_seed(self.seed()?)
            .with_trials(self.number_or("trials", DEFAULT_TRIALS)?)?;
        Ok(Problem {
            spec,
            tol: self.number_or("tol", DEFAULT_TOL)?,
            k_max: self.number_or("K_max", 50)?,
            checked_exponent,
            log_holder_budget: self.number_or("log_holder_budget", LOG_HOLDER_BUDGET)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GLOBAL: &str = "vlp-config v1
# critical space for n = 1, b = 2, alpha = 3/4
alpha = 0.75
b = 2
gamma = 0
n = 1
L = 4
N = 32
T = 1
M = 8
mode = global
p = 1.8
u0 = gauss:0.05
";

    #[test]
    fn parses_global_config() {
        let c = Config::parse(GLOBAL, Path::new(".")).unwrap();
        let p = c.problem().unwrap();
        assert_eq!(p.spec.b(), 2);
        assert_eq!(p.k_max, 50);
        assert_eq!(p.tol, DEFAULT_TOL);
        match p.spec.mode() {
            Mode::Global { space } => assert!((space.q_const() - 4.0 / 3.0).abs() < 1e-15),
            _ => panic!("wrong mode"),
        }
        assert_eq!(p.spec.force(), &Force::None);
    }

    #[test]
    fn parses_local_ramp() {
        let text = "vlp-config v1\nalpha = 1\nb = 1\ngamma = 0\nn = 1\nL = 2\nN = 16\nT = 1\nM = 4\nmode = local\np_time = 3:4\nq_space = 2\nqbar = 2.001\nforce = gauss:0.1\nforce_kind = direct\n";
        let p = Config::parse(text, Path::new("."))
            .unwrap()
            .problem()
            .unwrap();
        match p.spec.mode() {
            Mode::Local { p_time, .. } => assert_eq!(p_time.values(), &[3.0, 3.25, 3.5, 3.75, 4.0]),
            _ => panic!("wrong mode"),
        }
        assert!(matches!(p.spec.force(), Force::Direct(_)));
    }

    #[test]
    fn rejects_bad_files() {
        let base = Path::new(".");
        assert!(matches!(
            Config::parse("alpha = 1\n", base),
            Err(CliError::Config { line: 1, .. })
        ));
        assert!(matches!(
            Config::parse("vlp-config v1\nbogus = 1\n", base),
            Err(CliError::Config { line: 2, .. })
        ));
        assert!(matches!(
            Config::parse("vlp-config v1\nalpha = 1\nalpha = 2\n", base),
            Err(CliError::Config { line: 3, .. })
        ));
        let bad = GLOBAL.replace("b = 2", "b = two");
        assert!(matches!(
            Config::parse(&bad, base).unwrap().problem(),
            Err(CliError::Config { line: 4, .. })
        ));
    }
}
