//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cauchy_stokes_core::studies::convergence::validate_eps_list;
use cauchy_stokes_core::{CaseName, DomainKind, Method, NoiseTarget, ProbeMode};

use crate::error::CliError;

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "domain.kind",
    "grid.n",
    "grid.levels",
    "coeffs.nu",
    "coeffs.z1_case",
    "coeffs.z2_case",
    "case.name",
    "case.incompatible",
    "segments.gamma_obs",
    "window.rect",
    "eps.list",
    "noise.delta_list",
    "noise.seed",
    "noise.targets",
    "robin.alpha1",
    "robin.mu",
    "robin.t_list",
    "robin.kappa_run",
    "study.method",
    "study.mode",
    "study.cases",
    "study.scales",
    "study.family",
    "study.seed",
    "output.dir",
    "solver.kind",
    "solver.tol",
    "solver.max_iter",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Givens,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Convergence,
    Forward,
    Blowup,
    Probe(ProbeMode),
    Interp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub domain: DomainKind,
    pub n: usize,
    pub levels: Option<Vec<usize>>,
    pub nu: Option<f64>,
    pub z1_case: Option<CaseName>,
    pub z2_case: Option<CaseName>,
    pub case: CaseName,
    pub incompatible: Option<CaseName>,
    pub gamma_obs: String,
    pub window: Option<[f64; 4]>,
    pub eps: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub noise_seed: u64,
    pub noise_targets: Vec<NoiseTarget>,
    pub alpha1: f64,
    pub mu: f64,
    pub t_list: Vec<f64>,
    pub kappa_run: (f64, f64),
    pub method: Method,
    pub mode: Option<StudyMode>,
    pub cases: Option<Vec<CaseName>>,
    pub scales: Vec<f64>,
    pub family: usize,
    pub study_seed: u64,
    pub output_dir: PathBuf,
    pub solver: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
    /// Keys as written, for the manifest.
    pub echo: BTreeMap<String, String>,
    /// Line of each key, for diagnostics raised after parsing.
    pub lines: BTreeMap<String, usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            domain: DomainKind::SquareAnnulus,
            n: 32,
            levels: None,
            nu: None,
            z1_case: None,
            z2_case: None,
            case: CaseName::Ms2,
            incompatible: None,
            gamma_obs: "gamma_obs".into(),
            window: None,
            eps: Vec::new(),
            delta_list: vec![0.0],
            noise_seed: 7,
            noise_targets: vec![NoiseTarget::F, NoiseTarget::GD, NoiseTarget::GN],
            alpha1: 1.0,
            mu: 1.0,
            t_list: vec![0.0, 1e-3, 1e-2, 1e-1, 1.0],
            kappa_run: (0.0, 0.25),
            method: Method::Qr,
            mode: None,
            cases: None,
            scales: vec![1.0, 2.0, 4.0],
            family: 20,
            study_seed: 43,
            output_dir: PathBuf::from("out"),
            solver: SolverKind::Givens,
            tol: 1e-10,
            max_iter: 20_000,
            echo: BTreeMap::new(),
            lines: BTreeMap::new(),
        }
    }
}

fn bad(line: usize, key: &str, msg: impl Into<String>) -> CliError {
    CliError::OutOfRange { line, key: key.to_string(), msg: msg.into() }
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn num<T: FromStr>(line: usize, key: &str, s: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| bad(line, key, format!("cannot parse `{s}`")))
}

fn real(line: usize, key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = num(line, key, s)?;
    if !v.is_finite() {
        return Err(bad(line, key, "must be finite"));
    }
    Ok(v)
}

fn reals(line: usize, key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let v = list(s).into_iter().map(|x| real(line, key, x)).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(bad(line, key, "empty list"));
    }
    Ok(v)
}

fn case(line: usize, key: &str, s: &str) -> Result<CaseName, CliError> {
    s.parse().map_err(|_| bad(line, key, format!("unknown case `{s}`")))
}

fn domain(line: usize, key: &str, s: &str) -> Result<DomainKind, CliError> {
    match s.to_ascii_lowercase().replace('_', "").as_str() {
        "unitsquare" => Ok(DomainKind::UnitSquare),
        "squareannulus" => Ok(DomainKind::SquareAnnulus),
        _ => Err(bad(line, key, format!("unknown domain `{s}` (unit_square or square_annulus)"))),
    }
}

fn target(line: usize, key: &str, s: &str) -> Result<NoiseTarget, CliError> {
    match s.to_ascii_lowercase().replace('_', "").as_str() {
        "f" => Ok(NoiseTarget::F),
        "gd" => Ok(NoiseTarget::GD),
        "gn" => Ok(NoiseTarget::GN),
        _ => Err(bad(line, key, format!("unknown noise target `{s}` (f, g_d or g_n)"))),
    }
}

fn mode(line: usize, key: &str, s: &str) -> Result<StudyMode, CliError> {
    Ok(match s {
        "convergence" => StudyMode::Convergence,
        "forward" => StudyMode::Forward,
        "blowup" => StudyMode::Blowup,
        "interp" => StudyMode::Interp,
        _ => StudyMode::Probe(s.parse().map_err(|e: String| bad(line, key, e))?),
    })
}

fn check_n(kind: DomainKind, n: usize) -> Result<(), String> {
    if n < 8 {
        return Err(format!("n = {n} is below 8"));
    }
    if kind == DomainKind::SquareAnnulus && n % 8 != 0 {
        return Err(format!("n = {n} is not divisible by 8 (square annulus)"));
    }
    Ok(())
}

impl Config {
    pub fn parse_str(text: &str) -> Result<Config, CliError> {
        let mut cfg = Config::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(CliError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::UnknownKey { line, key: key.to_string() });
            }
            if cfg.lines.insert(key.to_string(), line).is_some() {
                return Err(CliError::DuplicateKey { line, key: key.to_string() });
            }
            if value.is_empty() {
                return Err(bad(line, key, "empty value"));
            }
            cfg.echo.insert(key.to_string(), value.to_string());
            cfg.set(line, key, value)?;
        }
        cfg.cross_check()?;
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse_str(&text)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "domain.kind" => self.domain = domain(line, key, v)?,
            "grid.n" => self.n = num(line, key, v)?,
            "grid.levels" => {
                let mut l = list(v).into_iter().map(|x| num(line, key, x)).collect::<Result<Vec<usize>, _>>()?;
                l.sort_unstable();
                if l.windows(2).any(|w| w[0] == w[1]) || l.is_empty() {
                    return Err(bad(line, key, "levels must be distinct and nonempty"));
                }
                self.levels = Some(l);
            }
            "coeffs.nu" => {
                let nu = real(line, key, v)?;
                if nu <= 0.0 {
                    return Err(bad(line, key, "viscosity must be positive"));
                }
                self.nu = Some(nu);
            }
            "coeffs.z1_case" => self.z1_case = Some(case(line, key, v)?),
            "coeffs.z2_case" => self.z2_case = Some(case(line, key, v)?),
            "case.name" => self.case = case(line, key, v)?,
            "case.incompatible" => self.incompatible = Some(case(line, key, v)?),
            "segments.gamma_obs" => {
                if !["gamma_obs", "gamma_c", "gamma_0"].contains(&v) {
                    return Err(bad(line, key, format!("unknown segment `{v}`")));
                }
                self.gamma_obs = v.to_string();
            }
            "window.rect" => {
                let r = reals(line, key, v)?;
                if r.len() != 4 {
                    return Err(bad(line, key, "expected x0,x1,y0,y1"));
                }
                if !(0.0 < r[0] && r[0] < r[1] && r[1] < 1.0 && 0.0 < r[2] && r[2] < r[3] && r[3] < 1.0) {
                    return Err(bad(line, key, "need 0 < x0 < x1 < 1 and 0 < y0 < y1 < 1"));
                }
                self.window = Some([r[0], r[1], r[2], r[3]]);
            }
            "eps.list" => {
                let mut e = reals(line, key, v)?;
                if e.iter().any(|x| *x <= 0.0) {
                    return Err(bad(line, key, "entries must be positive"));
                }
                e.sort_by(|a, b| b.total_cmp(a));
                if e.windows(2).any(|w| w[0] == w[1]) {
                    return Err(bad(line, key, "repeated entry"));
                }
                self.eps = e;
            }
            "noise.delta_list" => {
                let d = reals(line, key, v)?;
                if d.iter().any(|x| *x < 0.0) {
                    return Err(bad(line, key, "noise levels must be nonnegative"));
                }
                self.delta_list = d;
            }
            "noise.seed" => self.noise_seed = num(line, key, v)?,
            "noise.targets" => {
                self.noise_targets = list(v).into_iter().map(|x| target(line, key, x)).collect::<Result<_, _>>()?;
            }
            "robin.alpha1" => {
                self.alpha1 = real(line, key, v)?;
                if self.alpha1 < 0.0 {
                    return Err(bad(line, key, "Robin coefficient must be nonnegative"));
                }
            }
            "robin.mu" => {
                self.mu = real(line, key, v)?;
                if self.mu <= 0.0 {
                    return Err(bad(line, key, "profile must be positive"));
                }
            }
            "robin.t_list" => {
                let t = reals(line, key, v)?;
                if t.iter().any(|x| *x < 0.0) {
                    return Err(bad(line, key, "t must be nonnegative"));
                }
                self.t_list = t;
            }
            "robin.kappa_run" => {
                let r = reals(line, key, v)?;
                if r.len() != 2 || !(0.0 <= r[0] && r[0] < r[1] && r[1] <= 1.0) {
                    return Err(bad(line, key, "expected start,end with 0 <= start < end <= 1"));
                }
                self.kappa_run = (r[0], r[1]);
            }
            "study.method" => self.method = v.parse().map_err(|e: String| bad(line, key, e))?,
            "study.mode" => self.mode = Some(mode(line, key, v)?),
            "study.cases" => {
                self.cases = Some(list(v).into_iter().map(|x| case(line, key, x)).collect::<Result<_, _>>()?);
            }
            "study.scales" => {
                let s = reals(line, key, v)?;
                if s.iter().any(|x| *x <= 0.0) {
                    return Err(bad(line, key, "scales must be positive"));
                }
                self.scales = s;
            }
            "study.family" => {
                self.family = num(line, key, v)?;
                if self.family == 0 {
                    return Err(bad(line, key, "family must be nonempty"));
                }
            }
            "study.seed" => self.study_seed = num(line, key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "solver.kind" => {
                self.solver = match v {
                    "givens" => SolverKind::Givens,
                    "cg" => SolverKind::Cg,
                    _ => return Err(bad(line, key, format!("unknown solver `{v}` (givens or cg)"))),
                }
            }
            "solver.tol" => {
                self.tol = real(line, key, v)?;
                if !(self.tol > 0.0 && self.tol < 1.0) {
                    return Err(bad(line, key, "tolerance must lie in (0, 1)"));
                }
            }
            "solver.max_iter" => {
                self.max_iter = num(line, key, v)?;
                if self.max_iter == 0 {
                    return Err(bad(line, key, "must be at least 1"));
                }
            }
            _ => unreachable!("key list and match arms disagree"),
        }
        Ok(())
    }

    fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    /// Checks that depend on more than one key.
    fn cross_check(&self) -> Result<(), CliError> {
        check_n(self.domain, self.n).map_err(|m| bad(self.line_of("grid.n"), "grid.n", m))?;
        if let Some(l) = &self.levels {
            for &n in l {
                check_n(self.domain, n).map_err(|m| bad(self.line_of("grid.levels"), "grid.levels", m))?;
            }
        }
        if self.gamma_obs == "gamma_0" && self.domain != DomainKind::SquareAnnulus {
            return Err(bad(self.line_of("segments.gamma_obs"), "segments.gamma_obs", "gamma_0 exists only on the square annulus"));
        }
        if self.incompatible == Some(self.case) {
            return Err(bad(self.line_of("case.incompatible"), "case.incompatible", "must differ from case.name"));
        }
        Ok(())
    }

    /// The ε list checked by the study rules.
    pub fn study_eps(&self) -> Result<Vec<f64>, CliError> {
        validate_eps_list(&self.eps).map_err(|e| bad(self.line_of("eps.list"), "eps.list", e.to_string()))
    }

    /// The ε list for single solves: any nonempty positive list.
    pub fn solve_eps(&self) -> Result<Vec<f64>, CliError> {
        if self.eps.is_empty() {
            return Err(CliError::Missing("eps.list".into()));
        }
        Ok(self.eps.clone())
    }

    pub fn levels_or(&self, default: &[usize]) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn cases_or(&self, default: &[CaseName]) -> Vec<CaseName> {
        self.cases.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn mode_line(&self) -> usize {
        self.line_of("study.mode")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_is_read() {
        assert_eq!(Config::parse_str("grid.n = 32").unwrap().n, 32);
    }

    #[test]
    fn annulus_divisibility() {
        let e = Config::parse_str("domain.kind = square_annulus\ngrid.n = 7\n").unwrap_err();
        assert!(matches!(e, CliError::OutOfRange { ref key, line: 2, .. } if key == "grid.n"), "{e}");
    }

    #[test]
    fn eps_list_sorted() {
        let c = Config::parse_str("eps.list = 1e-4, 1e-2,1e-6 # three").unwrap();
        assert_eq!(c.eps, vec![1e-2, 1e-4, 1e-6]);
    }

    #[test]
    fn unknown_key_names_line() {
        let e = Config::parse_str("# header\n\ngrid.m = 3\n").unwrap_err();
        assert!(matches!(e, CliError::UnknownKey { line: 3, ref key } if key == "grid.m"));
    }

    #[test]
    fn duplicates_and_syntax() {
        assert!(matches!(Config::parse_str("grid.n = 8\ngrid.n = 16"), Err(CliError::DuplicateKey { line: 2, .. })));
        assert!(matches!(Config::parse_str("grid.n 8"), Err(CliError::Syntax { line: 1 })));
    }
}
