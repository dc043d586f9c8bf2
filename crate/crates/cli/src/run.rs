//! Command dispatch and artifact writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cauchy_stokes_core::fields::norms::state_norm_h2h1;
use cauchy_stokes_core::kv::{KvModel, KvSummary};
use cauchy_stokes_core::mesh::{GAMMA_C, GAMMA_OBS};
use cauchy_stokes_core::qr::{qr_apriori_check, AprioriReport, QrDiagnostics};
use cauchy_stokes_core::studies::convergence::{run_blowup_study, run_convergence_study, run_noise_study, state_errors};
use cauchy_stokes_core::studies::probes::{run_forward_study, run_interp_probe, run_ops_check, run_stability_probe};
use cauchy_stokes_core::studies::robin::{run_robin_study, RobinConfig};
use cauchy_stokes_core::{
    build_grid, make_cauchy_data, solve_forward_phi, solve_forward_psi, solve_qr_cg, CaseName, CauchyProblem, DomainKind,
    Grid, ManufacturedCase, ProbeMode, QrSolution, QrSolver, StokesState, StudyReport,
};
use clap::ValueEnum;
use serde::Serialize;

use crate::config::{Config, SolverKind, StudyMode};
use crate::error::CliError;
use crate::manifest::{entry, RunManifest, MANIFEST_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Forward,
    Qr,
    QrInterior,
    Kv,
    StudyConv,
    StudyNoise,
    StudyRobin,
    StudyStability,
    OpsCheck,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub dry_run: bool,
    pub record_timings: bool,
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out: None, dry_run: false, record_timings: false, threads: 1 }
    }
}

/// Files produced by one command, written together at the end.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub flags: BTreeMap<String, bool>,
}

impl Output {
    fn push(&mut self, name: impl Into<String>, data: impl Into<Vec<u8>>) {
        self.files.push((name.into(), data.into()));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.push(name, s);
        Ok(())
    }

    fn state(&mut self, stem: &str, s: &StokesState) {
        self.push(format!("{stem}_velocity.csv"), s.v.to_csv());
        self.push(format!("{stem}_pressure.csv"), s.p.to_csv());
    }

    fn study(&mut self, rep: StudyReport) -> Result<(), CliError> {
        self.push("study.csv", rep.to_csv());
        self.json("study.json", &rep)?;
        self.flags = rep.flags;
        Ok(())
    }
}

/// Thread count from `CAUCHY_STOKES_THREADS` (unset means 1).
pub fn threads_from_env(value: Option<&str>) -> Result<usize, CliError> {
    match value {
        None => Ok(1),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Threads(format!("expected a positive integer, got `{v}`"))),
        },
    }
}

fn case_of(cfg: &Config, name: CaseName) -> ManufacturedCase {
    let mut c = ManufacturedCase::new(name).with_coefficients(cfg.z1_case.unwrap_or(name), cfg.z2_case.unwrap_or(name));
    if let Some(nu) = cfg.nu {
        c = c.with_viscosity(nu);
    }
    c
}

fn grid(cfg: &Config, n: usize) -> Result<Arc<Grid>, CliError> {
    Ok(build_grid(cfg.domain, n)?)
}

fn need_annulus(cfg: &Config) -> Result<(), CliError> {
    if cfg.domain != DomainKind::SquareAnnulus {
        return Err(CliError::OutOfRange {
            line: cfg.lines.get("domain.kind").copied().unwrap_or(0),
            key: "domain.kind".into(),
            msg: "this command needs the square annulus".into(),
        });
    }
    Ok(())
}

fn need_default_segment(cfg: &Config) -> Result<(), CliError> {
    if cfg.gamma_obs != GAMMA_OBS {
        return Err(CliError::OutOfRange {
            line: cfg.lines.get("segments.gamma_obs").copied().unwrap_or(0),
            key: "segments.gamma_obs".into(),
            msg: "this command observes on gamma_obs only".into(),
        });
    }
    Ok(())
}

fn bad_mode(cfg: &Config, cmd: Command) -> CliError {
    CliError::OutOfRange { line: cfg.mode_line(), key: "study.mode".into(), msg: format!("not a mode of {}", cmd.name()) }
}

fn window(cfg: &Config, g: &Grid) -> Result<cauchy_stokes_core::SubdomainWindow, CliError> {
    let [x0, x1, y0, y1] = cfg.window.ok_or_else(|| CliError::Missing("window.rect".into()))?;
    Ok(g.window(x0, x1, y0, y1)?)
}

fn conv_mode(cfg: &Config) -> StudyMode {
    cfg.mode.unwrap_or(if cfg.incompatible.is_some() { StudyMode::Blowup } else { StudyMode::Convergence })
}

fn qr_unknowns(g: &Grid, seg: &str) -> Result<usize, CliError> {
    Ok(3 * g.node_count() - 2 * g.segment(seg)?.len())
}

/// Validates everything a command needs and describes the planned solves.
pub fn plan(cmd: Command, cfg: &Config) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    let g = grid(cfg, cfg.n)?;
    let nodes = g.node_count();
    match cmd {
        Command::Forward => {
            need_annulus(cfg)?;
            out.push(format!("forward: n = {}, {nodes} nodes, 2 solves of {} unknowns", cfg.n, 3 * nodes));
        }
        Command::Qr => {
            let eps = cfg.solve_eps()?;
            out.push(format!("qr: n = {}, {} unknowns on {}, {} values of eps", cfg.n, qr_unknowns(&g, &cfg.gamma_obs)?, cfg.gamma_obs, eps.len()));
        }
        Command::QrInterior => {
            let eps = cfg.solve_eps()?;
            let w = window(cfg, &g)?;
            out.push(format!("qr-interior: n = {}, {} unknowns, {} window nodes, {} values of eps", cfg.n, 3 * nodes, w.len(), eps.len()));
        }
        Command::Kv => {
            need_annulus(cfg)?;
            need_default_segment(cfg)?;
            let eps = cfg.solve_eps()?;
            let rim = g.segment(GAMMA_C)?.len();
            out.push(format!("kv: n = {}, reduced dimension {}, {} forward unknowns, {} values of eps", cfg.n, 4 * rim, 3 * nodes, eps.len()));
        }
        Command::StudyConv => {
            need_default_segment(cfg)?;
            match conv_mode(cfg) {
                StudyMode::Convergence => {
                    let eps = cfg.study_eps()?;
                    if cfg.method == cauchy_stokes_core::Method::Kv {
                        need_annulus(cfg)?;
                    }
                    out.push(format!("study-conv ({}): n = {}, {nodes} nodes, {} values of eps", cfg.method, cfg.n, eps.len()));
                }
                StudyMode::Forward => {
                    need_annulus(cfg)?;
                    let levels = cfg.levels_or(&[16, 32, 64]);
                    let cases = cfg.cases_or(&[CaseName::Ms1, CaseName::Ms2]);
                    out.push(format!("study-conv (forward): levels {levels:?}, {} cases, {} solves", cases.len(), 2 * cases.len() * levels.len()));
                }
                StudyMode::Blowup => {
                    let eps = cfg.study_eps()?;
                    let b = cfg.incompatible.ok_or_else(|| CliError::Missing("case.incompatible".into()))?;
                    out.push(format!("study-conv (blowup {} vs {b}): n = {}, {} unknowns, {} values of eps", cfg.case, cfg.n, qr_unknowns(&g, GAMMA_OBS)?, eps.len()));
                }
                _ => return Err(bad_mode(cfg, cmd)),
            }
        }
        Command::StudyNoise => {
            need_default_segment(cfg)?;
            if cfg.method == cauchy_stokes_core::Method::Kv {
                need_annulus(cfg)?;
            }
            let eps = cfg.study_eps()?;
            out.push(format!(
                "study-noise ({}): n = {}, {} values of eps x {} noise levels",
                cfg.method,
                cfg.n,
                eps.len(),
                cfg.delta_list.len()
            ));
        }
        Command::StudyRobin => {
            need_annulus(cfg)?;
            let levels = cfg.levels_or(&[cfg.n]);
            for &n in &levels {
                RobinConfig::uniform(&grid(cfg, n)?, cfg.alpha1, cfg.mu, cfg.kappa_run)?;
            }
            out.push(format!("study-robin: levels {levels:?}, {} forward solves per level", cfg.t_list.len() + 1));
        }
        Command::StudyStability => match cfg.mode.unwrap_or(StudyMode::Probe(ProbeMode::Distributed)) {
            StudyMode::Probe(m) => {
                let w = window(cfg, &g)?;
                let cases = cfg.cases_or(&[CaseName::Ms1, CaseName::Ms2, CaseName::Ms3]);
                out.push(format!("study-stability ({m}): n = {}, {} window nodes, {} cases x {} scales, no solves", cfg.n, w.len(), cases.len(), cfg.scales.len()));
            }
            StudyMode::Interp => {
                need_annulus(cfg)?;
                let levels = cfg.levels_or(&[32, 64]);
                out.push(format!("study-stability (interp): levels {levels:?}, {} fields, no solves", cfg.family));
            }
            _ => return Err(bad_mode(cfg, cmd)),
        },
        Command::OpsCheck => {
            let levels = cfg.levels_or(&[16, 32, 64]);
            for &n in &levels {
                grid(cfg, n)?;
            }
            out.push(format!("ops-check: {:?}, levels {levels:?}, no solves", cfg.domain));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ErrorTriple {
    error_v_l2: f64,
    error_v_h1: f64,
    error_p_l2: f64,
}

impl ErrorTriple {
    fn of(s: &StokesState, exact: &StokesState) -> Self {
        let (a, b, c) = state_errors(s, exact);
        ErrorTriple { error_v_l2: a, error_v_h1: b, error_p_l2: c }
    }
}

#[derive(Serialize)]
struct ForwardSummary {
    case: String,
    n: usize,
    unknowns: usize,
    phi: ErrorTriple,
    psi: ErrorTriple,
}

#[derive(Serialize)]
struct QrEntry {
    diagnostics: QrDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    apriori: Option<AprioriReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    errors: Option<ErrorTriple>,
}

#[derive(Serialize)]
struct QrSummary {
    case: String,
    n: usize,
    segment: String,
    solver: String,
    unknowns: usize,
    solutions: Vec<QrEntry>,
}

#[derive(Serialize)]
struct KvEntry {
    summary: KvSummary,
    hessian_min_eig: f64,
    errors: ErrorTriple,
    alt_errors: ErrorTriple,
}

#[derive(Serialize)]
struct KvSummaryFile {
    case: String,
    n: usize,
    reduced_dim: usize,
    m_h: f64,
    solutions: Vec<KvEntry>,
}

fn forward(cfg: &Config) -> Result<Output, CliError> {
    let case = case_of(cfg, cfg.case);
    let g = grid(cfg, cfg.n)?;
    let co = case.coefficients(&g);
    let f = case.forcing_field(&g);
    let outer = g.segment(GAMMA_OBS)?.clone();
    let rim = g.segment(GAMMA_C)?.clone();
    let phi = solve_forward_phi(&g, &co, &f, &case.trace_on(&g, &outer), &case.traction_on(&g, &rim))?;
    let psi = solve_forward_psi(&g, &co, &f, &case.traction_on(&g, &outer), &case.trace_on(&g, &rim))?;
    let ex = case.exact_state(&g);
    let mut out = Output::default();
    out.state("forward_phi", &phi);
    out.state("forward_psi", &psi);
    let summary = ForwardSummary {
        case: case.name.to_string(),
        n: cfg.n,
        unknowns: 3 * g.node_count(),
        phi: ErrorTriple::of(&phi, &ex),
        psi: ErrorTriple::of(&psi, &ex),
    };
    out.json("forward.json", &summary)?;
    Ok(out)
}

fn solve_all(cfg: &Config, problem: &CauchyProblem, eps: &[f64]) -> Result<Vec<QrSolution>, CliError> {
    match cfg.solver {
        SolverKind::Givens => {
            let s = QrSolver::new(problem)?;
            eps.iter().map(|&e| s.solve(e).map_err(CliError::from)).collect()
        }
        SolverKind::Cg => eps.iter().map(|&e| solve_qr_cg(problem, e, cfg.tol, cfg.max_iter).map_err(CliError::from)).collect(),
    }
}

fn qr(cfg: &Config, interior: bool, opts: &RunOptions) -> Result<Output, CliError> {
    let eps = cfg.solve_eps()?;
    let case = case_of(cfg, cfg.case);
    let g = grid(cfg, cfg.n)?;
    let mut problem = match cfg.incompatible {
        Some(b) => cauchy_stokes_core::manufactured::make_incompatible_data(&case, &case_of(cfg, b), &g, &cfg.gamma_obs)?,
        None => make_cauchy_data(&case, &g, &cfg.gamma_obs)?,
    };
    let exact = cfg.incompatible.is_none().then(|| case.exact_state(&g));
    let mut unknowns = qr_unknowns(&g, &cfg.gamma_obs)?;
    if interior {
        let w = window(cfg, &g)?;
        let v = exact.as_ref().map(|e| e.v.clone()).unwrap_or_else(|| case.exact_state(&g).v);
        problem.g_d = None;
        problem.g_n = None;
        problem = problem.with_interior(w, v);
        unknowns = 3 * g.node_count();
    }
    let sols = solve_all(cfg, &problem, &eps)?;
    let mut out = Output::default();
    let stem = if interior { "qr_interior" } else { "qr" };
    let mut entries = Vec::new();
    for (k, sol) in sols.iter().enumerate() {
        out.state(&format!("{stem}_{k}"), &sol.state);
        let mut d = sol.diagnostics.clone();
        if !opts.record_timings {
            d.wall_ms = 0.0;
        }
        let apriori = (!interior).then(|| qr_apriori_check(sol, exact.as_ref()));
        if let Some(a) = &apriori {
            if a.applicable {
                out.flags.insert(format!("apriori_eps_{:e}", sol.epsilon), a.norm_bound_ok && a.diff_bound_ok);
            }
        }
        let errors = exact.as_ref().map(|e| ErrorTriple::of(&sol.state, e));
        entries.push(QrEntry { diagnostics: d, apriori, errors });
    }
    let summary = QrSummary {
        case: case.name.to_string(),
        n: cfg.n,
        segment: if interior { "window".into() } else { cfg.gamma_obs.clone() },
        solver: match cfg.solver {
            SolverKind::Givens => "givens".into(),
            SolverKind::Cg => "cg".into(),
        },
        unknowns,
        solutions: entries,
    };
    out.json(&format!("{stem}.json"), &summary)?;
    Ok(out)
}

fn kv(cfg: &Config, opts: &RunOptions) -> Result<Output, CliError> {
    let eps = cfg.solve_eps()?;
    let case = case_of(cfg, cfg.case);
    let g = grid(cfg, cfg.n)?;
    let problem = make_cauchy_data(&case, &g, GAMMA_OBS)?;
    let exact = case.exact_state(&g);
    let model = KvModel::new(&problem)?;
    let mut out = Output::default();
    let mut entries = Vec::new();
    for (k, &e) in eps.iter().enumerate() {
        let sol = model.minimize(e)?;
        out.state(&format!("kv_{k}"), &sol.state);
        let mut summary = sol.summary();
        if !opts.record_timings {
            summary.wall_ms = 0.0;
        }
        out.flags.insert(format!("hessian_pd_eps_{e:e}"), sol.hessian_min_eig > 0.0);
        entries.push(KvEntry {
            summary,
            hessian_min_eig: sol.hessian_min_eig,
            errors: ErrorTriple::of(&sol.state, &exact),
            alt_errors: ErrorTriple::of(&sol.alt_state, &exact),
        });
    }
    let file = KvSummaryFile {
        case: case.name.to_string(),
        n: cfg.n,
        reduced_dim: model.reduced_dim(),
        m_h: state_norm_h2h1(&exact),
        solutions: entries,
    };
    out.json("kv.json", &file)?;
    Ok(out)
}

fn cases(cfg: &Config, default: &[CaseName]) -> Vec<ManufacturedCase> {
    cfg.cases_or(default).into_iter().map(|c| case_of(cfg, c)).collect()
}

fn execute(cmd: Command, cfg: &Config, opts: &RunOptions) -> Result<Output, CliError> {
    let th = opts.threads;
    let mut out = Output::default();
    match cmd {
        Command::Forward => return forward(cfg),
        Command::Qr => return qr(cfg, false, opts),
        Command::QrInterior => return qr(cfg, true, opts),
        Command::Kv => return kv(cfg, opts),
        Command::StudyConv => {
            let case = case_of(cfg, cfg.case);
            let rep = match conv_mode(cfg) {
                StudyMode::Convergence => run_convergence_study(cfg.method, &case, &grid(cfg, cfg.n)?, &cfg.study_eps()?, th)?,
                StudyMode::Forward => run_forward_study(&cases(cfg, &[CaseName::Ms1, CaseName::Ms2]), &cfg.levels_or(&[16, 32, 64]))?,
                StudyMode::Blowup => {
                    let b = cfg.incompatible.ok_or_else(|| CliError::Missing("case.incompatible".into()))?;
                    run_blowup_study(&case, &case_of(cfg, b), &grid(cfg, cfg.n)?, &cfg.study_eps()?, th)?
                }
                _ => return Err(bad_mode(cfg, cmd)),
            };
            out.study(rep)?;
        }
        Command::StudyNoise => {
            let case = case_of(cfg, cfg.case);
            let rep = run_noise_study(
                cfg.method,
                &case,
                &grid(cfg, cfg.n)?,
                &cfg.study_eps()?,
                &cfg.delta_list,
                cfg.noise_seed,
                &cfg.noise_targets,
                th,
            )?;
            out.study(rep)?;
        }
        Command::StudyRobin => {
            let grids = cfg.levels_or(&[cfg.n]).into_iter().map(|n| grid(cfg, n)).collect::<Result<Vec<_>, _>>()?;
            let rc = RobinConfig::uniform(&grids[0], cfg.alpha1, cfg.mu, cfg.kappa_run)?;
            out.study(run_robin_study(&rc, &grids, &cfg.t_list, th)?)?;
        }
        Command::StudyStability => {
            let rep = match cfg.mode.unwrap_or(StudyMode::Probe(ProbeMode::Distributed)) {
                StudyMode::Probe(m) => {
                    let g = grid(cfg, cfg.n)?;
                    let w = window(cfg, &g)?;
                    run_stability_probe(m, &cases(cfg, &[CaseName::Ms1, CaseName::Ms2, CaseName::Ms3]), &g, &cfg.scales, &w)?
                }
                StudyMode::Interp => run_interp_probe(&cfg.levels_or(&[32, 64]), cfg.family, cfg.study_seed)?,
                _ => return Err(bad_mode(cfg, cmd)),
            };
            out.study(rep)?;
        }
        Command::OpsCheck => {
            let case = case_of(cfg, cfg.case);
            out.study(run_ops_check(&case, cfg.domain, &cfg.levels_or(&[16, 32, 64]))?)?;
        }
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, data: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, data).map_err(|e| CliError::Write { path, source: e })
}

/// Runs one command; returns the manifest after writing every artifact.
pub fn run(cmd: Command, cfg: &Config, opts: &RunOptions) -> Result<Option<RunManifest>, CliError> {
    let lines = plan(cmd, cfg)?;
    if opts.dry_run {
        for l in lines {
            println!("{l}");
        }
        return Ok(None);
    }
    let start = Instant::now();
    let out = execute(cmd, cfg, opts)?;
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Write { path: dir.clone(), source: e })?;
    for (name, data) in &out.files {
        write(&dir, name, data)?;
    }
    let manifest = RunManifest {
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: opts.threads,
        config: cfg.echo.clone(),
        artifacts: out.files.iter().map(|(n, d)| entry(n, d)).collect(),
        passed: out.flags.values().all(|f| *f),
        flags: out.flags,
        wall_ms: if opts.record_timings { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 },
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(&dir, MANIFEST_NAME, text.as_bytes())?;
    Ok(Some(manifest))
}
