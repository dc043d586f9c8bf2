//! Study rows, floor detection and fitted-constant checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of the study CSV.
pub const CSV_HEADER: &str = "param,error_v_l2,error_v_h1,error_p_l2,obs_quantity,bound_value,residual_pde,residual_div,flag";

/// Relative drop per decade below which the error is considered floored.
pub const FLOOR_DROP: f64 = 0.05;

pub const MIN_FIT_ROWS: usize = 3;

/// Width of the ±50% band: one constant within ±50% of every ratio.
pub const BAND_FACTOR: f64 = 3.0;

/// Slack factor on constants calibrated from half of a sweep.
pub const CALIBRATION_SLACK: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub param: f64,
    pub error_v_l2: f64,
    pub error_v_h1: f64,
    pub error_p_l2: f64,
    pub obs_quantity: f64,
    pub bound_value: f64,
    pub residual_pde: f64,
    pub residual_div: f64,
    pub flag: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl StudyRow {
    pub fn new(param: f64) -> Self {
        StudyRow {
            param,
            error_v_l2: 0.0,
            error_v_h1: 0.0,
            error_p_l2: 0.0,
            obs_quantity: 0.0,
            bound_value: 0.0,
            residual_pde: 0.0,
            residual_div: 0.0,
            flag: true,
            label: String::new(),
            extra: BTreeMap::new(),
        }
    }

    /// Extra value by key, NaN when absent.
    pub fn get(&self, key: &str) -> f64 {
        self.extra.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.extra.insert(key.to_string(), v);
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.param,
            self.error_v_l2,
            self.error_v_h1,
            self.error_p_l2,
            self.obs_quantity,
            self.bound_value,
            self.residual_pde,
            self.residual_div,
            self.flag
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    Noise,
    Robin,
    Interp,
    Stability,
    OpsCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<StudyRow>,
    pub constants: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
}

impl StudyReport {
    pub fn new(kind: StudyKind) -> Self {
        StudyReport { kind, config: BTreeMap::new(), rows: Vec::new(), constants: BTreeMap::new(), flags: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.flags.values().all(|f| *f)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.flags.get(key).copied()
    }

    pub fn constant(&self, key: &str) -> f64 {
        self.constants.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn echo(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorColumn {
    VL2,
    VH1,
    PL2,
}

impl ErrorColumn {
    pub const ALL: [ErrorColumn; 3] = [ErrorColumn::VL2, ErrorColumn::VH1, ErrorColumn::PL2];

    pub fn get(self, r: &StudyRow) -> f64 {
        match self {
            ErrorColumn::VL2 => r.error_v_l2,
            ErrorColumn::VH1 => r.error_v_h1,
            ErrorColumn::PL2 => r.error_p_l2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorColumn::VL2 => "v_l2",
            ErrorColumn::VH1 => "v_h1",
            ErrorColumn::PL2 => "p_l2",
        }
    }

    /// Exponent of the logarithm in the matching rate bound.
    pub fn exponent(self) -> f64 {
        match self {
            ErrorColumn::VL2 => 1.0,
            _ => 0.5,
        }
    }
}

/// `M / ln(1 + M/√ε)^q`.
pub fn log_bound(m: f64, eps: f64, q: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    m / (1.0 + m / eps.sqrt()).ln().powf(q)
}

/// Indices sorted by decreasing parameter.
fn descending(params: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..params.len()).collect();
    idx.sort_by(|&a, &b| params[b].total_cmp(&params[a]));
    idx
}

/// Marks the rows before the discretization floor.
///
/// Rows are visited from the largest parameter down. The floor starts at the
/// first row whose error fails to drop by more than 5% per decade.
pub fn pre_floor_mask(params: &[f64], errors: &[f64]) -> Vec<bool> {
    let mut mask = vec![false; params.len()];
    let idx = descending(params);
    let Some(&first) = idx.first() else {
        return mask;
    };
    mask[first] = true;
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let decades = (params[a] / params[b]).log10();
        if errors[b] < errors[a] * (1.0 - FLOOR_DROP).powf(decades) {
            mask[b] = true;
        } else {
            break;
        }
    }
    mask
}

/// True when the masked rows are nonincreasing as the parameter decreases.
pub fn monotone_on(params: &[f64], values: &[f64], mask: &[bool]) -> bool {
    let idx: Vec<usize> = descending(params).into_iter().filter(|&i| mask[i]).collect();
    idx.windows(2).all(|w| values[w[1]] <= values[w[0]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub c_fit: f64,
    pub max_violation: f64,
    /// Fitted exponent of `ln(1 + M/√ε)`; absent with fewer than two rows.
    pub q_fit: Option<f64>,
    pub rows_used: usize,
}

/// Fits `error ≤ C·M/ln(1+M/√ε)^q` on the given rows (`param = ε`).
pub fn fit_log_rate_masked(rows: &[StudyRow], mask: &[bool], which: ErrorColumn, q: f64, m: f64) -> Result<LogFit> {
    if rows.iter().all(|r| which.get(r) == 0.0) {
        return Ok(LogFit { c_fit: 0.0, max_violation: 0.0, q_fit: None, rows_used: rows.len() });
    }
    let used: Vec<&StudyRow> = rows.iter().zip(mask).filter(|(_, &k)| k).map(|(r, _)| r).collect();
    if used.len() < MIN_FIT_ROWS {
        return Err(Error::TooFewRows { needed: MIN_FIT_ROWS, found: used.len() });
    }
    let c_fit = used
        .iter()
        .map(|r| which.get(r) / log_bound(m, r.param, q))
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = used
        .iter()
        .map(|r| ((1.0 + m / r.param.sqrt()).ln().ln(), which.get(r).ln()))
        .collect();
    Ok(LogFit { c_fit, max_violation: (c_fit - 1.0).max(0.0), q_fit: slope(&pts).map(|s| -s), rows_used: used.len() })
}

/// [`fit_log_rate_masked`] with the floor detected on the same column.
pub fn fit_log_rate(rows: &[StudyRow], which: ErrorColumn, q: f64, m: f64) -> Result<LogFit> {
    let params: Vec<f64> = rows.iter().map(|r| r.param).collect();
    let errs: Vec<f64> = rows.iter().map(|r| which.get(r)).collect();
    fit_log_rate_masked(rows, &pre_floor_mask(&params, &errs), which, q, m)
}

/// Least-squares slope, `None` with fewer than two distinct abscissae.
pub fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// One constant within ±50% of all positive ratios.
pub fn band_ok(ratios: &[f64]) -> bool {
    let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    log_band_ok(&logs)
}

pub fn log_band_ok(logs: &[f64]) -> bool {
    if logs.iter().any(|l| !l.is_finite()) {
        return false;
    }
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    logs.is_empty() || hi - lo <= BAND_FACTOR.ln()
}

/// Fits `C` on the half of the rows with the largest parameters, then checks
/// `value ≤ 1.5·C·env + floor` everywhere. Returns `(C, ok)`.
pub fn calibrated_envelope(params: &[f64], values: &[f64], envs: &[f64], floor: f64) -> (f64, bool) {
    let idx = descending(params);
    let half = idx.len().div_ceil(2);
    let c = idx[..half]
        .iter()
        .map(|&i| (values[i] - floor).max(0.0) / envs[i])
        .fold(0.0, f64::max);
    let ok = (0..values.len()).all(|i| values[i] <= CALIBRATION_SLACK * c * envs[i] + floor);
    (c, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from(eps: &[f64], err: impl Fn(f64) -> f64) -> Vec<StudyRow> {
        eps.iter()
            .map(|&e| {
                let mut r = StudyRow::new(e);
                r.error_v_l2 = err(e);
                r
            })
            .collect()
    }

    const EPS: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

    #[test]
    fn exact_envelope_gives_unit_constant() {
        let m = 3.0;
        let rows = rows_from(&EPS, |e| log_bound(m, e, 1.0));
        let fit = fit_log_rate(&rows, ErrorColumn::VL2, 1.0, m).unwrap();
        assert!((fit.c_fit - 1.0).abs() < 1e-12);
        assert_eq!(fit.max_violation, 0.0);
        assert!((fit.q_fit.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_envelope_gives_two() {
        let m = 3.0;
        let rows = rows_from(&EPS, |e| 2.0 * log_bound(m, e, 1.0));
        let fit = fit_log_rate(&rows, ErrorColumn::VL2, 1.0, m).unwrap();
        assert!((fit.c_fit - 2.0).abs() < 1e-12);
        assert!((fit.max_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_stops_the_fit() {
        let rows = rows_from(&EPS, |e| e.max(1e-4));
        let params: Vec<f64> = rows.iter().map(|r| r.param).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.error_v_l2).collect();
        assert_eq!(pre_floor_mask(&params, &errs), vec![true, true, true, false, false]);
        let short = rows_from(&EPS, |e| e.max(1e-3));
        assert_eq!(
            fit_log_rate(&short, ErrorColumn::VL2, 1.0, 1.0),
            Err(Error::TooFewRows { needed: 3, found: 2 })
        );
    }

    #[test]
    fn zero_errors_fit_trivially() {
        let rows = rows_from(&EPS, |_| 0.0);
        let fit = fit_log_rate(&rows, ErrorColumn::VL2, 1.0, 0.0).unwrap();
        assert_eq!(fit.c_fit, 0.0);
    }

    #[test]
    fn floor_detection_ignores_input_order() {
        let p = [1e-4, 1e-2, 1e-6, 1e-3, 1e-5];
        let e: Vec<f64> = p.iter().map(|x: &f64| x.max(1e-4)).collect();
        let mask = pre_floor_mask(&p, &e);
        assert_eq!(mask, vec![true, true, false, true, false]);
    }

    #[test]
    fn bands() {
        assert!(band_ok(&[1.0, 2.0, 3.0]));
        assert!(!band_ok(&[1.0, 3.1]));
        assert!(!band_ok(&[0.0, 1.0]));
    }

    #[test]
    fn calibration() {
        let p = [1.0, 1e-1, 1e-2, 1e-3];
        let env: Vec<f64> = p.iter().map(|e: &f64| e.sqrt()).collect();
        let v: Vec<f64> = env.iter().map(|s| 0.5 * s + 0.1).collect();
        let (c, ok) = calibrated_envelope(&p, &v, &env, 0.1);
        assert!((c - 0.5).abs() < 1e-12 && ok);
        let bad = [0.6, 0.2, 0.5, 0.1];
        assert!(!calibrated_envelope(&p, &bad, &env, 0.0).1);
    }

    #[test]
    fn csv_header_and_lines() {
        let mut rep = StudyReport::new(StudyKind::Convergence);
        rep.rows.push(StudyRow::new(1e-2));
        let csv = rep.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().nth(1).unwrap(), "1e-2,0e0,0e0,0e0,0e0,0e0,0e0,0e0,true");
    }
}
