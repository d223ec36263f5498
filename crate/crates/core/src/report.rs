//! Sweep reports: per-eps rows, trend judgements, CSV and JSON emission.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`) so identical
//! runs produce byte-identical files.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::lab::FamilyScenario;
use crate::linalg::C64;

/// Fixed 17-significant-digit formatting.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Values at or below this are treated as exactly vanishing by the trend rules.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Finite-sample proxy for `-> 0` along a decreasing-eps sweep: non-increasing
/// from the second point on and the last value at most a quarter of the first.
pub fn tends_to_zero(values: &[f64]) -> bool {
    if values.iter().all(|v| v.abs() <= ZERO_FLOOR) {
        return true;
    }
    let (Some(&first), Some(&last)) = (values.first(), values.last()) else {
        return false;
    };
    let monotone = values.iter().skip(1).zip(values.iter().skip(2)).all(|(a, b)| b <= a);
    monotone && last <= 0.25 * first
}

/// Finite-sample proxy for `O(1)`: `max / min <= 10`.
pub fn stays_bounded(values: &[f64]) -> bool {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= ZERO_FLOOR {
        return true;
    }
    min > 0.0 && max / min <= 10.0
}

/// One sweep row; `None` marks a quantity that could not be computed (see `error`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub epsilon: f64,
    pub sup_z_minus_i: Option<f64>,
    pub levin_alpha: Option<f64>,
    pub levin_beta: Option<f64>,
    pub levin_gamma: Option<f64>,
    pub levin_delta: Option<f64>,
    pub a_l1: Option<f64>,
    pub f_l1: Option<f64>,
    pub u_norm: Option<f64>,
    pub cond4p: Option<f64>,
    pub cond5p: Option<f64>,
    pub c_diff: Option<f64>,
    pub u_variation: Option<f64>,
    pub strong_probe: Option<f64>,
    pub sol_diff: Option<f64>,
    pub green_diff: Option<f64>,
    pub det_re: Option<f64>,
    pub det_im: Option<f64>,
    pub error: Option<String>,
}

pub const CSV_COLUMNS: [&str; 19] = [
    "epsilon",
    "sup_z_minus_i",
    "levin_alpha",
    "levin_beta",
    "levin_gamma",
    "levin_delta",
    "a_l1",
    "f_l1",
    "u_norm",
    "cond4p",
    "cond5p",
    "c_diff",
    "u_variation",
    "strong_probe",
    "sol_diff",
    "green_diff",
    "det_re",
    "det_im",
    "error",
];

/// Columns judged by [`tends_to_zero`].
pub const VANISHING_COLUMNS: [&str; 11] = [
    "sup_z_minus_i",
    "levin_beta",
    "levin_gamma",
    "levin_delta",
    "cond4p",
    "cond5p",
    "c_diff",
    "u_variation",
    "strong_probe",
    "sol_diff",
    "green_diff",
];

/// Columns judged by [`stays_bounded`].
pub const BOUNDED_COLUMNS: [&str; 4] = ["levin_alpha", "a_l1", "f_l1", "u_norm"];

impl ReportRow {
    pub fn empty(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn set_det(&mut self, det: C64) {
        self.det_re = Some(det.re);
        self.det_im = Some(det.im);
    }

    pub fn det(&self) -> Option<C64> {
        Some(C64::new(self.det_re?, self.det_im?))
    }

    /// Numeric column by CSV name.
    pub fn column(&self, name: &str) -> Option<f64> {
        match name {
            "epsilon" => Some(self.epsilon),
            "sup_z_minus_i" => self.sup_z_minus_i,
            "levin_alpha" => self.levin_alpha,
            "levin_beta" => self.levin_beta,
            "levin_gamma" => self.levin_gamma,
            "levin_delta" => self.levin_delta,
            "a_l1" => self.a_l1,
            "f_l1" => self.f_l1,
            "u_norm" => self.u_norm,
            "cond4p" => self.cond4p,
            "cond5p" => self.cond5p,
            "c_diff" => self.c_diff,
            "u_variation" => self.u_variation,
            "strong_probe" => self.strong_probe,
            "sol_diff" => self.sol_diff,
            "green_diff" => self.green_diff,
            "det_re" => self.det_re,
            "det_im" => self.det_im,
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub interval: [f64; 2],
    pub dim: usize,
    pub epsilons: Vec<f64>,
    pub tol: f64,
    pub sup_grid: usize,
    pub green_grid: usize,
}

impl ScenarioEcho {
    pub fn from_scenario(s: &FamilyScenario) -> Self {
        Self {
            name: s.name.clone(),
            interval: [s.interval.a, s.interval.b],
            dim: s.dim,
            epsilons: s.epsilons.clone(),
            tol: s.settings.tol,
            sup_grid: s.settings.sup_grid,
            green_grid: s.settings.green_grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub column: String,
    /// `"vanishing"` or `"bounded"`.
    pub rule: String,
    /// `None` when a row is missing the value.
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scenario: ScenarioEcho,
    pub rows: Vec<ReportRow>,
    pub trends: Vec<Trend>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ConvergenceReport {
    pub fn new(scenario: ScenarioEcho, rows: Vec<ReportRow>) -> Self {
        let mut r = Self {
            scenario,
            rows,
            trends: Vec::new(),
        };
        r.sort_rows();
        r
    }

    /// Orders rows by decreasing eps and recomputes trends.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        self.trends = VANISHING_COLUMNS
            .iter()
            .map(|c| (c, "vanishing", tends_to_zero as fn(&[f64]) -> bool))
            .chain(BOUNDED_COLUMNS.iter().map(|c| (c, "bounded", stays_bounded as fn(&[f64]) -> bool)))
            .map(|(c, rule, judge)| Trend {
                column: c.to_string(),
                rule: rule.to_string(),
                holds: self.column(c).map(|v| judge(&v)),
            })
            .collect();
    }

    /// Column values in row order; `None` if any row lacks it.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.column(name)).collect()
    }

    pub fn trend(&self, column: &str) -> Option<bool> {
        self.trends.iter().find(|t| t.column == column).and_then(|t| t.holds)
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        for row in &self.rows {
            let mut fields: Vec<String> = CSV_COLUMNS[..CSV_COLUMNS.len() - 1]
                .iter()
                .map(|c| row.column(c).map(fmt_num).unwrap_or_default())
                .collect();
            fields.push(row.error.as_deref().map(csv_field).unwrap_or_default());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_rules() {
        assert!(tends_to_zero(&[1.0, 0.5, 0.3, 0.2]));
        assert!(tends_to_zero(&[0.5, 1.0, 0.3, 0.1]));
        assert!(!tends_to_zero(&[1.0, 0.5, 0.6, 0.2]));
        assert!(!tends_to_zero(&[1.0, 0.9, 0.8, 0.7]));
        assert!(tends_to_zero(&[0.0, 0.0, 0.0]));
        assert!(!tends_to_zero(&[2.0, 2.0, 2.0]));

        assert!(stays_bounded(&[1.0, 3.0, 9.0]));
        assert!(!stays_bounded(&[1.0, 3.0, 11.0]));
        assert!(stays_bounded(&[0.0, 0.0]));
        assert!(!stays_bounded(&[0.0, 1.0]));
    }

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(2.0), "2.0000000000000000e0");
        assert_eq!(fmt_num(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn csv_has_fixed_columns_and_escapes_errors() {
        let mut row = ReportRow::empty(0.1);
        row.green_diff = Some(1.0);
        row.error = Some("solve: bad, \"worse\"".into());
        let echo = ScenarioEcho {
            name: "t".into(),
            interval: [0.0, 1.0],
            dim: 1,
            epsilons: vec![0.1],
            tol: 1e-9,
            sup_grid: 11,
            green_grid: 11,
        };
        let rep = ConvergenceReport::new(echo, vec![row]);
        let csv = rep.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let data = lines.next().unwrap();
        assert!(data.ends_with(",\"solve: bad, \"\"worse\"\"\""));
        assert!(!csv.contains('\r'));
        let back: ConvergenceReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
