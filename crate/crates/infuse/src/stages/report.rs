use std::collections::BTreeSet;
use std::fmt::Write;

use infuse_core::fit::{CurveForm, FitError, ScalingFit};
use infuse_core::RunRecord;
use serde::{Deserialize, Serialize};

use super::fit::{fit_scaling, FitsFile};
use crate::error::{Error, Result};
use crate::manifest::VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub n_records: usize,
    pub best_form: Option<CurveForm>,
    pub f_star: Option<f64>,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScalingSection {
    Fitted { points: usize, fit: ScalingFit },
    #[serde(rename = "insufficient points")]
    InsufficientPoints { points: usize },
    Failed { points: usize, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetGroup {
    #[serde(rename = "D")]
    pub d: u64,
    pub rows: Vec<ReportRow>,
    /// Per-budget law across model sizes; present when several `D` values occur
    /// and this one holds more than one model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub groups: Vec<BudgetGroup>,
    pub scaling: ScalingSection,
}

fn scaling_section(fits: &FitsFile, d: Option<u64>) -> ScalingSection {
    let points = super::fit::scaling_points(fits, d).len();
    match fit_scaling(fits, d) {
        Ok(sf) => ScalingSection::Fitted { points, fit: sf.fit },
        Err(Error::Fit(FitError::TooFewBudgets(_))) => ScalingSection::InsufficientPoints { points },
        Err(e) => ScalingSection::Failed { points, error: e.to_string() },
    }
}

/// Summarize per-`(N, D)` best forms and collapse points, grouped by `D`, plus the scaling law.
pub fn build_report(records: &[RunRecord], fits: &FitsFile) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    if fits.groups.is_empty() {
        return Err(Error::Invalid("fits contain no groups".into()));
    }
    let budgets: BTreeSet<u64> = fits.groups.iter().map(|g| g.d).collect();
    let groups = budgets
        .iter()
        .map(|&d| {
            let rows: Vec<ReportRow> = fits
                .groups
                .iter()
                .filter(|g| g.d == d)
                .map(|g| {
                    let best = g.best();
                    ReportRow {
                        n: g.n,
                        d: g.d,
                        n_records: records.iter().filter(|r| r.model_size == g.n && r.training_tokens == g.d).count(),
                        best_form: best.map(|b| b.0.form),
                        f_star: best.and_then(|b| b.0.collapse.as_ref().map(|c| c.f_star).or(b.1.collapse_point)),
                        r2: best.map(|b| b.1.r2),
                    }
                })
                .collect();
            let scaling = (budgets.len() > 1 && rows.len() > 1).then(|| scaling_section(fits, Some(d)));
            BudgetGroup { d, rows, scaling }
        })
        .collect();
    Ok(Report { version: VERSION.to_string(), groups, scaling: scaling_section(fits, None) })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn render_scaling(out: &mut String, label: &str, s: &ScalingSection) {
    match s {
        ScalingSection::Fitted { points, fit } => {
            let _ = writeln!(
                out,
                "{label}: F(C) = {:.6e} / C^{:.6} + {:.6}  (points {points}, r2 {})",
                fit.a,
                fit.alpha,
                fit.e,
                opt(fit.fit_r2, 6)
            );
            for w in &fit.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
        ScalingSection::InsufficientPoints { points } => {
            let _ = writeln!(out, "{label}: insufficient points ({points}, need 3 distinct budgets)");
        }
        ScalingSection::Failed { points, error } => {
            let _ = writeln!(out, "{label}: failed on {points} points: {error}");
        }
    }
}

pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    for g in &report.groups {
        let _ = writeln!(out, "D = {}", g.d);
        let _ = writeln!(out, "  {:>14}  {:>5}  {:>12}  {:>10}  {:>7}", "N", "form", "F*", "r2", "records");
        for r in &g.rows {
            let form = r.best_form.map_or_else(|| "-".to_string(), |f| f.to_string());
            let _ = writeln!(out, "  {:>14}  {:>5}  {:>12}  {:>10}  {:>7}", r.n, form, opt(r.f_star, 3), opt(r.r2, 6), r.n_records);
        }
        if let Some(s) = &g.scaling {
            render_scaling(&mut out, "  scaling (this D)", s);
        }
    }
    render_scaling(&mut out, "scaling", &report.scaling);
    out
}
