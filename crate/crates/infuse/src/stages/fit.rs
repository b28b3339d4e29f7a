use std::collections::BTreeMap;

use infuse_core::fit::{
    collapse_point_of, extrapolate_frequency, fit_curve, fit_scaling_law, rank_outcomes, CollapsePoint, ComputeBudget,
    CurveForm, FitOptions, FitResult, FormOutcome, ScalingFit, ScalingOptions,
};
use infuse_core::RunRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::VERSION;

/// Parse `all` or a comma-free list of `p1`..`p5`; order is kept, duplicates dropped.
pub fn parse_forms<S: AsRef<str>>(names: &[S]) -> Result<Vec<CurveForm>> {
    let mut out = Vec::new();
    for name in names {
        let name = name.as_ref();
        let forms = if name.eq_ignore_ascii_case("all") {
            CurveForm::ALL.to_vec()
        } else {
            vec![CurveForm::parse(name).ok_or_else(|| Error::Config(format!("unknown curve form {name:?}")))?]
        };
        for f in forms {
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no curve forms requested".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFit {
    pub form: CurveForm,
    /// 1-based position in the group's ranking.
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapsePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D")]
    pub d: u64,
    /// `(F, mr)` pairs used for fitting, sorted by frequency.
    pub points: Vec<(f64, f64)>,
    /// Zero-frequency baseline records are not fitted.
    pub excluded_baseline: usize,
    pub ranking: Vec<FormFit>,
}

impl GroupFit {
    pub fn best(&self) -> Option<(&FormFit, &FitResult)> {
        self.ranking.iter().find_map(|f| f.fit.as_ref().map(|r| (f, r)))
    }

    pub fn budget(&self) -> ComputeBudget {
        ComputeBudget::new(self.n, self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsFile {
    pub version: String,
    pub seed: u64,
    pub forms: Vec<CurveForm>,
    pub groups: Vec<GroupFit>,
}

#[derive(Debug, Clone)]
pub struct FitJob {
    pub forms: Vec<CurveForm>,
    pub seed: u64,
    pub random_starts: usize,
}

/// Records grouped by `(N, D)`, ordered by `D` then `N`.
pub fn group_records(records: &[RunRecord]) -> BTreeMap<(u64, u64), Vec<RunRecord>> {
    let mut groups: BTreeMap<(u64, u64), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.training_tokens, r.model_size)).or_default().push(*r);
    }
    groups
}

/// Fit every requested form to every `(N, D)` group. Fits run in parallel;
/// each is deterministic, so results do not depend on the thread count.
pub fn fit_records(records: &[RunRecord], job: &FitJob) -> Result<FitsFile> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let opts = FitOptions { seed: job.seed, random_starts: job.random_starts, ..FitOptions::default() };
    let groups: Vec<((u64, u64), Vec<(f64, f64)>, usize)> = group_records(records)
        .into_iter()
        .map(|(key, rows)| {
            let mut pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.frequency > 0).map(|r| (r.frequency as f64, r.mr)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let excluded = rows.len() - pts.len();
            (key, pts, excluded)
        })
        .collect();

    let jobs: Vec<(usize, CurveForm)> = (0..groups.len()).flat_map(|g| job.forms.iter().map(move |&f| (g, f))).collect();
    let results: Vec<FormOutcome> = jobs
        .par_iter()
        .map(|&(g, form)| FormOutcome { form, result: fit_curve(form, &groups[g].1, &opts) })
        .collect();

    let mut per_group: Vec<Vec<FormOutcome>> = vec![Vec::new(); groups.len()];
    for ((g, _), outcome) in jobs.iter().zip(results) {
        per_group[*g].push(outcome);
    }
    let groups = groups
        .into_iter()
        .zip(per_group)
        .map(|(((d, n), points, excluded_baseline), outcomes)| {
            let ranking = rank_outcomes(outcomes)
                .into_iter()
                .enumerate()
                .map(|(i, o)| match o.result {
                    Ok(fit) => FormFit {
                        form: o.form,
                        rank: i + 1,
                        collapse: Some(collapse_point_of(&fit.model, fit.data_f_max)),
                        fit: Some(fit),
                        error: None,
                    },
                    Err(e) => FormFit { form: o.form, rank: i + 1, fit: None, collapse: None, error: Some(e.to_string()) },
                })
                .collect();
            GroupFit { n, d, points, excluded_baseline, ranking }
        })
        .collect();
    Ok(FitsFile { version: VERSION.to_string(), seed: job.seed, forms: job.forms.clone(), groups })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSamples {
    pub form: CurveForm,
    pub r2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPlot {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub data: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_form: Option<CurveForm>,
    pub curves: Vec<CurveSamples>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub version: String,
    pub groups: Vec<GroupPlot>,
}

/// Curve samples on a log grid over `[1, 10 * F_max]` for external plotting.
pub fn plot_data(fits: &FitsFile, samples: usize) -> PlotData {
    let samples = samples.max(2);
    let groups = fits
        .groups
        .iter()
        .map(|g| {
            let curves = g
                .ranking
                .iter()
                .filter_map(|ff| {
                    let fit = ff.fit.as_ref()?;
                    let hi = (10.0 * fit.data_f_max).max(10.0);
                    let pts = (0..samples)
                        .map(|i| {
                            let f = (hi.ln() * i as f64 / (samples - 1) as f64).exp();
                            (f, fit.model.eval(f))
                        })
                        .collect();
                    Some(CurveSamples { form: ff.form, r2: fit.r2, f_star: fit.collapse_point, samples: pts })
                })
                .collect();
            GroupPlot { n: g.n, d: g.d, data: g.points.clone(), best_form: g.best().map(|b| b.0.form), curves }
        })
        .collect();
    PlotData { version: VERSION.to_string(), groups }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(rename = "C")]
    pub c: u128,
    pub form: CurveForm,
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFile {
    pub version: String,
    /// Restrict to groups trained on this many tokens.
    #[serde(rename = "D_filter", skip_serializing_if = "Option::is_none")]
    pub d_filter: Option<u64>,
    pub points: Vec<ScalingPoint>,
    pub fit: ScalingFit,
}

/// Collapse points of each group's best form, optionally restricted to one `D`.
pub fn scaling_points(fits: &FitsFile, d_filter: Option<u64>) -> Vec<ScalingPoint> {
    fits.groups
        .iter()
        .filter(|g| d_filter.is_none_or(|d| g.d == d))
        .filter_map(|g| {
            let (ff, fit) = g.best()?;
            let f_star = ff.collapse.as_ref().map(|c| c.f_star).or(fit.collapse_point)?;
            Some(ScalingPoint { n: g.n, d: g.d, c: g.budget().flops(), form: ff.form, f_star })
        })
        .collect()
}

pub fn fit_scaling(fits: &FitsFile, d_filter: Option<u64>) -> Result<ScalingFile> {
    let points = scaling_points(fits, d_filter);
    let data: Vec<(ComputeBudget, f64)> = points.iter().map(|p| (ComputeBudget::new(p.n, p.d), p.f_star)).collect();
    let fit = fit_scaling_law(&data, &ScalingOptions::default())?;
    Ok(ScalingFile { version: VERSION.to_string(), d_filter, points, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(rename = "C")]
    pub c: u128,
    pub f_star: f64,
    pub warnings: Vec<String>,
}

pub fn extrapolate(fit: &ScalingFit, n: u64, d: u64) -> Extrapolation {
    let budget = ComputeBudget::new(n, d);
    let f_star = extrapolate_frequency(fit, budget);
    let mut warnings = Vec::new();
    if f_star < 0.0 {
        warnings.push("predicted collapse point is negative; the fitted offset E dominates at this budget".into());
    }
    Extrapolation { n, d, c: budget.flops(), f_star, warnings }
}
