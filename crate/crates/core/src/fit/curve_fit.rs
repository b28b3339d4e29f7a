use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log};
use rand::Rng;

use super::collapse::collapse_point_of;
use super::curves::{eval_form, eval_grad_form, CurveForm, CurveModel};
use super::optimizer::{minimize, Bounds, LbfgsbConfig};
use super::FitError;
use crate::rng::keyed_stream;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    pub seed: u64,
    /// Extra jittered starts on top of the deterministic grid.
    pub random_starts: usize,
    pub optimizer: LbfgsbConfig,
}


#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub model: CurveModel,
    pub r2: f64,
    pub sse: f64,
    /// Argmax of the fitted curve; `b / c` for P3.
    pub collapse_point: Option<f64>,
    pub converged: bool,
    pub n_starts_used: usize,
    pub n_points: usize,
    pub data_f_max: f64,
    pub diagnostics: Vec<String>,
}

/// Outcome of fitting one form during model selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FormOutcome {
    pub form: CurveForm,
    pub result: Result<FitResult, FitError>,
}

/// If any value exceeds 1.5 the series is taken to be in percent and divided by 100.
pub fn normalize_percent(values: &mut [f64]) -> bool {
    if values.iter().any(|&v| v > 1.5) {
        values.iter_mut().for_each(|v| *v /= 100.0);
        true
    } else {
        false
    }
}

/// Sum of squared residuals of `form(params)` on `data`, with its gradient.
pub fn sse_objective(form: CurveForm, data: &[(f64, f64)], params: &[f64], grad: &mut [f64]) -> f64 {
    let mut pg = vec![0.0; params.len()];
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut sse = 0.0;
    for &(f, y) in data {
        let r = eval_grad_form(form, params, f, &mut pg) - y;
        sse += r * r;
        for (g, d) in grad.iter_mut().zip(&pg) {
            *g += 2.0 * r * d;
        }
    }
    sse
}

fn total_sum_of_squares(data: &[(f64, f64)]) -> f64 {
    let mean = data.iter().map(|d| d.1).sum::<f64>() / data.len() as f64;
    data.iter().map(|d| (d.1 - mean) * (d.1 - mean)).sum()
}

/// `1 - SS_res / SS_tot`, with `SS_tot` taken about the data mean.
pub fn r_squared(model: &CurveModel, data: &[(f64, f64)]) -> Result<f64, FitError> {
    if data.len() < 2 {
        return Err(FitError::InsufficientData { needed: 2, got: data.len() });
    }
    let sst = total_sum_of_squares(data);
    if !(sst > 0.0) {
        return Err(FitError::ZeroVariance);
    }
    let sse: f64 = data.iter().map(|&(f, y)| (model.eval(f) - y) * (model.eval(f) - y)).sum();
    Ok(1.0 - sse / sst)
}

/// Summary of the data used to place starts and choose variable scales.
struct DataShape {
    f_min: f64,
    f_max: f64,
    f_geo: f64,
    f_peak: f64,
    y_min: f64,
    y_max: f64,
    y_scale: f64,
}

impl DataShape {
    fn of(data: &[(f64, f64)]) -> Self {
        let f_min = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
        let f_max = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
        let f_geo = exp(data.iter().map(|d| log(d.0)).sum::<f64>() / data.len() as f64);
        let y_min = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let y_max = data.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
        let f_peak = data.iter().find(|d| d.1 == y_max).map(|d| d.0).unwrap_or(f_geo);
        let y_scale = data.iter().map(|d| fabs(d.1)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Self { f_min, f_max, f_geo, f_peak, y_min, y_max, y_scale }
    }

    /// Candidate locations: log-spaced over the data range plus the observed peak.
    fn locations(&self, n: usize) -> Vec<f64> {
        let mut out = logspace(self.f_min, self.f_max, n);
        if !out.iter().any(|&l| fabs(l - self.f_peak) <= 1e-12 * self.f_peak) {
            out.push(self.f_peak);
        }
        out
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (log(lo), log(hi));
    (0..n).map(|i| exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Least squares for `y ~ sum_k w_k * cols[k]` (at most a handful of columns).
fn linear_ls(cols: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(p, q)| p * q).sum();
        }
        a[i][k] = cols[i].iter().zip(y).map(|(p, q)| p * q).sum();
        a[i][i] *= 1.0 + 1e-12;
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&p, &q| fabs(a[p][c]).total_cmp(&fabs(a[q][c])))?;
        if !(fabs(a[piv][c]) > 0.0) {
            return None;
        }
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let m = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= m * a[c][j];
                }
            }
        }
    }
    let w: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    w.iter().all(|v| v.is_finite()).then_some(w)
}

struct FormSetup {
    bounds: Bounds,
    /// Natural unit of each parameter; the variable scale of a start is `max(|start|, unit)`.
    units: Vec<f64>,
    starts: Vec<Vec<f64>>,
}

const INF: f64 = f64::INFINITY;

fn setup(form: CurveForm, data: &[(f64, f64)], shape: &DataShape) -> FormSetup {
    let fs: Vec<f64> = data.iter().map(|d| d.0).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1).collect();
    let g = shape.f_geo;
    let s = shape.y_scale;
    let col = |h: &dyn Fn(f64) -> f64| fs.iter().map(|&f| h(f)).collect::<Vec<f64>>();
    let ones = vec![1.0; fs.len()];
    let mut starts = Vec::new();
    match form {
        CurveForm::P1 => {
            let bounds = Bounds::new(vec![-INF, -INF, 1e-9 * g, -INF], vec![INF; 4]).unwrap();
            for b in shape.locations(3) {
                for w in [0.3, 1.0, 3.0] {
                    let c = w * b;
                    let bump = col(&|f| 1.0 / (1.0 + ((f - b) / c) * ((f - b) / c)));
                    let (a, d) = match linear_ls(&[bump, ones.clone()], &ys) {
                        Some(w) => (w[0], w[1]),
                        None => (shape.y_max - shape.y_min, shape.y_min),
                    };
                    starts.push(vec![a, b, c, d]);
                }
            }
            FormSetup { bounds, units: vec![s, g, g, s], starts }
        }
        CurveForm::P2 => {
            let bounds = Bounds::new(vec![-INF, -INF, 1e-9 * g, -INF, -INF, 1e-9 * g], vec![INF; 6]).unwrap();
            let locs = shape.locations(3);
            for i in 0..locs.len() {
                for j in (i + 1)..locs.len() {
                    for w in [0.5, 2.0] {
                        let (b1, b2) = (locs[i], locs[j]);
                        let (c1, c2) = (w * b1, w * b2);
                        let g1 = col(&|f| exp(-(f - b1) * (f - b1) / (2.0 * c1 * c1)));
                        let g2 = col(&|f| exp(-(f - b2) * (f - b2) / (2.0 * c2 * c2)));
                        let (a1, a2) = match linear_ls(&[g1, g2], &ys) {
                            Some(w) => (w[0], w[1]),
                            None => (shape.y_max, shape.y_max / 2.0),
                        };
                        starts.push(vec![a1, b1, c1, a2, b2, c2]);
                    }
                }
            }
            FormSetup { bounds, units: vec![s, g, g, s, g, g], starts }
        }
        CurveForm::P3 => {
            let bounds = Bounds::new(vec![1e-12, 1e-9, 1e-12], vec![10.0, 5.0, 1.0]).unwrap();
            for b in [0.2, 1.0, 3.0] {
                for peak in logspace(shape.f_min, shape.f_max, 9) {
                    let c = (b / peak).min(1.0);
                    let basis = col(&|f| libm::pow(f, b) * exp(-c * f));
                    let a = linear_ls(&[basis], &ys).map(|w| w[0]).unwrap_or(1.0);
                    starts.push(vec![a.clamp(1e-12, 10.0), b, c]);
                }
            }
            FormSetup { bounds, units: vec![1e-3, 1.0, 1.0 / g], starts }
        }
        CurveForm::P4 => {
            let bounds = Bounds::new(vec![-INF, -INF, 1e-6], vec![INF; 3]).unwrap();
            for loc in shape.locations(5) {
                let b = log(loc);
                for c in [0.5, 1.0, 2.0, 4.0] {
                    let basis = col(&|f| exp(-(log(f) - b) * (log(f) - b) / (2.0 * c * c)) / f);
                    let a = linear_ls(&[basis], &ys).map(|w| w[0]).unwrap_or(s * g);
                    starts.push(vec![a, b, c]);
                }
            }
            FormSetup { bounds, units: vec![s * g, 1.0, 1.0], starts }
        }
        CurveForm::P5 => {
            let bounds = Bounds::new(vec![-INF, 0.0, -INF, 0.0, -INF], vec![INF; 5]).unwrap();
            for f0 in shape.locations(3) {
                for k in [2.0 / f0, 10.0 / f0] {
                    for b in [1.0 / shape.f_max, 1.0 / g] {
                        let decay = col(&|f| exp(-b * f));
                        let rise = col(&|f| 1.0 / (1.0 + exp(-k * (f - f0))));
                        let (a, c) = match linear_ls(&[decay, rise], &ys) {
                            Some(w) => (w[0], w[1]),
                            None => (shape.y_max, shape.y_max),
                        };
                        starts.push(vec![a, b, c, k, f0]);
                    }
                }
            }
            FormSetup { bounds, units: vec![s, 1.0 / g, s, 1.0 / g, g], starts }
        }
    }
}

struct LocalFit {
    params: Vec<f64>,
    objective: f64,
    converged: bool,
}

fn run_start(
    form: CurveForm,
    data: &[(f64, f64)],
    sst: f64,
    start: &[f64],
    bounds: &Bounds,
    units: &[f64],
    cfg: &LbfgsbConfig,
) -> Option<LocalFit> {
    let mut theta0 = start.to_vec();
    bounds.project(&mut theta0);
    let scale: Vec<f64> = theta0.iter().zip(units).map(|(t, u)| fabs(*t).max(*u)).collect();
    let sb = bounds.scaled(&scale);
    let z0: Vec<f64> = theta0.iter().zip(&scale).map(|(t, s)| t / s).collect();
    let mut theta = vec![0.0; z0.len()];
    let mut grad = vec![0.0; z0.len()];
    let obj = |z: &[f64], gz: &mut [f64]| {
        for i in 0..z.len() {
            theta[i] = z[i] * scale[i];
        }
        let v = sse_objective(form, data, &theta, &mut grad) / sst;
        for i in 0..z.len() {
            gz[i] = grad[i] * scale[i] / sst;
        }
        v
    };
    let m = minimize(obj, &z0, &sb, cfg);
    if !m.f.is_finite() {
        return None;
    }
    let mut params: Vec<f64> = m.x.iter().zip(&scale).map(|(z, s)| z * s).collect();
    bounds.project(&mut params);
    Some(LocalFit { params, objective: m.f, converged: m.converged() })
}

fn validate_data(form: CurveForm, data: &[(f64, f64)]) -> Result<(), FitError> {
    let needed = form.param_count().max(4);
    if data.len() < needed {
        return Err(FitError::InsufficientData { needed, got: data.len() });
    }
    if data.iter().any(|d| !d.0.is_finite() || !d.1.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    if let Some(d) = data.iter().find(|d| d.0 < 1.0) {
        return Err(FitError::InvalidFrequency(d.0));
    }
    Ok(())
}

/// Least-squares fit of one form from a multi-start grid.
///
/// Variables are scaled per start (frequency-like parameters by the geometric
/// mean frequency, amplitudes by the data scale) and minimized under box
/// bounds. The best local optimum is polished once from its own scaling.
pub fn fit_curve(form: CurveForm, data: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult, FitError> {
    validate_data(form, data)?;
    let sst = total_sum_of_squares(data);
    if !(sst > 0.0) {
        return Err(FitError::ZeroVariance);
    }
    let shape = DataShape::of(data);
    let FormSetup { bounds, units, mut starts } = setup(form, data, &shape);

    if opts.random_starts > 0 {
        let base = starts.clone();
        let mut rng = keyed_stream(opts.seed, "fit_starts", &[&[form as u8]]);
        for r in 0..opts.random_starts {
            let mut s = base[r % base.len()].clone();
            for v in s.iter_mut() {
                *v *= exp(rng.random_range(-1.0..1.0));
            }
            starts.push(s);
        }
    }

    let mut best: Option<LocalFit> = None;
    for start in &starts {
        if let Some(fit) = run_start(form, data, sst, start, &bounds, &units, &opts.optimizer) {
            if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
                best = Some(fit);
            }
        }
    }
    let mut best = best.ok_or(FitError::AllStartsDiverged(form))?;
    if let Some(polished) = run_start(form, data, sst, &best.params, &bounds, &units, &opts.optimizer) {
        if polished.objective <= best.objective {
            best = polished;
        }
    }

    let model = CurveModel::new(form, best.params);
    let sse = data.iter().map(|&(f, y)| eval_form(form, &model.params, f) - y).map(|r| r * r).sum::<f64>();
    let data_f_max = shape.f_max;
    let mut diagnostics = Vec::new();
    if !best.converged {
        diagnostics.push(String::from("optimizer stopped before convergence"));
    }
    let collapse = collapse_point_of(&model, data_f_max);
    if collapse.multimodal {
        diagnostics.push(alloc::format!("{} local maxima in the search range", collapse.local_maxima.len()));
    }
    Ok(FitResult {
        r2: 1.0 - sse / sst,
        sse,
        collapse_point: Some(collapse.f_star),
        converged: best.converged,
        n_starts_used: starts.len(),
        n_points: data.len(),
        data_f_max,
        diagnostics,
        model,
    })
}

/// Fit each requested form and rank by R^2 (descending), then by fewer
/// parameters. Failed forms come last in request order.
pub fn select_best_form(data: &[(f64, f64)], forms: &[CurveForm], opts: &FitOptions) -> Vec<FormOutcome> {
    let outcomes = forms
        .iter()
        .map(|&form| FormOutcome { form, result: fit_curve(form, data, opts) })
        .collect();
    rank_outcomes(outcomes)
}

/// Order outcomes by R^2 (descending), then fewer parameters; failures last.
pub fn rank_outcomes(mut outcomes: Vec<FormOutcome>) -> Vec<FormOutcome> {
    // stable sort keeps request order among equals
    outcomes.sort_by(|x, y| match (&x.result, &y.result) {
        (Ok(a), Ok(b)) => b
            .r2
            .total_cmp(&a.r2)
            .then(x.form.param_count().cmp(&y.form.param_count())),
        (Ok(_), Err(_)) => core::cmp::Ordering::Less,
        (Err(_), Ok(_)) => core::cmp::Ordering::Greater,
        (Err(_), Err(_)) => core::cmp::Ordering::Equal,
    });
    outcomes
}
