use alloc::vec::Vec;

use libm::{exp, log};

use super::curve_fit::FitResult;
use super::curves::{CurveForm, CurveModel};
use super::FitError;

/// Log-grid resolution of the numeric argmax scan.
pub const GRID_POINTS: usize = 512;
const GOLDEN_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalMax {
    pub f: f64,
    pub value: f64,
    /// Width of the final golden-section bracket (0 for closed forms).
    pub bracket_width: f64,
    /// Maximum sits on an end of the search range.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CollapsePoint {
    pub f_star: f64,
    pub value: f64,
    pub bracket_width: f64,
    pub analytic: bool,
    pub multimodal: bool,
    pub local_maxima: Vec<LocalMax>,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
/// Returns the midpoint of the final bracket and its width.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= rel_tol * (libm::fabs(lo) + libm::fabs(hi)).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (0.5 * (lo + hi), hi - lo)
}

/// Argmax of `model` over `[1, 10 * f_max_data]`.
///
/// P3 uses the closed form `b / c`. Other forms scan a log-spaced grid, then
/// refine every local maximum by golden section; all of them are reported.
pub fn collapse_point_of(model: &CurveModel, f_max_data: f64) -> CollapsePoint {
    if model.form == CurveForm::P3 {
        let (b, c) = (model.params[1], model.params[2]);
        let f_star = b / c;
        let value = model.eval(f_star);
        let m = LocalMax { f: f_star, value, bracket_width: 0.0, boundary: false };
        return CollapsePoint {
            f_star,
            value,
            bracket_width: 0.0,
            analytic: true,
            multimodal: false,
            local_maxima: alloc::vec![m],
        };
    }

    let hi = (10.0 * f_max_data).max(1.0 + 1e-9);
    let (la, lb) = (0.0, log(hi));
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| exp(la + (lb - la) * i as f64 / (GRID_POINTS - 1) as f64))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&f| model.eval(f)).collect();
    let last = GRID_POINTS - 1;

    let mut maxima = Vec::new();
    if vals[0] > vals[1] {
        maxima.push(LocalMax { f: grid[0], value: vals[0], bracket_width: 0.0, boundary: true });
    }
    for i in 1..last {
        if vals[i] > vals[i - 1] && vals[i] >= vals[i + 1] {
            let (f, w) = golden_section_max(|x| model.eval(x), grid[i - 1], grid[i + 1], GOLDEN_REL_TOL);
            maxima.push(LocalMax { f, value: model.eval(f), bracket_width: w, boundary: false });
        }
    }
    if vals[last] > vals[last - 1] {
        maxima.push(LocalMax { f: grid[last], value: vals[last], bracket_width: 0.0, boundary: true });
    }
    if maxima.is_empty() {
        // flat profile
        maxima.push(LocalMax { f: grid[0], value: vals[0], bracket_width: 0.0, boundary: true });
    }
    let best = maxima
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.value.total_cmp(&b.1.value).then(b.0.cmp(&a.0)))
        .map(|(_, m)| m.clone())
        .unwrap();
    CollapsePoint {
        f_star: best.f,
        value: best.value,
        bracket_width: best.bracket_width,
        analytic: false,
        multimodal: maxima.len() > 1,
        local_maxima: maxima,
    }
}

/// Collapse point of a converged fit.
pub fn collapse_point(fit: &FitResult) -> Result<CollapsePoint, FitError> {
    if !fit.converged {
        return Err(FitError::NotConverged);
    }
    Ok(collapse_point_of(&fit.model, fit.data_f_max))
}
