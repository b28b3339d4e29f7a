use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log};

use super::optimizer::{minimize, Bounds, LbfgsbConfig};
use super::FitError;

/// Training compute `C = 6 N D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComputeBudget {
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub n: u64,
    #[cfg_attr(feature = "serde", serde(rename = "D"))]
    pub d: u64,
}

impl ComputeBudget {
    pub fn new(n: u64, d: u64) -> Self {
        Self { n, d }
    }

    /// Exact FLOPs in integer arithmetic.
    pub fn flops(&self) -> u128 {
        6 * self.n as u128 * self.d as u128
    }

    pub fn flops_f64(&self) -> f64 {
        self.flops() as f64
    }
}

/// Fitted `F(C) = A / C^alpha + E`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: f64,
    pub alpha: f64,
    #[cfg_attr(feature = "serde", serde(rename = "E"))]
    pub e: f64,
    /// `None` when the collapse points have zero variance.
    pub fit_r2: Option<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl ScalingFit {
    pub fn predict(&self, flops: f64) -> f64 {
        self.a * exp(-self.alpha * log(flops)) + self.e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOptions {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub optimizer: LbfgsbConfig,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self { alpha_min: 1e-6, alpha_max: 10.0, optimizer: LbfgsbConfig::default() }
    }
}

/// Least squares for `y ~ w0 * x + w1`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let w0 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (w0, my - w0 * mx)
}

/// Fit the cross-scale law to `(budget, collapse point)` pairs.
///
/// Compute is normalized by its geometric mean `Cg`, so the optimizer works on
/// `A' (C/Cg)^-alpha + E` with `A = A' Cg^alpha`. Starts scan a log grid of
/// `alpha` with `A'` and `E` solved linearly.
pub fn fit_scaling_law(points: &[(ComputeBudget, f64)], opts: &ScalingOptions) -> Result<ScalingFit, FitError> {
    let mut distinct: Vec<u128> = points.iter().map(|p| p.0.flops()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::TooFewBudgets(distinct.len()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let sst: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    if !(sst > 0.0) {
        return Ok(ScalingFit {
            a: 0.0,
            alpha: opts.alpha_min,
            e: mean,
            fit_r2: None,
            converged: true,
            warnings: vec![String::from("collapse points are all equal; alpha left at its lower bound")],
        });
    }

    let log_c: Vec<f64> = points.iter().map(|p| log(p.0.flops_f64())).collect();
    let log_cg = log_c.iter().sum::<f64>() / n;
    let lx: Vec<f64> = log_c.iter().map(|l| l - log_cg).collect();
    let y_scale = ys.iter().map(|y| fabs(*y)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let objective = |theta: &[f64], grad: &mut [f64]| -> f64 {
        let (ap, alpha, e) = (theta[0], theta[1], theta[2]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut sse = 0.0;
        for (l, y) in lx.iter().zip(&ys) {
            let pw = exp(-alpha * l);
            let r = ap * pw + e - y;
            sse += r * r;
            grad[0] += 2.0 * r * pw;
            grad[1] += 2.0 * r * (-ap * l * pw);
            grad[2] += 2.0 * r;
        }
        sse / sst
    };

    let bounds = Bounds::new(
        vec![f64::NEG_INFINITY, opts.alpha_min, f64::NEG_INFINITY],
        vec![f64::INFINITY, opts.alpha_max, f64::INFINITY],
    )
    .map_err(|_| FitError::NonFiniteData)?;

    let run = |theta0: &[f64]| {
        let scale = [fabs(theta0[0]).max(y_scale), theta0[1].max(0.01), fabs(theta0[2]).max(y_scale)];
        let sb = bounds.scaled(&scale);
        let z0: Vec<f64> = theta0.iter().zip(&scale).map(|(t, s)| t / s).collect();
        let mut theta = [0.0; 3];
        let mut g = [0.0; 3];
        let m = minimize(
            |z: &[f64], gz: &mut [f64]| {
                for i in 0..3 {
                    theta[i] = z[i] * scale[i];
                }
                let v = objective(&theta, &mut g);
                for i in 0..3 {
                    gz[i] = g[i] * scale[i] / sst;
                }
                v
            },
            &z0,
            &sb,
            &opts.optimizer,
        );
        let params: Vec<f64> = m.x.iter().zip(&scale).map(|(z, s)| z * s).collect();
        (params, m.f, m.converged())
    };

    let a_lo = log(opts.alpha_min.max(1e-3));
    let a_hi = log(opts.alpha_max.min(3.0));
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for i in 0..12 {
        let alpha = exp(a_lo + (a_hi - a_lo) * i as f64 / 11.0);
        let x: Vec<f64> = lx.iter().map(|l| exp(-alpha * l)).collect();
        let (ap, e) = line_fit(&x, &ys);
        let r = run(&[ap, alpha, e]);
        if r.1.is_finite() && best.as_ref().is_none_or(|b| r.1 < b.1) {
            best = Some(r);
        }
    }
    let (mut params, mut f, mut converged) = best.ok_or(FitError::NotConverged)?;
    let polished = run(&params);
    if polished.1 <= f {
        (params, f, converged) = polished;
    }

    let alpha = params[1];
    let a = params[0] * exp(alpha * log_cg);
    let e = params[2];
    let mut warnings = Vec::new();
    if e < 0.0 {
        warnings.push(String::from("negative asymptote E; large-budget extrapolations may be negative"));
    }
    if alpha <= opts.alpha_min * (1.0 + 1e-9) {
        warnings.push(String::from("alpha at its lower bound"));
    }
    if !converged {
        warnings.push(String::from("optimizer stopped before convergence"));
    }
    Ok(ScalingFit { a, alpha, e, fit_r2: Some(1.0 - f), converged, warnings })
}

/// Predicted collapse point `A / C^alpha + E` at `budget`.
pub fn extrapolate_frequency(fit: &ScalingFit, budget: ComputeBudget) -> f64 {
    fit.predict(budget.flops_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flops_exact() {
        let b = ComputeBudget::new(137_177_856, 2_743_557_120);
        assert_eq!(b.flops(), 6 * 137_177_856u128 * 2_743_557_120u128);
        assert_eq!(b.flops(), 2_258_131_701_210_808_320u128);
    }

    #[test]
    fn too_few_and_flat() {
        let p = |n| (ComputeBudget::new(n, 1000), 5.0);
        assert_eq!(fit_scaling_law(&[p(1), p(2)], &ScalingOptions::default()), Err(FitError::TooFewBudgets(2)));
        assert_eq!(fit_scaling_law(&[p(1), p(1), p(2)], &ScalingOptions::default()), Err(FitError::TooFewBudgets(2)));
        let flat = fit_scaling_law(&[p(1), p(2), p(3)], &ScalingOptions::default()).unwrap();
        assert_eq!(flat.alpha, 1e-6);
        assert_eq!(flat.e, 5.0);
        assert!(!flat.warnings.is_empty());
    }

    #[test]
    fn constant_law_and_monotonicity() {
        let only_e = ScalingFit { a: 0.0, alpha: 0.3, e: 42.0, fit_r2: None, converged: true, warnings: Vec::new() };
        assert_eq!(extrapolate_frequency(&only_e, ComputeBudget::new(10, 10)), 42.0);
        let law = ScalingFit { a: 1e9, alpha: 0.45, e: 50.0, fit_r2: None, converged: true, warnings: Vec::new() };
        let mut prev = f64::INFINITY;
        for n in [1e8 as u64, 1e9 as u64, 1e10 as u64, 1e11 as u64] {
            let v = extrapolate_frequency(&law, ComputeBudget::new(n, 58_000_000_000));
            assert!(v < prev);
            prev = v;
        }
    }
}
