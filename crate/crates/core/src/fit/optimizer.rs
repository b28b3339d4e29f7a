//! Bounded limited-memory quasi-Newton minimizer.
//!
//! Each iteration builds an L-BFGS direction from the two-loop recursion,
//! freezes variables that sit on a bound with the gradient pushing outward,
//! caps the step at the first bound crossed, and runs a strong-Wolfe line
//! search on the capped segment. When the quasi-Newton direction fails, the
//! memory is discarded and a projected-gradient backtracking step is tried.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("lower and upper bounds have different lengths")]
    LengthMismatch,
    #[error("lower bound exceeds upper bound for variable {0}")]
    Inverted(usize),
}

/// Box constraints; infinite entries mean unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BoundsError> {
        if lower.len() != upper.len() {
            return Err(BoundsError::LengthMismatch);
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(BoundsError::Inverted(i));
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(n: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(l, u);
        }
    }

    /// Divide every bound by a positive per-variable scale.
    pub fn scaled(&self, scale: &[f64]) -> Self {
        Self {
            lower: self.lower.iter().zip(scale).map(|(l, s)| l / s).collect(),
            upper: self.upper.iter().zip(scale).map(|(u, s)| u / s).collect(),
        }
    }

    /// Infinity norm of the projected gradient step `P(x - g) - x`.
    pub fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..x.len() {
            let step = (x[i] - g[i]).clamp(self.lower[i], self.upper[i]) - x[i];
            m = m.max(step.abs());
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbConfig {
    pub memory: usize,
    pub max_iter: usize,
    pub max_evals: usize,
    /// Stop when the projected gradient infinity norm drops below this.
    pub pgtol: f64,
    /// Stop when the relative decrease of the objective drops below this.
    pub ftol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for LbfgsbConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 3000,
            max_evals: 30_000,
            pgtol: 1e-12,
            ftol: 1e-15,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ProjectedGradient,
    FunctionChange,
    MaxIterations,
    MaxEvaluations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub projected_gradient: f64,
}

impl Minimum {
    /// Converged to a stationary point, or stalled at machine precision there.
    pub fn converged(&self) -> bool {
        match self.termination {
            Termination::ProjectedGradient | Termination::FunctionChange => true,
            Termination::LineSearchFailed => self.projected_gradient <= 1e-6 * (1.0 + self.f.abs()),
            _ => false,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H g` from the stored curvature pairs.
fn two_loop(g: &[f64], mem: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = vec![0.0; mem.len()];
    for (i, p) in mem.iter().enumerate().rev() {
        alpha[i] = p.rho * dot(&p.s, &q);
        for (qj, yj) in q.iter_mut().zip(&p.y) {
            *qj -= alpha[i] * yj;
        }
    }
    if let Some(p) = mem.back() {
        let gamma = dot(&p.s, &p.y) / dot(&p.y, &p.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, p) in mem.iter().enumerate() {
        let beta = p.rho * dot(&p.y, &q);
        for (qj, sj) in q.iter_mut().zip(&p.s) {
            *qj += sj * (alpha[i] - beta);
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Largest `t` with `x + t d` inside the box.
fn max_step(x: &[f64], d: &[f64], b: &Bounds) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            t = t.min((b.upper[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            t = t.min((b.lower[i] - x[i]) / d[i]);
        }
    }
    t.max(0.0)
}

#[derive(Clone)]
struct Point {
    t: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

struct Search<'a, F> {
    obj: &'a mut F,
    bounds: &'a Bounds,
    x0: &'a [f64],
    d: &'a [f64],
    t_max: f64,
    evals: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Search<'_, F> {
    fn at(&mut self, t: f64) -> Point {
        let mut x: Vec<f64> = self.x0.iter().zip(self.d).map(|(xi, di)| xi + t * di).collect();
        self.bounds.project(&mut x);
        if t >= self.t_max {
            // Land exactly on every bound reached at the cap, so the next
            // iteration sees those variables as active.
            for i in 0..x.len() {
                let di = self.d[i];
                let target = if di > 0.0 { self.bounds.upper[i] } else if di < 0.0 { self.bounds.lower[i] } else { continue };
                let ti = (target - self.x0[i]) / di;
                if ti <= self.t_max * (1.0 + 1e-10) {
                    x[i] = target;
                }
            }
        }
        let mut g = vec![0.0; x.len()];
        let f = (self.obj)(&x, &mut g);
        self.evals += 1;
        let dphi = dot(&g, self.d);
        Point { t, x, f, g, dphi }
    }
}

/// Minimizer of the cubic interpolating `(a, fa, da)` and `(b, fb, db)`,
/// safeguarded into the middle 80% of the interval.
fn cubic_step(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.t, hi.t);
    let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dphi * hi.dphi;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * libm::sqrt(disc);
    let t = b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
    let (l, u) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (u - l);
    if t.is_finite() && t > l + margin && t < u - margin {
        t
    } else {
        mid
    }
}

fn strong_wolfe<F: FnMut(&[f64], &mut [f64]) -> f64>(
    s: &mut Search<'_, F>,
    f0: f64,
    dphi0: f64,
    t_init: f64,
    t_max: f64,
    cfg: &LbfgsbConfig,
) -> Option<Point> {
    // Near the optimum the sufficient-decrease test drowns in rounding, so
    // fall back on the slope-based approximate Wolfe test there.
    let f_noise = 1e-12 * f0.abs();
    let armijo = |p: &Point| {
        p.f <= f0 + cfg.c1 * p.t * dphi0 || (p.f <= f0 + f_noise && p.dphi <= (2.0 * cfg.c1 - 1.0) * dphi0)
    };
    let curvature = |p: &Point| p.dphi.abs() <= -cfg.c2 * dphi0;

    let origin = Point { t: 0.0, x: s.x0.to_vec(), f: f0, g: Vec::new(), dphi: dphi0 };
    let mut prev = origin;
    let mut t = t_init.min(t_max);
    let (mut lo, mut hi);
    let mut first = true;
    loop {
        let p = s.at(t);
        if !p.f.is_finite() {
            // Pull back towards the origin.
            if t < 1e-20 {
                return None;
            }
            t *= 0.1;
            continue;
        }
        if !armijo(&p) || (!first && p.f >= prev.f) {
            lo = prev;
            hi = p;
            break;
        }
        if curvature(&p) {
            return Some(p);
        }
        if p.dphi >= 0.0 {
            lo = p;
            hi = prev;
            break;
        }
        if t >= t_max {
            return Some(p);
        }
        first = false;
        t = (t * 4.0).min(t_max);
        prev = p;
        if s.evals > cfg.max_evals {
            return (prev.t > 0.0).then_some(prev);
        }
    }

    for _ in 0..60 {
        if (hi.t - lo.t).abs() <= 1e-16 * lo.t.abs().max(hi.t.abs()) {
            break;
        }
        let t = cubic_step(&lo, &hi);
        let p = s.at(t);
        if !p.f.is_finite() || !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p);
            }
            if p.dphi * (hi.t - lo.t) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    (lo.t > 0.0 && lo.f < f0).then_some(lo)
}

/// Backtracking along the projection arc `P(x - t g)`.
fn projected_gradient_step<F: FnMut(&[f64], &mut [f64]) -> f64>(
    obj: &mut F,
    bounds: &Bounds,
    x: &[f64],
    f: f64,
    g: &[f64],
    evals: &mut usize,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let gnorm = libm::sqrt(dot(g, g));
    if !(gnorm > 0.0) {
        return None;
    }
    let mut t = 1.0 / gnorm.max(1.0);
    for _ in 0..60 {
        let mut xt: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - t * gi).collect();
        bounds.project(&mut xt);
        let decrease: f64 = x.iter().zip(&xt).zip(g).map(|((a, b), gi)| gi * (a - b)).sum();
        if decrease <= 0.0 {
            return None;
        }
        let mut gt = vec![0.0; x.len()];
        let ft = obj(&xt, &mut gt);
        *evals += 1;
        if ft.is_finite() && ft <= f - 1e-4 * decrease {
            return Some((xt, ft, gt));
        }
        t *= 0.5;
    }
    None
}

const MAX_STALLS: usize = 5;

/// Minimize `obj` over the box. `obj(x, g)` returns the value and writes the gradient.
pub fn minimize<F>(mut obj: F, x0: &[f64], bounds: &Bounds, cfg: &LbfgsbConfig) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(n, bounds.len(), "start point and bounds differ in dimension");
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = obj(&x, &mut g);
    let mut evals = 1;
    let mut mem: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut stalls = 0usize;

    let finish = |x: Vec<f64>, f: f64, g: Vec<f64>, it: usize, ev: usize, term: Termination| {
        let pg = bounds.projected_gradient_norm(&x, &g);
        Minimum { x, f, grad: g, iterations: it, evaluations: ev, termination: term, projected_gradient: pg }
    };

    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return finish(x, f, g, 0, evals, Termination::NonFinite);
    }

    for iter in 0..cfg.max_iter {
        if bounds.projected_gradient_norm(&x, &g) <= cfg.pgtol {
            return finish(x, f, g, iter, evals, Termination::ProjectedGradient);
        }
        if evals >= cfg.max_evals {
            return finish(x, f, g, iter, evals, Termination::MaxEvaluations);
        }

        let blocked = |i: usize, d: f64| (x[i] <= bounds.lower[i] && d < 0.0) || (x[i] >= bounds.upper[i] && d > 0.0);
        // Quasi-Newton step restricted to the variables free to move.
        let free_g: Vec<f64> = (0..n).map(|i| if blocked(i, -g[i]) { 0.0 } else { g[i] }).collect();
        let mut d = two_loop(&free_g, &mem);
        for i in 0..n {
            if blocked(i, -g[i]) || blocked(i, d[i]) {
                d[i] = 0.0;
            }
        }
        let mut dphi0 = dot(&d, &g);
        if !(dphi0 < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            for i in 0..n {
                if blocked(i, d[i]) {
                    d[i] = 0.0;
                }
            }
            dphi0 = dot(&d, &g);
        }

        let mut next = None;
        if dphi0 < 0.0 {
            let t_max = max_step(&x, &d, bounds);
            if t_max > 0.0 {
                let t_init = if mem.is_empty() {
                    (1.0 / libm::sqrt(dot(&d, &d))).min(1.0)
                } else {
                    1.0
                };
                let mut search = Search { obj: &mut obj, bounds, x0: &x, d: &d, t_max, evals: 0 };
                let found = strong_wolfe(&mut search, f, dphi0, t_init, t_max, cfg);
                evals += search.evals;
                next = found.map(|p| (p.x, p.f, p.g));
            }
        }
        let used_memory = !mem.is_empty();
        if next.is_none() {
            mem.clear();
            next = projected_gradient_step(&mut obj, bounds, &x, f, &g, &mut evals);
        }
        let Some((xn, fn_, gn)) = next else {
            return finish(x, f, g, iter, evals, Termination::LineSearchFailed);
        };
        if gn.iter().any(|v| !v.is_finite()) {
            return finish(x, f, g, iter, evals, Termination::NonFinite);
        }

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&y, &y) && sy > 0.0 {
            if mem.len() == cfg.memory {
                mem.pop_front();
            }
            mem.push_back(Pair { s, y, rho: 1.0 / sy });
        }

        let change = f - fn_;
        let scale = f.abs().max(fn_.abs());
        let newly_active = (0..n).any(|i| {
            let was = x[i] <= bounds.lower[i] || x[i] >= bounds.upper[i];
            !was && (xn[i] <= bounds.lower[i] || xn[i] >= bounds.upper[i])
        });
        x = xn;
        g = gn;
        f = fn_;
        if f == 0.0 {
            return finish(x, f, g, iter + 1, evals, Termination::FunctionChange);
        }
        if !newly_active && change <= cfg.ftol * scale {
            // Objective changes at rounding level; the slope may still be
            // improving, so give up only after a run of stalled steps.
            stalls += 1;
            if stalls >= MAX_STALLS && !used_memory {
                return finish(x, f, g, iter + 1, evals, Termination::FunctionChange);
            }
            if stalls >= MAX_STALLS {
                mem.clear();
            }
        } else {
            stalls = 0;
        }
    }
    finish(x, f, g, cfg.max_iter, evals, Termination::MaxIterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], &Bounds::unbounded(2), &LbfgsbConfig::default());
        assert!(m.converged(), "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn bounded_rosenbrock_sits_on_bound() {
        // With x0 <= 0.5 the optimum is at (0.5, 0.25).
        let b = Bounds::new(vec![-2.0, -2.0], vec![0.5, 2.0]).unwrap();
        let m = minimize(rosenbrock, &[-1.2, 1.0], &b, &LbfgsbConfig::default());
        assert!((m.x[0] - 0.5).abs() < 1e-9, "{m:?}");
        assert!((m.x[1] - 0.25).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn start_outside_box_is_projected() {
        let b = Bounds::new(vec![1.0], vec![2.0]).unwrap();
        let m = minimize(|x: &[f64], g: &mut [f64]| { g[0] = 2.0 * x[0]; x[0] * x[0] }, &[10.0], &b, &LbfgsbConfig::default());
        assert_eq!(m.x, vec![1.0]);
        assert!(m.converged());
    }

    #[test]
    fn bounds_validation() {
        assert_eq!(Bounds::new(vec![1.0], vec![0.0]), Err(BoundsError::Inverted(0)));
        assert_eq!(Bounds::new(vec![1.0], vec![]), Err(BoundsError::LengthMismatch));
    }

    #[test]
    fn non_finite_start() {
        let m = minimize(|_: &[f64], _: &mut [f64]| f64::NAN, &[0.0], &Bounds::unbounded(1), &LbfgsbConfig::default());
        assert_eq!(m.termination, Termination::NonFinite);
        assert!(!m.converged());
    }
}
