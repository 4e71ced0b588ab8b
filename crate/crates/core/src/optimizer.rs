//! Bounded Nelder-Mead downhill simplex with seeded multi-start.
//!
//! Box bounds are enforced by clamping every candidate vertex coordinate-wise.
//! Non-finite objective values are treated as `+∞`, so a vertex that lands in an
//! invalid region is simply the worst vertex and gets replaced.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Volume (relative to `diameter^d`) below which a not-yet-converged simplex is rebuilt
/// around its best vertex.
pub const DEGENERATE_VOLUME: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Spread of objective values across the simplex, scaled by `1 + |f_best|`.
    pub f_tol: f64,
    /// Largest coordinate distance of any vertex from the best vertex.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Offsets of the initial vertices from `x0`, one per dimension.
    pub initial_step: Vec<f64>,
    pub max_restarts: usize,
}

impl SimplexConfig {
    pub fn with_steps(initial_step: Vec<f64>) -> Self {
        SimplexConfig {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            f_tol: 1e-12,
            x_tol: 1e-10,
            max_iter: 5000,
            initial_step,
            max_restarts: 10,
        }
    }

    // Negated comparisons so that NaN coefficients are rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Optimizer(msg));
        if !(self.reflection > 0.0) {
            return bad(format!("reflection must be > 0, got {}", self.reflection));
        }
        if !(self.expansion > 1.0) {
            return bad(format!("expansion must be > 1, got {}", self.expansion));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad(format!("contraction must be in (0, 1), got {}", self.contraction));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink must be in (0, 1), got {}", self.shrink));
        }
        if !(self.f_tol >= 0.0 && self.x_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if self.initial_step.len() != dim {
            return bad(format!(
                "initial_step has {} entries for a {}-dimensional problem",
                self.initial_step.len(),
                dim
            ));
        }
        if self.initial_step.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
            return bad("initial steps must be finite and non-zero".into());
        }
        Ok(())
    }
}

/// Per-dimension box. Infinite entries mean unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Optimizer("lower/upper bound length mismatch".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
            return Err(Error::Optimizer("every lower bound must be <= its upper bound".into()));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((xi, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*lo, *hi);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Best objective value after each iteration.
    pub history: Vec<f64>,
}

fn sanitize(f: f64) -> f64 {
    if f.is_finite() {
        f
    } else {
        f64::INFINITY
    }
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn build<F: Fn(&[f64]) -> f64>(
        objective: &F,
        center: &[f64],
        steps: &[f64],
        bounds: &Bounds,
    ) -> Self {
        let mut points = vec![center.to_vec()];
        for (i, step) in steps.iter().enumerate() {
            let mut p = center.to_vec();
            p[i] += step;
            bounds.clamp(&mut p);
            if p[i] == center[i] {
                p[i] = center[i] - step;
                bounds.clamp(&mut p);
            }
            points.push(p);
        }
        let values = points.iter().map(|p| sanitize(objective(p))).collect();
        Simplex { points, values }
    }

    /// Stable sort by objective value; equal values keep their previous order.
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn f_spread(&self) -> f64 {
        let best = self.values[0];
        let worst = *self.values.last().unwrap();
        if best.is_infinite() || worst.is_infinite() {
            return f64::INFINITY;
        }
        (worst - best) / (1.0 + best.abs())
    }

    fn diameter(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .flat_map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    fn is_degenerate(&self) -> bool {
        let diameter = self.diameter();
        if diameter == 0.0 {
            return true;
        }
        let dim = self.points.len() as i32 - 1;
        self.volume() / diameter.powi(dim) < DEGENERATE_VOLUME
    }

    fn volume(&self) -> f64 {
        let d = self.points.len() - 1;
        let base = &self.points[0];
        let mut m: Vec<Vec<f64>> = self.points[1..]
            .iter()
            .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let det = determinant(&mut m);
        let factorial: f64 = (1..=d).map(|k| k as f64).product();
        det.abs() / factorial
    }
}

fn determinant(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (x, &p) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *x -= factor * p;
            }
        }
    }
    det
}

/// Minimizes `objective` starting from `x0`.
pub fn nelder_mead<F>(objective: F, x0: &[f64], config: &SimplexConfig, bounds: &Bounds) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::Optimizer("dimension must be at least 1".into()));
    }
    if bounds.dim() != dim {
        return Err(Error::Optimizer(format!(
            "bounds have {} dimensions, x0 has {}",
            bounds.dim(),
            dim
        )));
    }
    config.validate(dim)?;
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    if !objective(&start).is_finite() {
        return Err(Error::Optimizer("objective is not finite at the starting point".into()));
    }

    let mut simplex = Simplex::build(&objective, &start, &config.initial_step, bounds);
    simplex.order();

    let mut iterations = 0;
    let mut restarts_used = 0;
    let mut converged = false;
    let mut history = Vec::new();

    while iterations < config.max_iter {
        if simplex.f_spread() < config.f_tol && simplex.diameter() < config.x_tol {
            converged = true;
            break;
        }
        if restarts_used < config.max_restarts && simplex.is_degenerate() {
            let best = simplex.points[0].clone();
            simplex = Simplex::build(&objective, &best, &config.initial_step, bounds);
            simplex.order();
            restarts_used += 1;
        }
        iterations += 1;
        step(&objective, &mut simplex, config, bounds);
        simplex.order();
        history.push(simplex.values[0]);
    }
    if !converged && simplex.f_spread() < config.f_tol && simplex.diameter() < config.x_tol {
        converged = true;
    }

    let x = simplex.points.swap_remove(0);
    let f = objective(&x);
    Ok(OptResult {
        x,
        f,
        iterations,
        converged,
        restarts_used,
        history,
    })
}

/// One reflect / expand / contract / shrink iteration on an ordered simplex.
fn step<F: Fn(&[f64]) -> f64>(objective: &F, s: &mut Simplex, cfg: &SimplexConfig, bounds: &Bounds) {
    let n = s.points.len() - 1;
    let dim = n;
    let mut centroid = vec![0.0; dim];
    for p in &s.points[..n] {
        for (c, v) in centroid.iter_mut().zip(p) {
            *c += v / n as f64;
        }
    }
    let worst = s.points[n].clone();
    let f_worst = s.values[n];
    let f_best = s.values[0];
    let f_second = s.values[n - 1];

    let along = |coef: f64, towards: &[f64]| -> Vec<f64> {
        let mut p: Vec<f64> = centroid
            .iter()
            .zip(towards)
            .map(|(c, t)| c + coef * (t - c))
            .collect();
        bounds.clamp(&mut p);
        p
    };
    let eval = |p: &[f64]| sanitize(objective(p));

    let reflected = along(-cfg.reflection, &worst);
    let f_r = eval(&reflected);

    if f_r < f_best {
        let expanded = along(cfg.expansion, &reflected);
        let f_e = eval(&expanded);
        if f_e < f_r {
            s.points[n] = expanded;
            s.values[n] = f_e;
        } else {
            s.points[n] = reflected;
            s.values[n] = f_r;
        }
        return;
    }
    if f_r < f_second {
        s.points[n] = reflected;
        s.values[n] = f_r;
        return;
    }
    if f_r < f_worst {
        let outside = along(cfg.contraction, &reflected);
        let f_c = eval(&outside);
        if f_c <= f_r {
            s.points[n] = outside;
            s.values[n] = f_c;
            return;
        }
    } else {
        let inside = along(cfg.contraction, &worst);
        let f_c = eval(&inside);
        if f_c < f_worst {
            s.points[n] = inside;
            s.values[n] = f_c;
            return;
        }
    }

    let best = s.points[0].clone();
    for i in 1..=n {
        let mut p: Vec<f64> = best
            .iter()
            .zip(&s.points[i])
            .map(|(b, x)| b + cfg.shrink * (x - b))
            .collect();
        bounds.clamp(&mut p);
        s.values[i] = eval(&p);
        s.points[i] = p;
    }
}

/// Deterministic pseudo-random points inside a finite region.
pub fn seeded_starts(region: &Bounds, n_starts: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !region.is_finite() {
        return Err(Error::Optimizer("start region must be finite in every dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_starts)
        .map(|_| {
            region
                .lower()
                .iter()
                .zip(region.upper())
                .map(|(lo, hi)| if lo == hi { *lo } else { rng.random_range(*lo..*hi) })
                .collect()
        })
        .collect())
}

/// Runs [`nelder_mead`] from `n_starts` seeded points of `start_region` (in parallel) and
/// returns the best run; ties go to the earliest start.
pub fn multi_start<F>(
    objective: F,
    bounds: &Bounds,
    start_region: &Bounds,
    n_starts: usize,
    seed: u64,
    config: &SimplexConfig,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_starts == 0 {
        return Err(Error::Optimizer("n_starts must be at least 1".into()));
    }
    let starts = seeded_starts(start_region, n_starts, seed)?;
    let runs: Vec<Result<OptResult>> = starts
        .par_iter()
        .map(|x0| nelder_mead(&objective, x0, config, bounds))
        .collect();

    let mut best: Option<OptResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                let better = best.as_ref().is_none_or(|b| sanitize(r.f) < sanitize(b.f));
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("n_starts >= 1"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl_1d() {
        let cfg = SimplexConfig::with_steps(vec![1.0]);
        let r = nelder_mead(|x| (x[0] - 2.0).powi(2), &[10.0], &cfg, &Bounds::unbounded(1)).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 2.0).abs() <= 1e-6);
        assert!(r.f <= 1e-12);
    }

    #[test]
    fn rosenbrock_2d() {
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg, &Bounds::unbounded(2)).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() <= 1e-5 && (r.x[1] - 1.0).abs() <= 1e-5, "{:?}", r.x);
    }

    #[test]
    fn best_value_never_increases() {
        let cfg = SimplexConfig::with_steps(vec![0.5, 0.5]);
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg, &Bounds::unbounded(2)).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn clamping_respects_bounds() {
        let bounds = Bounds::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        // unconstrained minimum at (3, 0): the bound r <= 1 is active
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2) + x[1] * x[1], &[0.5, 0.5], &cfg, &bounds).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!(r.x[1].abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn nan_regions_are_avoided() {
        let cfg = SimplexConfig::with_steps(vec![0.5]);
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.1).powi(2) };
        let r = nelder_mead(f, &[1.0], &cfg, &Bounds::unbounded(1)).unwrap();
        assert!(r.f.is_finite());
        assert!((r.x[0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let cfg = SimplexConfig::with_steps(vec![0.5]);
        assert!(nelder_mead(|_| f64::INFINITY, &[1.0], &cfg, &Bounds::unbounded(1)).is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = SimplexConfig::with_steps(vec![0.5]);
        cfg.contraction = 1.5;
        assert!(nelder_mead(|x| x[0] * x[0], &[1.0], &cfg, &Bounds::unbounded(1)).is_err());
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        cfg.max_iter = 5;
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg, &Bounds::unbounded(2)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert_eq!(r.f, rosenbrock(&r.x));
    }

    #[test]
    fn degenerate_simplex_is_rebuilt() {
        // every vertex clamps onto the plane x0 = 0, so the simplex has zero volume
        let bounds = Bounds::new(vec![0.0, f64::NEG_INFINITY], vec![0.0, f64::INFINITY]).unwrap();
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        let r = nelder_mead(|x| (x[1] - 0.3).powi(2), &[0.0, 2.0], &cfg, &bounds).unwrap();
        assert!(r.restarts_used > 0);
        assert!(r.restarts_used <= cfg.max_restarts);
        assert!((r.x[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn scaled_objective_has_same_argmin() {
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        let b = Bounds::unbounded(2);
        let a = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg, &b).unwrap();
        let s = nelder_mead(|x| 7.5 * rosenbrock(x), &[-1.2, 1.0], &cfg, &b).unwrap();
        assert!(a.x.iter().zip(&s.x).all(|(p, q)| (p - q).abs() < 1e-6));
    }

    #[test]
    fn multi_start_single_equals_plain_run() {
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        let b = Bounds::unbounded(2);
        let region = Bounds::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let ms = multi_start(rosenbrock, &b, &region, 1, 99, &cfg).unwrap();
        let x0 = &seeded_starts(&region, 1, 99).unwrap()[0];
        let nm = nelder_mead(rosenbrock, x0, &cfg, &b).unwrap();
        assert_eq!(ms, nm);
    }

    #[test]
    fn multi_start_is_deterministic() {
        let cfg = SimplexConfig::with_steps(vec![0.1, 0.1]);
        let b = Bounds::unbounded(2);
        let region = Bounds::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let f = |x: &[f64]| (x[0] * 3.0).sin() + 0.1 * x[0] * x[0] + x[1] * x[1];
        let a = multi_start(f, &b, &region, 8, 1234, &cfg).unwrap();
        let c = multi_start(f, &b, &region, 8, 1234, &cfg).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), c.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a, c);
        assert!(multi_start(f, &b, &region, 0, 1, &cfg).is_err());
        assert!(multi_start(f, &b, &Bounds::unbounded(2), 2, 1, &cfg).is_err());
    }
}
