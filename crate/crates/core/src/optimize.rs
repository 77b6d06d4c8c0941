//! Local minimizers over finite-difference gradients, with seeded restarts.

use std::collections::BTreeMap;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::schedule::Schedule;

pub const FD_STEP: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 500;
/// Standard deviation of restart perturbations, in optimizer parameter units.
pub const RESTART_SPREAD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub fd_step: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { fd_step: FD_STEP, grad_tol: GRAD_TOL, max_iter: MAX_ITER }
    }
}

pub type Objective<'a> = dyn Fn(&[f64]) -> Result<f64> + 'a;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Objective after each accepted iteration, starting value first.
    pub trace: Vec<f64>,
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn minimize(&self, f: &Objective<'_>, x0: &[f64], settings: &Settings) -> Result<Minimum>;
}

struct Counted<'a, 'b> {
    f: &'a Objective<'b>,
    evaluations: std::cell::Cell<usize>,
    h: f64,
}

#[derive(Clone, Debug)]
struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

impl Counted<'_, '_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        Ok(v)
    }

    fn point(&self, x: Vec<f64>) -> Result<Point> {
        let f = self.value(&x)?;
        let mut g = vec![0.0; x.len()];
        let mut probe = x.clone();
        for i in 0..x.len() {
            probe[i] = x[i] + self.h;
            let up = self.value(&probe)?;
            probe[i] = x[i] - self.h;
            let down = self.value(&probe)?;
            probe[i] = x[i];
            g[i] = (up - down) / (2.0 * self.h);
        }
        Ok(Point { x, f, g })
    }
}

/// Central differences with step `h`.
pub fn central_gradient(f: &Objective<'_>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let c = Counted { f, evaluations: std::cell::Cell::new(0), h };
    Ok(c.point(x.to_vec())?.g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn step(x: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Strong-Wolfe line search along the descent direction `d`.
fn line_search(c: &Counted<'_, '_>, start: &Point, d: &[f64], alpha0: f64, c2: f64) -> Result<Option<Point>> {
    const C1: f64 = 1e-4;
    const MAX_BRACKET: usize = 30;
    const MAX_ZOOM: usize = 40;
    let d0 = dot(&start.g, d);
    if d0 >= 0.0 {
        return Ok(None);
    }
    let armijo = |p: &Point, a: f64| p.f <= start.f + C1 * a * d0;
    let mut best: Option<Point> = None;
    let keep = |p: &Point, best: &mut Option<Point>| {
        if p.f < start.f && best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(p.clone());
        }
    };

    let (mut a_prev, mut p_prev) = (0.0, start.clone());
    let mut a = alpha0;
    let mut bracket = None;
    for i in 0..MAX_BRACKET {
        let p = c.point(step(&start.x, d, a))?;
        keep(&p, &mut best);
        let dp = dot(&p.g, d);
        if !armijo(&p, a) || (i > 0 && p.f >= p_prev.f) {
            bracket = Some(((a_prev, p_prev), (a, p)));
            break;
        }
        if dp.abs() <= -c2 * d0 {
            return Ok(Some(p));
        }
        if dp >= 0.0 {
            bracket = Some(((a, p), (a_prev, p_prev)));
            break;
        }
        a_prev = a;
        p_prev = p;
        a *= 2.0;
    }
    let Some(((mut lo, mut p_lo), (mut hi, p_hi))) = bracket else {
        return Ok(best);
    };
    let mut f_hi = p_hi.f;
    for _ in 0..MAX_ZOOM {
        let dlo = dot(&p_lo.g, d);
        // minimizer of the quadratic through f(lo), f'(lo) and the bracket end, safeguarded
        let width = hi - lo;
        let mut trial = lo + 0.5 * width;
        let denom = 2.0 * (f_hi - p_lo.f - dlo * width);
        if denom.abs() > 0.0 {
            let q = lo - dlo * width * width / denom;
            let (a_min, a_max) = (lo.min(hi), lo.max(hi));
            let margin = 0.1 * width.abs();
            if q > a_min + margin && q < a_max - margin {
                trial = q;
            }
        }
        let p = c.point(step(&start.x, d, trial))?;
        keep(&p, &mut best);
        if !armijo(&p, trial) || p.f >= p_lo.f {
            hi = trial;
            f_hi = p.f;
        } else {
            let dp = dot(&p.g, d);
            if dp.abs() <= -c2 * d0 {
                return Ok(Some(p));
            }
            if dp * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = p_lo.f;
            }
            lo = trial;
            p_lo = p;
        }
        if (hi - lo).abs() < 1e-14 * lo.abs().max(1.0) {
            break;
        }
    }
    Ok(best)
}

/// Quasi-Newton with the inverse-Hessian BFGS update.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bfgs;

impl Optimizer for Bfgs {
    fn name(&self) -> &'static str {
        "bfgs"
    }

    fn minimize(&self, f: &Objective<'_>, x0: &[f64], settings: &Settings) -> Result<Minimum> {
        let c = Counted { f, evaluations: std::cell::Cell::new(0), h: settings.fd_step };
        let n = x0.len();
        let identity = |scale: f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| if i == j { scale } else { 0.0 }).collect()).collect()
        };
        let mut cur = c.point(x0.to_vec())?;
        let mut h = identity(1.0);
        let mut trace = vec![cur.f];
        let mut iterations = 0;
        let mut fresh = true;
        while iterations < settings.max_iter && max_abs(&cur.g) >= settings.grad_tol {
            let d: Vec<f64> = h.iter().map(|row| -dot(row, &cur.g)).collect();
            let next = match line_search(&c, &cur, &d, 1.0, 0.9)? {
                Some(p) => p,
                None if !fresh => {
                    debug!("bfgs: line search failed, resetting curvature");
                    h = identity(1.0);
                    fresh = true;
                    continue;
                }
                None => break,
            };
            let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                if fresh {
                    h = identity(sy / dot(&y, &y));
                }
                let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
                let yhy = dot(&y, &hy);
                let rho = 1.0 / sy;
                for i in 0..n {
                    for j in 0..n {
                        h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                    }
                }
                fresh = false;
            }
            cur = next;
            trace.push(cur.f);
            iterations += 1;
        }
        Ok(Minimum {
            converged: max_abs(&cur.g) < settings.grad_tol,
            grad_norm: max_abs(&cur.g),
            x: cur.x,
            value: cur.f,
            iterations,
            evaluations: c.evaluations.get(),
            trace,
        })
    }
}

/// Nonlinear conjugate gradient, Polak-Ribiere with nonnegative beta.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConjugateGradient;

impl Optimizer for ConjugateGradient {
    fn name(&self) -> &'static str {
        "cg"
    }

    fn minimize(&self, f: &Objective<'_>, x0: &[f64], settings: &Settings) -> Result<Minimum> {
        let c = Counted { f, evaluations: std::cell::Cell::new(0), h: settings.fd_step };
        let n = x0.len();
        let mut cur = c.point(x0.to_vec())?;
        let mut d: Vec<f64> = cur.g.iter().map(|v| -v).collect();
        let mut trace = vec![cur.f];
        let mut iterations = 0;
        let mut since_restart = 0;
        let mut alpha0 = 1.0;
        while iterations < settings.max_iter && max_abs(&cur.g) >= settings.grad_tol {
            if dot(&d, &cur.g) >= 0.0 {
                d = cur.g.iter().map(|v| -v).collect();
                since_restart = 0;
            }
            let next = match line_search(&c, &cur, &d, alpha0, 0.1)? {
                Some(p) => p,
                None if since_restart > 0 => {
                    d = cur.g.iter().map(|v| -v).collect();
                    since_restart = 0;
                    continue;
                }
                None => break,
            };
            let gg = dot(&cur.g, &cur.g);
            let beta = if since_restart + 1 >= n.max(1) {
                0.0
            } else {
                (dot(&next.g, &next.g) - dot(&next.g, &cur.g)).max(0.0) / gg
            };
            let slope_prev = dot(&cur.g, &d);
            let moved: f64 = next.x.iter().zip(&cur.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let dn = dot(&d, &d).sqrt();
            d = next.g.iter().zip(&d).map(|(g, dd)| -g + beta * dd).collect();
            since_restart = if beta == 0.0 { 0 } else { since_restart + 1 };
            // next trial step from the previous slope, as in the usual CG heuristic
            let slope_new = dot(&next.g, &d);
            alpha0 = if slope_new < 0.0 && dn > 0.0 { (moved / dn * slope_prev / slope_new).clamp(1e-8, 1e8) } else { 1.0 };
            cur = next;
            trace.push(cur.f);
            iterations += 1;
        }
        Ok(Minimum {
            converged: max_abs(&cur.g) < settings.grad_tol,
            grad_norm: max_abs(&cur.g),
            x: cur.x,
            value: cur.f,
            iterations,
            evaluations: c.evaluations.get(),
            trace,
        })
    }
}

pub type OptimizerBuilder = fn() -> Box<dyn Optimizer>;

#[derive(Clone)]
pub struct OptimizerRegistry {
    builders: BTreeMap<String, OptimizerBuilder>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, builder: OptimizerBuilder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> Vec<String> {
        self.builders.keys().cloned().collect()
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn Optimizer>> {
        let builder = self.builders.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "optimizer",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        Ok(builder())
    }
}

impl Default for OptimizerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("bfgs", || Box::new(Bfgs));
        r.register("cg", || Box::new(ConjugateGradient));
        r
    }
}

/// One local search of a multistart run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: usize,
    pub initial: f64,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub schedule: Schedule,
    /// Objective `(<objective> - E_min) / W` at the start and at the optimum.
    pub initial_objective: f64,
    pub objective: f64,
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
    pub trace: Vec<f64>,
}

/// `(<objective> - E_min) / W` as a function of the scaled parameters.
pub fn scaled_objective<'a>(ansatz: &'a dyn Ansatz, template: &'a Schedule) -> impl Fn(&[f64]) -> Result<f64> + 'a {
    let (gu, bu) = (ansatz.gamma_unit(), ansatz.beta_unit());
    let ham = &ansatz.problem().ham;
    move |x: &[f64]| {
        let s = template.with_params(x, gu, bu)?;
        let state = ansatz.prepare(&s)?;
        let e = state.expectation_diagonal(ansatz.objective())?;
        Ok((e - ham.e_min) / ham.w)
    }
}

/// Local search from `schedule0`, plus `restarts` searches from seeded
/// Gaussian perturbations of it; the lowest objective wins.
pub fn optimize(
    ansatz: &dyn Ansatz,
    schedule0: &Schedule,
    optimizer: &dyn Optimizer,
    restarts: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Optimized> {
    let (gu, bu) = (ansatz.gamma_unit(), ansatz.beta_unit());
    let f = scaled_objective(ansatz, schedule0);
    let x0 = schedule0.to_params(gu, bu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, RESTART_SPREAD).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut best: Option<(usize, Minimum)> = None;
    let mut starts = Vec::with_capacity(restarts + 1);
    let mut initial_objective = f64::NAN;
    for start in 0..=restarts {
        let x: Vec<f64> = if start == 0 { x0.clone() } else { x0.iter().map(|v| v + noise.sample(&mut rng)).collect() };
        let m = optimizer.minimize(&f, &x, settings)?;
        if start == 0 {
            initial_objective = m.trace[0];
        }
        debug!("{} start {start}: {:.3e} -> {:.3e} in {} iterations", optimizer.name(), m.trace[0], m.value, m.iterations);
        starts.push(StartRecord {
            start,
            initial: m.trace[0],
            value: m.value,
            iterations: m.iterations,
            evaluations: m.evaluations,
            converged: m.converged,
        });
        if best.as_ref().is_none_or(|(_, b)| m.value < b.value) {
            best = Some((start, m));
        }
    }
    let (best_start, m) = best.expect("at least one start");
    Ok(Optimized {
        schedule: schedule0.with_params(&m.x, gu, bu)?,
        initial_objective,
        objective: m.value,
        best_start,
        starts,
        trace: m.trace,
    })
}
