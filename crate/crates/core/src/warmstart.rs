//! Warm start: a model-based derivative-free trust-region minimizer applied to
//! a sweep of weighted-sum aggregations, giving a first rough approximation of
//! the Pareto front at very low cost.
//!
//! The minimizer keeps `2n + 1` interpolation points. Each iteration fits a
//! quadratic model that interpolates all of them while changing the previous
//! model Hessian as little as possible (Frobenius norm), takes a truncated
//! conjugate-gradient step inside the trust region, and replaces one
//! interpolation point by the new iterate.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::Result;
use crate::eval::{Component, Evaluator};
use crate::linalg::{clip_into_box, BOX_HI, BOX_LO};
use crate::pareto::{ObjectiveVector, Solution};
use crate::problems::BiObjectiveProblem;
use crate::scalarize::Scalarization;

/// Number of distinct weights in one sweep of [`alpha_schedule`].
pub const SWEEP_LEN: usize = 23;
/// Radius below which the trust-region loop stops.
pub const MIN_RADIUS: f64 = 1e-8;

pub const FIRST_LEG_RADIUS: f64 = 6.0;
pub const LATER_LEG_RADIUS: f64 = 2.0;
pub const FIRST_SWEEP_FTOL: f64 = 1e-3;
pub const REFINED_FTOL: f64 = 1e-4;

/// Weight of restart `i`: `0.5, 0.0, 1.0, 0.95, 0.90, ..., 0.05, 0.0`, then
/// the same list again. The flag is set from the second sweep on, where the
/// smaller stopping tolerance applies.
pub fn alpha_schedule(i: usize) -> (f64, bool) {
    let j = i % SWEEP_LEN;
    let alpha = match j {
        0 => 0.5,
        1 => 0.0,
        2 => 1.0,
        22 => 0.0,
        // 0.95 down to 0.05
        _ => (22 - j) as f64 / 20.0,
    };
    (alpha, i >= SWEEP_LEN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    SmallRadius,
    SmallImprovement,
}

/// Quadratic model `c + gᵀ(x - center) + ½ (x - center)ᵀ H (x - center)`.
#[derive(Clone, Debug)]
pub struct QuadModel {
    pub center: DVector<f64>,
    pub c: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
    scale: f64,
    kkt: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    steps: Vec<DVector<f64>>,
}

impl QuadModel {
    /// Fits the minimum-change model through `points`/`values`, given the
    /// previous Hessian. Returns `None` when the interpolation set is not
    /// poised.
    pub fn fit(points: &[DVector<f64>], values: &[f64], center: &DVector<f64>, h_old: &DMatrix<f64>) -> Option<Self> {
        let m = points.len();
        let n = center.len();
        let raw: Vec<DVector<f64>> = points.iter().map(|y| y - center).collect();
        let scale = raw.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if scale <= 0.0 || !scale.is_finite() {
            return None;
        }
        // work in scaled coordinates s / scale to keep the system well conditioned
        let steps: Vec<DVector<f64>> = raw.iter().map(|s| s / scale).collect();
        let h_old_scaled = h_old * (scale * scale);
        let dim = m + n + 1;
        let mut w = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..m {
            for j in 0..m {
                let d = steps[i].dot(&steps[j]);
                w[(i, j)] = 0.5 * d * d;
            }
            w[(i, m)] = 1.0;
            w[(m, i)] = 1.0;
            for k in 0..n {
                w[(i, m + 1 + k)] = steps[i][k];
                w[(m + 1 + k, i)] = steps[i][k];
            }
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        for j in 0..m {
            rhs[j] = values[j] - 0.5 * steps[j].dot(&(&h_old_scaled * &steps[j]));
        }
        let lu = w.lu();
        let sol = lu.solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut h = h_old_scaled;
        for j in 0..m {
            h += &steps[j] * steps[j].transpose() * sol[j];
        }
        let h = (&h + h.transpose()) * 0.5;
        let model = QuadModel {
            center: center.clone(),
            c: sol[m],
            g: DVector::from_iterator(n, (0..n).map(|k| sol[m + 1 + k] / scale)),
            h: h / (scale * scale),
            scale,
            kkt: lu,
            steps,
        };
        // reject numerically broken fits
        let tol = 1e-6 * values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (y, &v) in points.iter().zip(values) {
            if (model.predict(y) - v).abs() > tol {
                return None;
            }
        }
        Some(model)
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let s = x - &self.center;
        self.c + self.g.dot(&s) + 0.5 * s.dot(&(&self.h * &s))
    }

    /// Values of the minimum-norm Lagrange functions of the interpolation set at `x`.
    fn lagrange_values(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let m = self.steps.len();
        let n = self.center.len();
        let s = (x - &self.center) / self.scale;
        let mut w = DVector::<f64>::zeros(m + n + 1);
        for (j, sj) in self.steps.iter().enumerate() {
            let d = sj.dot(&s);
            w[j] = 0.5 * d * d;
        }
        w[m] = 1.0;
        for k in 0..n {
            w[m + 1 + k] = s[k];
        }
        let t = self.kkt.solve(&w)?;
        Some(t.rows(0, m).into_owned())
    }
}

/// Truncated conjugate gradient for `min gᵀd + ½ dᵀHd` subject to `|d| <= radius`.
pub fn truncated_cg(g: &DVector<f64>, h: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let n = g.len();
    let mut d = DVector::<f64>::zeros(n);
    let mut r = g.clone();
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return d;
    }
    let mut p = -&r;
    let to_boundary = |d: &DVector<f64>, p: &DVector<f64>| {
        let a = p.dot(p);
        let b = 2.0 * d.dot(p);
        let c = d.dot(d) - radius * radius;
        (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)
    };
    for _ in 0..(2 * n) {
        let hp = h * &p;
        let curv = p.dot(&hp);
        if curv <= 0.0 {
            let tau = to_boundary(&d, &p);
            return d + p * tau;
        }
        let rr = r.dot(&r);
        let step = rr / curv;
        let next = &d + &p * step;
        if next.norm() >= radius {
            let tau = to_boundary(&d, &p);
            return d + p * tau;
        }
        d = next;
        let r_new = &r + hp * step;
        if r_new.norm() <= 1e-12 * g_norm {
            break;
        }
        let beta = r_new.dot(&r_new) / rr;
        p = -&r_new + p * beta;
        r = r_new;
    }
    d
}

#[derive(Clone, Debug)]
pub struct TrustRegionOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals_used: usize,
    pub stop: StopReason,
}

/// Relative improvement between two objective values.
fn rel_improvement(prev: f64, new: f64) -> f64 {
    (prev - new) / prev.abs().max(new.abs()).max(1.0)
}

/// Minimizes `f` over the box `[-5, 5]ⁿ` starting from `x0`.
///
/// `f0` is the already known value at `x0`, if any; otherwise `x0` is
/// evaluated first. At most `max_evals` calls to `f` are made. The loop stops
/// when the relative improvement accumulated over the last `n + 1` accepted
/// steps falls below `ftol`, when the radius drops below [`MIN_RADIUS`], or
/// when the budget is exhausted.
pub fn trust_region_minimize<F>(
    mut f: F,
    x0: &[f64],
    f0: Option<f64>,
    radius0: f64,
    ftol: f64,
    max_evals: usize,
) -> Result<TrustRegionOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut used = 0usize;
    let mut points: Vec<DVector<f64>> = Vec::with_capacity(2 * n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(2 * n + 1);
    let mut start = DVector::from_column_slice(x0);
    start.iter_mut().for_each(|v| *v = v.clamp(BOX_LO, BOX_HI));

    let outcome = |points: &[DVector<f64>], values: &[f64], used, stop| {
        let b = argmin(values);
        TrustRegionOutcome {
            best_x: points[b].iter().copied().collect(),
            best_f: values[b],
            evals_used: used,
            stop,
        }
    };

    match f0 {
        Some(v) => {
            points.push(start.clone());
            values.push(v);
        }
        None => {
            if max_evals == 0 {
                return Ok(TrustRegionOutcome {
                    best_x: start.iter().copied().collect(),
                    best_f: f64::INFINITY,
                    evals_used: 0,
                    stop: StopReason::Budget,
                });
            }
            values.push(f(start.as_slice())?);
            points.push(start.clone());
            used += 1;
        }
    }

    // initial set: two points per axis, on both sides when the box allows it
    for i in 0..n {
        let up = (BOX_HI - start[i]).min(radius0);
        let down = (start[i] - BOX_LO).min(radius0);
        let offsets = if up < 1e-3 * radius0 {
            [-down, -0.5 * down]
        } else if down < 1e-3 * radius0 {
            [up, 0.5 * up]
        } else {
            [up, -down]
        };
        for off in offsets {
            if used >= max_evals {
                return Ok(outcome(&points, &values, used, StopReason::Budget));
            }
            let mut y = start.clone();
            y[i] += off;
            values.push(f(y.as_slice())?);
            points.push(y);
            used += 1;
        }
    }

    let mut radius = radius0;
    let mut fix_geometry = false;
    let mut h_prev = DMatrix::<f64>::zeros(n, n);
    let mut best = argmin(&values);
    let mut history = vec![values[0]];
    if values[best] < values[0] {
        history.push(values[best]);
    }
    let window = n + 1;
    let small_improvement = |history: &[f64]| {
        let last = history.len() - 1;
        if ftol.is_infinite() {
            return true;
        }
        last >= window && rel_improvement(history[last - window], history[last]) < ftol
    };
    if small_improvement(&history) {
        return Ok(outcome(&points, &values, used, StopReason::SmallImprovement));
    }

    loop {
        if used >= max_evals {
            return Ok(outcome(&points, &values, used, StopReason::Budget));
        }
        if radius < MIN_RADIUS {
            return Ok(outcome(&points, &values, used, StopReason::SmallRadius));
        }
        let center = points[best].clone();
        let model = QuadModel::fit(&points, &values, &center, &h_prev);
        let far = farthest(&points, &center);
        let far_dist = (&points[far] - &center).norm();

        let mut trial: Option<(DVector<f64>, f64)> = None;
        if let (Some(model), false) = (&model, std::mem::take(&mut fix_geometry)) {
            let d = truncated_cg(&model.g, &model.h, radius);
            let mut x = &center + &d;
            clip_into_box(x.as_mut_slice());
            let step = &x - &center;
            let pred = -(model.g.dot(&step) + 0.5 * step.dot(&(&model.h * &step)));
            if step.norm() >= 1e-3 * radius && pred > 0.0 {
                trial = Some((x, pred));
            }
        }

        match trial {
            Some((x, pred)) => {
                let model = model.as_ref().unwrap();
                let fx = f(x.as_slice())?;
                used += 1;
                let ratio = (values[best] - fx) / pred;
                let drop = replacement_index(model, &points, &center, &x, radius, best, fx < values[best]);
                h_prev = model.h.clone();
                points[drop] = x;
                values[drop] = fx;
                let dnorm = (&points[drop] - &center).norm();
                if ratio <= 0.1 {
                    // a poor prediction with stale far points is blamed on the
                    // geometry first; the radius shrinks once the set is local
                    if far_dist > 2.0 * radius && drop != far {
                        fix_geometry = true;
                    } else {
                        radius = (0.5 * radius).min(dnorm.max(0.1 * radius));
                    }
                } else if ratio <= 0.7 {
                    radius = (0.5 * radius).max(dnorm);
                } else {
                    radius = (0.5 * radius).max(2.0 * dnorm).min(radius0);
                }
                if fx < values[best] {
                    best = drop;
                    history.push(fx);
                    if small_improvement(&history) {
                        return Ok(outcome(&points, &values, used, StopReason::SmallImprovement));
                    }
                }
            }
            None if far_dist > 2.0 * radius || model.is_none() => {
                // geometry step: move the farthest point next to the center
                let x = geometry_point(model.as_ref(), &center, &points[far], far, radius);
                let fx = f(x.as_slice())?;
                used += 1;
                if let Some(m) = &model {
                    h_prev = m.h.clone();
                }
                points[far] = x;
                values[far] = fx;
                if fx < values[best] {
                    best = far;
                    history.push(fx);
                    if small_improvement(&history) {
                        return Ok(outcome(&points, &values, used, StopReason::SmallImprovement));
                    }
                }
            }
            None => {
                if let Some(m) = &model {
                    h_prev = m.h.clone();
                }
                radius *= 0.5;
            }
        }
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut b = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[b] {
            b = i;
        }
    }
    b
}

fn farthest(points: &[DVector<f64>], center: &DVector<f64>) -> usize {
    let mut idx = 0;
    let mut dist = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d = (p - center).norm();
        if d > dist {
            dist = d;
            idx = i;
        }
    }
    idx
}

/// Interpolation point to drop for a new point `x`: largest Lagrange value,
/// weighted up for points far outside the trust region. The current best is
/// kept unless `x` improves on it.
fn replacement_index(
    model: &QuadModel,
    points: &[DVector<f64>],
    center: &DVector<f64>,
    x: &DVector<f64>,
    radius: f64,
    best: usize,
    x_is_better: bool,
) -> usize {
    let lag = model.lagrange_values(x);
    let mut idx = usize::MAX;
    let mut score = -1.0;
    for (j, p) in points.iter().enumerate() {
        if j == best && !x_is_better {
            continue;
        }
        let dist = (p - center).norm() / radius;
        let l = lag.as_ref().map_or(1.0, |v| v[j].abs());
        let s = l.max(1e-10) * dist.max(1.0).powi(2);
        if s > score {
            score = s;
            idx = j;
        }
    }
    if idx == usize::MAX {
        farthest(points, center)
    } else {
        idx
    }
}

/// Candidate within the trust region that maximizes the magnitude of the
/// Lagrange function of the point being replaced.
fn geometry_point(
    model: Option<&QuadModel>,
    center: &DVector<f64>,
    far_point: &DVector<f64>,
    far: usize,
    radius: f64,
) -> DVector<f64> {
    let n = center.len();
    let mut candidates = Vec::with_capacity(2 * n + 2);
    let towards = far_point - center;
    if towards.norm() > 0.0 {
        let u = &towards / towards.norm();
        candidates.push(center + &u * radius);
        candidates.push(center - &u * radius);
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut y = center.clone();
            y[i] += sign * radius;
            candidates.push(y);
        }
    }
    for c in candidates.iter_mut() {
        clip_into_box(c.as_mut_slice());
    }
    let score = |y: &DVector<f64>| -> f64 {
        model
            .and_then(|m| m.lagrange_values(y))
            .map_or((y - center).norm(), |l| l[far].abs())
    };
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let s = score(c);
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    candidates.swap_remove(best)
}

/// Trust-region minimization of one aggregation, evaluating through `ev`.
/// Returns the best solution found (by aggregated value, including `start`)
/// and the number of evaluations used.
pub fn minimize_scalarized(
    ev: &mut Evaluator<'_>,
    s: &Scalarization,
    start: &Solution,
    radius0: f64,
    ftol: f64,
    max_evals: usize,
    all_evals: &mut Vec<Solution>,
) -> Result<(Solution, usize)> {
    let max_evals = max_evals.min(ev.remaining() as usize);
    let mut best = start.clone();
    let f0 = s.g(&start.value);
    let out = trust_region_minimize(
        |x: &[f64]| {
            let sol = ev.evaluate(Component::Warmstart, x.to_vec())?;
            let g = s.g(&sol.value);
            if g < s.g(&best.value) {
                best = sol.clone();
            }
            all_evals.push(sol);
            Ok(g)
        },
        &start.point,
        Some(f0),
        radius0,
        ftol,
        max_evals,
    )?;
    Ok((best, out.evals_used))
}

/// Log entry of one warm-start leg.
#[derive(Clone, Debug, PartialEq)]
pub struct LegInfo {
    pub alpha: f64,
    pub radius0: f64,
    pub ftol: f64,
    pub evals: usize,
}

#[derive(Clone, Debug)]
pub struct WarmStartResult {
    /// Every evaluated solution, in evaluation order; the first is `x_init = 0`.
    pub all_evals: Vec<Solution>,
    pub legs: Vec<LegInfo>,
    pub f_init: ObjectiveVector,
}

/// Runs the warm-start sweep for exactly `budget` evaluations (or until the
/// evaluator runs dry): evaluate the origin, then one trust-region leg per
/// weight of [`alpha_schedule`], each started from the previous leg's best.
pub fn warmstart(ev: &mut Evaluator<'_>, budget: u64) -> Result<WarmStartResult> {
    let n = ev.dim();
    let budget = budget.min(ev.remaining());
    let mut all_evals = Vec::with_capacity(budget as usize);
    let mut legs = Vec::new();
    if budget == 0 {
        return Err(crate::error::Error::InvalidArgument("warm start needs a positive budget".into()));
    }
    let origin = ev.evaluate(Component::Warmstart, vec![0.0; n])?;
    let f_init = origin.value;
    all_evals.push(origin.clone());
    let mut spent = 1u64;
    let base = Scalarization::new(0.5, f_init)?;
    let mut start = origin;
    let mut leg = 0usize;
    while spent < budget {
        let (alpha, refined) = alpha_schedule(leg);
        let s = base.with_alpha(alpha)?;
        let remaining = (budget - spent) as usize;
        let (radius0, ftol, cap) = if leg == 0 {
            (FIRST_LEG_RADIUS, FIRST_SWEEP_FTOL, remaining.min(5 * n))
        } else {
            (
                LATER_LEG_RADIUS,
                if refined { REFINED_FTOL } else { FIRST_SWEEP_FTOL },
                remaining,
            )
        };
        let (best, used) = minimize_scalarized(ev, &s, &start, radius0, ftol, cap, &mut all_evals)?;
        legs.push(LegInfo {
            alpha,
            radius0,
            ftol,
            evals: used,
        });
        spent += used as u64;
        start = best;
        leg += 1;
        if used == 0 {
            break;
        }
    }
    Ok(WarmStartResult {
        all_evals,
        legs,
        f_init,
    })
}

/// Standalone warm start on `p` with a fresh evaluator: exactly `budget`
/// evaluations including the one at the origin. Returns all evaluated solutions.
pub fn run_warmstart(p: &BiObjectiveProblem, budget: u64) -> Result<Vec<Solution>> {
    let mut ev = Evaluator::new(p, budget);
    Ok(warmstart(&mut ev, budget)?.all_evals)
}
