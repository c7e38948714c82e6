//! Single-objective (μ/μ_w, λ)-CMA-ES with an ask/tell interface, and the
//! restart wrapper that runs it on randomly weighted aggregations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::eval::{Component, Evaluator};
use crate::linalg::{eigen_repair, reflect_into_box};
use crate::pareto::{ObjectiveVector, Solution};
use crate::scalarize::Scalarization;

pub const MIN_EIG: f64 = 1e-14;
pub const MAX_EIG: f64 = 1e14;
pub const MIN_SIGMA: f64 = 1e-20;
pub const MAX_SIGMA: f64 = 1e4;

pub const LAMBDA_MIN: usize = 50;
pub const LAMBDA_GROWTH: f64 = 1.02;
pub const BASE_ITERATION_CAP: f64 = 100.0;
pub const RESTART_SIGMA: f64 = 2.0;
pub const RESTART_INIT_HALF_WIDTH: f64 = 4.0;
pub const SIGMA_STOP: f64 = 1e-12;

/// Default population size `4 + ⌊3 ln n⌋`.
pub fn default_lambda(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

/// Strategy constants derived from `n`, `λ` and `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CmaParams {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(n: usize, lambda: usize) -> Result<Self> {
        if lambda < 4 {
            return Err(Error::InvalidArgument(format!("lambda={lambda} below 4")));
        }
        Self::with_mu(n, lambda, lambda / 2)
    }

    pub fn with_mu(n: usize, lambda: usize, mu: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if mu == 0 || mu > lambda {
            return Err(Error::InvalidArgument(format!("mu={mu} not in 1..={lambda}")));
        }
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(CmaParams {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CmaState {
    pub params: CmaParams,
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub c: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub iteration: usize,
    basis: DMatrix<f64>,
    sqrt_eig: DVector<f64>,
}

impl CmaState {
    pub fn new(mean: &[f64], sigma: f64, params: CmaParams) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty mean".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma={sigma}")));
        }
        Ok(CmaState {
            params,
            mean: DVector::from_column_slice(mean),
            sigma: sigma.clamp(MIN_SIGMA, MAX_SIGMA),
            c: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            iteration: 0,
            basis: DMatrix::identity(n, n),
            sqrt_eig: DVector::from_element(n, 1.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn lambda(&self) -> usize {
        self.params.lambda
    }

    /// `λ` samples `mean + σ C^{1/2} z`, reflected into the search box.
    pub fn ask(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let n = self.dim();
        let scaled = &self.basis * DMatrix::from_diagonal(&self.sqrt_eig);
        (0..self.params.lambda)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = &self.mean + (&scaled * z) * self.sigma;
                let mut v: Vec<f64> = x.iter().copied().collect();
                reflect_into_box(&mut v);
                v
            })
            .collect()
    }

    /// Rank-μ / rank-one covariance update with cumulative step-size
    /// adaptation. Non-finite fitness values rank last.
    pub fn tell(&mut self, points: &[Vec<f64>], fitness: &[f64]) -> Result<()> {
        let p = &self.params;
        let n = self.dim();
        if points.len() != p.lambda || fitness.len() != p.lambda {
            return Err(Error::DimensionMismatch {
                expected: p.lambda,
                got: points.len().min(fitness.len()),
            });
        }
        if let Some(bad) = points.iter().find(|x| x.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        let key = |f: f64| if f.is_nan() { f64::INFINITY } else { f };
        let mut order: Vec<usize> = (0..p.lambda).collect();
        order.sort_by(|&a, &b| key(fitness[a]).total_cmp(&key(fitness[b])));

        let old_mean = self.mean.clone();
        let ys: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&i| (DVector::from_column_slice(&points[i]) - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&ys) {
            y_w += y * *w;
        }
        self.mean = &old_mean + &y_w * self.sigma;

        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.sqrt_eig.map(|d| 1.0 / d)) * self.basis.transpose();
        let cs = p.c_sigma;
        self.p_sigma = &self.p_sigma * (1.0 - cs) + (&inv_sqrt * &y_w) * (cs * (2.0 - cs) * p.mu_eff).sqrt();
        let gen = (self.iteration + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        let cc = p.c_c;
        self.p_c = &self.p_c * (1.0 - cc) + &y_w * (hs * (cc * (2.0 - cc) * p.mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in p.weights.iter().zip(&ys) {
            rank_mu += (y * y.transpose()) * *w;
        }
        let decay = 1.0 - p.c_1 - p.c_mu + (1.0 - hs) * p.c_1 * cc * (2.0 - cc);
        let c = &self.c * decay + (&self.p_c * self.p_c.transpose()) * p.c_1 + rank_mu * p.c_mu;
        let (c, basis, vals) = eigen_repair(&c, MIN_EIG, MAX_EIG);
        self.c = c;
        self.basis = basis;
        self.sqrt_eig = vals.map(f64::sqrt);

        self.sigma = (self.sigma * ((cs / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp()).clamp(MIN_SIGMA, MAX_SIGMA);
        self.iteration += 1;
        Ok(())
    }
}

/// Result of [`minimize`].
#[derive(Clone, Debug)]
pub struct CmaOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals: usize,
}

/// Plain CMA-ES loop on `f`: stops after `max_evals` evaluations or once the
/// best value drops below `f_target`.
pub fn minimize<F>(mut f: F, x0: &[f64], sigma0: f64, lambda: usize, max_evals: usize, f_target: f64, rng: &mut ChaCha8Rng) -> Result<CmaOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut st = CmaState::new(x0, sigma0, CmaParams::new(x0.len(), lambda)?)?;
    let mut out = CmaOutcome {
        best_x: x0.to_vec(),
        best_f: f64::INFINITY,
        evals: 0,
    };
    while out.evals + lambda <= max_evals && out.best_f >= f_target {
        let xs = st.ask(rng);
        let fs: Vec<f64> = xs.iter().map(|x| f(x)).collect();
        out.evals += lambda;
        for (x, v) in xs.iter().zip(&fs) {
            if *v < out.best_f {
                out.best_f = *v;
                out.best_x = x.clone();
            }
        }
        st.tell(&xs, &fs)?;
    }
    Ok(out)
}

/// `round(λ_min · 1.02^(i·b))` for a given exponent factor `b ∈ [0, 2]`.
pub fn lambda_for(i: usize, b: f64) -> usize {
    (LAMBDA_MIN as f64 * LAMBDA_GROWTH.powf(i as f64 * b)).round() as usize
}

/// Population size of restart `i`: `λ_min (λ_max / λ_min)^b` with
/// `λ_max = λ_min 1.02^i` and `b ~ U[0, 2]`.
pub fn sample_lambda(i: usize, rng: &mut ChaCha8Rng) -> usize {
    let b: f64 = rng.random_range(0.0..=2.0);
    lambda_for(i, b)
}

/// Iteration cap of restart `i`.
pub fn iteration_cap(i: usize) -> usize {
    (BASE_ITERATION_CAP * LAMBDA_GROWTH.powi(i as i32)).round() as usize
}

/// Stagnation window: generations without best-so-far improvement.
pub fn stagnation_window(n: usize, lambda: usize) -> usize {
    20 + n.div_ceil(lambda)
}

#[derive(Clone, Debug)]
pub struct RestartStep {
    pub evals: u64,
    /// Best solution of a run that terminated during this step.
    pub finished: Option<Solution>,
}

/// CMA-ES restarted on random aggregations `α ~ U[0, 1]` with random
/// population sizes.
#[derive(Clone, Debug)]
pub struct RestartCma {
    restart_index: usize,
    current: CmaState,
    scal: Scalarization,
    rng: ChaCha8Rng,
    best: Option<(Solution, f64)>,
    since_improvement: usize,
    alphas: Vec<f64>,
}

impl RestartCma {
    /// `f_init` is the objective vector at the origin, used to normalize the
    /// aggregations.
    pub fn new(n: usize, f_init: ObjectiveVector, mut rng: ChaCha8Rng) -> Result<Self> {
        let alpha = rng.random::<f64>();
        let scal = Scalarization::new(alpha, f_init)?;
        let current = Self::fresh_run(n, 0, &mut rng)?;
        Ok(RestartCma {
            restart_index: 0,
            current,
            scal,
            rng,
            best: None,
            since_improvement: 0,
            alphas: vec![alpha],
        })
    }

    fn fresh_run(n: usize, i: usize, rng: &mut ChaCha8Rng) -> Result<CmaState> {
        let lambda = sample_lambda(i, rng);
        let mean: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-RESTART_INIT_HALF_WIDTH..=RESTART_INIT_HALF_WIDTH))
            .collect();
        CmaState::new(&mean, RESTART_SIGMA, CmaParams::new(n, lambda)?)
    }

    pub fn restart_index(&self) -> usize {
        self.restart_index
    }

    pub fn alpha(&self) -> f64 {
        self.scal.alpha()
    }

    /// Weights of all runs started so far.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn current(&self) -> &CmaState {
        &self.current
    }

    /// Evaluations charged by the next [`RestartCma::step`].
    pub fn next_step_cost(&self) -> u64 {
        self.current.lambda() as u64
    }

    /// One generation of the current run. When the run terminates, its best
    /// solution is returned and the next restart is prepared.
    pub fn step(&mut self, ev: &mut Evaluator<'_>) -> Result<RestartStep> {
        let lambda = self.current.lambda();
        if (ev.remaining() as usize) < lambda {
            return Err(Error::InvalidArgument(format!(
                "generation needs {lambda} evaluations, {} left",
                ev.remaining()
            )));
        }
        let xs = self.current.ask(&mut self.rng);
        let mut fs = Vec::with_capacity(lambda);
        let mut improved = false;
        for x in &xs {
            let sol = ev.evaluate(Component::RestartCma, x.clone())?;
            let g = self.scal.g(&sol.value);
            fs.push(g);
            if self.best.as_ref().is_none_or(|(_, bg)| g < *bg) {
                self.best = Some((sol, g));
                improved = true;
            }
        }
        self.current.tell(&xs, &fs)?;
        if improved {
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
        let n = self.current.dim();
        let done = self.current.iteration >= iteration_cap(self.restart_index)
            || self.current.sigma < SIGMA_STOP
            || self.since_improvement >= stagnation_window(n, lambda);
        let finished = if done { self.restart()? } else { None };
        Ok(RestartStep {
            evals: lambda as u64,
            finished,
        })
    }

    fn restart(&mut self) -> Result<Option<Solution>> {
        let finished = self.best.take().map(|(s, _)| s);
        self.restart_index += 1;
        let alpha = self.rng.random::<f64>();
        self.scal = self.scal.with_alpha(alpha)?;
        self.alphas.push(alpha);
        self.current = Self::fresh_run(self.current.dim(), self.restart_index, &mut self.rng)?;
        self.since_improvement = 0;
        Ok(finished)
    }

    /// Runs whole generations while they fit into `slice` evaluations.
    /// Returns the evaluations used and the best solutions of finished runs.
    pub fn run_slice(&mut self, ev: &mut Evaluator<'_>, slice: u64) -> Result<(u64, Vec<Solution>)> {
        let mut used = 0;
        let mut finished = Vec::new();
        while used + self.next_step_cost() <= slice.min(used + ev.remaining()) {
            let s = self.step(ev)?;
            used += s.evals;
            finished.extend(s.finished);
        }
        Ok((used, finished))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_problem;
    use rand::SeedableRng;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn standard_constants() {
        let p = CmaParams::new(10, 10).unwrap();
        assert_eq!(p.mu, 5);
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.weights.windows(2).all(|w| w[0] >= w[1] && w[1] > 0.0));
        // independent evaluation of the textbook formulas
        let raw: Vec<f64> = (1..=5).map(|i| (5.5f64).ln() - (i as f64).ln()).collect();
        let s: f64 = raw.iter().sum();
        let mu_eff = s * s / raw.iter().map(|w| w * w).sum::<f64>();
        assert!((p.mu_eff - mu_eff).abs() < 1e-12);
        assert!((p.c_sigma - (mu_eff + 2.0) / (15.0 + mu_eff)).abs() < 1e-15);
        assert!((p.c_1 - 2.0 / (11.3f64.powi(2) + mu_eff)).abs() < 1e-15);
        assert_eq!(default_lambda(10), 10);
    }

    #[test]
    fn tiny_sigma_samples_sit_on_the_mean() {
        let st = CmaState::new(&[0.3, -1.0, 2.0], 1e-15, CmaParams::new(3, 6).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in st.ask(&mut rng) {
            assert!(x.iter().zip(st.mean.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_covariance_sampling_statistics() {
        let n = 3;
        let sigma = 0.5;
        let st = CmaState::new(&[0.0; 3], sigma, CmaParams::new(n, 100).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut cov = DMatrix::<f64>::zeros(n, n);
        let mut count = 0.0;
        for _ in 0..1000 {
            for x in st.ask(&mut rng) {
                let v = DVector::from_column_slice(&x);
                cov += &v * v.transpose();
                count += 1.0;
            }
        }
        cov /= count;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { sigma * sigma } else { 0.0 };
                assert!((cov[(i, j)] - expected).abs() < 0.05 * sigma * sigma, "{i},{j}: {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let st = CmaState::new(&[1.0, 2.0], 1.0, CmaParams::new(2, 8).unwrap()).unwrap();
        let a = st.ask(&mut ChaCha8Rng::seed_from_u64(9));
        let b = st.ask(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn single_parent_mean_is_best_sample() {
        let mut st = CmaState::new(&[0.0, 0.0], 1.0, CmaParams::with_mu(2, 4, 1).unwrap()).unwrap();
        let xs = st.ask(&mut ChaCha8Rng::seed_from_u64(3));
        let fs: Vec<f64> = xs.iter().map(|x| sphere(x)).collect();
        let best = (0..4).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap();
        st.tell(&xs, &fs).unwrap();
        for (m, x) in st.mean.iter().zip(&xs[best]) {
            assert!((m - x).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_fitness_recombines_first_mu() {
        let mut st = CmaState::new(&[0.0; 3], 1.0, CmaParams::new(3, 6).unwrap()).unwrap();
        let xs = st.ask(&mut ChaCha8Rng::seed_from_u64(4));
        let w = st.params.weights.clone();
        st.tell(&xs, &[1.0; 6]).unwrap();
        for d in 0..3 {
            let expected: f64 = (0..3).map(|i| w[i] * xs[i][d]).sum();
            assert!((st.mean[d] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn nan_fitness_ranks_last() {
        let mut st = CmaState::new(&[0.0; 2], 1.0, CmaParams::with_mu(2, 4, 1).unwrap()).unwrap();
        let xs = st.ask(&mut ChaCha8Rng::seed_from_u64(5));
        st.tell(&xs, &[f64::NAN, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(st.mean.as_slice(), xs[2].as_slice());
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let mut st = CmaState::new(&[3.0; 4], 2.0, CmaParams::new(4, 8).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let xs = st.ask(&mut rng);
            let fs: Vec<f64> = xs.iter().map(|x| x[0].powi(2) * 1e6 + x[1..].iter().map(|v| v * v).sum::<f64>()).collect();
            st.tell(&xs, &fs).unwrap();
            assert!((&st.c - st.c.transpose()).abs().max() == 0.0);
            let eig = nalgebra::SymmetricEigen::new(st.c.clone()).eigenvalues;
            assert!(eig.iter().all(|&l| l > 0.0));
            assert!((MIN_SIGMA..=MAX_SIGMA).contains(&st.sigma));
        }
    }

    #[test]
    fn sphere_500_iterations() {
        let mut finals = Vec::new();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut st = CmaState::new(&[1.0; 10], 1.0, CmaParams::new(10, 10).unwrap()).unwrap();
            for _ in 0..500 {
                let xs = st.ask(&mut rng);
                let fs: Vec<f64> = xs.iter().map(|x| sphere(x)).collect();
                st.tell(&xs, &fs).unwrap();
            }
            finals.push(sphere(st.mean.as_slice()));
        }
        finals.sort_by(f64::total_cmp);
        assert!(finals[5] < 1e-9, "{finals:?}");
    }

    #[test]
    fn lambda_formula() {
        assert_eq!(lambda_for(0, 0.0), 50);
        assert_eq!(lambda_for(0, 1.7), 50);
        assert_eq!(lambda_for(35, 2.0), 200);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_lambda(0, &mut rng), 50);
            let l = sample_lambda(20, &mut rng);
            assert!((50..=lambda_for(20, 2.0)).contains(&l));
        }
    }

    #[test]
    fn iteration_caps() {
        assert_eq!(iteration_cap(0), 100);
        assert_eq!(iteration_cap(1), 102);
        assert_eq!(iteration_cap(10), (100.0 * 1.02f64.powi(10)).round() as usize);
        assert_eq!(stagnation_window(5, 50), 21);
    }

    #[test]
    fn restart_runs_charge_whole_generations() {
        let p = make_problem(1, 3, 1).unwrap();
        let f0 = p.evaluate(&[0.0; 3]).unwrap();
        let mut ev = Evaluator::new(&p, 20_000);
        let mut rc = RestartCma::new(3, f0, ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(rc.next_step_cost(), 50);
        let (used, _) = rc.run_slice(&mut ev, 20_000).unwrap();
        assert_eq!(used, ev.ledger().restart_cma);
        assert_eq!(used, ev.evals());
        assert!(ev.remaining() < rc.next_step_cost());
        assert!(rc.restart_index() >= 1);
    }

    #[test]
    fn first_run_terminates_at_its_cap() {
        // a generous budget; the first run must end by iteration 100
        let p = make_problem(5, 2, 1).unwrap();
        let f0 = p.evaluate(&[0.0; 2]).unwrap();
        let mut ev = Evaluator::new(&p, 1_000_000);
        let mut rc = RestartCma::new(2, f0, ChaCha8Rng::seed_from_u64(12)).unwrap();
        let mut gens = 0;
        while rc.restart_index() == 0 {
            rc.step(&mut ev).unwrap();
            gens += 1;
        }
        assert!(gens <= 100);
    }

    #[test]
    fn finished_runs_land_on_the_weighted_optimum() {
        // bi-sphere: the optimum of alpha*f1/n1 + (1-alpha)*f2/n2 is a convex
        // combination of the two shifts, solved here in closed form
        let p = make_problem(1, 3, 2).unwrap();
        let f0 = p.evaluate(&[0.0; 3]).unwrap();
        let (s1, s2) = p.shifts();
        let mut ev = Evaluator::new(&p, 200_000);
        let mut rc = RestartCma::new(3, f0, ChaCha8Rng::seed_from_u64(13)).unwrap();
        let mut checked = 0;
        while checked < 3 {
            let alpha = rc.alpha();
            let step = rc.step(&mut ev).unwrap();
            if let Some(best) = step.finished {
                let a = alpha / f0.f1;
                let b = (1.0 - alpha) / f0.f2;
                if a + b > 0.0 {
                    let t = b / (a + b);
                    for d in 0..3 {
                        let opt = s1[d] + t * (s2[d] - s1[d]);
                        assert!((best.point[d] - opt).abs() < 1e-3, "alpha {alpha}");
                    }
                }
                checked += 1;
            }
        }
    }
}
