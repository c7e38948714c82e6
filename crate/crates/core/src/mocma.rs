//! Multi-objective CMA-ES with per-individual (1+1)-style strategy
//! parameters: a steady-state variant with a slowly growing population and
//! blend crossover, and a generational variant with IPOP restarts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::eval::{Component, Evaluator};
use crate::linalg::{cholesky_or_repair, eigen_repair, reflect_into_box};
use crate::pareto::{select_best, select_worst, ObjectiveVector, Solution};

pub const P_TARGET: f64 = 0.181;
pub const C_P: f64 = 1.0 / 12.0;
pub const P_THRESH: f64 = 0.44;
pub const MIN_SIGMA: f64 = 1e-20;
pub const MAX_SIGMA: f64 = 1e4;
pub const MIN_EIG: f64 = 1e-14;
pub const MAX_EIG: f64 = 1e14;

pub const SS_BASE_SIZE: usize = 5;
pub const SS_SIGMA0: f64 = 0.5;
pub const CROSSOVER_PROB: f64 = 0.1;
pub const BLEND_MEAN: f64 = 0.5;
/// Standard deviation of the blend coefficient (variance 1/4).
pub const BLEND_STD: f64 = 0.5;

pub const IPOP_BASE_SIZE: usize = 10;
pub const IPOP_SIGMA0: f64 = 2.0;
pub const INIT_HALF_WIDTH: f64 = 4.0;

/// Iterations (steady state) or generations (IPOP) between growth events.
pub fn growth_period(n: usize) -> u64 {
    50 * n as u64
}

/// Population size of the steady-state variant after `t` iterations.
pub fn ss_population_size(t: u64, n: usize) -> usize {
    SS_BASE_SIZE + (t / growth_period(n)) as usize
}

/// Population size of the IPOP variant after `r` restarts.
pub fn ipop_population_size(r: u32) -> usize {
    IPOP_BASE_SIZE << r
}

/// Dimension-dependent learning rates of the success rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoConstants {
    pub damping: f64,
    pub c_c: f64,
    pub c_cov: f64,
}

impl MoConstants {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        MoConstants {
            damping: 1.0 + nf / 2.0,
            c_c: 2.0 / (nf + 2.0),
            c_cov: 2.0 / (nf * nf + 6.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MoIndividual {
    pub x: Vec<f64>,
    /// NaN until the point has been evaluated.
    pub value: ObjectiveVector,
    pub sigma: f64,
    pub c: DMatrix<f64>,
    pub p_succ: f64,
    pub p_c: DVector<f64>,
    chol: DMatrix<f64>,
}

impl MoIndividual {
    pub fn new(x: Vec<f64>, value: ObjectiveVector, sigma: f64) -> Self {
        let n = x.len();
        MoIndividual {
            x,
            value,
            sigma: sigma.clamp(MIN_SIGMA, MAX_SIGMA),
            c: DMatrix::identity(n, n),
            p_succ: P_TARGET,
            p_c: DVector::zeros(n),
            chol: DMatrix::identity(n, n),
        }
    }

    pub fn from_solution(s: &Solution, sigma: f64) -> Self {
        Self::new(s.point.to_vec(), s.value, sigma)
    }

    pub fn unevaluated(x: Vec<f64>, sigma: f64) -> Self {
        Self::new(x, ObjectiveVector::new(f64::NAN, f64::NAN), sigma)
    }

    pub fn is_evaluated(&self) -> bool {
        !self.value.f1.is_nan()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn set_covariance(&mut self, c: DMatrix<f64>) {
        let (c, _, _) = eigen_repair(&c, MIN_EIG, MAX_EIG);
        let (c, l) = cholesky_or_repair(c);
        self.c = c;
        self.chol = l;
    }

    /// `x + σ A z` with `A Aᵀ = C`, reflected into the search box.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.dim();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &self.chol * z;
        let mut x: Vec<f64> = self.x.iter().zip(y.iter()).map(|(a, b)| a + self.sigma * b).collect();
        reflect_into_box(&mut x);
        x
    }

    /// Smoothed success-rate step-size rule.
    pub fn update_step_size(&mut self, success: bool, k: &MoConstants) {
        let s = if success { 1.0 } else { 0.0 };
        self.p_succ = ((1.0 - C_P) * self.p_succ + C_P * s).clamp(0.0, 1.0);
        self.sigma = (self.sigma * ((self.p_succ - P_TARGET) / (k.damping * (1.0 - P_TARGET))).exp()).clamp(MIN_SIGMA, MAX_SIGMA);
    }

    /// Rank-one update with the normalized step `(x_child - x_parent) / σ_parent`.
    pub fn update_covariance(&mut self, step: &DVector<f64>, k: &MoConstants) {
        let cc = k.c_c;
        let c = if self.p_succ < P_THRESH {
            self.p_c = &self.p_c * (1.0 - cc) + step * (cc * (2.0 - cc)).sqrt();
            &self.c * (1.0 - k.c_cov) + (&self.p_c * self.p_c.transpose()) * k.c_cov
        } else {
            self.p_c = &self.p_c * (1.0 - cc);
            &self.c * (1.0 - k.c_cov) + (&self.p_c * self.p_c.transpose() + &self.c * (cc * (2.0 - cc))) * k.c_cov
        };
        self.set_covariance(c);
    }
}

/// Draw of the blend coefficient `c ~ N(BLEND_MEAN, std²)`.
pub fn sample_blend(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    BLEND_MEAN + std * rng.sample::<f64, _>(StandardNormal)
}

/// `x₃ = a.x + c (b.x - a.x)` with averaged step size and covariance; the
/// success rate and path start afresh.
pub fn crossover(a: &MoIndividual, b: &MoIndividual, c: f64) -> Result<MoIndividual> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let mut x: Vec<f64> = a.x.iter().zip(&b.x).map(|(u, v)| u + c * (v - u)).collect();
    reflect_into_box(&mut x);
    let mut child = MoIndividual::unevaluated(x, 0.5 * (a.sigma + b.sigma));
    child.set_covariance((&a.c + &b.c) * 0.5);
    Ok(child)
}

fn values_of(pop: &[MoIndividual]) -> Vec<ObjectiveVector> {
    pop.iter().map(|i| i.value).collect()
}

fn uniform_point(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-INIT_HALF_WIDTH..=INIT_HALF_WIDTH)).collect()
}

/// How the offspring of one steady-state iteration came about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Offspring {
    Mutation,
    Crossover,
    Injected,
}

#[derive(Clone, Debug)]
pub struct SsOutcome {
    pub evals: u64,
    pub kind: Offspring,
    pub survived: bool,
}

/// Steady-state (μ+1) MO-CMA-ES.
#[derive(Clone, Debug)]
pub struct SsMoCma {
    population: Vec<MoIndividual>,
    iteration: u64,
    n: usize,
    consts: MoConstants,
    reference: ObjectiveVector,
    crossover_prob: f64,
    blend_std: f64,
    rng: ChaCha8Rng,
}

impl SsMoCma {
    /// Builds the initial population from the best five `seeds` (rank, then
    /// hypervolume contribution). Missing members are Gaussian perturbations
    /// of the best seed, evaluated through `ev` on the ss ledger.
    pub fn new(seeds: &[Solution], ev: &mut Evaluator<'_>, mut rng: ChaCha8Rng) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Empty("seed solutions"));
        }
        let n = ev.dim();
        let reference = ev.problem().ref_point();
        let mut distinct: Vec<&Solution> = Vec::new();
        for s in seeds {
            if s.point.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.point.dim() });
            }
            if !distinct.iter().any(|d| d.point == s.point) {
                distinct.push(s);
            }
        }
        let values: Vec<ObjectiveVector> = distinct.iter().map(|s| s.value).collect();
        let chosen = select_best(&values, SS_BASE_SIZE, &reference);
        let mut population: Vec<MoIndividual> = chosen.iter().map(|&i| MoIndividual::from_solution(distinct[i], SS_SIGMA0)).collect();
        let best = population[0].clone();
        while population.len() < SS_BASE_SIZE {
            let x = best.sample(&mut rng);
            let s = ev.evaluate(Component::Ss, x)?;
            population.push(MoIndividual::from_solution(&s, SS_SIGMA0));
        }
        Ok(SsMoCma {
            population,
            iteration: 0,
            n,
            consts: MoConstants::new(n),
            reference,
            crossover_prob: CROSSOVER_PROB,
            blend_std: BLEND_STD,
            rng,
        })
    }

    /// Standalone start from `SS_BASE_SIZE` uniform points in `[-4, 4]ⁿ`.
    pub fn from_random(ev: &mut Evaluator<'_>, mut rng: ChaCha8Rng) -> Result<Self> {
        let n = ev.dim();
        let mut seeds = Vec::with_capacity(SS_BASE_SIZE);
        for _ in 0..SS_BASE_SIZE {
            seeds.push(ev.evaluate(Component::Ss, uniform_point(n, &mut rng))?);
        }
        Self::new(&seeds, ev, rng)
    }

    pub fn with_blend_std(mut self, std: f64) -> Self {
        self.blend_std = std;
        self
    }

    pub fn with_crossover_prob(mut self, p: f64) -> Self {
        self.crossover_prob = p;
        self
    }

    pub fn population(&self) -> &[MoIndividual] {
        &self.population
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Evaluations charged by the next step without an injected solution.
    pub fn next_step_cost(&self) -> u64 {
        1
    }

    /// One iteration producing one offspring. An `injected` solution replaces
    /// the sampled offspring and costs no evaluation.
    pub fn step(&mut self, ev: &mut Evaluator<'_>, injected: Option<Solution>) -> Result<SsOutcome> {
        let k = self.consts;
        let mu = self.population.len();
        let mut parent: Option<usize> = None;
        let (mut child, kind) = match injected {
            Some(s) => (MoIndividual::from_solution(&s, SS_SIGMA0), Offspring::Injected),
            None if mu >= 2 && self.rng.random::<f64>() < self.crossover_prob => {
                let a = self.rng.random_range(0..mu);
                let mut b = self.rng.random_range(0..mu - 1);
                if b >= a {
                    b += 1;
                }
                let c = sample_blend(&mut self.rng, self.blend_std);
                (crossover(&self.population[a], &self.population[b], c)?, Offspring::Crossover)
            }
            None => {
                let p = self.rng.random_range(0..mu);
                parent = Some(p);
                let mut child = self.population[p].clone();
                child.x = self.population[p].sample(&mut self.rng);
                (child, Offspring::Mutation)
            }
        };
        let evals = if kind == Offspring::Injected {
            0
        } else {
            let s = ev.evaluate(Component::Ss, child.x.clone())?;
            child.value = s.value;
            1
        };

        let mut values = values_of(&self.population);
        values.push(child.value);
        let worst = select_worst(&values, &self.reference);
        let survived = worst != mu;
        child.update_step_size(survived, &k);
        if let Some(p) = parent {
            let par = &self.population[p];
            let step = DVector::from_iterator(self.n, child.x.iter().zip(&par.x).map(|(c, x)| (c - x) / par.sigma));
            child.update_covariance(&step, &k);
            self.population[p].update_step_size(survived, &k);
        }
        self.population.push(child);
        self.population.remove(worst);

        self.iteration += 1;
        if self.iteration % growth_period(self.n) == 0 {
            let j = self.rng.random_range(0..self.population.len());
            let mut extra = self.population[j].clone();
            extra.sigma = SS_SIGMA0;
            self.population.push(extra);
        }
        Ok(SsOutcome { evals, kind, survived })
    }
}

/// Generational MO-CMA-ES restarted every `50n` generations with a doubled
/// population.
#[derive(Clone, Debug)]
pub struct IpopMoCma {
    population: Vec<MoIndividual>,
    restarts: u32,
    generation: u64,
    n: usize,
    consts: MoConstants,
    reference: ObjectiveVector,
    rng: ChaCha8Rng,
}

impl IpopMoCma {
    pub fn new(ev: &Evaluator<'_>, rng: ChaCha8Rng) -> Self {
        let n = ev.dim();
        let mut st = IpopMoCma {
            population: Vec::new(),
            restarts: 0,
            generation: 0,
            n,
            consts: MoConstants::new(n),
            reference: ev.problem().ref_point(),
            rng,
        };
        st.population = st.fresh_population(ev);
        st
    }

    /// Uniform points in `[-4, 4]ⁿ`; half of them are replaced by random
    /// archive members (already evaluated) when the archive is not empty.
    fn fresh_population(&mut self, ev: &Evaluator<'_>) -> Vec<MoIndividual> {
        let size = ipop_population_size(self.restarts);
        let members = ev.archive().members();
        let seeded = if members.is_empty() { 0 } else { size / 2 };
        let mut pop = Vec::with_capacity(size);
        for _ in 0..seeded {
            let m = &members[self.rng.random_range(0..members.len())];
            pop.push(MoIndividual::from_solution(m, IPOP_SIGMA0));
        }
        for _ in seeded..size {
            pop.push(MoIndividual::unevaluated(uniform_point(self.n, &mut self.rng), IPOP_SIGMA0));
        }
        pop
    }

    pub fn population(&self) -> &[MoIndividual] {
        &self.population
    }

    pub fn restarts(&self) -> u32 {
        self.restarts
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn pop_size(&self) -> usize {
        ipop_population_size(self.restarts)
    }

    fn pending(&self) -> usize {
        self.population.iter().filter(|i| !i.is_evaluated()).count()
    }

    /// Evaluations charged by the next [`IpopMoCma::step`].
    pub fn next_step_cost(&self) -> u64 {
        match self.pending() {
            0 => self.pop_size() as u64,
            p => p as u64,
        }
    }

    /// Evaluates a freshly (re)started population, or runs one generation.
    pub fn step(&mut self, ev: &mut Evaluator<'_>) -> Result<u64> {
        if self.pending() > 0 {
            let mut used = 0;
            for ind in self.population.iter_mut().filter(|i| !i.is_evaluated()) {
                ind.value = ev.evaluate(Component::Ipop, ind.x.clone())?.value;
                used += 1;
            }
            return Ok(used);
        }
        let k = self.consts;
        let mu = self.population.len();
        let mut offspring = Vec::with_capacity(mu);
        for parent in &self.population {
            let mut child = parent.clone();
            child.x = parent.sample(&mut self.rng);
            child.value = ev.evaluate(Component::Ipop, child.x.clone())?.value;
            offspring.push(child);
        }
        let mut values = values_of(&self.population);
        values.extend(offspring.iter().map(|c| c.value));
        let keep = select_best(&values, mu, &self.reference);
        let mut selected = vec![false; 2 * mu];
        for &i in &keep {
            selected[i] = true;
        }
        for (i, child) in offspring.iter_mut().enumerate() {
            let success = selected[mu + i];
            let parent = &mut self.population[i];
            let step = DVector::from_iterator(self.n, child.x.iter().zip(&parent.x).map(|(c, x)| (c - x) / parent.sigma));
            child.update_step_size(success, &k);
            child.update_covariance(&step, &k);
            parent.update_step_size(success, &k);
        }
        let mut union = std::mem::take(&mut self.population);
        union.extend(offspring);
        let mut slots: Vec<Option<MoIndividual>> = union.into_iter().map(Some).collect();
        self.population = keep.iter().map(|&i| slots[i].take().unwrap()).collect();

        self.generation += 1;
        if self.generation % growth_period(self.n) == 0 {
            self.restarts += 1;
            self.population = self.fresh_population(ev);
        }
        Ok(mu as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::dominates;
    use crate::problems::{index_of_pair, make_problem, BaseFunctionId};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn constants() {
        let k = MoConstants::new(5);
        assert_eq!(k.damping, 3.5);
        assert_eq!(k.c_c, 2.0 / 7.0);
        assert_eq!(k.c_cov, 2.0 / 31.0);
        assert_eq!(ss_population_size(249, 5), 5);
        assert_eq!(ss_population_size(250, 5), 6);
        assert_eq!(ipop_population_size(0), 10);
        assert_eq!(ipop_population_size(2), 40);
    }

    #[test]
    fn step_size_moves_with_success() {
        let k = MoConstants::new(3);
        let mut a = MoIndividual::new(vec![0.0; 3], ObjectiveVector::new(1.0, 1.0), 1.0);
        a.update_step_size(true, &k);
        assert!(a.sigma > 1.0);
        // independent evaluation of the rule
        let p = (1.0 - 1.0 / 12.0) * 0.181 + 1.0 / 12.0;
        assert!((a.p_succ - p).abs() < 1e-15);
        assert!((a.sigma - ((p - 0.181) / (2.5 * 0.819)).exp()).abs() < 1e-15);
        let mut b = MoIndividual::new(vec![0.0; 3], ObjectiveVector::new(1.0, 1.0), 1.0);
        b.update_step_size(false, &k);
        assert!(b.sigma < 1.0);
    }

    #[test]
    fn covariance_update_keeps_pd() {
        let k = MoConstants::new(4);
        let mut a = MoIndividual::new(vec![0.0; 4], ObjectiveVector::new(1.0, 1.0), 1.0);
        let mut r = rng(1);
        for t in 0..500 {
            let step = DVector::from_fn(4, |i, _| if i == 0 { 10.0 } else { r.sample::<f64, _>(StandardNormal) * 1e-3 });
            a.p_succ = if t % 2 == 0 { 0.1 } else { 0.5 };
            a.update_covariance(&step, &k);
            assert_eq!(a.c, a.c.transpose());
            let eig = nalgebra::SymmetricEigen::new(a.c.clone()).eigenvalues;
            assert!(eig.iter().all(|&l| l > 0.0));
            let back = &a.chol * a.chol.transpose();
            assert!((back - &a.c).abs().max() < 1e-8 * a.c.abs().max());
        }
    }

    #[test]
    fn crossover_endpoints() {
        let a = MoIndividual::new(vec![1.0, 2.0], ObjectiveVector::new(1.0, 2.0), 0.5);
        let mut b = MoIndividual::new(vec![-1.0, 0.0], ObjectiveVector::new(2.0, 1.0), 1.5);
        b.set_covariance(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]));
        assert_eq!(crossover(&a, &b, 0.0).unwrap().x, a.x);
        assert_eq!(crossover(&a, &b, 1.0).unwrap().x, b.x);
        let mid = crossover(&a, &b, 0.5).unwrap();
        assert_eq!(mid.x, vec![0.0, 1.0]);
        assert_eq!(mid.sigma, 1.0);
        assert_eq!(mid.c[(0, 0)], 2.0);
        assert_eq!(mid.p_succ, P_TARGET);
        assert!(!mid.is_evaluated());
    }

    #[test]
    fn ss_init_takes_best_five() {
        let p = make_problem(1, 2, 1).unwrap();
        let mut ev = Evaluator::new(&p, 100);
        let mut r = rng(2);
        let mut seeds = Vec::new();
        for _ in 0..12 {
            seeds.push(ev.evaluate(Component::Warmstart, uniform_point(2, &mut r)).unwrap());
        }
        let st = SsMoCma::new(&seeds, &mut ev, rng(3)).unwrap();
        assert_eq!(st.population().len(), 5);
        assert_eq!(ev.ledger().ss, 0);
        assert!(st.population().iter().all(|i| i.sigma == 0.5 && i.p_succ == P_TARGET));
        let values: Vec<_> = seeds.iter().map(|s| s.value).collect();
        let ranks = crate::pareto::nondominated_sort(&values);
        let chosen_ranks: Vec<usize> = st
            .population()
            .iter()
            .map(|ind| ranks[seeds.iter().position(|s| s.point.as_slice() == ind.x.as_slice()).unwrap()])
            .collect();
        // every chosen member ranks no worse than every left-out one
        let worst_chosen = *chosen_ranks.iter().max().unwrap();
        let left_out_best = (0..12)
            .filter(|i| !st.population().iter().any(|ind| ind.x.as_slice() == seeds[*i].point.as_slice()))
            .map(|i| ranks[i])
            .min()
            .unwrap();
        assert!(worst_chosen <= left_out_best);
    }

    #[test]
    fn ss_init_pads_with_evaluated_clones() {
        let p = make_problem(1, 3, 1).unwrap();
        let mut ev = Evaluator::new(&p, 100);
        let seeds: Vec<_> = (0..3).map(|i| ev.evaluate(Component::Warmstart, vec![i as f64; 3]).unwrap()).collect();
        let st = SsMoCma::new(&seeds, &mut ev, rng(4)).unwrap();
        assert_eq!(st.population().len(), 5);
        assert_eq!(ev.ledger().ss, 2);
        assert!(SsMoCma::new(&[], &mut ev, rng(4)).is_err());
    }

    #[test]
    fn ss_population_grows_on_schedule() {
        let n = 2;
        let p = make_problem(3, n, 1).unwrap();
        let mut ev = Evaluator::new(&p, 10_000);
        let mut st = SsMoCma::from_random(&mut ev, rng(5)).unwrap();
        for _ in 0..(3 * growth_period(n) + 7) {
            st.step(&mut ev, None).unwrap();
            assert_eq!(st.population().len(), ss_population_size(st.iteration(), n));
        }
        assert_eq!(ev.ledger().ss, ev.evals());
    }

    #[test]
    fn injected_dominating_solution_survives() {
        let p = make_problem(1, 2, 1).unwrap();
        let mut ev = Evaluator::new(&p, 100);
        let mut st = SsMoCma::from_random(&mut ev, rng(6)).unwrap();
        let before = ev.evals();
        let (s1, _) = p.shifts();
        let opt = ev.evaluate(Component::RestartCma, s1.to_vec()).unwrap();
        let out = st.step(&mut ev, Some(opt.clone())).unwrap();
        assert_eq!(out.evals, 0);
        assert_eq!(ev.evals(), before + 1);
        assert!(out.survived);
        assert!(st.population().iter().any(|i| i.x.as_slice() == opt.point.as_slice()));
    }

    #[test]
    fn selection_never_drops_a_dominator_of_a_survivor() {
        let p = make_problem(8, 3, 1).unwrap();
        let mut ev = Evaluator::new(&p, 3000);
        let mut st = SsMoCma::from_random(&mut ev, rng(7)).unwrap();
        while ev.remaining() > 0 {
            let before: Vec<MoIndividual> = st.population().to_vec();
            st.step(&mut ev, None).unwrap();
            let after = st.population();
            for gone in before.iter().filter(|b| !after.iter().any(|a| a.x == b.x)) {
                assert!(!after.iter().any(|a| dominates(&gone.value, &a.value)));
            }
            let hv_ok = ev.trace().windows(2).all(|w| w[0].hv < w[1].hv);
            assert!(hv_ok);
        }
    }

    #[test]
    fn ss_on_bisphere_from_warm_start() {
        let n = 5;
        let mut diffs = Vec::new();
        for seed in 0..10 {
            let p = make_problem(1, n, seed as usize + 1).unwrap();
            let reference = crate::problems::reference_data(&p, None).unwrap();
            let budget = (10 * n + 500 * n) as u64;
            let mut ev = Evaluator::new(&p, budget);
            let ws = crate::warmstart::warmstart(&mut ev, 10 * n as u64).unwrap();
            let mut st = SsMoCma::new(&ws.all_evals, &mut ev, rng(seed)).unwrap();
            while ev.remaining() > 0 {
                st.step(&mut ev, None).unwrap();
            }
            diffs.push((reference.ref_hv - ev.archive().hv()) / reference.ref_hv);
        }
        diffs.sort_by(f64::total_cmp);
        assert!(diffs[5] <= 1e-2, "{diffs:?}");
    }

    #[test]
    fn ipop_schedule_and_accounting() {
        let n = 2;
        let p = make_problem(10, n, 1).unwrap();
        let mut ev = Evaluator::new(&p, 1_000_000);
        let mut st = IpopMoCma::new(&ev, rng(8));
        assert!(st.population().iter().all(|i| i.sigma == IPOP_SIGMA0 && !i.is_evaluated()));
        while st.restarts() < 3 {
            let cost = st.next_step_cost();
            let before = ev.evals();
            let used = st.step(&mut ev).unwrap();
            assert_eq!(used, cost);
            assert_eq!(ev.evals() - before, used);
            assert_eq!(st.population().len(), ipop_population_size(st.restarts()));
        }
        assert_eq!(st.pop_size(), 80);
        assert!(st.population().iter().all(|i| i.sigma == IPOP_SIGMA0));
        // half of the restarted population comes from the archive
        assert_eq!(st.next_step_cost(), 40);
        assert_eq!(ev.ledger().ipop, ev.evals());
    }

    #[test]
    fn ipop_restarts_keep_improving_on_rastrigin() {
        let n = 2;
        let k = index_of_pair(BaseFunctionId::Rastrigin, BaseFunctionId::Rastrigin);
        let mut gains: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for seed in 0..10 {
            let p = make_problem(k, n, 1).unwrap();
            let mut ev = Evaluator::new(&p, 1_000_000);
            let mut st = IpopMoCma::new(&ev, rng(100 + seed));
            let mut at_restart = Vec::new();
            let mut r = 0;
            while r < 4 {
                st.step(&mut ev).unwrap();
                if st.restarts() > r {
                    r = st.restarts();
                    at_restart.push(ev.archive().hv());
                }
            }
            for j in 0..3 {
                gains[j].push(at_restart[j + 1] - at_restart[j]);
            }
        }
        for g in &mut gains {
            g.sort_by(f64::total_cmp);
            assert!(g[5] > 0.0, "{g:?}");
        }
    }
}
