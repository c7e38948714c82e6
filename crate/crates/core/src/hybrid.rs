//! The hybrid conductor: a warm start, then steady-state MO-CMA-ES joined by
//! restarted single-objective CMA-ES and later by IPOP-MO-CMA-ES, all sharing
//! one evaluation budget and one archive.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cma::RestartCma;
use crate::error::{Error, Result};
use crate::eval::{Component, Evaluator, HvEntry, Ledger};
use crate::mocma::{IpopMoCma, SsMoCma, BLEND_STD, CROSSOVER_PROB};
use crate::pareto::{ObjectiveVector, ParetoArchive, Solution};
use crate::problems::BiObjectiveProblem;
use crate::warmstart::warmstart;

pub const WARMSTART_PER_N: u64 = 10;
pub const SS_ALONE_UNTIL_PER_N: u64 = 1_000;
pub const IPOP_FROM_PER_N: u64 = 20_000;
pub const CAP_PER_N: u64 = 400_000;
pub const INJECTION_PROB: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    P1,
    P2,
    P3,
    P4,
}

/// Phase after `evals` evaluations in dimension `n`.
pub fn phase_of(evals: u64, n: usize) -> Phase {
    let n = n as u64;
    if evals < WARMSTART_PER_N * n {
        Phase::P1
    } else if evals < SS_ALONE_UNTIL_PER_N * n {
        Phase::P2
    } else if evals < IPOP_FROM_PER_N * n {
        Phase::P3
    } else {
        Phase::P4
    }
}

/// Per-component evaluation cap: `400000n`, or a third of the budget when
/// that is larger.
pub fn default_cap(n: usize, budget: u64) -> u64 {
    (CAP_PER_N * n as u64).max(budget.div_ceil(3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Hybrid,
    Warmstart,
    SsMocma,
    IpopMocma,
    RestartCma,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Hybrid, Algo::Warmstart, Algo::SsMocma, Algo::IpopMocma, Algo::RestartCma];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Hybrid => "hybrid",
            Algo::Warmstart => "warmstart",
            Algo::SsMocma => "ss-mocma",
            Algo::IpopMocma => "ipop-mocma",
            Algo::RestartCma => "restart-cma",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridConfig {
    /// Per-component cap; [`default_cap`] when `None`.
    pub cap: Option<u64>,
    pub crossover_prob: f64,
    pub blend_std: f64,
    pub injection_prob: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            cap: None,
            crossover_prob: CROSSOVER_PROB,
            blend_std: BLEND_STD,
            injection_prob: INJECTION_PROB,
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub archive: ParetoArchive,
    pub trace: Vec<HvEntry>,
    pub ledger: Ledger,
}

impl RunOutput {
    pub fn total_evals(&self) -> u64 {
        self.ledger.total()
    }
}

/// Deterministic generator for one component of one run.
pub fn component_rng(p: &BiObjectiveProblem, seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [p.k() as u64, p.dim() as u64, p.instance() as u64] {
        key = (key ^ v).wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(31);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

const STREAM_SS: u64 = 1;
const STREAM_RESTART: u64 = 2;
const STREAM_IPOP: u64 = 3;
const STREAM_SCHEDULER: u64 = 4;

/// One scheduler turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Turn {
    pub component: Component,
    pub phase: Phase,
    pub evals: u64,
}

/// Round-robin conductor. Each [`Hybrid::turn`] runs one atomic step of one
/// component: the whole warm start, one ss iteration, one restart-CMA
/// generation or one IPOP generation.
pub struct Hybrid<'p> {
    ev: Evaluator<'p>,
    cfg: HybridConfig,
    cap: u64,
    f_init: Option<ObjectiveVector>,
    ss: Option<SsMoCma>,
    restart: Option<RestartCma>,
    ipop: Option<IpopMoCma>,
    queue: VecDeque<Solution>,
    seed: u64,
    sched_rng: ChaCha8Rng,
    /// Evaluations charged to each component since the current phase began.
    shares: Ledger,
    share_phase: Phase,
    injections: u64,
    done: bool,
}

impl<'p> Hybrid<'p> {
    pub fn new(p: &'p BiObjectiveProblem, budget: u64, seed: u64, cfg: HybridConfig) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("budget must be positive".into()));
        }
        Ok(Hybrid {
            ev: Evaluator::new(p, budget),
            cap: cfg.cap.unwrap_or_else(|| default_cap(p.dim(), budget)),
            cfg,
            f_init: None,
            ss: None,
            restart: None,
            ipop: None,
            queue: VecDeque::new(),
            seed,
            sched_rng: component_rng(p, seed, STREAM_SCHEDULER),
            shares: Ledger::default(),
            share_phase: Phase::P1,
            injections: 0,
            done: false,
        })
    }

    pub fn evaluator(&self) -> &Evaluator<'p> {
        &self.ev
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn phase(&self) -> Phase {
        phase_of(self.ev.evals(), self.ev.dim())
    }

    /// Per-component evaluations since the last phase transition.
    pub fn shares(&self) -> &Ledger {
        &self.shares
    }

    pub fn injections(&self) -> u64 {
        self.injections
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn ss(&self) -> Option<&SsMoCma> {
        self.ss.as_ref()
    }

    pub fn restart_cma(&self) -> Option<&RestartCma> {
        self.restart.as_ref()
    }

    pub fn ipop(&self) -> Option<&IpopMoCma> {
        self.ipop.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn cost(&self, c: Component) -> u64 {
        match c {
            Component::Ss if !self.queue.is_empty() => 0,
            Component::Ss => self.ss.as_ref().map_or(1, |s| s.next_step_cost()),
            Component::RestartCma => self.restart.as_ref().map_or(0, |r| r.next_step_cost()),
            Component::Ipop => self.ipop.as_ref().map_or(0, |i| i.next_step_cost()),
            Component::Warmstart => 0,
        }
    }

    fn can_act(&self, c: Component) -> bool {
        let cost = self.cost(c);
        cost <= self.ev.remaining() && self.ev.ledger().get(c) + cost <= self.cap
    }

    /// Runs one turn; `None` once the run is over.
    pub fn turn(&mut self) -> Result<Option<Turn>> {
        if self.done {
            return Ok(None);
        }
        let p = self.ev.problem();
        let n = p.dim();
        let before = self.ev.evals();
        let phase = self.phase();

        if self.f_init.is_none() {
            let ws_budget = (WARMSTART_PER_N * n as u64).min(self.ev.remaining());
            let ws = warmstart(&mut self.ev, ws_budget)?;
            self.f_init = Some(ws.f_init);
            if self.ev.remaining() > 0 {
                let ss = SsMoCma::new(&ws.all_evals, &mut self.ev, component_rng(p, self.seed, STREAM_SS))?
                    .with_crossover_prob(self.cfg.crossover_prob)
                    .with_blend_std(self.cfg.blend_std);
                self.ss = Some(ss);
            } else {
                self.done = true;
            }
            return Ok(Some(self.finish_turn(Component::Warmstart, phase, before)));
        }

        if phase >= Phase::P3 && self.restart.is_none() {
            self.restart = Some(RestartCma::new(n, self.f_init.unwrap(), component_rng(p, self.seed, STREAM_RESTART))?);
        }
        if phase == Phase::P4 && self.ipop.is_none() {
            self.ipop = Some(IpopMoCma::new(&self.ev, component_rng(p, self.seed, STREAM_IPOP)));
        }
        if phase != self.share_phase {
            self.shares = Ledger::default();
            self.share_phase = phase;
        }

        let mut active = vec![Component::Ss];
        if self.restart.is_some() {
            active.push(Component::RestartCma);
        }
        if self.ipop.is_some() {
            active.push(Component::Ipop);
        }
        let next = active
            .into_iter()
            .filter(|&c| self.can_act(c))
            .min_by_key(|&c| self.shares.get(c));
        let Some(c) = next else {
            self.done = true;
            return Ok(None);
        };

        match c {
            Component::Ss => {
                if phase == Phase::P4 && self.sched_rng.random::<f64>() < self.cfg.injection_prob {
                    if let Some(ipop) = &self.ipop {
                        let pool: Vec<_> = ipop.population().iter().filter(|i| i.is_evaluated()).collect();
                        if !pool.is_empty() {
                            let ind = pool[self.sched_rng.random_range(0..pool.len())];
                            self.queue.push_back(Solution {
                                point: crate::pareto::SearchPoint::new(ind.x.clone())?,
                                value: ind.value,
                                eval_index: 0,
                            });
                        }
                    }
                }
                let injected = self.queue.pop_front();
                if injected.is_some() {
                    self.injections += 1;
                }
                self.ss.as_mut().unwrap().step(&mut self.ev, injected)?;
            }
            Component::RestartCma => {
                let out = self.restart.as_mut().unwrap().step(&mut self.ev)?;
                self.queue.extend(out.finished);
            }
            Component::Ipop => {
                self.ipop.as_mut().unwrap().step(&mut self.ev)?;
            }
            Component::Warmstart => unreachable!(),
        }
        if self.ev.remaining() == 0 {
            self.done = true;
        }
        Ok(Some(self.finish_turn(c, phase, before)))
    }

    fn finish_turn(&mut self, component: Component, phase: Phase, before: u64) -> Turn {
        let evals = self.ev.evals() - before;
        match component {
            Component::Warmstart => self.shares.warmstart += evals,
            Component::Ss => self.shares.ss += evals,
            Component::RestartCma => self.shares.restart_cma += evals,
            Component::Ipop => self.shares.ipop += evals,
        }
        Turn { component, phase, evals }
    }

    pub fn run(mut self) -> Result<RunOutput> {
        while self.turn()?.is_some() {}
        Ok(self.into_output())
    }

    pub fn into_output(self) -> RunOutput {
        let (archive, trace, ledger) = self.ev.into_parts();
        RunOutput { archive, trace, ledger }
    }
}

/// Full hybrid run on `p` with exactly `budget` evaluations (unless every
/// component is capped).
pub fn hybrid_run(p: &BiObjectiveProblem, budget: u64, seed: u64, cfg: HybridConfig) -> Result<RunOutput> {
    Hybrid::new(p, budget, seed, cfg)?.run()
}

/// Runs `algo` alone (or the hybrid) on `p`.
pub fn run_algo(algo: Algo, p: &BiObjectiveProblem, budget: u64, seed: u64, cfg: HybridConfig) -> Result<RunOutput> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let n = p.dim();
    let mut ev = Evaluator::new(p, budget);
    match algo {
        Algo::Hybrid => return hybrid_run(p, budget, seed, cfg),
        Algo::Warmstart => {
            warmstart(&mut ev, budget)?;
        }
        Algo::SsMocma => {
            if budget >= crate::mocma::SS_BASE_SIZE as u64 {
                let mut ss = SsMoCma::from_random(&mut ev, component_rng(p, seed, STREAM_SS))?
                    .with_crossover_prob(cfg.crossover_prob)
                    .with_blend_std(cfg.blend_std);
                while ev.remaining() > 0 {
                    ss.step(&mut ev, None)?;
                }
            }
        }
        Algo::IpopMocma => {
            let mut ipop = IpopMoCma::new(&ev, component_rng(p, seed, STREAM_IPOP));
            while ipop.next_step_cost() <= ev.remaining() {
                ipop.step(&mut ev)?;
            }
        }
        Algo::RestartCma => {
            let f0 = ev.evaluate(Component::RestartCma, vec![0.0; n])?.value;
            let mut rc = RestartCma::new(n, f0, component_rng(p, seed, STREAM_RESTART))?;
            while rc.next_step_cost() <= ev.remaining() {
                rc.step(&mut ev)?;
            }
        }
    }
    let (archive, trace, ledger) = ev.into_parts();
    Ok(RunOutput { archive, trace, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_problem, reference_data};

    #[test]
    fn phase_boundaries() {
        assert_eq!(phase_of(0, 5), Phase::P1);
        assert_eq!(phase_of(40, 5), Phase::P1);
        assert_eq!(phase_of(49, 5), Phase::P1);
        assert_eq!(phase_of(50, 5), Phase::P2);
        assert_eq!(phase_of(4999, 5), Phase::P2);
        assert_eq!(phase_of(5000, 5), Phase::P3);
        assert_eq!(phase_of(99_999, 5), Phase::P3);
        assert_eq!(phase_of(100_000, 5), Phase::P4);
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("bobyqa".parse::<Algo>().is_err());
    }

    #[test]
    fn caps() {
        assert_eq!(default_cap(5, 5000), 2_000_000);
        assert_eq!(default_cap(5, 1_200_000 * 5), 2_000_000);
        assert_eq!(default_cap(5, 30_000_000), 10_000_000);
    }

    #[test]
    fn warm_start_only_budget() {
        let n = 4;
        let p = make_problem(20, n, 1).unwrap();
        let out = hybrid_run(&p, 10 * n as u64, 0, HybridConfig::default()).unwrap();
        assert_eq!(out.ledger.warmstart, 40);
        assert_eq!(out.ledger.total(), 40);
    }

    #[test]
    fn turns_follow_the_phases() {
        let n = 2;
        let p = make_problem(33, n, 2).unwrap();
        let budget = 21_000 * n as u64;
        let mut h = Hybrid::new(&p, budget, 3, HybridConfig::default()).unwrap();
        let mut first = [None::<u64>; 4];
        loop {
            let at = h.evaluator().evals();
            let Some(t) = h.turn().unwrap() else { break };
            assert_eq!(t.phase, phase_of(at, n));
            let slot = match t.component {
                Component::Warmstart => 0,
                Component::Ss => 1,
                Component::RestartCma => 2,
                Component::Ipop => 3,
            };
            first[slot].get_or_insert(at);
            match t.phase {
                Phase::P1 => assert_eq!(t.component, Component::Warmstart),
                Phase::P2 => assert_eq!(t.component, Component::Ss),
                _ => {}
            }
            if t.component == Component::Ipop {
                assert_eq!(t.phase, Phase::P4);
            }
        }
        assert_eq!(first[0], Some(0));
        assert_eq!(first[1], Some(20));
        assert!(first[2].unwrap() >= 2000);
        assert!(first[3].unwrap() >= 40_000);
        let out = h.into_output();
        assert_eq!(out.ledger.total(), budget);
    }

    #[test]
    fn shares_balance_within_one_step() {
        let n = 5;
        let p = make_problem(1, n, 1).unwrap();
        let budget = 2000 * n as u64;
        let mut h = Hybrid::new(&p, budget, 7, HybridConfig::default()).unwrap();
        let mut p2_ss = 0;
        while let Some(t) = h.turn().unwrap() {
            if t.phase == Phase::P2 {
                p2_ss = h.evaluator().ledger().ss;
            }
            if t.phase == Phase::P3 {
                let s = h.shares();
                let max_step = h.restart_cma().unwrap().next_step_cost().max(crate::cma::lambda_for(20, 2.0) as u64);
                assert!(s.ss.abs_diff(s.restart_cma) <= max_step);
            }
        }
        let out = h.into_output();
        assert_eq!(out.ledger.total(), budget);
        let half = (budget - 1000 * n as u64) / 2;
        let rc = out.ledger.restart_cma;
        let ss_p3 = out.ledger.ss - p2_ss;
        assert!(rc.abs_diff(half) <= 200 && ss_p3.abs_diff(half) <= 200, "ss {ss_p3} rc {rc}");
    }

    #[test]
    fn capped_component_yields_to_others() {
        let n = 2;
        let p = make_problem(12, n, 1).unwrap();
        let cfg = HybridConfig {
            cap: Some(3000),
            ..HybridConfig::default()
        };
        let out = hybrid_run(&p, 8000, 1, cfg).unwrap();
        assert!(out.ledger.ss <= 3000 && out.ledger.restart_cma <= 3000);
        assert_eq!(out.ledger.total(), out.ledger.warmstart + out.ledger.ss + out.ledger.restart_cma);
        // both capped: the run ends early
        assert!(out.ledger.total() < 8000);
    }

    #[test]
    fn determinism() {
        let p = make_problem(17, 3, 1).unwrap();
        let a = hybrid_run(&p, 4000, 9, HybridConfig::default()).unwrap();
        let b = hybrid_run(&p, 4000, 9, HybridConfig::default()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.ledger, b.ledger);
        let c = hybrid_run(&p, 4000, 10, HybridConfig::default()).unwrap();
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn ablations_charge_their_own_ledger() {
        let p = make_problem(6, 3, 1).unwrap();
        for algo in Algo::ALL {
            let out = run_algo(algo, &p, 3000, 1, HybridConfig::default()).unwrap();
            let l = out.ledger;
            match algo {
                Algo::Hybrid => assert_eq!(l.total(), 3000),
                Algo::Warmstart => assert_eq!(l.warmstart, 3000),
                Algo::SsMocma => assert_eq!(l.ss, 3000),
                Algo::IpopMocma => assert_eq!(l.ipop, l.total()),
                Algo::RestartCma => assert_eq!(l.restart_cma, l.total()),
            }
            assert!(l.total() <= 3000);
        }
    }

    #[test]
    fn injections_happen_in_late_phases() {
        let n = 2;
        let p = make_problem(1, n, 3).unwrap();
        let mut h = Hybrid::new(&p, 50_000, 4, HybridConfig::default()).unwrap();
        while h.turn().unwrap().is_some() {}
        assert!(h.injections() > 0);
    }

    #[test]
    fn bisphere_anytime_quality() {
        let n = 5;
        let mut diffs = Vec::new();
        for seed in 0..10 {
            let p = make_problem(1, n, 1).unwrap();
            let r = reference_data(&p, None).unwrap();
            let out = hybrid_run(&p, 1000 * n as u64, seed, HybridConfig::default()).unwrap();
            assert!(out.trace.windows(2).all(|w| w[0].hv < w[1].hv));
            diffs.push((r.ref_hv - out.archive.hv()) / r.ref_hv);
        }
        diffs.sort_by(f64::total_cmp);
        assert!(diffs[5] <= 1e-2, "{diffs:?}");
    }
}
