//! Budgeted objective evaluation shared by all optimizer components.
//!
//! Every evaluation goes through an [`Evaluator`], which charges it to the
//! calling component's ledger, offers the result to the all-time archive and
//! records an anytime trace entry whenever the archive hypervolume grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{ParetoArchive, SearchPoint, Solution};
use crate::problems::BiObjectiveProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Warmstart,
    Ss,
    RestartCma,
    Ipop,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::Warmstart, Component::Ss, Component::RestartCma, Component::Ipop];

    pub fn name(self) -> &'static str {
        match self {
            Component::Warmstart => "warmstart",
            Component::Ss => "ss",
            Component::RestartCma => "restart_cma",
            Component::Ipop => "ipop",
        }
    }
}

/// Per-component evaluation counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub warmstart: u64,
    pub ss: u64,
    pub restart_cma: u64,
    pub ipop: u64,
}

impl Ledger {
    pub fn get(&self, c: Component) -> u64 {
        match c {
            Component::Warmstart => self.warmstart,
            Component::Ss => self.ss,
            Component::RestartCma => self.restart_cma,
            Component::Ipop => self.ipop,
        }
    }

    fn get_mut(&mut self, c: Component) -> &mut u64 {
        match c {
            Component::Warmstart => &mut self.warmstart,
            Component::Ss => &mut self.ss,
            Component::RestartCma => &mut self.restart_cma,
            Component::Ipop => &mut self.ipop,
        }
    }

    pub fn total(&self) -> u64 {
        self.warmstart + self.ss + self.restart_cma + self.ipop
    }
}

/// Archive hypervolume after `evals` evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvEntry {
    pub evals: u64,
    pub hv: f64,
}

pub struct Evaluator<'p> {
    problem: &'p BiObjectiveProblem,
    budget: u64,
    evals: u64,
    ledger: Ledger,
    archive: ParetoArchive,
    trace: Vec<HvEntry>,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p BiObjectiveProblem, budget: u64) -> Self {
        Evaluator {
            problem,
            budget,
            evals: 0,
            ledger: Ledger::default(),
            archive: ParetoArchive::new(problem.ref_point()),
            trace: Vec::new(),
        }
    }

    pub fn problem(&self) -> &'p BiObjectiveProblem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.evals
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.archive
    }

    pub fn trace(&self) -> &[HvEntry] {
        &self.trace
    }

    pub fn into_parts(self) -> (ParetoArchive, Vec<HvEntry>, Ledger) {
        (self.archive, self.trace, self.ledger)
    }

    /// Evaluates `x` on behalf of `who`. Fails when the budget is exhausted.
    pub fn evaluate(&mut self, who: Component, x: Vec<f64>) -> Result<Solution> {
        if self.evals >= self.budget {
            return Err(Error::InvalidArgument(format!(
                "evaluation budget of {} exhausted",
                self.budget
            )));
        }
        let value = self.problem.evaluate(&x)?;
        self.evals += 1;
        *self.ledger.get_mut(who) += 1;
        let s = Solution {
            point: SearchPoint::new(x)?,
            value,
            eval_index: self.evals,
        };
        let before = self.archive.hv();
        if self.archive.insert(s.clone()) && self.archive.hv() > before {
            self.trace.push(HvEntry {
                evals: self.evals,
                hv: self.archive.hv(),
            });
        }
        Ok(s)
    }
}
