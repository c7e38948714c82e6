//! Weighted-sum aggregation of the two objectives, normalized by their values
//! at the start point `x_init = 0`.

use crate::error::{Error, Result};
use crate::pareto::ObjectiveVector;
use crate::problems::BiObjectiveProblem;

/// Lower guard for the normalization constants.
pub const NORM_EPS: f64 = 1e-12;

/// `g(f) = alpha * f1 / norm1 + (1 - alpha) * f2 / norm2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scalarization {
    alpha: f64,
    norm1: f64,
    norm2: f64,
}

impl Scalarization {
    /// Builds the aggregation from the objective vector at the start point.
    pub fn new(alpha: f64, f_init: ObjectiveVector) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha={alpha} outside [0, 1]")));
        }
        if !f_init.is_finite() {
            return Err(Error::NonFinite("objective vector at the start point".into()));
        }
        Ok(Scalarization {
            alpha,
            norm1: f_init.f1.abs().max(NORM_EPS),
            norm2: f_init.f2.abs().max(NORM_EPS),
        })
    }

    /// Evaluates `p` at the origin and builds the aggregation from it. The
    /// caller is responsible for charging that evaluation to its budget.
    pub fn for_problem(p: &BiObjectiveProblem, alpha: f64) -> Result<(Self, ObjectiveVector)> {
        let f0 = p.evaluate(&vec![0.0; p.dim()])?;
        Ok((Self::new(alpha, f0)?, f0))
    }

    /// Same normalization, different weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha={alpha} outside [0, 1]")));
        }
        Ok(Scalarization { alpha, ..*self })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norms(&self) -> (f64, f64) {
        (self.norm1, self.norm2)
    }

    pub fn g(&self, fv: &ObjectiveVector) -> f64 {
        self.alpha * fv.f1 / self.norm1 + (1.0 - self.alpha) * fv.f2 / self.norm2
    }
}
