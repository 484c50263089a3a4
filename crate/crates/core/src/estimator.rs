//! Stateful driver for the set recursion.
//!
//! The set starts as the single known state `x0`, which has no interior, so
//! the first steps go through the projection path on halfspace form. Once
//! the set is full-dimensional it is converted to `(V, F, h, I)` form and the
//! incidence pipeline takes over. A cut that leaves only a lower-dimensional
//! face drops back to the projection path until full dimension returns.
//! First-order plants use the interval recursion throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{oracle_cut, oracle_step, HRep, OracleError};
use crate::plant::PlantModel;
use crate::polytope::{from_halfspaces, Polytope, PolytopeError};
use crate::recursion::{
    interval_cut, interval_propagate, step_with_options, PropagateOptions, RecursionError, StepMode,
    StepReport,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimatorError {
    #[error("measurement is inconsistent with the current uncertainty set")]
    InfeasibleMeasurement,
    #[error(transparent)]
    Recursion(RecursionError),
    #[error(transparent)]
    Oracle(OracleError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

impl From<RecursionError> for EstimatorError {
    fn from(e: RecursionError) -> Self {
        match e {
            RecursionError::InfeasibleMeasurement => EstimatorError::InfeasibleMeasurement,
            other => EstimatorError::Recursion(other),
        }
    }
}

impl From<OracleError> for EstimatorError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InfeasibleMeasurement => EstimatorError::InfeasibleMeasurement,
            other => EstimatorError::Oracle(other),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SetState<S: Scalar> {
    Interval { lo: S, hi: S },
    /// Not full-dimensional; held as halfspaces.
    Flat(HRep<S>),
    Full(Polytope<S>),
}

impl<S: Scalar> SetState<S> {
    pub fn contains(&self, x: &[S]) -> bool {
        match self {
            SetState::Interval { lo, hi } => {
                lo.cmp_to(&x[0]) != std::cmp::Ordering::Greater && x[0].cmp_to(hi) != std::cmp::Ordering::Greater
            }
            SetState::Flat(h) => h.contains(x),
            SetState::Full(p) => p.contains(x),
        }
    }

    pub fn as_polytope(&self) -> Option<&Polytope<S>> {
        match self {
            SetState::Full(p) => Some(p),
            _ => None,
        }
    }

    pub fn to_hrep(&self) -> HRep<S> {
        match self {
            SetState::Interval { lo, hi } => {
                let mut h = HRep::new(1);
                h.push(vec![S::one()], hi.clone());
                h.push(vec![-S::one()], -lo.clone());
                h
            }
            SetState::Flat(h) => h.clone(),
            SetState::Full(p) => p.to_hrep(),
        }
    }
}

/// Which code path produced a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepPath {
    Fast,
    Oracle,
    Interval,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub path: StepPath,
    /// Only filled for the fast path.
    pub report: Option<StepReport>,
    /// The fast path hit a degenerate cut and was redone by projection.
    pub degenerate_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct Estimator<S: Scalar> {
    plant: PlantModel<S>,
    mode: StepMode,
    state: SetState<S>,
    opts: PropagateOptions,
}

impl<S: Scalar> Estimator<S> {
    /// Start from the exactly known state `x0`.
    pub fn new(plant: PlantModel<S>, x0: &[S], mode: StepMode) -> Self {
        assert_eq!(x0.len(), plant.order(), "initial state has the wrong dimension");
        let state = if plant.order() == 1 {
            SetState::Interval { lo: x0[0].clone(), hi: x0[0].clone() }
        } else {
            SetState::Flat(HRep::point(x0))
        };
        Estimator { plant, mode, state, opts: PropagateOptions::default() }
    }

    pub fn with_options(mut self, opts: PropagateOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn plant(&self) -> &PlantModel<S> {
        &self.plant
    }

    pub fn mode(&self) -> StepMode {
        self.mode
    }

    pub fn state(&self) -> &SetState<S> {
        &self.state
    }

    /// Intersect the current set with the slab of `z` without propagating.
    /// Used once at the start of a propagate-then-update run.
    pub fn cut(&mut self, z: &S) -> Result<StepPath, EstimatorError> {
        let p = &self.plant;
        let (state, path) = match &self.state {
            SetState::Interval { lo, hi } => {
                let (lo, hi) = interval_cut(lo, hi, z, p)?;
                (SetState::Interval { lo, hi }, StepPath::Interval)
            }
            SetState::Flat(h) => (settle(oracle_cut(h, z, p)?)?, StepPath::Oracle),
            SetState::Full(poly) => {
                let slab = crate::recursion::MeasurementSlab::new(p, z.clone());
                match crate::recursion::slab_cut(poly, &slab) {
                    Ok(out) => (SetState::Full(out), StepPath::Fast),
                    Err(RecursionError::DegenerateCut) => {
                        (settle(oracle_cut(&poly.to_hrep(), z, p)?)?, StepPath::Oracle)
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        self.state = state;
        Ok(path)
    }

    /// One recursion step with measurement `z`, in the configured order.
    pub fn step(&mut self, z: &S) -> Result<StepOutcome, EstimatorError> {
        let p = &self.plant;
        let (state, outcome) = match &self.state {
            SetState::Interval { lo, hi } => {
                let (lo, hi) = match self.mode {
                    StepMode::UpdateThenPropagate => {
                        let (l, h) = interval_cut(lo, hi, z, p)?;
                        interval_propagate(&l, &h, p)
                    }
                    StepMode::PropagateThenUpdate => {
                        let (l, h) = interval_propagate(lo, hi, p);
                        interval_cut(&l, &h, z, p)?
                    }
                };
                let out = StepOutcome { path: StepPath::Interval, report: None, degenerate_fallback: false };
                (SetState::Interval { lo, hi }, out)
            }
            SetState::Flat(h) => {
                let next = settle(oracle_step(h, z, p, self.mode)?)?;
                (next, StepOutcome { path: StepPath::Oracle, report: None, degenerate_fallback: false })
            }
            SetState::Full(poly) => match step_with_options(poly, z, p, self.mode, self.opts) {
                Ok((next, report)) => (
                    SetState::Full(next),
                    StepOutcome { path: StepPath::Fast, report: Some(report), degenerate_fallback: false },
                ),
                Err(RecursionError::DegenerateCut) => {
                    let next = settle(oracle_step(&poly.to_hrep(), z, p, self.mode)?)?;
                    (next, StepOutcome { path: StepPath::Oracle, report: None, degenerate_fallback: true })
                }
                Err(e) => return Err(e.into()),
            },
        };
        self.state = state;
        Ok(outcome)
    }
}

/// Convert to `(V, F, h, I)` form once the set has an interior.
fn settle<S: Scalar>(h: HRep<S>) -> Result<SetState<S>, EstimatorError> {
    if h.is_full_dimensional() {
        Ok(SetState::Full(from_halfspaces(&h)?))
    } else {
        Ok(SetState::Flat(h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::set_equal;
    use crate::plant::parse_plant;
    use crate::polytope::tests::q;
    use crate::scalar::Rational;

    #[test]
    fn bootstrap_reaches_full_dimension() {
        let p = parse_plant(&[q(0), q(1), q(0)], &[q(1), q(0), q(-1)]).unwrap();
        let mut est = Estimator::new(p.clone(), &[q(0), q(0)], StepMode::UpdateThenPropagate);
        assert!(matches!(est.state(), SetState::Flat(_)));
        let first = est.step(&q(0)).unwrap();
        assert_eq!(first.path, StepPath::Oracle);
        // {0} ⊕ segment along B, then its swap image plus the segment again
        est.step(&q(0)).unwrap();
        let SetState::Full(s) = est.state() else { panic!("still flat: {:?}", est.state()) };
        assert!(s.validate().passed());
        assert_eq!(s.n_vertices(), 4);
        let out = est.step(&q(0)).unwrap();
        assert_eq!(out.path, StepPath::Fast);
        assert!(out.report.unwrap().within_bounds());

        let mut oracle = HRep::point(&[q(0), q(0)]);
        for _ in 0..3 {
            oracle = oracle_step(&oracle, &q(0), &p, StepMode::UpdateThenPropagate).unwrap();
        }
        assert!(set_equal(est.state().as_polytope().unwrap(), &oracle));
    }

    #[test]
    fn degenerate_cut_falls_back() {
        let p = parse_plant(&[q(0), q(1), q(0)], &[q(1), q(0), q(-1)]).unwrap();
        let mut est = Estimator::new(p, &[q(0), q(0)], StepMode::PropagateThenUpdate);
        est.step(&q(0)).unwrap();
        est.step(&q(0)).unwrap();
        assert!(matches!(est.state(), SetState::Full(_)));
        // the set is now [-1,1]^2; a slab touching only x2 = 1 leaves an edge
        let out = est.step(&q(3)).unwrap();
        assert!(out.degenerate_fallback);
        assert!(matches!(est.state(), SetState::Flat(_)));
        assert_eq!(est.step(&q(10)).unwrap_err(), EstimatorError::InfeasibleMeasurement);
    }

    #[test]
    fn first_order_uses_intervals() {
        let p = parse_plant(&[q(0), q(1)], &[q(1), Rational::new(-1, 2)]).unwrap();
        let mut est = Estimator::new(p, &[q(0)], StepMode::UpdateThenPropagate);
        assert_eq!(est.step(&q(0)).unwrap().path, StepPath::Interval);
        let SetState::Interval { lo, hi } = est.state() else { panic!() };
        assert_eq!((lo.clone(), hi.clone()), (q(-1), q(1)));
    }
}
