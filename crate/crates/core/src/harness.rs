//! Scenario generation, simulation, lockstep verification and timing.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{Estimator, EstimatorError, SetState, StepPath};
use crate::oracle::{oracle_cut, oracle_step, set_equal, HRep, OracleError};
use crate::plant::{parse_plant, primal_realization, PlantModel};
use crate::polytope::{Polytope, PolytopeDump};
use crate::recursion::{
    isomorphic_image_violations, lag_propagate, slab_cut, step, verify_theorem1, MeasurementSlab,
    PropagateOptions, StepMode, StepReport,
};
use crate::scalar::{dot, Rational, Scalar, TolFloat};

/// Noise samples are multiples of `1 / NOISE_DENOMINATOR` in `[-1, 1]`.
pub const NOISE_DENOMINATOR: i64 = 16;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("step {k}: {source}")]
    Step { k: usize, source: EstimatorError },
    #[error("step {k}: true state lies outside the uncertainty set")]
    ContainmentViolation { k: usize },
    #[error("step {k}: invalid polytope: {report}")]
    InvalidPolytope { k: usize, report: String },
    #[error("measurement file has {got} values, need {need}")]
    MeasurementCount { got: usize, need: usize },
}

impl HarnessError {
    /// Infeasible or degenerate input as opposed to a defect.
    pub fn is_input_error(&self) -> bool {
        matches!(self, HarnessError::Step { source: EstimatorError::InfeasibleMeasurement, .. })
            || matches!(self, HarnessError::MeasurementCount { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(format!("unknown backend '{other}' (expected exact or float)")),
        }
    }
}

/// A stable plant of order `m` with rational poles of modulus below one.
///
/// Poles are `±p/q` with `q` in `2..=5`; numerator coefficients are small
/// integers. Draws that are not coprime are rejected; after 64 rejections
/// the numerator `λ` is used, which is coprime to any such denominator.
pub fn random_stable_plant(m: usize, seed: u64) -> PlantModel<Rational> {
    assert!(m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_9a17);
    let mut d = vec![Rational::from_i64(1)];
    for _ in 0..m {
        let q = rng.gen_range(2..=5);
        let p = rng.gen_range(1..q);
        let root = Rational::new(if rng.gen_bool(0.5) { p } else { -p }, q);
        // multiply by (1 - root λ)
        let mut next = d.clone();
        next.push(Rational::from_i64(0));
        for i in 1..next.len() {
            next[i] = next[i].clone() - &root.mul_ref(&d[i - 1]);
        }
        d = next;
    }
    for _ in 0..64 {
        let mut n = vec![Rational::from_i64(0)];
        n.extend((0..m).map(|_| Rational::from_i64(rng.gen_range(-3..=3))));
        if let Ok(p) = parse_plant(&n, &d) {
            return p;
        }
    }
    let mut n = vec![Rational::from_i64(0); m + 1];
    n[1] = Rational::from_i64(1);
    parse_plant(&n, &d).expect("λ is coprime to a denominator with nonzero constant term")
}

/// True trajectory and measurements: `x_{k+1} = A x_k + B u_k`,
/// `z_k = C x_k + w_k`, for `k = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<Vec<Rational>>,
    pub u: Vec<Rational>,
    pub w: Vec<Rational>,
    pub z: Vec<Rational>,
}

fn grid_sample(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(-NOISE_DENOMINATOR..=NOISE_DENOMINATOR), NOISE_DENOMINATOR)
}

pub fn sample_trajectory(p: &PlantModel<Rational>, x0: &[Rational], horizon: usize, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let primal = primal_realization(p);
    let c = p.output_row();
    let mut t = Trajectory { x: vec![x0.to_vec()], u: Vec::new(), w: Vec::new(), z: Vec::new() };
    for k in 0..=horizon {
        let w = grid_sample(&mut rng);
        t.z.push(dot(&c, &t.x[k]) + &w);
        t.w.push(w);
        if k < horizon {
            let u = grid_sample(&mut rng);
            let ax = primal.a.mul_vec(&t.x[k]);
            t.x.push(ax.iter().zip(&primal.b).map(|(a, b)| a.clone() + &b.mul_ref(&u)).collect());
            t.u.push(u);
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: PlantModel<Rational>,
    pub horizon: usize,
    pub seed: u64,
    pub x0: Vec<Rational>,
    pub mode: StepMode,
    pub backend: Backend,
    /// Replayed measurements `z_0..=z_K`; simulated when absent.
    pub measurements: Option<Vec<Rational>>,
}

impl Scenario {
    pub fn new(plant: PlantModel<Rational>, horizon: usize, seed: u64) -> Self {
        let m = plant.order();
        Scenario {
            plant,
            horizon,
            seed,
            x0: vec![Rational::from_i64(0); m],
            mode: StepMode::default(),
            backend: Backend::default(),
            measurements: None,
        }
    }

    pub fn with_mode(mut self, mode: StepMode) -> Self {
        self.mode = mode;
        self
    }

    /// Simulated trajectory, or `None` when measurements are replayed.
    pub fn trajectory(&self) -> Option<Trajectory> {
        self.measurements.is_none().then(|| sample_trajectory(&self.plant, &self.x0, self.horizon, self.seed))
    }

    fn measurements_and_truth(&self) -> Result<(Vec<Rational>, Option<Vec<Vec<Rational>>>), HarnessError> {
        match &self.measurements {
            Some(z) if z.len() < self.horizon + 1 => {
                Err(HarnessError::MeasurementCount { got: z.len(), need: self.horizon + 1 })
            }
            Some(z) => Ok((z.clone(), None)),
            None => {
                let t = sample_trajectory(&self.plant, &self.x0, self.horizon, self.seed);
                Ok((t.z, Some(t.x)))
            }
        }
    }
}

/// One entry of a step trace: the set `S_k` and how it was obtained.
///
/// In propagate-then-update order `S_k` has absorbed `z_k`; in
/// update-then-propagate order it has absorbed `z_{k-1}` and `z` is that
/// measurement (absent for `k = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: usize,
    pub z: Option<String>,
    pub mode: StepMode,
    pub path: Option<StepPath>,
    pub polytope: Option<PolytopeDump>,
    pub flat: Option<HRep<Rational>>,
    pub interval: Option<[String; 2]>,
    pub report: Option<StepReport>,
    pub true_state: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub trace: Vec<TraceEntry>,
    pub trajectory: Option<Trajectory>,
    /// `(n_f, n_v)` of each full-dimensional `S_k`.
    pub sizes: Vec<(usize, usize)>,
}

impl SimulationResult {
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(&self.trace).expect("trace serializes")
    }
}

fn to_float(r: &Rational) -> TolFloat {
    TolFloat::new(r.to_f64())
}

fn state_entry<S: Scalar>(entry: &mut TraceEntry, state: &SetState<S>) {
    match state {
        SetState::Interval { lo, hi } => entry.interval = Some([lo.to_repr(), hi.to_repr()]),
        SetState::Flat(h) => {
            let mut out = HRep::new(h.dim);
            for r in &h.rows {
                let a = r.a.iter().map(|x| Rational::parse_str(&x.to_repr()).expect("repr parses")).collect();
                out.push(a, Rational::parse_str(&r.b.to_repr()).expect("repr parses"));
            }
            entry.flat = Some(out)
        }
        SetState::Full(p) => entry.polytope = Some(p.to_dump()),
    }
}

/// Run the recursion on one scenario, checking true-state containment and
/// polytope validity at every step.
pub fn simulate(sc: &Scenario) -> Result<SimulationResult, HarnessError> {
    match sc.backend {
        Backend::Exact => simulate_with(sc, &sc.plant, |r| r.clone()),
        Backend::Float => simulate_with(sc, &sc.plant.convert(to_float), to_float),
    }
}

fn simulate_with<S: Scalar>(
    sc: &Scenario,
    plant: &PlantModel<S>,
    conv: impl Fn(&Rational) -> S,
) -> Result<SimulationResult, HarnessError> {
    let (zs, truth) = sc.measurements_and_truth()?;
    let x0: Vec<S> = sc.x0.iter().map(&conv).collect();
    let mut est = Estimator::new(plant.clone(), &x0, sc.mode);
    let mut trace = Vec::with_capacity(sc.horizon + 1);
    let mut sizes = Vec::new();

    let mut record = |k: usize,
                      z: Option<&Rational>,
                      path: Option<StepPath>,
                      report: Option<StepReport>,
                      state: &SetState<S>|
     -> Result<(), HarnessError> {
        let mut entry = TraceEntry {
            k,
            z: z.map(Scalar::to_repr),
            mode: sc.mode,
            path,
            polytope: None,
            flat: None,
            interval: None,
            report,
            true_state: None,
        };
        if let Some(xs) = &truth {
            let x: Vec<S> = xs[k].iter().map(&conv).collect();
            if !state.contains(&x) {
                return Err(HarnessError::ContainmentViolation { k });
            }
            entry.true_state = Some(xs[k].iter().map(Scalar::to_repr).collect());
        }
        if let SetState::Full(p) = state {
            let v = p.validate();
            if !v.passed() {
                return Err(HarnessError::InvalidPolytope { k, report: v.to_string() });
            }
            sizes.push((p.n_facets(), p.n_vertices()));
        }
        state_entry(&mut entry, state);
        trace.push(entry);
        Ok(())
    };

    match sc.mode {
        StepMode::PropagateThenUpdate => {
            let path = est.cut(&conv(&zs[0])).map_err(|source| HarnessError::Step { k: 0, source })?;
            record(0, Some(&zs[0]), Some(path), None, est.state())?;
            for k in 1..=sc.horizon {
                let out = est.step(&conv(&zs[k])).map_err(|source| HarnessError::Step { k, source })?;
                record(k, Some(&zs[k]), Some(out.path), out.report, est.state())?;
            }
        }
        StepMode::UpdateThenPropagate => {
            record(0, None, None, None, est.state())?;
            for k in 1..=sc.horizon {
                let out = est.step(&conv(&zs[k - 1])).map_err(|source| HarnessError::Step { k, source })?;
                record(k, Some(&zs[k - 1]), Some(out.path), out.report, est.state())?;
            }
        }
    }
    let trajectory = sc.trajectory();
    Ok(SimulationResult { trace, trajectory, sizes })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Cap on (vertex, direction) pairs per step for the alignment check; 0 = all.
    pub theorem_samples: usize,
    /// Fault injection: drop the ridge rows of the propagation table.
    pub skip_ridges: bool,
}

/// First set disagreement between the two pipelines.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub k: usize,
    pub fast: String,
    pub oracle: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifySummary {
    pub steps: usize,
    pub fast_steps: usize,
    pub set_checks: usize,
    pub theorem_checks: usize,
    pub theorem_violations: Vec<String>,
    pub bound_violations: Vec<String>,
    pub isomorphism_violations: Vec<String>,
    pub validation_failures: Vec<String>,
    pub reports: Vec<StepReport>,
    /// `n_f` of every full-dimensional set seen.
    pub facet_counts: Vec<usize>,
    pub mismatch: Option<Mismatch>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
            && self.theorem_violations.is_empty()
            && self.bound_violations.is_empty()
            && self.isomorphism_violations.is_empty()
            && self.validation_failures.is_empty()
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "steps={} fast={} set_checks={} alignment_checks={} alignment_violations={} bound_violations={} isomorphism_violations={} validation_failures={}",
            self.steps,
            self.fast_steps,
            self.set_checks,
            self.theorem_checks,
            self.theorem_violations.len(),
            self.bound_violations.len(),
            self.isomorphism_violations.len(),
            self.validation_failures.len(),
        );
        if let Some(m) = &self.mismatch {
            s.push_str(&format!("\nmismatch at step {}\nfast: {}\noracle: {}", m.k, m.fast, m.oracle));
        }
        s
    }
}

fn state_json(state: &SetState<Rational>) -> String {
    match state {
        SetState::Full(p) => serde_json::to_string(&p.to_dump()).expect("dump serializes"),
        other => other.to_hrep().to_json(),
    }
}

fn check_validity(k: usize, what: &str, p: &Polytope<Rational>, out: &mut VerifySummary) {
    let v = p.validate();
    if !v.passed() {
        out.validation_failures.push(format!("step {k} {what}: {v}"));
    }
}

/// Run the fast pipeline and the projection oracle side by side (exact
/// arithmetic), comparing the sets at every step and checking the
/// structural and alignment properties of each fast step.
pub fn verify(sc: &Scenario, opts: VerifyOptions) -> Result<VerifySummary, HarnessError> {
    let p = &sc.plant;
    let (zs, _) = sc.measurements_and_truth()?;
    let mut est = Estimator::new(p.clone(), &sc.x0, sc.mode)
        .with_options(PropagateOptions { skip_ridges: opts.skip_ridges });
    let mut oracle = est.state().to_hrep();
    let mut out = VerifySummary::default();
    let oracle_err = |k: usize, e: OracleError| HarnessError::Step { k, source: e.into() };

    let compare = |k: usize, est: &Estimator<Rational>, oracle: &HRep<Rational>, out: &mut VerifySummary| {
        out.set_checks += 1;
        let equal = match est.state() {
            SetState::Full(poly) => set_equal(poly, oracle),
            other => set_equal(&other.to_hrep(), oracle),
        };
        if !equal && out.mismatch.is_none() {
            out.mismatch = Some(Mismatch { k, fast: state_json(est.state()), oracle: oracle.to_json() });
        }
        if let SetState::Full(poly) = est.state() {
            out.facet_counts.push(poly.n_facets());
            check_validity(k, "set", poly, out);
        }
    };

    let mut prev_z: Option<Rational> = None;
    let first_step = match sc.mode {
        StepMode::PropagateThenUpdate => {
            est.cut(&zs[0]).map_err(|source| HarnessError::Step { k: 0, source })?;
            oracle = oracle_cut(&oracle, &zs[0], p).map_err(|e| oracle_err(0, e))?;
            prev_z = Some(zs[0].clone());
            compare(0, &est, &oracle, &mut out);
            1
        }
        StepMode::UpdateThenPropagate => 0,
    };
    for k in first_step..first_step + sc.horizon {
        if out.mismatch.is_some() {
            break;
        }
        let z = &zs[k];
        let before = est.state().as_polytope().cloned();
        let outcome = est.step(z).map_err(|source| HarnessError::Step { k, source })?;
        oracle = oracle_step(&oracle, z, p, sc.mode).map_err(|e| oracle_err(k, e))?;
        out.steps += 1;
        let label = if sc.mode == StepMode::PropagateThenUpdate { k } else { k + 1 };
        compare(label, &est, &oracle, &mut out);

        if let (Some(s), Some(report)) = (before, outcome.report) {
            out.fast_steps += 1;
            // propagation part on its own
            let prop_in = match sc.mode {
                StepMode::UpdateThenPropagate => slab_cut(&s, &MeasurementSlab::new(p, z.clone())).ok(),
                StepMode::PropagateThenUpdate => Some(s.clone()),
            };
            if let Some(prop_in) = prop_in {
                check_validity(label, "cut input", &prop_in, &mut out);
                if let Ok((prop_out, _)) = lag_propagate(&prop_in, p) {
                    check_validity(label, "propagated", &prop_out, &mut out);
                    let bad = isomorphic_image_violations(&prop_in, &prop_out, p);
                    if !bad.is_empty() {
                        out.isomorphism_violations.push(format!("step {label}: source facets {bad:?}"));
                    }
                }
            }
            if !report.within_bounds() {
                out.bound_violations.push(format!(
                    "step {label}: n_f {} -> {} with {} ridges, n_v {} -> {}",
                    report.n_f, report.n_f_prop, report.n_r, report.n_v, report.n_v_prop
                ));
            }
            out.reports.push(report);

            // alignment check against the update-then-propagate successor
            let zt = match sc.mode {
                StepMode::UpdateThenPropagate => Some(z.clone()),
                StepMode::PropagateThenUpdate => prev_z.clone(),
            };
            if let Some(zt) = zt {
                let next = match (sc.mode, est.state()) {
                    (StepMode::UpdateThenPropagate, SetState::Full(n)) => Some(n.clone()),
                    _ => step(&s, &zt, p, StepMode::UpdateThenPropagate).ok().map(|(n, _)| n),
                };
                if let Some(next) = next {
                    let rep = verify_theorem1(&s, &next, &zt, p, opts.theorem_samples);
                    out.theorem_checks += rep.checked;
                    out.theorem_violations.extend(rep.violations.into_iter().map(|v| format!("step {label}: {v}")));
                }
            }
        }
        prev_z = Some(z.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub order: usize,
    pub steps: usize,
    pub repeats: usize,
    pub seed: u64,
    pub mode: StepMode,
}

/// One timed update of a full-dimensional set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub repeat: usize,
    pub k: usize,
    pub n_f: usize,
    pub n_v: usize,
    pub t_fv: f64,
    /// `None` when the oracle hit its row guard.
    pub t_fm: Option<f64>,
    pub equal: Option<bool>,
}

impl BenchRecord {
    pub fn ratio(&self) -> Option<f64> {
        self.t_fm.map(|t| t / self.t_fv)
    }
}

/// Time the fast update against the projection oracle on the same input set,
/// for every fast step of a random stable plant of the given order.
/// Every repeat replays the same scenario.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, HarnessError> {
    let plant = random_stable_plant(cfg.order, cfg.seed);
    let sc = Scenario::new(plant, cfg.steps, cfg.seed).with_mode(cfg.mode);
    let runs: Vec<Result<Vec<BenchRecord>, HarnessError>> =
        (0..cfg.repeats).into_par_iter().map(|r| bench_once(&sc, r)).collect();
    let mut out = Vec::new();
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}

fn bench_once(sc: &Scenario, repeat: usize) -> Result<Vec<BenchRecord>, HarnessError> {
    let p = &sc.plant;
    let (zs, _) = sc.measurements_and_truth()?;
    let mut est = Estimator::new(p.clone(), &sc.x0, sc.mode);
    let offset = match sc.mode {
        StepMode::PropagateThenUpdate => {
            est.cut(&zs[0]).map_err(|source| HarnessError::Step { k: 0, source })?;
            1
        }
        StepMode::UpdateThenPropagate => 0,
    };
    let mut records = Vec::new();
    for k in offset..offset + sc.horizon {
        let z = &zs[k];
        let Some(s) = est.state().as_polytope().cloned() else {
            est.step(z).map_err(|source| HarnessError::Step { k, source })?;
            continue;
        };
        let t0 = Instant::now();
        let fast = step(&s, z, p, sc.mode);
        let t_fv = t0.elapsed().as_secs_f64();
        let h = s.to_hrep();
        let t1 = Instant::now();
        let slow = oracle_step(&h, z, p, sc.mode);
        let t_fm = t1.elapsed().as_secs_f64();
        let (t_fm, equal) = match (&fast, &slow) {
            (_, Err(OracleError::RowLimit { .. })) => (None, None),
            (Ok((a, _)), Ok(b)) => (Some(t_fm), Some(set_equal(a, b))),
            _ => (Some(t_fm), Some(false)),
        };
        if fast.is_ok() {
            records.push(BenchRecord { repeat, k, n_f: s.n_facets(), n_v: s.n_vertices(), t_fv, t_fm, equal });
        }
        est.step(z).map_err(|source| HarnessError::Step { k, source })?;
    }
    Ok(records)
}

pub fn write_bench_csv(records: &[BenchRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "repeat,k,n_f,n_v,t_fv,t_fm,ratio,equal")?;
    for r in records {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.9}"));
        writeln!(
            w,
            "{},{},{},{},{:.9},{},{},{}",
            r.repeat,
            r.k,
            r.n_f,
            r.n_v,
            r.t_fv,
            opt(r.t_fm),
            opt(r.ratio()),
            r.equal.map_or(String::new(), |e| e.to_string())
        )?;
    }
    Ok(())
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN timings"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::tests::q;
    use crate::linalg::Matrix;
    use crate::plant::primal_realization;

    fn swap_plant() -> PlantModel<Rational> {
        parse_plant(&[q(0), q(1), q(0)], &[q(1), q(0), q(-1)]).unwrap()
    }

    #[test]
    fn random_plants_are_stable_and_deterministic() {
        for m in 1..=4 {
            for seed in 0..20 {
                let p = random_stable_plant(m, seed);
                assert_eq!(p.order(), m);
                assert_eq!(p, random_stable_plant(m, seed));
                assert!(parse_plant(p.numerator(), p.denominator()).is_ok());
                // poles inside the unit disc: powers of A decay
                let a = primal_realization(&p).a;
                let mut pow = Matrix::identity(m);
                for _ in 0..80 {
                    pow = pow.mul(&a);
                }
                assert!(pow.to_rows().iter().flatten().all(|x| x.to_f64().abs() < 1e-3), "m {m} seed {seed}");
            }
        }
    }

    #[test]
    fn containment_of_pushed_state() {
        // x0 = 0, u0 = 1, w0 = 0 -> z0 = 0, and (0, 1) lies in S_1
        let mut sc = Scenario::new(swap_plant(), 1, 0).with_mode(StepMode::UpdateThenPropagate);
        sc.measurements = Some(vec![q(0), q(0)]);
        let res = simulate(&sc).unwrap();
        let h = res.trace[1].flat.clone().expect("a segment is flat");
        assert!(h.contains(&[q(0), q(1)]));
    }

    #[test]
    fn simulate_is_deterministic() {
        let sc = Scenario::new(random_stable_plant(2, 3), 6, 11);
        let a = simulate(&sc).unwrap().trace_json();
        let b = simulate(&sc).unwrap().trace_json();
        assert_eq!(a, b);
    }

    #[test]
    fn float_backend_runs() {
        let mut sc = Scenario::new(random_stable_plant(2, 5), 6, 2);
        sc.backend = Backend::Float;
        let res = simulate(&sc).unwrap();
        assert_eq!(res.trace.len(), 7);
    }

    #[test]
    fn verify_small_scenarios() {
        for seed in 0..3 {
            for mode in [StepMode::UpdateThenPropagate, StepMode::PropagateThenUpdate] {
                let sc = Scenario::new(random_stable_plant(2, seed), 6, seed).with_mode(mode);
                let s = verify(&sc, VerifyOptions::default()).unwrap();
                assert!(s.passed(), "{}", s.describe());
                assert!(s.fast_steps > 0);
            }
        }
    }

    #[test]
    fn verify_first_order() {
        let sc = Scenario::new(random_stable_plant(1, 4), 8, 4);
        let s = verify(&sc, VerifyOptions::default()).unwrap();
        assert!(s.passed(), "{}", s.describe());
        assert_eq!(s.set_checks, 9);
    }

    #[test]
    fn bench_tiny() {
        let cfg = BenchConfig { order: 2, steps: 4, repeats: 5, seed: 1, mode: StepMode::default() };
        let recs = bench(&cfg).unwrap();
        assert!(!recs.is_empty());
        assert!(recs.iter().all(|r| r.equal == Some(true)));
        let counts = |r: usize| recs.iter().filter(|x| x.repeat == r).map(|x| x.n_f).collect::<Vec<_>>();
        for r in 1..5 {
            assert_eq!(counts(0), counts(r));
        }
        let mut buf = Vec::new();
        write_bench_csv(&recs, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("repeat,k,n_f"));
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
