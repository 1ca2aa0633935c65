//! Maximization of the nearest-neighbour concurrence over the angle
//! parametrization: adaptive-step simulated annealing followed by BFGS
//! refinement with central-difference gradients, plus multi-start support.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::TAU;

use crate::chain::{reduced_density, solve_invariant_state};
use crate::entanglement::concurrence;
use crate::error::{FcsError, OptimizerError};
use crate::params::{alpha_count, phi_count, PairExtension, ParameterVector};
use crate::report::{self, AbcElements, StateReport};

/// Gradient-norm threshold at which refinement stops.
const GRAD_TOL: f64 = 1e-7;
/// Central-difference step for numerical gradients.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-6;

/// Control parameters of the annealing schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealingConfig {
    /// Step-adjustment loops per temperature stage.
    pub nt: usize,
    /// Coordinate sweeps per step adjustment.
    pub ns: usize,
    /// Temperature reduction factor, in (0, 1).
    pub rt: f64,
    /// Convergence window: stage values that must agree within `eps`.
    pub neps: usize,
    /// Function-value convergence tolerance.
    pub eps: f64,
    /// Initial temperature.
    pub t0: f64,
    /// Evaluation budget per annealing run.
    pub max_evals: u64,
    /// RNG seed; identical configs give bitwise-identical results.
    pub seed: u64,
    /// Record the best-so-far trace in the result.
    #[serde(default)]
    pub trace: bool,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        Self {
            nt: 20,
            ns: 10,
            rt: 0.75,
            neps: 5,
            eps: 1e-10,
            t0: 1.0,
            max_evals: 500_000,
            seed: 1234,
            trace: false,
        }
    }
}

impl AnnealingConfig {
    fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.rt > 0.0 && self.rt < 1.0) {
            return Err(OptimizerError::BadConfig {
                reason: format!("rt={} must lie in (0, 1)", self.rt),
            });
        }
        if self.eps <= 0.0 || self.t0 <= 0.0 {
            return Err(OptimizerError::BadConfig {
                reason: "eps and t0 must be positive".into(),
            });
        }
        if self.nt == 0 || self.ns == 0 || self.neps == 0 {
            return Err(OptimizerError::BadConfig {
                reason: "nt, ns and neps must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// The function being maximized: nearest-neighbour concurrence as a
/// function of the flat angle vector for a fixed auxiliary dimension.
#[derive(Debug, Clone)]
pub struct Objective {
    pub b: usize,
    /// Complex-unitary rotation probe (adds `b(b-1)/2` phase parameters).
    pub complex_r: bool,
    /// Non-nilpotent generator probe (adds `b-1` superdiagonal weights).
    pub non_nilpotent: bool,
}

impl Objective {
    pub fn new(b: usize) -> Self {
        Self {
            b,
            complex_r: false,
            non_nilpotent: false,
        }
    }

    pub fn with_probes(b: usize, complex_r: bool, non_nilpotent: bool) -> Self {
        Self {
            b,
            complex_r,
            non_nilpotent,
        }
    }

    /// Number of free parameters.
    pub fn dim(&self) -> usize {
        alpha_count(self.b)
            + phi_count(self.b)
            + PairExtension::<f64>::extra_dim(self.b, self.complex_r, self.non_nilpotent)
    }

    /// Splits a flat vector into the core angles and the probe extension.
    pub fn split(&self, x: &[f64]) -> Result<(ParameterVector<f64>, PairExtension<f64>), FcsError> {
        let core = alpha_count(self.b) + phi_count(self.b);
        let params = ParameterVector::from_flat(self.b, &x[..core])?;
        let mut rest = &x[core..];
        let mut ext = PairExtension::default();
        if self.complex_r {
            let n = phi_count(self.b);
            ext.r_phases = Some(rest[..n].to_vec());
            rest = &rest[n..];
        }
        if self.non_nilpotent {
            ext.v1_upper = Some(rest[..self.b - 1].to_vec());
        }
        Ok((params, ext))
    }

    /// Builds the pair, solves the invariant state, forms the two-site
    /// state and returns its concurrence. Deterministic.
    pub fn eval(&self, x: &[f64]) -> Result<f64, FcsError> {
        let (params, ext) = self.split(x)?;
        let pair = crate::params::build_pair_extended(&params, &ext)?;
        let aux = solve_invariant_state(&pair)?;
        let r12 = reduced_density(&pair, &aux, 2)?;
        concurrence(&r12.rho)
    }

    fn full_report(&self, x: &[f64]) -> Result<StateReport, FcsError> {
        let (params, ext) = self.split(x)?;
        report::evaluate_extended(&params, &ext)
    }
}

/// Objective value for a plain (default-probe) parameter point.
pub fn objective(params: &ParameterVector<f64>) -> Result<f64, FcsError> {
    Objective::new(params.b).eval(&params.to_flat())
}

/// Best parameters found by a run, with full state diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub params: ParameterVector<f64>,
    /// Probe parameters (complex-rotation phases, then superdiagonal
    /// weights); empty for default runs.
    pub extra_params: Vec<f64>,
    pub concurrence: f64,
    pub assistance: f64,
    pub elements: AbcElements,
    pub purity12: f64,
    pub purity1: f64,
    pub purity123: f64,
    pub bloch_length_sq: f64,
    pub next_nearest_concurrence: f64,
    pub evals: u64,
    pub converged: bool,
    /// `(evaluation count, best value)` improvements, when requested.
    pub trace: Option<Vec<(u64, f64)>>,
}

impl OptimizationResult {
    fn from_point(
        obj: &Objective,
        x: &[f64],
        evals: u64,
        converged: bool,
        trace: Option<Vec<(u64, f64)>>,
    ) -> Result<Self, OptimizerError> {
        let rep = obj.full_report(x)?;
        let core = alpha_count(obj.b) + phi_count(obj.b);
        Ok(Self {
            params: rep.params.clone(),
            extra_params: x[core..].to_vec(),
            concurrence: rep.concurrence,
            assistance: rep.assistance,
            elements: rep.elements,
            purity12: rep.purity12,
            purity1: rep.purity1,
            purity123: rep.purity123,
            bloch_length_sq: rep.bloch_length_sq,
            next_nearest_concurrence: rep.next_nearest_concurrence,
            evals,
            converged,
            trace,
        })
    }

    /// Flat parameter vector including probe parameters.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut x = self.params.to_flat();
        x.extend_from_slice(&self.extra_params);
        x
    }
}

fn wrap_angle(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

struct Tracker {
    evals: u64,
    best_x: Vec<f64>,
    best: f64,
    trace: Option<Vec<(u64, f64)>>,
}

impl Tracker {
    fn new(x: &[f64], value: f64, record: bool) -> Self {
        Self {
            evals: 0,
            best_x: x.to_vec(),
            best: value,
            trace: if record { Some(vec![(1, value)]) } else { None },
        }
    }

    fn observe(&mut self, x: &[f64], value: f64) {
        if value > self.best {
            self.best = value;
            self.best_x = x.to_vec();
            if let Some(t) = &mut self.trace {
                t.push((self.evals, value));
            }
        }
    }
}

/// Adaptive-step simulated annealing on the periodic box `[0, 2*pi)^dim`.
///
/// Coordinate-wise random steps with per-coordinate widths adjusted every
/// `ns` sweeps to keep acceptance near 50%; temperature multiplied by `rt`
/// after `nt` adjustments; termination once the stage values change by
/// less than `eps` over `neps` consecutive stages. Failed evaluations
/// (degenerate or non-positive solves) count as rejected moves.
pub fn simulated_annealing(
    b: usize,
    config: &AnnealingConfig,
) -> Result<OptimizationResult, OptimizerError> {
    simulated_annealing_with(&Objective::new(b), config)
}

/// As [`simulated_annealing`] with landscape probes enabled on the objective.
pub fn simulated_annealing_with(
    obj: &Objective,
    config: &AnnealingConfig,
) -> Result<OptimizationResult, OptimizerError> {
    config.validate()?;
    let dim = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // initial point: redraw on solver failure
    let mut x: Vec<f64> = Vec::new();
    let mut value = f64::NAN;
    let mut init_evals = 0u64;
    for _ in 0..1000 {
        let cand: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * TAU).collect();
        init_evals += 1;
        if let Ok(v) = obj.eval(&cand) {
            x = cand;
            value = v;
            break;
        }
    }
    if x.is_empty() {
        return Err(OptimizerError::SolveFailed(FcsError::NullspaceEmpty {
            smallest: f64::NAN,
        }));
    }

    let mut tracker = Tracker::new(&x, value, config.trace);
    tracker.evals = init_evals;

    let mut step = vec![TAU; dim];
    let mut temperature = config.t0;
    let mut history: VecDeque<f64> = VecDeque::new();
    let mut converged = false;

    'outer: loop {
        for _ in 0..config.nt {
            let mut accepted = vec![0u32; dim];
            for _ in 0..config.ns {
                for h in 0..dim {
                    if tracker.evals >= config.max_evals {
                        break 'outer;
                    }
                    let mut cand = x.clone();
                    cand[h] = wrap_angle(cand[h] + (2.0 * rng.gen::<f64>() - 1.0) * step[h]);
                    tracker.evals += 1;
                    let cand_value = match obj.eval(&cand) {
                        Ok(v) => v,
                        Err(_) => {
                            // rejected move; still consumes a uniform draw so
                            // the walk stays reproducible across failures
                            let _ = rng.gen::<f64>();
                            continue;
                        }
                    };
                    let accept = cand_value >= value || {
                        let boltzmann = ((cand_value - value) / temperature).exp();
                        rng.gen::<f64>() < boltzmann
                    };
                    if accept {
                        x = cand;
                        value = cand_value;
                        accepted[h] += 1;
                        tracker.observe(&x, value);
                    } else {
                        let _ = rng.gen::<f64>();
                    }
                }
            }
            // Corana step adaptation toward ~50% acceptance
            for h in 0..dim {
                let ratio = f64::from(accepted[h]) / config.ns as f64;
                if ratio > 0.6 {
                    step[h] *= 1.0 + 2.0 * (ratio - 0.6) / 0.4;
                } else if ratio < 0.4 {
                    step[h] /= 1.0 + 2.0 * (0.4 - ratio) / 0.4;
                }
                step[h] = step[h].min(TAU);
            }
        }

        // stage end: convergence test on the achieved values
        let stage_value = value;
        let settled = history.len() == config.neps
            && history
                .iter()
                .all(|&v| (v - stage_value).abs() <= config.eps)
            && (tracker.best - stage_value).abs() <= config.eps;
        if settled {
            converged = true;
            break;
        }
        history.push_back(stage_value);
        if history.len() > config.neps {
            history.pop_front();
        }
        temperature *= config.rt;
        x = tracker.best_x.clone();
        value = tracker.best;
    }

    let trace = tracker.trace.take();
    OptimizationResult::from_point(obj, &tracker.best_x, tracker.evals, converged, trace)
}

/// Central-difference gradient of the concurrence objective.
pub fn numerical_gradient(obj: &Objective, x: &[f64], h: f64) -> Result<Vec<f64>, FcsError> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.eval(&probe)?;
        probe[i] = x[i] - h;
        let fm = obj.eval(&probe)?;
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// BFGS ascent with backtracking line search, started from an annealing
/// result. Never returns a value below its start; line-search failure
/// returns the best iterate found, flagged `converged = false`.
pub fn refine(
    obj: &Objective,
    start: &OptimizationResult,
    max_iters: usize,
) -> Result<OptimizationResult, OptimizerError> {
    let dim = obj.dim();
    let mut x = start.flat_params();
    let mut value = obj.eval(&x)?;
    let mut tracker = Tracker::new(&x, value, false);
    tracker.evals = start.evals;

    let mut grad = match numerical_gradient(obj, &x, DEFAULT_GRADIENT_STEP) {
        Ok(g) => g,
        Err(_) => {
            return OptimizationResult::from_point(obj, &tracker.best_x, tracker.evals, false, None)
        }
    };
    tracker.evals += 2 * dim as u64;

    // inverse Hessian approximation of the negated objective
    let mut h_inv = nalgebra::DMatrix::<f64>::identity(dim, dim);
    let mut converged = false;

    for _ in 0..max_iters {
        let g = nalgebra::DVector::from_vec(grad.iter().map(|&v| -v).collect());
        if g.norm() <= GRAD_TOL {
            converged = true;
            break;
        }
        let direction = -(&h_inv * &g);
        let slope: f64 = direction.dot(&g);
        let mut t = 1.0;
        let mut stepped = false;
        while t >= 1e-14 {
            let cand: Vec<f64> = x
                .iter()
                .zip(direction.iter())
                .map(|(&xi, &di)| xi + t * di)
                .collect();
            tracker.evals += 1;
            if let Ok(cand_value) = obj.eval(&cand) {
                // Armijo condition on the minimized -C
                if -cand_value <= -value + 1e-4 * t * slope {
                    tracker.observe(&cand, cand_value);
                    let new_grad = match numerical_gradient(obj, &cand, DEFAULT_GRADIENT_STEP) {
                        Ok(ng) => ng,
                        Err(_) => break,
                    };
                    tracker.evals += 2 * dim as u64;
                    let s = nalgebra::DVector::from_vec(
                        cand.iter().zip(&x).map(|(&a, &b)| a - b).collect(),
                    );
                    let y = nalgebra::DVector::from_vec(
                        new_grad.iter().zip(&grad).map(|(&a, &b)| -(a - b)).collect(),
                    );
                    let sy = s.dot(&y);
                    if sy > 1e-12 {
                        let rho = 1.0 / sy;
                        let identity = nalgebra::DMatrix::<f64>::identity(dim, dim);
                        let left = &identity - &s * y.transpose() * rho;
                        let right = &identity - &y * s.transpose() * rho;
                        h_inv = &left * h_inv * &right + &s * s.transpose() * rho;
                    } else {
                        h_inv = nalgebra::DMatrix::identity(dim, dim);
                    }
                    x = cand;
                    value = cand_value;
                    grad = new_grad;
                    stepped = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !stepped {
            // line search exhausted
            break;
        }
    }

    let mut result =
        OptimizationResult::from_point(obj, &tracker.best_x, tracker.evals, converged, None)?;
    if result.concurrence < start.concurrence {
        // never degrade the start (can only happen through re-evaluation noise)
        result = start.clone();
    }
    result.trace = start.trace.clone();
    Ok(result)
}

/// Best of `n_starts` independent annealing-plus-refinement runs, seeded
/// `seed, seed+1, ...`. Runs execute in parallel; the merge is
/// max-by-concurrence with lowest-seed tie-breaking, so the outcome is
/// schedule-independent.
pub fn multi_start(
    b: usize,
    config: &AnnealingConfig,
    n_starts: usize,
) -> Result<OptimizationResult, OptimizerError> {
    multi_start_with(&Objective::new(b), config, n_starts)
}

/// As [`multi_start`] with landscape probes enabled.
pub fn multi_start_with(
    obj: &Objective,
    config: &AnnealingConfig,
    n_starts: usize,
) -> Result<OptimizationResult, OptimizerError> {
    config.validate()?;
    let runs: Vec<Result<OptimizationResult, OptimizerError>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(i as u64);
            let annealed = simulated_annealing_with(obj, &cfg)?;
            refine(obj, &annealed, 500)
        })
        .collect();
    let mut best: Option<OptimizationResult> = None;
    for run in runs.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(current) => run.concurrence > current.concurrence,
        };
        if better {
            best = Some(run);
        }
    }
    best.ok_or(OptimizerError::AllStartsFailed { n_starts })
}
