//! Numerical search for heralded generation circuits over a universal mesh.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{herald, Acceptance, DetectionSetup, DetectorModel, HeraldSpec};
use crate::error::{Error, Result};
use crate::fock::{best_corrected_fidelity, fidelity, Correction, ModeOccupation, PureState};
use crate::interferometer::{compile, decompose_params, mesh_circuit, mesh_layout, Circuit, UnitaryMatrix};
use crate::propagate::{evolve, evolve_with, EvolveOptions};
use crate::schemes::{self, SchemeDefinition, SchemeStatus, TargetSpec, NEGLIGIBLE};

/// Relative weights of the two cost terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub fidelity: f64,
    pub success: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            fidelity: 1.0,
            success: 0.2,
        }
    }
}

/// Restarts, iterations per restart and the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 64,
            iterations: 200,
            seed: 0,
        }
    }
}

fn default_threshold() -> f64 {
    0.999
}

/// What to search for: input, heralding, target and search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchProblem {
    pub name: String,
    pub modes: usize,
    pub input: Vec<u8>,
    pub herald: HeraldSpec,
    pub target: TargetSpec,
    #[serde(default)]
    pub correction: Correction,
    #[serde(default)]
    pub weights: CostWeights,
    /// Success probability regarded as full marks; 1 when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ref: Option<f64>,
    #[serde(default)]
    pub budget: Budget,
    /// Fidelity a circuit must reach to count as a solution.
    #[serde(default = "default_threshold")]
    pub fidelity_threshold: f64,
    /// Herald detectors; ideal number-resolving when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorModel>,
}

impl SearchProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.len() != self.modes {
            return Err(Error::LengthMismatch {
                expected: self.modes,
                actual: self.input.len(),
            });
        }
        if !(self.weights.fidelity > 0.0) || !(self.weights.success >= 0.0) {
            return Err(Error::invalid("cost weights must be positive"));
        }
        if let Some(p) = self.p_ref {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("p_ref {p} outside (0, 1]")));
            }
        }
        if self.budget.restarts == 0 {
            return Err(Error::invalid("at least one restart is needed"));
        }
        self.scheme_for(&Circuit::new(self.modes), "").validate()
    }

    /// The problem as a scheme with the given circuit.
    pub fn scheme_for(&self, circuit: &Circuit, provenance: &str) -> SchemeDefinition {
        SchemeDefinition {
            name: self.name.clone(),
            description: String::new(),
            modes: self.modes,
            elements: circuit.elements.clone(),
            input: self.input.clone(),
            herald: self.herald.clone(),
            postselect: false,
            detectors: self.detectors.clone(),
            target: self.target.clone(),
            correction: self.correction,
            expected_success: None,
            status: SchemeStatus::Unverified,
            provenance: provenance.into(),
        }
    }

    /// A problem whose starting point is `scheme`'s circuit.
    pub fn from_scheme(scheme: &SchemeDefinition) -> Result<Self> {
        if scheme.postselect {
            return Err(Error::Scheme("postselected schemes cannot be searched".into()));
        }
        let p_ref = scheme.expected().transpose()?.map(|r| crate::exact::to_f64(&r));
        Ok(Self {
            name: scheme.name.clone(),
            modes: scheme.modes,
            input: scheme.input.clone(),
            herald: scheme.herald.clone(),
            target: scheme.target.clone(),
            correction: scheme.correction,
            weights: CostWeights::default(),
            p_ref,
            budget: Budget::default(),
            fidelity_threshold: default_threshold(),
            detectors: scheme.detectors.clone(),
        })
    }

    pub fn param_count(&self) -> usize {
        2 * mesh_layout(self.modes).len() + self.modes
    }
}

/// Fidelity and success of a circuit for a problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fidelity: f64,
    pub success_prob: f64,
}

/// Prepared problem data reused across cost evaluations.
struct Evaluator<'a> {
    problem: &'a SearchProblem,
    scheme: SchemeDefinition,
    input: PureState,
    register: Option<crate::fock::Register>,
    setup: DetectionSetup,
    /// Accepted patterns with their targets (fast path), if detection is
    /// ideal and the acceptance rule is an explicit pattern list.
    patterns: Option<Vec<(Vec<u8>, PureState)>>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a SearchProblem) -> Result<Self> {
        let scheme = problem.scheme_for(&Circuit::new(problem.modes), "");
        let register = scheme.local_register()?;
        let setup = scheme.default_setup();
        let patterns = match &problem.herald.acceptance {
            Acceptance::Patterns { patterns } if setup.is_ideal() => Some(
                patterns
                    .iter()
                    .map(|p| Ok((p.clone(), scheme.pattern_target(problem.herald.tag_of(p))?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => None,
        };
        Ok(Self {
            problem,
            input: PureState::basis(ModeOccupation::new(problem.input.clone())),
            scheme,
            register,
            setup,
            patterns,
        })
    }

    fn pattern_fidelity(&self, state: &PureState, target: &PureState) -> Result<f64> {
        match (&self.register, self.problem.correction) {
            (Some(r), c) if c != Correction::None => {
                Ok(best_corrected_fidelity(state, target, r, c)?.fidelity)
            }
            _ => fidelity(state, target),
        }
    }

    fn evaluate(&self, u: &UnitaryMatrix) -> Result<Evaluation> {
        let hm = &self.problem.herald.modes;
        let (mut fsum, mut psum) = (0.0, 0.0);
        if let Some(patterns) = &self.patterns {
            for (p, target) in patterns {
                let fixed: Vec<(usize, u8)> = hm.iter().copied().zip(p.iter().copied()).collect();
                let out = evolve_with(&self.input, u, &EvolveOptions::default().with_fixed_outputs(fixed))?;
                let cond = out.project(hm, p)?;
                let prob = cond.norm_sqr();
                if prob > NEGLIGIBLE {
                    fsum += prob * self.pattern_fidelity(&cond, target)?;
                    psum += prob;
                }
            }
        } else {
            let out = evolve(&self.input, u)?;
            let r = herald(&out, &self.problem.herald, &self.setup)?;
            for p in &r.patterns {
                if p.probability > NEGLIGIBLE {
                    let target = self.scheme.pattern_target(
                        p.tag.as_deref().or_else(|| self.problem.herald.tag_of(&p.pattern)),
                    )?;
                    let e = p.ensemble(r.target_modes.len());
                    let f = match (&self.register, self.problem.correction) {
                        (Some(reg), c) if c != Correction::None => {
                            best_corrected_fidelity(&e, &target, reg, c)?.fidelity
                        }
                        _ => fidelity(&e, &target)?,
                    };
                    fsum += p.probability * f;
                    psum += p.probability;
                }
            }
        }
        Ok(Evaluation {
            fidelity: if psum > 0.0 { fsum / psum } else { 0.0 },
            success_prob: psum,
        })
    }

    fn cost_of(&self, e: &Evaluation) -> f64 {
        let w = self.problem.weights;
        let p_ref = self.problem.p_ref.unwrap_or(1.0);
        w.fidelity * (1.0 - e.fidelity) + w.success * (1.0 - e.success_prob / p_ref).max(0.0)
    }

    fn params_cost(&self, x: &[f64]) -> Result<(f64, Evaluation)> {
        let u = compile(&mesh_circuit(self.problem.modes, x)?)?;
        let e = self.evaluate(&u)?;
        Ok((self.cost_of(&e), e))
    }
}

/// Fidelity and success of `u` for `problem`.
pub fn evaluate_unitary(u: &UnitaryMatrix, problem: &SearchProblem) -> Result<Evaluation> {
    Evaluator::new(problem)?.evaluate(u)
}

/// `μ_f(1 − F) + μ_s·max(0, 1 − p/p_ref)` for the mesh with parameters `x`.
pub fn cost(x: &[f64], problem: &SearchProblem) -> Result<f64> {
    Ok(Evaluator::new(problem)?.params_cost(x)?.0)
}

/// Central-difference gradient with step `h`.
pub fn numerical_gradient(x: &[f64], problem: &SearchProblem, h: f64) -> Result<Vec<f64>> {
    let ev = Evaluator::new(problem)?;
    gradient(&ev, x, h)
}

fn gradient(ev: &Evaluator, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut g = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let up = ev.params_cost(&y)?.0;
        y[i] = x[i] - h;
        let down = ev.params_cost(&y)?.0;
        y[i] = x[i];
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

/// Gradient step for central differences.
pub const GRADIENT_STEP: f64 = 1e-6;

/// Trace of one restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub index: usize,
    pub seed: u64,
    pub iterations: usize,
    pub cost: f64,
    pub fidelity: f64,
    pub success_prob: f64,
}

/// Best circuit found by a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: Vec<f64>,
    pub circuit: Circuit,
    pub cost: f64,
    pub fidelity: f64,
    pub success_prob: f64,
    /// Restart that produced it.
    pub restart: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Whether the best candidate reaches the fidelity threshold.
    pub found: bool,
    pub best: Candidate,
    pub seed: u64,
    pub restarts: Vec<RestartTrace>,
}

/// BFGS with a backtracking line search from `x`. Returns the final point,
/// cost, evaluation, iterations used and the cost after each step.
fn descend(ev: &Evaluator, x: Vec<f64>, iterations: usize) -> Result<(Vec<f64>, f64, Evaluation, usize, Vec<f64>)> {
    let n = x.len();
    let mut x = DVector::from_vec(x);
    let (mut f, mut e) = ev.params_cost(x.as_slice())?;
    let mut g = DVector::from_vec(gradient(ev, x.as_slice(), GRADIENT_STEP)?);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut history = vec![f];
    let mut used = 0;
    for _ in 0..iterations {
        used += 1;
        if g.norm_squared() < 1e-24 {
            break;
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let y = &x + &d * t;
            let (fy, ey) = ev.params_cost(y.as_slice())?;
            if fy <= f + 1e-4 * t * slope {
                accepted = Some((y, fy, ey));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy, ey)) = accepted else {
            break;
        };
        let gy = DVector::from_vec(gradient(ev, y.as_slice(), GRADIENT_STEP)?);
        let s = &y - &x;
        let dg = &gy - &g;
        let sy = s.dot(&dg);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy = &h * &dg;
            let yhy = dg.dot(&hy);
            h += (&s * s.transpose()) * (rho * (1.0 + rho * yhy))
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = y;
        g = gy;
        f = fy;
        e = ey;
        history.push(f);
    }
    Ok((x.as_slice().to_vec(), f, e, used, history))
}

fn sub_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Multi-restart local search. Restarts run in parallel; each one is
/// determined by its sub-seed and the best is chosen by cost with ties
/// broken by restart index, so results do not depend on scheduling.
pub fn optimize(problem: &SearchProblem) -> Result<SearchOutcome> {
    problem.validate()?;
    let ev = Evaluator::new(problem)?;
    let n = problem.param_count();
    let seeds = sub_seeds(problem.budget.seed, problem.budget.restarts);
    let results: Vec<Result<(RestartTrace, Vec<f64>)>> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let (x, f, e, iterations, _) = descend(&ev, x0, problem.budget.iterations)?;
            Ok((
                RestartTrace {
                    index,
                    seed,
                    iterations,
                    cost: f,
                    fidelity: e.fidelity,
                    success_prob: e.success_prob,
                },
                x,
            ))
        })
        .collect();
    let mut traces = Vec::with_capacity(results.len());
    let mut best: Option<(RestartTrace, Vec<f64>)> = None;
    for r in results {
        let (t, x) = r?;
        let better = match &best {
            None => true,
            Some((b, _)) => t.cost < b.cost,
        };
        if better {
            best = Some((t.clone(), x));
        }
        traces.push(t);
    }
    let (t, x) = best.expect("at least one restart");
    let circuit = mesh_circuit(problem.modes, &x)?;
    Ok(SearchOutcome {
        found: t.fidelity >= problem.fidelity_threshold,
        best: Candidate {
            params: x,
            circuit,
            cost: t.cost,
            fidelity: t.fidelity,
            success_prob: t.success_prob,
            restart: t.index,
        },
        seed: problem.budget.seed,
        restarts: traces,
    })
}

/// Result of refining an existing scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproveReport {
    pub start: Evaluation,
    pub best: Evaluation,
    /// Success gained at fidelity above the threshold (0 if none).
    pub improvement: f64,
    /// Cost after each accepted step of the descent.
    pub trace: Vec<f64>,
    pub circuit: Circuit,
}

/// Smallest success gain reported as an improvement.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

/// Descends from the mesh parameters of `scheme`'s unitary. The success
/// term is scored against 1 so any gain is rewarded.
pub fn improve(scheme: &SchemeDefinition, iterations: usize) -> Result<ImproveReport> {
    let mut problem = SearchProblem::from_scheme(scheme)?;
    problem.p_ref = None;
    let ev = Evaluator::new(&problem)?;
    let x0 = decompose_params(&scheme.unitary()?)?;
    let start = ev.params_cost(&x0)?.1;
    let (x, _, e, _, trace) = descend(&ev, x0, iterations)?;
    let accept = e.fidelity >= problem.fidelity_threshold && e.success_prob > start.success_prob + IMPROVEMENT_TOLERANCE;
    let (best, circuit) = if accept {
        (e, mesh_circuit(problem.modes, &x)?)
    } else {
        (start, scheme.circuit()?)
    };
    Ok(ImproveReport {
        start,
        best,
        improvement: if accept { e.success_prob - start.success_prob } else { 0.0 },
        trace,
        circuit,
    })
}

/// Re-evaluates a circuit through the ordinary scheme pipeline.
pub fn revalidate(problem: &SearchProblem, circuit: &Circuit) -> Result<Evaluation> {
    let r = schemes::run(&problem.scheme_for(circuit, ""), None)?;
    Ok(Evaluation {
        fidelity: r.fidelity.unwrap_or(0.0),
        success_prob: r.success_prob,
    })
}

/// Packages a search result as a scheme file.
pub fn to_scheme(problem: &SearchProblem, outcome: &SearchOutcome) -> SchemeDefinition {
    let mut s = problem.scheme_for(&outcome.best.circuit, "discovered");
    s.description = format!(
        "found by mesh search (seed {}, restart {}): fidelity {:.12}, success {:.12}",
        outcome.seed, outcome.best.restart, outcome.best.fidelity, outcome.best.success_prob
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{BellKind, Register};
    use crate::interferometer::{haar_unitary, Element};
    use crate::schemes::TargetState;
    use num_complex::Complex64;

    fn noon_problem() -> SearchProblem {
        SearchProblem {
            name: "noon2".into(),
            modes: 2,
            input: vec![1, 1],
            herald: HeraldSpec::none(),
            target: TargetSpec {
                state: TargetState::Noon { n: 2 },
                register: None,
            },
            correction: Correction::None,
            weights: CostWeights::default(),
            p_ref: None,
            budget: Budget {
                restarts: 4,
                iterations: 200,
                seed: 7,
            },
            fidelity_threshold: 0.999,
            detectors: Vec::new(),
        }
    }

    fn bell_problem() -> SearchProblem {
        SearchProblem {
            name: "bell-4p6m".into(),
            modes: 6,
            input: vec![1, 1, 1, 1, 0, 0],
            herald: HeraldSpec::patterns(vec![4, 5], vec![vec![1, 1]]),
            target: TargetSpec {
                state: TargetState::Bell {
                    state: BellKind::PhiPlus,
                },
                register: Some(Register::dual_rail(&[(0, 1), (2, 3)]).unwrap()),
            },
            correction: Correction::LocalPhases,
            weights: CostWeights::default(),
            p_ref: Some(2.0 / 27.0),
            budget: Budget::default(),
            fidelity_threshold: 0.999,
            detectors: Vec::new(),
        }
    }

    #[test]
    fn noon_search_finds_balanced_splitter() {
        let out = optimize(&noon_problem()).unwrap();
        assert!(out.found);
        assert!(out.best.fidelity > 0.999999);
        assert!((out.best.success_prob - 1.0).abs() < 1e-12);
        let u = compile(&out.best.circuit).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((u.get(i, j).norm() - 0.5f64.sqrt()).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn cost_at_known_scheme() {
        let p = noon_problem();
        let x = decompose_params(&compile(&Circuit::with_elements(2, vec![Element::bs50(0, 1)]).unwrap()).unwrap()).unwrap();
        let mut q = p.clone();
        q.weights.success = 0.0;
        assert!(cost(&x, &q).unwrap().abs() < 1e-12);
        assert!(cost(&x, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let p = bell_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let x: Vec<f64> = (0..p.param_count()).map(|_| rng.random_range(0.0..6.0)).collect();
            let g = numerical_gradient(&x, &p, GRADIENT_STEP).unwrap();
            for i in [0, 7, 20, 33] {
                let h = 1e-4;
                let mut a = x.clone();
                a[i] += h;
                let mut b = x.clone();
                b[i] -= h;
                let fd = (cost(&a, &p).unwrap() - cost(&b, &p).unwrap()) / (2.0 * h);
                assert!((g[i] - fd).abs() < 1e-5, "{} vs {}", g[i], fd);
            }
        }
    }

    #[test]
    fn global_phase_invariance() {
        let p = bell_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary(6, &mut rng);
        let ph = UnitaryMatrix::new(u.matrix() * Complex64::from_polar(1.0, 0.77)).unwrap();
        let a = evaluate_unitary(&u, &p).unwrap();
        let b = evaluate_unitary(&ph, &p).unwrap();
        assert!((a.fidelity - b.fidelity).abs() < 1e-12);
        assert!((a.success_prob - b.success_prob).abs() < 1e-15);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let mut p = bell_problem();
        p.budget = Budget {
            restarts: 3,
            iterations: 5,
            seed: 99,
        };
        let a = optimize(&p).unwrap();
        let b = optimize(&p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fast_path_agrees_with_scheme_pipeline() {
        let p = bell_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..p.param_count()).map(|_| rng.random_range(0.0..6.0)).collect();
        let c = mesh_circuit(6, &x).unwrap();
        let fast = evaluate_unitary(&compile(&c).unwrap(), &p).unwrap();
        let slow = revalidate(&p, &c).unwrap();
        assert!((fast.fidelity - slow.fidelity).abs() < 1e-9);
        assert!((fast.success_prob - slow.success_prob).abs() < 1e-12);
    }

    #[test]
    fn improve_from_random_start_is_monotone() {
        let mut s = crate::schemes::bell_5p5m();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        s.elements = vec![Element::Unitary {
            modes: (0..5).collect(),
            matrix: haar_unitary(5, &mut rng),
        }];
        s.expected_success = None;
        let r = improve(&s, 10).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
