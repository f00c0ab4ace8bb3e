//! Riemannian conjugate gradient on the per-station power manifold.
//!
//! Each outer iteration evaluates the Riemannian gradient from the cached
//! effective channels, forms a conjugate direction with the modified
//! Polak–Ribière coefficient and vector transport, caches `H η`, and then
//! backtracks `α = r^m α⁰` along the retraction curve until the Armijo
//! sufficient-decrease test holds. Trial points are scored through
//! [`WsrProblem::phi`], which never multiplies by a channel matrix; the
//! accepted trial's cache becomes the next iterate's cache as is.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{PowerManifold, Precoder, TangentVector};
use crate::linalg::FactorLog;
use crate::objective::{Candidate, EffectiveChannels, LinePowers, ObjectiveCache, WsrProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// First trial step of every line search.
    pub initial_step: f64,
    /// Backtracking factor `r ∈ (0, 1)`.
    pub backtrack: f64,
    /// Armijo constant `c ∈ (0, 1)`.
    pub armijo: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Stop once the Riemannian gradient norm falls to this value.
    pub grad_tol: f64,
    /// Fall back to steepest descent when the conjugate direction is not a
    /// descent direction or its line search fails.
    pub restart: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            backtrack: 0.5,
            armijo: 1e-4,
            max_outer: 500,
            max_inner: 50,
            grad_tol: 1e-6,
            restart: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.initial_step.is_finite()
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.max_inner >= 1
            && self.grad_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver options {self:?}")))
        }
    }
}

/// Time source for per-iteration timestamps.
pub trait Clock {
    /// Seconds since an arbitrary fixed origin.
    fn seconds(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    /// Weighted sum rate in nats.
    pub wsr: f64,
    pub grad_norm: f64,
    pub beta: f64,
    pub step: f64,
    pub inner_iters: usize,
    /// Seconds elapsed since the solver started.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
    DegenerateRetraction,
    NumericalFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradientTolerance => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::LineSearchFailure => "line_search_failure",
            Termination::DegenerateRetraction => "degenerate_retraction",
            Termination::NumericalFailure => "numerical_failure",
        }
    }
}

/// Iteration history. Record 0 describes the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Every factorization performed, including rejected trial points.
    pub factors: FactorLog,
}

impl SolverTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn mean_inner_iterations(&self) -> f64 {
        let n = self.outer_iterations();
        if n == 0 {
            return 0.0;
        }
        self.records[1..].iter().map(|r| r.inner_iters as f64).sum::<f64>() / n as f64
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("trace always holds the initial record")
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub precoder: Precoder,
    pub cache: ObjectiveCache,
    pub trace: SolverTrace,
}

/// Modified Polak–Ribière coefficient `max(0, min(β_PRP, β_FR))` with
/// `ν = g_now − T(g_prev)`. A vanishing previous gradient restarts (`β = 0`).
pub fn beta_modified_prp(g_now: &TangentVector, g_prev_transported: &TangentVector, g_prev_norm_sq: f64) -> f64 {
    if g_prev_norm_sq.is_nan() || g_prev_norm_sq <= 0.0 {
        return 0.0;
    }
    let now_sq = g_now.norm_sq();
    let nu = g_now - g_prev_transported;
    let prp = g_now.inner(&nu) / g_prev_norm_sq;
    let fr = now_sq / g_prev_norm_sq;
    prp.min(fr).max(0.0)
}

/// New search direction `−g + β T(η_prev)` at `p_new`. Falls back to `−g`
/// (and reports `β = 0`) if the result is not a descent direction.
pub fn search_direction(
    manifold: &PowerManifold,
    p_new: &Precoder,
    g_riem: &TangentVector,
    eta_prev: Option<&TangentVector>,
    beta: f64,
) -> Result<(TangentVector, f64)> {
    let steepest = -g_riem;
    let Some(eta_prev) = eta_prev.filter(|_| beta != 0.0) else {
        return Ok((steepest, 0.0));
    };
    let (moved, _) = manifold.project_tangent(p_new, eta_prev)?;
    let dir = TangentVector::lincomb(1.0, &steepest, beta, &moved);
    if dir.inner(g_riem) < 0.0 {
        Ok((dir, beta))
    } else {
        Ok((steepest, 0.0))
    }
}

/// Outcome of an unsuccessful line search.
#[derive(Debug, Clone, PartialEq)]
pub enum LineSearchError {
    /// No trial step passed the Armijo test within `max_inner` trials.
    Exhausted {
        trials: usize,
    },
    Failed(Error),
}

#[derive(Debug, Clone)]
pub struct Accepted {
    pub candidate: Candidate,
    pub inner_iters: usize,
    pub factors: FactorLog,
}

/// Armijo backtracking along the retraction curve: accepts the first
/// `α = r^m α⁰` with `f(p) − φ(α) ≥ −c α g(grad, η)`.
///
/// `slope` is `g(grad f(p), η)` and must be negative.
pub fn backtrack(
    problem: &WsrProblem,
    cache: &ObjectiveCache,
    dir: &EffectiveChannels,
    line: &LinePowers,
    slope: f64,
    opts: &SolverOptions,
) -> core::result::Result<Accepted, LineSearchError> {
    let f0 = cache.objective(problem.weights());
    let mut alpha = opts.initial_step;
    let mut factors = FactorLog::default();
    for m in 1..=opts.max_inner {
        match problem.phi(cache, dir, line, alpha) {
            Ok(candidate) => {
                factors.merge(&candidate.cache.factors());
                if f0 - candidate.objective >= -opts.armijo * alpha * slope {
                    return Ok(Accepted { candidate, inner_iters: m, factors });
                }
            }
            // An overly long step may zero a station's power; shorter ones may not.
            Err(Error::DegenerateRetraction { .. }) => {}
            Err(e) => return Err(LineSearchError::Failed(e)),
        }
        alpha *= opts.backtrack;
    }
    Err(LineSearchError::Exhausted { trials: opts.max_inner })
}

/// State handed to an observer after the initial point and after every
/// accepted step.
pub struct IterationState<'a> {
    pub iteration: usize,
    pub precoder: &'a Precoder,
    /// Cache carried over from the line search (incrementally updated).
    pub cache: &'a ObjectiveCache,
    pub gradient: &'a TangentVector,
    /// Direction for the next line search.
    pub direction: &'a TangentVector,
    pub record: &'a IterationRecord,
}

/// Runs the Riemannian conjugate gradient from `p0`.
///
/// Failures during the iteration (line search exhausted after restart,
/// degenerate retraction, numerical breakdown) stop the run and return the
/// last accepted iterate with the reason in the trace.
pub fn rcg_solve<C: Clock>(problem: &WsrProblem, p0: &Precoder, opts: &SolverOptions, clock: &C) -> Result<Solution> {
    rcg_solve_observed(problem, p0, opts, clock, |_| {})
}

/// [`rcg_solve`] with a callback on every iterate.
pub fn rcg_solve_observed<C: Clock>(
    problem: &WsrProblem,
    p0: &Precoder,
    opts: &SolverOptions,
    clock: &C,
    mut observe: impl FnMut(&IterationState<'_>),
) -> Result<Solution> {
    opts.validate()?;
    let manifold = problem.manifold();
    manifold.check(p0)?;
    if !manifold.is_on_manifold(p0) {
        return Err(Error::Config(format!(
            "initial point violates the power constraints by {:e}",
            manifold.max_relative_infeasibility(p0)
        )));
    }
    let start = clock.seconds();
    let weights = problem.weights();

    let mut p = p0.clone();
    let mut cache = problem.build_cache(&p)?;
    let mut factors = cache.factors();
    let (mut grad, _) = problem.riemannian_gradient(&p, &problem.euclidean_gradient(&cache))?;
    let mut grad_sq = grad.norm_sq();
    let mut eta = -&grad;
    let mut beta = 0.0;

    let mut records = Vec::with_capacity(opts.max_outer + 1);
    records.push(IterationRecord {
        iteration: 0,
        objective: cache.objective(weights),
        wsr: cache.wsr(weights),
        grad_norm: libm::sqrt(grad_sq),
        beta: 0.0,
        step: 0.0,
        inner_iters: 0,
        elapsed: clock.seconds() - start,
    });
    observe(&IterationState {
        iteration: 0,
        precoder: &p,
        cache: &cache,
        gradient: &grad,
        direction: &eta,
        record: &records[0],
    });

    let mut termination = Termination::MaxIterations;
    for n in 1..=opts.max_outer {
        if libm::sqrt(grad_sq) <= opts.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }

        let slope = eta.inner(&grad);
        if slope.is_nan() || slope >= 0.0 {
            eta = -&grad;
            beta = 0.0;
        }
        let search = |eta: &TangentVector| -> core::result::Result<Accepted, LineSearchError> {
            let dir = problem.direction_channels(eta).map_err(LineSearchError::Failed)?;
            let line = LinePowers::new(manifold, &p, eta);
            backtrack(problem, &cache, &dir, &line, eta.inner(&grad), opts)
        };
        let mut inner_total = 0;
        let mut outcome = search(&eta);
        if let Err(LineSearchError::Exhausted { trials }) = outcome {
            if opts.restart && beta != 0.0 {
                inner_total += trials;
                eta = -&grad;
                outcome = search(&eta);
            }
        }
        let accepted = match outcome {
            Ok(a) => a,
            Err(LineSearchError::Exhausted { .. }) => {
                termination = Termination::LineSearchFailure;
                break;
            }
            Err(LineSearchError::Failed(Error::DegenerateRetraction { .. })) => {
                termination = Termination::DegenerateRetraction;
                break;
            }
            Err(LineSearchError::Failed(_)) => {
                termination = Termination::NumericalFailure;
                break;
            }
        };
        inner_total += accepted.inner_iters;
        factors.merge(&accepted.factors);

        let Candidate { alpha, gammas, cache: new_cache, .. } = accepted.candidate;
        let p_new = manifold.scaled_step(&p, &eta, alpha, &gammas);
        let (grad_new, _) = problem.riemannian_gradient(&p_new, &problem.euclidean_gradient(&new_cache))?;
        let (grad_moved, _) = manifold.transport(&p, &p_new, &grad)?;
        let beta_new = beta_modified_prp(&grad_new, &grad_moved, grad_sq);
        let (eta_new, beta_used) = search_direction(manifold, &p_new, &grad_new, Some(&eta), beta_new)?;

        p = p_new;
        cache = new_cache;
        grad = grad_new;
        grad_sq = grad.norm_sq();
        eta = eta_new;
        beta = beta_used;

        records.push(IterationRecord {
            iteration: n,
            objective: cache.objective(weights),
            wsr: cache.wsr(weights),
            grad_norm: libm::sqrt(grad_sq),
            beta,
            step: alpha,
            inner_iters: inner_total,
            elapsed: clock.seconds() - start,
        });
        observe(&IterationState {
            iteration: n,
            precoder: &p,
            cache: &cache,
            gradient: &grad,
            direction: &eta,
            record: records.last().expect("just pushed"),
        });
    }
    if termination == Termination::MaxIterations && libm::sqrt(grad_sq) <= opts.grad_tol {
        termination = Termination::GradientTolerance;
    }

    Ok(Solution { precoder: p, cache, trace: SolverTrace { records, termination, factors } })
}
