//! Alternating direction augmented Lagrangian (ADAL) method.
//!
//! The problem is split as `min phi(x) + sum_i dist(p_i | C_i)` subject to
//! `A x + b = p`. One iteration with multipliers `u` and penalty `mu` is
//!
//! ```text
//! s      = A x_k + b + mu u_k
//! p_{k+1} = argmin_p sum_i dist(p_i | C_i) + 1/(2 mu) |s - p|^2        (closed form)
//! x_{k+1} solves (H + A^T A / mu) x = -g - A^T (b - p_{k+1} + mu u_k) / mu   (CG)
//! u_{k+1} = u_k + (A x_{k+1} + b - p_{k+1}) / mu
//! ```
//!
//! With `accelerated`, `x` and `u` carry momentum with an adaptive restart on
//! the combined residual.

use std::sync::Arc;
use std::time::Instant;

use crate::cg::{cg_solve, CgConfig, CgStatus};
use crate::duality::{dual_cg_config, DualEvaluator};
use crate::error::{check_len, invalid, Error, Result};
use crate::irwa::SubproblemOutcome;
use crate::linop::LinearMap;
use crate::problem::PenaltyProblem;
use crate::report::{SolveReport, Termination, TraceRow};
use crate::vector::{all_finite, dist2, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdalStop {
    /// `|x_{k+1} - x_k| <= sigma` and `max_i |z_i| <= sigma_dprime`.
    StepAndResidual,
    /// Stop once the duality gap is at most this fraction of the initial gap.
    GapReduction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdalConfig {
    pub mu: f64,
    pub sigma: f64,
    pub sigma_dprime: f64,
    pub max_iters: usize,
    pub stop: AdalStop,
    pub accelerated: bool,
    pub cg: CgConfig,
    pub track_dual: bool,
}

impl Default for AdalConfig {
    fn default() -> Self {
        Self {
            mu: 100.0,
            sigma: 1e-6,
            sigma_dprime: 1e-6,
            max_iters: 1000,
            stop: AdalStop::StepAndResidual,
            accelerated: false,
            cg: CgConfig::default(),
            track_dual: false,
        }
    }
}

/// Restart threshold on the combined residual in accelerated mode.
const RESTART_RATIO: f64 = 0.999;

impl AdalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("must be > 0, got {}", self.mu)));
        }
        if !(self.sigma >= 0.0 && self.sigma_dprime >= 0.0) {
            return Err(invalid("sigma", "tolerances must be >= 0"));
        }
        if let AdalStop::GapReduction(f) = self.stop {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid(
                    "gap_reduction",
                    format!("fraction must lie in (0, 1), got {f}"),
                ));
            }
        }
        self.cg.validate()
    }
}

/// Stacked `p` update from `s = A x + b + mu u`: the projection when
/// `dist(s_i | C_i) <= mu`, otherwise a step of length `mu` toward `C_i`.
pub fn p_update(p: &PenaltyProblem, s: &[f64], mu: f64) -> Vec<f64> {
    let proj = p.project_blocks(s);
    let mut out = proj.clone();
    for i in 0..p.num_pieces() {
        let rg = p.range(i);
        let d = dist2(&s[rg.clone()], &proj[rg.clone()]);
        if d > mu {
            let t = mu / d;
            for j in rg {
                out[j] = s[j] - t * (s[j] - proj[j]);
            }
        }
    }
    out
}

/// Dual estimate `(s - p_{k+1}) / mu`, computed blockwise from `s` so that
/// each block norm is at most one by construction.
pub fn dual_from_s(p: &PenaltyProblem, s: &[f64], mu: f64) -> Vec<f64> {
    let r = p.residuals_from_affine(s);
    let mut out = r.clone();
    for i in 0..p.num_pieces() {
        let rg = p.range(i);
        let d = norm2(&r[rg.clone()]);
        let scale = if d <= mu { 1.0 / mu } else { 1.0 / d };
        for j in rg {
            out[j] = r[j] * scale;
        }
    }
    out
}

fn x_operator(p: &PenaltyProblem, mu: f64) -> Result<LinearMap> {
    match p.a() {
        None => Ok(p.h().as_ref().clone()),
        Some(a) => {
            let normal = LinearMap::normal(Arc::clone(a), vec![1.0 / mu; p.m()])?;
            LinearMap::sum(vec![Arc::clone(p.h()), Arc::new(normal)])
        }
    }
}

fn x_rhs(p: &PenaltyProblem, pvec: &[f64], u: &[f64], mu: f64) -> Vec<f64> {
    let v: Vec<f64> = p
        .b()
        .iter()
        .zip(pvec)
        .zip(u)
        .map(|((b, pi), ui)| (b - pi + mu * ui) / mu)
        .collect();
    let at = p.apply_at(&v);
    p.g().iter().zip(&at).map(|(g, a)| -g - a).collect()
}

/// Solves `(H + A^T A / mu) x = -g - A^T (b - p + mu u) / mu`.
pub fn x_update(
    p: &PenaltyProblem,
    pvec: &[f64],
    u: &[f64],
    mu: f64,
    warm: &[f64],
    cg: &CgConfig,
) -> Result<SubproblemOutcome> {
    check_len("p", p.m(), pvec.len())?;
    check_len("u", p.m(), u.len())?;
    check_len("warm start", p.n(), warm.len())?;
    let op = x_operator(p, mu)?;
    solve_x(&op, &x_rhs(p, pvec, u, mu), warm, cg)
}

fn solve_x(op: &LinearMap, rhs: &[f64], warm: &[f64], cg: &CgConfig) -> Result<SubproblemOutcome> {
    let out = cg_solve(op, rhs, warm, cg)?;
    Ok(SubproblemOutcome {
        converged: out.status != CgStatus::MaxIters,
        x: out.x,
        cg_iters: out.iters,
    })
}

/// Returns `(u + z / mu, z)` with `z = A x + b - p`.
pub fn multiplier_update(p: &PenaltyProblem, x: &[f64], pvec: &[f64], u: &[f64], mu: f64) -> (Vec<f64>, Vec<f64>) {
    let z: Vec<f64> = p.affine(x).iter().zip(pvec).map(|(a, pi)| a - pi).collect();
    let u_new = u.iter().zip(&z).map(|(ui, zi)| ui + zi / mu).collect();
    (u_new, z)
}

/// `E = max(sum_i |q_i|, max_i |z_i|)` from stacked `q = A(x_{k+1} - x_k)` and `z`.
pub fn optimality_measure(p: &PenaltyProblem, q: &[f64], z: &[f64]) -> f64 {
    let sq: f64 = p.block_norms(q).iter().sum();
    let mz = p.block_norms(z).iter().copied().fold(0.0, f64::max);
    sq.max(mz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdalState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub k: usize,
    pub cumulative_cg: usize,
    /// Extrapolated `x` and `u` (accelerated mode).
    pub x_hat: Option<Vec<f64>>,
    pub u_hat: Option<Vec<f64>>,
    pub alpha: f64,
    pub combined_residual: f64,
}

/// Quantities from the most recent step, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdalStepInfo {
    pub s: Vec<f64>,
    /// `A (x_{k+1} - x_base)` where `x_base` is `x_k`, or the extrapolated point.
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    /// Closed-form dual estimate at this step.
    pub dual: Vec<f64>,
    pub restarted: bool,
}

pub struct Adal<'a> {
    problem: &'a PenaltyProblem,
    cfg: AdalConfig,
    op: LinearMap,
    state: AdalState,
    dual: Option<DualEvaluator>,
    stop_on_gap: bool,
    reference_gap: f64,
    trace: Vec<TraceRow>,
    last: Option<AdalStepInfo>,
    unconverged: usize,
    finished: Option<Termination>,
    started: Instant,
}

impl<'a> Adal<'a> {
    pub fn new(problem: &'a PenaltyProblem, cfg: AdalConfig, x0: &[f64]) -> Result<Self> {
        cfg.validate()?;
        check_len("x0", problem.n(), x0.len())?;
        let op = x_operator(problem, cfg.mu)?;
        let stop_on_gap = matches!(cfg.stop, AdalStop::GapReduction(_));
        let dual = (stop_on_gap || cfg.track_dual).then(|| DualEvaluator::new(problem, dual_cg_config()));
        let m = problem.m();
        let state = AdalState {
            x: x0.to_vec(),
            p: problem.affine(x0),
            u: vec![0.0; m],
            k: 0,
            cumulative_cg: 0,
            x_hat: cfg.accelerated.then(|| x0.to_vec()),
            u_hat: cfg.accelerated.then(|| vec![0.0; m]),
            alpha: 1.0,
            combined_residual: f64::INFINITY,
        };
        let mut solver = Self {
            problem,
            cfg,
            op,
            state,
            dual,
            stop_on_gap,
            reference_gap: f64::NAN,
            trace: Vec::new(),
            last: None,
            unconverged: 0,
            finished: None,
            started: Instant::now(),
        };
        let u0 = vec![0.0; m];
        let row = solver.make_row(&u0, 0, 0.0, f64::NAN, false)?;
        if stop_on_gap && !row.dual_obj.is_finite() {
            return Err(Error::DualUnavailable("initial dual objective is not finite".into()));
        }
        solver.reference_gap = row.gap;
        if stop_on_gap && solver.gap_reached(row.gap) {
            solver.finished = Some(Termination::GapReduced);
        }
        solver.trace.push(row);
        Ok(solver)
    }

    pub fn state(&self) -> &AdalState {
        &self.state
    }

    pub fn config(&self) -> &AdalConfig {
        &self.cfg
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn last_step(&self) -> Option<&AdalStepInfo> {
        self.last.as_ref()
    }

    pub fn finished(&self) -> Option<Termination> {
        self.finished
    }

    fn gap_reached(&self, gap: f64) -> bool {
        match self.cfg.stop {
            AdalStop::GapReduction(f) => gap.is_finite() && gap <= f * self.reference_gap,
            AdalStop::StepAndResidual => false,
        }
    }

    fn make_row(
        &mut self,
        u_est: &[f64],
        cg_iters: usize,
        step_norm: f64,
        measure: f64,
        cg_unconverged: bool,
    ) -> Result<TraceRow> {
        let p = self.problem;
        let x = &self.state.x;
        let phi = p.eval_phi(x)?;
        let j0 = phi + p.distances(x)?.iter().sum::<f64>();
        let smoothed = phi + p.distances_from_affine(&self.state.p).iter().sum::<f64>();
        if !j0.is_finite() || !smoothed.is_finite() {
            return Err(Error::NonFinite("ADAL objective"));
        }
        let dual_obj = match self.dual.as_mut() {
            Some(ev) => match ev.evaluate(p, u_est) {
                Ok(v) => v,
                Err(e) if self.stop_on_gap => return Err(e),
                Err(_) => f64::NAN,
            },
            None => f64::NAN,
        };
        Ok(TraceRow {
            iter: self.state.k,
            j0,
            smoothed,
            dual_obj,
            gap: j0 + dual_obj,
            cg_iters,
            cumulative_cg: self.state.cumulative_cg,
            step_norm,
            measure,
            cg_unconverged,
            wall_ns: self.started.elapsed().as_nanos(),
        })
    }

    /// Runs one iteration. Returns `None` once a stopping rule has fired.
    pub fn step(&mut self) -> Result<Option<&TraceRow>> {
        if self.finished.is_some() {
            return Ok(None);
        }
        if self.state.k >= self.cfg.max_iters {
            self.finished = Some(Termination::MaxIters);
            return Ok(None);
        }
        let p = self.problem;
        let mu = self.cfg.mu;
        let x_base = self.state.x_hat.clone().unwrap_or_else(|| self.state.x.clone());
        let u_base = self.state.u_hat.clone().unwrap_or_else(|| self.state.u.clone());

        let s: Vec<f64> = p.affine(&x_base).iter().zip(&u_base).map(|(a, u)| a + mu * u).collect();
        let p_next = p_update(p, &s, mu);
        let sub = solve_x(&self.op, &x_rhs(p, &p_next, &u_base, mu), &x_base, &self.cfg.cg)?;
        if !all_finite(&sub.x) {
            return Err(Error::NonFinite("ADAL x update"));
        }
        let x_next = sub.x;
        let (u_next, z) = multiplier_update(p, &x_next, &p_next, &u_base, mu);
        let q = p.apply_a(&x_next.iter().zip(&x_base).map(|(a, b)| a - b).collect::<Vec<_>>());
        let measure = optimality_measure(p, &q, &z);
        let dual = dual_from_s(p, &s, mu);
        let step_norm = dist2(&x_next, &self.state.x);
        let max_z = p.block_norms(&z).iter().copied().fold(0.0, f64::max);

        let mut restarted = false;
        if self.cfg.accelerated {
            let du: f64 = u_next.iter().zip(&u_base).map(|(a, b)| (a - b) * (a - b)).sum();
            let c = mu * du + norm2(&q).powi(2) / mu;
            if c < RESTART_RATIO * self.state.combined_residual {
                let alpha_next = crate::irwa::next_t(self.state.alpha);
                let coef = (self.state.alpha - 1.0) / alpha_next;
                let extrapolate = |new: &[f64], old: &[f64]| -> Vec<f64> {
                    new.iter().zip(old).map(|(a, b)| a + coef * (a - b)).collect()
                };
                self.state.x_hat = Some(extrapolate(&x_next, &self.state.x));
                self.state.u_hat = Some(extrapolate(&u_next, &self.state.u));
                self.state.alpha = alpha_next;
                self.state.combined_residual = c;
            } else {
                restarted = true;
                self.state.x_hat = Some(self.state.x.clone());
                self.state.u_hat = Some(self.state.u.clone());
                self.state.alpha = 1.0;
                self.state.combined_residual /= RESTART_RATIO;
            }
        }

        self.state.x = x_next;
        self.state.p = p_next;
        self.state.u = u_next;
        self.state.k += 1;
        self.state.cumulative_cg += sub.cg_iters;
        if !sub.converged {
            self.unconverged += 1;
        }
        let row = self.make_row(&dual, sub.cg_iters, step_norm, measure, !sub.converged)?;
        self.last = Some(AdalStepInfo {
            s,
            q,
            z,
            dual,
            restarted,
        });
        self.finished = if self.stop_on_gap {
            self.gap_reached(row.gap).then_some(Termination::GapReduced)
        } else {
            (step_norm <= self.cfg.sigma && max_z <= self.cfg.sigma_dprime).then_some(Termination::Tolerance)
        };
        self.trace.push(row);
        Ok(self.trace.last())
    }

    pub fn run(&mut self) -> Result<Termination> {
        while self.step()?.is_some() {}
        Ok(self.finished.expect("loop ends on termination"))
    }

    pub fn into_report(self) -> SolveReport {
        let last = self.trace.last().expect("row 0 always present");
        SolveReport {
            solver: if self.cfg.accelerated { "adal-acc" } else { "adal" },
            termination: self.finished.unwrap_or(Termination::MaxIters),
            iterations: self.state.k,
            cumulative_cg: self.state.cumulative_cg,
            cg_unconverged: self.unconverged,
            final_j0: last.j0,
            final_dual: last.dual_obj,
            final_gap: last.gap,
            reference_gap: self.reference_gap,
            x: self.state.x,
            trace: self.trace,
        }
    }
}

pub fn adal_solve(p: &PenaltyProblem, cfg: AdalConfig, x0: &[f64]) -> Result<SolveReport> {
    let mut solver = Adal::new(p, cfg, x0)?;
    solver.run()?;
    Ok(solver.into_report())
}
