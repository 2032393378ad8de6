//! Iterative re-weighting algorithm (IRWA).
//!
//! Each iteration minimizes the weighted least-squares model
//!
//! ```text
//! G(x) = g.x + 1/2 x.Hx + 1/2 sum_i w_i |A_i x + b_i - P_{C_i}(A_i c + b_i)|^2,
//! w_i  = (dist_i(c)^2 + eps_i^2)^(-1/2)
//! ```
//!
//! around a center `c` with a warm-started CG solve, then shrinks the
//! relaxation vector `eps` by `eta` whenever every block step `|q_i|` is small
//! relative to `(|r_i|^2 + eps_i^2)^(1/2 + gamma)`.
//!
//! Variants:
//! * [`IrwaVariant::Plain`]: the basic method.
//! * [`IrwaVariant::EqIneq`]: for scalar pieces with `C_i = {0}` (equations) or
//!   `C_i = R_-` (inequalities). A second vector `eps_hat` drives the shrink
//!   schedule, and `eps_i` of strictly inactive inequalities is left alone.
//! * [`IrwaVariant::FixedEps`]: `eps` never changes.
//!
//! `accelerated` adds Nesterov extrapolation with the objective safeguard
//! `J(y, eps) <= J(x, eps)`.

use std::sync::Arc;
use std::time::Instant;

use crate::cg::{cg_solve, CgConfig};
use crate::duality::{dual_cg_config, DualEvaluator};
use crate::error::{check_len, invalid, Error, Result};
use crate::linop::LinearMap;
use crate::problem::{smoothed_sum, weights_from_distances, PenaltyProblem, RelaxationVector};
use crate::report::{SolveReport, Termination, TraceRow};
use crate::sets::ConvexSet;
use crate::vector::{dist2, dot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrwaVariant {
    Plain,
    EqIneq,
    FixedEps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrwaStop {
    /// `|x_{k+1} - x_k| <= sigma` and `|eps_k| <= sigma_prime`.
    StepAndEps,
    /// Stop once the duality gap is at most this fraction of the initial gap.
    GapReduction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialEps {
    Uniform(f64),
    PerPiece(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrwaConfig {
    pub eta: f64,
    pub gamma: f64,
    pub big_m: f64,
    pub eps0: InitialEps,
    pub sigma: f64,
    pub sigma_prime: f64,
    pub max_iters: usize,
    pub stop: IrwaStop,
    pub variant: IrwaVariant,
    pub accelerated: bool,
    pub cg: CgConfig,
    /// Evaluate the dual objective on every row even when not stopping on it.
    pub track_dual: bool,
}

impl Default for IrwaConfig {
    fn default() -> Self {
        Self {
            eta: 0.6,
            gamma: 1.0 / 6.0,
            big_m: 1e4,
            eps0: InitialEps::Uniform(2000.0),
            sigma: 1e-6,
            sigma_prime: 1e-6,
            max_iters: 1000,
            stop: IrwaStop::StepAndEps,
            variant: IrwaVariant::Plain,
            accelerated: false,
            cg: CgConfig::default(),
            track_dual: false,
        }
    }
}

impl IrwaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta", format!("must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be > 0"));
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return Err(invalid("M", "must be > 0"));
        }
        if !(self.sigma >= 0.0 && self.sigma_prime >= 0.0) {
            return Err(invalid("sigma", "tolerances must be >= 0"));
        }
        if let IrwaStop::GapReduction(f) = self.stop {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid(
                    "gap_reduction",
                    format!("fraction must lie in (0, 1), got {f}"),
                ));
            }
        }
        self.cg.validate()
    }

    fn initial_eps(&self, l: usize) -> Result<RelaxationVector> {
        match &self.eps0 {
            InitialEps::Uniform(v) => RelaxationVector::uniform(l, *v),
            InitialEps::PerPiece(v) => {
                check_len("eps0", l, v.len())?;
                RelaxationVector::new(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrwaState {
    pub x: Vec<f64>,
    pub eps: RelaxationVector,
    /// Shrink schedule of the equations/inequalities variant.
    pub eps_hat: Option<RelaxationVector>,
    /// Extrapolated point (accelerated mode).
    pub y: Option<Vec<f64>>,
    pub t: f64,
    pub k: usize,
    pub cumulative_cg: usize,
}

/// Quantities from the most recent step, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub center: Vec<f64>,
    /// Weights `w_i(center, eps_k)`.
    pub weights: Vec<f64>,
    /// `|A_i (x_{k+1} - center)|`
    pub q_norms: Vec<f64>,
    /// `|r_i|` at the center.
    pub r_norms: Vec<f64>,
    /// `(x_{k+1} - center)^T H (x_{k+1} - center)`
    pub h_quad: f64,
    pub test_passed: bool,
    pub safeguard_reset: bool,
    pub j_before: f64,
    pub j_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemOutcome {
    pub x: Vec<f64>,
    pub cg_iters: usize,
    pub converged: bool,
}

/// Minimizes the re-weighted model around `center` by solving
/// `(H + A^T W A) x = -g + A^T W (P_C(A c + b) - b)`.
pub fn irwa_subproblem(
    p: &PenaltyProblem,
    center: &[f64],
    eps: &RelaxationVector,
    warm: &[f64],
    cg: &CgConfig,
) -> Result<SubproblemOutcome> {
    check_len("center", p.n(), center.len())?;
    check_len("warm start", p.n(), warm.len())?;
    check_len("eps", p.num_pieces(), eps.len())?;
    let aff = p.affine(center);
    let w = weights_from_distances(&p.distances_from_affine(&aff), eps.as_slice());
    subproblem_with_weights(p, &aff, &w, warm, cg)
}

fn subproblem_with_weights(
    p: &PenaltyProblem,
    aff_center: &[f64],
    w: &[f64],
    warm: &[f64],
    cg: &CgConfig,
) -> Result<SubproblemOutcome> {
    let (op, rhs) = match p.a() {
        None => (p.h().as_ref().clone(), p.g().iter().map(|v| -v).collect::<Vec<_>>()),
        Some(a) => {
            let row_w = expand(p, w);
            let proj = p.project_blocks(aff_center);
            let shifted: Vec<f64> = proj
                .iter()
                .zip(p.b())
                .zip(&row_w)
                .map(|((pc, b), wi)| wi * (pc - b))
                .collect();
            let mut rhs = p.apply_at(&shifted);
            for (ri, gi) in rhs.iter_mut().zip(p.g()) {
                *ri -= gi;
            }
            let normal = LinearMap::normal(Arc::clone(a), row_w)?;
            let op = LinearMap::sum(vec![Arc::clone(p.h()), Arc::new(normal)])?;
            (op, rhs)
        }
    };
    let out = cg_solve(&op, &rhs, warm, cg)?;
    Ok(SubproblemOutcome {
        converged: out.converged() || out.status == crate::cg::CgStatus::Breakdown,
        x: out.x,
        cg_iters: out.iters,
    })
}

/// Per-piece values repeated over each piece's rows.
pub(crate) fn expand(p: &PenaltyProblem, per_piece: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.m());
    for (i, v) in per_piece.iter().enumerate() {
        out.extend(std::iter::repeat_n(*v, p.range(i).len()));
    }
    out
}

/// `|q_i| <= M (|r_i|^2 + eps_i^2)^(1/2 + gamma)` for every piece.
pub fn relaxation_test(q_norms: &[f64], r_norms: &[f64], eps: &[f64], big_m: f64, gamma: f64) -> bool {
    q_norms
        .iter()
        .zip(r_norms)
        .zip(eps)
        .all(|((q, r), e)| *q <= big_m * (r * r + e * e).powf(0.5 + gamma))
}

/// Returns `eta * eps` when the relaxation test passes, `eps` otherwise.
pub fn relaxation_update(
    eps: &RelaxationVector,
    q_norms: &[f64],
    r_norms: &[f64],
    cfg: &IrwaConfig,
) -> RelaxationVector {
    if relaxation_test(q_norms, r_norms, eps.as_slice(), cfg.big_m, cfg.gamma) {
        eps.scaled(cfg.eta)
    } else {
        eps.clone()
    }
}

/// Update for the equations/inequalities variant. `affine` holds the scalar
/// `A_i x_k + b_i` per piece and `is_equation[i]` marks `C_i = {0}`.
pub fn relaxation_update_eqineq(
    eps: &RelaxationVector,
    eps_hat: &RelaxationVector,
    q_norms: &[f64],
    r_norms: &[f64],
    affine: &[f64],
    is_equation: &[bool],
    cfg: &IrwaConfig,
) -> (RelaxationVector, RelaxationVector) {
    if !relaxation_test(q_norms, r_norms, eps.as_slice(), cfg.big_m, cfg.gamma) {
        return (eps.clone(), eps_hat.clone());
    }
    let new_hat = eps_hat.scaled(cfg.eta);
    let mut new_eps = eps.clone();
    for (i, e) in new_eps.as_mut_slice().iter_mut().enumerate() {
        let inactive = !is_equation[i] && affine[i].min(0.0) <= -eps_hat.as_slice()[i];
        if !inactive {
            *e = new_hat.as_slice()[i];
        }
    }
    (new_eps, new_hat)
}

/// Next Nesterov coefficient `(1 + sqrt(1 + 4 t^2)) / 2`.
pub fn next_t(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

pub struct Irwa<'a> {
    problem: &'a PenaltyProblem,
    cfg: IrwaConfig,
    state: IrwaState,
    is_equation: Vec<bool>,
    dual: Option<DualEvaluator>,
    stop_on_gap: bool,
    reference_gap: f64,
    trace: Vec<TraceRow>,
    last: Option<StepInfo>,
    unconverged: usize,
    finished: Option<Termination>,
    started: Instant,
}

impl<'a> Irwa<'a> {
    pub fn new(problem: &'a PenaltyProblem, cfg: IrwaConfig, x0: &[f64]) -> Result<Self> {
        cfg.validate()?;
        check_len("x0", problem.n(), x0.len())?;
        let eps = cfg.initial_eps(problem.num_pieces())?;
        let mut is_equation = Vec::new();
        if cfg.variant == IrwaVariant::EqIneq {
            for set in problem.sets() {
                match set {
                    ConvexSet::Zero { dim: 1 } => is_equation.push(true),
                    ConvexSet::NonPos { dim: 1 } => is_equation.push(false),
                    other => {
                        return Err(invalid(
                            "variant",
                            format!("equations/inequalities IRWA needs scalar {{0}} or R_- pieces, found {other:?}"),
                        ))
                    }
                }
            }
        }
        let stop_on_gap = matches!(cfg.stop, IrwaStop::GapReduction(_));
        let dual = (stop_on_gap || cfg.track_dual).then(|| DualEvaluator::new(problem, dual_cg_config()));
        let state = IrwaState {
            x: x0.to_vec(),
            eps_hat: (cfg.variant == IrwaVariant::EqIneq).then(|| eps.clone()),
            eps,
            y: cfg.accelerated.then(|| x0.to_vec()),
            t: 1.0,
            k: 0,
            cumulative_cg: 0,
        };
        let mut solver = Self {
            problem,
            cfg,
            state,
            is_equation,
            dual,
            stop_on_gap,
            reference_gap: f64::NAN,
            trace: Vec::new(),
            last: None,
            unconverged: 0,
            finished: None,
            started: Instant::now(),
        };
        let row = solver.make_row(0, 0.0, false)?;
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

    pub fn state(&self) -> &IrwaState {
        &self.state
    }

    pub fn config(&self) -> &IrwaConfig {
        &self.cfg
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn last_step(&self) -> Option<&StepInfo> {
        self.last.as_ref()
    }

    pub fn finished(&self) -> Option<Termination> {
        self.finished
    }

    /// Dual estimate `u_i = w_i(x, eps) r_i(x)` at the current iterate (stacked).
    pub fn dual_estimate(&self) -> Vec<f64> {
        dual_estimate(self.problem, &self.state.x, &self.state.eps)
    }

    fn gap_reached(&self, gap: f64) -> bool {
        match self.cfg.stop {
            IrwaStop::GapReduction(f) => gap.is_finite() && gap <= f * self.reference_gap,
            IrwaStop::StepAndEps => false,
        }
    }

    fn make_row(&mut self, cg_iters: usize, step_norm: f64, cg_unconverged: bool) -> Result<TraceRow> {
        let p = self.problem;
        let x = &self.state.x;
        let aff = p.affine(x);
        let dist = p.distances_from_affine(&aff);
        let phi = p.eval_phi(x)?;
        let j0 = phi + dist.iter().sum::<f64>();
        let smoothed = phi + smoothed_sum(&dist, self.state.eps.as_slice());
        if !j0.is_finite() || !smoothed.is_finite() {
            return Err(Error::NonFinite("IRWA objective"));
        }
        let dual_obj = match self.dual.as_mut() {
            Some(ev) => {
                let w = expand(p, &weights_from_distances(&dist, self.state.eps.as_slice()));
                let u: Vec<f64> = p
                    .residuals_from_affine(&aff)
                    .iter()
                    .zip(&w)
                    .map(|(r, wi)| r * wi)
                    .collect();
                match ev.evaluate(p, &u) {
                    Ok(v) => v,
                    Err(e) if self.stop_on_gap => return Err(e),
                    Err(_) => f64::NAN,
                }
            }
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
            measure: self.state.eps.norm2(),
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
        let cfg = &self.cfg;
        let center = self.state.y.clone().unwrap_or_else(|| self.state.x.clone());
        let aff_c = p.affine(&center);
        let r_norms = p.distances_from_affine(&aff_c);
        let eps_k = self.state.eps.clone();
        let w = weights_from_distances(&r_norms, eps_k.as_slice());
        let j_before = p.eval_phi(&self.state.x)? + smoothed_sum(&p.distances(&self.state.x)?, eps_k.as_slice());

        let sub = subproblem_with_weights(p, &aff_c, &w, &center, &cfg.cg)?;
        if !crate::vector::all_finite(&sub.x) {
            return Err(Error::NonFinite("IRWA subproblem solution"));
        }
        let x_next = sub.x;
        let delta: Vec<f64> = x_next.iter().zip(&center).map(|(a, b)| a - b).collect();
        let q_norms = p.block_norms(&p.apply_a(&delta));
        let h_quad = dot(&delta, &p.apply_h(&delta));

        let test_passed = relaxation_test(&q_norms, &r_norms, eps_k.as_slice(), cfg.big_m, cfg.gamma);
        let eps_norm_k = match &self.state.eps_hat {
            Some(h) => h.norm2(),
            None => eps_k.norm2(),
        };
        match cfg.variant {
            IrwaVariant::Plain => {
                self.state.eps = relaxation_update(&eps_k, &q_norms, &r_norms, cfg);
            }
            IrwaVariant::FixedEps => {}
            IrwaVariant::EqIneq => {
                let hat = self.state.eps_hat.as_ref().expect("eq/ineq state");
                let (e, h) = relaxation_update_eqineq(&eps_k, hat, &q_norms, &r_norms, &aff_c, &self.is_equation, cfg);
                self.state.eps = e;
                self.state.eps_hat = Some(h);
            }
        }

        let step_norm = dist2(&x_next, &self.state.x);
        let mut safeguard_reset = false;
        if cfg.accelerated {
            let t_next = next_t(self.state.t);
            let coef = (self.state.t - 1.0) / t_next;
            let y_next: Vec<f64> = x_next
                .iter()
                .zip(&self.state.x)
                .map(|(xn, xk)| xn + coef * (xn - xk))
                .collect();
            let eps = self.state.eps.as_slice();
            let j_y = p.eval_phi(&y_next)? + smoothed_sum(&p.distances(&y_next)?, eps);
            let j_x = p.eval_phi(&x_next)? + smoothed_sum(&p.distances(&x_next)?, eps);
            self.state.y = Some(if j_y > j_x {
                safeguard_reset = true;
                x_next.clone()
            } else {
                y_next
            });
            self.state.t = t_next;
        }

        self.state.x = x_next;
        self.state.k += 1;
        self.state.cumulative_cg += sub.cg_iters;
        if !sub.converged {
            self.unconverged += 1;
        }
        let row = self.make_row(sub.cg_iters, step_norm, !sub.converged)?;
        self.last = Some(StepInfo {
            center,
            weights: w,
            q_norms,
            r_norms,
            h_quad,
            test_passed,
            safeguard_reset,
            j_before,
            j_after: row.smoothed,
        });

        let cfg = &self.cfg;
        self.finished = if self.stop_on_gap {
            self.gap_reached(row.gap).then_some(Termination::GapReduced)
        } else {
            let eps_ok = cfg.variant == IrwaVariant::FixedEps || eps_norm_k <= cfg.sigma_prime;
            (step_norm <= cfg.sigma && eps_ok).then_some(Termination::Tolerance)
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
            solver: if self.cfg.accelerated { "irwa-acc" } else { "irwa" },
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

/// Stacked `w_i(x, eps) r_i(x)`; always dual feasible.
pub fn dual_estimate(p: &PenaltyProblem, x: &[f64], eps: &RelaxationVector) -> Vec<f64> {
    let aff = p.affine(x);
    let w = expand(
        p,
        &weights_from_distances(&p.distances_from_affine(&aff), eps.as_slice()),
    );
    p.residuals_from_affine(&aff)
        .iter()
        .zip(&w)
        .map(|(r, wi)| r * wi)
        .collect()
}

pub fn irwa_solve(p: &PenaltyProblem, cfg: IrwaConfig, x0: &[f64]) -> Result<SolveReport> {
    let mut solver = Irwa::new(p, cfg, x0)?;
    solver.run()?;
    Ok(solver.into_report())
}
