//! Solver selection and parameter overrides shared by the CLI and batch runs.

use exactpen::{
    adal_solve, irwa_solve, AdalConfig, AdalStop, CgConfig, InitialEps, IrwaConfig, IrwaStop, IrwaVariant,
    PenaltyProblem, SolveReport,
};

use crate::error::Result;
use crate::generators::{experiment1_adal, experiment1_irwa};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum SolverKind {
    Irwa,
    IrwaAcc,
    IrwaEqineq,
    Adal,
    AdalAcc,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Irwa => "irwa",
            SolverKind::IrwaAcc => "irwa-acc",
            SolverKind::IrwaEqineq => "irwa-eqineq",
            SolverKind::Adal => "adal",
            SolverKind::AdalAcc => "adal-acc",
        }
    }

    pub fn is_irwa(self) -> bool {
        matches!(self, SolverKind::Irwa | SolverKind::IrwaAcc | SolverKind::IrwaEqineq)
    }
}

/// Optional settings; `None` keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub eps0: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub big_m: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_prime: Option<f64>,
    pub sigma_dprime: Option<f64>,
    /// Fraction of the initial gap to reach, e.g. `0.05` for a 95% reduction.
    pub gap_reduction: Option<f64>,
    pub max_iters: Option<usize>,
    pub cg_rtol: Option<f64>,
    pub track_dual: bool,
}

impl Overrides {
    fn cg(&self, base: CgConfig) -> CgConfig {
        match self.cg_rtol {
            Some(r) => CgConfig { rel_tol: r, ..base },
            None => base,
        }
    }

    pub fn irwa(&self, kind: SolverKind, base: IrwaConfig) -> IrwaConfig {
        IrwaConfig {
            eta: self.eta.unwrap_or(base.eta),
            gamma: self.gamma.unwrap_or(base.gamma),
            big_m: self.big_m.unwrap_or(base.big_m),
            eps0: self.eps0.map(InitialEps::Uniform).unwrap_or(base.eps0),
            sigma: self.sigma.unwrap_or(base.sigma),
            sigma_prime: self.sigma_prime.unwrap_or(base.sigma_prime),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            stop: self.gap_reduction.map(IrwaStop::GapReduction).unwrap_or(base.stop),
            variant: if kind == SolverKind::IrwaEqineq {
                IrwaVariant::EqIneq
            } else {
                base.variant
            },
            accelerated: kind == SolverKind::IrwaAcc || base.accelerated,
            cg: self.cg(base.cg),
            track_dual: self.track_dual || base.track_dual,
        }
    }

    pub fn adal(&self, kind: SolverKind, base: AdalConfig) -> AdalConfig {
        AdalConfig {
            mu: self.mu.unwrap_or(base.mu),
            sigma: self.sigma.unwrap_or(base.sigma),
            sigma_dprime: self.sigma_dprime.unwrap_or(base.sigma_dprime),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            stop: self.gap_reduction.map(AdalStop::GapReduction).unwrap_or(base.stop),
            accelerated: kind == SolverKind::AdalAcc || base.accelerated,
            cg: self.cg(base.cg),
            track_dual: self.track_dual || base.track_dual,
        }
    }
}

/// Base configurations a solve starts from before overrides apply.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConfigs {
    pub irwa: IrwaConfig,
    pub adal: AdalConfig,
}

impl Default for BaseConfigs {
    fn default() -> Self {
        Self {
            irwa: experiment1_irwa(),
            adal: experiment1_adal(),
        }
    }
}

pub fn run_solver(
    p: &PenaltyProblem,
    kind: SolverKind,
    base: &BaseConfigs,
    ov: &Overrides,
    x0: &[f64],
) -> Result<SolveReport> {
    let mut report = if kind.is_irwa() {
        irwa_solve(p, ov.irwa(kind, base.irwa.clone()), x0)?
    } else {
        adal_solve(p, ov.adal(kind, base.adal.clone()), x0)?
    };
    report.solver = kind.name();
    Ok(report)
}
