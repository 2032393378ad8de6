//! Per-iteration trace rows and the final solve report shared by both solvers.

/// One row per iterate. Row 0 describes the starting point.
///
/// `smoothed` is `J(x, eps)` for IRWA and `J_hat(x, p)` for ADAL; `measure`
/// is `|eps|_2` for IRWA and the optimality measure `E_k` for ADAL. Columns
/// that were not computed hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub j0: f64,
    pub smoothed: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub cg_iters: usize,
    pub cumulative_cg: usize,
    pub step_norm: f64,
    pub measure: f64,
    pub cg_unconverged: bool,
    pub wall_ns: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Step-size and relaxation (IRWA) or residual (ADAL) tolerances met.
    Tolerance,
    /// Duality gap fell to the requested fraction of its reference value.
    GapReduced,
    MaxIters,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::GapReduced => "gap_reduced",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: &'static str,
    pub termination: Termination,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub cumulative_cg: usize,
    /// Inner solves that hit the CG iteration cap.
    pub cg_unconverged: usize,
    pub final_j0: f64,
    pub final_dual: f64,
    pub final_gap: f64,
    /// Gap used as the 100% reference by gap-reduction stopping.
    pub reference_gap: f64,
    pub trace: Vec<TraceRow>,
}

impl SolveReport {
    /// A run is flagged when it stopped on the iteration cap.
    pub fn flagged(&self) -> bool {
        self.termination == Termination::MaxIters
    }

    /// Cumulative CG steps at the first row whose gap is at most
    /// `remaining * reference_gap`.
    pub fn cg_to_reach(&self, remaining: f64) -> Option<usize> {
        let target = remaining * self.reference_gap;
        self.trace
            .iter()
            .find(|r| r.gap.is_finite() && r.gap <= target)
            .map(|r| r.cumulative_cg)
    }
}
