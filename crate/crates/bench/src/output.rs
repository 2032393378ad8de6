//! CSV writers. Every file starts with a `# format=<name>/v1 ...` comment line
//! carrying the seed; floats are written with 17 significant digits.

use std::io::Write;

use exactpen::{SolveReport, TraceRow};

use crate::error::Result;

pub const TRACE_FORMAT: &str = "trace/v1";
pub const BATCH_FORMAT: &str = "batch/v1";
pub const EFFICIENCY_FORMAT: &str = "efficiency/v1";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn is_irwa(solver: &str) -> bool {
    solver.starts_with("irwa")
}

/// Column names of a trace file; IRWA and ADAL differ in two columns.
pub fn trace_header(solver: &str) -> [&'static str; 11] {
    let (smoothed, measure) = if is_irwa(solver) {
        ("J_eps", "eps_norm")
    } else {
        ("J_hat", "E_k")
    };
    [
        "iter",
        "J0",
        smoothed,
        "dual_obj",
        "gap",
        "cg_iters",
        "cumulative_cg",
        "step_norm",
        measure,
        "cg_unconverged",
        "wall_ns",
    ]
}

pub fn trace_record(row: &TraceRow) -> [String; 11] {
    [
        row.iter.to_string(),
        fmt_f64(row.j0),
        fmt_f64(row.smoothed),
        fmt_f64(row.dual_obj),
        fmt_f64(row.gap),
        row.cg_iters.to_string(),
        row.cumulative_cg.to_string(),
        fmt_f64(row.step_norm),
        fmt_f64(row.measure),
        u8::from(row.cg_unconverged).to_string(),
        row.wall_ns.to_string(),
    ]
}

pub fn write_trace<W: Write>(mut out: W, report: &SolveReport, seed: Option<u64>) -> Result<()> {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(
        out,
        "# format={TRACE_FORMAT} solver={} seed={seed} termination={}",
        report.solver,
        report.termination.as_str()
    )
    .map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(report.solver))?;
    for row in &report.trace {
        w.write_record(trace_record(row))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes a comment line and then `rows` under `header`.
pub fn write_table<W: Write>(mut out: W, comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "# {comment}").map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
