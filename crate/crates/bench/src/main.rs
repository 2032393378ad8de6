use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exactpen_bench::batch::{run_batch, write_batch, BatchSpec, GenSpec};
use exactpen_bench::generators::{gen_experiment1, gen_experiment2, gen_l1svm_sized, SvmSizes};
use exactpen_bench::io::ProblemFile;
use exactpen_bench::oracle::oracle_solve;
use exactpen_bench::output::write_trace;
use exactpen_bench::solvers::{run_solver, BaseConfigs, Overrides, SolverKind};
use exactpen_bench::{BenchError, Result};

#[derive(Parser)]
#[command(
    name = "exactpen",
    version,
    about = "IRWA and ADAL solvers for exact-penalty subproblems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random problem file.
    Gen(GenArgs),
    /// Solve a problem file and write the iteration trace as CSV.
    Solve(SolveArgs),
    /// Solve a problem file with the dense reference solver.
    Oracle(OracleArgs),
    /// Solve many generated problems and write CG-effort tables.
    Batch(BatchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Exp1,
    Exp2,
    Svm,
}

#[derive(Args)]
struct GenOpts {
    #[arg(long, value_enum, default_value = "exp1")]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variables (exp1).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 300)]
    m_eq: usize,
    #[arg(long, default_value_t = 300)]
    m_ineq: usize,
    /// Size index (exp2, svm).
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 50.0)]
    lambda: f64,
    /// Override SVM sizes (samples, informative, noise features).
    #[arg(long, num_args = 3, value_names = ["M", "S", "T"])]
    svm_sizes: Option<Vec<usize>>,
}

impl GenOpts {
    fn spec(&self) -> GenSpec {
        match self.kind {
            Kind::Exp1 => GenSpec::Experiment1 {
                m_eq: self.m_eq,
                m_ineq: self.m_ineq,
                n: self.n,
            },
            Kind::Exp2 => GenSpec::Experiment2 { j: self.j },
            Kind::Svm => GenSpec::Svm {
                sizes: match self.svm_sizes.as_deref() {
                    Some(&[m, s, t]) => SvmSizes { m, s, t },
                    _ => SvmSizes::for_index(self.j),
                },
                lambda: self.lambda,
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    opts: GenOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Tuning {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "bigM")]
    big_m: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_prime: Option<f64>,
    #[arg(long)]
    sigma_dprime: Option<f64>,
    /// Stop once the duality gap drops by this fraction (e.g. 0.95).
    #[arg(long)]
    gap_reduction: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    cg_rtol: Option<f64>,
}

impl Tuning {
    fn overrides(&self, track_dual: bool) -> Overrides {
        Overrides {
            mu: self.mu,
            eps0: self.eps0,
            eta: self.eta,
            gamma: self.gamma,
            big_m: self.big_m,
            sigma: self.sigma,
            sigma_prime: self.sigma_prime,
            sigma_dprime: self.sigma_dprime,
            gap_reduction: self.gap_reduction.map(|r| 1.0 - r),
            max_iters: self.max_iters,
            cg_rtol: self.cg_rtol,
            track_dual,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "irwa")]
    solver: SolverKind,
    /// Recorded in the trace header; defaults to the seed stored in the problem file.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the dual objective on every row.
    #[arg(long)]
    track_dual: bool,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    opts: GenOpts,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "irwa,adal")]
    solver: Vec<SolverKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,0.9,0.95")]
    thresholds: Vec<f64>,
    #[command(flatten)]
    tuning: Tuning,
    /// Output directory for batch.csv and efficiency.csv.
    #[arg(long, default_value = "batch-out")]
    out: PathBuf,
}

fn generate(opts: &GenOpts) -> ProblemFile {
    match opts.spec() {
        GenSpec::Experiment1 { m_eq, m_ineq, n } => gen_experiment1(opts.seed, m_eq, m_ineq, n),
        GenSpec::Experiment2 { j } => gen_experiment2(opts.seed, j),
        GenSpec::Svm { sizes, lambda } => gen_l1svm_sized(opts.seed, sizes, lambda),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| BenchError::Io {
            path: path.clone(),
            source: e,
        })?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen(args) => {
            let file = generate(&args.opts);
            let mut w = sink(&args.out)?;
            writeln!(w, "{}", file.to_json()?).map_err(|e| BenchError::Format(e.to_string()))?;
            Ok(true)
        }
        Cmd::Solve(args) => {
            let file = ProblemFile::read(&args.problem)?;
            let p = file.to_problem()?;
            let ov = args.tuning.overrides(args.track_dual);
            let rep = run_solver(&p, args.solver, &BaseConfigs::default(), &ov, &vec![0.0; p.n()])?;
            let seed = args.seed.or(file.meta.as_ref().map(|m| m.seed));
            write_trace(sink(&args.out)?, &rep, seed)?;
            eprintln!(
                "{}: {} after {} iterations, {} CG steps, J0 = {:.10e}",
                rep.solver,
                rep.termination.as_str(),
                rep.iterations,
                rep.cumulative_cg,
                rep.final_j0
            );
            Ok(!rep.flagged())
        }
        Cmd::Oracle(args) => {
            let p = ProblemFile::read(&args.problem)?.to_problem()?;
            let sol = oracle_solve(&p, args.max_iters)?;
            let doc = serde_json::json!({
                "x": sol.x,
                "u": sol.u,
                "J_star": sol.j_star,
                "dual": sol.dual,
                "gap": sol.gap,
                "iters": sol.iters,
                "certified": sol.certified,
            });
            writeln!(sink(&args.out)?, "{doc}").map_err(|e| BenchError::Format(e.to_string()))?;
            Ok(sol.certified)
        }
        Cmd::Batch(args) => {
            let spec = BatchSpec {
                generator: args.opts.spec(),
                count: args.count,
                base_seed: args.opts.seed,
                solvers: args.solver,
                thresholds: args.thresholds,
                base: BaseConfigs::default(),
                overrides: args.tuning.overrides(false),
            };
            let result = run_batch(&spec)?;
            write_batch(&args.out, &spec, &result)?;
            eprintln!("wrote {} rows to {}", result.rows.len(), args.out.display());
            Ok(!result.any_flagged)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
