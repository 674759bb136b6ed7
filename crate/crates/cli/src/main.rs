//! `xchain`: build level-transition matrices, compare algorithms exactly,
//! run Monte Carlo simulations and regenerate the built-in experiments.

mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xchain_core::analysis::{
    asymptotic_order, default_probe_times, metric_series, outperformance_report, spectral_gap, spectral_radius,
};
use xchain_core::experiments::{run_recipe, RecipeOptions};
use xchain_core::io::{empirical_to_csv, fmt_num, matrix_to_csv, read_matrix, series_to_csv, write_matrix};
use xchain_core::kernel::{flip_difference, p1_flip, p2_flip};
use xchain_core::optima::escape_analysis;
use xchain_core::sim::{monte_carlo, Algorithm, ProblemSpec, SimConfig};
use xchain_core::transition::{build, counterexample_pair, dominates, ordering_conditions};
use xchain_core::{FlipKernel, LevelProblem, TransitionMatrix};

use spec::{parse_kernel, parse_list, KernelSpec};

/// Fallible stdout writes, so a closed pipe surfaces as an error instead of a panic.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        write!(std::io::stdout().lock(), $($arg)*)
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($arg)*)
    }};
}

const OUT_DIR_ENV: &str = "XCHAIN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "xchain",
    version,
    about = "Exact and simulated analysis of (1+1) EAs with binomial crossover"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a transition matrix (or load one with `matrix load`).
    Matrix(MatrixCmd),
    /// Compare two kernels on one problem by exact iteration.
    Compare(CompareArgs),
    /// Monte Carlo runs of the EA or EA with crossover.
    Simulate(SimulateArgs),
    /// Print exact-pattern flip probabilities of both kernels.
    Kernel(KernelArgs),
    /// Optimal rates for escaping Deceptive levels directly to the optimum.
    Optima(OptimaArgs),
    /// Regenerate a built-in experiment (fig1, fig2, fig3).
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Onemax,
    Deceptive,
    Custom,
    CounterexampleR,
    CounterexampleS,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Ea,
    Eac,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, value_enum)]
    problem: Option<ProblemArg>,
    /// JSON file with `n`, `error_vector` and `level_of_ones` for `--problem custom`.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
}

impl ProblemArgs {
    fn load(&self) -> Result<LevelProblem> {
        let kind = self.problem.context("--problem is required")?;
        let need_n = || self.n.context("--n is required");
        Ok(match kind {
            ProblemArg::Onemax => LevelProblem::onemax(need_n()?)?,
            ProblemArg::Deceptive => LevelProblem::deceptive(need_n()?)?,
            ProblemArg::Custom => {
                let path = self
                    .problem_file
                    .as_ref()
                    .context("--problem custom needs --problem-file")?;
                let p = LevelProblem::load(path).with_context(|| format!("loading {}", path.display()))?;
                if let Some(n) = self.n {
                    if n != p.n() {
                        bail!("--n {n} does not match the problem file (n = {})", p.n());
                    }
                }
                p
            }
            ProblemArg::CounterexampleR | ProblemArg::CounterexampleS => {
                bail!("counterexample chains are not bitstring problems")
            }
        })
    }
}

#[derive(Args, Clone)]
struct RateArgs {
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Mutation rate for `ea`; coupled rate `C_R * q_m` for `eac`.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    qm: Option<f64>,
    #[arg(long)]
    cr: Option<f64>,
}

impl RateArgs {
    fn kernel(&self, n: usize) -> Result<FlipKernel> {
        let algo = self.algo.context("--algo is required")?;
        Ok(match algo {
            AlgoArg::Ea => {
                if self.qm.is_some() || self.cr.is_some() {
                    bail!("--algo ea takes only --p");
                }
                FlipKernel::mutation_only(n, self.p.context("--algo ea needs --p")?)?
            }
            AlgoArg::Eac => match (self.p, self.qm, self.cr) {
                (None, Some(q), Some(c)) => FlipKernel::mutation_crossover(n, q, c)?,
                (Some(p), None, Some(c)) => FlipKernel::coupled(n, p, c)?,
                (Some(p), Some(q), None) => FlipKernel::mutation_crossover(n, q, p / q)?,
                _ => bail!("--algo eac needs exactly two of --p, --qm, --cr"),
            },
        })
    }
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct MatrixCmd {
    #[command(subcommand)]
    action: Option<MatrixAction>,
    #[command(flatten)]
    build: MatrixBuildArgs,
}

#[derive(Subcommand)]
enum MatrixAction {
    /// Same as `matrix` with flags.
    Build(MatrixBuildArgs),
    /// Read a matrix CSV, check it and print its summary.
    Load {
        path: PathBuf,
        /// Write the parsed matrix back out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct MatrixBuildArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    rates: RateArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn matrix_summary(m: &TransitionMatrix) -> Result<()> {
    let worst = m.column_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    outln!("levels: {}", m.size())?;
    outln!("max |column sum - 1|: {}", fmt_num(worst))?;
    if m.max_level() > 0 {
        outln!("spectral radius: {}", fmt_num(spectral_radius(m)?))?;
        outln!("spectral gap: {}", fmt_num(spectral_gap(m)?))?;
    }
    Ok(())
}

fn cmd_matrix(cmd: MatrixCmd) -> Result<()> {
    let args = match cmd.action {
        Some(MatrixAction::Load { path, out }) => {
            let m = read_matrix(&path).with_context(|| format!("reading {}", path.display()))?;
            if let Some(out) = out {
                write_matrix(&out, &m)?;
            }
            return matrix_summary(&m);
        }
        Some(MatrixAction::Build(a)) => a,
        None => cmd.build,
    };
    let m = match args.problem.problem {
        Some(ProblemArg::CounterexampleR) | Some(ProblemArg::CounterexampleS) => {
            if args.rates.algo.is_some() {
                bail!("counterexample chains take no kernel flags");
            }
            let (r, s) = counterexample_pair(args.problem.n.context("--n is required")?)?;
            if args.problem.problem == Some(ProblemArg::CounterexampleR) {
                r
            } else {
                s
            }
        }
        _ => {
            let problem = args.problem.load()?;
            build(&problem, &args.rates.kernel(problem.n())?)?
        }
    };
    match &args.out {
        Some(path) => write_matrix(path, &m).with_context(|| format!("writing {}", path.display()))?,
        None => out!("{}", matrix_to_csv(&m))?,
    }
    matrix_summary(&m)
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// First kernel, e.g. `eac:p=0.1,cr=0.5` or `eac:qm=0.2,cr=0.5`.
    #[arg(long)]
    a: String,
    /// Second kernel, e.g. `ea:pm=0.1`.
    #[arg(long)]
    b: String,
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    /// Comma-separated tail indices.
    #[arg(long, default_value = "1")]
    tails: String,
    /// Output directory (defaults to $XCHAIN_OUT_DIR or the current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct SignChange {
    metric: String,
    first_sign_change: Option<usize>,
    a_below: usize,
    b_below: usize,
}

#[derive(Serialize)]
struct CompareReport {
    problem: String,
    n: usize,
    a: KernelSpec,
    b: KernelSpec,
    horizon: usize,
    dominates: bool,
    b_dominates_a: bool,
    conditions: xchain_core::transition::OrderingReport,
    outperforms: bool,
    sign_changes: Vec<SignChange>,
    final_signs: std::collections::BTreeMap<String, i8>,
    spectral_radii: [f64; 2],
    spectral_gaps: [f64; 2],
    asymptotic_t_star: Option<u64>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let problem = args.problem.load()?;
    let n = problem.n();
    let spec_a = parse_kernel(&args.a)?;
    let spec_b = parse_kernel(&args.b)?;
    let ma = build(&problem, &spec_a.kernel(n)?)?;
    let mb = build(&problem, &spec_b.kernel(n)?)?;
    let tails = parse_list(&args.tails)?;
    let q0 = problem.initial_distribution();
    let errors = problem.error_vector();
    let (sa, _) = metric_series(&ma, &q0, errors, &tails, args.horizon)?;
    let (sb, _) = metric_series(&mb, &q0, errors, &tails, args.horizon)?;
    let report = outperformance_report(&sa, &sb)?;
    let asym = asymptotic_order(&ma, &mb, &q0, errors, 1, &default_probe_times())?;
    let out = CompareReport {
        problem: format!("{:?}", problem.kind()).to_lowercase(),
        n,
        a: spec_a,
        b: spec_b,
        horizon: args.horizon,
        dominates: dominates(&ma, &mb)?.dominates,
        b_dominates_a: dominates(&mb, &ma)?.dominates,
        conditions: ordering_conditions(&ma, &mb)?,
        outperforms: report.outperforms,
        sign_changes: report
            .comparisons
            .iter()
            .map(|c| SignChange {
                metric: c.metric.clone(),
                first_sign_change: c.first_sign_change,
                a_below: c.a_below,
                b_below: c.b_below,
            })
            .collect(),
        final_signs: report
            .comparisons
            .iter()
            .map(|c| (c.metric.clone(), c.final_sign))
            .collect(),
        spectral_radii: [spectral_radius(&ma)?, spectral_radius(&mb)?],
        spectral_gaps: [spectral_gap(&ma)?, spectral_gap(&mb)?],
        asymptotic_t_star: asym.t_star,
    };
    let dir = args.out_dir.unwrap_or_else(default_out_dir);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("a.csv"), series_to_csv(&sa))?;
    fs::write(dir.join("b.csv"), series_to_csv(&sb))?;
    let json = serde_json::to_string_pretty(&out)?;
    fs::write(dir.join("report.json"), format!("{json}\n"))?;
    outln!("{json}")?;
    Ok(())
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    /// Coupled rate; the EA mutation rate when `--pm` is absent.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long)]
    qm: Option<f64>,
    #[arg(long)]
    cr: Option<f64>,
    #[arg(long)]
    adaptive: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated tail indices.
    #[arg(long)]
    tails: Option<String>,
    /// Output CSV (defaults to `empirical.csv` under $XCHAIN_OUT_DIR or `.`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn problem_spec(args: &ProblemArgs) -> Result<Option<ProblemSpec>> {
    let Some(kind) = args.problem else {
        return Ok(None);
    };
    let need_n = || args.n.context("--n is required");
    Ok(Some(match kind {
        ProblemArg::Onemax => ProblemSpec::OneMax { n: need_n()? },
        ProblemArg::Deceptive => ProblemSpec::Deceptive { n: need_n()? },
        ProblemArg::Custom => ProblemSpec::Custom {
            path: args
                .problem_file
                .clone()
                .context("--problem custom needs --problem-file")?,
        },
        _ => bail!("simulation needs a bitstring problem"),
    }))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let base: Option<SimConfig> = match &args.config {
        Some(path) => Some(
            serde_json::from_str(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
                .with_context(|| format!("parsing {}", path.display()))?,
        ),
        None => None,
    };
    let problem = match (problem_spec(&args.problem)?, &base) {
        (Some(p), _) => p,
        (None, Some(b)) => b.problem.clone(),
        (None, None) => bail!("--problem or --config is required"),
    };
    let algorithm = match (args.algo, &base) {
        (Some(AlgoArg::Ea), _) => Algorithm::Ea,
        (Some(AlgoArg::Eac), _) => Algorithm::Eac,
        (None, Some(b)) => b.algorithm,
        (None, None) => bail!("--algo is required"),
    };
    let pick = |flag: Option<f64>, from: fn(&SimConfig) -> Option<f64>| flag.or_else(|| base.as_ref().and_then(from));
    let config = SimConfig {
        problem,
        algorithm,
        p_m: pick(args.pm, |b| b.p_m),
        q_m: pick(args.qm, |b| b.q_m),
        c_r: pick(args.cr, |b| b.c_r),
        p: pick(args.p, |b| b.p),
        adaptive: args.adaptive || base.as_ref().is_some_and(|b| b.adaptive),
        horizon: args
            .horizon
            .or(base.as_ref().map(|b| b.horizon))
            .context("--horizon is required")?,
        runs: args
            .runs
            .or(base.as_ref().map(|b| b.runs))
            .context("--runs is required")?,
        base_seed: args
            .seed
            .or(base.as_ref().map(|b| b.base_seed))
            .context("--seed is required")?,
        tails: match &args.tails {
            Some(t) => parse_list(t)?,
            None => base.as_ref().map_or_else(|| vec![1], |b| b.tails.clone()),
        },
    };
    let sim = config.resolve()?;
    let series = monte_carlo(&sim);
    let out = args.out.unwrap_or_else(|| default_out_dir().join("empirical.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&out, empirical_to_csv(&series)).with_context(|| format!("writing {}", out.display()))?;
    outln!("{}", serde_json::to_string_pretty(&config)?)?;
    Ok(())
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    n: usize,
    /// Coupled rate `p = p_m = C_R * q_m`.
    #[arg(long)]
    p: f64,
    #[arg(long)]
    cr: f64,
}

fn cmd_kernel(args: KernelArgs) -> Result<()> {
    let (n, p, c) = (args.n, args.p, args.cr);
    FlipKernel::mutation_only(n, p)?;
    FlipKernel::coupled(n, p, c)?;
    outln!("l,p1,p2,diff")?;
    for l in 0..=n {
        let p1 = p1_flip(l, n, p)?;
        let p2 = p2_flip(l, n, p / c, c)?;
        let diff = if l >= 1 && l < n && c < 1.0 {
            flip_difference(l, p, c, n)?
        } else {
            p2 - p1
        };
        outln!("{l},{},{},{}", fmt_num(p1), fmt_num(p2), fmt_num(diff))?;
    }
    Ok(())
}

#[derive(Args)]
struct OptimaArgs {
    /// Dimensions: `5,8` or a range `5..20`.
    #[arg(long, default_value = "10")]
    n: String,
    /// Mutation rates; defaults to k/20 for k = 1..19.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_optima(args: OptimaArgs) -> Result<()> {
    let dims = spec::parse_dims(&args.n)?;
    let qs: Vec<f64> = match &args.q {
        Some(q) => q
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad rate `{v}`")))
            .collect::<Result<_>>()?,
        None => (1..20).map(|k| k as f64 / 20.0).collect(),
    };
    let mut out = String::from("n,j,q_m,p0j,p_star,p0j_max,cr_star,s0j_max,regime,strict_improvement\n");
    for &n in &dims {
        for j in 1..=n {
            for &q in &qs {
                let a = escape_analysis(n, j, q)?;
                out.push_str(&format!(
                    "{n},{j},{},{},{},{},{},{},{},{}\n",
                    fmt_num(q),
                    fmt_num(a.p0j),
                    fmt_num(a.optimal_p_m),
                    fmt_num(a.p0j_max),
                    fmt_num(a.optimal_c_r),
                    fmt_num(a.s0j_max),
                    a.regime.as_str(),
                    a.strict_improvement
                ));
            }
        }
    }
    write_or_print(args.out.as_deref(), &out)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out!("{text}")?,
    }
    Ok(())
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig1, fig2 or fig3.
    recipe: String,
    /// Parent directory; results go to `<out-dir>/<recipe>`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Dimensions, e.g. `6,9,12`.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<()> {
    let opts = RecipeOptions {
        horizon: args.horizon,
        dims: args.dims.as_deref().map(spec::parse_dims).transpose()?,
        runs: args.runs,
        seed: args.seed,
    };
    let dir = args.out_dir.unwrap_or_else(default_out_dir).join(&args.recipe);
    let summary = run_recipe(&args.recipe, &dir, &opts)?;
    outln!("{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Matrix(c) => cmd_matrix(c),
        Command::Compare(a) => cmd_compare(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Optima(a) => cmd_optima(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
