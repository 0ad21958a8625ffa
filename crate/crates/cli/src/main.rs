#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use config::ExperimentConfig;
use linfvar_core::aronsson::residual_field;
use linfvar_core::checks::{self, zigzag_pair};
use linfvar_core::function_space::{self, BoundaryData, DiscreteFunction, Grid};
use linfvar_core::implicit_dsolution::{construct, ConstructOptions, MonotoneH};
use linfvar_core::lp_solver::continuation;
use linfvar_core::oracle_1d::absolute_minimizer_pure;
use linfvar_core::supremand::{parse_profile, parse_supremand, SquaredHessian, Supremand};
use linfvar_core::young::{dsolution_criterion, EscapeRule, DEFAULT_STEPS};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Acceptance(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Acceptance(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<linfvar_core::Error> for CliError {
    fn from(e: linfvar_core::Error) -> Self {
        use linfvar_core::Error as E;
        match e {
            E::ShootingFailed { .. }
            | E::Solver(_)
            | E::ShiftViolation { .. }
            | E::NonDifferentiable { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "linfvar",
    version,
    about = "Second-order L-infinity variational experiments"
)]
struct Cli {
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// L^p continuation from one or more JSON configs.
    Solve(SolveArgs),
    /// Aronsson residuals of a stored solution.
    Residual(ResidualArgs),
    /// Closed-form minimizer of ||u''||_inf for clamped 1D data.
    Oracle(OracleArgs),
    /// Bang-bang solution of H(x, u, u', u''^2) = C.
    Implicit(ImplicitArgs),
    /// Young-measure D-solution diagnostics on a fixture.
    Young(YoungArgs),
    /// The acceptance suite.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Config files; each run writes to its own subdirectory of the output.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Overrides `supremand` in every config.
    #[arg(long)]
    supremand: Option<String>,
    /// Overrides `seed` in every config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` in every config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResidualArgs {
    /// Solution CSV, with its boundary sidecar if present.
    solution: PathBuf,
    #[arg(long, default_value = "squared-hessian")]
    supremand: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct OracleArgs {
    a: f64,
    b: f64,
    /// u(a)
    va: f64,
    /// u'(a)
    sa: f64,
    /// u(b)
    vb: f64,
    /// u'(b)
    sb: f64,
    /// Also write oracle.csv (sampled on this many nodes) and oracle.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 201)]
    nodes: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ImplicitArgs {
    /// Profile name.
    #[arg(long = "h", default_value = "identity")]
    profile: String,
    /// Energy level.
    #[arg(long = "C")]
    level: f64,
    /// `zero` or `A,A',B,B'`.
    #[arg(long = "g", default_value = "zero")]
    data: String,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Sign of u'' on the first arc; both are tried when omitted.
    #[arg(long)]
    sign: Option<i8>,
    #[arg(long, default_value_t = 201)]
    nodes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Fixture {
    Quadratic,
    Cubic,
    Zigzag,
}

#[derive(Debug, Args)]
struct YoungArgs {
    #[arg(long, value_enum)]
    fixture: Fixture,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Escapes when |Z| * step exceeds this share of max |X|.
    #[arg(long, default_value_t = 0.5)]
    relative: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only these criteria (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
    /// Also write acceptance.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Residual(a) => cmd_residual(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Implicit(a) => cmd_implicit(a),
        Command::Young(a) => cmd_young(a),
        Command::Check(a) => cmd_check(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let mut runs: Vec<(String, ExperimentConfig)> = Vec::new();
    if args.configs.is_empty() {
        runs.push(("run".into(), ExperimentConfig::default()));
    }
    for path in &args.configs {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        runs.push((name, ExperimentConfig::load(path).map_err(CliError::Usage)?));
    }
    for (_, cfg) in &mut runs {
        if let Some(s) = &args.supremand {
            cfg.supremand = s.clone();
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &args.out {
            cfg.out = out.clone();
        }
    }
    let single = runs.len() == 1;
    let results: Vec<CliResult<()>> = runs
        .par_iter()
        .map(|(name, cfg)| {
            let dir = if single {
                cfg.out.clone()
            } else {
                cfg.out.join(name)
            };
            solve_one(cfg, &dir)
        })
        .collect();
    // usage errors take precedence over solver failures
    let mut worst: Option<CliError> = None;
    for r in results {
        if let Err(e) = r {
            eprintln!("error: {e}");
            if worst.as_ref().is_none_or(|w| e.code() < w.code()) {
                worst = Some(e);
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

fn solve_one(cfg: &ExperimentConfig, dir: &Path) -> CliResult<()> {
    let grid = cfg.grid.build()?;
    let h = parse_supremand(&cfg.supremand, grid.dim())?;
    let g = cfg.boundary.build(&grid)?;
    let mut opts = cfg.solver.clone();
    opts.seed = cfg.seed;
    let schedule = cfg.schedule();
    let result = continuation(&h, &grid, &g, &schedule, &opts)?;
    result.write_artifacts(dir)?;
    if let Some(u) = result.limit() {
        function_space::save(u, &dir.join("solution.csv"))?;
    }
    let mut plot = String::from("# p E_p E_inf\n");
    for s in &result.steps {
        plot.push_str(&format!("{} {} {}\n", s.p, s.report.e_p, s.report.e_inf));
    }
    write(&dir.join("energies.dat"), &plot)?;
    write(&dir.join("config.json"), &pretty(cfg))?;
    if let Some(e) = &result.failure {
        return Err(CliError::Solver(format!("continuation stopped early: {e}")));
    }
    println!("{}", dir.display());
    Ok(())
}

fn cmd_residual(args: ResidualArgs) -> CliResult<()> {
    if !args.solution.exists() {
        return Err(CliError::Usage(format!(
            "{}: no such file",
            args.solution.display()
        )));
    }
    let u = function_space::load(&args.solution)?;
    let h = parse_supremand(&args.supremand, u.grid().dim())?;
    let r = residual_field(h.as_ref(), &u)?;
    let path = args.out.join("residual.csv");
    r.write_csv(u.grid(), &path)?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> CliResult<()> {
    let m = absolute_minimizer_pure(args.a, args.b, args.va, args.sa, args.vb, args.sb)?;
    let json = pretty(&m.to_json());
    print!("{json}");
    if let Some(dir) = &args.out {
        let grid = Grid::new_1d(args.a, args.b, args.nodes)?;
        function_space::save(&m.solution.sample(&grid)?, &dir.join("oracle.csv"))?;
        write(&dir.join("oracle.json"), &json)?;
    }
    Ok(())
}

fn parse_data(s: &str) -> CliResult<BoundaryData> {
    if s == "zero" {
        return Ok(BoundaryData::clamped_1d(0.0, 0.0, 0.0, 0.0));
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--g `{s}`: {e}")))?;
    match v.as_slice() {
        [va, sa, vb, sb] => Ok(BoundaryData::clamped_1d(*va, *sa, *vb, *sb)),
        _ => Err(CliError::Usage(format!(
            "--g expects `zero` or four numbers, found `{s}`"
        ))),
    }
}

fn cmd_implicit(args: ImplicitArgs) -> CliResult<()> {
    let h = MonotoneH::with_default_delta(parse_profile(&args.profile)?)?;
    let g = parse_data(&args.data)?;
    let sign0 = match args.sign {
        None => None,
        Some(s @ (1 | -1)) => Some(s),
        Some(s) => {
            return Err(CliError::Usage(format!(
                "--sign must be 1 or -1, found {s}"
            )))
        }
    };
    let opts = ConstructOptions {
        sign0,
        nodes: args.nodes,
        ..Default::default()
    };
    let sol = construct(&h, &g, args.a, args.b, args.level, &opts)?;
    println!("{}", sol.to_json());
    if let Some(dir) = &args.out {
        sol.write_artifacts(dir)?;
    }
    Ok(())
}

fn cmd_young(args: YoungArgs) -> CliResult<()> {
    let (h, u): (Arc<dyn Supremand>, DiscreteFunction) = match args.fixture {
        Fixture::Quadratic | Fixture::Cubic => {
            let grid = Grid::new_1d(0.0, 1.0, 201)?;
            let cubic = matches!(args.fixture, Fixture::Cubic);
            let u = DiscreteFunction::sample(
                grid,
                move |x| if cubic { x[0].powi(3) } else { x[0] * x[0] },
                move |x| vec![if cubic { 3.0 * x[0] * x[0] } else { 2.0 * x[0] }],
            )?;
            (Arc::new(SquaredHessian::new(1)), u)
        }
        Fixture::Zigzag => {
            let (h, sols) = zigzag_pair()?;
            (Arc::new(h.supremand()), sols[0].to_function()?)
        }
    };
    let rep = dsolution_criterion(
        h.as_ref(),
        &u,
        &DEFAULT_STEPS,
        EscapeRule::Relative(args.relative),
        args.tol,
    )?;
    let summary = serde_json::json!({
        "fixture": format!("{:?}", args.fixture).to_lowercase(),
        "supremand": h.info().name,
        "nodes": rep.nodes.len(),
        "pass_fraction": rep.pass_fraction(),
        "all_pass": rep.failing_nodes().is_empty(),
        "max_escaped_mass": rep.escaped_mass.iter().copied().fold(0.0, f64::max),
        "factorization_defect": rep.factorization_defect,
    });
    let json = pretty(&summary);
    print!("{json}");
    if let Some(dir) = &args.out {
        write(&dir.join("young.json"), &json)?;
        rep.write_csv(u.grid(), &dir.join("young.csv"))?;
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> CliResult<()> {
    let ids: Vec<usize> = if args.only.is_empty() {
        (1..=10).collect()
    } else {
        args.only.clone()
    };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
        return Err(CliError::Usage(format!(
            "no criterion {bad}; ids are 1..=10"
        )));
    }
    let outcomes: Vec<checks::Outcome> = ids
        .par_iter()
        .map(|&id| checks::run(id, args.seed))
        .collect();
    for o in &outcomes {
        println!("{o}");
    }
    if let Some(dir) = &args.out {
        write(&dir.join("acceptance.json"), &pretty(&outcomes))?;
    }
    let failed: Vec<usize> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.id)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!(
            "failing criteria: {failed:?}"
        )))
    }
}
