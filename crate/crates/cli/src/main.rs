use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dgldpc::cache::{TableCache, CACHE_DIR_ENV, SCHEMA_VERSION};
use dgldpc::codebook::CATALOG;
use dgldpc::engine;
use dgldpc::evolve::{self, SearchSpec};
use dgldpc::reproduce;
use dgldpc::{CnExit, CodeRegistry, ComponentCode, Ensemble, Error, Exec, VnExit};

#[derive(Parser)]
#[command(
    name = "dgldpc",
    about = "Stability bound, EXIT functions and thresholds of D-GLDPC ensembles on the BEC"
)]
#[command(
    disable_version_flag = true,
    subcommand_required = false,
    arg_required_else_help = true
)]
struct Cli {
    /// Print the version, the builtin code catalog and the cache schema.
    #[arg(long)]
    version: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Cache directory (default: $DGLDPC_CACHE_DIR or ./cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Recompute every table instead of reading or writing the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Component-code queries.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Ensemble analysis.
    #[command(subcommand)]
    Ensemble(EnsembleCmd),
    /// Regenerate the reference table and curve family.
    #[command(subcommand)]
    Reproduce(ReproduceCmd),
}

#[derive(Subcommand)]
enum CodeCmd {
    /// n, k, d_min, weight-2 spectrum and stability coefficients.
    Info { code: String },
    /// Sample the MAP EXIT function on a grid.
    Exit {
        code: String,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u32).range(2..))]
        grid: u32,
        /// Channel erasure probability (VN role; omitted = grid over q too).
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Vn,
    Cn,
}

#[derive(Subcommand)]
enum EnsembleCmd {
    /// Design rate.
    Rate { spec: PathBuf },
    /// P, C and the stability bound P^-1(1/C).
    Bound { spec: PathBuf },
    /// Decoding threshold by bisection.
    Threshold {
        spec: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the erasure trace at the threshold.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// EXIT-chart samples (IA, IEV, IECinv).
    Exitchart(ChartArgs),
    /// Differential-evolution search.
    Optimize {
        searchspec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        history: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ChartArgs {
    spec: PathBuf,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 501, value_parser = clap::value_parser!(u32).range(2..))]
    grid: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReproduceCmd {
    /// Thresholds and stability bounds of the two BCH-heavy distributions.
    Table1,
    /// P^-1(x) for repetition/SPC-7 mixtures with lambda + mu = 0.3.
    Fig2 {
        #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u32).range(2..))]
        points: u32,
        #[arg(long, default_value_t = 3.0)]
        x_max: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!("dgldpc {}", env!("CARGO_PKG_VERSION"));
        println!("codes: {CATALOG}");
        println!("cache schema: v{SCHEMA_VERSION} (override directory with {CACHE_DIR_ENV})");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command.as_ref() else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let ctx = Context::new(&cli);
    match run(&ctx, command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Context {
    cache: TableCache,
}

impl Context {
    fn new(cli: &Cli) -> Self {
        let exec = Exec::default();
        let cache = if cli.no_cache {
            TableCache::disabled(exec)
        } else if let Some(dir) = &cli.cache_dir {
            TableCache::new(dir, exec)
        } else {
            TableCache::from_env(exec)
        };
        Context { cache }
    }

    fn load_ensemble(&self, path: &Path) -> Result<Ensemble, Error> {
        let mut reg = CodeRegistry::new();
        let e = Ensemble::load_spec(path, &mut reg)?;
        self.cache.prepare_ensemble(&e)?;
        Ok(e)
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve_code(name: &str) -> Result<Arc<ComponentCode>, Error> {
    CodeRegistry::new().resolve(name, None)
}

fn run(ctx: &Context, command: &Command) -> Result<(), Error> {
    match command {
        Command::Code(CodeCmd::Info { code }) => code_info(&*resolve_code(code)?),
        Command::Code(CodeCmd::Exit {
            code,
            role,
            grid,
            q,
            csv,
        }) => code_exit(ctx, &*resolve_code(code)?, *role, *grid as usize, *q, csv.as_deref()),
        Command::Ensemble(cmd) => ensemble(ctx, cmd),
        Command::Reproduce(ReproduceCmd::Table1) => {
            let g = reproduce::gldpc_table()?;
            let d = reproduce::dgldpc_table()?;
            ctx.cache.prepare_ensemble(&g)?;
            ctx.cache.prepare_ensemble(&d)?;
            print!("{}", reproduce::format_table1(&reproduce::table1()?));
            Ok(())
        }
        Command::Reproduce(ReproduceCmd::Fig2 { points, x_max, csv }) => {
            if x_max.is_nan() || *x_max <= 0.0 {
                return Err(Error::domain("--x-max must be positive"));
            }
            emit(csv.as_deref(), &reproduce::fig2(*points as usize, *x_max)?)
        }
    }
}

fn code_info(c: &ComponentCode) -> Result<(), Error> {
    let w = c.weight2_spectrum()?;
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "name      {}", c.name());
    let _ = writeln!(s, "n         {}", c.n());
    let _ = writeln!(s, "k         {}", c.k());
    let _ = writeln!(s, "rate      {:.6}", c.rate());
    let _ = writeln!(s, "d_min     {}", c.min_distance());
    let _ = writeln!(s, "A2        {}", w.a2);
    let _ = writeln!(
        s,
        "A2_by_u   {}",
        join(&mut w.a2_by_u.iter().skip(1).map(u64::to_string))
    );
    let _ = writeln!(s, "C_i       {:.6}", c.stability_cn_constant()?);
    let p = c.stability_polynomial()?;
    let _ = writeln!(
        s,
        "P_i       {}",
        join(&mut p.coefficients.iter().skip(1).map(|x| format!("{x:.6}")))
    );
    print!("{s}");
    Ok(())
}

fn code_exit(
    ctx: &Context,
    c: &ComponentCode,
    role: RoleArg,
    grid: usize,
    q: Option<f64>,
    csv: Option<&Path>,
) -> Result<(), Error> {
    c.check_admissible()?;
    let at = |i: usize| i as f64 / (grid - 1) as f64;
    let mut s = String::from("p,q,IE\n");
    match role {
        RoleArg::Cn => {
            if q.is_some() {
                return Err(Error::domain("--q applies to the VN role only"));
            }
            ctx.cache.ensure_info(c)?;
            let f = CnExit::new(c)?;
            for i in 0..grid {
                let _ = writeln!(s, "{:.6},,{:.12}", at(i), f.exit(at(i)));
            }
        }
        RoleArg::Vn => {
            if let Some(q) = q {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::domain(format!("q = {q} is outside [0, 1]")));
                }
            }
            ctx.cache.ensure_split(c)?;
            let f = VnExit::new(c)?;
            let qs: Vec<f64> = match q {
                Some(q) => vec![q],
                None => (0..grid).map(at).collect(),
            };
            for &q in &qs {
                for i in 0..grid {
                    let _ = writeln!(s, "{:.6},{:.6},{:.12}", at(i), q, f.exit(at(i), q));
                }
            }
        }
    }
    emit(csv, &s)
}

fn ensemble(ctx: &Context, cmd: &EnsembleCmd) -> Result<(), Error> {
    match cmd {
        EnsembleCmd::Rate { spec } => {
            let mut reg = CodeRegistry::new();
            let e = Ensemble::load_spec(spec, &mut reg)?;
            println!("design_rate {:.6}", e.design_rate());
            Ok(())
        }
        EnsembleCmd::Bound { spec } => {
            let mut reg = CodeRegistry::new();
            let e = Ensemble::load_spec(spec, &mut reg)?;
            let b = e.stability_bound()?;
            println!("C         {:.6}", b.c);
            println!("P(1)      {:.6}", e.stability_p(1.0)?);
            if b.vacuous {
                println!("q_bound   {:.6} (vacuous: no d_min = 2 VN or CN type)", b.q_bound);
            } else {
                println!("q_bound   {:.6}", b.q_bound);
            }
            Ok(())
        }
        EnsembleCmd::Threshold { spec, tol, csv } => {
            if tol.is_nan() || *tol <= 0.0 {
                return Err(Error::domain("--tol must be positive"));
            }
            let e = ctx.load_ensemble(spec)?;
            let r = engine::threshold(&e, *tol)?;
            println!("q_star      {:.6}", r.q_star);
            println!("q_bound     {:.6}", r.q_bound);
            println!("gap         {:.6}", r.matching_gap);
            println!("iterations  {}", r.iterations_at_threshold);
            if let Some(path) = csv {
                emit(Some(path), &r.trace_csv())?;
            }
            Ok(())
        }
        EnsembleCmd::Exitchart(a) => {
            let e = ctx.load_ensemble(&a.spec)?;
            let chart = engine::exit_chart(&e, a.q, a.grid as usize)?;
            emit(a.csv.as_deref(), &chart.to_csv())?;
            if a.csv.is_some() {
                let (i, gap) = chart.min_gap();
                println!("min gap {gap:.6e} at IA = {:.6}", chart.points[i].ia);
            }
            Ok(())
        }
        EnsembleCmd::Optimize {
            searchspec,
            seed,
            out,
            history,
        } => {
            let mut reg = CodeRegistry::new();
            let mut spec = SearchSpec::load(searchspec, &mut reg)?;
            if let Some(s) = seed {
                spec.seed = *s;
            }
            for c in &spec.vn_pool {
                ctx.cache.prepare(c, true, false)?;
            }
            for c in &spec.cn_pool {
                ctx.cache.prepare(c, false, true)?;
            }
            let o = evolve::optimize(&spec, Exec::default())?;
            println!("q_star       {:.6}", o.report.q_star);
            println!("q_bound      {:.6}", o.report.q_bound);
            println!("design_rate  {:.6}", o.best.design_rate());
            if let Some(path) = history {
                emit(Some(path), &o.history_csv())?;
            }
            emit(out.as_deref(), &o.best.to_spec_string())
        }
    }
}
