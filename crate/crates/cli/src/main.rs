use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use frobkit_core::arith::FundamentalDiscriminant;
use frobkit_core::curve::{CurveError, WeierstrassCurve};
use frobkit_core::frobenius::{TraceEngine, TraceRecord, DEFAULT_NAIVE_BELOW};
use frobkit_core::groupgl2::{self, GroupError};
use frobkit_core::stats::{self, StatsError};
use frobkit_core::store::{CacheDir, Catalog, StoreError, TraceCache};

mod render;

use render::Output;

#[derive(Debug, Parser)]
#[command(
    name = "frobkit",
    version,
    about = "Traces of Frobenius and Frobenius-field statistics for elliptic curves over Q"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Upper bound for primes
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    xmax: u64,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    threads: Option<u64>,
    /// Trace cache directory; FROBKIT_CACHE_DIR takes precedence when set
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Output format (the default depends on the command)
    #[arg(long, global = true, value_enum)]
    output: Option<Format>,
    /// Primes below this bound use the table engine, others baby-step giant-step
    #[arg(long, global = true, default_value_t = DEFAULT_NAIVE_BELOW)]
    naive_below: u64,
    /// Report cache usage and computed trace counts on stderr
    #[arg(long, global = true)]
    stats: bool,
    /// Neither read nor write the trace cache
    #[arg(long, global = true)]
    no_cache: bool,
    /// Curve catalog to use instead of the bundled one
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// a_p, reduction type and Frobenius field at every good prime
    Scan { curve: String },
    /// Frobenius-field coincidence density and isogeny verdict for two curves
    Compare { first: String, second: String },
    /// Complex-multiplication detection
    Cm { curve: String },
    /// Density of primes whose Frobenius field is Q(sqrt(D))
    FieldDensity {
        curve: String,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_disc)]
        disc: FundamentalDiscriminant,
    },
    /// Lang-Trotter counts for a fixed Frobenius field
    Lt {
        curve: String,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_disc)]
        disc: FundamentalDiscriminant,
    },
    /// Number of distinct Frobenius fields over ordinary primes
    DistinctFields { curve: String },
    /// Joint quadratic-residue sieve of a_p^2 - 4p modulo several primes
    Sieve {
        first: String,
        second: String,
        #[arg(long, value_delimiter = ',', required = true)]
        ells: Vec<u64>,
    },
    /// Exact share of same-splitting pairs in equal-determinant pairs of GL2(F_l)
    GroupDensity {
        #[arg(long)]
        ell: u64,
    },
    /// Quadratic twist of a curve
    Twist {
        curve: String,
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
    },
    /// Catalog operations
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// List catalog entries
    List,
}

fn parse_disc(s: &str) -> Result<FundamentalDiscriminant, String> {
    let v: i64 = s.parse().map_err(|e| format!("{e}"))?;
    FundamentalDiscriminant::new(v).map_err(|e| e.to_string())
}

/// Failure of a command, split by exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownCurve(_) | StoreError::InvalidEntry { .. } => {
                Failure::Usage(e.to_string())
            }
            StoreError::CatalogParse { .. } | StoreError::DuplicateLabel(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Compute(other.to_string()),
        }
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Frobenius(_) => Failure::Compute(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<GroupError> for Failure {
    fn from(e: GroupError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::Overflow | CurveError::UnfactoredDiscriminant(_) => {
                Failure::Compute(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

/// Resolved run settings shared by the subcommands.
struct Context {
    x_max: u64,
    engine: TraceEngine,
    catalog: Catalog,
    cache: Option<CacheDir>,
    stats: bool,
    format: Option<Format>,
}

impl Context {
    fn from_opts(g: &GlobalOpts) -> Result<Self, Failure> {
        let catalog = match &g.catalog {
            Some(path) => Catalog::load(path)?,
            None => Catalog::bundled(),
        };
        let cache = (!g.no_cache).then(|| CacheDir::new(cache_root(g.cache_dir.clone())));
        Ok(Self {
            x_max: g.xmax,
            engine: TraceEngine::new(g.naive_below),
            catalog,
            cache,
            stats: g.stats,
            format: g.output,
        })
    }

    fn curve(&self, name: &str) -> Result<WeierstrassCurve, Failure> {
        Ok(self.catalog.resolve(name)?)
    }

    /// Records to `x_max`, served from and written back to the cache.
    fn records(&self, curve: &WeierstrassCurve) -> Result<Vec<TraceRecord>, Failure> {
        let (cache, computed, reused) = match &self.cache {
            Some(dir) => {
                let (cache, computed) = dir.ensure(curve, self.x_max, &self.engine)?;
                (cache, computed, true)
            }
            None => {
                let mut cache = TraceCache::new(curve);
                let computed = cache.extend(curve, self.x_max, &self.engine)?;
                (cache, computed, false)
            }
        };
        if self.stats {
            eprintln!(
                "frobkit: {}: computed {computed} traces, cache covers {}{}",
                curve.name(),
                cache.covered_up_to(),
                if reused { "" } else { " (cache disabled)" },
            );
        }
        Ok(cache.records(self.x_max)?)
    }

    fn output(&self, default: Format) -> Output {
        Output::new(self.format.unwrap_or(default))
    }
}

fn cache_root(flag: Option<PathBuf>) -> PathBuf {
    if let Some(env) = std::env::var_os("FROBKIT_CACHE_DIR").filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(xdg).join("frobkit");
    }
    match std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        Some(home) => PathBuf::from(home).join(".cache").join("frobkit"),
        None => PathBuf::from(".frobkit-cache"),
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let ctx = Context::from_opts(&cli.global)?;
    let x_max = ctx.x_max;
    match cli.command {
        Command::Scan { curve } => {
            let e = ctx.curve(&curve)?;
            let records = ctx.records(&e)?;
            Ok(ctx.output(Format::Csv).scan(&e, x_max, &records))
        }
        Command::Compare { first, second } => {
            let (e1, e2) = (ctx.curve(&first)?, ctx.curve(&second)?);
            let (r1, r2) = (ctx.records(&e1)?, ctx.records(&e2)?);
            let report = stats::coincidence_from_records(&r1, &r2, x_max);
            let cm1 = stats::cm_detect_from_records(&r1, x_max);
            let cm2 = stats::cm_detect_from_records(&r2, x_max);
            let verdict = stats::isogeny_verdict(report, cm1.verdict, cm2.verdict);
            Ok(ctx
                .output(Format::Json)
                .compare(&e1, &e2, x_max, &verdict, &cm1, &cm2))
        }
        Command::Cm { curve } => {
            let e = ctx.curve(&curve)?;
            let verdict = stats::cm_detect_from_records(&ctx.records(&e)?, x_max);
            Ok(ctx.output(Format::Json).cm(&e, x_max, &verdict))
        }
        Command::FieldDensity { curve, disc } => {
            let e = ctx.curve(&curve)?;
            let records = ctx.records(&e)?;
            let est = stats::fixed_field_from_records(&records, disc, x_max)?;
            Ok(ctx
                .output(Format::Json)
                .field_density(&e, x_max, disc, &est))
        }
        Command::Lt { curve, disc } => {
            let e = ctx.curve(&curve)?;
            let records = ctx.records(&e)?;
            let points = stats::lang_trotter_from_records(&records, disc, x_max)?;
            Ok(ctx
                .output(Format::Json)
                .lang_trotter(&e, x_max, disc, &points))
        }
        Command::DistinctFields { curve } => {
            let e = ctx.curve(&curve)?;
            let points = stats::distinct_fields_from_records(&ctx.records(&e)?, x_max);
            Ok(ctx.output(Format::Json).distinct_fields(&e, x_max, &points))
        }
        Command::Sieve {
            first,
            second,
            ells,
        } => {
            let (e1, e2) = (ctx.curve(&first)?, ctx.curve(&second)?);
            let (r1, r2) = (ctx.records(&e1)?, ctx.records(&e2)?);
            let report = stats::joint_qr_from_records(&r1, &r2, &ells, x_max)?;
            Ok(ctx.output(Format::Json).sieve(&e1, &e2, x_max, &report))
        }
        Command::GroupDensity { ell } => {
            let report = groupgl2::h_prime_ratio(ell)?;
            Ok(ctx.output(Format::Json).group_density(&report))
        }
        Command::Twist { curve, d } => {
            let e = ctx.curve(&curve)?;
            let twisted = e.quadratic_twist(d)?;
            Ok(ctx.output(Format::Table).twist(&e, d, &twisted))
        }
        Command::Catalog {
            action: CatalogAction::List,
        } => Ok(ctx.output(Format::Table).catalog(&ctx.catalog)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        pool = pool.num_threads(n as usize);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("frobkit: cannot start worker threads: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(text) => {
            let mut out = io::stdout().lock();
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("frobkit: error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("frobkit: computation failed: {msg}");
            ExitCode::from(2)
        }
    }
}
