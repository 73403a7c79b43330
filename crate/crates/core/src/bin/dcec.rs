use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dcec::analytic;
use dcec::config::{Scenario, ScenarioConfig};
use dcec::experiment::{self, BoundGrid, ExperimentSpec, SweepRow, SWEEP_HEADER};
use dcec::Error;

/// Cooperative edge caching model and Monte Carlo validator for mmWave
/// small-cell networks.
#[derive(Parser)]
#[command(name = "dcec", version)]
struct Cli {
    /// Scenario JSON; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    drops: Option<u64>,
    /// Worker threads for Monte Carlo drops. Never changes output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form evaluation of every configured policy.
    Analytic,
    /// Monte Carlo estimate of every configured policy.
    Simulate {
        /// Also write per-drop samples (`samples_<policy>.csv`) to --out.
        #[arg(long, requires = "out")]
        samples: bool,
    },
    /// Run a named preset or a sweep file.
    Sweep(SweepArgs),
    /// Compare rate lower bounds with simulated means on a grid.
    ValidateBounds(BoundArgs),
    /// Delay-minimizing cluster size per backhaul capacity.
    OptimalK(OptimalKArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Preset name.
    name: Option<String>,
    /// Sweep definition in JSON instead of a preset.
    #[arg(long, conflicts_with = "name")]
    spec: Option<PathBuf>,
    /// List preset names.
    #[arg(long)]
    list: bool,
    /// Print the preset as JSON instead of running it.
    #[arg(long)]
    show: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1.4, 1.6, 2.0])]
    alphas: Vec<f64>,
    /// SBS densities per km².
    #[arg(long, value_delimiter = ',', default_values_t = [80.0, 160.0, 240.0, 320.0, 400.0])]
    densities: Vec<f64>,
    #[arg(long = "cluster-sizes", value_delimiter = ',', default_values_t = [1, 2, 4])]
    cluster_sizes: Vec<usize>,
}

#[derive(Args)]
struct OptimalKArgs {
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Backhaul capacities in bit/s.
    #[arg(long, value_delimiter = ',', default_values_t = [1e9, 2e9, 4e9, 8e9, 16e9])]
    backhaul: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> dcec::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let base = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    match &cli.command {
        Command::Analytic => {
            let s = base.to_scenario()?;
            let catalog = s.catalog()?;
            let rows = s
                .policies
                .iter()
                .map(|&p| {
                    let a = analytic::evaluate(&s.params, &catalog, &s.cache, p)?;
                    Ok(point_record(p, &SweepRow::from_analytic(f64::NAN, &a)))
                })
                .collect::<dcec::Result<Vec<_>>>()?;
            emit(cli.out.as_deref(), "analytic.csv", &point_header(), &rows)?;
        }
        Command::Simulate { samples } => {
            let s = base.to_scenario()?;
            let (drops, seed) = (cli.drops.unwrap_or(s.drops), cli.seed.unwrap_or(s.seed));
            if let (true, Some(dir)) = (samples, &cli.out) {
                write_samples(dir, &s, drops, seed)?;
            }
            let rows = s
                .policies
                .iter()
                .map(|&p| simulate_row(&s, p, drops, seed))
                .collect::<dcec::Result<Vec<_>>>()?;
            emit(cli.out.as_deref(), "simulate.csv", &point_header(), &rows)?;
        }
        Command::Sweep(args) => return sweep(&cli, &base, args),
        Command::ValidateBounds(args) => {
            let grid = BoundGrid {
                alphas: args.alphas.clone(),
                densities: args.densities.clone(),
                cluster_sizes: args.cluster_sizes.clone(),
            };
            let s = base.to_scenario()?;
            let rows = experiment::validate_bounds(
                &base,
                &grid,
                cli.drops.unwrap_or(s.drops),
                cli.seed.unwrap_or(s.seed),
            )?;
            if let Some(dir) = &cli.out {
                let records: Vec<_> = rows.iter().map(|r| r.record()).collect();
                emit(Some(dir), "bounds.csv", &experiment::BOUND_HEADER, &records)?;
            }
            print!("{}", experiment::format_bound_report(&rows));
            let violations = rows.iter().filter(|r| !r.holds()).count();
            if violations > 0 {
                eprintln!("{violations} of {} bounds exceed the simulated mean + 2 stderr", rows.len());
                return Ok(2);
            }
        }
        Command::OptimalK(args) => {
            if args.k_min == 0 || args.k_min > args.k_max {
                return Err(Error::Config("need 1 <= k-min <= k-max".into()));
            }
            let ks: Vec<usize> = (args.k_min..=args.k_max).collect();
            let rows = experiment::optimal_k_report(&base, &ks, &args.backhaul)?;
            let records: Vec<_> = rows.iter().map(|r| r.record()).collect();
            emit(cli.out.as_deref(), "optimal_k.csv", &experiment::OPTIMAL_K_HEADER, &records)?;
        }
    }
    Ok(0)
}

fn sweep(cli: &Cli, base: &ScenarioConfig, args: &SweepArgs) -> dcec::Result<u8> {
    if args.list {
        for p in experiment::presets() {
            println!("{}", p.name);
        }
        return Ok(0);
    }
    let spec = match (&args.name, &args.spec) {
        (_, Some(path)) => ExperimentSpec::load(path)?,
        (Some(name), None) => experiment::preset(name)
            .ok_or_else(|| Error::Config(format!("no preset named `{name}`; try --list")))?,
        (None, None) => return Err(Error::Config("sweep needs a preset name or --spec".into())),
    };
    if args.show {
        println!("{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
        return Ok(0);
    }
    let data = experiment::run(&spec, base, cli.drops, cli.seed)?;
    match &cli.out {
        Some(dir) => {
            for p in experiment::write_datasets(dir, &spec.name, &data)? {
                log::info!("wrote {}", p.display());
                println!("{}", p.display());
            }
        }
        None => {
            for d in &data {
                println!("# {}", d.file_name(&spec.name));
                print!("{}", d.to_csv_string());
            }
        }
    }
    Ok(0)
}

fn simulate_row(s: &Scenario, policy: dcec::popularity::Policy, drops: u64, seed: u64) -> dcec::Result<Vec<String>> {
    let (probs, summary) = experiment::simulate_scenario(s, policy, drops, seed)?;
    log::info!("{policy}: {} drops, fingerprint {}", summary.drops, summary.fingerprint);
    let row = SweepRow::from_simulation(f64::NAN, s, &probs, &summary)?;
    Ok(point_record(policy, &row))
}

fn write_samples(dir: &Path, s: &Scenario, drops: u64, seed: u64) -> dcec::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let catalog = s.catalog()?;
    for &policy in &s.policies {
        let placement = dcec::popularity::build_placement(&catalog, &s.cache, policy)?;
        let results = dcec::montecarlo::simulate_drops(&s.params, &catalog, &placement, &s.sim, drops, seed)?;
        let path = dir.join(format!("samples_{}.csv", policy.name().to_ascii_lowercase()));
        let file = std::fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        dcec::montecarlo::write_drop_samples(&results, std::io::BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::Io { path: path.clone(), source },
            other => other,
        })?;
        println!("{}", path.display());
    }
    Ok(())
}

fn point_header() -> Vec<&'static str> {
    std::iter::once("policy").chain(SWEEP_HEADER[1..].iter().copied()).collect()
}

fn point_record(policy: dcec::popularity::Policy, row: &SweepRow) -> Vec<String> {
    let mut r = row.record();
    r[0] = policy.name().to_string();
    r
}

fn emit(dir: Option<&Path>, file: &str, header: &[&str], rows: &[Vec<String>]) -> dcec::Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
            let path = dir.join(file);
            experiment::write_csv_file(&path, header, rows)?;
            println!("{}", path.display());
            Ok(())
        }
        None => experiment::write_csv(std::io::stdout().lock(), header, rows),
    }
}
