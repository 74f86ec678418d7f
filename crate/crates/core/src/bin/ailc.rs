//! Command-line front end: `list`, `run`, `check`, `compare`.
//!
//! Exit status is 0 on success, 1 for configuration or usage problems and 2
//! when a run aborts numerically.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ailc::harness::{
    builtin, builtin_scenarios, check_scenario, emit_results, load_scenario, run_scenario, ControllerKind, OutputFormat,
    ScenarioConfig, ScenarioOutcome,
};
use ailc::plant::AssumptionCheck;
use ailc::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ailc", version, about = "Adaptive iterative learning control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Run scenarios (built-in names or TOML files).
    Run(RunArgs),
    /// Sample the gain floor and Lipschitz constants of a scenario's plant.
    Check {
        #[command(flatten)]
        select: Select,
        /// Monte-Carlo samples per channel.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Half-width of the sampled state box.
        #[arg(long, default_value_t = 2.0)]
        state_range: f64,
        /// Half-width of the sampled input interval.
        #[arg(long, default_value_t = 2.0)]
        input_range: f64,
    },
    /// Run AILC and the DDILC baseline on one plant with a shared seed.
    Compare {
        #[command(flatten)]
        select: Select,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Select {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Output directory; nothing is written without it (or `out_dir` in the file).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print per-iteration errors.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario names or paths to TOML files; `all` runs the catalogue.
    targets: Vec<String>,
    #[arg(long)]
    scenario: Vec<String>,
    #[arg(long)]
    config: Vec<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads for independent scenarios.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_scenario(&text)
}

fn resolve(name: &str) -> Result<ScenarioConfig> {
    if let Some(cfg) = builtin(name) {
        return Ok(cfg);
    }
    let path = Path::new(name);
    if path.exists() {
        return read_config(path);
    }
    Err(Error::Usage(format!("{name:?} is neither a built-in scenario nor a file (see `ailc list`)")))
}

fn select_one(sel: &Select) -> Result<ScenarioConfig> {
    match (&sel.scenario, &sel.config) {
        (Some(name), None) => resolve(name),
        (None, Some(path)) => read_config(path),
        _ => Err(Error::Usage("pass exactly one of --scenario or --config".into())),
    }
}

fn apply(cfg: &mut ScenarioConfig, o: &Overrides) -> Result<()> {
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    if let Some(k) = o.iterations {
        cfg.run.iterations = k;
    }
    if let Some(dir) = &o.out {
        cfg.run.out_dir = Some(dir.display().to_string());
    }
    if let Some(f) = o.format {
        cfg.run.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    cfg.run.verbose |= o.verbose;
    cfg.validate()
}

fn report(out: &ScenarioOutcome) -> Result<String> {
    let s = &out.summary;
    let mut text = format!("{} (seed {}, K = {}, {:.2} s)\n", s.scenario, s.seed, s.iterations, s.wall_clock_s);
    for c in &s.controllers {
        for (ch, sum) in c.channels.iter().enumerate() {
            let last = sum.max_err.len() - 1;
            text += &format!(
                "  {:<5} ch{ch}: max_err k=1 {:.3e}  k={} {:.3e}   avg_err k={} {:.3e}\n",
                c.controller.as_str(),
                sum.max_err[0],
                last + 1,
                sum.max_err[last],
                last + 1,
                sum.avg_err[last]
            );
            if out.config.run.verbose {
                for (k, (m, a)) in sum.max_err.iter().zip(&sum.avg_err).enumerate() {
                    text += &format!("      k={:<4} max {m:.6e}  avg {a:.6e}\n", k + 1);
                }
            }
        }
        if let Some(st) = &c.solver {
            text += &format!(
                "  {:<5} solver: {} solves, {} iterations, {} cap hits, max residual {:.2e}\n",
                c.controller.as_str(),
                st.solves,
                st.total_iterations,
                st.cap_hits,
                st.max_residual
            );
        }
    }
    if let Some(dir) = &out.config.run.out_dir {
        for p in emit_results(out, Path::new(dir), out.config.run.format)? {
            text += &format!("  wrote {}\n", p.display());
        }
    }
    Ok(text)
}

fn run_one(cfg: &ScenarioConfig) -> Result<String> {
    let out = run_scenario(cfg)?;
    report(&out)
}

fn run_batch(args: &RunArgs) -> Result<()> {
    let mut configs = Vec::new();
    for t in args.targets.iter().chain(&args.scenario) {
        if t == "all" {
            configs.extend(builtin_scenarios().into_iter().map(|e| e.config));
        } else {
            configs.push(resolve(t)?);
        }
    }
    for p in &args.config {
        configs.push(read_config(p)?);
    }
    if configs.is_empty() {
        return Err(Error::Usage("nothing to run; name a scenario or pass --config".into()));
    }
    for cfg in &mut configs {
        apply(cfg, &args.overrides)?;
    }

    let workers = args.parallel.max(1).min(configs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<String>)>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = configs.get(i) else { break };
                let r = run_one(cfg);
                results.lock().expect("no worker panics while holding the lock").push((i, r));
            });
        }
    });
    let mut results = results.into_inner().expect("workers joined");
    results.sort_by_key(|(i, _)| *i);
    let mut first_err = None;
    for (i, r) in results {
        match r {
            Ok(text) => print!("{text}"),
            Err(e) => {
                eprintln!("{}: {e}", configs[i].run.name);
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn check(sel: &Select, samples: usize, state_range: f64, input_range: f64) -> Result<()> {
    let cfg = select_one(sel)?;
    if !(state_range > 0.0 && input_range > 0.0) || samples == 0 {
        return Err(Error::Usage("samples and ranges must be positive".into()));
    }
    let opts = AssumptionCheck {
        samples,
        seed: cfg.run.seed,
        state_range,
        input_range,
        ..Default::default()
    };
    let reports = check_scenario(&cfg, &opts);
    println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialise"));
    for r in reports.iter().filter(|r| r.flagged) {
        eprintln!(
            "warning: channel {} input gain drops to {:.3e} in the sampled region",
            r.channel, r.min_gain
        );
    }
    Ok(())
}

fn compare(sel: &Select, overrides: &Overrides) -> Result<()> {
    let mut cfg = select_one(sel)?;
    if cfg.controller.ailc.is_none() {
        return Err(Error::Usage("compare needs a scenario with [controller.ailc] settings".into()));
    }
    cfg.controller.controllers = vec![ControllerKind::Ailc, ControllerKind::Ddilc];
    if cfg.controller.ddilc.is_none() {
        cfg.controller.ddilc = Some(Default::default());
    }
    apply(&mut cfg, overrides)?;
    print!("{}", run_one(&cfg)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = match &cli.command {
        Command::List => {
            for e in builtin_scenarios() {
                println!("{:<20} {}", e.name, e.description);
            }
            Ok(())
        }
        Command::Run(args) => run_batch(args),
        Command::Check {
            select,
            samples,
            state_range,
            input_range,
        } => check(select, *samples, *state_range, *input_range),
        Command::Compare { select, overrides } => compare(select, overrides),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
