use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use exdim::experiments::{self, Experiment, ExperimentConfig, OutputFormat, QuantileMode};
use exdim::systems::SystemSpec;

/// Extreme-value estimates of local dimensions on chaotic attractors.
#[derive(Parser, Debug)]
#[command(name = "exdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shrinking-ball zoom around one reference point.
    Zoom(RunArgs),
    /// Zoom ensemble over independent reference points.
    Ensemble(RunArgs),
    /// Extremal index against sampling step and series length.
    EiSweep(RunArgs),
    /// Exponential i.i.d. series against its max-pair transform.
    IidDemo(RunArgs),
    /// Semi-analytic solenoid ball measure, slope and kinks.
    SolenoidMeasure(RunArgs),
    /// Exact Cantor ball measure and ratio on a radius grid.
    CantorOracle(RunArgs),
    /// Print the registered systems and their default parameters.
    ListSystems,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QMode {
    Fixed,
    Varying,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Flags override the config file, which overrides the built-in defaults.
#[derive(Args, Debug)]
struct RunArgs {
    /// Registered system name [default: henon; see list-systems]
    #[arg(long)]
    system: Option<String>,
    /// Master seed of every random stream [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Number of reference points [default: 200]
    #[arg(long)]
    refs: Option<usize>,
    /// Orbit length per reference, maps [default: 1000000]
    #[arg(long)]
    iters: Option<u64>,
    /// Integration time per reference, flows [default: 100000]
    #[arg(long)]
    time: Option<f64>,
    /// Integration and sampling step of flow zooms [default: 0.01]
    #[arg(long)]
    dt: Option<f64>,
    /// Series length of the extremal-index sweep over dt [default: 1000]
    #[arg(long = "t-len")]
    t_len: Option<f64>,
    /// Recurrences kept in the buffer [default: 5000]
    #[arg(long)]
    k: Option<usize>,
    /// Fixed threshold quantile [default: 0.99]
    #[arg(long)]
    q: Option<f64>,
    /// Quantile policy of the sweep [default: both]
    #[arg(long = "q-mode", value_enum)]
    q_mode: Option<QMode>,
    /// Ratio scale b of mu(B_br)/mu(B_r) [default: 0.5]
    #[arg(long)]
    b: Option<f64>,
    /// JSON file with ExperimentConfig fields [default: none]
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: runs/<experiment>-<config hash>]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(experiment: Experiment, a: &RunArgs) -> Result<ExperimentConfig> {
    let mut c = match &a.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    c.experiment = experiment;
    if let Some(v) = &a.system {
        c.system = v.clone();
    }
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = a.$flag { c.$field = v; })*
        };
    }
    set!(seed => seed, refs => n_refs, iters => iters, time => total_time, dt => dt,
         t_len => t_len, k => k, q => q, b => b);
    if let Some(m) = a.q_mode {
        c.q_modes = vec![match m {
            QMode::Fixed => QuantileMode::Fixed,
            QMode::Varying => QuantileMode::Varying,
        }];
    }
    if let Some(f) = a.format {
        c.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if a.out.is_some() {
        c.out = a.out.clone();
    }
    if a.threads.is_some() {
        c.threads = a.threads;
    }
    c.validate()?;
    Ok(c)
}

fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let out_dir = cfg.out.clone().unwrap_or_else(|| {
        let name = serde_json::to_value(cfg.experiment)
            .ok()
            .and_then(|v| v.as_str().map(String::from));
        PathBuf::from("runs").join(format!(
            "{}-{}",
            name.unwrap_or_default(),
            &cfg.hash()[..12]
        ))
    });
    eprintln!("running {:?} on {} ...", cfg.experiment, cfg.system);
    let out = experiments::run(cfg)?;
    let manifest = experiments::write_run(&out_dir, cfg, &out, started)
        .with_context(|| format!("writing {}", out_dir.display()))?;
    for (k, v) in &manifest.summary {
        eprintln!("  {k} = {v}");
    }
    for n in &manifest.notes {
        eprintln!("  note: {n}");
    }
    eprintln!(
        "wrote {} file(s) to {} in {:.1} s",
        manifest.outputs.len() + 1,
        out_dir.display(),
        clock.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (experiment, args) = match cli.command {
        Command::ListSystems => {
            for s in SystemSpec::registry() {
                let params: Vec<String> =
                    s.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let kind = serde_json::to_value(s.kind)
                    .map(|v| v.as_str().unwrap_or("").to_string())
                    .unwrap_or_default();
                println!("{}\t{}\tdim={}\t{}", s.name, kind, s.dim, params.join(" "));
            }
            return ExitCode::SUCCESS;
        }
        Command::Zoom(a) => (Experiment::Zoom, a),
        Command::Ensemble(a) => (Experiment::Ensemble, a),
        Command::EiSweep(a) => (Experiment::EiSweep, a),
        Command::IidDemo(a) => (Experiment::IidDemo, a),
        Command::SolenoidMeasure(a) => (Experiment::SolenoidMeasure, a),
        Command::CantorOracle(a) => (Experiment::CantorOracle, a),
    };
    let cfg = match resolve(experiment, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match serde_json::to_string_pretty(&cfg) {
        Ok(s) => eprintln!("resolved config:\n{s}"),
        Err(e) => eprintln!("resolved config unavailable: {e}"),
    }
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
