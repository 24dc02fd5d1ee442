use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, ValueEnum};

use emharvest::cli::{self, Command, RunOptions};
use emharvest::config::{self, SweepDirections};
use emharvest::Execution;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Up,
    Down,
    Both,
}

/// Simulation, optimization and fitting for inertial electromagnetic
/// vibration harvesters.
#[derive(Debug, Parser)]
#[command(name = "emharvest", version)]
struct Args {
    /// One of: coil, freq-response, sweep, optimal-load, fit, scaling,
    /// project-thickness, reproduce-paper
    command: String,
    /// Flat `key = value` configuration file
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the multi-start fitter
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run everything on one thread
    #[arg(long)]
    sequential: bool,
    /// Sweep direction (overrides sweep_direction_mode)
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Start frequency in Hz (overrides f_start_hz)
    #[arg(long)]
    f_start: Option<f64>,
    /// End frequency in Hz (overrides f_end_hz)
    #[arg(long)]
    f_end: Option<f64>,
    /// Sweep rate in Hz/s (overrides sweep_rate_hz_per_s)
    #[arg(long)]
    rate: Option<f64>,
    /// Base displacement amplitude in m (overrides y0_m)
    #[arg(long)]
    y0: Option<f64>,
    /// Load resistance in ohm (overrides r_load_ohm)
    #[arg(long)]
    r_load: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let command: Command = match args.command.parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}\n");
            eprintln!("{}", Args::command().render_help());
            return ExitCode::from(2);
        }
    };

    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration errors:\n{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(d) = args.direction {
        cfg.sweep_directions = match d {
            DirectionArg::Up => SweepDirections::Up,
            DirectionArg::Down => SweepDirections::Down,
            DirectionArg::Both => SweepDirections::Both,
        };
    }
    if let Some(v) = args.f_start {
        cfg.f_start_hz = v;
    }
    if let Some(v) = args.f_end {
        cfg.f_end_hz = v;
    }
    if let Some(v) = args.rate {
        cfg.sweep_rate = v;
    }
    if let Some(v) = args.y0 {
        cfg.y0 = v;
    }
    if let Some(v) = args.r_load {
        cfg.set_r_load(v);
    }

    let out_dir = match (&cfg.output, args.out.as_os_str() == "out") {
        (Some(p), true) => PathBuf::from(p),
        _ => args.out.clone(),
    };
    let opts = RunOptions {
        out_dir,
        seed: args.seed,
        exec: if args.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    match cli::run_command(command, &cfg, &opts) {
        Ok(output) => {
            print!("{}", output.summary);
            for f in &output.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
