use clap::{Args, Parser, Subcommand};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use vpquad::acceptance;
use vpquad::config::{Config, ScenarioKind};
use vpquad::rigid_body::hover_thrust_coeff;
use vpquad::rotor::{cq_from_ct, dimensionalize, inflow_ratio, RotorCommand};
use vpquad::sim::Simulation;
use vpquad::telemetry::write_csv;

/// Variable-pitch quadrotor flight simulator.
#[derive(Debug, Parser)]
#[command(name = "vpquad", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write telemetry plus a summary.
    Run(RunArgs),
    /// Print the hover trim for the configured vehicle.
    Trim {
        /// Config file overriding the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every acceptance check and print the pass/fail table.
    Acceptance,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file (TOML); built-in defaults when omitted.
    config_file: Option<PathBuf>,
    /// Config file (alternative to the positional form).
    #[arg(long, value_name = "path")]
    config: Option<PathBuf>,
    /// Telemetry CSV path.
    #[arg(long, value_name = "path")]
    out: Option<PathBuf>,
    /// Log every n-th step.
    #[arg(long, value_name = "n")]
    decimation: Option<usize>,
    /// Integration step [s].
    #[arg(long, value_name = "s")]
    dt: Option<f64>,
    /// Run length [s].
    #[arg(long, value_name = "s")]
    duration: Option<f64>,
    /// Scenario name (hover, stabilization, tracking, flip, inverted_tracking).
    #[arg(long, value_name = "name")]
    scenario: Option<String>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Trim { config } => trim(config),
        Command::Acceptance => run_acceptance(),
    }
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load_config(path: Option<&PathBuf>) -> Result<Config, ExitCode> {
    let result = match path {
        Some(p) => Config::from_path(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(Config::default()),
    };
    result.map_err(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_USAGE)
    })
}

fn run(args: RunArgs) -> ExitCode {
    let path = args.config.as_ref().or(args.config_file.as_ref());
    let mut cfg = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };

    let mut flag_overrides = Vec::new();
    if let Some(name) = &args.scenario {
        match name.parse::<ScenarioKind>() {
            Ok(kind) => cfg.scenario.kind = kind,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
        flag_overrides.push(format!("--scenario {name}"));
    }
    if let Some(dt) = args.dt {
        cfg.scenario.dt = dt;
        flag_overrides.push(format!("--dt {dt}"));
    }
    if let Some(duration) = args.duration {
        cfg.scenario.duration = Some(duration);
        flag_overrides.push(format!("--duration {duration}"));
    }
    if let Some(n) = args.decimation {
        cfg.output.decimation = n;
        flag_overrides.push(format!("--decimation {n}"));
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.display().to_string());
        flag_overrides.push(format!("--out {}", out.display()));
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }

    if !cfg.overrides.is_empty() {
        println!("config overrides : {}", cfg.overrides.join(", "));
    }
    if !flag_overrides.is_empty() {
        println!("flag overrides   : {}", flag_overrides.join(", "));
    }

    let ctrl = match cfg.controller() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let scenario = cfg.build_scenario();
    println!(
        "scenario         : {} ({:.3} s at dt={} s)",
        scenario.name,
        cfg.duration(),
        cfg.scenario.dt
    );

    let sim = match Simulation::new(ctrl, scenario, cfg.sim_options()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let run = sim.run();

    if let Some(path) = &cfg.output.path {
        match std::fs::File::create(path) {
            Ok(file) => {
                let mut out = BufWriter::new(file);
                if let Err(e) = write_csv(&mut out, &run.frames).and_then(|_| out.flush()) {
                    eprintln!("error: {path}: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
                println!("telemetry        : {path} ({} frames)", run.frames.len());
            }
            Err(e) => {
                eprintln!("error: {path}: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        }
    }

    println!("{}", run.summary);
    if let Some(e) = run.error {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    ExitCode::SUCCESS
}

fn trim(config: Option<PathBuf>) -> ExitCode {
    let cfg = match load_config(config.as_ref()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let ct = hover_thrust_coeff(&cfg.vehicle, &cfg.rotor);
    let cmd = RotorCommand::from_ct(ct, &cfg.rotor);
    let cq = cq_from_ct(ct, &cfg.rotor);
    let (thrust, torque) = dimensionalize(ct, cq, &cfg.rotor);
    println!("hover trim (per rotor)");
    println!("  thrust coefficient : {ct:.8}");
    println!(
        "  collective pitch   : {:.6} rad ({:.4} deg)",
        cmd.collective,
        cmd.collective.to_degrees()
    );
    println!("  inflow ratio       : {:.6}", inflow_ratio(ct));
    println!("  thrust gain        : {:.4} N", cfg.rotor.thrust_gain());
    println!("  thrust             : {thrust:.6} N");
    println!("  torque             : {torque:.6} N m");
    ExitCode::SUCCESS
}

fn run_acceptance() -> ExitCode {
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", acceptance::render_line(r));
    }
    let (passed, total) = (results.iter().filter(|r| r.passed).count(), results.len());
    println!("{passed}/{total} criteria passed");
    if acceptance::all_passed(&results) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUNTIME)
    }
}
