//! `rkhs-transform`: batch driver for kernel, projection and Brownian-motion
//! experiments. Exit status is 0 when every check passes, 1 when a check
//! fails and 2 on a configuration or I/O error.

mod commands;
mod report;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::report::{emit_report, num, GateKind};
use crate::settings::{ConfigError, Settings};

#[derive(Parser)]
#[command(name = "rkhs-transform", version, about = "Reproducing-kernel transform experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Kernel token: ou, brownian, szego or gauss:tau=<value>.
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// Measure, e.g. "atoms: 0.1:2, 0.5:-1; density: [0,1]:n=1000:one".
    #[arg(long, global = true)]
    measure: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths or samples.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Time grid a:b:n (n points from a to b).
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Output directory for CSV files and summary.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gate override NAME=VALUE; may be repeated.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Record a timestamp in the output headers.
    #[arg(long, global = true)]
    stamp: bool,
    /// Flat key = value settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Number of parallel path blocks (0 = automatic). Does not change results.
    #[arg(long, global = true)]
    shards: Option<usize>,
    /// Use antithetic path pairs.
    #[arg(long, global = true)]
    antithetic: bool,
    /// Also write the simulated path ensemble to this file.
    #[arg(long = "save-paths", global = true)]
    save_paths: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Effectiveness of a random projection sequence.
    Effective {
        #[arg(long)]
        dim: Option<usize>,
        /// Comma-separated ranks of the generating projections.
        #[arg(long)]
        ranks: Option<String>,
        /// finite or cyclic.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Fail unless effectiveness equals this value.
        #[arg(long)]
        expect: Option<bool>,
    },
    /// Transform of a measure into the kernel's Hilbert space.
    TransformTk,
    /// Set-intersection kernel, its isometry and the set-indexed Wiener field.
    SetKernel {
        /// Points with weights, e.g. "a:1,b:0.5".
        #[arg(long)]
        weights: Option<String>,
        /// Sets separated by ';', labels by ',', e.g. "a,b;b,c".
        #[arg(long)]
        sets: Option<String>,
    },
    /// Brownian moments and covariances against closed forms.
    BrownianMoments,
    /// Monte Carlo Fourier transform of a path functional.
    InfFourier {
        /// Time parameter of the functional.
        #[arg(long)]
        s: Option<f64>,
        /// Comma-separated evaluation times.
        #[arg(long)]
        t: Option<String>,
        /// exp, one or monomial:N.
        #[arg(long)]
        functional: Option<String>,
    },
    /// Every suite with default settings.
    AllOracles,
}

fn push<T: ToString>(flags: &mut Vec<(String, String)>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        flags.push((key.to_string(), v.to_string()));
    }
}

fn settings_from(cli: &Cli) -> Result<(Settings, &'static str), ConfigError> {
    let c = &cli.common;
    let mut flags = Vec::new();
    push(&mut flags, "kernel", c.kernel.as_ref());
    push(&mut flags, "measure", c.measure.as_ref());
    push(&mut flags, "seed", c.seed);
    push(&mut flags, "paths", c.paths);
    push(&mut flags, "grid", c.grid.as_ref());
    push(&mut flags, "out", c.out.as_ref().map(|p| p.display()));
    push(&mut flags, "shards", c.shards);
    push(&mut flags, "save-paths", c.save_paths.as_ref().map(|p| p.display()));
    if c.stamp {
        flags.push(("stamp".into(), "true".into()));
    }
    if c.antithetic {
        flags.push(("antithetic".into(), "true".into()));
    }
    let name = match &cli.command {
        Command::Effective { dim, ranks, schedule, trials, horizon, expect } => {
            push(&mut flags, "dim", *dim);
            push(&mut flags, "ranks", ranks.as_ref());
            push(&mut flags, "schedule", schedule.as_ref());
            push(&mut flags, "trials", *trials);
            push(&mut flags, "horizon", *horizon);
            push(&mut flags, "expect", *expect);
            "effective"
        }
        Command::TransformTk => "transform-tk",
        Command::SetKernel { weights, sets } => {
            push(&mut flags, "weights", weights.as_ref());
            push(&mut flags, "sets", sets.as_ref());
            "set-kernel"
        }
        Command::BrownianMoments => "brownian-moments",
        Command::InfFourier { s, t, functional } => {
            push(&mut flags, "s", *s);
            push(&mut flags, "t", t.as_ref());
            push(&mut flags, "functional", functional.as_ref());
            "inf-fourier"
        }
        Command::AllOracles => "all-oracles",
    };
    Ok((Settings::build(c.config.as_deref(), &flags, &c.tol)?, name))
}

fn run(cli: &Cli) -> Result<bool, ConfigError> {
    let (settings, name) = settings_from(cli)?;
    let report = match name {
        "effective" => commands::effective(&settings)?,
        "transform-tk" => commands::transform_tk(&settings)?,
        "set-kernel" => commands::set_kernel(&settings)?,
        "brownian-moments" => commands::brownian_moments(&settings)?,
        "inf-fourier" => commands::inf_fourier(&settings)?,
        _ => commands::all_oracles(&settings)?,
    };
    let unused = settings.unused_tolerances();
    if !unused.is_empty() {
        return Err(ConfigError::Invalid(format!("unknown tolerance name(s): {}", unused.join(", "))));
    }
    let stamp = settings.flag("stamp")?.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let out = PathBuf::from(settings.raw("out").unwrap_or("out"));
    emit_report(&report, &settings.recorded(), stamp, &out)
        .map_err(|e| ConfigError::Invalid(format!("writing {}: {e}", out.display())))?;

    for note in &report.notes {
        println!("{note}");
    }
    for c in &report.checks {
        let unit = if c.kind == GateKind::Sigmas { " sigma" } else { "" };
        println!(
            "[{}] {}: deviation {}{unit} (gate {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            num(c.deviation),
            num(c.gate)
        );
    }
    println!("pass: {}", report.pass());
    Ok(report.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
