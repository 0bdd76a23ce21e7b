use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rtsnoc::scenario::{Overrides, Scenario, BUILTINS};

/// Flit-interleaving NoC simulator and worst-case latency calculator.
#[derive(Debug, Parser)]
#[command(name = "rtsnoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a builtin scenario or a scenario file and write CSV results.
    Run {
        /// Builtin name (see `list-scenarios`) or path to a TOML file.
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
        /// Directory for the CSV files.
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Check a scenario without running it.
    Validate {
        scenario: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List builtin scenarios.
    ListScenarios,
}

#[derive(Debug, clap::Args)]
struct RunOpts {
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated cycles.
    #[arg(long)]
    duration: Option<u64>,
    /// Clock period used for the nanosecond column.
    #[arg(long)]
    clock_ns: Option<f64>,
}

impl RunOpts {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            duration: self.duration,
            clock_ns: self.clock_ns,
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_INVARIANT: u8 = 2;

fn load(name: &str, opts: &RunOpts) -> Result<Scenario, ExitCode> {
    let mut s = Scenario::resolve(name).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    s.apply(opts.overrides()).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    Ok(s)
}

fn run(name: &str, opts: &RunOpts, dir: &PathBuf) -> Result<(), ExitCode> {
    let s = load(name, opts)?;
    let report = s.run().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    fs::create_dir_all(dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", dir.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    for mode in ["analytic", "simulate"] {
        if report.rows.iter().all(|r| r.mode != mode) {
            continue;
        }
        let path = dir.join(format!("{}_{mode}.csv", report.name));
        fs::write(&path, report.csv(mode)).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(EXIT_CONFIG)
        })?;
        println!("wrote {}", path.display());
    }
    for line in &report.summary {
        println!("{line}");
    }
    if report.packets > 0 {
        println!("{} packets delivered", report.packets);
    }
    if report.violations.is_empty() {
        if report.packets > 0 {
            println!("latency bound and delivery order: pass");
        }
        Ok(())
    } else {
        println!(
            "latency bound and delivery order: FAIL ({} violations)",
            report.violations.len()
        );
        for v in report.violations.iter().take(20) {
            println!("  {v}");
        }
        if report.violations.len() > 20 {
            println!("  ... {} more", report.violations.len() - 20);
        }
        Err(ExitCode::from(EXIT_INVARIANT))
    }
}

fn validate(name: &str, opts: &RunOpts) -> Result<(), ExitCode> {
    let s = load(name, opts)?;
    let v = s.validate().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    println!("{}: ok ({} flows)", s.name(), s.flows().len());
    if let Some(p) = v.probe {
        let n: Vec<String> = p.n.iter().map(u32::to_string).collect();
        println!(
            "probe {}: N=[{}], k={}, H_path={}, wcl={}",
            p.id,
            n.join(","),
            p.k,
            p.h_path,
            p.wcl
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run {
            scenario,
            opts,
            output_dir,
        } => run(scenario, opts, output_dir),
        Command::Validate { scenario, opts } => validate(scenario, opts),
        Command::ListScenarios => {
            for (name, _) in BUILTINS {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
