use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msqed_cli::config::{self, ExperimentKind};
use msqed_cli::records;
use msqed_cli::run::{self, RunError};
use msqed_cli::suites;

#[derive(Parser)]
#[command(name = "msqed", version, about = "Quasi-classical ground states of non-relativistic QED on a spectral grid")]
struct Cli {
    /// Worker threads for ladder runs; falls back to MSQED_WORKERS, then to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one experiment and writes run.json, tables/ and plotdata/.
    Run {
        /// Overrides experiment.kind.
        #[arg(value_enum)]
        kind: Option<Kind>,
        /// TOML configuration; the built-in default when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key.path=value` override, applied in order.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run even when the hypothesis report has violations.
        #[arg(long)]
        force: bool,
        /// Shorthand for `--set model.g=…`.
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        /// Shorthand for `--set model.potential=…` with default parameters.
        #[arg(long)]
        potential: Option<String>,
        /// Shorthand for `--set model.cutoff=…` with default parameters.
        #[arg(long)]
        cutoff: Option<String>,
        /// Comma-separated ladder, shorthand for `--set experiment.ladder=[…]`.
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<f64>>,
    },
    /// Runs acceptance suites and prints one PASS/FAIL line per criterion.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(suites::SUITES))]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes verify.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the built-in default configuration.
    DefaultConfig,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Kind {
    Minimize,
    UvSweep,
    GSweep,
    FockCheck,
    LorentzReport,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Minimize => Self::Minimize,
            Kind::UvSweep => Self::UvSweep,
            Kind::GSweep => Self::GSweep,
            Kind::FockCheck => Self::FockCheck,
            Kind::LorentzReport => Self::LorentzReport,
        }
    }
}

fn configure_workers(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("MSQED_WORKERS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("MSQED_WORKERS={v} is not a count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("worker count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers(cli.workers) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::DefaultConfig => {
            print!("{}", config::DEFAULT_CONFIG);
            ExitCode::SUCCESS
        }
        Command::Verify { suite, seed, out } => verify(&suite, seed, out),
        Command::Run { kind, config, set, seed, out, force, g, potential, cutoff, ladder } => {
            let mut overrides = Vec::new();
            if let Some(k) = kind {
                overrides.push(format!("experiment.kind=\"{}\"", ExperimentKind::from(k).name()));
            }
            if let Some(g) = g {
                overrides.push(format!("model.g={g:?}"));
            }
            if let Some(p) = potential {
                overrides.push(format!("model.potential={p}"));
            }
            if let Some(c) = cutoff {
                overrides.push(format!("model.cutoff={c}"));
            }
            if let Some(l) = ladder {
                let items: Vec<String> = l.iter().map(|x| format!("{x:?}")).collect();
                overrides.push(format!("experiment.ladder=[{}]", items.join(", ")));
            }
            overrides.extend(set);
            if let Some(s) = seed {
                overrides.push(format!("seed={s}"));
            }
            if let Some(o) = out {
                overrides.push(format!("out={}", toml::Value::String(o.to_string_lossy().into_owned())));
            }
            run_command(config, &overrides, force)
        }
    }
}

fn run_command(path: Option<PathBuf>, overrides: &[String], force: bool) -> ExitCode {
    let (src, label) = match &path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(s) => (s, p.display().to_string()),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => (config::DEFAULT_CONFIG.to_string(), "<default>".into()),
    };
    let cfg = match config::load(&src, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {label}: {e}");
            return ExitCode::from(2);
        }
    };
    match run::run(&cfg, force) {
        Ok(a) => {
            println!("{}: {}", cfg.experiment.kind.name(), a.summary);
            for f in &a.files {
                println!("wrote {}", a.dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                RunError::Config(c) => {
                    eprintln!("in {label}: {c}");
                    e.exit_code()
                }
                _ => e.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}

fn verify(suite: &str, seed: u64, out: Option<PathBuf>) -> ExitCode {
    let ids = suites::suite_criteria(suite).expect("suite names are validated by the parser");
    let mut reports = Vec::new();
    for id in ids {
        let r = suites::run_criterion(id, seed);
        print!("{}", suites::render(&r));
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.pass);
    if let Some(dir) = out {
        let doc = serde_json::json!({ "suite": suite, "seed": seed, "pass": all, "criteria": reports });
        let text = records::to_json_string(&doc).expect("report serializes");
        if let Err(e) = records::write_atomic(&dir.join("verify.json"), text.as_bytes()) {
            eprintln!("error: cannot write verify.json: {e}");
            return ExitCode::from(1);
        }
    }
    println!("{}: {}", suite, if all { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
