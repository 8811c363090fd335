//! Thin command-line front end: run memory-operation scripts, check the
//! separation-algebra laws, and run the property suites. All logic lives in
//! the library; see the crate examples for API-level walkthroughs.

use clap::{Parser, Subcommand};
use memctl::implenv::ImplConfig;
use memctl::script::{parse_script, run_script};
use memctl::suites;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "memctl", about = "Executable C11 memory model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and execute a memory-operation script.
    Run {
        /// Script file.
        script: PathBuf,
        /// Implementation configuration file (key = value lines).
        #[arg(long = "impl")]
        impl_cfg: Option<PathBuf>,
        /// Write the final memory dump as JSON to this path.
        #[arg(long)]
        dump_json: Option<PathBuf>,
    },
    /// Check the separation-algebra laws over the built-in carriers.
    Laws {
        /// Restrict to one instance: bool, frac, counting, lockable,
        /// tagged, sum, or perm.
        #[arg(long)]
        instance: Option<String>,
    },
    /// Run a property suite: sepalg, perm, tree, mem, refine, or aliasing.
    Suite {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { script, impl_cfg, dump_json } => {
            let text = match std::fs::read_to_string(&script) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", script.display());
                    return ExitCode::FAILURE;
                }
            };
            let cfg = match impl_cfg {
                None => ImplConfig::test_default(),
                Some(path) => {
                    let raw = match std::fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => {
                            eprintln!("cannot read {}: {e}", path.display());
                            return ExitCode::FAILURE;
                        }
                    };
                    match ImplConfig::parse(&raw) {
                        Ok(c) => c,
                        Err(e) => {
                            eprintln!("{}: {e}", path.display());
                            return ExitCode::FAILURE;
                        }
                    }
                }
            };
            let parsed = match parse_script(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", script.display());
                    return ExitCode::FAILURE;
                }
            };
            let report = run_script(&parsed, cfg);
            print!("{}", report.render());
            for (name, dump) in &report.dumps {
                if name != "<report>" {
                    if let Err(e) = std::fs::write(name, dump) {
                        eprintln!("cannot write {name}: {e}");
                        return ExitCode::FAILURE;
                    }
                } else {
                    println!("{dump}");
                }
            }
            if let Some(path) = dump_json {
                if let Err(e) = std::fs::write(&path, &report.final_dump) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Laws { instance } => {
            let reports = suites::law_reports(instance.as_deref());
            if reports.is_empty() {
                eprintln!("unknown instance; try bool, frac, counting, lockable, tagged, sum, perm");
                return ExitCode::FAILURE;
            }
            let mut ok = true;
            for rep in reports {
                for line in rep.lines() {
                    println!("{line}");
                }
                ok &= rep.passed();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Suite { name, seed, cases } => match suites::run_suite(&name, seed, cases) {
            None => {
                eprintln!("unknown suite `{name}`; try sepalg, perm, tree, mem, refine, aliasing");
                ExitCode::FAILURE
            }
            Some(report) => {
                print!("{}", report.render());
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
        },
    }
}
