use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use cutpoint::frontend::{
    accept_prob_json, cmd_accept_prob, cmd_closure, cmd_decide, cmd_enumerate, cmd_validate, load_grammar, load_qfa,
    parse_mode, render_decision, FrontendError, RunConfig, EXIT_ERROR,
};
use serde_json::json;

/// Emptiness of a grammar's language inside a quantum automaton's cut-point language.
#[derive(Parser)]
#[command(name = "cutpoint", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check automaton and grammar files.
    Validate {
        paths: Vec<PathBuf>,
        /// Write JSON diagnostics here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact acceptance probability of one word.
    AcceptProb {
        #[arg(long)]
        qfa: PathBuf,
        /// Letters, space separated when they are longer than one character; `ε` for the empty word.
        word: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Words of the grammar up to a length, in shortlex order.
    Enumerate {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// The semialgebraic description of the closure of φ(L).
    Closure {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Decide whether L meets the strict cut-point language.
    Decide {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        /// symbolic, brute or both.
        #[arg(long, default_value = "both")]
        mode: String,
        /// Brute-force length bound.
        #[arg(long, default_value_t = 16)]
        max_len: usize,
        /// Solver command; the query file is passed as the last argument. Defaults to $CUTPOINT_SMT_CMD.
        #[arg(long)]
        smt_cmd: Option<String>,
        /// Solver timeout in seconds.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    qfa: PathBuf,
    #[arg(long)]
    grammar: PathBuf,
}

#[derive(Args)]
struct Tuning {
    /// Degree cap for group closures.
    #[arg(long, default_value_t = 4)]
    max_degree: u32,
    /// Step cap for product chains.
    #[arg(long)]
    chain_cap: Option<usize>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

fn emit_json(out: &Path, value: &serde_json::Value) -> Result<(), FrontendError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    if out == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(out, text).map_err(|e| FrontendError::Input { path: out.display().to_string(), message: e.to_string() })
    }
}

fn run_config(t: &Tuning) -> RunConfig {
    RunConfig { max_degree: t.max_degree, chain_cap: t.chain_cap, json_out: t.json.clone(), ..RunConfig::default() }
}

fn run(cli: Cli) -> Result<i32, FrontendError> {
    match cli.command {
        Cmd::Validate { paths, json } => {
            let diags = cmd_validate(&paths);
            let ok = diags.iter().all(|d| d.ok);
            match &json {
                Some(out) => emit_json(out, &serde_json::to_value(&diags).expect("serializable"))?,
                None => {
                    for d in &diags {
                        if d.ok {
                            println!("{}: ok ({})", d.path, d.kind);
                        } else {
                            for m in &d.messages {
                                eprintln!("{}: {m}", d.path);
                            }
                        }
                    }
                }
            }
            Ok(if ok { 0 } else { EXIT_ERROR })
        }
        Cmd::AcceptProb { qfa, word, json } => {
            let q = load_qfa(&qfa)?;
            let p = cmd_accept_prob(&q, &word)?;
            match &json {
                Some(out) => emit_json(out, &accept_prob_json(&word, &p))?,
                None => println!("{p}"),
            }
            Ok(0)
        }
        Cmd::Enumerate { grammar, max_len, json: out } => {
            let g = load_grammar(&grammar)?;
            let words = cmd_enumerate(&g, max_len)?;
            match &out {
                Some(out) => emit_json(out, &json!({ "max_len": max_len, "words": words }))?,
                None => {
                    for w in &words {
                        println!("{}", if w.is_empty() { "ε" } else { w });
                    }
                }
            }
            Ok(0)
        }
        Cmd::Closure { inputs, tuning } => {
            let q = load_qfa(&inputs.qfa)?;
            let g = load_grammar(&inputs.grammar)?;
            let cfg = run_config(&tuning);
            let report = cmd_closure(&q, &g, &cfg)?;
            match &cfg.json_out {
                Some(out) => emit_json(out, &report)?,
                None => {
                    println!("certified: {}", report["certified"]);
                    for w in report["warnings"].as_array().into_iter().flatten() {
                        println!("warning: {}", w.as_str().unwrap_or_default());
                    }
                    println!("formula size: {}", report["formula"]["size"]);
                }
            }
            Ok(0)
        }
        Cmd::Decide { inputs, tuning, mode, max_len, smt_cmd, timeout } => {
            let q = load_qfa(&inputs.qfa)?;
            let g = load_grammar(&inputs.grammar)?;
            let mut cfg = run_config(&tuning);
            cfg.mode = parse_mode(&mode)?;
            cfg.max_len = max_len;
            if smt_cmd.is_some() {
                cfg.smt_cmd = smt_cmd;
            }
            cfg.timeout = Duration::from_secs(timeout);
            let report = cmd_decide(&q, &g, &cfg)?;
            match &cfg.json_out {
                Some(out) if out == Path::new("-") => {}
                _ => print!("{}", render_decision(&report)),
            }
            if let Some(out) = &cfg.json_out {
                emit_json(out, &serde_json::to_value(&report).expect("serializable"))?;
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
