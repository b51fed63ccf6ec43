use std::fs::File;
use std::io::{BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use hymon::gfa::{gfa_to_dot, product_to_dot};
use hymon::model::{compile, load_model, read_trace, replay, Bounds, CompiledModel, HybridProcessModel};
use hymon::monitor::MonitorSession;

/// Monitor hybrid process specifications made of data Petri nets and
/// data-aware LTLf constraints.
#[derive(Parser)]
#[command(name = "hymon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model loads and that its nets are well-formed and safe.
    Validate { model: PathBuf },
    /// Compile a model and print automaton sizes.
    Compile {
        model: PathBuf,
        /// Write one graph file per automaton into this directory.
        #[arg(long)]
        emit_graph: Option<PathBuf>,
    },
    /// Replay a trace; the exit code is 0 for PS, 1 for PV, 2 otherwise.
    Replay {
        model: PathBuf,
        trace: PathBuf,
        /// Write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print every snapshot as one JSON line.
        #[arg(long)]
        verbose: bool,
    },
    /// Print the recommendation after the first `at` events of a trace.
    Explain {
        model: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        at: usize,
    },
    /// Serve models over HTTP.
    Serve {
        /// Model files to serve, in addition to `--models-dir`.
        models: Vec<PathBuf>,
        #[arg(long)]
        models_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn compiled(path: &Path) -> Result<CompiledModel, Failure> {
    let model = load_model(path)?;
    Ok(compile(&model, Bounds::default())?)
}

fn trace(path: &Path, model: &HybridProcessModel) -> Result<Vec<hymon::condition::Event>, Failure> {
    let file = File::open(path).map_err(|e| format!("cannot open `{}`: {e}", path.display()))?;
    Ok(read_trace(BufReader::new(file), model)?)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { model } => {
            let m = load_model(&model)?;
            for d in &m.dpns {
                d.validate(&m.signatures)?;
            }
            println!(
                "ok: {} nets, {} constraints",
                m.dpns.len(),
                m.constraints.len()
            );
            Ok(0)
        }
        Command::Compile { model, emit_graph } => {
            let c = compiled(&model)?;
            for k in &c.components {
                println!(
                    "{}: {} states, {} after minimization",
                    k.id,
                    k.automaton.state_count(),
                    k.minimal.state_count()
                );
            }
            let p = c.monitor.product();
            println!(
                "product: {} states over {} letters, initial verdict {}",
                p.state_count(),
                c.domain.letter_count(),
                p.global(p.initial())
            );
            if let Some(dir) = emit_graph {
                std::fs::create_dir_all(&dir)?;
                for k in &c.components {
                    std::fs::write(
                        dir.join(format!("{}.dot", k.id)),
                        gfa_to_dot(&k.id, &k.automaton, None),
                    )?;
                    std::fs::write(
                        dir.join(format!("{}.min.dot", k.id)),
                        gfa_to_dot(&k.id, &k.minimal, Some(&k.verdicts)),
                    )?;
                }
                let costs = c.monitor.costs();
                std::fs::write(
                    dir.join("product.dot"),
                    product_to_dot("product", p, Some((&costs.cur, &costs.best))),
                )?;
            }
            Ok(0)
        }
        Command::Replay {
            model,
            trace: path,
            report,
            verbose,
        } => {
            let c = compiled(&model)?;
            let events = trace(&path, &c.model)?;
            let r = replay(&c, &events)?;
            if verbose {
                let mut out = std::io::stdout().lock();
                for s in &r.snapshots {
                    writeln!(out, "{}", serde_json::to_string(s)?)?;
                }
            }
            if let Some(out) = report {
                std::fs::write(&out, serde_json::to_string_pretty(&r)? + "\n")?;
            }
            let conflict = r
                .first_conflict
                .map(|i| format!("conflict at step {i}"))
                .unwrap_or_else(|| "no conflict".into());
            eprintln!(
                "final {}; {conflict}; violation cost {}",
                r.final_verdicts.global, r.total_cost
            );
            Ok(r.exit_code() as u8)
        }
        Command::Explain {
            model,
            trace: path,
            at,
        } => {
            let c = compiled(&model)?;
            let events = trace(&path, &c.model)?;
            if at > events.len() {
                return Err(format!("trace has only {} events", events.len()).into());
            }
            let mut session = MonitorSession::new(c.monitor.clone());
            for e in &events[..at] {
                session.step(e.clone())?;
            }
            let body = serde_json::json!({
                "snapshot": session.current(),
                "recommendation": session.recommend(),
            });
            println!("{}", serde_json::to_string_pretty(&body)?);
            Ok(0)
        }
        Command::Serve {
            models,
            models_dir,
            port,
            host,
        } => {
            let ttl = hymon_service::ttl_from_env()?;
            let mut loaded = Vec::new();
            if let Some(dir) = &models_dir {
                loaded.extend(hymon_service::load_models_dir(dir)?);
            }
            for m in &models {
                loaded.push(hymon_service::load_model_file(m)?);
            }
            if loaded.is_empty() {
                return Err("no models to serve".into());
            }
            let state = Arc::new(hymon_service::AppState::new(loaded, ttl));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(hymon_service::serve(state, SocketAddr::new(host, port)))?;
            Ok(0)
        }
    }
}
