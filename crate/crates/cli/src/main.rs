//! `qite`: decompositions, imaginary-time runs and L-DBM scripts from the
//! command line.

mod script;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use qite_core::circuit::{build_qite_circuit, AncillaPolicy, CircuitOptions, Route};
use qite_core::experiment::{csv_header, evolve_with, summarize, Mode, RunConfig};
use qite_core::rbm::{decompose_pauli_term, reconstruction_error};
use qite_core::sim::InitialState;
use qite_core::{parse_hamiltonian, HamiltonianTerm};
use serde_json::json;

#[derive(Parser)]
#[command(name = "qite", version, about = "Imaginary-time evolution with Boltzmann-machine block encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hidden-unit decomposition of exp(-K P) for one Pauli word.
    Decompose {
        /// Pauli word such as ZZ or XIY.
        word: String,
        #[arg(allow_hyphen_values = true)]
        k: f64,
        /// Compare against the dense exponential.
        #[arg(long)]
        verify: bool,
    },
    /// Run the circuit at a list of imaginary times and print CSV rows.
    Evolve(EvolveArgs),
    /// Three-site critical transverse-field Ising ring from |+++>.
    IsingDemo(DemoArgs),
    /// Execute an L-DBM op script and print the resulting state.
    Ldbm {
        script: PathBuf,
        /// Start from |0...0> on N qubits instead of a `qubits` line.
        #[arg(long)]
        qubits: Option<usize>,
    },
}

#[derive(Args)]
struct EvolveArgs {
    /// Hamiltonian file, one `coefficient WORD` per line.
    #[arg(long)]
    hamiltonian: PathBuf,
    /// Comma-separated imaginary-time checkpoints.
    #[arg(long, value_delimiter = ',', required = true)]
    tau: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    dtau: f64,
    #[arg(long, default_value_t = 2)]
    order: u8,
    #[arg(long, default_value = "rbm")]
    route: String,
    /// `single` or `pooled:N`.
    #[arg(long, default_value = "single")]
    ancilla: String,
    #[arg(long, default_value_t = 100_000)]
    shots: usize,
    #[arg(long, default_value_t = 100)]
    batches: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// `plus`, a bitstring, or a JSON amplitude array.
    #[arg(long, default_value = "plus")]
    init: String,
    #[arg(long, default_value = "exact")]
    mode: String,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the circuit of the last checkpoint as JSON lines.
    #[arg(long)]
    circuit: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// 10^6 shots instead of 10^5.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure class deciding the exit code.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn config(self) -> std::result::Result<T, Failure>;
    fn runtime(self) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn config(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn runtime(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Decompose { word, k, verify } => cmd_decompose(&word, k, verify),
        Command::Evolve(a) => cmd_evolve(a),
        Command::IsingDemo(a) => cmd_ising_demo(a),
        Command::Ldbm { script, qubits } => cmd_ldbm(&script, qubits),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn print_json(v: &serde_json::Value) -> Outcome {
    let text = serde_json::to_string_pretty(v).runtime()?;
    println!("{text}");
    Ok(())
}

fn cmd_decompose(word: &str, k: f64, verify: bool) -> Outcome {
    if !k.is_finite() {
        return Err(Failure::Config(anyhow!("K must be finite")));
    }
    let term = HamiltonianTerm::parse(k, word).config()?;
    let dec = decompose_pauli_term(&term).runtime()?;
    let per_unit: Vec<f64> = dec.hidden_units.iter().map(|u| u.average_success()).collect();
    let mut out = json!({
        "word": word,
        "K": k,
        "decomposition": dec,
        "average_success": per_unit,
        "average_success_total": per_unit.iter().product::<f64>(),
    });
    if verify {
        out["verify_error"] = json!(reconstruction_error(&term, &dec).runtime()?);
    }
    print_json(&out)
}

fn build_config(a: &EvolveArgs) -> Result<RunConfig> {
    let text = fs::read_to_string(&a.hamiltonian).with_context(|| format!("reading {}", a.hamiltonian.display()))?;
    let cfg = RunConfig {
        hamiltonian: parse_hamiltonian(&text).with_context(|| format!("parsing {}", a.hamiltonian.display()))?,
        taus: a.tau.clone(),
        dtau: a.dtau,
        circuit: CircuitOptions {
            route: a.route.parse::<Route>()?,
            ancilla: a.ancilla.parse::<AncillaPolicy>()?,
            order: a.order,
        },
        shots: a.shots,
        batches: a.batches,
        seed: a.seed,
        init: InitialState::parse(&a.init)?,
        mode: a.mode.parse::<Mode>()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Streams rows to `w`, flushing after each one.
fn write_csv(cfg: &RunConfig, w: &mut dyn Write) -> Result<Vec<qite_core::experiment::Row>> {
    writeln!(w, "{}", csv_header(cfg.mode))?;
    w.flush()?;
    let rows = evolve_with(cfg, |row| {
        writeln!(w, "{}", row.to_csv()).and_then(|_| w.flush()).map_err(|e| qite_core::Error::InvalidArgument(e.to_string()))
    })?;
    Ok(rows)
}

fn cmd_evolve(a: EvolveArgs) -> Outcome {
    let cfg = build_config(&a).config()?;
    let mut w = open_out(a.out.as_deref()).config()?;
    write_csv(&cfg, &mut *w).runtime()?;
    if let Some(path) = &a.circuit {
        let last = *cfg.taus.last().expect("validated non-empty");
        let c = build_qite_circuit(&cfg.hamiltonian, last, cfg.dtau, &cfg.circuit).runtime()?;
        fs::write(path, c.to_json_lines()).with_context(|| format!("writing {}", path.display())).runtime()?;
        info!("circuit summary: {}", serde_json::to_string(&c.summary()).runtime()?);
    }
    Ok(())
}

fn cmd_ising_demo(a: DemoArgs) -> Outcome {
    let mut cfg = RunConfig::ising_demo(a.paper_scale);
    if let Some(s) = a.shots {
        cfg.shots = s;
    }
    if let Some(b) = a.batches {
        cfg.batches = b;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = &a.mode {
        cfg.mode = m.parse().config()?;
    }
    cfg.validate().config()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).config()?;
    let csv = a.out.join("ising_demo.csv");
    let mut w = open_out(Some(&csv)).config()?;
    let rows = write_csv(&cfg, &mut *w).runtime()?;
    let summary = summarize(&cfg, &rows).runtime()?;
    let path = a.out.join("ising_demo_summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary).runtime()?).runtime()?;
    print_json(&serde_json::to_value(&summary).runtime()?)
}

fn cmd_ldbm(path: &Path, qubits: Option<usize>) -> Outcome {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).config()?;
    let ops = script::parse_script(&text).config()?;
    let run = script::run_script(&ops, qubits.map(script::zero_state)).runtime()?;
    print_json(&script::report(&run).runtime()?)
}
