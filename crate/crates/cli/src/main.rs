//! `qsu`: run, sample and compare fixed-point circuit simulations.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse or validation error,
//! 3 numerical failure (overflow or collapse), 4 unsharp readout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qsu::circuitio::{self, CircuitDocument};
use qsu::engine::{rrm_readout, Engine, EngineError, Mode, Prn, RandomSource};
use qsu::histogram::{format_state, TrialHistogram};
use qsu::oracle::{compare_distributions, ComparisonReport};
use qsu::qstate::QuantumStateRegister;
use qsu::sampling::{companion_seed, sample, Backend, SampleConfig};

#[derive(Parser)]
#[command(name = "qsu", version, about = "Fixed-point quantum circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trial and print measurement outcomes and the readout.
    Run {
        circuit: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Deferred)]
        mode: ModeArg,
        /// Comma-separated values in [0, 1) consumed before the seeded stream.
        #[arg(long, value_delimiter = ',')]
        force_prn: Vec<f64>,
        #[command(flatten)]
        show: RunOutput,
    },
    /// Run many independent trials and write readout histograms.
    Sample {
        circuit: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Engine)]
        backend: BackendArg,
        /// Output file; with `--backend both`, `.engine`/`.oracle` is inserted before the extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = HistFormat::Csv)]
        format: HistFormat,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Deferred)]
        mode: ModeArg,
    },
    /// Sample engine and oracle independently and report their agreement.
    Compare {
        /// Circuit to sample on both sides.
        #[arg(required_unless_present = "histograms")]
        circuit: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample this circuit on the oracle side instead (fault injection).
        #[arg(long, conflicts_with = "histograms")]
        against: Option<PathBuf>,
        /// Compare two saved CSV histograms instead of sampling.
        #[arg(long, num_args = 2, value_names = ["A", "B"], requires = "qubits")]
        histograms: Option<Vec<PathBuf>>,
        /// Register size of the saved histograms.
        #[arg(long)]
        qubits: Option<usize>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generate a random verification circuit.
    Random {
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = 3)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Deferred,
    Literal,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Deferred => Mode::Deferred,
            ModeArg::Literal => Mode::Literal,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BackendArg {
    Engine,
    Oracle,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum HistFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match &e {
            EngineError::NotSharp => 4,
            e if e.is_numerical() => 3,
            _ => 2,
        };
        Failure::new(code, e)
    }
}

fn io(e: anyhow::Error) -> Failure {
    Failure::new(1, e)
}

type Result<T> = std::result::Result<T, Failure>;

fn read_circuit(path: &Path) -> Result<CircuitDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(io)?;
    circuitio::parse(&text).map_err(|e| Failure::new(2, anyhow::anyhow!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Optional diagnostics printed by `run`.
#[derive(Args, Debug, Clone, Copy)]
struct RunOutput {
    /// Print the final register.
    #[arg(long)]
    dump_state: bool,
    /// Print one line per gate: seq kind qubits prn ordering.
    #[arg(long)]
    trace: bool,
    /// Print the switch settings of every network pass.
    #[arg(long)]
    dump_routing: bool,
    /// Print operation counters as JSON.
    #[arg(long)]
    counts: bool,
}

fn unsharp_failure(count: u64, label: &str) -> Failure {
    Failure::new(4, anyhow::anyhow!("{count} {label} trial(s) ended in an unsharp state"))
}

fn cmd_run(path: &Path, seed: u64, mode: Mode, force: &[f64], show: RunOutput) -> Result<()> {
    let doc = read_circuit(path)?;
    if let Some(p) = force.iter().find(|p| !(0.0..1.0).contains(*p)) {
        return Err(Failure::new(2, anyhow::anyhow!("forced prn {p} outside [0, 1)")));
    }
    let mut rng = RandomSource::with_forced(seed, force.iter().map(|&p| Prn::from_f64(p)));
    let mut engine = Engine::new(doc.n, mode)?;
    if show.trace {
        engine = engine.with_trace();
    }
    if show.dump_routing {
        engine = engine.with_routing_log();
    }
    let mut qsr = QuantumStateRegister::init_basis(doc.n, 0).map_err(EngineError::from)?;
    let outcomes = engine.evaluate_circuit(&mut qsr, &doc.circuit, &mut rng)?;

    let mut out = String::new();
    for t in engine.trace() {
        let _ = writeln!(out, "trace {t}");
    }
    for r in engine.routing_log() {
        out += &r.to_string();
    }
    for o in &outcomes {
        let how = if o.sharp { "sharp".to_string() } else { format!("p0 {:.6}", o.p0.to_f64()) };
        let _ = writeln!(out, "measure q{} -> {} ({how})", o.qubit, o.bit);
    }
    let readout = rrm_readout(&qsr);
    match &readout {
        Ok(s) => {
            let _ = writeln!(out, "readout {}", format_state(*s, doc.n));
        }
        Err(_) => out += "readout unsharp\n",
    }
    if show.counts {
        let _ = writeln!(out, "{}", serde_json::to_string(&engine.counts()).expect("counts serialize"));
    }
    if show.dump_state {
        out += &qsr.dump();
    }
    print!("{out}");
    readout.map(drop).map_err(Failure::from)
}

fn with_suffix(path: &Path, label: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{label}"),
    };
    path.with_file_name(name)
}

fn render(h: &TrialHistogram, format: HistFormat) -> String {
    match format {
        HistFormat::Csv => h.to_csv(),
        HistFormat::Json => h.to_json() + "\n",
    }
}

fn cmd_sample(
    path: &Path,
    cfg: SampleConfig,
    backend: BackendArg,
    out: Option<&Path>,
    format: HistFormat,
) -> Result<()> {
    let doc = read_circuit(path)?;
    let backends: &[Backend] = match backend {
        BackendArg::Engine => &[Backend::Engine],
        BackendArg::Oracle => &[Backend::Oracle],
        BackendArg::Both => &[Backend::Engine, Backend::Oracle],
    };
    let mut unsharp = None;
    for &b in backends {
        let h = sample(&doc.circuit, doc.n, b, &cfg)?;
        let text = render(&h, format);
        match (out, backends.len()) {
            (Some(p), 1) => write_output(Some(p), &text)?,
            (Some(p), _) => write_output(Some(&with_suffix(p, b.name())), &text)?,
            (None, 1) => write_output(None, &text)?,
            (None, _) => write_output(None, &format!("# {}\n{text}", b.name()))?,
        }
        if h.unsharp() > 0 {
            unsharp.get_or_insert(unsharp_failure(h.unsharp(), b.name()));
        }
    }
    unsharp.map_or(Ok(()), Err)
}

fn load_histogram(path: &Path, n: usize) -> Result<TrialHistogram> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(io)?;
    TrialHistogram::from_csv(&text, n).map_err(|e| Failure::new(2, anyhow::anyhow!("{}: {e}", path.display())))
}

fn cmd_compare(
    circuit: Option<&Path>,
    against: Option<&Path>,
    histograms: Option<&[PathBuf]>,
    qubits: Option<usize>,
    cfg: SampleConfig,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let report: ComparisonReport = match (histograms, qubits) {
        (Some([a, b]), Some(n)) => {
            let (ha, hb) = (load_histogram(a, n)?, load_histogram(b, n)?);
            compare_distributions(&ha, &hb, ["a", "b"])
        }
        _ => {
            let doc = read_circuit(circuit.expect("clap requires a circuit"))?;
            let other = against.map(read_circuit).transpose()?.unwrap_or_else(|| doc.clone());
            if other.n != doc.n {
                return Err(Failure::new(
                    2,
                    anyhow::anyhow!("circuits have different qubit counts ({} and {})", doc.n, other.n),
                ));
            }
            let he = sample(&doc.circuit, doc.n, Backend::Engine, &cfg)?;
            let oracle_cfg = SampleConfig { seed: companion_seed(cfg.seed), ..cfg };
            let ho = sample(&other.circuit, other.n, Backend::Oracle, &oracle_cfg)?;
            compare_distributions(&he, &ho, ["engine", "oracle"])
        }
    };
    let text = match format {
        ReportFormat::Text => report.to_table(),
        ReportFormat::Json => report.to_json() + "\n",
    };
    write_output(out, &text)?;
    match report.unsharp {
        [0, 0] => Ok(()),
        [a, b] => Err(unsharp_failure(a + b, "sampled")),
    }
}

fn cmd_random(qubits: usize, iterations: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let doc = circuitio::random_circuit(qubits, iterations, seed).map_err(|e| Failure::new(2, e))?;
    write_output(out, &circuitio::serialize(&doc))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { circuit, seed, mode, force_prn, show } => cmd_run(&circuit, seed, mode.into(), &force_prn, show),
        Command::Sample { circuit, trials, seed, backend, out, format, jobs, mode } => {
            if trials == 0 {
                return Err(Failure::new(2, anyhow::anyhow!("--trials must be at least 1")));
            }
            let cfg = SampleConfig { mode: mode.into(), ..SampleConfig::new(trials, seed).jobs(jobs) };
            cmd_sample(&circuit, cfg, backend, out.as_deref(), format)
        }
        Command::Compare { circuit, trials, seed, against, histograms, qubits, format, out, jobs } => {
            if trials == 0 {
                return Err(Failure::new(2, anyhow::anyhow!("--trials must be at least 1")));
            }
            let cfg = SampleConfig::new(trials, seed).jobs(jobs);
            cmd_compare(
                circuit.as_deref(),
                against.as_deref(),
                histograms.as_deref(),
                qubits,
                cfg,
                format,
                out.as_deref(),
            )
        }
        Command::Random { qubits, iterations, seed, out } => cmd_random(qubits, iterations, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
