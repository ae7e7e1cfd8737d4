use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcx_encoder::bench::{self, encode, generate, InputKind, InputSpec, PipelineOptions, SweepConfig};
use mcx_encoder::circuit::{export_qasm, Circuit};
use mcx_encoder::simulator::{postselect_flag, run};
use mcx_encoder::{BinaryVector, Decomposer, Error, OrderMode};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mcxenc", version, about = "Amplitude encoding with multi-controlled NOT gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the encoder circuit for an input and print its summary as JSON.
    Encode {
        /// Generator name (`sin`, `random_normal:7`, ...), `file:<path>` or a path.
        #[arg(long)]
        input: String,
        #[arg(long)]
        n: u32,
        #[arg(long = "L", alias = "l")]
        l: u32,
        #[arg(long, default_value = "auto")]
        order: OrderMode,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the core circuit as OpenQASM 3.
        #[arg(long)]
        qasm: Option<PathBuf>,
        /// Write the core circuit as JSON (readable by `simulate`).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also run the statevector check.
        #[arg(long)]
        simulate: bool,
    },
    /// Decompose a bit string into control strings.
    Decompose {
        /// Bits with index 0 leftmost, or hex digits with `--n`.
        #[arg(long)]
        bits: String,
        /// Read `bits` as hex for this many qubits.
        #[arg(long)]
        n: Option<u32>,
    },
    /// Simulate an encoder, rebuilt from an input or read from circuit JSON.
    Simulate {
        #[arg(long)]
        input: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long = "L", alias = "l")]
        l: Option<u32>,
        #[arg(long, default_value = "auto")]
        order: OrderMode,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the post-selected SYSTEM amplitudes.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Sweep input kinds and sizes and write one CSV row per run.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "random_normal,gaussian,ricker,sin,cos")]
        kinds: Vec<InputKind>,
        #[arg(long, default_value_t = 5)]
        n_min: u32,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long = "L", alias = "l", default_value_t = 5)]
        l: u32,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, default_value = "auto")]
        order: OrderMode,
        /// Fill the per-stage wall-time columns (output no longer reproducible).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        no_simulate: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mcxenc: {e}");
            match e {
                Error::Io(_) => ExitCode::FAILURE,
                _ => ExitCode::from(2),
            }
        }
    }
}

fn execute(cmd: Command) -> mcx_encoder::Result<()> {
    match cmd {
        Command::Encode {
            input,
            n,
            l,
            order,
            seed,
            qasm,
            json,
            simulate,
        } => {
            let v = generate::<f64>(&InputSpec::from_arg(&input, n, seed)?)?;
            let opts = PipelineOptions {
                order,
                simulate,
                timings: false,
            };
            let e = encode(&v, l, opts, &Decomposer::new())?;
            if let Some(path) = qasm {
                fs::write(path, export_qasm(&e.core))?;
            }
            if let Some(path) = json {
                fs::write(path, serde_json::to_string_pretty(&e.core)?)?;
            }
            let mut out = serde_json::to_value(e.summary())?;
            out["sigma"] = json!(e.tour.sigma);
            if let (Some(ps), Some(inf)) = (&e.postselection, e.infidelity) {
                out["flag_probability"] = json!(ps.flag_probability);
                out["fidelity"] = json!(1.0 - inf);
                out["infidelity"] = json!(inf);
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Decompose { bits, n } => {
            let b = match n {
                Some(n) => BinaryVector::from_hex(n, &bits)?,
                None => bits.parse()?,
            };
            let d = mcx_encoder::decompose(&b)?;
            for c in d.controls() {
                println!("{c}");
            }
            println!("M = {}", d.gate_count());
        }
        Command::Simulate {
            input,
            n,
            l,
            order,
            seed,
            amplitudes,
        } => {
            let out = match read_circuit(&input)? {
                Some(c) => {
                    let ps = postselect_flag(&run::<f64>(&c)?)?;
                    let mut out = json!({
                        "n": c.n,
                        "L": c.l,
                        "flag_probability": ps.flag_probability,
                    });
                    if amplitudes {
                        out["amplitudes"] = json!(ps.system_amplitudes);
                    }
                    out
                }
                None => {
                    let missing = |what: &str| Error::InputSpec(format!("--{what} is required unless --input is a circuit JSON"));
                    let n = n.ok_or_else(|| missing("n"))?;
                    let l = l.ok_or_else(|| missing("L"))?;
                    let v = generate::<f64>(&InputSpec::from_arg(&input, n, seed)?)?;
                    let opts = PipelineOptions {
                        order,
                        simulate: true,
                        timings: false,
                    };
                    let e = encode(&v, l, opts, &Decomposer::new())?;
                    let (ps, inf) = e
                        .postselection
                        .zip(e.infidelity)
                        .ok_or(Error::QubitCount(n))?;
                    let mut out = json!({
                        "n": n,
                        "L": l,
                        "flag_probability": ps.flag_probability,
                        "p_success": e.p_success,
                        "fidelity": 1.0 - inf,
                        "infidelity": inf,
                    });
                    if amplitudes {
                        out["amplitudes"] = json!(ps.system_amplitudes);
                    }
                    out
                }
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Bench {
            kinds,
            n_min,
            n_max,
            l,
            reps,
            order,
            timings,
            no_simulate,
            out,
        } => {
            let cfg = SweepConfig {
                kinds,
                n_min,
                n_max,
                l,
                reps,
                options: PipelineOptions {
                    order,
                    simulate: !no_simulate,
                    timings,
                },
            };
            let rows = bench::sweep(&cfg)?;
            bench::write_csv(&rows, fs::File::create(&out)?)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
        }
    }
    Ok(())
}

/// A circuit JSON file, or `None` when `input` is something else.
fn read_circuit(input: &str) -> mcx_encoder::Result<Option<Circuit>> {
    let path = Path::new(input);
    if path.extension().and_then(|e| e.to_str()) != Some("json") || !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str::<Circuit>(&text).ok())
}
