//! Input generators, the end-to-end pipeline and scaling sweeps with CSV output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{amplification_rounds, amplify, build_core, Circuit, CircuitSummary};
use crate::decomposer::Decomposer;
use crate::error::{Error, Result};
use crate::pathopt::{build_path_matrix, edge_costs, solve_tsp, OrderMode, Tour, EXACT_CROSSOVER};
use crate::preprocess::{compute_angles, density_rho, quantize, quantized_success_probability, EncodingMatrix, InputVector};
use crate::scalar::Scalar;
use crate::simulator::{fidelity, postselect_flag, run, PostSelection};

/// Pipelines above this many SYSTEM qubits skip simulation.
pub const SIMULATION_LIMIT: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    RandomNormal,
    Gaussian,
    Ricker,
    Sin,
    Cos,
    File,
}

impl InputKind {
    pub const GENERATED: [InputKind; 5] = [
        InputKind::RandomNormal,
        InputKind::Gaussian,
        InputKind::Ricker,
        InputKind::Sin,
        InputKind::Cos,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InputKind::RandomNormal => "random_normal",
            InputKind::Gaussian => "gaussian",
            InputKind::Ricker => "ricker",
            InputKind::Sin => "sin",
            InputKind::Cos => "cos",
            InputKind::File => "file",
        }
    }

    /// Sampling interval of the function generators.
    pub fn domain(self) -> Option<(f64, f64)> {
        match self {
            InputKind::Gaussian | InputKind::Ricker => Some((-3.0, 3.0)),
            InputKind::Sin | InputKind::Cos => Some((0.0, 2.0 * std::f64::consts::PI)),
            InputKind::RandomNormal | InputKind::File => None,
        }
    }

    /// Inputs whose random draw depends on the seed.
    pub fn is_random(self) -> bool {
        self == InputKind::RandomNormal
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InputKind::GENERATED
            .into_iter()
            .chain([InputKind::File])
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InputSpec(format!("unknown input kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub kind: InputKind,
    pub n: u32,
    pub seed: Option<u64>,
    pub path: Option<PathBuf>,
}

impl InputSpec {
    pub fn generated(kind: InputKind, n: u32, seed: Option<u64>) -> Self {
        Self { kind, n, seed, path: None }
    }

    pub fn file(path: impl Into<PathBuf>, n: u32) -> Self {
        Self {
            kind: InputKind::File,
            n,
            seed: None,
            path: Some(path.into()),
        }
    }

    /// Reads the command-line form: a generator name, optionally `name:seed`,
    /// or `file:<path>` / a bare path to an existing file.
    pub fn from_arg(arg: &str, n: u32, seed: Option<u64>) -> Result<Self> {
        if let Some(path) = arg.strip_prefix("file:") {
            return Ok(Self::file(path, n));
        }
        let (name, inline_seed) = match arg.split_once(':') {
            Some((name, s)) => {
                let seed = s
                    .parse()
                    .map_err(|_| Error::InputSpec(format!("bad seed {s:?} in {arg:?}")))?;
                (name, Some(seed))
            }
            None => (arg, None),
        };
        match name.parse::<InputKind>() {
            Ok(InputKind::File) => Err(Error::InputSpec("use file:<path> for file input".into())),
            Ok(kind) => Ok(Self::generated(kind, n, inline_seed.or(seed))),
            Err(_) if Path::new(arg).is_file() => Ok(Self::file(arg, n)),
            Err(e) => Err(e),
        }
    }
}

/// Uniform grid of `count` points spanning `[a, b]` including both ends.
pub fn grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let step = (b - a) / (count - 1) as f64;
    (0..count).map(|k| a + k as f64 * step).collect()
}

pub fn generate<T: Scalar>(spec: &InputSpec) -> Result<InputVector<T>> {
    if spec.n == 0 || spec.n > crate::bitcore::MAX_QUBITS {
        return Err(Error::QubitCount(spec.n));
    }
    let count = 1usize << spec.n;
    let values: Vec<f64> = match spec.kind {
        InputKind::RandomNormal => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
            let raw: Vec<f64> = (0..count).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            raw.into_iter().map(|x| x / norm).collect()
        }
        InputKind::File => {
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| Error::InputSpec("file input without a path".into()))?;
            let values = read_values(path)?;
            if values.len() != count {
                return Err(Error::Dimension {
                    expected: count,
                    got: values.len(),
                });
            }
            values
        }
        kind => {
            let (a, b) = kind.domain().expect("function generator");
            let f: fn(f64) -> f64 = match kind {
                InputKind::Gaussian => |x| (-x * x / 2.0).exp(),
                InputKind::Ricker => |x| (1.0 - x * x) * (-x * x / 2.0).exp(),
                InputKind::Sin => f64::sin,
                _ => f64::cos,
            };
            grid(a, b, count).into_iter().map(f).collect()
        }
    };
    InputVector::new(values.into_iter().map(T::of).collect())
}

/// One number per line (blank lines and `#` comments skipped) or a JSON array.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    parse_values(&std::fs::read_to_string(path)?)
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::InputSpec(format!("not a number: {l:?}")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub order: OrderMode,
    /// Simulate when `n ≤ SIMULATION_LIMIT`.
    pub simulate: bool,
    /// Record per-stage wall time. Off keeps output byte-reproducible.
    pub timings: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            order: OrderMode::Auto,
            simulate: true,
            timings: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub decompose_ms: f64,
    pub tsp_ms: f64,
    pub simulate_ms: f64,
}

/// Everything the pipeline produced for one input.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub input: InputVector<f64>,
    pub matrix: EncodingMatrix,
    pub order: OrderMode,
    pub tour: Tour,
    pub core: Circuit,
    pub full: Circuit,
    pub p_success: f64,
    pub rho: f64,
    pub postselection: Option<PostSelection<f64>>,
    pub infidelity: Option<f64>,
    pub times: StageTimes,
}

impl Encoding {
    pub fn summary(&self) -> CircuitSummary {
        CircuitSummary::new(&self.core, &self.full, self.order, self.p_success)
    }
}

/// The solver [`solve_tsp`] runs for `mode` with `middle` free columns.
pub fn resolved_order(mode: OrderMode, middle: usize) -> OrderMode {
    match mode {
        OrderMode::Auto if middle <= EXACT_CROSSOVER => OrderMode::Exact,
        OrderMode::Auto => OrderMode::Heuristic,
        m => m,
    }
}

/// preprocess -> edge costs -> tour -> core/full circuits -> optional simulation.
pub fn encode(v: &InputVector<f64>, l: u32, opts: PipelineOptions, decomposer: &Decomposer) -> Result<Encoding> {
    let matrix = quantize(&compute_angles(v)?, l)?;
    let path = build_path_matrix(&matrix);

    let t0 = Instant::now();
    let costs = edge_costs(&path, decomposer)?;
    let t1 = Instant::now();
    let order = resolved_order(opts.order, l as usize);
    let tour = solve_tsp(&costs, order)?;
    let t2 = Instant::now();

    let core = build_core(&matrix, &tour, decomposer)?;
    let p_success = quantized_success_probability::<f64>(&matrix);
    let full = amplify(&core, amplification_rounds(p_success)?);
    let rho = density_rho(v)?;

    let t3 = Instant::now();
    let (postselection, infidelity) = if opts.simulate && v.n() <= SIMULATION_LIMIT {
        let ps = postselect_flag(&run::<f64>(&core)?)?;
        let inf = 1.0 - fidelity(&ps, v)?;
        (Some(ps), Some(inf))
    } else {
        (None, None)
    };
    let t4 = Instant::now();
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    let times = if opts.timings {
        StageTimes {
            decompose_ms: ms(t0, t1),
            tsp_ms: ms(t1, t2),
            simulate_ms: ms(t3, t4),
        }
    } else {
        StageTimes::default()
    };
    Ok(Encoding {
        input: v.clone(),
        matrix,
        order,
        tour,
        core,
        full,
        p_success,
        rho,
        postselection,
        infidelity,
        times,
    })
}

/// One CSV data row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub input_kind: InputKind,
    pub n: u32,
    #[serde(rename = "L")]
    pub l: u32,
    pub seed: Option<u64>,
    pub depth_core: usize,
    pub depth_full: usize,
    pub mcx_total: usize,
    pub p_success: f64,
    pub rho: f64,
    pub infidelity: Option<f64>,
    pub attempts_estimate: f64,
    pub tsp_mode: OrderMode,
    pub times: Option<StageTimes>,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "input_kind",
    "n",
    "L",
    "seed",
    "depth_core",
    "depth_full",
    "mcx_total",
    "p_success",
    "rho",
    "infidelity",
    "attempts_estimate",
    "tsp_mode",
    "decompose_ms",
    "tsp_ms",
    "simulate_ms",
];

pub fn run_pipeline(spec: &InputSpec, l: u32, opts: PipelineOptions, decomposer: &Decomposer) -> Result<BenchRecord> {
    let v = generate::<f64>(spec)?;
    let e = encode(&v, l, opts, decomposer)?;
    Ok(BenchRecord {
        input_kind: spec.kind,
        n: spec.n,
        l,
        seed: spec.seed.filter(|_| spec.kind.is_random()),
        depth_core: e.core.depth(),
        depth_full: e.full.depth(),
        mcx_total: e.core.mcx_count(),
        p_success: e.p_success,
        rho: e.rho,
        infidelity: e.infidelity,
        attempts_estimate: 1.0 / e.p_success,
        tsp_mode: e.order,
        times: opts.timings.then_some(e.times),
    })
}

/// A data row or a per-cell aggregate.
#[derive(Clone, Debug, PartialEq)]
pub enum BenchRow {
    Data(BenchRecord),
    /// `stat` is `"mean"` or `"stddev"`; values follow [`CSV_COLUMNS`] from `depth_core`.
    Aggregate {
        input_kind: InputKind,
        n: u32,
        l: u32,
        stat: &'static str,
        values: Vec<Option<f64>>,
        tsp_mode: OrderMode,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub kinds: Vec<InputKind>,
    pub n_min: u32,
    pub n_max: u32,
    pub l: u32,
    pub reps: u32,
    pub options: PipelineOptions,
}

/// Runs every `(kind, n, repetition)` cell; rows come back sorted by kind order,
/// `n` and repetition, each cell followed by its mean (and stddev for ≥ 2 reps).
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<BenchRow>> {
    if cfg.kinds.contains(&InputKind::File) {
        return Err(Error::InputSpec("sweeps take generated inputs only".into()));
    }
    if cfg.reps == 0 || cfg.n_min == 0 || cfg.n_min > cfg.n_max {
        return Err(Error::InputSpec(format!(
            "empty sweep: n in {}..={}, {} reps",
            cfg.n_min, cfg.n_max, cfg.reps
        )));
    }
    let decomposer = Decomposer::new();
    let cells: Vec<(InputKind, u32)> = cfg
        .kinds
        .iter()
        .flat_map(|&k| (cfg.n_min..=cfg.n_max).map(move |n| (k, n)))
        .collect();
    let jobs: Vec<(InputKind, u32, u32)> = cells
        .iter()
        .flat_map(|&(k, n)| (0..cfg.reps).map(move |r| (k, n, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(kind, n, rep)| {
            let spec = InputSpec::generated(kind, n, Some(rep as u64));
            run_pipeline(&spec, cfg.l, cfg.options, &decomposer)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(records.len() + 2 * cells.len());
    for (cell, chunk) in cells.iter().zip(records.chunks(cfg.reps as usize)) {
        rows.extend(chunk.iter().cloned().map(BenchRow::Data));
        let columns: Vec<Vec<Option<f64>>> = chunk.iter().map(numeric_fields).collect();
        let width = columns[0].len();
        let column = |j: usize| -> Option<Vec<f64>> { columns.iter().map(|c| c[j]).collect() };
        let aggregate = |stat, f: fn(&[f64]) -> f64| BenchRow::Aggregate {
            input_kind: cell.0,
            n: cell.1,
            l: cfg.l,
            stat,
            values: (0..width).map(|j| column(j).map(|c| f(&c))).collect(),
            tsp_mode: chunk[0].tsp_mode,
        };
        rows.push(aggregate("mean", mean));
        if cfg.reps >= 2 {
            rows.push(aggregate("stddev", stddev));
        }
    }
    Ok(rows)
}

fn numeric_fields(r: &BenchRecord) -> Vec<Option<f64>> {
    let t = r.times;
    vec![
        Some(r.depth_core as f64),
        Some(r.depth_full as f64),
        Some(r.mcx_total as f64),
        Some(r.p_success),
        Some(r.rho),
        r.infidelity,
        Some(r.attempts_estimate),
        t.map(|t| t.decompose_ms),
        t.map(|t| t.tsp_ms),
        t.map(|t| t.simulate_ms),
    ]
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator).
pub fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`; `None` for fewer than two
/// usable points or a degenerate `x` spread.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_record(row: &BenchRow) -> Vec<String> {
    match row {
        BenchRow::Data(r) => {
            let mut out = vec![
                r.input_kind.to_string(),
                r.n.to_string(),
                r.l.to_string(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
            ];
            let nums = numeric_fields(r);
            out.extend(nums[..3].iter().map(|v| format!("{}", v.expect("counts are present") as u64)));
            out.extend(nums[3..7].iter().copied().map(cell));
            out.push(r.tsp_mode.to_string());
            out.extend(nums[7..].iter().copied().map(cell));
            out
        }
        BenchRow::Aggregate {
            input_kind,
            n,
            l,
            stat,
            values,
            tsp_mode,
        } => {
            let mut out = vec![input_kind.to_string(), n.to_string(), l.to_string(), stat.to_string()];
            out.extend(values[..7].iter().copied().map(cell));
            out.push(tsp_mode.to_string());
            out.extend(values[7..].iter().copied().map(cell));
            out
        }
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[BenchRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
