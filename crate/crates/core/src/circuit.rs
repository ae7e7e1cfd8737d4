//! Gate-level encoder: Hadamard layer, alternating `W_Δ` MCX blocks and
//! controlled `R_y` rotations, optional amplitude amplification, QASM export.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitcore::{Control, ControlString};
use crate::decomposer::Decomposer;
use crate::error::{Error, Result};
use crate::pathopt::{build_path_matrix, deltas, OrderMode, Tour};
use crate::preprocess::{quantized_success_probability, EncodingMatrix};

/// Qubit index of the TARGET register for `n` SYSTEM qubits.
pub const fn target_qubit(n: u32) -> usize {
    n as usize
}

/// Qubit index of the FLAG register for `n` SYSTEM qubits.
pub const fn flag_qubit(n: u32) -> usize {
    n as usize + 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseCondition {
    /// `S_flag`: phase −1 on every FLAG=1 component.
    FlagSet,
    /// `−S₀`: phase −1 on every component except the all-zero state.
    NotAllZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    /// `H` on every SYSTEM qubit.
    HadamardLayer,
    /// X on `target` when the SYSTEM qubits match `controls`.
    Mcx { controls: ControlString, target: usize },
    CRy { angle: f64, control: usize, target: usize },
    PhaseFlip { condition: PhaseCondition },
    X { qubit: usize },
}

impl Gate {
    /// Inverse gate; only `CRy` differs from itself.
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::CRy { angle, control, target } => Gate::CRy {
                angle: -angle,
                control: *control,
                target: *target,
            },
            g => g.clone(),
        }
    }

    pub fn is_mcx(&self) -> bool {
        matches!(self, Gate::Mcx { .. })
    }
}

/// `φ_0 = 2π`, `φ_l = π / 2^l` for `l = 1..L`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSchedule {
    pub phi: Vec<f64>,
}

impl AngleSchedule {
    /// `Φ = (0, φ_0, …, φ_{L-1})`, indexed by path-matrix column.
    pub fn padded(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.phi.iter().copied()).collect()
    }
}

pub fn phi_angles(l: u32) -> Result<AngleSchedule> {
    if l < crate::preprocess::MIN_PRECISION || l > crate::preprocess::MAX_PRECISION {
        return Err(Error::Precision(l));
    }
    let phi = (0..l).map(|j| if j == 0 { 2.0 * PI } else { PI / (1u64 << j) as f64 }).collect();
    Ok(AngleSchedule { phi })
}

/// Ordered gate list over SYSTEM (`0..n`), TARGET (`n`) and FLAG (`n+1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: u32,
    #[serde(rename = "L")]
    pub l: u32,
    pub gates: Vec<Gate>,
    /// Column order the core encoder visits.
    pub sigma: Vec<usize>,
    /// MCX count of each of the `L + 1` shift blocks.
    pub block_mcx: Vec<usize>,
    pub amplification_rounds: usize,
}

impl Circuit {
    /// SYSTEM + TARGET + FLAG.
    pub fn width(&self) -> usize {
        self.n as usize + 2
    }

    /// Serial gate count; every gate touches TARGET or FLAG, so none overlap.
    pub fn depth(&self) -> usize {
        self.gates.len()
    }

    pub fn mcx_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_mcx()).count()
    }

    pub fn census(&self) -> GateCensus {
        let mut c = GateCensus::default();
        for g in &self.gates {
            match g {
                Gate::HadamardLayer => c.hadamard_layers += 1,
                Gate::Mcx { .. } => c.mcx += 1,
                Gate::CRy { .. } => c.cry += 1,
                Gate::PhaseFlip { .. } => c.phase_flips += 1,
                Gate::X { .. } => c.x += 1,
            }
        }
        c
    }

    /// Checks register ranges and gate shapes, e.g. for circuits read from JSON.
    pub fn validate(&self) -> Result<()> {
        let width = self.width();
        let check = |q: usize| {
            if q < width {
                Ok(())
            } else {
                Err(Error::QubitOutOfRange { qubit: q, width })
            }
        };
        for g in &self.gates {
            match g {
                Gate::HadamardLayer | Gate::PhaseFlip { .. } => {}
                Gate::Mcx { controls, target } => {
                    if controls.n() != self.n {
                        return Err(Error::Dimension {
                            expected: self.n as usize,
                            got: controls.n() as usize,
                        });
                    }
                    check(*target)?;
                    if *target < self.n as usize {
                        return Err(Error::QubitOutOfRange {
                            qubit: *target,
                            width,
                        });
                    }
                }
                Gate::CRy { control, target, angle } => {
                    check(*control)?;
                    check(*target)?;
                    if control == target || !angle.is_finite() {
                        return Err(Error::InputSpec(format!("malformed CRy on {control} -> {target}")));
                    }
                }
                Gate::X { qubit } => check(*qubit)?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCensus {
    pub hadamard_layers: usize,
    pub mcx: usize,
    pub cry: usize,
    pub phase_flips: usize,
    pub x: usize,
}

/// The core encoder `U` for `B` along `tour`.
pub fn build_core(b: &EncodingMatrix, tour: &Tour, decomposer: &Decomposer) -> Result<Circuit> {
    let p = build_path_matrix(b);
    let ds = deltas(&p, tour)?;
    let n = b.n();
    let l = b.precision();
    let big_phi = phi_angles(l)?.padded();
    let (t, f) = (target_qubit(n), flag_qubit(n));

    let mut gates = vec![Gate::HadamardLayer];
    let mut block_mcx = Vec::with_capacity(ds.len());
    for (step, delta) in ds.iter().enumerate() {
        let d = decomposer.decompose(delta)?;
        block_mcx.push(d.gate_count());
        gates.extend(d.controls().iter().map(|c| Gate::Mcx {
            controls: *c,
            target: t,
        }));
        if step < l as usize {
            // bound to the visited column, not the step, so every order gives the same state
            gates.push(Gate::CRy {
                angle: big_phi[tour.sigma[step + 1]],
                control: t,
                target: f,
            });
        }
    }
    Ok(Circuit {
        n,
        l,
        gates,
        sigma: tour.sigma.clone(),
        block_mcx,
        amplification_rounds: 0,
    })
}

/// `k = max(0, round(π / (4·asin√p) − 1/2))`.
pub fn amplification_rounds(p: f64) -> Result<usize> {
    if !(p > 0.0) || p > 1.0 + 1e-12 {
        return Err(Error::Amplification(p));
    }
    let theta = p.min(1.0).sqrt().asin();
    Ok((PI / (4.0 * theta) - 0.5).round().max(0.0) as usize)
}

/// Success probability after `k` amplification rounds.
pub fn amplified_success_probability(p: f64, k: usize) -> f64 {
    let theta = p.clamp(0.0, 1.0).sqrt().asin();
    ((2 * k + 1) as f64 * theta).sin().powi(2)
}

/// Wraps `core` in `k` rounds of `Q = −U·S₀·U†·S_flag`.
pub fn amplify(core: &Circuit, k: usize) -> Circuit {
    let inverse: Vec<Gate> = core.gates.iter().rev().map(Gate::inverse).collect();
    let mut gates = core.gates.clone();
    for _ in 0..k {
        gates.push(Gate::PhaseFlip {
            condition: PhaseCondition::FlagSet,
        });
        gates.extend(inverse.iter().cloned());
        gates.push(Gate::PhaseFlip {
            condition: PhaseCondition::NotAllZero,
        });
        gates.extend(core.gates.iter().cloned());
    }
    Circuit {
        gates,
        amplification_rounds: core.amplification_rounds + k,
        ..core.clone()
    }
}

/// Core encoder plus the amplification rounds chosen from the quantized success
/// probability of `B`.
pub fn build_full(b: &EncodingMatrix, tour: &Tour, decomposer: &Decomposer) -> Result<Circuit> {
    let p = quantized_success_probability::<f64>(b);
    let k = amplification_rounds(p)?;
    Ok(amplify(&build_core(b, tour, decomposer)?, k))
}

/// `encode` summary as written by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub n: u32,
    #[serde(rename = "L")]
    pub l: u32,
    pub order: OrderMode,
    pub depth_core: usize,
    pub depth_full: usize,
    pub mcx_count: usize,
    pub p_success: f64,
}

impl CircuitSummary {
    pub fn new(core: &Circuit, full: &Circuit, order: OrderMode, p_success: f64) -> Self {
        Self {
            n: core.n,
            l: core.l,
            order,
            depth_core: core.depth(),
            depth_full: full.depth(),
            mcx_count: core.mcx_count(),
            p_success,
        }
    }
}

/// OpenQASM 3 text for `c`.
pub fn export_qasm(c: &Circuit) -> String {
    let width = c.width();
    let mut out = String::new();
    out.push_str("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    let _ = writeln!(out, "qubit[{width}] q;");
    for g in &c.gates {
        match g {
            Gate::HadamardLayer => {
                for q in 0..c.n as usize {
                    let _ = writeln!(out, "h q[{q}];");
                }
            }
            Gate::Mcx { controls, target } => {
                let zeros: Vec<usize> = (0..controls.n() as usize)
                    .filter(|&q| controls.symbol(q) == Control::Zero)
                    .collect();
                let on: Vec<usize> = (0..controls.n() as usize)
                    .filter(|&q| controls.symbol(q) != Control::Free)
                    .collect();
                for q in &zeros {
                    let _ = writeln!(out, "x q[{q}];");
                }
                controlled(&mut out, "x", &on, *target);
                for q in &zeros {
                    let _ = writeln!(out, "x q[{q}];");
                }
            }
            Gate::CRy { angle, control, target } => {
                let _ = writeln!(out, "ctrl @ ry({}) q[{control}], q[{target}];", format_g17(*angle));
            }
            Gate::PhaseFlip {
                condition: PhaseCondition::FlagSet,
            } => {
                let _ = writeln!(out, "z q[{}];", width - 1);
            }
            Gate::PhaseFlip {
                condition: PhaseCondition::NotAllZero,
            } => {
                // S₀ conjugated by X on every qubit, then the −1
                for q in 0..width {
                    let _ = writeln!(out, "x q[{q}];");
                }
                controlled(&mut out, "z", &(0..width - 1).collect::<Vec<_>>(), width - 1);
                for q in 0..width {
                    let _ = writeln!(out, "x q[{q}];");
                }
                out.push_str("gphase(pi);\n");
            }
            Gate::X { qubit } => {
                let _ = writeln!(out, "x q[{qubit}];");
            }
        }
    }
    out
}

fn controlled(out: &mut String, gate: &str, controls: &[usize], target: usize) {
    let modifier = match controls.len() {
        0 => String::new(),
        1 => "ctrl @ ".to_string(),
        k => format!("ctrl({k}) @ "),
    };
    let mut args: Vec<String> = controls.iter().map(|q| format!("q[{q}]")).collect();
    args.push(format!("q[{target}]"));
    let _ = writeln!(out, "{modifier}{gate} {};", args.join(", "));
}

/// C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    const P: i32 = 17;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < -4 || exp >= P {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_zeros(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let mut s = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    trim_zeros(&mut s);
    format!("{sign}{s}")
}

fn trim_zeros(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}
