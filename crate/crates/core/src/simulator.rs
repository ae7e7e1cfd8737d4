//! Dense statevector over SYSTEM + TARGET + FLAG.
//!
//! Qubit `q` is bit `n+1-q` of the basis index, so index `ν·4 + 2t + f` holds
//! SYSTEM state `ν`, TARGET `t` and FLAG `f`.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::bitcore::{BinaryVector, ControlString};
use crate::circuit::{Circuit, Gate, PhaseCondition};
use crate::decomposer::Decomposition;
use crate::error::{Error, Result};
use crate::preprocess::InputVector;
use crate::scalar::Scalar;

/// Largest SYSTEM size the simulator accepts.
pub const MAX_SIM_QUBITS: u32 = 20;

/// `1/√2 − FRAC_1_SQRT_2` for f64.
const SQRT_HALF_F64_ERROR: f64 = -4.833646656726457e-17;

/// TARGET=1 mass above which post-selection refuses the state.
pub const TARGET_LEAK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    n: u32,
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> Statevector<T> {
    /// `|0…0⟩` on `n` SYSTEM qubits plus TARGET and FLAG.
    pub fn zero(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let mut amps = vec![Complex::zero(); 1 << (n + 2)];
        amps[0] = Complex::one();
        Ok(Self { n, amps })
    }

    /// SYSTEM qubits.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_total(&self) -> u32 {
        self.n + 2
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    /// Amplitude of SYSTEM `nu`, TARGET `t`, FLAG `f`.
    pub fn amplitude(&self, nu: usize, t: bool, f: bool) -> Complex<T> {
        self.amps[nu << 2 | (t as usize) << 1 | f as usize]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |s, a| s + a.norm_sqr())
    }

    fn bit(&self, q: usize) -> Result<usize> {
        let width = self.n_total() as usize;
        if q >= width {
            return Err(Error::QubitOutOfRange { qubit: q, width });
        }
        Ok(1 << (width - 1 - q))
    }

    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        match g {
            Gate::HadamardLayer => self.hadamard_layer(),
            Gate::Mcx { controls, target } => self.mcx(controls, *target)?,
            Gate::CRy { angle, control, target } => self.cry(*angle, *control, *target)?,
            Gate::PhaseFlip { condition } => self.phase_flip(*condition),
            Gate::X { qubit } => {
                let m = self.bit(*qubit)?;
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        self.amps.swap(i, i | m);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    pub fn hadamard(&mut self, q: usize) -> Result<()> {
        let m = self.bit(q)?;
        self.butterfly(m);
        self.scale_by_sqrt_half(1);
        Ok(())
    }

    /// `H` on every SYSTEM qubit: unscaled butterflies, then one `2^{-n/2}`.
    fn hadamard_layer(&mut self) {
        for q in 0..self.n as usize {
            self.butterfly(1 << (self.n as usize + 1 - q));
        }
        self.scale_by_sqrt_half(self.n);
    }

    fn butterfly(&mut self, m: usize) {
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (a, b) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = a + b;
                self.amps[i | m] = a - b;
            }
        }
    }

    /// Multiplies by `2^{-k/2}`. The rounded `1/√2` is biased (in f64 it is
    /// about 7e-17 too large), which would drift the norm linearly over long
    /// circuits, so odd `k` adds the representation error back as a second term.
    fn scale_by_sqrt_half(&mut self, k: u32) {
        let pow = T::of(0.5f64.powi((k / 2) as i32));
        if k % 2 == 0 {
            for a in &mut self.amps {
                *a = a.scale(pow);
            }
            return;
        }
        let h = T::FRAC_1_SQRT_2();
        let err = T::of(std::f64::consts::FRAC_1_SQRT_2 - h.to_f64_lossy() + SQRT_HALF_F64_ERROR);
        let (hi, lo) = (h * pow, err * pow);
        for a in &mut self.amps {
            *a = a.scale(hi) + a.scale(lo);
        }
    }

    /// X on `target` (TARGET or FLAG) wherever the SYSTEM qubits match `controls`.
    pub fn mcx(&mut self, controls: &ControlString, target: usize) -> Result<()> {
        if controls.n() != self.n {
            return Err(Error::Dimension {
                expected: self.n as usize,
                got: controls.n() as usize,
            });
        }
        let m = self.bit(target)?;
        if target < self.n as usize {
            return Err(Error::QubitOutOfRange {
                qubit: target,
                width: self.n_total() as usize,
            });
        }
        let other = 3 & !m;
        for nu in controls.cells() {
            for low in [0, other] {
                let i = nu << 2 | low;
                self.amps.swap(i, i | m);
            }
        }
        Ok(())
    }

    /// `R_y(angle)` on `target` when `control` is 1.
    pub fn cry(&mut self, angle: f64, control: usize, target: usize) -> Result<()> {
        let (mc, mt) = (self.bit(control)?, self.bit(target)?);
        if mc == mt {
            return Err(Error::InputSpec(format!("CRy control and target are both qubit {control}")));
        }
        let half = T::of(angle / 2.0);
        let (c, s) = (half.cos(), half.sin());
        for i in 0..self.amps.len() {
            if i & mc != 0 && i & mt == 0 {
                let (a, b) = (self.amps[i], self.amps[i | mt]);
                self.amps[i] = a.scale(c) - b.scale(s);
                self.amps[i | mt] = a.scale(s) + b.scale(c);
            }
        }
        Ok(())
    }

    pub fn phase_flip(&mut self, condition: PhaseCondition) {
        match condition {
            PhaseCondition::FlagSet => {
                for a in self.amps.iter_mut().skip(1).step_by(2) {
                    *a = -*a;
                }
            }
            PhaseCondition::NotAllZero => {
                for a in self.amps.iter_mut().skip(1) {
                    *a = -*a;
                }
            }
        }
    }
}

/// Runs `c` from `|0…0⟩`.
pub fn run<T: Scalar>(c: &Circuit) -> Result<Statevector<T>> {
    c.validate()?;
    let mut s = Statevector::zero(c.n)?;
    s.apply_all(&c.gates)?;
    Ok(s)
}

/// FLAG measurement statistics and the post-selected SYSTEM state.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelection<T> {
    pub flag_probability: T,
    /// Renormalized TARGET=0, FLAG=1 branch, global phase removed.
    pub system_amplitudes: Vec<T>,
    /// Largest imaginary part left after phase removal.
    pub imaginary_residual: T,
}

impl<T: Scalar> PostSelection<T> {
    pub fn attempts_estimate(&self) -> T {
        T::one() / self.flag_probability
    }
}

pub fn postselect_flag<T: Scalar>(s: &Statevector<T>) -> Result<PostSelection<T>> {
    let mut target_mass = T::zero();
    let mut flag_probability = T::zero();
    for (i, a) in s.amps.iter().enumerate() {
        if i & 2 != 0 {
            target_mass = target_mass + a.norm_sqr();
        }
        if i & 1 != 0 {
            flag_probability = flag_probability + a.norm_sqr();
        }
    }
    let leak = target_mass.to_f64_lossy();
    if leak > TARGET_LEAK_TOLERANCE {
        return Err(Error::TargetEntangled(leak));
    }
    let branch: Vec<Complex<T>> = (0..1usize << s.n).map(|nu| s.amps[nu << 2 | 1]).collect();
    let norm = branch.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt();
    if norm == T::zero() {
        return Err(Error::DegenerateInput);
    }
    // rotate the largest amplitude onto the real axis by the smaller of the two
    // possible angles, which keeps a negative real amplitude negative
    let (_, lead) = branch
        .iter()
        .fold((T::zero(), Complex::zero()), |(best, lead), a| {
            let m = a.norm_sqr();
            if m > best {
                (m, *a)
            } else {
                (best, lead)
            }
        });
    let mut phase = lead.arg();
    if phase > T::FRAC_PI_2() {
        phase = phase - T::PI();
    } else if phase < -T::FRAC_PI_2() {
        phase = phase + T::PI();
    }
    let rot = Complex::from_polar(T::one() / norm, -phase);
    let mut imaginary_residual = T::zero();
    let system_amplitudes = branch
        .iter()
        .map(|a| {
            let r = a * rot;
            imaginary_residual = imaginary_residual.max(r.im.abs());
            r.re
        })
        .collect();
    Ok(PostSelection {
        flag_probability,
        system_amplitudes,
        imaginary_residual,
    })
}

/// `|⟨a, v/‖v‖₂⟩|²`.
pub fn fidelity<T: Scalar>(ps: &PostSelection<T>, v: &InputVector<T>) -> Result<T> {
    if ps.system_amplitudes.len() != v.len() {
        return Err(Error::Dimension {
            expected: ps.system_amplitudes.len(),
            got: v.len(),
        });
    }
    let target = v.normalized()?;
    let dot = ps
        .system_amplitudes
        .iter()
        .zip(&target)
        .fold(T::zero(), |s, (&a, &b)| s + a * b);
    Ok((dot * dot).min(T::one()))
}

/// Applies the MCX gates of `d` to the uniform superposition and checks that the
/// result is `|Ψ_b⟩ = N^{-1/2} Σ |ν⟩|b_ν⟩` to `1e-12`.
pub fn verify_w(b: &BinaryVector, d: &Decomposition) -> Result<bool> {
    let n = b.n();
    if d.n() != n {
        return Err(Error::Dimension {
            expected: n as usize,
            got: d.n() as usize,
        });
    }
    let mut s = Statevector::<f64>::zero(n)?;
    s.apply(&Gate::HadamardLayer)?;
    for c in d.controls() {
        s.mcx(c, n as usize)?;
    }
    let amp = 1.0 / ((1u64 << n) as f64).sqrt();
    Ok(s.amps.iter().enumerate().all(|(i, a)| {
        let expected = if i & 1 == 0 && (i >> 1 & 1 == 1) == b.get(i >> 2) {
            amp
        } else {
            0.0
        };
        (a - Complex::new(expected, 0.0)).norm() < 1e-12
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_core;
    use crate::Statevector64;
    use crate::decomposer::{decompose, Decomposer};
    use crate::pathopt::{build_path_matrix, edge_costs, solve_tsp, OrderMode};
    use crate::preprocess::{quantized_success_probability, reconstruct, EncodingMatrix};
    use std::f64::consts::PI;

    fn bv(s: &str) -> BinaryVector {
        s.parse().unwrap()
    }

    #[test]
    fn uncontrolled_mcx_flips_target() {
        let mut s = Statevector64::zero(2).unwrap();
        s.apply(&Gate::Mcx { controls: "II".parse().unwrap(), target: 2 }).unwrap();
        assert_eq!(s.amplitude(0, true, false), Complex::one());
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn cry_rotations() {
        let mut s = Statevector64::zero(1).unwrap();
        s.apply(&Gate::X { qubit: 1 }).unwrap();
        s.apply(&Gate::CRy { angle: PI, control: 1, target: 2 }).unwrap();
        assert!((s.amplitude(0, true, true) - Complex::one()).norm() < 1e-15);

        let mut s = Statevector64::zero(1).unwrap();
        s.apply(&Gate::X { qubit: 1 }).unwrap();
        s.apply(&Gate::CRy { angle: 2.0 * PI, control: 1, target: 2 }).unwrap();
        assert!((s.amplitude(0, true, false) + Complex::one()).norm() < 1e-15);

        // control 0: untouched
        let mut s = Statevector64::zero(1).unwrap();
        s.apply(&Gate::CRy { angle: 1.0, control: 1, target: 2 }).unwrap();
        assert_eq!(s.amplitude(0, false, false), Complex::one());
    }

    #[test]
    fn hadamard_layer_is_uniform() {
        let mut s = Statevector64::zero(3).unwrap();
        s.apply(&Gate::HadamardLayer).unwrap();
        for nu in 0..8 {
            assert!((s.amplitude(nu, false, false).re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_gates_rejected() {
        let mut s = Statevector64::zero(2).unwrap();
        assert!(s.apply(&Gate::X { qubit: 4 }).is_err());
        assert!(s.apply(&Gate::Mcx { controls: "I".parse().unwrap(), target: 2 }).is_err());
        assert!(s.apply(&Gate::Mcx { controls: "II".parse().unwrap(), target: 1 }).is_err());
        assert!(s.apply(&Gate::CRy { angle: 0.5, control: 3, target: 3 }).is_err());
    }

    #[test]
    fn empty_circuit_stays_at_zero() {
        let c = Circuit { n: 2, l: 2, gates: vec![], sigma: vec![], block_mcx: vec![], amplification_rounds: 0 };
        let s = run::<f64>(&c).unwrap();
        assert_eq!(s.amplitudes()[0], Complex::one());
        assert!(postselect_flag(&s).is_err());
    }

    #[test]
    fn verify_w_examples() {
        assert!(verify_w(&BinaryVector::zeros(3).unwrap(), &decompose(&BinaryVector::zeros(3).unwrap()).unwrap()).unwrap());
        let b = bv("11001100");
        assert!(verify_w(&b, &decompose(&b).unwrap()).unwrap());
        assert!(!verify_w(&bv("11001000"), &decompose(&b).unwrap()).unwrap());
    }

    #[test]
    fn flag_always_set() {
        let mut s = Statevector64::zero(1).unwrap();
        s.apply(&Gate::X { qubit: 2 }).unwrap();
        s.apply(&Gate::HadamardLayer).unwrap();
        let ps = postselect_flag(&s).unwrap();
        assert!((ps.flag_probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entangled_target_rejected() {
        let mut s = Statevector64::zero(1).unwrap();
        s.apply(&Gate::X { qubit: 1 }).unwrap();
        assert!(matches!(postselect_flag(&s), Err(Error::TargetEntangled(_))));
    }

    #[test]
    fn example_encoding() {
        let rows = ["01100", "01001", "00110", "10111", "01000", "11100", "00011", "01111"];
        let b = EncodingMatrix::from_rows(&rows).unwrap();
        let dec = Decomposer::new();
        let tour = solve_tsp(&edge_costs(&build_path_matrix(&b), &dec).unwrap(), OrderMode::Exact).unwrap();
        let s = run::<f64>(&build_core(&b, &tour, &dec).unwrap()).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let ps = postselect_flag(&s).unwrap();
        assert!((ps.flag_probability - quantized_success_probability::<f64>(&b)).abs() < 1e-10);
        for (a, w) in ps.system_amplitudes.iter().zip(reconstruct::<f64>(&b).unwrap()) {
            assert!((a - w).abs() < 1e-10);
        }
        assert!(ps.imaginary_residual < 1e-12);
    }

    #[test]
    fn fidelity_bounds() {
        let ps = PostSelection { flag_probability: 1.0f64, system_amplitudes: vec![0.6, 0.8], imaginary_residual: 0.0 };
        let same = InputVector::new(vec![3.0, 4.0]).unwrap();
        assert!((fidelity(&ps, &same).unwrap() - 1.0).abs() < 1e-15);
        let orth = InputVector::new(vec![-4.0, 3.0]).unwrap();
        assert!(fidelity(&ps, &orth).unwrap().abs() < 1e-15);
        assert!(fidelity(&ps, &InputVector::new(vec![1.0; 4]).unwrap()).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let b = EncodingMatrix::from_rows(&["0110", "1011"]).unwrap();
        let dec = Decomposer::new();
        let tour = solve_tsp(&edge_costs(&build_path_matrix(&b), &dec).unwrap(), OrderMode::Exact).unwrap();
        let s = run::<f32>(&build_core(&b, &tour, &dec).unwrap()).unwrap();
        let ps = postselect_flag(&s).unwrap();
        assert!((ps.flag_probability - quantized_success_probability::<f32>(&b)).abs() < 1e-5);
    }
}
