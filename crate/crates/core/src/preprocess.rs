//! Classical pre-processing: real vector -> rescaled arcsine angles -> signed
//! L-bit fixed-point matrix, plus the reconstruction that the encoder targets.

use serde::{Deserialize, Serialize};

use crate::bitcore::{qubits_for_len, BinaryVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_PRECISION: u32 = 2;
pub const MAX_PRECISION: u32 = 32;

/// Real input of length `N = 2^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> InputVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        qubits_for_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InputSpec("non-finite entry in input vector".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n(&self) -> u32 {
        self.values.len().trailing_zeros()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `v / ‖v‖₂`.
    pub fn normalized(&self) -> Result<Vec<T>> {
        let norm = self.values.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            return Err(Error::DegenerateInput);
        }
        Ok(self.values.iter().map(|&v| v / norm).collect())
    }
}

/// Rescaled angles `θ_i ∈ [-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleVector<T> {
    thetas: Vec<T>,
}

impl<T: Scalar> AngleVector<T> {
    pub fn new(thetas: Vec<T>) -> Result<Self> {
        qubits_for_len(thetas.len())?;
        if thetas.iter().any(|t| !(t.abs() <= T::one())) {
            return Err(Error::InputSpec("angle outside [-1, 1]".into()));
        }
        Ok(Self { thetas })
    }

    pub fn thetas(&self) -> &[T] {
        &self.thetas
    }
}

/// The N×L binary matrix `B`, stored column-wise. Column 0 holds the sign bits,
/// column `j ≥ 1` the `2^{-j}` magnitude digit of every row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingMatrix {
    n: u32,
    columns: Vec<BinaryVector>,
}

impl EncodingMatrix {
    pub fn from_columns(columns: Vec<BinaryVector>) -> Result<Self> {
        let l = columns.len() as u32;
        check_precision(l)?;
        let n = columns[0].n();
        if let Some(bad) = columns.iter().find(|c| c.n() != n) {
            return Err(Error::Dimension {
                expected: 1 << n,
                got: bad.len(),
            });
        }
        Ok(Self { n, columns })
    }

    /// Builds `B` from row strings such as `"01100"`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let n = qubits_for_len(rows.len())?;
        let l = rows[0].as_ref().len();
        check_precision(l as u32)?;
        let mut columns = vec![BinaryVector::zeros(n)?; l];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != l {
                return Err(Error::Dimension { expected: l, got: row.len() });
            }
            for (j, ch) in row.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => columns[j].set(i, true),
                    other => return Err(Error::BitString(format!("unexpected character {other:?}"))),
                }
            }
        }
        Ok(Self { n, columns })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of rows, `N = 2^n`.
    pub fn rows(&self) -> usize {
        1 << self.n
    }

    /// Precision `L` (number of columns).
    pub fn precision(&self) -> u32 {
        self.columns.len() as u32
    }

    pub fn column(&self, l: usize) -> &BinaryVector {
        &self.columns[l]
    }

    pub fn columns(&self) -> &[BinaryVector] {
        &self.columns
    }

    pub fn bit(&self, i: usize, j: usize) -> bool {
        self.columns[j].get(i)
    }

    pub fn row_string(&self, i: usize) -> String {
        self.columns.iter().map(|c| if c.get(i) { '1' } else { '0' }).collect()
    }

    pub fn is_negative(&self, i: usize) -> bool {
        self.columns[0].get(i)
    }

    /// Integer magnitude `m_i` read from digits `1..L`, most significant first.
    pub fn magnitude(&self, i: usize) -> u64 {
        self.columns[1..].iter().fold(0, |m, c| m << 1 | c.get(i) as u64)
    }

    /// Quantized angle `θ̂_i = ±m_i / 2^{L-1}`.
    pub fn quantized_angle<T: Scalar>(&self, i: usize) -> T {
        let scale = T::of((1u64 << (self.precision() - 1)) as f64);
        let mag = T::of(self.magnitude(i) as f64) / scale;
        if self.is_negative(i) {
            -mag
        } else {
            mag
        }
    }

    /// Signed, unnormalized sines `(-1)^{B_{i,0}} sin((π/2)·m_i/2^{L-1})`: the
    /// FLAG=1 amplitudes up to the common `1/√N` factor.
    pub fn signed_sines<T: Scalar>(&self) -> Vec<T> {
        (0..self.rows())
            .map(|i| (T::FRAC_PI_2() * self.quantized_angle::<T>(i)).sin())
            .collect()
    }
}

fn check_precision(l: u32) -> Result<()> {
    if (MIN_PRECISION..=MAX_PRECISION).contains(&l) {
        Ok(())
    } else {
        Err(Error::Precision(l))
    }
}

/// `θ_i = arcsin(v_i / ‖v‖_∞) / (π/2)`.
pub fn compute_angles<T: Scalar>(v: &InputVector<T>) -> Result<AngleVector<T>> {
    let max = v.max_abs();
    if max == T::zero() {
        return Err(Error::DegenerateInput);
    }
    let thetas = v
        .values()
        .iter()
        .map(|&x| {
            let r = (x / max).max(-T::one()).min(T::one());
            r.asin() / T::FRAC_PI_2()
        })
        .collect();
    Ok(AngleVector { thetas })
}

/// Signed fixed-point expansion by truncation toward zero, clamped to `2^{L-1} - 1`.
pub fn quantize<T: Scalar>(theta: &AngleVector<T>, l: u32) -> Result<EncodingMatrix> {
    check_precision(l)?;
    let n = qubits_for_len(theta.thetas.len())?;
    let levels = 1u64 << (l - 1);
    let scale = T::of(levels as f64);
    let mut columns = vec![BinaryVector::zeros(n)?; l as usize];
    for (i, &t) in theta.thetas.iter().enumerate() {
        if t < T::zero() {
            columns[0].set(i, true);
        }
        let m = (t.abs() * scale).floor().to_u64().unwrap_or(0).min(levels - 1);
        for (j, col) in columns.iter_mut().enumerate().skip(1) {
            if m >> (l as usize - 1 - j) & 1 == 1 {
                col.set(i, true);
            }
        }
    }
    Ok(EncodingMatrix { n, columns })
}

/// Unit-norm approximating vector `w` encoded by `B`.
pub fn reconstruct<T: Scalar>(b: &EncodingMatrix) -> Result<Vec<T>> {
    let sines = b.signed_sines::<T>();
    let norm = sines.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
    if norm == T::zero() {
        return Err(Error::DegenerateInput);
    }
    Ok(sines.into_iter().map(|x| x / norm).collect())
}

/// Data density `ρ = (1/N) Σ (v_i / ‖v‖_∞)^2`.
pub fn density_rho<T: Scalar>(v: &InputVector<T>) -> Result<T> {
    let max = v.max_abs();
    if max == T::zero() {
        return Err(Error::DegenerateInput);
    }
    let sum = v.values().iter().fold(T::zero(), |s, &x| s + (x / max) * (x / max));
    Ok(sum / T::of(v.len() as f64))
}

/// FLAG=1 probability of the core encoder for the quantized matrix:
/// `(1/N) Σ sin^2((π/2)·m_i/2^{L-1})`.
pub fn quantized_success_probability<T: Scalar>(b: &EncodingMatrix) -> T {
    let sum = b.signed_sines::<T>().into_iter().fold(T::zero(), |s, x| s + x * x);
    sum / T::of(b.rows() as f64)
}
