//! Probabilistic amplitude encoding with multi-controlled NOT gates.
//!
//! A real vector is turned into signed L-bit angle expansions
//! ([`preprocess`]); each bit column becomes a shift operator `W_b` written as
//! an XOR of hypercube subcubes, one MCX gate per subcube ([`decomposer`]). The
//! order in which columns are visited is chosen by a small TSP ([`pathopt`]),
//! the gates are assembled into a circuit ([`circuit`]) and checked against an
//! exact statevector ([`simulator`]). [`bench`] drives the whole pipeline.
//!
//! ```
//! use mcx_encoder::{decompose, BinaryVector};
//!
//! let b: BinaryVector = "11001100".parse().unwrap();
//! let d = decompose(&b).unwrap();
//! assert_eq!(d.controls()[0].to_string(), "I0I");
//! ```
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the `*64` aliases
//! below fix the usual double-precision choice.

pub mod bench;
pub mod bitcore;
pub mod circuit;
pub mod decomposer;
pub mod error;
pub mod pathopt;
pub mod preprocess;
pub mod scalar;
pub mod simulator;

pub use bitcore::{BinaryVector, Control, ControlString};
pub use circuit::{Circuit, Gate};
pub use decomposer::{decompose, Decomposer, Decomposition};
pub use error::{Error, Result};
pub use pathopt::{OrderMode, Tour};
pub use preprocess::{EncodingMatrix, InputVector};
pub use scalar::Scalar;
pub use simulator::{PostSelection, Statevector};

pub type InputVector64 = InputVector<f64>;
pub type InputVector32 = InputVector<f32>;
pub type Statevector64 = Statevector<f64>;
pub type Statevector32 = Statevector<f32>;
pub type PostSelection64 = PostSelection<f64>;
