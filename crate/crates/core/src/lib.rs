// SPDX-License-Identifier: Apache-2.0

//! Verifiable manufacturing on a simulated permissioned ledger.
//!
//! A process spec is compiled to a set-membership R1CS, reduced to a QAP and
//! proven once per node. Every manufactured item's state sequence is then
//! checked against that single proof by each node's verification contract,
//! and the agreed verdict is written to a hash-chained ledger.

pub mod chain;
pub mod circuit;
pub mod demo;
pub mod digest;
pub mod error;
pub mod ff;
pub mod process;
pub mod vc;

pub use digest::Digest;
pub use error::{Error, Result};
pub use ff::{FieldElement, Polynomial, MODULUS};
pub use process::{AuxData, FaultSpec, ProcessSpec, StateSequence, StateTuple, StepSpec};
pub use vc::{Conformance, Proof, Verdict};
