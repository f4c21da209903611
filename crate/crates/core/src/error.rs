// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero in the prime field")]
    DivisionByZero,

    #[error("division by the zero polynomial")]
    ZeroPolynomialDivisor,

    #[error("duplicate interpolation x-coordinate {0}")]
    DuplicateAbscissa(String),

    #[error("invalid process spec: {0}")]
    InvalidSpec(String),

    #[error("invalid state sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid fault: {0}")]
    InvalidFault(String),

    #[error("malformed encoding: {0}")]
    Decode(String),

    #[error("length mismatch for {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("specification does not satisfy its own circuit")]
    UnsatisfiedWitness,

    #[error("unknown contract `{0}`")]
    UnknownContract(String),

    #[error("contract `{contract_id}` already deployed; transaction {tx_id} recorded as invalid")]
    DuplicateContract { contract_id: String, tx_id: String },

    #[error("deployment of `{contract_id}` aborted: self-check failed on {peer_id}")]
    SelfCheckFailed { contract_id: String, peer_id: String },

    #[error("block {index} does not chain onto the local ledger tip")]
    NonChainingBlock { index: u64 },

    #[error("ledger integrity violation at block {0}")]
    CorruptLedger(u64),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
