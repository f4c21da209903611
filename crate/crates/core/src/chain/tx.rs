// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;
use crate::error::Result;
use crate::process::{canonical_encode, ProcessSpec, StateSequence, StateTuple};

const KIND_DEPLOY: u8 = 0;
const KIND_REQUEST: u8 = 1;
const KIND_RESULT: u8 = 2;

/// Why a request ended in `MISMATCH`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MismatchReason {
    /// Peers returned different verdicts.
    Disagreement,
    /// At least one roster peer did not endorse.
    Incomplete,
}

/// Network-level verdict recorded for one verification request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FinalVerdict {
    #[serde(rename = "VERIFIED")]
    Verified,
    #[serde(rename = "FAILED")]
    Failed,
    #[serde(rename = "MISMATCH")]
    Mismatch,
    #[serde(rename = "MISMATCH_INCOMPLETE")]
    MismatchIncomplete,
}

impl FinalVerdict {
    pub fn mismatch(reason: MismatchReason) -> Self {
        match reason {
            MismatchReason::Disagreement => FinalVerdict::Mismatch,
            MismatchReason::Incomplete => FinalVerdict::MismatchIncomplete,
        }
    }

    pub fn is_mismatch(self) -> bool {
        matches!(self, FinalVerdict::Mismatch | FinalVerdict::MismatchIncomplete)
    }

    fn code(self) -> u8 {
        match self {
            FinalVerdict::Verified => 0,
            FinalVerdict::Failed => 1,
            FinalVerdict::Mismatch => 2,
            FinalVerdict::MismatchIncomplete => 3,
        }
    }
}

impl fmt::Display for FinalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinalVerdict::Verified => "VERIFIED",
            FinalVerdict::Failed => "FAILED",
            FinalVerdict::Mismatch => "MISMATCH",
            FinalVerdict::MismatchIncomplete => "MISMATCH(incomplete)",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum TxBody {
    DeployContract {
        contract_id: String,
        spec: ProcessSpec,
    },
    VerifyRequest {
        contract_id: String,
        item_id: String,
        tuples: Vec<StateTuple>,
    },
    /// Only the verdict, the item and its digest reach the ledger; proofs and
    /// keys never do.
    VerifyResult {
        request_tx_id: Digest,
        item_id: String,
        verdict: FinalVerdict,
        rho_x: Digest,
        endorsements: u32,
    },
}

impl TxBody {
    pub fn kind(&self) -> &'static str {
        match self {
            TxBody::DeployContract { .. } => "DeployContract",
            TxBody::VerifyRequest { .. } => "VerifyRequest",
            TxBody::VerifyResult { .. } => "VerifyResult",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub tx_id: Digest,
    /// Submission sequence number; keeps otherwise identical submissions
    /// distinct.
    pub nonce: u64,
    pub body: TxBody,
}

fn put_lp(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

/// Kind tag, nonce (u64 LE), then the body fields in declaration order.
/// Variable-length fields carry a u32 LE length prefix; digests are raw
/// 32 bytes, the verdict one byte and the endorsement count a u32 LE.
pub fn canonical_bytes(nonce: u64, body: &TxBody) -> Vec<u8> {
    let mut out = Vec::new();
    match body {
        TxBody::DeployContract { contract_id, spec } => {
            out.push(KIND_DEPLOY);
            out.extend_from_slice(&nonce.to_le_bytes());
            put_lp(&mut out, contract_id.as_bytes());
            put_lp(&mut out, &spec.canonical_bytes());
        }
        TxBody::VerifyRequest {
            contract_id,
            item_id,
            tuples,
        } => {
            out.push(KIND_REQUEST);
            out.extend_from_slice(&nonce.to_le_bytes());
            put_lp(&mut out, contract_id.as_bytes());
            put_lp(&mut out, item_id.as_bytes());
            let seq = StateSequence {
                item_id: item_id.clone(),
                tuples: tuples.clone(),
            };
            put_lp(&mut out, &canonical_encode(&seq));
        }
        TxBody::VerifyResult {
            request_tx_id,
            item_id,
            verdict,
            rho_x,
            endorsements,
        } => {
            out.push(KIND_RESULT);
            out.extend_from_slice(&nonce.to_le_bytes());
            out.extend_from_slice(request_tx_id.as_bytes());
            put_lp(&mut out, item_id.as_bytes());
            out.push(verdict.code());
            out.extend_from_slice(rho_x.as_bytes());
            out.extend_from_slice(&endorsements.to_le_bytes());
        }
    }
    out
}

impl Transaction {
    pub fn new(nonce: u64, body: TxBody) -> Self {
        let tx_id = Digest::sha256(&canonical_bytes(nonce, &body));
        Self { tx_id, nonce, body }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_bytes(self.nonce, &self.body)
    }

    pub fn id_is_valid(&self) -> bool {
        Digest::sha256(&self.canonical_bytes()) == self.tx_id
    }

    /// The sequence carried by a `VerifyRequest`.
    pub fn sequence(&self) -> Option<Result<StateSequence>> {
        match &self.body {
            TxBody::VerifyRequest { item_id, tuples, .. } => {
                Some(StateSequence::new(item_id.clone(), tuples.clone()))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{demo_spec, AuxData};

    #[test]
    fn request_bytes_layout() {
        let body = TxBody::VerifyRequest {
            contract_id: "c".into(),
            item_id: "i".into(),
            tuples: vec![StateTuple::new(0, AuxData::Empty)],
        };
        let expected: Vec<u8> = [
            &[1u8][..],
            &7u64.to_le_bytes(),
            &[1, 0, 0, 0, b'c'],
            &[1, 0, 0, 0, b'i'],
            &[9, 0, 0, 0],
            &[1, 0, 0, 0, 0, 0, 0, 0, 0],
        ]
        .concat();
        assert_eq!(canonical_bytes(7, &body), expected);
    }

    #[test]
    fn result_bytes_layout() {
        let req = Digest([0xaa; 32]);
        let rho = Digest([0xbb; 32]);
        let body = TxBody::VerifyResult {
            request_tx_id: req,
            item_id: "it".into(),
            verdict: FinalVerdict::Failed,
            rho_x: rho,
            endorsements: 2,
        };
        let bytes = canonical_bytes(0, &body);
        assert_eq!(bytes.len(), 1 + 8 + 32 + 4 + 2 + 1 + 32 + 4);
        assert_eq!(bytes[0], 2);
        assert_eq!(&bytes[9..41], &[0xaa; 32]);
        assert_eq!(bytes[47], 1);
        assert_eq!(&bytes[bytes.len() - 4..], &[2, 0, 0, 0]);
    }

    #[test]
    fn nonce_distinguishes_identical_bodies() {
        let body = TxBody::DeployContract {
            contract_id: "c".into(),
            spec: demo_spec(),
        };
        let a = Transaction::new(0, body.clone());
        let b = Transaction::new(1, body);
        assert_ne!(a.tx_id, b.tx_id);
        assert!(a.id_is_valid());
    }

    #[test]
    fn result_json_has_no_proof_material() {
        let tx = Transaction::new(
            3,
            TxBody::VerifyResult {
                request_tx_id: Digest::ZERO,
                item_id: "item-001".into(),
                verdict: FinalVerdict::Verified,
                rho_x: Digest::ZERO,
                endorsements: 2,
            },
        );
        let json = serde_json::to_value(&tx).unwrap();
        let fields: Vec<&String> = json["body"]["VerifyResult"].as_object().unwrap().keys().collect();
        assert_eq!(fields, ["endorsements", "item_id", "request_tx_id", "rho_x", "verdict"]);
        let text = json.to_string();
        for forbidden in ["a_w", "h_at_s", "secret_point", "powers_of_s"] {
            assert!(!text.contains(forbidden));
        }
        let back: Transaction = serde_json::from_value(json).unwrap();
        assert_eq!(back, tx);
    }

    #[test]
    fn verdict_display() {
        assert_eq!(FinalVerdict::Verified.to_string(), "VERIFIED");
        assert_eq!(FinalVerdict::mismatch(MismatchReason::Incomplete).to_string(), "MISMATCH(incomplete)");
        assert!(FinalVerdict::Mismatch.is_mismatch());
    }
}
