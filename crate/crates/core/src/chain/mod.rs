// SPDX-License-Identifier: Apache-2.0

//! Simulated permissioned blockchain hosting verification contracts.

mod contract;
mod ledger;
mod network;
mod tx;

pub use contract::{ContractKeys, NodeStore, VerificationContract};
pub use ledger::{
    all_records, append_block_line, audit_chain, audit_file, audit_jsonl, query_record, Audit,
    Block, Ledger, VerificationRecord,
};
pub use network::{
    consensus_check, peer_id, replay_deployments, BlockReceipt, DeployOutcome, DeployReceipt,
    DeployStatus, Endorsement, ItemOutcome, Network, NetworkConfig, Orderer, Peer, PeerBehavior,
    PeerStats, RecordedResult, DEFAULT_MAX_BLOCK_TXS, DEFAULT_NUM_PEERS,
};
pub use tx::{canonical_bytes, FinalVerdict, MismatchReason, Transaction, TxBody};
