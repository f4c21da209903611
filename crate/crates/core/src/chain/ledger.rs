// SPDX-License-Identifier: Apache-2.0

//! Hash-chained block store, persisted as JSON lines (one block per line).

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tx::{FinalVerdict, Transaction, TxBody};
use crate::digest::Digest;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Digest,
    /// Logical clock value, not wall time.
    pub timestamp: u64,
    pub txs: Vec<Transaction>,
    pub block_hash: Digest,
}

impl Block {
    pub fn new(index: u64, prev_hash: Digest, timestamp: u64, txs: Vec<Transaction>) -> Self {
        let block_hash = Self::compute_hash(index, &prev_hash, timestamp, &txs);
        Self {
            index,
            prev_hash,
            timestamp,
            txs,
            block_hash,
        }
    }

    /// SHA-256 over index (u64 LE), previous hash, timestamp (u64 LE) and the
    /// concatenated canonical bytes of every transaction.
    pub fn compute_hash(index: u64, prev_hash: &Digest, timestamp: u64, txs: &[Transaction]) -> Digest {
        let tx_bytes: Vec<Vec<u8>> = txs.iter().map(Transaction::canonical_bytes).collect();
        let header = [
            &index.to_le_bytes()[..],
            prev_hash.as_bytes(),
            &timestamp.to_le_bytes(),
        ];
        Digest::sha256_parts(header.into_iter().chain(tx_bytes.iter().map(Vec::as_slice)))
    }

    /// Hash and every transaction id recompute to their stored values.
    pub fn is_self_consistent(&self) -> bool {
        self.block_hash == Self::compute_hash(self.index, &self.prev_hash, self.timestamp, &self.txs)
            && self.txs.iter().all(Transaction::id_is_valid)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("block serialization is infallible")
    }
}

/// Result of auditing a ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Audit {
    Ok { blocks: u64 },
    Bad { index: u64 },
}

impl Audit {
    pub fn is_ok(&self) -> bool {
        matches!(self, Audit::Ok { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub item_id: String,
    pub verdict: FinalVerdict,
    pub rho_x: Digest,
    pub request_tx_id: Digest,
    pub result_tx_id: Digest,
    pub block_index: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    blocks: Vec<Block>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn tip_hash(&self) -> Digest {
        self.blocks.last().map_or(Digest::ZERO, |b| b.block_hash)
    }

    pub fn tip_timestamp(&self) -> u64 {
        self.blocks.last().map_or(0, |b| b.timestamp)
    }

    pub fn num_transactions(&self) -> u64 {
        self.blocks.iter().map(|b| b.txs.len() as u64).sum()
    }

    /// Whether `block` would extend this ledger.
    pub fn accepts(&self, block: &Block) -> bool {
        block.index == self.height() && block.prev_hash == self.tip_hash() && block.is_self_consistent()
    }

    pub fn append(&mut self, block: Block) -> Result<()> {
        if !self.accepts(&block) {
            return Err(Error::NonChainingBlock { index: block.index });
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn transactions(&self) -> impl Iterator<Item = (&Block, &Transaction)> {
        self.blocks.iter().flat_map(|b| b.txs.iter().map(move |t| (b, t)))
    }

    pub fn find_tx(&self, tx_id: &Digest) -> Option<(&Block, &Transaction)> {
        self.transactions().find(|(_, t)| t.tx_id == *tx_id)
    }

    pub fn to_jsonl(&self) -> String {
        self.blocks.iter().map(|b| b.to_json_line() + "\n").collect()
    }

    /// Parses JSON lines without checking the hash chain.
    pub fn parse_jsonl(bytes: &[u8]) -> std::result::Result<Self, u64> {
        let blocks = lines(bytes)
            .enumerate()
            .map(|(i, line)| serde_json::from_slice(line).map_err(|_| i as u64))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { blocks })
    }

    /// Loads and audits a ledger file.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let ledger = Self::parse_jsonl(&bytes).map_err(Error::CorruptLedger)?;
        match audit_chain(&ledger) {
            Audit::Ok { .. } => Ok(ledger),
            Audit::Bad { index } => Err(Error::CorruptLedger(index)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        file.sync_all()?;
        Ok(())
    }
}

fn lines(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    let trimmed = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let empty = trimmed.is_empty();
    trimmed.split(|&b| b == b'\n').filter(move |_| !empty)
}

/// Appends one block line to a ledger file.
pub fn append_block_line(path: &Path, block: &Block) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all((block.to_json_line() + "\n").as_bytes())?;
    file.sync_data()?;
    Ok(())
}

/// Recomputes every hash and link; reports the first block that fails.
pub fn audit_chain(ledger: &Ledger) -> Audit {
    let mut prev = Digest::ZERO;
    for (pos, block) in ledger.blocks.iter().enumerate() {
        if block.index != pos as u64 || block.prev_hash != prev || !block.is_self_consistent() {
            return Audit::Bad { index: pos as u64 };
        }
        prev = block.block_hash;
    }
    Audit::Ok {
        blocks: ledger.height(),
    }
}

/// Audits serialized JSON lines; a line that no longer parses is reported
/// at its own index.
pub fn audit_jsonl(bytes: &[u8]) -> Audit {
    let mut ledger = Ledger::new();
    for (i, line) in lines(bytes).enumerate() {
        match serde_json::from_slice::<Block>(line) {
            Ok(block) => ledger.blocks.push(block),
            Err(_) => {
                return match audit_chain(&ledger) {
                    bad @ Audit::Bad { .. } => bad,
                    Audit::Ok { .. } => Audit::Bad { index: i as u64 },
                }
            }
        }
    }
    audit_chain(&ledger)
}

pub fn audit_file(path: &Path) -> Result<Audit> {
    Ok(audit_jsonl(&std::fs::read(path)?))
}

/// All recorded results for `item_id`, in chain order.
pub fn query_record(ledger: &Ledger, item_id: &str) -> Vec<VerificationRecord> {
    ledger
        .transactions()
        .filter_map(|(block, tx)| match &tx.body {
            TxBody::VerifyResult {
                request_tx_id,
                item_id: id,
                verdict,
                rho_x,
                ..
            } if id == item_id => Some(VerificationRecord {
                item_id: id.clone(),
                verdict: *verdict,
                rho_x: *rho_x,
                request_tx_id: *request_tx_id,
                result_tx_id: tx.tx_id,
                block_index: block.index,
            }),
            _ => None,
        })
        .collect()
}

/// Every `VerifyResult` on the ledger, in chain order.
pub fn all_records(ledger: &Ledger) -> Vec<VerificationRecord> {
    ledger
        .transactions()
        .filter_map(|(block, tx)| match &tx.body {
            TxBody::VerifyResult {
                request_tx_id,
                item_id,
                verdict,
                rho_x,
                ..
            } => Some(VerificationRecord {
                item_id: item_id.clone(),
                verdict: *verdict,
                rho_x: *rho_x,
                request_tx_id: *request_tx_id,
                result_tx_id: tx.tx_id,
                block_index: block.index,
            }),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::tx::TxBody;
    use crate::process::demo_spec;

    fn result_tx(nonce: u64, item: &str, verdict: FinalVerdict) -> Transaction {
        Transaction::new(
            nonce,
            TxBody::VerifyResult {
                request_tx_id: Digest::sha256(&nonce.to_le_bytes()),
                item_id: item.into(),
                verdict,
                rho_x: Digest::sha256(item.as_bytes()),
                endorsements: 2,
            },
        )
    }

    fn sample() -> Ledger {
        let mut ledger = Ledger::new();
        let deploy = Transaction::new(
            0,
            TxBody::DeployContract {
                contract_id: "c".into(),
                spec: demo_spec(),
            },
        );
        let batches = vec![
            vec![deploy],
            vec![result_tx(1, "a", FinalVerdict::Verified)],
            vec![result_tx(2, "b", FinalVerdict::Failed), result_tx(3, "a", FinalVerdict::Verified)],
        ];
        for (i, txs) in batches.into_iter().enumerate() {
            let block = Block::new(i as u64, ledger.tip_hash(), i as u64 + 1, txs);
            ledger.append(block).unwrap();
        }
        ledger
    }

    #[test]
    fn genesis_links_to_zero() {
        let ledger = sample();
        assert_eq!(ledger.blocks()[0].prev_hash, Digest::ZERO);
        assert_eq!(audit_chain(&ledger), Audit::Ok { blocks: 3 });
    }

    #[test]
    fn append_rejects_non_chaining() {
        let mut ledger = sample();
        let bad = Block::new(3, Digest([1; 32]), 4, vec![]);
        assert!(matches!(ledger.append(bad), Err(Error::NonChainingBlock { index: 3 })));
        let wrong_index = Block::new(5, ledger.tip_hash(), 4, vec![]);
        assert!(ledger.append(wrong_index).is_err());
        assert_eq!(ledger.height(), 3);
    }

    #[test]
    fn audit_detects_prev_hash_change() {
        let mut ledger = sample();
        ledger.blocks[1].prev_hash = Digest([9; 32]);
        assert_eq!(audit_chain(&ledger), Audit::Bad { index: 1 });
    }

    #[test]
    fn audit_detects_tx_mutation() {
        let mut ledger = sample();
        if let TxBody::VerifyResult { endorsements, .. } = &mut ledger.blocks[2].txs[0].body {
            *endorsements = 3;
        }
        assert_eq!(audit_chain(&ledger), Audit::Bad { index: 2 });
    }

    #[test]
    fn jsonl_round_trip_and_parse_failure_index() {
        let ledger = sample();
        let text = ledger.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(Ledger::parse_jsonl(text.as_bytes()).unwrap(), ledger);
        let mut bytes = text.into_bytes();
        let second_line = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
        bytes[second_line] = b'[';
        assert_eq!(audit_jsonl(&bytes), Audit::Bad { index: 1 });
        assert_eq!(audit_jsonl(b""), Audit::Ok { blocks: 0 });
    }

    #[test]
    fn query_by_item() {
        let ledger = sample();
        let a = query_record(&ledger, "a");
        assert_eq!(a.len(), 2);
        assert!(a[0].block_index < a[1].block_index);
        assert_eq!(query_record(&ledger, "b")[0].verdict, FinalVerdict::Failed);
        assert!(query_record(&ledger, "zzz").is_empty());
        assert_eq!(all_records(&ledger).len(), 3);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let ledger = sample();
        ledger.save(&path).unwrap();
        assert_eq!(Ledger::load(&path).unwrap(), ledger);
        let extra = Block::new(3, ledger.tip_hash(), 9, vec![]);
        append_block_line(&path, &extra).unwrap();
        assert_eq!(Ledger::load(&path).unwrap().height(), 4);
    }
}
