// SPDX-License-Identifier: Apache-2.0

//! In-process permissioned network: one orderer, a roster of full nodes
//! (peers), and the verification flow that connects them.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::contract::{NodeStore, VerificationContract};
use super::ledger::{append_block_line, Block, Ledger};
use super::tx::{FinalVerdict, MismatchReason, Transaction, TxBody};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::process::{ProcessSpec, StateSequence};
use crate::vc::{item_digest, Conformance, Verdict};

pub const DEFAULT_NUM_PEERS: usize = 2;
pub const DEFAULT_MAX_BLOCK_TXS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_peers: usize,
    /// Upper bound on transactions per block (default 10).
    pub max_block_txs: usize,
    /// `None` keeps the ledger in memory only.
    pub ledger_path: Option<PathBuf>,
    /// Fixes every peer's entropy; `None` draws from the OS.
    pub seed: Option<u64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_peers: DEFAULT_NUM_PEERS,
            max_block_txs: DEFAULT_MAX_BLOCK_TXS,
            ledger_path: None,
            seed: None,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_peers == 0 {
            return Err(Error::InvalidSpec("num_peers must be at least 1".into()));
        }
        if self.max_block_txs == 0 {
            return Err(Error::InvalidSpec("max_block_txs must be at least 1".into()));
        }
        Ok(())
    }

    /// Node-local key storage lives beside the ledger file.
    pub fn node_root(&self) -> Option<PathBuf> {
        self.ledger_path.as_ref().map(|p| {
            let mut name = p.file_name().unwrap_or_default().to_os_string();
            name.push(".nodes");
            p.with_file_name(name)
        })
    }

    fn peer_rng(&self, peer_id: &str) -> ChaCha20Rng {
        match self.seed {
            Some(seed) => {
                let digest = Digest::sha256_parts([
                    &b"vmfg-peer-entropy"[..],
                    &seed.to_le_bytes(),
                    peer_id.as_bytes(),
                ]);
                ChaCha20Rng::from_seed(digest.0)
            }
            None => ChaCha20Rng::from_os_rng(),
        }
    }
}

pub fn peer_id(index: usize) -> String {
    format!("peer-{index}")
}

/// A peer's verdict on one request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endorsement {
    pub request_tx_id: Digest,
    pub peer_id: String,
    pub verdict: Conformance,
    pub rho_x: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeployOutcome {
    Deployed,
    Duplicate,
    InvalidSpec(String),
    SelfCheckFailed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeployReceipt {
    pub tx_id: Digest,
    pub contract_id: String,
    pub outcome: DeployOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockReceipt {
    pub deployments: Vec<DeployReceipt>,
    pub endorsements: Vec<Endorsement>,
}

/// Fault injection for consensus tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PeerBehavior {
    #[default]
    Honest,
    /// Reports the opposite verdict on every request.
    InvertVerdict,
    /// Never endorses.
    Silent,
    /// Corrupts its freshly generated proof, so its deployment self-check fails.
    FailSelfCheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PeerStats {
    pub prove_calls: u64,
    pub verify_calls: u64,
}

/// A full node: its own ledger copy, its own contract table and entropy.
pub struct Peer {
    id: String,
    ledger: Ledger,
    contracts: BTreeMap<String, VerificationContract>,
    rng: ChaCha20Rng,
    behavior: PeerBehavior,
    store: Option<NodeStore>,
    stats: PeerStats,
}

impl Peer {
    pub fn new(id: impl Into<String>, rng: ChaCha20Rng, store: Option<NodeStore>) -> Self {
        Self {
            id: id.into(),
            ledger: Ledger::new(),
            contracts: BTreeMap::new(),
            rng,
            behavior: PeerBehavior::Honest,
            store,
            stats: PeerStats::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn stats(&self) -> PeerStats {
        self.stats
    }

    pub fn contract(&self, contract_id: &str) -> Option<&VerificationContract> {
        self.contracts.get(contract_id)
    }

    pub fn set_behavior(&mut self, behavior: PeerBehavior) {
        self.behavior = behavior;
    }

    /// Runs every transaction of `block` and commits it locally. A block that
    /// does not extend the local tip is rejected and nothing changes.
    pub fn execute(&mut self, block: &Block) -> Result<BlockReceipt> {
        self.apply(block, true)
    }

    /// Commits a historical block: deployments are re-established (from the
    /// node store when possible) but requests are not re-endorsed.
    pub fn replay(&mut self, block: &Block) -> Result<()> {
        self.apply(block, false).map(|_| ())
    }

    fn apply(&mut self, block: &Block, live: bool) -> Result<BlockReceipt> {
        if !self.ledger.accepts(block) {
            return Err(Error::NonChainingBlock { index: block.index });
        }
        let mut receipt = BlockReceipt::default();
        for tx in &block.txs {
            match &tx.body {
                TxBody::DeployContract { contract_id, spec } => {
                    let outcome = self.deploy(contract_id, spec)?;
                    receipt.deployments.push(DeployReceipt {
                        tx_id: tx.tx_id,
                        contract_id: contract_id.clone(),
                        outcome,
                    });
                }
                TxBody::VerifyRequest { contract_id, .. } if live => {
                    if let Some(e) = self.endorse(tx, contract_id) {
                        receipt.endorsements.push(e);
                    }
                }
                _ => {}
            }
        }
        self.ledger.append(block.clone())?;
        Ok(receipt)
    }

    fn deploy(&mut self, contract_id: &str, spec: &ProcessSpec) -> Result<DeployOutcome> {
        if self.contracts.contains_key(contract_id) {
            return Ok(DeployOutcome::Duplicate);
        }
        if let Err(e) = spec.validate() {
            return Ok(DeployOutcome::InvalidSpec(e.to_string()));
        }
        let stored = match &self.store {
            Some(store) => store.load(contract_id)?,
            None => None,
        };
        let mut contract = match stored {
            Some(keys) => VerificationContract::with_keys(contract_id, spec, keys)?,
            None => {
                self.stats.prove_calls += 1;
                let c = VerificationContract::compile(contract_id, spec, &mut self.rng)?;
                if let Some(store) = &self.store {
                    store.save(contract_id, &c.keys)?;
                }
                c
            }
        };
        if self.behavior == PeerBehavior::FailSelfCheck {
            contract.keys.proof.h_at_s += crate::ff::FieldElement::ONE;
        }
        if contract.self_check()? != Verdict::Accept {
            if let Some(store) = &self.store {
                store.remove(contract_id)?;
            }
            return Ok(DeployOutcome::SelfCheckFailed);
        }
        self.contracts.insert(contract_id.to_owned(), contract);
        Ok(DeployOutcome::Deployed)
    }

    fn endorse(&mut self, tx: &Transaction, contract_id: &str) -> Option<Endorsement> {
        if self.behavior == PeerBehavior::Silent {
            return None;
        }
        let seq = tx.sequence().and_then(|r| r.ok());
        let (verdict, rho_x) = match (self.contracts.get(contract_id), &seq) {
            (Some(contract), Some(seq)) => {
                self.stats.verify_calls += 1;
                contract.evaluate(seq)
            }
            (None, Some(seq)) => (Conformance::Failed, item_digest(seq)),
            (_, None) => (Conformance::Failed, Digest::sha256(&tx.canonical_bytes())),
        };
        let verdict = match (self.behavior, verdict) {
            (PeerBehavior::InvertVerdict, Conformance::Verified) => Conformance::Failed,
            (PeerBehavior::InvertVerdict, Conformance::Failed) => Conformance::Verified,
            (_, v) => v,
        };
        Some(Endorsement {
            request_tx_id: tx.tx_id,
            peer_id: self.id.clone(),
            verdict,
            rho_x,
        })
    }

    /// Drops a contract whose deployment was aborted elsewhere.
    pub fn abort(&mut self, contract_id: &str) -> Result<()> {
        self.contracts.remove(contract_id);
        if let Some(store) = &self.store {
            store.remove(contract_id)?;
        }
        Ok(())
    }
}

/// Single serialization point: FIFO queue of pending transactions.
#[derive(Debug)]
pub struct Orderer {
    queue: VecDeque<Transaction>,
    height: u64,
    clock: u64,
    tip: Digest,
    next_nonce: u64,
    max_block_txs: usize,
}

impl Orderer {
    pub fn new(max_block_txs: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            height: 0,
            clock: 0,
            tip: Digest::ZERO,
            next_nonce: 0,
            max_block_txs,
        }
    }

    /// Picks up after the last block of `ledger`.
    pub fn resume(ledger: &Ledger, max_block_txs: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            height: ledger.height(),
            clock: ledger.tip_timestamp(),
            tip: ledger.tip_hash(),
            next_nonce: ledger
                .transactions()
                .map(|(_, t)| t.nonce + 1)
                .max()
                .unwrap_or(0),
            max_block_txs,
        }
    }

    pub fn submit(&mut self, body: TxBody) -> Digest {
        let tx = Transaction::new(self.next_nonce, body);
        self.next_nonce += 1;
        let id = tx.tx_id;
        self.queue.push_back(tx);
        id
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    /// Drains up to `max_block_txs` pending transactions into the next block.
    pub fn cut_block(&mut self) -> Option<Block> {
        if self.queue.is_empty() {
            return None;
        }
        let take = self.queue.len().min(self.max_block_txs);
        let txs: Vec<Transaction> = self.queue.drain(..take).collect();
        self.clock += 1;
        let block = Block::new(self.height, self.tip, self.clock, txs);
        self.height += 1;
        self.tip = block.block_hash;
        Some(block)
    }
}

/// Unanimity over the roster; any divergence or silence is a `MISMATCH`.
pub fn consensus_check(roster: &[String], endorsements: &[Endorsement]) -> FinalVerdict {
    let mut by_peer: BTreeMap<&str, &Endorsement> = BTreeMap::new();
    for e in endorsements {
        if by_peer.insert(e.peer_id.as_str(), e).is_some() {
            return FinalVerdict::mismatch(MismatchReason::Disagreement);
        }
    }
    if roster.iter().any(|p| !by_peer.contains_key(p.as_str())) || roster.is_empty() {
        return FinalVerdict::mismatch(MismatchReason::Incomplete);
    }
    let first = by_peer[roster[0].as_str()];
    let unanimous = roster.iter().all(|p| {
        let e = by_peer[p.as_str()];
        e.verdict == first.verdict && e.rho_x == first.rho_x
    });
    match (unanimous, first.verdict) {
        (false, _) => FinalVerdict::mismatch(MismatchReason::Disagreement),
        (true, Conformance::Verified) => FinalVerdict::Verified,
        (true, Conformance::Failed) => FinalVerdict::Failed,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeployStatus {
    Deployed,
    Duplicate,
    InvalidSpec(String),
    Aborted { peer_id: String },
}

/// Deployment validity as any peer derives it from the ledger alone: the
/// first valid deployment of an id wins, later ones are invalid.
pub fn replay_deployments(ledger: &Ledger) -> Vec<(Digest, String, DeployStatus)> {
    let mut seen = BTreeSet::new();
    ledger
        .transactions()
        .filter_map(|(_, tx)| match &tx.body {
            TxBody::DeployContract { contract_id, spec } => {
                let status = if seen.contains(contract_id) {
                    DeployStatus::Duplicate
                } else if let Err(e) = spec.validate() {
                    DeployStatus::InvalidSpec(e.to_string())
                } else {
                    seen.insert(contract_id.clone());
                    DeployStatus::Deployed
                };
                Some((tx.tx_id, contract_id.clone(), status))
            }
            _ => None,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordedResult {
    pub result_tx_id: Digest,
    pub verdict: FinalVerdict,
}

/// Outcome of one verification as seen by the caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemOutcome {
    pub request_tx_id: Digest,
    pub result_tx_id: Digest,
    pub verdict: FinalVerdict,
}

pub struct Network {
    config: NetworkConfig,
    orderer: Orderer,
    peers: Vec<Peer>,
    ledger: Ledger,
    contracts: BTreeSet<String>,
    deployments: HashMap<Digest, DeployStatus>,
    results: HashMap<Digest, RecordedResult>,
}

impl Network {
    /// Boots a fresh network. An existing ledger file and node store at the
    /// configured paths are replaced.
    pub fn create(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        if let Some(path) = &config.ledger_path {
            std::fs::File::create(path)?;
        }
        if let Some(root) = config.node_root() {
            if root.exists() {
                std::fs::remove_dir_all(&root)?;
            }
        }
        Ok(Self::boot(config, Ledger::new()))
    }

    /// Resumes from the configured ledger file, or boots fresh if there is
    /// none.
    pub fn open(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let ledger = match &config.ledger_path {
            Some(path) if path.exists() => Ledger::load(path)?,
            _ => return Self::create(config),
        };
        let mut net = Self::boot(config, Ledger::new());
        for peer in &mut net.peers {
            for block in ledger.blocks() {
                peer.replay(block)?;
            }
        }
        for (tx_id, contract_id, status) in replay_deployments(&ledger) {
            if status == DeployStatus::Deployed {
                net.contracts.insert(contract_id);
            }
            net.deployments.insert(tx_id, status);
        }
        for (_, tx) in ledger.transactions() {
            if let TxBody::VerifyResult {
                request_tx_id,
                verdict,
                ..
            } = &tx.body
            {
                net.results.insert(
                    *request_tx_id,
                    RecordedResult {
                        result_tx_id: tx.tx_id,
                        verdict: *verdict,
                    },
                );
            }
        }
        net.orderer = Orderer::resume(&ledger, net.config.max_block_txs);
        net.ledger = ledger;
        Ok(net)
    }

    fn boot(config: NetworkConfig, ledger: Ledger) -> Self {
        let node_root = config.node_root();
        let peers = (0..config.num_peers)
            .map(|i| {
                let id = peer_id(i);
                let store = node_root.as_ref().map(|r| NodeStore::new(r.join(&id)));
                Peer::new(id.clone(), config.peer_rng(&id), store)
            })
            .collect();
        Self {
            orderer: Orderer::new(config.max_block_txs),
            config,
            peers,
            ledger,
            contracts: BTreeSet::new(),
            deployments: HashMap::new(),
            results: HashMap::new(),
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_path(&self) -> Option<&Path> {
        self.config.ledger_path.as_deref()
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer_mut(&mut self, index: usize) -> &mut Peer {
        &mut self.peers[index]
    }

    pub fn roster(&self) -> Vec<String> {
        self.peers.iter().map(|p| p.id.clone()).collect()
    }

    pub fn orderer(&self) -> &Orderer {
        &self.orderer
    }

    pub fn has_contract(&self, contract_id: &str) -> bool {
        self.contracts.contains(contract_id)
    }

    pub fn deploy_status(&self, tx_id: &Digest) -> Option<&DeployStatus> {
        self.deployments.get(tx_id)
    }

    pub fn result_for(&self, request_tx_id: &Digest) -> Option<&RecordedResult> {
        self.results.get(request_tx_id)
    }

    /// Every peer holds the same blocks as the network ledger.
    pub fn peers_in_sync(&self) -> bool {
        let reference = self.ledger.to_jsonl();
        self.peers.iter().all(|p| p.ledger.to_jsonl() == reference)
    }

    /// Broadcasts a deployment and drives the network until it is committed
    /// and every peer has compiled, set up, proven and self-checked it.
    pub fn deploy_contract(&mut self, contract_id: &str, spec: &ProcessSpec) -> Result<Digest> {
        spec.validate()?;
        let tx_id = self.orderer.submit(TxBody::DeployContract {
            contract_id: contract_id.to_owned(),
            spec: spec.clone(),
        });
        self.run_until_idle()?;
        match self.deployments.get(&tx_id) {
            Some(DeployStatus::Deployed) => Ok(tx_id),
            Some(DeployStatus::Duplicate) => Err(Error::DuplicateContract {
                contract_id: contract_id.to_owned(),
                tx_id: tx_id.to_hex(),
            }),
            Some(DeployStatus::InvalidSpec(msg)) => Err(Error::InvalidSpec(msg.clone())),
            Some(DeployStatus::Aborted { peer_id }) => Err(Error::SelfCheckFailed {
                contract_id: contract_id.to_owned(),
                peer_id: peer_id.clone(),
            }),
            None => unreachable!("deployment {tx_id} was not committed"),
        }
    }

    /// Enqueues a verification request. The request itself is recorded on
    /// chain in the next block.
    pub fn submit_verification(
        &mut self,
        contract_id: &str,
        item_id: &str,
        seq: &StateSequence,
    ) -> Result<Digest> {
        if !self.contracts.contains(contract_id) {
            return Err(Error::UnknownContract(contract_id.to_owned()));
        }
        StateSequence::new(item_id, seq.tuples.clone())?;
        Ok(self.orderer.submit(TxBody::VerifyRequest {
            contract_id: contract_id.to_owned(),
            item_id: item_id.to_owned(),
            tuples: seq.tuples.clone(),
        }))
    }

    /// Enqueues the `VerifyResult` for a committed request.
    pub fn record_result(
        &mut self,
        request_tx_id: Digest,
        verdict: FinalVerdict,
        endorsements: u32,
    ) -> Result<Digest> {
        let (_, request) = self
            .ledger
            .find_tx(&request_tx_id)
            .ok_or_else(|| Error::Decode(format!("no request {request_tx_id} on the ledger")))?;
        let (item_id, rho_x) = match (&request.body, request.sequence()) {
            (TxBody::VerifyRequest { item_id, .. }, Some(seq)) => {
                let rho = seq.map_or_else(|_| Digest::sha256(&request.canonical_bytes()), |s| item_digest(&s));
                (item_id.clone(), rho)
            }
            _ => {
                return Err(Error::Decode(format!(
                    "transaction {request_tx_id} is not a verification request"
                )))
            }
        };
        Ok(self.orderer.submit(TxBody::VerifyResult {
            request_tx_id,
            item_id,
            verdict,
            rho_x,
            endorsements,
        }))
    }

    /// Cuts one block, has every peer execute it, and settles its
    /// deployments and requests. Returns the committed block, or `None` when
    /// nothing was pending.
    pub fn commit_round(&mut self) -> Result<Option<Block>> {
        let Some(block) = self.orderer.cut_block() else {
            return Ok(None);
        };
        let receipts: Vec<BlockReceipt> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .peers
                .iter_mut()
                .map(|peer| {
                    let block = &block;
                    scope.spawn(move || peer.execute(block))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("peer thread panicked"))
                .collect::<Result<_>>()
        })?;

        self.ledger.append(block.clone())?;
        if let Some(path) = &self.config.ledger_path {
            append_block_line(path, &block)?;
        }

        for tx in &block.txs {
            match &tx.body {
                TxBody::DeployContract { contract_id, .. } => {
                    let status = self.settle_deployment(tx.tx_id, contract_id, &receipts)?;
                    self.deployments.insert(tx.tx_id, status);
                }
                TxBody::VerifyRequest { .. } => {
                    let endorsements: Vec<Endorsement> = receipts
                        .iter()
                        .flat_map(|r| &r.endorsements)
                        .filter(|e| e.request_tx_id == tx.tx_id)
                        .cloned()
                        .collect();
                    let verdict = consensus_check(&self.roster(), &endorsements);
                    self.record_result(tx.tx_id, verdict, endorsements.len() as u32)?;
                }
                TxBody::VerifyResult {
                    request_tx_id,
                    verdict,
                    ..
                } => {
                    self.results.insert(
                        *request_tx_id,
                        RecordedResult {
                            result_tx_id: tx.tx_id,
                            verdict: *verdict,
                        },
                    );
                }
            }
        }
        Ok(Some(block))
    }

    fn settle_deployment(
        &mut self,
        tx_id: Digest,
        contract_id: &str,
        receipts: &[BlockReceipt],
    ) -> Result<DeployStatus> {
        let outcomes: Vec<(&str, &DeployOutcome)> = self
            .peers
            .iter()
            .zip(receipts)
            .filter_map(|(p, r)| {
                r.deployments
                    .iter()
                    .find(|d| d.tx_id == tx_id)
                    .map(|d| (p.id.as_str(), &d.outcome))
            })
            .collect();
        if let Some((peer_id, _)) = outcomes
            .iter()
            .find(|(_, o)| **o == DeployOutcome::SelfCheckFailed)
        {
            let peer_id = peer_id.to_string();
            for peer in &mut self.peers {
                peer.abort(contract_id)?;
            }
            return Ok(DeployStatus::Aborted { peer_id });
        }
        Ok(match outcomes.first().map(|(_, o)| *o) {
            Some(DeployOutcome::Deployed) => {
                self.contracts.insert(contract_id.to_owned());
                DeployStatus::Deployed
            }
            Some(DeployOutcome::InvalidSpec(msg)) => DeployStatus::InvalidSpec(msg.clone()),
            _ => DeployStatus::Duplicate,
        })
    }

    /// Commits blocks until the orderer queue is empty, including the result
    /// transactions that requests give rise to.
    pub fn run_until_idle(&mut self) -> Result<Vec<Block>> {
        let mut committed = Vec::new();
        while let Some(block) = self.commit_round()? {
            committed.push(block);
        }
        Ok(committed)
    }

    /// Submit, order, execute, agree, and record one item.
    pub fn verify_item(
        &mut self,
        contract_id: &str,
        item_id: &str,
        seq: &StateSequence,
    ) -> Result<ItemOutcome> {
        let request_tx_id = self.submit_verification(contract_id, item_id, seq)?;
        self.run_until_idle()?;
        let recorded = self
            .results
            .get(&request_tx_id)
            .expect("every committed request receives a result");
        Ok(ItemOutcome {
            request_tx_id,
            result_tx_id: recorded.result_tx_id,
            verdict: recorded.verdict,
        })
    }
}
