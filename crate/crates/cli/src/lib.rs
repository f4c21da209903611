// SPDX-License-Identifier: Apache-2.0

//! `vmfg` command-line driver.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use vmfg_core::chain::{
    audit_file, query_record, replay_deployments, Audit, DeployStatus, Ledger, Network,
    NetworkConfig, TxBody,
};
use vmfg_core::demo::run_demo;
use vmfg_core::process::{demo_scenario, demo_spec, run_process, validate_plain};
use vmfg_core::{Error, ProcessSpec, StateSequence};

pub const DEFAULT_LEDGER: &str = "vmfg-ledger.jsonl";

/// Process exit codes. Stable; documented in the README.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const UNKNOWN_CONTRACT: i32 = 4;
    pub const AUDIT: i32 = 5;
    pub const MISMATCH: i32 = 6;
    pub const REJECTED: i32 = 7;
    pub const MISSING_LEDGER: i32 = 8;
}

#[derive(Debug, Parser)]
#[command(name = "vmfg", version, about = "Verifiable manufacturing on a simulated permissioned ledger")]
pub struct Cli {
    /// JSON file with {num_peers, max_block_txs, ledger_path, seed}
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every peer's entropy source
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of full nodes
    #[arg(long, global = true)]
    pub peers: Option<usize>,
    /// Ledger file (JSON lines)
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
    /// Maximum transactions per block
    #[arg(long, global = true)]
    pub max_block_txs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fresh network: deploy the demo contract, run a good and a bad-filehash item
    Demo,
    /// Deploy a verification contract from a ProcessSpec JSON file
    Deploy { spec_file: PathBuf, contract_id: String },
    /// Submit a StateSequence JSON file for verification
    Verify { contract_id: String, sequence_file: PathBuf },
    /// Inspect the persisted ledger
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
    /// Print demo inputs as JSON
    Emit {
        #[command(subcommand)]
        what: EmitWhat,
    },
}

#[derive(Debug, Subcommand)]
pub enum LedgerAction {
    Dump,
    Audit,
    Query { item_id: String },
}

#[derive(Debug, Subcommand)]
pub enum EmitWhat {
    /// The demo ProcessSpec
    Spec,
    /// An emulated run of a demo scenario (good, bad-filehash, bad-config, truncated)
    Sequence {
        scenario: String,
        #[arg(long, default_value = "item-001")]
        item_id: String,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Json(_) | Error::Decode(_) => exit::PARSE,
            Error::UnknownContract(_) => exit::UNKNOWN_CONTRACT,
            Error::CorruptLedger(_) | Error::NonChainingBlock { .. } => exit::AUDIT,
            Error::InvalidSpec(_) | Error::DuplicateContract { .. } | Error::SelfCheckFailed { .. } => {
                exit::REJECTED
            }
            _ => exit::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(exit::FAILURE, e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Merges the config file (if any) with command-line flags.
pub fn resolve_config(cli: &Cli) -> Result<NetworkConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_slice::<NetworkConfig>(&bytes)
                .map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => NetworkConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(peers) = cli.peers {
        config.num_peers = peers;
    }
    if let Some(max) = cli.max_block_txs {
        config.max_block_txs = max;
    }
    if let Some(ledger) = &cli.ledger {
        config.ledger_path = Some(ledger.clone());
    }
    config
        .ledger_path
        .get_or_insert_with(|| PathBuf::from(DEFAULT_LEDGER));
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(err, "error: config: {msg}");
            return exit::PARSE;
        }
    };
    let result = match cli.command {
        Command::Demo => cmd_demo(config, out),
        Command::Deploy {
            spec_file,
            contract_id,
        } => cmd_deploy(config, &spec_file, &contract_id, out),
        Command::Verify {
            contract_id,
            sequence_file,
        } => cmd_verify(config, &contract_id, &sequence_file, out),
        Command::Ledger { action } => cmd_ledger(config, action, out),
        Command::Emit { what } => cmd_emit(what, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn ledger_path(config: &NetworkConfig) -> &Path {
    config
        .ledger_path
        .as_deref()
        .expect("resolve_config always sets a ledger path")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::new(exit::FAILURE, format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Failure::new(exit::PARSE, format!("{what} {}: {e}", path.display())))
}

fn open_existing(config: NetworkConfig) -> Result<Network, Failure> {
    if !ledger_path(&config).exists() {
        return Err(Failure::new(
            exit::MISSING_LEDGER,
            format!("no ledger at {}", ledger_path(&config).display()),
        ));
    }
    Ok(Network::open(config)?)
}

fn cmd_demo(config: NetworkConfig, out: &mut dyn Write) -> CmdResult {
    let path = ledger_path(&config).to_owned();
    let (net, report) = run_demo(config)?;
    write!(out, "{report}")?;
    writeln!(out, "\nledger: {} ({} blocks)", path.display(), net.ledger().height())?;
    Ok(if report.items.iter().any(|i| i.verdict.is_mismatch()) {
        exit::MISMATCH
    } else {
        exit::OK
    })
}

fn cmd_deploy(config: NetworkConfig, spec_file: &Path, contract_id: &str, out: &mut dyn Write) -> CmdResult {
    let spec: ProcessSpec = read_json(spec_file, "spec")?;
    spec.validate()
        .map_err(|e| Failure::new(exit::REJECTED, e.to_string()))?;
    let mut net = Network::open(config)?;
    let tx_id = net.deploy_contract(contract_id, &spec)?;
    writeln!(out, "deployed {contract_id} in tx {tx_id}")?;
    for peer in net.peers() {
        let contract = peer.contract(contract_id).expect("deployed on every peer");
        writeln!(
            out,
            "  {}: compiled {} constraints, setup + prove done, self-check {:?}",
            peer.id(),
            contract.cs.num_constraints(),
            contract.self_check()?
        )?;
    }
    Ok(exit::OK)
}

fn cmd_verify(config: NetworkConfig, contract_id: &str, sequence_file: &Path, out: &mut dyn Write) -> CmdResult {
    let seq: StateSequence = read_json(sequence_file, "sequence")?;
    seq.validate()
        .map_err(|e| Failure::new(exit::PARSE, e.to_string()))?;
    let mut net = open_existing(config)?;
    let outcome = net.verify_item(contract_id, &seq.item_id, &seq)?;
    writeln!(out, "{}: {}", seq.item_id, outcome.verdict)?;
    writeln!(out, "  request tx {}", outcome.request_tx_id)?;
    writeln!(out, "  result  tx {}", outcome.result_tx_id)?;
    if let Some(contract) = net.peers()[0].contract(contract_id) {
        if let Some(step) = validate_plain(&contract.spec, &seq).first_bad_step {
            writeln!(out, "  first failing step: {step}")?;
        }
    }
    Ok(if outcome.verdict.is_mismatch() {
        exit::MISMATCH
    } else {
        exit::OK
    })
}

fn cmd_ledger(config: NetworkConfig, action: LedgerAction, out: &mut dyn Write) -> CmdResult {
    let path = ledger_path(&config);
    if !path.exists() {
        return Err(Failure::new(exit::MISSING_LEDGER, format!("no ledger at {}", path.display())));
    }
    match action {
        LedgerAction::Audit => match audit_file(path)? {
            Audit::Ok { blocks } => {
                writeln!(out, "ok ({blocks} blocks)")?;
                Ok(exit::OK)
            }
            Audit::Bad { index } => {
                writeln!(out, "audit failed at block {index}")?;
                Ok(exit::AUDIT)
            }
        },
        LedgerAction::Query { item_id } => {
            let ledger = Ledger::load(path)?;
            let records = query_record(&ledger, &item_id);
            if records.is_empty() {
                writeln!(out, "no records for {item_id}")?;
            }
            for r in records {
                writeln!(
                    out,
                    "{}  {}  block={}  rho={}  request={}  result={}",
                    r.item_id,
                    r.verdict,
                    r.block_index,
                    r.rho_x.short(),
                    r.request_tx_id.short(),
                    r.result_tx_id.short()
                )?;
            }
            Ok(exit::OK)
        }
        LedgerAction::Dump => {
            let ledger = Ledger::load(path)?;
            dump(&ledger, out)?;
            Ok(exit::OK)
        }
    }
}

fn dump(ledger: &Ledger, out: &mut dyn Write) -> std::io::Result<()> {
    let statuses: std::collections::HashMap<_, _> = replay_deployments(ledger)
        .into_iter()
        .map(|(tx, _, status)| (tx, status))
        .collect();
    for block in ledger.blocks() {
        writeln!(
            out,
            "block {}  ts={}  hash={}  prev={}  txs={}",
            block.index,
            block.timestamp,
            block.block_hash.short(),
            block.prev_hash.short(),
            block.txs.len()
        )?;
        for tx in &block.txs {
            let detail = match &tx.body {
                TxBody::DeployContract { contract_id, spec } => {
                    let status = match statuses.get(&tx.tx_id) {
                        Some(DeployStatus::Deployed) => "valid".to_string(),
                        Some(DeployStatus::Duplicate) => "INVALID: duplicate contract id".to_string(),
                        Some(DeployStatus::InvalidSpec(m)) => format!("INVALID: {m}"),
                        Some(DeployStatus::Aborted { peer_id }) => format!("ABORTED by {peer_id}"),
                        None => "?".to_string(),
                    };
                    format!("contract={contract_id} spec={} steps={} [{status}]", spec.name, spec.len())
                }
                TxBody::VerifyRequest {
                    contract_id,
                    item_id,
                    tuples,
                } => format!("contract={contract_id} item={item_id} tuples={}", tuples.len()),
                TxBody::VerifyResult {
                    request_tx_id,
                    item_id,
                    verdict,
                    endorsements,
                    ..
                } => format!(
                    "item={item_id} verdict={verdict} request={} endorsements={endorsements}",
                    request_tx_id.short()
                ),
            };
            writeln!(out, "  {:<14} tx={}  {detail}", tx.body.kind(), tx.tx_id.short())?;
        }
    }
    Ok(())
}

fn cmd_emit(what: EmitWhat, out: &mut dyn Write) -> CmdResult {
    let json = match what {
        EmitWhat::Spec => serde_json::to_string_pretty(&demo_spec()),
        EmitWhat::Sequence { scenario, item_id } => {
            let faults = demo_scenario(&scenario)
                .ok_or_else(|| Failure::new(exit::USAGE, format!("unknown scenario `{scenario}`")))?
                .faults;
            serde_json::to_string_pretty(&run_process(&demo_spec(), &faults, &item_id)?)
        }
    }
    .map_err(Error::from)?;
    writeln!(out, "{json}")?;
    Ok(exit::OK)
}
