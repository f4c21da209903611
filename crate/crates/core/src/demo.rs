// SPDX-License-Identifier: Apache-2.0

//! The milling-cell scenario end to end: deploy the demo contract, run a good
//! and a faulted item through the network, and report what landed on chain.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::chain::{FinalVerdict, Network, NetworkConfig};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::process::{
    demo_scenario, demo_spec, run_process, validate_plain, AuxData, FaultSpec, ProcessSpec,
    StateSequence,
};

pub const DEMO_CONTRACT_ID: &str = "cnc-bracket";

/// Scenarios run by the demo, with the item id each one is stamped with.
pub const DEMO_RUNS: [(&str, &str); 2] = [("good", "item-001"), ("bad-filehash", "item-002")];

const DEMO_STEP_NAMES: [&str; 6] = ["init", "read-file", "read-config", "scan", "inspection", "end"];

#[derive(Clone, Debug, Serialize)]
pub struct ItemReport {
    pub item_id: String,
    pub scenario: String,
    pub faults: Vec<FaultSpec>,
    pub verdict: FinalVerdict,
    /// First step the plain validator rejects, if any.
    pub failing_step: Option<usize>,
    pub request_tx_id: Digest,
    pub result_tx_id: Digest,
    pub sequence: StateSequence,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub contract_id: String,
    pub deploy_tx_id: Digest,
    pub items: Vec<ItemReport>,
}

/// Runs one named scenario of the demo fault menu through `net`.
pub fn run_scenario(
    net: &mut Network,
    contract_id: &str,
    spec: &ProcessSpec,
    scenario: &str,
    item_id: &str,
) -> Result<ItemReport> {
    let faults = demo_scenario(scenario)
        .ok_or_else(|| Error::InvalidFault(format!("unknown scenario `{scenario}`")))?
        .faults;
    let seq = run_process(spec, &faults, item_id)?;
    let outcome = net.verify_item(contract_id, item_id, &seq)?;
    Ok(ItemReport {
        item_id: item_id.to_owned(),
        scenario: scenario.to_owned(),
        faults,
        verdict: outcome.verdict,
        failing_step: validate_plain(spec, &seq).first_bad_step,
        request_tx_id: outcome.request_tx_id,
        result_tx_id: outcome.result_tx_id,
        sequence: seq,
    })
}

/// Boots a fresh network, deploys the demo contract and runs the good and
/// bad-filehash scenarios. The network is returned alongside the report so
/// callers can inspect the ledger and peers.
pub fn run_demo(config: NetworkConfig) -> Result<(Network, ScenarioReport)> {
    let mut net = Network::create(config)?;
    let spec = demo_spec();
    let deploy_tx_id = net.deploy_contract(DEMO_CONTRACT_ID, &spec)?;
    let items = DEMO_RUNS
        .iter()
        .map(|(scenario, item)| run_scenario(&mut net, DEMO_CONTRACT_ID, &spec, scenario, item))
        .collect::<Result<_>>()?;
    Ok((
        net,
        ScenarioReport {
            contract_id: DEMO_CONTRACT_ID.to_owned(),
            deploy_tx_id,
            items,
        },
    ))
}

fn describe_aux(aux: &AuxData) -> String {
    match aux {
        AuxData::Empty => "-".into(),
        AuxData::Int(v) => v.to_string(),
        AuxData::Str(s) if s.len() > 20 => format!("\"{}…\"", &s[..s.floor_char_boundary(16)]),
        AuxData::Str(s) => format!("\"{s}\""),
    }
}

/// Textual rendering of one item; the failing step is marked with `>>`.
pub fn render_item(item: &ItemReport, out: &mut String) {
    let _ = writeln!(
        out,
        "{}  scenario={}  verdict={}  request={}  result={}",
        item.item_id,
        item.scenario,
        item.verdict,
        item.request_tx_id.short(),
        item.result_tx_id.short()
    );
    for (i, t) in item.sequence.tuples.iter().enumerate() {
        let name = DEMO_STEP_NAMES.get(i).copied().unwrap_or("step");
        let mark = if item.failing_step == Some(i) { ">>" } else { "  " };
        let _ = writeln!(out, "  {mark} [{i}] {name:<12} state={:<3} aux={}", t.state, describe_aux(&t.aux));
    }
    if let Some(step) = item.failing_step {
        if step >= item.sequence.len() {
            let _ = writeln!(out, "  >> [{step}] sequence ends early");
        }
        let _ = writeln!(out, "  failing step: {step}");
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "contract {} deployed in tx {}", self.contract_id, self.deploy_tx_id.short());
        for item in &self.items {
            out.push('\n');
            render_item(item, &mut out);
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::query_record;

    #[test]
    fn demo_report_matches_ledger() {
        let (net, report) = run_demo(NetworkConfig { seed: Some(5), ..Default::default() }).unwrap();
        assert_eq!(report.items.len(), 2);
        assert_eq!(report.items[0].verdict, FinalVerdict::Verified);
        assert_eq!(report.items[1].verdict, FinalVerdict::Failed);
        assert_eq!(report.items[1].failing_step, Some(1));
        for item in &report.items {
            let records = query_record(net.ledger(), &item.item_id);
            assert_eq!(records.len(), 1);
            assert_eq!(records[0].verdict, item.verdict);
        }
        let text = report.to_string();
        assert!(text.contains(">> [1] read-file"));
        assert!(text.contains("verdict=VERIFIED"));
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let mut net = Network::create(NetworkConfig { seed: Some(1), ..Default::default() }).unwrap();
        net.deploy_contract(DEMO_CONTRACT_ID, &demo_spec()).unwrap();
        assert!(run_scenario(&mut net, DEMO_CONTRACT_ID, &demo_spec(), "nope", "i").is_err());
    }
}
