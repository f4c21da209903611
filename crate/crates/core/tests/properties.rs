// SPDX-License-Identifier: Apache-2.0

use num_bigint::BigUint;
use proptest::prelude::*;

use vmfg_core::chain::{audit_file, query_record, Audit, FinalVerdict, Network, NetworkConfig};
use vmfg_core::demo::{run_demo, DEMO_CONTRACT_ID};
use vmfg_core::process::{canonical_decode, canonical_encode, demo_spec, run_process};
use vmfg_core::{AuxData, FieldElement, Polynomial, StateSequence, StateTuple, MODULUS};

fn fe() -> impl Strategy<Value = FieldElement> {
    (0..MODULUS).prop_map(FieldElement::new)
}

fn aux() -> impl Strategy<Value = AuxData> {
    prop_oneof![
        Just(AuxData::Empty),
        (0..MODULUS).prop_map(AuxData::Int),
        "[a-zA-Z0-9 ._-]{0,40}".prop_map(AuxData::Str),
    ]
}

fn sequence() -> impl Strategy<Value = StateSequence> {
    (
        "[a-z0-9-]{1,16}",
        prop::collection::vec((any::<u32>(), aux()), 1..10),
    )
        .prop_map(|(id, tuples)| {
            StateSequence::new(id, tuples.into_iter().map(|(s, a)| StateTuple::new(s, a)).collect()).unwrap()
        })
}

proptest! {
    #[test]
    fn mul_matches_bigint(a in fe(), b in fe()) {
        let p = BigUint::from(MODULUS);
        let expected = (BigUint::from(a.value()) * BigUint::from(b.value())) % p;
        prop_assert_eq!(BigUint::from((a * b).value()), expected);
    }

    #[test]
    fn pow_matches_bigint(a in fe(), e in any::<u64>()) {
        let expected = BigUint::from(a.value()).modpow(&BigUint::from(e), &BigUint::from(MODULUS));
        prop_assert_eq!(BigUint::from(a.pow(e).value()), expected);
    }

    #[test]
    fn hex_and_le_bytes_round_trip(a in fe()) {
        prop_assert_eq!(FieldElement::from_hex(&a.to_hex()).unwrap(), a);
        prop_assert_eq!(FieldElement::from_le_bytes(a.to_le_bytes()).unwrap(), a);
    }

    #[test]
    fn canonical_encoding_round_trips(seq in sequence()) {
        let bytes = canonical_encode(&seq);
        prop_assert_eq!(canonical_decode(&bytes, &seq.item_id).unwrap(), seq);
    }

    #[test]
    fn sequence_json_round_trips(seq in sequence()) {
        let json = serde_json::to_string(&seq).unwrap();
        prop_assert_eq!(serde_json::from_str::<StateSequence>(&json).unwrap(), seq);
    }

    #[test]
    fn product_of_linear_factors_vanishes(roots in prop::collection::vec(fe(), 1..8)) {
        let p = Polynomial::from_roots(&roots);
        prop_assert_eq!(p.degree(), Some(roots.len()));
        for r in &roots {
            prop_assert!(p.eval(*r).is_zero());
        }
    }
}

#[test]
fn reopened_network_resumes_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let config = NetworkConfig {
        seed: Some(21),
        ledger_path: Some(dir.path().join("ledger.jsonl")),
        ..NetworkConfig::default()
    };
    let (net, _) = run_demo(config.clone()).unwrap();
    let height = net.ledger().height();
    drop(net);

    let mut net = Network::open(config.clone()).unwrap();
    assert_eq!(net.ledger().height(), height);
    assert!(net.has_contract(DEMO_CONTRACT_ID));
    let seq = run_process(&demo_spec(), &[], "item-003").unwrap();
    let outcome = net.verify_item(DEMO_CONTRACT_ID, "item-003", &seq).unwrap();
    assert_eq!(outcome.verdict, FinalVerdict::Verified);
    for peer in net.peers() {
        assert_eq!(peer.stats().prove_calls, 0, "keys must come from the node store");
    }
    assert!(net.peers_in_sync());

    let path = config.ledger_path.as_ref().unwrap();
    assert_eq!(audit_file(path).unwrap(), Audit::Ok { blocks: height + 2 });
    assert_eq!(query_record(net.ledger(), "item-003").len(), 1);
}

#[test]
fn resubmitting_an_item_records_both() {
    let mut net = Network::create(NetworkConfig { seed: Some(2), ..NetworkConfig::default() }).unwrap();
    net.deploy_contract(DEMO_CONTRACT_ID, &demo_spec()).unwrap();
    let seq = run_process(&demo_spec(), &[], "dup").unwrap();
    let a = net.verify_item(DEMO_CONTRACT_ID, "dup", &seq).unwrap();
    let b = net.verify_item(DEMO_CONTRACT_ID, "dup", &seq).unwrap();
    assert_ne!(a.request_tx_id, b.request_tx_id);
    assert_eq!(query_record(net.ledger(), "dup").len(), 2);
}
