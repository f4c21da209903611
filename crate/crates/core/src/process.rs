// SPDX-License-Identifier: Apache-2.0

//! Manufacturing processes as state machines: specs, a deterministic PLC
//! emulator with fault injection, and the encodings of the state sequences it
//! produces.

use std::collections::BTreeSet;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ff::{FieldElement, MODULUS};

/// Upper bound on the UTF-8 length of a string payload.
pub const MAX_STR_BYTES: usize = 4096;

/// Reserved state used to pad short sequences before circuit entry. Specs may
/// not list it as an allowed state.
pub const SENTINEL_STATE: u32 = u32::MAX;

const TAG_EMPTY: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_STR: u8 = 2;

/// Payload reported by a field device alongside a state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AuxData {
    Empty,
    Int(u64),
    Str(String),
}

impl AuxData {
    pub fn tag(&self) -> u8 {
        match self {
            AuxData::Empty => TAG_EMPTY,
            AuxData::Int(_) => TAG_INT,
            AuxData::Str(_) => TAG_STR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AuxData::Int(v) if *v >= MODULUS => Err(Error::InvalidSequence(format!(
                "integer payload {v} is not below the field modulus"
            ))),
            AuxData::Str(s) if s.len() > MAX_STR_BYTES => Err(Error::InvalidSequence(format!(
                "string payload of {} bytes exceeds {MAX_STR_BYTES}",
                s.len()
            ))),
            _ => Ok(()),
        }
    }

    /// `(tag, value)` pair of field elements. Strings map to SHA-256 of their
    /// bytes read as a big-endian integer and reduced mod p.
    pub fn to_field_pair(&self) -> (FieldElement, FieldElement) {
        let tag = FieldElement::from(self.tag() as u32);
        let value = match self {
            AuxData::Empty => FieldElement::ZERO,
            AuxData::Int(v) => FieldElement::new(*v),
            AuxData::Str(s) => string_to_field(s),
        };
        (tag, value)
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.tag());
        match self {
            AuxData::Empty => {}
            AuxData::Int(v) => out.extend_from_slice(&v.to_le_bytes()),
            AuxData::Str(s) => {
                out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }

    fn decode_from(cursor: &mut Cursor<'_>) -> Result<Self> {
        let aux = match cursor.u8()? {
            TAG_EMPTY => AuxData::Empty,
            TAG_INT => AuxData::Int(cursor.u64()?),
            TAG_STR => {
                let len = cursor.u32()? as usize;
                let bytes = cursor.take(len)?;
                let s = std::str::from_utf8(bytes)
                    .map_err(|e| Error::Decode(format!("aux string: {e}")))?;
                AuxData::Str(s.to_owned())
            }
            other => return Err(Error::Decode(format!("unknown aux tag {other}"))),
        };
        aux.validate().map_err(|e| Error::Decode(e.to_string()))?;
        Ok(aux)
    }
}

pub fn string_to_field(s: &str) -> FieldElement {
    FieldElement::from_be_bytes_mod_order(&Sha256::digest(s.as_bytes()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AuxJson {
    tag: u8,
    #[serde(default)]
    value: serde_json::Value,
}

impl Serialize for AuxData {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let value = match self {
            AuxData::Empty => serde_json::Value::Null,
            AuxData::Int(v) => serde_json::Value::from(*v),
            AuxData::Str(s) => serde_json::Value::from(s.as_str()),
        };
        AuxJson { tag: self.tag(), value }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AuxData {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = AuxJson::deserialize(deserializer)?;
        let aux = match (raw.tag, raw.value) {
            (TAG_EMPTY, serde_json::Value::Null) => AuxData::Empty,
            (TAG_INT, serde_json::Value::Number(n)) => AuxData::Int(
                n.as_u64()
                    .ok_or_else(|| D::Error::custom("integer payload must be a u64"))?,
            ),
            (TAG_STR, serde_json::Value::String(s)) => AuxData::Str(s),
            (tag, value) => {
                return Err(D::Error::custom(format!(
                    "aux tag {tag} does not accept value {value}"
                )))
            }
        };
        aux.validate().map_err(D::Error::custom)?;
        Ok(aux)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTuple {
    pub state: u32,
    pub aux: AuxData,
}

impl StateTuple {
    pub fn new(state: u32, aux: AuxData) -> Self {
        Self { state, aux }
    }
}

/// `(s_0, a_0), …, (s_n, a_n)` for one manufactured item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSequence {
    pub item_id: String,
    pub tuples: Vec<StateTuple>,
}

impl StateSequence {
    pub fn new(item_id: impl Into<String>, tuples: Vec<StateTuple>) -> Result<Self> {
        let seq = Self {
            item_id: item_id.into(),
            tuples,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.item_id.is_empty() {
            return Err(Error::InvalidSequence("item_id is empty".into()));
        }
        if self.tuples.is_empty() {
            return Err(Error::InvalidSequence("sequence has no tuples".into()));
        }
        for t in &self.tuples {
            t.aux.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub allowed_states: BTreeSet<u32>,
    pub expected_aux: AuxData,
}

impl StepSpec {
    pub fn single(state: u32, expected_aux: AuxData) -> Self {
        Self {
            allowed_states: BTreeSet::from([state]),
            expected_aux,
        }
    }

    /// The state a fault-free run reports: the smallest allowed one.
    pub fn canonical_state(&self) -> u32 {
        *self
            .allowed_states
            .first()
            .expect("validated step has a non-empty allowed set")
    }
}

/// The agreed-upon behaviour of one process: per step, the set of acceptable
/// states and the auxiliary payload that must accompany it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub name: String,
    pub steps: Vec<StepSpec>,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidSpec("spec has no steps".into()));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.allowed_states.is_empty() {
                return Err(Error::InvalidSpec(format!("step {i} has an empty allowed set")));
            }
            if step.allowed_states.contains(&SENTINEL_STATE) {
                return Err(Error::InvalidSpec(format!(
                    "step {i} lists the reserved padding state {SENTINEL_STATE}"
                )));
            }
            step.expected_aux
                .validate()
                .map_err(|e| Error::InvalidSpec(format!("step {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Deterministic byte form used inside deployment transactions:
    /// length-prefixed name, step count, then per step the allowed-state count,
    /// the states in ascending order and the aux encoding.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.name.len() as u32).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        out.extend_from_slice(&(self.steps.len() as u32).to_le_bytes());
        for step in &self.steps {
            out.extend_from_slice(&(step.allowed_states.len() as u32).to_le_bytes());
            for s in &step.allowed_states {
                out.extend_from_slice(&s.to_le_bytes());
            }
            step.expected_aux.encode_into(&mut out);
        }
        out
    }
}

/// Deterministic perturbation of one emulated run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FaultSpec {
    /// The device reports `payload` instead of the expected aux.
    WrongAux { step_index: usize, payload: AuxData },
    /// The device ends up in a state outside the allowed set; `None` picks the
    /// smallest such state.
    WrongState {
        step_index: usize,
        #[serde(default)]
        payload: Option<u32>,
    },
    /// The run halts after `step_index`; later tuples are never emitted.
    TruncateAfter { step_index: usize },
}

impl FaultSpec {
    pub fn step_index(&self) -> usize {
        match self {
            FaultSpec::WrongAux { step_index, .. }
            | FaultSpec::WrongState { step_index, .. }
            | FaultSpec::TruncateAfter { step_index } => *step_index,
        }
    }

    fn check(&self, spec: &ProcessSpec) -> Result<()> {
        let i = self.step_index();
        let step = spec
            .steps
            .get(i)
            .ok_or_else(|| Error::InvalidFault(format!("step {i} is outside the spec")))?;
        match self {
            FaultSpec::WrongAux { payload, .. } => {
                payload
                    .validate()
                    .map_err(|e| Error::InvalidFault(e.to_string()))?;
                if *payload == step.expected_aux {
                    return Err(Error::InvalidFault(format!(
                        "payload at step {i} equals the expected aux"
                    )));
                }
            }
            FaultSpec::WrongState {
                payload: Some(s), ..
            } => {
                if step.allowed_states.contains(s) || *s == SENTINEL_STATE {
                    return Err(Error::InvalidFault(format!(
                        "state {s} at step {i} is not outside the allowed set"
                    )));
                }
            }
            FaultSpec::WrongState { payload: None, .. } => {}
            FaultSpec::TruncateAfter { .. } => {
                if i + 1 >= spec.len() {
                    return Err(Error::InvalidFault(format!(
                        "truncating after the last step ({i}) removes nothing"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Smallest state not in `allowed` (never the padding sentinel).
fn first_outside(allowed: &BTreeSet<u32>) -> u32 {
    (0..SENTINEL_STATE)
        .find(|s| !allowed.contains(s))
        .expect("allowed set cannot cover every state")
}

/// Simulated field device: completes each commanded operation and reports its
/// state and payload, unless a fault has been armed for that step.
struct SimulatedDevice<'a> {
    faults: &'a [FaultSpec],
}

enum Feedback {
    Done(StateTuple),
    Halted(StateTuple),
}

impl SimulatedDevice<'_> {
    fn operate(&self, step_index: usize, step: &StepSpec) -> Feedback {
        let mut tuple = StateTuple::new(step.canonical_state(), step.expected_aux.clone());
        let mut halted = false;
        for fault in self.faults.iter().filter(|f| f.step_index() == step_index) {
            match fault {
                FaultSpec::WrongAux { payload, .. } => tuple.aux = payload.clone(),
                FaultSpec::WrongState { payload, .. } => {
                    tuple.state = payload.unwrap_or_else(|| first_outside(&step.allowed_states))
                }
                FaultSpec::TruncateAfter { .. } => halted = true,
            }
        }
        if halted {
            Feedback::Halted(tuple)
        } else {
            Feedback::Done(tuple)
        }
    }
}

/// Emulates the PLC stepping through `spec`, commanding a simulated device,
/// and returns the resulting state sequence for `item_id`.
pub fn run_process(spec: &ProcessSpec, faults: &[FaultSpec], item_id: &str) -> Result<StateSequence> {
    spec.validate()?;
    for fault in faults {
        fault.check(spec)?;
    }
    let device = SimulatedDevice { faults };
    let mut tuples = Vec::with_capacity(spec.len());
    for (i, step) in spec.steps.iter().enumerate() {
        match device.operate(i, step) {
            Feedback::Done(t) => tuples.push(t),
            Feedback::Halted(t) => {
                tuples.push(t);
                break;
            }
        }
    }
    StateSequence::new(item_id, tuples)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainVerdict {
    pub ok: bool,
    pub first_bad_step: Option<usize>,
}

/// Direct check of `seq` against `spec` without any cryptography.
pub fn validate_plain(spec: &ProcessSpec, seq: &StateSequence) -> PlainVerdict {
    let bad = spec
        .steps
        .iter()
        .zip(&seq.tuples)
        .position(|(step, t)| !step.allowed_states.contains(&t.state) || t.aux != step.expected_aux)
        .or_else(|| (spec.len() != seq.len()).then(|| spec.len().min(seq.len())));
    PlainVerdict {
        ok: bad.is_none(),
        first_bad_step: bad,
    }
}

/// Bit-exact byte layout: u32 LE tuple count, then per tuple a u32 LE state,
/// an aux tag byte and the tag's payload (u64 LE for integers, u32 LE length
/// plus raw UTF-8 for strings). The item id is not included.
pub fn canonical_encode(seq: &StateSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + seq.len() * 16);
    out.extend_from_slice(&(seq.tuples.len() as u32).to_le_bytes());
    for t in &seq.tuples {
        out.extend_from_slice(&t.state.to_le_bytes());
        t.aux.encode_into(&mut out);
    }
    out
}

pub fn canonical_decode(bytes: &[u8], item_id: &str) -> Result<StateSequence> {
    let mut cursor = Cursor::new(bytes);
    let count = cursor.u32()? as usize;
    // Each tuple needs at least five bytes; reject absurd counts up front.
    if count > bytes.len() / 5 {
        return Err(Error::Decode(format!("tuple count {count} exceeds input")));
    }
    let mut tuples = Vec::with_capacity(count);
    for _ in 0..count {
        let state = cursor.u32()?;
        let aux = AuxData::decode_from(&mut cursor)?;
        tuples.push(StateTuple { state, aux });
    }
    cursor.finish()?;
    StateSequence::new(item_id, tuples).map_err(|e| Error::Decode(e.to_string()))
}

fn push_tuple_fields(out: &mut Vec<FieldElement>, state: u32, aux: &AuxData) {
    let (tag, value) = aux.to_field_pair();
    out.extend([FieldElement::from(state), tag, value]);
}

/// Three field elements per tuple: `[state, aux tag, aux value]`.
pub fn to_field_vector(seq: &StateSequence) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(3 * seq.len());
    for t in &seq.tuples {
        push_tuple_fields(&mut out, t.state, &t.aux);
    }
    out
}

/// The same layout as [`to_field_vector`] for the sequence the spec
/// prescribes (canonical state and expected aux per step).
pub fn spec_to_field_vector(spec: &ProcessSpec) -> Vec<FieldElement> {
    let mut out = Vec::with_capacity(3 * spec.len());
    for step in &spec.steps {
        push_tuple_fields(&mut out, step.canonical_state(), &step.expected_aux);
    }
    out
}

pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Decode("unexpected end of input".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(Error::Decode(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )))
        }
    }
}

/// SHA-256 (hex) of the part program loaded by the demo read-file step.
pub const DEMO_FILE_HASH: &str =
    "e448044172176cb679a3cddc6b94447758418b1f529fdffc41a4504d1f7b7e1a";
/// Hash reported when the machine loads a tampered part program.
pub const TAMPERED_FILE_HASH: &str =
    "d89411e8f47419795db2570059f2210a7bdb54fb58c260a553732d43535e1d96";
pub const DEMO_CONFIG_OK: u64 = 200;
pub const DEMO_BARCODE: &str = "VMFG-BRACKET-C";
pub const DEMO_RESULT_OK: u64 = 0;

/// Six-step milling cell: init, read-file, read-config, scan, inspection, end.
pub fn demo_spec() -> ProcessSpec {
    ProcessSpec {
        name: "cnc-bracket-rev-c".into(),
        steps: vec![
            StepSpec::single(0, AuxData::Empty),
            StepSpec::single(1, AuxData::Str(DEMO_FILE_HASH.into())),
            StepSpec::single(2, AuxData::Int(DEMO_CONFIG_OK)),
            StepSpec::single(3, AuxData::Str(DEMO_BARCODE.into())),
            StepSpec::single(4, AuxData::Empty),
            StepSpec::single(5, AuxData::Int(DEMO_RESULT_OK)),
        ],
    }
}

/// Named fault menu over [`demo_spec`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: &'static str,
    pub faults: Vec<FaultSpec>,
}

pub fn demo_scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "good",
            faults: vec![],
        },
        Scenario {
            name: "bad-filehash",
            faults: vec![FaultSpec::WrongAux {
                step_index: 1,
                payload: AuxData::Str(TAMPERED_FILE_HASH.into()),
            }],
        },
        Scenario {
            name: "bad-config",
            faults: vec![FaultSpec::WrongAux {
                step_index: 2,
                payload: AuxData::Int(500),
            }],
        },
        Scenario {
            name: "truncated",
            faults: vec![FaultSpec::TruncateAfter { step_index: 2 }],
        },
    ]
}

pub fn demo_scenario(name: &str) -> Option<Scenario> {
    demo_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: u64) -> FieldElement {
        FieldElement::new(v)
    }

    #[test]
    fn good_run_matches_demo_steps() {
        let seq = run_process(&demo_spec(), &[], "item-1").unwrap();
        let states: Vec<u32> = seq.tuples.iter().map(|t| t.state).collect();
        assert_eq!(states, [0, 1, 2, 3, 4, 5]);
        assert_eq!(seq.tuples[1].aux, AuxData::Str(DEMO_FILE_HASH.into()));
        assert_eq!(seq.tuples[2].aux, AuxData::Int(200));
        assert_eq!(validate_plain(&demo_spec(), &seq), PlainVerdict { ok: true, first_bad_step: None });
    }

    #[test]
    fn wrong_aux_changes_only_that_tuple() {
        let spec = demo_spec();
        let good = run_process(&spec, &[], "x").unwrap();
        let bad = run_process(&spec, &demo_scenario("bad-filehash").unwrap().faults, "x").unwrap();
        let diffs: Vec<usize> = (0..6).filter(|&i| good.tuples[i] != bad.tuples[i]).collect();
        assert_eq!(diffs, [1]);
        assert_eq!(bad.tuples[1].state, 1);
        assert_eq!(validate_plain(&spec, &bad), PlainVerdict { ok: false, first_bad_step: Some(1) });
    }

    #[test]
    fn truncation_and_length_rule() {
        let spec = demo_spec();
        let seq = run_process(&spec, &[FaultSpec::TruncateAfter { step_index: 2 }], "x").unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(validate_plain(&spec, &seq).first_bad_step, Some(3));

        let mut long = run_process(&spec, &[], "x").unwrap();
        long.tuples.push(StateTuple::new(5, AuxData::Empty));
        assert_eq!(validate_plain(&spec, &long).first_bad_step, Some(6));
    }

    #[test]
    fn wrong_state_picks_smallest_outside() {
        let spec = ProcessSpec {
            name: "s".into(),
            steps: vec![StepSpec {
                allowed_states: BTreeSet::from([0, 1, 3]),
                expected_aux: AuxData::Empty,
            }],
        };
        let seq = run_process(&spec, &[FaultSpec::WrongState { step_index: 0, payload: None }], "x").unwrap();
        assert_eq!(seq.tuples[0].state, 2);
        let err = run_process(&spec, &[FaultSpec::WrongState { step_index: 0, payload: Some(3) }], "x");
        assert!(matches!(err, Err(Error::InvalidFault(_))));
    }

    #[test]
    fn fault_validation() {
        let spec = demo_spec();
        let cases = [
            FaultSpec::TruncateAfter { step_index: 5 },
            FaultSpec::WrongAux { step_index: 9, payload: AuxData::Empty },
            FaultSpec::WrongAux { step_index: 0, payload: AuxData::Empty },
            FaultSpec::WrongAux { step_index: 0, payload: AuxData::Int(MODULUS) },
        ];
        for fault in cases {
            assert!(matches!(run_process(&spec, &[fault], "x"), Err(Error::InvalidFault(_))));
        }
    }

    #[test]
    fn spec_validation() {
        let empty = ProcessSpec { name: "e".into(), steps: vec![] };
        assert!(matches!(run_process(&empty, &[], "x"), Err(Error::InvalidSpec(_))));
        let empty_set = ProcessSpec {
            name: "e".into(),
            steps: vec![StepSpec { allowed_states: BTreeSet::new(), expected_aux: AuxData::Empty }],
        };
        assert!(empty_set.validate().is_err());
        let sentinel = ProcessSpec {
            name: "e".into(),
            steps: vec![StepSpec::single(SENTINEL_STATE, AuxData::Empty)],
        };
        assert!(sentinel.validate().is_err());
        assert!(run_process(&demo_spec(), &[], "").is_err());
    }

    #[test]
    fn encode_single_empty_tuple() {
        let seq = StateSequence::new("x", vec![StateTuple::new(0, AuxData::Empty)]).unwrap();
        assert_eq!(canonical_encode(&seq), [1, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn encode_int_and_str_layout() {
        let seq = StateSequence::new(
            "x",
            vec![
                StateTuple::new(0x0102, AuxData::Int(7)),
                StateTuple::new(3, AuxData::Str("ab".into())),
            ],
        )
        .unwrap();
        let expected: Vec<u8> = [
            &[2, 0, 0, 0][..],
            &[2, 1, 0, 0, 1, 7, 0, 0, 0, 0, 0, 0, 0],
            &[3, 0, 0, 0, 2, 2, 0, 0, 0, b'a', b'b'],
        ]
        .concat();
        let bytes = canonical_encode(&seq);
        assert_eq!(bytes, expected);
        assert_eq!(canonical_decode(&bytes, "x").unwrap(), seq);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(canonical_decode(&[1, 0, 0, 0, 0, 0, 0, 0, 9], "x").is_err());
        assert!(canonical_decode(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0], "x").is_err());
        assert!(canonical_decode(&[0, 0, 0, 0], "x").is_err());
        assert!(canonical_decode(&[255, 255, 255, 255], "x").is_err());
    }

    #[test]
    fn field_vector_mapping() {
        let seq = StateSequence::new(
            "x",
            vec![
                StateTuple::new(0, AuxData::Empty),
                StateTuple::new(2, AuxData::Int(7)),
                StateTuple::new(1, AuxData::Str("abc".into())),
            ],
        )
        .unwrap();
        // SHA-256("abc") as a big-endian integer mod 2^61-1, via Python hashlib.
        let abc = fe(1_488_935_780_228_551_592);
        assert_eq!(
            to_field_vector(&seq),
            [fe(0), fe(0), fe(0), fe(2), fe(1), fe(7), fe(1), fe(2), abc]
        );
    }

    #[test]
    fn spec_vector_matches_fault_free_run() {
        let spec = demo_spec();
        let v = spec_to_field_vector(&spec);
        assert_eq!(v.len(), 18);
        assert_eq!(v, to_field_vector(&run_process(&spec, &[], "x").unwrap()));
        // Hash of the demo file-hash string, via Python hashlib.
        assert_eq!(v[5], fe(815_663_948_917_956_381));
        let one = ProcessSpec { name: "o".into(), steps: vec![StepSpec::single(0, AuxData::Empty)] };
        assert_eq!(spec_to_field_vector(&one), [fe(0); 3]);
    }

    #[test]
    fn aux_json_shape() {
        let spec = demo_spec();
        let json = serde_json::to_string(&spec.steps[2]).unwrap();
        assert_eq!(json, r#"{"allowed_states":[2],"expected_aux":{"tag":1,"value":200}}"#);
        let back: ProcessSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        for bad in [r#"{"tag":0,"value":1}"#, r#"{"tag":1,"value":"1"}"#, r#"{"tag":3,"value":null}"#, r#"{"tag":1,"value":-1}"#] {
            assert!(serde_json::from_str::<AuxData>(bad).is_err(), "{bad}");
        }
        assert_eq!(serde_json::from_str::<AuxData>(r#"{"tag":0}"#).unwrap(), AuxData::Empty);
    }

    #[test]
    fn fault_json_shape() {
        let f: FaultSpec =
            serde_json::from_str(r#"{"kind":"WrongAux","step_index":1,"payload":{"tag":1,"value":3}}"#).unwrap();
        assert_eq!(f, FaultSpec::WrongAux { step_index: 1, payload: AuxData::Int(3) });
        let t: FaultSpec = serde_json::from_str(r#"{"kind":"TruncateAfter","step_index":2}"#).unwrap();
        assert_eq!(t.step_index(), 2);
    }
}
