// SPDX-License-Identifier: Apache-2.0

//! Rank-1 constraint systems and the set-membership compiler for process
//! specs.
//!
//! Wire layout: index 0 is the constant one, indices `1..=num_public` carry
//! the observed sequence (three wires per step: state, aux tag, aux value),
//! and the remaining wires are witness. The witness starts with the spec
//! encoding (same three-per-step layout) followed by the product-chain
//! intermediates of every step with more than one allowed state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ff::FieldElement;
use crate::process::{
    spec_to_field_vector, to_field_vector, ProcessSpec, StateSequence, SENTINEL_STATE,
};

/// Sparse `Σ coeff·z[index]`, at most one term per index, sorted by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearCombination {
    terms: Vec<(usize, FieldElement)>,
}

impl LinearCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn wire(index: usize) -> Self {
        Self::from_terms([(index, FieldElement::ONE)])
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::from_terms([(0, c)])
    }

    /// Merges duplicate indices and drops zero coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, FieldElement)>) -> Self {
        let mut lc = Self::zero();
        for (i, c) in terms {
            lc.add_term(i, c);
        }
        lc
    }

    pub fn add_term(&mut self, index: usize, coeff: FieldElement) {
        match self.terms.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => {
                self.terms[pos].1 += coeff;
                if self.terms[pos].1.is_zero() {
                    self.terms.remove(pos);
                }
            }
            Err(pos) if !coeff.is_zero() => self.terms.insert(pos, (index, coeff)),
            Err(_) => {}
        }
    }

    pub fn terms(&self) -> &[(usize, FieldElement)] {
        &self.terms
    }

    pub fn coeff(&self, index: usize) -> FieldElement {
        self.terms
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.terms[pos].1)
            .unwrap_or_default()
    }

    pub fn eval(&self, values: &[FieldElement]) -> FieldElement {
        self.terms.iter().map(|&(i, c)| c * values[i]).sum()
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|&(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: LinearCombination,
    pub b: LinearCombination,
    pub c: LinearCombination,
}

/// Gadget bookkeeping for one compiled step, needed to complete assignments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepGadget {
    pub allowed: Vec<FieldElement>,
    /// First intermediate wire of the product chain (`allowed.len() - 1` wires).
    pub chain_start: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub num_public: usize,
    pub num_witness: usize,
    pub constraints: Vec<Constraint>,
    /// Empty for hand-built systems.
    #[serde(default)]
    pub steps: Vec<StepGadget>,
}

impl ConstraintSystem {
    /// Hand-built system; every constraint must reference valid wires.
    pub fn new(num_public: usize, num_witness: usize, constraints: Vec<Constraint>) -> Result<Self> {
        let cs = Self {
            num_public,
            num_witness,
            constraints,
            steps: Vec::new(),
        };
        cs.check_indices()?;
        Ok(cs)
    }

    pub fn num_wires(&self) -> usize {
        1 + self.num_public + self.num_witness
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn witness_offset(&self) -> usize {
        1 + self.num_public
    }

    fn check_indices(&self) -> Result<()> {
        let wires = self.num_wires();
        for (j, c) in self.constraints.iter().enumerate() {
            for lc in [&c.a, &c.b, &c.c] {
                if lc.max_index().is_some_and(|i| i >= wires) {
                    return Err(Error::InvalidSpec(format!(
                        "constraint {j} references a wire beyond {wires}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Full wire assignment `z`, with `z[0] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<FieldElement>,
}

impl Assignment {
    /// Wraps raw values; the constant wire is forced to one.
    pub fn from_values(cs: &ConstraintSystem, mut values: Vec<FieldElement>) -> Result<Self> {
        if values.len() != cs.num_wires() {
            return Err(Error::LengthMismatch {
                what: "assignment",
                expected: cs.num_wires(),
                actual: values.len(),
            });
        }
        values[0] = FieldElement::ONE;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn public(&self, cs: &ConstraintSystem) -> &[FieldElement] {
        &self.values[1..cs.witness_offset()]
    }

    pub fn eval(&self, lc: &LinearCombination) -> FieldElement {
        lc.eval(&self.values)
    }
}

fn public_state(step: usize) -> usize {
    1 + 3 * step
}

/// Compiles `spec` into membership and equality constraints. Constraint order
/// is step-major; within a step the membership chain precedes the tag and
/// value equalities.
pub fn compile_membership_circuit(spec: &ProcessSpec) -> Result<ConstraintSystem> {
    spec.validate()?;
    let n = spec.len();
    let num_public = 3 * n;
    let spec_offset = 1 + num_public;
    let mut next_intermediate = spec_offset + 3 * n;
    let mut constraints = Vec::new();
    let mut steps = Vec::with_capacity(n);
    let one = LinearCombination::constant(FieldElement::ONE);

    for (i, step) in spec.steps.iter().enumerate() {
        let x = public_state(i);
        let allowed: Vec<FieldElement> = step
            .allowed_states
            .iter()
            .map(|&s| FieldElement::from(s))
            .collect();
        let diff = |v: FieldElement| LinearCombination::from_terms([(x, FieldElement::ONE), (0, -v)]);

        // t_1 = x - v_1 stays a linear combination; t_2..t_m get wires.
        let chain_start = next_intermediate;
        let mut acc = diff(allowed[0]);
        for &v in &allowed[1..] {
            let wire = next_intermediate;
            next_intermediate += 1;
            constraints.push(Constraint {
                a: acc,
                b: diff(v),
                c: LinearCombination::wire(wire),
            });
            acc = LinearCombination::wire(wire);
        }
        constraints.push(Constraint {
            a: acc,
            b: one.clone(),
            c: LinearCombination::zero(),
        });

        for offset in 1..3 {
            let observed = x + offset;
            let expected = spec_offset + 3 * i + offset;
            constraints.push(Constraint {
                a: LinearCombination::from_terms([
                    (observed, FieldElement::ONE),
                    (expected, -FieldElement::ONE),
                ]),
                b: one.clone(),
                c: LinearCombination::zero(),
            });
        }
        steps.push(StepGadget {
            allowed,
            chain_start,
        });
    }

    let cs = ConstraintSystem {
        num_public,
        num_witness: next_intermediate - spec_offset,
        constraints,
        steps,
    };
    debug_assert!(cs.check_indices().is_ok());
    Ok(cs)
}

/// Completes the assignment for a compiled circuit: constant, observed
/// public values, spec witness, then the product-chain intermediates.
pub fn assign(
    cs: &ConstraintSystem,
    public: &[FieldElement],
    spec_witness: &[FieldElement],
) -> Result<Assignment> {
    if public.len() != cs.num_public {
        return Err(Error::LengthMismatch {
            what: "public input",
            expected: cs.num_public,
            actual: public.len(),
        });
    }
    if spec_witness.len() != 3 * cs.steps.len() {
        return Err(Error::LengthMismatch {
            what: "spec witness",
            expected: 3 * cs.steps.len(),
            actual: spec_witness.len(),
        });
    }
    let mut values = Vec::with_capacity(cs.num_wires());
    values.push(FieldElement::ONE);
    values.extend_from_slice(public);
    values.extend_from_slice(spec_witness);
    values.resize(cs.num_wires(), FieldElement::ZERO);

    for (i, gadget) in cs.steps.iter().enumerate() {
        let x = values[public_state(i)];
        let mut t = x - gadget.allowed[0];
        for (k, &v) in gadget.allowed[1..].iter().enumerate() {
            t *= x - v;
            values[gadget.chain_start + k] = t;
        }
    }
    Ok(Assignment { values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Satisfaction {
    pub ok: bool,
    pub first_violated: Option<usize>,
}

/// Checks `⟨A_j,z⟩·⟨B_j,z⟩ = ⟨C_j,z⟩` for every constraint.
pub fn is_satisfied(cs: &ConstraintSystem, a: &Assignment) -> Satisfaction {
    assert_eq!(
        a.values.len(),
        cs.num_wires(),
        "assignment does not match the constraint system"
    );
    let first_violated = cs
        .constraints
        .iter()
        .position(|c| a.eval(&c.a) * a.eval(&c.b) != a.eval(&c.c));
    Satisfaction {
        ok: first_violated.is_none(),
        first_violated,
    }
}

/// Public-input vector for an observed sequence checked against a circuit of
/// `num_steps` steps: short sequences are padded with the sentinel tuple
/// `(SENTINEL_STATE, Empty)`; longer ones are rejected.
pub fn observed_public_input(num_steps: usize, seq: &StateSequence) -> Result<Vec<FieldElement>> {
    pad_public_input(num_steps, to_field_vector(seq))
}

/// Pads or rejects an already encoded public vector (three elements per
/// tuple).
pub fn pad_public_input(num_steps: usize, mut encoded: Vec<FieldElement>) -> Result<Vec<FieldElement>> {
    let want = 3 * num_steps;
    if encoded.len() > want || !encoded.len().is_multiple_of(3) {
        return Err(Error::LengthMismatch {
            what: "observed sequence",
            expected: want,
            actual: encoded.len(),
        });
    }
    while encoded.len() < want {
        encoded.extend([
            FieldElement::from(SENTINEL_STATE),
            FieldElement::ZERO,
            FieldElement::ZERO,
        ]);
    }
    Ok(encoded)
}

/// Convenience: compile, pad and assign `seq` against `spec`. Returns `None`
/// when the sequence is longer than the spec and never reaches the circuit.
pub fn check_sequence(spec: &ProcessSpec, seq: &StateSequence) -> Result<Option<Satisfaction>> {
    let cs = compile_membership_circuit(spec)?;
    let public = match observed_public_input(spec.len(), seq) {
        Ok(p) => p,
        Err(Error::LengthMismatch { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let a = assign(&cs, &public, &spec_to_field_vector(spec))?;
    Ok(Some(is_satisfied(&cs, &a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{demo_scenario, demo_spec, run_process, AuxData, StepSpec};
    use std::collections::BTreeSet;

    fn fe(v: u64) -> FieldElement {
        FieldElement::new(v)
    }

    fn two_member_spec() -> ProcessSpec {
        ProcessSpec {
            name: "pair".into(),
            steps: vec![StepSpec {
                allowed_states: BTreeSet::from([4, 9]),
                expected_aux: AuxData::Empty,
            }],
        }
    }

    #[test]
    fn lc_merges_and_drops_zero() {
        let lc = LinearCombination::from_terms([(3, fe(2)), (1, fe(5)), (3, -fe(2))]);
        assert_eq!(lc.terms(), &[(1, fe(5))]);
        assert_eq!(lc.coeff(3), FieldElement::ZERO);
    }

    #[test]
    fn single_step_counts() {
        let spec = ProcessSpec { name: "one".into(), steps: vec![StepSpec::single(0, AuxData::Empty)] };
        let cs = compile_membership_circuit(&spec).unwrap();
        assert_eq!(cs.num_constraints(), 3);
        assert_eq!(cs.num_public, 3);
        assert_eq!(cs.num_witness, 3);
    }

    #[test]
    fn demo_counts() {
        let cs = compile_membership_circuit(&demo_spec()).unwrap();
        assert_eq!(cs.num_constraints(), 18);
        assert_eq!(cs.num_public, 18);
    }

    #[test]
    fn count_formula_with_sets() {
        let spec = ProcessSpec {
            name: "sets".into(),
            steps: vec![
                StepSpec { allowed_states: BTreeSet::from([1, 2, 3]), expected_aux: AuxData::Empty },
                StepSpec::single(7, AuxData::Int(1)),
                StepSpec { allowed_states: BTreeSet::from([0, 8]), expected_aux: AuxData::Str("s".into()) },
            ],
        };
        let cs = compile_membership_circuit(&spec).unwrap();
        assert_eq!(cs.num_constraints(), 3 + 1 + 2 + 2 * 3);
        assert_eq!(cs.num_witness, 9 + 2 + 1);
    }

    #[test]
    fn two_member_membership() {
        let spec = two_member_spec();
        let cs = compile_membership_circuit(&spec).unwrap();
        let membership = cs.constraints.len() - 2;
        assert_eq!(membership, 2);
        let witness = spec_to_field_vector(&spec);
        for (state, ok) in [(4, true), (9, true), (5, false)] {
            let a = assign(&cs, &[fe(state), fe(0), fe(0)], &witness).unwrap();
            assert_eq!(is_satisfied(&cs, &a).ok, ok, "state {state}");
        }
        let a = assign(&cs, &[fe(9), fe(0), fe(0)], &witness).unwrap();
        let t1 = a.eval(&cs.constraints[0].a);
        assert_eq!(t1, fe(5));
        assert_eq!(a.values()[cs.steps[0].chain_start], FieldElement::ZERO);
    }

    #[test]
    fn good_run_satisfies() {
        let spec = demo_spec();
        let cs = compile_membership_circuit(&spec).unwrap();
        let seq = run_process(&spec, &[], "i").unwrap();
        let a = assign(&cs, &to_field_vector(&seq), &spec_to_field_vector(&spec)).unwrap();
        assert_eq!(is_satisfied(&cs, &a), Satisfaction { ok: true, first_violated: None });
    }

    #[test]
    fn file_hash_fault_hits_step_one_value_constraint() {
        let spec = demo_spec();
        let cs = compile_membership_circuit(&spec).unwrap();
        let seq = run_process(&spec, &demo_scenario("bad-filehash").unwrap().faults, "i").unwrap();
        let a = assign(&cs, &to_field_vector(&seq), &spec_to_field_vector(&spec)).unwrap();
        // step 0 occupies constraints 0..3; step 1 is membership 3, tag 4, value 5.
        assert_eq!(is_satisfied(&cs, &a), Satisfaction { ok: false, first_violated: Some(5) });
        let violated = cs
            .constraints
            .iter()
            .filter(|c| a.eval(&c.a) * a.eval(&c.b) != a.eval(&c.c))
            .count();
        assert_eq!(violated, 1);
    }

    #[test]
    fn all_zero_public_fails() {
        let spec = demo_spec();
        let cs = compile_membership_circuit(&spec).unwrap();
        let a = assign(&cs, &[FieldElement::ZERO; 18], &spec_to_field_vector(&spec)).unwrap();
        assert!(!is_satisfied(&cs, &a).ok);
    }

    #[test]
    fn assign_length_errors() {
        let cs = compile_membership_circuit(&demo_spec()).unwrap();
        assert!(matches!(assign(&cs, &[], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            assign(&cs, &[FieldElement::ZERO; 18], &[]),
            Err(Error::LengthMismatch { what: "spec witness", .. })
        ));
    }

    #[test]
    fn padding_and_overlength() {
        let spec = demo_spec();
        let short = run_process(&spec, &[crate::process::FaultSpec::TruncateAfter { step_index: 2 }], "i").unwrap();
        let padded = observed_public_input(6, &short).unwrap();
        assert_eq!(padded.len(), 18);
        assert_eq!(padded[9], FieldElement::from(SENTINEL_STATE));
        assert_eq!(check_sequence(&spec, &short).unwrap().unwrap().first_violated, Some(9));

        let mut long = run_process(&spec, &[], "i").unwrap();
        long.tuples.push(long.tuples[0].clone());
        assert!(check_sequence(&spec, &long).unwrap().is_none());
    }

    #[test]
    fn hand_built_index_check() {
        let bad = Constraint { a: LinearCombination::wire(5), b: LinearCombination::zero(), c: LinearCombination::zero() };
        assert!(ConstraintSystem::new(1, 1, vec![bad]).is_err());
    }

    #[test]
    fn json_has_hex_coefficients() {
        let spec = ProcessSpec { name: "one".into(), steps: vec![StepSpec::single(3, AuxData::Empty)] };
        let cs = compile_membership_circuit(&spec).unwrap();
        let json = serde_json::to_value(&cs).unwrap();
        assert_eq!(json["num_public"], 3);
        assert_eq!(
            json["constraints"][0]["a"],
            serde_json::json!([[0, (-fe(3)).to_hex()], [1, "0000000000000001"]])
        );
        let back: ConstraintSystem = serde_json::from_value(json).unwrap();
        assert_eq!(back, cs);
    }
}
