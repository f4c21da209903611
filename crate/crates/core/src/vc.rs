// SPDX-License-Identifier: Apache-2.0

//! Designated-verifier verifiable computation over a QAP.
//!
//! The R1CS is interpolated into per-wire polynomials over the points
//! `r_j = j + 1`. Setup samples a secret evaluation point `s` and publishes the
//! per-wire evaluations to the prover. A proof is the witness part of
//! `A(s), B(s), C(s)` plus `H(s)` where `A·B - C = H·T`; the verifier, who
//! keeps `s`, adds the public-wire part itself and checks the identity at `s`.
//!
//! The prover shifts `A` and `B` by random multiples of `T` fixed at setup.
//! This keeps `A(s)` and `B(s)` nonzero, so tampering with any single proof
//! element breaks the identity even for circuits whose honest `A` or `B`
//! polynomial vanishes identically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{assign, Assignment, ConstraintSystem};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::ff::{lagrange_basis, FieldElement, Polynomial};
use crate::process::{canonical_encode, to_field_vector, StateSequence};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qap {
    pub a: Vec<Polynomial>,
    pub b: Vec<Polynomial>,
    pub c: Vec<Polynomial>,
    pub target: Polynomial,
    pub degree: usize,
    pub num_public: usize,
}

/// Interpolation node of constraint `j`.
pub fn evaluation_point(j: usize) -> FieldElement {
    FieldElement::from(j as u64 + 1)
}

pub fn r1cs_to_qap(cs: &ConstraintSystem) -> Result<Qap> {
    if cs.constraints.is_empty() {
        return Err(Error::InvalidSpec("constraint system is empty".into()));
    }
    let degree = cs.num_constraints();
    let points: Vec<FieldElement> = (0..degree).map(evaluation_point).collect();
    let basis = lagrange_basis(&points)?;
    let wires = cs.num_wires();

    let mut acc = [
        vec![vec![FieldElement::ZERO; degree]; wires],
        vec![vec![FieldElement::ZERO; degree]; wires],
        vec![vec![FieldElement::ZERO; degree]; wires],
    ];
    for (constraint, l_j) in cs.constraints.iter().zip(&basis) {
        for (which, lc) in [&constraint.a, &constraint.b, &constraint.c].into_iter().enumerate() {
            for &(k, coeff) in lc.terms() {
                for (slot, &l) in acc[which][k].iter_mut().zip(l_j.coeffs()) {
                    *slot += coeff * l;
                }
            }
        }
    }
    let [a, b, c] = acc.map(|per_wire| per_wire.into_iter().map(Polynomial::new).collect());
    Ok(Qap {
        a,
        b,
        c,
        target: Polynomial::from_roots(&points),
        degree,
        num_public: cs.num_public,
    })
}

impl Qap {
    pub fn num_wires(&self) -> usize {
        self.a.len()
    }

    /// `(Σ z_k A_k, Σ z_k B_k, Σ z_k C_k)`.
    pub fn combine(&self, z: &[FieldElement]) -> (Polynomial, Polynomial, Polynomial) {
        let fold = |polys: &[Polynomial]| {
            let mut coeffs = vec![FieldElement::ZERO; self.degree];
            for (p, &zk) in polys.iter().zip(z) {
                if zk.is_zero() {
                    continue;
                }
                for (slot, &c) in coeffs.iter_mut().zip(p.coeffs()) {
                    *slot += zk * c;
                }
            }
            Polynomial::new(coeffs)
        };
        (fold(&self.a), fold(&self.b), fold(&self.c))
    }

    /// `P = A·B - C` for the assignment `z`, divided by the target.
    pub fn quotient(&self, z: &[FieldElement]) -> Result<(Polynomial, Polynomial)> {
        let (a, b, c) = self.combine(z);
        a.mul(&b).sub(&c).divrem(&self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationKey {
    pub a_eval: Vec<FieldElement>,
    pub b_eval: Vec<FieldElement>,
    pub c_eval: Vec<FieldElement>,
    pub t_at_s: FieldElement,
    pub powers_of_s: Vec<FieldElement>,
    pub blind_a: FieldElement,
    pub blind_b: FieldElement,
}

/// Secret to the verifying node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationKey {
    pub secret_point: FieldElement,
    pub public_a_eval: Vec<FieldElement>,
    pub public_b_eval: Vec<FieldElement>,
    pub public_c_eval: Vec<FieldElement>,
    pub t_at_s: FieldElement,
}

impl VerificationKey {
    pub fn num_public(&self) -> usize {
        self.public_a_eval.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proof {
    pub a_w: FieldElement,
    pub b_w: FieldElement,
    pub c_w: FieldElement,
    pub h_at_s: FieldElement,
}

/// Samples the secret point (off the interpolation nodes) and the blinding
/// factors, then evaluates every wire polynomial at the point.
pub fn setup<R: Rng + ?Sized>(qap: &Qap, rng: &mut R) -> (EvaluationKey, VerificationKey) {
    let s = loop {
        let s = FieldElement::random(rng);
        if s.is_zero() || s.value() > qap.degree as u64 {
            break s;
        }
    };
    let nonzero = |rng: &mut R| loop {
        let v = FieldElement::random(rng);
        if !v.is_zero() {
            break v;
        }
    };
    let blind_a = nonzero(rng);
    let blind_b = nonzero(rng);

    let eval_all = |polys: &[Polynomial]| polys.iter().map(|p| p.eval(s)).collect::<Vec<_>>();
    let a_eval = eval_all(&qap.a);
    let b_eval = eval_all(&qap.b);
    let c_eval = eval_all(&qap.c);
    let t_at_s = qap.target.eval(s);
    let powers_of_s = std::iter::successors(Some(FieldElement::ONE), |p| Some(*p * s))
        .take(qap.degree + 1)
        .collect();

    let public = 1 + qap.num_public;
    let vk = VerificationKey {
        secret_point: s,
        public_a_eval: a_eval[..public].to_vec(),
        public_b_eval: b_eval[..public].to_vec(),
        public_c_eval: c_eval[..public].to_vec(),
        t_at_s,
    };
    let ek = EvaluationKey {
        a_eval,
        b_eval,
        c_eval,
        t_at_s,
        powers_of_s,
        blind_a,
        blind_b,
    };
    (ek, vk)
}

/// `(σ_x, ρ_x)`: the field encoding of the observed sequence and a digest
/// binding its bytes to the item identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicInputEncoding {
    pub sigma_x: Vec<FieldElement>,
    pub rho_x: Digest,
}

pub fn item_digest(seq: &StateSequence) -> Digest {
    Digest::sha256_parts([canonical_encode(seq).as_slice(), seq.item_id.as_bytes()])
}

pub fn probgen(seq: &StateSequence) -> PublicInputEncoding {
    PublicInputEncoding {
        sigma_x: to_field_vector(seq),
        rho_x: item_digest(seq),
    }
}

fn eval_with_powers(p: &Polynomial, powers: &[FieldElement]) -> FieldElement {
    p.coeffs().iter().zip(powers).map(|(&c, &x)| c * x).sum()
}

/// Proves a complete assignment. Fails if the assignment does not satisfy
/// the constraint system (nonzero remainder modulo the target).
pub fn prove_assignment(ek: &EvaluationKey, qap: &Qap, z: &Assignment) -> Result<Proof> {
    let z = z.values();
    if z.len() != ek.a_eval.len() || z.len() != qap.num_wires() {
        return Err(Error::LengthMismatch {
            what: "assignment",
            expected: qap.num_wires(),
            actual: z.len(),
        });
    }
    let (a, b, c) = qap.combine(z);
    let (h, rem) = a.mul(&b).sub(&c).divrem(&qap.target)?;
    if !rem.is_zero() {
        return Err(Error::UnsatisfiedWitness);
    }
    // (A + βa·T)(B + βb·T) - C = T·(H + βb·A + βa·B + βa·βb·T)
    let blinded_h = h
        .add(&a.scale(ek.blind_b))
        .add(&b.scale(ek.blind_a))
        .add(&qap.target.scale(ek.blind_a * ek.blind_b));

    let witness = 1 + qap.num_public..z.len();
    let dot = |evals: &[FieldElement]| -> FieldElement {
        witness.clone().map(|k| z[k] * evals[k]).sum()
    };
    Ok(Proof {
        a_w: dot(&ek.a_eval) + ek.blind_a * ek.t_at_s,
        b_w: dot(&ek.b_eval) + ek.blind_b * ek.t_at_s,
        c_w: dot(&ek.c_eval),
        h_at_s: eval_with_powers(&blinded_h, &ek.powers_of_s),
    })
}

/// Proves that `spec_witness` satisfies the circuit on public input `x_star`.
pub fn prove(
    ek: &EvaluationKey,
    cs: &ConstraintSystem,
    qap: &Qap,
    x_star: &[FieldElement],
    spec_witness: &[FieldElement],
) -> Result<Proof> {
    let z = assign(cs, x_star, spec_witness)?;
    prove_assignment(ek, qap, &z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
}

pub fn verify(vk: &VerificationKey, x: &[FieldElement], proof: &Proof) -> Result<Verdict> {
    if x.len() != vk.num_public() {
        return Err(Error::LengthMismatch {
            what: "public input",
            expected: vk.num_public(),
            actual: x.len(),
        });
    }
    let public = |evals: &[FieldElement]| -> FieldElement {
        evals[0] + x.iter().zip(&evals[1..]).map(|(&xk, &e)| xk * e).sum::<FieldElement>()
    };
    let a = public(&vk.public_a_eval) + proof.a_w;
    let b = public(&vk.public_b_eval) + proof.b_w;
    let c = public(&vk.public_c_eval) + proof.c_w;
    Ok(if a * b - c == proof.h_at_s * vk.t_at_s {
        Verdict::Accept
    } else {
        Verdict::Reject
    })
}

/// Conformance verdict for one item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conformance {
    Verified,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationOutcome {
    pub verdict: Conformance,
    pub rho_x: Digest,
}

pub fn decode_result(outcome: Verdict, rho_x: Digest) -> VerificationOutcome {
    let verdict = match outcome {
        Verdict::Accept => Conformance::Verified,
        Verdict::Reject => Conformance::Failed,
    };
    VerificationOutcome { verdict, rho_x }
}
