// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{compile_membership_circuit, pad_public_input, ConstraintSystem};
use crate::digest::Digest;
use crate::error::{Error, Result};
use crate::ff::FieldElement;
use crate::process::{spec_to_field_vector, ProcessSpec, StateSequence};
use crate::vc::{
    self, decode_result, probgen, r1cs_to_qap, Conformance, EvaluationKey, Proof, Qap, Verdict,
    VerificationKey,
};

/// Key material a node keeps on its own disk. Never put in a transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractKeys {
    pub ek: EvaluationKey,
    pub vk: VerificationKey,
    pub proof: Proof,
}

/// A node's locally compiled instance of a verification contract.
#[derive(Clone, Debug)]
pub struct VerificationContract {
    pub contract_id: String,
    pub spec: ProcessSpec,
    pub cs: ConstraintSystem,
    pub qap: Qap,
    pub keys: ContractKeys,
    pub x_star: Vec<FieldElement>,
}

impl VerificationContract {
    /// Compiles the spec, runs setup with this node's entropy and proves the
    /// specification sequence once.
    pub fn compile<R: Rng + ?Sized>(contract_id: &str, spec: &ProcessSpec, rng: &mut R) -> Result<Self> {
        let cs = compile_membership_circuit(spec)?;
        let qap = r1cs_to_qap(&cs)?;
        let (ek, vk) = vc::setup(&qap, rng);
        let x_star = spec_to_field_vector(spec);
        let proof = vc::prove(&ek, &cs, &qap, &x_star, &x_star)?;
        Ok(Self {
            contract_id: contract_id.to_owned(),
            spec: spec.clone(),
            cs,
            qap,
            keys: ContractKeys { ek, vk, proof },
            x_star,
        })
    }

    /// Rebuilds a contract from previously stored keys without proving.
    pub fn with_keys(contract_id: &str, spec: &ProcessSpec, keys: ContractKeys) -> Result<Self> {
        let cs = compile_membership_circuit(spec)?;
        let qap = r1cs_to_qap(&cs)?;
        if keys.vk.num_public() != cs.num_public || keys.ek.a_eval.len() != cs.num_wires() {
            return Err(Error::Decode(format!(
                "stored keys for `{contract_id}` do not match its circuit"
            )));
        }
        Ok(Self {
            contract_id: contract_id.to_owned(),
            spec: spec.clone(),
            cs,
            qap,
            keys,
            x_star: spec_to_field_vector(spec),
        })
    }

    pub fn self_check(&self) -> Result<Verdict> {
        vc::verify(&self.keys.vk, &self.x_star, &self.keys.proof)
    }

    /// Checks an observed sequence against the stored proof. Sequences longer
    /// than the spec are rejected before reaching the circuit; shorter ones
    /// are padded with the sentinel tuple.
    pub fn evaluate(&self, seq: &StateSequence) -> (Conformance, Digest) {
        let encoding = probgen(seq);
        let verdict = match pad_public_input(self.spec.len(), encoding.sigma_x) {
            Ok(x) => vc::verify(&self.keys.vk, &x, &self.keys.proof).unwrap_or(Verdict::Reject),
            Err(_) => Verdict::Reject,
        };
        let outcome = decode_result(verdict, encoding.rho_x);
        (outcome.verdict, outcome.rho_x)
    }
}

/// Per-node directory of contract key files:
/// `<root>/<contract dir>/{ek,vk,proof}.json`.
#[derive(Clone, Debug)]
pub struct NodeStore {
    root: PathBuf,
}

impl NodeStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn contract_dir(&self, contract_id: &str) -> PathBuf {
        let plain = !contract_id.is_empty()
            && !contract_id.starts_with('.')
            && contract_id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b"-_.".contains(&b));
        let name = if plain {
            contract_id.to_owned()
        } else {
            format!("x-{}", hex::encode(contract_id))
        };
        self.root.join(name)
    }

    pub fn save(&self, contract_id: &str, keys: &ContractKeys) -> Result<()> {
        let dir = self.contract_dir(contract_id);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("ek.json"), serde_json::to_vec_pretty(&keys.ek)?)?;
        std::fs::write(dir.join("vk.json"), serde_json::to_vec_pretty(&keys.vk)?)?;
        std::fs::write(dir.join("proof.json"), serde_json::to_vec_pretty(&keys.proof)?)?;
        Ok(())
    }

    /// `None` when nothing has been stored for the contract.
    pub fn load(&self, contract_id: &str) -> Result<Option<ContractKeys>> {
        let dir = self.contract_dir(contract_id);
        if !dir.join("proof.json").exists() {
            return Ok(None);
        }
        let read = |name: &str| std::fs::read(dir.join(name));
        Ok(Some(ContractKeys {
            ek: serde_json::from_slice(&read("ek.json")?)?,
            vk: serde_json::from_slice(&read("vk.json")?)?,
            proof: serde_json::from_slice(&read("proof.json")?)?,
        }))
    }

    pub fn remove(&self, contract_id: &str) -> Result<()> {
        let dir = self.contract_dir(contract_id);
        if dir.exists() {
            std::fs::remove_dir_all(dir)?;
        }
        Ok(())
    }
}
