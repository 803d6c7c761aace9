//! JSON export and import of a [`GraphState`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CliqueKey, CliqueRegistry, GraphState, Label, VertexRecord};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueEntry {
    pub key: Vec<Label>,
    pub weight: u64,
}

/// Serialized graph. Vertices are in slot order and cliques in registry
/// insertion order, so an imported state keeps sampling exactly like the
/// exported one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub params: ModelParams,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<[Label; 2]>,
    #[serde(rename = "cliques_N")]
    pub cliques_n: Vec<CliqueEntry>,
    #[serde(rename = "cliques_N1")]
    pub cliques_n1: Vec<CliqueEntry>,
}

fn entries(reg: &CliqueRegistry) -> Vec<CliqueEntry> {
    reg.iter()
        .map(|(k, w)| CliqueEntry {
            key: k.labels().to_vec(),
            weight: w,
        })
        .collect()
}

fn registry(size: usize, list: &[CliqueEntry]) -> Result<CliqueRegistry> {
    let mut out = Vec::with_capacity(list.len());
    for e in list {
        if e.key.len() != size || e.weight == 0 {
            return Err(Error::Snapshot(format!(
                "bad clique entry {:?} (weight {})",
                e.key, e.weight
            )));
        }
        out.push((CliqueKey::new(e.key.iter().copied())?, e.weight));
    }
    Ok(CliqueRegistry::from_entries(size, out))
}

impl GraphState {
    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step(),
            params: *self.params(),
            vertices: self.vertices().to_vec(),
            edges: self.edges(),
            cliques_n: entries(self.registry_full()),
            cliques_n1: entries(self.registry_sub()),
        }
    }

    /// Rebuilds a state and checks the structural identities.
    pub fn from_snapshot(snap: &Snapshot) -> Result<Self> {
        snap.params.validate()?;
        let n = snap.params.clique_size;
        let state = GraphState::from_parts(
            snap.params,
            snap.step,
            snap.vertices.clone(),
            &snap.edges,
            registry(n, &snap.cliques_n)?,
            registry(n - 1, &snap.cliques_n1)?,
        )?;
        state.check_invariants().map_err(Error::Snapshot)?;
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(&snap)
    }
}
