//! Benchmark instances and the JSON instance file format.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardFamily, TabularMdp};

pub const SCHEMA_VERSION: u32 = 1;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

pub mod counterexample {
    pub const LEFT1: usize = 0;
    pub const LEFT2: usize = 1;
    pub const RIGHT: usize = 2;
}

/// Dirichlet(1, ..., 1) transition rows and uniform reward means.
pub fn gen_random_ergodic(
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    seed: u64,
) -> Result<TabularMdp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        let draws: Vec<f64> = (0..num_states)
            .map(|_| rng.sample::<f64, _>(Exp1))
            .collect();
        let total: f64 = draws.iter().sum();
        transitions.extend(draws.iter().map(|x| x / total));
    }
    let rewards = (0..num_states * num_actions)
        .map(|_| rng.gen::<f64>())
        .collect();
    TabularMdp::new(num_states, num_actions, gamma, transitions, rewards)
}

/// RiverSwim with deterministic moves. Reward 0.05 for LEFT in the leftmost
/// state and 1 for RIGHT in the rightmost one.
pub fn river_swim(num_states: usize, gamma: f64) -> Result<TabularMdp> {
    if num_states < 2 {
        return Err(Error::Validation(
            "RiverSwim needs at least 2 states".into(),
        ));
    }
    let n = num_states;
    let mut transitions = vec![0.0; n * 2 * n];
    let mut rewards = vec![0.0; n * 2];
    for s in 0..n {
        transitions[(s * 2 + LEFT) * n + s.saturating_sub(1)] = 1.0;
        transitions[(s * 2 + RIGHT) * n + (s + 1).min(n - 1)] = 1.0;
    }
    rewards[LEFT] = 0.05;
    rewards[(n - 1) * 2 + RIGHT] = 1.0;
    TabularMdp::new(n, 2, gamma, transitions, rewards)
}

/// RiverSwim variant with two equivalent LEFT actions that jump back to the
/// first state. Exploring it needs long runs of RIGHT.
pub fn counterexample_river_swim(num_states: usize, gamma: f64) -> Result<TabularMdp> {
    use counterexample::*;
    if num_states < 2 {
        return Err(Error::Validation(
            "the counterexample needs at least 2 states".into(),
        ));
    }
    let n = num_states;
    let mut transitions = vec![0.0; n * 3 * n];
    let mut rewards = vec![0.0; n * 3];
    for s in 0..n {
        transitions[(s * 3 + LEFT1) * n] = 1.0;
        transitions[(s * 3 + LEFT2) * n] = 1.0;
        transitions[(s * 3 + RIGHT) * n + (s + 1).min(n - 1)] = 1.0;
    }
    rewards[LEFT1] = 0.01;
    rewards[LEFT2] = 0.01;
    rewards[(n - 1) * 3 + RIGHT] = 0.02;
    TabularMdp::new(n, 3, gamma, transitions, rewards)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk form of a [`TabularMdp`]; `transitions[s][a][s']`, `reward_means[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub reward_means: Vec<Vec<f64>>,
    pub reward_family: RewardFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<InstanceMetadata>,
}

impl InstanceFile {
    pub fn from_mdp(mdp: &TabularMdp, metadata: Option<InstanceMetadata>) -> Self {
        let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
        Self {
            schema_version: SCHEMA_VERSION,
            num_states: n_s,
            num_actions: n_a,
            gamma: mdp.gamma(),
            transitions: (0..n_s)
                .map(|s| {
                    (0..n_a)
                        .map(|a| mdp.next_state_probs(s, a).to_vec())
                        .collect()
                })
                .collect(),
            reward_means: (0..n_s)
                .map(|s| (0..n_a).map(|a| mdp.reward(s, a)).collect())
                .collect(),
            reward_family: mdp.reward_family(),
            metadata,
        }
    }

    pub fn to_mdp(&self) -> Result<TabularMdp> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let (n_s, n_a) = (self.num_states, self.num_actions);
        if self.transitions.len() != n_s {
            return Err(Error::Validation(format!(
                "transitions has {} states, expected {n_s}",
                self.transitions.len()
            )));
        }
        if self.reward_means.len() != n_s {
            return Err(Error::Validation(format!(
                "reward_means has {} states, expected {n_s}",
                self.reward_means.len()
            )));
        }
        let mut flat = Vec::with_capacity(n_s * n_a * n_s);
        for (s, per_state) in self.transitions.iter().enumerate() {
            if per_state.len() != n_a {
                return Err(Error::Validation(format!(
                    "transitions[{s}] has {} actions, expected {n_a}",
                    per_state.len()
                )));
            }
            for (a, row) in per_state.iter().enumerate() {
                if row.len() != n_s {
                    return Err(Error::Validation(format!(
                        "transitions[{s}][{a}] has {} entries, expected {n_s}",
                        row.len()
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        let mut rewards = Vec::with_capacity(n_s * n_a);
        for (s, row) in self.reward_means.iter().enumerate() {
            if row.len() != n_a {
                return Err(Error::Validation(format!(
                    "reward_means[{s}] has {} entries, expected {n_a}",
                    row.len()
                )));
            }
            rewards.extend_from_slice(row);
        }
        TabularMdp::new(n_s, n_a, self.gamma, flat, rewards)
    }
}

/// Compact JSON with every float written in scientific notation with 17
/// significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn instance_to_json(mdp: &TabularMdp, metadata: Option<InstanceMetadata>) -> String {
    let file = InstanceFile::from_mdp(mdp, metadata);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    file.serialize(&mut ser)
        .expect("instance serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn save_instance(
    mdp: &TabularMdp,
    metadata: Option<InstanceMetadata>,
    path: &Path,
) -> Result<()> {
    fs::write(path, instance_to_json(mdp, metadata)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<TabularMdp> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.to_mdp()
}
