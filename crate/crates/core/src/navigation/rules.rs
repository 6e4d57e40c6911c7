//! Navigation rules: what the behavior policy mixes with the uniform policy.
//! Rules are looked up by name so runs can select one from configuration.

use crate::error::{Error, Result};
use crate::mdp::StochasticPolicy;

pub trait SamplingRule: Send {
    fn name(&self) -> &'static str;

    /// A new oracle policy was computed from the empirical model.
    fn update_oracle(&mut self, oracle: &StochasticPolicy);

    /// Called at every step `t >= 1`, before the action is drawn.
    fn tick(&mut self, t: u64);

    /// The non-uniform component of the behavior policy.
    fn target(&self) -> &StochasticPolicy;
}

/// D-Navigation: follow the latest oracle policy.
#[derive(Debug, Clone)]
pub struct DirectNavigation {
    oracle: StochasticPolicy,
}

impl DirectNavigation {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            oracle: StochasticPolicy::uniform(num_states, num_actions),
        }
    }
}

impl SamplingRule for DirectNavigation {
    fn name(&self) -> &'static str {
        "d"
    }

    fn update_oracle(&mut self, oracle: &StochasticPolicy) {
        self.oracle = oracle.clone();
    }

    fn tick(&mut self, _t: u64) {}

    fn target(&self) -> &StochasticPolicy {
        &self.oracle
    }
}

/// C-Navigation: follow the running (Cesaro) mean of the oracle policies
/// in force at steps `1..=t`.
#[derive(Debug, Clone)]
pub struct CesaroNavigation {
    current: StochasticPolicy,
    mean: StochasticPolicy,
}

impl CesaroNavigation {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let uniform = StochasticPolicy::uniform(num_states, num_actions);
        Self {
            current: uniform.clone(),
            mean: uniform,
        }
    }
}

impl SamplingRule for CesaroNavigation {
    fn name(&self) -> &'static str {
        "c"
    }

    fn update_oracle(&mut self, oracle: &StochasticPolicy) {
        self.current = oracle.clone();
    }

    fn tick(&mut self, t: u64) {
        let weight = 1.0 / t.max(1) as f64;
        let probs = self
            .mean
            .probs()
            .iter()
            .zip(self.current.probs())
            .map(|(m, c)| m + (c - m) * weight)
            .collect();
        self.mean =
            StochasticPolicy::from_raw(self.mean.num_states(), self.mean.num_actions(), probs);
    }

    fn target(&self) -> &StochasticPolicy {
        &self.mean
    }
}

pub struct RuleEntry {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub summary: &'static str,
    build: fn(usize, usize) -> Box<dyn SamplingRule>,
}

static RULES: &[RuleEntry] = &[
    RuleEntry {
        name: "d",
        aliases: &["direct", "d-navigation"],
        summary: "mix the uniform policy with the current oracle policy",
        build: |s, a| Box::new(DirectNavigation::new(s, a)),
    },
    RuleEntry {
        name: "c",
        aliases: &["cesaro", "c-navigation"],
        summary: "mix the uniform policy with the running mean of oracle policies",
        build: |s, a| Box::new(CesaroNavigation::new(s, a)),
    },
];

pub fn rules() -> &'static [RuleEntry] {
    RULES
}

fn find(name: &str) -> Option<&'static RuleEntry> {
    let key = name.to_ascii_lowercase();
    RULES
        .iter()
        .find(|e| e.name == key || e.aliases.contains(&key.as_str()))
}

/// Canonical name of a rule, or a validation error listing the known ones.
pub fn canonical_rule_name(name: &str) -> Result<&'static str> {
    find(name).map(|e| e.name).ok_or_else(|| {
        let known: Vec<&str> = RULES.iter().map(|e| e.name).collect();
        Error::Validation(format!(
            "unknown navigation rule '{name}' (known: {})",
            known.join(", ")
        ))
    })
}

pub fn build_rule(
    name: &str,
    num_states: usize,
    num_actions: usize,
) -> Result<Box<dyn SamplingRule>> {
    let entry =
        find(name).ok_or_else(|| canonical_rule_name(name).expect_err("lookup already failed"))?;
    Ok((entry.build)(num_states, num_actions))
}
