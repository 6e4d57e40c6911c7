use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `t^{-1/2}`, enough when every policy induces an ergodic chain.
    Ergodic,
    /// `t^{-1/(m+1)}`.
    Communicating,
    /// `t^{-1/(2(m+1))}`, the slower rate the sample-complexity analysis uses.
    Theorem,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ergodic" => Ok(Self::Ergodic),
            "comm" | "communicating" => Ok(Self::Communicating),
            "theorem" => Ok(Self::Theorem),
            other => Err(Error::Validation(format!(
                "unknown schedule '{other}' (expected ergodic, comm or theorem)"
            ))),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ergodic => "ergodic",
            Self::Communicating => "comm",
            Self::Theorem => "theorem",
        })
    }
}

/// Forced-exploration rate `eps_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    pub kind: ScheduleKind,
    /// Connectivity parameter; ignored by the ergodic schedule.
    pub m: usize,
}

impl ExplorationSchedule {
    pub fn new(kind: ScheduleKind, m: usize) -> Result<Self> {
        if kind != ScheduleKind::Ergodic && m == 0 {
            return Err(Error::Validation(format!("schedule '{kind}' needs m >= 1")));
        }
        Ok(Self { kind, m })
    }

    pub fn ergodic() -> Self {
        Self {
            kind: ScheduleKind::Ergodic,
            m: 1,
        }
    }

    fn exponent(&self) -> f64 {
        match self.kind {
            ScheduleKind::Ergodic => 0.5,
            ScheduleKind::Communicating => 1.0 / (self.m + 1) as f64,
            ScheduleKind::Theorem => 1.0 / (2 * (self.m + 1)) as f64,
        }
    }

    /// `eps_t` for `t >= 1`; `t = 0` is treated as `t = 1`.
    pub fn rate(&self, t: u64) -> f64 {
        (t.max(1) as f64).powf(-self.exponent())
    }
}
