use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Evaluative class of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardClass {
    /// Collision.
    VeryBad,
    /// Further from (or no closer to) the target.
    Bad,
    /// Closer to the target.
    Well,
    /// Target reached.
    Perfect,
}

impl RewardClass {
    pub const ALL: [RewardClass; 4] = [RewardClass::VeryBad, RewardClass::Bad, RewardClass::Well, RewardClass::Perfect];

    /// Reward emitted by the environment.
    pub fn base_value(self) -> f64 {
        match self {
            RewardClass::VeryBad => -20.0,
            RewardClass::Bad => -1.0,
            RewardClass::Well => 1.5,
            RewardClass::Perfect => 1000.0,
        }
    }

    /// Replacement reward when a trainer advises this class.
    pub fn shaped_value(self) -> f64 {
        match self {
            RewardClass::VeryBad => -10.0,
            RewardClass::Bad => -0.5,
            RewardClass::Well => 1.0,
            RewardClass::Perfect => 800.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardClass::VeryBad => "very_bad",
            RewardClass::Bad => "bad",
            RewardClass::Well => "well",
            RewardClass::Perfect => "perfect",
        }
    }
}

impl fmt::Display for RewardClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        RewardClass::ALL.into_iter().find(|c| c.name() == key).ok_or_else(|| format!("unknown reward class `{s}`"))
    }
}

/// Every value an agent can receive, base or shaped.
pub fn reward_alphabet() -> [f64; 8] {
    let mut out = [0.0; 8];
    for (i, c) in RewardClass::ALL.into_iter().enumerate() {
        out[i] = c.base_value();
        out[i + 4] = c.shaped_value();
    }
    out
}
