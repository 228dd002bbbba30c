use std::fmt;
use std::str::FromStr;

/// Which maneuver an episode trains: lateral control during a lane change or
/// longitudinal control during an on-ramp merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    LaneChange,
    RampMerge,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::LaneChange, Scenario::RampMerge];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::LaneChange => "lane-change",
            Scenario::RampMerge => "ramp-merge",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario `{0}` (expected lane-change or ramp-merge)")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lane-change" | "lane_change" | "LaneChange" => Ok(Scenario::LaneChange),
            "ramp-merge" | "ramp_merge" | "RampMerge" => Ok(Scenario::RampMerge),
            other => Err(UnknownScenario(other.to_string())),
        }
    }
}
