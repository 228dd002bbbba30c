use std::io::Write;

use super::Outcome;
use crate::scalar::Real;
use crate::vehicle::VehicleState;

pub const TELEMETRY_HEADER: [&str; 10] = [
    "episode", "step", "x", "y", "v", "theta", "omega", "action", "reward", "outcome",
];

/// Per-step episode log, one CSV row per world step.
pub struct TelemetryLog<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> TelemetryLog<W> {
    pub fn new(inner: W) -> csv::Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(TELEMETRY_HEADER)?;
        Ok(Self { writer })
    }

    pub fn record<T: Real>(
        &mut self,
        episode: usize,
        step: usize,
        ego: &VehicleState<T>,
        action: T,
        reward: T,
        outcome: Outcome,
    ) -> csv::Result<()> {
        self.writer.write_record([
            episode.to_string(),
            step.to_string(),
            ego.x.to_string(),
            ego.y.to_string(),
            ego.v.to_string(),
            ego.theta.to_string(),
            ego.omega.to_string(),
            action.to_string(),
            reward.to_string(),
            outcome.to_string(),
        ])
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }

    pub fn into_inner(self) -> Result<W, String> {
        self.writer.into_inner().map_err(|e| e.to_string())
    }
}
