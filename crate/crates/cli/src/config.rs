//! Flat `key = value` run configuration.
//!
//! Every key is listed in [`FIELDS`]. Scenario defaults are applied first, then the
//! config file, then `key=value` overrides, then the dedicated command-line flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qqn_core::world::Range;
use qqn_core::{RewardConfig, Scenario, ScenarioConfig, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world: ScenarioConfig<f64>,
    pub train: TrainConfig<f64>,
    pub reward: RewardConfig<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let world = ScenarioConfig::for_scenario(scenario);
        Self {
            train: TrainConfig::for_scenario(&world),
            reward: RewardConfig::for_scenario(scenario),
            world,
            seed: 0,
            out: PathBuf::from("qqn-out"),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.world.scenario
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if key == "scenario" {
            let s: Scenario = value.parse().map_err(|e| format!("{e}"))?;
            if s != self.scenario() {
                return Err("scenario cannot change after defaults are chosen".into());
            }
            return Ok(());
        }
        let field = FIELDS
            .iter()
            .find(|f| f.key == key)
            .ok_or_else(|| format!("unknown key `{key}`"))?;
        (field.set)(self, value.trim()).map_err(|e| format!("{key}: {e}"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        if key == "scenario" {
            return Some(self.scenario().to_string());
        }
        FIELDS.iter().find(|f| f.key == key).map(|f| (f.get)(self))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.world.validate().map_err(|e| e.to_string())?;
        self.train.validate()?;
        self.reward.validate()?;
        if self.reward.scenario != self.world.scenario {
            return Err("reward and world scenarios differ".into());
        }
        Ok(())
    }

    /// Text that [`parse_entries`] and [`RunConfig::set`] read back to an equal config.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario());
        for f in FIELDS {
            let _ = writeln!(s, "{} = {}", f.key, (f.get)(self));
        }
        s
    }
}

/// Text form of a config value.
trait Value: Sized {
    fn render(&self) -> String;
    fn parse(s: &str) -> Result<Self, String>;
}

impl Value for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a number"))
    }
}

impl Value for usize {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
    }
}

impl Value for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Result<Self, String> {
        s.parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
    }
}

impl Value for Range<f64> {
    fn render(&self) -> String {
        format!("{:?},{:?}", self.lo, self.hi)
    }
    fn parse(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(',').ok_or_else(|| format!("`{s}` is not a `lo,hi` pair"))?;
        Ok(Range::new(f64::parse(lo.trim())?, f64::parse(hi.trim())?))
    }
}

/// `none` or a number.
impl Value for Option<f64> {
    fn render(&self) -> String {
        self.map_or_else(|| "none".to_string(), |v| v.render())
    }
    fn parse(s: &str) -> Result<Self, String> {
        if s == "none" {
            Ok(None)
        } else {
            f64::parse(s).map(Some)
        }
    }
}

impl Value for PathBuf {
    fn render(&self) -> String {
        self.display().to_string()
    }
    fn parse(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            Err("empty path".into())
        } else {
            Ok(PathBuf::from(s))
        }
    }
}

pub struct Field {
    pub key: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> Result<(), String>,
}

macro_rules! field {
    ($key:literal, $($path:ident).+) => {
        Field {
            key: $key,
            get: |c| Value::render(&c.$($path).+),
            set: |c, v| {
                c.$($path).+ = Value::parse(v)?;
                Ok(())
            },
        }
    };
}

pub const FIELDS: &[Field] = &[
    field!("seed", seed),
    field!("out", out),
    field!("world.segment_length", world.segment_length),
    field!("world.lane_count", world.lane_count),
    field!("world.lane_width", world.lane_width),
    field!("world.command_distance", world.command_distance),
    field!("world.ramp_start_distance", world.ramp_start_distance),
    field!("world.merge_position", world.merge_position),
    field!("world.init_speed_range", world.init_speed_range),
    field!("world.departure_interval_range", world.departure_interval_range),
    field!("world.speed_limit_range", world.speed_limit_range),
    field!("world.aggressive_fraction", world.aggressive_fraction),
    field!("world.defensive_fraction", world.defensive_fraction),
    field!("world.dt", world.dt),
    field!("world.max_episode_steps", world.max_episode_steps),
    field!("world.lg_action_range", world.lg_action_range),
    field!("world.lt_action_max", world.lt_action_max),
    field!("world.gap_min", world.gap_min),
    field!("world.sensor_range", world.sensor_range),
    field!("world.warmup_time", world.warmup_time),
    field!("world.max_command_wait", world.max_command_wait),
    field!("world.vehicle_length", world.vehicle_length),
    field!("world.vehicle_width", world.vehicle_width),
    field!("world.theta_limit", world.theta_limit),
    field!("world.shoulder_width", world.shoulder_width),
    field!("train.episodes", train.episodes),
    field!("train.batch_size", train.batch_size),
    field!("train.buffer_capacity", train.buffer_capacity),
    field!("train.gamma", train.gamma),
    field!("train.target_sync", train.target_sync),
    field!("train.learning_rate", train.learning_rate),
    field!("train.updates_per_step", train.updates_per_step),
    field!("train.pretrain_episodes", train.pretrain_episodes),
    field!("train.sigma0", train.sigma0),
    field!("train.noise_tau", train.noise_tau),
    field!("train.checkpoints", train.checkpoints),
    field!("train.eval_episodes", train.eval_episodes),
    field!("train.value_hidden", train.shape.value_hidden),
    field!("train.action_hidden", train.shape.action_hidden),
    field!("train.initial_t_trs", train.initial_t_trs),
    field!("reward.w_s1", reward.w_s1),
    field!("reward.w_s2", reward.w_s2),
    field!("reward.w_c1", reward.w_c1),
    field!("reward.w_c2", reward.w_c2),
    field!("reward.w_t", reward.w_t),
    field!("reward.d_ref", reward.d_ref),
    field!("reward.collision_penalty", reward.collision_penalty),
];

/// One `key = value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: String,
}

fn split_assignment(text: &str) -> Option<(String, String)> {
    let (k, v) = text.split_once('=')?;
    let k = k.trim();
    (!k.is_empty()).then(|| (k.to_string(), v.trim().to_string()))
}

/// Parses config-file text. `#` starts a comment; blank lines are skipped.
pub fn parse_entries(text: &str, source: &str) -> Result<Vec<Entry>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("{source}:{}", i + 1);
        let (key, value) = split_assignment(line)
            .ok_or_else(|| CliError::Config(format!("{origin}: expected `key = value`, got `{line}`")))?;
        out.push(Entry { key, value, origin });
    }
    Ok(out)
}

/// Parses `key=value` command-line overrides.
pub fn parse_overrides(args: &[String]) -> Result<Vec<Entry>, CliError> {
    args.iter()
        .map(|a| {
            split_assignment(a)
                .map(|(key, value)| Entry {
                    key,
                    value,
                    origin: "command line".into(),
                })
                .ok_or_else(|| CliError::Config(format!("override `{a}` is not of the form key=value")))
        })
        .collect()
}

pub fn read_config_file(path: &Path) -> Result<Vec<Entry>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_entries(&text, &path.display().to_string())
}

/// Values given by dedicated flags; they win over everything else.
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub episodes: Option<usize>,
}

/// Resolves the scenario, starts from its defaults and applies `entries` in order.
/// `fallback` is used when neither flags nor entries name a scenario.
pub fn build(entries: &[Entry], flags: &FlagValues, fallback: Option<Scenario>) -> Result<RunConfig, CliError> {
    let named = entries
        .iter()
        .rev()
        .find(|e| e.key == "scenario")
        .map(|e| {
            e.value
                .parse::<Scenario>()
                .map_err(|err| CliError::Config(format!("{}: {err}", e.origin)))
        })
        .transpose()?;
    let scenario = flags
        .scenario
        .or(named)
        .or(fallback)
        .ok_or_else(|| CliError::Config("no scenario given (use --scenario or a `scenario` key)".into()))?;

    let mut cfg = RunConfig::defaults(scenario);
    for e in entries.iter().filter(|e| e.key != "scenario") {
        cfg.set(&e.key, &e.value)
            .map_err(|msg| CliError::Config(format!("{}: {msg}", e.origin)))?;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(n) = flags.episodes {
        cfg.train.episodes = n;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}
