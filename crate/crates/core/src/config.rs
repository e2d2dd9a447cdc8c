//! Scenario configuration: presets and the `key=value` file format.
//!
//! ```text
//! # scenario 2 at two densities, three seeds
//! scenario=2
//! nodes=25,150
//! seeds=3
//! sim_time=300
//! ```
//!
//! The preset named by `scenario` is expanded first, wherever the line sits;
//! every other key then overrides one field. Unknown keys, repeated keys and
//! out-of-range values are rejected with the offending line number.

use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::mobility::{GridSpec, MobilityParams};
use crate::phy::RadioParams;
use crate::routing::{RoutingParams, ZoneMode};
use crate::traffic::TrafficParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    Preset(u8),
    Custom,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::Preset(n) => write!(f, "{n}"),
            ScenarioId::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "2" | "3" => Ok(ScenarioId::Preset(s.as_bytes()[0] - b'0')),
            "custom" => Ok(ScenarioId::Custom),
            _ => Err("expected 1, 2, 3 or custom".into()),
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioId,
    pub node_count: usize,
    pub sim_time: f64,
    pub grid: GridSpec,
    pub mobility: MobilityParams,
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub routing: RoutingParams,
    /// When off, overlapping frames never collide.
    pub contention: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.into(),
            message,
        };
        self.grid.validate().map_err(|e| invalid("grid", e.to_string()))?;
        self.mobility.validate().map_err(|e| invalid("mobility", e.to_string()))?;
        if self.node_count < 2 {
            return Err(invalid("nodes", format!("need at least 2 nodes, got {}", self.node_count)));
        }
        if !(self.sim_time > 0.0 && self.sim_time.is_finite()) {
            return Err(invalid("sim_time", format!("must be positive, got {}", self.sim_time)));
        }
        if self.traffic.flows > 0 && !(self.sim_time - 2.0 * self.traffic.warmup > 0.0) {
            return Err(invalid(
                "warmup",
                format!(
                    "warm-up and cool-down of {} s leave no traffic window in {} s",
                    self.traffic.warmup, self.sim_time
                ),
            ));
        }
        let pairs = self.node_count * (self.node_count - 1);
        if self.traffic.flows > pairs {
            return Err(invalid(
                "flows",
                format!("{} flows need more than the {pairs} ordered pairs of {} nodes", self.traffic.flows, self.node_count),
            ));
        }
        if !(self.traffic.interval > 0.0) {
            return Err(invalid("cbr_interval", "must be positive".into()));
        }
        if self.traffic.packet_size == 0 {
            return Err(invalid("packet_size", "must be positive".into()));
        }
        if !(self.radio.range > 0.0) || !(self.radio.bitrate > 0.0) {
            return Err(invalid("range", "range and bitrate must be positive".into()));
        }
        if self.radio.propagation_delay < 0.0 || self.radio.backoff_window < 0.0 || self.radio.broadcast_jitter < 0.0 {
            return Err(invalid("radio", "delays must be non-negative".into()));
        }
        if !(self.routing.discovery_timeout > 0.0) || self.routing.max_discovery_attempts == 0 {
            return Err(invalid("discovery_timeout", "timeout and attempts must be positive".into()));
        }
        if self.routing.queue_limit == 0 {
            return Err(invalid("queue_limit", "must be positive".into()));
        }
        Ok(())
    }
}

/// A scenario and the sweep over node counts and seeds to run it for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub sim_time: f64,
    pub grid: GridSpec,
    pub mobility: MobilityParams,
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub routing: RoutingParams,
    pub contention: bool,
    pub node_counts: Vec<usize>,
    pub seeds: Vec<u64>,
}

/// (speed change probability, min speed, turn probability) per preset.
const PRESETS: [(f64, f64, f64); 3] = [(0.25, 10.0, 0.25), (0.5, 20.0, 0.5), (0.75, 30.0, 0.75)];

pub const DEFAULT_NODE_COUNTS: [usize; 6] = [25, 50, 75, 100, 125, 150];

impl ScenarioConfig {
    /// Expands a preset. `Custom` starts from the scenario-1 values.
    pub fn preset(id: ScenarioId) -> Self {
        let idx = match id {
            ScenarioId::Preset(n @ 1..=3) => usize::from(n) - 1,
            _ => 0,
        };
        let (speed_change_prob, min_speed, turn_prob) = PRESETS[idx];
        let grid = GridSpec::default();
        Self {
            scenario: id,
            sim_time: 1000.0,
            grid,
            mobility: MobilityParams {
                mean_speed: 10.0,
                min_speed,
                speed_change_prob,
                turn_prob,
                update_interval: 1.0,
            },
            radio: RadioParams::default(),
            traffic: TrafficParams::default(),
            routing: RoutingParams {
                area_width: grid.area_width,
                area_height: grid.area_height,
                ..RoutingParams::default()
            },
            contention: true,
            node_counts: DEFAULT_NODE_COUNTS.to_vec(),
            seeds: (1..=10).collect(),
        }
    }

    pub fn run_config(&self, node_count: usize) -> RunConfig {
        RunConfig {
            scenario: self.scenario,
            node_count,
            sim_time: self.sim_time,
            grid: self.grid,
            mobility: self.mobility,
            radio: self.radio,
            traffic: self.traffic,
            routing: RoutingParams {
                area_width: self.grid.area_width,
                area_height: self.grid.area_height,
                ..self.routing
            },
            contention: self.contention,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_counts.is_empty() {
            return Err(ConfigError::Invalid {
                key: "nodes".into(),
                message: "no node counts".into(),
            });
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid {
                key: "seeds".into(),
                message: "no seeds".into(),
            });
        }
        for &n in &self.node_counts {
            self.run_config(n).validate()?;
        }
        Ok(())
    }
}

struct Line<'a> {
    number: usize,
    key: &'a str,
    value: &'a str,
}

impl Line<'_> {
    fn bad(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            line: self.number,
            key: self.key.into(),
            value: self.value.into(),
            reason: reason.into(),
        }
    }

    fn parse<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.value.parse().map_err(|e: T::Err| self.bad(e.to_string()))
    }

    fn number(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.parse()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad("must be finite"))
        }
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.bad("must be > 0"))
        }
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.bad("must be >= 0"))
        }
    }

    fn probability(&self) -> Result<f64, ConfigError> {
        let v = self.number()?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.bad("must lie in [0,1]"))
        }
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(self.bad("expected true or false")),
        }
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "sim_time",
    "area_width",
    "area_height",
    "blocks_x",
    "blocks_y",
    "mean_speed",
    "min_speed",
    "speed_change_probability",
    "turn_probability",
    "update_interval",
    "range",
    "bitrate",
    "propagation_delay",
    "max_unicast_retries",
    "backoff_window",
    "broadcast_jitter",
    "packet_size",
    "flows",
    "cbr_interval",
    "warmup",
    "nodes",
    "seeds",
    "first_seed",
    "discovery_timeout",
    "max_discovery_attempts",
    "queue_limit",
    "fallback",
    "zone_mode",
    "contention",
];

/// Parses a configuration file. Presets come first, overrides after, then
/// the whole result is validated.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: number,
                text: content.into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: number,
                key: key.into(),
            });
        }
        if lines.iter().any(|l: &Line| l.key == key) {
            return Err(ConfigError::Duplicate {
                line: number,
                key: key.into(),
            });
        }
        lines.push(Line { number, key, value });
    }

    let scenario = match lines.iter().find(|l| l.key == "scenario") {
        Some(l) => l.value.parse::<ScenarioId>().map_err(|e| l.bad(e))?,
        None => ScenarioId::Custom,
    };
    let mut cfg = ScenarioConfig::preset(scenario);
    let mut seed_count = cfg.seeds.len() as u64;
    let mut first_seed = 1u64;

    for l in &lines {
        match l.key {
            "scenario" => {}
            "sim_time" => cfg.sim_time = l.positive()?,
            "area_width" => cfg.grid.area_width = l.positive()?,
            "area_height" => cfg.grid.area_height = l.positive()?,
            "blocks_x" => cfg.grid.blocks_x = positive_int(l)?,
            "blocks_y" => cfg.grid.blocks_y = positive_int(l)?,
            "mean_speed" => cfg.mobility.mean_speed = l.non_negative()?,
            "min_speed" => cfg.mobility.min_speed = l.non_negative()?,
            "speed_change_probability" => cfg.mobility.speed_change_prob = l.probability()?,
            "turn_probability" => cfg.mobility.turn_prob = l.probability()?,
            "update_interval" => cfg.mobility.update_interval = l.positive()?,
            "range" => cfg.radio.range = l.positive()?,
            "bitrate" => cfg.radio.bitrate = l.positive()?,
            "propagation_delay" => cfg.radio.propagation_delay = l.non_negative()?,
            "max_unicast_retries" => cfg.radio.max_unicast_retries = l.parse()?,
            "backoff_window" => cfg.radio.backoff_window = l.non_negative()?,
            "broadcast_jitter" => cfg.radio.broadcast_jitter = l.non_negative()?,
            "packet_size" => cfg.traffic.packet_size = positive_int(l)?,
            "flows" => cfg.traffic.flows = l.parse()?,
            "cbr_interval" => cfg.traffic.interval = l.positive()?,
            "warmup" => cfg.traffic.warmup = l.non_negative()?,
            "nodes" => {
                cfg.node_counts = l
                    .value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>().map_err(|e| l.bad(e.to_string())))
                    .collect::<Result<_, _>>()?;
                if cfg.node_counts.iter().any(|&n| n < 2) {
                    return Err(l.bad("every node count must be at least 2"));
                }
            }
            "seeds" => seed_count = positive_int(l)?,
            "first_seed" => first_seed = l.parse()?,
            "discovery_timeout" => cfg.routing.discovery_timeout = l.positive()?,
            "max_discovery_attempts" => cfg.routing.max_discovery_attempts = positive_int(l)?,
            "queue_limit" => cfg.routing.queue_limit = positive_int(l)?,
            "fallback" => cfg.routing.fallback = l.flag()?,
            "zone_mode" => {
                cfg.routing.zone_mode = match l.value {
                    "lar1" => ZoneMode::Lar1,
                    "flood" => ZoneMode::Flood,
                    _ => return Err(l.bad("expected lar1 or flood")),
                }
            }
            "contention" => cfg.contention = l.flag()?,
            other => unreachable!("key {other} is listed but not handled"),
        }
    }
    cfg.seeds = (first_seed..first_seed + seed_count).collect();
    cfg.routing.area_width = cfg.grid.area_width;
    cfg.routing.area_height = cfg.grid.area_height;
    cfg.validate()?;
    Ok(cfg)
}

fn positive_int<T: FromStr + PartialOrd + Default>(l: &Line) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    let v: T = l.parse()?;
    if v > T::default() {
        Ok(v)
    } else {
        Err(l.bad("must be > 0"))
    }
}
