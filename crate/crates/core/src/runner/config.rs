use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, RunError, SweepSpec};
use crate::energy::{
    CarbonIntensityMap, DeviceCompute, DownlinkMode, EnergyError, FleetSpec, LinkEfficiencies,
    Region,
};
use crate::fedsim::{LearnerSpec, PartitionMode};
use crate::topology::{Topology, TopologyKind};
use crate::Scheme;

/// One experiment, as read from a JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub fleet: FleetSpec,
    pub links: LinkEfficiencies,
    pub carbon: CarbonConfig,
    #[serde(default)]
    pub topology: TopologyConfig,
    /// Fixed number of rounds (analytic mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Target validation loss (simulation mode, together with `learner`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner: Option<LearnerConfig>,
    #[serde(default = "default_period")]
    pub retrain_period_h: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dl_broadcast: bool,
    #[serde(default)]
    pub literal_fedavg: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Free text kept with the configuration (assumptions, sources).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_period() -> f64 {
    3.0
}

/// Carbon intensities: a named region for every node, one value for every
/// node, or explicit center and per-device values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_device: Option<Vec<f64>>,
}

impl CarbonConfig {
    pub fn preset(region: Region) -> Self {
        Self {
            preset: Some(region),
            ..Self::default()
        }
    }

    pub fn uniform(ci: f64) -> Self {
        Self {
            uniform: Some(ci),
            ..Self::default()
        }
    }

    /// Builds the intensity map for `devices` devices.
    pub fn resolve(&self, devices: usize) -> Result<CarbonIntensityMap> {
        let map = match (self.preset, self.uniform, self.ci_center, &self.ci_device) {
            (Some(region), None, None, None) => {
                CarbonIntensityMap::uniform(region.intensity(), devices)
            }
            (None, Some(ci), None, None) => CarbonIntensityMap::uniform(ci, devices),
            (None, None, Some(center), Some(list)) => {
                if list.len() != devices {
                    return Err(RunError::config(
                        "carbon.ci_device",
                        format!("has {} entries for {devices} devices", list.len()),
                    ));
                }
                CarbonIntensityMap::new(center, list.clone())
            }
            _ => {
                return Err(RunError::config(
                    "carbon",
                    "give exactly one of `preset`, `uniform`, or both `ci_center` and `ci_device`",
                ))
            }
        };
        map.map_err(|e| RunError::config("carbon", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            kind: TopologyKind::Ring,
            edges: None,
        }
    }
}

impl TopologyConfig {
    pub fn build(&self, devices: usize) -> Result<Topology> {
        Topology::from_kind(self.kind, devices, self.edges.as_deref())
            .map_err(|e| RunError::config("topology", e.to_string()))
    }
}

/// The learning task used to measure rounds-to-target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub model: LearnerSpec,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
}

fn default_max_rounds() -> usize {
    200
}

/// Synthetic Gaussian clusters; class count and dimension come from the
/// model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub per_class: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    #[serde(default)]
    pub mode: PartitionMode,
    #[serde(default = "one")]
    pub shards_per_device: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            mode: PartitionMode::Iid,
            shards_per_device: 1,
        }
    }
}

fn one() -> usize {
    1
}

/// What drives the number of rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode<'a> {
    Fixed(usize),
    Learn {
        learner: &'a LearnerConfig,
        target_loss: f64,
    },
}

impl ExperimentConfig {
    pub fn mode(&self) -> Result<RunMode<'_>> {
        match (self.rounds, self.target_loss, &self.learner) {
            (Some(_), Some(_), _) => Err(RunError::config(
                "rounds",
                "`rounds` and `target_loss` are mutually exclusive",
            )),
            (Some(n), None, None) => Ok(RunMode::Fixed(n)),
            (Some(_), None, Some(_)) => Err(RunError::config(
                "learner",
                "a learner is only used with `target_loss`, not with fixed `rounds`",
            )),
            (None, Some(t), Some(learner)) => Ok(RunMode::Learn {
                learner,
                target_loss: t,
            }),
            (None, Some(_), None) => Err(RunError::config("learner", "`target_loss` needs a learner")),
            (None, None, _) => Err(RunError::config(
                "rounds",
                "give either `rounds` or `target_loss` with a learner",
            )),
        }
    }

    pub fn downlink(&self) -> DownlinkMode {
        if self.dl_broadcast {
            DownlinkMode::Broadcast
        } else {
            DownlinkMode::Unicast
        }
    }

    pub fn intensities(&self) -> Result<CarbonIntensityMap> {
        self.carbon.resolve(self.fleet.total_devices)
    }

    /// Checks every cross-field invariant. Parsing already rejected unknown
    /// keys and wrong types.
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(RunError::config("schemes", "at least one scheme is required"));
        }
        validate_fleet(&self.fleet)?;
        validate_links(&self.links)?;
        if self.schemes.contains(&Scheme::Cfl) && self.fleet.neighbors_per_round < 1 {
            return Err(RunError::config(
                "fleet.neighbors_per_round",
                "CFL needs at least one neighbor per round",
            ));
        }
        self.intensities()?;
        if !(self.retrain_period_h > 0.0 && self.retrain_period_h.is_finite()) {
            return Err(RunError::config(
                "retrain_period_h",
                format!("{} is not a positive number of hours", self.retrain_period_h),
            ));
        }
        match self.mode()? {
            RunMode::Fixed(_) => {}
            RunMode::Learn {
                learner,
                target_loss,
            } => {
                if !(target_loss > 0.0 && target_loss.is_finite()) {
                    return Err(RunError::config(
                        "target_loss",
                        format!("{target_loss} is not a positive loss"),
                    ));
                }
                validate_learner(learner)?;
                if self.sweep.is_some() {
                    return Err(RunError::config("sweep", "sweeps need fixed `rounds`"));
                }
                let topology = self.topology.build(self.fleet.total_devices)?;
                for &scheme in &self.schemes {
                    crate::topology::validate_topology(&topology, scheme)
                        .map_err(|e| RunError::config("topology", e.to_string()))?;
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            sweep.points()?;
        }
        Ok(())
    }
}

fn energy_to_config(prefix: &str, e: EnergyError) -> RunError {
    let path = match &e {
        EnergyError::InvalidEfficiency { what, .. } => format!("{prefix}.{what}"),
        EnergyError::Invalid { field, .. } => format!("{prefix}.{field}"),
        _ => prefix.to_string(),
    };
    RunError::config(path, e.to_string())
}

fn validate_fleet(fleet: &FleetSpec) -> Result<()> {
    if fleet.active_per_round > fleet.total_devices {
        return Err(RunError::config(
            "fleet.active_per_round",
            format!(
                "{} active devices per round exceed total_devices = {}",
                fleet.active_per_round, fleet.total_devices
            ),
        ));
    }
    fleet
        .center_profile
        .validate()
        .map_err(|e| energy_to_config("fleet.center_profile", e))?;
    match fleet.device_compute {
        DeviceCompute::Profile(p) => p
            .validate()
            .map_err(|e| energy_to_config("fleet.device_compute.profile", e)),
        DeviceCompute::Ratio(_) => fleet
            .validate()
            .map_err(|_| RunError::config("fleet.device_compute.ratio", "must be positive and finite")),
    }
}

fn validate_links(links: &LinkEfficiencies) -> Result<()> {
    links.validate().map_err(|e| energy_to_config("links", e))
}

fn validate_learner(learner: &LearnerConfig) -> Result<()> {
    learner
        .model
        .validate()
        .map_err(|e| RunError::config("learner.model", e.to_string()))?;
    if learner.dataset.per_class < 1 {
        return Err(RunError::config("learner.dataset.per_class", "must be at least 1"));
    }
    if !(learner.dataset.spread >= 0.0 && learner.dataset.spread.is_finite()) {
        return Err(RunError::config("learner.dataset.spread", "must be finite and non-negative"));
    }
    if learner.partition.shards_per_device < 1 {
        return Err(RunError::config(
            "learner.partition.shards_per_device",
            "must be at least 1",
        ));
    }
    if learner.max_rounds < 1 {
        return Err(RunError::config("learner.max_rounds", "must be at least 1"));
    }
    Ok(())
}

/// Parses and validates a JSON configuration. Type errors carry the path of
/// the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        RunError::config(path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::config(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schemes": ["CL"],
        "fleet": {
            "total_devices": 60,
            "active_per_round": 40,
            "device_compute": {"profile": {"power_w": 5.1, "batch_time_s": 0.19, "batches_per_round": 3}},
            "center_profile": {"power_w": 182, "batch_time_s": 0.02, "batches_per_round": 3, "pue": 1.67, "avg_fraction": 0.1}
        },
        "links": {"ee_up": 2e5, "ee_down": 2e5, "model_bits": 2.32e6, "dataset_bits_per_device": 2.4e8},
        "carbon": {"preset": "IT"},
        "rounds": 25
    }"#;

    fn with(edit: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        edit(&mut v);
        v.to_string()
    }

    fn config_path(r: Result<ExperimentConfig>) -> String {
        match r {
            Err(RunError::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_italy() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.mode().unwrap(), RunMode::Fixed(25));
        let ci = c.intensities().unwrap();
        assert_eq!(ci.ci_center, 0.28);
        assert!(ci.ci_device.iter().all(|&x| x == 0.28));
        assert_eq!(ci.ci_device.len(), 60);
        assert_eq!(c.retrain_period_h, 3.0);
    }

    #[test]
    fn active_above_total_names_field() {
        let text = with(|v| v["fleet"]["active_per_round"] = 61.into());
        assert_eq!(config_path(parse_config(&text)), "fleet.active_per_round");
    }

    #[test]
    fn rounds_and_target_are_exclusive() {
        let text = with(|v| v["target_loss"] = 0.1.into());
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_is_an_error_with_path() {
        let text = with(|v| v["links"]["ee_sideways"] = 1.into());
        let path = config_path(parse_config(&text));
        assert!(path.starts_with("links"), "{path}");
    }

    #[test]
    fn wrong_type_reports_nested_path() {
        let text = with(|v| v["fleet"]["center_profile"]["power_w"] = "lots".into());
        assert_eq!(config_path(parse_config(&text)), "fleet.center_profile.power_w");
    }

    #[test]
    fn ci_device_length_checked() {
        let text = with(|v| {
            v["carbon"] = serde_json::json!({"ci_center": 0.3, "ci_device": [0.1, 0.2]});
        });
        assert_eq!(config_path(parse_config(&text)), "carbon.ci_device");
    }

    #[test]
    fn conflicting_carbon_sources_rejected() {
        let text = with(|v| v["carbon"]["uniform"] = 0.5.into());
        assert_eq!(config_path(parse_config(&text)), "carbon");
    }

    #[test]
    fn learner_without_target_rejected() {
        let text = with(|v| {
            v.as_object_mut().unwrap().remove("rounds");
        });
        assert_eq!(config_path(parse_config(&text)), "rounds");
    }

    #[test]
    fn round_trips_through_json() {
        let c = parse_config(MINIMAL).unwrap();
        let again = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn missing_file_is_config_error() {
        let err = load_config("/definitely/not/here.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
