use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Result, RunError};
use crate::energy::{CarbonIntensityMap, FleetSpec, LinkEfficiencies};

pub const MAX_AXES: usize = 3;
pub const MAX_POINTS: usize = 100_000;

/// Parameters a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "n")]
    Rounds,
    #[serde(rename = "K")]
    Devices,
    /// Sets `K` and scales `K_a` to keep the configured `K_a / K`.
    #[serde(rename = "K_proportional")]
    DevicesProportional,
    #[serde(rename = "K_a")]
    Active,
    #[serde(rename = "N")]
    Neighbors,
    /// Sets UL and DL efficiency together; mesh is composed from them.
    #[serde(rename = "ee")]
    Ee,
    #[serde(rename = "ee_up")]
    EeUp,
    #[serde(rename = "ee_down")]
    EeDown,
    #[serde(rename = "ee_mesh")]
    EeMesh,
    /// Same intensity at every node.
    #[serde(rename = "ci")]
    Ci,
    #[serde(rename = "ci_center")]
    CiCenter,
    /// Same intensity at every device.
    #[serde(rename = "ci_device")]
    CiDevice,
    #[serde(rename = "model_bits")]
    ModelBits,
    #[serde(rename = "dataset_bits")]
    DatasetBits,
    /// Data-center PUE.
    #[serde(rename = "pue")]
    Pue,
}

impl SweepParam {
    fn is_count(self) -> bool {
        matches!(
            self,
            SweepParam::Rounds
                | SweepParam::Devices
                | SweepParam::DevicesProportional
                | SweepParam::Active
                | SweepParam::Neighbors
        )
    }

    fn is_carbon(self) -> bool {
        matches!(self, SweepParam::Ci | SweepParam::CiCenter | SweepParam::CiDevice)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// Inclusive arithmetic range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl SweepAxis {
    pub fn values(param: SweepParam, values: Vec<f64>) -> Self {
        Self {
            param,
            values: Some(values),
            range: None,
        }
    }

    pub fn range(param: SweepParam, start: f64, stop: f64, step: f64) -> Self {
        Self {
            param,
            values: None,
            range: Some(Range { start, stop, step }),
        }
    }

    fn expand(&self, at: usize) -> Result<Vec<f64>> {
        let path = format!("sweep.axes[{at}]");
        let values = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if !(r.step > 0.0 && r.step.is_finite() && r.start.is_finite() && r.stop.is_finite()) {
                    return Err(RunError::config(
                        format!("{path}.range"),
                        "needs finite start/stop and a positive step",
                    ));
                }
                if r.stop < r.start {
                    return Err(RunError::config(format!("{path}.range"), "stop is below start"));
                }
                let count = ((r.stop - r.start) / r.step + 1e-9).floor() + 1.0;
                if count > MAX_POINTS as f64 {
                    return Err(RunError::config(
                        format!("{path}.range"),
                        format!("expands to more than {MAX_POINTS} values"),
                    ));
                }
                (0..count as usize).map(|i| r.start + i as f64 * r.step).collect()
            }
            _ => {
                return Err(RunError::config(path, "give exactly one of `values` or `range`"));
            }
        };
        if values.is_empty() {
            return Err(RunError::config(path, "axis has no values"));
        }
        for &v in &values {
            let ok = if self.param.is_count() {
                v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64
            } else {
                v > 0.0 && !v.is_nan()
            };
            if !ok {
                return Err(RunError::config(
                    format!("{path}.values"),
                    format!("{v} is not a valid value for `{}`", self.param),
                ));
            }
        }
        Ok(values)
    }
}

/// Cartesian product of up to three axes; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
}

impl SweepSpec {
    pub fn new(axes: Vec<SweepAxis>) -> Self {
        Self { axes }
    }

    /// Every grid point as a list of `(param, value)` assignments. An empty
    /// spec is the single base point.
    pub fn points(&self) -> Result<Vec<Vec<(SweepParam, f64)>>> {
        if self.axes.len() > MAX_AXES {
            return Err(RunError::config(
                "sweep.axes",
                format!("{} axes given, at most {MAX_AXES} allowed", self.axes.len()),
            ));
        }
        let expanded = self
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| a.expand(i))
            .collect::<Result<Vec<_>>>()?;
        let total = expanded
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.len()))
            .filter(|&t| t <= MAX_POINTS)
            .ok_or_else(|| {
                RunError::config("sweep", format!("grid exceeds {MAX_POINTS} points"))
            })?;
        let mut points = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut point = vec![(SweepParam::Rounds, 0.0); expanded.len()];
            for (a, values) in expanded.iter().enumerate().rev() {
                point[a] = (self.axes[a].param, values[idx % values.len()]);
                idx /= values.len();
            }
            points.push(point);
        }
        Ok(points)
    }
}

/// Fully resolved inputs for one closed-form evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub rounds: usize,
    pub fleet: FleetSpec,
    pub links: LinkEfficiencies,
    pub ci: CarbonIntensityMap,
}

impl Scenario {
    /// Applies `point` on top of the configuration. Carbon parameters are
    /// applied after the fleet size is known.
    pub fn at(config: &ExperimentConfig, rounds: usize, point: &[(SweepParam, f64)]) -> Result<Self> {
        let mut fleet = config.fleet;
        let mut links = config.links;
        let mut rounds = rounds;
        for &(param, v) in point.iter().filter(|(p, _)| !p.is_carbon()) {
            match param {
                SweepParam::Rounds => rounds = v as usize,
                SweepParam::Devices => fleet.total_devices = v as usize,
                SweepParam::DevicesProportional => {
                    let k = v as usize;
                    let base = config.fleet.total_devices.max(1) as f64;
                    let share = config.fleet.active_per_round as f64 / base;
                    fleet.total_devices = k;
                    fleet.active_per_round = (share * v).round() as usize;
                }
                SweepParam::Active => fleet.active_per_round = v as usize,
                SweepParam::Neighbors => fleet.neighbors_per_round = v as usize,
                SweepParam::Ee => {
                    links.ee_up = v;
                    links.ee_down = v;
                    links.ee_mesh = None;
                }
                SweepParam::EeUp => links.ee_up = v,
                SweepParam::EeDown => links.ee_down = v,
                SweepParam::EeMesh => links.ee_mesh = Some(v),
                SweepParam::ModelBits => links.model_bits = v,
                SweepParam::DatasetBits => links.dataset_bits_per_device = v,
                SweepParam::Pue => fleet.center_profile.pue = v,
                SweepParam::Ci | SweepParam::CiCenter | SweepParam::CiDevice => unreachable!(),
            }
        }
        if fleet.active_per_round > fleet.total_devices {
            return Err(RunError::config(
                "sweep",
                format!(
                    "grid point has K_a = {} above K = {}",
                    fleet.active_per_round, fleet.total_devices
                ),
            ));
        }
        let k = fleet.total_devices;
        let mut ci = config.carbon.resolve(k)?;
        for &(param, v) in point.iter().filter(|(p, _)| p.is_carbon()) {
            match param {
                SweepParam::Ci => ci = CarbonIntensityMap::uniform(v, k)?,
                SweepParam::CiCenter => ci.ci_center = v,
                SweepParam::CiDevice => ci.ci_device = vec![v; k],
                _ => unreachable!(),
            }
        }
        Ok(Self {
            rounds,
            fleet,
            links,
            ci,
        })
    }
}
