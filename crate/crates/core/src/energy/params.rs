use serde::{Deserialize, Serialize};

use super::{require_efficiency, require_positive, EnergyError, Node, Result};

fn one() -> f64 {
    1.0
}

/// Compute hardware of one node: power draw, time per batch, batches per
/// round, PUE and, for a parameter server, the fraction of a round spent on
/// model averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeProfile {
    pub power_w: f64,
    pub batch_time_s: f64,
    pub batches_per_round: u32,
    #[serde(default = "one")]
    pub pue: f64,
    #[serde(default = "one")]
    pub avg_fraction: f64,
}

impl ComputeProfile {
    pub fn new(
        power_w: f64,
        batch_time_s: f64,
        batches_per_round: u32,
        pue: f64,
        avg_fraction: f64,
    ) -> Result<Self> {
        let profile = Self {
            power_w,
            batch_time_s,
            batches_per_round,
            pue,
            avg_fraction,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Device-style profile: PUE 1, no averaging role.
    pub fn device(power_w: f64, batch_time_s: f64, batches_per_round: u32) -> Result<Self> {
        Self::new(power_w, batch_time_s, batches_per_round, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("power_w", self.power_w)?;
        require_positive("batch_time_s", self.batch_time_s)?;
        if self.batches_per_round < 1 {
            return Err(EnergyError::Invalid {
                field: "batches_per_round",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.pue >= 1.0 && self.pue.is_finite()) {
            return Err(EnergyError::Invalid {
                field: "pue",
                reason: format!("{} is below 1", self.pue),
            });
        }
        if !(self.avg_fraction > 0.0 && self.avg_fraction <= 1.0) {
            return Err(EnergyError::Invalid {
                field: "avg_fraction",
                reason: format!("{} is outside (0, 1]", self.avg_fraction),
            });
        }
        Ok(())
    }

    /// Joules per learning round, `P * T * B`. PUE is not applied.
    pub fn round_energy(&self) -> f64 {
        self.power_w * self.batch_time_s * f64::from(self.batches_per_round)
    }

    /// Computing efficiency in rounds per joule.
    pub fn rounds_per_joule(&self) -> f64 {
        1.0 / self.round_energy()
    }
}

/// Link energy efficiencies (bit/J) and payload sizes (bits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEfficiencies {
    pub ee_up: f64,
    pub ee_down: f64,
    /// Mesh/D2D efficiency. When absent, composed from `ee_up` and `ee_down`
    /// as a relay through the access point.
    #[serde(default)]
    pub ee_mesh: Option<f64>,
    pub model_bits: f64,
    pub dataset_bits_per_device: f64,
}

impl LinkEfficiencies {
    pub fn new(
        ee_up: f64,
        ee_down: f64,
        ee_mesh: Option<f64>,
        model_bits: f64,
        dataset_bits_per_device: f64,
    ) -> Result<Self> {
        let links = Self {
            ee_up,
            ee_down,
            ee_mesh,
            model_bits,
            dataset_bits_per_device,
        };
        links.validate()?;
        Ok(links)
    }

    pub fn validate(&self) -> Result<()> {
        require_efficiency("ee_up", self.ee_up)?;
        require_efficiency("ee_down", self.ee_down)?;
        if let Some(m) = self.ee_mesh {
            require_efficiency("ee_mesh", m)?;
        }
        require_positive("model_bits", self.model_bits)?;
        if !(self.dataset_bits_per_device >= 0.0 && self.dataset_bits_per_device.is_finite()) {
            return Err(EnergyError::Invalid {
                field: "dataset_bits_per_device",
                reason: format!("{} is negative or not finite", self.dataset_bits_per_device),
            });
        }
        Ok(())
    }

    /// Effective mesh efficiency.
    pub fn mesh(&self) -> Result<f64> {
        match self.ee_mesh {
            Some(m) => {
                require_efficiency("ee_mesh", m)?;
                Ok(m)
            }
            None => super::ee_mesh_compose(self.ee_up, self.ee_down),
        }
    }

    /// Model payloads are expected to be much smaller than raw datasets.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dataset_bits_per_device < self.model_bits {
            out.push(format!(
                "dataset_bits_per_device ({}) is smaller than model_bits ({})",
                self.dataset_bits_per_device, self.model_bits
            ));
        }
        out
    }
}

/// Source of the per-round device compute energy. Exactly one is configured;
/// the other is reported as implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceCompute {
    /// `E_k = P_k * T_k * B`.
    Profile(ComputeProfile),
    /// `E_k = ratio * E_0`.
    Ratio(f64),
}

/// Fleet size, scheduling parameters and compute hardware.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub total_devices: usize,
    pub active_per_round: usize,
    #[serde(default = "default_neighbors")]
    pub neighbors_per_round: usize,
    pub device_compute: DeviceCompute,
    pub center_profile: ComputeProfile,
}

fn default_neighbors() -> usize {
    1
}

impl FleetSpec {
    pub fn validate(&self) -> Result<()> {
        self.center_profile.validate()?;
        match self.device_compute {
            DeviceCompute::Profile(p) => p.validate()?,
            DeviceCompute::Ratio(r) => require_positive("compute_ratio", r)?,
        }
        if self.active_per_round > self.total_devices {
            return Err(EnergyError::InvalidFleet(format!(
                "active_per_round ({}) exceeds total_devices ({})",
                self.active_per_round, self.total_devices
            )));
        }
        Ok(())
    }

    /// Data-center / PS compute energy per round, without PUE.
    pub fn center_round_energy(&self) -> f64 {
        self.center_profile.round_energy()
    }

    /// Device compute energy per round. Device PUE is always 1.
    pub fn device_round_energy(&self) -> f64 {
        match self.device_compute {
            DeviceCompute::Profile(p) => p.round_energy(),
            DeviceCompute::Ratio(r) => r * self.center_round_energy(),
        }
    }

    /// Ratio of device to center compute energy per round, whichever way
    /// the device cost was configured.
    pub fn implied_ratio(&self) -> f64 {
        self.device_round_energy() / self.center_round_energy()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.implied_ratio();
        if ratio >= 1.0 {
            out.push(format!(
                "device compute energy per round is not below the center's (ratio {ratio:.4})"
            ));
        }
        if let DeviceCompute::Profile(p) = self.device_compute {
            if p.pue != 1.0 {
                out.push(format!("device pue {} is ignored; devices are billed at 1", p.pue));
            }
        }
        out
    }
}

/// Carbon intensity (kgCO2-eq/kWh) of the center and of every device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonIntensityMap {
    pub ci_center: f64,
    pub ci_device: Vec<f64>,
}

impl CarbonIntensityMap {
    pub fn new(ci_center: f64, ci_device: Vec<f64>) -> Result<Self> {
        let map = Self {
            ci_center,
            ci_device,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn uniform(ci: f64, devices: usize) -> Result<Self> {
        Self::new(ci, vec![ci; devices])
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("ci_center", self.ci_center)?;
        for &c in &self.ci_device {
            require_positive("ci_device", c)?;
        }
        Ok(())
    }

    pub fn intensity(&self, node: Node) -> Result<f64> {
        match node {
            Node::Center => Ok(self.ci_center),
            Node::Device(k) => self
                .ci_device
                .get(k)
                .copied()
                .ok_or(EnergyError::MissingRegion(node)),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ci_center: self.ci_center * factor,
            ci_device: self.ci_device.iter().map(|c| c * factor).collect(),
        }
    }
}
