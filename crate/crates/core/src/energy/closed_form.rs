use serde::{Deserialize, Serialize};

use super::{
    require_efficiency, Category, ComputeProfile, EnergyBreakdown, EnergyError, FleetSpec, Ledger,
    LinkEfficiencies, Node, Result,
};
use crate::Scheme;

/// Compute energy of one learning round, `P * T * B` (no PUE).
pub fn round_compute_energy(profile: &ComputeProfile) -> f64 {
    profile.round_energy()
}

/// Energy to move `bits` over a link with efficiency `ee` (bit/J).
pub fn transfer_energy(bits: f64, ee: f64) -> Result<f64> {
    require_efficiency("ee", ee)?;
    if !(bits >= 0.0) {
        return Err(EnergyError::Invalid {
            field: "bits",
            reason: format!("{bits} is negative"),
        });
    }
    Ok(bits / ee)
}

/// Efficiency of a device-to-device hop relayed through an access point:
/// an uplink followed by a downlink, `1 / (1/up + 1/down)`.
///
/// Evaluated as `up * down / (up + down)`, which is exact for equal legs.
pub fn ee_mesh_compose(ee_up: f64, ee_down: f64) -> Result<f64> {
    require_efficiency("ee_up", ee_up)?;
    require_efficiency("ee_down", ee_down)?;
    Ok(match (ee_up.is_infinite(), ee_down.is_infinite()) {
        (true, _) => ee_down,
        (false, true) => ee_up,
        (false, false) => ee_up * ee_down / (ee_up + ee_down),
    })
}

/// Link efficiency (bit/J) from transmit power and net throughput.
pub fn ee_from_link(power_w: f64, throughput_bps: f64) -> Result<f64> {
    super::require_positive("power_w", power_w)?;
    super::require_positive("throughput_bps", throughput_bps)?;
    Ok(throughput_bps / power_w)
}

/// How the parameter server's model is delivered each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownlinkMode {
    /// One transmission per device per round.
    #[default]
    Unicast,
    /// One transmission per round.
    Broadcast,
}

/// Which devices take turns under round-robin activation, and how many mesh
/// neighbors each actually reaches per activation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participation {
    pool: Vec<usize>,
    neighbor_counts: Option<Vec<usize>>,
}

impl Participation {
    /// All `devices` rotate; every activation reaches the fleet's `N`.
    pub fn all(devices: usize) -> Self {
        Self {
            pool: (0..devices).collect(),
            neighbor_counts: None,
        }
    }

    /// `pool` lists the rotating device ids in order. `neighbor_counts[k]` is
    /// the number of neighbors device `k` reaches when active.
    pub fn new(pool: Vec<usize>, neighbor_counts: Option<Vec<usize>>) -> Self {
        Self {
            pool,
            neighbor_counts,
        }
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    /// Number of times each pool member is active over `rounds` rounds of
    /// `active` devices, in pool order.
    ///
    /// Round `t` activates pool positions `t*active .. t*active + active`
    /// modulo the pool size, so over `rounds` rounds position `j` is hit
    /// `floor(total / P) + [j < total mod P]` times.
    pub fn activation_counts(&self, active: usize, rounds: usize) -> Result<Vec<(usize, usize)>> {
        let p = self.pool.len();
        if active > p {
            return Err(EnergyError::InvalidFleet(format!(
                "active_per_round ({active}) exceeds the {p} schedulable devices"
            )));
        }
        if p == 0 {
            return Ok(Vec::new());
        }
        let total = active * rounds;
        let (base, extra) = (total / p, total % p);
        Ok(self
            .pool
            .iter()
            .enumerate()
            .map(|(j, &k)| (k, base + usize::from(j < extra)))
            .collect())
    }

    fn neighbors_of(&self, device: usize, fleet_n: usize) -> usize {
        match &self.neighbor_counts {
            Some(counts) => counts.get(device).copied().unwrap_or(0),
            None => fleet_n,
        }
    }
}

/// Centralized learning: one-time raw-data upload from every device plus
/// `n` rounds of data-center compute (with PUE).
pub fn energy_cl(n: usize, fleet: &FleetSpec, links: &LinkEfficiencies) -> Result<EnergyBreakdown> {
    let k = fleet.total_devices;
    let pue = fleet.center_profile.pue;
    let e0 = fleet.center_round_energy();
    let upload = transfer_energy(links.dataset_bits_per_device, links.ee_up)?;

    let mut ledger = Ledger::new();
    let compute_center_j = pue * n as f64 * e0;
    ledger.add(Node::Center, Category::Compute, compute_center_j);
    for d in 0..k {
        ledger.add(Node::Device(d), Category::Uplink, upload);
    }
    Ok(EnergyBreakdown {
        compute_device_j: 0.0,
        compute_center_j,
        comm_up_j: k as f64 * links.dataset_bits_per_device / links.ee_up,
        comm_down_j: 0.0,
        comm_mesh_j: 0.0,
        per_node_j: ledger,
    })
}

/// Parameter-server federated learning over `n` rounds with round-robin
/// activation of every device.
pub fn energy_fl(
    n: usize,
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
    downlink: DownlinkMode,
) -> Result<EnergyBreakdown> {
    energy_fl_with(n, fleet, links, downlink, &Participation::all(fleet.total_devices))
}

/// [`energy_fl`] with an explicit activation pool.
///
/// Per round: the PS averages (`pue * avg_fraction * E_0`), sends the global
/// model to every device (or once, when broadcasting) billed with the PS's
/// PUE, and each of the `K_a` active devices trains (`E_k`) and uploads.
pub fn energy_fl_with(
    n: usize,
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
    downlink: DownlinkMode,
    participation: &Participation,
) -> Result<EnergyBreakdown> {
    let ka = fleet.active_per_round;
    check_active(fleet)?;
    let counts = participation.activation_counts(ka, n)?;
    let center = &fleet.center_profile;
    let e0 = center.round_energy();
    let ek = fleet.device_round_energy();
    let bits = links.model_bits;
    let up_each = transfer_energy(bits, links.ee_up)?;
    let dl_each = transfer_energy(bits, links.ee_down)?;
    let nf = n as f64;

    let receivers = match downlink {
        DownlinkMode::Unicast => fleet.total_devices as f64,
        DownlinkMode::Broadcast => 1.0,
    };
    let compute_center_j = center.pue * nf * center.avg_fraction * e0;
    let comm_down_j = center.pue * nf * receivers * bits / links.ee_down;
    let comm_up_j = nf * ka as f64 * bits / links.ee_up;
    let compute_device_j = nf * ka as f64 * ek;

    let mut ledger = Ledger::new();
    ledger.add(Node::Center, Category::Compute, compute_center_j);
    ledger.add(Node::Center, Category::Downlink, center.pue * nf * receivers * dl_each);
    for (d, c) in counts {
        let c = c as f64;
        ledger.add(Node::Device(d), Category::Compute, c * ek);
        ledger.add(Node::Device(d), Category::Uplink, c * up_each);
    }
    Ok(EnergyBreakdown {
        compute_device_j,
        compute_center_j,
        comm_up_j,
        comm_down_j,
        comm_mesh_j: 0.0,
        per_node_j: ledger,
    })
}

/// Consensus-driven federated learning over `n` rounds: device compute plus
/// `N` mesh transmissions per active device per round. No center terms.
pub fn energy_cfl(n: usize, fleet: &FleetSpec, links: &LinkEfficiencies) -> Result<EnergyBreakdown> {
    energy_cfl_with(n, fleet, links, &Participation::all(fleet.total_devices))
}

/// [`energy_cfl`] with an explicit activation pool and per-device neighbor
/// counts.
pub fn energy_cfl_with(
    n: usize,
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
    participation: &Participation,
) -> Result<EnergyBreakdown> {
    let ka = fleet.active_per_round;
    let big_n = fleet.neighbors_per_round;
    check_active(fleet)?;
    if big_n < 1 {
        return Err(EnergyError::InvalidFleet(
            "neighbors_per_round must be at least 1 for CFL".into(),
        ));
    }
    let counts = participation.activation_counts(ka, n)?;
    let ek = fleet.device_round_energy();
    let bits = links.model_bits;
    let ee_mesh = links.mesh()?;
    let mesh_each = transfer_energy(bits, ee_mesh)?;

    let links_used: usize = match participation.neighbor_counts {
        None => n * ka * big_n,
        Some(_) => counts
            .iter()
            .map(|&(d, c)| c * participation.neighbors_of(d, big_n))
            .sum(),
    };

    let mut ledger = Ledger::new();
    for &(d, c) in &counts {
        let m = participation.neighbors_of(d, big_n);
        ledger.add(Node::Device(d), Category::Compute, c as f64 * ek);
        ledger.add(Node::Device(d), Category::Mesh, (c * m) as f64 * mesh_each);
    }
    Ok(EnergyBreakdown {
        compute_device_j: (n * ka) as f64 * ek,
        compute_center_j: 0.0,
        comm_up_j: 0.0,
        comm_down_j: 0.0,
        comm_mesh_j: links_used as f64 * bits / ee_mesh,
        per_node_j: ledger,
    })
}

/// Dispatches on the scheme.
pub fn energy_for(
    scheme: Scheme,
    n: usize,
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
    downlink: DownlinkMode,
) -> Result<EnergyBreakdown> {
    match scheme {
        Scheme::Cl => energy_cl(n, fleet, links),
        Scheme::Fl => energy_fl(n, fleet, links, downlink),
        Scheme::Cfl => energy_cfl(n, fleet, links),
    }
}

fn check_active(fleet: &FleetSpec) -> Result<()> {
    if fleet.active_per_round > fleet.total_devices {
        return Err(EnergyError::InvalidFleet(format!(
            "active_per_round ({}) exceeds total_devices ({})",
            fleet.active_per_round, fleet.total_devices
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::DeviceCompute;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn center() -> ComputeProfile {
        ComputeProfile::new(182.0, 0.020, 3, 1.67, 0.1).unwrap()
    }

    fn device() -> ComputeProfile {
        ComputeProfile::device(5.1, 0.190, 3).unwrap()
    }

    fn fleet(k: usize, ka: usize, n: usize) -> FleetSpec {
        FleetSpec {
            total_devices: k,
            active_per_round: ka,
            neighbors_per_round: n,
            device_compute: DeviceCompute::Profile(device()),
            center_profile: center(),
        }
    }

    fn links() -> LinkEfficiencies {
        LinkEfficiencies::new(200e3, 200e3, None, 2.32e6, 240e6).unwrap()
    }

    #[test]
    fn round_compute_energy_examples() {
        assert!(rel(round_compute_energy(&center()), 10.92) < 1e-12);
        assert!(rel(round_compute_energy(&device()), 2.907) < 1e-12);
        let unit = ComputeProfile::device(1.0, 1.0, 1).unwrap();
        assert_eq!(round_compute_energy(&unit), 1.0);
    }

    #[test]
    fn transfer_energy_examples() {
        assert_eq!(transfer_energy(0.0, 123.0).unwrap(), 0.0);
        assert!(rel(transfer_energy(2_320_000.0, 200_000.0).unwrap(), 11.6) < 1e-12);
        assert!(rel(transfer_energy(240_000_000.0, 200_000.0).unwrap(), 1200.0) < 1e-12);
        assert!(matches!(
            transfer_energy(1.0, 0.0),
            Err(EnergyError::InvalidEfficiency { .. })
        ));
        assert!(transfer_energy(1.0, -5.0).is_err());
        assert!(transfer_energy(-1.0, 5.0).is_err());
    }

    #[test]
    fn mesh_compose_examples() {
        assert_eq!(ee_mesh_compose(200e3, 200e3).unwrap(), 100e3);
        assert_eq!(ee_mesh_compose(7.5e4, f64::INFINITY).unwrap(), 7.5e4);
        assert!(rel(ee_mesh_compose(100e3, 300e3).unwrap(), 75e3) < 1e-12);
        assert_eq!(ee_mesh_compose(f64::INFINITY, f64::INFINITY).unwrap(), f64::INFINITY);
        assert!(ee_mesh_compose(0.0, 1.0).is_err());
        assert!(ee_mesh_compose(1.0, f64::NAN).is_err());
    }

    #[test]
    fn ee_from_link_examples() {
        assert!(rel(ee_from_link(6.0, 1.2e6).unwrap(), 200e3) < 1e-12);
        assert_eq!(ee_from_link(1.0, 1.0).unwrap(), 1.0);
        assert!(rel(ee_from_link(6.0, 300e3).unwrap(), 50e3) < 1e-12);
        assert!(ee_from_link(0.0, 1.0).is_err());
        assert!(ee_from_link(1.0, -1.0).is_err());
    }

    #[test]
    fn cl_examples() {
        let f = fleet(60, 40, 1);
        let b = energy_cl(0, &f, &links()).unwrap();
        assert!(rel(b.total_j(), 72_000.0) < 1e-12);

        let b = energy_cl(25, &f, &links()).unwrap();
        // 1.67 * 25 * 10.92 = 455.91
        assert!(rel(b.compute_center_j, 455.91) < 1e-12);
        assert!(rel(b.total_j(), 72_455.91) < 1e-12);

        let empty = fleet(0, 0, 1);
        let b = energy_cl(25, &empty, &links()).unwrap();
        assert_eq!(b.comm_up_j, 0.0);
        assert!(rel(b.compute_center_j, 455.91) < 1e-12);
    }

    #[test]
    fn fl_examples() {
        let f = fleet(60, 40, 1);
        let b = energy_fl(1, &f, &links(), DownlinkMode::Unicast).unwrap();
        // Term by term: 1.67*0.1*10.92, 1.67*60*11.6, 40*11.6, 40*2.907.
        assert!(rel(b.compute_center_j, 1.82364) < 1e-12);
        assert!(rel(b.comm_down_j, 1162.32) < 1e-12);
        assert!(rel(b.comm_up_j, 464.0) < 1e-12);
        assert!(rel(b.compute_device_j, 116.28) < 1e-12);
        assert!(rel(b.total_j(), 1744.42364) < 1e-12);

        let zero = energy_fl(0, &f, &links(), DownlinkMode::Unicast).unwrap();
        assert_eq!(zero.total_j(), 0.0);

        let idle = fleet(60, 0, 1);
        let b = energy_fl(3, &idle, &links(), DownlinkMode::Unicast).unwrap();
        assert_eq!(b.comm_up_j, 0.0);
        assert_eq!(b.compute_device_j, 0.0);
        assert!(b.comm_down_j > 0.0 && b.compute_center_j > 0.0);

        let bc = energy_fl(1, &f, &links(), DownlinkMode::Broadcast).unwrap();
        assert!(rel(bc.comm_down_j, 1.67 * 11.6) < 1e-12);

        assert!(matches!(
            energy_fl(1, &fleet(3, 4, 1), &links(), DownlinkMode::Unicast),
            Err(EnergyError::InvalidFleet(_))
        ));
    }

    #[test]
    fn cfl_examples() {
        let f = fleet(60, 40, 1);
        let b = energy_cfl(1, &f, &links()).unwrap();
        assert!(rel(b.comm_mesh_j, 928.0) < 1e-12);
        assert!(rel(b.total_j(), 1044.28) < 1e-12);
        assert_eq!(b.compute_center_j + b.comm_up_j + b.comm_down_j, 0.0);

        assert!(energy_cfl(1, &fleet(60, 40, 0), &links()).is_err());

        let free = LinkEfficiencies {
            ee_mesh: Some(f64::INFINITY),
            ..links()
        };
        let b = energy_cfl(1, &f, &free).unwrap();
        assert_eq!(b.comm_mesh_j, 0.0);
        assert!(rel(b.total_j(), 116.28) < 1e-12);
    }

    #[test]
    fn activation_counts_follow_rotation() {
        let p = Participation::all(6);
        let c = p.activation_counts(2, 4).unwrap();
        // rounds {0,1},{2,3},{4,5},{0,1}
        assert_eq!(c, vec![(0, 2), (1, 2), (2, 1), (3, 1), (4, 1), (5, 1)]);
        assert!(p.activation_counts(7, 1).is_err());
        let sub = Participation::new(vec![1, 4, 5], None);
        assert_eq!(sub.activation_counts(2, 2).unwrap(), vec![(1, 2), (4, 1), (5, 1)]);
    }

    #[test]
    fn degree_limited_neighbors_reduce_mesh_billing() {
        let f = fleet(4, 4, 3);
        let p = Participation::new(vec![0, 1, 2, 3], Some(vec![1, 3, 2, 3]));
        let b = energy_cfl_with(2, &f, &links(), &p).unwrap();
        let each = 2.32e6 / 100e3;
        assert!(rel(b.comm_mesh_j, 2.0 * 9.0 * each) < 1e-12);
        assert!(rel(b.per_node_j.get(Node::Device(0), Category::Mesh), 2.0 * each) < 1e-12);
    }
}
