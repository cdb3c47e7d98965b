use super::{ExperimentConfig, ResultRow, Result, RunError, RunMode, Scenario, SweepSpec};
use crate::energy::{
    annualize, carbon_of, energy_for, CarbonIntensityMap, DownlinkMode, EnergyBreakdown, FleetSpec,
    LinkEfficiencies,
};
use crate::exec::Exec;
use crate::Scheme;

/// Closed-form row for one scheme at one scenario.
pub fn evaluate_point(
    scheme: Scheme,
    scenario: &Scenario,
    downlink: DownlinkMode,
    retrain_period_h: f64,
) -> Result<ResultRow> {
    let breakdown = energy_for(
        scheme,
        scenario.rounds,
        &scenario.fleet,
        &scenario.links,
        downlink,
    )?;
    build_row(
        scheme,
        scenario.rounds,
        &scenario.fleet,
        &scenario.links,
        &breakdown,
        &scenario.ci,
        retrain_period_h,
        None,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn build_row(
    scheme: Scheme,
    n: usize,
    fleet: &FleetSpec,
    links: &LinkEfficiencies,
    breakdown: &EnergyBreakdown,
    ci: &CarbonIntensityMap,
    retrain_period_h: f64,
    learning: Option<(Option<f64>, bool)>,
) -> Result<ResultRow> {
    let carbon = carbon_of(breakdown, ci)?;
    Ok(ResultRow {
        scheme,
        n,
        k: fleet.total_devices,
        k_a: fleet.active_per_round,
        neighbors: fleet.neighbors_per_round,
        ee_u: links.ee_up,
        ee_d: links.ee_down,
        ee_m: links.mesh()?,
        energy_compute_j: breakdown.compute_j(),
        energy_comm_j: breakdown.comm_j(),
        energy_total_j: breakdown.total_j(),
        carbon_comm_g: carbon.comm_g,
        carbon_compute_g: carbon.compute_g,
        carbon_total_g: carbon.total_g,
        loss_final: learning.and_then(|(loss, _)| loss),
        target_reached: learning.map(|(_, reached)| reached),
        kg_per_year: annualize(carbon.total_g, retrain_period_h)?,
    })
}

/// Evaluates every grid point of `sweep` (or of the configuration's own
/// sweep when `None`) for every configured scheme.
///
/// Rows are ordered by grid index, then by scheme order in the
/// configuration. Grid points are evaluated through `exec`.
pub fn run_analysis(
    config: &ExperimentConfig,
    sweep: Option<&SweepSpec>,
    exec: Exec,
) -> Result<Vec<ResultRow>> {
    let rounds = match config.mode()? {
        RunMode::Fixed(n) => n,
        RunMode::Learn { .. } => {
            return Err(RunError::config(
                "rounds",
                "closed-form analysis needs fixed `rounds`",
            ))
        }
    };
    let default = SweepSpec::default();
    let sweep = sweep.or(config.sweep.as_ref()).unwrap_or(&default);
    let points = sweep.points()?;
    let downlink = config.downlink();
    let per_point = exec.map(&points, |point| -> Result<Vec<ResultRow>> {
        let scenario = Scenario::at(config, rounds, point)?;
        config
            .schemes
            .iter()
            .map(|&s| evaluate_point(s, &scenario, downlink, config.retrain_period_h))
            .collect()
    });
    let mut rows = Vec::with_capacity(points.len() * config.schemes.len());
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{ComputeProfile, DeviceCompute, Region};
    use crate::runner::{CarbonConfig, SweepAxis, SweepParam, TopologyConfig};

    fn table1(rounds: usize, schemes: Vec<Scheme>) -> ExperimentConfig {
        ExperimentConfig {
            schemes,
            fleet: FleetSpec {
                total_devices: 60,
                active_per_round: 40,
                neighbors_per_round: 1,
                device_compute: DeviceCompute::Profile(ComputeProfile::device(5.1, 0.19, 3).unwrap()),
                center_profile: ComputeProfile::new(182.0, 0.02, 3, 1.67, 0.1).unwrap(),
            },
            links: LinkEfficiencies::new(2e5, 2e5, None, 2.32e6, 2.4e8).unwrap(),
            carbon: CarbonConfig::preset(Region::Italy),
            topology: TopologyConfig::default(),
            rounds: Some(rounds),
            target_loss: None,
            learner: None,
            retrain_period_h: 3.0,
            seed: 0,
            dl_broadcast: false,
            literal_fedavg: false,
            sweep: None,
            notes: Vec::new(),
        }
    }

    #[test]
    fn cl_over_rounds_has_constant_comm() {
        let c = table1(0, vec![Scheme::Cl]);
        let sweep = SweepSpec::new(vec![SweepAxis::range(SweepParam::Rounds, 1.0, 25.0, 1.0)]);
        let rows = run_analysis(&c, Some(&sweep), Exec::Sequential).unwrap();
        assert_eq!(rows.len(), 25);
        let per_round = 1.67 * 10.92;
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.n, i + 1);
            assert!((r.energy_comm_j - 72_000.0).abs() < 1e-9);
            assert!((r.energy_compute_j - per_round * (i + 1) as f64).abs() < 1e-9);
            assert!((r.energy_total_j - r.energy_compute_j - r.energy_comm_j).abs() < 1e-9);
        }
    }

    #[test]
    fn fl_minus_cl_gap_grows_with_ee() {
        let c = table1(25, vec![Scheme::Fl, Scheme::Cl]);
        let sweep = SweepSpec::new(vec![SweepAxis::values(
            SweepParam::Ee,
            vec![5e4, 1e5, 2e5, 4e5],
        )]);
        let rows = run_analysis(&c, Some(&sweep), Exec::Parallel).unwrap();
        let gaps: Vec<f64> = rows
            .chunks(2)
            .map(|p| p[0].carbon_total_g - p[1].carbon_total_g)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    }

    #[test]
    fn single_point_one_row_per_scheme() {
        let c = table1(25, Scheme::ALL.to_vec());
        let rows = run_analysis(&c, None, Exec::Sequential).unwrap();
        let schemes: Vec<_> = rows.iter().map(|r| r.scheme).collect();
        assert_eq!(schemes, Scheme::ALL.to_vec());
        assert!((rows[0].carbon_total_g - 72_455.91 / 3.6e6 * 0.28 * 1000.0).abs() < 1e-9);
    }

    #[test]
    fn sequential_equals_parallel() {
        let c = table1(25, Scheme::ALL.to_vec());
        let sweep = SweepSpec::new(vec![
            SweepAxis::range(SweepParam::Ee, 5e4, 4e5, 5e4),
            SweepAxis::values(SweepParam::Ci, vec![0.97, 0.28, 0.11]),
        ]);
        let a = run_analysis(&c, Some(&sweep), Exec::Sequential).unwrap();
        let b = run_analysis(&c, Some(&sweep), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn proportional_fleet() {
        let c = table1(25, vec![Scheme::Fl]);
        let sweep = SweepSpec::new(vec![SweepAxis::values(
            SweepParam::DevicesProportional,
            vec![30.0, 60.0],
        )]);
        let rows = run_analysis(&c, Some(&sweep), Exec::Sequential).unwrap();
        assert_eq!((rows[0].k, rows[0].k_a), (30, 20));
        assert_eq!((rows[1].k, rows[1].k_a), (60, 40));
    }
}
