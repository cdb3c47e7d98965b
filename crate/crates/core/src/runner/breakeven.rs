use super::{ExperimentConfig, Result, RunError};
use crate::energy::{carbon_of, energy_for, LinkEfficiencies};
use crate::Scheme;

/// Carbon as a function of link efficiency, `A / EE + B` (grams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarbonLine {
    pub a: f64,
    pub b: f64,
}

impl CarbonLine {
    pub fn at(&self, ee: f64) -> f64 {
        self.a / ee + self.b
    }
}

/// Efficiency at which two schemes emit the same carbon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakEven {
    pub ee: f64,
    /// Root of the black-box carbon difference found by bisection.
    pub ee_bisection: f64,
    pub line_a: CarbonLine,
    pub line_b: CarbonLine,
    /// The scheme with less carbon for every `EE < ee`.
    pub cheaper_below: Scheme,
}

/// Positive finite crossover of two carbon lines, if any.
pub fn crossover(a: CarbonLine, b: CarbonLine) -> Option<f64> {
    let den = b.b - a.b;
    if den == 0.0 {
        return None;
    }
    let ee = (a.a - b.a) / den;
    (ee > 0.0 && ee.is_finite()).then_some(ee)
}

fn carbon_at(config: &ExperimentConfig, scheme: Scheme, n: usize, ee: f64) -> Result<f64> {
    let links = LinkEfficiencies {
        ee_up: ee,
        ee_down: ee,
        ee_mesh: None,
        ..config.links
    };
    let breakdown = energy_for(scheme, n, &config.fleet, &links, config.downlink())?;
    Ok(carbon_of(&breakdown, &config.intensities()?)?.total_g)
}

fn line(config: &ExperimentConfig, scheme: Scheme, n: usize) -> Result<CarbonLine> {
    let b = carbon_at(config, scheme, n, f64::INFINITY)?;
    let a = carbon_at(config, scheme, n, 1.0)? - b;
    Ok(CarbonLine { a, b })
}

/// Solves for the joint UL/DL efficiency (mesh composed from it) at which
/// `scheme_a` run for `n_a` rounds and `scheme_b` run for `n_b` rounds emit
/// equal carbon.
///
/// The analytic root is cross-checked by bisection on the carbon difference;
/// disagreement beyond 1e-6 relative is an oracle failure.
pub fn break_even_ee(
    config: &ExperimentConfig,
    scheme_a: Scheme,
    scheme_b: Scheme,
    n_a: usize,
    n_b: usize,
) -> Result<Option<BreakEven>> {
    let line_a = line(config, scheme_a, n_a)?;
    let line_b = line(config, scheme_b, n_b)?;
    let Some(ee) = crossover(line_a, line_b) else {
        return Ok(None);
    };
    let diff = |x: f64| -> Result<f64> {
        Ok(carbon_at(config, scheme_a, n_a, x)? - carbon_at(config, scheme_b, n_b, x)?)
    };
    let (mut lo, mut hi) = (ee * 1e-3, ee * 1e3);
    let (f_lo, f_hi) = (diff(lo)?, diff(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(RunError::OracleMismatch {
            scheme: scheme_a,
            detail: format!("no sign change of the carbon difference around EE* = {ee}"),
        });
    }
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if diff(mid)?.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    let ee_bisection = (lo * hi).sqrt();
    if ((ee_bisection - ee) / ee).abs() > 1e-6 {
        return Err(RunError::OracleMismatch {
            scheme: scheme_a,
            detail: format!("analytic EE* = {ee} but bisection gives {ee_bisection}"),
        });
    }
    let cheaper_below = if f_lo < 0.0 { scheme_a } else { scheme_b };
    Ok(Some(BreakEven {
        ee,
        ee_bisection,
        line_a,
        line_b,
        cheaper_below,
    }))
}
