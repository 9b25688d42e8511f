//! ADC power law and the bandwidth above which a 1-bit receiver consumes
//! less total power than a full-resolution one.

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Exponent base of the ADC power law in the conservative comparison.
pub const DEFAULT_KAPPA: f64 = 2.0;

/// Extra radiated power a 1-bit link needs at low SNR, as a linear factor.
/// Its reciprocal `2/π` is the 1.96 dB quantization penalty on `Eb/N0_min`.
pub const ONEBIT_POWER_PENALTY: f64 = PI / 2.0;

/// Parameters of `P_ADC = n_adc · FoM · B · κ^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBudget {
    pub pt_watts: f64,
    pub amp_efficiency: f64,
    /// Joules per conversion step.
    pub fom: f64,
    pub bandwidth_hz: f64,
    pub resolution_bits: u32,
    pub kappa: f64,
    /// Two per receive antenna (in-phase and quadrature).
    pub n_adc: u32,
}

impl PowerBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("transmit power", self.pt_watts),
            ("FoM", self.fom),
            ("bandwidth", self.bandwidth_hz),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "amplifier efficiency must lie in (0, 1], got {}",
                self.amp_efficiency
            )));
        }
        if !(2.0..=4.0).contains(&self.kappa) {
            return Err(Error::InvalidArgument(format!("κ must lie in [2, 4], got {}", self.kappa)));
        }
        if self.n_adc == 0 {
            return Err(Error::InvalidArgument("need at least one ADC".into()));
        }
        Ok(())
    }

    /// Power drawn by the transmit amplifier, `Pt/η`.
    pub fn amplifier_power(&self) -> f64 {
        self.pt_watts / self.amp_efficiency
    }
}

/// `n_adc · FoM · B · κ^b` in watts.
pub fn adc_power(budget: &PowerBudget) -> Result<f64> {
    budget.validate()?;
    Ok(budget.n_adc as f64 * budget.fom * budget.bandwidth_hz * budget.kappa.powi(budget.resolution_bits as i32))
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Bandwidth above which a 1-bit link radiating `Pt` beats a `b_full`-bit
/// link radiating `Pt · 2/π`, with `κ = 2`:
/// `B = (1 − 2/π)(Pt/η) / (FoM · n_adc · (κ^b − κ))`.
pub fn breakeven_bandwidth(pt_watts: f64, eta: f64, fom: f64, b_full: u32, n_adc: u32) -> Result<f64> {
    breakeven_bandwidth_with_kappa(pt_watts, eta, fom, b_full, n_adc, DEFAULT_KAPPA)
}

pub fn breakeven_bandwidth_with_kappa(
    pt_watts: f64,
    eta: f64,
    fom: f64,
    b_full: u32,
    n_adc: u32,
    kappa: f64,
) -> Result<f64> {
    if b_full < 2 {
        return Err(Error::InvalidArgument(format!(
            "full-resolution converters need at least 2 bits, got {b_full}"
        )));
    }
    let budget = PowerBudget {
        pt_watts,
        amp_efficiency: eta,
        fom,
        bandwidth_hz: 1.0,
        resolution_bits: b_full,
        kappa,
        n_adc,
    };
    budget.validate()?;
    let saved = (1.0 - 1.0 / ONEBIT_POWER_PENALTY) * budget.amplifier_power();
    Ok(saved / (fom * n_adc as f64 * (kappa.powi(b_full as i32) - kappa)))
}

/// Total (amplifier + ADC) power of the 1-bit and full-resolution links at
/// bandwidth `B`, in that order.
pub fn total_powers(pt_watts: f64, eta: f64, fom: f64, b_full: u32, n_adc: u32, bandwidth_hz: f64) -> (f64, f64) {
    let adc = |bits: i32| n_adc as f64 * fom * bandwidth_hz * DEFAULT_KAPPA.powi(bits);
    let onebit = pt_watts / eta + adc(1);
    let full = pt_watts / ONEBIT_POWER_PENALTY / eta + adc(b_full as i32);
    (onebit, full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> PowerBudget {
        PowerBudget {
            pt_watts: 0.2,
            amp_efficiency: 0.4,
            fom: 10e-12,
            bandwidth_hz: 20e6,
            resolution_bits: 10,
            kappa: 2.0,
            n_adc: 1,
        }
    }

    #[test]
    fn adc_power_examples() {
        assert!((adc_power(&budget()).unwrap() - 0.2048).abs() < 1e-12);
        let b0 = PowerBudget { resolution_bits: 0, ..budget() };
        assert!((adc_power(&b0).unwrap() - 10e-12 * 20e6).abs() < 1e-18);
        let doubled = PowerBudget { bandwidth_hz: 40e6, ..budget() };
        assert_eq!(adc_power(&doubled).unwrap(), 2.0 * adc_power(&budget()).unwrap());
        assert!(adc_power(&PowerBudget { kappa: 5.0, ..budget() }).is_err());
        assert!(adc_power(&PowerBudget { amp_efficiency: 0.0, ..budget() }).is_err());
    }

    #[test]
    fn breakeven_examples() {
        let pt = dbm_to_watts(23.0);
        let b = breakeven_bandwidth(pt, 0.4, 10e-12, 10, 2).unwrap();
        assert!((b - 8.87e6).abs() <= 0.01e6, "{b}");
        let fj = breakeven_bandwidth(pt, 0.4, 10e-15, 10, 2).unwrap();
        assert!((fj - 8.8e9).abs() <= 0.1e9, "{fj}");
        let half_fom = breakeven_bandwidth(pt, 0.4, 5e-12, 10, 2).unwrap();
        assert!((half_fom / b - 2.0).abs() < 1e-12);
        let four = breakeven_bandwidth(pt, 0.4, 10e-12, 10, 4).unwrap();
        assert!((four / b - 0.5).abs() < 1e-12);
        let (onebit, full) = total_powers(pt, 0.4, 10e-12, 10, 2, b);
        assert!((onebit - full).abs() <= 1e-9 * full);
        let (onebit, full) = total_powers(pt, 0.4, 10e-12, 10, 2, 2.0 * b);
        assert!(onebit < full);
    }

    #[test]
    fn breakeven_monotonicity() {
        let base = breakeven_bandwidth(0.2, 0.4, 10e-12, 10, 2).unwrap();
        assert!(breakeven_bandwidth(0.2, 0.4, 10e-12, 10, 3).unwrap() < base);
        assert!(breakeven_bandwidth(0.2, 0.4, 20e-12, 10, 2).unwrap() < base);
        assert!(breakeven_bandwidth(0.4, 0.4, 10e-12, 10, 2).unwrap() > base);
        assert!(breakeven_bandwidth(0.2, 0.2, 10e-12, 10, 2).unwrap() > base);
        assert!(breakeven_bandwidth(0.2, 0.4, 10e-12, 1, 2).is_err());
    }

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((watts_to_dbm(dbm_to_watts(23.0)) - 23.0).abs() < 1e-12);
    }
}
