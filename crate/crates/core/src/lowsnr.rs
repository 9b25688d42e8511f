//! Low-SNR expansion: minimum energy per bit, wideband slope, the two-term
//! expansion curve, closed forms and the beamforming-advantage bracket.
//!
//! Everything is driven by three second-order channel statistics collected
//! in [`LowSnrTerms`]:
//!
//! - `power = E[tr(H Σx H*)]`
//! - `nondiag = E[tr(nondiag(H Σx H*)²)]`
//! - `quartic = E[Σ_k p_k (‖Re H x_k‖⁴₄ + ‖Im H x_k‖⁴₄)]`
//!
//! with `Eb/N0_min = π Nt / (power · log2 e)` and
//! `S0 = power² / (nondiag/2 + (π−1)/3 · quartic)`.

use std::f64::consts::{LOG2_E, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::{best_power_quartet, SearchMode, SpectralMoments};
use crate::capacity::QuartetDistribution;
use crate::channel::{ChannelMatrix, ChannelSpec};
use crate::numerics::Decibel;
use crate::quantized_dmc::{projections, EnumerationBudget, QpskVector};
use crate::{Error, Result};

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidArgument(format!("empty interval [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// The same interval in dB (both ends positive).
    pub fn to_db(&self) -> Self {
        Self {
            lower: Decibel::from_linear(self.lower).value(),
            upper: Decibel::from_linear(self.upper).value(),
        }
    }
}

/// Transmit strategy for the low-SNR statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum Signaling {
    /// IID QPSK, `Σx = 2I`.
    Equiprobable,
    Fixed(QuartetDistribution),
    /// The received-power-maximizing quartet for each realization.
    Beamforming(SearchMode),
}

/// Channel, or ensemble of channels, over which the statistics are averaged.
#[derive(Debug, Clone, Copy)]
pub enum ChannelSource<'a> {
    Fixed(&'a ChannelMatrix),
    /// Monte Carlo over `n` draws, unless a closed form is registered for the
    /// model and signaling.
    Ensemble {
        model: &'a ChannelSpec,
        n: usize,
        seed: u64,
    },
}

/// Second-order statistics behind `Eb/N0_min` and `S0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowSnrTerms {
    pub nt: usize,
    pub power: f64,
    pub nondiag: f64,
    pub quartic: f64,
}

impl LowSnrTerms {
    /// Exact statistics of one channel.
    pub fn for_channel(h: &ChannelMatrix, signaling: &Signaling, budget: &EnumerationBudget) -> Result<Self> {
        let (sigma, quartic) = match signaling {
            Signaling::Equiprobable => {
                let sigma = DMatrix::<Complex64>::identity(h.nt(), h.nt()) * Complex64::new(2.0, 0.0);
                (sigma, equiprobable_quartic(h))
            }
            Signaling::Fixed(p) => {
                if p.nt() != h.nt() {
                    return Err(Error::Dimension {
                        expected: h.nt(),
                        got: p.nt(),
                    });
                }
                let quartic = p.support().iter().map(|(x, pk)| pk * quartic_norm(h, *x)).sum();
                (p.covariance(), quartic)
            }
            Signaling::Beamforming(mode) => {
                let x = best_power_quartet(h, *mode, budget)?.quartet.representative();
                let xs = nalgebra::DVector::from_vec(x.to_complex());
                (&xs * xs.adjoint(), quartic_norm(h, x))
            }
        };
        let m = h.entries() * sigma * h.entries().adjoint();
        let power = (0..h.nr()).map(|n| m[(n, n)].re).sum();
        let nondiag = m
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx % h.nr() != idx / h.nr())
            .map(|(_, z)| z.norm_sqr())
            .sum();
        Ok(Self {
            nt: h.nt(),
            power,
            nondiag,
            quartic,
        })
    }

    /// Sample means over `n` draws of `model`.
    pub fn monte_carlo(
        model: &ChannelSpec,
        signaling: &Signaling,
        n: usize,
        seed: u64,
        budget: &EnumerationBudget,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one draw".into()));
        }
        let draws: Vec<Self> = (0..n as u64)
            .into_par_iter()
            .map(|i| Self::for_channel(&model.realize(Some(seed), i)?, signaling, budget))
            .collect::<Result<_>>()?;
        let mut acc = Self {
            nt: model.nt(),
            power: 0.0,
            nondiag: 0.0,
            quartic: 0.0,
        };
        for d in &draws {
            acc.power += d.power;
            acc.nondiag += d.nondiag;
            acc.quartic += d.quartic;
        }
        let n = n as f64;
        acc.power /= n;
        acc.nondiag /= n;
        acc.quartic /= n;
        Ok(acc)
    }

    /// Exact ensemble statistics for IID Rayleigh with equiprobable signaling.
    pub fn iid_rayleigh_equiprobable(nt: usize, nr: usize) -> Self {
        let (t, r) = (nt as f64, nr as f64);
        Self {
            nt,
            power: 2.0 * t * r,
            nondiag: 4.0 * t * r * (r - 1.0),
            quartic: 6.0 * t * t * r,
        }
    }

    /// Statistics for `source`, using a registered closed form when one
    /// applies and a single realization for deterministic models.
    pub fn for_source(source: ChannelSource<'_>, signaling: &Signaling, budget: &EnumerationBudget) -> Result<Self> {
        match source {
            ChannelSource::Fixed(h) => Self::for_channel(h, signaling, budget),
            ChannelSource::Ensemble { model, n, seed } => match (model, signaling) {
                (ChannelSpec::IidRayleigh { nt, nr, .. }, Signaling::Equiprobable) => {
                    Ok(Self::iid_rayleigh_equiprobable(*nt, *nr))
                }
                (m, s) if !m.is_random() => Self::for_channel(&m.realize(None, 0)?, s, budget),
                (m, s) => Self::monte_carlo(m, s, n, seed, budget),
            },
        }
    }

    pub fn metrics(&self) -> Result<LowSnrMetrics> {
        if !(self.power > 0.0) {
            return Err(Error::InvalidArgument("received power E[tr(HΣxH*)] must be positive".into()));
        }
        let ebn0 = PI * self.nt as f64 / (self.power * LOG2_E);
        let s0 = self.power * self.power / (0.5 * self.nondiag + (PI - 1.0) / 3.0 * self.quartic);
        Ok(LowSnrMetrics {
            ebn0_min_linear: ebn0,
            ebn0_min_db: Decibel::from_linear(ebn0),
            s0,
        })
    }
}

/// `Σ_n (Re h_n x)⁴ + (Im h_n x)⁴`.
pub fn quartic_norm(h: &ChannelMatrix, x: QpskVector) -> f64 {
    projections(h, x).iter().map(|r| r.powi(4)).sum()
}

/// Average of [`quartic_norm`] over uniform QPSK inputs:
/// `6 Σ_n ‖h_n‖⁴ − 4 Σ_{n,m} (Re⁴ h_nm + Im⁴ h_nm)`.
pub fn equiprobable_quartic(h: &ChannelMatrix) -> f64 {
    (0..h.nr())
        .map(|n| {
            let row = (0..h.nt()).map(|m| h.entry(n, m));
            let (sq, fourth) = row.fold((0.0, 0.0), |(s, f), z| (s + z.norm_sqr(), f + z.re.powi(4) + z.im.powi(4)));
            6.0 * sq * sq - 4.0 * fourth
        })
        .sum()
}

/// Minimum energy per bit and wideband slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowSnrMetrics {
    pub ebn0_min_linear: f64,
    pub ebn0_min_db: Decibel,
    /// b/s/Hz per 3 dB.
    pub s0: f64,
}

/// `Eb/N0_min` and `S0` for `source` under `signaling`.
pub fn ebn0_min(source: ChannelSource<'_>, signaling: &Signaling, budget: &EnumerationBudget) -> Result<LowSnrMetrics> {
    LowSnrTerms::for_source(source, signaling, budget)?.metrics()
}

pub fn wideband_slope(source: ChannelSource<'_>, signaling: &Signaling, budget: &EnumerationBudget) -> Result<f64> {
    Ok(ebn0_min(source, signaling, budget)?.s0)
}

/// `π/(2 Nr log2 e)`: equiprobable signaling on any ensemble normalised to
/// `E[tr(HH*)] = NtNr`.
pub fn equiprobable_ebn0_min(nr: usize) -> f64 {
    PI / (2.0 * nr as f64 * LOG2_E)
}

/// `2NtNr / ((π−1)Nt + Nr − 1)`.
pub fn iid_rayleigh_s0(nt: usize, nr: usize) -> f64 {
    let (t, r) = (nt as f64, nr as f64);
    2.0 * t * r / ((PI - 1.0) * t + r - 1.0)
}

/// `S0` of the `η = 1`, `Nt = Nr = N` Vandermonde core with equiprobable
/// signaling.
pub fn eta1_s0(n: usize) -> f64 {
    let nf = n as f64;
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            let t = 2.0 * PI * ((a * b) % n) as f64 / nf;
            acc += t.cos().powi(4) + t.sin().powi(4);
        }
    }
    2.0 / (PI - 1.0) * nf.powi(4) / (nf.powi(3) - 2.0 / 3.0 * acc)
}

/// One point of the two-term low-SNR expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub ebn0_db: f64,
    pub bits: f64,
    /// The point lies below `Eb/N0_min`; `bits` is reported as zero.
    pub below_min: bool,
}

/// `S0 (Eb/N0|dB − Eb/N0_min|dB) / 3` on a dB grid.
pub fn low_snr_curve(metrics: &LowSnrMetrics, ebn0_db_grid: &[f64]) -> Vec<CurvePoint> {
    let min_db = metrics.ebn0_min_db.value();
    ebn0_db_grid
        .iter()
        .map(|&db| {
            let below_min = db < min_db;
            CurvePoint {
                ebn0_db: db,
                bits: if below_min { 0.0 } else { metrics.s0 * (db - min_db) / 3.0 },
                below_min,
            }
        })
        .collect()
}

/// The full-resolution counterpart of a 1-bit `Eb/N0_min`: the linear value
/// scaled by `2/π`. The slope is carried over unchanged.
pub fn fullres_ebn0_min(onebit: &LowSnrMetrics) -> LowSnrMetrics {
    let lin = onebit.ebn0_min_linear * 2.0 / PI;
    LowSnrMetrics {
        ebn0_min_linear: lin,
        ebn0_min_db: Decibel::from_linear(lin),
        s0: onebit.s0,
    }
}

/// Bracket on the low-SNR advantage of optimum beamforming over
/// equiprobable signaling: `[8E[λ0‖v0‖₁²]/(π²NtNr), E[λ0]/Nr]`.
pub fn bf_advantage_bounds(m: &SpectralMoments) -> Result<Interval> {
    let (t, r) = (m.nt as f64, m.nr as f64);
    Interval::new(8.0 * m.mean_lambda0_v0_l1_sq / (PI * PI * t * r), m.mean_lambda0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{iid_rayleigh, los_planar, vandermonde_core, LosGeometry, Normalization};

    fn budget() -> EnumerationBudget {
        EnumerationBudget::default()
    }

    #[test]
    fn siso_rayleigh_minimum_energy() {
        let spec = ChannelSpec::IidRayleigh { nt: 1, nr: 1, seed: None };
        let m = ebn0_min(ChannelSource::Ensemble { model: &spec, n: 0, seed: 0 }, &Signaling::Equiprobable, &budget())
            .unwrap();
        assert!((m.ebn0_min_db.value() - 0.37).abs() < 0.01);
        let two = ChannelSpec::IidRayleigh { nt: 1, nr: 2, seed: None };
        let m2 = ebn0_min(ChannelSource::Ensemble { model: &two, n: 0, seed: 0 }, &Signaling::Equiprobable, &budget())
            .unwrap();
        assert!((m.ebn0_min_db.value() - m2.ebn0_min_db.value() - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((m.s0 - iid_rayleigh_s0(1, 1)).abs() < 1e-12);
    }

    #[test]
    fn equiprobable_energy_is_independent_of_nt() {
        for nt in 1..6 {
            let t = LowSnrTerms::iid_rayleigh_equiprobable(nt, 3).metrics().unwrap();
            assert!((t.ebn0_min_linear - equiprobable_ebn0_min(3)).abs() < 1e-15);
        }
        let g = LosGeometry::half_wavelength(3, 3, 1e3, 0.3, 0.2, 0.1);
        let h = los_planar(&g).unwrap();
        let m = ebn0_min(ChannelSource::Fixed(&h), &Signaling::Equiprobable, &budget()).unwrap();
        assert!((m.ebn0_min_linear - equiprobable_ebn0_min(3)).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_slope_increases_in_both_dimensions() {
        for nt in 1..=6 {
            for nr in 1..=6 {
                // With one receive antenna the slope does not depend on Nt.
                if nt < 6 && nr == 1 {
                    assert!((iid_rayleigh_s0(nt + 1, nr) - iid_rayleigh_s0(nt, nr)).abs() < 1e-12);
                } else if nt < 6 {
                    assert!(iid_rayleigh_s0(nt + 1, nr) > iid_rayleigh_s0(nt, nr));
                }
                if nr < 6 {
                    assert!(iid_rayleigh_s0(nt, nr + 1) > iid_rayleigh_s0(nt, nr));
                }
            }
        }
    }

    #[test]
    fn rayleigh_closed_form_matches_monte_carlo() {
        let spec = ChannelSpec::IidRayleigh { nt: 2, nr: 3, seed: None };
        let mc = LowSnrTerms::monte_carlo(&spec, &Signaling::Equiprobable, 20_000, 4, &budget()).unwrap();
        let cf = LowSnrTerms::iid_rayleigh_equiprobable(2, 3);
        assert!((mc.power / cf.power - 1.0).abs() < 0.02);
        assert!((mc.nondiag / cf.nondiag - 1.0).abs() < 0.04);
        assert!((mc.quartic / cf.quartic - 1.0).abs() < 0.04);
    }

    #[test]
    fn equiprobable_quartic_matches_enumeration() {
        for seed in 0..5 {
            let h = iid_rayleigh(3, 2, seed).unwrap();
            let direct: f64 = (0..64u128)
                .map(|b| quartic_norm(&h, QpskVector::new(b, 3).unwrap()))
                .sum::<f64>()
                / 64.0;
            assert!((direct - equiprobable_quartic(&h)).abs() < 1e-10 * direct);
            let p = QuartetDistribution::equiprobable(3).unwrap();
            let a = LowSnrTerms::for_channel(&h, &Signaling::Equiprobable, &budget()).unwrap();
            let b = LowSnrTerms::for_channel(&h, &Signaling::Fixed(p), &budget()).unwrap();
            assert!((a.quartic - b.quartic).abs() < 1e-10 * a.quartic);
            assert!((a.power - b.power).abs() < 1e-10 * a.power);
            assert!((a.nondiag - b.nondiag).abs() < 1e-9 * a.nondiag.max(1.0));
        }
    }

    #[test]
    fn unit_scalar_channel_slope() {
        let h = ChannelMatrix::from_rows(1, 1, &[Complex64::new(1.0, 0.0)]).unwrap();
        let m = ebn0_min(ChannelSource::Fixed(&h), &Signaling::Equiprobable, &budget()).unwrap();
        assert!((m.s0 - 6.0 / (PI - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn eta1_closed_form_matches_generic_terms() {
        for n in [2, 3, 4, 6, 8] {
            let h = ChannelMatrix::new(vandermonde_core(n, n, 1.0), Normalization::Instantaneous).unwrap();
            let m = ebn0_min(ChannelSource::Fixed(&h), &Signaling::Equiprobable, &budget()).unwrap();
            assert!((m.s0 - eta1_s0(n)).abs() < 1e-9 * m.s0, "n={n}");
        }
    }

    #[test]
    fn zero_channel_is_rejected() {
        let h = ChannelMatrix::from_rows(1, 1, &[Complex64::new(0.0, 0.0)]).unwrap();
        assert!(ebn0_min(ChannelSource::Fixed(&h), &Signaling::Equiprobable, &budget()).is_err());
    }

    #[test]
    fn curve_and_fullres() {
        let m = LowSnrTerms::iid_rayleigh_equiprobable(1, 1).metrics().unwrap();
        let min_db = m.ebn0_min_db.value();
        let pts = low_snr_curve(&m, &[min_db - 1.0, min_db, min_db + 3.0]);
        assert!(pts[0].below_min && pts[0].bits == 0.0);
        assert_eq!(pts[1].bits, 0.0);
        assert!((pts[2].bits - m.s0).abs() < 1e-12);

        let f = fullres_ebn0_min(&m);
        assert_eq!(f.ebn0_min_linear, m.ebn0_min_linear * 2.0 / PI);
        assert!((f.ebn0_min_db.value() - (-1.59)).abs() < 0.01);
        let gap = 10.0 * (PI / 2.0).log10();
        assert!((m.ebn0_min_db.value() - f.ebn0_min_db.value() - gap).abs() < 1e-9);

        let nt_nr = 12.0;
        let bf_lower = PI / (2.0 * nt_nr * LOG2_E);
        let fr = fullres_ebn0_min(&LowSnrMetrics {
            ebn0_min_linear: bf_lower,
            ebn0_min_db: Decibel::from_linear(bf_lower),
            s0: 1.0,
        });
        assert!((fr.ebn0_min_linear - 1.0 / (nt_nr * LOG2_E)).abs() < 1e-15);
    }

    #[test]
    fn advantage_bounds() {
        let b = bf_advantage_bounds(&SpectralMoments::planar_los(5, 3)).unwrap();
        assert!((b.lower - 8.0 * 5.0 / (PI * PI)).abs() < 1e-12);
        assert!((b.upper - 5.0).abs() < 1e-12);
        let flat = SpectralMoments {
            nt: 3,
            nr: 4,
            mean_lambda0: 4.0,
            mean_lambda0_v0_l1_sq: 4.0 * 2.0,
        };
        assert!(bf_advantage_bounds(&flat).unwrap().upper <= 1.0);
        let spec = ChannelSpec::IidRayleigh { nt: 3, nr: 2, seed: None };
        for seed in 0..100 {
            let m = SpectralMoments::monte_carlo(&spec, 5, seed).unwrap();
            assert!(bf_advantage_bounds(&m).is_ok());
        }
    }
}
