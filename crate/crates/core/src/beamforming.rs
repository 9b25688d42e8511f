//! Single-quartet transmission: the `Nt`-candidate subset aligned with the
//! dominant right singular vector, power- and MI-optimal quartet selection,
//! and the energy-per-bit bracketing bounds.

use std::f64::consts::{FRAC_PI_2, LOG2_E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::mutual_information_quartet;
use crate::channel::{spectral, ChannelMatrix, ChannelSpec};
use crate::lowsnr::Interval;
use crate::quantized_dmc::{enumerate_quartets, EnumerationBudget, QpskVector, Quartet};
use crate::{Error, Result};

/// Default phase offset past each switching angle, in radians.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Which quartets a search visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// The `Nt` candidates of [`candidate_quartets`].
    Subset,
    /// All `4^(Nt−1)` quartets.
    Exhaustive,
}

impl SearchMode {
    /// Exhaustive up to eight transmit antennas, subset beyond.
    pub fn default_for(nt: usize) -> Self {
        if nt > 8 {
            Self::Subset
        } else {
            Self::Exhaustive
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingResult {
    pub quartet: Quartet,
    /// `‖Hx‖²` in power mode, bits in MI mode.
    pub objective: f64,
    pub candidate_count: usize,
}

/// Candidates `canonical(sgn(e^{jφ_m} v0))` for `m = 0..Nt`, with `φ_m` just
/// past the angle at which entry `m` of `e^{jφ} v0` crosses an axis.
pub fn candidate_quartets(h: &ChannelMatrix, epsilon: f64) -> Result<Vec<Quartet>> {
    candidates_from_vector(spectral(h)?.v0.as_slice(), epsilon)
}

/// [`candidate_quartets`] for an explicit beamforming direction.
pub fn candidates_from_vector(v0: &[Complex64], epsilon: f64) -> Result<Vec<Quartet>> {
    if !(epsilon != 0.0 && epsilon.abs() < 1e-3) {
        return Err(Error::InvalidArgument(format!("epsilon must be small and nonzero, got {epsilon}")));
    }
    let nt = v0.len();
    let angles: Vec<f64> = v0.iter().map(|v| v.arg()).collect();
    // Entry m switches sign pattern when φ + ∠v_m is a multiple of π/2.
    let mut switches: Vec<f64> = angles.iter().map(|a| (-a).rem_euclid(FRAC_PI_2)).collect();
    let gap = 2.0 * epsilon.abs();
    for m in 1..nt {
        let mut guard = 0;
        while guard < nt
            && switches[..m].iter().any(|&s| {
                let d = (switches[m] - s).abs();
                d.min(FRAC_PI_2 - d) < gap
            })
        {
            switches[m] = (switches[m] + gap).rem_euclid(FRAC_PI_2);
            guard += 1;
        }
    }
    // Tie-broken angles keep each switch where the perturbed list puts it.
    let effective: Vec<f64> = angles
        .iter()
        .zip(&switches)
        .map(|(a, s)| a - (s - (-a).rem_euclid(FRAC_PI_2)))
        .collect();
    let mut out: Vec<Quartet> = Vec::with_capacity(nt);
    for s in &switches {
        let phi = s + epsilon;
        let mut bits = 0u128;
        for (m, a) in effective.iter().enumerate() {
            let t = phi + a;
            if t.cos() < 0.0 {
                bits |= 1 << (2 * m);
            }
            if t.sin() < 0.0 {
                bits |= 1 << (2 * m + 1);
            }
        }
        let q = QpskVector::new(bits, nt)?.quartet();
        if !out.contains(&q) {
            out.push(q);
        }
    }
    Ok(out)
}

/// `‖Hx‖²`.
pub fn received_power(h: &ChannelMatrix, x: QpskVector) -> f64 {
    h.apply(&x.to_complex()).iter().map(|z| z.norm_sqr()).sum()
}

fn search_space(h: &ChannelMatrix, mode: SearchMode, budget: &EnumerationBudget) -> Result<Vec<Quartet>> {
    match mode {
        SearchMode::Subset => candidate_quartets(h, DEFAULT_EPSILON),
        SearchMode::Exhaustive => enumerate_quartets(h.nt(), budget),
    }
}

/// Highest objective, ties resolved towards the lowest quartet index.
fn argmax(quartets: &[Quartet], objectives: &[f64]) -> (Quartet, f64) {
    let mut best = 0;
    for k in 1..quartets.len() {
        let better = objectives[k] > objectives[best]
            || (objectives[k] == objectives[best] && quartets[k].index() < quartets[best].index());
        if better {
            best = k;
        }
    }
    (quartets[best], objectives[best])
}

/// The quartet maximizing received power `‖Hx‖²`, which is optimal as
/// `SNR → 0`.
pub fn best_power_quartet(
    h: &ChannelMatrix,
    mode: SearchMode,
    budget: &EnumerationBudget,
) -> Result<BeamformingResult> {
    let quartets = search_space(h, mode, budget)?;
    let objectives: Vec<f64> = quartets
        .par_iter()
        .map(|q| received_power(h, q.representative()))
        .collect();
    let (quartet, objective) = argmax(&quartets, &objectives);
    Ok(BeamformingResult {
        quartet,
        objective,
        candidate_count: quartets.len(),
    })
}

/// The quartet maximizing mutual information at `snr`.
pub fn best_mi_quartet(
    h: &ChannelMatrix,
    snr: f64,
    mode: SearchMode,
    budget: &EnumerationBudget,
) -> Result<BeamformingResult> {
    let quartets = search_space(h, mode, budget)?;
    let objectives: Vec<f64> = quartets
        .par_iter()
        .map(|q| mutual_information_quartet(h, snr, q, budget).map(|r| r.mi_bits))
        .collect::<Result<_>>()?;
    let (quartet, objective) = argmax(&quartets, &objectives);
    Ok(BeamformingResult {
        quartet,
        objective,
        candidate_count: quartets.len(),
    })
}

/// `E[λ0]` and `E[λ0 ‖v0‖₁²]` for a channel or an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralMoments {
    pub nt: usize,
    pub nr: usize,
    pub mean_lambda0: f64,
    pub mean_lambda0_v0_l1_sq: f64,
}

impl SpectralMoments {
    pub fn for_channel(h: &ChannelMatrix) -> Result<Self> {
        let s = spectral(h)?;
        Ok(Self {
            nt: h.nt(),
            nr: h.nr(),
            mean_lambda0: s.lambda0,
            mean_lambda0_v0_l1_sq: s.lambda0 * s.v0_l1_sq(),
        })
    }

    /// Sample means over `n` realizations.
    pub fn monte_carlo(model: &ChannelSpec, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one draw".into()));
        }
        let per_draw: Vec<Self> = (0..n as u64)
            .into_par_iter()
            .map(|i| Self::for_channel(&model.realize(Some(seed), i)?))
            .collect::<Result<_>>()?;
        let (a, b) = per_draw
            .iter()
            .fold((0.0, 0.0), |(a, b), m| (a + m.mean_lambda0, b + m.mean_lambda0_v0_l1_sq));
        Ok(Self {
            nt: model.nt(),
            nr: model.nr(),
            mean_lambda0: a / n as f64,
            mean_lambda0_v0_l1_sq: b / n as f64,
        })
    }

    /// Planar-wavefront LOS: `λ0 = NtNr` and `‖v0‖₁² = Nt` for every geometry.
    pub fn planar_los(nt: usize, nr: usize) -> Self {
        let lambda0 = (nt * nr) as f64;
        Self {
            nt,
            nr,
            mean_lambda0: lambda0,
            mean_lambda0_v0_l1_sq: lambda0 * nt as f64,
        }
    }

    /// Spherical-wavefront ULA approximation `λ0 ≈ Nmax/η`, `‖v0‖₁² ≈ Nt`.
    ///
    /// Meaningful for `1/Nmin ≤ η ≤ 1`; below that the channel is effectively
    /// rank one and `λ0` is capped at `NtNr`.
    pub fn spherical_los(nt: usize, nr: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::InvalidArgument(format!("η must be positive, got {eta}")));
        }
        let lambda0 = (nt.max(nr) as f64 / eta).min((nt * nr) as f64);
        Ok(Self {
            nt,
            nr,
            mean_lambda0: lambda0,
            mean_lambda0_v0_l1_sq: lambda0 * nt as f64,
        })
    }

    /// Large-dimension IID Rayleigh: `E[λ0] → (√Nt + √Nr)²` and
    /// `E[‖v0‖₁²] = 1 + (Nt − 1)π/4`, treated as independent.
    pub fn rayleigh_asymptotic(nt: usize, nr: usize) -> Self {
        let lambda0 = ((nt as f64).sqrt() + (nr as f64).sqrt()).powi(2);
        Self {
            nt,
            nr,
            mean_lambda0: lambda0,
            mean_lambda0_v0_l1_sq: lambda0 * rayleigh_mean_v0_l1_sq(nt),
        }
    }
}

/// `E[‖v0‖₁²]` for a Haar-distributed unit vector in `C^Nt`.
pub fn rayleigh_mean_v0_l1_sq(nt: usize) -> f64 {
    1.0 + (nt as f64 - 1.0) * PI / 4.0
}

/// Linear bracket on the beamforming minimum energy per bit:
/// `π/(2E[λ0] log2 e) ≤ Eb/N0_min ≤ π³Nt/(16 E[λ0‖v0‖₁²] log2 e)`.
pub fn beamforming_ebn0_bounds(m: &SpectralMoments) -> Result<Interval> {
    Interval::new(
        PI / (2.0 * m.mean_lambda0 * LOG2_E),
        PI.powi(3) * m.nt as f64 / (16.0 * m.mean_lambda0_v0_l1_sq * LOG2_E),
    )
}
