//! Bracketing of the ergodic spectral efficiency for IID Rayleigh fading with
//! equiprobable signaling.
//!
//! `E[H(y|x)]` reduces to a single Gaussian integral. `E[H(y)]` is bounded
//! above by `2Nr` and below through the pairwise collision probabilities
//! `P∩(i, j)` of two inputs that differ in `i` real and `j` imaginary signs.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{ergodic_samples, ErgodicEstimate, Strategy};
use crate::channel::ChannelSpec;
use crate::numerics::{binary_entropy_of_q, log_sum_exp, quad2d_positive_quadrant, GaussHermite, Probability};
use crate::quantized_dmc::{check_snr, EnumerationBudget};
use crate::{Error, Result};

/// Absolute tolerance for off-diagonal `P∩` quadratures.
pub const PCAP_TOL: f64 = 1e-8;

/// `E[H(y|x)] = 2Nr E[Hb(Q(√SNR ξ))]`, `ξ ~ N(0, 1)`, in bits.
pub fn conditional_entropy(snr: f64, nr: usize) -> Result<f64> {
    check_snr(snr)?;
    if snr == 0.0 {
        return Ok(2.0 * nr as f64);
    }
    // Substituting ξ = τv/√SNR with τ² = SNR/(1+SNR) moves the Gaussian
    // weight onto the integrand's own decay, which keeps the quadrature
    // accurate at high SNR where Hb(Q(√SNR ξ)) is concentrated near ξ = 0.
    let tau2 = snr / (1.0 + snr);
    let tau = tau2.sqrt();
    let e = GaussHermite::standard().expectation(|v| binary_entropy_of_q(tau * v) * (0.5 * tau2 * v * v).exp());
    Ok(2.0 * nr as f64 * e / (1.0 + snr).sqrt())
}

/// `P∩(i, j)` by 2-D quadrature, with closed forms where the integral
/// degenerates (`i, j ∈ {0, Nt}`).
pub fn p_cap(i: usize, j: usize, nt: usize) -> Result<Probability> {
    p_cap_with_tol(i, j, nt, PCAP_TOL)
}

pub fn p_cap_with_tol(i: usize, j: usize, nt: usize, tol: f64) -> Result<Probability> {
    if nt == 0 || i > nt || j > nt {
        return Err(Error::InvalidArgument(format!("need 0 ≤ i, j ≤ Nt, got ({i}, {j}, {nt})")));
    }
    let denom = (i * (nt - i) + j * (nt - j)) as f64;
    if denom == 0.0 {
        return Ok(Probability::saturating(if i == 0 && j == 0 { 0.25 } else { 0.0 }));
    }
    let s = denom.sqrt();
    let (a, b) = ((nt as f64 - i as f64 - j as f64) / s, (i as f64 - j as f64) / s);
    let v = quad2d_positive_quadrant(
        |g, x| {
            libm::erfc(-(g * a + x * b)) * libm::erfc(g * b - x * a) * (-2.0 * (g * g + x * x)).exp()
        },
        2.0 * PI * tol,
    )?;
    Ok(Probability::saturating(v / (2.0 * PI)))
}

/// `(1/4π²) arccos²(2i/Nt − 1)`, the diagonal `P∩(i, i)`.
pub fn p_cap_diagonal(i: usize, nt: usize) -> f64 {
    let c = (2.0 * i as f64 / nt as f64 - 1.0).clamp(-1.0, 1.0).acos();
    c * c / (4.0 * PI * PI)
}

/// `P∩(i, j)` for all `0 ≤ i, j ≤ Nt`. Independent of the SNR.
#[derive(Debug, Clone, Serialize)]
pub struct PcapTable {
    nt: usize,
    values: Vec<f64>,
}

impl PcapTable {
    /// Diagonal and boundary cells from closed forms, the rest by quadrature
    /// (upper triangle, mirrored).
    pub fn new(nt: usize) -> Result<Self> {
        if nt == 0 {
            return Err(Error::InvalidArgument("Nt must be at least 1".into()));
        }
        let n = nt + 1;
        let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let off: Vec<f64> = cells
            .par_iter()
            .map(|&(i, j)| p_cap(i, j, nt).map(Probability::get))
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = p_cap_diagonal(i, nt);
        }
        values[nt * n + nt] = 0.0;
        for (&(i, j), v) in cells.iter().zip(off) {
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        Ok(Self { nt, values })
    }

    /// Process-wide cached table for `nt`.
    pub fn cached(nt: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PcapTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().expect("cache poisoned").get(&nt) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::new(nt)?);
        cache.lock().expect("cache poisoned").insert(nt, table.clone());
        Ok(table)
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.nt + 1) + j]
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k).map(|t| ((n + 1 - t) as f64 / t as f64).ln()).sum()
}

/// Lower bound on `E[H(y)]` in bits:
/// `2Nt − 2Nr − log2 Σ_{i,j} C(Nt,i) C(Nt,j) P∩(i,j)^Nr`, capped at `2Nr`.
pub fn entropy_lower_bound(nt: usize, nr: usize) -> Result<f64> {
    entropy_lower_bound_with(&*PcapTable::cached(nt)?, nr)
}

pub fn entropy_lower_bound_with(table: &PcapTable, nr: usize) -> Result<f64> {
    if nr == 0 {
        return Err(Error::InvalidArgument("Nr must be at least 1".into()));
    }
    let nt = table.nt();
    let ln_c: Vec<f64> = (0..=nt).map(|i| ln_binomial(nt, i)).collect();
    let terms = (0..=nt).flat_map(|i| {
        let ln_c = &ln_c;
        (0..=nt).filter_map(move |j| {
            let p = table.get(i, j);
            (p > 0.0).then(|| ln_c[i] + ln_c[j] + nr as f64 * p.ln())
        })
    });
    let ln_sum = log_sum_exp(terms);
    let bound = 2.0 * nt as f64 - 2.0 * nr as f64 - ln_sum / LN_2;
    Ok(bound.min(2.0 * nr as f64))
}

/// Bracket and approximation of the ergodic spectral efficiency at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicBound {
    pub snr: f64,
    pub lower_bits: f64,
    pub upper_bits: f64,
    /// `2Nr (1 − E[H(y|x)]/(2Nr))`, exact for `Nr = 1`. Coincides with
    /// `upper_bits`.
    pub jla_bits: f64,
}

pub fn ergodic_bounds(snr: f64, nt: usize, nr: usize) -> Result<ErgodicBound> {
    let ce = conditional_entropy(snr, nr)?;
    let hy_lower = entropy_lower_bound(nt, nr)?;
    let two_nr = 2.0 * nr as f64;
    Ok(ErgodicBound {
        snr,
        lower_bits: (hy_lower - ce).max(0.0),
        upper_bits: two_nr - ce,
        jla_bits: two_nr * (1.0 - ce / two_nr),
    })
}

/// Ergodic equiprobable spectral efficiency for IID Rayleigh with `E[H(y|x)]`
/// taken from [`conditional_entropy`] and only `E[H(y)]` sampled. Same draws
/// as [`crate::capacity::ergodic_mi_grid`]; the standard error reflects the
/// `H(y)` samples alone.
pub fn ergodic_mi_control_variate(
    nt: usize,
    nr: usize,
    snrs: &[f64],
    n: usize,
    seed: u64,
    budget: &EnumerationBudget,
) -> Result<Vec<ErgodicEstimate>> {
    let model = ChannelSpec::IidRayleigh { nt, nr, seed: None };
    let samples = ergodic_samples(&model, snrs, &Strategy::Equiprobable, n, seed, budget)?;
    samples
        .iter()
        .zip(snrs)
        .map(|(col, &snr)| {
            let hy: Vec<f64> = col.iter().map(|r| r.hy_bits).collect();
            let mut est = ErgodicEstimate::from_samples(&hy, seed)?;
            est.mean -= conditional_entropy(snr, nr)?;
            Ok(est)
        })
        .collect()
}
