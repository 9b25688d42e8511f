//! Exact mutual information over quartet distributions, Blahut-Arimoto
//! capacity, the high-SNR limit and Monte Carlo ergodic estimates.
//!
//! Inputs are always used equiprobably within a quartet, so the output
//! distribution is invariant under `y ↦ j·y`. `H(y)` is therefore summed over
//! received-quartet representatives and multiplied by four.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamforming::{best_mi_quartet, SearchMode};
use crate::channel::{ChannelMatrix, ChannelSpec};
use crate::numerics::binary_entropy_of_q;
use crate::quantized_dmc::{
    check_snr, fill_likelihoods, projections, receive_set, rotate_bits, rotation_table,
    EnumerationBudget, QpskVector, Quartet,
};
use crate::{Error, Result};

/// Probabilities of the `4^(Nt−1)` transmit quartets, indexed as in
/// [`crate::quantized_dmc::enumerate_quartets`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuartetDistribution {
    nt: usize,
    probs: Vec<f64>,
}

impl QuartetDistribution {
    pub fn new(nt: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = quartet_count(nt)?;
        if probs.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: probs.len(),
            });
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("quartet probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("quartet probabilities sum to {total}, not 1")));
        }
        Ok(Self { nt, probs })
    }

    /// All quartets equally likely, i.e. IID QPSK per antenna.
    pub fn equiprobable(nt: usize) -> Result<Self> {
        let k = quartet_count(nt)?;
        Ok(Self {
            nt,
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(nt: usize, index: usize) -> Result<Self> {
        let k = quartet_count(nt)?;
        if index >= k {
            return Err(Error::InvalidArgument(format!("quartet {index} out of range for Nt = {nt}")));
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Ok(Self { nt, probs })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Quartets with nonzero probability, with their probabilities.
    pub fn support(&self) -> Vec<(QpskVector, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (QpskVector::from_bits_unchecked((k as u128) << 2, self.nt), *p))
            .collect()
    }

    /// `Σx = Σ_k p_k x_k x_k*`. Rotations within a quartet leave `x x*`
    /// unchanged, so this is the input covariance.
    pub fn covariance(&self) -> DMatrix<Complex64> {
        let mut sigma = DMatrix::zeros(self.nt, self.nt);
        for (x, p) in self.support() {
            let xs = nalgebra::DVector::from_vec(x.to_complex());
            sigma += (&xs * xs.adjoint()) * Complex64::new(p, 0.0);
        }
        sigma
    }
}

/// `4^(nt−1)`, refusing sizes that cannot be stored densely.
fn quartet_count(nt: usize) -> Result<usize> {
    if nt == 0 {
        return Err(Error::InvalidArgument("Nt must be at least 1".into()));
    }
    EnumerationBudget::new(30).check("dense quartet distribution", 2 * (nt as u32 - 1))?;
    Ok(1 << (2 * (nt - 1)))
}

/// `I(x; y) = H(y) − H(y|x)` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiResult {
    pub mi_bits: f64,
    pub hy_bits: f64,
    pub hyx_bits: f64,
}

impl MiResult {
    fn from_entropies(hy_bits: f64, hyx_bits: f64) -> Self {
        Self {
            mi_bits: (hy_bits - hyx_bits).max(0.0),
            hy_bits,
            hyx_bits,
        }
    }
}

/// Upper limit on how many doubles the per-chunk output accumulators may
/// occupy in total.
const ACCUMULATOR_DOUBLES: usize = 1 << 22;

/// Fixed chunking over the input support so that parallel sums are
/// reproducible regardless of the thread count.
fn chunk_len(support: usize, outputs: usize) -> usize {
    let chunks = support.min(16).min((ACCUMULATOR_DOUBLES / outputs).max(1)).max(1);
    support.div_ceil(chunks)
}

/// Mutual information for inputs drawn from `support` (quartet
/// representatives with probabilities summing to one).
pub(crate) fn mi_for_support(
    h: &ChannelMatrix,
    snr: f64,
    support: &[(QpskVector, f64)],
    budget: &EnumerationBudget,
) -> Result<MiResult> {
    check_snr(snr)?;
    budget.check("receive enumeration", 2 * h.nr() as u32)?;
    if support.len() > 1 {
        budget.check_joint(h.nt(), h.nr())?;
    }
    let nr = h.nr();
    let a = (snr / h.nt() as f64).sqrt();
    let outputs = 1usize << (2 * nr);
    let partials: Vec<(Vec<f64>, f64)> = support
        .par_chunks(chunk_len(support.len(), outputs))
        .map(|chunk| {
            let mut q = vec![0.0; outputs];
            let mut w = vec![0.0; outputs];
            let mut hyx = 0.0;
            for &(x, p) in chunk {
                let scaled: Vec<f64> = projections(h, x).into_iter().map(|r| a * r).collect();
                fill_likelihoods(&scaled, &mut w);
                for (qy, wy) in q.iter_mut().zip(&w) {
                    *qy += p * wy;
                }
                hyx += p * scaled.iter().map(|&s| binary_entropy_of_q(s)).sum::<f64>();
            }
            (q, hyx)
        })
        .collect();
    let mut q = vec![0.0; outputs];
    let mut hyx = 0.0;
    for (part, part_hyx) in &partials {
        for (qy, py) in q.iter_mut().zip(part) {
            *qy += py;
        }
        hyx += part_hyx;
    }
    let hy = rotation_averaged_entropy(&q, nr);
    Ok(MiResult::from_entropies(hy, hyx))
}

/// Entropy of `p(y) = ¼ Σ_i q(j^i y)`, summed over representatives with
/// first entry `1 + j` and multiplied by four.
fn rotation_averaged_entropy(q: &[f64], nr: usize) -> f64 {
    let mut h = 0.0;
    for rep in (0..q.len()).step_by(4) {
        let mut y = rep as u128;
        let mut py = 0.0;
        for _ in 0..4 {
            py += q[y as usize];
            y = rotate_bits(y, nr);
        }
        py *= 0.25;
        if py > 0.0 {
            h -= py * py.log2();
        }
    }
    4.0 * h
}

/// Exact mutual information of `H` at `snr` with quartet probabilities `p`.
pub fn mutual_information(
    h: &ChannelMatrix,
    snr: f64,
    p: &QuartetDistribution,
    budget: &EnumerationBudget,
) -> Result<MiResult> {
    if p.nt() != h.nt() {
        return Err(Error::Dimension {
            expected: h.nt(),
            got: p.nt(),
        });
    }
    mi_for_support(h, snr, &p.support(), budget)
}

/// Mutual information when a single quartet is transmitted. Works for any
/// `Nt` as long as the receive side fits the budget.
pub fn mutual_information_quartet(
    h: &ChannelMatrix,
    snr: f64,
    quartet: &Quartet,
    budget: &EnumerationBudget,
) -> Result<MiResult> {
    if quartet.representative().len() != h.nt() {
        return Err(Error::Dimension {
            expected: h.nt(),
            got: quartet.representative().len(),
        });
    }
    mi_for_support(h, snr, &[(quartet.representative(), 1.0)], budget)
}

/// Stopping rule for [`blahut_arimoto`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlahutArimotoOptions {
    /// Target gap, in bits, between the certified upper and lower bounds.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BlahutArimotoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 10_000,
        }
    }
}

/// Outcome of [`blahut_arimoto`].
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Mutual information of the returned distribution.
    pub capacity_bits: f64,
    /// Smallest `max_k D(W_k ‖ q)` over the iterates; capacity never exceeds it.
    pub upper_bound_bits: f64,
    pub distribution: QuartetDistribution,
    pub iterations: usize,
    /// Whether the bound gap reached the tolerance.
    pub certified: bool,
    /// Lower bound `I(p_t)` after every accepted update.
    pub history: Vec<f64>,
}

/// Capacity over quartet probabilities by Blahut-Arimoto, started from the
/// equiprobable distribution.
pub fn blahut_arimoto(
    h: &ChannelMatrix,
    snr: f64,
    options: BlahutArimotoOptions,
    budget: &EnumerationBudget,
) -> Result<CapacityResult> {
    check_snr(snr)?;
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", options.tol)));
    }
    budget.check_joint(h.nt(), h.nr())?;
    let nt = h.nt();
    let nr = h.nr();
    let k_count = quartet_count(nt)?;
    let outputs = 1usize << (2 * nr);
    let a = (snr / nt as f64).sqrt();

    // Row k holds p(y | x_k) for the quartet representative x_k.
    let mut rows = vec![0.0; k_count * outputs];
    let neg_entropy: Vec<f64> = rows
        .par_chunks_mut(outputs)
        .enumerate()
        .map(|(k, row)| {
            let x = QpskVector::from_bits_unchecked((k as u128) << 2, nt);
            let scaled: Vec<f64> = projections(h, x).into_iter().map(|r| a * r).collect();
            fill_likelihoods(&scaled, row);
            row.iter().filter(|w| **w > 0.0).map(|w| w * w.log2()).sum()
        })
        .collect();
    let rot = rotation_table(nr);

    let chunk = chunk_len(k_count, outputs);
    // Returns D(W_k ‖ q_p) for every quartet.
    let divergences = |p: &[f64]| -> Vec<f64> {
        let partials: Vec<Vec<f64>> = rows
            .par_chunks(outputs * chunk)
            .zip(p.par_chunks(chunk))
            .map(|(rs, ps)| {
                let mut q = vec![0.0; outputs];
                for (row, &pk) in rs.chunks(outputs).zip(ps) {
                    for (qy, w) in q.iter_mut().zip(row) {
                        *qy += pk * w;
                    }
                }
                q
            })
            .collect();
        let mut q = vec![0.0; outputs];
        for part in &partials {
            for (qy, v) in q.iter_mut().zip(part) {
                *qy += v;
            }
        }
        let log_q: Vec<f64> = (0..outputs)
            .map(|y| {
                let (r1, r2) = (rot[y] as usize, rot[rot[y] as usize] as usize);
                let avg = 0.25 * (q[y] + q[r1] + q[r2] + q[rot[r2] as usize]);
                avg.max(f64::MIN_POSITIVE).log2()
            })
            .collect();
        rows.par_chunks(outputs)
            .zip(neg_entropy.par_iter())
            .map(|(row, ne)| ne - row.iter().zip(&log_q).map(|(w, lq)| w * lq).sum::<f64>())
            .collect()
    };
    // p_k ∝ p_k 2^{step (D_k − max D)}. Probabilities are kept away from
    // zero so that a quartet dropped early can return.
    let update = |p: &[f64], d: &[f64], top: f64, step: f64| -> Vec<f64> {
        let mut next: Vec<f64> = p.iter().zip(d).map(|(pk, dk)| (pk * (step * (dk - top)).exp2()).max(1e-250)).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|pk| *pk /= total);
        next
    };
    let lower_of = |p: &[f64], d: &[f64]| -> f64 { p.iter().zip(d).map(|(pk, dk)| pk * dk).sum() };
    let max_of = |d: &[f64]| d.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Over-relaxed steps (exponent `step` > 1) are kept only when they do not
    // lower I(p); otherwise the plain step, which always increases it, is
    // taken. Any q gives the valid bound max_k D(W_k ‖ q), so the smallest
    // seen is reported.
    const MAX_STEP: f64 = 16.0;
    let mut p = vec![1.0 / k_count as f64; k_count];
    let mut d = divergences(&p);
    let mut lower = lower_of(&p, &d);
    let mut upper = max_of(&d);
    let mut history = vec![lower];
    let mut certified = upper - lower <= options.tol;
    let mut iterations = 1;
    let mut step = 2.0;
    while !certified && iterations < options.max_iters {
        let top = max_of(&d);
        let mut candidate = update(&p, &d, top, step);
        let mut cd = divergences(&candidate);
        iterations += 1;
        let mut cl = lower_of(&candidate, &cd);
        if cl >= lower {
            step = (step * 1.5).min(MAX_STEP);
        } else {
            upper = upper.min(max_of(&cd));
            step = 1.0;
            candidate = update(&p, &d, top, 1.0);
            cd = divergences(&candidate);
            iterations += 1;
            cl = lower_of(&candidate, &cd);
        }
        debug_assert!(cl >= lower - 1e-12, "Blahut-Arimoto lower bound decreased");
        p = candidate;
        d = cd;
        lower = cl;
        upper = upper.min(max_of(&d));
        history.push(lower);
        certified = upper - lower <= options.tol;
    }

    for pk in p.iter_mut() {
        if *pk < 1e-15 {
            *pk = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|pk| *pk /= total);
    let distribution = QuartetDistribution { nt, probs: p };
    let mi = mutual_information(h, snr, &distribution, budget)?;
    Ok(CapacityResult {
        capacity_bits: mi.mi_bits,
        upper_bound_bits: upper,
        distribution,
        iterations,
        certified,
        history,
    })
}

/// High-SNR capacity `log2 |Y(H)|`.
pub fn c_infinity(h: &ChannelMatrix, budget: &EnumerationBudget) -> Result<f64> {
    Ok((receive_set(h, budget)?.len() as f64).log2())
}

/// How the transmitter chooses its quartet probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Equiprobable,
    /// A single quartet chosen per channel realization for maximum mutual
    /// information.
    Beamforming(SearchMode),
    Fixed(QuartetDistribution),
    /// Blahut-Arimoto optimized per realization.
    Capacity(BlahutArimotoOptions),
}

/// Spectral efficiency of `strategy` on one realization.
pub fn strategy_mi(
    h: &ChannelMatrix,
    snr: f64,
    strategy: &Strategy,
    budget: &EnumerationBudget,
) -> Result<MiResult> {
    match strategy {
        Strategy::Equiprobable => mutual_information(h, snr, &QuartetDistribution::equiprobable(h.nt())?, budget),
        Strategy::Fixed(p) => mutual_information(h, snr, p, budget),
        Strategy::Beamforming(mode) => {
            let best = best_mi_quartet(h, snr, *mode, budget)?;
            mutual_information_quartet(h, snr, &best.quartet, budget)
        }
        Strategy::Capacity(options) => {
            let cap = blahut_arimoto(h, snr, *options, budget)?;
            mutual_information(h, snr, &cap.distribution, budget)
        }
    }
}

/// Sample mean and standard error over channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl ErgodicEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_samples: n,
            seed,
        })
    }
}

/// Per-draw results `[snr index][draw]` with common random numbers: draw `i`
/// is the same realization at every SNR.
pub fn ergodic_samples(
    model: &ChannelSpec,
    snrs: &[f64],
    strategy: &Strategy,
    n: usize,
    seed: u64,
    budget: &EnumerationBudget,
) -> Result<Vec<Vec<MiResult>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 draws, got {n}")));
    }
    for &snr in snrs {
        check_snr(snr)?;
    }
    let per_draw: Vec<Vec<MiResult>> = (0..n as u64)
        .into_par_iter()
        .map(|draw| {
            let h = model.realize(Some(seed), draw)?;
            snrs.iter().map(|&snr| strategy_mi(&h, snr, strategy, budget)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..snrs.len())
        .map(|s| per_draw.iter().map(|d| d[s]).collect())
        .collect())
}

/// Ergodic spectral efficiency `E_H[I(SNR, H)]` by Monte Carlo.
pub fn ergodic_mi(
    model: &ChannelSpec,
    snr: f64,
    strategy: &Strategy,
    n: usize,
    seed: u64,
    budget: &EnumerationBudget,
) -> Result<ErgodicEstimate> {
    Ok(ergodic_mi_grid(model, &[snr], strategy, n, seed, budget)?.remove(0))
}

/// [`ergodic_mi`] over an SNR grid with common random numbers.
pub fn ergodic_mi_grid(
    model: &ChannelSpec,
    snrs: &[f64],
    strategy: &Strategy,
    n: usize,
    seed: u64,
    budget: &EnumerationBudget,
) -> Result<Vec<ErgodicEstimate>> {
    ergodic_samples(model, snrs, strategy, n, seed, budget)?
        .iter()
        .map(|col| ErgodicEstimate::from_samples(&col.iter().map(|r| r.mi_bits).collect::<Vec<_>>(), seed))
        .collect()
}
