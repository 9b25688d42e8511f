//! The 1-bit signal space: packed QPSK vectors, quartets, the sign quantizer,
//! transition probabilities and the noiseless receive set.
//!
//! Entry `m` of a [`QpskVector`] occupies bit `2m` (sign of the real part) and
//! bit `2m + 1` (sign of the imaginary part); a set bit means `-1`. With this
//! layout multiplication by `j` is a bit permutation and the canonical member
//! of a quartet is the one whose two lowest bits are clear, so quartet `k` is
//! represented by the bit pattern `k << 2`.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::numerics::{ln_q, q_function, Probability};
use crate::{Error, Result};

/// Largest vector length that fits the packed representation.
pub const MAX_LEN: usize = 64;

const EVEN: u128 = 0x5555_5555_5555_5555_5555_5555_5555_5555;

fn mask(len: usize) -> u128 {
    if len == MAX_LEN {
        u128::MAX
    } else {
        (1u128 << (2 * len)) - 1
    }
}

/// A length-`N` vector with entries in `{±1±j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QpskVector {
    bits: u128,
    len: usize,
}

impl QpskVector {
    pub fn new(bits: u128, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_LEN {
            return Err(Error::InvalidArgument(format!(
                "QPSK vector length {len} outside 1..={MAX_LEN}"
            )));
        }
        if bits & !mask(len) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit pattern {bits:#x} has bits beyond length {len}"
            )));
        }
        Ok(Self { bits, len })
    }

    pub(crate) fn from_bits_unchecked(bits: u128, len: usize) -> Self {
        debug_assert!((1..=MAX_LEN).contains(&len) && bits & !mask(len) == 0);
        Self { bits, len }
    }

    /// Parses exact QPSK points; any other value is rejected.
    pub fn from_complex(entries: &[Complex64]) -> Result<Self> {
        let mut bits = 0u128;
        for (m, z) in entries.iter().enumerate() {
            for (part, v) in [(0, z.re), (1, z.im)] {
                if v == -1.0 {
                    bits |= 1 << (2 * m + part);
                } else if v != 1.0 {
                    return Err(Error::InvalidArgument(format!("{z} is not a QPSK point")));
                }
            }
        }
        Self::new(bits, entries.len())
    }

    pub fn bits(self) -> u128 {
        self.bits
    }

    pub fn len(self) -> usize {
        self.len
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn entry(self, m: usize) -> Complex64 {
        assert!(m < self.len, "entry {m} out of range");
        let sign = |bit: u32| if (self.bits >> bit) & 1 == 1 { -1.0 } else { 1.0 };
        Complex64::new(sign(2 * m as u32), sign(2 * m as u32 + 1))
    }

    pub fn to_complex(self) -> Vec<Complex64> {
        (0..self.len).map(|m| self.entry(m)).collect()
    }

    /// `j · self`.
    pub fn rotate(self) -> Self {
        Self {
            bits: rotate_bits(self.bits, self.len),
            len: self.len,
        }
    }

    /// `{self, j·self, −self, −j·self}`.
    pub fn rotations(self) -> [Self; 4] {
        let r1 = self.rotate();
        let r2 = r1.rotate();
        [self, r1, r2, r2.rotate()]
    }

    /// The member of this vector's quartet whose first entry is `1 + j`.
    pub fn canonical(self) -> Self {
        self.rotations()
            .into_iter()
            .find(|v| v.bits & 0b11 == 0)
            .expect("exactly one rotation has first entry 1+j")
    }

    pub fn quartet(self) -> Quartet {
        let representative = self.canonical();
        Quartet {
            representative,
            index: (representative.bits >> 2) as usize,
        }
    }

    /// Sign pairs per entry separated by spaces, e.g. `"++ +- -+"`.
    pub fn sign_pattern(self) -> String {
        (0..self.len)
            .map(|m| {
                let z = self.entry(m);
                let c = |v: f64| if v > 0.0 { '+' } else { '-' };
                format!("{}{}", c(z.re), c(z.im))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for QpskVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sign_pattern())
    }
}

/// Multiplication by `j` on packed bits: the new real sign is the negated
/// imaginary sign and the new imaginary sign is the old real sign.
pub(crate) fn rotate_bits(bits: u128, len: usize) -> u128 {
    let even = EVEN & mask(len);
    let re = bits & even;
    let im = (bits >> 1) & even;
    (!im & even) | (re << 1)
}

/// Equivalence class of four QPSK vectors related by powers of `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quartet {
    representative: QpskVector,
    index: usize,
}

impl Quartet {
    /// Quartet number `index` of length-`n` vectors.
    pub fn from_index(index: usize, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_LEN {
            return Err(Error::InvalidArgument(format!("length {n} outside 1..={MAX_LEN}")));
        }
        if n <= 32 && (index as u128) >= 1u128 << (2 * (n - 1)) {
            return Err(Error::InvalidArgument(format!(
                "quartet index {index} out of range for length {n}"
            )));
        }
        Ok(Self {
            representative: QpskVector::new((index as u128) << 2, n)?,
            index,
        })
    }

    pub fn representative(&self) -> QpskVector {
        self.representative
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn members(&self) -> [QpskVector; 4] {
        self.representative.rotations()
    }
}

/// Limit on the number of packed bits an exhaustive enumeration may span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_bits: u32,
}

impl Default for EnumerationBudget {
    /// 26 bits: exact joint enumeration up to about 6 × 6 antennas.
    fn default() -> Self {
        Self { max_bits: 26 }
    }
}

impl EnumerationBudget {
    pub fn new(max_bits: u32) -> Self {
        Self { max_bits }
    }

    pub fn check(&self, what: &'static str, bits: u32) -> Result<()> {
        if bits > self.max_bits {
            return Err(Error::Budget {
                what,
                bits,
                limit: self.max_bits,
            });
        }
        Ok(())
    }

    /// Joint transmit/receive enumeration needs `2(Nt + Nr)` bits.
    pub fn check_joint(&self, nt: usize, nr: usize) -> Result<()> {
        self.check("joint input/output enumeration", 2 * (nt + nr) as u32)
    }
}

/// Componentwise `sgn` of real and imaginary parts. Exact zeros map to `+1`.
pub fn quantize(v: &[Complex64]) -> Result<QpskVector> {
    quantize_counted(v).map(|(q, _)| q)
}

/// [`quantize`] plus the number of exact-zero components that were resolved
/// to `+1`.
pub fn quantize_counted(v: &[Complex64]) -> Result<(QpskVector, usize)> {
    let mut bits = 0u128;
    let mut zeros = 0;
    for (m, z) in v.iter().enumerate() {
        for (part, c) in [(0, z.re), (1, z.im)] {
            if c == 0.0 {
                zeros += 1;
            } else if c < 0.0 {
                bits |= 1 << (2 * m + part);
            }
        }
    }
    Ok((QpskVector::new(bits, v.len())?, zeros))
}

/// All `4^(n−1)` quartets of length-`n` vectors, in index order.
pub fn enumerate_quartets(n: usize, budget: &EnumerationBudget) -> Result<Vec<Quartet>> {
    if n == 0 {
        return Err(Error::InvalidArgument("length must be at least 1".into()));
    }
    budget.check("transmit quartet enumeration", 2 * (n as u32 - 1))?;
    (0..1usize << (2 * (n - 1))).map(|k| Quartet::from_index(k, n)).collect()
}

fn check_dims(h: &ChannelMatrix, x: QpskVector) -> Result<()> {
    if x.len() != h.nt() {
        return Err(Error::Dimension {
            expected: h.nt(),
            got: x.len(),
        });
    }
    Ok(())
}

/// `[Re h_0 x, Im h_0 x, Re h_1 x, ...]`, aligned with the output bit order.
pub fn projections(h: &ChannelMatrix, x: QpskVector) -> Vec<f64> {
    let xs = x.to_complex();
    h.apply(&xs).into_iter().flat_map(|z| [z.re, z.im]).collect()
}

/// `p(y | x)` for 1-bit quantization of `√(SNR/(2Nt)) H x + z`.
pub fn transition_prob(
    h: &ChannelMatrix,
    snr: f64,
    x: QpskVector,
    y: QpskVector,
) -> Result<Probability> {
    check_dims(h, x)?;
    if y.len() != h.nr() {
        return Err(Error::Dimension {
            expected: h.nr(),
            got: y.len(),
        });
    }
    check_snr(snr)?;
    let a = (snr / h.nt() as f64).sqrt();
    let ln_p: f64 = projections(h, x)
        .iter()
        .enumerate()
        .map(|(b, &r)| {
            let sign = if (y.bits() >> b) & 1 == 1 { -1.0 } else { 1.0 };
            ln_q(-sign * a * r)
        })
        .sum();
    Ok(Probability::saturating(ln_p.exp()))
}

pub(crate) fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0 && snr.is_finite()) {
        return Err(Error::InvalidArgument(format!("SNR must be finite and nonnegative, got {snr}")));
    }
    Ok(())
}

/// Fills `out` (length `2^{2Nr}`) with `p(y | x)` for every packed `y`, given
/// the scaled projections `a·[Re h_0 x, Im h_0 x, ...]`.
///
/// Built as a Kronecker product one output bit at a time.
pub(crate) fn fill_likelihoods(scaled: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), 1 << scaled.len());
    out[0] = 1.0;
    for (b, &r) in scaled.iter().enumerate() {
        let half = 1usize << b;
        let ppos = q_function(-r);
        let pneg = q_function(r);
        let (lo, hi) = out[..2 * half].split_at_mut(half);
        for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
            *h = *l * pneg;
            *l *= ppos;
        }
    }
}

/// All transition probabilities out of one transmit vector.
#[derive(Debug, Clone)]
pub struct TransitionRow {
    pub x: QpskVector,
    /// Indexed by packed receive bits.
    pub probs: Vec<f64>,
}

impl TransitionRow {
    pub fn prob(&self, y: QpskVector) -> Probability {
        Probability::saturating(self.probs[y.bits() as usize])
    }
}

/// The full row `p(· | x)` over all `4^Nr` outputs.
pub fn transition_row(
    h: &ChannelMatrix,
    snr: f64,
    x: QpskVector,
    budget: &EnumerationBudget,
) -> Result<TransitionRow> {
    check_dims(h, x)?;
    check_snr(snr)?;
    budget.check("receive enumeration", 2 * h.nr() as u32)?;
    let a = (snr / h.nt() as f64).sqrt();
    let scaled: Vec<f64> = projections(h, x).into_iter().map(|r| a * r).collect();
    let mut probs = vec![0.0; 1 << scaled.len()];
    fill_likelihoods(&scaled, &mut probs);
    Ok(TransitionRow { x, probs })
}

/// Relative threshold below which a projection counts as lying on a
/// quantization boundary.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `sgn(Hx)`, or an error naming the offending row when a component is
/// (numerically) zero.
pub fn noiseless_output(h: &ChannelMatrix, x: QpskVector) -> Result<QpskVector> {
    check_dims(h, x)?;
    let hx = h.apply(&x.to_complex());
    for (n, z) in hx.iter().enumerate() {
        let scale: f64 = (0..h.nt()).map(|m| h.entry(n, m).norm()).sum::<f64>() * std::f64::consts::SQRT_2;
        for (part, v) in [("real", z.re), ("imaginary", z.im)] {
            if v.abs() <= DEGENERACY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::DegenerateProjection {
                    row: n,
                    part,
                    x: x.sign_pattern(),
                });
            }
        }
    }
    quantize(&hx)
}

/// `{sgn(Hx)}` over all `4^Nt` inputs, sorted by packed bits.
///
/// Only quartet representatives are evaluated; each output is closed under
/// `j` because `sgn(H jx) = j sgn(Hx)`.
pub fn receive_set(h: &ChannelMatrix, budget: &EnumerationBudget) -> Result<Vec<QpskVector>> {
    budget.check("transmit enumeration", 2 * h.nt() as u32)?;
    if h.nr() > MAX_LEN {
        return Err(Error::InvalidArgument(format!("at most {MAX_LEN} receive antennas")));
    }
    let quartets = enumerate_quartets(h.nt(), budget)?;
    let outputs: Vec<QpskVector> = quartets
        .par_iter()
        .map(|q| noiseless_output(h, q.representative()))
        .collect::<Result<_>>()?;
    let set: BTreeSet<QpskVector> = outputs.into_iter().flat_map(|y| y.rotations()).collect();
    Ok(set.into_iter().collect())
}

/// Output-bit permutation implementing `y ↦ j·y` on all `4^Nr` outputs.
pub(crate) fn rotation_table(nr: usize) -> Vec<u32> {
    (0..1u128 << (2 * nr)).map(|y| rotate_bits(y, nr) as u32).collect()
}
