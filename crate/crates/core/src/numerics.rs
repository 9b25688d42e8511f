//! Scalar special functions, Gaussian expectations and the positive-quadrant
//! quadrature used by the Rayleigh bounds.

use std::cell::Cell;
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

use crate::{Error, Result};

/// Default Gauss-Hermite order for [`gaussian_expectation`].
pub const DEFAULT_HERMITE_NODES: usize = 96;

/// Default absolute tolerance for [`quad2d_positive_quadrant`].
pub const DEFAULT_QUAD2D_TOL: f64 = 1e-9;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "probability {value} outside [0, 1]"
            )))
        }
    }

    /// Clamps tiny excursions produced by rounding back into `[0, 1]`.
    pub(crate) fn saturating(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A power ratio expressed in decibels, `10 log10(z)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Decibel(pub f64);

impl Decibel {
    pub fn from_linear(z: f64) -> Self {
        Self(10.0 * z.log10())
    }

    pub fn to_linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Gaussian tail probability `Pr[N(0,1) > xi]`.
///
/// Evaluated through `erfc` so that large positive arguments keep their
/// relative accuracy.
pub fn q_function(xi: f64) -> f64 {
    0.5 * libm::erfc(xi / SQRT_2)
}

/// Natural logarithm of [`q_function`], accurate far into the tail where the
/// Q-function itself underflows.
pub fn ln_q(xi: f64) -> f64 {
    if xi < 0.0 {
        return (-q_function(-xi)).ln_1p();
    }
    if xi < 8.0 {
        return q_function(xi).ln();
    }
    // Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + ...)))), backward evaluation.
    let mut t = xi;
    for k in (1..=60).rev() {
        t = xi + k as f64 / t;
    }
    -0.5 * xi * xi - 0.5 * (2.0 * PI).ln() - t.ln()
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

/// `Hb(Q(xi))` in bits, evaluated on the small tail probability so that the
/// result keeps full relative accuracy at high SNR.
pub fn binary_entropy_of_q(xi: f64) -> f64 {
    let a = xi.abs();
    let ln_p = ln_q(a);
    let p = ln_p.exp();
    if p == 0.0 {
        return 0.0;
    }
    (-p * ln_p - (1.0 - p) * (-p).ln_1p()) / LN_2
}

/// Numerically stable `ln(sum(exp(v)))`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Gauss-Hermite rule normalised to the standard normal density: the nodes
/// are for weight `exp(-ξ²/2)/√(2π)` and the weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "Gauss-Hermite needs at least 2 nodes, got {n}"
            )));
        }
        // Newton iteration on orthonormal physicists' Hermite polynomials,
        // with the classical asymptotic initial guesses.
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let total: f64 = w.iter().sum();
        let nodes = x.iter().rev().map(|t| t * SQRT_2).collect();
        let weights = w.iter().rev().map(|v| v / total).collect();
        Ok(Self { nodes, weights })
    }

    /// The cached default-order rule.
    pub fn standard() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| {
            GaussHermite::new(DEFAULT_HERMITE_NODES).expect("default order is valid")
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(ξ)]` for `ξ ~ N(0, 1)`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        // Symmetric pairs are summed first so odd integrands cancel exactly.
        let n = self.nodes.len();
        let mut acc = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            acc += self.weights[i] * (f(self.nodes[i]) + f(self.nodes[j]));
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * f(self.nodes[n / 2]);
        }
        acc
    }
}

/// `(1/√(2π)) ∫ f(ξ) e^{-ξ²/2} dξ` by Gauss-Hermite quadrature of order `nodes`.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, nodes: usize) -> Result<f64> {
    if nodes == DEFAULT_HERMITE_NODES {
        return Ok(GaussHermite::standard().expectation(f));
    }
    Ok(GaussHermite::new(nodes)?.expectation(f))
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
///
/// Returns the refined composite Simpson value (no Richardson correction), so
/// a nonnegative integrand always yields a nonnegative result.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<f64> {
    const MIN_DEPTH: u32 = 3;
    // Below this width the difference between the two Simpson estimates is
    // dominated by noise in `f` (e.g. an inner quadrature) and is accepted.
    const FLOOR_DEPTH: u32 = 30;
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let mut evals = 3usize;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // (a, b, fa, fm, fb, whole, tol, depth)
    let mut stack = vec![(a, b, fa, fm, fb, whole, tol, 0u32)];
    let mut total = 0.0;
    while let Some((a, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        let converged = depth >= MIN_DEPTH && (refined - whole).abs() <= 15.0 * tol;
        if converged || depth >= FLOOR_DEPTH {
            total += refined;
            continue;
        }
        if evals > max_evals {
            return Err(Error::Quadrature { tol, evaluations: evals });
        }
        stack.push((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1));
        stack.push((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1));
    }
    Ok(total)
}

/// `∫₀^∞ ∫₀^∞ f(γ, ξ) dξ dγ` for integrands with `exp(-2(γ²+ξ²))` decay.
///
/// Tensor-product adaptive Simpson on the square `[0, L]²`, where `L` is
/// large enough that the Gaussian weight is below `tol/100` outside it (and
/// never smaller than `6/√2`).
pub fn quad2d_positive_quadrant(f: impl Fn(f64, f64) -> f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    const MAX_EVALS: usize = 200_000;
    let limit = (6.0 / SQRT_2).max(((100.0 / tol).ln() / 2.0).sqrt());
    let inner_tol = tol / (2.0 * limit);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let outer = adaptive_simpson(
        |gamma| {
            match adaptive_simpson(|xi| f(gamma, xi), 0.0, limit, inner_tol, MAX_EVALS) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        limit,
        0.5 * tol,
        MAX_EVALS,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}
