//! Reference computations shared by the integration and acceptance tests.
//! They deliberately avoid the quartet and rotation shortcuts of the library.

#![allow(dead_code)]

use onebit_mimo::capacity::QuartetDistribution;
use onebit_mimo::channel::ChannelMatrix;
use onebit_mimo::quantized_dmc::{transition_prob, QpskVector};

/// `I(x; y)` of the channel viewed as a plain DMC over all `4^Nt` inputs and
/// `4^Nr` outputs, each input carrying a quarter of its quartet's mass.
pub fn dmc_mutual_information(h: &ChannelMatrix, snr: f64, p: &QuartetDistribution) -> f64 {
    let (nt, nr) = (h.nt(), h.nr());
    let inputs: Vec<(QpskVector, f64)> = (0..1u128 << (2 * nt))
        .map(|b| {
            let x = QpskVector::new(b, nt).unwrap();
            (x, p.probs()[x.quartet().index()] / 4.0)
        })
        .collect();
    let outputs: Vec<QpskVector> = (0..1u128 << (2 * nr)).map(|b| QpskVector::new(b, nr).unwrap()).collect();
    let w: Vec<Vec<f64>> = inputs
        .iter()
        .map(|(x, _)| outputs.iter().map(|&y| transition_prob(h, snr, *x, y).unwrap().get()).collect())
        .collect();
    let q: Vec<f64> = (0..outputs.len())
        .map(|k| inputs.iter().zip(&w).map(|((_, px), row)| px * row[k]).sum())
        .collect();
    let mut mi = 0.0;
    for ((_, px), row) in inputs.iter().zip(&w) {
        for (k, &wk) in row.iter().enumerate() {
            if *px > 0.0 && wk > 0.0 {
                mi += px * wk * (wk / q[k]).log2();
            }
        }
    }
    mi
}

/// Derivatives at zero of `I(snr)` from `I(h)/h` sampled at three step sizes:
/// the quadratic through `(h_k, I(h_k)/h_k)` has intercept `İ(0)` and slope
/// `Ï(0)/2`.
pub fn low_snr_derivatives(mi: impl Fn(f64) -> f64, steps: [f64; 3]) -> (f64, f64) {
    let f: Vec<f64> = steps.iter().map(|&s| mi(s) / s).collect();
    let [h0, h1, h2] = steps;
    // Divided differences of the interpolating quadratic.
    let d01 = (f[1] - f[0]) / (h1 - h0);
    let d12 = (f[2] - f[1]) / (h2 - h1);
    let c = (d12 - d01) / (h2 - h0);
    let b = d01 - c * (h0 + h1);
    let a = f[0] - b * h0 - c * h0 * h0;
    (a, 2.0 * b)
}

/// `(Eb/N0_min, S0)` from the derivatives of `I` in bits:
/// `1/İ` and `2İ²/(−Ï log2 e)`.
pub fn low_snr_metrics_from_derivatives(i1: f64, i2: f64) -> (f64, f64) {
    (1.0 / i1, 2.0 * i1 * i1 / (-i2 * std::f64::consts::LOG2_E))
}
