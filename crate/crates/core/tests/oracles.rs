mod common;

use std::f64::consts::PI;

use onebit_mimo::beamforming::{best_power_quartet, SearchMode};
use onebit_mimo::capacity::{
    blahut_arimoto, ergodic_mi_grid, mutual_information, BlahutArimotoOptions, QuartetDistribution, Strategy,
};
use onebit_mimo::channel::{iid_rayleigh, los_planar, los_spherical, ChannelMatrix, ChannelSpec, LosGeometry};
use onebit_mimo::lowsnr::{LowSnrTerms, Signaling};
use onebit_mimo::numerics::Decibel;
use onebit_mimo::quantized_dmc::EnumerationBudget;
use onebit_mimo::rayleigh_bounds::conditional_entropy;

fn budget() -> EnumerationBudget {
    EnumerationBudget::default()
}

fn test_channels() -> Vec<ChannelMatrix> {
    vec![
        los_planar(&LosGeometry::half_wavelength(3, 2, 1e3, PI / 4.0, PI / 6.0, PI / 4.0)).unwrap(),
        los_spherical(&LosGeometry::broadside_with_eta(2, 3, 40.0, 0.5)).unwrap(),
        los_spherical(&LosGeometry::broadside_with_eta(3, 3, 60.0, 1.0)).unwrap(),
        iid_rayleigh(2, 3, 41).unwrap(),
        iid_rayleigh(3, 1, 42).unwrap(),
    ]
}

fn skewed(nt: usize) -> QuartetDistribution {
    let raw: Vec<f64> = (0..1usize << (2 * (nt - 1))).map(|k| 1.0 + (k % 5) as f64).collect();
    let total: f64 = raw.iter().sum();
    QuartetDistribution::new(nt, raw.iter().map(|r| r / total).collect()).unwrap()
}

#[test]
fn mutual_information_matches_plain_dmc_on_los_channels() {
    for h in test_channels() {
        let nt = h.nt();
        let dists = [
            QuartetDistribution::equiprobable(nt).unwrap(),
            skewed(nt),
            QuartetDistribution::point_mass(nt, (1usize << (2 * (nt - 1))) - 1).unwrap(),
        ];
        for p in &dists {
            for snr_db in [-15.0, 0.0, 10.0, 25.0] {
                let snr = Decibel(snr_db).to_linear();
                let fast = mutual_information(&h, snr, p, &budget()).unwrap().mi_bits;
                let slow = common::dmc_mutual_information(&h, snr, p);
                assert!((fast - slow).abs() <= 1e-9, "{}x{} at {snr_db} dB: {fast} vs {slow}", h.nr(), nt);
            }
        }
    }
}

#[test]
fn low_snr_metrics_match_finite_differences() {
    for h in test_channels() {
        let nt = h.nt();
        let mut cases = vec![
            (QuartetDistribution::equiprobable(nt).unwrap(), Signaling::Equiprobable),
            (skewed(nt), Signaling::Fixed(skewed(nt))),
        ];
        let best = best_power_quartet(&h, SearchMode::Exhaustive, &budget()).unwrap().quartet;
        cases.push((
            QuartetDistribution::point_mass(nt, best.index()).unwrap(),
            Signaling::Beamforming(SearchMode::Exhaustive),
        ));
        for (p, signaling) in cases {
            let analytic = LowSnrTerms::for_channel(&h, &signaling, &budget()).unwrap().metrics().unwrap();
            let (i1, i2) = common::low_snr_derivatives(
                |s| mutual_information(&h, s, &p, &budget()).unwrap().mi_bits,
                [1e-3, 5e-4, 2.5e-4],
            );
            let (e, s0) = common::low_snr_metrics_from_derivatives(i1, i2);
            assert!((e / analytic.ebn0_min_linear - 1.0).abs() <= 1e-3, "{signaling:?}: {e} vs {analytic:?}");
            assert!((s0 / analytic.s0 - 1.0).abs() <= 1e-3, "{signaling:?}: {s0} vs {analytic:?}");
        }
    }
}

#[test]
fn capacity_dominates_every_tested_distribution() {
    // The planar channel has near-duplicate rows, on which the iteration
    // needs far more than the default budget to certify.
    let options = BlahutArimotoOptions { max_iters: 200_000, ..Default::default() };
    for h in test_channels() {
        let nt = h.nt();
        for snr_db in [-10.0, 5.0, 20.0] {
            let snr = Decibel(snr_db).to_linear();
            let cap = blahut_arimoto(&h, snr, options, &budget()).unwrap();
            assert!(cap.certified, "{}x{nt} at {snr_db} dB: gap {}", h.nr(), cap.upper_bound_bits - cap.capacity_bits);
            let reached = common::dmc_mutual_information(&h, snr, &cap.distribution);
            assert!((reached - cap.capacity_bits).abs() <= 1e-9);
            for p in [QuartetDistribution::equiprobable(nt).unwrap(), skewed(nt)] {
                assert!(common::dmc_mutual_information(&h, snr, &p) <= cap.upper_bound_bits + 1e-12);
            }
            for k in 0..1usize << (2 * (nt - 1)) {
                let p = QuartetDistribution::point_mass(nt, k).unwrap();
                assert!(mutual_information(&h, snr, &p, &budget()).unwrap().mi_bits <= cap.upper_bound_bits + 1e-12);
            }
        }
    }
}

#[test]
fn siso_ergodic_rate_matches_single_integral() {
    // With one receive antenna H(y) = 2 bits exactly, so the ergodic rate is
    // 2 − E[H(y|x)].
    let spec = ChannelSpec::IidRayleigh { nt: 1, nr: 1, seed: None };
    let snrs: Vec<f64> = [-10.0, 0.0, 10.0, 20.0].iter().map(|&d| Decibel(d).to_linear()).collect();
    let est = ergodic_mi_grid(&spec, &snrs, &Strategy::Equiprobable, 4000, 3, &budget()).unwrap();
    for (snr, e) in snrs.iter().zip(&est) {
        let exact = 2.0 - conditional_entropy(*snr, 1).unwrap();
        assert!((e.mean - exact).abs() <= 3.0 * e.stderr, "{snr}: {e:?} vs {exact}");
    }
}
