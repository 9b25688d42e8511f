use std::f64::consts::PI;

use onebit_mimo::beamforming::{
    beamforming_ebn0_bounds, best_mi_quartet, best_power_quartet, SearchMode, SpectralMoments,
};
use onebit_mimo::capacity::{blahut_arimoto, mutual_information, BlahutArimotoOptions, QuartetDistribution};
use onebit_mimo::channel::{eta_parameter, iid_rayleigh, spectral, LosGeometry};
use onebit_mimo::lowsnr::{fullres_ebn0_min, LowSnrTerms, Signaling};
use onebit_mimo::numerics::{
    binary_entropy, gaussian_expectation, q_function, quad2d_positive_quadrant, Decibel,
};
use onebit_mimo::power_model::breakeven_bandwidth;
use onebit_mimo::quantized_dmc::{
    receive_set, transition_prob, transition_row, EnumerationBudget, QpskVector,
};
use proptest::prelude::*;

fn budget() -> EnumerationBudget {
    EnumerationBudget::default()
}

fn bits_for(len: usize) -> impl Strategy<Value = u128> {
    let mask = if len == 64 { u128::MAX } else { (1u128 << (2 * len)) - 1 };
    any::<u128>().prop_map(move |b| b & mask)
}

fn qpsk(max_len: usize) -> impl Strategy<Value = QpskVector> {
    (1..=max_len).prop_flat_map(|len| bits_for(len).prop_map(move |b| QpskVector::new(b, len).unwrap()))
}

proptest! {
    #[test]
    fn q_complements(xi in -40.0f64..40.0) {
        prop_assert!((q_function(xi) + q_function(-xi) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn binary_entropy_is_symmetric(p in 0.0f64..=1.0) {
        prop_assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() <= 1e-15);
    }

    #[test]
    fn odd_gaussian_expectations_vanish(a in -3.0f64..3.0, b in -1.0f64..1.0) {
        let v = gaussian_expectation(|x| a * x + b * x.powi(3) + (x * 0.7).sin(), 96).unwrap();
        prop_assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn quad2d_of_nonnegative_is_nonnegative(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let v = quad2d_positive_quadrant(|x, y| ((a * x - b * y).sin()).powi(2) * (-x * x - y * y).exp(), 1e-9).unwrap();
        prop_assert!(v >= 0.0);
    }

    #[test]
    fn decibel_round_trip(z in 1e-12f64..1e12) {
        let back = Decibel::from_linear(z).to_linear();
        prop_assert!((back / z - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotation_has_order_four(x in qpsk(64)) {
        let r = x.rotate();
        prop_assert_ne!(r, x);
        prop_assert_eq!(r.rotate().rotate().rotate(), x);
        let members = x.rotations();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                prop_assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn rotation_matches_complex_multiplication(x in qpsk(16)) {
        let j = onebit_mimo::Complex64::new(0.0, 1.0);
        let expected: Vec<_> = x.to_complex().iter().map(|z| z * j).collect();
        prop_assert_eq!(x.rotate().to_complex(), expected);
    }

    #[test]
    fn canonical_is_idempotent_and_shared_by_quartet(x in qpsk(64)) {
        let c = x.canonical();
        prop_assert_eq!(c.canonical(), c);
        prop_assert_eq!(c.bits() & 3, 0);
        prop_assert_eq!(x.rotate().canonical(), c);
        prop_assert_eq!(x.quartet().representative(), c);
    }

    #[test]
    fn breakeven_monotonicity(
        pt in 0.01f64..2.0,
        eta in 0.05f64..1.0,
        fom in 1e-15f64..1e-10,
        bits in 2u32..14,
        n_adc in 1u32..64,
    ) {
        let b = breakeven_bandwidth(pt, eta, fom, bits, n_adc).unwrap();
        prop_assert!(breakeven_bandwidth(pt, eta, fom, bits, n_adc + 1).unwrap() < b);
        prop_assert!(breakeven_bandwidth(pt, eta, fom * 1.5, bits, n_adc).unwrap() < b);
        prop_assert!(breakeven_bandwidth(pt * 1.5, eta, fom, bits, n_adc).unwrap() > b);
        prop_assert!(breakeven_bandwidth(pt, eta * 0.5, fom, bits, n_adc).unwrap() > b);
    }

    #[test]
    fn eta_is_symmetric_in_the_two_ends(
        n in 2usize..9,
        dt in 0.1f64..3.0,
        dr in 0.1f64..3.0,
        tt in -1.2f64..1.2,
        tr in -1.2f64..1.2,
    ) {
        let g = LosGeometry {
            range: 500.0,
            wavelength: 1.0,
            spacing_tx: dt,
            spacing_rx: dr,
            elevation_tx: tt,
            elevation_rx: tr,
            azimuth: 0.3,
            nt: n,
            nr: n - 1,
        };
        let swapped = LosGeometry {
            spacing_tx: dr,
            spacing_rx: dt,
            elevation_tx: tr,
            elevation_rx: tt,
            nt: n - 1,
            nr: n,
            ..g
        };
        let (a, b) = (eta_parameter(&g), eta_parameter(&swapped));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transition_symmetry_and_stochastic_rows(
        nt in 1usize..4,
        nr in 1usize..4,
        seed in any::<u64>(),
        snr_db in -20.0f64..30.0,
        xb in any::<u128>(),
        yb in any::<u128>(),
    ) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let snr = Decibel(snr_db).to_linear();
        let x = QpskVector::new(xb & ((1 << (2 * nt)) - 1), nt).unwrap();
        let y = QpskVector::new(yb & ((1 << (2 * nr)) - 1), nr).unwrap();
        let p = transition_prob(&h, snr, x, y).unwrap().get();
        let q = transition_prob(&h, snr, x.rotate(), y.rotate()).unwrap().get();
        prop_assert!((p - q).abs() <= 1e-12);
        let row = transition_row(&h, snr, x, &budget()).unwrap();
        let total: f64 = row.probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn mutual_information_is_bounded(
        nt in 1usize..4,
        nr in 1usize..4,
        seed in any::<u64>(),
        snr_db in -20.0f64..40.0,
        weights in prop::collection::vec(0.0f64..1.0, 16),
    ) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let k = 1 << (2 * (nt - 1));
        let w = &weights[..k];
        let total: f64 = w.iter().sum::<f64>() + 1e-9 * k as f64;
        let p = QuartetDistribution::new(nt, w.iter().map(|v| (v + 1e-9) / total).collect()).unwrap();
        let r = mutual_information(&h, Decibel(snr_db).to_linear(), &p, &budget()).unwrap();
        prop_assert!(r.mi_bits >= 0.0);
        prop_assert!(r.mi_bits <= 2.0 * nt.min(nr) as f64 + 1e-9);
        prop_assert!(r.mi_bits <= r.hy_bits + 1e-12);
    }

    #[test]
    fn receive_set_is_closed_under_rotation(nt in 1usize..5, nr in 1usize..5, seed in any::<u64>()) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let set = receive_set(&h, &budget()).unwrap();
        prop_assert_eq!(set.len() % 4, 0);
        for y in &set {
            prop_assert!(set.binary_search(&y.rotate()).is_ok());
        }
    }

    #[test]
    fn exhaustive_power_dominates_subset(nt in 1usize..6, nr in 1usize..6, seed in any::<u64>()) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let ex = best_power_quartet(&h, SearchMode::Exhaustive, &budget()).unwrap();
        let sub = best_power_quartet(&h, SearchMode::Subset, &budget()).unwrap();
        prop_assert!(ex.objective >= sub.objective * (1.0 - 1e-12));
        prop_assert_eq!(sub.candidate_count, nt);
    }

    #[test]
    fn fullres_gap_is_constant(nt in 1usize..5, nr in 1usize..5, seed in any::<u64>()) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let m = LowSnrTerms::for_channel(&h, &Signaling::Equiprobable, &budget()).unwrap().metrics().unwrap();
        let gap = m.ebn0_min_db.value() - fullres_ebn0_min(&m).ebn0_min_db.value();
        prop_assert!((gap - 10.0 * (PI / 2.0).log10()).abs() <= 1e-9);
    }

    #[test]
    fn spectral_energy_matches_gram_trace(nt in 1usize..9, nr in 1usize..9, seed in any::<u64>()) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let s = spectral(&h).unwrap();
        let energy: f64 = s.singular_values.iter().map(|v| v * v).sum();
        prop_assert!((energy / h.gram_trace() - 1.0).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn beamforming_never_beats_capacity(nt in 1usize..4, nr in 1usize..4, seed in any::<u64>(), snr_db in -10.0f64..20.0) {
        let h = iid_rayleigh(nt, nr, seed).unwrap();
        let snr = Decibel(snr_db).to_linear();
        let bf = best_mi_quartet(&h, snr, SearchMode::Exhaustive, &budget()).unwrap().objective;
        let options = BlahutArimotoOptions { tol: 1e-9, ..Default::default() };
        let cap = blahut_arimoto(&h, snr, options, &budget()).unwrap();
        prop_assert!(bf <= cap.upper_bound_bits + 1e-9);
    }
}

/// The bracketing interval holds draw by draw, not only in expectation.
#[test]
fn bracketing_interval_holds_per_draw() {
    for seed in 0..50 {
        let h = iid_rayleigh(4, 4, 10_000 + seed).unwrap();
        let bounds = beamforming_ebn0_bounds(&SpectralMoments::for_channel(&h).unwrap()).unwrap();
        let e = LowSnrTerms::for_channel(&h, &Signaling::Beamforming(SearchMode::Exhaustive), &budget())
            .unwrap()
            .metrics()
            .unwrap()
            .ebn0_min_linear;
        assert!(
            bounds.lower * (1.0 - 1e-12) <= e && e <= bounds.upper * (1.0 + 1e-12),
            "draw {seed}: {e} outside [{}, {}]",
            bounds.lower,
            bounds.upper
        );
    }
}
