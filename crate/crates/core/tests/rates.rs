mod common;

use lcma::channel::ChannelRealization;
use lcma::coeff::{select_coefficients, CoefficientMatrix};
use lcma::rates::{estimate_rates, pam_awgn_mi, rates_from_entropies, uniform_bin_check, Conditioning};
use lcma::zq::ZqMatrix;
use lcma_oracles::trapezoid_pam_mi;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn quadrature_matches_the_trapezoid_oracle() {
    for q in [2u64, 4, 8] {
        for rho in [0.0, 0.3, 1.0, 3.0, 10.0, 50.0] {
            let got = pam_awgn_mi(q, rho);
            let want = trapezoid_pam_mi(q, rho, 1e-3);
            assert!((got - want).abs() < 1e-3, "q={q} rho={rho}: {got} vs {want}");
        }
    }
}

#[test]
fn mutual_information_is_monotone_and_saturates() {
    let mut prev = -1.0;
    for i in 0..60 {
        let v = pam_awgn_mi(4, 10f64.powf(i as f64 / 10.0 - 2.0));
        assert!(v >= prev - 1e-12);
        prev = v;
    }
    assert!((pam_awgn_mi(2, 1e4) - 1.0).abs() < 1e-6);
}

#[test]
fn single_user_rate_is_the_bpsk_capacity() {
    for rho in [0.5, 1.0, 2.0] {
        let h = ChannelRealization::from_matrix(DMatrix::from_element(1, 1, 1.0), rho).unwrap();
        let est = estimate_rates(&h, &CoefficientMatrix::identity(1, 2), 200_000, Conditioning::FullY, 7).unwrap();
        let want = pam_awgn_mi(2, rho);
        assert!((est.sym_rate - want).abs() < 0.01, "rho={rho}: {} vs {want}", est.sym_rate);
        assert!(est.std_err[0] < 0.003);
    }
}

#[test]
fn filtering_loses_information() {
    let mut r = common::rng(3);
    for case in 0..20 {
        let h = common::realization(2, 2, 10f64.powf(rand::Rng::random_range(&mut r, 0.0..1.5)), &mut r);
        let a = select_coefficients(&h, 2, 2).unwrap().coefficients;
        let full = estimate_rates(&h, &a, 4096, Conditioning::FullY, case).unwrap();
        let filt = estimate_rates(&h, &a, 4096, Conditioning::FilteredY, case).unwrap();
        for l in 0..2 {
            let pooled = (full.std_err[l].powi(2) + filt.std_err[l].powi(2)).sqrt();
            assert!(filt.cond_entropy[l] >= full.cond_entropy[l] - 2.0 * pooled, "case {case} stream {l}");
        }
    }
}

#[test]
fn selected_coefficients_beat_the_identity() {
    let mut r = common::rng(4);
    let draws = 40;
    let mut wins = 0;
    for d in 0..draws {
        let h = common::realization(2, 2, 10.0, &mut r);
        let sel = select_coefficients(&h, 2, 2).unwrap().coefficients;
        let a = estimate_rates(&h, &sel, 2048, Conditioning::FullY, d).unwrap();
        let b = estimate_rates(&h, &CoefficientMatrix::identity(2, 2), 2048, Conditioning::FullY, d).unwrap();
        let se = a.std_err.iter().chain(&b.std_err).fold(0.0f64, |m, v| m.max(*v));
        if a.sym_rate >= b.sym_rate - 2.0 * se {
            wins += 1;
        }
    }
    assert!(wins * 100 >= draws * 95, "{wins} of {draws}");
}

#[test]
fn zero_snr_carries_nothing() {
    let mut r = common::rng(5);
    let h = common::realization(2, 2, 1.0, &mut r).with_rho(0.0);
    let est = estimate_rates(&h, &CoefficientMatrix::identity(2, 4), 1000, Conditioning::FullY, 1).unwrap();
    for e in &est.cond_entropy {
        assert!((e - 2.0).abs() < 1e-9);
    }
    assert_eq!(est.sym_rate, 0.0);
}

#[test]
fn bin_uniformity_examples() {
    let m = |rows: &[&[i64]], q| ZqMatrix::from_rows(rows, q).unwrap();
    assert!(uniform_bin_check(&m(&[&[1, 0]], 2), 20_000, 1).unwrap().uniform());
    assert!(uniform_bin_check(&m(&[&[1, 1]], 4), 20_000, 1).unwrap().uniform());
    let bad = uniform_bin_check(&m(&[&[1, 1], &[2, 2]], 4), 20_000, 1).unwrap();
    assert_eq!(bad.flagged_rows, vec![1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn entropies_stay_in_range(seed in any::<u64>(), q in prop::sample::select(vec![2u64, 4])) {
        let mut r = common::rng(seed);
        let h = common::realization(2, 2, 3.0, &mut r);
        let rows: Vec<Vec<i64>> = (0..2).map(|_| (0..2).map(|_| rand::Rng::random_range(&mut r, -2..=2)).collect()).collect();
        prop_assume!(rows.iter().all(|row| row.iter().any(|&v| v != 0)));
        let a = CoefficientMatrix::new(rows, q).unwrap();
        for cond in [Conditioning::FullY, Conditioning::FilteredY] {
            let est = estimate_rates(&h, &a, 256, cond, seed).unwrap();
            let log_q = (q as f64).log2();
            prop_assert!(est.cond_entropy.iter().all(|&e| (0.0..=log_q).contains(&e)));
            prop_assert!(est.user_rates.iter().all(|&v| v >= -1e-12 && v <= log_q + 1e-12));
        }
    }

    #[test]
    fn symmetric_rate_is_the_worst_constrained_user(e in prop::collection::vec(0.0f64..1.0, 2), a in prop::collection::vec(0u64..2, 4)) {
        let m = ZqMatrix::new(2, 2, 2, a.clone()).unwrap();
        let (users, sym) = rates_from_entropies(&m, &e);
        for i in 0..2 {
            let worst = (0..2).filter(|&l| a[l * 2 + i] != 0).map(|l| e[l]).fold(0.0, f64::max);
            prop_assert!((users[i] - (1.0 - worst)).abs() < 1e-12);
        }
        prop_assert!((sym - users.iter().cloned().fold(f64::INFINITY, f64::min)).abs() < 1e-12);
    }
}
