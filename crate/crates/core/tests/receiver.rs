mod common;

use lcma::channel::{transmit, transmit_noise_free, ChannelRealization};
use lcma::code::{make_test_codes, PamMapper, RingCode};
use lcma::coeff::select_coefficients;
use lcma::receiver::{cancel_users, run_multi_stage, run_single_stage, DetectorKind, StageConfig};
use lcma_oracles::{oracle_app, oracle_map_decode, prime_inverse};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn frame(code: &RingCode, chan: &ChannelRealization, seed: u64) -> (Vec<Vec<u64>>, DMatrix<f64>) {
    let mut r = common::rng(seed);
    let q = code.modulus();
    let msgs: Vec<Vec<u64>> = (0..chan.users()).map(|_| (0..code.k()).map(|_| r.random_range(0..q)).collect()).collect();
    let mapper = PamMapper::new(q);
    let x = DMatrix::from_fn(chan.users(), code.n(), |i, t| mapper.map(&code.encode(&msgs[i]).unwrap())[t]);
    (msgs, transmit(chan, &x, seed).unwrap())
}

fn exhaustive() -> StageConfig {
    StageConfig { detector: DetectorKind::LpncExhaustive, ..Default::default() }
}

#[test]
fn toy_report_matches_a_hand_trace() {
    let code = RingCode::repetition(2, 4).unwrap();
    let rho = 4.0;
    let chan = ChannelRealization::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.2, -0.7]), rho).unwrap();
    for seed in 0..30 {
        let (_, y) = frame(&code, &chan, seed);
        let report = run_single_stage(&chan, &y, &code, &exhaustive()).unwrap();

        let a = select_coefficients(&chan, 2, 2).unwrap().coefficients;
        assert_eq!(report.stages[0].coefficients, a);
        let a_rows = a.a_mod().to_rows();
        let hrows = common::rows_of(chan.h());
        let per_time: Vec<Vec<Vec<f64>>> =
            (0..4).map(|t| oracle_app(&hrows, rho, &[y[(0, t)], y[(1, t)]], &a_rows, 2)).collect();
        let g = code.generator().to_rows();
        let u: Vec<u64> = (0..2)
            .map(|l| {
                let app: Vec<Vec<f64>> = (0..4).map(|t| per_time[t][l].clone()).collect();
                oracle_map_decode(&g, 2, &app)[0]
            })
            .collect();
        for l in 0..2 {
            assert_eq!(report.streams[l].combination, vec![u[l]], "seed {seed}");
            assert!(report.streams[l].success);
        }
        let inv = prime_inverse(&a_rows, 2).unwrap();
        let b: Vec<u64> = (0..2).map(|i| (inv[i][0] * u[0] + inv[i][1] * u[1]) % 2).collect();
        assert_eq!(report.recovered.len(), 2);
        for i in 0..2 {
            assert_eq!(report.recovered[&i], vec![b[i]], "seed {seed}");
        }
    }
}

#[test]
fn second_stage_recovers_the_weak_user() {
    let code = make_test_codes(2, 64, 32, 1).unwrap();
    let rho = 10f64.powf(0.6);
    let chan = ChannelRealization::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 0.5]), rho).unwrap();
    let (msgs, y) = frame(&code, &chan, 8);
    let single = run_single_stage(&chan, &y, &code, &exhaustive()).unwrap();
    let multi = run_multi_stage(&chan, &y, &code, &exhaustive()).unwrap();
    assert_eq!(single.recovered_users(), vec![0]);
    assert_eq!(multi.stages[0].recovered, vec![0]);
    assert_eq!(multi.stages[1].recovered, vec![1]);
    assert_eq!(multi.recovered_users(), vec![0, 1]);
    assert_eq!(multi.recovered[&0], msgs[0]);
    assert_eq!(multi.recovered[&1], msgs[1]);
}

#[test]
fn cancellation_is_exact() {
    let code = make_test_codes(4, 32, 16, 2).unwrap();
    let mut r = common::rng(3);
    for _ in 0..20 {
        let chan = common::realization(3, 3, 5.0, &mut r);
        let msgs: Vec<Vec<u64>> = (0..3).map(|_| (0..16).map(|_| r.random_range(0..4)).collect()).collect();
        let mapper = PamMapper::new(4);
        let x = DMatrix::from_fn(3, 32, |i, t| mapper.map(&code.encode(&msgs[i]).unwrap())[t]);
        let mut y = transmit_noise_free(&chan, &x).unwrap();
        cancel_users(&chan, &mut y, &code, &[(0, &msgs[0]), (2, &msgs[2])]).unwrap();
        let only_one = transmit_noise_free(&chan.select_users(&[1]), &x.rows(1, 1).into_owned()).unwrap();
        assert!((y - only_one).abs().max() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reports_are_consistent(seed in any::<u64>(), det in prop::sample::select(vec![DetectorKind::LinearFilter, DetectorKind::LpncLsd, DetectorKind::LpncExhaustive])) {
        let code = make_test_codes(2, 64, 32, 4).unwrap();
        let mut r = common::rng(seed);
        let chan = common::realization(3, 4, 10f64.powf(r.random_range(0.2..1.2)), &mut r);
        let (msgs, y) = frame(&code, &chan, seed);
        let cfg = StageConfig { detector: det, ..Default::default() };
        let single = run_single_stage(&chan, &y, &code, &cfg).unwrap();
        let multi = run_multi_stage(&chan, &y, &code, &cfg).unwrap();

        for report in [&single, &multi] {
            // every successful stream equals its coefficient row applied to the recovered messages
            for s in report.streams.iter().filter(|s| s.success) {
                let involved: Vec<usize> = (0..4).filter(|&i| s.coefficients[i].rem_euclid(2) != 0).collect();
                if involved.iter().all(|i| report.recovered.contains_key(i)) {
                    let expect: Vec<u64> = (0..32)
                        .map(|t| involved.iter().map(|&i| report.recovered[&i][t]).sum::<u64>() % 2)
                        .collect();
                    prop_assert_eq!(&s.combination, &expect);
                }
            }
            // stage sets are disjoint and only grow
            let mut seen = std::collections::BTreeSet::new();
            for st in &report.stages {
                for &u in &st.recovered {
                    prop_assert!(seen.insert(u));
                }
            }
            prop_assert_eq!(seen.into_iter().collect::<Vec<_>>(), report.recovered_users());
        }
        // the first stage of the multi-stage receiver is the single-stage receiver
        prop_assert_eq!(&multi.stages[0].recovered, &single.recovered_users());
        prop_assert!(multi.recovered.len() >= single.recovered.len());
        prop_assert_eq!(single.estimates.len(), msgs.len());
    }
}
