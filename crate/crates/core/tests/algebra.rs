mod common;

use lcma::code::{make_test_codes, PamMapper, RingCode};
use lcma::zq::{gmi, is_unit_invertible, mat_mul_mod, ZqMatrix};
use lcma_oracles::{integer_determinant, prime_inverse, prime_rank, row_space_contains};
use proptest::prelude::*;
use std::sync::OnceLock;

fn codes() -> &'static Vec<RingCode> {
    static CODES: OnceLock<Vec<RingCode>> = OnceLock::new();
    CODES.get_or_init(|| {
        let mut v = Vec::new();
        for q in [2, 4] {
            for (n, k) in [(16, 8), (32, 16), (64, 32), (24, 12)] {
                v.push(make_test_codes(q, n, k, n as u64 + q).unwrap());
            }
        }
        v
    })
}

fn combine(words: &[Vec<u64>], coeffs: &[i64], q: u64) -> Vec<u64> {
    (0..words[0].len())
        .map(|t| {
            let s: i128 = words.iter().zip(coeffs).map(|(w, &a)| a as i128 * w[t] as i128).sum();
            s.rem_euclid(q as i128) as u64
        })
        .collect()
}

fn zq_rows(q: u64, rows: usize, cols: usize) -> impl Strategy<Value = ZqMatrix> {
    prop::collection::vec(0..q, rows * cols).prop_map(move |d| ZqMatrix::new(rows, cols, q, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn integer_combinations_stay_in_the_code(
        idx in 0usize..8,
        users in 1usize..5,
        seed in any::<u64>(),
        coeffs in prop::collection::vec(-20i64..20, 4),
    ) {
        let code = &codes()[idx];
        let q = code.modulus();
        let mut r = common::rng(seed);
        let words: Vec<Vec<u64>> = (0..users)
            .map(|_| {
                let b: Vec<u64> = (0..code.k()).map(|_| rand::Rng::random_range(&mut r, 0..q)).collect();
                code.encode(&b).unwrap()
            })
            .collect();
        prop_assert!(code.is_codeword(&combine(&words, &coeffs[..users], q)).unwrap());
    }

    #[test]
    fn encoding_commutes_with_combination(
        idx in 0usize..8,
        seed in any::<u64>(),
        coeffs in prop::collection::vec(-20i64..20, 3),
    ) {
        let code = &codes()[idx];
        let q = code.modulus();
        let mut r = common::rng(seed);
        let msgs: Vec<Vec<u64>> = (0..3)
            .map(|_| (0..code.k()).map(|_| rand::Rng::random_range(&mut r, 0..q)).collect())
            .collect();
        let words: Vec<Vec<u64>> = msgs.iter().map(|b| code.encode(b).unwrap()).collect();
        let lhs = code.encode(&combine(&msgs, &coeffs, q)).unwrap();
        prop_assert_eq!(lhs, combine(&words, &coeffs, q));
    }

    #[test]
    fn gmi_extraction_rows_are_exact(q in prop::sample::select(vec![2u64, 4, 8]), l in 1usize..5, k in 1usize..5, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let a = ZqMatrix::new(l, k, q, (0..l * k).map(|_| rand::Rng::random_range(&mut r, 0..q)).collect()).unwrap();
        let g = gmi(&a);
        let prod = mat_mul_mod(&g.extraction_rows, &a).unwrap();
        for (j, &user) in g.recoverable.iter().enumerate() {
            for c in 0..k {
                prop_assert_eq!(prod.get(j, c), u64::from(c == user));
            }
        }
        // {1}-inverse: A X A = A
        let axa = mat_mul_mod(&mat_mul_mod(&a, &g.one_inverse).unwrap(), &a).unwrap();
        let arows = a.to_rows();
        // every claimed user really is extractable
        for &user in &g.recoverable {
            let e: Vec<u64> = (0..k).map(|c| u64::from(c == user)).collect();
            prop_assert!(row_space_contains(&arows, q, &e));
        }
        if is_unit_invertible(&a).is_some() {
            prop_assert_eq!(axa, a.clone());
        }
    }

    #[test]
    fn gmi_is_complete_over_fields(p in prop::sample::select(vec![2u64, 3, 5]), l in 1usize..4, k in 1usize..4, a in prop::collection::vec(0u64..5, 16)) {
        let data: Vec<u64> = a[..l * k].iter().map(|v| v % p).collect();
        let m = ZqMatrix::new(l, k, p, data).unwrap();
        let g = gmi(&m);
        let rows = m.to_rows();
        let expected: Vec<usize> = (0..k)
            .filter(|&j| row_space_contains(&rows, p, &(0..k).map(|c| u64::from(c == j)).collect::<Vec<_>>()))
            .collect();
        prop_assert_eq!(g.recoverable, expected);
    }

    #[test]
    fn unit_invertible_square_matrices_recover_everyone(q in prop::sample::select(vec![2u64, 4]), m in (1usize..6).prop_flat_map(|k| (Just(k), any::<u64>()))) {
        let (k, seed) = m;
        let mut r = common::rng(seed);
        let a = ZqMatrix::new(k, k, q, (0..k * k).map(|_| rand::Rng::random_range(&mut r, 0..q)).collect()).unwrap();
        let det = integer_determinant(&a.to_rows().iter().map(|r| r.iter().map(|&v| v as i64).collect()).collect::<Vec<_>>());
        let invertible = det.rem_euclid(2) == 1;
        prop_assert_eq!(is_unit_invertible(&a).is_some(), invertible);
        if invertible {
            prop_assert_eq!(gmi(&a).recoverable, (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn inverse_round_trip(p in prop::sample::select(vec![2u64, 3, 5, 7]), a in zq_rows(7, 3, 3)) {
        let m = ZqMatrix::new(3, 3, p, a.data().iter().map(|v| v % p).collect()).unwrap();
        let oracle = prime_inverse(&m.to_rows(), p);
        match is_unit_invertible(&m) {
            Some(inv) => {
                prop_assert_eq!(mat_mul_mod(&inv, &m).unwrap(), ZqMatrix::identity(3, p));
                prop_assert_eq!(Some(inv.to_rows()), oracle);
            }
            None => {
                prop_assert!(oracle.is_none());
                prop_assert!(prime_rank(&m.to_rows(), p) < 3);
            }
        }
    }
}

#[test]
fn pam_constellations_have_unit_energy() {
    for q in [2u64, 4, 8, 16, 3, 5] {
        let m = PamMapper::new(q);
        let pts = m.constellation();
        let mean: f64 = pts.iter().sum::<f64>() / q as f64;
        let energy: f64 = pts.iter().map(|x| x * x).sum::<f64>() / q as f64;
        assert!(mean.abs() < 1e-12, "q={q}");
        assert!((energy - 1.0).abs() < 1e-12, "q={q}");
        for c in 0..q {
            assert_eq!(m.unmap_symbol(m.map_symbol(c)), c);
            assert!((m.map_symbol(c) - lcma_oracles::pam(c, q)).abs() < 1e-12);
        }
    }
}
