mod support;

use lfvqe::encoding::{encode_compact, encode_direct, ModeOperator};
use lfvqe::pauli::reconstruct;
use lfvqe::{pion_hamiltonian, HermitianMatrix, Unit};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use support::{random_hermitian, rng};

fn real_symmetric(seed: u64, dim: usize) -> ModeOperator {
    let mut r = rng(seed);
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for i in 0..dim {
        for j in i..dim {
            let v = Complex64::new(r.random_range(-5.0..5.0), 0.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    ModeOperator::new(HermitianMatrix::new(m, Unit::Dimensionless).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn direct_spectrum_contains_mode_spectrum(seed in any::<u64>()) {
        let op = ModeOperator::new(random_hermitian(&mut rng(seed), 4, 3.0));
        let full = reconstruct(&encode_direct(&op)).eigenvalues();
        for e in op.matrix().eigenvalues() {
            prop_assert!(full.iter().any(|f| (f - e).abs() < 1e-8), "{} missing", e);
        }
    }

    #[test]
    fn compact_spectrum_is_exact(seed in any::<u64>(), n in prop::sample::select(vec![2usize, 4, 8])) {
        let op = ModeOperator::new(random_hermitian(&mut rng(seed), n, 3.0));
        let a = op.matrix().eigenvalues();
        let b = reconstruct(&encode_compact(&op)).eigenvalues();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn coefficients_finite_and_real(seed in any::<u64>(), n in 2usize..=5) {
        let op = ModeOperator::new(random_hermitian(&mut rng(seed), n, 3.0));
        for s in [encode_direct(&op), encode_compact(&op)] {
            prop_assert!(s.iter().all(|(_, c)| c.is_finite() && c != 0.0));
        }
    }

    #[test]
    fn direct_term_count_bound(seed in any::<u64>(), d in 2usize..=6) {
        // identity term excluded; real operators carry two strings per pair
        let s = encode_direct(&real_symmetric(seed, d));
        let non_identity = s.iter().filter(|(t, _)| !t.is_identity()).count();
        prop_assert!(non_identity <= d + d * (d - 1));
    }
}

#[test]
fn pion_round_trips_through_both_encodings() {
    let h = pion_hamiltonian().matrix;
    let compact = reconstruct(&encode_compact(&h));
    assert!(compact.max_abs_diff(h.matrix()) < 1e-10);
    let direct = reconstruct(&encode_direct(&h)).restrict(&[1, 2, 4, 8]);
    assert!(direct.max_abs_diff(h.matrix()) < 1e-10);
}
