mod support;

use lfvqe::circuit::{prepare, run, synthesize_params, AnsatzParams, Circuit, Gate, StateVector};
use lfvqe::EncodingKind;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use support::{random_angles, rng};

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 0..n - 1).prop_map(|(c, t)| (c, if t >= c { t + 1 } else { t }));
    let a = -7.0f64..7.0;
    prop_oneof![
        q.clone().prop_map(|target| Gate::X { target }),
        (q.clone(), a.clone()).prop_map(|(target, angle)| Gate::Ry { target, angle }),
        (q, a.clone(), a.clone(), a.clone()).prop_map(|(target, theta, phi, lambda)| Gate::U { target, theta, phi, lambda }),
        pair.clone().prop_map(|(control, target)| Gate::Cx { control, target }),
        (pair, a).prop_map(|((control, target), angle)| Gate::Cry { control, target, angle }),
    ]
}

fn circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec(gate(n), 0..=20).prop_map(move |gates| {
            let mut c = Circuit::new(n);
            for g in gates {
                c.push(g).unwrap();
            }
            c
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn circuits_preserve_norm(c in circuit()) {
        let out = run(&c).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circuit_text_round_trip(c in circuit()) {
        prop_assert_eq!(Circuit::from_text(c.n_qubits(), &c.to_text()).unwrap(), c);
    }
}

#[test]
fn direct_ansatz_stays_one_hot() {
    let mut r = rng(60);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = AnsatzParams::new(EncodingKind::Direct, random_angles(&mut r, 3));
        worst = worst.max(prepare(4, &p).unwrap().leakage_outside_one_hot());
    }
    assert!(worst < 1e-12, "{worst:e}");
}

fn random_real_unit(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| Complex64::new(x / norm, 0.0)).collect()
}

#[test]
fn direct_synthesis_is_surjective() {
    let mut r = rng(61);
    for _ in 0..100 {
        let target = StateVector::from_modes(&random_real_unit(&mut r, 4), EncodingKind::Direct).unwrap();
        let p = synthesize_params(&target, EncodingKind::Direct).unwrap();
        let f = prepare(4, &p).unwrap().fidelity(&target);
        assert!(f >= 1.0 - 1e-8, "{f}");
    }
}

#[test]
fn compact_synthesis_is_surjective() {
    let mut r = rng(62);
    for _ in 0..100 {
        let amps: Vec<Complex64> = (0..4).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        let target = StateVector::normalized(amps).unwrap();
        let p = synthesize_params(&target, EncodingKind::Compact).unwrap();
        let f = prepare(2, &p).unwrap().fidelity(&target);
        assert!(f >= 1.0 - 1e-8, "{f}");
    }
}

#[test]
fn synthesis_handles_sparse_targets() {
    for k in 0..4 {
        let mut modes = vec![Complex64::new(0.0, 0.0); 4];
        modes[k] = Complex64::new(-1.0, 0.0);
        for enc in [EncodingKind::Direct, EncodingKind::Compact] {
            let target = StateVector::from_modes(&modes, enc).unwrap();
            let p = synthesize_params(&target, enc).unwrap();
            let n = target.n_qubits();
            assert!(prepare(n, &p).unwrap().fidelity(&target) >= 1.0 - 1e-8);
        }
    }
}
