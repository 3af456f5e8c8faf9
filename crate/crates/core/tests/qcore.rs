use photonbeat::qcore::*;
use proptest::prelude::*;

fn space(label: &str, d: usize) -> Space {
    HilbertSpace::new(&[(label, d)]).unwrap()
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn state(label: &'static str, d: usize) -> impl Strategy<Value = StateVector> {
    complex_vec(d)
        .prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(move |v| StateVector::new_with_tolerance(space(label, d), v, f64::INFINITY).unwrap().normalized())
}

fn operator(label: &'static str, d: usize) -> impl Strategy<Value = Operator> {
    complex_vec(d * d).prop_map(move |v| Operator::new(space(label, d), v).unwrap())
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn basis_ordering_examples() {
    let s = HilbertSpace::new(&[("atom1", 3), ("atom2", 3)]).unwrap();
    assert_eq!(s.dim(), 9);
    assert_eq!(s.index_of(&[1, 2]).unwrap(), 5);
    assert_eq!(s.levels_of(7), vec![2, 1]);
    assert!(s.index_of(&[3, 0]).is_err());
    assert!(HilbertSpace::new(&[("a", 2), ("a", 2)]).is_err());
    assert!(HilbertSpace::new(&[("a", 0)]).is_err());
}

#[test]
fn validation_rejects_bad_inputs() {
    let s = space("q", 2);
    assert!(StateVector::new(s.clone(), vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
    assert!(StateVector::new(s.clone(), vec![C64::new(f64::NAN, 0.0), C64::new(0.0, 0.0)]).is_err());
    let not_hermitian = vec![C64::new(0.5, 0.0), C64::new(0.1, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.0)];
    assert!(DensityMatrix::new(s.clone(), not_hermitian).is_err());
    let negative = vec![C64::new(1.5, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-0.5, 0.0)];
    assert!(DensityMatrix::new(s.clone(), negative).is_err());
    let other = space("r", 2);
    assert!(Operator::identity(s.clone()).apply(&StateVector::basis(other, 0).unwrap()).is_err());
}

#[test]
fn local_operators_act_on_their_factor() {
    let s = HilbertSpace::new(&[("a", 2), ("b", 3)]).unwrap();
    let lower_b = Operator::lowering(s.clone(), "b").unwrap();
    let psi = StateVector::from_levels(s.clone(), &[1, 2]).unwrap();
    let out = lower_b.apply(&psi).unwrap();
    assert!((out.amplitude(&[1, 1]).unwrap() - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
    let t = Operator::local_transition(s.clone(), "a", 0, 1).unwrap();
    let out = t.apply(&psi).unwrap();
    assert!((out.amplitude(&[0, 2]).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(Operator::lowering(s, "c").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(a in state("a", 2), b in state("b", 3), c in state("c", 2)) {
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.space(), right.space());
        prop_assert!(max_diff(left.amplitudes(), right.amplitudes()) < 1e-14);
    }

    #[test]
    fn operator_tensor_acts_factorwise(x in operator("a", 2), y in operator("b", 3), a in state("a", 2), b in state("b", 3)) {
        let lhs = tensor_product(&x, &y).unwrap().apply(&tensor_product(&a, &b).unwrap()).unwrap();
        let rhs = tensor_product(&x.apply(&a).unwrap(), &y.apply(&b).unwrap()).unwrap();
        prop_assert!(max_diff(lhs.amplitudes(), rhs.amplitudes()) < 1e-13);
    }

    #[test]
    fn application_composes(x in operator("a", 3), y in operator("a", 3), psi in state("a", 3)) {
        let seq = x.apply(&y.apply(&psi).unwrap()).unwrap();
        let prod = x.matmul(&y).unwrap().apply(&psi).unwrap();
        prop_assert!(max_diff(seq.amplitudes(), prod.amplitudes()) < 1e-13);
    }

    #[test]
    fn adjoint_matches_inner_product(x in operator("a", 3), u in state("a", 3), v in state("a", 3)) {
        let lhs = u.inner(&x.apply(&v).unwrap()).unwrap();
        let rhs = x.adjoint().apply(&u).unwrap().inner(&v).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn sandwich_preserves_positivity(x in operator("a", 3), psi in state("a", 3)) {
        let rho = psi.projector().sandwich(&x).unwrap();
        prop_assert!(rho.min_eigenvalue() > -1e-12);
        prop_assert!(rho.hermiticity_violation() < 1e-14);
        let expected = x.apply(&psi).unwrap().norm_squared();
        prop_assert!((rho.trace() - expected).abs() < 1e-12);
    }

    #[test]
    fn mixtures_stay_physical(a in state("a", 3), b in state("a", 3), w in 0.0f64..1.0) {
        let rho = a.projector().scaled(w).add(&b.projector().scaled(1.0 - w)).unwrap();
        rho.validate(1e-10).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        let f = rho.expectation_in(&a).unwrap();
        prop_assert!(f >= w - 1e-12 && f <= 1.0 + 1e-12);
        prop_assert!(rho.trace_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in state("a", 4), b in state("a", 4)) {
        let f = a.fidelity(&b).unwrap();
        prop_assert!((f - b.fidelity(&a).unwrap()).abs() < 1e-14);
        prop_assert!((-1e-14..=1.0 + 1e-12).contains(&f));
        prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }
}
