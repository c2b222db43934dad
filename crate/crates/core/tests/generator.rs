use foilspace::discretize::{discretize, Scheme};
use foilspace::geometry::{make_foil, ParamCurve, ParamVector, Point2, N_PARAMS};
use foilspace::ingest::random_params;
use foilspace::quality::check_validity;
use proptest::prelude::*;

#[test]
fn mid_range_foil_is_valid() {
    let foil = make_foil(&ParamVector::splat(0.5).unwrap()).unwrap();
    let pf = discretize(&foil, Scheme::Cosine, 200).unwrap();
    let r = check_validity(&pf);
    assert!(r.is_valid, "{:?}", r.reasons);
}

#[test]
fn arity_is_checked() {
    assert!(ParamVector::from_slice(&[0.5; N_PARAMS + 1]).is_err());
    assert!(ParamVector::from_slice(&[0.5; N_PARAMS - 1]).is_err());
}

#[test]
fn random_designs_are_valid_under_cosine_spacing() {
    let mut failures = Vec::new();
    for (i, p) in random_params(1000, 2024).iter().enumerate() {
        let pf = discretize(&make_foil(p).unwrap(), Scheme::Cosine, 200).unwrap();
        let r = check_validity(&pf);
        if !r.is_valid {
            failures.push((i, r.reasons));
        }
    }
    assert!(failures.is_empty(), "{} invalid: {:?}", failures.len(), &failures[..failures.len().min(5)]);
}

#[test]
fn random_designs_are_valid_under_every_scheme() {
    for scheme in Scheme::ALL {
        for p in random_params(150, 99) {
            let pf = discretize(&make_foil(&p).unwrap(), scheme, 200).unwrap();
            let r = check_validity(&pf);
            assert!(r.is_valid, "{scheme}: {:?} for {:?}", r.reasons, p.values());
        }
    }
}

fn param_vector() -> impl Strategy<Value = ParamVector> {
    prop::array::uniform17(0.0f64..=1.0).prop_map(|v| ParamVector::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_curves_close_at_the_trailing_edge(p in param_vector()) {
        let foil = make_foil(&p).unwrap();
        let (a, b) = foil.domain();
        let gap = foil.eval(a).unwrap().dist(foil.eval(b).unwrap());
        prop_assert!(gap < 1e-9);
        prop_assert_eq!(foil.control_points().len(), 13);
        prop_assert_eq!(foil.knots().len(), 17);
        prop_assert!(foil.knots().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn leading_edge_is_the_leftmost_point(p in param_vector()) {
        let foil = make_foil(&p).unwrap();
        let t = foil.leading_edge_param();
        let [le, d1, _] = foil.derivs(t);
        prop_assert!(le.x.abs() < 1e-15);
        prop_assert!(d1.x.abs() < 1e-12 * d1.norm());
        for k in 0..=400 {
            prop_assert!(foil.eval(k as f64 / 400.0).unwrap().x >= -1e-15);
        }
        let (a, _) = foil.domain();
        prop_assert!(foil.eval(a).unwrap().dist(Point2::new(1.0, 0.0)) < 1e-12);
    }
}
