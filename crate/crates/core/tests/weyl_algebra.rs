//! Fibrewise product and Koszul operators, checked against brute-force
//! oracles on random elements.

use std::collections::BTreeMap;

use fedosov_core::formal::EXACT;
use fedosov_core::rational::{Gauss, Rational};
use fedosov_core::scalar_ring::{freq_from_slice, ParamCoeff, ScalarFn};
use fedosov_core::weyl::{SymplecticData, WeylElement, WeylKey};
use proptest::prelude::*;

fn sym() -> SymplecticData {
    SymplecticData::standard(1)
}

fn coeff_fn() -> impl Strategy<Value = ScalarFn> {
    proptest::collection::vec(((-1i64..=1, -1i64..=1), -3i64..=3, -3i64..=3), 1..3).prop_map(|v| {
        ScalarFn::from_terms(
            2,
            v.into_iter().map(|((a, b), re, im)| {
                (freq_from_slice(&[a, b]), ParamCoeff::constant(Gauss::new(Rational::from_int(re), Rational::from_int(im))))
            }),
        )
    })
}

/// Random element with `y`-degree <= 3, `ν`-power <= 1 and any form degree.
fn element(max_form: u32) -> impl Strategy<Value = WeylElement> {
    proptest::collection::vec(((0u8..=3, 0u8..=3), 0i16..=1, 0u8..4, coeff_fn()), 0..4).prop_map(move |v| {
        let mut e = WeylElement::zero(sym(), EXACT);
        for ((a, b), nu, dx, f) in v {
            if (a + b) > 3 || dx.count_ones() > max_form {
                continue;
            }
            e.add_term(WeylKey { nu, y: [a, b, 0, 0, 0, 0], dx }, f);
        }
        e
    })
}

/// Dense-loop oracle for the fibre product of two `x`-independent 0-forms:
/// applies `Σ_m (ν/2)^m/m! Λ^{i1 j1}..Λ^{im jm} ∂_{y^{i1..im}} a ∂_{y^{j1..jm}} b`
/// by enumerating every index sequence.
fn brute_moyal(a: &BTreeMap<(i16, [u8; 2]), Rational>, b: &BTreeMap<(i16, [u8; 2]), Rational>) -> BTreeMap<(i16, [u8; 2]), Rational> {
    let s = sym();
    fn deriv(p: &BTreeMap<(i16, [u8; 2]), Rational>, i: usize) -> BTreeMap<(i16, [u8; 2]), Rational> {
        let mut out = BTreeMap::new();
        for ((nu, y), c) in p {
            if y[i] > 0 {
                let mut y2 = *y;
                y2[i] -= 1;
                out.insert((*nu, y2), c * &Rational::from_int(y[i] as i64));
            }
        }
        out
    }
    let mut result: BTreeMap<(i16, [u8; 2]), Rational> = BTreeMap::new();
    let mut factorial = 1i64;
    for m in 0..=6usize {
        if m > 0 {
            factorial *= m as i64;
        }
        let total = 4usize.pow(m as u32);
        for code in 0..total {
            let mut pa = a.clone();
            let mut pb = b.clone();
            let mut weight = 1i64;
            let mut c = code;
            for _ in 0..m {
                let (i, j) = (c % 2, (c / 2) % 2);
                c /= 4;
                weight *= s.lambda(i, j);
                pa = deriv(&pa, i);
                pb = deriv(&pb, j);
            }
            if weight == 0 {
                continue;
            }
            let w = Rational::new(weight, factorial * 2i64.pow(m as u32));
            for ((na, ya), ca) in &pa {
                for ((nb, yb), cb) in &pb {
                    let key = (na + nb + m as i16, [ya[0] + yb[0], ya[1] + yb[1]]);
                    let e = result.entry(key).or_insert_with(Rational::zero);
                    *e += &(&(ca * cb) * &w);
                }
            }
        }
    }
    result.retain(|_, c| !c.is_zero());
    result
}

fn rational_poly() -> impl Strategy<Value = BTreeMap<(i16, [u8; 2]), Rational>> {
    proptest::collection::vec(((0u8..=3, 0u8..=3), 0i16..=1, -4i64..=4), 0..5).prop_map(|v| {
        let mut m = BTreeMap::new();
        for ((a, b), nu, c) in v {
            if a + b <= 3 && c != 0 {
                m.insert((nu, [a, b]), Rational::from_int(c));
            }
        }
        m
    })
}

fn to_element(p: &BTreeMap<(i16, [u8; 2]), Rational>) -> WeylElement {
    let mut e = WeylElement::zero(sym(), EXACT);
    for ((nu, y), c) in p {
        e.add_term(WeylKey::new(*nu, y, &[]), ScalarFn::rational(2, c.clone()));
    }
    e
}

#[test]
fn generators_satisfy_the_canonical_relation() {
    let s = sym();
    for i in 0..2 {
        for j in 0..2 {
            let prod = WeylElement::y(s, i).circ(&WeylElement::y(s, j));
            let mut expected = WeylElement::y(s, i).circ(&WeylElement::zero(s, EXACT));
            let mut y = [0u8; 2];
            y[i] += 1;
            y[j] += 1;
            expected.add_term(WeylKey::new(0, &y, &[]), ScalarFn::one(2));
            expected.add_term(WeylKey::new(1, &[], &[]), ScalarFn::rational(2, Rational::new(s.lambda(i, j), 2)));
            assert_eq!(prod, expected, "y^{i} o y^{j}");
        }
    }
}

#[test]
fn delta_of_a_cubic_matches_hand_computation() {
    // δ(y^1 y^1 y^2) = 2 y^1 y^2 dx^1 + y^1 y^1 dx^2 ; δ^{-1} of that returns it
    let s = sym();
    let a = WeylElement::term(s, WeylKey::new(0, &[2, 1], &[]), ScalarFn::one(2));
    let d = a.delta();
    let mut expected = WeylElement::zero(s, EXACT);
    expected.add_term(WeylKey::new(0, &[1, 1], &[0]), ScalarFn::rational(2, Rational::from_int(2)));
    expected.add_term(WeylKey::new(0, &[2, 0], &[1]), ScalarFn::one(2));
    assert_eq!(d, expected);
    assert_eq!(d.delta_inv(), a);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_matches_dense_oracle(a in rational_poly(), b in rational_poly()) {
        let fast = to_element(&a).circ(&to_element(&b));
        prop_assert_eq!(fast, to_element(&brute_moyal(&a, &b)));
    }

    #[test]
    fn product_is_associative(a in element(2), b in element(2), c in element(2)) {
        prop_assert_eq!(a.circ(&b).circ(&c), a.circ(&b.circ(&c)));
    }

    #[test]
    fn bracket_is_graded_antisymmetric_and_matches_products(a in element(2), b in element(2)) {
        let s = sym();
        let mut expected = WeylElement::zero(s, EXACT);
        for (ka, fa) in a.terms() {
            for (kb, fb) in b.terms() {
                let ta = WeylElement::term(s, *ka, fa.clone());
                let tb = WeylElement::term(s, *kb, fb.clone());
                let sign = if (ka.form_degree() * kb.form_degree()) % 2 == 0 { 1 } else { -1 };
                expected = expected.add(&ta.circ(&tb)).sub(&tb.circ(&ta).scale_rational(&Rational::from_int(sign)));
            }
        }
        prop_assert_eq!(a.bracket(&b), expected);
    }

    #[test]
    fn delta_two_routes_agree(a in element(1)) {
        // δa = -(1/ν)[ω_{ij} y^i dx^j, a]
        let s = sym();
        let mut theta = WeylElement::zero(s, EXACT);
        for i in 0..2 {
            for j in 0..2 {
                let w = s.omega(i, j);
                if w != 0 {
                    let mut y = [0u8; 2];
                    y[i] = 1;
                    theta.add_term(WeylKey::new(0, &y, &[j]), ScalarFn::rational(2, Rational::from_int(w)));
                }
            }
        }
        prop_assert_eq!(a.delta(), theta.bracket_over_nu(&a).neg());
    }

    #[test]
    fn koszul_homotopy_identity(a in element(2)) {
        let lhs = a.delta().delta_inv().add(&a.delta_inv().delta()).add(&a.project_00());
        prop_assert_eq!(lhs, a.clone());
        prop_assert!(a.delta().delta().is_zero());
        prop_assert!(a.delta_inv().delta_inv().is_zero());
    }

    #[test]
    fn bracket_with_generator_is_a_derivative(a in element(0), i in 0usize..2) {
        // [y^i, a] = ν Λ^{ik} ∂a/∂y^k
        let s = sym();
        let lhs = WeylElement::y(s, i).bracket(&a);
        let mut rhs = WeylElement::zero(s, EXACT);
        for (k, f) in a.terms() {
            for j in 0..2 {
                let l = s.lambda(i, j);
                if l == 0 || k.y[j] == 0 {
                    continue;
                }
                let mut key = *k;
                key.y[j] -= 1;
                key.nu += 1;
                rhs.add_term(key, f.scale_rational(&Rational::from_int(l * k.y[j] as i64)));
            }
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn order_bookkeeping_is_sound(a in element(0), b in element(0), cut in 1i32..6) {
        // truncating the inputs never changes the part of the product that the
        // bookkeeping claims to know
        let exact = a.circ(&b);
        let approx = a.truncate(cut).circ(&b.truncate(cut));
        prop_assert_eq!(exact.truncate(approx.order()), approx);
    }
}
