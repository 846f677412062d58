use std::collections::BTreeMap;
use std::time::Instant;

use fedosov_core::fedosov::{lowest_degree, FedosovContext};
use fedosov_core::formal::FormalFunction;
use fedosov_core::geometry::{poisson_bracket, S3Field, SymplecticConnection};
use fedosov_core::moment::{alpha, TraceCutoffs};
use fedosov_core::rational::Rational;
use fedosov_core::sample::{FreqBox, Sampler};
use fedosov_core::scalar_ring::{Param, ParamCoeff, ScalarFn};
use fedosov_core::transport::*;
use fedosov_core::weyl::{SymplecticData, WeylElement};

fn sym1() -> SymplecticData {
    SymplecticData::standard(1)
}

fn random_connection(seed: u64) -> SymplecticConnection {
    let mut s = Sampler::new(seed);
    SymplecticConnection::new(s.s3(sym1(), &FreqBox::first_axis(2, 1), 1, 1.0))
}

fn direction(seed: u64) -> S3Field {
    Sampler::new(1000 + seed).s3(sym1(), &FreqBox::first_axis(2, 1), 1, 1.0)
}

fn at_t(a: &WeylElement, v: i64) -> WeylElement {
    a.param_eval(Param::T, &Rational::from_int(v))
}

#[test]
fn constant_path_transports_trivially() {
    let path = ConnectionPath::new(random_connection(1), vec![]);
    let te = transport_along(&path, 6).unwrap();
    assert!(te.h.is_zero());
    assert_eq!(te.v, WeylElement::one(sym1()).with_order(te.v.order()));
}

#[test]
fn transport_along_a_line() {
    let t0 = Instant::now();
    let conn = random_connection(2);
    let a = direction(2);
    let te = transport_along(&ConnectionPath::linear(conn.clone(), a.clone()), 6).unwrap();
    eprintln!("transport solve {:?}", t0.elapsed());
    // h at t = 0 is -α(A), and starts in total degree 3
    assert_eq!(at_t(&te.h, 0), alpha(&conn, &a, 6).unwrap().alpha.neg());
    assert_eq!(lowest_degree(&te.h), Some(3));
    // v(0) = 1, the ODE holds, and v is inverted exactly
    let one = WeylElement::one(sym1());
    assert_eq!(at_t(&te.v, 0).truncate(te.v.order()), one.truncate(te.v.order()));
    let res = te.ode_residual();
    assert!(res.order() >= 3, "ODE validity {}", res.order());
    assert!(res.is_zero(), "{res:?}");
    let prod = te.v.circ(&te.v_inv);
    assert!(prod.sub(&one).truncate(prod.order()).is_zero());
    assert!(!at_t(&te.v, 1).sub(&one).truncate(te.v.order()).is_zero());
    // flat sections go to flat sections of the moving connection
    let mut s = Sampler::new(4);
    let b = FreqBox::uniform(2, 1);
    let (f, g) = (FormalFunction::from_fn(s.real_fn(&b, 1)), FormalFunction::from_fn(s.real_fn(&b, 1)));
    let moved = te.transport(&f);
    let flat = te.family.d_op(&moved);
    assert!(flat.order() >= 3);
    assert!(flat.is_zero(), "{flat:?}");
    // and the map on symbols intertwines the star products
    let bf = moved.symbol();
    let bg = te.transport_symbol(&g);
    let lhs = te.family.star(&bf, &bg);
    let rhs = te.transport_symbol(&te.base().star(&f, &g));
    let v = lhs.order().min(rhs.order());
    assert!(v >= 1, "star validity {v}");
    assert!(lhs.truncate(v).sub(&rhs.truncate(v)).is_zero());
    eprintln!("transport total {:?}", t0.elapsed());
}

#[test]
fn disk_boundary_conditions() {
    let conn = random_connection(3);
    let a = direction(3);
    let bad = BTreeMap::from([((1, 1), a.clone())]);
    assert_eq!(ConnectionDisk::new(conn.clone(), bad).unwrap_err(), TransportError::Boundary("t = 1"));
    let bad = BTreeMap::from([((1, 0), a.clone()), ((2, 0), a.neg())]);
    assert_eq!(ConnectionDisk::new(conn.clone(), bad).unwrap_err(), TransportError::Boundary("s = 0"));
    let bad = BTreeMap::from([((0, 1), a.clone())]);
    assert!(ConnectionDisk::new(conn.clone(), bad).is_err());
    let disk = ConnectionDisk::spanned(conn, &a, &direction(5));
    assert_eq!(disk.boundary().degree(), 3);
}

#[test]
fn holonomy_of_a_bilinear_disk() {
    let t0 = Instant::now();
    // a disk whose tangent directions are parallel has no curvature
    let degenerate = ConnectionDisk::spanned(random_connection(4), &direction(4), &S3Field::zero(sym1()));
    assert!(holonomy_generator(&degenerate, 6).unwrap().generator.is_zero());
    let disk = ConnectionDisk::spanned(random_connection(4), &direction(4), &direction(14));
    let hol = holonomy_generator(&disk, 6).unwrap();
    eprintln!("holonomy {:?}", t0.elapsed());
    assert!(!hol.generator.is_zero());
    let res = hol.identity_residual();
    assert!(res.order() >= 2, "identity validity {}", res.order());
    assert!(res.is_zero(), "{res:?}");
    assert!(hol.integrand_flatness.is_zero());
    assert!(hol.generator_flatness.is_zero());
    // the generator restricted to y = 0 starts at ν²
    let sym = hol.symbol();
    assert!(sym.coeffs().keys().all(|k| *k >= 2), "{sym:?}");
    // transport around the loop is the ordered flow of G_s, and a single exponential
    let base = FedosovContext::solve(disk.base().clone(), 6).unwrap();
    let f = FormalFunction::from_fn(Sampler::new(40).real_fn(&FreqBox::uniform(2, 1), 2));
    let w1 = hol.w_loop.param_eval(Param::S, &Rational::one());
    let around = w1.circ(&base.quantize(&f)).circ(&unipotent_inverse(&w1)).symbol();
    let top = base.nu_order();
    let flowed = ordered_flow(&base, &sym, &f, top);
    let gt = exp_extract(&base, &sym, top).unwrap();
    let expd = exp_apply(&base, &gt, &f, top);
    let v = around.order().min(flowed.order()).min(expd.order());
    assert!(v >= 2, "loop validity {v}");
    assert!(!around.truncate(v).sub(&f.truncate(v)).is_zero());
    assert!(around.truncate(v).sub(&flowed.truncate(v)).is_zero());
    assert!(around.truncate(v).sub(&expd.truncate(v)).is_zero());
    // a disk that never leaves ∇ has no holonomy
    let flat_disk = ConnectionDisk::constant(random_connection(4));
    assert!(holonomy_generator(&flat_disk, 6).unwrap().generator.is_zero());
}

fn t_linear(f0: &ScalarFn, f1: &ScalarFn) -> FormalFunction {
    FormalFunction::from_fn(f0.add(&f1.mul_param(&ParamCoeff::param(Param::T))))
}

#[test]
fn heisenberg_flow_is_an_automorphism() {
    let ctx = FedosovContext::solve(random_connection(5), 8).unwrap();
    let mut s = Sampler::new(6);
    let b = FreqBox::uniform(2, 1);
    let (h0, h1) = (s.real_fn(&b, 1), s.real_fn(&b, 1));
    let h = t_linear(&h0, &h1);
    let f = FormalFunction::from_fn(s.real_fn(&b, 1));
    let g = FormalFunction::from_fn(s.real_fn(&b, 1));
    // H = 0
    let zero = FormalFunction::zero(2, fedosov_core::formal::EXACT);
    assert_eq!(heisenberg_flow(&ctx, &zero, &f, 3, FlowSign::Plus).unwrap().param_eval(Param::T, &Rational::zero()), f);
    for sign in [FlowSign::Plus, FlowSign::Minus] {
        let af = heisenberg_flow(&ctx, &h, &f, 2, sign).unwrap();
        // first t-order, leading ν-order: the Poisson bracket
        let lin = af.param_coeff(Param::T, 1).coeff(0);
        let pb = poisson_bracket(&sym1(), &h0, &f.coeff(0));
        assert_eq!(lin, if sign == FlowSign::Plus { pb } else { pb.neg() });
        let one = FormalFunction::from_fn(ScalarFn::one(2));
        let a1 = heisenberg_flow(&ctx, &h, &one, 2, sign).unwrap();
        assert_eq!(a1.truncate(a1.order()), one.truncate(a1.order()).with_caps(a1.coeff(0).terms()[0].1.caps()));
        let ag = heisenberg_flow(&ctx, &h, &g, 2, sign).unwrap();
        let afg = heisenberg_flow(&ctx, &h, &ctx.star(&f, &g), 2, sign).unwrap();
        let prod = ctx.star(&af, &ag);
        let v = prod.order().min(afg.order());
        assert!(v >= 1, "automorphism validity {v}");
        let diff = prod.truncate(v).sub(&afg.truncate(v));
        assert!(diff.is_zero(), "{diff:?}");
    }
}

fn s_poly(terms: &[(u8, i32, ScalarFn)]) -> FormalFunction {
    let mut out = FormalFunction::zero(2, fedosov_core::formal::EXACT);
    for (k, nu, f) in terms {
        let c = ParamCoeff::monomial(fedosov_core::rational::Gauss::one(), 0, *k);
        out = out.add(&FormalFunction::monomial(*nu, f.mul_param(&c)));
    }
    out
}

#[test]
fn exponential_extraction_matches_the_ordered_flow() {
    let ctx = FedosovContext::solve(random_connection(7), 10).unwrap();
    let mut s = Sampler::new(8);
    let b = FreqBox::uniform(2, 1);
    let top = 5;
    // zero and constant generators
    let zero = FormalFunction::zero(2, fedosov_core::formal::EXACT);
    assert!(exp_extract(&ctx, &zero, top).unwrap().is_zero());
    let g0 = s.real_fn(&b, 1);
    let constant = s_poly(&[(0, 2, g0.clone())]);
    let gt = exp_extract(&ctx, &constant, top).unwrap();
    assert_eq!(gt, FormalFunction::monomial(1, g0.clone()).truncate(gt.order()));
    // an s-dependent generator, where the ordering matters
    let cos = |k: [i64; 2]| ScalarFn::exp(2, &k).add(&ScalarFn::exp(2, &[-k[0], -k[1]]));
    let (g0, g1) = (cos([1, 0]), cos([0, 1]));
    let path = s_poly(&[(0, 2, g0), (1, 2, g1.clone()), (1, 3, g1)]);
    let gt = exp_extract(&ctx, &path, top).unwrap();
    let f = FormalFunction::from_fn(cos([1, 1]));
    let direct = ordered_flow(&ctx, &path, &f, top);
    let combined = exp_apply(&ctx, &gt, &f, top);
    let v = direct.order().min(combined.order());
    assert!(v >= 4, "validity {v}");
    assert!(direct.truncate(v).sub(&combined.truncate(v)).is_zero());
    // the first-order guess ∫G_s/ν is off at ν^4 for this path
    let naive = exp_apply(&ctx, &path.shift(-1).param_integrate(Param::S).param_eval(Param::S, &Rational::one()), &f, top);
    assert!(!direct.truncate(v).sub(&naive.truncate(v)).is_zero());
    assert!(matches!(exp_extract(&ctx, &s_poly(&[(0, 1, s.real_fn(&b, 1))]), top), Err(TransportError::GeneratorTooLow(1))));
}

#[test]
fn action_functional_two_ways() {
    let t0 = Instant::now();
    let conn = random_connection(9);
    let disk = ConnectionDisk::spanned(conn.clone(), &direction(9), &direction(19));
    let cut = TraceCutoffs::compact_for(&disk.connection(), 2);
    let zero_h = ScalarFn::zero(2);
    let val = action_functional(&disk, &zero_h, 6, 2, &cut).unwrap();
    eprintln!("action {:?}: {:?} / {:?}", t0.elapsed(), val.definition, val.holonomy);
    assert!(!val.omega_integral.is_zero());
    assert_eq!(val.definition, val.omega_integral);
    let d = val.difference();
    assert!(d.is_zero(), "{d:?}");
    // constant disk: only the Hamiltonian term remains
    let h = Sampler::new(3).zero_mean_fn(&FreqBox::first_axis(2, 2), 2).mul_param(&ParamCoeff::param(Param::T));
    let flat = ConnectionDisk::constant(conn);
    let val = action_functional(&flat, &h, 6, 2, &cut).unwrap();
    assert!(val.omega_integral.is_zero());
    assert_eq!(val.definition, val.hamiltonian_integral.neg());
    assert!(val.difference().is_zero());
    assert!(action_functional(&flat, &ScalarFn::one(2), 6, 2, &cut).is_err());
}
