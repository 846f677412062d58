use std::time::Instant;

use fedosov_core::fedosov::FedosovContext;
use fedosov_core::formal::FormalFunction;
use fedosov_core::geometry::{omega_e, S3Field, SymplecticConnection};
use fedosov_core::moment::*;
use fedosov_core::rational::{Gauss, Rational};
use fedosov_core::sample::{FreqBox, Sampler};
use fedosov_core::scalar_ring::{Param, ScalarFn};
use fedosov_core::weyl::SymplecticData;

fn sym1() -> SymplecticData {
    SymplecticData::standard(1)
}

fn random_connection(seed: u64) -> SymplecticConnection {
    let mut s = Sampler::new(seed);
    SymplecticConnection::new(s.s3(sym1(), &FreqBox::first_axis(2, 1), 1, 1.0))
}

fn direction(seed: u64) -> S3Field {
    let mut s = Sampler::new(1000 + seed);
    s.s3(sym1(), &FreqBox::first_axis(2, 1), 1, 0.7)
}

#[test]
fn alpha_has_zero_symbol_and_inverts_its_source() {
    for seed in 0..3 {
        let conn = random_connection(seed);
        let a = direction(seed);
        let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
        let af = alpha(&conn, &a, 6).unwrap();
        assert!(af.alpha.symbol().is_zero());
        let res = ctx.d_op(&af.alpha).sub(&af.source);
        assert!(res.truncate(af.source.order() - 1).is_zero());
        // lowest term: δ⁻¹ of the lowered cubic 1-form, i.e. -(1/6) A_{ijk} y^i y^j y^k
        let lowest = af.alpha.degree_part(3);
        assert_eq!(lowest, a.cubic().scale_rational(&Rational::new(-1, 6)));
        assert_eq!(lowest, a.quadratic_form().delta_inv().neg());
    }
}

#[test]
fn curvature_leading_symbol_and_flatness() {
    let t0 = Instant::now();
    let conn = random_connection(4);
    let (a, b) = (direction(1), direction(2));
    let rab = curvature(&conn, &a, &b, 6).unwrap();
    let rba = curvature(&conn, &b, &a, 6).unwrap();
    assert_eq!(rab.section, rba.section.neg());
    assert!(rab.symbol.coeff(0).is_zero() && rab.symbol.coeff(1).is_zero());
    assert_eq!(rab.symbol.coeff(2), curvature_leading_term(&a, &b));
    assert!(!rab.symbol.coeff(2).is_zero());
    eprintln!("curvature {:?}", t0.elapsed());
}

#[test]
fn covariant_derivative_lifts_and_is_a_derivation() {
    let conn = random_connection(5);
    let a = direction(5);
    let fam = fedosov_core::moment::jet_family(&conn, &[(Param::T, &a)], 6).unwrap();
    let al = alpha(&conn, &a, 6).unwrap().alpha;
    let mut s = Sampler::new(3);
    let b = FreqBox::uniform(2, 1);
    let f = FormalFunction::from_fn(s.real_fn(&b, 2));
    let g = FormalFunction::from_fn(s.real_fn(&b, 1));
    let (direct, lifted) = lifted_covariant_derivative(&fam, &al, &f);
    let v = direct.order().min(lifted.order()) - 1;
    assert!(direct.truncate(v).sub(&lifted.truncate(v)).is_zero());
    assert!(v >= 4, "lift validity {v}");
    assert!(!direct.is_zero());
    let res = leibniz_residual(&fam, &al, &f, &g);
    assert!(res.order() >= 2, "Leibniz validity {}", res.order());
    assert!(res.truncate(res.order() - 1).is_zero(), "{res:?}");
}

#[test]
fn curvature_operator_is_the_commutator_of_derivatives() {
    let conn = random_connection(6);
    let (a, b) = (direction(3), direction(4));
    let mut s = Sampler::new(8);
    let f = FormalFunction::from_fn(s.real_fn(&FreqBox::uniform(2, 1), 1));
    let lhs = curvature_operator_by_commutator(&conn, &a, &b, &f, 6).unwrap();
    let r = curvature(&conn, &a, &b, 6).unwrap().section;
    let ctx = FedosovContext::solve(conn, 6).unwrap();
    let rhs = r.bracket_symbol(&ctx.quantize(&f)).shift(-1);
    let v = lhs.order().min(rhs.order());
    assert!(v >= 2 && !rhs.truncate(v).is_zero(), "validity {v}");
    assert!(lhs.truncate(v).sub(&rhs.truncate(v)).is_zero());
}

#[test]
fn flat_trace_density_is_one() {
    let ctx = FedosovContext::solve(SymplecticConnection::flat(sym1()), 6).unwrap();
    let cut = TraceCutoffs::default_for(ctx.connection(), 2);
    let rho = trace_density(&ctx, 2, &cut).unwrap();
    assert_eq!(rho.rho().coeff(0), ScalarFn::one(2));
    assert!(rho.rho().coeff(1).is_zero() && rho.rho().coeff(2).is_zero());
}

#[test]
fn trace_density_second_order_is_the_moment() {
    for seed in 0..3 {
        let t0 = Instant::now();
        let conn = random_connection(seed);
        let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
        let cut = TraceCutoffs::default_for(&conn, 2);
        let rho = trace_density(&ctx, 2, &cut).unwrap();
        eprintln!("trace density {:?} {:?}", t0.elapsed(), rho.reports());
        assert!(rho.rho().coeff(1).is_zero());
        let mu = conn.cahen_gutt_moment();
        assert_eq!(density_ratio(&rho, 2, &mu), Some(Gauss::ratio(-1, 24)));
    }
}

fn zero_mean_h(seed: u64) -> ScalarFn {
    Sampler::new(500 + seed).zero_mean_fn(&FreqBox::first_axis(2, 2), 3)
}

#[test]
fn omega_tilde_starts_with_the_classical_form() {
    let conn = random_connection(7);
    let (a, b) = (direction(5), direction(6));
    let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
    let rho = trace_density(&ctx, 2, &TraceCutoffs::default_for(&conn, 2)).unwrap();
    let om = omega_tilde(&rho, &curvature(&conn, &a, &b, 6).unwrap()).unwrap().retag(0);
    let classical = omega_e(&a, &b);
    assert!(!classical.is_zero());
    assert_eq!(om.pi_power, classical.pi_power);
    assert_eq!(om.coeff(0), classical.coeff(0));
    for k in om.coeffs().keys() {
        assert!(*k >= 0, "negative power {k}");
    }
}

#[test]
fn mu_tilde_starts_with_the_classical_moment() {
    let conn = random_connection(8);
    let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
    let rho = trace_density(&ctx, 2, &TraceCutoffs::default_for(&conn, 2)).unwrap();
    let h = zero_mean_h(1);
    let mu = mu_tilde(&rho, &h).unwrap().retag(0);
    let classical = classical_moment_pairing(&conn, &h);
    assert!(!classical.is_zero());
    assert_eq!(mu.coeff(0), classical.coeff(0));
    assert!(mu_tilde(&rho, &ScalarFn::one(2)).is_err());
}

#[test]
fn formal_moment_map_identity() {
    for seed in 0..2 {
        let t0 = Instant::now();
        let conn = random_connection(10 + seed);
        // A and H must depend on the second coordinate: with all data along
        // the first axis the variation vanishes and the identity reads 0 = 0
        let a = Sampler::new(seed).s3(sym1(), &FreqBox::uniform(2, 1), 1, 0.6);
        let h = Sampler::new(500 + seed).zero_mean_fn(&FreqBox::uniform(2, 1), 3);
        let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
        let cut = TraceCutoffs::covering(&conn, &[&a], 2);
        let rho = trace_density(&ctx, 2, &cut).unwrap();
        let rep = moment_residual(&ctx, &rho, &a, &h).unwrap();
        eprintln!("moment residual {:?}", t0.elapsed());
        let v = rep.pointwise.order();
        assert!(v >= 2, "pointwise validity {v}");
        assert!(rep.pointwise.is_zero(), "{:?}", rep.pointwise);
        assert!(rep.traced.is_zero());
        let q = rep.qh_residual.truncate(rep.qh_residual.order());
        assert!(q.is_zero(), "{q:?}");
        assert!(!rep.lhs.is_zero(), "vacuous: {:?}", rep.lhs);
        eprintln!("lhs {:?} rhs {:?}", rep.lhs, rep.rhs);
        assert!(rep.difference().is_zero(), "{:?} vs {:?}", rep.lhs, rep.rhs);
        let direct = mu_tilde_variation(&conn, &a, &h, 6, 2, &cut).unwrap();
        assert!(direct.sub(&rep.lhs).is_zero(), "{direct:?} vs {:?}", rep.lhs);
    }
}

#[test]
fn bianchi_identity() {
    let t0 = Instant::now();
    let conn = random_connection(12);
    let dirs = [direction(20), direction(21), direction(22)];
    let ctx = FedosovContext::solve(conn.clone(), 6).unwrap();
    let cut = TraceCutoffs::default_for(&conn, 2);
    let rho = trace_density(&ctx, 2, &cut).unwrap();
    let rep = bianchi_residual(&ctx, &rho, [&dirs[0], &dirs[1], &dirs[2]], Some((2, &cut))).unwrap();
    eprintln!("bianchi {:?}", t0.elapsed());
    assert!(rep.pointwise.order() >= 2);
    assert!(rep.pointwise.is_zero(), "{:?}", rep.pointwise);
    assert!(rep.traced.is_zero());
    let d = rep.d_omega.unwrap();
    assert!(d.is_zero(), "{d:?}");
}
