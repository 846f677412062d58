//! The named computations. Each returns a [`Report`] whose checks are the
//! exact identities that should hold for the job's inputs.

use fedosov_core::fedosov::{lowest_degree, moyal_product, FedosovContext};
use fedosov_core::formal::{FormalFunction, EXACT};
use fedosov_core::geometry::{omega_e, poisson_bracket, S3Field};
use fedosov_core::moment::{
    alpha, bianchi_residual, classical_moment_pairing, curvature, curvature_leading_term, curvature_operator_by_commutator,
    jet_family, leibniz_residual, lifted_covariant_derivative, moment_residual, mu_tilde, mu_tilde_variation, omega_tilde, trace,
    trace_density, TraceCutoffs, TraceDensity,
};
use fedosov_core::rational::{Gauss, Rational};
use fedosov_core::scalar_ring::{Param, ParamCoeff, ScalarFn};
use fedosov_core::transport::{
    action_functional, exp_apply, exp_extract, heisenberg_flow, holonomy_generator, ordered_flow, transport_along, unipotent_inverse,
    ConnectionDisk, ConnectionPath, FlowSign,
};
use fedosov_core::weyl::WeylElement;
use serde_json::json;

use crate::config::Job;
use crate::error::CliError;
use crate::report::{fmt_fn, fmt_formal, fmt_order, fmt_scalar, residual_weyl, Report};

pub const COMMANDS: [&str; 11] = [
    "solve-r",
    "star",
    "curvature",
    "trace-density",
    "omega-tilde",
    "moment-residual",
    "bianchi",
    "transport",
    "holonomy",
    "heisenberg",
    "action",
];

const ORDER_TOO_LOW: &str = "order too low";

pub fn run_command(name: &str, job: &Job) -> Result<Report, CliError> {
    match name {
        "solve-r" => solve_r(job),
        "star" => star(job),
        "curvature" => curvature_cmd(job),
        "trace-density" => trace_density_cmd(job),
        "omega-tilde" => omega_tilde_cmd(job),
        "moment-residual" => moment_residual_cmd(job),
        "bianchi" => bianchi(job),
        "transport" => transport(job),
        "holonomy" => holonomy(job),
        "heisenberg" => heisenberg(job),
        "action" => action(job),
        other => Err(CliError::Config(format!("unknown command `{other}`; expected one of {}, suite", COMMANDS.join(", ")))),
    }
}

fn formal(f: &ScalarFn) -> FormalFunction {
    FormalFunction::from_fn(f.clone())
}

fn context(job: &Job) -> Result<FedosovContext, CliError> {
    Ok(FedosovContext::solve(job.connection.clone(), job.order)?)
}

/// The configured cutoffs, or ones wide enough for the family `∇ + Σ p X`
/// over the given directions.
fn cutoffs(job: &Job, dirs: &[&S3Field]) -> TraceCutoffs {
    job.cutoffs.clone().unwrap_or_else(|| TraceCutoffs::covering(&job.connection, dirs, job.trace_order))
}

fn density(job: &Job, ctx: &FedosovContext, dirs: &[&S3Field]) -> Result<TraceDensity, CliError> {
    Ok(trace_density(ctx, job.trace_order, &cutoffs(job, dirs))?)
}

fn require_zero_mean(h: &ScalarFn) -> Result<(), CliError> {
    if h.mean().is_zero() {
        Ok(())
    } else {
        Err(CliError::Config(format!("H must have zero mean, found mean {}", h.mean())))
    }
}

fn solve_r(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let mut rep = Report::default();
    let r = ctx.r();
    rep.value("r_terms", json!(r.len()));
    rep.value("r_lowest_degree", json!(lowest_degree(r)));
    rep.value("r_leading", residual_weyl(&r.degree_part(3)));
    let res = ctx.r_residual();
    rep.value("equation_valid_through_degree", fmt_order(res.order()));
    rep.zero_weyl("fedosov_equation", &res);
    rep.zero_weyl("delta_inverse_of_r", &r.delta_inv());
    if job.is_flat() {
        rep.check("flat_r_is_zero", r.is_zero());
    } else {
        rep.check("lowest_degree_is_3", lowest_degree(r) == Some(3));
        rep.check("leading_term_is_delta_inverse_of_curvature", r.degree_part(3) == ctx.r_bar().delta_inv());
    }
    Ok(rep)
}

fn star(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let mut rep = Report::default();
    let (f, g, h) = (formal(&job.f), formal(&job.g), formal(&job.h));
    let top = ctx.nu_order();
    let fg = ctx.star(&f, &g);
    let gf = ctx.star(&g, &f);
    rep.value("star_fg", fmt_formal(&fg));
    rep.value("star_valid_through_nu", json!(top));

    // quantization: σ∘Q = id, D∘Q = 0
    let q = ctx.quantize(&f);
    rep.check("symbol_of_quantization", q.symbol() == f.truncate(top));
    rep.zero_weyl("quantization_is_flat", &ctx.d_op(&q));

    let one = formal(&ScalarFn::one(job.dim()));
    rep.check("unit_right", ctx.star(&f, &one) == f.truncate(top));
    rep.check("unit_left", ctx.star(&one, &f) == f.truncate(top));
    rep.check("c0_is_pointwise_product", fg.coeff(0) == job.f.mul(&job.g));
    let bracket = poisson_bracket(&job.sym, &job.f, &job.g);
    rep.value("poisson_fg", json!(fmt_fn(&bracket)));
    if top >= 1 {
        rep.check("c1_antisymmetric_is_poisson", fg.coeff(1).sub(&gf.coeff(1)) == bracket);
    } else {
        rep.skip("c1_antisymmetric_is_poisson", ORDER_TOO_LOW);
    }
    let assoc_top = top - 1;
    if assoc_top >= 0 {
        let left = ctx.star(&fg, &h);
        let right = ctx.star(&f, &ctx.star(&g, &h));
        rep.value("associativity_checked_through_nu", json!(assoc_top));
        rep.zero_formal("associativity", &left.truncate(assoc_top).sub(&right.truncate(assoc_top)));
    } else {
        rep.skip("associativity", ORDER_TOO_LOW);
    }
    if job.is_flat() {
        rep.check("moyal_agreement", fg == moyal_product(job.sym, &f, &g, top));
    } else {
        rep.skip("moyal_agreement", "connection is not flat");
    }
    Ok(rep)
}

fn curvature_cmd(job: &Job) -> Result<Report, CliError> {
    let conn = &job.connection;
    let order = job.order;
    let ctx = context(job)?;
    let mut rep = Report::default();

    // the connection 1-form along A
    let af = alpha(conn, &job.a, order)?;
    rep.check("alpha_symbol_is_zero", af.alpha.symbol().is_zero());
    let inverts = ctx.d_op(&af.alpha).sub(&af.source);
    rep.zero_weyl("alpha_inverts_its_source", &inverts.truncate(af.source.order() - 1));
    let lowest = af.alpha.degree_part(3);
    rep.check("alpha_lowest_term_is_cubic", lowest == job.a.cubic().scale_rational(&Rational::new(-1, 6)));
    rep.check("alpha_lowest_term_is_delta_inverse", lowest == job.a.quadratic_form().delta_inv().neg());

    // covariant derivative: lift and Leibniz rule
    let fam = jet_family(conn, &[(Param::T, &job.a)], order)?;
    let (f, g) = (formal(&job.f), formal(&job.g));
    let (direct, lifted) = lifted_covariant_derivative(&fam, &af.alpha, &f);
    let v = direct.order().min(lifted.order()) - 1;
    rep.zero_weyl("covariant_derivative_lift", &direct.truncate(v).sub(&lifted.truncate(v)));
    let leib = leibniz_residual(&fam, &af.alpha, &f, &g);
    rep.zero_formal("leibniz", &leib.truncate(leib.order() - 1));

    let rab = curvature(conn, &job.a, &job.b, order)?;
    rep.value("curvature_symbol", fmt_formal(&rab.symbol));
    rep.value("curvature_symbol_valid_through_nu", fmt_order(rab.symbol.order()));
    rep.zero_weyl("curvature_is_flat", &ctx.d_op(&rab.section));
    let expected = curvature_leading_term(&job.a, &job.b);
    rep.value("curvature_leading_expected", json!(fmt_fn(&expected)));
    if rab.symbol.order() >= 2 {
        let low = rab.symbol.coeff(0).is_zero() && rab.symbol.coeff(1).is_zero();
        rep.check("curvature_leading_term", low && rab.symbol.coeff(2) == expected);
    } else {
        rep.skip("curvature_leading_term", ORDER_TOO_LOW);
    }
    let by_commutator = curvature_operator_by_commutator(conn, &job.a, &job.b, &f, order)?;
    let by_bracket = rab.section.bracket_symbol(&ctx.quantize(&f)).shift(-1);
    let v = by_commutator.order().min(by_bracket.order());
    if v >= 0 {
        rep.zero_formal("curvature_two_routes", &by_commutator.truncate(v).sub(&by_bracket.truncate(v)));
    } else {
        rep.skip("curvature_two_routes", ORDER_TOO_LOW);
    }
    Ok(rep)
}

fn rho_report(rep: &mut Report, rho: &TraceDensity) {
    rep.value("rho", fmt_formal(rho.rho()));
    rep.value("rho_order", json!(rho.order()));
    rep.value("cutoffs", json!({ "freq": rho.cutoffs().freq, "test": rho.cutoffs().test }));
    let orders: Vec<_> = rho
        .reports()
        .iter()
        .map(|r| json!({ "order": r.order, "unknowns": r.unknowns, "equations": r.equations, "rank": r.rank, "consistent": r.consistent }))
        .collect();
    rep.value("solve_reports", json!(orders));
}

fn trace_density_cmd(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let rho = density(job, &ctx, &[])?;
    let mut rep = Report::default();
    rho_report(&mut rep, &rho);
    rep.check("commutator_annihilation", rho.reports().iter().all(|r| r.consistent));
    let (f, g) = (formal(&job.f), formal(&job.g));
    let comm = ctx.star(&f, &g).sub(&ctx.star(&g, &f));
    rep.zero_scalar("trace_of_commutator", &trace(&rho, &comm)?);
    let r = rho.rho();
    rep.check("leading_term_is_one", r.coeff(0) == ScalarFn::one(job.dim()));
    if job.is_flat() {
        rep.check("flat_density_is_one", r.coeffs().len() == 1);
    }
    if rho.order() >= 1 {
        rep.check("first_order_vanishes", r.coeff(1).is_zero());
    } else {
        rep.skip("first_order_vanishes", ORDER_TOO_LOW);
    }
    let mu = job.connection.cahen_gutt_moment();
    rep.value("moment", json!(fmt_fn(&mu)));
    if rho.order() >= 2 {
        rep.check("second_order_is_minus_moment_over_24", r.coeff(2) == mu.scale(&Gauss::ratio(-1, 24)));
    } else {
        rep.skip("second_order_is_minus_moment_over_24", ORDER_TOO_LOW);
    }
    Ok(rep)
}

fn omega_tilde_cmd(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let rho = density(job, &ctx, &[])?;
    let curv = curvature(&job.connection, &job.a, &job.b, job.order)?;
    let om = omega_tilde(&rho, &curv)?;
    let classical = omega_e(&job.a, &job.b);
    let mut rep = Report::default();
    rep.value("omega_tilde", fmt_scalar(&om));
    rep.value("omega_tilde_valid_through_nu", fmt_order(om.absolute_order()));
    rep.value("classical_form", fmt_scalar(&classical));
    let shifted = om.retag(0);
    rep.check("no_negative_powers", shifted.coeffs().keys().all(|k| *k >= 0));
    if shifted.order() >= 0 {
        rep.check(
            "leading_term_is_classical_form",
            shifted.pi_power == classical.pi_power && shifted.coeff(0) == classical.coeff(0),
        );
    } else {
        rep.skip("leading_term_is_classical_form", ORDER_TOO_LOW);
    }
    let reversed = omega_tilde(&rho, &curvature(&job.connection, &job.b, &job.a, job.order)?)?;
    rep.zero_scalar("antisymmetry", &om.add(&reversed));
    Ok(rep)
}

fn moment_residual_cmd(job: &Job) -> Result<Report, CliError> {
    require_zero_mean(&job.h)?;
    let ctx = context(job)?;
    let rho = density(job, &ctx, &[&job.a])?;
    let m = moment_residual(&ctx, &rho, &job.a, &job.h)?;
    let mut rep = Report::default();
    rep.value("lhs", fmt_scalar(&m.lhs));
    rep.value("rhs", fmt_scalar(&m.rhs));
    rep.value("lhs_valid_through_nu", fmt_order(m.lhs.absolute_order()));
    rep.value("rhs_valid_through_nu", fmt_order(m.rhs.absolute_order()));
    let mu = mu_tilde(&rho, &job.h)?;
    let classical = classical_moment_pairing(&job.connection, &job.h);
    rep.value("mu_tilde", fmt_scalar(&mu));
    rep.value("classical_moment_pairing", fmt_scalar(&classical));
    rep.value("pointwise_valid_through_nu", fmt_order(m.pointwise.order()));
    rep.zero_formal("pointwise", &m.pointwise);
    rep.zero_scalar("traced", &m.traced);
    rep.zero_scalar("lhs_minus_rhs", &m.difference());
    rep.zero_weyl("hamiltonian_lift", &m.qh_residual.truncate(m.qh_residual.order()));
    let direct = mu_tilde_variation(&job.connection, &job.a, &job.h, job.order, job.trace_order, rho.cutoffs())?;
    rep.zero_scalar("direct_variation", &direct.sub(&m.lhs));
    // global constant between the ν^0 term of μ̃ and ∫Hμ
    rep.value("moment_constant", json!("1"));
    if mu.absolute_order() >= 0 {
        rep.check("mu_tilde_leading_term", mu.retag(0).coeff(0) == classical.retag(0).coeff(0));
    } else {
        rep.skip("mu_tilde_leading_term", ORDER_TOO_LOW);
    }
    Ok(rep)
}

fn bianchi(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let rho = density(job, &ctx, &[&job.a, &job.b, &job.c])?;
    let b = bianchi_residual(&ctx, &rho, [&job.a, &job.b, &job.c], Some((job.trace_order, rho.cutoffs())))?;
    let mut rep = Report::default();
    rep.value("pointwise_valid_through_nu", fmt_order(b.pointwise.order()));
    rep.zero_formal("pointwise", &b.pointwise);
    rep.zero_scalar("traced", &b.traced);
    match &b.d_omega {
        Some(d) => rep.zero_scalar("d_omega_tilde", d),
        None => rep.skip("d_omega_tilde", "not requested"),
    }
    Ok(rep)
}

fn transport(job: &Job) -> Result<Report, CliError> {
    let path = ConnectionPath::linear(job.connection.clone(), job.a.clone());
    if path.degree() > job.t_cap as usize {
        return Err(CliError::Cap(format!("path has t-degree {} above t_cap {}", path.degree(), job.t_cap)));
    }
    let te = transport_along(&path, job.order)?;
    let mut rep = Report::default();
    let sym = job.sym;
    let one = WeylElement::one(sym);
    let vo = te.v.order();
    rep.value("v_valid_through_degree", fmt_order(vo));
    rep.value("v_terms", json!(te.v.len()));
    rep.check("starts_at_identity", te.v.param_eval(Param::T, &Rational::zero()).truncate(vo) == one.truncate(vo));
    rep.zero_weyl("ode", &te.ode_residual());
    let prod = te.v.circ(&te.v_inv);
    rep.zero_weyl("inverse", &prod.sub(&one).truncate(prod.order()));
    let (f, g) = (formal(&job.f), formal(&job.g));
    let moved = te.transport(&f);
    rep.zero_weyl("flat_to_flat", &te.family.d_op(&moved));
    let lhs = te.family.star(&moved.symbol(), &te.transport_symbol(&g));
    let rhs = te.transport_symbol(&te.base().star(&f, &g));
    let v = lhs.order().min(rhs.order());
    rep.value("star_isomorphism_valid_through_nu", fmt_order(v));
    rep.zero_formal("star_isomorphism", &lhs.truncate(v).sub(&rhs.truncate(v)));
    Ok(rep)
}

fn holonomy(job: &Job) -> Result<Report, CliError> {
    let order = job.disk_order;
    let disk = ConnectionDisk::spanned(job.connection.clone(), &job.a, &job.b);
    let hol = holonomy_generator(&disk, order)?;
    let mut rep = Report::default();
    let sym_g = hol.symbol();
    rep.value("disk_order", json!(order));
    rep.value("generator_symbol", fmt_formal(&sym_g));
    rep.zero_weyl("holonomy_equals_derivative", &hol.identity_residual());
    rep.zero_weyl("integrand_flatness", &hol.integrand_flatness);
    rep.zero_weyl("generator_flatness", &hol.generator_flatness);
    rep.check("generator_starts_at_nu2", sym_g.coeffs().keys().all(|k| *k >= 2));

    let base = FedosovContext::solve(disk.base().clone(), order)?;
    let f = formal(&job.f);
    let w1 = hol.w_loop.param_eval(Param::S, &Rational::one());
    let around = w1.circ(&base.quantize(&f)).circ(&unipotent_inverse(&w1)).symbol();
    let top = base.nu_order();
    let flowed = ordered_flow(&base, &sym_g, &f, top);
    let gt = exp_extract(&base, &sym_g, top)?;
    rep.value("loop_generator", fmt_formal(&gt));
    let expd = exp_apply(&base, &gt, &f, top);
    let v = around.order().min(flowed.order()).min(expd.order());
    rep.value("loop_valid_through_nu", json!(v));
    rep.zero_formal("loop_is_ordered_flow", &around.truncate(v).sub(&flowed.truncate(v)));
    rep.zero_formal("loop_is_single_exponential", &around.truncate(v).sub(&expd.truncate(v)));
    Ok(rep)
}

fn s_power(k: u8) -> ParamCoeff {
    ParamCoeff::monomial(Gauss::one(), 0, k)
}

fn heisenberg(job: &Job) -> Result<Report, CliError> {
    let ctx = context(job)?;
    let dim = job.dim();
    let (h, f, g) = (formal(&job.h), formal(&job.f), formal(&job.g));
    let t_order = job.t_cap;
    let sign = job.sign;
    let mut rep = Report::default();
    rep.value("t_order", json!(t_order));
    rep.value("sign", json!(if sign == FlowSign::Plus { "plus" } else { "minus" }));

    let zero = FormalFunction::zero(dim, EXACT);
    let still = heisenberg_flow(&ctx, &zero, &f, t_order, sign)?;
    rep.check("zero_hamiltonian_is_identity", still.param_eval(Param::T, &Rational::zero()) == f && still.param_coeff(Param::T, 1).is_zero());
    let one = formal(&ScalarFn::one(dim));
    let a1 = heisenberg_flow(&ctx, &h, &one, t_order, sign)?;
    rep.check("preserves_one", a1.param_coeff(Param::T, 0) == one.truncate(a1.order()) && (1..=t_order).all(|k| a1.param_coeff(Param::T, k).is_zero()));
    let af = heisenberg_flow(&ctx, &h, &f, t_order, sign)?;
    rep.value("flow_of_f", fmt_formal(&af));
    if t_order >= 1 {
        let pb = poisson_bracket(&job.sym, &job.h, &job.f);
        let lin = af.param_coeff(Param::T, 1).coeff(0);
        rep.check("first_order_is_poisson", lin == if sign == FlowSign::Plus { pb } else { pb.neg() });
    } else {
        rep.skip("first_order_is_poisson", "t_cap is 0");
    }
    let ag = heisenberg_flow(&ctx, &h, &g, t_order, sign)?;
    let afg = heisenberg_flow(&ctx, &h, &ctx.star(&f, &g), t_order, sign)?;
    let prod = ctx.star(&af, &ag);
    let v = prod.order().min(afg.order());
    rep.value("automorphism_valid_through_nu", json!(v));
    rep.zero_formal("automorphism", &prod.truncate(v).sub(&afg.truncate(v)));

    // exponential extraction on G_s = ν²H + s(ν²G + ν³G)
    if job.s_cap < 1 {
        return Err(CliError::Cap("the extraction path is linear in s; s_cap must be at least 1".to_string()));
    }
    let top = ctx.nu_order();
    let constant = FormalFunction::monomial(2, job.h.clone());
    let gt = exp_extract(&ctx, &constant, top)?;
    rep.check("constant_generator_extracts_to_nu_h", gt == FormalFunction::monomial(1, job.h.clone()).truncate(gt.order()));
    let moving = job.g.mul_param(&s_power(1));
    let path = constant.add(&FormalFunction::monomial(2, moving.clone())).add(&FormalFunction::monomial(3, moving));
    let gt = exp_extract(&ctx, &path, top)?;
    rep.value("extracted_generator", fmt_formal(&gt));
    let direct = ordered_flow(&ctx, &path, &f, top);
    let combined = exp_apply(&ctx, &gt, &f, top);
    let v = direct.order().min(combined.order());
    rep.value("extraction_valid_through_nu", json!(v));
    rep.zero_formal("exp_extract_matches_ordered_flow", &direct.truncate(v).sub(&combined.truncate(v)));
    Ok(rep)
}

fn action(job: &Job) -> Result<Report, CliError> {
    require_zero_mean(&job.h)?;
    let order = job.disk_order;
    let top = job.trace_order.min(order / 2 - 1);
    let disk = ConnectionDisk::spanned(job.connection.clone(), &job.a, &job.b);
    let cut = job.cutoffs.clone().unwrap_or_else(|| TraceCutoffs::compact_for(&disk.connection(), top));
    // H_t = t·H
    let h_t = job.h.mul_param(&ParamCoeff::param(Param::T));
    let val = action_functional(&disk, &h_t, order, top, &cut)?;
    let mut rep = Report::default();
    rep.value("disk_order", json!(order));
    rep.value("trace_order", json!(top));
    rep.value("omega_integral", fmt_scalar(&val.omega_integral));
    rep.value("hamiltonian_integral", fmt_scalar(&val.hamiltonian_integral));
    rep.value("definition", fmt_scalar(&val.definition));
    rep.value("holonomy", fmt_scalar(&val.holonomy));
    rep.zero_scalar("definition_minus_holonomy", &val.difference());

    let still = ConnectionDisk::constant(job.connection.clone());
    let cval = action_functional(&still, &h_t, order, top, &cut)?;
    rep.value("constant_disk_value", fmt_scalar(&cval.definition));
    rep.check("constant_disk_has_no_area_term", cval.omega_integral.is_zero());
    rep.check("constant_disk_is_minus_hamiltonian_term", cval.definition == cval.hamiltonian_integral.neg());
    rep.zero_scalar("constant_disk_difference", &cval.difference());
    Ok(rep)
}
