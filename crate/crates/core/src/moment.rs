//! The formal connection on the bundle of star-product algebras over the
//! space of symplectic connections: the connection 1-form `α`, its curvature,
//! the trace density and the formal symplectic form and moment map built from
//! them.
//!
//! Derivatives in the connection direction are never approximated: a family
//! `∇ + tA + sB` is solved over the parameter ring with caps on the `t` and
//! `s` degrees and differentiated exactly.

use std::collections::BTreeMap;

use crate::fedosov::{FedosovContext, FedosovError};
use crate::formal::{FormalFunction, FormalScalar, EXACT};
use crate::geometry::{hamiltonian_vector_field, GeometryError, S3Field, SymplecticConnection};
use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{freq_from_slice, Caps, Freq, Param, ParamCoeff, ScalarFn};
use crate::weyl::{WeylElement, WeylKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MomentError {
    #[error(transparent)]
    Fedosov(#[from] FedosovError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0} is not D-flat (lowest residual degree {1})")]
    NotFlat(&'static str, i32),
    #[error("trace density order {requested} needs star-product order {needed}, but only {available} is solved")]
    OrderTooHigh { requested: i32, needed: i32, available: i32 },
    #[error("trace equations at order {order} are inconsistent at frequency {freq:?}")]
    Inconsistent { order: i32, freq: Vec<i64> },
    #[error("trace density at order {order} is undetermined at frequency {freq:?}; raise the test cutoff")]
    Underdetermined { order: i32, freq: Vec<i64> },
    #[error("function has nonzero mean")]
    NonzeroMean,
    #[error("function starts at nu^{starts}, past the solved trace density order {solved}")]
    BeyondDensity { starts: i32, solved: i32 },
}

/// Caps for a jet in the listed parameters: first order in each, nothing in
/// the others.
fn jet_caps(params: &[Param]) -> Caps {
    Caps::new(params.contains(&Param::T) as u8, params.contains(&Param::S) as u8)
}

/// Fedosov data of `∇ + Σ p·X` over first-order jets in the parameters.
pub fn jet_family(conn: &SymplecticConnection, dirs: &[(Param, &S3Field)], order: i32) -> Result<FedosovContext, MomentError> {
    let caps = jet_caps(&dirs.iter().map(|(p, _)| *p).collect::<Vec<_>>());
    let mut c = conn.clone();
    for (p, x) in dirs {
        c = c.displaced(x, &ParamCoeff::param(*p).with_caps(caps));
    }
    Ok(FedosovContext::solve(c, order)?)
}

/// `α` together with the `D`-flat 1-form it inverts.
#[derive(Clone, Debug)]
pub struct AlphaForm {
    pub alpha: WeylElement,
    /// `d/dp Γ̄ + d/dp r`, which satisfies `Dα = source`.
    pub source: WeylElement,
}

/// `α(∂_p) = D⁻¹(∂_p Γ̄ + ∂_p r)` along a parameterized family, at every
/// parameter value the family carries.
pub fn alpha_along(family: &FedosovContext, p: Param) -> Result<AlphaForm, MomentError> {
    let source = family.gamma_bar().param_diff(p).add(&family.r().param_diff(p));
    let alpha = family.d_inverse(&source).map_err(|e| match e {
        FedosovError::NotFlat(d) => MomentError::NotFlat("derivative of the connection form", d),
        other => other.into(),
    })?;
    Ok(AlphaForm { alpha, source })
}

/// `α_∇(A)`.
pub fn alpha(conn: &SymplecticConnection, a: &S3Field, order: i32) -> Result<AlphaForm, MomentError> {
    let fam = jet_family(conn, &[(Param::T, a)], order)?;
    let af = alpha_along(&fam, Param::T)?;
    let zero = Rational::zero();
    Ok(AlphaForm { alpha: af.alpha.param_eval(Param::T, &zero), source: af.source.param_eval(Param::T, &zero) })
}

/// `β(A)F = (1/ν)[α(A), Q(F)]|_{y=0}`.
pub fn beta(ctx: &FedosovContext, alpha: &WeylElement, f: &FormalFunction) -> FormalFunction {
    alpha.bracket_symbol(&ctx.quantize(f)).shift(-1)
}

/// `𝒟_A F = ∂_t F|₀ + β(A)F|₀` for a section given as a `t`-jet.
pub fn covariant_derivative(ctx: &FedosovContext, alpha: &WeylElement, section: &FormalFunction) -> FormalFunction {
    let zero = Rational::zero();
    let at0 = section.param_eval(Param::T, &zero);
    section.param_diff(Param::T).param_eval(Param::T, &zero).add(&beta(ctx, alpha, &at0))
}

/// Both sides of the lift of `𝒟_A F` to flat sections: `Q(𝒟_A F)` and
/// `∂_t Q^{∇+tA}(F(∇+tA))|₀ + (1/ν)[α(A), Q(F)]`.
pub fn lifted_covariant_derivative(
    family: &FedosovContext,
    alpha: &WeylElement,
    section: &FormalFunction,
) -> (WeylElement, WeylElement) {
    let zero = Rational::zero();
    let base = family.param_eval(Param::T, &zero);
    let direct = base.quantize(&covariant_derivative(&base, alpha, section));
    let q_family = family.quantize(section);
    let at0 = section.param_eval(Param::T, &zero);
    let lifted = q_family.param_diff(Param::T).param_eval(Param::T, &zero).add(&alpha.bracket_over_nu(&base.quantize(&at0)));
    (direct, lifted)
}

/// `𝒟_A(F★G) - (𝒟_A F)★G - F★(𝒟_A G)` for constant sections `F`, `G`.
pub fn leibniz_residual(family: &FedosovContext, alpha: &WeylElement, f: &FormalFunction, g: &FormalFunction) -> FormalFunction {
    let zero = Rational::zero();
    let base = family.param_eval(Param::T, &zero);
    let fg_family = family.star(f, g);
    let d_fg = covariant_derivative(&base, alpha, &fg_family);
    let df = covariant_derivative(&base, alpha, f);
    let dg = covariant_derivative(&base, alpha, g);
    d_fg.sub(&base.star(&df, g)).sub(&base.star(f, &dg))
}

/// `R(∂_p, ∂_q) = ∂_p α(∂_q) - ∂_q α(∂_p) + (1/ν)[α(∂_p), α(∂_q)]` on a
/// family, as a function of the parameters.
pub fn curvature_on_family(family: &FedosovContext, p: Param, q: Param) -> Result<WeylElement, MomentError> {
    let ap = alpha_along(family, p)?.alpha;
    let aq = alpha_along(family, q)?.alpha;
    Ok(curvature_from_alphas(&ap, &aq, p, q))
}

/// The same from already computed `α(∂_p)`, `α(∂_q)`.
pub fn curvature_from_alphas(ap: &WeylElement, aq: &WeylElement, p: Param, q: Param) -> WeylElement {
    aq.param_diff(p).sub(&ap.param_diff(q)).add(&ap.bracket_over_nu(aq))
}

/// `R_∇(A, B)` and its symbol.
#[derive(Clone, Debug)]
pub struct CurvatureValue {
    pub section: WeylElement,
    pub symbol: FormalFunction,
}

/// Curvature of the formal connection at `∇` on constant fields `A`, `B`;
/// fails if the result is not `D`-flat.
pub fn curvature(conn: &SymplecticConnection, a: &S3Field, b: &S3Field, order: i32) -> Result<CurvatureValue, MomentError> {
    let fam = jet_family(conn, &[(Param::T, a), (Param::S, b)], order)?;
    let section = at_origin(&curvature_on_family(&fam, Param::T, Param::S)?);
    let base = fam.at_origin();
    if let Some(d) = crate::fedosov::lowest_degree(&base.d_op(&section)) {
        return Err(MomentError::NotFlat("curvature", d));
    }
    let symbol = section.symbol();
    Ok(CurvatureValue { section, symbol })
}

fn at_origin(a: &WeylElement) -> WeylElement {
    let zero = Rational::zero();
    a.param_eval(Param::T, &zero).param_eval(Param::S, &zero)
}

/// `𝓡(A,B)F = 𝒟_A 𝒟_B F - 𝒟_B 𝒟_A F` for a constant section `F`, computed
/// from the definition of `𝒟` on the family `∇ + tA + sB`.
pub fn curvature_operator_by_commutator(
    conn: &SymplecticConnection,
    a: &S3Field,
    b: &S3Field,
    f: &FormalFunction,
    order: i32,
) -> Result<FormalFunction, MomentError> {
    let fam = jet_family(conn, &[(Param::T, a), (Param::S, b)], order)?;
    let at = alpha_along(&fam, Param::T)?.alpha;
    let as_ = alpha_along(&fam, Param::S)?.alpha;
    let zero = Rational::zero();
    let base = fam.at_origin();
    // G_B(∇ + tA) = β_{∇+tA}(B)F, kept as a function of t
    let g_b = beta(&fam, &as_, f);
    let g_a = beta(&fam, &at, f);
    let at0 = at_origin(&at);
    let as0 = at_origin(&as_);
    let da_db = g_b.param_diff(Param::T).param_eval(Param::S, &zero).param_eval(Param::T, &zero).add(&beta(
        &base,
        &at0,
        &g_b.param_eval(Param::T, &zero).param_eval(Param::S, &zero),
    ));
    let db_da = g_a.param_diff(Param::S).param_eval(Param::T, &zero).param_eval(Param::S, &zero).add(&beta(
        &base,
        &as0,
        &g_a.param_eval(Param::T, &zero).param_eval(Param::S, &zero),
    ));
    Ok(da_db.sub(&db_da))
}

/// Per-coordinate frequency cutoffs for the trace-density solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCutoffs {
    /// Largest frequency allowed in each coefficient of `ρ`.
    pub freq: Vec<i64>,
    /// Exponentials `e^{ia·x}` with `|a_j| <= test[j]` form the test basis.
    pub test: Vec<i64>,
}

impl TraceCutoffs {
    /// `2 × max frequency × top order` per coordinate, with a test basis
    /// at least one wide in every direction.
    pub fn default_for(conn: &SymplecticConnection, top: i32) -> Self {
        let dim = conn.dim();
        let freq: Vec<i64> = (0..dim).map(|j| 2 * conn.max_freq_in(j) * top as i64).collect();
        let test = freq.iter().map(|f| (*f).max(1)).collect();
        TraceCutoffs { freq, test }
    }

    /// [`TraceCutoffs::default_for`] sized for the whole family
    /// `∇ + Σ p_i X_i`, whose density picks up the frequencies of the `X_i`.
    pub fn covering(conn: &SymplecticConnection, dirs: &[&S3Field], top: i32) -> Self {
        let dim = conn.dim();
        let freq: Vec<i64> = (0..dim)
            .map(|j| {
                let m = dirs.iter().map(|x| x.max_freq_in(j)).fold(conn.max_freq_in(j), i64::max);
                2 * m * top as i64
            })
            .collect();
        let test = freq.iter().map(|f| (*f).max(1)).collect();
        TraceCutoffs { freq, test }
    }

    /// Same frequency cutoff with a test basis about half as wide, so fewer
    /// redundant pairs are checked. Width `⌊f/2⌋ + 1` keeps every `q` in
    /// the box reachable as `-(a+b)` with `a`, `b` distinct and
    /// non-parallel (a zero Poisson pairing gives no equation), corners
    /// included: `(4, 4) = (3, 2) + (1, 2)`.
    pub fn compact_for(conn: &SymplecticConnection, top: i32) -> Self {
        let mut c = TraceCutoffs::default_for(conn, top);
        c.test = c.freq.iter().map(|f| f / 2 + 1).collect();
        c
    }
}

/// Rank and consistency of the linear system at one order of `ρ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderReport {
    pub order: i32,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub consistent: bool,
}

/// `ρ = 1 + Σ_{k>=1} ν^k ρ_k` with `∫ρ_k = 0`, exact through `order()`.
#[derive(Clone, Debug)]
pub struct TraceDensity {
    rho: FormalFunction,
    cutoffs: TraceCutoffs,
    reports: Vec<OrderReport>,
}

impl TraceDensity {
    /// Density of the flat Moyal product, `ρ = 1` to every order.
    pub fn one(dim: usize) -> Self {
        TraceDensity {
            rho: FormalFunction::from_fn(ScalarFn::one(dim)),
            cutoffs: TraceCutoffs { freq: vec![0; dim], test: vec![0; dim] },
            reports: Vec::new(),
        }
    }

    pub fn rho(&self) -> &FormalFunction {
        &self.rho
    }

    pub fn order(&self) -> i32 {
        self.rho.order()
    }

    pub fn cutoffs(&self) -> &TraceCutoffs {
        &self.cutoffs
    }

    pub fn reports(&self) -> &[OrderReport] {
        &self.reports
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        TraceDensity { rho: self.rho.param_eval(p, v), ..self.clone() }
    }
}

fn box_freqs(bounds: &[i64]) -> Vec<Freq> {
    let mut out = vec![Vec::new()];
    for b in bounds {
        let mut next = Vec::new();
        for v in &out {
            for k in -*b..=*b {
                let mut w: Vec<i64> = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out = next;
    }
    out.iter().map(|v| freq_from_slice(v)).collect()
}

fn freq_vec(k: &Freq, dim: usize) -> Vec<i64> {
    k[..dim].iter().map(|x| *x as i64).collect()
}

fn in_box(k: &Freq, bounds: &[i64]) -> bool {
    bounds.iter().enumerate().all(|(j, b)| (k[j] as i64).abs() <= *b)
}

fn neg_freq(k: &Freq) -> Freq {
    let mut out = *k;
    for x in out.iter_mut() {
        *x = -*x;
    }
    out
}

fn add_freq(a: &Freq, b: &Freq) -> Freq {
    let mut out = *a;
    for (x, y) in out.iter_mut().zip(b.iter()) {
        *x += *y;
    }
    out
}

/// `mean(f·g)` without forming the product.
fn pair_mean(f: &ScalarFn, g: &ScalarFn) -> ParamCoeff {
    let mut acc = ParamCoeff::zero();
    for (k, c) in f.terms() {
        if let Some(d) = g.get(&neg_freq(k)) {
            acc = acc.add(&c.mul(d));
        }
    }
    acc
}

/// Solves the trace condition `∫ (F★G - G★F) ρ = 0` on the exponential test
/// basis for `ρ_1, …, ρ_top`.
///
/// At order `m` the equation for the pair `(e^a, e^b)` reads
/// `c·ρ_m[-(a+b)] = -Σ_{j>=2} mean(C_j⁻(e^a, e^b) ρ_{m+1-j})` with the
/// constant pivot `c = -aᵀΛb` coming from the Poisson bracket, so each
/// equation involves one unknown. Every equation is checked, including those
/// whose frequency lies outside the cutoff (where `ρ_m` must vanish).
pub fn trace_density(ctx: &FedosovContext, top: i32, cutoffs: &TraceCutoffs) -> Result<TraceDensity, MomentError> {
    let dim = ctx.sym().dim();
    let needed = top + 1;
    if needed > ctx.nu_order() {
        return Err(MomentError::OrderTooHigh { requested: top, needed, available: ctx.nu_order() });
    }
    let tests = box_freqs(&cutoffs.test);
    let q_order = ctx.order().min(2 * needed + 1);
    let quantized: Vec<WeylElement> = tests
        .iter()
        .map(|a| ctx.q_series(&WeylElement::scalar(ctx.sym(), ScalarFn::monomial(dim, *a, ParamCoeff::one())).with_order(q_order)))
        .collect();
    // commutators of all unordered pairs, through ν^{top+1}
    let mut pairs: Vec<(Freq, FormalFunction)> = Vec::new();
    for i in 0..tests.len() {
        for j in (i + 1)..tests.len() {
            let c = quantized[i].bracket_symbol(&quantized[j]);
            debug_assert!(c.order() >= needed);
            pairs.push((add_freq(&tests[i], &tests[j]), c));
        }
    }
    let mut rho = FormalFunction::zero(dim, top);
    rho.set(0, ScalarFn::one(dim));
    let mut reports = Vec::new();
    for m in 1..=top {
        let bounds: Vec<i64> = cutoffs.freq.clone();
        let mut values: BTreeMap<Freq, ParamCoeff> = BTreeMap::new();
        for (sum, comm) in &pairs {
            let q = neg_freq(sum);
            let pivot = comm.coeff(1).coeff(sum);
            let mut rhs = ParamCoeff::zero();
            for j in 2..=(m + 1) {
                rhs = rhs.sub(&pair_mean(&comm.coeff(j), &rho.coeff(m + 1 - j)));
            }
            let unknown = *sum != [0; 6] && in_box(&q, &bounds);
            if pivot.is_zero() || !unknown {
                // ρ_m[q] is absent or pinned to zero, so the equation is a check
                if !rhs.is_zero() {
                    return Err(MomentError::Inconsistent { order: m, freq: freq_vec(&q, dim) });
                }
                continue;
            }
            let value = rhs.scale(&pivot.constant_term().recip());
            match values.get(&q) {
                Some(v) if *v != value => return Err(MomentError::Inconsistent { order: m, freq: freq_vec(&q, dim) }),
                Some(_) => {}
                None => {
                    values.insert(q, value);
                }
            }
        }
        let unknowns: Vec<Freq> = box_freqs(&bounds).into_iter().filter(|k| *k != [0; 6]).collect();
        if let Some(k) = unknowns.iter().find(|k| !values.contains_key(*k)) {
            return Err(MomentError::Underdetermined { order: m, freq: freq_vec(k, dim) });
        }
        reports.push(OrderReport { order: m, unknowns: unknowns.len(), equations: pairs.len(), rank: values.len(), consistent: true });
        rho.set(m, ScalarFn::from_terms(dim, values));
    }
    Ok(TraceDensity { rho, cutoffs: cutoffs.clone(), reports })
}

fn half_dim(dim: usize) -> i32 {
    (dim / 2) as i32
}

/// `tr(F) = (2πν)^{-n} ∫ F ρ`, with `π^n` and `ν^{-n}` kept as tags.
pub fn trace(rho: &TraceDensity, f: &FormalFunction) -> Result<FormalScalar, MomentError> {
    let n = half_dim(f.dim());
    let starts = f.coeffs().keys().next().copied().unwrap_or(0);
    if starts > rho.order() {
        return Err(MomentError::BeyondDensity { starts, solved: rho.order() });
    }
    let mut s = f.mul(&rho.rho).mean().scale_rational(&Rational::from_int(1 << n));
    s.pi_power = n;
    s.nu_shift = -n;
    Ok(s)
}

/// `(2π)^n · 24 · ν^{n-2} · tr(F)`: the normalization shared by the formal
/// symplectic form and moment map. Tags: `π^{2n}`, `ν^{-2}`.
pub fn normalized_trace(rho: &TraceDensity, f: &FormalFunction) -> Result<FormalScalar, MomentError> {
    let n = half_dim(f.dim());
    let mut s = trace(rho, f)?.scale_rational(&Rational::from_int(24 * (1 << n)));
    s.pi_power += n;
    s.nu_shift += n - 2;
    Ok(s)
}

/// `Ω̃(A, B) = (2π)^n 24 ν^{n-2} tr(R(A,B)|_{y=0})`.
pub fn omega_tilde(rho: &TraceDensity, curvature: &CurvatureValue) -> Result<FormalScalar, MomentError> {
    normalized_trace(rho, &curvature.symbol)
}

/// `μ̃(∇)(H) = -(2π)^n 24 ν^{n-2} tr(H)` for zero-mean `H`.
pub fn mu_tilde(rho: &TraceDensity, h: &ScalarFn) -> Result<FormalScalar, MomentError> {
    if !h.mean().is_zero() {
        return Err(MomentError::NonzeroMean);
    }
    Ok(normalized_trace(rho, &FormalFunction::from_fn(h.clone()))?.neg())
}

/// `∫ H μ(∇)` as a series in the same tags as [`mu_tilde`].
pub fn classical_moment_pairing(conn: &SymplecticConnection, h: &ScalarFn) -> FormalScalar {
    FormalFunction::from_fn(h.mul(&conn.cahen_gutt_moment())).integrate()
}

/// Lift of a Hamiltonian to the fibre: `-ω_{ij} y^i X_H^j + ½ ∇²_{kq}H y^k y^q - ι(X_H) r`.
pub fn hamiltonian_lift(ctx: &FedosovContext, h: &ScalarFn) -> WeylElement {
    let sym = ctx.sym();
    let dim = sym.dim();
    let conn = ctx.connection();
    let x = hamiltonian_vector_field(&sym, h);
    let mut out = WeylElement::zero(sym, EXACT);
    for i in 0..dim {
        for j in 0..dim {
            let w = sym.omega(i, j);
            if w != 0 {
                let mut y = [0u8; 6];
                y[i] = 1;
                out.add_term(WeylKey::new(0, &y[..dim], &[]), x[j].scale_rational(&Rational::from_int(-w)));
            }
        }
    }
    let hess = conn.hessian(h);
    for k in 0..dim {
        for q in 0..dim {
            let mut y = [0u8; 6];
            y[k] += 1;
            y[q] += 1;
            out.add_term(WeylKey::new(0, &y[..dim], &[]), hess.get(&[k, q]).scale_rational(&Rational::new(1, 2)));
        }
    }
    out.sub(&ctx.r().interior(&x))
}

/// Everything the formal moment map identity is assembled from.
#[derive(Clone, Debug)]
pub struct MomentReport {
    /// `(1/ν)[α(A), Q(H) - α(L_{X_H}∇)]|_{y=0}`, which vanishes pointwise.
    pub pointwise: FormalFunction,
    /// Its trace.
    pub traced: FormalScalar,
    /// `d/dt μ̃(∇+tA)(H)` from the trace-variation formula.
    pub lhs: FormalScalar,
    /// `Ω̃(L_{X_H}∇, A)`.
    pub rhs: FormalScalar,
    /// `Q(H)` minus the explicit formula in terms of `X_H`, `∇²H`, `r` and `α(L_{X_H}∇)`.
    pub qh_residual: WeylElement,
}

impl MomentReport {
    pub fn difference(&self) -> FormalScalar {
        self.lhs.sub(&self.rhs)
    }
}

/// Assembles both sides of `d/dt μ̃(∇+tA)(H) = Ω̃(L_{X_H}∇, A)`.
pub fn moment_residual(
    ctx: &FedosovContext,
    rho: &TraceDensity,
    a: &S3Field,
    h: &ScalarFn,
) -> Result<MomentReport, MomentError> {
    if !h.mean().is_zero() {
        return Err(MomentError::NonzeroMean);
    }
    let conn = ctx.connection();
    let order = ctx.order();
    let lie = conn.lie_derivative(h)?;
    let alpha_a = alpha(conn, a, order)?.alpha;
    let alpha_l = alpha(conn, &lie, order)?.alpha;
    let hf = FormalFunction::from_fn(h.clone());
    let qh = ctx.quantize(&hf);
    let pointwise = alpha_a.bracket_symbol(&qh.sub(&alpha_l)).shift(-1);
    let traced = trace(rho, &pointwise)?;
    let variation = alpha_a.bracket_symbol(&qh).shift(-1);
    let lhs = normalized_trace(rho, &variation)?.neg();
    let rhs = omega_tilde(rho, &curvature(conn, &lie, a, order)?)?;
    let formula = WeylElement::scalar(ctx.sym(), h.clone()).add(&hamiltonian_lift(ctx, h)).add(&alpha_l);
    let qh_residual = qh.sub(&formula);
    Ok(MomentReport { pointwise, traced, lhs, rhs, qh_residual })
}

/// `d/dt μ̃(∇+tA)(H)` computed directly from the trace density of the
/// family `∇ + tA`, without the variation formula.
pub fn mu_tilde_variation(
    conn: &SymplecticConnection,
    a: &S3Field,
    h: &ScalarFn,
    order: i32,
    top: i32,
    cutoffs: &TraceCutoffs,
) -> Result<FormalScalar, MomentError> {
    let fam = jet_family(conn, &[(Param::T, a)], order)?;
    let rho = trace_density(&fam, top, cutoffs)?;
    Ok(mu_tilde(&rho, h)?.param_diff(Param::T).param_eval(Param::T, &Rational::zero()))
}

/// The cyclic Bianchi sums, pointwise on lifted sections and under the
/// trace, and `dΩ̃(A, B, C)` from trace densities of the families `∇ + tX`.
#[derive(Clone, Debug)]
pub struct BianchiReport {
    pub pointwise: FormalFunction,
    pub traced: FormalScalar,
    pub d_omega: Option<FormalScalar>,
}

/// `α_{∇+tX}(Y)` as a `t`-jet, for each needed ordered pair.
struct AlphaJets {
    /// `(x, y) -> α_{∇+tX}(Y)` with `X = dirs[x]`.
    jets: BTreeMap<(usize, usize), WeylElement>,
}

impl AlphaJets {
    fn new(conn: &SymplecticConnection, dirs: [&S3Field; 3], order: i32) -> Result<Self, MomentError> {
        let mut jets = BTreeMap::new();
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            let fam = jet_family(conn, &[(Param::T, dirs[x]), (Param::S, dirs[y])], order)?;
            let zero = Rational::zero();
            // α along s, as a function of t: α_{∇+tX}(Y)
            let a_s = alpha_along(&fam, Param::S)?.alpha.param_eval(Param::S, &zero);
            // α along t, as a function of s, renamed to t: α_{∇+tY}(X)
            let a_t = alpha_along(&fam, Param::T)?.alpha.param_eval(Param::T, &zero);
            jets.insert((x, y), a_s);
            jets.insert((y, x), swap_params(&a_t));
        }
        Ok(AlphaJets { jets })
    }

    fn get(&self, x: usize, y: usize) -> &WeylElement {
        &self.jets[&(x, y)]
    }
}

/// Renames `s` to `t` in an element that depends on `s` only.
fn swap_params(a: &WeylElement) -> WeylElement {
    a.map_coeffs(|f| {
        let mut g = ScalarFn::zero(f.dim());
        for (k, c) in f.terms() {
            let mut pc = ParamCoeff::zero();
            for (ta, sb, v) in c.terms() {
                debug_assert_eq!(ta, 0);
                pc = pc.add(&ParamCoeff::monomial(v.clone(), sb, ta));
            }
            let caps = c.caps();
            pc = pc.with_caps(Caps::new(caps.s, caps.t));
            g = g.add(&ScalarFn::monomial(f.dim(), *k, pc));
        }
        g
    })
}

/// Cyclic sum of `𝒟_A(R(B,C)|_{y=0})` over `(A, B, C)`. When trace cutoffs
/// are supplied, also `Σ_cyc A(Ω̃(B, C))` from `t`-jet trace densities.
pub fn bianchi_residual(
    ctx: &FedosovContext,
    rho: &TraceDensity,
    dirs: [&S3Field; 3],
    d_omega: Option<(i32, &TraceCutoffs)>,
) -> Result<BianchiReport, MomentError> {
    let conn = ctx.connection();
    let order = ctx.order();
    let jets = AlphaJets::new(conn, dirs, order)?;
    let zero = Rational::zero();
    let mut pointwise = FormalFunction::zero(conn.dim(), EXACT);
    let mut d_omega_sum: Option<FormalScalar> = None;
    for (x, y, z) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        // R_{∇+tX}(Y, Z)|₀ = (1/ν)[α_{∇+tX}(Y), α_{∇+tX}(Z)]|₀ as a t-jet
        let r_jet = jets.get(x, y).bracket_symbol(jets.get(x, z)).shift(-1);
        let alpha_x = jets.get(y, x).param_eval(Param::T, &zero);
        pointwise = pointwise.add(&covariant_derivative(ctx, &alpha_x, &r_jet));
        if let Some((top, cutoffs)) = d_omega {
            let fam = jet_family(conn, &[(Param::T, dirs[x])], order)?;
            let rho_t = trace_density(&fam, top, cutoffs)?;
            let term = normalized_trace(&rho_t, &r_jet)?.param_diff(Param::T).param_eval(Param::T, &zero);
            d_omega_sum = Some(match d_omega_sum {
                Some(acc) => acc.add(&term),
                None => term,
            });
        }
    }
    let traced = trace(rho, &pointwise)?;
    Ok(BianchiReport { pointwise, traced, d_omega: d_omega_sum })
}

/// `Λ^{i1 j1} Λ^{i2 j2} Λ^{i3 j3} A_{i1 i2 i3} B_{j1 j2 j3} / 24`, the
/// expected `ν²` coefficient of `R(A,B)|_{y=0}`.
pub fn curvature_leading_term(a: &S3Field, b: &S3Field) -> ScalarFn {
    crate::geometry::triple_contraction(a, b).scale_rational(&Rational::new(1, 24))
}

/// `ρ_k / μ` if `ρ_k` is a constant multiple of `μ(∇)`.
pub fn density_ratio(rho: &TraceDensity, k: i32, mu: &ScalarFn) -> Option<Gauss> {
    let r = rho.rho().coeff(k);
    let (kk, c) = mu.terms().first()?;
    let ratio = &r.coeff(kk).constant_term() * &c.constant_term().recip();
    (mu.scale(&ratio) == r).then_some(ratio)
}
