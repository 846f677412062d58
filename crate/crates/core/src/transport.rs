//! Parallel transport of flat sections along polynomial paths of
//! connections, holonomy around polynomial disks, Heisenberg flows on the
//! star algebra, exponential extraction of an ordered flow, and the formal
//! action functional.
//!
//! Paths and disks are polynomial in `t` (and `s`) with unbounded parameter
//! caps, so every `t`-integral closes exactly and evaluation at `t = 1` is
//! legitimate.

use std::collections::BTreeMap;

use crate::fedosov::{FedosovContext, FedosovError};
use crate::formal::{FormalFunction, FormalScalar, EXACT};
use crate::geometry::{S3Field, SymplecticConnection};
use crate::moment::{alpha_along, curvature_from_alphas, mu_tilde, normalized_trace, trace_density, MomentError, TraceCutoffs};
use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{Param, ParamCoeff, ScalarFn};
use crate::weyl::WeylElement;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Fedosov(#[from] FedosovError),
    #[error("disk violates the boundary condition at {0}")]
    Boundary(&'static str),
    #[error("result was truncated in the path parameters; raise the parameter cap")]
    CapExceeded,
    #[error("generator must start at nu^2, found a nu^{0} term")]
    GeneratorTooLow(i32),
    #[error("requested nu-order {requested} exceeds the solved order {available}")]
    OrderTooHigh { requested: i32, available: i32 },
    #[error("Hamiltonian has nonzero mean")]
    NonzeroMean,
}

fn t_power(k: u8) -> ParamCoeff {
    ParamCoeff::monomial(Gauss::one(), k, 0)
}

/// `∇ + Σ_{j>=1} t^j u_j`.
#[derive(Clone, Debug)]
pub struct ConnectionPath {
    base: SymplecticConnection,
    coeffs: Vec<S3Field>,
}

impl ConnectionPath {
    /// `coeffs[j-1]` multiplies `t^j`.
    pub fn new(base: SymplecticConnection, coeffs: Vec<S3Field>) -> Self {
        ConnectionPath { base, coeffs }
    }

    pub fn linear(base: SymplecticConnection, a: S3Field) -> Self {
        ConnectionPath::new(base, vec![a])
    }

    pub fn base(&self) -> &SymplecticConnection {
        &self.base
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// The path as a connection over the `t`-polynomial ring.
    pub fn connection(&self) -> SymplecticConnection {
        self.coeffs
            .iter()
            .enumerate()
            .fold(self.base.clone(), |c, (j, u)| c.displaced(u, &t_power(j as u8 + 1)))
    }
}

/// `∇ + Σ t^a s^b u_{ab}`, equal to `∇` on the edges `t = 0`, `t = 1` and
/// `s = 0`. The edge `s = 1` is the loop.
#[derive(Clone, Debug)]
pub struct ConnectionDisk {
    base: SymplecticConnection,
    coeffs: BTreeMap<(u8, u8), S3Field>,
}

impl ConnectionDisk {
    pub fn new(base: SymplecticConnection, coeffs: BTreeMap<(u8, u8), S3Field>) -> Result<Self, TransportError> {
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, u)| !u.is_zero()).collect();
        if coeffs.keys().any(|(_, b)| *b == 0) {
            return Err(TransportError::Boundary("s = 0"));
        }
        if coeffs.keys().any(|(a, _)| *a == 0) {
            return Err(TransportError::Boundary("t = 0"));
        }
        // at t = 1 every s-power must cancel
        let mut by_s: BTreeMap<u8, S3Field> = BTreeMap::new();
        for ((_, b), u) in &coeffs {
            let acc = by_s.remove(b).unwrap_or_else(|| S3Field::zero(base.sym()));
            by_s.insert(*b, acc.add(u));
        }
        if by_s.values().any(|u| !u.is_zero()) {
            return Err(TransportError::Boundary("t = 1"));
        }
        Ok(ConnectionDisk { base, coeffs })
    }

    /// `∇ + s·t(1-t)·(A + tB)`. Both tangent directions are multiples of
    /// one field when `B = 0`, so the disk carries curvature only through `B`.
    pub fn spanned(base: SymplecticConnection, a: &S3Field, b: &S3Field) -> Self {
        let coeffs = BTreeMap::from([((1, 1), a.clone()), ((2, 1), b.sub(a)), ((3, 1), b.neg())]);
        ConnectionDisk::new(base, coeffs).expect("t(1-t) vanishes on the boundary")
    }

    /// The disk with every point at `∇`.
    pub fn constant(base: SymplecticConnection) -> Self {
        ConnectionDisk { base, coeffs: BTreeMap::new() }
    }

    pub fn base(&self) -> &SymplecticConnection {
        &self.base
    }

    pub fn coeffs(&self) -> &BTreeMap<(u8, u8), S3Field> {
        &self.coeffs
    }

    /// The disk as a connection over the `(t, s)`-polynomial ring.
    pub fn connection(&self) -> SymplecticConnection {
        self.coeffs
            .iter()
            .fold(self.base.clone(), |c, ((a, b), u)| c.displaced(u, &ParamCoeff::monomial(Gauss::one(), *a, *b)))
    }

    /// The loop `t ↦ ∇^{t1}`.
    pub fn boundary(&self) -> ConnectionPath {
        let deg = self.coeffs.keys().map(|(a, _)| *a as usize).max().unwrap_or(0);
        let mut coeffs = vec![S3Field::zero(self.base.sym()); deg];
        for ((a, _), u) in &self.coeffs {
            coeffs[*a as usize - 1] = coeffs[*a as usize - 1].add(u);
        }
        ConnectionPath::new(self.base.clone(), coeffs)
    }
}

/// `h_t = -D⁻¹(d/dt Γ̄ + d/dt r)` along the `t`-dependence of a solved family,
/// i.e. `-α(d∇/dt)`.
pub fn generator_h(family: &FedosovContext) -> Result<WeylElement, TransportError> {
    Ok(alpha_along(family, Param::T)?.alpha.neg())
}

/// Solves `dv/dt = (1/ν) h∘v`, `v(0) = 1` by iterating
/// `v = 1 + ∫_0^t (1/ν) h∘v`. Since `(1/ν) h∘·` raises the total degree,
/// `order` passes determine `v` through that degree.
pub fn solve_v(h: &WeylElement, order: i32) -> WeylElement {
    let one = WeylElement::one(h.sym()).with_order(order);
    let mut v = one.clone();
    for _ in 0..=order {
        let step = h.circ(&v).shift_nu(-1).truncate(order).param_integrate(Param::T);
        let next = one.add(&step);
        if next == v {
            break;
        }
        v = next;
    }
    v
}

/// `v⁻¹` along the same path, from `d(v⁻¹)/dt = -(1/ν) v⁻¹∘h`. Much cheaper
/// than the geometric series when `v` carries parameter dependence.
pub fn solve_v_inverse(h: &WeylElement, order: i32) -> WeylElement {
    let one = WeylElement::one(h.sym()).with_order(order);
    let mut u = one.clone();
    for _ in 0..=order {
        let step = u.circ(h).shift_nu(-1).truncate(order).param_integrate(Param::T);
        let next = one.sub(&step);
        if next == u {
            break;
        }
        u = next;
    }
    u
}

/// `v⁻¹ = Σ_k (1 - v)^k`, which terminates because `1 - v` has positive
/// total degree.
pub fn unipotent_inverse(v: &WeylElement) -> WeylElement {
    let one = WeylElement::one(v.sym());
    let w = one.sub(v);
    debug_assert!(w.terms().keys().all(|k| k.degree() >= 1));
    let order = v.order();
    let mut out = one.with_order(order);
    let mut power = out.clone();
    loop {
        power = power.circ(&w).truncate(order);
        if power.is_zero() {
            break;
        }
        out = out.add(&power);
    }
    out.with_order(order)
}

/// `v_t` along a path together with what produced it.
#[derive(Clone, Debug)]
pub struct TransportElement {
    pub v: WeylElement,
    pub v_inv: WeylElement,
    pub h: WeylElement,
    /// Fedosov data of `∇^t` over the `t`-polynomial ring.
    pub family: FedosovContext,
    base: FedosovContext,
}

impl TransportElement {
    /// `dv/dt - (1/ν) h∘v`.
    pub fn ode_residual(&self) -> WeylElement {
        self.v.param_diff(Param::T).sub(&self.h.circ(&self.v).shift_nu(-1))
    }

    /// `v∘a∘v⁻¹`.
    pub fn conjugate(&self, a: &WeylElement) -> WeylElement {
        self.v.circ(a).circ(&self.v_inv)
    }

    /// `v∘Q^{∇⁰}(F)∘v⁻¹`.
    pub fn transport(&self, f: &FormalFunction) -> WeylElement {
        self.conjugate(&self.base.quantize(f))
    }

    pub fn base(&self) -> &FedosovContext {
        &self.base
    }

    /// Symbol of the transported section, which is `B_t(F)`.
    pub fn transport_symbol(&self, f: &FormalFunction) -> FormalFunction {
        self.transport(f).symbol()
    }
}

/// Solves the family along a path and its transport element `v_t`.
pub fn transport_along(path: &ConnectionPath, order: i32) -> Result<TransportElement, TransportError> {
    let family = FedosovContext::solve(path.connection(), order)?;
    let base = FedosovContext::solve(path.base().clone(), order)?;
    let h = generator_h(&family)?;
    let v = solve_v(&h, h.order());
    if v.is_truncated() {
        return Err(TransportError::CapExceeded);
    }
    let v_inv = solve_v_inverse(&h, h.order());
    Ok(TransportElement { v, v_inv, h, family, base })
}

/// Everything computed for the holonomy of a disk.
#[derive(Clone, Debug)]
pub struct Holonomy {
    /// `w_{1s}`, the transport around the loop at height `s`.
    pub w_loop: WeylElement,
    /// `g_s = w_{1s}∘(∫_0^1 w⁻¹∘R(∂_t, ∂_s)∘w dt)∘w_{1s}⁻¹`.
    pub generator: WeylElement,
    /// `ν (d/ds w_{1s})∘w_{1s}⁻¹`.
    pub from_derivative: WeylElement,
    /// `D^∇` of the integrand, which vanishes.
    pub integrand_flatness: WeylElement,
    /// `D^∇ g_s`.
    pub generator_flatness: WeylElement,
}

impl Holonomy {
    pub fn identity_residual(&self) -> WeylElement {
        self.generator.sub(&self.from_derivative)
    }

    /// `G_s = g_s|_{y=0}`.
    pub fn symbol(&self) -> FormalFunction {
        self.generator.symbol()
    }
}

fn eval_t(a: &WeylElement, v: i64) -> WeylElement {
    a.param_eval(Param::T, &Rational::from_int(v))
}

/// Fedosov data on a disk and on its base point, with `α(∂_t)`, `α(∂_s)`
/// and the curvature between them.
struct DiskData {
    family: FedosovContext,
    base: FedosovContext,
    alpha_t: WeylElement,
    curvature: WeylElement,
}

impl DiskData {
    fn solve(disk: &ConnectionDisk, order: i32) -> Result<Self, TransportError> {
        let family = FedosovContext::solve(disk.connection(), order)?;
        let base = FedosovContext::solve(disk.base().clone(), order)?;
        let alpha_t = alpha_along(&family, Param::T)?.alpha;
        let alpha_s = alpha_along(&family, Param::S)?.alpha;
        let curvature = curvature_from_alphas(&alpha_t, &alpha_s, Param::T, Param::S);
        Ok(DiskData { family, base, alpha_t, curvature })
    }

    fn holonomy(&self) -> Result<Holonomy, TransportError> {
        let h = self.alpha_t.neg();
        let w = solve_v(&h, h.order());
        let w_inv = solve_v_inverse(&h, h.order());
        let integrand = w_inv.circ(&self.curvature).circ(&w);
        let integral = eval_t(&integrand.param_integrate(Param::T), 1);
        let w_loop = eval_t(&w, 1);
        let w_loop_inv = eval_t(&w_inv, 1);
        let generator = w_loop.circ(&integral).circ(&w_loop_inv);
        let from_derivative = w_loop.param_diff(Param::S).circ(&w_loop_inv).shift_nu(1);
        if generator.is_truncated() || from_derivative.is_truncated() {
            return Err(TransportError::CapExceeded);
        }
        let integrand_flatness = self.base.d_op(&integrand);
        let generator_flatness = self.base.d_op(&generator);
        Ok(Holonomy { w_loop, generator, from_derivative, integrand_flatness, generator_flatness })
    }
}

/// Assembles the holonomy generator of a disk and checks it against
/// `ν (d/ds w_{1s}) w_{1s}⁻¹`.
pub fn holonomy_generator(disk: &ConnectionDisk, order: i32) -> Result<Holonomy, TransportError> {
    DiskData::solve(disk, order)?.holonomy()
}

/// Sign in `da/dt = ±(1/ν)[H_t, a]_★`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowSign {
    Plus,
    Minus,
}

impl FlowSign {
    fn rational(self) -> Rational {
        match self {
            FlowSign::Plus => Rational::one(),
            FlowSign::Minus => Rational::from_int(-1),
        }
    }
}

/// The `t^k` coefficient of a `t`-polynomial formal function.
fn t_coeff(f: &FormalFunction, k: u8) -> FormalFunction {
    f.param_coeff(Param::T, k)
}

fn t_degree(f: &FormalFunction) -> u8 {
    f.coeffs()
        .values()
        .flat_map(|g| g.terms().iter().flat_map(|(_, c)| c.terms().map(|(a, _, _)| a)))
        .max()
        .unwrap_or(0)
}

/// Solves the Heisenberg equation `da/dt = ±(1/ν)[H_t, a]_★`, `a(0) = F`,
/// as a polynomial in `t` through `t^{t_order}`:
/// `a_{k+1} = ±(1/(k+1)) Σ_{i+j=k} (1/ν)[H_i, a_j]_★`.
pub fn heisenberg_flow(
    ctx: &FedosovContext,
    h: &FormalFunction,
    f: &FormalFunction,
    t_order: u8,
    sign: FlowSign,
) -> Result<FormalFunction, TransportError> {
    if t_order >= crate::scalar_ring::UNBOUNDED - 1 {
        return Err(TransportError::CapExceeded);
    }
    let hdeg = t_degree(h);
    let hs: Vec<FormalFunction> = (0..=hdeg).map(|i| t_coeff(h, i)).collect();
    let mut parts: Vec<FormalFunction> = vec![f.clone()];
    for k in 0..t_order {
        let mut acc = FormalFunction::zero(f.dim(), EXACT);
        for (i, hi) in hs.iter().enumerate() {
            if i > k as usize || hi.is_zero() {
                continue;
            }
            acc = acc.add(&ctx.star_bracket_over_nu(hi, &parts[k as usize - i]));
        }
        let c = sign.rational() * &Rational::new(1, k as i64 + 1);
        parts.push(acc.scale_rational(&c));
    }
    let caps = crate::scalar_ring::Caps::new(t_order, crate::scalar_ring::UNBOUNDED);
    let mut out = FormalFunction::zero(f.dim(), EXACT);
    for (k, p) in parts.iter().enumerate() {
        out = out.add(&p.map(|g| g.mul_param(&t_power(k as u8))));
    }
    Ok(out.with_caps(caps))
}

/// Lowest power of `ν` with a nonzero coefficient.
fn lowest_nu(f: &FormalFunction) -> Option<i32> {
    f.coeffs().keys().next().copied()
}

/// `[F, G]_★` (not divided by `ν`).
fn star_commutator(ctx: &FedosovContext, f: &FormalFunction, g: &FormalFunction) -> FormalFunction {
    ctx.quantize(f).bracket_symbol(&ctx.quantize(g))
}

/// Bernoulli numbers `B_0..B_k` with `B_1 = -1/2`.
fn bernoulli(k: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=k {
        // Σ_{j<=m} C(m+1, j) B_j = 0
        let mut acc = Rational::zero();
        let mut binom = Rational::one();
        for (j, bj) in b.iter().enumerate() {
            acc += &(&binom * bj);
            binom = &binom * &Rational::new((m + 1 - j) as i64, j as i64 + 1);
        }
        b.push(-(&acc / &Rational::from_int(m as i64 + 1)));
    }
    b
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

/// Combines the ordered flow `dB/ds = (1/ν)[G_s, B]_★`, `B_0 = id`, over
/// `s ∈ [0, 1]` into a single `exp([G̃, ·]_★)`, returning `G̃` through
/// `ν^{nu_top}`.
///
/// With `L = G/ν`, the Magnus generator solves
/// `Ω' = Σ_k B_k/k! ad_Ω^k(L)` (ad taken with the star commutator), and
/// `G̃ = Ω(1)`. Each bracket raises the `ν`-order by at least two, so the
/// series and the Picard iteration both terminate.
pub fn exp_extract(ctx: &FedosovContext, g: &FormalFunction, nu_top: i32) -> Result<FormalFunction, TransportError> {
    if let Some(k) = lowest_nu(g) {
        if k < 2 {
            return Err(TransportError::GeneratorTooLow(k));
        }
    }
    if nu_top > ctx.nu_order() {
        return Err(TransportError::OrderTooHigh { requested: nu_top, available: ctx.nu_order() });
    }
    let l = g.shift(-1).truncate(nu_top);
    let terms = (nu_top.max(1) as usize).div_ceil(2) + 1;
    let b = bernoulli(terms);
    let mut omega = FormalFunction::zero(g.dim(), nu_top);
    for _ in 0..=terms {
        let mut rate = l.clone();
        let mut ad = l.clone();
        for (k, bk) in b.iter().enumerate().skip(1) {
            ad = star_commutator(ctx, &omega, &ad).truncate(nu_top);
            if ad.is_zero() {
                break;
            }
            let c = bk / &Rational::from_int(factorial(k));
            rate = rate.add(&ad.scale_rational(&c));
        }
        let next = rate.param_integrate(Param::S).truncate(nu_top);
        if next == omega {
            break;
        }
        omega = next;
    }
    Ok(omega.param_eval(Param::S, &Rational::one()))
}

/// `exp([G, ·]_★) F`.
pub fn exp_apply(ctx: &FedosovContext, g: &FormalFunction, f: &FormalFunction, nu_top: i32) -> FormalFunction {
    let mut out = f.truncate(nu_top);
    let mut term = out.clone();
    for k in 1.. {
        term = star_commutator(ctx, g, &term).scale_rational(&Rational::new(1, k)).truncate(nu_top);
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
    }
    out
}

/// The ordered flow `dB/ds = (1/ν)[G_s, B]_★` applied to `F` and evaluated
/// at `s = 1`, by Picard iteration in `s`.
pub fn ordered_flow(ctx: &FedosovContext, g: &FormalFunction, f: &FormalFunction, nu_top: i32) -> FormalFunction {
    let l = g.shift(-1);
    let f0 = f.truncate(nu_top);
    let mut b = f0.clone();
    for _ in 0..=nu_top {
        let next = f0.add(&star_commutator(ctx, &l, &b).param_integrate(Param::S).truncate(nu_top));
        if next == b {
            break;
        }
        b = next;
    }
    b.param_eval(Param::S, &Rational::one())
}

/// Both evaluations of the formal action functional on a disk whose loop is
/// paired with a Hamiltonian path.
#[derive(Clone, Debug)]
pub struct ActionValue {
    /// `∫_B Ω̃` with the curvature and trace density of each `∇^{ts}`.
    pub omega_integral: FormalScalar,
    /// `∫_0^1 μ̃(∇^{t1})(H_t) dt`.
    pub hamiltonian_integral: FormalScalar,
    /// `∫_B Ω̃ - ∫ μ̃(H_t) dt`.
    pub definition: FormalScalar,
    /// `(2π)^n 24 ν^{n-2} ∫_0^1 tr^∇(ν (d/ds v_{1s}) v_{1s}⁻¹) ds - ∫ μ̃(H_t) dt`.
    pub holonomy: FormalScalar,
}

impl ActionValue {
    pub fn difference(&self) -> FormalScalar {
        self.definition.sub(&self.holonomy)
    }
}

fn integrate_unit(s: &FormalScalar, p: Param) -> FormalScalar {
    s.param_integrate(p).param_eval(p, &Rational::one())
}

/// The formal action functional `∫_B Ω̃ - ∫_0^1 μ̃(∇^{t1})(H_t) dt`, once
/// from its definition and once with the disk term replaced by the trace of
/// the holonomy generator.
///
/// The loop is taken as declared: the Hamiltonian term uses the trace
/// density of `∇^{t1}` in both evaluations, which is the naturality of the
/// trace under the pullback that would relate them.
pub fn action_functional(
    disk: &ConnectionDisk,
    h: &ScalarFn,
    order: i32,
    top: i32,
    cutoffs: &TraceCutoffs,
) -> Result<ActionValue, TransportError> {
    if !h.mean().is_zero() {
        return Err(TransportError::NonzeroMean);
    }
    let data = DiskData::solve(disk, order)?;
    let rho_family = trace_density(&data.family, top, cutoffs)?;
    let omega_density = normalized_trace(&rho_family, &data.curvature.symbol())?;
    let omega_integral = integrate_unit(&integrate_unit(&omega_density, Param::T), Param::S);

    let rho_loop = rho_family.param_eval(Param::S, &Rational::one());
    let hamiltonian_integral = integrate_unit(&mu_tilde(&rho_loop, h)?, Param::T);
    let definition = omega_integral.sub(&hamiltonian_integral);

    let hol = data.holonomy()?;
    let rho_base = rho_family.param_eval(Param::S, &Rational::zero());
    let holo = normalized_trace(&rho_base, &hol.from_derivative.symbol())?;
    let holonomy = integrate_unit(&holo, Param::S).sub(&hamiltonian_integral);
    Ok(ActionValue { omega_integral, hamiltonian_integral, definition, holonomy })
}
