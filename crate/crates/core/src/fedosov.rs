//! Fedosov's flat connection for a symplectic connection on the torus, with
//! trivial characteristic class: the solved 1-form `r`, the operators `∂` and
//! `D`, the quantization map `Q`, the star product and `D⁻¹`.

use crate::formal::{FormalFunction, EXACT};
use crate::geometry::{GeometryError, SymplecticConnection};
use crate::rational::Rational;
use crate::scalar_ring::{Freq, Param, ScalarFn, MAX_COORDS};
use crate::weyl::{SymplecticData, WeylElement};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FedosovError {
    #[error("truncation order {0} is below the minimum of 3")]
    OrderTooLow(i32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("section is not D-flat (residual of total degree {0})")]
    NotFlat(i32),
}

/// Characteristic class of the star product. Only the trivial class is
/// implemented; the field marks where a closed series `Ω = Σ ν^k Ω_k` would
/// enter the equation for `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FedosovClass {
    Trivial,
}

/// A symplectic connection with its solved Fedosov data through total degree
/// `N`.
#[derive(Clone)]
pub struct FedosovContext {
    conn: SymplecticConnection,
    order: i32,
    class: FedosovClass,
    gamma_bar: WeylElement,
    r_bar: WeylElement,
    /// `r_parts[d]` is the homogeneous component of total degree `d`.
    r_parts: Vec<WeylElement>,
    r: WeylElement,
}

impl std::fmt::Debug for FedosovContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FedosovContext").field("order", &self.order).field("r", &self.r).finish()
    }
}

impl FedosovContext {
    /// Solves `R̄ + ∂r - δr + (1/ν) r∘r = 0`, `δ⁻¹r = 0` degree by degree:
    /// `r_d = δ⁻¹(R̄_{d-1} + ∂r_{d-1} + ½ Σ_{a+b=d+1} (1/ν)[r_a, r_b])`.
    pub fn solve(conn: SymplecticConnection, order: i32) -> Result<Self, FedosovError> {
        if order < 3 {
            return Err(FedosovError::OrderTooLow(order));
        }
        let sym = conn.sym();
        let gamma_bar = conn.gamma_bar();
        let r_bar = conn.r_bar()?;
        let mut ctx = FedosovContext {
            conn,
            order,
            class: FedosovClass::Trivial,
            gamma_bar,
            r_bar,
            r_parts: vec![WeylElement::zero(sym, EXACT); order as usize + 1],
            r: WeylElement::zero(sym, order),
        };
        let half = Rational::new(1, 2);
        for d in 3..=order {
            let mut rhs = ctx.partial(&ctx.r_parts[d as usize - 1]);
            if d == 3 {
                rhs = rhs.add(&ctx.r_bar);
            }
            for a in 3..=(d - 2) {
                let b = d + 1 - a;
                if b < 3 {
                    continue;
                }
                let br = ctx.r_parts[a as usize].bracket_over_nu(&ctx.r_parts[b as usize]);
                rhs = rhs.add(&br.scale_rational(&half));
            }
            ctx.r_parts[d as usize] = rhs.delta_inv();
        }
        let mut r = WeylElement::zero(sym, EXACT);
        for p in &ctx.r_parts {
            r = r.add(p);
        }
        ctx.r = r.with_order(order);
        Ok(ctx)
    }

    /// Restricts a parameter-dependent context to `p = v`.
    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        FedosovContext {
            conn: self.conn.param_eval(p, v),
            order: self.order,
            class: self.class,
            gamma_bar: self.gamma_bar.param_eval(p, v),
            r_bar: self.r_bar.param_eval(p, v),
            r_parts: self.r_parts.iter().map(|a| a.param_eval(p, v)).collect(),
            r: self.r.param_eval(p, v),
        }
    }

    /// The context at `t = s = 0`.
    pub fn at_origin(&self) -> Self {
        let zero = Rational::zero();
        self.param_eval(Param::T, &zero).param_eval(Param::S, &zero)
    }

    pub fn connection(&self) -> &SymplecticConnection {
        &self.conn
    }

    pub fn sym(&self) -> SymplecticData {
        self.conn.sym()
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn class(&self) -> FedosovClass {
        self.class
    }

    pub fn r(&self) -> &WeylElement {
        &self.r
    }

    pub fn gamma_bar(&self) -> &WeylElement {
        &self.gamma_bar
    }

    pub fn r_bar(&self) -> &WeylElement {
        &self.r_bar
    }

    /// Highest `ν`-order of the star product that is fully determined.
    pub fn nu_order(&self) -> i32 {
        self.order / 2
    }

    /// `∂a = da + (1/ν)[Γ̄, a]`.
    pub fn partial(&self, a: &WeylElement) -> WeylElement {
        a.exterior_d().add(&self.gamma_bar.bracket_over_nu(a))
    }

    /// `Da = ∂a - δa + (1/ν)[r, a]`.
    pub fn d_op(&self, a: &WeylElement) -> WeylElement {
        self.partial(a).sub(&a.delta()).add(&self.r.bracket_over_nu(a))
    }

    /// `R̄ + ∂r - δr + (1/ν) r∘r`; exact through total degree `N - 1`.
    pub fn r_residual(&self) -> WeylElement {
        let rr = self.r.circ(&self.r).shift_nu(-1);
        self.r_bar.add(&self.partial(&self.r)).sub(&self.r.delta()).add(&rr)
    }

    /// Solves `a = s + δ⁻¹(∂a + (1/ν)[r, a])` degree by degree, which is the
    /// series `Σ_k (δ⁻¹(∂ + (1/ν)[r,·]))^k s`. Valid through
    /// `min(N, order(s))`.
    pub fn q_series(&self, source: &WeylElement) -> WeylElement {
        let sym = self.sym();
        let order = self.order.min(source.order());
        let mut parts: Vec<WeylElement> = Vec::with_capacity(order.max(0) as usize + 1);
        for d in 0..=order {
            let mut part = source.degree_part(d);
            if d >= 1 {
                let mut rhs = self.partial(&parts[d as usize - 1]);
                for j in 3..=d {
                    let m = d + 1 - j;
                    if m >= 1 && !parts[m as usize].is_zero() {
                        rhs = rhs.add(&self.r_parts[j as usize].bracket_over_nu(&parts[m as usize]));
                    }
                }
                part = part.add(&rhs.delta_inv());
            }
            parts.push(part);
        }
        let mut out = WeylElement::zero(sym, EXACT);
        for p in &parts {
            out = out.add(p);
        }
        out.with_order(order)
    }

    /// `Q(F)`: the unique `D`-flat section with symbol `F`.
    pub fn quantize(&self, f: &FormalFunction) -> WeylElement {
        self.q_series(&WeylElement::from_formal(self.sym(), f))
    }

    /// `F ★ G = σ(Q(F) ∘ Q(G))`.
    pub fn star(&self, f: &FormalFunction, g: &FormalFunction) -> FormalFunction {
        self.quantize(f).circ_symbol(&self.quantize(g))
    }

    /// `(1/ν)(F ★ G - G ★ F)`.
    pub fn star_bracket_over_nu(&self, f: &FormalFunction, g: &FormalFunction) -> FormalFunction {
        self.quantize(f).bracket_symbol(&self.quantize(g)).shift(-1)
    }

    /// Unique `a` with `Da = b` and `σ(a) = 0`, given a `D`-flat 1-form `b`:
    /// `a = -Q(δ⁻¹b)`.
    pub fn d_inverse(&self, b: &WeylElement) -> Result<WeylElement, FedosovError> {
        let db = self.d_op(b);
        if let Some(d) = db.terms().keys().map(|k| k.degree()).min() {
            return Err(FedosovError::NotFlat(d));
        }
        Ok(self.q_series(&b.delta_inv().neg()))
    }

    /// `D⁻¹` without the flatness check, for callers that verify it
    /// separately.
    pub fn d_inverse_unchecked(&self, b: &WeylElement) -> WeylElement {
        self.q_series(&b.delta_inv().neg())
    }
}

/// Lowest total degree of a nonzero stored term, if any.
pub fn lowest_degree(a: &WeylElement) -> Option<i32> {
    a.terms().keys().map(|k| k.degree()).min()
}


/// The Moyal product `Σ_m (ν/2)^m/m! Λ^{i₁j₁}…Λ^{i_mj_m} ∂_I F ∂_J G` of the
/// flat torus, through `ν^{top}`. On exponentials it is the scalar
/// `e_k ★ e_l = exp(-(ν/2) kΛl) e_{k+l}`, which is how it is evaluated here.
pub fn moyal_product(sym: SymplecticData, f: &FormalFunction, g: &FormalFunction, top: i32) -> FormalFunction {
    let dim = sym.dim();
    let mut out = FormalFunction::zero(dim, top.min(f.order()).min(g.order()));
    for (a, fa) in f.coeffs() {
        for (b, gb) in g.coeffs() {
            let span = top - a - b;
            if span < 0 {
                continue;
            }
            let mut parts = vec![ScalarFn::zero(dim); span as usize + 1];
            for (k, ck) in fa.terms() {
                for (l, cl) in gb.terms() {
                    let mut pairing = 0i64;
                    for i in 0..dim {
                        for j in 0..dim {
                            pairing += k[i] as i64 * sym.lambda(i, j) * l[j] as i64;
                        }
                    }
                    let mut kl: Freq = [0; MAX_COORDS];
                    for i in 0..dim {
                        kl[i] = k[i] + l[i];
                    }
                    let base = ck.mul(cl);
                    let step = Rational::new(-pairing, 2);
                    let mut c = Rational::one();
                    for (m, part) in parts.iter_mut().enumerate() {
                        if m > 0 {
                            c = &(&c * &step) / &Rational::from_int(m as i64);
                        }
                        if c.is_zero() {
                            break;
                        }
                        *part = part.add(&ScalarFn::monomial(dim, kl, base.scale_rational(&c)));
                    }
                }
            }
            for (m, part) in parts.into_iter().enumerate() {
                let k = a + b + m as i32;
                let prev = out.coeff(k);
                out.set(k, prev.add(&part));
            }
        }
    }
    out
}
