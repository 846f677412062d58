//! Formal power series in `ν`: of functions on the torus
//! ([`FormalFunction`]) and of numbers ([`FormalScalar`]).
//!
//! Every series records the highest `ν`-power through which it is exact.
//! Terms beyond that order are never stored.

use std::collections::BTreeMap;
use std::fmt;

use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{Caps, Param, ParamCoeff, ScalarFn};

/// Sentinel order for series that are exact in every power of `ν`.
pub const EXACT: i32 = i32::MAX / 4;

pub(crate) fn ord_add(a: i32, b: i32) -> i32 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        (a + b).min(EXACT)
    }
}

pub(crate) fn ord_sub(a: i32, b: i32) -> i32 {
    if a >= EXACT {
        EXACT
    } else {
        a - b
    }
}

/// `Σ_k ν^k F_k`, exact through `ν^order`.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalFunction {
    dim: usize,
    coeffs: BTreeMap<i32, ScalarFn>,
    order: i32,
}

impl FormalFunction {
    pub fn zero(dim: usize, order: i32) -> Self {
        FormalFunction { dim, coeffs: BTreeMap::new(), order }
    }

    /// A `ν`-independent function, exact to all orders.
    pub fn from_fn(f: ScalarFn) -> Self {
        let dim = f.dim();
        let mut out = FormalFunction::zero(dim, EXACT);
        out.set(0, f);
        out
    }

    /// `ν^k f`, exact to all orders.
    pub fn monomial(k: i32, f: ScalarFn) -> Self {
        let dim = f.dim();
        let mut out = FormalFunction::zero(dim, EXACT);
        out.set(k, f);
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, ScalarFn> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> ScalarFn {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| ScalarFn::zero(self.dim))
    }

    /// Overwrites the `ν^k` coefficient; ignored when `k` is past the order.
    pub fn set(&mut self, k: i32, f: ScalarFn) {
        if k > self.order {
            return;
        }
        if f.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, f);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power that may be nonzero (counting the unknown tail).
    pub fn min_order(&self) -> i32 {
        self.coeffs.keys().next().copied().unwrap_or(ord_add(self.order, 1)).min(ord_add(self.order, 1))
    }

    pub fn truncate(&self, order: i32) -> Self {
        let order = order.min(self.order);
        FormalFunction {
            dim: self.dim,
            coeffs: self.coeffs.iter().filter(|(k, _)| **k <= order).map(|(k, f)| (*k, f.clone())).collect(),
            order,
        }
    }

    fn zip(&self, other: &Self, op: impl Fn(&ScalarFn, &ScalarFn) -> ScalarFn) -> Self {
        let order = self.order.min(other.order);
        let mut out = FormalFunction::zero(self.dim, order);
        let keys: std::collections::BTreeSet<i32> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        for k in keys.into_iter().filter(|k| *k <= order) {
            out.set(k, op(&self.coeff(k), &other.coeff(k)));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn map(&self, f: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = FormalFunction::zero(self.dim, self.order);
        for (k, c) in &self.coeffs {
            out.set(*k, f(c));
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.map(|f| f.neg())
    }

    pub fn scale(&self, g: &Gauss) -> Self {
        self.map(|f| f.scale(g))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map(|f| f.scale_rational(r))
    }

    /// Multiplication by `ν^k`.
    pub fn shift(&self, k: i32) -> Self {
        FormalFunction {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(j, f)| (j + k, f.clone())).collect(),
            order: ord_add(self.order, k),
        }
    }

    /// Pointwise (commutative) product of series.
    pub fn mul(&self, other: &Self) -> Self {
        let order = ord_add(self.order, other.min_order()).min(ord_add(other.order, self.min_order()));
        let mut acc: BTreeMap<i32, ScalarFn> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                if i + j > order {
                    continue;
                }
                let e = acc.entry(i + j).or_insert_with(|| ScalarFn::zero(self.dim));
                *e = e.add(&a.mul(b));
            }
        }
        let mut out = FormalFunction::zero(self.dim, order);
        for (k, f) in acc {
            out.set(k, f);
        }
        out
    }

    pub fn partial(&self, j: usize) -> Self {
        self.map(|f| f.partial(j))
    }

    pub fn param_diff(&self, p: Param) -> Self {
        self.map(|f| f.param_diff(p))
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        self.map(|f| f.param_eval(p, v))
    }

    pub fn param_integrate(&self, p: Param) -> Self {
        self.map(|f| f.param_integrate(p))
    }

    pub fn param_coeff(&self, p: Param, k: u8) -> Self {
        self.map(|f| f.param_coeff(p, k))
    }

    pub fn with_caps(&self, caps: Caps) -> Self {
        self.map(|f| f.with_caps(caps))
    }

    pub fn is_truncated(&self) -> bool {
        self.coeffs.values().any(|f| f.is_truncated())
    }

    /// Mean over the torus, coefficientwise.
    pub fn mean(&self) -> FormalScalar {
        let mut out = FormalScalar::zero(self.order);
        for (k, f) in &self.coeffs {
            out.set(*k, f.mean());
        }
        out
    }

    /// `∫_{T^{dim}} F`, with the `π^{dim}` factor carried symbolically.
    pub fn integrate(&self) -> FormalScalar {
        let mut out = FormalScalar::zero(self.order);
        out.pi_power = self.dim as i32;
        for (k, f) in &self.coeffs {
            out.set(*k, f.integral_over_pi_power());
        }
        out
    }
}

impl fmt::Debug for FormalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = if self.order >= EXACT { "exact".to_string() } else { self.order.to_string() };
        write!(f, "FormalFunction(order {order}) {{")?;
        for (k, c) in &self.coeffs {
            write!(f, " nu^{k}: {c:?};")?;
        }
        write!(f, " }}")
    }
}

/// `π^{pi_power} ν^{nu_shift} Σ_k ν^k c_k`, exact through `k <= order`.
///
/// The prefactor tags are kept apart from the coefficients so that values like
/// `(2πν)^{-n}` never need to be expanded.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalScalar {
    pub pi_power: i32,
    pub nu_shift: i32,
    coeffs: BTreeMap<i32, ParamCoeff>,
    order: i32,
}

impl FormalScalar {
    pub fn zero(order: i32) -> Self {
        FormalScalar { pi_power: 0, nu_shift: 0, coeffs: BTreeMap::new(), order }
    }

    pub fn constant(c: ParamCoeff) -> Self {
        let mut s = FormalScalar::zero(EXACT);
        s.set(0, c);
        s
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Highest absolute power of `ν` that is exact.
    pub fn absolute_order(&self) -> i32 {
        ord_add(self.order, self.nu_shift)
    }

    pub fn set(&mut self, k: i32, c: ParamCoeff) {
        if k > self.order {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    /// Coefficient of `ν^k` inside the series (before the `ν^{nu_shift}` tag).
    pub fn coeff(&self, k: i32) -> ParamCoeff {
        self.coeffs.get(&k).cloned().unwrap_or_default()
    }

    /// Coefficient of the absolute power `ν^k`, still times `π^{pi_power}`.
    pub fn abs_coeff(&self, k: i32) -> ParamCoeff {
        self.coeff(k - self.nu_shift)
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, ParamCoeff> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, order: i32) -> Self {
        let order = order.min(self.order);
        let mut out = self.clone();
        out.order = order;
        out.coeffs.retain(|k, _| *k <= order);
        out
    }

    pub fn map(&self, f: impl Fn(&ParamCoeff) -> ParamCoeff) -> Self {
        let mut out = FormalScalar { coeffs: BTreeMap::new(), ..self.clone() };
        for (k, c) in &self.coeffs {
            out.set(*k, f(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map(|c| c.scale_rational(r))
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn param_diff(&self, p: Param) -> Self {
        self.map(|c| c.param_diff(p))
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        self.map(|c| c.eval(p, v))
    }

    pub fn param_integrate(&self, p: Param) -> Self {
        self.map(|c| c.param_integrate(p))
    }

    /// Re-expresses the series with another `ν` tag, moving the difference
    /// into the coefficient indices.
    pub fn retag(&self, nu_shift: i32) -> Self {
        let d = self.nu_shift - nu_shift;
        FormalScalar {
            pi_power: self.pi_power,
            nu_shift,
            coeffs: self.coeffs.iter().map(|(k, c)| (k + d, c.clone())).collect(),
            order: ord_add(self.order, d),
        }
    }

    /// Sum of two series with equal `π` tags.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.pi_power, other.pi_power, "adding series with different powers of pi");
        let shift = self.nu_shift.min(other.nu_shift);
        let (a, b) = (self.retag(shift), other.retag(shift));
        let mut out = FormalScalar::zero(a.order.min(b.order));
        out.pi_power = self.pi_power;
        out.nu_shift = shift;
        let keys: std::collections::BTreeSet<i32> = a.coeffs.keys().chain(b.coeffs.keys()).copied().collect();
        for k in keys {
            out.set(k, a.coeff(k).add(&b.coeff(k)));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Numerically identical up to the exact orders of both sides.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Canonical text of one coefficient with its `π` factor, e.g.
    /// `pi^2 * 1/2`.
    pub fn format_coeff(&self, c: &ParamCoeff) -> String {
        let body = c.to_string();
        match self.pi_power {
            0 => body,
            1 => format!("pi * {body}"),
            p => format!("pi^{p} * {body}"),
        }
    }

    /// `(absolute ν-power, text)` pairs in increasing order.
    pub fn to_strings(&self) -> Vec<(i32, String)> {
        self.coeffs.iter().map(|(k, c)| (k + self.nu_shift, self.format_coeff(c))).collect()
    }
}

impl fmt::Debug for FormalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = if self.order >= EXACT { "exact".to_string() } else { self.absolute_order().to_string() };
        write!(f, "FormalScalar(through nu^{order})")?;
        for (k, s) in self.to_strings() {
            write!(f, " [nu^{k}: {s}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_order_tracks_lowest_terms() {
        let f = FormalFunction::from_fn(ScalarFn::one(2)).truncate(3);
        let g = FormalFunction::monomial(2, ScalarFn::exp(2, &[1, 0])).truncate(4);
        let p = f.mul(&g);
        // unknown ν^4 part of f times the ν^2 part of g first matters at ν^6
        assert_eq!(p.order(), 4);
        assert_eq!(p.coeff(2), ScalarFn::exp(2, &[1, 0]));
    }

    #[test]
    fn integral_carries_pi() {
        let f = FormalFunction::from_fn(ScalarFn::rational(2, Rational::new(1, 8)));
        let s = f.integrate();
        assert_eq!(s.pi_power, 2);
        assert_eq!(s.to_strings(), vec![(0, "pi^2 * 1/2".to_string())]);
    }

    #[test]
    fn retag_preserves_value() {
        let mut s = FormalScalar::constant(ParamCoeff::one());
        s.nu_shift = -1;
        let r = s.retag(-3);
        assert_eq!(r.abs_coeff(-1), ParamCoeff::one());
        assert!(r.agrees_with(&s));
    }
}
