//! Formal Weyl algebra bundle with differential forms.
//!
//! An element is a finite sum of terms `f(x) ν^k y^α dx^I` where `f` is a
//! [`ScalarFn`]. The total degree of a term is `2k + |α|`; the fibrewise
//! product preserves it exactly, which is what makes truncation by degree
//! consistent.
//!
//! Each element records `order`, the total degree through which it is exact.
//! Operations combine orders conservatively (for example the product of two
//! elements is exact through `min(order_a + lowest_b, order_b + lowest_a)`),
//! so every stored term is trustworthy and callers can compare results
//! without extra bookkeeping. Elements whose order is [`EXACT`] are finite
//! sums known completely. Negative powers of `ν` (the extended algebra) are
//! allowed as long as every term keeps a nonnegative total degree.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::formal::{ord_add, ord_sub, FormalFunction, EXACT};
use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{Caps, Param, ScalarFn, MAX_COORDS};

pub type YExp = [u8; MAX_COORDS];

/// The standard symplectic form `ω = Σ_i dx^i ∧ dx^{n+i}` on `T^{2n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticData {
    n: usize,
}

impl SymplecticData {
    pub fn standard(n: usize) -> Self {
        assert!((1..=MAX_COORDS / 2).contains(&n), "half-dimension {n} out of range");
        SymplecticData { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `ω_{ij}`.
    pub fn omega(&self, i: usize, j: usize) -> i64 {
        let n = self.n;
        if i < n && j == i + n {
            1
        } else if j < n && i == j + n {
            -1
        } else {
            0
        }
    }

    /// `Λ^{ij}`, the inverse matrix of `ω_{ij}`.
    pub fn lambda(&self, i: usize, j: usize) -> i64 {
        -self.omega(i, j)
    }
}

/// Monomial label `ν^nu y^y dx^{dx}`; `dx` is a bit mask of coordinate
/// indices in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeylKey {
    pub nu: i16,
    pub y: YExp,
    pub dx: u8,
}

impl WeylKey {
    pub fn new(nu: i16, y: &[u8], dx: &[usize]) -> Self {
        let mut e = [0u8; MAX_COORDS];
        e[..y.len()].copy_from_slice(y);
        let mut mask = 0u8;
        for i in dx {
            assert!(mask & (1 << i) == 0, "repeated form index");
            mask |= 1 << i;
        }
        WeylKey { nu, y: e, dx: mask }
    }

    pub fn y_degree(&self) -> i32 {
        self.y.iter().map(|v| *v as i32).sum()
    }

    pub fn degree(&self) -> i32 {
        2 * self.nu as i32 + self.y_degree()
    }

    pub fn form_degree(&self) -> u32 {
        self.dx.count_ones()
    }

    /// Central in the fibre: no `y` at all.
    pub fn is_central(&self) -> bool {
        self.y.iter().all(|v| *v == 0)
    }
}

/// Sign of `dx^I ∧ dx^J` relative to the sorted basis form, or `None` when the
/// index sets overlap.
pub fn wedge_sign(i: u8, j: u8) -> Option<i64> {
    if i & j != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut jj = j;
    while jj != 0 {
        let b = jj.trailing_zeros();
        swaps += (i >> (b + 1)).count_ones();
        jj &= jj - 1;
    }
    Some(if swaps.is_multiple_of(2) { 1 } else { -1 })
}

/// One term of the Moyal expansion of `y^α ∘ y^β`: `coeff ν^m y^out`.
#[derive(Debug, Clone)]
struct MoyalTerm {
    m: u8,
    out: YExp,
    coeff: Rational,
}

type MoyalCacheKey = (u8, YExp, YExp);

thread_local! {
    static MOYAL_CACHE: RefCell<HashMap<MoyalCacheKey, Rc<Vec<MoyalTerm>>>> = RefCell::new(HashMap::new());
}

fn exp_add(a: &YExp, b: &YExp) -> YExp {
    let mut out = [0u8; MAX_COORDS];
    for i in 0..MAX_COORDS {
        out[i] = a[i] + b[i];
    }
    out
}

/// `Σ_m (1/m!) (ν/2)^m (Λ^{ij} ∂_{y^i} ∂_{z^j})^m y^α z^β |_{z=y}`.
fn moyal_terms(sym: &SymplecticData, a: &YExp, b: &YExp) -> Rc<Vec<MoyalTerm>> {
    let key = (sym.n as u8, *a, *b);
    if let Some(hit) = MOYAL_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let dim = sym.dim();
    let mut out: Vec<MoyalTerm> = Vec::new();
    let mut state: BTreeMap<(YExp, YExp), Rational> = BTreeMap::new();
    state.insert((*a, *b), Rational::one());
    let mut m = 0u8;
    let mut factor = Rational::one();
    while !state.is_empty() {
        let mut merged: BTreeMap<YExp, Rational> = BTreeMap::new();
        for ((p, q), c) in &state {
            let e = merged.entry(exp_add(p, q)).or_default();
            *e += &(c * &factor);
        }
        for (o, c) in merged {
            if !c.is_zero() {
                out.push(MoyalTerm { m, out: o, coeff: c });
            }
        }
        let mut next: BTreeMap<(YExp, YExp), Rational> = BTreeMap::new();
        for ((p, q), c) in &state {
            for i in 0..dim {
                if p[i] == 0 {
                    continue;
                }
                for j in 0..dim {
                    let l = sym.lambda(i, j);
                    if l == 0 || q[j] == 0 {
                        continue;
                    }
                    let (mut p2, mut q2) = (*p, *q);
                    p2[i] -= 1;
                    q2[j] -= 1;
                    let w = Rational::from_int(l * p[i] as i64 * q[j] as i64);
                    let e = next.entry((p2, q2)).or_default();
                    *e += &(c * &w);
                }
            }
        }
        next.retain(|_, c| !c.is_zero());
        state = next;
        m += 1;
        factor = &factor * &Rational::new(1, 2 * m as i64);
    }
    let rc = Rc::new(out);
    MOYAL_CACHE.with(|c| c.borrow_mut().insert(key, rc.clone()));
    rc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Product {
    Circ,
    /// Graded commutator: only odd contraction counts survive, doubled.
    Bracket,
    /// `circ` restricted to the `y`-free, form-degree-0 output.
    Symbol,
    /// `Bracket` restricted the same way.
    BracketSymbol,
}

/// Element of the (possibly extended) Weyl algebra bundle tensored with forms.
#[derive(Clone)]
pub struct WeylElement {
    sym: SymplecticData,
    order: i32,
    truncated: bool,
    terms: BTreeMap<WeylKey, ScalarFn>,
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        self.sym == other.sym && self.terms == other.terms
    }
}

impl WeylElement {
    pub fn zero(sym: SymplecticData, order: i32) -> Self {
        WeylElement { sym, order, truncated: false, terms: BTreeMap::new() }
    }

    pub fn one(sym: SymplecticData) -> Self {
        WeylElement::scalar(sym, ScalarFn::one(sym.dim()))
    }

    /// A function of `x` alone (exact).
    pub fn scalar(sym: SymplecticData, f: ScalarFn) -> Self {
        WeylElement::term(sym, WeylKey::new(0, &[], &[]), f)
    }

    /// A single term (exact).
    pub fn term(sym: SymplecticData, key: WeylKey, f: ScalarFn) -> Self {
        let mut e = WeylElement::zero(sym, EXACT);
        e.add_term(key, f);
        e
    }

    /// The fibre coordinate `y^i` (exact).
    pub fn y(sym: SymplecticData, i: usize) -> Self {
        let mut e = [0u8; MAX_COORDS];
        e[i] = 1;
        WeylElement::term(sym, WeylKey { nu: 0, y: e, dx: 0 }, ScalarFn::one(sym.dim()))
    }

    /// `Σ_k ν^k F_k` as a `y`-free element.
    pub fn from_formal(sym: SymplecticData, f: &FormalFunction) -> Self {
        let order = if f.order() >= EXACT { EXACT } else { 2 * f.order() + 1 };
        let mut e = WeylElement::zero(sym, order);
        for (k, c) in f.coeffs() {
            e.add_term(WeylKey::new(*k as i16, &[], &[]), c.clone());
        }
        e
    }

    pub fn sym(&self) -> SymplecticData {
        self.sym
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    /// Total degree through which the element is exact.
    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<WeylKey, ScalarFn> {
        &self.terms
    }

    pub fn get(&self, key: &WeylKey) -> Option<&ScalarFn> {
        self.terms.get(key)
    }

    pub fn coeff(&self, key: &WeylKey) -> ScalarFn {
        self.terms.get(key).cloned().unwrap_or_else(|| ScalarFn::zero(self.dim()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether any term carries a negative power of `ν`.
    pub fn is_extended(&self) -> bool {
        self.terms.keys().any(|k| k.nu < 0)
    }

    /// Whether a parameter cap was hit anywhere upstream.
    pub fn is_truncated(&self) -> bool {
        self.truncated || self.terms.values().any(|f| f.is_truncated())
    }

    /// Adds `f · key`, dropping it when past the order.
    pub fn add_term(&mut self, key: WeylKey, f: ScalarFn) {
        debug_assert!(key.degree() >= 0, "negative total degree");
        if key.degree() > self.order {
            return;
        }
        self.truncated |= f.is_truncated();
        match self.terms.get_mut(&key) {
            Some(acc) => {
                let sum = acc.add(&f);
                self.truncated |= sum.is_truncated();
                if sum.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *acc = sum;
                }
            }
            None => {
                if !f.is_zero() {
                    self.terms.insert(key, f);
                }
            }
        }
    }

    /// Lowest total degree that may be nonzero, counting the unknown tail.
    pub fn min_degree(&self) -> i32 {
        let tail = ord_add(self.order, 1);
        self.terms.keys().map(|k| k.degree()).min().unwrap_or(tail).min(tail)
    }

    /// As [`WeylElement::min_degree`] but ignoring central (`y`-free) terms,
    /// which drop out of every commutator.
    pub fn noncentral_min_degree(&self) -> i32 {
        let tail = ord_add(self.order, 1);
        self.terms.keys().filter(|k| !k.is_central()).map(|k| k.degree()).min().unwrap_or(tail).min(tail)
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.degree()).max()
    }

    /// Drops everything above `order`.
    pub fn truncate(&self, order: i32) -> Self {
        let order = order.min(self.order);
        self.filter(order, |k| k.degree() <= order)
    }

    /// Declares the element exact through `order`. Callers use this when they
    /// know more than the conservative bookkeeping, e.g. for polynomials.
    pub fn with_order(mut self, order: i32) -> Self {
        self.order = order;
        self.terms.retain(|k, _| k.degree() <= order);
        self
    }

    fn filter(&self, order: i32, keep: impl Fn(&WeylKey) -> bool) -> Self {
        WeylElement {
            sym: self.sym,
            order,
            truncated: self.truncated,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, f)| (*k, f.clone())).collect(),
        }
    }

    /// Homogeneous component of total degree `d`, as an exact element.
    pub fn degree_part(&self, d: i32) -> Self {
        assert!(d <= self.order, "degree {d} lies past the exact order {}", self.order);
        self.filter(EXACT, |k| k.degree() == d)
    }

    /// Component of form degree `q`.
    pub fn form_part(&self, q: u32) -> Self {
        self.filter(self.order, |k| k.form_degree() == q)
    }

    pub fn map_coeffs(&self, f: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = WeylElement::zero(self.sym, self.order);
        out.truncated = self.truncated;
        for (k, c) in &self.terms {
            out.add_term(*k, f(c));
        }
        out
    }

    fn check_compatible(&self, other: &Self) {
        assert_eq!(self.sym, other.sym, "Weyl elements over different symplectic data");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.truncate(self.order.min(other.order));
        out.truncated |= other.truncated;
        for (k, f) in &other.terms {
            out.add_term(*k, f.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|f| f.neg())
    }

    pub fn scale(&self, g: &Gauss) -> Self {
        self.map_coeffs(|f| f.scale(g))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map_coeffs(|f| f.scale_rational(r))
    }

    /// Coefficientwise multiplication by a function of `x` (central in the
    /// fibre).
    pub fn mul_fn(&self, g: &ScalarFn) -> Self {
        self.map_coeffs(|f| f.mul(g))
    }

    /// Multiplication by `ν^k`.
    pub fn shift_nu(&self, k: i32) -> Self {
        let mut out = WeylElement::zero(self.sym, ord_add(self.order, 2 * k));
        out.truncated = self.truncated;
        for (key, f) in &self.terms {
            let nk = WeylKey { nu: key.nu + k as i16, ..*key };
            out.add_term(nk, f.clone());
        }
        out
    }

    fn product(&self, other: &Self, kind: Product, max_degree: i32) -> BTreeMap<WeylKey, ScalarFn> {
        self.check_compatible(other);
        let sym = self.sym;
        let mut by_degree: Vec<(i32, &WeylKey, &ScalarFn)> = other.terms.iter().map(|(k, f)| (k.degree(), k, f)).collect();
        by_degree.sort_by_key(|(d, _, _)| *d);
        let mut acc: BTreeMap<WeylKey, Vec<ScalarFn>> = BTreeMap::new();
        for (ka, fa) in &self.terms {
            let symbol_only = matches!(kind, Product::Symbol | Product::BracketSymbol);
            let bracket = matches!(kind, Product::Bracket | Product::BracketSymbol);
            if symbol_only && ka.dx != 0 {
                continue;
            }
            if bracket && ka.is_central() {
                continue;
            }
            let da = ka.degree();
            for (db, kb, fb) in &by_degree {
                if da + db > max_degree {
                    break;
                }
                let sign = match wedge_sign(ka.dx, kb.dx) {
                    Some(s) => s,
                    None => continue,
                };
                if symbol_only && (kb.dx != 0 || ka.y_degree() != kb.y_degree()) {
                    continue;
                }
                if bracket && kb.is_central() {
                    continue;
                }
                let table = moyal_terms(&sym, &ka.y, &kb.y);
                let mut prod: Option<ScalarFn> = None;
                for term in table.iter() {
                    if symbol_only && term.out.iter().any(|v| *v != 0) {
                        continue;
                    }
                    let c = match (bracket, term.m % 2) {
                        (false, _) => term.coeff.clone(),
                        (true, 1) => &term.coeff * &Rational::from_int(2),
                        (true, _) => continue,
                    };
                    let c = if sign < 0 { -c } else { c };
                    let p = prod.get_or_insert_with(|| fa.mul(fb));
                    let key = WeylKey { nu: ka.nu + kb.nu + term.m as i16, y: term.out, dx: ka.dx | kb.dx };
                    acc.entry(key).or_default().push(p.scale_rational(&c));
                }
            }
        }
        acc.into_iter()
            .filter_map(|(k, parts)| {
                let sum = sum_fns(sym.dim(), parts);
                (!sum.is_zero() || sum.is_truncated()).then_some((k, sum))
            })
            .collect()
    }

    fn from_product(sym: SymplecticData, order: i32, terms: BTreeMap<WeylKey, ScalarFn>, truncated: bool) -> Self {
        let mut out = WeylElement::zero(sym, order);
        out.truncated = truncated;
        for (k, f) in terms {
            out.add_term(k, f);
        }
        out
    }

    /// Fibrewise Moyal product `a ∘ b`, with forms multiplied by wedge.
    pub fn circ(&self, other: &Self) -> Self {
        let order = ord_add(self.order, other.min_degree()).min(ord_add(other.order, self.min_degree()));
        let terms = self.product(other, Product::Circ, order);
        WeylElement::from_product(self.sym, order, terms, self.truncated | other.truncated)
    }

    /// Graded commutator `[a, b] = a∘b - (-1)^{q_a q_b} b∘a`.
    pub fn bracket(&self, other: &Self) -> Self {
        let order = ord_add(self.order, other.noncentral_min_degree()).min(ord_add(other.order, self.noncentral_min_degree()));
        let terms = self.product(other, Product::Bracket, order);
        WeylElement::from_product(self.sym, order, terms, self.truncated | other.truncated)
    }

    /// `(1/ν)[a, b]`.
    pub fn bracket_over_nu(&self, other: &Self) -> Self {
        self.bracket(other).shift_nu(-1)
    }

    /// `σ(a ∘ b)` computed without forming the full product.
    pub fn circ_symbol(&self, other: &Self) -> FormalFunction {
        let order = ord_add(self.order, other.min_degree()).min(ord_add(other.order, self.min_degree()));
        let terms = self.product(other, Product::Symbol, order);
        WeylElement::from_product(self.sym, order, terms, false).symbol()
    }

    /// `σ([a, b])` computed without forming the full product.
    pub fn bracket_symbol(&self, other: &Self) -> FormalFunction {
        let order = ord_add(self.order, other.noncentral_min_degree()).min(ord_add(other.order, self.noncentral_min_degree()));
        let terms = self.product(other, Product::BracketSymbol, order);
        WeylElement::from_product(self.sym, order, terms, false).symbol()
    }

    /// Symbol: the `y`-free, form-degree-0 part, as a series in `ν`.
    pub fn symbol(&self) -> FormalFunction {
        let order = if self.order >= EXACT { EXACT } else { self.order.div_euclid(2) };
        let mut out = FormalFunction::zero(self.dim(), order);
        for (k, f) in &self.terms {
            if k.dx == 0 && k.is_central() {
                out.set(k.nu as i32, f.clone());
            }
        }
        out
    }

    /// Exterior derivative acting on the `x`-dependence.
    pub fn exterior_d(&self) -> Self {
        let mut out = WeylElement::zero(self.sym, self.order);
        out.truncated = self.truncated;
        for (k, f) in &self.terms {
            for j in 0..self.dim() {
                let sign = match wedge_sign(1 << j, k.dx) {
                    Some(s) => s,
                    None => continue,
                };
                let df = f.partial(j);
                if df.is_zero() {
                    continue;
                }
                let df = if sign < 0 { df.neg() } else { df };
                out.add_term(WeylKey { dx: k.dx | (1 << j), ..*k }, df);
            }
        }
        out
    }

    /// `δa = dx^k ∧ ∂a/∂y^k`.
    pub fn delta(&self) -> Self {
        let mut out = WeylElement::zero(self.sym, ord_sub(self.order, 1));
        out.truncated = self.truncated;
        for (k, f) in &self.terms {
            for j in 0..self.dim() {
                if k.y[j] == 0 {
                    continue;
                }
                let sign = match wedge_sign(1 << j, k.dx) {
                    Some(s) => s,
                    None => continue,
                };
                let mut y = k.y;
                y[j] -= 1;
                let c = Rational::from_int(sign * k.y[j] as i64);
                out.add_term(WeylKey { nu: k.nu, y, dx: k.dx | (1 << j) }, f.scale_rational(&c));
            }
        }
        out
    }

    /// `δ^{-1}a = (1/(p+q)) y^k ι(∂_{x^k}) a` on the part of `y`-degree `p`
    /// and form degree `q`; zero when `p + q = 0`.
    pub fn delta_inv(&self) -> Self {
        let mut out = WeylElement::zero(self.sym, ord_add(self.order, 1));
        out.truncated = self.truncated;
        for (k, f) in &self.terms {
            let pq = k.y_degree() + k.form_degree() as i32;
            if pq == 0 || k.dx == 0 {
                continue;
            }
            let mut position = 0;
            for j in 0..self.dim() {
                if k.dx & (1 << j) == 0 {
                    continue;
                }
                let sign = if position % 2 == 0 { 1 } else { -1 };
                position += 1;
                let mut y = k.y;
                y[j] += 1;
                let c = Rational::new(sign, pq as i64);
                out.add_term(WeylKey { nu: k.nu, y, dx: k.dx & !(1 << j) }, f.scale_rational(&c));
            }
        }
        out
    }

    /// Interior product `ι(X)` with a vector field given by its components.
    pub fn interior(&self, x: &[ScalarFn]) -> Self {
        assert_eq!(x.len(), self.dim());
        let mut out = WeylElement::zero(self.sym, self.order);
        out.truncated = self.truncated;
        for (k, f) in &self.terms {
            let mut position = 0;
            for (j, xj) in x.iter().enumerate() {
                if k.dx & (1 << j) == 0 {
                    continue;
                }
                let sign = if position % 2 == 0 { 1 } else { -1 };
                position += 1;
                let g = f.mul(xj);
                let g = if sign < 0 { g.neg() } else { g };
                out.add_term(WeylKey { dx: k.dx & !(1 << j), ..*k }, g);
            }
        }
        out
    }

    /// Projection onto `y`-degree 0 and form degree 0 (all powers of `ν`).
    pub fn project_00(&self) -> Self {
        self.filter(self.order, |k| k.is_central() && k.dx == 0)
    }

    pub fn param_diff(&self, p: Param) -> Self {
        self.map_coeffs(|f| f.param_diff(p))
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        self.map_coeffs(|f| f.param_eval(p, v))
    }

    pub fn param_integrate(&self, p: Param) -> Self {
        self.map_coeffs(|f| f.param_integrate(p))
    }

    pub fn param_coeff(&self, p: Param, k: u8) -> Self {
        self.map_coeffs(|f| f.param_coeff(p, k))
    }

    pub fn with_caps(&self, caps: Caps) -> Self {
        self.map_coeffs(|f| f.with_caps(caps))
    }

    /// Largest `|k_j|` in any coefficient.
    pub fn max_freq(&self) -> i64 {
        self.terms.values().map(|f| f.max_freq()).max().unwrap_or(0)
    }
}

fn sum_fns(dim: usize, mut parts: Vec<ScalarFn>) -> ScalarFn {
    // pairwise summation keeps the merge cost near n log n
    if parts.is_empty() {
        return ScalarFn::zero(dim);
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.add(&b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().unwrap()
}

impl fmt::Debug for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = if self.order >= EXACT { "exact".to_string() } else { self.order.to_string() };
        writeln!(f, "WeylElement(order {order}, {} terms)", self.terms.len())?;
        let d = self.dim();
        for (k, c) in &self.terms {
            let forms: Vec<usize> = (0..d).filter(|j| k.dx & (1 << j) != 0).collect();
            writeln!(f, "  nu^{} y^{:?} dx{:?}: {:?}", k.nu, &k.y[..d], forms, c)?;
        }
        Ok(())
    }
}
