//! Coefficient ring for everything above: trigonometric polynomials on the
//! torus `T^{2n}` whose Fourier coefficients are polynomials (or jets) in two
//! formal parameters `t`, `s` over Q(i).
//!
//! A [`ParamCoeff`] carries degree caps. A cap of `c` in `t` means the value is
//! only known modulo `t^{c+1}`; products that would produce higher powers drop
//! them and raise the `truncated` flag. Caps of [`UNBOUNDED`] give genuine
//! polynomials. Derivatives at zero of a jet are exact whatever the flag says;
//! evaluating a flagged value away from zero is not.

use std::cmp::Ordering;
use std::fmt;

use smallvec::{smallvec, SmallVec};

use crate::rational::{Gauss, Rational};

/// Largest supported number of torus coordinates (so `n <= 3`).
pub const MAX_COORDS: usize = 6;
pub const UNBOUNDED: u8 = u8::MAX;

pub type Freq = [i16; MAX_COORDS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Caps {
    pub t: u8,
    pub s: u8,
}

impl Caps {
    pub const UNBOUNDED: Caps = Caps { t: UNBOUNDED, s: UNBOUNDED };

    pub fn new(t: u8, s: u8) -> Self {
        Caps { t, s }
    }

    pub fn min(self, other: Caps) -> Caps {
        Caps { t: self.t.min(other.t), s: self.s.min(other.s) }
    }

    fn admits(self, (dt, ds): (u8, u8)) -> bool {
        dt <= self.t && ds <= self.s
    }

    fn get(self, p: Param) -> u8 {
        match p {
            Param::T => self.t,
            Param::S => self.s,
        }
    }

    fn with(self, p: Param, v: u8) -> Caps {
        match p {
            Param::T => Caps { t: v, ..self },
            Param::S => Caps { s: v, ..self },
        }
    }
}

type Pow = (u8, u8);

fn pow_of(p: Param, (t, s): Pow) -> u8 {
    match p {
        Param::T => t,
        Param::S => s,
    }
}

fn pow_with(p: Param, (t, s): Pow, v: u8) -> Pow {
    match p {
        Param::T => (v, s),
        Param::S => (t, v),
    }
}

/// Polynomial (or truncated jet) in `t`, `s` with Gaussian-rational
/// coefficients.
#[derive(Clone)]
pub struct ParamCoeff {
    terms: SmallVec<[(Pow, Gauss); 1]>,
    caps: Caps,
    truncated: bool,
}

impl PartialEq for ParamCoeff {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for ParamCoeff {}

impl Default for ParamCoeff {
    fn default() -> Self {
        ParamCoeff::zero()
    }
}

impl ParamCoeff {
    pub fn zero() -> Self {
        ParamCoeff { terms: SmallVec::new(), caps: Caps::UNBOUNDED, truncated: false }
    }

    pub fn constant(c: Gauss) -> Self {
        ParamCoeff::monomial(c, 0, 0)
    }

    pub fn rational(r: Rational) -> Self {
        ParamCoeff::constant(Gauss::real(r))
    }

    pub fn one() -> Self {
        ParamCoeff::constant(Gauss::one())
    }

    /// `c t^a s^b`.
    pub fn monomial(c: Gauss, a: u8, b: u8) -> Self {
        if c.is_zero() {
            ParamCoeff::zero()
        } else {
            ParamCoeff { terms: smallvec![((a, b), c)], caps: Caps::UNBOUNDED, truncated: false }
        }
    }

    /// The parameter itself, `t` or `s`.
    pub fn param(p: Param) -> Self {
        match p {
            Param::T => ParamCoeff::monomial(Gauss::one(), 1, 0),
            Param::S => ParamCoeff::monomial(Gauss::one(), 0, 1),
        }
    }

    /// Reinterprets the value modulo the given caps; higher terms are dropped
    /// and flagged.
    pub fn with_caps(mut self, caps: Caps) -> Self {
        let caps = self.caps.min(caps);
        let before = self.terms.len();
        self.terms.retain(|(p, _)| caps.admits(*p));
        self.truncated |= self.terms.len() != before;
        self.caps = caps;
        self
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(p, _)| *p == (0, 0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (u8, u8, &Gauss)> {
        self.terms.iter().map(|((a, b), c)| (*a, *b, c))
    }

    /// Coefficient of `t^a s^b`.
    pub fn coeff(&self, a: u8, b: u8) -> Gauss {
        self.terms
            .iter()
            .find(|(p, _)| *p == (a, b))
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }

    pub fn constant_term(&self) -> Gauss {
        self.coeff(0, 0)
    }

    pub fn degree(&self, p: Param) -> Option<u8> {
        self.terms.iter().map(|(q, _)| pow_of(p, *q)).max()
    }

    fn from_unsorted(mut raw: Vec<(Pow, Gauss)>, caps: Caps, truncated: bool) -> Self {
        raw.sort_by_key(|a| a.0);
        let mut terms: SmallVec<[(Pow, Gauss); 1]> = SmallVec::new();
        for (p, c) in raw {
            match terms.last_mut() {
                Some((q, acc)) if *q == p => *acc += &c,
                _ => terms.push((p, c)),
            }
        }
        terms.retain(|(_, c)| !c.is_zero());
        ParamCoeff { terms, caps, truncated }
    }

    pub fn add(&self, other: &ParamCoeff) -> ParamCoeff {
        if other.is_zero() && other.caps == Caps::UNBOUNDED && !other.truncated {
            return self.clone();
        }
        if self.is_zero() && self.caps == Caps::UNBOUNDED && !self.truncated {
            return other.clone();
        }
        let caps = self.caps.min(other.caps);
        let mut truncated = self.truncated | other.truncated;
        let mut out: SmallVec<[(Pow, Gauss); 1]> = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            let (p, c) = match ord {
                Ordering::Less => {
                    i += 1;
                    (a[i - 1].0, a[i - 1].1.clone())
                }
                Ordering::Greater => {
                    j += 1;
                    (b[j - 1].0, b[j - 1].1.clone())
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (a[i - 1].0, &a[i - 1].1 + &b[j - 1].1)
                }
            };
            if c.is_zero() {
                continue;
            }
            if caps.admits(p) {
                out.push((p, c));
            } else {
                truncated = true;
            }
        }
        ParamCoeff { terms: out, caps, truncated }
    }

    pub fn neg(&self) -> ParamCoeff {
        ParamCoeff {
            terms: self.terms.iter().map(|(p, c)| (*p, -c)).collect(),
            caps: self.caps,
            truncated: self.truncated,
        }
    }

    pub fn sub(&self, other: &ParamCoeff) -> ParamCoeff {
        self.add(&other.neg())
    }

    pub fn scale(&self, g: &Gauss) -> ParamCoeff {
        if g.is_zero() {
            return ParamCoeff { terms: SmallVec::new(), caps: self.caps, truncated: self.truncated };
        }
        ParamCoeff {
            terms: self.terms.iter().map(|(p, c)| (*p, c * g)).collect(),
            caps: self.caps,
            truncated: self.truncated,
        }
    }

    pub fn scale_rational(&self, r: &Rational) -> ParamCoeff {
        if r.is_one() {
            return self.clone();
        }
        ParamCoeff {
            terms: self.terms.iter().map(|(p, c)| (*p, c.scale(r))).filter(|(_, c)| !c.is_zero()).collect(),
            caps: self.caps,
            truncated: self.truncated,
        }
    }

    pub fn mul(&self, other: &ParamCoeff) -> ParamCoeff {
        let caps = self.caps.min(other.caps);
        let mut truncated = self.truncated | other.truncated;
        if self.terms.len() == 1 && other.terms.len() == 1 {
            let ((pa, ca), (pb, cb)) = (&self.terms[0], &other.terms[0]);
            let p = (pa.0 + pb.0, pa.1 + pb.1);
            if caps.admits(p) {
                return ParamCoeff { terms: smallvec![(p, ca * cb)], caps, truncated };
            }
            return ParamCoeff { terms: SmallVec::new(), caps, truncated: true };
        }
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let p = (pa.0 + pb.0, pa.1 + pb.1);
                if caps.admits(p) {
                    raw.push((p, ca * cb));
                } else {
                    truncated = true;
                }
            }
        }
        ParamCoeff::from_unsorted(raw, caps, truncated)
    }

    pub fn conj(&self) -> ParamCoeff {
        ParamCoeff {
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
            caps: self.caps,
            truncated: self.truncated,
        }
    }

    /// Formal derivative in one parameter. The cap in that parameter drops by
    /// one, since a jet modulo `t^{c+1}` has derivative known modulo `t^c`.
    pub fn param_diff(&self, p: Param) -> ParamCoeff {
        let caps = self.caps;
        let new_cap = match caps.get(p) {
            UNBOUNDED => UNBOUNDED,
            c => c.saturating_sub(1),
        };
        let mut truncated = self.truncated;
        if caps.get(p) == 0 {
            // nothing is known about the derivative
            truncated = true;
            return ParamCoeff { terms: SmallVec::new(), caps: caps.with(p, 0), truncated };
        }
        let terms = self
            .terms
            .iter()
            .filter(|(q, _)| pow_of(p, *q) > 0)
            .map(|(q, c)| {
                let k = pow_of(p, *q);
                (pow_with(p, *q, k - 1), c.scale(&Rational::from_int(k as i64)))
            })
            .collect();
        ParamCoeff { terms, caps: caps.with(p, new_cap), truncated }
    }

    /// `∫_0^p` in one parameter (the cap rises by one).
    pub fn param_integrate(&self, p: Param) -> ParamCoeff {
        let caps = self.caps;
        let new_cap = match caps.get(p) {
            UNBOUNDED => UNBOUNDED,
            c => c.saturating_add(1).min(UNBOUNDED - 1),
        };
        let terms = self
            .terms
            .iter()
            .map(|(q, c)| {
                let k = pow_of(p, *q);
                (pow_with(p, *q, k + 1), c.scale(&Rational::new(1, k as i64 + 1)))
            })
            .collect();
        ParamCoeff { terms, caps: caps.with(p, new_cap), truncated: self.truncated }
    }

    /// Substitutes a rational value for one parameter.
    pub fn eval(&self, p: Param, value: &Rational) -> ParamCoeff {
        let raw = self
            .terms
            .iter()
            .map(|(q, c)| (pow_with(p, *q, 0), c.scale(&value.pow(pow_of(p, *q) as u32))))
            .collect();
        ParamCoeff::from_unsorted(raw, self.caps.with(p, UNBOUNDED), self.truncated)
    }

    /// Keeps the `p^k` coefficient (as a function of the other parameter).
    pub fn param_coeff(&self, p: Param, k: u8) -> ParamCoeff {
        let terms = self
            .terms
            .iter()
            .filter(|(q, _)| pow_of(p, *q) == k)
            .map(|(q, c)| (pow_with(p, *q, 0), c.clone()))
            .collect();
        ParamCoeff { terms, caps: self.caps.with(p, UNBOUNDED), truncated: self.truncated }
    }
}

impl fmt::Display for ParamCoeff {
    /// Canonical exact text, e.g. `1/2`, `(1/3)*t + (-1)*t*s`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((a, b), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono = match (a, b) {
                (0, 0) => String::new(),
                _ => {
                    let mut m = Vec::new();
                    match a {
                        0 => {}
                        1 => m.push("t".to_string()),
                        k => m.push(format!("t^{k}")),
                    }
                    match b {
                        0 => {}
                        1 => m.push("s".to_string()),
                        k => m.push(format!("s^{k}")),
                    }
                    m.join("*")
                }
            };
            if mono.is_empty() {
                write!(f, "{c}")?;
            } else {
                write!(f, "({c})*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ParamCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("coefficients are not conjugate-symmetric, so the function is not real-valued")]
    NotReal,
    #[error("frequency {0:?} does not fit the torus dimension {1}")]
    BadFrequency(Vec<i64>, usize),
}

/// Trigonometric polynomial `Σ_k c_k e^{i k·x}` on `T^{dim}` with
/// [`ParamCoeff`] coefficients, stored sparsely and sorted by frequency.
#[derive(Clone)]
pub struct ScalarFn {
    dim: u8,
    terms: Vec<(Freq, ParamCoeff)>,
    real: bool,
    truncated: bool,
}

impl PartialEq for ScalarFn {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl Eq for ScalarFn {}

fn freq_add(a: &Freq, b: &Freq) -> Freq {
    let mut out = [0i16; MAX_COORDS];
    for i in 0..MAX_COORDS {
        out[i] = a[i] + b[i];
    }
    out
}

fn freq_neg(a: &Freq) -> Freq {
    let mut out = *a;
    for v in out.iter_mut() {
        *v = -*v;
    }
    out
}

pub fn freq_from_slice(k: &[i64]) -> Freq {
    let mut out = [0i16; MAX_COORDS];
    for (o, v) in out.iter_mut().zip(k) {
        *o = *v as i16;
    }
    out
}

impl ScalarFn {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_COORDS, "torus dimension {dim} exceeds {MAX_COORDS}");
        ScalarFn { dim: dim as u8, terms: Vec::new(), real: true, truncated: false }
    }

    pub fn constant(dim: usize, c: ParamCoeff) -> Self {
        ScalarFn::monomial(dim, [0; MAX_COORDS], c)
    }

    pub fn rational(dim: usize, r: Rational) -> Self {
        ScalarFn::constant(dim, ParamCoeff::rational(r))
    }

    pub fn one(dim: usize) -> Self {
        ScalarFn::rational(dim, Rational::one())
    }

    /// `c e^{i k·x}`.
    pub fn monomial(dim: usize, k: Freq, c: ParamCoeff) -> Self {
        let mut f = ScalarFn::zero(dim);
        debug_assert!(k[dim..].iter().all(|v| *v == 0));
        let real = k.iter().all(|v| *v == 0) && c.terms().all(|(_, _, g)| g.is_real());
        if !c.is_zero() {
            f.terms.push((k, c));
        }
        f.real = real || f.terms.is_empty();
        f
    }

    /// `e^{i k·x}`.
    pub fn exp(dim: usize, k: &[i64]) -> Self {
        ScalarFn::monomial(dim, freq_from_slice(k), ParamCoeff::one())
    }

    /// Builds from (frequency, coefficient) pairs, summing duplicates.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Freq, ParamCoeff)>) -> Self {
        let mut raw: Vec<(Freq, ParamCoeff)> = terms.into_iter().collect();
        raw.sort_by_key(|a| a.0);
        let mut out: Vec<(Freq, ParamCoeff)> = Vec::with_capacity(raw.len());
        for (k, c) in raw {
            match out.last_mut() {
                Some((q, acc)) if *q == k => *acc = acc.add(&c),
                _ => out.push((k, c)),
            }
        }
        let truncated = out.iter().any(|(_, c)| c.is_truncated());
        out.retain(|(_, c)| !c.is_zero());
        let mut f = ScalarFn { dim: dim as u8, terms: out, real: false, truncated };
        f.real = f.check_real();
        f
    }

    /// Like [`ScalarFn::from_terms`] but rejects data that is not
    /// real-valued, and marks the result as real.
    pub fn real_from_terms(dim: usize, terms: impl IntoIterator<Item = (Freq, ParamCoeff)>) -> Result<Self, ScalarError> {
        let f = ScalarFn::from_terms(dim, terms);
        if f.real {
            Ok(f)
        } else {
            Err(ScalarError::NotReal)
        }
    }

    fn check_real(&self) -> bool {
        self.terms.iter().all(|(k, c)| match self.get(&freq_neg(k)) {
            Some(d) => *d == c.conj(),
            None => false,
        })
    }

    /// Whether the value is known to be real (flag set by construction or
    /// preserved through operations).
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Recomputes realness from the coefficients.
    pub fn verify_real(&self) -> bool {
        self.check_real()
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
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

    pub fn terms(&self) -> &[(Freq, ParamCoeff)] {
        &self.terms
    }

    pub fn get(&self, k: &Freq) -> Option<&ParamCoeff> {
        self.terms.binary_search_by(|(q, _)| q.cmp(k)).ok().map(|i| &self.terms[i].1)
    }

    pub fn coeff(&self, k: &Freq) -> ParamCoeff {
        self.get(k).cloned().unwrap_or_default()
    }

    /// Zeroth Fourier coefficient, i.e. the mean over the torus.
    pub fn mean(&self) -> ParamCoeff {
        self.coeff(&[0; MAX_COORDS])
    }

    /// `∫_{T^{dim}} f dx` divided by `π^{dim}`; the `π^{dim}` factor is left
    /// to the caller so that everything stays rational.
    pub fn integral_over_pi_power(&self) -> ParamCoeff {
        self.mean().scale_rational(&Rational::from_int(1i64 << self.dim))
    }

    /// Largest `|k_j|` over the support.
    pub fn max_freq(&self) -> i64 {
        self.terms.iter().flat_map(|(k, _)| k.iter().map(|v| (*v as i64).abs())).max().unwrap_or(0)
    }

    /// Largest `|k_j|` for one coordinate.
    pub fn max_freq_in(&self, j: usize) -> i64 {
        self.terms.iter().map(|(k, _)| (k[j] as i64).abs()).max().unwrap_or(0)
    }

    /// Diagnostic only: whether the support is wider than `cap`.
    pub fn exceeds_soft_cap(&self, cap: i64) -> bool {
        self.max_freq() > cap
    }

    /// Whether any parameter cap was hit while producing this value.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    fn map_coeffs(&self, real: bool, f: impl Fn(&Freq, &ParamCoeff) -> ParamCoeff) -> ScalarFn {
        let mut truncated = self.truncated;
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(k, c)| (*k, f(k, c)))
            .filter(|(_, c)| {
                truncated |= c.is_truncated();
                !c.is_zero()
            })
            .collect();
        ScalarFn { dim: self.dim, terms, real, truncated }
    }

    pub fn add(&self, other: &ScalarFn) -> ScalarFn {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut truncated = self.truncated | other.truncated;
        let (a, b) = (&self.terms, &other.terms);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = a[i].1.add(&b[j].1);
                    truncated |= c.is_truncated();
                    if !c.is_zero() {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        ScalarFn { dim: self.dim, terms: out, real: self.real && other.real, truncated }
    }

    pub fn add_assign(&mut self, other: &ScalarFn) {
        *self = self.add(other);
    }

    pub fn neg(&self) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.neg())
    }

    pub fn sub(&self, other: &ScalarFn) -> ScalarFn {
        self.add(&other.neg())
    }

    pub fn scale(&self, g: &Gauss) -> ScalarFn {
        if g.is_zero() {
            return ScalarFn::zero(self.dim());
        }
        self.map_coeffs(self.real && g.is_real(), |_, c| c.scale(g))
    }

    pub fn scale_rational(&self, r: &Rational) -> ScalarFn {
        if r.is_zero() {
            return ScalarFn::zero(self.dim());
        }
        self.map_coeffs(self.real, |_, c| c.scale_rational(r))
    }

    /// Multiplication by a parameter-dependent constant.
    pub fn mul_param(&self, p: &ParamCoeff) -> ScalarFn {
        let real = self.real && p.terms().all(|(_, _, g)| g.is_real());
        self.map_coeffs(real, |_, c| c.mul(p))
    }

    /// Pointwise product (Fourier convolution).
    pub fn mul(&self, other: &ScalarFn) -> ScalarFn {
        let real = self.real && other.real;
        let mut truncated = self.truncated | other.truncated;
        if self.terms.is_empty() || other.terms.is_empty() {
            return ScalarFn { dim: self.dim, terms: Vec::new(), real: true, truncated };
        }
        if other.terms.len() == 1 && other.terms[0].0 == [0; MAX_COORDS] {
            let c = &other.terms[0].1;
            let mut f = self.map_coeffs(real, |_, a| a.mul(c));
            f.truncated |= truncated;
            return f;
        }
        if self.terms.len() == 1 && self.terms[0].0 == [0; MAX_COORDS] {
            let c = &self.terms[0].1;
            let mut f = other.map_coeffs(real, |_, a| c.mul(a));
            f.truncated |= truncated;
            return f;
        }
        let mut raw: Vec<(Freq, ParamCoeff)> = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                raw.push((freq_add(ka, kb), ca.mul(cb)));
            }
        }
        raw.sort_by_key(|a| a.0);
        let mut out: Vec<(Freq, ParamCoeff)> = Vec::with_capacity(raw.len());
        for (k, c) in raw {
            match out.last_mut() {
                Some((q, acc)) if *q == k => *acc = acc.add(&c),
                _ => out.push((k, c)),
            }
        }
        out.retain(|(_, c)| {
            truncated |= c.is_truncated();
            !c.is_zero()
        });
        ScalarFn { dim: self.dim, terms: out, real, truncated }
    }

    /// `∂f/∂x^j`.
    pub fn partial(&self, j: usize) -> ScalarFn {
        assert!(j < self.dim(), "coordinate index {j} out of range");
        self.map_coeffs(self.real, |k, c| c.scale(&Gauss::new(Rational::zero(), Rational::from_int(k[j] as i64))))
    }

    pub fn param_diff(&self, p: Param) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.param_diff(p))
    }

    pub fn param_integrate(&self, p: Param) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.param_integrate(p))
    }

    pub fn param_eval(&self, p: Param, value: &Rational) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.eval(p, value))
    }

    pub fn param_coeff(&self, p: Param, k: u8) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.param_coeff(p, k))
    }

    pub fn with_caps(&self, caps: Caps) -> ScalarFn {
        self.map_coeffs(self.real, |_, c| c.clone().with_caps(caps))
    }

    pub fn conj(&self) -> ScalarFn {
        ScalarFn::from_terms(self.dim(), self.terms.iter().map(|(k, c)| (freq_neg(k), c.conj())))
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| format!("[{c}]e{:?}", &k[..self.dim as usize]))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_fn(dim: usize) -> impl Strategy<Value = ScalarFn> {
        proptest::collection::vec(((-2i64..=2, -2i64..=2), -5i64..=5, -5i64..=5), 0..5).prop_map(move |v| {
            ScalarFn::from_terms(
                dim,
                v.into_iter().map(|((a, b), re, im)| {
                    (freq_from_slice(&[a, b]), ParamCoeff::constant(Gauss::new(Rational::from_int(re), Rational::from_int(im))))
                }),
            )
        })
    }

    /// Pointwise evaluation at x = 0 is the sum of all coefficients.
    fn at_origin(f: &ScalarFn) -> Gauss {
        f.terms().iter().fold(Gauss::zero(), |acc, (_, c)| &acc + &c.constant_term())
    }

    #[test]
    fn jets_truncate_and_flag() {
        let t = ParamCoeff::param(Param::T).with_caps(Caps::new(1, 0));
        let t2 = t.mul(&t);
        assert!(t2.is_zero());
        assert!(t2.is_truncated());
        let poly = ParamCoeff::param(Param::T).mul(&ParamCoeff::param(Param::T));
        assert_eq!(poly.coeff(2, 0), Gauss::one());
        assert!(!poly.is_truncated());
        // d/dt (t^2) = 2t
        assert_eq!(poly.param_diff(Param::T).coeff(1, 0), Gauss::from_int(2));
        // ∫_0^t t^2 = t^3/3, then t = 1
        let v = poly.param_integrate(Param::T).eval(Param::T, &Rational::one());
        assert_eq!(v.constant_term(), Gauss::ratio(1, 3));
    }

    #[test]
    fn integral_keeps_pi_symbolic() {
        let f = ScalarFn::rational(2, Rational::new(3, 2)).add(&ScalarFn::exp(2, &[1, 0]));
        assert_eq!(f.integral_over_pi_power().constant_term(), Gauss::from_int(6));
    }

    #[test]
    fn realness_is_validated() {
        let c = ParamCoeff::constant(Gauss::new(Rational::one(), Rational::one()));
        let bad = ScalarFn::real_from_terms(2, [(freq_from_slice(&[1, 0]), c.clone())]);
        assert_eq!(bad.unwrap_err(), ScalarError::NotReal);
        let good = ScalarFn::real_from_terms(2, [(freq_from_slice(&[1, 0]), c.clone()), (freq_from_slice(&[-1, 0]), c.conj())]);
        assert!(good.unwrap().is_real());
    }

    proptest! {
        #[test]
        fn product_is_commutative_and_associative(a in small_fn(2), b in small_fn(2), c in small_fn(2)) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn product_matches_pointwise_value(a in small_fn(2), b in small_fn(2)) {
            prop_assert_eq!(at_origin(&a.mul(&b)), &at_origin(&a) * &at_origin(&b));
        }

        #[test]
        fn partial_is_a_derivation(a in small_fn(2), b in small_fn(2), j in 0usize..2) {
            let lhs = a.mul(&b).partial(j);
            let rhs = a.partial(j).mul(&b).add(&a.mul(&b.partial(j)));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn integral_of_derivative_vanishes(a in small_fn(2), j in 0usize..2) {
            prop_assert!(a.partial(j).mean().is_zero());
        }

        #[test]
        fn realness_survives_products(a in small_fn(2), b in small_fn(2)) {
            let ra = a.add(&a.conj());
            let rb = b.add(&b.conj());
            prop_assert!(ra.verify_real() && rb.verify_real());
            prop_assert!(ra.mul(&rb).verify_real());
        }
    }
}
