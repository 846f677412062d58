//! Symplectic connections on the standard torus and their classical
//! invariants.
//!
//! A symplectic connection is the flat coordinate connection plus a totally
//! symmetric 3-tensor `u_{lij}`; its Christoffel symbols are
//! `Γ^k_{ij} = Λ^{kl} u_{lij}`. Tangent vectors to the space of symplectic
//! connections are again totally symmetric 3-tensors (with the index lowered by
//! `ω`), so both are represented by [`S3Field`].

use std::collections::BTreeMap;

use crate::formal::{FormalScalar, EXACT};
use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{Caps, Param, ParamCoeff, ScalarFn};
use crate::weyl::{SymplecticData, WeylElement, WeylKey};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("entries for the permutations of ({0}, {1}, {2}) disagree; the tensor is not totally symmetric")]
    NotSymmetric(usize, usize, usize),
    #[error("index {0} out of range for a torus of dimension {1}")]
    IndexOutOfRange(usize, usize),
    #[error("lowered curvature is not symmetric in its first two slots")]
    CurvatureNotSymmetric,
    #[error("lowered Lie derivative of the connection is not totally symmetric")]
    LieDerivativeNotSymmetric,
    #[error("tensor component is not real-valued")]
    NotReal,
}

/// How [`S3Field::from_entries`] treats entries that are not already
/// symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetryPolicy {
    /// Entries given for different permutations of one triple must agree.
    #[default]
    StrictValidate,
    /// Replace the data by its total symmetrization `(1/6) Σ_perm`.
    AutoSymmetrize,
}

fn sorted(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

fn permutations(t: [usize; 3]) -> Vec<[usize; 3]> {
    let [a, b, c] = t;
    let mut v = vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]];
    v.sort_unstable();
    v.dedup();
    v
}

/// Totally symmetric covariant 3-tensor field, stored on sorted index
/// triples.
#[derive(Clone, PartialEq)]
pub struct S3Field {
    sym: SymplecticData,
    entries: BTreeMap<[usize; 3], ScalarFn>,
}

impl std::fmt::Debug for S3Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl S3Field {
    pub fn zero(sym: SymplecticData) -> Self {
        S3Field { sym, entries: BTreeMap::new() }
    }

    pub fn sym(&self) -> SymplecticData {
        self.sym
    }

    /// Builds a field from entries on arbitrary (possibly repeated or
    /// permuted) index triples. Repeated entries for the same ordered triple
    /// are summed first.
    pub fn from_entries(
        sym: SymplecticData,
        entries: impl IntoIterator<Item = ([usize; 3], ScalarFn)>,
        policy: SymmetryPolicy,
    ) -> Result<Self, GeometryError> {
        let dim = sym.dim();
        let mut raw: BTreeMap<[usize; 3], ScalarFn> = BTreeMap::new();
        for (idx, f) in entries {
            if let Some(bad) = idx.iter().find(|i| **i >= dim) {
                return Err(GeometryError::IndexOutOfRange(*bad, dim));
            }
            let e = raw.entry(idx).or_insert_with(|| ScalarFn::zero(dim));
            *e = e.add(&f);
        }
        let mut out = S3Field::zero(sym);
        let classes: std::collections::BTreeSet<[usize; 3]> = raw.keys().map(|k| sorted(*k)).collect();
        for class in classes {
            let perms = permutations(class);
            let value = match policy {
                SymmetryPolicy::StrictValidate => {
                    let given: Vec<&ScalarFn> = perms.iter().filter_map(|p| raw.get(p)).collect();
                    if given.windows(2).any(|w| w[0] != w[1]) {
                        return Err(GeometryError::NotSymmetric(class[0], class[1], class[2]));
                    }
                    given[0].clone()
                }
                SymmetryPolicy::AutoSymmetrize => {
                    let mut sum = ScalarFn::zero(dim);
                    for p in permutations_with_multiplicity(class) {
                        if let Some(f) = raw.get(&p) {
                            sum = sum.add(f);
                        }
                    }
                    sum.scale_rational(&Rational::new(1, 6))
                }
            };
            out.set(class, value);
        }
        Ok(out)
    }

    /// Sets the component on the symmetry class of `idx`.
    pub fn set(&mut self, idx: [usize; 3], f: ScalarFn) {
        let key = sorted(idx);
        if f.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, f);
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> ScalarFn {
        self.entries.get(&sorted([i, j, k])).cloned().unwrap_or_else(|| ScalarFn::zero(self.sym.dim()))
    }

    pub fn entries(&self) -> &BTreeMap<[usize; 3], ScalarFn> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.entries.values().all(|f| f.verify_real())
    }

    pub fn map(&self, f: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = S3Field::zero(self.sym);
        for (k, v) in &self.entries {
            out.set(*k, f(v));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            let sum = out.get(k[0], k[1], k[2]).add(v);
            out.set(*k, sum);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|f| f.neg())
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map(|f| f.scale_rational(r))
    }

    pub fn mul_param(&self, p: &ParamCoeff) -> Self {
        self.map(|f| f.mul_param(p))
    }

    pub fn param_diff(&self, p: Param) -> Self {
        self.map(|f| f.param_diff(p))
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        self.map(|f| f.param_eval(p, v))
    }

    pub fn with_caps(&self, caps: Caps) -> Self {
        self.map(|f| f.with_caps(caps))
    }

    /// Largest `|k_j|` in coordinate `j` over all components.
    pub fn max_freq_in(&self, j: usize) -> i64 {
        self.entries.values().map(|f| f.max_freq_in(j)).max().unwrap_or(0)
    }

    pub fn max_freq(&self) -> i64 {
        self.entries.values().map(|f| f.max_freq()).max().unwrap_or(0)
    }

    /// `½ u_{lji} y^l y^j dx^i`, the fibre-quadratic 1-form attached to the
    /// tensor (for the connection data this is the connection form).
    pub fn quadratic_form(&self) -> WeylElement {
        let dim = self.sym.dim();
        let mut out = WeylElement::zero(self.sym, EXACT);
        for i in 0..dim {
            for l in 0..dim {
                for j in l..dim {
                    let c = self.get(l, j, i);
                    if c.is_zero() {
                        continue;
                    }
                    let mut y = [0u8; 6];
                    y[l] += 1;
                    y[j] += 1;
                    let c = if l == j { c.scale_rational(&Rational::new(1, 2)) } else { c };
                    out.add_term(WeylKey::new(0, &y[..dim], &[i]), c);
                }
            }
        }
        out
    }

    /// `u_{ijk} y^i y^j y^k` (the fibre cubic attached to the tensor).
    pub fn cubic(&self) -> WeylElement {
        let dim = self.sym.dim();
        let mut out = WeylElement::zero(self.sym, EXACT);
        for (idx, f) in &self.entries {
            let mut y = [0u8; 6];
            for i in idx {
                y[*i] += 1;
            }
            let mult = permutations(*idx).len() as i64;
            out.add_term(WeylKey::new(0, &y[..dim], &[]), f.scale_rational(&Rational::from_int(mult)));
        }
        out
    }
}

fn permutations_with_multiplicity(t: [usize; 3]) -> Vec<[usize; 3]> {
    let [a, b, c] = t;
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Dense array of functions indexed by several coordinate slots.
#[derive(Clone, Debug)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    data: Vec<ScalarFn>,
}

impl Tensor {
    pub fn zero(dim: usize, rank: usize) -> Self {
        Tensor { dim, rank, data: vec![ScalarFn::zero(dim); dim.pow(rank as u32)] }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarFn {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], f: ScalarFn) {
        let o = self.offset(idx);
        self.data[o] = f;
    }

    pub fn add_at(&mut self, idx: &[usize], f: &ScalarFn) {
        let o = self.offset(idx);
        self.data[o] = self.data[o].add(f);
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.data.len()).map(move |mut o| {
            let mut idx = vec![0; self.rank];
            for slot in (0..self.rank).rev() {
                idx[slot] = o % self.dim;
                o /= self.dim;
            }
            idx
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|f| f.is_zero())
    }
}

/// Flat reference connection plus a totally symmetric perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticConnection {
    u: S3Field,
}

impl SymplecticConnection {
    pub fn new(u: S3Field) -> Self {
        SymplecticConnection { u }
    }

    pub fn flat(sym: SymplecticData) -> Self {
        SymplecticConnection { u: S3Field::zero(sym) }
    }

    pub fn sym(&self) -> SymplecticData {
        self.u.sym
    }

    pub fn dim(&self) -> usize {
        self.u.sym.dim()
    }

    pub fn data(&self) -> &S3Field {
        &self.u
    }

    /// `∇ + p·A` for a parameter polynomial `p`.
    pub fn displaced(&self, dir: &S3Field, p: &ParamCoeff) -> Self {
        SymplecticConnection { u: self.u.add(&dir.mul_param(p)) }
    }

    pub fn param_eval(&self, p: Param, v: &Rational) -> Self {
        SymplecticConnection { u: self.u.param_eval(p, v) }
    }

    /// Largest frequency in coordinate `j` among the connection data.
    pub fn max_freq_in(&self, j: usize) -> i64 {
        self.u.max_freq_in(j)
    }

    /// `Γ^k_{ij}` as a rank-3 tensor indexed `[k, i, j]`.
    pub fn christoffel(&self) -> Tensor {
        let sym = self.sym();
        let dim = sym.dim();
        let mut g = Tensor::zero(dim, 3);
        for k in 0..dim {
            for l in 0..dim {
                let lam = sym.lambda(k, l);
                if lam == 0 {
                    continue;
                }
                for i in 0..dim {
                    for j in 0..dim {
                        let u = self.u.get(l, i, j);
                        if !u.is_zero() {
                            g.add_at(&[k, i, j], &u.scale_rational(&Rational::from_int(lam)));
                        }
                    }
                }
            }
        }
        g
    }

    /// The connection 1-form `Γ̄ = ½ ω_{lk} Γ^k_{ij} y^l y^j dx^i`.
    pub fn gamma_bar(&self) -> WeylElement {
        self.u.quadratic_form()
    }

    /// `R^r_{jkl} = ∂_k Γ^r_{lj} - ∂_l Γ^r_{kj} + Γ^r_{kp} Γ^p_{lj} - Γ^r_{lp} Γ^p_{kj}`,
    /// indexed `[r, j, k, l]`.
    pub fn curvature(&self) -> Tensor {
        let dim = self.dim();
        let g = self.christoffel();
        let mut out = Tensor::zero(dim, 4);
        for r in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let mut v = g.get(&[r, l, j]).partial(k).sub(&g.get(&[r, k, j]).partial(l));
                        for p in 0..dim {
                            v = v.add(&g.get(&[r, k, p]).mul(g.get(&[p, l, j])));
                            v = v.sub(&g.get(&[r, l, p]).mul(g.get(&[p, k, j])));
                        }
                        out.set(&[r, j, k, l], v);
                    }
                }
            }
        }
        out
    }

    /// `W_{ijkl} = ω_{ir} R^r_{jkl}`.
    pub fn lowered_curvature(&self) -> Tensor {
        lower_first(&self.sym(), &self.curvature())
    }

    /// `R̄ = ¼ ω_{ir} R^r_{jkl} y^i y^j dx^k ∧ dx^l`; fails if the lowered
    /// curvature is not symmetric in `(i, j)`.
    pub fn r_bar(&self) -> Result<WeylElement, GeometryError> {
        let sym = self.sym();
        let dim = sym.dim();
        let w = self.lowered_curvature();
        let mut out = WeylElement::zero(sym, EXACT);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        if w.get(&[i, j, k, l]) != w.get(&[j, i, k, l]) {
                            return Err(GeometryError::CurvatureNotSymmetric);
                        }
                    }
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                for k in 0..dim {
                    for l in (k + 1)..dim {
                        // ¼ (W_{ijkl} + W_{jikl}) over both orders of (k, l)
                        let c = w.get(&[i, j, k, l]).clone();
                        if c.is_zero() {
                            continue;
                        }
                        let c = if i == j { c.scale_rational(&Rational::new(1, 2)) } else { c };
                        let mut y = [0u8; 6];
                        y[i] += 1;
                        y[j] += 1;
                        out.add_term(WeylKey::new(0, &y[..dim], &[k, l]), c);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Ric_{jl} = R^r_{jrl}`.
    pub fn ricci(&self) -> Tensor {
        let dim = self.dim();
        let r = self.curvature();
        let mut out = Tensor::zero(dim, 2);
        for j in 0..dim {
            for l in 0..dim {
                let mut v = ScalarFn::zero(dim);
                for p in 0..dim {
                    v = v.add(r.get(&[p, j, p, l]));
                }
                out.set(&[j, l], v);
            }
        }
        out
    }

    /// Covariant derivative of a covariant tensor: `(∇T)_{p, a1..ar}`.
    pub fn covariant_derivative(&self, t: &Tensor) -> Tensor {
        let dim = self.dim();
        let g = self.christoffel();
        let rank = t.rank();
        let mut out = Tensor::zero(dim, rank + 1);
        for idx in t.indices() {
            for p in 0..dim {
                let mut v = t.get(&idx).partial(p);
                for slot in 0..rank {
                    for m in 0..dim {
                        let gamma = g.get(&[m, p, idx[slot]]);
                        if gamma.is_zero() {
                            continue;
                        }
                        let mut j = idx.clone();
                        j[slot] = m;
                        v = v.sub(&gamma.mul(t.get(&j)));
                    }
                }
                let mut full = vec![p];
                full.extend_from_slice(&idx);
                out.set(&full, v);
            }
        }
        out
    }

    /// `μ(∇) = (∇²_{pq} Ric)^{pq} + ¼ R_{abcd} R^{abcd} - ½ Ric_{ab} Ric^{ab}`,
    /// indices raised with `Λ`.
    pub fn cahen_gutt_moment(&self) -> ScalarFn {
        let sym = self.sym();
        let dim = sym.dim();
        let ric = self.ricci();
        let hess = self.covariant_derivative(&self.covariant_derivative(&ric));
        let w = self.lowered_curvature();
        let mut mu = ScalarFn::zero(dim);
        for p in 0..dim {
            for q in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        let c = sym.lambda(p, a) * sym.lambda(q, b);
                        if c != 0 {
                            mu = mu.add(&hess.get(&[p, q, a, b]).scale_rational(&Rational::from_int(c)));
                        }
                    }
                }
            }
        }
        mu = mu.add(&full_contraction(&sym, &w, &w).scale_rational(&Rational::new(1, 4)));
        mu = mu.sub(&full_contraction(&sym, &ric, &ric).scale_rational(&Rational::new(1, 2)));
        mu
    }

    /// `∇²_{kq} H = ∂_k ∂_q H - Γ^r_{kq} ∂_r H`.
    pub fn hessian(&self, h: &ScalarFn) -> Tensor {
        let mut dh = Tensor::zero(self.dim(), 1);
        for r in 0..self.dim() {
            dh.set(&[r], h.partial(r));
        }
        self.covariant_derivative(&dh)
    }

    /// `L_{X_H}∇` as a lowered tensor `ω_{lk} (L_{X_H}∇)^k_{ij}`, where
    /// `(L_{X_H}∇)^k_{ij} = (∇²_{ij} X_H)^k + (R(X_H, ∂_i) ∂_j)^k`.
    pub fn lie_derivative(&self, h: &ScalarFn) -> Result<S3Field, GeometryError> {
        let sym = self.sym();
        let dim = sym.dim();
        let x = hamiltonian_vector_field(&sym, h);
        let g = self.christoffel();
        let r = self.curvature();
        // T^k_j = ∇_j X^k
        let mut t = Tensor::zero(dim, 2);
        for k in 0..dim {
            for j in 0..dim {
                let mut v = x[k].partial(j);
                for m in 0..dim {
                    v = v.add(&g.get(&[k, j, m]).mul(&x[m]));
                }
                t.set(&[k, j], v);
            }
        }
        let mut lower = Tensor::zero(dim, 3);
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    // ∇_i T^k_j
                    let mut v = t.get(&[k, j]).partial(i);
                    for m in 0..dim {
                        v = v.add(&g.get(&[k, i, m]).mul(t.get(&[m, j])));
                        v = v.sub(&g.get(&[m, i, j]).mul(t.get(&[k, m])));
                    }
                    for a in 0..dim {
                        v = v.add(&x[a].mul(r.get(&[k, j, a, i])));
                    }
                    for l in 0..dim {
                        let w = sym.omega(l, k);
                        if w != 0 {
                            lower.add_at(&[l, i, j], &v.scale_rational(&Rational::from_int(w)));
                        }
                    }
                }
            }
        }
        let mut out = S3Field::zero(sym);
        for idx in lower.indices() {
            for p in permutations([idx[0], idx[1], idx[2]]) {
                if lower.get(&p) != lower.get(&idx) {
                    return Err(GeometryError::LieDerivativeNotSymmetric);
                }
            }
            out.set([idx[0], idx[1], idx[2]], lower.get(&idx).clone());
        }
        Ok(out)
    }
}

fn lower_first(sym: &SymplecticData, r: &Tensor) -> Tensor {
    let dim = sym.dim();
    let mut out = Tensor::zero(dim, r.rank());
    for idx in r.indices() {
        for i in 0..dim {
            let w = sym.omega(i, idx[0]);
            if w != 0 {
                let mut j = idx.clone();
                j[0] = i;
                out.add_at(&j, &r.get(&idx).scale_rational(&Rational::from_int(w)));
            }
        }
    }
    out
}

/// `A_{a1..ar} B^{a1..ar}` with every index of `B` raised by `Λ`.
pub fn full_contraction(sym: &SymplecticData, a: &Tensor, b: &Tensor) -> ScalarFn {
    let dim = sym.dim();
    let mut acc = ScalarFn::zero(dim);
    for ia in a.indices() {
        let fa = a.get(&ia);
        if fa.is_zero() {
            continue;
        }
        // each Λ row has exactly one nonzero entry for the standard form
        let mut ib = Vec::with_capacity(ia.len());
        let mut sign = 1i64;
        for i in &ia {
            let j = (0..dim).find(|j| sym.lambda(*i, *j) != 0).unwrap();
            sign *= sym.lambda(*i, j);
            ib.push(j);
        }
        acc = acc.add(&fa.mul(b.get(&ib)).scale_rational(&Rational::from_int(sign)));
    }
    acc
}

/// `Λ^{i1 j1} Λ^{i2 j2} Λ^{i3 j3} A_{i1 i2 i3} B_{j1 j2 j3}` pointwise.
pub fn triple_contraction(a: &S3Field, b: &S3Field) -> ScalarFn {
    let sym = a.sym();
    let dim = sym.dim();
    let mut ta = Tensor::zero(dim, 3);
    let mut tb = Tensor::zero(dim, 3);
    for idx in ta.indices().collect::<Vec<_>>() {
        ta.set(&idx, a.get(idx[0], idx[1], idx[2]));
        tb.set(&idx, b.get(idx[0], idx[1], idx[2]));
    }
    full_contraction(&sym, &ta, &tb)
}

/// `Ω^𝓔(A, B) = ∫ Λ Λ Λ A B`, with the `π^{2n}` factor carried symbolically.
pub fn omega_e(a: &S3Field, b: &S3Field) -> FormalScalar {
    let f = triple_contraction(a, b);
    let mut s = FormalScalar::constant(f.integral_over_pi_power());
    s.pi_power = f.dim() as i32;
    s
}

/// `X_H` with `ι(X_H) ω = dH`, i.e. `X_H^j = Λ^{ij} ∂_i H`.
pub fn hamiltonian_vector_field(sym: &SymplecticData, h: &ScalarFn) -> Vec<ScalarFn> {
    let dim = sym.dim();
    (0..dim)
        .map(|j| {
            let mut v = ScalarFn::zero(dim);
            for i in 0..dim {
                let l = sym.lambda(i, j);
                if l != 0 {
                    v = v.add(&h.partial(i).scale_rational(&Rational::from_int(l)));
                }
            }
            v
        })
        .collect()
}

/// `{F, G} = -ω(X_F, X_G) = Λ^{ij} ∂_i F ∂_j G`.
pub fn poisson_bracket(sym: &SymplecticData, f: &ScalarFn, g: &ScalarFn) -> ScalarFn {
    let dim = sym.dim();
    let mut acc = ScalarFn::zero(dim);
    for i in 0..dim {
        for j in 0..dim {
            let l = sym.lambda(i, j);
            if l != 0 {
                acc = acc.add(&f.partial(i).mul(&g.partial(j)).scale_rational(&Rational::from_int(l)));
            }
        }
    }
    acc
}

/// `e^{i k·x}` multiplied by a Gaussian rational.
pub fn wave(dim: usize, k: &[i64], c: Gauss) -> ScalarFn {
    ScalarFn::exp(dim, k).scale(&c)
}
