//! Seeded random generators for test inputs: real trigonometric polynomials
//! and symmetric 3-tensor fields with small rational coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::S3Field;
use crate::rational::{Gauss, Rational};
use crate::scalar_ring::{freq_from_slice, Freq, ParamCoeff, ScalarFn};
use crate::weyl::SymplecticData;

/// Per-coordinate frequency bounds: coordinate `j` uses frequencies in
/// `-bound[j]..=bound[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqBox(pub Vec<i64>);

impl FreqBox {
    pub fn uniform(dim: usize, bound: i64) -> Self {
        FreqBox(vec![bound; dim])
    }

    /// Frequencies only along the first coordinate.
    pub fn first_axis(dim: usize, bound: i64) -> Self {
        let mut v = vec![0; dim];
        v[0] = bound;
        FreqBox(v)
    }

    pub fn constant(dim: usize) -> Self {
        FreqBox(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Rational with numerator in `-3..=3` and denominator in `1..=3`.
    pub fn rational(&mut self) -> Rational {
        Rational::new(self.rng.gen_range(-3..=3), self.rng.gen_range(1..=3))
    }

    pub fn nonzero_rational(&mut self) -> Rational {
        loop {
            let r = self.rational();
            if !r.is_zero() {
                return r;
            }
        }
    }

    pub fn gauss(&mut self) -> Gauss {
        Gauss::new(self.rational(), self.rational())
    }

    pub fn freq(&mut self, b: &FreqBox) -> Freq {
        let k: Vec<i64> = b.0.iter().map(|m| self.rng.gen_range(-*m..=*m)).collect();
        freq_from_slice(&k)
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    /// Real trigonometric polynomial built from `modes` random frequencies in
    /// the box (each paired with its conjugate).
    pub fn real_fn(&mut self, b: &FreqBox, modes: usize) -> ScalarFn {
        let dim = b.dim();
        let mut f = ScalarFn::zero(dim);
        for _ in 0..modes {
            let k = self.freq(b);
            let neg: Vec<i64> = k[..dim].iter().map(|x| -(*x as i64)).collect();
            if neg.iter().all(|x| *x == 0) {
                f = f.add(&ScalarFn::rational(dim, self.rational()));
                continue;
            }
            let c = self.gauss();
            let pos: Vec<i64> = k[..dim].iter().map(|x| *x as i64).collect();
            f = f.add(&ScalarFn::exp(dim, &pos).scale(&c));
            f = f.add(&ScalarFn::exp(dim, &neg).scale(&c.conj()));
        }
        ScalarFn::real_from_terms(dim, f.terms().iter().cloned()).expect("conjugate pairs are real")
    }

    /// Real function with zero mean.
    pub fn zero_mean_fn(&mut self, b: &FreqBox, modes: usize) -> ScalarFn {
        let f = self.real_fn(b, modes);
        let m = f.mean();
        f.sub(&ScalarFn::constant(b.dim(), m))
    }

    /// Random real symmetric 3-tensor field; each sorted triple is populated
    /// with probability `density`.
    pub fn s3(&mut self, sym: SymplecticData, b: &FreqBox, modes: usize, density: f64) -> S3Field {
        let dim = sym.dim();
        let mut out = S3Field::zero(sym);
        for i in 0..dim {
            for j in i..dim {
                for k in j..dim {
                    if self.rng.gen_bool(density) {
                        let f = self.real_fn(b, modes);
                        out.set([i, j, k], f);
                    }
                }
            }
        }
        out
    }

    /// Real symmetric tensor with constant entries.
    pub fn constant_s3(&mut self, sym: SymplecticData) -> S3Field {
        let dim = sym.dim();
        self.s3(sym, &FreqBox::constant(dim), 1, 1.0)
    }

    /// Formal function `Σ ν^k f_k` with random real coefficients.
    pub fn formal_fn(&mut self, b: &FreqBox, modes: usize, top: i32) -> crate::formal::FormalFunction {
        let mut out = crate::formal::FormalFunction::zero(b.dim(), crate::formal::EXACT);
        for k in 0..=top {
            out.set(k, self.real_fn(b, modes));
        }
        out
    }

    pub fn param_coeff(&mut self) -> ParamCoeff {
        ParamCoeff::rational(self.rational())
    }
}
