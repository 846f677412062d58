#![allow(clippy::needless_range_loop)]

use fedosov_core::geometry::*;
use fedosov_core::rational::{Gauss, Rational};
use fedosov_core::sample::{FreqBox, Sampler};
use fedosov_core::scalar_ring::ScalarFn;
use fedosov_core::weyl::SymplecticData;
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn constant_of(f: &ScalarFn) -> Rational {
    assert!(f.terms().iter().all(|(k, _)| k.iter().all(|x| *x == 0)), "not constant: {f:?}");
    f.mean().constant_term().re.clone()
}

/// Dense rational model of a constant connection, used as an oracle.
struct Dense {
    dim: usize,
    omega: Vec<Vec<Rational>>,
    lambda: Vec<Vec<Rational>>,
    u: Vec<Vec<Vec<Rational>>>,
}

impl Dense {
    fn new(sym: SymplecticData, u: &S3Field) -> Self {
        let dim = sym.dim();
        let mut omega = vec![vec![Rational::zero(); dim]; dim];
        let mut lambda = omega.clone();
        // standard form by hand: pairs (i, i+n)
        let n = sym.n();
        for i in 0..n {
            omega[i][i + n] = r(1, 1);
            omega[i + n][i] = r(-1, 1);
        }
        // matrix inverse of omega, solved by hand for the block form
        for i in 0..dim {
            for j in 0..dim {
                lambda[i][j] = -omega[i][j].clone();
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                let mut s = Rational::zero();
                for k in 0..dim {
                    s = s + &omega[i][k] * &lambda[k][j];
                }
                assert_eq!(s, if i == j { r(1, 1) } else { Rational::zero() });
            }
        }
        let mut uu = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        for l in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    uu[l][i][j] = constant_of(&u.get(l, i, j));
                }
            }
        }
        Dense { dim, omega, lambda, u: uu }
    }

    fn gamma(&self) -> Vec<Vec<Vec<Rational>>> {
        let d = self.dim;
        let mut g = vec![vec![vec![Rational::zero(); d]; d]; d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        g[k][i][j] = &g[k][i][j] + &(&self.lambda[k][l] * &self.u[l][i][j]);
                    }
                }
            }
        }
        g
    }

    /// For constant Christoffels only the quadratic terms survive.
    fn curvature(&self) -> Vec<Vec<Vec<Vec<Rational>>>> {
        let d = self.dim;
        let g = self.gamma();
        let mut out = vec![vec![vec![vec![Rational::zero(); d]; d]; d]; d];
        for rr in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = Rational::zero();
                        for p in 0..d {
                            s = s + &g[rr][k][p] * &g[p][l][j] - &g[rr][l][p] * &g[p][k][j];
                        }
                        out[rr][j][k][l] = s;
                    }
                }
            }
        }
        out
    }

    fn mu(&self) -> Rational {
        let d = self.dim;
        let rc = self.curvature();
        let mut low = vec![vec![vec![vec![Rational::zero(); d]; d]; d]; d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        for q in 0..d {
                            low[a][b][c][e] = &low[a][b][c][e] + &(&self.omega[a][q] * &rc[q][b][c][e]);
                        }
                    }
                }
            }
        }
        let mut ric = vec![vec![Rational::zero(); d]; d];
        for j in 0..d {
            for l in 0..d {
                for p in 0..d {
                    ric[j][l] = &ric[j][l] + &rc[p][j][p][l];
                }
            }
        }
        // raise all indices of the second factor
        let mut rr = Rational::zero();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        for a2 in 0..d {
                            for b2 in 0..d {
                                for c2 in 0..d {
                                    for e2 in 0..d {
                                        let f = &(&self.lambda[a][a2] * &self.lambda[b][b2])
                                            * &(&self.lambda[c][c2] * &self.lambda[e][e2]);
                                        if f.is_zero() {
                                            continue;
                                        }
                                        rr = rr + &(&f * &low[a][b][c][e]) * &low[a2][b2][c2][e2];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut rc2 = Rational::zero();
        for a in 0..d {
            for b in 0..d {
                for a2 in 0..d {
                    for b2 in 0..d {
                        let f = &self.lambda[a][a2] * &self.lambda[b][b2];
                        rc2 = rc2 + &(&f * &ric[a][b]) * &ric[a2][b2];
                    }
                }
            }
        }
        &rr * &r(1, 4) - &rc2 * &r(1, 2)
    }
}

#[test]
fn flat_connection_has_no_curvature() {
    for n in 1..=2 {
        let c = SymplecticConnection::flat(SymplecticData::standard(n));
        assert!(c.curvature().is_zero());
        assert!(c.r_bar().unwrap().is_zero());
        assert!(c.gamma_bar().is_zero());
        assert!(c.cahen_gutt_moment().is_zero());
    }
}

#[test]
fn constant_connection_matches_dense_oracle() {
    for seed in 0..4 {
        for n in 1..=2 {
            let sym = SymplecticData::standard(n);
            let mut s = Sampler::new(seed);
            let u = s.constant_s3(sym);
            let c = SymplecticConnection::new(u.clone());
            let dense = Dense::new(sym, &u);
            let rc = dense.curvature();
            let ours = c.curvature();
            for idx in ours.indices() {
                assert_eq!(constant_of(ours.get(&idx)), rc[idx[0]][idx[1]][idx[2]][idx[3]], "{idx:?}");
            }
            assert_eq!(constant_of(&c.cahen_gutt_moment()), dense.mu());
        }
    }
}

#[test]
fn curvature_symmetries_on_random_connections() {
    for seed in 0..3 {
        for n in 1..=2 {
            let sym = SymplecticData::standard(n);
            let dim = sym.dim();
            let mut s = Sampler::new(100 + seed);
            let modes = if n == 1 { 2 } else { 1 };
            let c = SymplecticConnection::new(s.s3(sym, &FreqBox::uniform(dim, 1), modes, 0.6));
            let rt = c.curvature();
            let w = c.lowered_curvature();
            for idx in rt.indices() {
                let [a, j, k, l] = [idx[0], idx[1], idx[2], idx[3]];
                assert_eq!(*rt.get(&[a, j, k, l]), rt.get(&[a, j, l, k]).neg());
                let cyc = rt.get(&[a, j, k, l]).add(rt.get(&[a, k, l, j])).add(rt.get(&[a, l, j, k]));
                assert!(cyc.is_zero(), "first Bianchi");
                assert_eq!(w.get(&[a, j, k, l]), w.get(&[j, a, k, l]));
            }
            assert!(c.r_bar().is_ok());
            let rb = c.r_bar().unwrap();
            assert!(rb.terms().keys().all(|k| k.degree() == 2 && k.form_degree() == 2));
        }
    }
}

#[test]
fn gamma_bar_packs_lowered_christoffels() {
    let sym = SymplecticData::standard(1);
    let mut s = Sampler::new(7);
    let u = s.s3(sym, &FreqBox::uniform(2, 1), 1, 1.0);
    let c = SymplecticConnection::new(u.clone());
    let g = c.christoffel();
    // ω_{lk} Γ^k_{ij} recovers u_{lij}
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = ScalarFn::zero(2);
                for k in 0..2 {
                    v = v.add(&g.get(&[k, i, j]).scale_rational(&Rational::from_int(sym.omega(l, k))));
                }
                assert_eq!(v, u.get(l, i, j));
            }
        }
    }
    // contracting Γ̄ against y twice reproduces ½ u_{lji} y^l y^j dx^i: evaluate the dx^0 component at y = (1, 1)
    let gb = c.gamma_bar();
    let mut sum = ScalarFn::zero(2);
    for (k, f) in gb.terms() {
        if k.form_degree() == 1 && k.dx & 1 == 1 {
            sum = sum.add(f);
        }
    }
    let mut expect = ScalarFn::zero(2);
    for l in 0..2 {
        for j in 0..2 {
            expect = expect.add(&u.get(l, j, 0).scale_rational(&r(1, 2)));
        }
    }
    assert_eq!(sum, expect);
}

#[test]
fn poisson_bracket_of_cosines() {
    let sym = SymplecticData::standard(1);
    let half = Gauss::real(r(1, 2));
    let cos1 = wave(2, &[1, 0], half.clone()).add(&wave(2, &[-1, 0], half.clone()));
    let cos2 = wave(2, &[0, 1], half.clone()).add(&wave(2, &[0, -1], half.clone()));
    // Λ^{12} = -1, so {cos x1, cos x2} = -sin x1 sin x2
    let sin = |k: [i64; 2]| {
        wave(2, &k, Gauss::new(Rational::zero(), r(-1, 2))).add(&wave(2, &[-k[0], -k[1]], Gauss::new(Rational::zero(), r(1, 2))))
    };
    let expect = sin([1, 0]).mul(&sin([0, 1])).neg();
    assert_eq!(poisson_bracket(&sym, &cos1, &cos2), expect);
    assert!(poisson_bracket(&sym, &cos1, &ScalarFn::one(2)).is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn poisson_jacobi_and_antisymmetry(seed in 0u64..10_000) {
        let sym = SymplecticData::standard(1);
        let mut s = Sampler::new(seed);
        let b = FreqBox::uniform(2, 1);
        let (f, g, h) = (s.real_fn(&b, 2), s.real_fn(&b, 2), s.real_fn(&b, 2));
        let pb = |a: &ScalarFn, c: &ScalarFn| poisson_bracket(&sym, a, c);
        prop_assert_eq!(pb(&f, &g), pb(&g, &f).neg());
        prop_assert!(pb(&f, &f).is_zero());
        let jac = pb(&f, &pb(&g, &h)).add(&pb(&g, &pb(&h, &f))).add(&pb(&h, &pb(&f, &g)));
        prop_assert!(jac.is_zero());
    }

    #[test]
    fn omega_e_is_antisymmetric_and_bilinear(seed in 0u64..10_000) {
        let sym = SymplecticData::standard(1);
        let mut s = Sampler::new(seed);
        let b = FreqBox::uniform(2, 1);
        let a = s.s3(sym, &b, 1, 1.0);
        let bb = s.s3(sym, &b, 1, 1.0);
        let cc = s.s3(sym, &b, 1, 1.0);
        prop_assert!(omega_e(&a, &a).is_zero());
        prop_assert!(omega_e(&a, &bb).add(&omega_e(&bb, &a)).is_zero());
        let lhs = omega_e(&a, &bb.add(&cc));
        prop_assert!(lhs.sub(&omega_e(&a, &bb)).sub(&omega_e(&a, &cc)).is_zero());
    }
}

#[test]
fn omega_e_single_frequency_value() {
    let sym = SymplecticData::standard(1);
    // A_{000} = cos x1, B_{111} = cos x1; only Λ^{01}Λ^{01}Λ^{01} A_{000} B_{111} survives
    let half = Gauss::real(r(1, 2));
    let cos1 = wave(2, &[1, 0], half.clone()).add(&wave(2, &[-1, 0], half));
    let mut a = S3Field::zero(sym);
    a.set([0, 0, 0], cos1.clone());
    let mut b = S3Field::zero(sym);
    b.set([1, 1, 1], cos1);
    // (-1)^3 · ∫cos² = -2π²
    let v = omega_e(&a, &b);
    assert_eq!(v.pi_power, 2);
    assert_eq!(v.coeff(0).constant_term(), Gauss::real(r(-2, 1)));
}

#[test]
fn s3_construction_policies() {
    let sym = SymplecticData::standard(1);
    let f = ScalarFn::one(2);
    let g = ScalarFn::rational(2, r(3, 1));
    assert_eq!(
        S3Field::from_entries(sym, [([0, 0, 1], f.clone()), ([0, 1, 0], g.clone())], SymmetryPolicy::StrictValidate),
        Err(GeometryError::NotSymmetric(0, 0, 1))
    );
    let ok = S3Field::from_entries(sym, [([0, 0, 1], f.clone()), ([1, 0, 0], f.clone())], SymmetryPolicy::StrictValidate).unwrap();
    assert_eq!(ok.get(0, 1, 0), f);
    // (0,0,1) occurs twice among the six permutations, so the average is 2·3/6
    let sym_f = S3Field::from_entries(sym, [([0, 0, 1], g.clone())], SymmetryPolicy::AutoSymmetrize).unwrap();
    assert_eq!(sym_f.get(1, 0, 0), ScalarFn::one(2));
    assert!(matches!(
        S3Field::from_entries(sym, [([0, 0, 2], f)], SymmetryPolicy::StrictValidate),
        Err(GeometryError::IndexOutOfRange(2, 2))
    ));
}

/// `(L_X Γ)^k_{ij}` by the coordinate formula for the Lie derivative of a
/// connection, lowered with ω.
fn lie_oracle(c: &SymplecticConnection, h: &ScalarFn) -> Vec<ScalarFn> {
    let sym = c.sym();
    let d = sym.dim();
    let x = hamiltonian_vector_field(&sym, h);
    let g = c.christoffel();
    let mut out = vec![ScalarFn::zero(d); d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut v = x[k].partial(i).partial(j);
                for a in 0..d {
                    v = v.add(&x[a].mul(&g.get(&[k, i, j]).partial(a)));
                    v = v.sub(&g.get(&[a, i, j]).mul(&x[k].partial(a)));
                    v = v.add(&g.get(&[k, a, j]).mul(&x[a].partial(i)));
                    v = v.add(&g.get(&[k, i, a]).mul(&x[a].partial(j)));
                }
                for l in 0..d {
                    let w = sym.omega(l, k);
                    if w != 0 {
                        let o = (l * d + i) * d + j;
                        out[o] = out[o].add(&v.scale_rational(&Rational::from_int(w)));
                    }
                }
            }
        }
    }
    out
}

#[test]
fn lie_derivative_matches_coordinate_formula() {
    for seed in 0..4 {
        for n in 1..=2 {
            let sym = SymplecticData::standard(n);
            let d = sym.dim();
            let mut s = Sampler::new(300 + seed);
            let b = FreqBox::uniform(d, 1);
            let c = SymplecticConnection::new(s.s3(sym, &b, 1, if n == 1 { 1.0 } else { 0.4 }));
            let h = s.zero_mean_fn(&b, 2);
            let ours = c.lie_derivative(&h).expect("symmetric");
            let oracle = lie_oracle(&c, &h);
            for l in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        assert_eq!(ours.get(l, i, j), oracle[(l * d + i) * d + j]);
                    }
                }
            }
        }
    }
}

#[test]
fn lie_derivative_degenerate_cases() {
    let sym = SymplecticData::standard(1);
    let mut s = Sampler::new(5);
    let c = SymplecticConnection::new(s.s3(sym, &FreqBox::uniform(2, 1), 2, 1.0));
    assert!(c.lie_derivative(&ScalarFn::rational(2, r(4, 1))).unwrap().is_zero());
    // flat connection: only the second covariant derivative of X_H remains, i.e. ∂∂∂H lowered
    let flat = SymplecticConnection::flat(sym);
    let h = s.zero_mean_fn(&FreqBox::uniform(2, 1), 2);
    let l = flat.lie_derivative(&h).unwrap();
    // X^k = Λ^{ak} ∂_a H and ω_{lk} Λ^{ak} = -δ_l^a, so the lowered tensor is -∂_l ∂_i ∂_j H
    for (i, j, k) in [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)] {
        let third = h.partial(i).partial(j).partial(k).neg();
        assert_eq!(l.get(i, j, k), third);
    }
}
