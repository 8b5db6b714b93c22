//! Vector fields of the control-lifted system on `𝔾 × ℝ^m`.
//!
//! The lift of `ẋ = Σ uᵢ Xᵢ(x)`, `u̇ = v` uses the drift `F₀ = (Σ uᵢXᵢ, 0)`
//! and the vertical generators `Fⱼ = (0, eⱼ)`.  Left-invariance collapses the
//! position dependence, so every iterated bracket is determined by a
//! `u`-polynomial with Lie-algebra coefficients plus a constant vertical part,
//! and that class is closed under the bracket
//! `[(A,a),(B,b)] = ([A,B] + a·∂_u B − b·∂_u A, 0)`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::algebra::{LieVector, StratifiedAlgebra};
use crate::scalar::{rat, Rat};

/// Exponent vector of a monomial in `u_1..u_m`.
pub type Monomial = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedField {
    pub m: usize,
    pub dim: usize,
    /// Sparse `u`-polynomial with Lie-algebra-valued coefficients.
    pub algebra_part: BTreeMap<Monomial, LieVector<Rat>>,
    /// Constant component along the fibre `ℝ^m`.
    pub vertical_part: Vec<Rat>,
}

impl LiftedField {
    pub fn zero(m: usize, dim: usize) -> Self {
        LiftedField {
            m,
            dim,
            algebra_part: BTreeMap::new(),
            vertical_part: vec![Rat::zero(); m],
        }
    }

    /// `F₀ = (Σ uᵢ Xᵢ, 0)`.
    pub fn drift(a: &StratifiedAlgebra) -> Self {
        let m = a.horizontal_dim();
        let mut f = LiftedField::zero(m, a.dim());
        for i in 0..m {
            let mut mono = vec![0u32; m];
            mono[i] = 1;
            f.algebra_part.insert(mono, LieVector::basis(a.dim(), i));
        }
        f
    }

    /// `Fⱼ = (0, eⱼ)`, `j` zero-based.
    pub fn vertical_generator(a: &StratifiedAlgebra, j: usize) -> Self {
        let m = a.horizontal_dim();
        let mut f = LiftedField::zero(m, a.dim());
        f.vertical_part[j] = rat(1);
        f
    }

    pub fn is_zero(&self) -> bool {
        self.algebra_part.is_empty() && self.vertical_part.iter().all(|v| v.is_zero())
    }

    fn insert_term(&mut self, mono: Monomial, v: LieVector<Rat>) {
        if v.is_zero() {
            return;
        }
        match self.algebra_part.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let acc = e.get_mut();
                for (a, b) in acc.0.iter_mut().zip(&v.0) {
                    *a += b.clone();
                }
                if acc.is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Evaluate the algebra part at a concrete `u`.
    pub fn eval_algebra(&self, u: &[Rat]) -> LieVector<Rat> {
        let mut out = LieVector::zero(self.dim);
        for (mono, v) in &self.algebra_part {
            let mut c = rat(1);
            for (e, ui) in mono.iter().zip(u) {
                for _ in 0..*e {
                    c *= ui.clone();
                }
            }
            if !c.is_zero() {
                out.add_scaled(&c, v);
            }
        }
        out
    }

    /// Largest total degree among stored monomials.
    pub fn degree(&self) -> u32 {
        self.algebra_part
            .keys()
            .map(|m| m.iter().sum())
            .max()
            .unwrap_or(0)
    }
}

/// `[(A,a),(B,b)] = ([A,B] + a·∂_u B − b·∂_u A, 0)`.
pub fn lifted_bracket(alg: &StratifiedAlgebra, f: &LiftedField, g: &LiftedField) -> LiftedField {
    assert_eq!(f.m, g.m, "lifted fields over different fibres");
    assert_eq!(f.dim, g.dim, "lifted fields over different algebras");
    let mut out = LiftedField::zero(f.m, f.dim);
    for (mf, vf) in &f.algebra_part {
        for (mg, vg) in &g.algebra_part {
            let mono: Monomial = mf.iter().zip(mg).map(|(a, b)| a + b).collect();
            out.insert_term(mono, alg.bracket(vf, vg));
        }
    }
    // a·∂_u B − b·∂_u A
    for (sign_neg, vert, field) in [(false, &f.vertical_part, g), (true, &g.vertical_part, f)] {
        for i in 0..f.m {
            let a_i = &vert[i];
            if a_i.is_zero() {
                continue;
            }
            for (mono, v) in &field.algebra_part {
                if mono[i] == 0 {
                    continue;
                }
                let mut dm = mono.clone();
                dm[i] -= 1;
                let mut scale = a_i.clone() * rat(mono[i] as i64);
                if sign_neg {
                    scale = -scale;
                }
                let mut term = LieVector::zero(f.dim);
                term.add_scaled(&scale, v);
                out.insert_term(dm, term);
            }
        }
    }
    out
}

/// `ad_{F₀}^k Fⱼ` for `k = 0..=kmax`, `j` zero-based.
pub fn drift_ad_tower(a: &StratifiedAlgebra, j: usize, kmax: usize) -> Vec<LiftedField> {
    let f0 = LiftedField::drift(a);
    let mut tower = vec![LiftedField::vertical_generator(a, j)];
    for _ in 0..kmax {
        let next = lifted_bracket(a, &f0, tower.last().unwrap());
        tower.push(next);
    }
    tower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;
    use crate::scalar::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mono(m: usize, entries: &[(usize, u32)]) -> Monomial {
        let mut e = vec![0u32; m];
        for &(i, p) in entries {
            e[i] = p;
        }
        e
    }

    #[test]
    fn first_bracket_is_minus_generator() {
        for spec in ["heisenberg:1", "free:3:2"] {
            let a = preset(spec).unwrap().algebra;
            let m = a.horizontal_dim();
            let f0 = LiftedField::drift(&a);
            for j in 0..m {
                let fj = LiftedField::vertical_generator(&a, j);
                let b = lifted_bracket(&a, &f0, &fj);
                assert!(b.vertical_part.iter().all(|v| v.is_zero()));
                let mut expected = LieVector::zero(a.dim());
                expected.0[j] = rat(-1);
                assert_eq!(b.algebra_part.len(), 1, "{spec}");
                assert_eq!(b.algebra_part[&mono(m, &[])], expected, "{spec}");
            }
        }
    }

    #[test]
    fn second_bracket_collects_u_linear_brackets() {
        // [F₀,[F₀,Fᵢ]] = (Σⱼ uⱼ [Xᵢ,Xⱼ], 0)
        for spec in ["heisenberg:1", "free:3:2"] {
            let a = preset(spec).unwrap().algebra;
            let m = a.horizontal_dim();
            let f0 = LiftedField::drift(&a);
            for i in 0..m {
                let tower = drift_ad_tower(&a, i, 2);
                let got = &tower[2];
                let mut expected = LiftedField::zero(m, a.dim());
                for j in 0..m {
                    let mut v = LieVector::zero(a.dim());
                    for (k, c) in a.bracket_basis(i, j) {
                        v.0[k] = c;
                    }
                    expected.insert_term(mono(m, &[(j, 1)]), v);
                }
                assert_eq!(got, &expected, "{spec} generator {i}");
                let _ = f0;
            }
        }
    }

    #[test]
    fn mixed_bracket_with_vertical_vanishes() {
        // [[F₀,Fᵢ], Fⱼ] = 0: the inner bracket is constant in u.
        for spec in ["heisenberg:1", "free:3:2"] {
            let a = preset(spec).unwrap().algebra;
            let m = a.horizontal_dim();
            let f0 = LiftedField::drift(&a);
            for i in 0..m {
                let inner = lifted_bracket(&a, &f0, &LiftedField::vertical_generator(&a, i));
                for j in 0..m {
                    let b =
                        lifted_bracket(&a, &inner, &LiftedField::vertical_generator(&a, j));
                    assert!(b.is_zero(), "{spec} [{i},{j}]");
                }
            }
        }
    }

    #[test]
    fn bracket_of_first_brackets_recovers_structure_constants() {
        // [[F₀,Fᵢ],[F₀,Fⱼ]] = ([Xᵢ,Xⱼ], 0)
        for spec in ["heisenberg:1", "free:3:2"] {
            let a = preset(spec).unwrap().algebra;
            let m = a.horizontal_dim();
            let f0 = LiftedField::drift(&a);
            for i in 0..m {
                for j in 0..m {
                    let bi = lifted_bracket(&a, &f0, &LiftedField::vertical_generator(&a, i));
                    let bj = lifted_bracket(&a, &f0, &LiftedField::vertical_generator(&a, j));
                    let b = lifted_bracket(&a, &bi, &bj);
                    let mut expected = LiftedField::zero(m, a.dim());
                    let mut v = LieVector::zero(a.dim());
                    for (k, c) in a.bracket_basis(i, j) {
                        v.0[k] = c;
                    }
                    expected.insert_term(mono(m, &[]), v);
                    assert_eq!(b, expected, "{spec} [{i},{j}]");
                }
            }
        }
    }

    fn random_field(rng: &mut ChaCha8Rng, a: &StratifiedAlgebra) -> LiftedField {
        let m = a.horizontal_dim();
        let mut f = LiftedField::zero(m, a.dim());
        for _ in 0..3 {
            let mut mo = vec![0u32; m];
            for e in mo.iter_mut() {
                *e = rng.gen_range(0..=2);
            }
            let mut v = LieVector::zero(a.dim());
            for c in v.0.iter_mut() {
                *c = rat(rng.gen_range(-2i64..=2));
            }
            f.insert_term(mo, v);
        }
        for c in f.vertical_part.iter_mut() {
            *c = rat(rng.gen_range(-2i64..=2));
        }
        f
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi() {
        let a = preset("free:2:3").unwrap().algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let f = random_field(&mut rng, &a);
            let g = random_field(&mut rng, &a);
            let h = random_field(&mut rng, &a);
            let fg = lifted_bracket(&a, &f, &g);
            let mut gf = lifted_bracket(&a, &g, &f);
            for v in gf.algebra_part.values_mut() {
                for c in v.0.iter_mut() {
                    *c = -c.clone();
                }
            }
            assert_eq!(fg.algebra_part, gf.algebra_part);

            // Jacobi needs vertical parts only on the outermost level, so it
            // holds for the full class: check [f,[g,h]] + [g,[h,f]] + [h,[f,g]] = 0.
            let mut total = LiftedField::zero(f.m, f.dim);
            for (x, y, z) in [(&f, &g, &h), (&g, &h, &f), (&h, &f, &g)] {
                let inner = lifted_bracket(&a, y, z);
                let outer = lifted_bracket(&a, x, &inner);
                for (mo, v) in outer.algebra_part {
                    total.insert_term(mo, v);
                }
            }
            assert!(total.is_zero());
        }
    }

    #[test]
    fn drift_tower_truncates_at_the_step() {
        for spec in ["heisenberg:1", "heisenberg:2", "engel", "superengel", "freequot:3"] {
            let a = preset(spec).unwrap().algebra;
            let s = a.step();
            for j in 0..a.horizontal_dim() {
                let tower = drift_ad_tower(&a, j, s + 1);
                assert!(tower[s + 1].is_zero(), "{spec} ad^{}+1 should vanish", s);
            }
        }
    }
}
