//! Stratified nilpotent Lie algebras with exact rational structure constants.
//!
//! An algebra is stored as a graded basis (layer 1 first) together with the
//! sparse bracket table `[e_i, e_j] = sum_k c^k_{ij} e_k` for `i < j`. All
//! constructors validate antisymmetry (implicit), the grading, and the Jacobi
//! identity, so downstream code can rely on the table being an actual Lie
//! algebra.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Deref, DerefMut, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::RowSpace;
use crate::lyndon::{self, Word};
use crate::scalar::{Rat, Scalar};
use crate::tensor::{lyndon_bracket_expansion, lyndon_decompose, Series};

/// Coefficient vector of a Lie algebra element in the graded basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LieVector<S>(pub Vec<S>);

/// Coefficient vector of a linear functional in the dual basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Covector<S>(pub Vec<S>);

impl<S: Scalar> LieVector<S> {
    pub fn zero(dim: usize) -> Self {
        LieVector(vec![S::zero(); dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i] = S::one();
        v
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_exactly_zero())
    }

    pub fn scale(&self, c: &S) -> Self {
        LieVector(self.0.iter().map(|x| x.clone() * c.clone()).collect())
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: &S, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.clone() + c.clone() * b.clone();
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LieVector<T> {
        LieVector(self.0.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> LieVector<f64> {
        self.map(Scalar::to_f64)
    }
}

impl<S: Scalar> Covector<S> {
    pub fn zero(dim: usize) -> Self {
        Covector(vec![S::zero(); dim])
    }

    pub fn dual_basis(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.0[i] = S::one();
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_exactly_zero())
    }

    pub fn pair(&self, v: &LieVector<S>) -> S {
        self.0
            .iter()
            .zip(&v.0)
            .fold(S::zero(), |acc, (p, x)| acc + p.clone() * x.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Covector(self.0.iter().map(|x| x.clone() * c.clone()).collect())
    }

    pub fn add_scaled(&mut self, c: &S, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.clone() + c.clone() * b.clone();
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Covector<T> {
        Covector(self.0.iter().map(f).collect())
    }
}

macro_rules! vector_ops {
    ($t:ident) => {
        impl<S> Deref for $t<S> {
            type Target = Vec<S>;
            fn deref(&self) -> &Vec<S> {
                &self.0
            }
        }
        impl<S> DerefMut for $t<S> {
            fn deref_mut(&mut self) -> &mut Vec<S> {
                &mut self.0
            }
        }
        impl<S> From<Vec<S>> for $t<S> {
            fn from(v: Vec<S>) -> Self {
                $t(v)
            }
        }
        impl<S: Scalar> Add for &$t<S> {
            type Output = $t<S>;
            fn add(self, rhs: &$t<S>) -> $t<S> {
                $t(self
                    .0
                    .iter()
                    .zip(&rhs.0)
                    .map(|(a, b)| a.clone() + b.clone())
                    .collect())
            }
        }
        impl<S: Scalar> Sub for &$t<S> {
            type Output = $t<S>;
            fn sub(self, rhs: &$t<S>) -> $t<S> {
                $t(self
                    .0
                    .iter()
                    .zip(&rhs.0)
                    .map(|(a, b)| a.clone() - b.clone())
                    .collect())
            }
        }
        impl<S: Scalar> Neg for &$t<S> {
            type Output = $t<S>;
            fn neg(self) -> $t<S> {
                $t(self.0.iter().map(|a| -a.clone()).collect())
            }
        }
    };
}

vector_ops!(LieVector);
vector_ops!(Covector);

/// Sparse bracket specification used to build an algebra from an explicit
/// table. Entries list `[e_i, e_j]` for `i < j` only; omitted pairs commute.
#[derive(Clone, Debug)]
pub struct BracketTable {
    pub name: String,
    pub layer_dims: Vec<usize>,
    pub basis_names: Vec<String>,
    pub entries: Vec<(usize, usize, Vec<(usize, Rat)>)>,
}

#[derive(Clone, Debug)]
pub struct StratifiedAlgebra {
    name: String,
    layer_dims: Vec<usize>,
    /// 1-based layer of each basis index.
    layer_of: Vec<usize>,
    /// `layer_offsets[k]` is the first basis index of layer `k+1`; the last
    /// entry is the total dimension.
    layer_offsets: Vec<usize>,
    basis_names: Vec<String>,
    /// Sparse brackets for `i < j`; pairs without an entry commute.
    table: HashMap<(usize, usize), Vec<(usize, Rat)>>,
    table_f64: HashMap<(usize, usize), Vec<(usize, f64)>>,
}

impl StratifiedAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.layer_of.len()
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Homogeneous dimension `sum_k k * dim(layer k)`.
    pub fn homogeneous_dim(&self) -> usize {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(k, d)| (k + 1) * d)
            .sum()
    }

    /// 1-based layer of basis index `i`.
    pub fn layer_of(&self, i: usize) -> usize {
        self.layer_of[i]
    }

    /// Basis index range of layer `k` (1-based).
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        self.layer_offsets[k - 1]..self.layer_offsets[k]
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn basis_index(&self, name: &str) -> Option<usize> {
        self.basis_names.iter().position(|n| n == name)
    }

    /// Homogeneous weight of a covector concentrated on one layer, or `None`
    /// if it mixes layers.
    pub fn homogeneous_layer<S: Scalar>(&self, v: &[S]) -> Option<usize> {
        let mut layer = None;
        for (i, c) in v.iter().enumerate() {
            if !c.is_exactly_zero() {
                match layer {
                    None => layer = Some(self.layer_of[i]),
                    Some(k) if k == self.layer_of[i] => {}
                    _ => return None,
                }
            }
        }
        layer
    }

    pub fn is_horizontal<S: Scalar>(&self, v: &[S]) -> bool {
        v.iter()
            .enumerate()
            .all(|(i, c)| self.layer_of[i] == 1 || c.is_exactly_zero())
    }

    /// Build from an explicit sparse table, validating the grading and the
    /// Jacobi identity.
    pub fn from_table(spec: BracketTable) -> Result<Self> {
        let dim: usize = spec.layer_dims.iter().sum();
        if spec.layer_dims.is_empty() || spec.layer_dims[0] == 0 {
            return Err(Error::GroupSpec(
                "the first layer must contain at least one generator".into(),
            ));
        }
        if spec.basis_names.len() != dim {
            return Err(Error::GroupSpec(format!(
                "{} basis names for dimension {dim}",
                spec.basis_names.len()
            )));
        }
        for (i, n) in spec.basis_names.iter().enumerate() {
            if spec.basis_names[..i].contains(n) {
                return Err(Error::GroupSpec(format!("duplicate basis name {n}")));
            }
        }
        let mut layer_of = Vec::with_capacity(dim);
        let mut layer_offsets = vec![0];
        for (k, &d) in spec.layer_dims.iter().enumerate() {
            layer_of.extend(std::iter::repeat(k + 1).take(d));
            layer_offsets.push(layer_offsets.last().unwrap() + d);
        }
        let mut table = HashMap::new();
        for (i, j, entry) in spec.entries {
            if i >= j || j >= dim {
                return Err(Error::GroupSpec(format!(
                    "bracket entry ({i},{j}) must satisfy i < j < {dim}"
                )));
            }
            let target = layer_of[i] + layer_of[j];
            let mut sparse: Vec<(usize, Rat)> = Vec::new();
            for (k, c) in entry {
                if c.is_zero() {
                    continue;
                }
                if k >= dim || layer_of[k] != target {
                    return Err(Error::GroupSpec(format!(
                        "[{}, {}] has a component on {} outside layer {target}",
                        spec.basis_names[i],
                        spec.basis_names[j],
                        spec.basis_names.get(k).map_or("?", |s| s.as_str()),
                    )));
                }
                sparse.push((k, c));
            }
            sparse.sort_by_key(|&(k, _)| k);
            if !sparse.is_empty() && table.insert((i, j), sparse).is_some() {
                return Err(Error::GroupSpec(format!("duplicate bracket entry ({i},{j})")));
            }
        }
        let table_f64 = table
            .iter()
            .map(|(&ij, entry)| {
                (ij, entry.iter().map(|(k, c)| (*k, c.to_f64())).collect())
            })
            .collect();
        let alg = StratifiedAlgebra {
            name: spec.name,
            layer_dims: spec.layer_dims,
            layer_of,
            layer_offsets,
            basis_names: spec.basis_names,
            table,
            table_f64,
        };
        alg.check_jacobi()?;
        Ok(alg)
    }

    fn check_jacobi(&self) -> Result<()> {
        let n = self.dim();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let ei = LieVector::<Rat>::basis(n, i);
                    let ej = LieVector::<Rat>::basis(n, j);
                    let ek = LieVector::<Rat>::basis(n, k);
                    let mut acc = self.bracket(&self.bracket(&ei, &ej), &ek);
                    acc.add_scaled(&Rat::one(), &self.bracket(&self.bracket(&ej, &ek), &ei));
                    acc.add_scaled(&Rat::one(), &self.bracket(&self.bracket(&ek, &ei), &ej));
                    if !acc.is_zero() {
                        return Err(Error::GroupSpec(format!(
                            "Jacobi identity fails on ({}, {}, {})",
                            self.basis_names[i], self.basis_names[j], self.basis_names[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sparse bracket of two basis elements, with the sign handled for any
    /// index order.
    pub fn bracket_basis(&self, i: usize, j: usize) -> Vec<(usize, Rat)> {
        if i == j {
            return Vec::new();
        }
        let (a, b, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        match self.table.get(&(a, b)) {
            None => Vec::new(),
            Some(entry) if !flip => entry.clone(),
            Some(entry) => entry.iter().map(|(k, c)| (*k, -c.clone())).collect(),
        }
    }

    pub fn bracket<S: Scalar>(&self, x: &LieVector<S>, y: &LieVector<S>) -> LieVector<S> {
        let mut out = LieVector::<S>::zero(self.dim());
        for (&(i, j), entry) in &self.table {
            let coeff = x.0[i].clone() * y.0[j].clone() - x.0[j].clone() * y.0[i].clone();
            if coeff.is_exactly_zero() {
                continue;
            }
            for (k, c) in entry {
                out.0[*k] = out.0[*k].clone() + coeff.clone() * S::from_ratio(c);
            }
        }
        out
    }

    /// Bracket on raw `f64` coordinates, avoiding rational conversions in
    /// numeric hot loops.
    pub fn bracket_f64(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (&(i, j), entry) in &self.table_f64 {
            let coeff = x[i] * y[j] - x[j] * y[i];
            if coeff != 0.0 {
                for &(k, c) in entry {
                    out[k] += coeff * c;
                }
            }
        }
    }

    /// `ad_x(y) = [x, y]`
    pub fn ad<S: Scalar>(&self, x: &LieVector<S>) -> impl Fn(&LieVector<S>) -> LieVector<S> + '_
    where
        S: 'static,
    {
        let x = x.clone();
        move |y| self.bracket(&x, y)
    }

    /// Matrix of `ad_x` acting on coordinates (columns are `[x, e_j]`).
    pub fn ad_matrix(&self, x: &LieVector<Rat>) -> Vec<Vec<Rat>> {
        let n = self.dim();
        let mut m = vec![vec![Rat::zero(); n]; n];
        for j in 0..n {
            let col = self.bracket(x, &LieVector::basis(n, j));
            for i in 0..n {
                m[i][j] = col.0[i].clone();
            }
        }
        m
    }

    /// Span of `ad_x^k(v)` over all horizontal `v` and all `k >= 0`.
    pub fn ad_power_span(&self, x: &LieVector<Rat>) -> RowSpace {
        let n = self.dim();
        let mut span = RowSpace::new();
        let mut queue: Vec<LieVector<Rat>> = self
            .layer_range(1)
            .map(|i| LieVector::basis(n, i))
            .collect();
        while let Some(v) = queue.pop() {
            if span.insert(v.0.clone()) {
                queue.push(self.bracket(x, &v));
            }
        }
        span
    }

    /// Free nilpotent Lie algebra on `m` generators of step `s`, in the
    /// Lyndon word basis ordered by (length, lexicographic).
    pub fn free(m: usize, s: usize, cap: usize) -> Result<Self> {
        if m == 0 || s == 0 {
            return Err(Error::InvalidArgument(
                "free algebra needs at least one generator and step >= 1".into(),
            ));
        }
        let words = lyndon::lyndon_words(m, s, cap).ok_or(Error::BasisCapExceeded {
            generators: m,
            step: s,
            cap,
        })?;
        let index: HashMap<Word, usize> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut layer_dims = vec![0usize; s];
        for w in &words {
            layer_dims[w.len() - 1] += 1;
        }
        let basis_names = words.iter().map(|w| bracket_name(w)).collect();

        // Expand each basis bracket in the truncated tensor algebra and read
        // the commutators back off in Lyndon coordinates.
        let expansions: Vec<Series> = words
            .iter()
            .map(|w| lyndon_bracket_expansion(s, w))
            .collect();
        let mut entries = Vec::new();
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                if words[i].len() + words[j].len() > s {
                    continue;
                }
                let comm = expansions[i].commutator(&expansions[j]);
                let sparse: Vec<(usize, Rat)> = lyndon_decompose(&comm)
                    .into_iter()
                    .map(|(w, c)| (index[&w], c))
                    .collect();
                if !sparse.is_empty() {
                    entries.push((i, j, sparse));
                }
            }
        }
        Self::from_table(BracketTable {
            name: format!("free:{m}:{s}"),
            layer_dims,
            basis_names,
            entries,
        })
    }

    /// Quotient by the ideal generated by homogeneous `relations`. The
    /// surviving basis is the set of original basis elements whose indices
    /// avoid the ideal's pivot coordinates.
    pub fn quotient(&self, name: &str, relations: &[LieVector<Rat>]) -> Result<Self> {
        let n = self.dim();
        for (idx, r) in relations.iter().enumerate() {
            if r.0.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.0.len(),
                });
            }
            if !r.is_zero() && self.homogeneous_layer(&r.0).is_none() {
                let layers: Vec<usize> = (0..n)
                    .filter(|&i| !r.0[i].is_zero())
                    .map(|i| self.layer_of[i])
                    .collect();
                return Err(Error::NonHomogeneousRelation { index: idx, layers });
            }
        }
        // Close under bracketing with the generators; since the generators
        // span layer 1 this yields the full Lie ideal.
        let mut ideal = RowSpace::new();
        let mut queue: Vec<LieVector<Rat>> = relations.to_vec();
        while let Some(v) = queue.pop() {
            if ideal.insert(v.0.clone()) {
                for g in self.layer_range(1) {
                    queue.push(self.bracket(&LieVector::basis(n, g), &v));
                }
            }
        }
        let pivots: Vec<usize> = ideal.pivots().to_vec();
        let keep: Vec<usize> = (0..n).filter(|i| !pivots.contains(i)).collect();
        let old_to_new: HashMap<usize, usize> =
            keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut layer_dims = vec![0usize; self.step()];
        for &i in &keep {
            layer_dims[self.layer_of[i] - 1] += 1;
        }
        while layer_dims.last() == Some(&0) {
            layer_dims.pop();
        }
        if layer_dims.is_empty() {
            return Err(Error::GroupSpec(
                "quotient collapses the whole algebra".into(),
            ));
        }
        // Project [e_i, e_j] through the quotient map: eliminate against the
        // ideal, then read off the surviving coordinates.
        let mut entries = Vec::new();
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                let mut v = LieVector::<Rat>::zero(n);
                for (k, c) in self.bracket_basis(i, j) {
                    v.0[k] = c;
                }
                let reduced = ideal.reduce(v.0);
                let sparse: Vec<(usize, Rat)> = reduced
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (old_to_new[&k], c))
                    .collect();
                if !sparse.is_empty() {
                    entries.push((a, b, sparse));
                }
            }
        }
        Self::from_table(BracketTable {
            name: name.to_string(),
            layer_dims,
            basis_names: keep.iter().map(|&i| self.basis_names[i].clone()).collect(),
            entries,
        })
    }

    /// All stored bracket entries `(i, j, [(k, c)])` with `i < j`, sorted.
    pub fn bracket_entries(&self) -> Vec<(usize, usize, &[(usize, Rat)])> {
        let mut out: Vec<_> = self
            .table
            .iter()
            .map(|(&(i, j), e)| (i, j, e.as_slice()))
            .collect();
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    /// Stable text form of the table, usable as a cache key.
    pub fn canonical_key(&self) -> String {
        let mut pairs: Vec<_> = self.table.iter().collect();
        pairs.sort_by_key(|(&ij, _)| ij);
        let mut s = format!("dims={:?}", self.layer_dims);
        for (&(i, j), entry) in pairs {
            s.push_str(&format!(";{i},{j}:"));
            for (k, c) in entry {
                s.push_str(&format!("{k}={c},"));
            }
        }
        s
    }

    pub fn format_vector<S: Scalar>(&self, v: &[S]) -> String {
        let mut parts = Vec::new();
        for (i, c) in v.iter().enumerate() {
            if c.is_exactly_zero() {
                continue;
            }
            if c.clone() == S::one() {
                parts.push(self.basis_names[i].clone());
            } else if c.clone() == -S::one() {
                parts.push(format!("-{}", self.basis_names[i]));
            } else {
                parts.push(format!("{}*{}", c, self.basis_names[i]));
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ").replace("+ -", "- ")
        }
    }
}

impl fmt::Display for StratifiedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (dim {}, step {}, layers {:?})",
            self.name,
            self.dim(),
            self.step(),
            self.layer_dims
        )
    }
}

/// Nested bracket name of a Lyndon word, e.g. `[x1,[x1,x2]]`.
fn bracket_name(w: &Word) -> String {
    if w.len() == 1 {
        return format!("x{}", w[0] + 1);
    }
    let (u, v) = lyndon::standard_factorization(w);
    format!("[{},{}]", bracket_name(&u), bracket_name(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn lie(c: &[i64]) -> LieVector<Rat> {
        LieVector(c.iter().map(|&x| rat(x)).collect())
    }

    #[test]
    fn free_step_two_on_two_generators() {
        let a = StratifiedAlgebra::free(2, 2, 5000).unwrap();
        assert_eq!(a.layer_dims(), &[2, 1]);
        assert_eq!(a.basis_names(), &["x1", "x2", "[x1,x2]"]);
        let b = a.bracket(&lie(&[1, 0, 0]), &lie(&[0, 1, 0]));
        assert_eq!(b, lie(&[0, 0, 1]));
    }

    #[test]
    fn free_step_three_brackets() {
        let a = StratifiedAlgebra::free(2, 3, 5000).unwrap();
        assert_eq!(a.layer_dims(), &[2, 1, 2]);
        // [x1, [x1,x2]] and [x2, [x1,x2]] = -[[x1,x2],x2]
        let e1 = LieVector::<Rat>::basis(5, 0);
        let e2 = LieVector::<Rat>::basis(5, 1);
        let e12 = LieVector::<Rat>::basis(5, 2);
        assert_eq!(a.bracket(&e1, &e12), lie(&[0, 0, 0, 1, 0]));
        assert_eq!(a.bracket(&e2, &e12), lie(&[0, 0, 0, 0, -1]));
        assert_eq!(a.basis_names()[3], "[x1,[x1,x2]]");
        assert_eq!(a.basis_names()[4], "[[x1,x2],x2]");
    }

    #[test]
    fn bracket_is_antisymmetric_and_graded() {
        let a = StratifiedAlgebra::free(3, 3, 5000).unwrap();
        assert_eq!(a.layer_dims(), &[3, 3, 8]);
        let n = a.dim();
        for i in 0..n {
            for j in 0..n {
                let b = a.bracket(
                    &LieVector::<Rat>::basis(n, i),
                    &LieVector::<Rat>::basis(n, j),
                );
                let c = a.bracket(
                    &LieVector::<Rat>::basis(n, j),
                    &LieVector::<Rat>::basis(n, i),
                );
                assert_eq!(&b, &(-&c));
                if !b.is_zero() {
                    let target = a.layer_of(i) + a.layer_of(j);
                    assert_eq!(a.homogeneous_layer(&b.0), Some(target));
                }
            }
        }
    }

    #[test]
    fn grading_violations_are_rejected() {
        let bad = BracketTable {
            name: "bad".into(),
            layer_dims: vec![2, 1],
            basis_names: vec!["X".into(), "Y".into(), "Z".into()],
            entries: vec![(0, 2, vec![(1, rat(1))])],
        };
        assert!(StratifiedAlgebra::from_table(bad).is_err());
    }

    #[test]
    fn jacobi_violations_are_rejected() {
        // [X,Y] = Z1, [X,Z1] = W, [Y,Z2] = W with an inconsistent extra term
        // [X,Z2] = W makes Jacobi fail on (X, Y, Z2) only if forced; instead
        // take the simplest broken table: sl2-like relations cannot be graded,
        // so fabricate [X,[X,Y]] inconsistency via two step-3 targets.
        let bad = BracketTable {
            name: "bad".into(),
            layer_dims: vec![3, 1, 1],
            basis_names: vec!["X".into(), "Y".into(), "U".into(), "Z".into(), "W".into()],
            entries: vec![
                (0, 1, vec![(3, rat(1))]),
                (1, 2, vec![(3, rat(1))]),
                (0, 3, vec![(4, rat(1))]),
                // Jacobi on (X, Y, U) forces [Y, [U, X]] + [U, [X, Y]] = [X, Z] = W
                // but both inner brackets vanish here.
            ],
        };
        assert!(StratifiedAlgebra::from_table(bad).is_err());
    }

    #[test]
    fn quotient_kills_one_generator_direction() {
        // Quotient of free(2,2) by x2: leaves the line through x1 (the
        // bracket [x1,x2] is swallowed by the ideal).
        let a = StratifiedAlgebra::free(2, 2, 5000).unwrap();
        let q = a.quotient("line", &[lie(&[0, 1, 0])]).unwrap();
        assert_eq!(q.layer_dims(), &[1]);
        assert_eq!(q.basis_names(), &["x1"]);
    }

    #[test]
    fn quotient_rejects_mixed_layers() {
        let a = StratifiedAlgebra::free(2, 2, 5000).unwrap();
        let err = a.quotient("bad", &[lie(&[1, 0, 1])]).unwrap_err();
        assert!(matches!(err, Error::NonHomogeneousRelation { .. }));
    }

    #[test]
    fn ad_power_span_in_free_step_two() {
        let a = StratifiedAlgebra::free(2, 2, 5000).unwrap();
        // ad_x1 maps x2 to [x1,x2]; the span of the horizontal layer and its
        // ad_x1 orbit is everything.
        let span = a.ad_power_span(&lie(&[1, 0, 0]));
        assert_eq!(span.rank(), 3);
    }

    #[test]
    fn f64_bracket_matches_exact() {
        let a = StratifiedAlgebra::free(2, 3, 5000).unwrap();
        let x = lie(&[2, -1, 3, 0, 1]);
        let y = lie(&[1, 1, 0, -2, 0]);
        let exact = a.bracket(&x, &y).to_f64();
        let mut out = vec![0.0; 5];
        a.bracket_f64(&x.to_f64(), &y.to_f64(), &mut out);
        assert_eq!(out, exact.0);
    }
}
