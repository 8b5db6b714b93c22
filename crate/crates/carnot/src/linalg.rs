//! Exact linear algebra over the rationals: incremental echelon forms,
//! nullspaces, and definiteness of symmetric matrices.

use crate::scalar::Rat;
use num_traits::{One, Signed, Zero};

/// Row space in reduced echelon form, built incrementally.
#[derive(Debug, Clone, Default)]
pub struct RowSpace {
    /// Echelonized rows, each normalized to a unit pivot.
    rows: Vec<Vec<Rat>>,
    /// Pivot column of each row.
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Eliminate `v` against the stored rows; the result has zeros in all
    /// pivot columns.
    pub fn reduce(&self, mut v: Vec<Rat>) -> Vec<Rat> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi -= &c * ri;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.reduce(v.to_vec()).iter().all(Rat::is_zero)
    }

    /// Insert a vector; returns true if it enlarged the span.
    pub fn insert(&mut self, v: Vec<Rat>) -> bool {
        let mut v = self.reduce(v);
        let Some(p) = v.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let inv = Rat::one() / v[p].clone();
        for c in v.iter_mut() {
            *c *= &inv;
        }
        // Back-eliminate so existing rows are zero in the new pivot column.
        for row in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                for (ri, vi) in row.iter_mut().zip(&v) {
                    *ri -= &c * vi;
                }
            }
        }
        let at = self.pivots.iter().position(|&q| q > p).unwrap_or(self.rows.len());
        self.rows.insert(at, v);
        self.pivots.insert(at, p);
        true
    }
}

/// Basis of the space of covectors vanishing on the span of `rows`
/// (the annihilator), inside an `n`-dimensional space.
pub fn annihilator(rows: &[Vec<Rat>], n: usize) -> Vec<Vec<Rat>> {
    let mut space = RowSpace::new();
    for r in rows {
        assert_eq!(r.len(), n);
        space.insert(r.clone());
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if space.pivots().contains(&free) {
            continue;
        }
        // p with p[free] = 1 and p[pivot] = -row[free] solves row . p = 0 for
        // every echelon row, hence for the whole span.
        let mut p = vec![Rat::zero(); n];
        p[free] = Rat::one();
        for (row, &piv) in space.rows().iter().zip(space.pivots()) {
            p[piv] = -row[free].clone();
        }
        basis.push(p);
    }
    basis
}

/// Exact classification of a symmetric rational matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Definiteness {
    PositiveDefinite,
    /// Positive semidefinite with nontrivial kernel.
    PositiveSemidefinite,
    /// Not positive semidefinite; the witness `x` has `x^T A x < 0`.
    HasNegativeDirection(Vec<Rat>),
}

/// Decide whether a symmetric matrix is positive (semi)definite, or produce
/// an explicit negative direction, by recursive congruence elimination.
pub fn symmetric_definiteness(a: &[Vec<Rat>]) -> Definiteness {
    let k = a.len();
    for row in a {
        assert_eq!(row.len(), k);
    }
    let mut active: Vec<usize> = (0..k).collect();
    let mut a: Vec<Vec<Rat>> = a.to_vec();
    // Records (pivot index, coefficients c_j) of each elimination so that a
    // negative direction found later can be pulled back.
    let mut steps: Vec<(usize, Vec<(usize, Rat)>)> = Vec::new();
    let mut singular = false;

    let pull_back = |steps: &[(usize, Vec<(usize, Rat)>)], mut x: Vec<Rat>| -> Vec<Rat> {
        for (p, cs) in steps.iter().rev() {
            let mut xp = Rat::zero();
            for (j, c) in cs {
                xp -= c * &x[*j];
            }
            x[*p] = xp;
        }
        x
    };

    loop {
        // Negative diagonal entry: immediate witness.
        if let Some(&i) = active.iter().find(|&&i| a[i][i].is_negative()) {
            let mut x = vec![Rat::zero(); k];
            x[i] = Rat::one();
            return Definiteness::HasNegativeDirection(pull_back(&steps, x));
        }
        // Zero diagonal with a nonzero off-diagonal entry: the 2x2 block
        // [[0, b], [b, d]] takes negative values.
        for &i in &active {
            if !a[i][i].is_zero() {
                continue;
            }
            if let Some(&j) = active
                .iter()
                .find(|&&j| j != i && !a[i][j].is_zero())
            {
                let b = a[i][j].clone();
                let d = a[j][j].clone();
                // Q(t e_i + e_j) = 2 t b + d; pick t so the value is -1.
                let t = -(d + Rat::one()) / (Rat::from_integer(2.into()) * b);
                let mut x = vec![Rat::zero(); k];
                x[i] = t;
                x[j] = Rat::one();
                return Definiteness::HasNegativeDirection(pull_back(&steps, x));
            }
        }
        // Drop zero rows (kernel directions).
        let zero_rows: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&i| a[i][i].is_zero() && active.iter().all(|&j| a[i][j].is_zero()))
            .collect();
        if !zero_rows.is_empty() {
            singular = true;
            active.retain(|i| !zero_rows.contains(i));
        }
        let Some(&p) = active.iter().find(|&&i| a[i][i].is_positive()) else {
            // No entries left.
            return if singular {
                Definiteness::PositiveSemidefinite
            } else {
                Definiteness::PositiveDefinite
            };
        };
        // Congruence elimination of the pivot row/column.
        let app = a[p][p].clone();
        let others: Vec<usize> = active.iter().copied().filter(|&j| j != p).collect();
        let cs: Vec<(usize, Rat)> = others
            .iter()
            .map(|&j| (j, a[j][p].clone() / app.clone()))
            .collect();
        for &j in &others {
            for &l in &others {
                let delta = a[j][p].clone() * a[p][l].clone() / app.clone();
                a[j][l] -= delta;
            }
        }
        for &j in &others {
            a[j][p] = Rat::zero();
            a[p][j] = Rat::zero();
        }
        steps.push((p, cs));
        active.retain(|&i| i != p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, ratio};

    fn rows(data: &[&[i64]]) -> Vec<Vec<Rat>> {
        data.iter()
            .map(|r| r.iter().map(|&x| rat(x)).collect())
            .collect()
    }

    #[test]
    fn rank_and_membership() {
        let mut s = RowSpace::new();
        assert!(s.insert(rows(&[&[1, 2, 3]]).remove(0)));
        assert!(s.insert(rows(&[&[0, 1, 1]]).remove(0)));
        assert!(!s.insert(rows(&[&[1, 3, 4]]).remove(0)));
        assert_eq!(s.rank(), 2);
        assert!(s.contains(&rows(&[&[2, 5, 7]]).remove(0)));
        assert!(!s.contains(&rows(&[&[0, 0, 1]]).remove(0)));
    }

    #[test]
    fn annihilator_of_plane_in_three_space() {
        let ann = annihilator(&rows(&[&[1, 0, 0], &[0, 1, 0]]), 3);
        assert_eq!(ann.len(), 1);
        assert_eq!(ann[0], vec![rat(0), rat(0), rat(1)]);
    }

    #[test]
    fn annihilator_pairs_to_zero() {
        let u = rows(&[&[1, 2, 0, -1], &[0, 1, 1, 1]]);
        let ann = annihilator(&u, 4);
        assert_eq!(ann.len(), 2);
        for p in &ann {
            for r in &u {
                let dot: Rat = r.iter().zip(p).map(|(a, b)| a * b).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn definiteness_classification() {
        let id = rows(&[&[1, 0], &[0, 1]]);
        assert_eq!(symmetric_definiteness(&id), Definiteness::PositiveDefinite);

        let psd = rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(
            symmetric_definiteness(&psd),
            Definiteness::PositiveSemidefinite
        );

        let zero = rows(&[&[0, 0], &[0, 0]]);
        assert_eq!(
            symmetric_definiteness(&zero),
            Definiteness::PositiveSemidefinite
        );
    }

    #[test]
    fn negative_direction_witnesses_evaluate_negative() {
        let check = |m: Vec<Vec<Rat>>| {
            let Definiteness::HasNegativeDirection(x) = symmetric_definiteness(&m) else {
                panic!("expected a negative direction");
            };
            let mut val = Rat::zero();
            for i in 0..m.len() {
                for j in 0..m.len() {
                    val += &x[i] * &m[i][j] * &x[j];
                }
            }
            assert!(val.is_negative(), "witness value {val} not negative");
        };
        check(rows(&[&[-1]]));
        check(rows(&[&[0, 1], &[1, 0]]));
        check(rows(&[&[1, 2], &[2, 1]]));
        check(rows(&[&[2, 3, 0], &[3, 2, 1], &[0, 1, 2]]));
        check(vec![
            vec![rat(1), ratio(3, 2)],
            vec![ratio(3, 2), rat(2)],
        ]);
    }

    #[test]
    fn semidefinite_diag_block() {
        let m = rows(&[&[0, 0, 0], &[0, 1, 0], &[0, 0, 2]]);
        assert_eq!(
            symmetric_definiteness(&m),
            Definiteness::PositiveSemidefinite
        );
    }
}
