//! Truncated free associative algebra over the rationals.
//!
//! Engine behind structure constants and the Baker-Campbell-Hausdorff table:
//! Lie elements are expanded into noncommutative words, multiplied or
//! exponentiated there, and decomposed back into the Lyndon basis using the
//! triangularity of Lyndon bracketings.

use crate::lyndon::{is_lyndon, standard_factorization, Word};
use crate::scalar::Rat;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Polynomial in noncommuting generators, truncated beyond degree `deg`.
/// The empty word is the unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub deg: usize,
    pub terms: BTreeMap<Word, Rat>,
}

impl Series {
    pub fn zero(deg: usize) -> Self {
        Series {
            deg,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(deg: usize) -> Self {
        let mut s = Series::zero(deg);
        s.terms.insert(Vec::new(), Rat::one());
        s
    }

    pub fn letter(deg: usize, i: u8) -> Self {
        let mut s = Series::zero(deg);
        s.terms.insert(vec![i], Rat::one());
        s
    }

    pub fn word(deg: usize, w: &[u8]) -> Self {
        let mut s = Series::zero(deg);
        if w.len() <= deg {
            s.terms.insert(w.to_vec(), Rat::one());
        }
        s
    }

    pub fn add_term(&mut self, w: Word, c: Rat) {
        if w.len() > self.deg || c.is_zero() {
            return;
        }
        let became_zero = {
            let entry = self.terms.entry(w.clone()).or_insert_with(Rat::zero);
            *entry += c;
            entry.is_zero()
        };
        if became_zero {
            self.terms.remove(&w);
        }
    }

    pub fn add(&self, other: &Series) -> Series {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Series {
        if c.is_zero() {
            return Series::zero(self.deg);
        }
        let mut out = Series::zero(self.deg);
        for (w, v) in &self.terms {
            out.terms.insert(w.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &Series) -> Series {
        let mut out = Series::zero(self.deg);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                if w1.len() + w2.len() > self.deg {
                    continue;
                }
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, c1 * c2);
            }
        }
        out
    }

    pub fn commutator(&self, other: &Series) -> Series {
        self.mul(other).add(&other.mul(self).scale(&-Rat::one()))
    }

    /// Exponential of a series with no constant term.
    pub fn exp(&self) -> Series {
        assert!(!self.terms.contains_key(&Vec::new() as &Word));
        let mut out = Series::one(self.deg);
        let mut power = Series::one(self.deg);
        let mut fact = Rat::one();
        for k in 1..=self.deg {
            power = power.mul(self);
            fact *= Rat::from_integer(k.into());
            out = out.add(&power.scale(&(Rat::one() / &fact)));
        }
        out
    }

    /// Logarithm of a series with constant term 1.
    pub fn log(&self) -> Series {
        let mut u = self.clone();
        let removed = u.terms.remove(&Vec::new() as &Word);
        assert_eq!(removed, Some(Rat::one()), "log needs constant term 1");
        let mut out = Series::zero(self.deg);
        let mut power = Series::one(self.deg);
        for k in 1..=self.deg {
            power = power.mul(&u);
            let sign = if k % 2 == 1 { Rat::one() } else { -Rat::one() };
            out = out.add(&power.scale(&(sign / Rat::from_integer(k.into()))));
        }
        out
    }
}

/// Expansion of the Lyndon bracketing of `w` into words: leaves map to the
/// single-letter word, and a factorization `(u, v)` maps to `uv - vu`.
pub fn lyndon_bracket_expansion(deg: usize, w: &[u8]) -> Series {
    if w.len() == 1 {
        return Series::letter(deg, w[0]);
    }
    let (u, v) = standard_factorization(w);
    let eu = lyndon_bracket_expansion(deg, &u);
    let ev = lyndon_bracket_expansion(deg, &v);
    eu.commutator(&ev)
}

/// Decompose a Lie element (given as a word series) over the Lyndon basis.
///
/// Relies on triangularity: the expansion of the bracketing of a Lyndon word
/// `w` is `w` plus lexicographically larger words of the same content, so
/// repeatedly stripping the smallest remaining word terminates. Panics if the
/// series is not a Lie element.
pub fn lyndon_decompose(series: &Series) -> Vec<(Word, Rat)> {
    let mut rest = series.clone();
    let mut out: Vec<(Word, Rat)> = Vec::new();
    while let Some((w, c)) = rest
        .terms
        .iter()
        .min_by(|(a, _), (b, _)| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())))
        .map(|(w, c)| (w.clone(), c.clone()))
    {
        assert!(
            is_lyndon(&w),
            "series is not a Lie element: leading word {w:?} is not Lyndon"
        );
        let expansion = lyndon_bracket_expansion(series.deg, &w);
        rest = rest.add(&expansion.scale(&-c.clone()));
        out.push((w, c));
    }
    out
}
