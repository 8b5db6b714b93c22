//! Lyndon words over an ordered alphabet of generators.
//!
//! The basis of a free nilpotent Lie algebra is indexed by Lyndon words in
//! lexicographic generator order; the bracketing of a word is given by its
//! standard factorization.

/// A word over generator indices `0..m`.
pub type Word = Vec<u8>;

/// Generate all Lyndon words over `m` letters of length `1..=max_len`,
/// sorted by (length, lexicographic order).
///
/// Uses Duval's algorithm. Returns `None` if more than `cap` words would be
/// produced.
pub fn lyndon_words(m: usize, max_len: usize, cap: usize) -> Option<Vec<Word>> {
    assert!(m >= 1 && m <= u8::MAX as usize);
    let mut words: Vec<Word> = Vec::new();
    let mut w: Vec<u8> = vec![0];
    loop {
        if w.len() <= max_len {
            words.push(w.clone());
            if words.len() > cap {
                return None;
            }
        }
        // Extend periodically to max_len, then increment the last
        // incrementable letter.
        let k = w.len();
        while w.len() < max_len {
            let c = w[w.len() - k];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last as usize == m - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if w.is_empty() {
            break;
        }
        *w.last_mut().unwrap() += 1;
    }
    words.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
    Some(words)
}

/// True if `w` is a Lyndon word: nonempty and strictly smaller than all its
/// proper suffixes.
pub fn is_lyndon(w: &[u8]) -> bool {
    if w.is_empty() {
        return false;
    }
    (1..w.len()).all(|i| w < &w[i..])
}

/// Standard factorization `w = (u, v)` of a Lyndon word of length >= 2:
/// `v` is the longest proper suffix of `w` that is Lyndon. Both factors are
/// Lyndon and `u < v`.
pub fn standard_factorization(w: &[u8]) -> (Word, Word) {
    assert!(w.len() >= 2, "factorization needs length >= 2");
    for i in 1..w.len() {
        if is_lyndon(&w[i..]) {
            return (w[..i].to_vec(), w[i..].to_vec());
        }
    }
    unreachable!("every Lyndon word of length >= 2 has a standard factorization");
}
