//! Signed matchings of the index set `{p, p-1, ..., 1}`.
//!
//! A matching splits the index set into unordered pairs, plus one singleton
//! when `p` is odd. Each matching carries a sign: `(-1)^z` where `z` counts
//! interlacing pairs (two pairs interlace when exactly one endpoint of one
//! lies strictly between the endpoints of the other; a singleton interlaces
//! a pair when it lies strictly between its endpoints). The signed count of
//! all matchings is 1 for every `p`, which is the combinatorial engine
//! behind the projector distribution's matching-indexed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{is_permutation, permutation_sign};

/// Errors from matching construction and operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    /// The pairs/singleton do not partition `{1, ..., p}`.
    #[error("pairs and singleton must partition {{1, ..., {p}}}: {detail}")]
    BadPartition { p: usize, detail: String },
    /// Singleton presence must match the parity of `p`.
    #[error("a matching of {{1, ..., {p}}} must have a singleton iff p is odd")]
    SingletonParity { p: usize },
    /// A permutation argument is not a bijection of `1..=p`.
    #[error("not a permutation of 1..={p}")]
    NotAPermutation { p: usize },
    /// The pairing involution is defined for even `p` only.
    #[error("the pairing involution is defined for even p (got p = {p})")]
    InvolutionNeedsEvenP { p: usize },
}

/// A matching of `{1, ..., p}` in canonical form: every pair is stored as
/// `(hi, lo)` with `hi > lo`, and pairs are sorted by descending `hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Matching {
    p: usize,
    pairs: Vec<(usize, usize)>,
    singleton: Option<usize>,
}

impl Matching {
    /// Builds a matching from raw pairs and an optional singleton,
    /// canonicalizing the encoding and validating that the parts partition
    /// `{1, ..., p}` with a singleton exactly when `p` is odd.
    pub fn new(
        p: usize,
        pairs: Vec<(usize, usize)>,
        singleton: Option<usize>,
    ) -> Result<Self, MatchingError> {
        if singleton.is_some() != (p % 2 == 1) {
            return Err(MatchingError::SingletonParity { p });
        }
        let mut seen = vec![false; p + 1];
        let mut mark = |v: usize| -> Result<(), MatchingError> {
            if v == 0 || v > p {
                return Err(MatchingError::BadPartition {
                    p,
                    detail: format!("element {v} out of range"),
                });
            }
            if seen[v] {
                return Err(MatchingError::BadPartition {
                    p,
                    detail: format!("element {v} covered twice"),
                });
            }
            seen[v] = true;
            Ok(())
        };
        let mut canon: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            mark(a)?;
            mark(b)?;
            if a == b {
                return Err(MatchingError::BadPartition {
                    p,
                    detail: format!("degenerate pair ({a}, {b})"),
                });
            }
            canon.push((a.max(b), a.min(b)));
        }
        if let Some(s) = singleton {
            mark(s)?;
        }
        if let Some(missing) = (1..=p).find(|&v| !seen[v]) {
            return Err(MatchingError::BadPartition {
                p,
                detail: format!("element {missing} not covered"),
            });
        }
        canon.sort_by_key(|x| std::cmp::Reverse(x.0));
        Ok(Matching {
            p,
            pairs: canon,
            singleton,
        })
    }

    /// Size of the matched index set.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Pairs in canonical order: each `(hi, lo)` with `hi > lo`, sorted by
    /// descending `hi`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The singleton element (present iff `p` is odd).
    pub fn singleton(&self) -> Option<usize> {
        self.singleton
    }

    /// Number of interlacing pairs: pair-pair interlacings plus
    /// singleton-pair interlacings.
    pub fn interlacing_count(&self) -> usize {
        let mut count = 0;
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            for &(c, d) in &self.pairs[i + 1..] {
                let c_inside = b < c && c < a;
                let d_inside = b < d && d < a;
                if c_inside != d_inside {
                    count += 1;
                }
            }
            if let Some(s) = self.singleton {
                if b < s && s < a {
                    count += 1;
                }
            }
        }
        count
    }

    /// The sign `(-1)^z` where `z` is [`Self::interlacing_count`].
    pub fn parity(&self) -> i32 {
        if self.interlacing_count().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// The base matching `{p, p-1} | {p-2, p-3} | ... ` (singleton `{1}` when
/// `p` is odd). Its interlacing count is zero.
pub fn zeta0(p: usize) -> Matching {
    let mut pairs = Vec::with_capacity(p / 2);
    let mut hi = p;
    while hi >= 2 {
        pairs.push((hi, hi - 1));
        hi -= 2;
    }
    let singleton = if p % 2 == 1 { Some(1) } else { None };
    Matching::new(p, pairs, singleton).expect("base matching is always valid")
}

/// All matchings of `{1, ..., p}` in a deterministic (sorted canonical)
/// order.
pub fn enumerate_matchings(p: usize) -> Vec<Matching> {
    let mut out = Vec::new();
    let mut unused: Vec<usize> = (1..=p).rev().collect();
    let mut pairs = Vec::new();
    recurse(&mut unused, &mut pairs, None, p, &mut out);
    out.sort();
    out
}

fn recurse(
    unused: &mut Vec<usize>,
    pairs: &mut Vec<(usize, usize)>,
    singleton: Option<usize>,
    p: usize,
    out: &mut Vec<Matching>,
) {
    if unused.is_empty() {
        out.push(
            Matching::new(p, pairs.clone(), singleton).expect("enumeration builds valid matchings"),
        );
        return;
    }
    let top = unused.remove(0);
    if p % 2 == 1 && singleton.is_none() {
        recurse(unused, pairs, Some(top), p, out);
    }
    for i in 0..unused.len() {
        let partner = unused.remove(i);
        pairs.push((top, partner));
        recurse(unused, pairs, singleton, p, out);
        pairs.pop();
        unused.insert(i, partner);
    }
    unused.insert(0, top);
}

/// Number of matchings of `{1, ..., p}` by the closed product formula
/// (`p!!`-style): `p! / (2^(p/2) (p/2)!)` for even `p`, and `p` times the
/// count for `p - 1` when `p` is odd.
pub fn match_count(p: usize) -> u128 {
    let pairs = p / 2;
    let mut acc: u128 = 1;
    // (p - 1)(p - 3)(p - 5)... over `pairs` factors, times p when odd.
    let even_part = if p.is_multiple_of(2) { p } else { p - 1 };
    let mut f = even_part.saturating_sub(1);
    for _ in 0..pairs {
        acc *= f as u128;
        f = f.saturating_sub(2);
    }
    if p % 2 == 1 {
        acc *= p as u128;
    }
    acc
}

/// Signed count of all matchings of `{1, ..., p}`. Equals 1 for every `p`.
pub fn parity_sum(p: usize) -> i64 {
    enumerate_matchings(p)
        .iter()
        .map(|z| z.parity() as i64)
        .sum()
}

/// Relabels a matching by a permutation `sigma` of `1..=p` given in
/// one-line notation (`sigma[i - 1]` is the image of `i`), then
/// re-canonicalizes.
pub fn act(sigma: &[usize], zeta: &Matching) -> Result<Matching, MatchingError> {
    let p = zeta.p;
    if sigma.len() != p || !is_permutation(sigma) {
        return Err(MatchingError::NotAPermutation { p });
    }
    let pairs = zeta
        .pairs
        .iter()
        .map(|&(a, b)| (sigma[a - 1], sigma[b - 1]))
        .collect();
    let singleton = zeta.singleton.map(|s| sigma[s - 1]);
    Matching::new(p, pairs, singleton)
}

/// The sign-reversing pairing involution on matchings of an even index set.
///
/// Scans the blocks of the base matching from the top: the first block
/// `{p - 2j, p - 2j - 1}` absent from `zeta` determines a transposition of
/// those two values, which is applied to `zeta`. The base matching itself is
/// the unique fixed point; everywhere else the involution flips the sign.
pub fn involution_j(zeta: &Matching) -> Result<Matching, MatchingError> {
    let p = zeta.p;
    if p % 2 == 1 {
        return Err(MatchingError::InvolutionNeedsEvenP { p });
    }
    let mut hi = p;
    while hi >= 2 {
        let block = (hi, hi - 1);
        if !zeta.pairs.contains(&block) {
            let mut sigma: Vec<usize> = (1..=p).collect();
            sigma.swap(hi - 1, hi - 2);
            return act(&sigma, zeta);
        }
        hi -= 2;
    }
    Ok(zeta.clone())
}

/// The sign attached to a permutation `sigma` in the reduction of the
/// permutation-indexed projector sum onto matchings:
/// `(-1)^sigma * prod_j sign(sigma(p - 2j) - sigma(p - 2j - 1))` over the
/// pair blocks of the base matching. Equals the sign of `act(sigma, zeta0)`.
pub fn sigma_zeta0_sign(sigma: &[usize]) -> Result<i32, MatchingError> {
    let p = sigma.len();
    if !is_permutation(sigma) {
        return Err(MatchingError::NotAPermutation { p });
    }
    let mut sign = permutation_sign(sigma);
    let mut hi = p;
    while hi >= 2 {
        if sigma[hi - 1] < sigma[hi - 2] {
            sign = -sign;
        }
        hi -= 2;
    }
    Ok(sign)
}
