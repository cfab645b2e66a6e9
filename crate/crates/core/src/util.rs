//! Small shared helpers: permutation signs, factorials and exact rationals.

use num_rational::Ratio;

/// Exact rational with 128-bit parts, wide enough for the factorial/power
/// weights that appear in chart constants up to the supported rank.
pub type Rat = Ratio<i128>;

/// Sign of a permutation given in one-line notation over `1..=n`.
///
/// Counts inversions; quadratic in the length, which is ample for the ranks
/// this crate handles. Panics in debug builds if `perm` is not a bijection
/// of `1..=n`.
pub fn permutation_sign(perm: &[usize]) -> i32 {
    debug_assert!(is_permutation(perm));
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Whether `perm` is a bijection of `1..=perm.len()` in one-line notation.
pub fn is_permutation(perm: &[usize]) -> bool {
    let n = perm.len();
    let mut seen = vec![false; n + 1];
    for &v in perm {
        if v == 0 || v > n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Exact factorial as a rational (numerator `n!`, denominator 1).
///
/// Supported up to `n = 33` (the largest factorial fitting in `i128`).
pub fn factorial(n: usize) -> Rat {
    assert!(n <= 33, "factorial overflow: {n}! does not fit in i128");
    let mut acc: i128 = 1;
    for k in 2..=n as i128 {
        acc *= k;
    }
    Rat::from_integer(acc)
}

/// `base^exp` as an exact rational, `exp >= 0`.
pub fn int_pow(base: i128, exp: u32) -> Rat {
    Rat::from_integer(base.checked_pow(exp).expect("integer power overflow"))
}

/// Lossy conversion of an exact rational weight to floating point, for use
/// at pairing time only.
pub fn rat_to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
