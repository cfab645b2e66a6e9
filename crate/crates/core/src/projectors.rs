//! The signed-matching projector distributions on the compact torus, their
//! permutation (unreduced) and Fourier forms, and the weighted per-chart
//! assembly applied to Cartan data.
//!
//! `Lambda_p` is a distribution on `p` circle coordinates: a sum over signed
//! matchings whose terms are products of `cot(phi/2)` factors and deltas on
//! coordinate sums. It admits three faithful presentations:
//!
//! * the matching form ([`build_lambda`]) — one term per matching,
//!   coefficient `(-i)^m / (2 pi)^m`;
//! * the permutation form ([`build_lambda_sigma_form`]) — one term per
//!   permutation with the printed constant `(-i)^m / ((2 pi)^m 2^m m!)`
//!   kept unreduced;
//! * the Fourier form ([`LcalPartial`]) — the antisymmetrized coefficient
//!   table `1/(2 pi)^p` over strictly decreasing integer vectors, truncated
//!   and optionally regularized.
//!
//! [`build_theta`] assembles the weighted per-chart distributions
//! `Lambda_{n-2k}(phi) prod_j delta(t_j) delta(theta_j)` with exact rational
//! weights, and [`apply_theta`] pairs them against supplied chart data.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::distributions::{
    pair, DistError, DistTerm, Distribution, Domain, LinearForm, TestFunction, TfTerm,
};
use crate::kernels::{chart_domain, ExpPoly, KernelError};
use crate::matchings::{enumerate_matchings, zeta0, Matching};
use crate::util::{factorial, permutation_sign, rat_to_f64, Rat};

#[derive(Debug, Error)]
pub enum ProjectorError {
    #[error("chart index k = {k} out of range for rank n = {n}")]
    Range { n: usize, k: usize },
    #[error("chart data mismatch: {0}")]
    ChartMismatch(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(-i)^m`.
fn neg_i_pow(m: usize) -> Complex64 {
    (-I).powu(m as u32)
}

/// The circle domain `phi1..phip` the torus distributions live on.
pub fn lambda_domain(p: usize) -> Domain {
    Domain::circle((1..=p).map(|j| format!("phi{j}")))
}

/// Normalization volume of chart `A_k`: `1 / (k! (n-2k)! 2^k)`.
pub fn gamma_k(n: usize, k: usize) -> Result<Rat, ProjectorError> {
    if 2 * k > n {
        return Err(ProjectorError::Range { n, k });
    }
    let denom = factorial(k) * factorial(n - 2 * k) * Rat::from_integer(1 << k);
    Ok(Rat::from_integer(1) / denom)
}

/// The term of the matching form attached to one matching: cot factors on
/// the smaller coordinate of each pair, deltas on the pair sums and on the
/// singleton.
fn matching_term(p: usize, zeta: &Matching, coeff: Complex64) -> DistTerm {
    let mut deltas = Vec::new();
    let mut cots = Vec::new();
    for &(hi, lo) in zeta.pairs() {
        let mut coeffs = vec![0i64; p];
        coeffs[hi - 1] = 1;
        coeffs[lo - 1] = 1;
        deltas.push(LinearForm::angles(coeffs));
        cots.push(lo - 1);
    }
    if let Some(s) = zeta.singleton() {
        let mut coeffs = vec![0i64; p];
        coeffs[s - 1] = 1;
        deltas.push(LinearForm::angles(coeffs));
    }
    cots.sort_unstable();
    DistTerm {
        coeff,
        deltas,
        cots,
        freq: vec![0; p],
    }
}

/// The matching form of `Lambda_p`: one term per matching, coefficient
/// `(-i)^m (2 pi)^{-m} * parity`, cot factors on the smaller pair
/// coordinates.
pub fn build_lambda(p: usize) -> Distribution {
    let m = p / 2;
    let scale = neg_i_pow(m) / (2.0 * PI).powi(m as i32);
    let terms: Vec<DistTerm> = enumerate_matchings(p)
        .iter()
        .map(|zeta| matching_term(p, zeta, scale * (zeta.parity() as f64)))
        .collect();
    Distribution::new(lambda_domain(p), terms).expect("matching terms are well-formed")
}

/// The permutation form of `Lambda_p`: one term per element of the symmetric
/// group, signed by the permutation sign, with the printed constant
/// `(-i)^m / ((2 pi)^m 2^m m!)` left unreduced. Reduces to the matching form
/// on the delta supports; kept as a faithful transcription for audits.
pub fn build_lambda_sigma_form(p: usize) -> Distribution {
    let m = p / 2;
    let constant =
        neg_i_pow(m) / ((2.0 * PI).powi(m as i32) * (1u64 << m) as f64 * rat_to_f64(factorial(m)));
    let base = zeta0(p);
    let mut terms = Vec::new();
    let mut perm: Vec<usize> = (1..=p).collect();
    loop {
        let sign = permutation_sign(&perm);
        let mut deltas = Vec::new();
        let mut cots = Vec::new();
        for &(hi, lo) in base.pairs() {
            let a = perm[hi - 1];
            let b = perm[lo - 1];
            let mut coeffs = vec![0i64; p];
            coeffs[a - 1] = 1;
            coeffs[b - 1] = 1;
            deltas.push(LinearForm::angles(coeffs));
            cots.push(b - 1); // the sigma-image of the pair's smaller slot
        }
        if let Some(s) = base.singleton() {
            let mut coeffs = vec![0i64; p];
            coeffs[perm[s - 1] - 1] = 1;
            deltas.push(LinearForm::angles(coeffs));
        }
        cots.sort_unstable();
        terms.push(DistTerm {
            coeff: constant * (sign as f64),
            deltas,
            cots,
            freq: vec![0; p],
        });
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Distribution::new(lambda_domain(p), terms).expect("permutation terms are well-formed")
}

/// Lexicographic successor; false when wrapped.
fn next_permutation(perm: &mut [usize]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// The antisymmetrized exponential `sum_sigma (-1)^sigma e^{i <a o sigma, phi>}`
/// as a pairable test function on `p` circle coordinates.
pub fn e_a(p: usize, a: &[i64]) -> TestFunction {
    assert_eq!(a.len(), p, "index vector length must equal p");
    let domain = lambda_domain(p);
    let mut terms = Vec::new();
    let mut perm: Vec<usize> = (1..=p).collect();
    loop {
        let sign = permutation_sign(&perm);
        terms.push(TfTerm {
            coeff: c64(sign as f64, 0.0),
            freq: perm.iter().map(|&j| a[j - 1]).collect(),
            lines: Vec::new(),
        });
        if !next_permutation(&mut perm) {
            break;
        }
    }
    TestFunction { domain, terms }
}

// ---------------------------------------------------------------------------
// The Fourier form
// ---------------------------------------------------------------------------

/// Smoothing applied to the truncated Fourier form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regularization {
    Abel { q: f64 },
    Cesaro,
    Sharp,
}

impl Regularization {
    /// The printed default: Abel with `q = 0.999`.
    pub fn default_abel() -> Self {
        Regularization::Abel { q: 0.999 }
    }
}

/// The truncated/regularized Fourier form of `Lambda_p` as a lazy
/// antisymmetric coefficient table: the coefficient of `e^{i <b, phi>}` is
/// `sign(sort b) * weight(b) / (2 pi)^p` for `b` with distinct entries
/// within the truncation bound, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcalPartial {
    pub p: usize,
    pub a_bound: i64,
    pub reg: Regularization,
}

impl LcalPartial {
    pub fn new(p: usize, a_bound: i64, reg: Regularization) -> Self {
        assert!(a_bound >= 1, "truncation bound must be at least 1");
        LcalPartial { p, a_bound, reg }
    }

    /// The coefficient of `e^{i <b, phi>}` (real by antisymmetry).
    pub fn coefficient(&self, b: &[i64]) -> f64 {
        assert_eq!(b.len(), self.p);
        if b.iter().any(|&x| x.abs() > self.a_bound) {
            return 0.0;
        }
        // Sign of the permutation sorting b into strictly decreasing order;
        // zero on repeated entries.
        let mut sign = 1.0f64;
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                if b[i] == b[j] {
                    return 0.0;
                }
                if b[i] < b[j] {
                    sign = -sign;
                }
            }
        }
        let weight: f64 = match self.reg {
            Regularization::Abel { q } => q.powi(b.iter().map(|&x| x.abs()).sum::<i64>() as i32),
            Regularization::Cesaro => b
                .iter()
                .map(|&x| 1.0 - x.abs() as f64 / (self.a_bound as f64 + 1.0))
                .product(),
            Regularization::Sharp => 1.0,
        };
        sign * weight / (2.0 * PI).powi(self.p as i32)
    }

    /// Pairing with the exponential `e^{i <a, phi>}` over the torus:
    /// `(2 pi)^p` times the coefficient at `-a`.
    pub fn pair_exponential(&self, a: &[i64]) -> f64 {
        let neg: Vec<i64> = a.iter().map(|&x| -x).collect();
        self.coefficient(&neg) * (2.0 * PI).powi(self.p as i32)
    }
}

// ---------------------------------------------------------------------------
// The weighted per-chart assembly
// ---------------------------------------------------------------------------

/// One chart's share of the assembled kernel: the audit-ready weight parts
/// and the distribution `Lambda_{n-2k}(phi) prod_j delta(t_j) delta(theta_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaChart {
    pub k: usize,
    pub weight: ThetaWeight,
    pub dist: Distribution,
}

/// The chart weight `global_sign * (num_arg)!/(den_arg)! * k_sign *
/// 4^{four_exponent} * gamma`, stored unevaluated so audits can compare the
/// parts against any re-derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaWeight {
    /// `(-1)^{n(n-1)/2}`.
    pub global_sign: i32,
    /// `(-1)^k`.
    pub k_sign: i32,
    /// Numerator factorial argument `n - 2r`.
    pub factorial_num_arg: usize,
    /// Denominator factorial argument `floor(n/2) - r`.
    pub factorial_den_arg: usize,
    /// Exponent of 4: `r - k`.
    pub four_exponent: u32,
    /// Chart volume normalization.
    pub gamma: Rat,
}

impl ThetaWeight {
    pub fn value(&self) -> Rat {
        Rat::from_integer((self.global_sign * self.k_sign) as i128)
            * factorial(self.factorial_num_arg)
            / factorial(self.factorial_den_arg)
            * Rat::from_integer(4i128.pow(self.four_exponent))
            * self.gamma
    }
}

/// The full weighted kernel for one `(n, r)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaKernel {
    pub n: usize,
    pub r: usize,
    pub per_k: Vec<ThetaChart>,
}

/// Extends `Lambda_p` on the chart's angle block by the pair-pinning deltas
/// `delta(theta_j) delta(t_j)`.
fn lambda_on_chart(n: usize, k: usize) -> Distribution {
    let p = n - 2 * k;
    let lambda = build_lambda(p);
    let domain = chart_domain(n, k);
    let n_angles = p + k;
    let terms: Vec<DistTerm> = lambda
        .terms
        .iter()
        .map(|term| {
            let mut deltas: Vec<LinearForm> = term
                .deltas
                .iter()
                .map(|form| {
                    let mut coeffs = form.angle_coeffs.clone();
                    coeffs.resize(n_angles, 0);
                    LinearForm {
                        angle_coeffs: coeffs,
                        line: form.line,
                        offset: form.offset,
                    }
                })
                .collect();
            for j in 0..k {
                let mut coeffs = vec![0i64; n_angles];
                coeffs[p + j] = 1;
                deltas.push(LinearForm::angles(coeffs)); // delta(theta_j)
                deltas.push(LinearForm::line(n_angles, j, 1, Rat::from_integer(0)));
            }
            let mut freq = term.freq.clone();
            freq.resize(n_angles, 0);
            DistTerm {
                coeff: term.coeff,
                deltas,
                cots: term.cots.clone(),
                freq,
            }
        })
        .collect();
    Distribution::new(domain, terms).expect("chart extension preserves well-formedness")
}

/// Assembles the per-chart weights and distributions for `(n, r)`.
pub fn build_theta(n: usize, r: usize) -> Result<ThetaKernel, ProjectorError> {
    if 2 * r > n {
        return Err(ProjectorError::Range { n, k: r });
    }
    let global_sign = if (n * (n - 1) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    };
    let mut per_k = Vec::with_capacity(r + 1);
    for k in 0..=r {
        let weight = ThetaWeight {
            global_sign,
            k_sign: if k % 2 == 0 { 1 } else { -1 },
            factorial_num_arg: n - 2 * r,
            factorial_den_arg: n / 2 - r,
            four_exponent: (r - k) as u32,
            gamma: gamma_k(n, k)?,
        };
        per_k.push(ThetaChart {
            k,
            weight,
            dist: lambda_on_chart(n, k),
        });
    }
    Ok(ThetaKernel { n, r, per_k })
}

/// Pairs the kernel against chart data `h_k`, returning
/// `sum_k weight_k <dist_k, h_k>`. Charts with no supplied data contribute
/// zero; supplied data must live on the matching chart.
pub fn apply_theta(
    kernel: &ThetaKernel,
    data: &BTreeMap<usize, ExpPoly>,
) -> Result<Complex64, ProjectorError> {
    for (&k, h) in data {
        if k > kernel.r {
            return Err(ProjectorError::ChartMismatch(format!(
                "data supplied for chart k = {k} beyond r = {}",
                kernel.r
            )));
        }
        if h.n != kernel.n || h.k != k {
            return Err(ProjectorError::ChartMismatch(format!(
                "h_{k} lives on chart A_{} at rank {}, expected A_{k} at rank {}",
                h.k, h.n, kernel.n
            )));
        }
    }
    let mut total = c64(0.0, 0.0);
    for chart in &kernel.per_k {
        let Some(h) = data.get(&chart.k) else {
            continue;
        };
        let f = h.to_test_function()?;
        let value = pair(&chart.dist, &f)?;
        total += value * rat_to_f64(chart.weight.value());
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::fourier_coefficient;
    use crate::kernels::MPoly;
    use itertools::Itertools;

    #[test]
    fn frozen_gamma_values() {
        assert_eq!(gamma_k(3, 0).unwrap(), Rat::new(1, 6));
        assert_eq!(gamma_k(4, 1).unwrap(), Rat::new(1, 4));
        assert_eq!(gamma_k(2, 1).unwrap(), Rat::new(1, 2));
        assert!(gamma_k(3, 2).is_err());
    }

    #[test]
    fn lambda_smallest_cases() {
        // p = 0: the constant 1.
        let l0 = build_lambda(0);
        assert_eq!(l0.terms.len(), 1);
        assert_eq!(fourier_coefficient(&l0, &[]).unwrap(), c64(1.0, 0.0));
        // p = 1: the point delta; every Fourier coefficient is 1.
        let l1 = build_lambda(1);
        assert_eq!(l1.terms.len(), 1);
        for a in -3i64..=3 {
            assert_eq!(fourier_coefficient(&l1, &[a]).unwrap(), c64(1.0, 0.0));
        }
        // p = 2: one matching; frozen coefficient at (1, 0).
        let l2 = build_lambda(2);
        assert_eq!(l2.terms.len(), 1);
        let v = fourier_coefficient(&l2, &[1, 0]).unwrap();
        assert!((v - c64(1.0, 0.0)).norm() < 1e-14, "{v}");
    }

    #[test]
    fn lambda_term_counts_match_the_matching_counts() {
        for p in 0..=7usize {
            let expected = crate::matchings::match_count(p) as usize;
            assert_eq!(build_lambda(p).terms.len(), expected, "p = {p}");
        }
    }

    #[test]
    fn sigma_form_structure_for_p2() {
        let s = build_lambda_sigma_form(2);
        assert_eq!(s.terms.len(), 2);
        let c = -I / (2.0 * PI * 2.0);
        // Identity permutation: +cot(phi1/2) delta(phi1+phi2); swap:
        // -cot(phi2/2) delta(phi1+phi2).
        let by_cot: BTreeMap<usize, Complex64> =
            s.terms.iter().map(|t| (t.cots[0], t.coeff)).collect();
        assert!((by_cot[&0] - c).norm() < 1e-15);
        assert!((by_cot[&1] + c).norm() < 1e-15);
    }

    #[test]
    fn sigma_form_agrees_with_matching_form() {
        for p in 0..=4usize {
            let matching = build_lambda(p);
            let sigma = build_lambda_sigma_form(p);
            assert_eq!(
                sigma.terms.len(),
                (1..=p).product::<usize>().max(1),
                "p! terms"
            );
            for a in (0..p).map(|_| -2i64..=2).multi_cartesian_product() {
                let va = fourier_coefficient(&matching, &a).unwrap();
                let vb = fourier_coefficient(&sigma, &a).unwrap();
                assert!((va - vb).norm() < 1e-12, "p={p} a={a:?}: {va} vs {vb}");
            }
            if p == 0 {
                let va = fourier_coefficient(&matching, &[]).unwrap();
                let vb = fourier_coefficient(&sigma, &[]).unwrap();
                assert!((va - vb).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lambda_is_antisymmetric_and_vanishes_on_repeats() {
        for p in 2..=4usize {
            let lambda = build_lambda(p);
            for a in (0..p).map(|_| -2i64..=2).multi_cartesian_product() {
                let base = fourier_coefficient(&lambda, &a).unwrap();
                // All transpositions flip the sign.
                for i in 0..p {
                    for j in i + 1..p {
                        let mut swapped = a.clone();
                        swapped.swap(i, j);
                        let v = fourier_coefficient(&lambda, &swapped).unwrap();
                        assert!(
                            (base + v).norm() < 1e-12,
                            "p={p} a={a:?} swap ({i},{j}): {base} vs {v}"
                        );
                    }
                }
                if a.iter().duplicates().next().is_some() {
                    assert!(base.norm() < 1e-12, "p={p} a={a:?}: {base}");
                }
            }
        }
    }

    #[test]
    fn fourier_form_frozen_coefficients() {
        let l = LcalPartial::new(2, 10, Regularization::Sharp);
        let norm = (2.0 * PI).powi(2);
        assert!((l.coefficient(&[1, 0]) - 1.0 / norm).abs() < 1e-15);
        assert!((l.coefficient(&[0, 1]) + 1.0 / norm).abs() < 1e-15);
        assert_eq!(l.coefficient(&[1, 1]), 0.0);
        assert_eq!(l.coefficient(&[11, 0]), 0.0);
        // p = 1 Dirichlet behavior: pairing with e^{-i k phi} gives 1.
        let l1 = LcalPartial::new(1, 5, Regularization::Sharp);
        for k in -5i64..=5 {
            assert!((l1.pair_exponential(&[-k]) - 1.0).abs() < 1e-15);
        }
        assert_eq!(l1.pair_exponential(&[-6]), 0.0);
    }

    /// Richardson extrapolation in `h = 1 - q` over nodes `h / 2^j`.
    fn abel_extrapolate(values: &[f64]) -> f64 {
        let mut row: Vec<f64> = values.to_vec();
        for level in 1..row.len() {
            let factor = (1 << level) as f64;
            for i in (level..row.len()).rev() {
                row[i] = (factor * row[i] - row[i - 1]) / (factor - 1.0);
            }
        }
        *row.last().expect("nonempty")
    }

    #[test]
    fn fourier_correspondence_with_frozen_rho() {
        // Ratio of the matching form's Fourier coefficients to the Fourier
        // form is one global constant rho(p) = (-1)^{floor(p/2)}.
        for p in 1..=3usize {
            let lambda = build_lambda(p);
            let sharp = LcalPartial::new(p, 10, Regularization::Sharp);
            let indices: Vec<Vec<i64>> = (-6i64..=6)
                .combinations(p)
                .map(|mut c| {
                    c.reverse(); // strictly decreasing
                    c
                })
                .collect();
            let rho_expected = if (p / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mut ratios = Vec::new();
            for a in &indices {
                let lhs = fourier_coefficient(&lambda, a).unwrap();
                let rhs = sharp.pair_exponential(a);
                assert!(lhs.im.abs() < 1e-12, "p={p} a={a:?}");
                ratios.push(lhs.re / rhs);
            }
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let spread = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max) / mean.abs();
            assert!(spread < 1e-12, "p={p}: spread {spread}");
            assert!((mean - rho_expected).abs() < 1e-12, "p={p}: rho {mean}");

            // Regularized variant: Abel weights extrapolated in 1 - q.
            let h0 = 1.0 - 0.999;
            let mut reg_ratios = Vec::new();
            for a in indices.iter().take(40) {
                let lhs = fourier_coefficient(&lambda, a).unwrap().re;
                let vals: Vec<f64> = (0..4)
                    .map(|j| {
                        let q = 1.0 - h0 / (1 << j) as f64;
                        let abel = LcalPartial::new(p, 10, Regularization::Abel { q });
                        lhs / abel.pair_exponential(a)
                    })
                    .collect();
                reg_ratios.push(abel_extrapolate(&vals));
            }
            let mean = reg_ratios.iter().sum::<f64>() / reg_ratios.len() as f64;
            let spread = reg_ratios
                .iter()
                .map(|r| (r - mean).abs())
                .fold(0.0, f64::max)
                / mean.abs();
            assert!(spread < 1e-3, "p={p}: regularized spread {spread}");
            assert!((mean - rho_expected).abs() < 1e-3);
        }
    }

    #[test]
    fn frozen_theta_weights() {
        let t = build_theta(1, 0).unwrap();
        assert_eq!(t.per_k.len(), 1);
        assert_eq!(t.per_k[0].weight.value(), Rat::from_integer(1));

        let t = build_theta(2, 0).unwrap();
        assert_eq!(t.per_k[0].weight.value(), Rat::from_integer(-1));

        // Weights follow the product formula; for (n, r) = (2, 1) that is
        // -2 and +1/2 (the factorial arguments are n-2r = 0 and
        // floor(n/2)-r = 0).
        let t = build_theta(2, 1).unwrap();
        assert_eq!(t.per_k.len(), 2);
        assert_eq!(t.per_k[0].weight.value(), Rat::from_integer(-2));
        assert_eq!(t.per_k[1].weight.value(), Rat::new(1, 2));
        assert_eq!(t.per_k[0].weight.four_exponent, 1);
        assert_eq!(t.per_k[0].weight.factorial_num_arg, 0);

        let t = build_theta(3, 1).unwrap();
        assert_eq!(t.per_k[0].weight.value(), Rat::new(-2, 3));
        assert_eq!(t.per_k[1].weight.value(), Rat::new(1, 2));

        assert!(build_theta(3, 2).is_err());
    }

    #[test]
    fn theta_chart_distributions_pin_the_pairs() {
        let t = build_theta(2, 1).unwrap();
        // Chart k=1: Lambda_0 times delta(theta_1) delta(t_1): one term,
        // two deltas, no cots.
        let chart = &t.per_k[1];
        assert_eq!(chart.dist.terms.len(), 1);
        let term = &chart.dist.terms[0];
        assert_eq!(term.deltas.len(), 2);
        assert!(term.cots.is_empty());
        assert!(term.deltas.iter().any(|f| f.line.is_some()));
        // Chart k=0 carries Lambda_2.
        assert_eq!(t.per_k[0].dist.terms.len(), 1);
        assert_eq!(t.per_k[0].dist.terms[0].cots.len(), 1);
    }

    #[test]
    fn apply_theta_smallest_cases() {
        // n=1: h_0 = e^{i c phi} pairs with delta(phi) to 1.
        let t = build_theta(1, 0).unwrap();
        let mut h0 = ExpPoly::constant(1, 0, c64(1.0, 0.0));
        h0.terms[0].phi_freq = vec![c64(5.0, 0.0)];
        let mut data = BTreeMap::new();
        data.insert(0usize, h0);
        let v = apply_theta(&t, &data).unwrap();
        assert!((v - c64(1.0, 0.0)).norm() < 1e-14, "{v}");

        // All data zero / missing: 0.
        let t = build_theta(2, 1).unwrap();
        let v = apply_theta(&t, &BTreeMap::new()).unwrap();
        assert_eq!(v, c64(0.0, 0.0));

        // n=2, r=1, h_0 = 0, h_1 = Gaussian * e^{i m theta}: the pair
        // deltas evaluate h_1 at the origin, leaving weight_1 = 1/2.
        let mut h1 = ExpPoly::constant(2, 1, c64(1.0, 0.0));
        h1.terms[0].theta_freq = vec![c64(3.0, 0.0)];
        h1.terms[0].gauss = vec![0.7];
        let mut data = BTreeMap::new();
        data.insert(1usize, h1);
        let v = apply_theta(&t, &data).unwrap();
        assert!((v - c64(0.5, 0.0)).norm() < 1e-14, "{v}");

        // A polynomial factor vanishing at the origin kills the pairing.
        let mut h1 = ExpPoly::constant(2, 1, c64(1.0, 0.0));
        h1.terms[0].poly = MPoly::monomial(vec![1], c64(1.0, 0.0));
        let mut data = BTreeMap::new();
        data.insert(1usize, h1);
        let v = apply_theta(&t, &data).unwrap();
        assert!(v.norm() < 1e-14, "{v}");

        // Chart mismatch is rejected.
        let bad = ExpPoly::constant(2, 0, c64(1.0, 0.0));
        let mut data = BTreeMap::new();
        data.insert(1usize, bad);
        assert!(matches!(
            apply_theta(&t, &data),
            Err(ProjectorError::ChartMismatch(_))
        ));
    }

    #[test]
    fn pairing_lemma_frozen_constants() {
        // i^m <E^a, prod cot delta> = (-2 pi)^m 2^m m! for the base-matching
        // term, both parities of p, independent of the decreasing vector a.
        let cases: Vec<(usize, Vec<i64>)> = vec![
            (2, vec![1, 0]),
            (2, vec![4, -3]),
            (3, vec![2, 1, -1]),
            (3, vec![5, 0, -2]),
            (4, vec![3, 2, 1, 0]),
            (4, vec![6, 2, -1, -5]),
            (5, vec![4, 3, 1, 0, -2]),
            (6, vec![5, 4, 3, 2, 1, 0]),
        ];
        for (p, a) in cases {
            let m = p / 2;
            let term = matching_term(p, &zeta0(p), c64(1.0, 0.0));
            let dist = Distribution::new(lambda_domain(p), vec![term]).unwrap();
            let f = e_a(p, &a);
            let value = pair(&dist, &f).unwrap() * I.powu(m as u32);
            let expected =
                (-2.0 * PI).powi(m as i32) * (1u64 << m) as f64 * rat_to_f64(factorial(m));
            assert!(
                (value - c64(expected, 0.0)).norm() < 1e-9 * expected.abs(),
                "p={p} a={a:?}: {value} vs {expected}"
            );
        }
    }
}
