//! Spherical kernel evaluators on the Cartan charts, the exponential term
//! algebra they expand into, the chart differential operators, and the
//! glueing validator for wall-crossing asymptotics.
//!
//! Chart `A_k` of the rank-`n` double coset space carries coordinates
//! `phi_1, ..., phi_{n-2k}` (angles), and `k` pairs `(theta_q, t_q)` of an
//! angle and a line coordinate; the pair block has eigenvalues
//! `e^{t + i theta}, e^{-t + i theta}`. Signatures of type `r` carry
//! strictly decreasing integers `c` and spectral pairs
//! `l_q = (m_q - i lambda_q) / 2`.
//!
//! The building blocks are the circle-line kernel `xi`, the circle-circle
//! kernel `D` with floor/ceil half-angle branch conventions, their primed
//! partners, and the diagram-assembled chart kernels `kappa_k` and
//! `kappa'_k`. Away from the angle diagonals every kernel is, chamber by
//! chamber, a finite sum of exponentials; [`ExpPoly`] is that closed form,
//! and the chart operators `X_j` act on it exactly. The keystone identities
//! (the swap identity and the eigenfunction property) are tested on these
//! exact expansions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::diagrams::enumerate_diagrams;
use crate::distributions::{Domain, LineEnvelope, TestFunction, TfTerm};

/// Errors from kernel evaluation and the term algebra.
#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("invalid signature: {0}")]
    BadSignature(String),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("diagonal input: {0}")]
    Diagonal(String),
    #[error("degenerate chart point: angle coordinates {0} and {1} coincide")]
    DegeneratePoint(usize, usize),
    #[error("point is not interior to the requested chamber")]
    NotInChamber,
    #[error("non-integer angle frequency: {0}")]
    NonIntegerFrequency(String),
    #[error("spectral weight m = 2 Re(l) must be an integer, got {0}")]
    NonIntegralWeight(f64),
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const I: Complex64 = Complex64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// Signatures and chart points
// ---------------------------------------------------------------------------

/// A signature of type `r` for rank `n`: strictly decreasing integers `c`
/// (length `n - 2r`) and spectral pairs `(m_q, lambda_q)` with
/// `lambda_1 > ... > lambda_r > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    n: usize,
    r: usize,
    c: Vec<i64>,
    m: Vec<i64>,
    lambda: Vec<f64>,
}

impl Signature {
    pub fn new(n: usize, c: Vec<i64>, m: Vec<i64>, lambda: Vec<f64>) -> Result<Self, KernelError> {
        let r = m.len();
        if lambda.len() != r {
            return Err(KernelError::BadSignature(
                "m and lambda must have equal length".into(),
            ));
        }
        if 2 * r > n {
            return Err(KernelError::BadSignature(format!(
                "type r = {r} too large for rank n = {n}"
            )));
        }
        if c.len() != n - 2 * r {
            return Err(KernelError::BadSignature(format!(
                "expected {} integer entries, got {}",
                n - 2 * r,
                c.len()
            )));
        }
        if c.windows(2).any(|w| w[0] <= w[1]) {
            return Err(KernelError::BadSignature(
                "integer entries must be strictly decreasing".into(),
            ));
        }
        if lambda.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(KernelError::BadSignature(
                "spectral parameters must be positive".into(),
            ));
        }
        if lambda.windows(2).any(|w| w[0] <= w[1]) {
            return Err(KernelError::BadSignature(
                "spectral parameters must be strictly decreasing".into(),
            ));
        }
        Ok(Signature { n, r, c, m, lambda })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn c(&self) -> &[i64] {
        &self.c
    }

    pub fn m(&self) -> &[i64] {
        &self.m
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `l_q = (m_q - i lambda_q) / 2`, 1-indexed.
    pub fn l(&self, q: usize) -> Complex64 {
        c64(self.m[q - 1] as f64 / 2.0, -self.lambda[q - 1] / 2.0)
    }

    /// `lbar_q = (m_q + i lambda_q) / 2`, 1-indexed.
    pub fn lbar(&self, q: usize) -> Complex64 {
        self.l(q).conj()
    }

    /// The ordered eigenvalue tuple `(c_1, ..., c_{n-2r}, l_1, lbar_1, ...,
    /// l_r, lbar_r)`.
    pub fn values(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.c.iter().map(|&x| c64(x as f64, 0.0)).collect();
        for q in 1..=self.r {
            v.push(self.l(q));
            v.push(self.lbar(q));
        }
        v
    }
}

/// A point of chart `A_k`: angles `phi` (length `n - 2k`), pair angles
/// `theta` and pair line coordinates `t` (length `k` each).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanPoint {
    pub k: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub t: Vec<f64>,
}

impl CartanPoint {
    pub fn new(k: usize, phi: Vec<f64>, theta: Vec<f64>, t: Vec<f64>) -> Result<Self, KernelError> {
        if theta.len() != k || t.len() != k {
            return Err(KernelError::ChartMismatch(format!(
                "chart A_{k} needs {k} pair coordinates, got {} angles / {} lines",
                theta.len(),
                t.len()
            )));
        }
        Ok(CartanPoint { k, phi, theta, t })
    }

    pub fn n(&self) -> usize {
        self.phi.len() + 2 * self.k
    }
}

/// The coordinate domain of chart `A_k` at rank `n`, shared with the
/// distribution calculus: angles `phi1..phiP, theta1..thetak`, lines
/// `t1..tk`.
pub fn chart_domain(n: usize, k: usize) -> Domain {
    let angles: Vec<String> = (1..=n - 2 * k)
        .map(|p| format!("phi{p}"))
        .chain((1..=k).map(|q| format!("theta{q}")))
        .collect();
    let lines: Vec<String> = (1..=k).map(|q| format!("t{q}")).collect();
    Domain::new(angles, lines).expect("chart coordinate names are distinct")
}

// ---------------------------------------------------------------------------
// The exponential-polynomial term algebra
// ---------------------------------------------------------------------------

/// A sparse multivariate polynomial in the chart's line coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MPoly(pub Vec<(Vec<u32>, Complex64)>);

impl MPoly {
    pub fn constant(vars: usize, value: Complex64) -> Self {
        MPoly(vec![(vec![0; vars], value)])
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, c64(1.0, 0.0))
    }

    /// A single monomial `value * prod t_q^{exps[q]}`.
    pub fn monomial(exps: Vec<u32>, value: Complex64) -> Self {
        MPoly(vec![(exps, value)])
    }

    fn normalize(&mut self) {
        self.0.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Vec<u32>, Complex64)> = Vec::with_capacity(self.0.len());
        for (e, c) in self.0.drain(..) {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|(_, c)| c.norm_sqr() != 0.0);
        if out.is_empty() {
            // keep an explicit zero so the variable count stays known
            self.0 = Vec::new();
        }
        self.0 = out;
    }

    pub fn scale(&self, s: Complex64) -> MPoly {
        let mut out = MPoly(self.0.iter().map(|(e, c)| (e.clone(), *c * s)).collect());
        out.normalize();
        out
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let mut out = MPoly(
            self.0
                .iter()
                .chain(other.0.iter())
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        );
        out.normalize();
        out
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        let mut terms = Vec::with_capacity(self.0.len() * other.0.len());
        for (e1, c1) in &self.0 {
            for (e2, c2) in &other.0 {
                let e: Vec<u32> = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                terms.push((e, c1 * c2));
            }
        }
        let mut out = MPoly(terms);
        out.normalize();
        out
    }

    /// Partial derivative with respect to line coordinate `q` (0-based).
    pub fn derivative(&self, q: usize) -> MPoly {
        let mut out = MPoly(
            self.0
                .iter()
                .filter(|(e, _)| e[q] > 0)
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2[q] -= 1;
                    (e2, *c * (e[q] as f64))
                })
                .collect(),
        );
        out.normalize();
        out
    }

    /// Multiplication by the line coordinate `q` (0-based).
    pub fn shift(&self, q: usize) -> MPoly {
        MPoly(
            self.0
                .iter()
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2[q] += 1;
                    (e2, *c)
                })
                .collect(),
        )
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let mut acc = c64(0.0, 0.0);
        for (e, c) in &self.0 {
            let mut v = *c;
            for (q, &d) in e.iter().enumerate() {
                v *= t[q].powi(d as i32);
            }
            acc += v;
        }
        acc
    }

    /// Substitutes numeric values for every variable except `keep`,
    /// returning univariate coefficients in that variable.
    fn partial_eval(&self, t: &[f64], keep: usize) -> Vec<Complex64> {
        let deg = self.0.iter().map(|(e, _)| e[keep]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![c64(0.0, 0.0); deg + 1];
        for (e, c) in &self.0 {
            let mut v = *c;
            for (q, &d) in e.iter().enumerate() {
                if q != keep {
                    v *= t[q].powi(d as i32);
                }
            }
            coeffs[e[keep] as usize] += v;
        }
        coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// One term of an [`ExpPoly`]: a complex multiple of
/// `exp(i <w, phi>) exp(i <nu, theta>) poly(t) exp(<mu, t>) exp(-<gauss, t^2>)`.
///
/// Angle frequencies are complex so that chamber-local kernel expansions —
/// whose frequencies are the spectral values `l, lbar` — live in the same
/// algebra; data that is genuinely periodic carries integer frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpTerm {
    pub coeff: Complex64,
    pub phi_freq: Vec<Complex64>,
    pub theta_freq: Vec<Complex64>,
    pub mu: Vec<Complex64>,
    pub gauss: Vec<f64>,
    pub poly: MPoly,
}

/// A finite sum of exponential-polynomial terms on chart `A_k` at rank `n`.
/// Closed under the chart operators `X_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpPoly {
    pub n: usize,
    pub k: usize,
    pub terms: Vec<EpTerm>,
}

impl ExpPoly {
    pub fn zero(n: usize, k: usize) -> Self {
        ExpPoly {
            n,
            k,
            terms: Vec::new(),
        }
    }

    pub fn constant(n: usize, k: usize, value: Complex64) -> Self {
        ExpPoly {
            n,
            k,
            terms: vec![EpTerm {
                coeff: value,
                phi_freq: vec![c64(0.0, 0.0); n - 2 * k],
                theta_freq: vec![c64(0.0, 0.0); k],
                mu: vec![c64(0.0, 0.0); k],
                gauss: vec![0.0; k],
                poly: MPoly::one(k),
            }],
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let p = self.n - 2 * self.k;
        for term in &self.terms {
            if term.phi_freq.len() != p
                || term.theta_freq.len() != self.k
                || term.mu.len() != self.k
                || term.gauss.len() != self.k
                || term.poly.0.iter().any(|(e, _)| e.len() != self.k)
            {
                return Err(KernelError::ChartMismatch(format!(
                    "term does not match chart A_{} at rank {}",
                    self.k, self.n
                )));
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> ExpPoly {
        let mut out = self.clone();
        for term in &mut out.terms {
            term.coeff *= s;
        }
        out
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        assert_eq!((self.n, self.k), (other.n, other.k), "chart mismatch");
        let mut out = ExpPoly {
            n: self.n,
            k: self.k,
            terms: self
                .terms
                .iter()
                .chain(other.terms.iter())
                .cloned()
                .collect(),
        };
        out.merge();
        out
    }

    pub fn sub(&self, other: &ExpPoly) -> ExpPoly {
        self.add(&other.scale(c64(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        assert_eq!((self.n, self.k), (other.n, other.k), "chart mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for t1 in &self.terms {
            for t2 in &other.terms {
                terms.push(EpTerm {
                    coeff: t1.coeff * t2.coeff,
                    phi_freq: t1
                        .phi_freq
                        .iter()
                        .zip(&t2.phi_freq)
                        .map(|(a, b)| a + b)
                        .collect(),
                    theta_freq: t1
                        .theta_freq
                        .iter()
                        .zip(&t2.theta_freq)
                        .map(|(a, b)| a + b)
                        .collect(),
                    mu: t1.mu.iter().zip(&t2.mu).map(|(a, b)| a + b).collect(),
                    gauss: t1.gauss.iter().zip(&t2.gauss).map(|(a, b)| a + b).collect(),
                    poly: t1.poly.mul(&t2.poly),
                });
            }
        }
        let mut out = ExpPoly {
            n: self.n,
            k: self.k,
            terms,
        };
        out.merge();
        out
    }

    /// Merges terms with identical exponential bases; drops zero terms.
    pub fn merge(&mut self) {
        let key = |t: &EpTerm| -> Vec<u64> {
            let mut k: Vec<u64> = Vec::new();
            for f in t
                .phi_freq
                .iter()
                .chain(t.theta_freq.iter())
                .chain(t.mu.iter())
            {
                k.push(f.re.to_bits());
                k.push(f.im.to_bits());
            }
            for g in &t.gauss {
                k.push(g.to_bits());
            }
            k
        };
        let mut terms = std::mem::take(&mut self.terms);
        terms.sort_by_key(|a| key(a));
        let mut out: Vec<EpTerm> = Vec::with_capacity(terms.len());
        for term in terms {
            match out.last_mut() {
                Some(last) if key(last) == key(&term) => {
                    let merged = last
                        .poly
                        .scale(last.coeff)
                        .add(&term.poly.scale(term.coeff));
                    last.coeff = c64(1.0, 0.0);
                    last.poly = merged;
                }
                _ => out.push(term),
            }
        }
        out.retain(|t| t.coeff.norm_sqr() != 0.0 && !t.poly.is_zero());
        self.terms = out;
    }

    /// Pointwise value at a chart point.
    pub fn eval(&self, a: &CartanPoint) -> Complex64 {
        debug_assert_eq!(a.k, self.k);
        debug_assert_eq!(a.n(), self.n);
        let mut total = c64(0.0, 0.0);
        for term in &self.terms {
            let mut v = term.coeff;
            for (p, w) in term.phi_freq.iter().enumerate() {
                v *= (I * w * a.phi[p]).exp();
            }
            for (q, nu) in term.theta_freq.iter().enumerate() {
                v *= (I * nu * a.theta[q]).exp();
            }
            for q in 0..self.k {
                v *= (term.mu[q] * a.t[q] - c64(term.gauss[q] * a.t[q] * a.t[q], 0.0)).exp();
            }
            v *= term.poly.eval(&a.t);
            total += v;
        }
        total
    }

    /// Applies the chart operator `X_j` (1-indexed):
    /// `X_j = d/(i d phi_j)` for `j <= n - 2k`, then alternately
    /// `X_+ = (d/dt + d/(i d theta))/2` and `X_- = (-d/dt + d/(i d theta))/2`
    /// for the pairs in descending pair order.
    pub fn apply_x(&self, j: usize) -> ExpPoly {
        let p = self.n - 2 * self.k;
        let mut out = self.clone();
        if j <= p {
            for term in &mut out.terms {
                term.coeff *= term.phi_freq[j - 1];
            }
            out.terms.retain(|t| t.coeff.norm_sqr() != 0.0);
            return out;
        }
        let o = j - p; // 1-based offset into the pair block
        let q = self.k - (o - 1) / 2; // pair index, 1-based
        let sign = if o % 2 == 1 { 1.0 } else { -1.0 };
        for term in &mut out.terms {
            let qi = q - 1;
            // d/dt on poly e^{mu t - gauss t^2}:
            // poly' + mu poly - 2 gauss t poly.
            let dt = term
                .poly
                .derivative(qi)
                .add(&term.poly.scale(term.mu[qi]))
                .add(&term.poly.shift(qi).scale(c64(-2.0 * term.gauss[qi], 0.0)));
            // X = (sign * d/dt + d/(i d theta)) / 2.
            let new_poly = dt
                .scale(c64(0.5 * sign, 0.0))
                .add(&term.poly.scale(term.theta_freq[qi] * 0.5));
            term.poly = new_poly;
        }
        out.terms.retain(|t| !t.poly.is_zero());
        out
    }

    /// Applies the differential Vandermonde
    /// `Delta(d) = prod_{p < q} (X_p - X_q)`; the factors commute, so the
    /// application order is immaterial.
    pub fn apply_diff_vandermonde(&self) -> ExpPoly {
        let mut f = self.clone();
        for p in 1..=self.n {
            for q in p + 1..=self.n {
                f = f.apply_x(p).sub(&f.apply_x(q));
            }
        }
        f
    }

    /// Conversion to a pairable test function on [`chart_domain`]. Every
    /// angle frequency must be an integer; the multivariate polynomial is
    /// expanded monomial by monomial.
    pub fn to_test_function(&self) -> Result<TestFunction, KernelError> {
        let domain = chart_domain(self.n, self.k);
        let p = self.n - 2 * self.k;
        let mut terms = Vec::new();
        for term in &self.terms {
            let mut freq: Vec<i64> = Vec::with_capacity(p + self.k);
            for w in term.phi_freq.iter().chain(term.theta_freq.iter()) {
                let rounded = w.re.round();
                if w.im.abs() > 1e-12 || (w.re - rounded).abs() > 1e-9 {
                    return Err(KernelError::NonIntegerFrequency(format!("{w}")));
                }
                freq.push(rounded as i64);
            }
            for (exps, mono_coeff) in &term.poly.0 {
                let mut lines = Vec::with_capacity(self.k);
                for ((&e, &mu), &gauss) in exps.iter().zip(&term.mu).zip(&term.gauss) {
                    let mut poly = vec![c64(0.0, 0.0); e as usize + 1];
                    *poly.last_mut().expect("nonempty") = c64(1.0, 0.0);
                    lines.push(LineEnvelope { poly, mu, gauss });
                }
                terms.push(TfTerm {
                    coeff: term.coeff * mono_coeff,
                    freq: freq.clone(),
                    lines,
                });
            }
        }
        Ok(TestFunction { domain, terms })
    }
}

// ---------------------------------------------------------------------------
// Vandermonde expressions
// ---------------------------------------------------------------------------

/// `prod_{p < q} (s_p - s_q)`.
pub fn vandermonde(values: &[Complex64]) -> Complex64 {
    let mut acc = c64(1.0, 0.0);
    for p in 0..values.len() {
        for q in p + 1..values.len() {
            acc *= values[p] - values[q];
        }
    }
    acc
}

/// The Vandermonde of the signature's eigenvalue tuple
/// `(c..., l_1, lbar_1, ..., l_r, lbar_r)`.
pub fn delta_cl(sig: &Signature) -> Complex64 {
    vandermonde(&sig.values())
}

// ---------------------------------------------------------------------------
// Half-angle branches and the elementary kernels
// ---------------------------------------------------------------------------

/// Which representative of `(phi1 - phi2)/2 mod pi` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Representative in `(-pi/2, pi/2]`.
    Floor,
    /// Representative in `(0, pi)`; undefined on the diagonal.
    Ceil,
}

/// Reduces `(phi1 - phi2) / 2` into the branch interval.
pub fn half_angle(phi1: f64, phi2: f64, branch: Branch) -> Result<f64, KernelError> {
    let x = (phi1 - phi2) / 2.0;
    let r = x.rem_euclid(PI); // in [0, pi)
    match branch {
        Branch::Floor => Ok(if r > PI / 2.0 { r - PI } else { r }),
        Branch::Ceil => {
            if r == 0.0 {
                Err(KernelError::Diagonal(
                    "ceil branch undefined at phi1 = phi2 (mod 2 pi)".into(),
                ))
            } else {
                Ok(r)
            }
        }
    }
}

/// Which primed-kernel formula to use for `xi'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimedXiVariant {
    /// `-e^{im theta} (e^{i lambda t} + e^{-i lambda t})`: the variant that
    /// satisfies the swap identity and the spectral-side integral.
    Fixed,
    /// The literal printed variant with `theta` inside the line factor.
    AsPrinted,
}

/// The circle-line kernel on a pair block: unprimed
/// `e^{i m theta}(e^{i lambda t} - e^{-i lambda t})` for `l = (m - i lambda)/2`.
pub fn eval_xi(l: Complex64, z: Complex64, primed: bool) -> Complex64 {
    eval_xi_variant(l, z, primed, PrimedXiVariant::Fixed)
}

/// As [`eval_xi`] with an explicit choice of the primed variant.
pub fn eval_xi_variant(
    l: Complex64,
    z: Complex64,
    primed: bool,
    variant: PrimedXiVariant,
) -> Complex64 {
    let m = 2.0 * l.re;
    let lambda = -2.0 * l.im;
    let t = z.re;
    let theta = z.im;
    let line = |x: f64| {
        let up = (I * lambda * x).exp();
        if primed {
            -(up + up.inv())
        } else {
            up - up.inv()
        }
    };
    let arg = if primed && variant == PrimedXiVariant::AsPrinted {
        theta
    } else {
        t
    };
    (I * m * theta).exp() * line(arg)
}

fn weight_of(l: Complex64) -> Result<(i64, f64), KernelError> {
    let m = 2.0 * l.re;
    let rounded = m.round();
    if (m - rounded).abs() > 1e-9 {
        return Err(KernelError::NonIntegralWeight(m));
    }
    Ok((rounded as i64, -2.0 * l.im))
}

/// The circle-circle kernel `D` (or `D'` with `primed`), dispatching on the
/// parity of `m = 2 Re(l)` with the floor/ceil branch conventions.
///
/// Diagonal inputs are errors exactly where the requested variant needs the
/// ceil branch or a sign factor; the unprimed even case is defined
/// everywhere.
pub fn eval_d(l: Complex64, phi1: f64, phi2: f64, primed: bool) -> Result<Complex64, KernelError> {
    let (m, lambda) = weight_of(l)?;
    let s = (phi1 + phi2) / 2.0;
    if m.rem_euclid(2) == 0 {
        let u = half_angle(phi1, phi2, Branch::Floor)?;
        let em = (I * (m as f64) * s).exp();
        if primed {
            if u == 0.0 {
                return Err(KernelError::Diagonal(
                    "primed even kernel needs sign(floor(u)) away from the diagonal".into(),
                ));
            }
            let v = (lambda * (u.abs() - PI / 2.0)).sinh() / (PI * lambda / 2.0).sinh();
            Ok(em * 2.0 * v * u.signum())
        } else {
            let v = (lambda * (u.abs() - PI / 2.0)).cosh() / (PI * lambda / 2.0).sinh();
            Ok(em * 2.0 * v)
        }
    } else {
        let u = half_angle(phi1, phi2, Branch::Ceil)?;
        let em = (I * ((m - 1) as f64 * s + phi2 + u)).exp();
        let v = if primed {
            (lambda * (u - PI / 2.0)).cosh() / (lambda * PI / 2.0).cosh()
        } else {
            (lambda * (u - PI / 2.0)).sinh() / (lambda * PI / 2.0).cosh()
        };
        Ok(em * -2.0 * v)
    }
}

/// The exponential chamber form of `D` (or `D'`): on the region
/// `0 < (phi1 - phi2)/2 < pi`,
///
/// ```text
/// D  = A e^{i(l phi1 + lbar phi2)} - B e^{i(lbar phi1 + l phi2)}
/// D' = A e^{i(l phi1 + lbar phi2)} + B e^{i(lbar phi1 + l phi2)}
/// A  = 2 / (e^{2 pi i l} - 1),  B = 2 / (e^{2 pi i lbar} - 1)
/// ```
pub fn eval_d_alt(
    l: Complex64,
    phi1: f64,
    phi2: f64,
    primed: bool,
) -> Result<Complex64, KernelError> {
    let u = (phi1 - phi2) / 2.0;
    if !(u > 0.0 && u < PI) {
        return Err(KernelError::NotInChamber);
    }
    let (m, lambda) = weight_of(l)?;
    let par = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let a = 2.0 / (par * (PI * lambda).exp() - 1.0);
    let b = 2.0 / (par * (-PI * lambda).exp() - 1.0);
    let lbar = l.conj();
    let e1 = (I * (l * phi1 + lbar * phi2)).exp();
    let e2 = (I * (lbar * phi1 + l * phi2)).exp();
    Ok(if primed {
        e1 * a + e2 * b
    } else {
        e1 * a - e2 * b
    })
}

// ---------------------------------------------------------------------------
// The assembled chart kernels
// ---------------------------------------------------------------------------

/// Whether the diagram sign multiplies the assembled kernel sums.
///
/// The printed convention carries the sign on the primed kernel only; the
/// all-signed variant is kept available because the swap-identity suite is
/// the arbiter between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaSign {
    /// Unprimed sum unsigned, primed sum signed.
    AsPrinted,
    /// Both sums carry the diagram sign.
    BothSigned,
}

impl KappaSign {
    fn applies(self, primed: bool) -> bool {
        match self {
            KappaSign::AsPrinted => primed,
            KappaSign::BothSigned => true,
        }
    }
}

fn check_point(n: usize, k: usize, sig: &Signature, a: &CartanPoint) -> Result<(), KernelError> {
    if sig.n() != n {
        return Err(KernelError::ChartMismatch(format!(
            "signature has rank {}, expected {n}",
            sig.n()
        )));
    }
    if a.k != k || a.n() != n {
        return Err(KernelError::ChartMismatch(format!(
            "point lies in chart A_{} at rank {}, expected A_{k} at rank {n}",
            a.k,
            a.n()
        )));
    }
    for p in 0..a.phi.len() {
        for q in p + 1..a.phi.len() {
            if ((a.phi[p] - a.phi[q]) / 2.0).sin().abs() < 1e-12 {
                return Err(KernelError::DegeneratePoint(p + 1, q + 1));
            }
        }
    }
    Ok(())
}

/// Evaluates the chart kernel `kappa_k` (or `kappa'_k`) as the diagram sum
/// with factors `e^{i c_p phi_alpha}`, `xi(l_q; z_gamma)` and
/// `D(l_q; phi_alpha, phi_beta)`; zero when `k` exceeds the signature type.
pub fn eval_kappa(
    n: usize,
    k: usize,
    sig: &Signature,
    a: &CartanPoint,
    primed: bool,
    sign: KappaSign,
) -> Result<Complex64, KernelError> {
    check_point(n, k, sig, a)?;
    if k > sig.r() {
        return Ok(c64(0.0, 0.0));
    }
    let mut total = c64(0.0, 0.0);
    for diagram in enumerate_diagrams(n, sig.r(), k) {
        let mut v = c64(1.0, 0.0);
        for &(p, alpha) in diagram.type1() {
            v *= (I * (sig.c()[p - 1] as f64) * a.phi[alpha - 1]).exp();
        }
        for &(q, (alpha, beta)) in diagram.type2() {
            v *= eval_d(sig.l(q), a.phi[alpha - 1], a.phi[beta - 1], primed)?;
        }
        for &(q, gamma) in diagram.type3() {
            let z = c64(a.t[gamma - 1], a.theta[gamma - 1]);
            v *= eval_xi(sig.l(q), z, primed);
        }
        if sign.applies(primed) {
            v *= c64(diagram.sign() as f64, 0.0);
        }
        total += v;
    }
    Ok(total)
}

/// A chamber of chart `A_k`: the ranking of the angle representatives,
/// `phi_{order[0]} > phi_{order[1]} > ...` (1-based indices, representatives
/// in `(-pi, pi]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chamber(pub Vec<usize>);

impl Chamber {
    /// The chamber containing a given point.
    pub fn of(phi: &[f64]) -> Chamber {
        let mut order: Vec<usize> = (1..=phi.len()).collect();
        order.sort_by(|&a, &b| {
            phi[b - 1]
                .partial_cmp(&phi[a - 1])
                .expect("angle representatives are finite")
        });
        Chamber(order)
    }

    /// Whether a point's angle coordinates lie in this chamber.
    pub fn contains(&self, phi: &[f64]) -> bool {
        self.0.windows(2).all(|w| phi[w[0] - 1] > phi[w[1] - 1])
    }

    /// Position lookup: `rank[p - 1]` is the position of `phi_p` in the
    /// descending order.
    fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0usize; self.0.len()];
        for (pos, &p) in self.0.iter().enumerate() {
            rank[p - 1] = pos;
        }
        rank
    }
}

/// Expands `kappa_k` (or `kappa'_k`) as an exact [`ExpPoly`] valid on the
/// interior of the given chamber, using the exponential chamber form of the
/// circle-circle kernel on each sorted argument pair.
pub fn chamber_expand_kappa(
    n: usize,
    k: usize,
    sig: &Signature,
    chamber: &Chamber,
    primed: bool,
    sign: KappaSign,
) -> Result<ExpPoly, KernelError> {
    if sig.n() != n {
        return Err(KernelError::ChartMismatch(format!(
            "signature has rank {}, expected {n}",
            sig.n()
        )));
    }
    if chamber.0.len() != n - 2 * k {
        return Err(KernelError::ChartMismatch(
            "chamber order length must match the chart's angle count".into(),
        ));
    }
    if k > sig.r() {
        return Ok(ExpPoly::zero(n, k));
    }
    let ranks = chamber.ranks();
    let mut total = ExpPoly::zero(n, k);
    for diagram in enumerate_diagrams(n, sig.r(), k) {
        let mut product = ExpPoly::constant(n, k, c64(1.0, 0.0));
        for &(p, alpha) in diagram.type1() {
            let mut factor = ExpPoly::constant(n, k, c64(1.0, 0.0));
            factor.terms[0].phi_freq[alpha - 1] = c64(sig.c()[p - 1] as f64, 0.0);
            product = product.mul(&factor);
        }
        for &(q, (alpha, beta)) in diagram.type2() {
            product = product.mul(&d_chamber_factor(
                n, k, sig, q, alpha, beta, &ranks, primed,
            )?);
        }
        for &(q, gamma) in diagram.type3() {
            product = product.mul(&xi_factor(n, k, sig, q, gamma, primed));
        }
        if sign.applies(primed) {
            product = product.scale(c64(diagram.sign() as f64, 0.0));
        }
        total = total.add(&product);
    }
    Ok(total)
}

/// The two-term chamber form of a `D` factor on angle coordinates
/// `alpha, beta` (1-based), honoring the chamber's ordering and the
/// kernels' swap symmetries (`D` symmetric and `D'` antisymmetric in its
/// angle arguments, for both parities of `m`).
#[allow(clippy::too_many_arguments)]
fn d_chamber_factor(
    n: usize,
    k: usize,
    sig: &Signature,
    q: usize,
    alpha: usize,
    beta: usize,
    ranks: &[usize],
    primed: bool,
) -> Result<ExpPoly, KernelError> {
    let l = sig.l(q);
    let (m, lambda) = weight_of(l)?;
    let par = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let a = 2.0 / (par * (PI * lambda).exp() - 1.0);
    let b = 2.0 / (par * (-PI * lambda).exp() - 1.0);
    // first = the coordinate that is larger on this chamber.
    let (first, second, swapped) = if ranks[alpha - 1] < ranks[beta - 1] {
        (alpha, beta, false)
    } else {
        (beta, alpha, true)
    };
    let swap_sign = if !swapped {
        1.0
    } else if primed {
        -1.0
    } else {
        1.0
    };
    let b_sign = if primed { 1.0 } else { -1.0 };
    let mut e1 = ExpPoly::constant(n, k, c64(swap_sign * a, 0.0));
    e1.terms[0].phi_freq[first - 1] = l;
    e1.terms[0].phi_freq[second - 1] = l.conj();
    let mut e2 = ExpPoly::constant(n, k, c64(swap_sign * b_sign * b, 0.0));
    e2.terms[0].phi_freq[first - 1] = l.conj();
    e2.terms[0].phi_freq[second - 1] = l;
    Ok(e1.add(&e2))
}

/// The two-term form of a `xi` factor on pair block `gamma`.
fn xi_factor(n: usize, k: usize, sig: &Signature, q: usize, gamma: usize, primed: bool) -> ExpPoly {
    let m = sig.m()[q - 1] as f64;
    let lambda = sig.lambda()[q - 1];
    let (c_up, c_down) = if primed {
        (c64(-1.0, 0.0), c64(-1.0, 0.0))
    } else {
        (c64(1.0, 0.0), c64(-1.0, 0.0))
    };
    let mut up = ExpPoly::constant(n, k, c_up);
    up.terms[0].theta_freq[gamma - 1] = c64(m, 0.0);
    up.terms[0].mu[gamma - 1] = I * lambda;
    let mut down = ExpPoly::constant(n, k, c_down);
    down.terms[0].theta_freq[gamma - 1] = c64(m, 0.0);
    down.terms[0].mu[gamma - 1] = -I * lambda;
    up.add(&down)
}

// ---------------------------------------------------------------------------
// Sign structure of the charts
// ---------------------------------------------------------------------------

/// `prod_{p<q} sign sin((phi_p - phi_q)/2)`; errors on coincident angles.
pub fn epsilon_sign(phi: &[f64]) -> Result<i32, KernelError> {
    let mut sign = 1i32;
    for p in 0..phi.len() {
        for q in p + 1..phi.len() {
            let s = ((phi[p] - phi[q]) / 2.0).sin();
            if s.abs() < 1e-12 {
                return Err(KernelError::DegeneratePoint(p + 1, q + 1));
            }
            if s < 0.0 {
                sign = -sign;
            }
        }
    }
    Ok(sign)
}

/// `prod_{p<q} sin((phi_p - phi_q)/2)` — the continuous quantity whose sign
/// is [`epsilon_sign`].
pub fn nu(phi: &[f64]) -> f64 {
    let mut acc = 1.0f64;
    for p in 0..phi.len() {
        for q in p + 1..phi.len() {
            acc *= ((phi[p] - phi[q]) / 2.0).sin();
        }
    }
    acc
}

/// The circle Vandermonde `prod_{p<q} (e^{i phi_p} - e^{i phi_q})`. It
/// factors as `e^{i (P-1) sum phi / 2} (2i)^{P(P-1)/2} nu(phi)`, which is
/// the continuous-prefactor identity the sign fixing rests on.
pub fn vandermonde_circle(phi: &[f64]) -> Complex64 {
    let values: Vec<Complex64> = phi.iter().map(|&x| (I * x).exp()).collect();
    vandermonde(&values)
}

// ---------------------------------------------------------------------------
// Glueing across chart walls
// ---------------------------------------------------------------------------

/// Residue report of [`check_glueing`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlueingReport {
    /// Expansion order checked.
    pub order: usize,
    /// Max residual of the odd/even reflection relations on the minus side
    /// of the wall; identically zero for the skew extension the validator
    /// constructs.
    pub minus_side_max: f64,
    /// Per even degree `2m <= order`: the max over base points of
    /// `|[tau^{2m}] F_k - i (-1)^m [t^{2m}] F_{k+1}|`.
    pub even_residuals: Vec<(usize, f64)>,
    /// Max over all reported residuals.
    pub max_residual: f64,
}

/// Validates the wall-crossing relation between chart `A_k` and chart
/// `A_{k+1}` data: approaching the wall, the last two angles of `A_k` merge
/// into the newest pair of `A_{k+1}` via `theta = (phi_{P-1} + phi_P)/2`,
/// `tau = phi_{P-1} - phi_P`, and the transverse expansions must satisfy
/// `[tau^{2m}] F_k = i (-1)^m [t^{2m}] F_{k+1}`. The synthetic full object
/// on the `A_{k+1}` side is the skew extension `sign(t) F(|t|)`, whose
/// reflection relations hold by construction and are reported as computed.
pub fn check_glueing(
    f_k: &ExpPoly,
    f_k1: &ExpPoly,
    order: usize,
) -> Result<GlueingReport, KernelError> {
    f_k.validate()?;
    f_k1.validate()?;
    if f_k1.n != f_k.n || f_k1.k != f_k.k + 1 {
        return Err(KernelError::ChartMismatch(format!(
            "expected charts A_k and A_(k+1) at one rank, got A_{} at rank {} and A_{} at rank {}",
            f_k.k, f_k.n, f_k1.k, f_k1.n
        )));
    }
    let p = f_k.n - 2 * f_k.k;
    if p < 2 {
        return Err(KernelError::ChartMismatch(
            "chart A_k needs at least two angle coordinates at the wall".into(),
        ));
    }
    let k = f_k.k;
    let mut minus_side_max = 0.0f64;
    let mut even: Vec<(usize, f64)> = (0..=order / 2).map(|m| (2 * m, 0.0f64)).collect();
    for base in glueing_base_points(p - 2, k) {
        let (lead, theta_wall, thetas, ts) = base;
        let a = tau_series(f_k, &lead, theta_wall, &thetas, &ts, order);
        let b = wall_t_series(f_k1, &lead, theta_wall, &thetas, &ts, order);
        for (j, &u_plus) in b.iter().enumerate() {
            // Skew extension: u_j^- = (-1)^{j+1} u_j^+.
            let u_minus = u_plus * ((-1.0f64).powi(j as i32 + 1));
            let resid = (u_minus - u_plus * ((-1.0f64).powi(j as i32 + 1))).norm();
            minus_side_max = minus_side_max.max(resid);
        }
        for (m, slot) in even.iter_mut().enumerate() {
            let deg = 2 * m;
            if deg > order {
                break;
            }
            let factor = I * (-1.0f64).powi(m as i32);
            let resid = (a[deg] - factor * b[deg]).norm();
            slot.1 = slot.1.max(resid);
        }
    }
    let max_residual = even.iter().map(|&(_, r)| r).fold(minus_side_max, f64::max);
    Ok(GlueingReport {
        order,
        minus_side_max,
        even_residuals: even,
        max_residual,
    })
}

type GlueingBase = (Vec<f64>, f64, Vec<f64>, Vec<f64>);

/// Three deterministic generic base points for a wall with `p2` leading
/// angles and `k` retained pairs.
fn glueing_base_points(p2: usize, k: usize) -> Vec<GlueingBase> {
    (0..3)
        .map(|i| {
            let s = i as f64;
            let lead: Vec<f64> = (0..p2).map(|j| 0.31 + 0.47 * j as f64 + 0.11 * s).collect();
            let theta_wall = -0.67 + 0.53 * s;
            let thetas: Vec<f64> = (0..k).map(|j| 0.23 + 0.37 * j as f64 - 0.19 * s).collect();
            let ts: Vec<f64> = (0..k).map(|j| 0.41 - 0.29 * j as f64 + 0.07 * s).collect();
            (lead, theta_wall, thetas, ts)
        })
        .collect()
}

/// Taylor coefficients in `tau` at `tau = 0` of `F_k` with
/// `phi_{P-1} = theta + tau/2`, `phi_P = theta - tau/2`.
fn tau_series(
    f: &ExpPoly,
    lead: &[f64],
    theta_wall: f64,
    thetas: &[f64],
    ts: &[f64],
    order: usize,
) -> Vec<Complex64> {
    let p = f.n - 2 * f.k;
    let mut out = vec![c64(0.0, 0.0); order + 1];
    for term in &f.terms {
        let mut base = term.coeff;
        for (w, x) in term.phi_freq.iter().take(p - 2).zip(lead) {
            base *= (I * w * x).exp();
        }
        let w1 = term.phi_freq[p - 2];
        let w2 = term.phi_freq[p - 1];
        base *= (I * (w1 + w2) * theta_wall).exp();
        for q in 0..f.k {
            base *= (I * term.theta_freq[q] * thetas[q]).exp();
            base *= (term.mu[q] * ts[q] - c64(term.gauss[q] * ts[q] * ts[q], 0.0)).exp();
        }
        base *= term.poly.eval(ts);
        // e^{i (w1 - w2) tau / 2}: coefficient of tau^j is delta^j / j!.
        let delta = I * (w1 - w2) * 0.5;
        let mut pow = c64(1.0, 0.0);
        let mut fact = 1.0f64;
        for (j, slot) in out.iter_mut().enumerate() {
            if j > 0 {
                pow *= delta;
                fact *= j as f64;
            }
            *slot += base * pow / fact;
        }
    }
    out
}

/// Taylor coefficients in the newest pair's line coordinate of `F_{k+1}`,
/// with the wall pair at index `k+1` and the series taken at `t = 0`.
fn wall_t_series(
    f: &ExpPoly,
    lead: &[f64],
    theta_wall: f64,
    thetas: &[f64],
    ts: &[f64],
    order: usize,
) -> Vec<Complex64> {
    let k1 = f.k; // = k + 1
    let p2 = f.n - 2 * k1;
    let wall = k1 - 1; // 0-based index of the newest pair
    let mut out = vec![c64(0.0, 0.0); order + 1];
    let mut tvals: Vec<f64> = ts.to_vec();
    tvals.push(0.0);
    for term in &f.terms {
        let mut base = term.coeff;
        for (w, x) in term.phi_freq.iter().take(p2).zip(lead) {
            base *= (I * w * x).exp();
        }
        for q in 0..k1 - 1 {
            base *= (I * term.theta_freq[q] * thetas[q]).exp();
            base *= (term.mu[q] * ts[q] - c64(term.gauss[q] * ts[q] * ts[q], 0.0)).exp();
        }
        base *= (I * term.theta_freq[wall] * theta_wall).exp();
        // Series of poly_wall(t) e^{mu t} e^{-gauss t^2} at t = 0.
        let poly = term.poly.partial_eval(&tvals, wall);
        let mu = term.mu[wall];
        let gauss = term.gauss[wall];
        // exp series: sum_b mu^b/b! t^b times sum_c (-gauss)^{c}/c! t^{2c}.
        let mut series = vec![c64(0.0, 0.0); order + 1];
        for (a0, &pc) in poly.iter().enumerate() {
            if a0 > order {
                break;
            }
            let mut mu_pow = c64(1.0, 0.0);
            let mut bfact = 1.0f64;
            for b in 0..=(order - a0) {
                if b > 0 {
                    mu_pow *= mu;
                    bfact *= b as f64;
                }
                let mut g_pow = 1.0f64;
                let mut cfact = 1.0f64;
                let mut cc = 0usize;
                while a0 + b + 2 * cc <= order {
                    if cc > 0 {
                        g_pow *= -gauss;
                        cfact *= cc as f64;
                    }
                    series[a0 + b + 2 * cc] += pc * mu_pow / bfact * (g_pow / cfact);
                    cc += 1;
                }
            }
        }
        for (slot, s) in out.iter_mut().zip(series.iter()) {
            *slot += base * s;
        }
    }
    out
}
