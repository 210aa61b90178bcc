//! Extended-precision assembly and SVD for certifying nonsingularity of
//! histopolation matrices whose condition number is beyond the reach of `f64`.
//!
//! Two number types are provided: a double-double [`Dd`] (about 32 digits) and
//! a 256-bit [`Mp`] backed by `astro-float` (about 77 digits).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::JacobiParams;
use crate::mesh::Mesh;
use crate::operators::HistoBasis;
use crate::quadrature::{gauss_legendre, needs_grading};

/// Arithmetic needed by the extended-precision pipeline.
pub trait Real:
    Clone
    + Send
    + Sync
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Unit roundoff.
    const EPS: f64;
    /// Gauss-Legendre orders of the embedded pair.
    const RULES: (usize, usize);
    const BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

/// `x^e` for `x ≥ 0`, exact for small integers and using square roots for halves.
pub fn powf<T: Real>(x: &T, e: f64) -> T {
    if e == 0.0 {
        return T::one();
    }
    if x.is_zero() {
        return if e > 0.0 { T::zero() } else { T::from_f64(f64::INFINITY) };
    }
    let twice = 2.0 * e;
    if twice.fract() == 0.0 && (1.0..=64.0).contains(&twice) {
        let whole = (twice as usize) / 2;
        let mut out = if twice as usize % 2 == 1 { x.sqrt() } else { T::one() };
        for _ in 0..whole {
            out = out * x.clone();
        }
        return out;
    }
    (x.ln() * T::from_f64(e)).exp()
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }
}

impl Real for Dd {
    const EPS: f64 = 4.93e-32;
    const RULES: (usize, usize) = (48, 64);
    const BITS: u32 = 106;

    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    fn is_negative(&self) -> bool {
        self.hi < 0.0
    }

    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }

    fn sqrt(&self) -> Self {
        if self.hi <= 0.0 {
            return Dd::zero();
        }
        let q = self.hi.sqrt();
        let (p, e) = two_prod(q, q);
        let r = *self - Dd { hi: p, lo: e };
        Dd::from_f64(q) + Dd::from_f64(r.hi / (2.0 * q))
    }

    fn exp(&self) -> Self {
        if self.hi < -745.0 {
            return Dd::zero();
        }
        let k = (self.hi / LN2.hi).round();
        let r = (*self - LN2 * Dd::from_f64(k)).ldexp(-10);
        // expm1(r) by Taylor series, |r| < 3.4e-4.
        let mut term = r;
        let mut sum = r;
        for n in 2..=12 {
            term = term * r / Dd::from_f64(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * (sum + Dd::from_f64(2.0));
        }
        (sum + Dd::one()).ldexp(k as i32)
    }

    fn ln(&self) -> Self {
        assert!(self.hi > 0.0, "logarithm of a nonpositive value");
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + *self * (-y).exp() - Dd::one();
        }
        y
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

const MP_BITS: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// 256-bit binary floating point.
#[derive(Debug, Clone)]
pub struct Mp(BigFloat);

impl PartialEq for Mp {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for Mp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

impl Real for Mp {
    const EPS: f64 = 8.7e-78;
    const RULES: (usize, usize) = (64, 80);
    const BITS: u32 = 256;

    fn from_f64(x: f64) -> Self {
        Mp(BigFloat::from_f64(x, MP_BITS))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        let Some((words, _, sign, exponent, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        // Normalized mantissa 0.1xxx in the most significant word.
        let top = *words.last().expect("nonzero mantissa") as f64 / 2f64.powi(64);
        let next = words.len().checked_sub(2).map_or(0.0, |i| words[i] as f64 / 2f64.powi(128));
        let v = (top + next) * 2f64.powi(exponent);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.sqrt(MP_BITS, RM))
    }

    fn exp(&self) -> Self {
        CONSTS.with(|c| Mp(self.0.exp(MP_BITS, RM, &mut c.borrow_mut())))
    }

    fn ln(&self) -> Self {
        assert!(self.0.is_positive() && !self.0.is_zero(), "logarithm of a nonpositive value");
        CONSTS.with(|c| Mp(self.0.ln(MP_BITS, RM, &mut c.borrow_mut())))
    }
}

impl Add for Mp {
    type Output = Mp;
    fn add(self, b: Mp) -> Mp {
        Mp(self.0.add(&b.0, MP_BITS, RM))
    }
}

impl Sub for Mp {
    type Output = Mp;
    fn sub(self, b: Mp) -> Mp {
        Mp(self.0.sub(&b.0, MP_BITS, RM))
    }
}

impl Mul for Mp {
    type Output = Mp;
    fn mul(self, b: Mp) -> Mp {
        Mp(self.0.mul(&b.0, MP_BITS, RM))
    }
}

impl Div for Mp {
    type Output = Mp;
    fn div(self, b: Mp) -> Mp {
        Mp(self.0.div(&b.0, MP_BITS, RM))
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(self.0.neg())
    }
}

/// Gauss-Legendre rule with nodes refined by Newton's method in `T`.
pub fn gauss_legendre_ext<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let base = gauss_legendre(n)?;
    // Each Newton step doubles the 15 or so correct digits of the seed.
    let steps = 1 + (-T::EPS.log10() / 15.0).log2().ceil() as usize;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &x0 in &base.nodes {
        let mut x = T::from_f64(x0);
        for _ in 0..steps {
            let (p, d) = legendre_with_derivative(n, &x);
            x = x - p / d;
        }
        let (_, d) = legendre_with_derivative(n, &x);
        weights.push(T::from_f64(2.0) / ((T::one() - x.clone() * x.clone()) * d.clone() * d));
        nodes.push(x);
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative<T: Real>(n: usize, x: &T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x.clone());
    for k in 1..n {
        let kf = k as f64;
        let p2 = (T::from_f64(2.0 * kf + 1.0) * x.clone() * p1.clone() - T::from_f64(kf) * p0) / T::from_f64(kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = T::from_f64(n as f64) * (x.clone() * p1.clone() - p0) / (x.clone() * x.clone() - T::one());
    (p1, d)
}

/// Three-term recurrence for `P_n^{(a,b)}` with coefficients precomputed in `T`.
struct Recurrence<T> {
    first: (T, T),
    /// `P_{n+1} = (s_n x + r_n) P_n - q_n P_{n-1}`
    steps: Vec<(T, T, T)>,
}

impl<T: Real> Recurrence<T> {
    fn new(a: f64, b: f64, len: usize) -> Self {
        let (ad, bd) = (T::from_f64(a), T::from_f64(b));
        let two = T::from_f64(2.0);
        let s = ad.clone() + bd.clone();
        let first = ((s.clone() + two.clone()) / two.clone(), (ad.clone() - bd.clone()) / two.clone());
        let ab2 = ad.clone() * ad.clone() - bd.clone() * bd.clone();
        let steps = (1..len.saturating_sub(1))
            .map(|n| {
                let nf = T::from_f64(n as f64);
                let m = two.clone() * nf.clone() + s.clone();
                let lead = two.clone() * (nf.clone() + T::one()) * (nf.clone() + s.clone() + T::one()) * m.clone();
                let mp1 = m.clone() + T::one();
                let sx = mp1.clone() * (m.clone() + two.clone()) * m.clone() / lead.clone();
                let r = mp1 * ab2.clone() / lead.clone();
                let q = two.clone() * (nf.clone() + ad.clone()) * (nf + bd.clone()) * (m + two.clone()) / lead;
                (sx, r, q)
            })
            .collect();
        Self { first, steps }
    }

    fn fill(&self, x: &T, out: &mut [T]) {
        let len = out.len();
        if len == 0 {
            return;
        }
        out[0] = T::one();
        if len == 1 {
            return;
        }
        out[1] = self.first.0.clone() * x.clone() + self.first.1.clone();
        for (i, (s, r, q)) in self.steps.iter().enumerate() {
            let n = i + 1;
            out[n + 1] = (s.clone() * x.clone() + r.clone()) * out[n].clone() - q.clone() * out[n - 1].clone();
        }
    }
}

const RATIO: f64 = 0.25;

fn grade_toward<T: Real>(a: T, b: T, exponent: f64, left: bool) -> Vec<(T, T)> {
    // Innermost width w with w^{e+1} far below the working precision.
    let tail = T::EPS * 1e-3;
    let target = tail.powf(1.0 / (exponent + 1.0).max(0.05));
    let levels = ((target.ln() / RATIO.ln()).ceil() as usize).clamp(1, 400);
    let mut w = b.clone() - a.clone();
    let mut out = Vec::with_capacity(levels + 1);
    for _ in 0..levels {
        let inner = w.clone() * T::from_f64(RATIO);
        if left {
            out.push((a.clone() + inner.clone(), a.clone() + w));
        } else {
            out.push((b.clone() - w, b.clone() - inner.clone()));
        }
        w = inner;
    }
    if left {
        out.push((a.clone(), a + w));
        out.reverse();
    } else {
        out.push((b.clone() - w, b));
    }
    out
}

/// Panels covering a cell, graded geometrically toward singular endpoints.
fn graded_panels<T: Real>(lo: f64, hi: f64, left: Option<f64>, right: Option<f64>) -> Vec<(T, T)> {
    let (a, b) = (T::from_f64(lo), T::from_f64(hi));
    match (left, right) {
        (None, None) => vec![(a, b)],
        (Some(e), Some(f)) => {
            let mid = (a.clone() + b.clone()) * T::from_f64(0.5);
            let mut out = grade_toward(a, mid.clone(), e, true);
            out.extend(grade_toward(mid, b, f, false));
            out
        }
        (Some(e), None) => grade_toward(a, b, e, true),
        (None, Some(f)) => grade_toward(a, b, f, false),
    }
}

/// Histopolation matrix in extended precision with an estimate of its Frobenius error.
pub struct ExtendedMatrix<T> {
    pub rows: Vec<Vec<T>>,
    pub error_frobenius: f64,
}

pub fn build_h_extended<T: Real>(params: &JacobiParams, mesh: &Mesh, basis: HistoBasis) -> Result<ExtendedMatrix<T>> {
    let n = mesh.cells();
    let poly = basis.polynomial_params(params);
    let rec = Recurrence::<T>::new(poly.alpha(), poly.beta(), n);
    let (alpha, beta) = (params.alpha(), params.beta());
    let low = gauss_legendre_ext::<T>(T::RULES.0)?;
    let high = gauss_legendre_ext::<T>(T::RULES.1)?;
    let half = T::from_f64(0.5);
    let results: Vec<(Vec<T>, f64)> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = mesh.cell(i);
            let left = (lo == -1.0 && needs_grading(beta)).then_some(beta);
            let right = (hi == 1.0 && needs_grading(alpha)).then_some(alpha);
            let mut q_low = vec![T::zero(); n];
            let mut q_high = vec![T::zero(); n];
            let mut buf = vec![T::zero(); n];
            for (a, b) in graded_panels::<T>(lo, hi, left, right) {
                let mid = (a.clone() + b.clone()) * half.clone();
                let hw = (b - a) * half.clone();
                for (rule, acc) in [(&low, &mut q_low), (&high, &mut q_high)] {
                    for (x, w) in rule.0.iter().zip(&rule.1) {
                        let t = mid.clone() + hw.clone() * x.clone();
                        let wt = powf(&(T::one() - t.clone()), alpha) * powf(&(T::one() + t.clone()), beta);
                        rec.fill(&t, &mut buf);
                        let scale = hw.clone() * w.clone() * wt;
                        for (s, v) in acc.iter_mut().zip(&buf) {
                            *s = s.clone() + scale.clone() * v.clone();
                        }
                    }
                }
            }
            let inv_h = T::one() / (T::from_f64(hi) - T::from_f64(lo));
            let mut err2 = 0.0;
            let row: Vec<T> = q_high
                .into_iter()
                .zip(q_low)
                .map(|(h, l)| {
                    let e = ((h.clone() - l) * inv_h.clone()).to_f64().abs();
                    let v = h * inv_h.clone();
                    // Rounding in the accumulation, with generous headroom.
                    let r = 1e3 * T::EPS * v.to_f64().abs();
                    err2 += (e + r) * (e + r);
                    v
                })
                .collect();
            (row, err2)
        })
        .collect();
    let error_frobenius = results.iter().map(|r| r.1).sum::<f64>().sqrt();
    Ok(ExtendedMatrix { rows: results.into_iter().map(|r| r.0).collect(), error_frobenius })
}

fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

/// Singular values by one-sided Jacobi rotations, descending.
pub fn singular_values_extended<T: Real>(rows: &[Vec<T>]) -> Result<Vec<T>> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("ragged matrix".into()));
    }
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| rows[i][j].clone()).collect()).collect();
    let tol = 1e2 * T::EPS;
    let two = T::from_f64(2.0);
    let mut norms: Vec<T> = cols.iter().map(|c| dot(c, c)).collect();
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let gamma = dot(&cols[p], &cols[q]);
                let (alpha, beta) = (norms[p].clone(), norms[q].clone());
                if gamma.is_zero() || gamma.abs().to_f64() <= tol * (alpha.to_f64() * beta.to_f64()).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two.clone() * gamma);
                let root = (T::one() + zeta.clone() * zeta.clone()).sqrt();
                let t = if zeta.is_negative() { -(T::one() / (root - zeta)) } else { T::one() / (zeta + root) };
                let c = T::one() / (T::one() + t.clone() * t.clone()).sqrt();
                let s = c.clone() * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (x.clone(), y.clone());
                    *x = c.clone() * xp.clone() - s.clone() * yq.clone();
                    *y = s.clone() * xp + c.clone() * yq;
                }
                norms[p] = dot(&cols[p], &cols[p]);
                norms[q] = dot(&cols[q], &cols[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Linalg("one-sided Jacobi SVD did not converge".into()));
    }
    let mut sv: Vec<T> = norms.iter().map(|v| v.sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    Ok(sv)
}

/// Evidence that `H_N` is nonsingular despite an `f64` condition number near or past `1/ε`.
///
/// The quadrature part of the bound comes from the difference of two rules, so it
/// is an estimate rather than a rigorous enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnisolvenceCertificate {
    pub n: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Bound on `|σ_i(H) - σ_i(H̃)|` from quadrature and rounding errors.
    pub perturbation_bound: f64,
    /// Working precision of the deciding attempt.
    pub precision_bits: u32,
    /// `σ_min > perturbation_bound`
    pub certified: bool,
}

fn certify_with<T: Real>(params: &JacobiParams, mesh: &Mesh, basis: HistoBasis) -> Result<UnisolvenceCertificate> {
    let h = build_h_extended::<T>(params, mesh, basis)?;
    let sv = singular_values_extended(&h.rows)?;
    let n = mesh.cells();
    let sigma_max = sv[0].to_f64();
    let sigma_min = sv[n - 1].to_f64();
    let perturbation_bound = h.error_frobenius + 1e3 * n as f64 * T::EPS * sigma_max;
    Ok(UnisolvenceCertificate {
        n,
        sigma_min,
        sigma_max,
        perturbation_bound,
        precision_bits: T::BITS,
        certified: sigma_min > perturbation_bound,
    })
}

/// Computes `σ_min(H_N)` in double-double, escalating to 256 bits when that
/// cannot separate it from the error budget.
///
/// The bound relies on the embedded quadrature error estimate, so it is as
/// trustworthy as that estimate rather than rigorous.
pub fn certify_unisolvence(params: &JacobiParams, mesh: &Mesh, basis: HistoBasis) -> Result<UnisolvenceCertificate> {
    let dd = certify_with::<Dd>(params, mesh, basis)?;
    if dd.certified {
        return Ok(dd);
    }
    certify_with::<Mp>(params, mesh, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GradingMap;
    use crate::operators::build_h;
    use crate::spectral::singular_values;

    #[test]
    fn double_double_arithmetic() {
        let third = Dd::one() / Dd::from_f64(3.0);
        assert!((third * Dd::from_f64(3.0) - Dd::one()).to_f64().abs() < 1e-31);
        let two = Dd::from_f64(2.0).sqrt();
        assert!((two * two - Dd::from_f64(2.0)).to_f64().abs() < 1e-31);
        assert!((Dd::from_f64(2.0).ln() - LN2).to_f64().abs() < 1e-31);
        let e_ref = Dd { hi: std::f64::consts::E, lo: 1.445_646_891_729_250_2e-16 };
        assert!((Dd::one().exp() - e_ref).to_f64().abs() < 1e-30);
        let x = powf(&Dd::from_f64(0.37), 0.8);
        assert!((x.ln() - Dd::from_f64(0.37).ln() * Dd::from_f64(0.8)).to_f64().abs() < 1e-30);
        assert_eq!(powf(&Dd::from_f64(3.0), 2.0), Dd::from_f64(9.0));
        assert!((powf(&Dd::from_f64(4.0), 1.5) - Dd::from_f64(8.0)).to_f64().abs() < 1e-30);
    }

    #[test]
    fn multiprecision_round_trip_and_accuracy() {
        for x in [1.0, -0.3, 1e-300, 7.5e12, -3.0 * 2f64.powi(-40)] {
            assert_eq!(Mp::from_f64(x).to_f64(), x);
        }
        let third = Mp::one() / Mp::from_f64(3.0);
        assert!((third * Mp::from_f64(3.0) - Mp::one()).to_f64().abs() < 1e-70);
        let s = Mp::from_f64(2.0).sqrt();
        assert!((s.clone() * s - Mp::from_f64(2.0)).to_f64().abs() < 1e-70);
        let y = Mp::from_f64(0.37);
        assert!((powf(&y, 0.8).ln() - y.ln() * Mp::from_f64(0.8)).to_f64().abs() < 1e-70);
        assert!(Mp::from_f64(-1.0) < Mp::zero() && Mp::from_f64(-1.0).is_negative());
    }

    #[test]
    fn extended_rules_integrate_polynomials() {
        let (x, w) = gauss_legendre_ext::<Dd>(20).unwrap();
        let s = w.iter().fold(Dd::zero(), |a, &b| a + b);
        assert!((s - Dd::from_f64(2.0)).to_f64().abs() < 1e-30);
        // ∫ t^38 = 2/39
        let m = x.iter().zip(&w).fold(Dd::zero(), |a, (&t, &wt)| a + wt * powf(&(t * t), 19.0));
        assert!((m - Dd::from_f64(2.0) / Dd::from_f64(39.0)).to_f64().abs() < 1e-30);
        let (x, w) = gauss_legendre_ext::<Mp>(20).unwrap();
        let m = x.iter().zip(&w).fold(Mp::zero(), |a, (t, wt)| a + wt.clone() * powf(&(t.clone() * t.clone()), 19.0));
        assert!((m - Mp::from_f64(2.0) / Mp::from_f64(39.0)).to_f64().abs() < 1e-70);
    }

    #[test]
    fn extended_matrix_agrees_with_f64_build() {
        for q in [JacobiParams::new(2.0, 2.0).unwrap(), JacobiParams::new(0.6, 0.8).unwrap()] {
            let mesh = Mesh::graded(10, GradingMap::Exp).unwrap();
            let h = build_h(&q, &mesh, HistoBasis::Shifted).unwrap();
            let e = build_h_extended::<Dd>(&q, &mesh, HistoBasis::Shifted).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    assert!((h[(i, j)] - e.rows[i][j].to_f64()).abs() < 1e-10 * (1.0 + h[(i, j)].abs()), "{q} {i} {j}");
                }
            }
            assert!(e.error_frobenius < 1e-25, "{}", e.error_frobenius);
            let s64 = singular_values(&h).unwrap();
            let sdd = singular_values_extended(&e.rows).unwrap();
            for (a, b) in s64.iter().zip(&sdd) {
                assert!((a - b.to_f64()).abs() < 1e-10 * s64[0]);
            }
        }
    }

    #[test]
    fn endpoint_cell_entries_match_independent_quadrature() {
        // 30-digit adaptive quadrature of the first cell of the 10-cell exp mesh.
        let q = JacobiParams::new(0.6, 0.8).unwrap();
        let mesh = Mesh::graded(10, GradingMap::Exp).unwrap();
        let e = build_h_extended::<Dd>(&q, &mesh, HistoBasis::Shifted).unwrap();
        assert!((e.rows[0][1].to_f64() - -0.396_414_867_824_327_1).abs() < 1e-20);
        assert!((e.rows[0][9].to_f64() - -0.769_415_606_107_424).abs() < 1e-20);
    }

    #[test]
    fn jacobi_svd_of_known_matrices() {
        let rows = vec![vec![Dd::from_f64(3.0), Dd::zero()], vec![Dd::zero(), Dd::from_f64(-4.0)]];
        let s = singular_values_extended(&rows).unwrap();
        assert_eq!((s[0].to_f64(), s[1].to_f64()), (4.0, 3.0));
        // Hilbert matrix of order 12; condition number from a 50-digit SVD.
        let h: Vec<Vec<Dd>> =
            (0..12).map(|i| (0..12).map(|j| Dd::one() / Dd::from_f64((i + j + 1) as f64)).collect()).collect();
        let s = singular_values_extended(&h).unwrap();
        let cond = s[0].to_f64() / s[11].to_f64();
        assert!((cond / 1.713_228_904_7e16 - 1.0).abs() < 1e-9, "{cond:e}");
    }

    #[test]
    fn certificate_on_small_mesh() {
        let q = JacobiParams::new(1.5, 1.0).unwrap();
        let c = certify_unisolvence(&q, &Mesh::graded(12, GradingMap::Square).unwrap(), HistoBasis::Shifted).unwrap();
        assert!(c.certified, "{c:?}");
        assert_eq!(c.precision_bits, 106);
        assert!(c.sigma_min > 0.0 && c.sigma_min <= c.sigma_max);
    }

    #[test]
    fn precisions_agree_where_both_resolve() {
        let q = JacobiParams::new(0.6, 0.8).unwrap();
        let mesh = Mesh::graded(8, GradingMap::Square).unwrap();
        let a = certify_with::<Dd>(&q, &mesh, HistoBasis::Standard).unwrap();
        let b = certify_with::<Mp>(&q, &mesh, HistoBasis::Standard).unwrap();
        assert!((a.sigma_min / b.sigma_min - 1.0).abs() < 1e-20);
        assert!(b.perturbation_bound < 1e-40, "{}", b.perturbation_bound);
    }
}
