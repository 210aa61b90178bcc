//! Jacobi polynomials `P_j^{(α,β)}` on `[-1, 1]`, their weight, norms and the
//! scalar coefficient sequences used by the histopolation operators.
//!
//! Polynomials use the classical normalization `P_j(1) = binom(j + α, j)`,
//! for which
//!
//! ```text
//! K_j = ∫ P_j² ω = 2^{α+β+1} / (2j+α+β+1) · Γ(j+α+1) Γ(j+β+1) / (Γ(j+1) Γ(j+α+β+1)).
//! ```

use std::fmt;

use crate::error::{Error, Result};

/// Exponent pair `(α, β)` of the weight `(1 - t)^α (1 + t)^β`.
///
/// Construction enforces `α, β > -1`; `σ = α + β` and `δ = α - β` are derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    alpha: f64,
    beta: f64,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParams { alpha, beta, reason: "exponents must be finite" });
        }
        if alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidParams { alpha, beta, reason: "exponents must exceed -1" });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn delta(&self) -> f64 {
        self.alpha - self.beta
    }

    /// `(α + k, β + k)`, e.g. `k = 1` for the basis of the histopolation space
    /// and `k = -1` for the weight of the primitives `I_j`.
    pub fn shifted(&self, k: f64) -> Result<Self> {
        Self::new(self.alpha + k, self.beta + k)
    }

    /// `(2α, 2β)`, the exponents of `ω²`.
    pub fn squared(&self) -> Result<Self> {
        if self.alpha <= -0.5 || self.beta <= -0.5 {
            let (t, exponent) = if self.alpha <= -0.5 { (1.0, 2.0 * self.alpha) } else { (-1.0, 2.0 * self.beta) };
            return Err(Error::NonIntegrable { t, exponent });
        }
        Self::new(2.0 * self.alpha, 2.0 * self.beta)
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return Err(Error::InvalidParams {
                alpha: self.alpha,
                beta: self.beta,
                reason: "this construction requires alpha > 0 and beta > 0",
            });
        }
        Ok(())
    }

    /// Weight evaluated from the gaps `1 - t` and `1 + t`, which callers
    /// close to an endpoint can supply without cancellation.
    #[inline]
    pub(crate) fn weight_from_gaps(&self, one_minus: f64, one_plus: f64) -> f64 {
        pow_gap(one_minus, self.alpha) * pow_gap(one_plus, self.beta)
    }
}

impl fmt::Display for JacobiParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(alpha={}, beta={})", self.alpha, self.beta)
    }
}

#[inline]
fn pow_gap(gap: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if exponent == 1.0 {
        gap
    } else if exponent == 2.0 {
        gap * gap
    } else {
        gap.powf(exponent)
    }
}

fn check_domain(t: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain { value: t });
    }
    Ok(())
}

/// `ω_{α,β}(t) = (1 - t)^α (1 + t)^β`.
pub fn weight(params: &JacobiParams, t: f64) -> Result<f64> {
    check_domain(t)?;
    if t == 1.0 && params.alpha < 0.0 {
        return Err(Error::EndpointSingularity { t, exponent: params.alpha });
    }
    if t == -1.0 && params.beta < 0.0 {
        return Err(Error::EndpointSingularity { t, exponent: params.beta });
    }
    Ok(params.weight_from_gaps(1.0 - t, 1.0 + t))
}

/// Writes `P_0(x), …, P_{out.len()-1}(x)` into `out`.
///
/// Upward recurrence in the form
/// `2(n+1)(n+σ+1)(2n+σ) P_{n+1} = (2n+σ+1)((2n+σ+2)(2n+σ) x + α²-β²) P_n - 2(n+α)(n+β)(2n+σ+2) P_{n-1}`,
/// started from `P_0 = 1` and `P_1 = (σ+2)x/2 + δ/2`.
pub fn fill_jacobi(params: &JacobiParams, x: f64, out: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    if len == 1 {
        return;
    }
    let (a, b) = (params.alpha, params.beta);
    let s = a + b;
    out[1] = 0.5 * (s + 2.0) * x + 0.5 * (a - b);
    let ab2 = a * a - b * b;
    for n in 1..len - 1 {
        let nf = n as f64;
        let m = 2.0 * nf + s;
        let lead = 2.0 * (nf + 1.0) * (nf + s + 1.0) * m;
        let c1 = (m + 1.0) * ((m + 2.0) * m * x + ab2);
        let c0 = 2.0 * (nf + a) * (nf + b) * (m + 2.0);
        out[n + 1] = (c1 * out[n] - c0 * out[n - 1]) / lead;
    }
}

/// `[P_0(x), …, P_J(x)]`.
pub fn eval_jacobi(params: &JacobiParams, max_degree: usize, x: f64) -> Result<Vec<f64>> {
    check_domain(x)?;
    let mut out = vec![0.0; max_degree + 1];
    fill_jacobi(params, x, &mut out);
    Ok(out)
}

/// Single value `P_j(x)`.
pub fn jacobi(params: &JacobiParams, j: usize, x: f64) -> Result<f64> {
    Ok(eval_jacobi(params, j, x)?[j])
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `K_j = ∫ P_j² ω_{α,β}`, evaluated in log-Γ arithmetic.
pub fn jacobi_norm(params: &JacobiParams, j: usize) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let s = a + b;
    let ln2 = std::f64::consts::LN_2;
    let ln_k = if j == 0 {
        // (σ+1) Γ(σ+1) = Γ(σ+2) keeps σ = -1 regular.
        (s + 1.0) * ln2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(s + 2.0)
    } else {
        let jf = j as f64;
        (s + 1.0) * ln2 - (2.0 * jf + s + 1.0).ln() + ln_gamma(jf + a + 1.0) + ln_gamma(jf + b + 1.0)
            - ln_gamma(jf + 1.0)
            - ln_gamma(jf + s + 1.0)
    };
    ln_k.exp()
}

/// Orthonormal polynomial `P_j / √K_j`.
pub fn eval_orthonormal(params: &JacobiParams, j: usize, x: f64) -> Result<f64> {
    Ok(jacobi(params, j, x)? / jacobi_norm(params, j).sqrt())
}

/// `P_j'(x) = (j+α+β+1)/2 · P_{j-1}^{(α+1,β+1)}(x)`.
pub fn eval_jacobi_derivative(params: &JacobiParams, j: usize, x: f64) -> Result<f64> {
    check_domain(x)?;
    if j == 0 {
        return Ok(0.0);
    }
    let up = params.shifted(1.0)?;
    Ok(0.5 * (j as f64 + params.sigma() + 1.0) * jacobi(&up, j - 1, x)?)
}

/// Coefficients of `t P_j = a_j P_{j+1} + b_j P_j + c_j P_{j-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn recurrence_coeffs(params: &JacobiParams, j: usize) -> Result<RecurrenceCoeffs> {
    if j == 0 {
        return Err(Error::InvalidDegree { degree: j, reason: "recurrence coefficients start at j = 1" });
    }
    let (al, be) = (params.alpha, params.beta);
    let s = al + be;
    let jf = j as f64;
    let a = 2.0 * (jf + 1.0) * (jf + s + 1.0) / ((2.0 * jf + s + 1.0) * (2.0 * jf + s + 2.0));
    let b = if al == be { 0.0 } else { (be * be - al * al) / ((2.0 * jf + s) * (2.0 * jf + s + 2.0)) };
    let c = 2.0 * (jf + al) * (jf + be) / ((2.0 * jf + s) * (2.0 * jf + s + 1.0));
    Ok(RecurrenceCoeffs { a, b, c })
}

/// Coefficients of `ψ_j = r̃_j + u_j I_{j+1} + d_j I_j + ℓ_j I_{j-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoeffs {
    pub u: f64,
    pub d: f64,
    pub l: f64,
}

pub fn coupling_coeffs(params: &JacobiParams, j: usize) -> Result<CouplingCoeffs> {
    params.require_positive()?;
    let RecurrenceCoeffs { a, b, c } = recurrence_coeffs(params, j)?;
    let s = params.sigma();
    let scale = 2.0 / (j as f64 + s + 1.0);
    Ok(CouplingCoeffs { u: scale * s * a, d: scale * (params.delta() + s * b), l: scale * s * c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre, integrate_weighted};
    use approx::assert_relative_eq;

    fn p(a: f64, b: f64) -> JacobiParams {
        JacobiParams::new(a, b).unwrap()
    }

    #[test]
    fn params_reject_nonintegrable_exponents() {
        assert!(JacobiParams::new(-1.0, 0.0).is_err());
        assert!(JacobiParams::new(0.0, -1.5).is_err());
        assert!(JacobiParams::new(f64::NAN, 0.0).is_err());
        let q = p(1.5, 1.0);
        assert_eq!(q.sigma(), 2.5);
        assert_eq!(q.delta(), 0.5);
    }

    #[test]
    fn weight_values() {
        assert_eq!(weight(&p(2.0, 2.0), 0.0).unwrap(), 1.0);
        assert_eq!(weight(&p(2.0, 2.0), 1.0).unwrap(), 0.0);
        let w = weight(&p(1.5, 1.0), 0.5).unwrap();
        let log_domain = (1.5 * 0.5f64.ln() + 1.5f64.ln()).exp();
        assert_relative_eq!(w, log_domain, max_relative = 1e-15);
        assert_relative_eq!(w, 0.530_330_085_889_910_6, max_relative = 1e-14);
    }

    #[test]
    fn weight_errors() {
        assert!(matches!(weight(&p(1.0, 1.0), 1.5), Err(Error::Domain { .. })));
        assert!(matches!(weight(&p(-0.5, 1.0), 1.0), Err(Error::EndpointSingularity { .. })));
        assert!(matches!(weight(&p(1.0, -0.5), -1.0), Err(Error::EndpointSingularity { .. })));
        assert!(weight(&p(-0.5, -0.5), 0.3).is_ok());
    }

    #[test]
    fn legendre_and_degree_zero() {
        assert_eq!(eval_jacobi(&p(0.0, 0.0), 1, 0.5).unwrap(), vec![1.0, 0.5]);
        assert_eq!(eval_jacobi(&p(0.7, -0.3), 0, 0.2).unwrap(), vec![1.0]);
        // Legendre P_3(0.5) = (5/8 - 3/2)/2
        let v = eval_jacobi(&p(0.0, 0.0), 3, 0.5).unwrap();
        assert_relative_eq!(v[3], -0.4375, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_case_has_vanishing_odd_values_at_zero() {
        let v = eval_jacobi(&p(2.0, 2.0), 3, 0.0).unwrap();
        assert_eq!(v[1], 0.0);
        assert_eq!(v[3], 0.0);
    }

    #[test]
    fn endpoint_value_is_binomial() {
        // P_j^{(α,β)}(1) = Γ(j+α+1) / (Γ(j+1) Γ(α+1))
        let q = p(1.5, 0.25);
        let v = eval_jacobi(&q, 40, 1.0).unwrap();
        for (j, &val) in v.iter().enumerate() {
            let jf = j as f64;
            let expected = (ln_gamma(jf + 2.5) - ln_gamma(jf + 1.0) - ln_gamma(2.5)).exp();
            assert_relative_eq!(val, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn norms() {
        assert_relative_eq!(jacobi_norm(&p(0.0, 0.0), 0), 2.0, max_relative = 1e-14);
        assert_relative_eq!(jacobi_norm(&p(2.0, 2.0), 0), 16.0 / 15.0, max_relative = 1e-14);
        let q = p(2.0, 2.0);
        let ratio = jacobi_norm(&q, 1000) * (2000.0 + 5.0) / 32.0;
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
        // Legendre: K_j = 2 / (2j + 1)
        for j in 0..20 {
            assert_relative_eq!(jacobi_norm(&p(0.0, 0.0), j), 2.0 / (2.0 * j as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn norm_matches_quadrature() {
        // Gauss-Legendre with 60 nodes integrates P_j² ω_{2,2} exactly for j ≤ 55.
        let q = p(2.0, 2.0);
        let rule = gauss_legendre(60).unwrap();
        for j in [0usize, 1, 5, 17, 40] {
            let mut buf = vec![0.0; j + 1];
            let integral: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| {
                    fill_jacobi(&q, t, &mut buf);
                    w * buf[j] * buf[j] * weight(&q, t).unwrap()
                })
                .sum();
            assert_relative_eq!(integral, jacobi_norm(&q, j), max_relative = 1e-12);
        }
    }

    #[test]
    fn orthonormal_values() {
        assert_relative_eq!(eval_orthonormal(&p(0.0, 0.0), 0, 0.3).unwrap(), 0.5f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            eval_orthonormal(&p(2.0, 2.0), 0, 0.0).unwrap(),
            (15.0f64 / 16.0).sqrt(),
            max_relative = 1e-14
        );
        for (q, j) in [(p(2.0, 2.0), 7usize), (p(1.5, 1.0), 12), (p(-0.3, 0.4), 5)] {
            let unit =
                integrate_weighted(|t| eval_orthonormal(&q, j, t).unwrap().powi(2), &q, -1.0, 1.0, 1e-12).unwrap();
            assert_relative_eq!(unit.value, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn recurrence_values() {
        assert_eq!(recurrence_coeffs(&p(2.0, 2.0), 7).unwrap().b, 0.0);
        let a1 = recurrence_coeffs(&p(1.5, 1.0), 1).unwrap().a;
        assert_relative_eq!(a1, 18.0 / (5.5 * 6.5), max_relative = 1e-15);
        let far = recurrence_coeffs(&p(2.0, 2.0), 10_000).unwrap();
        assert!((far.a - 0.5).abs() < 1e-3);
        assert!((far.c - 0.5).abs() < 1e-3);
        assert!(recurrence_coeffs(&p(2.0, 2.0), 0).is_err());
    }

    #[test]
    fn recurrence_reproduces_t_p1() {
        let q = p(1.5, 1.0);
        let RecurrenceCoeffs { a, b, c } = recurrence_coeffs(&q, 1).unwrap();
        for x in [-0.9, -0.4, 0.0, 0.35, 0.8] {
            let v = eval_jacobi(&q, 2, x).unwrap();
            assert!((x * v[1] - (a * v[2] + b * v[1] + c * v[0])).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_values() {
        assert_eq!(coupling_coeffs(&p(2.0, 2.0), 3).unwrap().d, 0.0);
        let cc = coupling_coeffs(&p(2.0, 2.0), 1000).unwrap();
        assert!((1000.0 * cc.u - 4.0).abs() <= 0.05);
        let q = p(1.5, 1.0);
        let a2 = recurrence_coeffs(&q, 2).unwrap().a;
        assert_relative_eq!(coupling_coeffs(&q, 2).unwrap().u, 2.0 * 2.5 * a2 / 5.5, max_relative = 1e-15);
        assert!(coupling_coeffs(&p(-0.5, 1.0), 2).is_err());
    }

    #[test]
    fn derivative_values() {
        assert_eq!(eval_jacobi_derivative(&p(1.0, 3.0), 0, 0.4).unwrap(), 0.0);
        assert_relative_eq!(eval_jacobi_derivative(&p(0.0, 0.0), 1, 0.7).unwrap(), 1.0, max_relative = 1e-15);
        let q = p(2.0, 2.0);
        let (x, h) = (0.3, 1e-5);
        let fd = (jacobi(&q, 5, x + h).unwrap() - jacobi(&q, 5, x - h).unwrap()) / (2.0 * h);
        assert!((eval_jacobi_derivative(&q, 5, x).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn weighted_uniform_envelope() {
        // (j+1) sup |P_j ω|² tends to 4^σ/π · max sin^{2α-1}(θ/2) cos^{2β-1}(θ/2) for α, β ≥ 1/2.
        let limit_22 = 4f64.powi(4) / std::f64::consts::PI / 8.0;
        let limit_hh = 4.0 / std::f64::consts::PI;
        for (q, limit) in [(p(2.0, 2.0), limit_22), (p(0.5, 0.5), limit_hh)] {
            let jmax = 2000;
            let mut buf = vec![0.0; jmax + 1];
            let mut sup = vec![0.0f64; jmax + 1];
            for k in 0..=20_000 {
                let t = -1.0 + 2.0 * k as f64 / 20_000.0;
                fill_jacobi(&q, t, &mut buf);
                let w = weight(&q, t).unwrap();
                for (s, v) in sup.iter_mut().zip(&buf) {
                    *s = s.max((v * w).powi(2));
                }
            }
            let scaled: Vec<f64> = sup.iter().enumerate().map(|(j, s)| s * (j as f64 + 1.0)).collect();
            let worst = scaled.iter().copied().fold(0.0, f64::max);
            assert!(worst <= 1.05 * limit, "{q}: {worst} vs {limit}");
            assert!((scaled[jmax] - limit).abs() < 0.05 * limit, "{q}: {} vs {limit}", scaled[jmax]);
        }
    }
}
