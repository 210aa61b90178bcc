//! Histopolation matrices and the factorizations linking them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::{coupling_coeffs, fill_jacobi, recurrence_coeffs, JacobiParams};
use crate::matrix::DenseMatrix;
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, integrate_family, needs_grading, AdaptiveOptions, Grading, Point, HIGH_ORDER};

/// Polynomial family the histopolant is expanded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoBasis {
    /// `φ_{j-1} = P_{j-1}^{(α+1,β+1)}`
    #[default]
    Shifted,
    /// `φ_{j-1} = P_{j-1}^{(α,β)}`
    Standard,
}

impl HistoBasis {
    /// Parameters of the polynomials spanning the basis.
    pub fn polynomial_params(self, params: &JacobiParams) -> JacobiParams {
        match self {
            HistoBasis::Shifted => params.shifted(1.0).expect("shifting up keeps parameters valid"),
            HistoBasis::Standard => *params,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HistoBasis::Shifted => "shifted",
            HistoBasis::Standard => "standard",
        }
    }
}

/// `(1-t)^a (1+t)^b` as a family-quadrature weight.
#[derive(Debug, Clone, Copy)]
struct Exponents {
    a: f64,
    b: f64,
}

impl Exponents {
    fn of(params: &JacobiParams) -> Self {
        Self { a: params.alpha(), b: params.beta() }
    }

    #[inline]
    fn eval(&self, p: &Point) -> f64 {
        gap_pow(p.one_minus, self.a) * gap_pow(p.one_plus, self.b)
    }

    fn grading(&self, lo: f64, hi: f64) -> Grading {
        Grading { left: lo == -1.0 && needs_grading(self.b), right: hi == 1.0 && needs_grading(self.a) }
    }

    fn check(&self, lo: f64, hi: f64) -> Result<()> {
        if lo == -1.0 && self.b <= -1.0 {
            return Err(Error::NonIntegrable { t: -1.0, exponent: self.b });
        }
        if hi == 1.0 && self.a <= -1.0 {
            return Err(Error::NonIntegrable { t: 1.0, exponent: self.a });
        }
        Ok(())
    }
}

#[inline]
fn gap_pow(gap: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        gap
    } else if e == 2.0 {
        gap * gap
    } else {
        gap.powf(e)
    }
}

/// Weight `ω_{α-1,β-1}` of the primitives `I_j`, `J_j`.
fn lowered(params: &JacobiParams) -> Result<Exponents> {
    params.require_positive()?;
    Ok(Exponents { a: params.alpha() - 1.0, b: params.beta() - 1.0 })
}

/// `M[i][k] = ∫_{s_i} P_k^{poly} w` for `k < dim`, row `i` per cell.
fn cell_moments(poly: &JacobiParams, w: Exponents, dim: usize, mesh: &Mesh) -> Result<DenseMatrix> {
    let n = mesh.cells();
    if dim == 0 {
        return Ok(DenseMatrix::zeros(n, 0));
    }
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = mesh.cell(i);
            w.check(lo, hi)?;
            let options = AdaptiveOptions { relative: true, ..Default::default() };
            let res = integrate_family(lo, hi, dim, w.grading(lo, hi), options, |p, out| {
                fill_jacobi(poly, p.t, out);
                let wt = w.eval(p);
                out.iter_mut().for_each(|v| *v *= wt);
            })?;
            Ok(res.values)
        })
        .collect::<Result<_>>()?;
    Ok(DenseMatrix::from_fn(n, dim, |i, k| rows[i][k]))
}

/// Running sums of the cell rows, with a leading zero row.
fn prefix_rows(moments: &DenseMatrix) -> DenseMatrix {
    let (n, d) = moments.shape();
    let mut out = DenseMatrix::zeros(n + 1, d);
    for i in 0..n {
        for k in 0..d {
            out[(i + 1, k)] = out[(i, k)] + moments[(i, k)];
        }
    }
    out
}

fn divide_rows_by_widths(m: &DenseMatrix, mesh: &Mesh) -> DenseMatrix {
    let inv: Vec<f64> = mesh.widths().iter().map(|h| 1.0 / h).collect();
    m.scale_rows(&inv).expect("one width per cell")
}

/// `[H]_{i,j} = (1/h_i) ∫_{s_i} φ_{j-1} ω_{α,β}`.
pub fn build_h(params: &JacobiParams, mesh: &Mesh, basis: HistoBasis) -> Result<DenseMatrix> {
    let m = cell_moments(&basis.polynomial_params(params), Exponents::of(params), mesh.cells(), mesh)?;
    Ok(divide_rows_by_widths(&m, mesh))
}

/// Backward differences `(u_i - u_{i-1}) / h_i`, `N × (N+1)`.
pub fn build_delta(mesh: &Mesh) -> DenseMatrix {
    let n = mesh.cells();
    let mut d = DenseMatrix::zeros(n, n + 1);
    for (i, h) in mesh.widths().iter().enumerate() {
        d[(i, i)] = -1.0 / h;
        d[(i, i + 1)] = 1.0 / h;
    }
    d
}

/// `ψ_j(x_k)` for `k = 0..N`.
pub fn primitive_psi(params: &JacobiParams, j: usize, mesh: &Mesh) -> Result<Vec<f64>> {
    if j == 0 {
        return Err(Error::InvalidDegree { degree: j, reason: "primitives are indexed from j = 1" });
    }
    let m = cell_moments(&params.shifted(1.0)?, Exponents::of(params), j, mesh)?;
    Ok(prefix_rows(&m).column(j - 1))
}

/// `[Ψ]_{k+1,j} = ψ_j(x_k)`, `(N+1) × N`.
pub fn build_psi(params: &JacobiParams, mesh: &Mesh) -> Result<DenseMatrix> {
    let m = cell_moments(&params.shifted(1.0)?, Exponents::of(params), mesh.cells(), mesh)?;
    Ok(prefix_rows(&m))
}

fn primitive_family(params: &JacobiParams, j: usize, x: f64, times_t: bool) -> Result<f64> {
    let w = lowered(params)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    if x == -1.0 {
        return Ok(0.0);
    }
    w.check(-1.0, x)?;
    let res = integrate_family(-1.0, x, 1, w.grading(-1.0, x), AdaptiveOptions::default(), |p, out| {
        let mut local = vec![0.0; j + 1];
        fill_jacobi(params, p.t, &mut local);
        let f = if times_t { p.t * local[j] } else { local[j] };
        out[0] = f * w.eval(p);
    })?;
    Ok(res.values[0])
}

/// `I_j(x) = ∫_{-1}^x P_j ω_{α-1,β-1}`.
pub fn primitive_i(params: &JacobiParams, j: usize, x: f64) -> Result<f64> {
    primitive_family(params, j, x, false)
}

/// `J_j(x) = ∫_{-1}^x t P_j ω_{α-1,β-1}`.
pub fn primitive_j(params: &JacobiParams, j: usize, x: f64) -> Result<f64> {
    primitive_family(params, j, x, true)
}

/// `[R]_{k+1,j} = (2/(j+σ+1)) P_j(x_k) ω(x_k)`; endpoint rows vanish.
pub fn build_r(params: &JacobiParams, mesh: &Mesh) -> Result<DenseMatrix> {
    params.require_positive()?;
    let n = mesh.cells();
    let s = params.sigma();
    let w = Exponents::of(params);
    let mut r = DenseMatrix::zeros(n + 1, n);
    let mut buf = vec![0.0; n + 1];
    for k in 1..n {
        let x = mesh.nodes()[k];
        fill_jacobi(params, x, &mut buf);
        let wt = w.eval(&Point { t: x, one_minus: 1.0 - x, one_plus: 1.0 + x });
        for j in 1..=n {
            r[(k, j - 1)] = 2.0 / (j as f64 + s + 1.0) * buf[j] * wt;
        }
    }
    Ok(r)
}

/// `[I^ext]_{k+1,r+1} = I_r(x_k)` for `r = 0..N+1`, `(N+1) × (N+2)`.
pub fn build_iext(params: &JacobiParams, mesh: &Mesh) -> Result<DenseMatrix> {
    let w = lowered(params)?;
    let m = cell_moments(params, w, mesh.cells() + 2, mesh)?;
    Ok(prefix_rows(&m))
}

/// Tridiagonal coupling `T^(J)`, `(N+2) × N`, column `j` holding `ℓ_j, d_j, u_j`.
pub fn build_tj(params: &JacobiParams, n: usize) -> Result<DenseMatrix> {
    params.require_positive()?;
    let mut t = DenseMatrix::zeros(n + 2, n);
    for j in 1..=n {
        let c = coupling_coeffs(params, j)?;
        t[(j - 1, j - 1)] = c.l;
        t[(j, j - 1)] = c.d;
        t[(j + 1, j - 1)] = c.u;
    }
    Ok(t)
}

/// Every matrix of the shifted-basis construction on one mesh.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub h: DenseMatrix,
    pub delta: DenseMatrix,
    pub psi: DenseMatrix,
    pub r: DenseMatrix,
    pub iext: DenseMatrix,
    pub tj: DenseMatrix,
}

impl OperatorBundle {
    pub fn build(params: &JacobiParams, mesh: &Mesh) -> Result<Self> {
        params.require_positive()?;
        let moments = cell_moments(&params.shifted(1.0)?, Exponents::of(params), mesh.cells(), mesh)?;
        Ok(Self {
            h: divide_rows_by_widths(&moments, mesh),
            delta: build_delta(mesh),
            psi: prefix_rows(&moments),
            r: build_r(params, mesh)?,
            iext: build_iext(params, mesh)?,
            tj: build_tj(params, mesh.cells())?,
        })
    }

    /// Relative residuals of `H = ΔΨ` and `Ψ = R + I^ext T^(J)`.
    pub fn residuals(&self) -> Result<FactorizationReport> {
        let r1 = self.h.sub(&self.delta.matmul(&self.psi)?)?.frobenius_norm() / self.h.frobenius_norm();
        let rebuilt = self.r.add(&self.iext.matmul(&self.tj)?)?;
        let r2 = self.psi.sub(&rebuilt)?.frobenius_norm() / self.psi.frobenius_norm();
        Ok(FactorizationReport { r1, r2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    /// `‖H - ΔΨ‖_F / ‖H‖_F`
    pub r1: f64,
    /// `‖Ψ - R - I^ext T^(J)‖_F / ‖Ψ‖_F`
    pub r2: f64,
}

pub fn verify_factorization(params: &JacobiParams, mesh: &Mesh) -> Result<FactorizationReport> {
    OperatorBundle::build(params, mesh)?.residuals()
}

/// Largest pointwise defects of the integration-by-parts and locality identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveIdentityReport {
    /// `max |ψ_j - (2/(j+σ+1))(P_j ω + δ I_j + σ J_j)|`
    pub integration_by_parts: f64,
    /// `max |J_j - (a_j I_{j+1} + b_j I_j + c_j I_{j-1})|`
    pub locality: f64,
}

/// Checks both primitive identities for `j = 1..=jmax` at `samples` equispaced points of `[-1, 1]`.
pub fn primitive_identities(params: &JacobiParams, jmax: usize, samples: usize) -> Result<PrimitiveIdentityReport> {
    let w = lowered(params)?;
    if jmax == 0 || samples < 2 {
        return Err(Error::InvalidArgument("need jmax >= 1 and at least two samples".into()));
    }
    let up = params.shifted(1.0)?;
    let (s, delta) = (params.sigma(), params.delta());
    let coeffs: Vec<_> = (1..=jmax).map(|j| recurrence_coeffs(params, j)).collect::<Result<_>>()?;
    // Layout: ψ_1..ψ_jmax, I_0..I_{jmax+1}, J_0..J_jmax.
    let (n_psi, n_i) = (jmax, jmax + 2);
    let dim = n_psi + n_i + jmax + 1;
    let defects: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let x = -1.0 + 2.0 * k as f64 / (samples - 1) as f64;
            if k == 0 {
                return Ok((0.0, 0.0));
            }
            let x = if k == samples - 1 { 1.0 } else { x };
            let res = integrate_family(-1.0, x, dim, w.grading(-1.0, x), AdaptiveOptions::default(), |p, out| {
                let lw = w.eval(p);
                let full = lw * p.one_minus * p.one_plus;
                let (psi, rest) = out.split_at_mut(n_psi);
                let (ii, jj) = rest.split_at_mut(n_i);
                let mut shifted = vec![0.0; jmax];
                fill_jacobi(&up, p.t, &mut shifted);
                for (o, v) in psi.iter_mut().zip(&shifted) {
                    *o = v * full;
                }
                fill_jacobi(params, p.t, ii);
                for (o, v) in jj.iter_mut().zip(ii.iter()) {
                    *o = p.t * v * lw;
                }
                ii.iter_mut().for_each(|v| *v *= lw);
            })?;
            let v = &res.values;
            let (psi, ii, jj) = (&v[..n_psi], &v[n_psi..n_psi + n_i], &v[n_psi + n_i..]);
            let mut pw = vec![0.0; jmax + 1];
            fill_jacobi(params, x, &mut pw);
            let wx = Exponents::of(params).eval(&Point { t: x, one_minus: 1.0 - x, one_plus: 1.0 + x });
            let (mut ibp, mut loc) = (0.0f64, 0.0f64);
            for j in 1..=jmax {
                let scale = 2.0 / (j as f64 + s + 1.0);
                let rhs = scale * (pw[j] * wx + delta * ii[j] + s * jj[j]);
                ibp = ibp.max((psi[j - 1] - rhs).abs());
                let c = coeffs[j - 1];
                loc = loc.max((jj[j] - (c.a * ii[j + 1] + c.b * ii[j] + c.c * ii[j - 1])).abs());
            }
            Ok((ibp, loc))
        })
        .collect::<Result<_>>()?;
    Ok(defects.iter().fold(PrimitiveIdentityReport { integration_by_parts: 0.0, locality: 0.0 }, |acc, &(a, b)| {
        PrimitiveIdentityReport { integration_by_parts: acc.integration_by_parts.max(a), locality: acc.locality.max(b) }
    }))
}

/// `G̃_{ℓ,k} = ∫ P_{ℓ-1} P_{k-1} ω_{α,β}²`, `N × N`.
pub fn build_gram(params: &JacobiParams, n: usize) -> Result<DenseMatrix> {
    let sq = params.squared()?;
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let w = Exponents::of(&sq);
    // Panels are adapted to the diagonal integrands, which share the resolution
    // requirements of every product of two family members.
    let options =
        AdaptiveOptions { max_panels: 400 + 4 * n, initial_panels: (n / 8).clamp(1, 256), ..Default::default() };
    let diag = integrate_family(-1.0, 1.0, n, w.grading(-1.0, 1.0), options, |p, out| {
        fill_jacobi(params, p.t, out);
        let wt = w.eval(p);
        out.iter_mut().for_each(|v| *v = *v * *v * wt);
    })?;
    let rule = gauss_legendre(HIGH_ORDER)?;
    let points = diag.panels.len() * rule.order;
    let mut v = faer::Mat::<f64>::zeros(points, n);
    let mut buf = vec![0.0; n];
    let mut row = 0;
    for panel in &diag.panels {
        let half = 0.5 * panel.width;
        for (&x, &wq) in rule.nodes.iter().zip(&rule.weights) {
            let p = panel.point(x);
            let scale = (half * wq * w.eval(&p)).sqrt();
            fill_jacobi(params, p.t, &mut buf);
            for k in 0..n {
                v[(row, k)] = scale * buf[k];
            }
            row += 1;
        }
    }
    let g = v.transpose() * &v;
    let mut out = DenseMatrix::from_faer(g.as_ref());
    for l in 0..n {
        for k in 0..l {
            let avg = 0.5 * (out[(l, k)] + out[(k, l)]);
            out[(l, k)] = avg;
            out[(k, l)] = avg;
        }
    }
    Ok(out)
}

/// `b_i = (1/h_i) ∫_{s_i} f ω_{α,β}`.
pub fn cell_averages(f: impl Fn(f64) -> f64 + Sync, params: &JacobiParams, mesh: &Mesh) -> Result<Vec<f64>> {
    let w = Exponents::of(params);
    (1..=mesh.cells())
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = mesh.cell(i);
            // The weight mass rides along as the reference scale.
            let options = AdaptiveOptions { relative: true, ..Default::default() };
            let res = integrate_family(lo, hi, 2, w.grading(lo, hi), options, |p, out| {
                let wt = w.eval(p);
                out[0] = f(p.t) * wt;
                out[1] = wt;
            })?;
            Ok(res.values[0] / (hi - lo))
        })
        .collect()
}
