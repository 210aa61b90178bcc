//! Solving the histopolation system and evaluating the resulting polynomial.

use std::path::Path;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Error, Result};
use crate::jacobi::{fill_jacobi, JacobiParams};
use crate::matrix::DenseMatrix;
use crate::mesh::Mesh;
use crate::operators::{build_h, cell_averages, HistoBasis};

/// Solves are refused beyond this 1-norm condition estimate.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Allowed relative coefficient error when reproducing a polynomial from its
/// own cell averages: `10⁻⁷`, or the forward-error scale `κ₁ ε` if larger.
pub fn reproduction_tolerance(condition: f64) -> f64 {
    1e-7f64.max(condition * f64::EPSILON)
}

/// `p(t) = Σ c_j φ_{j-1}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histopolant {
    pub coeffs: Vec<f64>,
    pub basis: HistoBasis,
    pub params: JacobiParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histopolation {
    pub histopolant: Histopolant,
    /// `‖Hc - b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
    pub relative_residual: f64,
    pub condition_estimate: f64,
}

fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn one_norm(m: &Mat<f64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, 0)].abs()).sum()
}

/// Hager's estimate of `‖A⁻¹‖₁`, strengthened by Higham's alternating test vector.
fn inverse_one_norm(lu: &PartialPivLu<f64>, n: usize) -> f64 {
    let mut x = Mat::from_fn(n, 1, |_, _| 1.0 / n as f64);
    let mut est = 0.0f64;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = est.max(one_norm(&y));
        if !est.is_finite() {
            return f64::INFINITY;
        }
        let xi = Mat::from_fn(n, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
        let z = lu.solve_transpose(&xi);
        let (j, zmax) = (0..n).map(|i| (i, z[(i, 0)].abs())).fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        let ztx: f64 = (0..n).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
        if zmax <= ztx || j == last {
            break;
        }
        last = j;
        x = Mat::from_fn(n, 1, |i, _| if i == j { 1.0 } else { 0.0 });
    }
    let alt = Mat::from_fn(n, 1, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
    });
    let alt_est = 2.0 * one_norm(&lu.solve(&alt)) / (3.0 * n as f64);
    est.max(alt_est)
}

fn matrix_one_norm(a: &DenseMatrix) -> f64 {
    (0..a.cols()).map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solves `Hc = b` by LU with partial pivoting after checking conditioning.
pub fn solve_system(h: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h.cols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let lu = h.to_faer().partial_piv_lu();
    let condition = matrix_one_norm(h) * inverse_one_norm(&lu, n);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::Singular { condition });
    }
    let sol = lu.solve(&column(b));
    let c: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    let hc = h.mat_vec(&c)?;
    let res = hc.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((c, if bn > 0.0 { res / bn } else { res }, condition))
}

pub fn solve_histopolation(params: &JacobiParams, mesh: &Mesh, basis: HistoBasis, b: &[f64]) -> Result<Histopolation> {
    let h = build_h(params, mesh, basis)?;
    let (coeffs, relative_residual, condition_estimate) = solve_system(&h, b)?;
    Ok(Histopolation {
        histopolant: Histopolant { coeffs, basis, params: *params },
        relative_residual,
        condition_estimate,
    })
}

impl Histopolant {
    pub fn eval(&self, x: f64) -> Result<f64> {
        evaluate_histopolant(self, x)
    }
}

pub fn evaluate_histopolant(p: &Histopolant, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    let mut buf = vec![0.0; p.coeffs.len()];
    fill_jacobi(&p.basis.polynomial_params(&p.params), x, &mut buf);
    Ok(p.coeffs.iter().zip(&buf).map(|(c, v)| c * v).sum())
}

/// `max_i |(1/h_i) ∫_{s_i} p ω - b_i|`
pub fn verify_averages(p: &Histopolant, mesh: &Mesh, b: &[f64]) -> Result<f64> {
    if b.len() != mesh.cells() {
        return Err(Error::DimensionMismatch { expected: mesh.cells(), found: b.len() });
    }
    let poly = p.basis.polynomial_params(&p.params);
    let f = |t: f64| {
        let mut local = vec![0.0; p.coeffs.len()];
        fill_jacobi(&poly, t, &mut local);
        p.coeffs.iter().zip(&local).map(|(c, v)| c * v).sum::<f64>()
    };
    let avg = cell_averages(f, &p.params, mesh)?;
    Ok(avg.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Functions available to reconstruction experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetFunction {
    One,
    Exp,
    /// `1 / (1 + 25 t²)`
    Runge,
    /// `t³ + 1`
    Cubic,
    /// Piecewise-linear through ascending samples.
    Tabulated {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl TargetFunction {
    pub const NAMES: [&'static str; 4] = ["one", "exp", "runge", "cubic"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(Self::One),
            "exp" => Ok(Self::Exp),
            "runge" => Ok(Self::Runge),
            "cubic" => Ok(Self::Cubic),
            other => Err(Error::InvalidArgument(format!(
                "unknown function '{other}' (expected one of {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn tabulated(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        if x.len() < 2 {
            return Err(Error::InvalidArgument("a table needs at least two samples".into()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("table abscissae must be strictly increasing".into()));
        }
        if x[0] > -1.0 || x[x.len() - 1] < 1.0 {
            return Err(Error::InvalidArgument("table must cover [-1, 1]".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("table values must be finite".into()));
        }
        Ok(Self::Tabulated { x, y })
    }

    /// Two columns `x,y` per line (comma or whitespace separated); `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parse =
                |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", lineno + 1)));
            match fields.as_slice() {
                [a, b] => {
                    xs.push(parse(a)?);
                    ys.push(parse(b)?);
                }
                _ => return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1))),
            }
        }
        Self::tabulated(xs, ys)
    }

    pub fn name(&self) -> &str {
        match self {
            Self::One => "one",
            Self::Exp => "exp",
            Self::Runge => "runge",
            Self::Cubic => "cubic",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Exp => t.exp(),
            Self::Runge => 1.0 / (1.0 + 25.0 * t * t),
            Self::Cubic => t * t * t + 1.0,
            Self::Tabulated { x, y } => {
                let k = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
                let s = (t - x[k - 1]) / (x[k] - x[k - 1]);
                y[k - 1] + s * (y[k] - y[k - 1])
            }
        }
    }
}
