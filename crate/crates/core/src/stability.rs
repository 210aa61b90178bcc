//! Mesh-weighted norms and the Gram-matrix stability bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::{fill_jacobi, JacobiParams};
use crate::matrix::{symmetric_eigenvalues, DenseMatrix};
use crate::mesh::Mesh;
use crate::operators::{build_gram, build_h, HistoBasis};
use crate::quadrature::{integrate_family, needs_grading, AdaptiveOptions, Grading};
use crate::spectral::singular_values;

pub const DEFAULT_TRIALS: usize = 200;
/// Largest order for which the exact PSD check is run by default.
pub const PSD_CHECK_MAX_N: usize = 512;

/// `√(Σ h_i v_i²)`
pub fn h_norm(mesh: &Mesh, v: &[f64]) -> Result<f64> {
    if v.len() != mesh.cells() {
        return Err(Error::DimensionMismatch { expected: mesh.cells(), found: v.len() });
    }
    Ok(mesh.widths().iter().zip(v).map(|(h, x)| h * x * x).sum::<f64>().sqrt())
}

fn sqrt_dh_times(h: &DenseMatrix, mesh: &Mesh) -> Result<DenseMatrix> {
    let roots: Vec<f64> = mesh.widths().iter().map(|w| w.sqrt()).collect();
    h.scale_rows(&roots)
}

/// `‖H‖_{2→h}`, the largest singular value of `D_h^{1/2} H`.
pub fn op_norm_2_to_h(h: &DenseMatrix, mesh: &Mesh) -> Result<f64> {
    Ok(singular_values(&sqrt_dh_times(h, mesh)?)?.first().copied().unwrap_or(0.0))
}

pub fn lambda_max_gram(params: &JacobiParams, n: usize) -> Result<f64> {
    Ok(symmetric_eigenvalues(&build_gram(params, n)?)?.last().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub lambda_max_gram: f64,
    /// `λ_max / (1 + log N)`
    pub log_bound_ratio: f64,
    pub trace_gram: f64,
    /// `trace(G̃) / (1 + log N)`
    pub trace_ratio: f64,
    pub op_norm_2_to_h: f64,
    /// Minimum over trials of `cᵀG̃c - ‖Hc‖_h²` for unit `c`.
    pub inequality_margin: f64,
    /// Smallest eigenvalue of `G̃ - HᵀD_hH`, when computed.
    pub psd_gap: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl StabilityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.inequality_margin >= -tol
            && self.psd_gap.is_none_or(|g| g >= -tol)
            && self.op_norm_2_to_h <= self.lambda_max_gram.sqrt() + tol
    }
}

/// `G̃ - HᵀD_hH` for the standard-basis histopolation matrix.
fn gap_matrix(gram: &DenseMatrix, h: &DenseMatrix, mesh: &Mesh) -> Result<DenseMatrix> {
    let s = sqrt_dh_times(h, mesh)?;
    gram.sub(&s.transpose().matmul(&s)?)
}

/// Smallest eigenvalue of `G̃ - HᵀD_hH`.
pub fn psd_gap(params: &JacobiParams, mesh: &Mesh) -> Result<f64> {
    let h = build_h(params, mesh, HistoBasis::Standard)?;
    let g = build_gram(params, mesh.cells())?;
    Ok(symmetric_eigenvalues(&gap_matrix(&g, &h, mesh)?)?[0])
}

/// Randomized and exact checks of `‖Hc‖_h² ≤ cᵀG̃c ≤ λ_max ‖c‖²`.
pub fn verify_stability(params: &JacobiParams, mesh: &Mesh, trials: usize, seed: u64) -> Result<StabilityReport> {
    let n = mesh.cells();
    let h = build_h(params, mesh, HistoBasis::Standard)?;
    let g = build_gram(params, n)?;
    let lambda = symmetric_eigenvalues(&g)?.last().copied().unwrap_or(0.0);
    let log_scale = 1.0 + (n as f64).ln();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            let c: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            c.into_iter().map(|v| v / norm).collect()
        })
        .collect();
    let margins: Vec<f64> = samples
        .par_iter()
        .map(|c| {
            let hc = h.mat_vec(c)?;
            let gc = g.mat_vec(c)?;
            let quad: f64 = c.iter().zip(&gc).map(|(a, b)| a * b).sum();
            Ok(quad - h_norm(mesh, &hc)?.powi(2))
        })
        .collect::<Result<_>>()?;
    let psd = if n <= PSD_CHECK_MAX_N { Some(symmetric_eigenvalues(&gap_matrix(&g, &h, mesh)?)?[0]) } else { None };
    let trace = g.trace();
    Ok(StabilityReport {
        n,
        lambda_max_gram: lambda,
        log_bound_ratio: lambda / log_scale,
        trace_gram: trace,
        trace_ratio: trace / log_scale,
        op_norm_2_to_h: op_norm_2_to_h(&h, mesh)?,
        inequality_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        psd_gap: psd,
        trials,
        seed,
    })
}

/// `d_j = ∫ P_j² ω²` for `j = 0..=jmax`.
pub fn diag_gram_decay(params: &JacobiParams, jmax: usize) -> Result<Vec<f64>> {
    let sq = params.squared()?;
    let grading = Grading { left: needs_grading(sq.beta()), right: needs_grading(sq.alpha()) };
    let options =
        AdaptiveOptions { max_panels: 400 + 4 * jmax, initial_panels: (jmax / 8).clamp(1, 256), ..Default::default() };
    let res = integrate_family(-1.0, 1.0, jmax + 1, grading, options, |p, out| {
        fill_jacobi(params, p.t, out);
        let w = sq.weight_from_gaps(p.one_minus, p.one_plus);
        out.iter_mut().for_each(|v| *v = *v * *v * w);
    })?;
    Ok(res.values)
}
