//! Singular value statistics and comparison with sampled symbols.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jacobi::JacobiParams;
use crate::matrix::DenseMatrix;
use crate::mesh::{GradingMap, Mesh};

pub const DEFAULT_GRID_M: usize = 2000;
pub const DEFAULT_TRIM: (f64, f64) = (0.05, 0.95);
/// Largest relative rise tolerated once in an otherwise decreasing series.
pub const INVERSION_SLACK: f64 = 0.05;

/// All singular values, descending.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg("matrix has non-finite entries".into()));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = a.to_faer().singular_values().map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// `#{j : σ_j > eps} / n`.
pub fn threshold_fraction(svals: &[f64], eps: f64, n: usize) -> f64 {
    svals.iter().filter(|&&s| s > eps).count() as f64 / n.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingSpec {
    None,
    /// `A / N^γ`
    DivideByNPow(f64),
    /// `A / (log N)^γ`
    DivideByLogNPow(f64),
    /// `N^γ D_h^{1/2} A`
    PremultiplySqrtDhNPow(f64),
}

impl ScalingSpec {
    /// The four scalings of the decay study.
    pub const STUDY: [ScalingSpec; 4] = [
        ScalingSpec::DivideByNPow(1.0),
        ScalingSpec::DivideByNPow(0.9),
        ScalingSpec::DivideByNPow(0.8),
        ScalingSpec::DivideByLogNPow(4.0),
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ScalingSpec::None => "none",
            ScalingSpec::DivideByNPow(_) => "divide_n_pow",
            ScalingSpec::DivideByLogNPow(_) => "divide_logn_pow",
            ScalingSpec::PremultiplySqrtDhNPow(_) => "sqrt_dh_n_pow",
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            ScalingSpec::None => 0.0,
            ScalingSpec::DivideByNPow(g) | ScalingSpec::DivideByLogNPow(g) | ScalingSpec::PremultiplySqrtDhNPow(g) => g,
        }
    }

    /// Scalar factor when the scaling is a multiple of the identity.
    pub fn scalar_factor(&self, n: usize) -> Result<Option<f64>> {
        let nf = n as f64;
        match *self {
            ScalingSpec::None => Ok(Some(1.0)),
            ScalingSpec::DivideByNPow(g) => Ok(Some(nf.powf(-g))),
            ScalingSpec::DivideByLogNPow(g) => {
                if n < 2 {
                    return Err(Error::InvalidArgument("log scaling requires N >= 2".into()));
                }
                Ok(Some(nf.ln().powf(-g)))
            }
            ScalingSpec::PremultiplySqrtDhNPow(_) => Ok(None),
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.gamma().is_finite() {
            return Err(Error::InvalidArgument(format!("scaling exponent {} is not finite", self.gamma())));
        }
        Ok(())
    }
}

pub fn apply_scaling(a: &DenseMatrix, spec: ScalingSpec, mesh: Option<&Mesh>, n: usize) -> Result<DenseMatrix> {
    spec.validate()?;
    if let Some(c) = spec.scalar_factor(n)? {
        return Ok(if c == 1.0 { a.clone() } else { a.scaled(c) });
    }
    let mesh = mesh.ok_or_else(|| Error::InvalidArgument("premultiplied scaling requires a mesh".into()))?;
    let c = (n as f64).powf(spec.gamma());
    let factors: Vec<f64> = mesh.widths().iter().map(|h| c * h.sqrt()).collect();
    a.scale_rows(&factors)
}

/// `|κ(y, θ)| = (2/y) |δ + σ cos θ|`
pub fn tj_symbol(params: &JacobiParams, y: f64, theta: f64) -> f64 {
    2.0 / y * (params.delta() + params.sigma() * theta.cos()).abs()
}

/// `|1 - e^{iθ}| / (2 g'(y))`
pub fn delta_symbol(map: &GradingMap, y: f64, theta: f64) -> f64 {
    (2.0 * (0.5 * theta).sin()).abs() / (2.0 * map.derivative(y))
}

/// Sorted samples of a symbol modulus on the midpoint grid of `(0,1) × (-π,π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSamples {
    /// Nonincreasing.
    pub values: Vec<f64>,
    pub grid_m: usize,
    pub trim: (f64, f64),
}

impl SymbolSamples {
    /// Nonincreasing rearrangement evaluated at `q ∈ [0, 1]`.
    pub fn rearrangement(&self, q: f64) -> f64 {
        let m = self.values.len();
        let pos = (q * m as f64 - 0.5).clamp(0.0, (m - 1) as f64);
        let k = pos.floor() as usize;
        if k + 1 >= m {
            return self.values[m - 1];
        }
        let frac = pos - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

fn check_grid(grid_m: usize, trim: (f64, f64)) -> Result<()> {
    if grid_m < 2 {
        return Err(Error::InvalidArgument(format!("grid size {grid_m} must be at least 2")));
    }
    if !(0.0 <= trim.0 && trim.0 < trim.1 && trim.1 <= 1.0) {
        return Err(Error::InvalidArgument(format!("trim window ({}, {}) is not inside [0, 1]", trim.0, trim.1)));
    }
    Ok(())
}

pub fn grid_y(m: usize, k: usize) -> f64 {
    (k as f64 + 0.5) / m as f64
}

pub fn grid_theta(m: usize, l: usize) -> f64 {
    -PI + (2 * l + 1) as f64 * PI / m as f64
}

/// Samples `f(y, θ)` at the `m × m` midpoints and sorts them descending.
pub fn sample_symbol(f: impl Fn(f64, f64) -> f64 + Sync, grid_m: usize, trim: (f64, f64)) -> Result<SymbolSamples> {
    check_grid(grid_m, trim)?;
    let mut values: Vec<f64> = (0..grid_m)
        .into_par_iter()
        .flat_map_iter(|k| {
            let y = grid_y(grid_m, k);
            let f = &f;
            (0..grid_m).map(move |l| f(y, grid_theta(grid_m, l)))
        })
        .collect();
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("symbol sample {bad} is not a finite nonnegative value")));
    }
    values.par_sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(SymbolSamples { values, grid_m, trim })
}

pub fn sample_symbol_tj(params: &JacobiParams, grid_m: usize, trim: (f64, f64)) -> Result<SymbolSamples> {
    sample_symbol(|y, t| tj_symbol(params, y, t), grid_m, trim)
}

pub fn sample_symbol_delta(map: &GradingMap, grid_m: usize, trim: (f64, f64)) -> Result<SymbolSamples> {
    check_grid(grid_m, trim)?;
    if let Some(k) = (0..grid_m).find(|&k| !(map.derivative(grid_y(grid_m, k)) > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "grading map '{}' has g' <= 0 at y = {}",
            map.name(),
            grid_y(grid_m, k)
        )));
    }
    sample_symbol(|y, t| delta_symbol(map, y, t), grid_m, trim)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub quantile: f64,
    pub sigma: f64,
    pub symbol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementComparison {
    /// Over the trimmed window, `|σ - s| / s`.
    pub max_relative_deviation: f64,
    pub mean_relative_deviation: f64,
    /// Every singular value with its quantile and rearranged symbol value.
    pub rows: Vec<ComparisonRow>,
}

/// Compares descending singular values with the rearranged symbol at quantiles `(k + 1/2)/d`.
pub fn compare_rearrangements(svals: &[f64], sym: &SymbolSamples) -> Result<RearrangementComparison> {
    let d = svals.len();
    if d < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 singular values, got {d}")));
    }
    if sym.values.is_empty() {
        return Err(Error::InvalidArgument("symbol has no samples".into()));
    }
    let mut sorted = svals.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let rows: Vec<ComparisonRow> = sorted
        .iter()
        .enumerate()
        .map(|(k, &sigma)| {
            let quantile = (k as f64 + 0.5) / d as f64;
            ComparisonRow { quantile, sigma, symbol: sym.rearrangement(quantile) }
        })
        .collect();
    let (lo, hi) = sym.trim;
    let devs: Vec<f64> = rows
        .iter()
        .filter(|r| r.quantile >= lo && r.quantile <= hi)
        .map(|r| {
            if r.symbol == 0.0 {
                if r.sigma == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (r.sigma - r.symbol).abs() / r.symbol
            }
        })
        .collect();
    if devs.is_empty() {
        return Err(Error::InvalidArgument(format!("trim window ({lo}, {hi}) contains no quantiles")));
    }
    Ok(RearrangementComparison {
        max_relative_deviation: devs.iter().copied().fold(0.0, f64::max),
        mean_relative_deviation: devs.iter().sum::<f64>() / devs.len() as f64,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    /// Every step decreases, or sits at zero.
    Strict,
    /// One step rose by at most [`INVERSION_SLACK`] relative.
    OneInversion,
    NotDecreasing,
    /// Fewer than two values.
    NotApplicable,
}

impl Decay {
    pub fn passes(self) -> bool {
        matches!(self, Decay::Strict | Decay::OneInversion)
    }

    pub fn label(self) -> &'static str {
        match self {
            Decay::Strict => "strict",
            Decay::OneInversion => "one_inversion",
            Decay::NotDecreasing => "not_decreasing",
            Decay::NotApplicable => "not_applicable",
        }
    }
}

pub fn classify_decay(series: &[f64]) -> Decay {
    if series.len() < 2 {
        return Decay::NotApplicable;
    }
    let mut inversions = 0;
    for w in series.windows(2) {
        let (prev, next) = (w[0], w[1]);
        if next < prev || (prev == 0.0 && next == 0.0) {
            continue;
        }
        if next - prev <= INVERSION_SLACK * prev {
            inversions += 1;
        } else {
            return Decay::NotDecreasing;
        }
    }
    match inversions {
        0 => Decay::Strict,
        1 => Decay::OneInversion,
        _ => Decay::NotDecreasing,
    }
}

/// `q_N(ε)` for one scaling over the N-list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    pub spec: ScalingSpec,
    /// `q[n_index][eps_index]`
    pub q: Vec<Vec<f64>>,
    /// One verdict per `ε`.
    pub decay: Vec<Decay>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub series: Vec<ScalingSeries>,
}

impl ExperimentReport {
    pub fn all_decay(&self) -> bool {
        self.series.iter().all(|s| s.decay.iter().all(|d| d.passes()))
    }
}

/// Threshold fractions of a matrix family under several scalings.
///
/// Scalar scalings share one decomposition per `N`.
pub fn zero_distribution_probe(
    mesh_for: impl Fn(usize) -> Result<Mesh> + Sync,
    build: impl Fn(&Mesh) -> Result<DenseMatrix> + Sync,
    n_list: &[usize],
    specs: &[ScalingSpec],
    eps_list: &[f64],
) -> Result<ExperimentReport> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("N-list must be strictly increasing".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::InvalidArgument(format!("threshold {e} must be positive")));
    }
    for s in specs {
        s.validate()?;
    }
    let per_n: Vec<Vec<Vec<f64>>> = n_list
        .par_iter()
        .map(|&n| {
            let mesh = mesh_for(n)?;
            let a = build(&mesh)?;
            let base = if specs.iter().any(|s| !matches!(s, ScalingSpec::PremultiplySqrtDhNPow(_))) {
                Some(singular_values(&a)?)
            } else {
                None
            };
            specs
                .iter()
                .map(|spec| {
                    let svals = match spec.scalar_factor(n)? {
                        Some(c) => base.as_ref().expect("computed above").iter().map(|s| s * c).collect(),
                        None => singular_values(&apply_scaling(&a, *spec, Some(&mesh), n)?)?,
                    };
                    Ok(eps_list.iter().map(|&e| threshold_fraction(&svals, e, n)).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;
    let series = specs
        .iter()
        .enumerate()
        .map(|(si, &spec)| {
            let q: Vec<Vec<f64>> = per_n.iter().map(|row| row[si].clone()).collect();
            let decay =
                (0..eps_list.len()).map(|ei| classify_decay(&q.iter().map(|r| r[ei]).collect::<Vec<_>>())).collect();
            ScalingSeries { spec, q, decay }
        })
        .collect();
    Ok(ExperimentReport { n_list: n_list.to_vec(), eps_list: eps_list.to_vec(), series })
}
