use std::path::PathBuf;

use jacobi_histo::operators::{build_delta, build_h, build_tj, cell_averages, primitive_identities};
use jacobi_histo::reconstruct::{solve_histopolation, verify_averages};
use jacobi_histo::spectral::{
    compare_rearrangements, sample_symbol_delta, sample_symbol_tj, singular_values, threshold_fraction,
    zero_distribution_probe, Decay,
};
use jacobi_histo::stability::verify_stability;
use jacobi_histo::{GradingMap, HistoBasis, Mesh, OperatorBundle, ScalingSpec, TargetFunction};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, ConfigError, ExperimentConfig, MeshKind, Target};
use crate::output::Table;

pub const R1_TOL: f64 = 1e-9;
pub const R2_TOL: f64 = 1e-8;
pub const LEMMA_TOL: f64 = 1e-8;
pub const SYMBOL_TOL: f64 = 0.05;
pub const SYMBOL_UNIFORM_DELTA_TOL: f64 = 0.01;
pub const STABILITY_TOL: f64 = 1e-8;
/// Allowed growth of `λ_max / (1 + log N)` over its value at the first N.
pub const LOG_RATIO_GROWTH: f64 = 1.5;
pub const RECONSTRUCT_POINTS: usize = 401;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(jacobi_histo::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<jacobi_histo::Error> for CliError {
    fn from(e: jacobi_histo::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub struct Outcome {
    pub passed: bool,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Identities => identities(cfg),
        Command::SvDecay => sv_decay(cfg),
        Command::SymbolCompare => symbol_compare(cfg),
        Command::Stability => stability(cfg),
        Command::Reconstruct => reconstruct(cfg),
        Command::ProbeUnscaled => probe_unscaled(cfg),
    }
}

fn meshes(cfg: &ExperimentConfig) -> Result<Vec<Mesh>, CliError> {
    let meshes = cfg.meshes()?;
    for m in &meshes {
        cfg.check_size(m.cells())?;
    }
    Ok(meshes)
}

fn save(cfg: &ExperimentConfig, table: &Table) -> Result<PathBuf, CliError> {
    let path = cfg.out_dir.join(format!("{}.csv", cfg.command.stem()));
    table.save(&path)?;
    Ok(path)
}

fn identities(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cfg.params();
    let meshes = meshes(cfg)?;
    let lemmas = primitive_identities(&q, 30, 51)?;
    let reports: Vec<_> = meshes
        .par_iter()
        .map(|m| OperatorBundle::build(&q, m).and_then(|b| b.residuals()))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["N", "r1", "r2", "lemma24_max", "lemma25_max"]);
    let mut passed = lemmas.integration_by_parts <= LEMMA_TOL && lemmas.locality <= LEMMA_TOL;
    for (m, r) in meshes.iter().zip(&reports) {
        passed &= r.r1 <= R1_TOL && r.r2 <= R2_TOL;
        println!("N={:<5} r1={:.3e} r2={:.3e}", m.cells(), r.r1, r.r2);
        table.push(vec![
            m.cells().into(),
            r.r1.into(),
            r.r2.into(),
            lemmas.integration_by_parts.into(),
            lemmas.locality.into(),
        ]);
    }
    println!("integration by parts {:.3e}, locality {:.3e}", lemmas.integration_by_parts, lemmas.locality);
    let summary = json!({
        "tolerances": { "r1": R1_TOL, "r2": R2_TOL, "lemmas": LEMMA_TOL },
        "max_r1": reports.iter().map(|r| r.r1).fold(0.0, f64::max),
        "max_r2": reports.iter().map(|r| r.r2).fold(0.0, f64::max),
        "integration_by_parts_max": lemmas.integration_by_parts,
        "locality_max": lemmas.locality,
    });
    Ok(Outcome { passed, outputs: vec![save(cfg, &table)?], summary })
}

/// Meshes for the N-list, keyed by N. A mesh file supplies exactly one.
#[allow(clippy::type_complexity)]
fn mesh_source(
    cfg: &ExperimentConfig,
) -> Result<(Vec<usize>, impl Fn(usize) -> jacobi_histo::Result<Mesh> + Sync), CliError> {
    let map = cfg.grading_map();
    let file_mesh = match cfg.mesh {
        MeshKind::File => Some(meshes(cfg)?.remove(0)),
        _ => None,
    };
    let n_list = match &file_mesh {
        Some(m) => vec![m.cells()],
        None => cfg.n_list.clone(),
    };
    let source = move |n: usize| match (&map, &file_mesh) {
        (Some(map), _) => Mesh::graded(n, map.clone()),
        (None, Some(m)) => Ok(m.clone()),
        (None, None) => unreachable!(),
    };
    Ok((n_list, source))
}

fn sv_decay(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cfg.params();
    let specs: Vec<ScalingSpec> = match cfg.gamma {
        Some(g) => vec![ScalingSpec::DivideByNPow(g)],
        None => ScalingSpec::STUDY.to_vec(),
    };
    let (n_list, source) = mesh_source(cfg)?;
    let rep = zero_distribution_probe(source, |m| build_h(&q, m, HistoBasis::Shifted), &n_list, &specs, &cfg.eps_list)?;
    let mut table = Table::new(&["N", "scaling", "gamma", "eps", "q"]);
    let mut verdicts = Vec::new();
    let mut passed = true;
    for s in &rep.series {
        for (i, &n) in rep.n_list.iter().enumerate() {
            for (k, &eps) in rep.eps_list.iter().enumerate() {
                table.push(vec![n.into(), s.spec.label().into(), s.spec.gamma().into(), eps.into(), s.q[i][k].into()]);
            }
        }
        for (k, d) in s.decay.iter().enumerate() {
            passed &= *d != Decay::NotDecreasing;
            println!("{}({}) eps={:e}: {}", s.spec.label(), s.spec.gamma(), rep.eps_list[k], d.label());
            verdicts.push(json!({
                "scaling": s.spec.label(),
                "gamma": s.spec.gamma(),
                "eps": rep.eps_list[k],
                "decay": d.label(),
            }));
        }
    }
    Ok(Outcome { passed, outputs: vec![save(cfg, &table)?], summary: json!({ "decay": verdicts }) })
}

fn symbol_compare(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.n_list[0];
    let (matrix, symbol, tol) = match cfg.target {
        Target::Tj => {
            let q = cfg.params();
            (build_tj(&q, n)?.scaled(n as f64), sample_symbol_tj(&q, cfg.grid_m, cfg.trim)?, SYMBOL_TOL)
        }
        Target::Delta => {
            let map = cfg.grading_map().expect("validated");
            let tol = if matches!(map, GradingMap::Identity) { SYMBOL_UNIFORM_DELTA_TOL } else { SYMBOL_TOL };
            let mesh = Mesh::graded(n, map.clone())?;
            (build_delta(&mesh).scaled(1.0 / n as f64), sample_symbol_delta(&map, cfg.grid_m, cfg.trim)?, tol)
        }
    };
    let cmp = compare_rearrangements(&singular_values(&matrix)?, &symbol)?;
    let mut table = Table::new(&["quantile", "sigma_value", "symbol_value"]);
    for r in &cmp.rows {
        table.push(vec![r.quantile.into(), r.sigma.into(), r.symbol.into()]);
    }
    let passed = cmp.mean_relative_deviation <= tol;
    println!(
        "mean relative deviation {:.5} (tol {tol}), max {:.5}",
        cmp.mean_relative_deviation, cmp.max_relative_deviation
    );
    let summary = json!({
        "N": n,
        "trim": [cfg.trim.0, cfg.trim.1],
        "mean_relative_deviation": cmp.mean_relative_deviation,
        "max_relative_deviation": cmp.max_relative_deviation,
        "tolerance": tol,
    });
    Ok(Outcome { passed, outputs: vec![save(cfg, &table)?], summary })
}

fn stability(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cfg.params();
    let meshes = meshes(cfg)?;
    let reports: Vec<_> =
        meshes.par_iter().map(|m| verify_stability(&q, m, cfg.trials, cfg.seed)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&["N", "alpha", "beta", "lambda_max", "ratio", "op_norm", "min_margin"]);
    let base = reports[0].log_bound_ratio;
    let mut passed = true;
    for r in &reports {
        passed &= r.holds(STABILITY_TOL) && r.log_bound_ratio <= LOG_RATIO_GROWTH * base;
        let margin = r.psd_gap.map_or(r.inequality_margin, |g| g.min(r.inequality_margin));
        println!(
            "N={:<5} lambda_max={:.6} ratio={:.6} min_margin={:.3e}",
            r.n, r.lambda_max_gram, r.log_bound_ratio, margin
        );
        table.push(vec![
            r.n.into(),
            cfg.alpha.into(),
            cfg.beta.into(),
            r.lambda_max_gram.into(),
            r.log_bound_ratio.into(),
            r.op_norm_2_to_h.into(),
            margin.into(),
        ]);
    }
    let summary = json!({
        "seed": cfg.seed,
        "trials": cfg.trials,
        "tolerance": STABILITY_TOL,
        "log_ratio_growth_bound": LOG_RATIO_GROWTH,
        "psd_gap": reports.iter().map(|r| r.psd_gap).collect::<Vec<_>>(),
        "trace_ratio": reports.iter().map(|r| r.trace_ratio).collect::<Vec<_>>(),
    });
    Ok(Outcome { passed, outputs: vec![save(cfg, &table)?], summary })
}

fn reconstruct(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cfg.params();
    let mesh = meshes(cfg)?.remove(0);
    let f = match &cfg.function_file {
        Some(path) => TargetFunction::from_file(path)?,
        None => TargetFunction::from_name(&cfg.function)?,
    };
    let b = cell_averages(|t| f.eval(t), &q, &mesh)?;
    let sol = solve_histopolation(&q, &mesh, HistoBasis::Shifted, &b)?;
    let residual = verify_averages(&sol.histopolant, &mesh, &b)?;
    let mut table = Table::new(&["x", "f", "p"]);
    let mut max_err = 0.0f64;
    for k in 0..RECONSTRUCT_POINTS {
        let x = -1.0 + 2.0 * k as f64 / (RECONSTRUCT_POINTS - 1) as f64;
        let (fx, px) = (f.eval(x), sol.histopolant.eval(x)?);
        max_err = max_err.max((fx - px).abs());
        table.push(vec![x.into(), fx.into(), px.into()]);
    }
    println!(
        "N={} {}: average residual {:.3e}, condition {:.3e}, max |f - p| {:.3e}",
        mesh.cells(),
        f.name(),
        residual,
        sol.condition_estimate,
        max_err
    );
    let summary = json!({
        "N": mesh.cells(),
        "function": f.name(),
        "average_residual": residual,
        "relative_residual": sol.relative_residual,
        "condition_estimate": sol.condition_estimate,
        "max_pointwise_error": max_err,
        "coefficients": sol.histopolant.coeffs,
    });
    Ok(Outcome { passed: true, outputs: vec![save(cfg, &table)?], summary })
}

/// Exploratory: no acceptance threshold applies.
fn probe_unscaled(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let q = cfg.params();
    let meshes = meshes(cfg)?;
    let svals: Vec<Vec<f64>> = meshes
        .par_iter()
        .map(|m| build_h(&q, m, HistoBasis::Shifted).and_then(|h| singular_values(&h)))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["N", "quantile", "sigma"]);
    let mut fractions = Vec::new();
    for (m, s) in meshes.iter().zip(&svals) {
        let n = m.cells();
        for (j, v) in s.iter().enumerate() {
            table.push(vec![n.into(), ((j as f64 + 0.5) / n as f64).into(), (*v).into()]);
        }
        let q: Vec<f64> = cfg.eps_list.iter().map(|&e| threshold_fraction(s, e, n)).collect();
        println!("N={n:<5} q={q:?}");
        fractions.push(json!({ "N": n, "eps": cfg.eps_list, "q": q }));
    }
    Ok(Outcome { passed: true, outputs: vec![save(cfg, &table)?], summary: json!({ "fractions": fractions }) })
}
