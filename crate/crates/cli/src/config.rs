use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use jacobi_histo::spectral::{DEFAULT_GRID_M, DEFAULT_TRIM};
use jacobi_histo::{GradingMap, JacobiParams, Mesh};
use serde::{Deserialize, Serialize};

/// Largest N accepted without `--allow-large-n`.
pub const MAX_DEFAULT_N: usize = 4000;

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Factorization residuals and primitive identities.
    Identities,
    /// Threshold fractions of scaled histopolation matrices.
    SvDecay,
    /// Singular values against a rearranged symbol.
    SymbolCompare,
    /// Gram-matrix stability bound.
    Stability,
    /// Recover a polynomial from cell averages.
    Reconstruct,
    /// Singular values of the unscaled histopolation matrix.
    ProbeUnscaled,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::SvDecay => "sv-decay",
            Command::SymbolCompare => "symbol-compare",
            Command::Stability => "stability",
            Command::Reconstruct => "reconstruct",
            Command::ProbeUnscaled => "probe-unscaled",
        }
    }

    pub fn stem(self) -> &'static str {
        match self {
            Command::Identities => "identities",
            Command::SvDecay => "sv_decay",
            Command::SymbolCompare => "symbol_compare",
            Command::Stability => "stability",
            Command::Reconstruct => "reconstruct",
            Command::ProbeUnscaled => "probe_unscaled",
        }
    }

    fn default_n_list(self) -> Vec<usize> {
        match self {
            Command::Identities => vec![16, 64, 256],
            Command::Stability => vec![16, 64, 128],
            Command::SvDecay => vec![1000, 2000, 3000],
            Command::SymbolCompare => vec![2000],
            Command::Reconstruct => vec![16],
            Command::ProbeUnscaled => vec![500, 1000, 2000],
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Uniform,
    Exp,
    Square,
    File,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// `N T^(J)` against its coupling symbol.
    Tj,
    /// `Δ/N` against the grading-map symbol.
    Delta,
}

/// Every setting is optional so that a config file and flags can be layered.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mesh: Option<MeshKind>,
    /// Node file for `--mesh file`, one node per line.
    #[arg(long, global = true)]
    pub mesh_file: Option<PathBuf>,
    /// Comma-separated, strictly increasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Replaces the four study scalings of sv-decay with `H / N^γ`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub grid_m: Option<usize>,
    /// Quantile window as `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    pub trim: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "out", global = true)]
    #[serde(alias = "out")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub allow_large_n: bool,
    #[arg(long, global = true, value_enum)]
    pub target: Option<Target>,
    /// One of `one`, `exp`, `runge`, `cubic`.
    #[arg(long, global = true)]
    pub function: Option<String>,
    /// Tabulated target, two columns `x,f(x)`.
    #[arg(long, global = true)]
    pub function_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

impl Overrides {
    /// Fields set here win over `base`.
    fn over(self, base: Overrides) -> Overrides {
        Overrides {
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            mesh: self.mesh.or(base.mesh),
            mesh_file: self.mesh_file.or(base.mesh_file),
            n_list: self.n_list.or(base.n_list),
            eps_list: self.eps_list.or(base.eps_list),
            gamma: self.gamma.or(base.gamma),
            grid_m: self.grid_m.or(base.grid_m),
            trim: self.trim.or(base.trim),
            seed: self.seed.or(base.seed),
            out_dir: self.out_dir.or(base.out_dir),
            workers: self.workers.or(base.workers),
            allow_large_n: self.allow_large_n || base.allow_large_n,
            target: self.target.or(base.target),
            function: self.function.or(base.function),
            function_file: self.function_file.or(base.function_file),
            trials: self.trials.or(base.trials),
        }
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: f64,
    pub beta: f64,
    pub mesh: MeshKind,
    pub mesh_file: Option<PathBuf>,
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub gamma: Option<f64>,
    pub grid_m: usize,
    pub trim: (f64, f64),
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub allow_large_n: bool,
    pub target: Target,
    pub function: String,
    pub function_file: Option<PathBuf>,
    pub trials: usize,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn load_file(path: &Path) -> Result<Overrides, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Layers `flags` over `file`, fills defaults and validates.
    pub fn resolve(command: Command, flags: Overrides, file: Option<Overrides>) -> Result<Self, ConfigError> {
        let o = flags.over(file.unwrap_or_default());
        let mesh = o.mesh.unwrap_or(MeshKind::Uniform);
        let trim = match o.trim.as_deref() {
            None => DEFAULT_TRIM,
            Some([lo, hi]) => (*lo, *hi),
            Some(other) => return Err(bad(format!("--trim takes two values, got {}", other.len()))),
        };
        let cfg = ExperimentConfig {
            command,
            alpha: o.alpha.unwrap_or(2.0),
            beta: o.beta.unwrap_or(2.0),
            mesh,
            mesh_file: o.mesh_file,
            n_list: o.n_list.unwrap_or_else(|| command.default_n_list()),
            eps_list: o.eps_list.unwrap_or_else(|| vec![1e-2, 5e-3, 1e-3]),
            gamma: o.gamma,
            grid_m: o.grid_m.unwrap_or(DEFAULT_GRID_M),
            trim,
            seed: o.seed.unwrap_or(0),
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from("results")),
            workers: o.workers,
            allow_large_n: o.allow_large_n,
            target: o.target.unwrap_or(Target::Tj),
            function: o.function.unwrap_or_else(|| "exp".into()),
            function_file: o.function_file,
            trials: o.trials.unwrap_or(jacobi_histo::stability::DEFAULT_TRIALS),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        JacobiParams::new(self.alpha, self.beta).map_err(|e| bad(e.to_string()))?;
        if self.command == Command::Identities && !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(bad(format!(
                "identities requires alpha > 0 and beta > 0 (got alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if self.n_list.is_empty() {
            return Err(bad("N-list is empty"));
        }
        if self.n_list.contains(&0) {
            return Err(bad("N must be positive"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("N-list must be strictly increasing"));
        }
        self.check_size(self.n_list[self.n_list.len() - 1])?;
        if self.eps_list.is_empty() || self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(bad("eps-list must be nonempty and positive"));
        }
        if let Some(g) = self.gamma {
            if !g.is_finite() {
                return Err(bad("gamma must be finite"));
            }
        }
        if self.grid_m == 0 {
            return Err(bad("grid-m must be positive"));
        }
        let (lo, hi) = self.trim;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(bad(format!("trim window ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")));
        }
        if self.workers == Some(0) {
            return Err(bad("workers must be positive"));
        }
        if self.trials == 0 {
            return Err(bad("trials must be positive"));
        }
        match (self.mesh, &self.mesh_file) {
            (MeshKind::File, None) => return Err(bad("--mesh file requires --mesh-file")),
            (MeshKind::File, Some(p)) if !p.is_file() => {
                return Err(bad(format!("mesh file {} not found", p.display())));
            }
            _ => {}
        }
        if self.command == Command::SymbolCompare {
            if self.n_list.len() != 1 {
                return Err(bad("symbol-compare takes a single N"));
            }
            if self.target == Target::Delta && self.mesh == MeshKind::File {
                return Err(bad("the Delta symbol needs a grading map, not a mesh file"));
            }
        }
        if self.command == Command::Reconstruct {
            if self.n_list.len() != 1 && self.mesh != MeshKind::File {
                return Err(bad("reconstruct takes a single N"));
            }
            if self.function_file.is_none() {
                jacobi_histo::TargetFunction::from_name(&self.function).map_err(|e| bad(e.to_string()))?;
            }
        }
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| bad(format!("output directory {} is not writable: {e}", self.out_dir.display())))?;
        let probe = self.out_dir.join(".jhist-write-check");
        std::fs::write(&probe, b"")
            .map_err(|e| bad(format!("output directory {} is not writable: {e}", self.out_dir.display())))?;
        let _ = std::fs::remove_file(probe);
        Ok(())
    }

    pub fn check_size(&self, n: usize) -> Result<(), ConfigError> {
        if n > MAX_DEFAULT_N && !self.allow_large_n {
            return Err(bad(format!("N={n} exceeds {MAX_DEFAULT_N}; pass --allow-large-n to run it")));
        }
        Ok(())
    }

    pub fn params(&self) -> JacobiParams {
        JacobiParams::new(self.alpha, self.beta).expect("validated")
    }

    pub fn grading_map(&self) -> Option<GradingMap> {
        match self.mesh {
            MeshKind::Uniform => Some(GradingMap::Identity),
            MeshKind::Exp => Some(GradingMap::Exp),
            MeshKind::Square => Some(GradingMap::Square),
            MeshKind::File => None,
        }
    }

    /// Meshes over the N-list, or the single mesh read from file.
    pub fn meshes(&self) -> jacobi_histo::Result<Vec<Mesh>> {
        match (self.grading_map(), &self.mesh_file) {
            (Some(map), _) => self.n_list.iter().map(|&n| Mesh::graded(n, map.clone())).collect(),
            (None, Some(path)) => Ok(vec![Mesh::from_file(path)?]),
            (None, None) => unreachable!("validated"),
        }
    }
}
