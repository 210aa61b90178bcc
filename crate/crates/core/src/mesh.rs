//! Partitions `-1 = x_0 < … < x_N = 1` of the reference interval.
//!
//! Graded meshes follow `x_i = -1 + 2 g(i/N)` for a map `g: [0,1] → [0,1]`
//! with `g(0) = 0`, `g(1) = 1`. Cell widths then behave like `h_i ≈ 2 g'(y)/N`,
//! which is where the factor 2 in the symbol `(1 - e^{iθ}) / (2 g'(y))` of
//! `Δ_N / N` comes from.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Minimum separation between consecutive nodes read from a table.
pub const MIN_SEPARATION: f64 = 1e-14;
pub const DEFAULT_RATIO_BOUND: f64 = 100.0;

type MapFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Node-generating map on `[0, 1]`.
#[derive(Clone)]
pub enum GradingMap {
    Identity,
    /// `g(y) = (e^y - 1) / (e - 1)`
    Exp,
    /// `g(y) = y²`
    Square,
    Custom {
        name: String,
        g: MapFn,
    },
}

impl GradingMap {
    pub fn custom(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GradingMap::Custom { name: name.into(), g: Arc::new(g) }
    }

    pub fn name(&self) -> &str {
        match self {
            GradingMap::Identity => "uniform",
            GradingMap::Exp => "exp",
            GradingMap::Square => "square",
            GradingMap::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            GradingMap::Identity => y,
            GradingMap::Exp => y.exp_m1() / 1f64.exp_m1(),
            GradingMap::Square => y * y,
            GradingMap::Custom { g, .. } => g(y),
        }
    }

    /// `g'(y)`; central differences for custom maps.
    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            GradingMap::Identity => 1.0,
            GradingMap::Exp => y.exp() / 1f64.exp_m1(),
            GradingMap::Square => 2.0 * y,
            GradingMap::Custom { g, .. } => {
                let h = 1e-6;
                let (lo, hi) = ((y - h).max(0.0), (y + h).min(1.0));
                (g(hi) - g(lo)) / (hi - lo)
            }
        }
    }
}

impl fmt::Debug for GradingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum MeshGenerator {
    Map(GradingMap),
    Table,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    generator: MeshGenerator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiUniformReport {
    /// `N · min h_i`
    pub c_h: f64,
    /// `N · max h_i`
    pub big_c_h: f64,
    pub is_quasi_uniform: bool,
}

impl Mesh {
    pub fn uniform(n: usize) -> Result<Self> {
        Self::graded(n, GradingMap::Identity)
    }

    pub fn graded(n: usize, map: GradingMap) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("at least one cell is required".into()));
        }
        let nf = n as f64;
        let mut nodes: Vec<f64> = match map {
            GradingMap::Identity => (0..=n).map(|i| -1.0 + 2.0 * i as f64 / nf).collect(),
            _ => (0..=n).map(|i| -1.0 + 2.0 * map.eval(i as f64 / nf)).collect(),
        };
        nodes[0] = -1.0;
        nodes[n] = 1.0;
        if let Some(i) = (1..=n).find(|&i| nodes[i] <= nodes[i - 1]) {
            return Err(Error::InvalidMesh(format!("map '{}' is not increasing at node {i}", map.name())));
        }
        Ok(Self::assemble(nodes, MeshGenerator::Map(map)))
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("at least two nodes are required".into()));
        }
        if nodes[0] != -1.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidMesh("first node must be -1 and last node 1".into()));
        }
        if let Some(i) = (1..nodes.len()).find(|&i| !(nodes[i] - nodes[i - 1] >= MIN_SEPARATION)) {
            return Err(Error::InvalidMesh(format!("nodes {} and {i} are not strictly increasing", i - 1)));
        }
        Ok(Self::assemble(nodes, MeshGenerator::Table))
    }

    /// One node per line, ascending; blank lines and `#` comments are skipped.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut nodes = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 =
                line.parse().map_err(|_| Error::Parse(format!("line {}: '{line}' is not a number", lineno + 1)))?;
            nodes.push(v);
        }
        Self::from_nodes(nodes)
    }

    fn assemble(nodes: Vec<f64>, generator: MeshGenerator) -> Self {
        let widths = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        Self { nodes, widths, generator }
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn generator(&self) -> &MeshGenerator {
        &self.generator
    }

    pub fn grading_map(&self) -> Option<&GradingMap> {
        match &self.generator {
            MeshGenerator::Map(g) => Some(g),
            MeshGenerator::Table => None,
        }
    }

    /// Cell `s_i = [x_{i-1}, x_i]` for `i = 1..=N`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.nodes[i - 1], self.nodes[i])
    }

    pub fn quasi_uniform_constants(&self) -> QuasiUniformReport {
        self.quasi_uniform_constants_with(DEFAULT_RATIO_BOUND)
    }

    pub fn quasi_uniform_constants_with(&self, ratio_bound: f64) -> QuasiUniformReport {
        let n = self.cells() as f64;
        let (min, max) = self.widths.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &h| (lo.min(h), hi.max(h)));
        let c_h = n * min;
        let big_c_h = n * max;
        QuasiUniformReport { c_h, big_c_h, is_quasi_uniform: big_c_h / c_h <= ratio_bound }
    }

    /// `D_h = diag(h_1, …, h_N)`.
    pub fn diag_h(&self) -> DenseMatrix {
        DenseMatrix::diagonal(&self.widths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_examples() {
        let m = Mesh::uniform(2).unwrap();
        assert_eq!(m.nodes(), &[-1.0, 0.0, 1.0]);
        assert_eq!(m.widths(), &[1.0, 1.0]);
        assert!(Mesh::uniform(4).unwrap().widths().iter().all(|&h| h == 0.5));
        let r = Mesh::uniform(1000).unwrap().quasi_uniform_constants();
        assert_relative_eq!(r.c_h, 2.0, max_relative = 1e-9);
        assert_relative_eq!(r.big_c_h, 2.0, max_relative = 1e-9);
        let r = Mesh::uniform(10).unwrap().quasi_uniform_constants();
        assert!(r.is_quasi_uniform);
        assert!(Mesh::uniform(0).is_err());
    }

    #[test]
    fn graded_examples() {
        let sq = Mesh::graded(2, GradingMap::Square).unwrap();
        assert_eq!(sq.nodes(), &[-1.0, -0.5, 1.0]);
        let ex = Mesh::graded(2, GradingMap::Exp).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(ex.nodes()[1], -1.0 + 2.0 * (e.sqrt() - 1.0) / (e - 1.0), max_relative = 1e-15);
        assert_relative_eq!(ex.nodes()[1], -0.244_918_662_403_709_1, max_relative = 1e-12);
        for n in [3usize, 10, 77] {
            let m = Mesh::graded(n, GradingMap::Square).unwrap();
            assert_relative_eq!(m.widths()[0], 2.0 / (n * n) as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn quasi_uniformity_of_graded_meshes() {
        let e = std::f64::consts::E;
        let r = Mesh::graded(100, GradingMap::Exp).unwrap().quasi_uniform_constants();
        // Direct scan oracle: first and last cell.
        let g = |y: f64| (y.exp() - 1.0) / (e - 1.0);
        assert_relative_eq!(r.c_h, 200.0 * g(0.01), max_relative = 1e-10);
        assert_relative_eq!(r.big_c_h, 200.0 * (1.0 - g(0.99)), max_relative = 1e-10);
        assert!((r.c_h - 2.0 / (e - 1.0)).abs() < 0.01);
        assert!((r.big_c_h - 2.0 * e / (e - 1.0)).abs() < 0.02);
        assert!(r.is_quasi_uniform);
        let r = Mesh::graded(100, GradingMap::Square).unwrap().quasi_uniform_constants();
        assert_relative_eq!(r.c_h, 0.02, max_relative = 1e-10);
        assert!(!r.is_quasi_uniform);
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let bad = GradingMap::custom("bump", |y| if y == 1.0 { 1.0 } else { (3.0 * y).sin().abs() / 2.0 });
        assert!(matches!(Mesh::graded(10, bad), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn identity_custom_map_reproduces_uniform() {
        let m = Mesh::graded(16, GradingMap::custom("id", |y| y)).unwrap();
        let u = Mesh::uniform(16).unwrap();
        for (a, b) in m.nodes().iter().zip(u.nodes()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn table_validation() {
        assert!(Mesh::from_nodes(vec![-1.0, 0.2, 1.0]).is_ok());
        assert!(Mesh::from_nodes(vec![-0.9, 1.0]).is_err());
        assert!(Mesh::from_nodes(vec![-1.0, 0.3, 0.3, 1.0]).is_err());
        assert!(Mesh::from_nodes(vec![-1.0, 0.3, 0.3 + 1e-15, 1.0]).is_err());
        assert!(Mesh::from_nodes(vec![-1.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn table_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nodes.txt");
        std::fs::write(&path, "# custom\n-1\n-0.25\n\n0.5\n1\n").unwrap();
        let m = Mesh::from_file(&path).unwrap();
        assert_eq!(m.cells(), 3);
        assert!(m.grading_map().is_none());
        std::fs::write(&path, "-1\nabc\n1\n").unwrap();
        assert!(matches!(Mesh::from_file(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn diag_h_examples() {
        let d = Mesh::uniform(2).unwrap().diag_h();
        assert_eq!(d, DenseMatrix::diagonal(&[1.0, 1.0]));
        let d = Mesh::graded(4, GradingMap::Square).unwrap().diag_h();
        assert_relative_eq!(d[(0, 0)], 0.125, max_relative = 1e-15);
        assert!((d.trace() - 2.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn prop_widths_telescope(n in 1usize..400, kind in 0usize..3) {
            let map = [GradingMap::Identity, GradingMap::Exp, GradingMap::Square][kind].clone();
            let m = Mesh::graded(n, map).unwrap();
            let sum: f64 = m.widths().iter().sum();
            proptest::prop_assert!((sum - 2.0).abs() < 1e-12);
            proptest::prop_assert!(m.widths().iter().all(|&h| h > 0.0));
            proptest::prop_assert_eq!(m.nodes()[0], -1.0);
            proptest::prop_assert_eq!(m.nodes()[n], 1.0);
        }
    }
}
