//! Gauss-Legendre rules and adaptive panel integration against Jacobi weights.
//!
//! The adaptive integrator works on a *family* of integrands at once: every
//! panel is evaluated with the 32- and 48-point rules, the discrepancy
//! (maximum over the family) is the panel error, and the worst panel is split
//! until the summed error meets the tolerance. Panels touching an endpoint
//! where the weight is not smooth are split at ratio 1/4 toward it, which
//! yields geometric grading.
//!
//! Points are handed to integrands together with the gaps `1 - t` and `1 + t`
//! computed from the panel geometry, so weights such as `(1 + t)^{-0.4}` stay
//! finite and accurate on panels much narrower than `f64::EPSILON`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::jacobi::JacobiParams;

pub const MAX_ORDER: usize = 10_000;
pub const LOW_ORDER: usize = 32;
pub const HIGH_ORDER: usize = 48;
pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_PANELS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Strictly increasing nodes in `(-1, 1)`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

fn rule_cache() -> &'static RwLock<HashMap<usize, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, cached by order.
pub fn gauss_legendre(n: usize) -> Result<Arc<QuadratureRule>> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    if let Some(rule) = rule_cache().read().expect("rule cache poisoned").get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(compute_gauss_legendre(n)?);
    let mut cache = rule_cache().write().expect("rule cache poisoned");
    Ok(Arc::clone(cache.entry(n).or_insert(rule)))
}

/// Legendre `P_n(x)` and `P_{n-1}(x)`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn compute_gauss_legendre(n: usize) -> Result<QuadratureRule> {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    for k in 1..=half {
        // Tricomi's initial guess for the k-th largest root.
        let theta = std::f64::consts::PI * (4.0 * k as f64 - 1.0) / (4.0 * nf + 2.0);
        let mut x = theta.cos() * (1.0 - 1.0 / (8.0 * nf * nf) + 1.0 / (8.0 * nf * nf * nf));
        if n % 2 == 1 && k == half {
            x = 0.0;
        }
        let mut converged = false;
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, pm) = legendre_pair(n, x);
            dp = nf * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (p, pm) = legendre_pair(n, x);
                dp = nf * (x * p - pm) / (x * x - 1.0);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Linalg(format!("Gauss-Legendre node {k} of {n} did not converge")));
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - k] = x;
        weights[n - k] = w;
        nodes[k - 1] = -x;
        weights[k - 1] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, order: n })
}

/// Gauss-Legendre approximation of `∫_a^b f` with an `order`-point rule.
pub fn integrate_cell(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, order: usize) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    let rule = gauss_legendre(order)?;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok(half * rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>())
}

/// A quadrature point with its distances to both endpoints of `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub t: f64,
    /// `1 - t`
    pub one_minus: f64,
    /// `1 + t`
    pub one_plus: f64,
}

/// Panel stored through its endpoint gaps so that arbitrarily thin panels
/// attached to `±1` remain representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    /// `1 + lo`
    pub gap_lo: f64,
    pub width: f64,
    /// `1 - hi`
    pub gap_hi: f64,
}

impl Panel {
    /// Image of the reference point `x ∈ [-1, 1]`.
    pub fn point(&self, x: f64) -> Point {
        let one_plus = self.gap_lo + 0.5 * self.width * (1.0 + x);
        let one_minus = self.gap_hi + 0.5 * self.width * (1.0 - x);
        let t = if one_plus <= one_minus { one_plus - 1.0 } else { 1.0 - one_minus };
        Point { t, one_minus, one_plus }
    }

    fn split(&self, theta: f64) -> (Panel, Panel) {
        let w_left = theta * self.width;
        let w_right = self.width - w_left;
        (
            Panel { gap_lo: self.gap_lo, width: w_left, gap_hi: self.gap_hi + w_right },
            Panel { gap_lo: self.gap_lo + w_left, width: w_right, gap_hi: self.gap_hi },
        )
    }

    pub fn lo(&self) -> f64 {
        self.gap_lo - 1.0
    }

    pub fn hi(&self) -> f64 {
        1.0 - self.gap_hi
    }
}

/// Which endpoints of an interval receive geometric grading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Grading {
    pub left: bool,
    pub right: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Target for the summed error estimate, relative to `max(1, max_k |I_k|)`.
    pub tol: f64,
    pub max_panels: usize,
    /// Number of equal-width panels to start from.
    pub initial_panels: usize,
    /// Drop the floor of 1 and measure against `max_k |I_k|` alone.
    pub relative: bool,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_panels: DEFAULT_MAX_PANELS, initial_panels: 1, relative: false }
    }
}

impl AdaptiveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct FamilyIntegral {
    pub values: Vec<f64>,
    pub error: f64,
    /// Final panels in increasing order.
    pub panels: Vec<Panel>,
}

struct Evaluated {
    panel: Panel,
    values: Vec<f64>,
    error: f64,
    seq: usize,
}

impl PartialEq for Evaluated {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Evaluated {}
impl PartialOrd for Evaluated {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Evaluated {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties are broken by creation order so the refinement sequence is deterministic.
        self.error.total_cmp(&other.error).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct PanelRules {
    low: Arc<QuadratureRule>,
    high: Arc<QuadratureRule>,
}

fn evaluate_panel<F>(panel: Panel, dim: usize, rules: &PanelRules, eval: &F, scratch: &mut [f64]) -> (Vec<f64>, f64)
where
    F: Fn(&Point, &mut [f64]),
{
    let half = 0.5 * panel.width;
    let mut low = vec![0.0; dim];
    let mut high = vec![0.0; dim];
    for (acc, rule) in [(&mut low, &rules.low), (&mut high, &rules.high)] {
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            eval(&panel.point(x), scratch);
            let hw = half * w;
            for (a, v) in acc.iter_mut().zip(scratch.iter()) {
                *a += hw * v;
            }
        }
    }
    let error = low.iter().zip(&high).map(|(l, h)| (l - h).abs()).fold(0.0, f64::max);
    (high, error)
}

/// Integrates `dim` functions over `[a, b]` simultaneously.
///
/// `eval` writes the integrand values at a point into its slice argument.
pub fn integrate_family<F>(
    a: f64,
    b: f64,
    dim: usize,
    grading: Grading,
    options: AdaptiveOptions,
    eval: F,
) -> Result<FamilyIntegral>
where
    F: Fn(&Point, &mut [f64]),
{
    if !(a < b) || a < -1.0 || b > 1.0 {
        return Err(Error::InvalidInterval { a, b });
    }
    let rules = PanelRules { low: gauss_legendre(LOW_ORDER)?, high: gauss_legendre(HIGH_ORDER)? };
    let mut scratch = vec![0.0; dim];
    let root = Panel { gap_lo: 1.0 + a, width: b - a, gap_hi: 1.0 - b };
    let graded_left = grading.left && a == -1.0;
    let graded_right = grading.right && b == 1.0;

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut totals = vec![0.0; dim];
    let mut total_error = 0.0;
    let initial = options.initial_panels.max(1);
    let mut pieces = vec![root];
    if initial > 1 {
        pieces.clear();
        let step = root.width / initial as f64;
        let mut rest = root;
        for k in 0..initial - 1 {
            let remaining = root.width - step * k as f64;
            let (left, right) = rest.split(step / remaining);
            pieces.push(left);
            rest = right;
        }
        pieces.push(rest);
    }
    for panel in pieces {
        let (values, error) = evaluate_panel(panel, dim, &rules, &eval, &mut scratch);
        for (t, v) in totals.iter_mut().zip(&values) {
            *t += v;
        }
        total_error += error;
        heap.push(Evaluated { panel, values, error, seq });
        seq += 1;
    }

    let floor = if options.relative { f64::MIN_POSITIVE } else { 1.0 };
    let scale = |totals: &[f64]| totals.iter().fold(floor, |m, v| m.max(v.abs()));
    while total_error > options.tol * scale(&totals) {
        if heap.len() >= options.max_panels {
            return Err(Error::ToleranceNotReached {
                tol: options.tol,
                estimate: total_error / scale(&totals),
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let touches_left = graded_left && worst.panel.gap_lo == 0.0;
        let touches_right = graded_right && worst.panel.gap_hi == 0.0;
        let theta = match (touches_left, touches_right) {
            (true, false) => 0.25,
            (false, true) => 0.75,
            _ => 0.5,
        };
        let (left, right) = worst.panel.split(theta);
        for (t, v) in totals.iter_mut().zip(&worst.values) {
            *t -= v;
        }
        total_error -= worst.error;
        for panel in [left, right] {
            let (values, error) = evaluate_panel(panel, dim, &rules, &eval, &mut scratch);
            for (t, v) in totals.iter_mut().zip(&values) {
                *t += v;
            }
            total_error += error;
            heap.push(Evaluated { panel, values, error, seq });
            seq += 1;
        }
    }

    let mut done: Vec<Evaluated> = heap.into_vec();
    done.sort_by(|p, q| p.panel.lo().total_cmp(&q.panel.lo()).then(p.panel.gap_lo.total_cmp(&q.panel.gap_lo)));
    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    let mut panels = Vec::with_capacity(done.len());
    for d in &done {
        for (t, v) in values.iter_mut().zip(&d.values) {
            *t += v;
        }
        error += d.error;
        panels.push(d.panel);
    }
    Ok(FamilyIntegral { values, error, panels })
}

/// Whether `(1 ± t)^exponent` needs grading at its endpoint.
pub(crate) fn needs_grading(exponent: f64) -> bool {
    !(exponent >= 0.0 && exponent.fract() == 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `∫_a^b f ω_{α,β}` with graded panels toward nonsmooth touched endpoints.
pub fn integrate_weighted(f: impl Fn(f64) -> f64, params: &JacobiParams, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    integrate_weighted_exponents(f, params.alpha(), params.beta(), a, b, tol)
}

/// As [`integrate_weighted`] but for raw exponents, which may be non-integrable.
pub fn integrate_weighted_exponents(
    f: impl Fn(f64) -> f64,
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Estimate> {
    if !(a < b) || a < -1.0 || b > 1.0 {
        return Err(Error::InvalidInterval { a, b });
    }
    if a == -1.0 && beta <= -1.0 {
        return Err(Error::NonIntegrable { t: -1.0, exponent: beta });
    }
    if b == 1.0 && alpha <= -1.0 {
        return Err(Error::NonIntegrable { t: 1.0, exponent: alpha });
    }
    let grading = Grading { left: needs_grading(beta), right: needs_grading(alpha) };
    let res = integrate_family(a, b, 1, grading, AdaptiveOptions::with_tol(tol), |p, out| {
        out[0] = f(p.t) * p.one_minus.powf(alpha) * p.one_plus.powf(beta);
    })?;
    Ok(Estimate { value: res.values[0], error: res.error })
}
