//! Backward induction for `sup_ζ E[φ(W_n)]` on a uniform grid of the
//! running mean `m`.
//!
//! `V_n = φ` and `V_i(m) = max_λ E[V_{i+1}(m + (λZ + K)²/n)]`; the value is
//! `V_0(0)`. Each level is only evaluated on a band of nodes that holds the
//! running mean with overwhelming probability, and `V_{i+1}` is extended by
//! its band-edge values outside that band. A forward pass of the probability
//! mass under the extracted policy measures how much mass the clamping
//! touched, which feeds the reported slack.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, QuadratureRule, DEFAULT_QUAD_NODES};
use crate::error::{Error, Result};
use crate::model::{interval_max_with, IntervalMaxOptions, ModelParams};
use crate::optimize::golden_section_max;
use crate::phi::TestFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    /// `m_max = c_cover · μ̄` unless `m_max` is set.
    pub c_cover: f64,
    pub m_max: Option<f64>,
    /// Band half-width in standard deviations of the accumulated increments.
    pub band_sigmas: f64,
    pub max_clamp_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 2048,
            c_cover: 8.0,
            m_max: None,
            band_sigmas: 8.0,
            max_clamp_fraction: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    pub nodes: usize,
    /// Atoms of the product rule lighter than this are dropped.
    pub prune_weight: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_QUAD_NODES,
            prune_weight: 1e-16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSearch {
    /// Uniform scan followed by golden-section refinement to width `tol`.
    ScanGolden { scan_points: usize, tol: f64 },
    /// Maximize over a fixed finite set only.
    Finite(Vec<f64>),
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch::ScanGolden {
            scan_points: 33,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EngineConfig {
    pub grid: GridConfig,
    pub quad: QuadConfig,
    pub search: LambdaSearch,
}

impl EngineConfig {
    pub fn with_points(mut self, points: usize) -> Self {
        self.grid.points = points;
        self
    }

    pub fn with_m_max(mut self, m_max: f64) -> Self {
        self.grid.m_max = Some(m_max);
        self
    }

    pub fn with_quad_nodes(mut self, nodes: usize) -> Self {
        self.quad.nodes = nodes;
        self
    }

    pub fn with_search(mut self, search: LambdaSearch) -> Self {
        self.search = search;
        self
    }
}

/// The law of one increment `ξ_λ = (λZ + K)²` as a finite set of atoms.
///
/// When `Z` and `K` are both Gaussian, `λZ + K` is Gaussian again and a
/// single Hermite rule is used instead of the product of two rules.
#[derive(Debug, Clone)]
pub struct OneStepLaw {
    form: LawForm,
    sigma2: f64,
    k2: f64,
    mean_zk: f64,
}

#[derive(Debug, Clone)]
enum LawForm {
    Product {
        z: Vec<f64>,
        k: Vec<f64>,
        w: Vec<f64>,
    },
    Gaussian {
        mean_z: f64,
        var_z: f64,
        var_k: f64,
        nodes: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl OneStepLaw {
    pub fn new(params: &ModelParams, quad: &QuadConfig) -> Result<Self> {
        let z = params.z_spec();
        let k = params.k_spec();
        let moments = (z.second_moment(), k.second_moment(), z.mean() * k.mean());
        if let (
            DistributionSpec::Gaussian { mean, stddev },
            DistributionSpec::Gaussian { stddev: sk, .. },
        ) = (z, k)
        {
            let rule = DistributionSpec::standard_normal().quadrature(quad.nodes)?;
            let (nodes, weights) = prune(rule.nodes, rule.weights, quad.prune_weight);
            return Ok(Self {
                form: LawForm::Gaussian {
                    mean_z: *mean,
                    var_z: stddev * stddev,
                    var_k: sk * sk,
                    nodes,
                    weights,
                },
                sigma2: moments.0,
                k2: moments.1,
                mean_zk: moments.2,
            });
        }
        let qz = z.quadrature(quad.nodes)?;
        let qk = k.quadrature(quad.nodes)?;
        let mut law = Self::from_rules(&qz, &qk, quad.prune_weight);
        law.sigma2 = moments.0;
        law.k2 = moments.1;
        law.mean_zk = moments.2;
        Ok(law)
    }

    /// Product of two rules; the exact moments are taken from the rules.
    pub fn from_rules(quad_z: &QuadratureRule, quad_k: &QuadratureRule, prune_weight: f64) -> Self {
        let mut z = Vec::new();
        let mut k = Vec::new();
        let mut w = Vec::new();
        for (&zn, &zw) in quad_z.nodes.iter().zip(&quad_z.weights) {
            for (&kn, &kw) in quad_k.nodes.iter().zip(&quad_k.weights) {
                if zw * kw >= prune_weight {
                    z.push(zn);
                    k.push(kn);
                    w.push(zw * kw);
                }
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Self {
            form: LawForm::Product { z, k, w },
            sigma2: quad_z.expect(|x| x * x),
            k2: quad_k.expect(|x| x * x),
            mean_zk: quad_z.expect(|x| x) * quad_k.expect(|x| x),
        }
    }

    pub fn atom_count(&self) -> usize {
        match &self.form {
            LawForm::Product { w, .. } => w.len(),
            LawForm::Gaussian { weights, .. } => weights.len(),
        }
    }

    #[inline]
    pub fn for_each_atom(&self, lambda: f64, mut f: impl FnMut(f64, f64)) {
        match &self.form {
            LawForm::Product { z, k, w } => {
                for ((&zn, &kn), &wn) in z.iter().zip(k).zip(w) {
                    let y = lambda * zn + kn;
                    f(y * y, wn);
                }
            }
            LawForm::Gaussian {
                mean_z,
                var_z,
                var_k,
                nodes,
                weights,
            } => {
                let mean = lambda * mean_z;
                let sd = (lambda * lambda * var_z + var_k).sqrt();
                for (&x, &wn) in nodes.iter().zip(weights) {
                    let y = mean + sd * x;
                    f(y * y, wn);
                }
            }
        }
    }

    pub fn xi_atoms(&self, lambda: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.atom_count());
        self.for_each_atom(lambda, |xi, w| out.push((xi, w)));
        out
    }

    /// `E[ξ_λ]` under the atoms.
    pub fn xi_mean(&self, lambda: f64) -> f64 {
        let mut total = 0.0;
        self.for_each_atom(lambda, |xi, w| total += xi * w);
        total
    }

    /// `E[ξ_λ] = λ²E[Z²] + 2λE[Z]E[K] + E[K²]` from the laws themselves.
    pub fn exact_xi_mean(&self, lambda: f64) -> f64 {
        lambda * lambda * self.sigma2 + 2.0 * lambda * self.mean_zk + self.k2
    }

    /// An upper bound for every atom of `ξ_λ`, `λ ∈ [0, lambda_hi]`.
    fn xi_upper_bound(&self, lambda_hi: f64) -> f64 {
        let mut best: f64 = 0.0;
        match &self.form {
            LawForm::Product { z, k, .. } => {
                for (&zn, &kn) in z.iter().zip(k) {
                    best = best.max(lambda_hi * zn.abs() + kn.abs());
                }
            }
            LawForm::Gaussian {
                mean_z,
                var_z,
                var_k,
                nodes,
                ..
            } => {
                let sd = (lambda_hi * lambda_hi * var_z + var_k).sqrt();
                for &x in nodes {
                    best = best.max(lambda_hi * mean_z.abs() + sd * x.abs());
                }
            }
        }
        best * best
    }

    /// A lower bound for every atom of `ξ_λ`, `λ ∈ [lo, hi]`.
    fn xi_lower_bound(&self, lo: f64, hi: f64) -> f64 {
        match &self.form {
            LawForm::Product { z, k, .. } => {
                let mut best = f64::INFINITY;
                for (&zn, &kn) in z.iter().zip(k) {
                    let lam = if zn == 0.0 {
                        lo
                    } else {
                        (-kn / zn).clamp(lo, hi)
                    };
                    let y = lam * zn + kn;
                    best = best.min(y * y);
                }
                best
            }
            LawForm::Gaussian { .. } => 0.0,
        }
    }
}

fn prune(nodes: Vec<f64>, weights: Vec<f64>, threshold: f64) -> (Vec<f64>, Vec<f64>) {
    let (n, w): (Vec<f64>, Vec<f64>) = nodes
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w >= threshold)
        .unzip();
    let total: f64 = w.iter().sum();
    (n, w.into_iter().map(|x| x / total).collect())
}

/// A function on the uniform grid `m_j = j · m_max / (points − 1)`,
/// evaluated by linear interpolation and clamped beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    pub m_min: f64,
    pub m_max: f64,
    pub values: Vec<f64>,
}

impl ValueGrid {
    pub fn new(m_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::param("grid.points", "need at least 2 grid points"));
        }
        if !(m_max > 0.0 && m_max.is_finite()) {
            return Err(Error::param("grid.m_max", "need a finite m_max > 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite grid value".into()));
        }
        Ok(Self {
            m_min: 0.0,
            m_max,
            values,
        })
    }

    pub fn from_fn(m_max: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dm = m_max / (points.max(2) - 1) as f64;
        Self::new(m_max, (0..points).map(|j| f(j as f64 * dm)).collect())
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    pub fn dm(&self) -> f64 {
        self.m_max / (self.points() - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dm()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.m_min) / self.dm();
        let last = self.points() - 1;
        if t <= 0.0 {
            return self.values[0];
        }
        let q = t.floor() as usize;
        if q >= last {
            return self.values[last];
        }
        let f = t - q as f64;
        self.values[q] + f * (self.values[q + 1] - self.values[q])
    }
}

/// `E[V(m + (λZ + K)²/n)]`.
pub fn one_step_value(v_next: &ValueGrid, m: f64, lambda: f64, law: &OneStepLaw, n: usize) -> f64 {
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    law.for_each_atom(lambda, |xi, w| total += w * v_next.eval(m + xi * inv_n));
    total
}

/// `max_λ E[V(m + (λZ + K)²/n)]` over the strategy interval of `params`.
pub fn maximize_over_lambda(
    v_next: &ValueGrid,
    m: f64,
    params: &ModelParams,
    law: &OneStepLaw,
    n: usize,
    search: &LambdaSearch,
) -> Result<(f64, f64)> {
    let plan = ScanPlan::new(search, params.zeta_lo(), params.zeta_hi())?;
    let direct = |lam: f64| one_step_value(v_next, m, lam, law, n);
    let vals: Vec<f64> = plan.all_lambdas().iter().map(|&l| direct(l)).collect();
    Ok(plan.select(&vals, direct))
}

/// The λ values scanned at every node. With refinement on, two extra probes
/// at the midpoints of the first and last scan cells follow the scan points.
#[derive(Debug, Clone)]
struct ScanPlan {
    lambdas: Vec<f64>,
    probes: Vec<f64>,
    tol: Option<f64>,
}

impl ScanPlan {
    fn new(search: &LambdaSearch, lo: f64, hi: f64) -> Result<Self> {
        match search {
            _ if lo == hi => Ok(Self {
                lambdas: vec![lo],
                probes: vec![],
                tol: None,
            }),
            LambdaSearch::ScanGolden { scan_points, tol } => {
                if *scan_points < 2 {
                    return Err(Error::param("search.scan_points", "need at least 2 points"));
                }
                if !(*tol > 0.0) {
                    return Err(Error::param("search.tol", "need tol > 0"));
                }
                let k = *scan_points;
                let h = (hi - lo) / (k - 1) as f64;
                let lambdas: Vec<f64> = (0..k)
                    .map(|i| if i + 1 == k { hi } else { lo + h * i as f64 })
                    .collect();
                let probes = vec![
                    0.5 * (lambdas[0] + lambdas[1]),
                    0.5 * (lambdas[k - 2] + lambdas[k - 1]),
                ];
                Ok(Self {
                    lambdas,
                    probes,
                    tol: Some(*tol),
                })
            }
            LambdaSearch::Finite(set) => {
                if set.is_empty() {
                    return Err(Error::param("search", "empty lambda set"));
                }
                let mut lambdas = set.clone();
                if let Some(bad) = lambdas.iter().find(|&&l| !(l >= lo && l <= hi)) {
                    return Err(Error::param(
                        "search",
                        format!("lambda {bad} outside [{lo}, {hi}]"),
                    ));
                }
                lambdas.sort_by(f64::total_cmp);
                lambdas.dedup();
                Ok(Self {
                    lambdas,
                    probes: vec![],
                    tol: None,
                })
            }
        }
    }

    fn all_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().chain(&self.probes).copied().collect()
    }

    /// Picks the maximizer given the values at `all_lambdas()`. Ties go to
    /// the smaller λ. If the best scan point is an endpoint and the adjacent
    /// midpoint probe is no better, the endpoint is accepted as is.
    fn select(&self, vals: &[f64], direct: impl Fn(f64) -> f64) -> (f64, f64) {
        let k = self.lambdas.len();
        let mut best_k = 0;
        for i in 1..k {
            if vals[i] > vals[best_k] {
                best_k = i;
            }
        }
        let mut best = (self.lambdas[best_k], vals[best_k]);
        let Some(tol) = self.tol else {
            return best;
        };
        let (a, b) = if best_k == 0 {
            if vals[k] <= best.1 {
                return best;
            }
            best = (self.probes[0], vals[k]);
            (self.lambdas[0], self.lambdas[1])
        } else if best_k == k - 1 {
            if vals[k + 1] <= best.1 {
                return best;
            }
            best = (self.probes[1], vals[k + 1]);
            (self.lambdas[k - 2], self.lambdas[k - 1])
        } else {
            (self.lambdas[best_k - 1], self.lambdas[best_k + 1])
        };
        let (x, v) = golden_section_max(direct, a, b, tol);
        if v > best.1 {
            (x, v)
        } else {
            best
        }
    }
}

/// Maximizing λ per step `i ∈ 1..=n` (the strategy value `ζ_i`, chosen from
/// `W_{i−1}`) on a uniform grid of `m` starting at `m_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    dm: f64,
    steps: Vec<PolicyStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStep {
    pub m_start: f64,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyRow {
    step: usize,
    m: f64,
    lambda_star: f64,
}

impl PolicyTable {
    pub fn new(dm: f64, steps: Vec<PolicyStep>) -> Result<Self> {
        if !(dm > 0.0 && dm.is_finite()) {
            return Err(Error::param("policy.dm", "need a finite spacing > 0"));
        }
        if steps.is_empty() || steps.iter().any(|s| s.lambdas.is_empty()) {
            return Err(Error::param(
                "policy",
                "every step needs at least one entry",
            ));
        }
        Ok(Self { dm, steps })
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    pub fn dm(&self) -> f64 {
        self.dm
    }

    /// Step `i` is 1-based.
    pub fn step(&self, i: usize) -> Option<&PolicyStep> {
        i.checked_sub(1).and_then(|k| self.steps.get(k))
    }

    pub fn len(&self) -> usize {
        self.steps.iter().map(|s| s.lambdas.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear interpolation in `m`, constant beyond the stored range.
    pub fn lookup(&self, step: usize, m: f64) -> Result<f64> {
        let s = self.step(step).ok_or_else(|| {
            Error::param(
                "policy",
                format!("no entry for step {step} (table has {})", self.steps()),
            )
        })?;
        let t = (m - s.m_start) / self.dm;
        let last = s.lambdas.len() - 1;
        if !(t > 0.0) {
            return Ok(s.lambdas[0]);
        }
        let q = t.floor() as usize;
        if q >= last {
            return Ok(s.lambdas[last]);
        }
        let f = t - q as f64;
        Ok(s.lambdas[q] + f * (s.lambdas[q + 1] - s.lambdas[q]))
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        self.steps
            .iter()
            .flat_map(|s| s.lambdas.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| {
                (lo.min(l), hi.max(l))
            })
    }

    /// Rows `(step, m, lambda_star)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.steps.iter().enumerate().flat_map(move |(i, s)| {
            s.lambdas
                .iter()
                .enumerate()
                .map(move |(j, &l)| (i + 1, s.m_start + j as f64 * self.dm, l))
        })
    }

    /// CSV with header `step,m,lambda_star`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (step, m, lambda_star) in self.entries() {
            w.serialize(PolicyRow {
                step,
                m,
                lambda_star,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows: Vec<PolicyRow> = Vec::new();
        for row in r.deserialize() {
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(Error::Parse("policy file has no rows".into()));
        }
        let n = rows.iter().map(|r| r.step).max().unwrap_or(0);
        let mut grouped: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for row in &rows {
            if row.step == 0 {
                return Err(Error::Parse("policy steps are 1-based".into()));
            }
            grouped[row.step - 1].push((row.m, row.lambda_star));
        }
        let mut dm = None;
        for g in grouped.iter_mut() {
            if g.is_empty() {
                return Err(Error::Parse("policy file skips a step".into()));
            }
            g.sort_by(|a, b| a.0.total_cmp(&b.0));
            if dm.is_none() && g.len() >= 2 {
                dm = Some(g[1].0 - g[0].0);
            }
        }
        let dm = dm.unwrap_or(1.0);
        let mut steps = Vec::with_capacity(n);
        for (i, g) in grouped.into_iter().enumerate() {
            let m_start = g[0].0;
            for (j, &(m, _)) in g.iter().enumerate() {
                if (m - (m_start + j as f64 * dm)).abs() > 1e-6 * dm {
                    return Err(Error::Parse(format!(
                        "policy step {} is not on a uniform grid of spacing {dm}",
                        i + 1
                    )));
                }
            }
            steps.push(PolicyStep {
                m_start,
                lambdas: g.into_iter().map(|(_, l)| l).collect(),
            });
        }
        Self::new(dm, steps)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slack {
    /// `L·Δm·max(1, √n/2)`: interpolation moves the running mean by a
    /// mean-zero amount of at most `Δm` per step.
    pub grid: f64,
    /// `L` times the expected distance by which clamped mass was moved.
    pub clamp: f64,
    /// `L·max_λ |E_quad[ξ_λ] − E[ξ_λ]|`.
    pub quadrature: f64,
}

impl Slack {
    pub fn total(&self) -> f64 {
        self.grid + self.clamp + self.quadrature
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpDiagnostics {
    pub n: usize,
    pub points: usize,
    pub m_max: f64,
    pub dm: f64,
    pub lipschitz: f64,
    pub atoms: usize,
    /// Probability that the optimal-policy path ever used a clamped value.
    pub clamp_mass: f64,
    /// Expected total distance (in `m`) by which clamping moved that mass.
    pub clamp_excess: f64,
    /// `E[φ(W_n)]` from pushing the mass forward under the policy.
    pub forward_value: f64,
    pub slack: Slack,
    /// `L·Δm`, the optimality loss allowed to the extracted policy.
    pub policy_epsilon: f64,
    pub band_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub value: f64,
    pub policy: PolicyTable,
    pub diagnostics: DpDiagnostics,
}

impl DpSolution {
    pub fn slack(&self) -> f64 {
        self.diagnostics.slack.total()
    }
}

struct Kernel {
    q: Vec<usize>,
    f: Vec<f64>,
    w: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Offsets {
    inv_ndm: f64,
    max_q: usize,
}

impl Offsets {
    #[inline]
    fn split(&self, xi: f64) -> (usize, f64) {
        let d = xi * self.inv_ndm;
        let q = d as usize;
        if q >= self.max_q {
            (self.max_q, 0.0)
        } else {
            (q, d - q as f64)
        }
    }
}

pub fn backward_induction(
    phi: &TestFunction,
    n: usize,
    params: &ModelParams,
    config: &EngineConfig,
) -> Result<DpSolution> {
    phi.validate()?;
    backward_induction_with(|x| phi.eval(x), phi.lipschitz(), n, params, config)
}

/// As [`backward_induction`] for an arbitrary φ with Lipschitz constant
/// `lipschitz` (used only for the slack).
pub fn backward_induction_with<F>(
    phi: F,
    lipschitz: f64,
    n: usize,
    params: &ModelParams,
    config: &EngineConfig,
) -> Result<DpSolution>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::param(
            "lipschitz",
            "need a finite Lipschitz constant >= 0",
        ));
    }
    let gc = &config.grid;
    if gc.points < 2 {
        return Err(Error::param("grid.points", "need at least 2 grid points"));
    }
    let (zlo, zhi) = (params.zeta_lo(), params.zeta_hi());
    let law = OneStepLaw::new(params, &config.quad)?;
    let plan = ScanPlan::new(&config.search, zlo, zhi)?;
    let all = plan.all_lambdas();

    // Increment statistics over the scanned λ values.
    let mut mean_lo = params.mu_lo();
    let mut mean_hi = params.mu_hi();
    let mut sd_max: f64 = 0.0;
    let mut xi_cap: f64 = 0.0;
    let mut moment_err: f64 = 0.0;
    for &lam in &all {
        let mut atoms = law.xi_atoms(lam);
        let mean: f64 = atoms.iter().map(|(x, w)| x * w).sum();
        let var: f64 = atoms.iter().map(|(x, w)| w * (x - mean).powi(2)).sum();
        mean_lo = mean_lo.min(mean);
        mean_hi = mean_hi.max(mean);
        sd_max = sd_max.max(var.sqrt());
        moment_err = moment_err.max((mean - law.exact_xi_mean(lam)).abs());
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut tail = 0.0;
        let mut cap = 0.0;
        for (x, w) in atoms {
            cap = x;
            tail += w;
            if tail > 1e-12 {
                break;
            }
        }
        xi_cap = xi_cap.max(cap);
    }
    let xi_max = law.xi_upper_bound(zhi);
    let xi_min = law.xi_lower_bound(zlo, zhi);

    let nf = n as f64;
    let kappa = gc.band_sigmas;
    // Interpolation moves the grid chain by a mean-zero amount of at most
    // one node per step, which widens both the support and the spread.
    let upper_m = |i: usize, drift: f64| {
        let spread =
            kappa * (i as f64).sqrt() * (sd_max * sd_max / (nf * nf) + 0.25 * drift * drift).sqrt();
        let i = i as f64;
        (i * (xi_max / nf + drift)).min(i * mean_hi / nf + spread + xi_cap / nf)
    };
    let lower_m = |i: usize, drift: f64| {
        let spread =
            kappa * (i as f64).sqrt() * (sd_max * sd_max / (nf * nf) + 0.25 * drift * drift).sqrt();
        let i = i as f64;
        (i * (xi_min / nf - drift)).max(i * mean_lo / nf - spread)
    };

    let points = gc.points;
    let last = points - 1;
    let m_max = match gc.m_max {
        Some(m) if m > 0.0 && m.is_finite() => m,
        Some(_) => return Err(Error::param("grid.m_max", "need a finite m_max > 0")),
        None => (gc.c_cover * params.mu_hi())
            .max(upper_m(n, 0.0) * (1.0 + (n + 2) as f64 / last as f64)),
    };
    let dm = m_max / last as f64;
    let offsets = Offsets {
        inv_ndm: 1.0 / (nf * dm),
        max_q: (xi_max / (nf * dm)).ceil() as usize + 1,
    };

    const MARGIN: usize = 2;
    let bands: Vec<(usize, usize)> = (0..=n)
        .map(|i| {
            if i == 0 {
                return (0, 0);
            }
            let lo = ((lower_m(i, dm) / dm).floor().max(0.0) as usize).saturating_sub(MARGIN);
            let hi = ((upper_m(i, dm) / dm).ceil().max(0.0) as usize + MARGIN).min(last);
            (lo.min(hi), hi)
        })
        .collect();

    let kernels: Vec<Kernel> = all
        .iter()
        .map(|&lam| {
            let mut k = Kernel {
                q: Vec::with_capacity(law.atom_count()),
                f: Vec::with_capacity(law.atom_count()),
                w: Vec::with_capacity(law.atom_count()),
            };
            law.for_each_atom(lam, |xi, w| {
                let (q, f) = offsets.split(xi);
                k.q.push(q);
                k.f.push(f);
                k.w.push(w);
            });
            k
        })
        .collect();

    let (a_n, b_n) = bands[n];
    let mut next: Vec<f64> = (a_n..=b_n).map(|j| phi(j as f64 * dm)).collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("phi is not finite on the grid".into()));
    }
    let mut steps: Vec<PolicyStep> = Vec::with_capacity(n);
    let mut band_nodes = next.len();

    for i in (0..n).rev() {
        let (lo, hi) = bands[i];
        let (a, b) = bands[i + 1];
        let window: Vec<f64> = (0..hi - lo + offsets.max_q + 2)
            .map(|t| next[(lo + t).clamp(a, b) - a])
            .collect();
        let direct = |t0: usize, lam: f64| {
            let mut total = 0.0;
            law.for_each_atom(lam, |xi, w| {
                let (q, f) = offsets.split(xi);
                let v0 = window[t0 + q];
                total += w * (v0 + f * (window[t0 + q + 1] - v0));
            });
            total
        };
        let solved: Vec<(f64, f64)> = (0..=hi - lo)
            .into_par_iter()
            .map(|t0| {
                let vals: Vec<f64> = kernels
                    .iter()
                    .map(|k| {
                        let mut total = 0.0;
                        for ((&q, &f), &w) in k.q.iter().zip(&k.f).zip(&k.w) {
                            let v0 = window[t0 + q];
                            total += w * (v0 + f * (window[t0 + q + 1] - v0));
                        }
                        total
                    })
                    .collect();
                let (lam, v) = plan.select(&vals, |l| direct(t0, l));
                (v, lam)
            })
            .collect();
        band_nodes += solved.len();
        next = solved.iter().map(|s| s.0).collect();
        steps.push(PolicyStep {
            m_start: lo as f64 * dm,
            lambdas: solved.iter().map(|s| s.1).collect(),
        });
    }
    steps.reverse();
    let value = next[0];
    let policy = PolicyTable::new(dm, steps)?;

    // Forward pass of the mass under the policy.
    let mut mass = vec![1.0];
    let mut clamp_mass = 0.0;
    let mut clamp_excess = 0.0;
    for i in 0..n {
        let (lo, _) = bands[i];
        let (a, b) = bands[i + 1];
        let mut out = vec![0.0; b - a + 1];
        let lambdas = &policy.steps[i].lambdas;
        for (t0, &p) in mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let j = lo + t0;
            let mut deposit = |node: usize, part: f64| {
                if part == 0.0 {
                    return;
                }
                let target = node.clamp(a, b);
                if target != node {
                    clamp_mass += part;
                    clamp_excess += part * node.abs_diff(target) as f64 * dm;
                }
                out[target - a] += part;
            };
            law.for_each_atom(lambdas[t0], |xi, w| {
                let (q, f) = offsets.split(xi);
                deposit(j + q, p * w * (1.0 - f));
                deposit(j + q + 1, p * w * f);
            });
        }
        mass = out;
    }
    let (a_n, _) = bands[n];
    let forward_value: f64 = mass
        .iter()
        .enumerate()
        .map(|(t, &p)| p * phi((a_n + t) as f64 * dm))
        .sum();

    if clamp_mass > gc.max_clamp_fraction {
        return Err(Error::GridTooSmall {
            clamp_mass,
            limit: gc.max_clamp_fraction,
        });
    }

    let slack = Slack {
        grid: lipschitz * dm * (0.5 * nf.sqrt()).max(1.0),
        clamp: lipschitz * clamp_excess,
        quadrature: lipschitz * moment_err,
    };
    Ok(DpSolution {
        value,
        policy,
        diagnostics: DpDiagnostics {
            n,
            points,
            m_max,
            dm,
            lipschitz,
            atoms: law.atom_count(),
            clamp_mass,
            clamp_excess,
            forward_value,
            slack,
            policy_epsilon: lipschitz * dm,
            band_nodes,
        },
    })
}

/// The value component of [`backward_induction`] with the default engine.
pub fn sublinear_expectation(phi: &TestFunction, n: usize, params: &ModelParams) -> Result<f64> {
    Ok(backward_induction(phi, n, params, &EngineConfig::default())?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n: usize,
    pub value: f64,
    pub limit_max: f64,
    pub gap: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

/// Compares the engine value to `max_{[μ̲, μ̄]} φ` against the rate bound.
/// The slack is the engine slack plus the scan tolerance of the limit.
pub fn rate_check(
    phi: &TestFunction,
    n: usize,
    params: &ModelParams,
    config: &EngineConfig,
) -> Result<RateReport> {
    let sol = backward_induction(phi, n, params, config)?;
    rate_report(phi, &sol, params)
}

pub fn rate_report(
    phi: &TestFunction,
    sol: &DpSolution,
    params: &ModelParams,
) -> Result<RateReport> {
    let lipschitz = phi.lipschitz();
    let opts = IntervalMaxOptions::default();
    let limit = interval_max_with(|x| phi.eval(x), params.mu_lo(), params.mu_hi(), opts)?;
    let n = sol.diagnostics.n;
    let gap = (sol.value - limit.max).abs();
    let bound = params.lln_bound(lipschitz, n)?;
    let slack = sol.slack() + opts.tolerance(lipschitz, params.mu_lo(), params.mu_hi());
    Ok(RateReport {
        n,
        value: sol.value,
        limit_max: limit.max,
        gap,
        bound,
        slack,
        satisfied: gap <= bound + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rademacher(lo: f64, hi: f64) -> ModelParams {
        ModelParams::new(
            lo,
            hi,
            1.0,
            DistributionSpec::Rademacher,
            DistributionSpec::Rademacher,
        )
        .unwrap()
    }

    fn gaussian(lo: f64, hi: f64) -> ModelParams {
        ModelParams::new(
            lo,
            hi,
            1.0,
            DistributionSpec::standard_normal(),
            DistributionSpec::standard_normal(),
        )
        .unwrap()
    }

    fn law(params: &ModelParams) -> OneStepLaw {
        OneStepLaw::new(params, &QuadConfig::default()).unwrap()
    }

    #[test]
    fn one_step_examples() {
        let p = gaussian(1.0, 2.0);
        let l = law(&p);
        let one = ValueGrid::from_fn(100.0, 2001, |_| 1.0).unwrap();
        let id = ValueGrid::from_fn(100.0, 2001, |x| x).unwrap();
        for lam in [1.0, 1.3, 2.0] {
            assert_abs_diff_eq!(one_step_value(&one, 0.3, lam, &l, 4), 1.0, epsilon = 1e-12);
            // far tail atoms clamp at m_max = 100
            let expect = (lam * lam + 1.0) / 4.0;
            assert_abs_diff_eq!(one_step_value(&id, 0.0, lam, &l, 4), expect, epsilon = 1e-9);
            assert_abs_diff_eq!(
                one_step_value(&id, 5.0, lam, &l, 4),
                5.0 + expect,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn maximizer_examples() {
        let p = gaussian(1.0, 2.0);
        let l = law(&p);
        let s = LambdaSearch::default();
        let id = ValueGrid::from_fn(100.0, 2001, |x| x).unwrap();
        let neg = ValueGrid::from_fn(100.0, 2001, |x| -x).unwrap();
        assert_eq!(
            maximize_over_lambda(&id, 1.0, &p, &l, 4, &s).unwrap().0,
            2.0
        );
        assert_eq!(
            maximize_over_lambda(&neg, 1.0, &p, &l, 4, &s).unwrap().0,
            1.0
        );
        let flat = rademacher(1.5, 1.5);
        let (lam, _) = maximize_over_lambda(&neg, 1.0, &flat, &law(&flat), 4, &s).unwrap();
        assert_eq!(lam, 1.5);
    }

    #[test]
    fn maximizer_refines_interior_peak() {
        // E[V(m + ξ/1)] with ξ = (λ ± 1)² and V peaked at 4: interior optimum.
        let p = rademacher(1.0, 2.0);
        let l = law(&p);
        let v = ValueGrid::from_fn(50.0, 50_001, |x| -(x - 4.0).abs()).unwrap();
        let obj = |lam: f64| one_step_value(&v, 0.0, lam, &l, 1);
        let (lam, val) =
            maximize_over_lambda(&v, 0.0, &p, &l, 1, &LambdaSearch::default()).unwrap();
        let dense = (0..=100_000)
            .map(|i| obj(1.0 + i as f64 / 100_000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(val >= dense - 1e-9, "{val} vs {dense}");
        assert!((1.0..=2.0).contains(&lam));
    }

    #[test]
    fn constant_phi_value() {
        let p = gaussian(1.0, 2.0);
        for n in [1, 3, 10] {
            let sol = backward_induction(
                &TestFunction::constant(3.5),
                n,
                &p,
                &EngineConfig::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(sol.value, 3.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_identity_is_mean() {
        let p = gaussian(1.0, 1.0);
        for n in [1, 4, 17] {
            let sol = backward_induction(&TestFunction::Identity, n, &p, &EngineConfig::default())
                .unwrap();
            assert_abs_diff_eq!(sol.value, 2.0, epsilon = 1e-6 + sol.slack());
            assert_abs_diff_eq!(sol.diagnostics.forward_value, sol.value, epsilon = 1e-10);
        }
    }

    /// Brute force over every strategy tree for n = 2: one λ at the root and
    /// one per first-step outcome.
    #[test]
    fn two_step_enumeration_oracle() {
        let p = rademacher(1.0, 2.0);
        let grid: Vec<f64> = (0..=8).map(|i| 1.0 + i as f64 / 8.0).collect();
        let phi = |x: f64| (x - 2.0).abs();
        let xi = |lam: f64| [(lam + 1.0).powi(2), (lam - 1.0).powi(2)];
        let mut best = f64::NEG_INFINITY;
        for &l0 in &grid {
            // first-step outcomes (z, k) give ξ ∈ {(l0+1)², (l0−1)²}, two ways each
            let mut total = 0.0;
            for x0 in xi(l0) {
                let mut inner = f64::NEG_INFINITY;
                for &l1 in &grid {
                    let v: f64 = xi(l1).iter().map(|x1| 0.5 * phi((x0 + x1) / 2.0)).sum();
                    inner = inner.max(v);
                }
                total += 0.5 * inner;
            }
            best = best.max(total);
        }
        let cfg = EngineConfig::default()
            .with_m_max(40.0)
            .with_points(40 * 128 + 1)
            .with_search(LambdaSearch::Finite(grid.clone()));
        let sol = backward_induction(&TestFunction::distance_to(2.0, 2.0), 2, &p, &cfg).unwrap();
        assert_abs_diff_eq!(sol.value, best, epsilon = 1e-9);
    }

    #[test]
    fn banded_engine_matches_reference_recursion() {
        let p = gaussian(1.0, 2.0);
        let phi = TestFunction::clipped(3.0);
        let (n, points, m_max) = (3, 1601, 80.0);
        let cfg = EngineConfig::default()
            .with_points(points)
            .with_m_max(m_max);
        let sol = backward_induction(&phi, n, &p, &cfg).unwrap();
        let l = law(&p);
        let mut v = ValueGrid::from_fn(m_max, points, |x| phi.eval(x)).unwrap();
        for _ in 0..n {
            let vals = (0..points)
                .map(|j| {
                    maximize_over_lambda(&v, v.node(j), &p, &l, n, &cfg.search)
                        .unwrap()
                        .1
                })
                .collect();
            v = ValueGrid::new(m_max, vals).unwrap();
        }
        assert_abs_diff_eq!(sol.value, v.values[0], epsilon = 1e-9);
        assert_abs_diff_eq!(sol.diagnostics.forward_value, sol.value, epsilon = 1e-10);
    }

    #[test]
    fn policy_lookup_and_csv_roundtrip() {
        let p = rademacher(1.0, 2.0);
        let cfg = EngineConfig::default().with_points(257);
        let sol = backward_induction(&TestFunction::clipped(3.5), 4, &p, &cfg).unwrap();
        let (lo, hi) = sol.policy.lambda_range();
        assert!(lo >= 1.0 && hi <= 2.0);
        let mut buf = Vec::new();
        sol.policy.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,m,lambda_star\n"));
        let back = PolicyTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back.steps(), 4);
        for (step, m, lam) in sol.policy.entries() {
            assert_abs_diff_eq!(back.lookup(step, m).unwrap(), lam, epsilon = 1e-9);
        }
        assert!(back.lookup(5, 0.0).is_err());
    }

    #[test]
    fn tiny_grid_is_diagnosed() {
        let p = gaussian(1.0, 2.0);
        let cfg = EngineConfig::default().with_m_max(3.0).with_points(64);
        let err = backward_induction(&TestFunction::Identity, 2, &p, &cfg).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { .. }));
    }

    #[test]
    fn rate_check_examples() {
        let p = rademacher(1.0, 2.0);
        let r = rate_check(
            &TestFunction::constant(0.0),
            8,
            &p,
            &EngineConfig::default(),
        )
        .unwrap();
        assert_eq!((r.gap, r.bound), (0.0, 0.0));
        assert!(r.satisfied);
        let flat = gaussian(1.0, 1.0);
        let r = rate_check(&TestFunction::Identity, 16, &flat, &EngineConfig::default()).unwrap();
        assert!(r.gap < 1e-6, "{r:?}");
        for n in [4, 16, 64, 256] {
            let r = rate_check(
                &TestFunction::clipped(10.0),
                n,
                &p,
                &EngineConfig::default(),
            )
            .unwrap();
            assert!(r.satisfied && r.gap <= r.bound, "{r:?}");
        }
    }
}
