//! Problem parameters, moment constants and the convergence-rate bound.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, DEFAULT_QUAD_NODES};
use crate::error::{Error, Result};
use crate::optimize::scan_then_golden;

const MEAN_ZERO_TOL: f64 = 1e-10;

/// The serialized form of [`ModelParams`] (config key `model`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    pub alpha: f64,
    pub z: DistributionSpec,
    pub k: DistributionSpec,
}

/// Strategy interval `[zeta_lo, zeta_hi]`, moment exponent `alpha`, and the
/// laws of the multiplicative factor `Z` and the additive noise `K`.
///
/// `zeta_lo == zeta_hi` is accepted: it is the classical single-law case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct ModelParams {
    zeta_lo: f64,
    zeta_hi: f64,
    alpha: f64,
    z: DistributionSpec,
    k: DistributionSpec,
    sigma2: f64,
    k2: f64,
    mu_lo: f64,
    mu_hi: f64,
}

impl ModelParams {
    pub fn new(
        zeta_lo: f64,
        zeta_hi: f64,
        alpha: f64,
        z: DistributionSpec,
        k: DistributionSpec,
    ) -> Result<Self> {
        if !(zeta_lo.is_finite() && zeta_hi.is_finite()) || zeta_lo <= 0.0 {
            return Err(Error::param("model.zeta_lo", "need 0 < zeta_lo"));
        }
        if zeta_hi < zeta_lo {
            return Err(Error::param(
                "model.zeta_hi",
                "need zeta_lo <= zeta_hi < inf",
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("model.alpha", "need alpha in (0, 1]"));
        }
        z.validate()
            .map_err(|e| Error::param("model.z", e.to_string()))?;
        k.validate()
            .map_err(|e| Error::param("model.k", e.to_string()))?;
        let sigma2 = z.second_moment();
        let k2 = k.second_moment();
        if sigma2 <= 0.0 {
            return Err(Error::param("model.z", "need E[Z^2] > 0"));
        }
        if k2 <= 0.0 {
            return Err(Error::param("model.k", "need E[K^2] > 0"));
        }
        if k.mean().abs() > MEAN_ZERO_TOL {
            return Err(Error::param(
                "model.k",
                format!("need E[K] = 0, got {}", k.mean()),
            ));
        }
        Ok(Self {
            zeta_lo,
            zeta_hi,
            alpha,
            mu_lo: sigma2 * zeta_lo * zeta_lo + k2,
            mu_hi: sigma2 * zeta_hi * zeta_hi + k2,
            z,
            k,
            sigma2,
            k2,
        })
    }

    pub fn zeta_lo(&self) -> f64 {
        self.zeta_lo
    }
    pub fn zeta_hi(&self) -> f64 {
        self.zeta_hi
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn z_spec(&self) -> &DistributionSpec {
        &self.z
    }
    pub fn k_spec(&self) -> &DistributionSpec {
        &self.k
    }
    /// `E[Z²]`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    /// `E[K²]`.
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn mu_lo(&self) -> f64 {
        self.mu_lo
    }
    pub fn mu_hi(&self) -> f64 {
        self.mu_hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.zeta_lo == self.zeta_hi
    }

    /// Same laws on a different strategy interval.
    pub fn with_interval(&self, zeta_lo: f64, zeta_hi: f64) -> Result<Self> {
        Self::new(zeta_lo, zeta_hi, self.alpha, self.z.clone(), self.k.clone())
    }

    /// `8 ζ̄^{2+2α} E|Z|^{2+2α} + 8 E|K|^{2+2α}`.
    pub fn c_alpha_tilde_bound(&self) -> Result<f64> {
        let order = 2.0 + 2.0 * self.alpha;
        let ez = self
            .z
            .abs_moment_or_quadrature(order, DEFAULT_QUAD_NODES)?
            .value;
        let ek = self
            .k
            .abs_moment_or_quadrature(order, DEFAULT_QUAD_NODES)?
            .value;
        Ok(8.0 * self.zeta_hi.powf(order) * ez + 8.0 * ek)
    }

    /// The supremum the bound above dominates, `sup_λ E|λZ + K|^{2+2α}`,
    /// evaluated with product quadrature over `λ ∈ [ζ̲, ζ̄]`.
    pub fn c_alpha_tilde_exact(&self, quad_nodes: usize) -> Result<f64> {
        let qz = self.z.quadrature(quad_nodes)?;
        let qk = self.k.quadrature(quad_nodes)?;
        let order = 1.0 + self.alpha;
        let objective = |lambda: f64| {
            let mut total = 0.0;
            for (&z, &wz) in qz.nodes.iter().zip(&qz.weights) {
                for (&k, &wk) in qk.nodes.iter().zip(&qk.weights) {
                    let y = lambda * z + k;
                    total += wz * wk * (y * y).powf(order);
                }
            }
            total
        };
        Ok(scan_then_golden(objective, self.zeta_lo, self.zeta_hi, 33, 1e-10).1)
    }

    /// `L (4 C̃ / n^α)^{1/(1+α)}` with the closed-form `C̃` bound.
    pub fn lln_bound(&self, lipschitz: f64, n: usize) -> Result<f64> {
        lln_bound_with(self.c_alpha_tilde_bound()?, self.alpha, lipschitz, n)
    }
}

impl TryFrom<ModelSpec> for ModelParams {
    type Error = Error;

    fn try_from(s: ModelSpec) -> Result<Self> {
        ModelParams::new(s.zeta_lo, s.zeta_hi, s.alpha, s.z, s.k)
    }
}

impl From<ModelParams> for ModelSpec {
    fn from(p: ModelParams) -> Self {
        ModelSpec {
            zeta_lo: p.zeta_lo,
            zeta_hi: p.zeta_hi,
            alpha: p.alpha,
            z: p.z,
            k: p.k,
        }
    }
}

pub fn lln_bound_with(c_tilde: f64, alpha: f64, lipschitz: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    if !(lipschitz >= 0.0) {
        return Err(Error::param(
            "lipschitz",
            "need a nonnegative Lipschitz constant",
        ));
    }
    if lipschitz == 0.0 {
        return Ok(0.0);
    }
    Ok(lipschitz * (4.0 * c_tilde / (n as f64).powf(alpha)).powf(1.0 / (1.0 + alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalMax {
    pub argmax: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMaxOptions {
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for IntervalMaxOptions {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            tol: 1e-12,
        }
    }
}

impl IntervalMaxOptions {
    /// Worst-case shortfall of the scan for an `lipschitz`-Lipschitz φ.
    pub fn tolerance(&self, lipschitz: f64, a: f64, b: f64) -> f64 {
        lipschitz * (b - a) / self.grid_points as f64 + 1e-10
    }
}

/// `max_{r ∈ [a, b]} φ(r)` by grid scan and golden-section refinement.
pub fn interval_max(phi: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<IntervalMax> {
    interval_max_with(phi, a, b, IntervalMaxOptions::default())
}

pub fn interval_max_with(
    phi: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    opts: IntervalMaxOptions,
) -> Result<IntervalMax> {
    if !(a <= b) {
        return Err(Error::param(
            "interval",
            format!("need a <= b, got [{a}, {b}]"),
        ));
    }
    let (argmax, max) = scan_then_golden(phi, a, b, opts.grid_points, opts.tol);
    Ok(IntervalMax { argmax, max })
}
