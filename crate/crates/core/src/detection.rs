//! The energy detector `Ψ`: reject `H0` (transmitter active,
//! `Y_i = ε_i X_i + η_i`) when `Σ Y_i² ≤ n γ_n`, otherwise accept it.
//! Under `H1` the receiver sees noise only, `Y_i = η_i`.
//!
//! A miss is a rejection under `H0`; a false alarm is an acceptance of `H0`
//! under `H1`.

use serde::{Deserialize, Serialize};

use crate::adversary::{mean_stderr, replicate, PredictableStrategy, Strategy};
use crate::distributions::{stream_rng, DistributionSpec, DEFAULT_QUAD_NODES};
use crate::engine::{backward_induction, EngineConfig};
use crate::error::{Error, Result};
use crate::ldp::{
    c_bar_general, c_hat_gaussian, log_mgf_empirical, log_mgf_gaussian_square, LogMgf, Transform,
};
use crate::model::ModelParams;
use crate::phi::TestFunction;

fn default_family_points() -> usize {
    33
}

/// The uncertainty set for the noise law, as a finite grid of members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseFamily {
    /// `η ~ N(0, v)` for `v` on a uniform grid of `[var_lo, var_hi]`.
    Gaussian {
        var_lo: f64,
        var_hi: f64,
        #[serde(default = "default_family_points")]
        points: usize,
    },
    /// `η = s·B` with `B` drawn from `base`, `s` on a uniform grid.
    Scaled {
        base: DistributionSpec,
        scale_lo: f64,
        scale_hi: f64,
        #[serde(default = "default_family_points")]
        points: usize,
    },
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || lo == hi {
        return vec![hi];
    }
    let h = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect()
}

fn scale_spec(base: &DistributionSpec, s: f64) -> DistributionSpec {
    match base {
        DistributionSpec::Gaussian { mean, stddev } => DistributionSpec::Gaussian {
            mean: s * mean,
            stddev: s * stddev,
        },
        DistributionSpec::Rademacher => DistributionSpec::DiscreteFinite {
            atoms: vec![-s, s],
            weights: vec![0.5, 0.5],
        },
        DistributionSpec::UniformSymmetric { halfwidth } => DistributionSpec::UniformSymmetric {
            halfwidth: s * halfwidth,
        },
        DistributionSpec::DiscreteFinite { atoms, weights } => DistributionSpec::DiscreteFinite {
            atoms: atoms.iter().map(|a| s * a).collect(),
            weights: weights.clone(),
        },
    }
}

impl NoiseFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseFamily::Gaussian {
                var_lo,
                var_hi,
                points,
            } => {
                if !(*var_lo > 0.0 && var_lo <= var_hi && var_hi.is_finite()) {
                    return Err(Error::param("detection.noise", "need 0 < var_lo <= var_hi"));
                }
                if *points == 0 {
                    return Err(Error::param(
                        "detection.noise.points",
                        "need at least 1 point",
                    ));
                }
            }
            NoiseFamily::Scaled {
                base,
                scale_lo,
                scale_hi,
                points,
            } => {
                base.validate()?;
                if base.mean().abs() > 1e-10 {
                    return Err(Error::param(
                        "detection.noise.base",
                        "noise must have mean 0",
                    ));
                }
                if !(*scale_lo > 0.0 && scale_lo <= scale_hi && scale_hi.is_finite()) {
                    return Err(Error::param(
                        "detection.noise",
                        "need 0 < scale_lo <= scale_hi",
                    ));
                }
                if *points == 0 {
                    return Err(Error::param(
                        "detection.noise.points",
                        "need at least 1 point",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn members(&self) -> Vec<DistributionSpec> {
        match self {
            NoiseFamily::Gaussian {
                var_lo,
                var_hi,
                points,
            } => grid(*var_lo, *var_hi, *points)
                .into_iter()
                .map(|v| DistributionSpec::gaussian(0.0, v.sqrt()))
                .collect(),
            NoiseFamily::Scaled {
                base,
                scale_lo,
                scale_hi,
                points,
            } => grid(*scale_lo, *scale_hi, *points)
                .into_iter()
                .map(|s| scale_spec(base, s))
                .collect(),
        }
    }

    /// `(ν̲², ν̄²)`, the extreme second moments over the family.
    pub fn second_moment_range(&self) -> (f64, f64) {
        match self {
            NoiseFamily::Gaussian { var_lo, var_hi, .. } => (*var_lo, *var_hi),
            NoiseFamily::Scaled {
                base,
                scale_lo,
                scale_hi,
                ..
            } => {
                let m2 = base.second_moment();
                (scale_lo * scale_lo * m2, scale_hi * scale_hi * m2)
            }
        }
    }

    /// `Λ` of `η²` for each member.
    pub fn square_log_mgfs(&self) -> Result<Vec<LogMgf>> {
        match self {
            NoiseFamily::Gaussian {
                var_lo,
                var_hi,
                points,
            } => grid(*var_lo, *var_hi, *points)
                .into_iter()
                .map(log_mgf_gaussian_square)
                .collect(),
            NoiseFamily::Scaled { .. } => self
                .members()
                .iter()
                .map(|m| log_mgf_empirical(m, Transform::Square, DEFAULT_QUAD_NODES))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Allowed missed-detection probability.
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    pub zeta_lo: f64,
    pub zeta_hi: f64,
    /// Law of the fading `ε`.
    pub eps: DistributionSpec,
    pub noise: NoiseFamily,
}

/// `Σ Y² ≤ n γ_n` rejects `H0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectH0,
    AcceptH0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub events: usize,
    pub replications: usize,
}

impl RateEstimate {
    fn from_events(events: &[f64]) -> Self {
        let (rate, stderr) = mean_stderr(events);
        Self {
            rate,
            stderr,
            events: events.iter().filter(|&&e| e > 0.0).count(),
            replications: events.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FalseAlarmRow {
    pub n: usize,
    pub gamma_n: f64,
    pub estimate: RateEstimate,
    /// `e^{C̄ n}`, claimed only for `n ≥ N1`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub n: usize,
    pub p: f64,
    pub gamma_n: f64,
    pub c_alpha: f64,
    pub n1: Option<usize>,
    pub miss: Option<RateEstimate>,
    pub false_alarm: Option<RateEstimate>,
    pub fa_bound: Option<f64>,
}

impl DetectionConfig {
    /// `ζ_lo = ζ_hi` is accepted as the classical single-law case.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::param("detection.p", "need p in (0, 1)"));
        }
        if self.n == 0 {
            return Err(Error::param("detection.n", "need n >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("detection.alpha", "need alpha in (0, 1]"));
        }
        if !(self.zeta_lo > 0.0 && self.zeta_lo <= self.zeta_hi && self.zeta_hi.is_finite()) {
            return Err(Error::param(
                "detection.zeta",
                "need 0 < zeta_lo <= zeta_hi < inf",
            ));
        }
        self.eps
            .validate()
            .map_err(|e| Error::param("detection.eps", e.to_string()))?;
        if !(self.sigma_lo2() > 0.0) {
            return Err(Error::param("detection.eps", "need E[eps^2] > 0"));
        }
        self.noise.validate()
    }

    /// `σ̲² = E[ε²]` (a single fading law, so `σ̲² = σ̄²`).
    pub fn sigma_lo2(&self) -> f64 {
        self.eps.second_moment()
    }

    pub fn nu_lo2(&self) -> f64 {
        self.noise.second_moment_range().0
    }

    pub fn nu_hi2(&self) -> f64 {
        self.noise.second_moment_range().1
    }

    /// `σ̲²ζ̲²`, the smallest signal energy per sample.
    pub fn signal_lo(&self) -> f64 {
        self.sigma_lo2() * self.zeta_lo * self.zeta_lo
    }

    /// `σ̲²ζ̲² + ν̲²`, the lower end of the energy limit under `H0`.
    pub fn energy_lo(&self) -> f64 {
        self.signal_lo() + self.nu_lo2()
    }

    /// The member maximizing `E|η|^{2+2α}`.
    pub fn worst_moment_member(&self) -> Result<(DistributionSpec, f64)> {
        let order = 2.0 + 2.0 * self.alpha;
        let mut best: Option<(DistributionSpec, f64)> = None;
        for m in self.noise.members() {
            let v = m.abs_moment_or_quadrature(order, DEFAULT_QUAD_NODES)?.value;
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((m, v));
            }
        }
        best.ok_or_else(|| Error::param("detection.noise", "empty family"))
    }

    /// `Z = ε`, `K = member` on the input interval.
    pub fn model_params(&self, member: &DistributionSpec) -> Result<ModelParams> {
        ModelParams::new(
            self.zeta_lo,
            self.zeta_hi,
            self.alpha,
            self.eps.clone(),
            member.clone(),
        )
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// `(32 ζ̄^{2+2α} E|ε|^{2+2α} + 32 sup E|η|^{2+2α})^{1/(1+α)}`.
pub fn c_alpha(cfg: &DetectionConfig) -> Result<f64> {
    cfg.validate()?;
    let order = 2.0 + 2.0 * cfg.alpha;
    let e_eps = cfg
        .eps
        .abs_moment_or_quadrature(order, DEFAULT_QUAD_NODES)?
        .value;
    let (_, e_eta) = cfg.worst_moment_member()?;
    Ok((32.0 * cfg.zeta_hi.powf(order) * e_eps + 32.0 * e_eta).powf(1.0 / (1.0 + cfg.alpha)))
}

/// `γ_n = σ̲²ζ̲² + ν̲² − C_α / (p n^{α/(1+α)})` at `cfg.n`.
pub fn threshold_gamma_n(cfg: &DetectionConfig) -> Result<f64> {
    threshold_at(cfg, c_alpha(cfg)?, cfg.n)
}

fn threshold_at(cfg: &DetectionConfig, c_alpha: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let beta = cfg.alpha / (1.0 + cfg.alpha);
    Ok(cfg.energy_lo() - c_alpha / (cfg.p * (n as f64).powf(beta)))
}

/// Rejects `H0` iff `Σ y_i² ≤ n·gamma_n`.
pub fn run_test(y: &[f64], gamma_n: f64, n: usize) -> Result<Decision> {
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let energy: f64 = y.iter().map(|v| v * v).sum();
    Ok(if energy <= n as f64 * gamma_n {
        Decision::RejectH0
    } else {
        Decision::AcceptH0
    })
}

/// `C_α / ((σ̲²ζ̲² + ν̲² − γ) n^{α/(1+α)})`, the miss-probability bound at an
/// arbitrary threshold `γ < σ̲²ζ̲² + ν̲²`.
pub fn miss_bound(cfg: &DetectionConfig, gamma: f64) -> Result<f64> {
    let c = c_alpha(cfg)?;
    let room = cfg.energy_lo() - gamma;
    if !(room > 0.0) {
        return Err(Error::param(
            "gamma",
            format!("need gamma < {} for a finite bound", cfg.energy_lo()),
        ));
    }
    let beta = cfg.alpha / (1.0 + cfg.alpha);
    Ok(c / (room * (cfg.n as f64).powf(beta)))
}

/// The piecewise-linear majorant of `1{x ≤ γ}` falling to 0 at
/// `σ̲²ζ̲² + ν̲²`; its worst-case expectation drives the miss bound.
pub fn miss_test_function(cfg: &DetectionConfig, gamma: f64) -> Result<TestFunction> {
    let upper = cfg.energy_lo();
    if !(gamma < upper) {
        return Err(Error::param("gamma", format!("need gamma < {upper}")));
    }
    Ok(TestFunction::smoothed_indicator(gamma, upper))
}

/// Largest `n` checked by [`n1_compute`] and [`n_positive_threshold`].
pub const MAX_SAMPLE_COUNT: usize = 1 << 53;

/// Smallest `n` with `γ_n > target`, from the closed form and then checked
/// against direct evaluation.
fn smallest_n_above(cfg: &DetectionConfig, c: f64, target: f64) -> Result<usize> {
    let room = cfg.energy_lo() - target;
    if !(room > 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "gamma_n never exceeds {target}: its limit is {}",
            cfg.energy_lo()
        )));
    }
    let beta = cfg.alpha / (1.0 + cfg.alpha);
    let root = (c / (cfg.p * room)).powf(1.0 / beta);
    if !(root < MAX_SAMPLE_COUNT as f64) {
        return Err(Error::HypothesisViolated(format!(
            "gamma_n exceeds {target} only beyond n = {root:.3e}"
        )));
    }
    let mut n = (root.floor() as usize).max(1);
    while n > 1 && threshold_at(cfg, c, n - 1)? > target {
        n -= 1;
    }
    while threshold_at(cfg, c, n)? <= target {
        n += 1;
    }
    Ok(n)
}

/// `N1`, the smallest `n` with `γ_n > (σ̲²ζ̲² + ν̄²)/2`. Finite iff
/// `σ̲²ζ̲² + 2ν̲² > ν̄²`.
pub fn n1_compute(cfg: &DetectionConfig) -> Result<usize> {
    let c = c_alpha(cfg)?;
    let a = cfg.signal_lo();
    if !(a + 2.0 * cfg.nu_lo2() > cfg.nu_hi2()) {
        return Err(Error::HypothesisViolated(format!(
            "need sigma_lo^2 zeta_lo^2 + 2 nu_lo^2 > nu_hi^2, got {} <= {}",
            a + 2.0 * cfg.nu_lo2(),
            cfg.nu_hi2()
        )));
    }
    smallest_n_above(cfg, c, 0.5 * (a + cfg.nu_hi2()))
}

/// Smallest `n` with `γ_n > 0`.
pub fn n_positive_threshold(cfg: &DetectionConfig) -> Result<usize> {
    smallest_n_above(cfg, c_alpha(cfg)?, 0.0)
}

/// `C̄ = max_P −Λ_P*((σ̲²ζ̲² + ν̄²)/2)` over the family grid, with the
/// closed form used for Gaussian families. Requires `σ̲²ζ̲² > ν̄²`.
pub fn false_alarm_exponent(cfg: &DetectionConfig) -> Result<f64> {
    let a = cfg.signal_lo();
    let nu_hi2 = cfg.nu_hi2();
    if !(a > nu_hi2) {
        return Err(Error::HypothesisViolated(format!(
            "need sigma_lo^2 zeta_lo^2 > nu_hi^2, got {a} <= {nu_hi2}"
        )));
    }
    match &cfg.noise {
        NoiseFamily::Gaussian { .. } => c_hat_gaussian(cfg.sigma_lo2(), cfg.zeta_lo, nu_hi2),
        NoiseFamily::Scaled { .. } => {
            c_bar_general(&cfg.noise.square_log_mgfs()?, 0.5 * (a + nu_hi2))
        }
    }
}

/// Frequency of misses (`Σ Y² ≤ n γ_n` under `H0`) with the input chosen by
/// `strategy` and noise law `member`.
pub fn simulate_miss<S: PredictableStrategy + ?Sized>(
    cfg: &DetectionConfig,
    strategy: &S,
    member: &DistributionSpec,
    replications: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if replications < 2 {
        return Err(Error::param("reps", "need at least 2 replications"));
    }
    let gamma = threshold_gamma_n(cfg)?;
    let params = cfg.model_params(member)?;
    let events = replicate(
        strategy,
        |w| if w <= gamma { 1.0 } else { 0.0 },
        cfg.n,
        &params,
        replications,
        seed,
    )?;
    Ok(RateEstimate::from_events(&events))
}

/// Frequency of false alarms (`Σ η² > n γ_n` under `H1`) for each `n`.
/// Sample size `n_list[j]` uses the streams `(seed, j·2^40 + r)`.
pub fn simulate_false_alarm(
    cfg: &DetectionConfig,
    member: &DistributionSpec,
    n_list: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<FalseAlarmRow>> {
    if replications < 2 {
        return Err(Error::param("reps", "need at least 2 replications"));
    }
    let c = c_alpha(cfg)?;
    let exponent = false_alarm_exponent(cfg)?;
    let n1 = n1_compute(cfg)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let gamma = threshold_at(cfg, c, n)?;
        let events: Vec<f64> = (0..replications as u64)
            .map(|r| {
                let mut rng = stream_rng(seed, ((j as u64) << 40) | r);
                let energy: f64 = (0..n)
                    .map(|_| {
                        let e = member.sample(&mut rng);
                        e * e
                    })
                    .sum();
                if energy > n as f64 * gamma {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        rows.push(FalseAlarmRow {
            n,
            gamma_n: gamma,
            estimate: RateEstimate::from_events(&events),
            bound: (n >= n1).then(|| (exponent * n as f64).exp()),
        });
    }
    Ok(rows)
}

/// The family member with the largest worst-case expectation of the miss
/// test function, with the DP strategy attaining it.
pub fn worst_miss_adversary(
    cfg: &DetectionConfig,
    engine: &EngineConfig,
) -> Result<(DistributionSpec, Strategy, f64)> {
    let gamma = threshold_gamma_n(cfg)?;
    let phi = miss_test_function(cfg, gamma)?;
    let mut best: Option<(DistributionSpec, Strategy, f64)> = None;
    for member in cfg.noise.members() {
        let params = cfg.model_params(&member)?;
        let sol = backward_induction(&phi, cfg.n, &params, engine)?;
        if best.as_ref().is_none_or(|b| sol.value > b.2) {
            let value = sol.value;
            best = Some((member, Strategy::policy(sol.policy, &params), value));
        }
    }
    best.ok_or_else(|| Error::param("detection.noise", "empty family"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_config(p: f64, n: usize) -> DetectionConfig {
        DetectionConfig {
            p,
            n,
            alpha: 1.0,
            zeta_lo: 1.0,
            zeta_hi: 1.0,
            eps: DistributionSpec::Rademacher,
            noise: NoiseFamily::Scaled {
                base: DistributionSpec::Rademacher,
                scale_lo: 1.0,
                scale_hi: 1.0,
                points: 1,
            },
        }
    }

    #[test]
    fn c_alpha_examples() {
        assert_abs_diff_eq!(
            c_alpha(&unit_config(0.1, 10)).unwrap(),
            8.0,
            epsilon = 1e-12
        );
        let g = DetectionConfig {
            zeta_hi: 2.0,
            eps: DistributionSpec::standard_normal(),
            noise: NoiseFamily::Gaussian {
                var_lo: 0.5,
                var_hi: 1.0,
                points: 5,
            },
            ..unit_config(0.1, 10)
        };
        assert_abs_diff_eq!(c_alpha(&g).unwrap(), 1632f64.sqrt(), epsilon = 1e-9);
        let (worst, _) = g.worst_moment_member().unwrap();
        let tilde = g
            .model_params(&worst)
            .unwrap()
            .with_interval(1.0, 2.0)
            .unwrap();
        let c = c_alpha(&g).unwrap();
        assert_abs_diff_eq!(
            c * c,
            4.0 * tilde.c_alpha_tilde_bound().unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn threshold_examples() {
        let cfg = unit_config(0.1, 10_000);
        assert_abs_diff_eq!(threshold_gamma_n(&cfg).unwrap(), 1.2, epsilon = 1e-12);
        let far = unit_config(0.999, 1 << 40);
        assert!((threshold_gamma_n(&far).unwrap() - 2.0).abs() < 1e-4);
        assert_abs_diff_eq!(miss_bound(&cfg, 1.2).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(miss_bound(&cfg, 1.0).unwrap(), 0.08, epsilon = 1e-12);
        assert!(miss_bound(&cfg, 0.5).unwrap() < miss_bound(&cfg, 1.0).unwrap());
        assert!(miss_bound(&cfg, 2.0).is_err());
    }

    #[test]
    fn decision_rule() {
        assert_eq!(run_test(&[0.0; 4], 0.5, 4).unwrap(), Decision::RejectH0);
        assert_eq!(run_test(&[1.0, 1.0], 1.0, 2).unwrap(), Decision::RejectH0);
        assert_eq!(
            run_test(&[1.0, 1.0 + 1e-9], 1.0, 2).unwrap(),
            Decision::AcceptH0
        );
        assert!(matches!(
            run_test(&[1.0], 1.0, 2),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn n1_examples() {
        let cfg = DetectionConfig {
            noise: NoiseFamily::Scaled {
                base: DistributionSpec::Rademacher,
                scale_lo: 0.5,
                scale_hi: 0.6,
                points: 3,
            },
            ..unit_config(0.2, 10)
        };
        let n1 = n1_compute(&cfg).unwrap();
        let c = c_alpha(&cfg).unwrap();
        let target = 0.5 * (cfg.signal_lo() + cfg.nu_hi2());
        assert!(threshold_at(&cfg, c, n1).unwrap() > target);
        assert!(threshold_at(&cfg, c, n1 - 1).unwrap() <= target);
        let closed =
            ((c / cfg.p) / (cfg.signal_lo() + 2.0 * cfg.nu_lo2() - cfg.nu_hi2()) * 2.0).powi(2);
        assert!((n1 as f64 - closed).abs() <= 1.0, "{n1} vs {closed}");
        let halved = DetectionConfig {
            p: 0.1,
            ..cfg.clone()
        };
        assert!(n1_compute(&halved).unwrap() > n1);
    }

    #[test]
    fn negative_threshold_never_misses() {
        let cfg = unit_config(0.1, 10);
        assert!(threshold_gamma_n(&cfg).unwrap() < 0.0);
        let p = cfg.model_params(&DistributionSpec::Rademacher).unwrap();
        let est = simulate_miss(
            &cfg,
            &Strategy::Constant(p.zeta_lo()),
            &DistributionSpec::Rademacher,
            500,
            1,
        )
        .unwrap();
        assert_eq!(est.rate, 0.0);
    }

    #[test]
    fn gaussian_exponent_matches_closed_form() {
        let cfg = DetectionConfig {
            zeta_lo: 2.0,
            zeta_hi: 2.0,
            eps: DistributionSpec::standard_normal(),
            noise: NoiseFamily::Gaussian {
                var_lo: 0.5,
                var_hi: 1.0,
                points: 33,
            },
            ..unit_config(0.1, 10)
        };
        assert_abs_diff_eq!(
            false_alarm_exponent(&cfg).unwrap(),
            -0.29186,
            epsilon = 1e-5
        );
        let bad = DetectionConfig {
            zeta_lo: 0.5,
            zeta_hi: 0.5,
            ..cfg
        };
        assert!(matches!(
            false_alarm_exponent(&bad),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn family_members() {
        let f = NoiseFamily::Gaussian {
            var_lo: 0.04,
            var_hi: 0.09,
            points: 3,
        };
        let vars: Vec<f64> = f.members().iter().map(|m| m.second_moment()).collect();
        assert_abs_diff_eq!(vars[0], 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(vars[1], 0.065, epsilon = 1e-15);
        assert_abs_diff_eq!(vars[2], 0.09, epsilon = 1e-15);
        assert_eq!(f.second_moment_range(), (0.04, 0.09));
    }
}
