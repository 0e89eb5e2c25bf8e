//! Log moment generating functions, Fenchel-Legendre transforms and
//! Chernoff bounds.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

/// A value in `ℝ ∪ {±∞}`. Infinities are kept out of `f64` arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }
}

impl std::ops::Neg for Extended {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            Extended::NegInf => Extended::PosInf,
            Extended::Finite(x) => Extended::Finite(-x),
            Extended::PosInf => Extended::NegInf,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => f.write_str("-inf"),
            Extended::Finite(x) => write!(f, "{x}"),
            Extended::PosInf => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

type Evaluator = dyn Fn(f64) -> Extended + Send + Sync;

/// `Λ(λ) = log E[e^{λX}]`.
#[derive(Clone)]
pub struct LogMgf {
    eval: Arc<Evaluator>,
    mean: f64,
    finite_pos: bool,
    label: String,
}

impl fmt::Debug for LogMgf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LogMgf")
            .field("label", &self.label)
            .field("mean", &self.mean)
            .field("finite_pos", &self.finite_pos)
            .finish()
    }
}

impl LogMgf {
    pub fn new(
        label: impl Into<String>,
        mean: f64,
        finite_pos: bool,
        eval: impl Fn(f64) -> Extended + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            mean,
            finite_pos,
            label: label.into(),
        }
    }

    pub fn eval(&self, lambda: f64) -> Extended {
        if lambda == 0.0 {
            return Extended::Finite(0.0);
        }
        (self.eval)(lambda)
    }

    /// `E[X]`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Whether `Λ(λ) < ∞` for some `λ > 0`.
    pub fn finite_pos(&self) -> bool {
        self.finite_pos
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `X = η²` with `η ~ N(0, sigma2)`: `Λ(λ) = −½ log(1 − 2λσ²)` below the pole
/// `1/(2σ²)`, `+∞` from it on.
pub fn log_mgf_gaussian_square(sigma2: f64) -> Result<LogMgf> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::param("sigma2", "need sigma2 > 0"));
    }
    Ok(LogMgf::new(
        format!("gaussian_square:{sigma2}"),
        sigma2,
        true,
        move |lambda| {
            let arg = 1.0 - 2.0 * lambda * sigma2;
            if arg > 0.0 {
                Extended::Finite(-0.5 * arg.ln())
            } else {
                Extended::PosInf
            }
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Square,
}

/// `Λ` of `X` or `X²` computed from atoms (discrete laws) or quadrature.
/// For unbounded laws the sum at `nodes` and `2·nodes` is compared and a
/// disagreement beyond a relative `1e-6` is reported as `+∞`; near a pole
/// this shrinks the domain slightly.
pub fn log_mgf_empirical(
    spec: &DistributionSpec,
    transform: Transform,
    nodes: usize,
) -> Result<LogMgf> {
    spec.validate()?;
    let map = move |x: f64| match transform {
        Transform::Identity => x,
        Transform::Square => x * x,
    };
    let rule = spec.quadrature(nodes)?;
    let mean = match transform {
        Transform::Identity => spec.mean(),
        Transform::Square => spec.second_moment(),
    };
    let points: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .map(|&x| map(x))
        .zip(rule.weights.iter().copied())
        .collect();
    let check: Option<Vec<(f64, f64)>> = if spec.is_bounded() {
        None
    } else {
        let fine = spec.quadrature(2 * nodes)?;
        Some(
            fine.nodes
                .iter()
                .map(|&x| map(x))
                .zip(fine.weights)
                .collect(),
        )
    };
    let label = format!("empirical:{spec:?}:{transform:?}");
    Ok(LogMgf::new(label, mean, true, move |lambda| {
        let coarse = log_sum_exp(&points, lambda);
        let Some(fine) = &check else {
            return coarse;
        };
        match (coarse, log_sum_exp(fine, lambda)) {
            (Extended::Finite(a), Extended::Finite(b))
                if (a - b).abs() <= 1e-6 * (1.0 + b.abs()) =>
            {
                Extended::Finite(b)
            }
            _ => Extended::PosInf,
        }
    }))
}

fn log_sum_exp(points: &[(f64, f64)], lambda: f64) -> Extended {
    let top = points
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, w)| lambda * x + w.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return if top == f64::NEG_INFINITY {
            Extended::NegInf
        } else {
            Extended::PosInf
        };
    }
    let s: f64 = points
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, w)| (lambda * x + w.ln() - top).exp())
        .sum();
    Extended::Finite(top + s.ln())
}

const EDGE_TOL: f64 = 1e-12;
const LAMBDA_TOL: f64 = 1e-10;
const DOUBLING_CAP: f64 = 1152921504606846976.0; // 2^60

/// `Λ*(x) = sup_λ {λx − Λ(λ)}`, searched over `λ ≥ 0` when `x ≥ E[X]` and
/// over `λ ≤ 0` otherwise.
pub fn fenchel_legendre(mgf: &LogMgf, x: f64) -> Result<Extended> {
    if !x.is_finite() {
        return Err(Error::param("x", "need a finite x"));
    }
    let side = if x >= mgf.mean() { 1.0 } else { -1.0 };
    if side > 0.0 && !mgf.finite_pos() {
        return Err(Error::param(
            "mgf",
            "log-MGF is infinite for every lambda > 0",
        ));
    }
    // g(t) = s·t·x − Λ(s·t) on t ≥ 0; concave, g(0) = 0.
    let g = |t: f64| match mgf.eval(side * t) {
        Extended::Finite(v) => Extended::Finite(side * t * x - v),
        other => -other,
    };
    let finite = |t: f64| g(t).is_finite();
    let edge = |lo: f64, hi: f64| {
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > EDGE_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if finite(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let val = |t: f64| g(t).finite().unwrap_or(f64::NEG_INFINITY);

    let mut t = 1.0;
    let hi = loop {
        if !finite(t) {
            break edge(if t == 1.0 { 0.0 } else { 0.5 * t }, t);
        }
        let t2 = 2.0 * t;
        if !finite(t2) {
            break edge(t, t2);
        }
        if val(t2) <= val(t) + 1e-13 {
            break t2;
        }
        if t2 >= DOUBLING_CAP {
            return Ok(Extended::PosInf);
        }
        t = t2;
    };
    let (_, best) = golden_section_max(val, 0.0, hi, LAMBDA_TOL);
    let best = best.max(val(hi)).max(0.0);
    Ok(Extended::Finite(best))
}

/// `x/(2σ²) − ½ log x + log σ − ½` for `x > 0`, `+∞` otherwise.
pub fn rate_gaussian_square_analytic(sigma2: f64, x: f64) -> Result<Extended> {
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", "need sigma2 > 0"));
    }
    if x <= 0.0 {
        return Ok(Extended::PosInf);
    }
    Ok(Extended::Finite(
        x / (2.0 * sigma2) - 0.5 * x.ln() + 0.5 * sigma2.ln() - 0.5,
    ))
}

/// `exp(−n Λ*(x))`, a bound on `P(mean of n draws ≥ x)` for `x > E[X]`.
pub fn chernoff_tail_bound(mgf: &LogMgf, x: f64, n: usize) -> Result<f64> {
    if !(x > mgf.mean()) {
        return Err(Error::param(
            "x",
            format!("upper-tail bound needs x > mean = {}", mgf.mean()),
        ));
    }
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    Ok(match fenchel_legendre(mgf, x)? {
        Extended::Finite(r) => (-(n as f64) * r).exp(),
        _ => 0.0,
    })
}

/// The closed form `¼ + ½ log((a + ν̄²)/2) − log ν̄ − a/(4ν̄²)` with
/// `a = sigma_lo2 · zeta_lo²`, cross-checked against the numeric transform
/// of the worst family member `N(0, ν̄²)`.
pub fn c_hat_gaussian(sigma_lo2: f64, zeta_lo: f64, nu_hi2: f64) -> Result<f64> {
    if !(sigma_lo2 > 0.0 && zeta_lo > 0.0 && nu_hi2 > 0.0) {
        return Err(Error::param("c_hat", "need sigma_lo2, zeta_lo, nu_hi2 > 0"));
    }
    let a = sigma_lo2 * zeta_lo * zeta_lo;
    if !(a > nu_hi2) {
        return Err(Error::HypothesisViolated(format!(
            "need sigma_lo^2 zeta_lo^2 > nu_hi^2, got {a} <= {nu_hi2}"
        )));
    }
    let x_star = 0.5 * (a + nu_hi2);
    let closed = 0.25 + 0.5 * x_star.ln() - 0.5 * nu_hi2.ln() - a / (4.0 * nu_hi2);
    let numeric = fenchel_legendre(&log_mgf_gaussian_square(nu_hi2)?, x_star)?
        .finite()
        .map(|r| -r)
        .ok_or_else(|| Error::Numerical("rate at x_star is infinite".into()))?;
    if (closed - numeric).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "closed form {closed} and numeric {numeric} disagree"
        )));
    }
    if !(closed < 0.0) {
        return Err(Error::HypothesisViolated(format!(
            "C_hat = {closed} is not negative"
        )));
    }
    Ok(closed)
}

/// Rates closer to zero than this count as zero.
const NEGATIVE_TOL: f64 = 1e-12;

/// `max_P −Λ_P*(x_star)` over a finite family. Fails unless the result is
/// negative, since the exponential decay claim needs that.
pub fn c_bar_general(family: &[LogMgf], x_star: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::param("family", "empty family"));
    }
    let mut best = f64::NEG_INFINITY;
    for mgf in family {
        if x_star < mgf.mean() {
            return Err(Error::param(
                "x_star",
                format!(
                    "x_star = {x_star} is below the mean {} of {}",
                    mgf.mean(),
                    mgf.label()
                ),
            ));
        }
        if let Extended::Finite(r) = fenchel_legendre(mgf, x_star)? {
            best = best.max(-r);
        }
    }
    if !(best < -NEGATIVE_TOL) {
        return Err(Error::HypothesisViolated(format!(
            "C_bar = {} is not negative at x_star = {x_star}",
            if best == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                best.to_string()
            }
        )));
    }
    Ok(best)
}

/// `max_P −Λ_P*(x)` over the Gaussian-square family with variances on a
/// uniform grid of `[var_lo, var_hi]`, without the sign requirement.
pub fn family_sup_neg_rate(var_lo: f64, var_hi: f64, points: usize, x: f64) -> Result<Extended> {
    let mut best = Extended::NegInf;
    for v in variance_grid(var_lo, var_hi, points)? {
        let r = -fenchel_legendre(&log_mgf_gaussian_square(v)?, x)?;
        best = match (best, r) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a.max(b)),
            (Extended::NegInf, r) | (r, Extended::NegInf) => r,
            _ => Extended::PosInf,
        };
    }
    Ok(best)
}

pub fn variance_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::param(
            "family",
            format!("need 0 < lo <= hi, got [{lo}, {hi}]"),
        ));
    }
    if points == 0 {
        return Err(Error::param("family.points", "need at least 1 point"));
    }
    if points == 1 || lo == hi {
        return Ok(vec![hi]);
    }
    let h = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect())
}
