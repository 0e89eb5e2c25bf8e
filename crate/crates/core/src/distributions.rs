//! Univariate laws for the fading and noise variables.
//!
//! Every expectation in the dynamic-programming engine is taken against a
//! [`QuadratureRule`]: Gauss-Hermite for Gaussian laws, Gauss-Legendre for
//! symmetric uniform laws, and the atoms themselves for discrete laws.
//! Monte Carlo code draws from the same [`DistributionSpec`] through
//! [`DistributionSpec::sample`] using streams from [`stream_rng`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default node count for continuous laws.
pub const DEFAULT_QUAD_NODES: usize = 64;

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Gaussian {
        mean: f64,
        stddev: f64,
    },
    /// Atoms ±1 with probability ½ each.
    Rademacher,
    /// Uniform on `[-halfwidth, halfwidth]`.
    #[serde(rename = "uniform")]
    UniformSymmetric {
        halfwidth: f64,
    },
    #[serde(rename = "discrete")]
    DiscreteFinite {
        atoms: Vec<f64>,
        weights: Vec<f64>,
    },
}

/// How an absolute moment was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    AtomSum,
    /// Nonzero-mean Gaussian at a non-even order, integrated numerically.
    QuadratureFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsMoment {
    pub value: f64,
    pub method: MomentMethod,
}

/// Nodes and probability weights; `Σ w_i f(x_i)` approximates `E[f(X)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "quadrature rule needs matching nonempty nodes/weights, got {} and {}",
                nodes.len(),
                weights.len()
            )));
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, stddev: f64) -> Self {
        DistributionSpec::Gaussian { mean, stddev }
    }

    pub fn standard_normal() -> Self {
        Self::gaussian(0.0, 1.0)
    }

    pub fn point_mass(value: f64) -> Self {
        DistributionSpec::DiscreteFinite {
            atoms: vec![value],
            weights: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !stddev.is_finite() || *stddev <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "gaussian needs finite mean and stddev > 0, got mean={mean}, stddev={stddev}"
                    )));
                }
            }
            DistributionSpec::Rademacher => {}
            DistributionSpec::UniformSymmetric { halfwidth } => {
                if !halfwidth.is_finite() || *halfwidth <= 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform halfwidth must be > 0, got {halfwidth}"
                    )));
                }
            }
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return Err(Error::InvalidDistribution(format!(
                        "discrete law needs matching nonempty atoms/weights, got {} and {}",
                        atoms.len(),
                        weights.len()
                    )));
                }
                if atoms.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidDistribution("non-finite atom".into()));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidDistribution(
                        "discrete weights must be nonnegative".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidDistribution(format!(
                        "discrete weights must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            DistributionSpec::Rademacher | DistributionSpec::DiscreteFinite { .. }
        )
    }

    /// True when the support is a bounded set.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, DistributionSpec::Gaussian { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, .. } => *mean,
            DistributionSpec::Rademacher | DistributionSpec::UniformSymmetric { .. } => 0.0,
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| a * w).sum()
            }
        }
    }

    /// `E[X²]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, stddev } => mean * mean + stddev * stddev,
            DistributionSpec::Rademacher => 1.0,
            DistributionSpec::UniformSymmetric { halfwidth } => halfwidth * halfwidth / 3.0,
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| a * a * w).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// One draw. Identical generator state gives an identical draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, stddev } => Normal::new(*mean, *stddev)
                .expect("validated gaussian")
                .sample(rng),
            DistributionSpec::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionSpec::UniformSymmetric { halfwidth } => {
                rng.random_range(-*halfwidth..*halfwidth)
            }
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                *atoms.last().expect("validated nonempty")
            }
        }
    }

    /// `E|X|^order`.
    ///
    /// Zero-mean Gaussians use `σ^r 2^{r/2} Γ((r+1)/2)/√π`; nonzero-mean
    /// Gaussians are exact at even integer orders and rejected otherwise (see
    /// [`DistributionSpec::abs_moment_or_quadrature`]).
    pub fn abs_moment(&self, order: f64) -> Result<AbsMoment> {
        if !order.is_finite() || order < 0.0 {
            return Err(Error::UnsupportedMoment(format!(
                "order must be finite and >= 0, got {order}"
            )));
        }
        let closed = |value| {
            Ok(AbsMoment {
                value,
                method: MomentMethod::ClosedForm,
            })
        };
        match self {
            DistributionSpec::Gaussian { mean, stddev } => {
                if *mean == 0.0 {
                    closed(centered_gaussian_abs_moment(*stddev, order))
                } else if order.fract() == 0.0 && (order as u64).is_multiple_of(2) {
                    closed(shifted_gaussian_even_moment(*mean, *stddev, order as u32))
                } else {
                    Err(Error::UnsupportedMoment(format!(
                        "E|X|^{order} of a nonzero-mean gaussian has no closed form here; \
                         use the quadrature fallback"
                    )))
                }
            }
            DistributionSpec::Rademacher => closed(1.0),
            DistributionSpec::UniformSymmetric { halfwidth } => {
                closed(halfwidth.powf(order) / (order + 1.0))
            }
            DistributionSpec::DiscreteFinite { atoms, weights } => Ok(AbsMoment {
                value: atoms
                    .iter()
                    .zip(weights)
                    .map(|(a, w)| w * a.abs().powf(order))
                    .sum(),
                method: MomentMethod::AtomSum,
            }),
        }
    }

    /// Like [`abs_moment`](Self::abs_moment) but integrates numerically with
    /// `node_count` nodes where no exact route exists.
    pub fn abs_moment_or_quadrature(&self, order: f64, node_count: usize) -> Result<AbsMoment> {
        match self.abs_moment(order) {
            Err(Error::UnsupportedMoment(_)) if order.is_finite() && order >= 0.0 => {
                let rule = self.quadrature(node_count)?;
                Ok(AbsMoment {
                    value: rule.expect(|x| x.abs().powf(order)),
                    method: MomentMethod::QuadratureFallback,
                })
            }
            other => other,
        }
    }

    /// Quadrature rule with `node_count` nodes; discrete laws return their atoms.
    pub fn quadrature(&self, node_count: usize) -> Result<QuadratureRule> {
        if node_count < 1 {
            return Err(Error::param("node_count", "must be at least 1"));
        }
        match self {
            DistributionSpec::Gaussian { mean, stddev } => {
                let (x, w) = gauss_hermite_probabilists(node_count)?;
                QuadratureRule::new(x.into_iter().map(|t| mean + stddev * t).collect(), w)
            }
            DistributionSpec::UniformSymmetric { halfwidth } => {
                let (x, w) = gauss_legendre_probability(node_count)?;
                QuadratureRule::new(x.into_iter().map(|t| halfwidth * t).collect(), w)
            }
            DistributionSpec::Rademacher => QuadratureRule::new(vec![-1.0, 1.0], vec![0.5, 0.5]),
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                QuadratureRule::new(atoms.clone(), weights.clone())
            }
        }
    }
}

fn centered_gaussian_abs_moment(stddev: f64, order: f64) -> f64 {
    if order == 0.0 {
        return 1.0;
    }
    let ln =
        order * stddev.ln() + 0.5 * order * std::f64::consts::LN_2 + ln_gamma(0.5 * (order + 1.0))
            - 0.5 * std::f64::consts::PI.ln();
    ln.exp()
}

/// `E[(μ + σN)^{2k}]` by binomial expansion with `E N^{2j} = (2j-1)!!`.
fn shifted_gaussian_even_moment(mean: f64, stddev: f64, order: u32) -> f64 {
    let mut total = 0.0;
    let mut double_factorial = 1.0;
    for j in 0..=order / 2 {
        if j > 0 {
            double_factorial *= (2 * j - 1) as f64;
        }
        let binom = binomial(order, 2 * j);
        total += binom
            * mean.powi((order - 2 * j) as i32)
            * stddev.powi((2 * j) as i32)
            * double_factorial;
    }
    total
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Stream `stream` of the generator seeded by `seed`.
///
/// Replication `r` of a Monte Carlo run always uses `stream_rng(seed, r)`, so
/// results do not depend on how replications are scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gauss-Hermite rule for the standard normal law (weights sum to one).
pub fn gauss_hermite_probabilists(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    golub_welsch(vec![0.0; n], off)
}

/// Gauss-Legendre rule for the uniform law on [-1, 1] (weights sum to one).
pub fn gauss_legendre_probability(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(vec![0.0; n], off)
}

/// Nodes are the eigenvalues of the Jacobi matrix; weights are the squared
/// first components of the normalized eigenvectors.
fn golub_welsch(diag: Vec<f64>, off: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let (values, first) = tridiagonal_eigen(diag, off)?;
    let mut pairs: Vec<(f64, f64)> = values
        .into_iter()
        .zip(first)
        .map(|(x, z)| (x, z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetric Jacobi matrices give symmetric rules; enforce it exactly.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).unzip())
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix,
/// tracking only the first row of the eigenvector matrix.
fn tridiagonal_eigen(mut d: Vec<f64>, off: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut e = off;
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::Numerical(
                    "tridiagonal eigenvalue iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{t}` in distribution: {e}")))
        })
        .collect()
}

/// `gaussian:mean,stddev`, `rademacher`, `uniform:halfwidth` or
/// `discrete:a1,..,aK;w1,..,wK`.
impl std::str::FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let spec = match head {
            "rademacher" => DistributionSpec::Rademacher,
            "gaussian" | "normal" => match parse_numbers(rest)?.as_slice() {
                [mean, stddev] => DistributionSpec::gaussian(*mean, *stddev),
                _ => return Err(Error::Parse("expected `gaussian:mean,stddev`".into())),
            },
            "uniform" => match parse_numbers(rest)?.as_slice() {
                [h] => DistributionSpec::UniformSymmetric { halfwidth: *h },
                _ => return Err(Error::Parse("expected `uniform:halfwidth`".into())),
            },
            "discrete" => {
                let (a, w) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("expected `discrete:atoms;weights`".into()))?;
                DistributionSpec::DiscreteFinite {
                    atoms: parse_numbers(a)?,
                    weights: parse_numbers(w)?,
                }
            }
            other => return Err(Error::Parse(format!("unknown distribution `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl std::fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            DistributionSpec::Gaussian { mean, stddev } => write!(f, "gaussian:{mean},{stddev}"),
            DistributionSpec::Rademacher => write!(f, "rademacher"),
            DistributionSpec::UniformSymmetric { halfwidth } => write!(f, "uniform:{halfwidth}"),
            DistributionSpec::DiscreteFinite { atoms, weights } => {
                write!(f, "discrete:{};{}", join(atoms), join(weights))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rademacher_samples_are_signs() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            let x = DistributionSpec::Rademacher.sample(&mut rng);
            assert!(x == 1.0 || x == -1.0);
        }
    }

    #[test]
    fn point_mass_sample() {
        let mut rng = stream_rng(1, 3);
        assert_eq!(DistributionSpec::point_mass(3.0).sample(&mut rng), 3.0);
    }

    #[test]
    fn same_stream_same_draws() {
        let spec = DistributionSpec::standard_normal();
        let mut a = stream_rng(99, 5);
        let mut b = stream_rng(99, 5);
        for _ in 0..100 {
            assert_eq!(spec.sample(&mut a).to_bits(), spec.sample(&mut b).to_bits());
        }
        let mut c = stream_rng(99, 6);
        assert_ne!(spec.sample(&mut stream_rng(99, 5)), spec.sample(&mut c));
    }

    #[test]
    fn gaussian_sample_mean_band() {
        let spec = DistributionSpec::standard_normal();
        let mut rng = stream_rng(2024, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| spec.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn abs_moments_closed_form() {
        let g = DistributionSpec::standard_normal();
        assert_abs_diff_eq!(g.abs_moment(2.0).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.abs_moment(4.0).unwrap().value, 3.0, epsilon = 1e-12);
        // E|N| = sqrt(2/pi)
        assert_abs_diff_eq!(
            g.abs_moment(1.0).unwrap().value,
            (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-12
        );
        for order in [0.0, 0.5, 3.0, 4.0] {
            assert_eq!(
                DistributionSpec::Rademacher
                    .abs_moment(order)
                    .unwrap()
                    .value,
                1.0
            );
        }
        let u = DistributionSpec::UniformSymmetric { halfwidth: 2.0 };
        assert_abs_diff_eq!(u.abs_moment(2.0).unwrap().value, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fourth_moment_matches_quadrature() {
        let g = DistributionSpec::gaussian(0.0, 1.3);
        let rule = g.quadrature(64).unwrap();
        let quad = rule.expect(|x| x.powi(4));
        assert_abs_diff_eq!(g.abs_moment(4.0).unwrap().value, quad, epsilon = 1e-9);
    }

    #[test]
    fn shifted_gaussian_moments() {
        let g = DistributionSpec::gaussian(0.5, 2.0);
        // E X^2 = mu^2 + s^2, E X^4 = mu^4 + 6 mu^2 s^2 + 3 s^4
        assert_abs_diff_eq!(g.abs_moment(2.0).unwrap().value, 4.25, epsilon = 1e-12);
        assert_abs_diff_eq!(
            g.abs_moment(4.0).unwrap().value,
            0.0625 + 6.0 * 0.25 * 4.0 + 48.0,
            epsilon = 1e-10
        );
        assert!(matches!(
            g.abs_moment(3.0),
            Err(Error::UnsupportedMoment(_))
        ));
        let fallback = g.abs_moment_or_quadrature(3.0, 64).unwrap();
        assert_eq!(fallback.method, MomentMethod::QuadratureFallback);
        assert!(fallback.value > 0.0);
    }

    #[test]
    fn discrete_quadrature_passes_atoms_through() {
        let spec = DistributionSpec::DiscreteFinite {
            atoms: vec![-1.0, 1.0],
            weights: vec![0.5, 0.5],
        };
        for count in [1, 5, 64] {
            let rule = spec.quadrature(count).unwrap();
            assert_eq!(rule.nodes, vec![-1.0, 1.0]);
            assert_eq!(rule.weights, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn hermite_second_moments() {
        let rule = DistributionSpec::standard_normal().quadrature(32).unwrap();
        assert_abs_diff_eq!(rule.weight_sum(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rule.expect(|x| x * x), 1.0, epsilon = 1e-10);
        let rule = DistributionSpec::gaussian(0.0, 2.0).quadrature(32).unwrap();
        assert_abs_diff_eq!(rule.expect(|x| x * x), 4.0, epsilon = 1e-8);
    }

    #[test]
    fn legendre_rule_matches_uniform_moments() {
        let spec = DistributionSpec::UniformSymmetric { halfwidth: 3.0 };
        let rule = spec.quadrature(16).unwrap();
        assert_abs_diff_eq!(rule.expect(|x| x * x), 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rule.expect(|x| x.powi(4)), 81.0 / 5.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(DistributionSpec::gaussian(0.0, 0.0).validate().is_err());
        assert!(DistributionSpec::UniformSymmetric { halfwidth: -1.0 }
            .validate()
            .is_err());
        let bad = DistributionSpec::DiscreteFinite {
            atoms: vec![0.0, 1.0],
            weights: vec![0.5, 0.6],
        };
        assert!(bad.validate().is_err());
        assert!(DistributionSpec::Rademacher.quadrature(0).is_err());
    }

    #[test]
    fn serde_tagged_records() {
        let spec: DistributionSpec =
            serde_json::from_str(r#"{"kind":"gaussian","mean":0.0,"stddev":1.0}"#).unwrap();
        assert_eq!(spec, DistributionSpec::standard_normal());
        let spec: DistributionSpec = serde_json::from_str(r#"{"kind":"rademacher"}"#).unwrap();
        assert_eq!(spec, DistributionSpec::Rademacher);
    }

    #[test]
    fn string_roundtrip() {
        for text in [
            "gaussian:0,1.5",
            "rademacher",
            "uniform:2",
            "discrete:-1,0,1;0.25,0.5,0.25",
        ] {
            let d: DistributionSpec = text.parse().unwrap();
            assert_eq!(d.to_string(), text);
            assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
        }
        assert!("gaussian:0".parse::<DistributionSpec>().is_err());
        assert!("discrete:1,2;0.3,0.3".parse::<DistributionSpec>().is_err());
        assert!("cauchy".parse::<DistributionSpec>().is_err());
    }
}
