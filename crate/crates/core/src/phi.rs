//! Lipschitz test functions φ.
//!
//! String syntax (used by the CLI and config files):
//!
//! | syntax                    | function                                  |
//! |---------------------------|-------------------------------------------|
//! | `identity`                | `x`                                       |
//! | `const:c`                 | `c`                                       |
//! | `clip:c`                  | `min(x, c)`                               |
//! | `dist:a,b`                | distance from `x` to `[a, b]`             |
//! | `indicator:g,u`           | 1 below `g`, linear to 0 at `u`, then 0   |
//! | `pwl:k1,..,kK;s0,..,sK;v` | piecewise linear, value `v` at `k1`       |
//! | `neg:<spec>`              | `-φ(x)`                                   |
//! | `scale:c:<spec>`          | `c·φ(x)`                                  |
//! | `shift:c:<spec>`          | `φ(x) + c`                                |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    Identity,
    /// `min(x, cap)`.
    Clipped {
        cap: f64,
    },
    DistanceToInterval {
        lo: f64,
        hi: f64,
    },
    /// Equal to 1 on `(-∞, gamma]`, 0 on `[upper, ∞)`, linear in between.
    /// Dominates the indicator of `(-∞, gamma]`.
    SmoothedIndicator {
        gamma: f64,
        upper: f64,
    },
    /// `slopes[0]` applies left of `knots[0]`, `slopes[i]` between
    /// `knots[i-1]` and `knots[i]`, and the last slope right of the last knot.
    PiecewiseLinear {
        knots: Vec<f64>,
        slopes: Vec<f64>,
        value_at_first_knot: f64,
    },
    Negated {
        inner: Box<TestFunction>,
    },
    Scaled {
        factor: f64,
        inner: Box<TestFunction>,
    },
    Shifted {
        offset: f64,
        inner: Box<TestFunction>,
    },
    Sum {
        left: Box<TestFunction>,
        right: Box<TestFunction>,
    },
}

impl TestFunction {
    pub fn constant(value: f64) -> Self {
        TestFunction::Constant { value }
    }

    pub fn clipped(cap: f64) -> Self {
        TestFunction::Clipped { cap }
    }

    pub fn distance_to(lo: f64, hi: f64) -> Self {
        TestFunction::DistanceToInterval { lo, hi }
    }

    pub fn smoothed_indicator(gamma: f64, upper: f64) -> Self {
        TestFunction::SmoothedIndicator { gamma, upper }
    }

    pub fn negated(self) -> Self {
        TestFunction::Negated {
            inner: Box::new(self),
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn shifted(self, offset: f64) -> Self {
        TestFunction::Shifted {
            offset,
            inner: Box::new(self),
        }
    }

    pub fn plus(self, other: TestFunction) -> Self {
        TestFunction::Sum {
            left: Box::new(self),
            right: Box::new(other),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Constant { value } => finite("value", *value),
            TestFunction::Identity => Ok(()),
            TestFunction::Clipped { cap } => finite("cap", *cap),
            TestFunction::DistanceToInterval { lo, hi } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                if lo > hi {
                    return Err(Error::param("phi.hi", "interval needs lo <= hi"));
                }
                Ok(())
            }
            TestFunction::SmoothedIndicator { gamma, upper } => {
                finite("gamma", *gamma)?;
                finite("upper", *upper)?;
                if gamma >= upper {
                    return Err(Error::param(
                        "phi.gamma",
                        "smoothed indicator needs gamma < upper",
                    ));
                }
                Ok(())
            }
            TestFunction::PiecewiseLinear {
                knots,
                slopes,
                value_at_first_knot,
            } => {
                if knots.is_empty() {
                    return Err(Error::param("phi.knots", "need at least one knot"));
                }
                if slopes.len() != knots.len() + 1 {
                    return Err(Error::param(
                        "phi.slopes",
                        format!("need {} slopes for {} knots", knots.len() + 1, knots.len()),
                    ));
                }
                if knots.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::param(
                        "phi.knots",
                        "knots must be strictly increasing",
                    ));
                }
                if knots.iter().chain(slopes).any(|v| !v.is_finite()) {
                    return Err(Error::param("phi", "non-finite knot or slope"));
                }
                finite("value_at_first_knot", *value_at_first_knot)
            }
            TestFunction::Negated { inner } => inner.validate(),
            TestFunction::Scaled { factor, inner } => {
                finite("factor", *factor)?;
                inner.validate()
            }
            TestFunction::Shifted { offset, inner } => {
                finite("offset", *offset)?;
                inner.validate()
            }
            TestFunction::Sum { left, right } => {
                left.validate()?;
                right.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Identity => x,
            TestFunction::Clipped { cap } => x.min(*cap),
            TestFunction::DistanceToInterval { lo, hi } => (lo - x).max(x - hi).max(0.0),
            TestFunction::SmoothedIndicator { gamma, upper } => {
                if x <= *gamma {
                    1.0
                } else if x >= *upper {
                    0.0
                } else {
                    (upper - x) / (upper - gamma)
                }
            }
            TestFunction::PiecewiseLinear {
                knots,
                slopes,
                value_at_first_knot,
            } => {
                if x <= knots[0] {
                    return value_at_first_knot + slopes[0] * (x - knots[0]);
                }
                let mut value = *value_at_first_knot;
                for i in 1..knots.len() {
                    if x <= knots[i] {
                        return value + slopes[i] * (x - knots[i - 1]);
                    }
                    value += slopes[i] * (knots[i] - knots[i - 1]);
                }
                let last = knots.len() - 1;
                value + slopes[last + 1] * (x - knots[last])
            }
            TestFunction::Negated { inner } => -inner.eval(x),
            TestFunction::Scaled { factor, inner } => factor * inner.eval(x),
            TestFunction::Shifted { offset, inner } => inner.eval(x) + offset,
            TestFunction::Sum { left, right } => left.eval(x) + right.eval(x),
        }
    }

    /// A valid Lipschitz constant (exact for the elementary shapes, an upper
    /// bound for sums).
    pub fn lipschitz(&self) -> f64 {
        match self {
            TestFunction::Constant { .. } => 0.0,
            TestFunction::Identity
            | TestFunction::Clipped { .. }
            | TestFunction::DistanceToInterval { .. } => 1.0,
            TestFunction::SmoothedIndicator { gamma, upper } => 1.0 / (upper - gamma),
            TestFunction::PiecewiseLinear { slopes, .. } => {
                slopes.iter().fold(0.0, |acc: f64, s| acc.max(s.abs()))
            }
            TestFunction::Negated { inner } | TestFunction::Shifted { inner, .. } => {
                inner.lipschitz()
            }
            TestFunction::Scaled { factor, inner } => factor.abs() * inner.lipschitz(),
            TestFunction::Sum { left, right } => left.lipschitz() + right.lipschitz(),
        }
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("phi.{field}"), "must be finite"))
    }
}

/// Largest difference quotient over `samples` equally spaced points;
/// a lower estimate of the Lipschitz constant of `f` on `[a, b]`.
pub fn estimate_lipschitz(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let samples = samples.max(2);
    let h = (b - a) / (samples - 1) as f64;
    let mut prev = f(a);
    let mut best: f64 = 0.0;
    for k in 1..samples {
        let cur = f(a + h * k as f64);
        best = best.max((cur - prev).abs() / h);
        prev = cur;
    }
    best
}

/// The shipped catalog for a limit interval `[mu_lo, mu_hi]`: identity,
/// clipped identity, distance to an inner interval, the smoothed indicator
/// below `mu_lo`, and the negation of each.
pub fn standard_catalog(mu_lo: f64, mu_hi: f64) -> Vec<(String, TestFunction)> {
    let width = (mu_hi - mu_lo).max(1e-3);
    let base = vec![
        ("identity".to_string(), TestFunction::Identity),
        (
            "clip".to_string(),
            TestFunction::clipped(0.5 * (mu_lo + mu_hi)),
        ),
        (
            "dist".to_string(),
            TestFunction::distance_to(mu_lo + 0.25 * width, mu_lo + 0.75 * width),
        ),
        (
            "indicator".to_string(),
            TestFunction::smoothed_indicator(mu_lo - 0.5 * width, mu_lo),
        ),
    ];
    let negated: Vec<_> = base
        .iter()
        .map(|(name, f)| (format!("neg_{name}"), f.clone().negated()))
        .collect();
    base.into_iter().chain(negated).collect()
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Constant { value } => write!(f, "const:{value}"),
            TestFunction::Identity => write!(f, "identity"),
            TestFunction::Clipped { cap } => write!(f, "clip:{cap}"),
            TestFunction::DistanceToInterval { lo, hi } => write!(f, "dist:{lo},{hi}"),
            TestFunction::SmoothedIndicator { gamma, upper } => {
                write!(f, "indicator:{gamma},{upper}")
            }
            TestFunction::PiecewiseLinear {
                knots,
                slopes,
                value_at_first_knot,
            } => write!(
                f,
                "pwl:{};{};{value_at_first_knot}",
                join(knots),
                join(slopes)
            ),
            TestFunction::Negated { inner } => write!(f, "neg:{inner}"),
            TestFunction::Scaled { factor, inner } => write!(f, "scale:{factor}:{inner}"),
            TestFunction::Shifted { offset, inner } => write!(f, "shift:{offset}:{inner}"),
            TestFunction::Sum { left, right } => write!(f, "sum({left})({right})"),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{t}` in phi spec: {e}")))
        })
        .collect()
}

fn parse_one(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number `{s}` in phi spec: {e}")))
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_phi(s)
    }
}

fn parse_phi<'a>(s: &'a str) -> Result<TestFunction> {
    let s = s.trim();
    let (head, rest) = match s.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (s, None),
    };
    let need = |r: Option<&'a str>| -> Result<&'a str> {
        r.ok_or_else(|| Error::Parse(format!("phi `{head}` needs arguments")))
    };
    let phi = match head {
        "identity" => TestFunction::Identity,
        "const" => TestFunction::constant(parse_one(need(rest)?)?),
        "clip" => TestFunction::clipped(parse_one(need(rest)?)?),
        "dist" => match parse_list(need(rest)?)?.as_slice() {
            [lo, hi] => TestFunction::distance_to(*lo, *hi),
            _ => return Err(Error::Parse("dist needs `dist:lo,hi`".into())),
        },
        "indicator" => match parse_list(need(rest)?)?.as_slice() {
            [g, u] => TestFunction::smoothed_indicator(*g, *u),
            _ => {
                return Err(Error::Parse(
                    "indicator needs `indicator:gamma,upper`".into(),
                ))
            }
        },
        "pwl" => {
            let parts: Vec<&str> = need(rest)?.split(';').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(
                    "pwl needs `pwl:knots;slopes;value_at_first_knot`".into(),
                ));
            }
            TestFunction::PiecewiseLinear {
                knots: parse_list(parts[0])?,
                slopes: parse_list(parts[1])?,
                value_at_first_knot: parse_one(parts[2])?,
            }
        }
        "neg" => need(rest)?.parse::<TestFunction>()?.negated(),
        "scale" | "shift" => {
            let (c, inner) = need(rest)?
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("{head} needs `{head}:c:<phi>`")))?;
            let c = parse_one(c)?;
            let inner = inner.parse::<TestFunction>()?;
            if head == "scale" {
                inner.scaled(c)
            } else {
                inner.shifted(c)
            }
        }
        other => return Err(Error::Parse(format!("unknown phi `{other}`"))),
    };
    phi.validate()?;
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_shapes() {
        assert_eq!(TestFunction::clipped(10.0).eval(12.0), 10.0);
        assert_eq!(TestFunction::distance_to(1.0, 3.0).eval(2.0), 0.0);
        assert_eq!(TestFunction::distance_to(1.0, 3.0).eval(5.0), 2.0);
        let ind = TestFunction::smoothed_indicator(1.0, 3.0);
        assert_eq!(ind.eval(0.5), 1.0);
        assert_eq!(ind.eval(2.0), 0.5);
        assert_eq!(ind.eval(3.5), 0.0);
        assert_eq!(ind.lipschitz(), 0.5);
    }

    #[test]
    fn piecewise_linear_matches_knots_and_slopes() {
        let f = TestFunction::PiecewiseLinear {
            knots: vec![1.0, 3.0],
            slopes: vec![-1.0, 2.0, 0.5],
            value_at_first_knot: 1.0,
        };
        f.validate().unwrap();
        assert_eq!(f.eval(0.0), 2.0);
        assert_eq!(f.eval(2.0), 3.0);
        assert_eq!(f.eval(3.0), 5.0);
        assert_eq!(f.eval(5.0), 6.0);
        assert_eq!(f.lipschitz(), 2.0);
        let est = estimate_lipschitz(|x| f.eval(x), -2.0, 6.0, 10_001);
        assert!((est - 2.0).abs() < 1e-9);
    }

    #[test]
    fn string_round_trip() {
        for s in [
            "identity",
            "const:3",
            "clip:10",
            "dist:1,3",
            "indicator:0.5,2",
            "neg:clip:4",
            "pwl:1,3;-1,2,0.5;1",
            "scale:2:dist:1,2",
            "shift:-1:identity",
        ] {
            let f: TestFunction = s.parse().unwrap();
            let again: TestFunction = f.to_string().parse().unwrap();
            assert_eq!(f, again, "{s}");
        }
        assert!("indicator:3,1".parse::<TestFunction>().is_err());
        assert!("pwl:3,1;0,0,0;0".parse::<TestFunction>().is_err());
        assert!("wobble".parse::<TestFunction>().is_err());
    }

    #[test]
    fn catalog_lipschitz_constants_are_sound() {
        for (name, f) in standard_catalog(2.0, 5.0) {
            let est = estimate_lipschitz(|x| f.eval(x), -5.0, 15.0, 200_001);
            assert!(
                est <= f.lipschitz() + 1e-9,
                "{name}: {est} > {}",
                f.lipschitz()
            );
        }
    }
}
