//! Monte Carlo simulation of `W_n` under explicit predictable strategies.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::stream_rng;
use crate::engine::PolicyTable;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Realizations strictly before the current step.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    z: &'a [f64],
    k: &'a [f64],
}

impl<'a> History<'a> {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &'a [f64] {
        self.z
    }

    pub fn k(&self) -> &'a [f64] {
        self.k
    }
}

/// A rule choosing `ζ_i` from the past. `running_mean` is
/// `W_{i−1} = Σ_{j<i} (ζ_j Z_j + K_j)² / n`, the same axis the policy table
/// is stored on. The current step's draws are not made until the strategy
/// has answered, so they cannot be observed.
pub trait PredictableStrategy: Sync {
    /// `step` is 1-based and `history.len() == step − 1`.
    fn lambda(&self, step: usize, history: History<'_>, running_mean: f64) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Constant(f64),
    /// `high` while the running mean is below `threshold`, `low` otherwise.
    BangBang {
        threshold: f64,
        low: f64,
        high: f64,
    },
    /// Table lookup, clamped to `[zeta_lo, zeta_hi]`.
    Policy {
        table: Arc<PolicyTable>,
        zeta_lo: f64,
        zeta_hi: f64,
    },
    /// One λ per step regardless of the history.
    Scripted(Vec<f64>),
}

impl Strategy {
    pub fn policy(table: PolicyTable, params: &ModelParams) -> Self {
        Strategy::Policy {
            table: Arc::new(table),
            zeta_lo: params.zeta_lo(),
            zeta_hi: params.zeta_hi(),
        }
    }

    /// Parses `constant:λ`, `bangbang:threshold,low,high`, `policy:<file>`
    /// or `scripted:<file>`.
    pub fn parse(spec: &str, params: &ModelParams) -> Result<Self> {
        let (head, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("strategy `{spec}` needs `kind:args`")))?;
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad number `{t}` in strategy: {e}")))
                })
                .collect()
        };
        match head {
            "constant" => match nums(rest)?.as_slice() {
                [l] => Ok(Strategy::Constant(*l)),
                _ => Err(Error::Parse("constant needs `constant:lambda`".into())),
            },
            "bangbang" => match nums(rest)?.as_slice() {
                [threshold, low, high] => Ok(Strategy::BangBang {
                    threshold: *threshold,
                    low: *low,
                    high: *high,
                }),
                _ => Err(Error::Parse(
                    "bangbang needs `bangbang:threshold,low,high`".into(),
                )),
            },
            "policy" => Ok(Strategy::policy(
                PolicyTable::load(Path::new(rest))?,
                params,
            )),
            "scripted" => Ok(Strategy::Scripted(read_script(Path::new(rest))?)),
            other => Err(Error::Parse(format!("unknown strategy `{other}`"))),
        }
    }

    /// Checks the values the strategy can emit against the interval.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let (lo, hi) = (params.zeta_lo(), params.zeta_hi());
        let check = |step: usize, lambda: f64| {
            if lambda >= lo && lambda <= hi {
                Ok(())
            } else {
                Err(Error::StrategyOutOfRange {
                    step,
                    lambda,
                    lo,
                    hi,
                })
            }
        };
        match self {
            Strategy::Constant(l) => check(1, *l),
            Strategy::BangBang { low, high, .. } => {
                check(1, *low)?;
                check(1, *high)
            }
            Strategy::Policy { .. } => Ok(()),
            Strategy::Scripted(ls) => ls
                .iter()
                .enumerate()
                .try_for_each(|(i, &l)| check(i + 1, l)),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Constant(l) => write!(f, "constant:{l}"),
            Strategy::BangBang {
                threshold,
                low,
                high,
            } => write!(f, "bangbang:{threshold},{low},{high}"),
            Strategy::Policy { table, .. } => write!(f, "policy:{}steps", table.steps()),
            Strategy::Scripted(ls) => write!(f, "scripted:{}steps", ls.len()),
        }
    }
}

impl PredictableStrategy for Strategy {
    fn lambda(&self, step: usize, _history: History<'_>, running_mean: f64) -> Result<f64> {
        match self {
            Strategy::Constant(l) => Ok(*l),
            Strategy::BangBang {
                threshold,
                low,
                high,
            } => Ok(if running_mean < *threshold {
                *high
            } else {
                *low
            }),
            Strategy::Policy {
                table,
                zeta_lo,
                zeta_hi,
            } => Ok(table.lookup(step, running_mean)?.clamp(*zeta_lo, *zeta_hi)),
            Strategy::Scripted(ls) => ls.get(step - 1).copied().ok_or_else(|| {
                Error::param(
                    "strategy",
                    format!("script has {} steps, step {step} requested", ls.len()),
                )
            }),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScriptRow {
    step: usize,
    lambda: f64,
}

/// Reads a CSV script with header `step,lambda`, steps 1..n in any order.
pub fn read_script(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<ScriptRow> = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    rows.sort_by_key(|r| r.step);
    for (i, row) in rows.iter().enumerate() {
        if row.step != i + 1 {
            return Err(Error::Parse(format!(
                "script steps must be 1..n without gaps, found step {} at position {}",
                row.step,
                i + 1
            )));
        }
    }
    Ok(rows.into_iter().map(|r| r.lambda).collect())
}

pub fn write_script(path: &Path, lambdas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, &lambda) in lambdas.iter().enumerate() {
        w.serialize(ScriptRow {
            step: i + 1,
            lambda,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reusable buffers for [`simulate_w_with`].
#[derive(Debug, Default)]
pub struct PathBuffers {
    z: Vec<f64>,
    k: Vec<f64>,
}

/// One draw of `W_n`. For each step the strategy is queried first, then
/// `Z_i` and `K_i` are drawn in that order.
pub fn simulate_w<S, R>(strategy: &S, n: usize, params: &ModelParams, rng: &mut R) -> Result<f64>
where
    S: PredictableStrategy + ?Sized,
    R: Rng + ?Sized,
{
    simulate_w_with(strategy, n, params, rng, &mut PathBuffers::default())
}

pub fn simulate_w_with<S, R>(
    strategy: &S,
    n: usize,
    params: &ModelParams,
    rng: &mut R,
    buf: &mut PathBuffers,
) -> Result<f64>
where
    S: PredictableStrategy + ?Sized,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let (lo, hi) = (params.zeta_lo(), params.zeta_hi());
    let nf = n as f64;
    buf.z.clear();
    buf.k.clear();
    let mut sum = 0.0;
    for step in 1..=n {
        let history = History {
            z: &buf.z,
            k: &buf.k,
        };
        let lambda = strategy.lambda(step, history, sum / nf)?;
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::StrategyOutOfRange {
                step,
                lambda,
                lo,
                hi,
            });
        }
        let z = params.z_spec().sample(rng);
        let k = params.k_spec().sample(rng);
        let y = lambda * z + k;
        sum += y * y;
        buf.z.push(z);
        buf.k.push(k);
    }
    Ok(sum / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error (sample standard deviation over `√len`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Values of `f(W_n)` for replications `0..replications`; replication `r`
/// uses the stream `(seed, r)`.
pub fn replicate<S, F>(
    strategy: &S,
    f: F,
    n: usize,
    params: &ModelParams,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    S: PredictableStrategy + ?Sized,
    F: Fn(f64) -> f64 + Sync,
{
    (0..replications)
        .into_par_iter()
        .map_init(PathBuffers::default, |buf, r| {
            let mut rng = stream_rng(seed, r as u64);
            simulate_w_with(strategy, n, params, &mut rng, buf).map(&f)
        })
        .collect()
}

/// Monte Carlo mean of `φ(W_n)` under `strategy`. At least 2 replications;
/// the standard error is only meaningful from about 100 on.
pub fn estimate<S, F>(
    strategy: &S,
    phi: F,
    n: usize,
    params: &ModelParams,
    replications: usize,
    seed: u64,
) -> Result<McEstimate>
where
    S: PredictableStrategy + ?Sized,
    F: Fn(f64) -> f64 + Sync,
{
    if replications < 2 {
        return Err(Error::param("reps", "need at least 2 replications"));
    }
    let values = replicate(strategy, phi, n, params, replications, seed)?;
    let (mean, stderr) = mean_stderr(&values);
    Ok(McEstimate {
        mean,
        stderr,
        replications,
        seed,
    })
}
