//! CSV row types and the pipelines behind each CLI subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{estimate, Strategy};
use crate::config::{ExperimentConfig, LdpSection, VarianceRange};
use crate::detection::{
    c_alpha, false_alarm_exponent, n1_compute, n_positive_threshold, simulate_false_alarm,
    simulate_miss, threshold_gamma_n, worst_miss_adversary, DetectionConfig,
};
use crate::distributions::DistributionSpec;
use crate::engine::{backward_induction, rate_report, DpSolution, EngineConfig, RateReport};
use crate::error::{Error, Result};
use crate::ldp::{
    chernoff_tail_bound, family_sup_neg_rate, fenchel_legendre, log_mgf_gaussian_square,
    rate_gaussian_square_analytic, Extended,
};
use crate::model::ModelParams;
use crate::phi::TestFunction;

/// Phi used when neither the config nor a flag names one.
pub const DEFAULT_PHI: &str = "clip";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub strategy: String,
    pub n: usize,
    pub reps: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpRow {
    pub x: f64,
    pub rate_numeric: Extended,
    pub rate_analytic: Extended,
    /// Empty when `x` is not above the mean.
    pub chernoff_n: Option<f64>,
    /// Empty without a family.
    pub c_hat: Option<Extended>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectRow {
    pub n: usize,
    pub gamma_n: f64,
    pub c_alpha: f64,
    #[serde(rename = "N1")]
    pub n1: Option<usize>,
    pub miss_rate: Option<f64>,
    pub miss_stderr: Option<f64>,
    pub p: f64,
    pub fa_rate: Option<f64>,
    pub fa_stderr: Option<f64>,
    pub fa_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectMode {
    Threshold,
    Miss,
    FalseAlarm,
    /// Threshold, miss and false alarm in one row.
    All,
}

impl std::str::FromStr for DetectMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(DetectMode::Threshold),
            "miss" => Ok(DetectMode::Miss),
            "false-alarm" => Ok(DetectMode::FalseAlarm),
            "all" => Ok(DetectMode::All),
            other => Err(Error::Parse(format!(
                "unknown mode `{other}` (threshold, miss, false-alarm, all)"
            ))),
        }
    }
}

/// Reproducibility record written next to every CSV. No timestamps, so two
/// identical runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, outputs: Vec<String>) -> Self {
        let mut config = cfg.clone();
        config.model = Some(cfg.model_spec());
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.run.seed,
            config,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("manifest serialization: {e}")))?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
}

/// `rows` as CSV; a header is written even when `rows` is empty.
pub fn csv_with_header<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    if rows.is_empty() {
        return Ok(header.join(",") + "\n");
    }
    csv_string(rows)
}

pub const RATE_HEADER: [&str; 7] = [
    "n",
    "value",
    "limit_max",
    "gap",
    "bound",
    "slack",
    "satisfied",
];
pub const MC_HEADER: [&str; 5] = ["strategy", "n", "reps", "mean", "stderr"];
pub const LDP_HEADER: [&str; 5] = ["x", "rate_numeric", "rate_analytic", "chernoff_n", "c_hat"];
pub const DETECT_HEADER: [&str; 10] = [
    "n",
    "gamma_n",
    "c_alpha",
    "N1",
    "miss_rate",
    "miss_stderr",
    "p",
    "fa_rate",
    "fa_stderr",
    "fa_bound",
];

/// The CSV path and its `<stem>.manifest.json` sibling.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    csv.with_file_name(format!("{stem}.manifest.json"))
}

pub fn resolve_config_phi(cfg: &ExperimentConfig, params: &ModelParams) -> Result<TestFunction> {
    match &cfg.phi {
        Some(p) => p.resolve(params),
        None => crate::config::resolve_phi(DEFAULT_PHI, params),
    }
}

pub fn dp_value(
    phi: &TestFunction,
    n: usize,
    params: &ModelParams,
    engine: &EngineConfig,
) -> Result<(DpSolution, RateReport)> {
    let sol = backward_induction(phi, n, params, engine)?;
    let report = rate_report(phi, &sol, params)?;
    Ok((sol, report))
}

/// One row per `n`, in the order given.
pub fn rate_sweep(
    phi: &TestFunction,
    n_list: &[usize],
    params: &ModelParams,
    engine: &EngineConfig,
) -> Result<Vec<RateReport>> {
    n_list
        .par_iter()
        .map(|&n| dp_value(phi, n, params, engine).map(|(_, r)| r))
        .collect()
}

/// Constant at both ends, a bang-bang rule switching at the midpoint of the
/// limit interval, and the engine policy.
pub fn default_strategies(params: &ModelParams) -> Vec<String> {
    let (lo, hi) = (params.zeta_lo(), params.zeta_hi());
    let mid = 0.5 * (params.mu_lo() + params.mu_hi());
    vec![
        format!("constant:{lo}"),
        format!("constant:{hi}"),
        format!("bangbang:{mid},{lo},{hi}"),
        "policy".to_string(),
    ]
}

/// Monte Carlo rows for each strategy spec. The bare spec `policy` uses the
/// engine policy for `phi` at this `n`.
#[allow(clippy::too_many_arguments)]
pub fn mc_rows(
    specs: &[String],
    phi: &TestFunction,
    n: usize,
    params: &ModelParams,
    engine: &EngineConfig,
    reps: usize,
    seed: u64,
) -> Result<Vec<McRow>> {
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let strategy = if spec.trim() == "policy" {
            Strategy::policy(backward_induction(phi, n, params, engine)?.policy, params)
        } else {
            Strategy::parse(spec, params)?
        };
        strategy.validate(params)?;
        let est = estimate(&strategy, |w| phi.eval(w), n, params, reps, seed)?;
        rows.push(McRow {
            strategy: spec.clone(),
            n,
            reps,
            mean: est.mean,
            stderr: est.stderr,
        });
    }
    Ok(rows)
}

/// Rates of `η²` for `η ~ N(0, sigma2)`, with the family column taken as the
/// grid maximum of `−Λ_P*(x)`.
pub fn ldp_rows(sec: &LdpSection) -> Result<Vec<LdpRow>> {
    let mgf = log_mgf_gaussian_square(sec.sigma2)?;
    sec.x
        .iter()
        .map(|&x| {
            let chernoff_n = if x > sec.sigma2 {
                Some(chernoff_tail_bound(&mgf, x, sec.n)?)
            } else {
                None
            };
            let c_hat = match &sec.family {
                Some(VarianceRange { lo, hi, points }) => {
                    Some(family_sup_neg_rate(*lo, *hi, *points, x)?)
                }
                None => None,
            };
            Ok(LdpRow {
                x,
                rate_numeric: fenchel_legendre(&mgf, x)?,
                rate_analytic: rate_gaussian_square_analytic(sec.sigma2, x)?,
                chernoff_n,
                c_hat,
            })
        })
        .collect()
}

/// Sample sizes the detector needs, reported alongside `threshold` mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSizeNotes {
    pub positive_threshold: Option<usize>,
    pub n1: Option<usize>,
}

pub fn sample_size_notes(cfg: &DetectionConfig) -> SampleSizeNotes {
    SampleSizeNotes {
        positive_threshold: n_positive_threshold(cfg).ok(),
        n1: n1_compute(cfg).ok(),
    }
}

/// The member with the largest second moment; it maximizes the
/// false-alarm rate within a scale family.
fn loudest_member(cfg: &DetectionConfig) -> Result<DistributionSpec> {
    cfg.noise
        .members()
        .into_iter()
        .max_by(|a, b| a.second_moment().total_cmp(&b.second_moment()))
        .ok_or_else(|| Error::param("detection.noise", "empty family"))
}

pub fn detect_row(
    cfg: &DetectionConfig,
    mode: DetectMode,
    engine: &EngineConfig,
    reps: usize,
    seed: u64,
) -> Result<DetectRow> {
    let mut row = DetectRow {
        n: cfg.n,
        gamma_n: threshold_gamma_n(cfg)?,
        c_alpha: c_alpha(cfg)?,
        n1: n1_compute(cfg).ok(),
        miss_rate: None,
        miss_stderr: None,
        p: cfg.p,
        fa_rate: None,
        fa_stderr: None,
        fa_bound: None,
    };
    if matches!(mode, DetectMode::Miss | DetectMode::All) {
        let (member, strategy, _) = worst_miss_adversary(cfg, engine)?;
        let est = simulate_miss(cfg, &strategy, &member, reps, seed)?;
        row.miss_rate = Some(est.rate);
        row.miss_stderr = Some(est.stderr);
    }
    if matches!(mode, DetectMode::FalseAlarm | DetectMode::All) {
        false_alarm_exponent(cfg)?;
        let member = loudest_member(cfg)?;
        let fa = simulate_false_alarm(cfg, &member, &[cfg.n], reps, seed)?;
        row.fa_rate = Some(fa[0].estimate.rate);
        row.fa_stderr = Some(fa[0].estimate.stderr);
        row.fa_bound = fa[0].bound;
    }
    Ok(row)
}

/// Files written by [`run_report`], relative to its directory.
pub const REPORT_FILES: [&str; 5] = [
    "rate_sweep.csv",
    "mc.csv",
    "ldp.csv",
    "detect.csv",
    "manifest.json",
];

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub files: Vec<PathBuf>,
    pub rate: Vec<RateReport>,
    /// `n` of every sweep row whose `satisfied` column is false.
    pub unsatisfied: Vec<usize>,
}

/// Runs the sweep over `run.n_list`, Monte Carlo at the largest `n`, and the
/// `[ldp]` and `[detection]` sections when present, writing one CSV each plus
/// `manifest.json` into `dir`.
pub fn run_report(cfg: &ExperimentConfig, dir: &Path) -> Result<ReportOutcome> {
    let seed = cfg.require_seed()?;
    let params = cfg.model_params()?;
    let phi = resolve_config_phi(cfg, &params)?;
    let engine = cfg.engine_config();
    let n_list = cfg.n_list();
    let reps = cfg.reps();
    fs::create_dir_all(dir)?;

    let mut files = Vec::new();
    let mut write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };

    let rate = rate_sweep(&phi, &n_list, &params, &engine)?;
    write("rate_sweep.csv", csv_with_header(&RATE_HEADER, &rate)?)?;

    let specs = cfg
        .mc
        .as_ref()
        .map(|m| m.strategies.clone())
        .unwrap_or_else(|| default_strategies(&params));
    let n_mc = *n_list.last().expect("validated nonempty");
    let mc = mc_rows(&specs, &phi, n_mc, &params, &engine, reps, seed)?;
    write("mc.csv", csv_with_header(&MC_HEADER, &mc)?)?;

    let ldp = match &cfg.ldp {
        Some(sec) => ldp_rows(sec)?,
        None => Vec::new(),
    };
    write("ldp.csv", csv_with_header(&LDP_HEADER, &ldp)?)?;

    let detect = match &cfg.detection {
        Some(d) => vec![detect_row(d, DetectMode::All, &engine, reps, seed)?],
        None => Vec::new(),
    };
    write("detect.csv", csv_with_header(&DETECT_HEADER, &detect)?)?;

    let outputs = REPORT_FILES[..4].iter().map(|s| s.to_string()).collect();
    let manifest_file = dir.join("manifest.json");
    Manifest::new("report", cfg, outputs).write(&manifest_file)?;
    files.push(manifest_file);

    let unsatisfied = rate.iter().filter(|r| !r.satisfied).map(|r| r.n).collect();
    Ok(ReportOutcome {
        files,
        rate,
        unsatisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            "phi = \"identity\"\n[run]\nn_list = [4, 16]\ngrid_points = 256\nreps = 2000\nseed = 5\n",
        )
        .unwrap()
    }

    #[test]
    fn headers_match_rows() {
        let head = |s: String| s.lines().next().unwrap().to_string();
        let mc = McRow {
            strategy: "constant:1".into(),
            n: 4,
            reps: 10,
            mean: 1.0,
            stderr: 0.0,
        };
        assert_eq!(head(csv_string(&[mc]).unwrap()), MC_HEADER.join(","));
        let d = DetectRow {
            n: 1,
            gamma_n: 0.0,
            c_alpha: 1.0,
            n1: None,
            miss_rate: None,
            miss_stderr: None,
            p: 0.5,
            fa_rate: None,
            fa_stderr: None,
            fa_bound: None,
        };
        let body = csv_string(&[d]).unwrap();
        assert_eq!(head(body.clone()), DETECT_HEADER.join(","));
        assert_eq!(body.lines().nth(1).unwrap(), "1,0.0,1.0,,,,0.5,,,");
        assert_eq!(
            csv_with_header::<McRow>(&MC_HEADER, &[]).unwrap(),
            "strategy,n,reps,mean,stderr\n"
        );
    }

    #[test]
    fn ldp_rows_mark_infinity_and_gaps() {
        let sec = LdpSection {
            sigma2: 1.0,
            x: vec![0.0, 1.0, 2.0],
            n: 10,
            family: None,
        };
        let body = csv_string(&ldp_rows(&sec).unwrap()).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], LDP_HEADER.join(","));
        assert!(lines[1].starts_with("0.0,inf,inf,,"), "{}", lines[1]);
        let at_mean: Vec<&str> = lines[2].split(',').collect();
        assert!(at_mean[1].parse::<f64>().unwrap().abs() < 1e-12);
        assert_eq!(&at_mean[2..], ["0.0", "", ""]);
    }

    #[test]
    fn report_is_reproducible() {
        let cfg = small_cfg();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_report(&cfg, a.path()).unwrap();
        run_report(&cfg, b.path()).unwrap();
        assert!(ra.unsatisfied.is_empty());
        for name in REPORT_FILES {
            let x = fs::read(a.path().join(name)).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let manifest = fs::read_to_string(a.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("\"seed\": 5"));
        assert!(manifest.contains("rademacher"));
    }

    #[test]
    fn report_needs_a_seed() {
        let mut cfg = small_cfg();
        cfg.run.seed = None;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run_report(&cfg, dir.path()),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn manifest_sits_next_to_csv() {
        assert_eq!(
            manifest_path(Path::new("out/sweep.csv")),
            PathBuf::from("out/sweep.manifest.json")
        );
    }
}
