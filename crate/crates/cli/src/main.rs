//! `sublin`: worst-case expectations, rate checks, simulation, large
//! deviations and energy detection from the command line.
//!
//! Every subcommand accepts `--config <file>`; flags override config keys.
//! Results go to stdout as CSV, or to `--output` together with a
//! `<stem>.manifest.json` reproducibility record.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sublinear_lln::config::{
    validate_n_list, ExperimentConfig, LdpSection, McSection, PhiSpec, VarianceRange,
};
use sublinear_lln::detection::{DetectionConfig, NoiseFamily};
use sublinear_lln::model::ModelSpec;
use sublinear_lln::runner::{
    self, csv_with_header, detect_row, ldp_rows, manifest_path, mc_rows, rate_sweep,
    resolve_config_phi, DetectMode, Manifest, DETECT_HEADER, LDP_HEADER, MC_HEADER, RATE_HEADER,
};
use sublinear_lln::DistributionSpec;

#[derive(Parser)]
#[command(
    name = "sublin",
    version,
    about = "Worst-case expectations over predictable strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Engine value for one n, compared with the limit and the rate bound.
    DpValue(DpValueArgs),
    /// The dp-value row for each n in a list.
    RateSweep(RateSweepArgs),
    /// Monte Carlo estimates of E[phi(W_n)] under given strategies.
    Mc(McArgs),
    /// Rate functions of squared Gaussian noise.
    Ldp(LdpArgs),
    /// Threshold, miss and false-alarm rates of the energy detector.
    Detect(DetectArgs),
    /// Every pipeline driven by one config, written into a directory.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write CSV here (plus `<stem>.manifest.json`) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Strategy interval `lo,hi`.
    #[arg(long, value_parser = parse_pair)]
    zeta: Option<(f64, f64)>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Law of Z, e.g. `rademacher` or `gaussian:0,1`.
    #[arg(long)]
    z: Option<DistributionSpec>,
    /// Law of K.
    #[arg(long)]
    k: Option<DistributionSpec>,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Catalog name or phi syntax.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Upper end of the m-grid.
    #[arg(long)]
    m_max: Option<f64>,
}

#[derive(Args)]
struct DpValueArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Also write the policy table (`step,m,lambda_star`).
    #[arg(long)]
    policy_out: Option<PathBuf>,
}

#[derive(Args)]
struct RateSweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// `constant:x`, `bangbang:t,lo,hi`, `policy`, `policy:<file>` or
    /// `scripted:<file>`; repeatable.
    #[arg(long)]
    strategy: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LdpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    /// Variance family `lo,hi,points`.
    #[arg(long, value_parser = parse_family)]
    family: Option<VarianceRange>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_pair)]
    zeta: Option<(f64, f64)>,
    /// Law of the fading factor.
    #[arg(long)]
    eps: Option<DistributionSpec>,
    /// Gaussian noise variance family `lo,hi` or `lo,hi,points`.
    #[arg(long, value_parser = parse_family)]
    noise_var: Option<VarianceRange>,
    #[arg(long, default_value = "threshold")]
    mode: DetectMode,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default `run.output`, then `report`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
}

fn parse_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number `{t}`: {e}"))
        })
        .collect()
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_numbers(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected `lo,hi`".into()),
    }
}

fn parse_family(s: &str) -> std::result::Result<VarianceRange, String> {
    match parse_numbers(s)?.as_slice() {
        [lo, hi] => Ok(VarianceRange {
            lo: *lo,
            hi: *hi,
            points: 33,
        }),
        [lo, hi, points] if points.fract() == 0.0 && *points >= 1.0 => Ok(VarianceRange {
            lo: *lo,
            hi: *hi,
            points: *points as usize,
        }),
        _ => Err("expected `lo,hi` or `lo,hi,points`".into()),
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            ExperimentConfig::load(p).with_context(|| format!("loading config {}", p.display()))
        }
        None => Ok(ExperimentConfig::default()),
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        let mut m: ModelSpec = cfg.model_spec();
        if let Some((lo, hi)) = self.zeta {
            m.zeta_lo = lo;
            m.zeta_hi = hi;
        }
        if let Some(a) = self.alpha {
            m.alpha = a;
        }
        if let Some(z) = &self.z {
            m.z = z.clone();
        }
        if let Some(k) = &self.k {
            m.k = k.clone();
        }
        cfg.model = Some(m);
    }
}

impl EngineArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(phi) = &self.phi {
            cfg.phi = Some(PhiSpec::Text(phi.clone()));
        }
        if self.grid_points.is_some() {
            cfg.run.grid_points = self.grid_points;
        }
        if self.quad_nodes.is_some() {
            cfg.run.quad_nodes = self.quad_nodes;
        }
        if self.m_max.is_some() {
            cfg.run.m_max = self.m_max;
        }
    }
}

/// Writes `body` to `output` with a manifest, or to stdout.
fn emit(command: &str, cfg: &ExperimentConfig, output: Option<&Path>, body: &str) -> Result<()> {
    match output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Manifest::new(command, cfg, vec![name]).write(&manifest_path(path))?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn output_of(common: &Common, cfg: &ExperimentConfig) -> Option<PathBuf> {
    common.output.clone().or_else(|| cfg.run.output.clone())
}

fn finish_rates(rows: &[sublinear_lln::engine::RateReport]) -> ExitCode {
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.satisfied)
        .map(|r| r.n.to_string())
        .collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "rate bound not satisfied at n = {} ({} of {} rows)",
            failed.join(", "),
            failed.len(),
            rows.len()
        );
        ExitCode::FAILURE
    }
}

fn dp_value(args: DpValueArgs) -> Result<ExitCode> {
    let mut cfg = load(args.common.config.as_deref())?;
    args.model.apply(&mut cfg);
    args.engine.apply(&mut cfg);
    let n = match args.n {
        Some(n) => n,
        None => *cfg.n_list().last().expect("nonempty"),
    };
    cfg.run.n_list = Some(vec![n]);
    cfg.validate()?;
    let params = cfg.model_params()?;
    let phi = resolve_config_phi(&cfg, &params)?;
    let (sol, report) = runner::dp_value(&phi, n, &params, &cfg.engine_config())?;
    if let Some(path) = &args.policy_out {
        sol.policy
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let rows = [report];
    let body = csv_with_header(&RATE_HEADER, &rows)?;
    emit(
        "dp-value",
        &cfg,
        output_of(&args.common, &cfg).as_deref(),
        &body,
    )?;
    Ok(finish_rates(&rows))
}

fn rate_sweep_cmd(args: RateSweepArgs) -> Result<ExitCode> {
    let mut cfg = load(args.common.config.as_deref())?;
    args.model.apply(&mut cfg);
    args.engine.apply(&mut cfg);
    if let Some(list) = args.n_list {
        validate_n_list(&list)?;
        cfg.run.n_list = Some(list);
    }
    cfg.validate()?;
    let params = cfg.model_params()?;
    let phi = resolve_config_phi(&cfg, &params)?;
    let rows = rate_sweep(&phi, &cfg.n_list(), &params, &cfg.engine_config())?;
    let body = csv_with_header(&RATE_HEADER, &rows)?;
    emit(
        "rate-sweep",
        &cfg,
        output_of(&args.common, &cfg).as_deref(),
        &body,
    )?;
    Ok(finish_rates(&rows))
}

fn mc(args: McArgs) -> Result<ExitCode> {
    let mut cfg = load(args.common.config.as_deref())?;
    args.model.apply(&mut cfg);
    args.engine.apply(&mut cfg);
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.reps.is_some() {
        cfg.run.reps = args.reps;
    }
    if let Some(n) = args.n {
        cfg.run.n_list = Some(vec![n]);
    }
    if !args.strategy.is_empty() {
        cfg.mc = Some(McSection {
            strategies: args.strategy.clone(),
        });
    }
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    let params = cfg.model_params()?;
    let phi = resolve_config_phi(&cfg, &params)?;
    let specs = match &cfg.mc {
        Some(m) if !m.strategies.is_empty() => m.strategies.clone(),
        _ => runner::default_strategies(&params),
    };
    let n = *cfg.n_list().last().expect("nonempty");
    let rows = mc_rows(
        &specs,
        &phi,
        n,
        &params,
        &cfg.engine_config(),
        cfg.reps(),
        seed,
    )?;
    let body = csv_with_header(&MC_HEADER, &rows)?;
    emit("mc", &cfg, output_of(&args.common, &cfg).as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

fn ldp(args: LdpArgs) -> Result<ExitCode> {
    let mut cfg = load(args.common.config.as_deref())?;
    let mut sec = cfg.ldp.clone().unwrap_or(LdpSection {
        sigma2: 1.0,
        x: vec![1.5, 2.0],
        n: 10,
        family: None,
    });
    if let Some(s) = args.sigma2 {
        sec.sigma2 = s;
    }
    if let Some(x) = args.x {
        sec.x = x;
    }
    if let Some(n) = args.n {
        sec.n = n;
    }
    if args.family.is_some() {
        sec.family = args.family;
    }
    cfg.ldp = Some(sec);
    cfg.validate()?;
    let rows = ldp_rows(cfg.ldp.as_ref().expect("set above"))?;
    let body = csv_with_header(&LDP_HEADER, &rows)?;
    emit("ldp", &cfg, output_of(&args.common, &cfg).as_deref(), &body)?;
    Ok(ExitCode::SUCCESS)
}

/// Rademacher fading, `ζ ∈ [1, 1.1]`, Gaussian noise with variance in
/// `[0.04, 0.09]`, `α = 1`, `p = 0.5`, `n = 1024`.
fn default_detection() -> DetectionConfig {
    DetectionConfig {
        p: 0.5,
        n: 1024,
        alpha: 1.0,
        zeta_lo: 1.0,
        zeta_hi: 1.1,
        eps: DistributionSpec::Rademacher,
        noise: NoiseFamily::Gaussian {
            var_lo: 0.04,
            var_hi: 0.09,
            points: 33,
        },
    }
}

fn detect(args: DetectArgs) -> Result<ExitCode> {
    let mut cfg = load(args.common.config.as_deref())?;
    args.engine.apply(&mut cfg);
    let mut d = cfg.detection.clone().unwrap_or_else(default_detection);
    if let Some(p) = args.p {
        d.p = p;
    }
    if let Some(n) = args.n {
        d.n = n;
    }
    if let Some(a) = args.alpha {
        d.alpha = a;
    }
    if let Some((lo, hi)) = args.zeta {
        d.zeta_lo = lo;
        d.zeta_hi = hi;
    }
    if let Some(e) = args.eps {
        d.eps = e;
    }
    if let Some(VarianceRange { lo, hi, points }) = args.noise_var {
        d.noise = NoiseFamily::Gaussian {
            var_lo: lo,
            var_hi: hi,
            points,
        };
    }
    cfg.detection = Some(d.clone());
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.reps.is_some() {
        cfg.run.reps = args.reps;
    }
    cfg.validate()?;
    let seed = match args.mode {
        DetectMode::Threshold => cfg.run.seed.unwrap_or(0),
        _ => cfg.require_seed()?,
    };
    let notes = runner::sample_size_notes(&d);
    let show = |v: Option<usize>| v.map_or("none below 2^53".to_string(), |n| n.to_string());
    eprintln!(
        "smallest n with gamma_n > 0: {}; N1: {}",
        show(notes.positive_threshold),
        show(notes.n1)
    );
    let row = detect_row(&d, args.mode, &cfg.engine_config(), cfg.reps(), seed)?;
    let body = csv_with_header(&DETECT_HEADER, &[row])?;
    emit(
        "detect",
        &cfg,
        output_of(&args.common, &cfg).as_deref(),
        &body,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let mut cfg = load(Some(&args.config))?;
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.reps.is_some() {
        cfg.run.reps = args.reps;
    }
    cfg.validate()?;
    let dir = args
        .output
        .or_else(|| cfg.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("report"));
    let outcome = runner::run_report(&cfg, &dir)?;
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(finish_rates(&outcome.rate))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::DpValue(a) => dp_value(a),
        Command::RateSweep(a) => rate_sweep_cmd(a),
        Command::Mc(a) => mc(a),
        Command::Ldp(a) => ldp(a),
        Command::Detect(a) => detect(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_pair("1,2.5").unwrap(), (1.0, 2.5));
        assert!(parse_pair("1").is_err());
        assert_eq!(parse_family("0.5,1").unwrap().points, 33);
        assert_eq!(parse_family("0.5,1,9").unwrap().points, 9);
        assert!(parse_family("0.5,1,2.5").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
