use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use latent_progress::andersen::{fit_andersen, AndersenConfig};
use latent_progress::diagnostics::{acceptance_report, posterior_predictive, psrf_multivariate, waic, WaicResult};
use latent_progress::io::{self, DichotomizeRule, ModelKind, RunConfig};
use latent_progress::mcmc::{derive_seed, run_chains, ChainConfig};
use latent_progress::par::{self, Execution};
use latent_progress::progress::{
    classify_progress, export_interaction_map, lambda_density_export, summarize_progress, MapReference,
};
use latent_progress::sim::{generate_group_scenario, run_replications, GroupScenario};
use latent_progress::stats::quantiles;
use latent_progress::{Error, MetricKind, PosteriorSamples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Cli, Command, Common, Metric, Scenario};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, configuration or usage.
    Invalid(String),
    /// Failure while running, including failed convergence checks.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Data(_) | Error::Schema(_) | Error::Dimension(_) | Error::Unsupported(_) => {
                CliError::Invalid(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn require_file(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} does not exist", path.display())))
    }
}

/// Configuration file (if any) with command-line overrides applied.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            require_file(path)?;
            RunConfig::from_file(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.chains {
        cfg.chains = v;
    }
    if let Some(v) = common.iters {
        cfg.iterations = Some(v);
    }
    if let Some(v) = common.burnin {
        cfg.burnin = Some(v);
    }
    if let Some(v) = common.thin {
        cfg.thin = v;
    }
    if let Some(v) = common.dim {
        cfg.dim = v;
    }
    if let Some(m) = common.metric {
        cfg.metric = match m {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::Poincare => MetricKind::Poincare,
        };
    }
    if let Some(v) = common.radius {
        cfg.radius = v;
    }
    if let Some(v) = &common.out {
        cfg.out = Some(v.clone());
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    argv: Vec<String>,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<T>,
}

/// Writes `run.json`: the command line and the fully resolved configuration.
fn write_echo<T: Serialize>(dir: &Path, command: &str, cfg: &RunConfig, details: Option<T>) -> Result<()> {
    let echo = Echo {
        argv: std::env::args().collect(),
        command,
        config: cfg,
        details,
    };
    io::write_json(&dir.join("run.json"), &echo)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig, default: &Path) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| default.to_path_buf());
    fs::create_dir_all(&dir).map_err(runtime)?;
    Ok(dir)
}

fn chain_dirs(fit: &Path) -> Result<Vec<PathBuf>> {
    require_file(fit)?;
    if fit.join("manifest.json").exists() {
        return Ok(vec![fit.to_path_buf()]);
    }
    let mut dirs: Vec<(usize, PathBuf)> = fs::read_dir(fit)
        .map_err(runtime)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let k = name.strip_prefix("chain_")?.parse().ok()?;
            Some((k, e.path()))
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Invalid(format!("{} contains no fitted chains", fit.display())));
    }
    Ok(dirs.into_iter().map(|(_, p)| p).collect())
}

fn load_chains(fit: &Path, dim: Option<usize>) -> Result<Vec<PosteriorSamples>> {
    chain_dirs(fit)?
        .iter()
        .map(|d| {
            let model = io::manifest_model(d)?;
            if model != "latent-process" {
                return Err(CliError::Invalid(format!("{} holds a {model} fit", d.display())));
            }
            Ok(match dim {
                Some(q) => io::load_samples_expecting(d, q)?,
                None => io::load_samples(d)?,
            })
        })
        .collect()
}

fn pooled(chains: &[PosteriorSamples]) -> Result<PosteriorSamples> {
    PosteriorSamples::pooled(chains).ok_or_else(|| CliError::Invalid("chains differ in shape".into()))
}

/// Per-chain log-likelihood matrices of a fit of either model.
fn fit_logliks(fit: &Path) -> Result<(String, Vec<Vec<Vec<f64>>>)> {
    let dirs = chain_dirs(fit)?;
    let model = io::manifest_model(&dirs[0])?;
    let lls = dirs
        .iter()
        .map(|d| match model.as_str() {
            "andersen" => Ok(io::load_andersen(d)?.0.loglik),
            _ => Ok(io::load_samples(d)?.loglik),
        })
        .collect::<Result<_>>()?;
    let label = if model == "andersen" {
        "andersen".to_string()
    } else {
        let s = io::load_samples(&dirs[0])?;
        let kind = match s.space().kind {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Poincare => "poincare",
        };
        format!("latent-process {kind} q={}", s.space().q)
    };
    Ok((label, lls))
}

fn scenario(which: Scenario, seed: u64) -> GroupScenario {
    match which {
        Scenario::N300 => GroupScenario::n300(seed),
        Scenario::N600 => GroupScenario::n600(seed),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Simulate { scenario: which } => simulate(&cfg, *which),
        Command::Fit { data } => fit(cfg, data.clone()),
        Command::Diagnose { fit } => diagnose(&cfg, fit),
        Command::Summarize { fit, ids } => summarize(&cfg, cli.common.dim, fit, ids),
        Command::Predict { fit, data, draws } => predict(&cfg, fit, data.as_deref(), *draws),
        Command::ExportMap { fit } => export_map(&cfg, cli.common.dim, fit),
        Command::Compare { fits } => compare(&cfg, fits),
        Command::Study {
            scenario: which,
            reps,
            dims,
            shorten,
        } => study(&cfg, *which, *reps, dims, *shorten),
        Command::Dichotomize { input, map } => dichotomize(&cfg, input, map.as_deref()),
    }
}

fn simulate(cfg: &RunConfig, which: Scenario) -> Result<()> {
    let sc = scenario(which, cfg.seed);
    let (data, labels) = generate_group_scenario(&sc)?;
    let dir = out_dir(cfg, Path::new("."))?;
    io::save_responses(&dir.join("responses.csv"), &data)?;
    let mut w = io::csv_writer(&dir.join("groups.csv"))?;
    w.write_record(["individual", "group"]).map_err(runtime)?;
    for (i, g) in labels.iter().enumerate() {
        w.write_record([(i + 1).to_string(), (g + 1).to_string()]).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    write_echo(&dir, "simulate", cfg, Some(&sc))?;
    println!("wrote {} individuals x {} items x 2 times to {}", data.n(), data.p(), dir.display());
    Ok(())
}

fn fit(mut cfg: RunConfig, data: Option<PathBuf>) -> Result<()> {
    if let Some(d) = data {
        cfg.input = Some(d);
    }
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Invalid("no response file given".into()))?;
    require_file(&input)?;
    cfg.validate()?;
    let data = io::load_responses(&input)?;
    data.validate_coverage()?;
    let dir = out_dir(&cfg, Path::new("fit"))?;
    let chain_cfg = cfg.chain_config()?;

    match cfg.model {
        ModelKind::LatentProcess => {
            let chains = run_chains(&data, &chain_cfg, cfg.chains, Execution::Parallel)?;
            for (k, s) in chains.iter().enumerate() {
                io::persist_samples(s, &dir.join(format!("chain_{}", k + 1)))?;
            }
        }
        ModelKind::Andersen => {
            let base = AndersenConfig {
                iterations: chain_cfg.iterations,
                burnin: chain_cfg.burnin,
                thin: chain_cfg.thin,
                seed: chain_cfg.seed,
                hyper: chain_cfg.hyper,
                init_sigma_alpha2: chain_cfg.init.sigma_alpha2,
                execution: chain_cfg.execution,
            };
            let fits = par::map_indexed(Execution::Parallel, cfg.chains, |k| {
                let c = AndersenConfig {
                    seed: derive_seed(base.seed, k as u64),
                    ..base.clone()
                };
                fit_andersen(&data, &c).map(|s| (s, c))
            });
            for (k, f) in fits.into_iter().enumerate() {
                let (s, c) = f?;
                io::persist_andersen(&s, &c, &dir.join(format!("chain_{}", k + 1)))?;
            }
        }
    }
    io::save_responses(&dir.join("responses.csv"), &data)?;
    write_echo::<()>(&dir, "fit", &cfg, None)?;
    println!("fitted {} chain(s); draws in {}", cfg.chains, dir.display());
    Ok(())
}

#[derive(Serialize)]
struct WaicReport {
    pooled: WaicResult,
    chains: Vec<WaicResult>,
}

fn diagnose(cfg: &RunConfig, fit: &Path) -> Result<()> {
    let dir = out_dir(cfg, fit)?;
    let (label, lls) = fit_logliks(fit)?;
    let per_chain = lls.iter().map(|ll| waic(ll)).collect::<std::result::Result<Vec<_>, _>>()?;
    let all: Vec<Vec<f64>> = lls.into_iter().flatten().collect();
    let report = WaicReport {
        pooled: waic(&all)?,
        chains: per_chain,
    };
    io::write_json(&dir.join("waic.json"), &report)?;
    println!("{label}: WAIC {:.3} (p_waic {:.3})", report.pooled.waic, report.pooled.p_waic);

    if label.starts_with("andersen") {
        write_echo::<()>(&dir, "diagnose", cfg, None)?;
        return Ok(());
    }
    let chains = load_chains(fit, None)?;
    let reports: Vec<_> = chains.iter().map(acceptance_report).collect();
    #[derive(Serialize)]
    struct Acc<T> {
        chains: Vec<T>,
    }
    io::write_json(&dir.join("acceptance.json"), &Acc { chains: reports.clone() })?;
    for (k, r) in reports.iter().enumerate() {
        for (name, b) in [("lambda", r.lambda), ("a1", r.a1), ("b", r.b)] {
            if b.flagged {
                eprintln!("warning: chain {} {name} acceptance rate {:.3}", k + 1, b.rate.unwrap_or(f64::NAN));
            }
        }
    }
    write_echo::<()>(&dir, "diagnose", cfg, None)?;
    if chains.len() < 2 {
        println!("PSRF needs at least two chains; skipped");
        return Ok(());
    }
    let mats: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| c.monitored_matrix()).collect();
    let psrf = match psrf_multivariate(&mats) {
        Ok(p) => p,
        Err(e @ (Error::InsufficientSamples(_) | Error::Degenerate(_))) => {
            #[derive(Serialize)]
            struct NotComputed {
                psrf: Option<f64>,
                reason: String,
            }
            let reason = e.to_string();
            io::write_json(&dir.join("psrf.json"), &NotComputed { psrf: None, reason: reason.clone() })?;
            return Err(CliError::Runtime(format!("PSRF not computed: {reason}")));
        }
        Err(e) => return Err(e.into()),
    };
    io::write_json(&dir.join("psrf.json"), &psrf)?;
    println!(
        "PSRF {:.6} (cutoff {:.6}, {} parameters, {} chains)",
        psrf.psrf, psrf.cutoff, psrf.n_params, psrf.n_chains
    );
    if !psrf.converged() {
        return Err(CliError::Runtime(format!(
            "PSRF {:.6} exceeds the cutoff {:.6}; the chains have not converged",
            psrf.psrf, psrf.cutoff
        )));
    }
    Ok(())
}

fn summarize(cfg: &RunConfig, dim: Option<usize>, fit: &Path, ids: &[usize]) -> Result<()> {
    let dir = out_dir(cfg, fit)?;
    let samples = pooled(&load_chains(fit, dim)?)?;
    let summaries = summarize_progress(&samples)?;
    let classification = classify_progress(&summaries, cfg.threshold, None)?;
    #[derive(Serialize)]
    struct Report<'a> {
        threshold: f64,
        summaries: &'a [latent_progress::progress::ProgressSummary],
        progress: &'a [bool],
    }
    io::write_json(
        &dir.join("summaries.json"),
        &Report {
            threshold: cfg.threshold,
            summaries: &summaries,
            progress: &classification.progress,
        },
    )?;
    let individuals: Vec<usize> = if ids.is_empty() {
        (0..samples.n).collect()
    } else {
        ids.iter()
            .map(|&i| {
                if i == 0 || i > samples.n {
                    Err(CliError::Invalid(format!("individual {i} out of range 1..={}", samples.n)))
                } else {
                    Ok(i - 1)
                }
            })
            .collect::<Result<_>>()?
    };
    let pairs: Vec<(usize, usize)> = individuals
        .iter()
        .flat_map(|&i| (1..samples.times).map(move |t| (i, t)))
        .collect();
    let curves = lambda_density_export(&samples, &pairs)?;
    let mut w = io::csv_writer(&dir.join("density.csv"))?;
    w.write_record(["individual", "time", "lambda", "density"]).map_err(runtime)?;
    for c in &curves {
        for (x, d) in c.grid.iter().zip(&c.density) {
            w.write_record([(c.individual + 1).to_string(), c.time.to_string(), x.to_string(), d.to_string()])
                .map_err(runtime)?;
        }
    }
    w.flush().map_err(runtime)?;
    write_echo::<()>(&dir, "summarize", cfg, None)?;
    let progressing = classification.progress.iter().filter(|&&p| p).count();
    println!("{progressing} of {} rates show non-negligible progress", summaries.len());
    Ok(())
}

fn predict(cfg: &RunConfig, fit: &Path, data: Option<&Path>, draws: usize) -> Result<()> {
    let dir = out_dir(cfg, fit)?;
    let data_path = data.map_or_else(|| fit.join("responses.csv"), Path::to_path_buf);
    require_file(&data_path)?;
    let data = io::load_responses(&data_path)?;
    let samples = pooled(&load_chains(fit, None)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ppc = posterior_predictive(&data, &samples, draws, &mut rng)?;
    let mut w = io::csv_writer(&dir.join("ppc.csv"))?;
    w.write_record(["individual", "time", "observed", "lo", "mid", "hi"]).map_err(runtime)?;
    for r in &ppc.rows {
        w.write_record([
            (r.individual + 1).to_string(),
            r.time.to_string(),
            r.observed.to_string(),
            r.lo.to_string(),
            r.mid.to_string(),
            r.hi.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    write_echo::<()>(&dir, "predict", cfg, None)?;
    println!("{:.1}% of observed proportions inside their 95% predictive intervals", 100.0 * ppc.coverage());
    Ok(())
}

fn export_map(cfg: &RunConfig, dim: Option<usize>, fit: &Path) -> Result<()> {
    let dir = out_dir(cfg, fit)?;
    let samples = pooled(&load_chains(fit, dim)?)?;
    let map = export_interaction_map(&samples, MapReference::MaxPosterior)?;
    let mut w = io::csv_writer(&dir.join("map.csv"))?;
    let mut header = vec!["kind".to_string(), "id".to_string(), "time".to_string()];
    header.extend((1..=map.q).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(runtime)?;
    for r in &map.rows {
        let kind = match r.kind {
            latent_progress::progress::EntityKind::Individual => "individual",
            latent_progress::progress::EntityKind::Item => "item",
            latent_progress::progress::EntityKind::Target => "target",
        };
        let id = match r.kind {
            latent_progress::progress::EntityKind::Target => String::new(),
            _ => (r.id + 1).to_string(),
        };
        let mut row = vec![kind.to_string(), id, r.time.map_or_else(String::new, |t| t.to_string())];
        row.extend(r.coords.iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    write_echo::<()>(&dir, "export-map", cfg, None)?;
    println!("wrote {} map rows", map.rows.len());
    Ok(())
}

#[derive(Serialize, Clone)]
struct CompareRow {
    model: String,
    fit: PathBuf,
    waic_q10: f64,
    waic_median: f64,
    waic_q90: f64,
    minimizer: bool,
}

fn compare(cfg: &RunConfig, fits: &[PathBuf]) -> Result<()> {
    let dir = out_dir(cfg, Path::new("."))?;
    let mut rows = fits
        .iter()
        .map(|f| {
            let (model, lls) = fit_logliks(f)?;
            let w = lls.iter().map(|ll| Ok(waic(ll)?.waic)).collect::<Result<Vec<f64>>>()?;
            let qs = quantiles(&w, &[0.1, 0.5, 0.9]);
            Ok(CompareRow {
                model,
                fit: f.clone(),
                waic_q10: qs[0],
                waic_median: qs[1],
                waic_q90: qs[2],
                minimizer: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(best) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.waic_median.total_cmp(&b.1.waic_median))
        .map(|(k, _)| k)
    {
        rows[best].minimizer = true;
    }
    let mut w = io::csv_writer(&dir.join("compare.csv"))?;
    w.write_record(["model", "waic_q10", "waic_median", "waic_q90", "minimizer"])
        .map_err(runtime)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{:<32} {:>12} {:>12} {:>12}  minimizer", "model", "10%", "median", "90%").map_err(runtime)?;
    for r in &rows {
        w.write_record([
            r.model.clone(),
            r.waic_q10.to_string(),
            r.waic_median.to_string(),
            r.waic_q90.to_string(),
            r.minimizer.to_string(),
        ])
        .map_err(runtime)?;
        writeln!(
            stdout,
            "{:<32} {:>12.2} {:>12.2} {:>12.2}  {}",
            r.model,
            r.waic_q10,
            r.waic_median,
            r.waic_q90,
            if r.minimizer { "yes" } else { "" }
        )
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    #[derive(Serialize)]
    struct Report {
        rows: Vec<CompareRow>,
    }
    io::write_json(&dir.join("compare.json"), &Report { rows })?;
    write_echo::<()>(&dir, "compare", cfg, None)?;
    Ok(())
}

fn study(cfg: &RunConfig, which: Scenario, reps: usize, dims: &[usize], shorten: usize) -> Result<()> {
    let sc = scenario(which, cfg.seed);
    let dir = out_dir(cfg, Path::new("study"))?;
    let (iters, burnin, thin) = (cfg.iterations, cfg.burnin, cfg.thin);
    let hyper = cfg.hyper();
    let per_q = move |q: usize| -> ChainConfig {
        let base = match which {
            Scenario::N300 => ChainConfig::simulation_defaults(q),
            Scenario::N600 => ChainConfig::large_simulation_defaults(q),
        };
        let mut c = base.shortened(shorten);
        c.iterations = iters.unwrap_or(c.iterations);
        c.burnin = burnin.unwrap_or(c.burnin);
        c.thin = thin;
        c.hyper = hyper;
        c
    };
    for &q in dims {
        per_q(q).validate()?;
    }
    let report = run_replications(&sc, dims, per_q, reps, cfg.threshold, Execution::Parallel)?;
    io::write_json(&dir.join("study.json"), &report)?;
    write_echo::<()>(&dir, "study", cfg, None)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>10}", "q", "10%", "median", "90%", "minimizer");
    for d in &report.dimensions {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        println!(
            "{:>3} {:>12} {:>12} {:>12} {:>9.1}%",
            d.q,
            f(d.waic_q10),
            f(d.waic_median),
            f(d.waic_q90),
            100.0 * d.minimizer_frequency
        );
    }
    if !report.failed_replicates.is_empty() {
        eprintln!("warning: {} replicate(s) failed", report.failed_replicates.len());
    }
    Ok(())
}

fn parse_map(spec: &str) -> Result<DichotomizeRule> {
    let map = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Invalid(format!("bad map entry {pair:?}; expected category:bit")))?;
            let k: u32 = k.trim().parse().map_err(|_| CliError::Invalid(format!("bad category {k:?}")))?;
            let v: u8 = match v.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(CliError::Invalid(format!("bad bit {other:?}"))),
            };
            Ok((k, v))
        })
        .collect::<Result<_>>()?;
    Ok(DichotomizeRule::Custom(map))
}

fn dichotomize(cfg: &RunConfig, input: &Path, map: Option<&str>) -> Result<()> {
    require_file(input)?;
    let rule = match map {
        Some(m) => parse_map(m)?,
        None => DichotomizeRule::Cesd,
    };
    let dir = out_dir(cfg, Path::new("."))?;
    let reader = fs::File::open(input).map_err(runtime)?;
    let mut out = std::io::BufWriter::new(fs::File::create(dir.join("responses.csv")).map_err(runtime)?);
    let rows = io::dichotomize(reader, &mut out, &rule)?;
    out.flush().map_err(runtime)?;
    write_echo(&dir, "dichotomize", cfg, Some(&rule))?;
    println!("dichotomized {rows} rows");
    Ok(())
}
