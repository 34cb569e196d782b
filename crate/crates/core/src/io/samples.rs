//! Directory layout for persisted chains:
//!
//! - `manifest.json`: dimensions, configuration echo, seed, retained count
//! - `params.csv`: log posterior, gamma, sigma_alpha^2, alpha, beta
//! - `positions.csv`: initial positions and item positions
//! - `lambda.csv`: rates of progress
//! - `r.csv`: mixture indicators and their prior weights
//! - `loglik.csv`: pointwise log-likelihood of every observed cell
//!
//! Every row starts with the sweep number. Floats are written in their
//! shortest round-trip form, so loading restores them bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{csv_reader, csv_writer, read_json, write_json};
use crate::andersen::{AndersenConfig, AndersenParams, AndersenSamples};
use crate::error::{Error, Result};
use crate::mcmc::{AcceptanceCounts, ChainConfig, Draw, PosteriorSamples, ProposalScales};
use crate::model::{LatentState, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model: String,
    pub n: usize,
    pub p: usize,
    pub times: usize,
    pub q: usize,
    pub n_observed: usize,
    pub retained: usize,
    pub seed: u64,
    pub config: ChainConfig,
    pub acceptance: AcceptanceCounts,
    pub proposal_scales: ProposalScales,
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn write_table(dir: &Path, name: &str, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(&dir.join(name))?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn rate_labels(prefix: &str, n: usize, times: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).flat_map(move |i| (2..=times).map(move |t| format!("{prefix}_{i}_{t}")))
}

pub fn persist_samples(samples: &PosteriorSamples, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (n, p, times, q) = (samples.n, samples.p, samples.times, samples.space().q);
    let n_observed = samples.loglik.first().map_or(0, Vec::len);
    let manifest = Manifest {
        model: "latent-process".into(),
        n,
        p,
        times,
        q,
        n_observed,
        retained: samples.len(),
        seed: samples.seed(),
        config: samples.config.clone(),
        acceptance: samples.acceptance,
        proposal_scales: samples.proposal_scales,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    let it = |d: &Draw| d.iteration.to_string();
    let mut header = vec!["iteration".into(), "log_posterior".into(), "gamma".into(), "sigma_alpha2".into()];
    header.extend((1..=n).map(|i| format!("alpha_{i}")));
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    write_table(
        dir,
        "params.csv",
        header,
        samples.draws.iter().map(|d| {
            let mut row = vec![it(d), fmt(d.log_posterior), fmt(d.params.gamma), fmt(d.params.sigma_alpha2)];
            row.extend(d.params.alpha.iter().chain(&d.params.beta).map(|&v| fmt(v)));
            row
        }),
    )?;

    let mut header = vec!["iteration".to_string()];
    header.extend((1..=n).flat_map(|i| (1..=q).map(move |k| format!("a1_{i}_{k}"))));
    header.extend((1..=p).flat_map(|j| (1..=q).map(move |k| format!("b_{j}_{k}"))));
    write_table(
        dir,
        "positions.csv",
        header,
        samples.draws.iter().map(|d| {
            let mut row = vec![it(d)];
            row.extend(d.state.a1.iter().chain(&d.state.b).map(|&v| fmt(v)));
            row
        }),
    )?;

    let mut header = vec!["iteration".to_string()];
    header.extend(rate_labels("lambda", n, times));
    write_table(
        dir,
        "lambda.csv",
        header,
        samples.draws.iter().map(|d| {
            let mut row = vec![it(d)];
            row.extend(d.state.lambda.iter().map(|&v| fmt(v)));
            row
        }),
    )?;

    let mut header = vec!["iteration".to_string()];
    header.extend(rate_labels("r", n, times));
    header.extend(rate_labels("pi", n, times));
    write_table(
        dir,
        "r.csv",
        header,
        samples.draws.iter().map(|d| {
            let mut row = vec![it(d)];
            row.extend(d.state.r.iter().map(|v| v.to_string()));
            row.extend(d.state.pi.iter().map(|&v| fmt(v)));
            row
        }),
    )?;

    let mut header = vec!["iteration".to_string()];
    header.extend((1..=n_observed).map(|c| format!("cell_{c}")));
    write_table(
        dir,
        "loglik.csv",
        header,
        samples.draws.iter().zip(&samples.loglik).map(|(d, ll)| {
            let mut row = vec![it(d)];
            row.extend(ll.iter().map(|&v| fmt(v)));
            row
        }),
    )
}

/// Reads a table, checking its width and length; returns rows without the
/// leading iteration column and the iterations separately.
fn read_table(dir: &Path, name: &str, width: usize, rows: usize) -> Result<(Vec<usize>, Vec<Vec<String>>)> {
    let path = dir.join(name);
    let mut rdr = csv_reader(&path)?;
    let header_len = rdr.headers()?.len();
    if header_len != width + 1 {
        return Err(Error::Schema(format!("{name}: expected {} columns, found {header_len}", width + 1)));
    }
    let mut iterations = Vec::with_capacity(rows);
    let mut body = Vec::with_capacity(rows);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Schema(format!("{name}: {e}")))?;
        if rec.len() != width + 1 {
            return Err(Error::Schema(format!("{name}: truncated row {}", iterations.len() + 1)));
        }
        iterations.push(
            rec[0]
                .parse()
                .map_err(|_| Error::Schema(format!("{name}: bad iteration {:?}", &rec[0])))?,
        );
        body.push(rec.iter().skip(1).map(str::to_owned).collect());
    }
    if body.len() != rows {
        return Err(Error::Schema(format!("{name}: expected {rows} rows, found {}", body.len())));
    }
    Ok((iterations, body))
}

fn parse_f64s(name: &str, fields: &[String]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| Error::Schema(format!("{name}: bad number {s:?}"))))
        .collect()
}

pub fn load_samples(dir: &Path) -> Result<PosteriorSamples> {
    let m: Manifest = read_json(&dir.join("manifest.json"))?;
    if m.model != "latent-process" {
        return Err(Error::Schema(format!("unknown model tag {:?}", m.model)));
    }
    if m.config.space.q != m.q || m.times < 1 {
        return Err(Error::Schema("manifest dimensions are inconsistent".into()));
    }
    let (n, p, times, q, s) = (m.n, m.p, m.times, m.q, m.retained);
    let w = n * (times - 1);

    let (iters, params) = read_table(dir, "params.csv", 3 + n + p, s)?;
    let (iters_pos, positions) = read_table(dir, "positions.csv", (n + p) * q, s)?;
    let (iters_lam, lambda) = read_table(dir, "lambda.csv", w, s)?;
    let (iters_r, r) = read_table(dir, "r.csv", 2 * w, s)?;
    let (iters_ll, loglik) = read_table(dir, "loglik.csv", m.n_observed, s)?;
    if [&iters_pos, &iters_lam, &iters_r, &iters_ll].iter().any(|v| **v != iters) {
        return Err(Error::Schema("sample files disagree on iterations".into()));
    }

    let mut samples = PosteriorSamples::new(m.config.clone(), n, p, times);
    samples.acceptance = m.acceptance;
    samples.proposal_scales = m.proposal_scales;
    for k in 0..s {
        let pv = parse_f64s("params.csv", &params[k])?;
        let pos = parse_f64s("positions.csv", &positions[k])?;
        let rv = &r[k];
        let indicators = rv[..w]
            .iter()
            .map(|v| match v.as_str() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::Schema(format!("r.csv: indicator {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let draw = Draw {
            iteration: iters[k],
            params: ModelParams {
                alpha: pv[3..3 + n].to_vec(),
                beta: pv[3 + n..].to_vec(),
                gamma: pv[1],
                sigma_alpha2: pv[2],
            },
            state: LatentState {
                n,
                p,
                q,
                times,
                a1: pos[..n * q].to_vec(),
                b: pos[n * q..].to_vec(),
                lambda: parse_f64s("lambda.csv", &lambda[k])?,
                r: indicators,
                pi: parse_f64s("r.csv", &rv[w..])?,
            },
            log_posterior: pv[0],
        };
        samples.push(draw, parse_f64s("loglik.csv", &loglik[k])?);
    }
    Ok(samples)
}

/// Loads samples and checks they were fitted in dimension `q`.
pub fn load_samples_expecting(dir: &Path, q: usize) -> Result<PosteriorSamples> {
    let s = load_samples(dir)?;
    if s.space().q != q {
        return Err(Error::Dimension(format!("samples have q = {}, requested q = {q}", s.space().q)));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndersenManifest {
    pub model: String,
    pub n: usize,
    pub p: usize,
    pub times: usize,
    pub n_observed: usize,
    pub retained: usize,
    pub seed: u64,
    pub config: AndersenConfig,
}

/// Model tag of a persisted fit directory.
pub fn manifest_model(dir: &Path) -> Result<String> {
    let v: serde_json::Value = read_json(&dir.join("manifest.json"))?;
    v.get("model")
        .and_then(|m| m.as_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::Schema("manifest has no model tag".into()))
}

/// Same layout as the latent process model, restricted to `params.csv`
/// (sigma_alpha^2 and time-specific abilities) and `loglik.csv`.
pub fn persist_andersen(samples: &AndersenSamples, cfg: &AndersenConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (n, p, times) = (samples.n, samples.p, samples.times);
    let n_observed = samples.loglik.first().map_or(0, Vec::len);
    write_json(
        &dir.join("manifest.json"),
        &AndersenManifest {
            model: "andersen".into(),
            n,
            p,
            times,
            n_observed,
            retained: samples.draws.len(),
            seed: cfg.seed,
            config: cfg.clone(),
        },
    )?;
    let iteration = |k: usize| (cfg.burnin + (k + 1) * cfg.thin).to_string();
    let mut header = vec!["iteration".to_string(), "sigma_alpha2".to_string()];
    header.extend((1..=n).flat_map(|i| (1..=times).map(move |t| format!("alpha_{i}_{t}"))));
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    write_table(
        dir,
        "params.csv",
        header,
        samples.draws.iter().enumerate().map(|(k, d)| {
            let mut row = vec![iteration(k), fmt(d.sigma_alpha2)];
            row.extend(d.alpha.iter().chain(&d.beta).map(|&v| fmt(v)));
            row
        }),
    )?;
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=n_observed).map(|c| format!("cell_{c}")));
    write_table(
        dir,
        "loglik.csv",
        header,
        samples.loglik.iter().enumerate().map(|(k, ll)| {
            let mut row = vec![iteration(k)];
            row.extend(ll.iter().map(|&v| fmt(v)));
            row
        }),
    )
}

pub fn load_andersen(dir: &Path) -> Result<(AndersenSamples, AndersenConfig)> {
    let m: AndersenManifest = read_json(&dir.join("manifest.json"))?;
    if m.model != "andersen" {
        return Err(Error::Schema(format!("expected an andersen fit, found {:?}", m.model)));
    }
    let (n, p, times, s) = (m.n, m.p, m.times, m.retained);
    let (_, params) = read_table(dir, "params.csv", 1 + n * times + p, s)?;
    let (_, loglik) = read_table(dir, "loglik.csv", m.n_observed, s)?;
    let mut out = AndersenSamples {
        n,
        p,
        times,
        draws: Vec::with_capacity(s),
        loglik: Vec::with_capacity(s),
    };
    for k in 0..s {
        let v = parse_f64s("params.csv", &params[k])?;
        out.draws.push(AndersenParams {
            sigma_alpha2: v[0],
            alpha: v[1..1 + n * times].to_vec(),
            beta: v[1 + n * times..].to_vec(),
        });
        out.loglik.push(parse_f64s("loglik.csv", &loglik[k])?);
    }
    Ok((out, m.config))
}
