//! Posterior draws on disk: `<stem>_draws.csv` (one column per parameter),
//! `<stem>_manifest.json` (everything else) and, for SV fits,
//! `<stem>_paths.csv` (one column per stored path).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::PosteriorDraws;
use crate::priors::PriorConfig;
use crate::spec::ModelSpec;
use causvol_core::series::Series;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    spec: ModelSpec,
    param_names: Vec<String>,
    n_draws: usize,
    blocks: Vec<String>,
    acceptance_rates: Vec<f64>,
    seed: u64,
    data_fingerprint: String,
    priors: PriorConfig,
    n_paths: usize,
    volatility: Option<Series>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_matrix(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|e| io_err(path, e)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes the fit and returns the files created.
pub fn write_draws(fit: &PosteriorDraws, priors: &PriorConfig, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut out = Vec::new();
    let draws = dir.join(format!("{stem}_draws.csv"));
    write_matrix(&draws, &fit.param_names, fit.draws.iter().cloned())?;
    out.push(draws);
    if !fit.paths.is_empty() {
        let paths = dir.join(format!("{stem}_paths.csv"));
        let header: Vec<String> = (0..fit.paths.len()).map(|k| format!("path_{k}")).collect();
        let n = fit.paths[0].len();
        write_matrix(&paths, &header, (0..n).map(|t| fit.paths.iter().map(|p| p[t]).collect()))?;
        out.push(paths);
    }
    let manifest = Manifest {
        spec: fit.spec,
        param_names: fit.param_names.clone(),
        n_draws: fit.draws.len(),
        blocks: fit.blocks.clone(),
        acceptance_rates: fit.acceptance_rates.clone(),
        seed: fit.seed,
        data_fingerprint: fit.data_fingerprint.clone(),
        priors: *priors,
        n_paths: fit.paths.len(),
        volatility: fit.volatility.clone(),
    };
    let mpath = dir.join(format!("{stem}_manifest.json"));
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&mpath, e))?;
    text.push('\n');
    fs::write(&mpath, text).map_err(|e| io_err(&mpath, e))?;
    out.push(mpath);
    Ok(out)
}

/// Reads a fit written by [`write_draws`], with the priors it was run under.
pub fn read_draws(dir: &Path, stem: &str) -> Result<(PosteriorDraws, PriorConfig)> {
    let mpath = dir.join(format!("{stem}_manifest.json"));
    let text = fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| io_err(&mpath, e))?;
    let dpath = dir.join(format!("{stem}_draws.csv"));
    let (header, draws) = read_matrix(&dpath)?;
    if header != m.param_names || draws.len() != m.n_draws {
        return Err(io_err(&dpath, "draw file disagrees with its manifest"));
    }
    let paths = if m.n_paths > 0 {
        let ppath = dir.join(format!("{stem}_paths.csv"));
        let (_, rows) = read_matrix(&ppath)?;
        (0..m.n_paths).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
    } else {
        Vec::new()
    };
    Ok((
        PosteriorDraws {
            spec: m.spec,
            param_names: m.param_names,
            draws,
            blocks: m.blocks,
            acceptance_rates: m.acceptance_rates,
            seed: m.seed,
            data_fingerprint: m.data_fingerprint,
            paths,
            volatility: m.volatility,
        },
        m.priors,
    ))
}
