//! Stage orchestration. Stages run in dependency order:
//! data, summary, volatility, unit_root, bds, granger, nonparam, quantile.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use causvol_core::Series;

use crate::config::LoadedConfig;
use crate::data::{self, ReadError};
use crate::error::{RunError, StageError};
use crate::manifest::{sha256_file, RunManifest, StageRecord, StageStatus, TIMINGS_FILE};
use crate::report::write_text;
use crate::stages::{causality, diagnostics, summary, volatility, Context, SeedRegistry, StageOutput};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub output_dir: PathBuf,
    pub errors: Vec<StageError>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<RunManifest, RunError> {
        if self.errors.is_empty() {
            Ok(self.manifest)
        } else {
            Err(RunError::Stages(self.errors))
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

struct Recorder<'a> {
    dir: &'a Path,
    records: Vec<StageRecord>,
    tables: Vec<String>,
    written: Vec<PathBuf>,
    timings: Vec<(String, f64)>,
    errors: Vec<StageError>,
}

impl Recorder<'_> {
    fn skip(&mut self, name: &str) {
        self.records.push(StageRecord {
            name: name.into(),
            status: StageStatus::Skipped,
            errors: vec![],
            warnings: vec![],
            files: vec![],
        });
    }

    fn record(&mut self, name: &str, out: StageOutput, started: Instant) -> Result<(), RunError> {
        let mut files = Vec::new();
        let mut warnings = Vec::new();
        for t in &out.tables {
            if t.rows.is_empty() {
                warnings.push(format!("table {} is empty; nothing written", t.id));
                continue;
            }
            for p in t.write(self.dir)? {
                files.push(p);
            }
            self.tables.push(t.id.clone());
        }
        for (n, text) in &out.files {
            let p = self.dir.join(n);
            write_text(&p, text)?;
            files.push(p);
        }
        files.extend(out.written);
        let rel: Vec<String> = files.iter().map(|p| relative(self.dir, p)).collect();
        self.written.extend(files);
        let status = if out.errors.is_empty() { StageStatus::Ok } else { StageStatus::Failed };
        self.records.push(StageRecord {
            name: name.into(),
            status,
            errors: out.errors.iter().map(|e| e.message.clone()).collect(),
            warnings,
            files: rel,
        });
        self.errors.extend(out.errors);
        self.timings.push((name.into(), started.elapsed().as_secs_f64()));
        Ok(())
    }
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir)
        .unwrap_or(p)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Runs every configured stage. Config errors abort before any output; stage
/// errors are collected and the remaining stages still run.
pub fn run(lc: &LoadedConfig, output_override: Option<&Path>) -> Result<RunOutcome, RunError> {
    let cfg = &lc.config;
    let dir = output_override.map(Path::to_path_buf).unwrap_or_else(|| lc.output_dir());
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let mut seeds = SeedRegistry::new(cfg.seed);
    let mut rec = Recorder {
        dir: &dir,
        records: Vec::new(),
        tables: Vec::new(),
        written: Vec::new(),
        timings: Vec::new(),
        errors: Vec::new(),
    };

    let started = Instant::now();
    let dataset = match data::read(lc) {
        Err(ReadError::Config(e)) => return Err(e.into()),
        Err(ReadError::Stage(e)) => Err(e),
        Ok(raw) => data::build(lc, raw),
    };
    let dataset = match dataset {
        Ok(d) => {
            rec.record("data", StageOutput::default(), started)?;
            Some(d)
        }
        Err(e) => {
            let mut out = StageOutput::default();
            out.errors.push(e);
            rec.record("data", out, started)?;
            None
        }
    };

    if let Some(ds) = &dataset {
        let none = BTreeMap::new();
        let mut ctx = Context {
            config: cfg,
            data: ds,
            volatility: &none,
            output_dir: &dir,
        };
        if cfg.summary.is_some() {
            let t = Instant::now();
            rec.record(summary::STAGE, summary::run(&ctx), t)?;
        } else {
            rec.skip(summary::STAGE);
        }

        let vols: BTreeMap<String, Series> = if cfg.volatility.is_some() {
            let t = Instant::now();
            let (out, v) = volatility::run(&ctx, &mut seeds);
            rec.record(volatility::STAGE, out, t)?;
            v
        } else {
            rec.skip(volatility::STAGE);
            ds.supplied_volatility.clone()
        };
        ctx.volatility = &vols;

        type Plain = fn(&Context) -> StageOutput;
        let plain: [(&str, bool, Plain); 4] = [
            (diagnostics::UNIT_ROOT, cfg.unit_root.is_some(), diagnostics::unit_root),
            (diagnostics::BDS, cfg.bds.is_some(), diagnostics::bds),
            (causality::GRANGER, cfg.granger.is_some(), causality::granger),
            (causality::NONPARAM, cfg.nonparam.is_some(), causality::nonparam),
        ];
        for (name, on, f) in plain {
            if on {
                let t = Instant::now();
                rec.record(name, f(&ctx), t)?;
            } else {
                rec.skip(name);
            }
        }
        if cfg.quantile.is_some() {
            let t = Instant::now();
            rec.record(causality::QUANTILE, causality::quantile(&ctx, &mut seeds), t)?;
        } else {
            rec.skip(causality::QUANTILE);
        }
    }

    let mut timings = serde_json::Map::new();
    for (n, s) in &rec.timings {
        timings.insert(n.clone(), serde_json::json!(s));
    }
    let tpath = dir.join(TIMINGS_FILE);
    write_text(&tpath, &(serde_json::to_string_pretty(&timings).map_err(|e| io(&tpath, e))? + "\n"))?;

    let mut files = BTreeMap::new();
    for p in &rec.written {
        files.insert(relative(&dir, p), sha256_file(p)?);
    }
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        version: VERSION.into(),
        master_seed: cfg.seed,
        seeds: seeds.issued,
        stages: rec.records,
        tables: rec.tables,
        files,
        timings: TIMINGS_FILE.into(),
    };
    manifest.write(&dir)?;
    Ok(RunOutcome {
        manifest,
        output_dir: dir.clone(),
        errors: rec.errors,
    })
}
