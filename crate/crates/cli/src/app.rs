//! Subcommand implementations shared by the binary and the tests.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use floquet_core::resonance::{analyze, write_spectrum_csv, ResonanceSettings};
use serde::Serialize;

use crate::cache::{Cache, CACHE_ENV};
use crate::config::{OracleConfig, OracleKind, ProblemConfig, RunConfig};
use crate::error::CliError;
use crate::figures::{figure, Dataset};
use crate::record::Mode;
use crate::run::{config_points, default_jobs, run_points, sweep_points, write_csv, write_records, PointOutcome};

/// Options common to all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub no_cache: bool,
    pub tol: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(t) = self.tol {
            cfg.solver.options.rel_tol = t;
            cfg.validate()?;
        }
        Ok(cfg)
    }

    fn cache(&self) -> Option<Cache> {
        if self.no_cache {
            return None;
        }
        Some(match &self.out {
            Some(o) => Cache::locate(o),
            None => match std::env::var_os(CACHE_ENV) {
                Some(d) if !d.is_empty() => Cache::new(d),
                _ => Cache::new(".floquet-cache"),
            },
        })
    }

    fn jobs(&self) -> usize {
        self.jobs.unwrap_or_else(default_jobs).max(1)
    }

    fn out_file(&self, name: &str) -> Result<Option<BufWriter<File>>, CliError> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(BufWriter::new(File::create(dir.join(name))?)))
            }
            None => Ok(None),
        }
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct Report {
    pub points: usize,
    pub cached: usize,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Report {
    fn absorb(&mut self, outcomes: &[PointOutcome]) {
        self.points += outcomes.len();
        self.cached += outcomes.iter().filter(|o| o.cached).count();
        self.failures.extend(outcomes.iter().filter_map(|o| o.failure.clone()));
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

fn emit_points(common: &Common, stem: &str, outcomes: &[PointOutcome], report: &mut Report) -> Result<(), CliError> {
    report.absorb(outcomes);
    match common.out_file(&format!("{stem}.csv"))? {
        Some(f) => {
            write_csv(outcomes, f)?;
            write_records(outcomes, common.out_file(&format!("{stem}.jsonl"))?.expect("out dir set"))?;
            let dir = common.out.as_ref().expect("out dir set");
            report.files.push(dir.join(format!("{stem}.csv")));
            report.files.push(dir.join(format!("{stem}.jsonl")));
        }
        None => write_csv(outcomes, io::stdout().lock())?,
    }
    Ok(())
}

fn timeout(cfg: &RunConfig) -> f64 {
    cfg.sweep.map_or(300.0, |s| s.timeout_s)
}

/// Static and driven solve with enhancement for the base point of the config.
pub fn run_solve(common: &Common) -> Result<Report, CliError> {
    let mut cfg = common.load()?;
    cfg.sweep = None;
    let cache = common.cache();
    let outcomes = run_points(config_points(&cfg, &Mode::Solve)?, 1, cache.as_ref(), timeout(&cfg));
    let mut report = Report::default();
    let record = &outcomes[0].record;
    match common.out_file(&format!("{}.json", cfg.label))? {
        Some(mut f) => {
            serde_json::to_writer_pretty(&mut f, record).map_err(|e| CliError::Io(e.into()))?;
            f.write_all(b"\n")?;
            report.files.push(common.out.as_ref().unwrap().join(format!("{}.json", cfg.label)));
            emit_points(common, &cfg.label, &outcomes, &mut report)?;
        }
        None => {
            report.absorb(&outcomes);
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, record).map_err(|e| CliError::Io(e.into()))?;
            out.write_all(b"\n")?;
        }
    }
    Ok(report)
}

pub fn run_sweep(common: &Common) -> Result<Report, CliError> {
    let cfg = common.load()?;
    if cfg.sweep.is_none() {
        return Err(CliError::Config("sweep needs a [sweep] section".into()));
    }
    let cache = common.cache();
    let outcomes = run_points(config_points(&cfg, &Mode::Solve)?, common.jobs(), cache.as_ref(), timeout(&cfg));
    let mut report = Report::default();
    emit_points(common, &cfg.label, &outcomes, &mut report)?;
    Ok(report)
}

pub fn run_oracle(common: &Common, kind: Option<OracleKind>) -> Result<Report, CliError> {
    let cfg = common.load()?;
    let oracle = match (kind, cfg.oracle) {
        (Some(k), Some(o)) => OracleConfig { kind: k, ..o },
        (Some(k), None) => OracleConfig::new(k),
        (None, Some(o)) => o,
        (None, None) => return Err(CliError::Config("oracle kind missing: use --kind or an [oracle] section".into())),
    };
    oracle.kind.check(&cfg.potential)?;
    let cache = common.cache();
    let outcomes = run_points(config_points(&cfg, &Mode::Oracle(oracle))?, common.jobs(), cache.as_ref(), timeout(&cfg));
    let mut report = Report::default();
    let stem = format!("{}-{}", cfg.label, serde_json::to_value(oracle.kind).unwrap().as_str().unwrap());
    emit_points(common, &stem, &outcomes, &mut report)?;
    Ok(report)
}

fn resonance_files(
    common: &Common,
    stem: &str,
    problem: &ProblemConfig,
    settings: &ResonanceSettings,
    report: &mut Report,
) -> Result<(), CliError> {
    let r = analyze(&problem.build()?, settings)?;
    report.points += 1;
    match common.out_file(&format!("{stem}.csv"))? {
        Some(f) => {
            write_spectrum_csv(&r, f)?;
            let mut j = common.out_file(&format!("{stem}.json"))?.unwrap();
            serde_json::to_writer_pretty(&mut j, &r).map_err(|e| CliError::Io(e.into()))?;
            let dir = common.out.as_ref().unwrap();
            report.files.push(dir.join(format!("{stem}.csv")));
            report.files.push(dir.join(format!("{stem}.json")));
        }
        None => write_spectrum_csv(&r, io::stdout().lock())?,
    }
    Ok(())
}

pub fn run_resonances(common: &Common) -> Result<Report, CliError> {
    let cfg = common.load()?;
    let settings = cfg.resonance.clone().unwrap_or_default();
    let mut report = Report::default();
    resonance_files(common, &format!("{}-resonances", cfg.label), &cfg.problem(), &settings, &mut report)?;
    Ok(report)
}

#[derive(Serialize)]
struct FigureMeta<'a> {
    id: &'a str,
    title: &'a str,
    notes: &'a [&'static str],
    series: Vec<String>,
}

pub fn run_figure(common: &Common, id: &str, points: Option<usize>) -> Result<Report, CliError> {
    let mut fig = figure(id)?;
    if let Some(n) = points {
        fig = fig.with_points(n);
    }
    let mut report = Report::default();
    let series = match &fig.dataset {
        Dataset::Sweeps(list) => {
            let mut all = Vec::new();
            for s in list {
                let mut solver = s.solver;
                if let Some(t) = common.tol {
                    solver.options.rel_tol = t;
                }
                all.extend(sweep_points(&s.label, &Mode::Solve, &s.base, &solver, &s.sweep)?);
            }
            let timeout = list.first().map_or(300.0, |s| s.sweep.timeout_s);
            let cache = common.cache();
            let outcomes = run_points(all, common.jobs(), cache.as_ref(), timeout);
            emit_points(common, fig.id, &outcomes, &mut report)?;
            list.iter().map(|s| s.label.clone()).collect()
        }
        Dataset::Resonances(problem, settings) => {
            resonance_files(common, fig.id, problem, settings, &mut report)?;
            vec!["spectrum".into()]
        }
    };
    if let Some(mut f) = common.out_file(&format!("{}.meta.json", fig.id))? {
        let meta = FigureMeta {
            id: fig.id,
            title: fig.title,
            notes: &fig.notes,
            series,
        };
        serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| CliError::Io(e.into()))?;
        report.files.push(common.out.as_ref().unwrap().join(format!("{}.meta.json", fig.id)));
    }
    Ok(report)
}

