//! Point evaluation, the parallel sweep runner and flat output.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use floquet_core::floquet::{
    adaptive_channel_count, relative_enhancement, solve, static_transmission, time_averaged_transmission,
    ScatteringProblem,
};
use floquet_core::oracles::{
    opaque_barrier, perturbative_sidebands, quivering_rectangular, static_coulomb, static_rectangular, wkb_gamow,
    BarrierRegime,
};
use floquet_core::setup::PotentialSpec;
use serde::Serialize;

use crate::cache::Cache;
use crate::config::{Axis, OracleConfig, OracleKind, ProblemConfig, RunConfig, SolverConfig, SweepSpec};
use crate::error::{config_error, CliError};
use crate::record::{finite, Mode, PointInput, ResultRecord, Summary, ECHO_SIDEBANDS, RECORD_SCHEMA};

/// One point of a sweep or figure.
#[derive(Debug, Clone)]
pub struct PointSpec {
    pub series: String,
    pub axis: Option<(Axis, f64)>,
    pub input: PointInput,
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub spec: PointSpec,
    pub record: ResultRecord,
    pub cached: bool,
    /// Solver error or exceeded time limit.
    pub failure: Option<String>,
}

fn json<T: Serialize>(v: &T) -> Option<serde_json::Value> {
    serde_json::to_value(v).ok()
}

fn describe(p: &ProblemConfig) -> String {
    let opt = |v: Option<f64>| v.map_or("-".into(), |x| format!("{x:e}"));
    format!(
        "E = {:e} eV, ω = {:e} eV, field = {:e} V/m, {} barrier {}, length {}, V1 = {:e} eV",
        p.energy_ev,
        p.drive.frequency_ev,
        p.drive.field_v_per_m,
        p.potential.name(),
        opt(p.potential.barrier()),
        opt(p.potential.length()),
        p.potential.offset()
    )
}

fn solve_summary(problem: &ScatteringProblem, solver: &SolverConfig) -> Result<Summary, CliError> {
    let opts = &solver.options;
    let (assisted, history) = if solver.adaptive {
        let a = adaptive_channel_count(problem, solver.target_deficit, solver.max_cutoff, opts)?;
        (a.result, Some(a.history))
    } else {
        (solve(problem, solver.cutoff, opts)?, None)
    };
    let reference = static_transmission(problem, opts)?;
    let mut s = Summary::from_result(&assisted);
    s.history = history;
    s.static_transmission = Some(reference.total_transmission);
    s.relative_enhancement = finite(relative_enhancement(&assisted, &reference));
    if solver.time_averaged {
        let t = time_averaged_transmission(problem.energy, &problem.potential, &problem.drive, &problem.particle, opts)?;
        s.time_averaged_transmission = Some(t.total_transmission);
    }
    Ok(s)
}

fn rectangular(p: &ScatteringProblem) -> Result<(f64, f64, f64), CliError> {
    match p.potential {
        PotentialSpec::Rectangular { height, length, offset } => Ok((height, length, offset)),
        _ => Err(config_error("this oracle needs a rectangular potential")),
    }
}

fn oracle_summary(problem: &ScatteringProblem, oracle: &OracleConfig) -> Result<Summary, CliError> {
    let (e, mu) = (problem.energy, problem.particle.mass);
    let totals = |t: f64, r: Option<f64>| Summary {
        total_transmission: Some(t),
        total_reflection: r,
        unitarity_deficit: r.map(|r| (1.0 - t - r).abs()),
        ..Summary::default()
    };
    Ok(match oracle.kind {
        OracleKind::StaticRectangular => {
            let (v0, l, v1) = rectangular(problem)?;
            let o = static_rectangular(e, v0, l, v1, mu)?;
            let (t, r) = (o.transmitted_probability(), o.reflected_probability());
            let s = Summary::from_sidebands(&[0], &[t], Some(&[r]));
            Summary { oracle: json(&o), ..totals(t, Some(r)) }.merge_channels(s)
        }
        OracleKind::Junction => {
            let (v0, l, v1) = rectangular(problem)?;
            let o = quivering_rectangular(e, v0, l, v1, &problem.drive, &problem.particle, oracle.cutoff)?;
            let s = Summary::from_sidebands(&o.sidebands, &o.transmitted, Some(&o.reflected));
            Summary {
                cutoff: Some(o.cutoff),
                oracle: json(&o),
                ..totals(o.total_transmission, Some(o.total_reflection))
            }
            .merge_channels(s)
        }
        OracleKind::Perturbative => {
            let (v0, l, _) = rectangular(problem)?;
            let regime = oracle.regime.unwrap_or(if (mu * v0).sqrt() * l < 1.0 {
                BarrierRegime::Transparent
            } else {
                BarrierRegime::Opaque
            });
            let chi = problem.quiver().amplitude;
            let o = perturbative_sidebands(e, v0, l, chi, problem.drive.frequency, mu, regime)?;
            let s = Summary::from_sidebands(&[-1, 1], &[o.lower_current, o.upper_current], None);
            Summary { oracle: json(&o), ..s }
        }
        OracleKind::Opaque => {
            let (v0, l, _) = rectangular(problem)?;
            let o = opaque_barrier(e, v0, l, &problem.drive, &problem.particle, oracle.m_range)?;
            let s = Summary::from_sidebands(&o.sidebands, &o.currents, None);
            Summary { oracle: json(&o), ..s }
        }
        OracleKind::StaticCoulomb => match problem.potential {
            PotentialSpec::TruncatedCoulomb {
                strength,
                inner_radius,
                depth,
                ..
            } => {
                let o = static_coulomb(e, strength, inner_radius, depth, mu)?;
                let (t, r) = (o.transmitted_probability, o.reflected_probability);
                let s = Summary::from_sidebands(&[0], &[t], Some(&[r]));
                Summary { oracle: json(&o), ..totals(t, Some(r)) }.merge_channels(s)
            }
            _ => return Err(config_error("static-coulomb needs a coulomb potential")),
        },
        OracleKind::Wkb => {
            let o = wkb_gamow(&problem.potential, e, mu)?;
            Summary {
                oracle: json(&o),
                ..totals(o.exponent.exp(), None)
            }
        }
    })
}

impl Summary {
    fn merge_channels(self, channels: Summary) -> Summary {
        Summary {
            transmitted: channels.transmitted,
            reflected: channels.reflected,
            ..self
        }
    }
}

/// Evaluate one point without the cache.
pub fn compute(input: &PointInput) -> ResultRecord {
    let start = Instant::now();
    let outcome = input.problem.build().and_then(|p| match &input.mode {
        Mode::Solve => solve_summary(&p, &input.solver),
        Mode::Oracle(o) => oracle_summary(&p, o),
    });
    let wall_time_s = start.elapsed().as_secs_f64();
    let hash = input.hash();
    let (summary, error) = match outcome {
        Ok(mut s) => {
            if let Some(r) = s.result.as_mut() {
                r.input_hash = Some(hash.clone());
            }
            (Some(s), None)
        }
        Err(e) => (None, Some(format!("{}: {e}", describe(&input.problem)))),
    };
    ResultRecord {
        schema_version: RECORD_SCHEMA.into(),
        input_hash: hash,
        input: input.clone(),
        summary,
        error,
        wall_time_s,
    }
}

/// Served from the cache when possible; fresh successes are stored.
pub fn evaluate(input: &PointInput, cache: Option<&Cache>) -> (ResultRecord, bool) {
    if let Some(r) = cache.and_then(|c| c.get(input)) {
        return (r, true);
    }
    let r = compute(input);
    if let (Some(c), None) = (cache, &r.error) {
        if let Err(e) = c.put(&r) {
            eprintln!("warning: could not write cache entry {}: {e}", r.input_hash);
        }
    }
    (r, false)
}

/// The points of a sweep over `base`.
pub fn sweep_points(
    series: &str,
    mode: &Mode,
    base: &ProblemConfig,
    solver: &SolverConfig,
    sweep: &SweepSpec,
) -> Result<Vec<PointSpec>, CliError> {
    sweep.validate()?;
    sweep
        .values()
        .into_iter()
        .map(|v| {
            Ok(PointSpec {
                series: series.into(),
                axis: Some((sweep.axis, v)),
                input: PointInput::new(mode.clone(), base.with_axis(sweep.axis, v)?, *solver),
            })
        })
        .collect()
}

/// Points of a configuration file: its sweep, or the single base point.
pub fn config_points(cfg: &RunConfig, mode: &Mode) -> Result<Vec<PointSpec>, CliError> {
    match &cfg.sweep {
        Some(s) => sweep_points(&cfg.label, mode, &cfg.problem(), &cfg.solver, s),
        None => Ok(vec![PointSpec {
            series: cfg.label.clone(),
            axis: None,
            input: PointInput::new(mode.clone(), cfg.problem(), cfg.solver),
        }]),
    }
}

/// Default worker count: available hardware threads.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run all points on `jobs` workers; outcomes come back in input order.
pub fn run_points(points: Vec<PointSpec>, jobs: usize, cache: Option<&Cache>, timeout_s: f64) -> Vec<PointOutcome> {
    let slots: Vec<Mutex<Option<PointOutcome>>> = points.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, points.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = points.get(i) else { break };
                let (record, cached) = evaluate(&spec.input, cache);
                let failure = record.error.clone().or_else(|| {
                    (record.wall_time_s > timeout_s).then(|| {
                        format!(
                            "{}: point took {:.1} s, above the {timeout_s} s limit",
                            describe(&spec.input.problem),
                            record.wall_time_s
                        )
                    })
                });
                *slots[i].lock().unwrap() = Some(PointOutcome {
                    spec: spec.clone(),
                    record,
                    cached,
                    failure,
                });
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every point ran")).collect()
}

fn sideband_columns(prefix: &str) -> impl Iterator<Item = String> + '_ {
    (-ECHO_SIDEBANDS..=ECHO_SIDEBANDS).map(move |n| match n {
        n if n < 0 => format!("{prefix}_m{}", -n),
        0 => format!("{prefix}_0"),
        n => format!("{prefix}_p{n}"),
    })
}

/// Column order of sweep, figure and oracle CSV files.
pub fn csv_columns() -> Vec<String> {
    let head = [
        "series",
        "axis",
        "axis_value",
        "potential",
        "energy_ev",
        "frequency_ev",
        "field_v_per_m",
        "barrier",
        "length",
        "offset_ev",
        "cutoff",
        "total_transmission",
        "total_reflection",
        "unitarity_deficit",
        "static_transmission",
        "relative_enhancement",
        "time_averaged_transmission",
    ];
    let tail = ["threshold_regularized", "input_hash", "error"];
    head.iter()
        .map(|s| s.to_string())
        .chain(sideband_columns("t"))
        .chain(sideband_columns("r"))
        .chain(tail.iter().map(|s| s.to_string()))
        .collect()
}

/// 17 significant digits; empty when absent.
pub fn float(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.16e}"))
}

fn row(o: &PointOutcome) -> Vec<String> {
    let p = &o.spec.input.problem;
    let mut r = vec![
        o.spec.series.clone(),
        o.spec.axis.map_or(String::new(), |(a, _)| a.name().into()),
        float(o.spec.axis.map(|(_, v)| v)),
        p.potential.name().into(),
        float(Some(p.energy_ev)),
        float(Some(p.drive.frequency_ev)),
        float(Some(p.drive.field_v_per_m)),
        float(p.potential.barrier()),
        float(p.potential.length()),
        float(Some(p.potential.offset())),
    ];
    let empty = Summary::default();
    let s = match (&o.failure, &o.record.summary) {
        (None, Some(s)) => s,
        _ => &empty,
    };
    r.push(s.cutoff.map_or(String::new(), |n| n.to_string()));
    for v in [
        s.total_transmission,
        s.total_reflection,
        s.unitarity_deficit,
        s.static_transmission,
        s.relative_enhancement,
        s.time_averaged_transmission,
    ] {
        r.push(float(v));
    }
    let channels = |v: &[Option<f64>]| (0..(2 * ECHO_SIDEBANDS + 1) as usize).map(|i| float(v.get(i).copied().flatten())).collect::<Vec<_>>();
    r.extend(channels(&s.transmitted));
    r.extend(channels(&s.reflected));
    r.push(if o.failure.is_some() { String::new() } else { s.threshold_regularized.to_string() });
    r.push(o.record.input_hash.clone());
    r.push(o.failure.clone().unwrap_or_default());
    r
}

pub fn write_csv<W: Write>(outcomes: &[PointOutcome], sink: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(csv_columns()).map_err(io)?;
    for o in outcomes {
        w.write_record(row(o)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON record per line, in point order.
pub fn write_records<W: Write>(outcomes: &[PointOutcome], mut sink: W) -> Result<(), CliError> {
    for o in outcomes {
        serde_json::to_writer(&mut sink, &o.record).map_err(|e| CliError::Io(e.into()))?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
