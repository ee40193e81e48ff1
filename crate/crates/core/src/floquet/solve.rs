//! High-level scattering solves: domain selection, segment composition and
//! extraction of probabilities.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::channels::{build_grid, step_coefficients, ChannelGrid};
use super::propagate::{Coupling, Medium, Propagator, SegmentBlocks, StepControl};
use crate::c64;
use crate::error::{invalid, Error, Result};
use crate::kh::{FourierPotential, QuiverMotion, DEFAULT_QUADRATURE_TOL};
use crate::setup::{DriveField, ParticleSpec, PotentialSpec};

/// Version tag written into every serialized result.
pub const RESULT_SCHEMA: &str = "floquet-result/1";

/// Numerical settings of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// The Coulomb tail is cut where α/r drops below tail_tol·E.
    pub tail_tol: f64,
    /// Relative accuracy of the harmonic quadrature.
    pub quadrature_tol: f64,
    pub max_steps: usize,
    /// Integrate the long-range tail as its own segment.
    pub split_tail: bool,
    /// Exact Born moments inside the tail segment.
    pub born_moments: bool,
    /// Repeat the solve with twice the cutoff distance and report the change.
    pub check_tail: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            tail_tol: 1e-3,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
            max_steps: 2_000_000,
            split_tail: true,
            born_moments: true,
            check_tail: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("tail_tol", self.tail_tol),
            ("quadrature_tol", self.quadrature_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be positive"));
        }
        Ok(())
    }

    fn control(&self, filon: bool) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            decay_cap: 150.0,
            filon,
        }
    }
}

/// A complete physical scattering problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringProblem {
    pub particle: ParticleSpec,
    pub drive: DriveField,
    pub potential: PotentialSpec,
    /// Incident energy in eV.
    pub energy: f64,
}

impl ScatteringProblem {
    pub fn new(particle: ParticleSpec, drive: DriveField, potential: PotentialSpec, energy: f64) -> Result<Self> {
        let p = Self {
            particle,
            drive,
            potential,
            energy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.particle.validate()?;
        self.drive.validate()?;
        self.potential.validate()?;
        if !(self.energy.is_finite() && self.energy > 0.0) {
            return Err(invalid(format!("incident energy must be positive, got {}", self.energy)));
        }
        Ok(())
    }

    /// Same problem with the field switched off.
    pub fn without_drive(&self) -> Self {
        Self {
            drive: DriveField::off(self.drive.frequency),
            ..self.clone()
        }
    }

    pub fn quiver(&self) -> QuiverMotion {
        QuiverMotion::new(&self.drive, &self.particle)
    }
}

/// Dense complex matrix in row-major order, for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn from_mat(m: &Mat<c64>) -> Self {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                re.push(v.re);
                im.push(v.im);
            }
        }
        Self { dim, re, im }
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        let k = i * self.dim + j;
        c64::new(self.re[k], self.im[k])
    }
}

/// Outcome of one solve with incident channel n = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub schema_version: String,
    /// Incident energy used, after a threshold nudge if any.
    pub energy: f64,
    pub frequency: f64,
    /// Channel cutoff N (2N + 1 channels).
    pub cutoff: usize,
    pub sidebands: Vec<i32>,
    /// Plane-wave normalized transmission amplitudes T_nl.
    pub transmission_amplitudes: ComplexMatrix,
    /// Plane-wave normalized reflection amplitudes R_nl.
    pub reflection_amplitudes: ComplexMatrix,
    /// Transmitted probability per channel for incidence in n = 0; `None`
    /// for channels closed on the right.
    pub transmitted: Vec<Option<f64>>,
    /// Reflected probability per channel; `None` for channels closed on the left.
    pub reflected: Vec<Option<f64>>,
    pub total_transmission: f64,
    pub total_reflection: f64,
    pub unitarity_deficit: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub tail_tol: Option<f64>,
    pub threshold_regularized: bool,
    /// Sum of accepted local error estimates.
    pub error_estimate: f64,
    pub steps: usize,
    /// Change of the total transmission when the tail cutoff is doubled.
    pub tail_truncation: Option<f64>,
    /// Digest of the inputs, filled in by callers that cache results.
    pub input_hash: Option<String>,
}

impl ScatteringResult {
    fn index(&self, n: i32) -> Option<usize> {
        let i = n as i64 + self.cutoff as i64;
        (0..self.sidebands.len() as i64).contains(&i).then_some(i as usize)
    }

    /// Transmitted probability into sideband n (0 when closed or out of range).
    pub fn transmitted_into(&self, n: i32) -> f64 {
        self.index(n).and_then(|i| self.transmitted[i]).unwrap_or(0.0)
    }

    /// Reflected probability into sideband n (0 when closed or out of range).
    pub fn reflected_into(&self, n: i32) -> f64 {
        self.index(n).and_then(|i| self.reflected[i]).unwrap_or(0.0)
    }
}

/// Reflection and transmission blocks at the left end of a backward
/// integration, referenced at the segment ends.
///
/// `reflection` is the reflection referenced at `y`; `transmission` maps the
/// incident step-solution amplitude at `y` onto the outgoing amplitudes at
/// the right end (identity plus the quasi-transmission).
#[derive(Debug, Clone)]
pub struct AmplitudeMatrices {
    pub y: f64,
    pub reflection: Mat<c64>,
    pub transmission: Mat<c64>,
    pub steps: usize,
    pub rejected: usize,
    pub error_estimate: f64,
}

/// Harmonics of W sampled in solver coordinates y = ±(x − shift).
struct FieldCoupling<'a> {
    fourier: &'a FourierPotential,
    shift: f64,
    mirrored: bool,
}

impl Coupling for FieldCoupling<'_> {
    fn harmonics(&self, y: f64, out: &mut [f64]) -> Result<()> {
        let x = if self.mirrored { self.shift - y } else { self.shift + y };
        self.fourier.harmonics(x, out)
    }
}

fn check_harmonics(grid: &ChannelGrid, fourier: &FourierPotential) -> Result<()> {
    if fourier.n_max() < 2 * grid.cutoff {
        return Err(invalid(format!(
            "coupling needs harmonics up to {}, potential provides {}",
            2 * grid.cutoff,
            fourier.n_max()
        )));
    }
    Ok(())
}

/// Backward integration from `y_max` to `y_min` with step-matched free
/// solutions; y is measured from the asymptotic step.
pub fn integrate_channels(
    grid: &ChannelGrid,
    fourier: &FourierPotential,
    y_min: f64,
    y_max: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<AmplitudeMatrices> {
    let opts = SolverOptions {
        rel_tol,
        abs_tol,
        ..SolverOptions::default()
    };
    opts.validate()?;
    let shift = fourier.potential().step_position();
    let (lo, hi) = fourier.support();
    if y_max < hi - shift || y_min > lo - shift {
        return Err(invalid("integration interval does not cover the potential support"));
    }
    integrate_with(grid, fourier, y_min, y_max, &opts)
}

fn integrate_with(
    grid: &ChannelGrid,
    fourier: &FourierPotential,
    y_min: f64,
    y_max: f64,
    opts: &SolverOptions,
) -> Result<AmplitudeMatrices> {
    check_harmonics(grid, fourier)?;
    if !(y_min.is_finite() && y_max.is_finite() && y_min < y_max) {
        return Err(invalid("integration interval must be finite and non-empty"));
    }
    let shift = fourier.potential().step_position();
    let coupling = FieldCoupling {
        fourier,
        shift,
        mirrored: false,
    };
    let breaks = solver_breaks(fourier, shift, false);
    let blocks = Propagator::new(grid, Medium::Step, &coupling, opts.control(false)).run(y_min, y_max, &breaks)?;
    Ok(amplitudes(blocks, y_min))
}

fn amplitudes(b: SegmentBlocks, y: f64) -> AmplitudeMatrices {
    AmplitudeMatrices {
        y,
        reflection: b.reflection,
        transmission: b.transmission,
        steps: b.steps,
        rejected: b.rejected,
        error_estimate: b.error,
    }
}

fn solver_breaks(fourier: &FourierPotential, shift: f64, mirrored: bool) -> Vec<f64> {
    fourier
        .breakpoints()
        .into_iter()
        .map(|x| if mirrored { shift - x } else { x - shift })
        .collect()
}

/// Plane-wave normalized (R, T) of a step-medium segment starting at y ≤ 0.
fn plane_wave_blocks(amps: &AmplitudeMatrices, grid: &ChannelGrid) -> (Mat<c64>, Mat<c64>) {
    let n = grid.len();
    let y = amps.y.min(0.0);
    let mut refl = Mat::<c64>::zeros(n, n);
    let mut trans = Mat::<c64>::zeros(n, n);
    for l in 0..n {
        let (a, b, _, _) = step_coefficients(grid.k_left[l], grid.k_right[l]);
        for m in 0..n {
            let mut r = amps.reflection[(m, l)];
            if m == l {
                r += b * (-2.0 * c64::i() * grid.k_left[l] * y).exp();
            }
            refl[(m, l)] = r / a;
            trans[(m, l)] = amps.transmission[(m, l)] / a;
        }
    }
    (refl, trans)
}

/// Probabilities and totals from plane-wave normalized amplitudes.
pub fn extract_result(amps: &AmplitudeMatrices, grid: &ChannelGrid) -> ScatteringResult {
    let (refl, trans) = plane_wave_blocks(amps, grid);
    assemble(grid, &refl, &trans, amps.steps, amps.error_estimate)
}

fn assemble(grid: &ChannelGrid, refl: &Mat<c64>, trans: &Mat<c64>, steps: usize, error: f64) -> ScatteringResult {
    let n = grid.len();
    let l = grid.incident();
    let k0 = grid.k_left[l].re;
    let transmitted: Vec<Option<f64>> = (0..n)
        .map(|i| grid.open_right(i).then(|| trans[(i, l)].norm_sqr() * grid.k_right[i].re / k0))
        .collect();
    let reflected: Vec<Option<f64>> = (0..n)
        .map(|i| grid.open_left(i).then(|| refl[(i, l)].norm_sqr() * grid.k_left[i].re / k0))
        .collect();
    let total_transmission: f64 = transmitted.iter().flatten().sum();
    let total_reflection: f64 = reflected.iter().flatten().sum();
    ScatteringResult {
        schema_version: RESULT_SCHEMA.to_string(),
        energy: grid.energy,
        frequency: grid.frequency,
        cutoff: grid.cutoff,
        sidebands: grid.sidebands().collect(),
        transmission_amplitudes: ComplexMatrix::from_mat(trans),
        reflection_amplitudes: ComplexMatrix::from_mat(refl),
        transmitted,
        reflected,
        total_transmission,
        total_reflection,
        unitarity_deficit: (1.0 - total_transmission - total_reflection).abs(),
        rel_tol: 0.0,
        abs_tol: 0.0,
        tail_tol: None,
        threshold_regularized: grid.threshold_regularized,
        error_estimate: error,
        steps,
        tail_truncation: None,
        input_hash: None,
    }
}

/// Solve with 2N + 1 coupled channels.
pub fn solve(problem: &ScatteringProblem, cutoff: usize, opts: &SolverOptions) -> Result<ScatteringResult> {
    problem.validate()?;
    opts.validate()?;
    let mut result = solve_once(problem, cutoff, opts, opts.tail_tol)?;
    if opts.check_tail && problem.potential.tail_window(problem.energy, opts.tail_tol).is_some() {
        let longer = solve_once(problem, cutoff, opts, 0.5 * opts.tail_tol)?;
        result.tail_truncation = Some((longer.total_transmission - result.total_transmission).abs());
    }
    Ok(result)
}

fn solve_once(problem: &ScatteringProblem, cutoff: usize, opts: &SolverOptions, tail_tol: f64) -> Result<ScatteringResult> {
    let offset = problem.potential.offset();
    let grid = build_grid(problem.energy, &problem.drive, &problem.particle, offset, cutoff)?;
    let tail = problem.potential.tail_window(grid.energy, tail_tol);
    let fourier = FourierPotential::new(problem.potential.clone(), problem.quiver(), 2 * cutoff, tail)?
        .with_tolerance(opts.quadrature_tol);
    let shift = problem.potential.step_position();
    let (lo, hi) = fourier.support();
    let (y_min, y_max) = (lo - shift, hi - shift);

    let split = match (&problem.potential, opts.split_tail) {
        (
            PotentialSpec::TruncatedCoulomb {
                strength,
                inner_radius,
                ..
            },
            true,
        ) => {
            let chi = fourier.quiver().amplitude.abs();
            let turning = inner_radius - strength / grid.energy;
            let wavelength = 2.0 * std::f64::consts::PI / grid.k_left[grid.incident()].re;
            let yc = turning.min(-2.0 * chi) - chi - 2.0 * wavelength;
            (yc > y_min).then_some(yc)
        }
        _ => None,
    };

    let mut result = match split {
        None => {
            let amps = integrate_with(&grid, &fourier, y_min, y_max, opts)?;
            extract_result(&amps, &grid)
        }
        Some(yc) => {
            let core = integrate_with(&grid, &fourier, yc, y_max, opts)?;
            let (rc, tc) = plane_wave_blocks(&core, &grid);
            let tail = tail_blocks(&grid, &fourier, y_min, yc, opts)?;
            let (refl, trans) = compose(&tail, &rc, &tc)?;
            let steps = core.steps + tail.steps;
            assemble(&grid, &refl, &trans, steps, core.error_estimate + tail.error)
        }
    };
    result.rel_tol = opts.rel_tol;
    result.abs_tol = opts.abs_tol;
    result.tail_tol = tail.map(|_| tail_tol);
    Ok(result)
}

/// Scattering blocks of a field-free-referenced segment, for incidence from
/// both sides.
struct TailBlocks {
    refl_left: Mat<c64>,
    trans_right: Mat<c64>,
    refl_right: Mat<c64>,
    trans_left: Mat<c64>,
    steps: usize,
    error: f64,
}

fn tail_blocks(
    grid: &ChannelGrid,
    fourier: &FourierPotential,
    y_min: f64,
    y_max: f64,
    opts: &SolverOptions,
) -> Result<TailBlocks> {
    let shift = fourier.potential().step_position();
    let control = opts.control(opts.born_moments);
    let forward = FieldCoupling {
        fourier,
        shift,
        mirrored: false,
    };
    let breaks = solver_breaks(fourier, shift, false);
    let a = Propagator::new(grid, Medium::Uniform, &forward, control).run(y_min, y_max, &breaks)?;
    let mirrored = FieldCoupling {
        fourier,
        shift,
        mirrored: true,
    };
    let breaks = solver_breaks(fourier, shift, true);
    let b = Propagator::new(grid, Medium::Uniform, &mirrored, control).run(-y_max, -y_min, &breaks)?;
    Ok(TailBlocks {
        refl_left: a.reflection,
        trans_right: a.transmission,
        refl_right: b.reflection,
        trans_left: b.transmission,
        steps: a.steps + b.steps,
        error: a.error + b.error,
    })
}

/// Star product of a tail segment with the core blocks on its right.
fn compose(tail: &TailBlocks, core_refl: &Mat<c64>, core_trans: &Mat<c64>) -> Result<(Mat<c64>, Mat<c64>)> {
    let n = core_refl.nrows();
    let loop_gain = &tail.refl_right * core_refl;
    let system = Mat::<c64>::identity(n, n) - &loop_gain;
    let lu = system.partial_piv_lu();
    let inner = lu.solve(&tail.trans_right);
    if !(0..n).all(|j| (0..n).all(|i| inner[(i, j)].re.is_finite() && inner[(i, j)].im.is_finite())) {
        return Err(Error::IllConditioned { estimate: f64::INFINITY });
    }
    let trans = core_trans * &inner;
    let refl = &tail.refl_left + &tail.trans_left * (core_refl * &inner);
    Ok((refl, trans))
}

/// Total transmitted probability over all open channels.
pub fn total_transmission(result: &ScatteringResult) -> f64 {
    result.total_transmission
}

/// Ratio of driven to undriven total transmission. A vanishing static
/// transmission yields `f64::INFINITY` (or 1 when both vanish).
pub fn relative_enhancement(assisted: &ScatteringResult, reference: &ScatteringResult) -> f64 {
    let (a, s) = (assisted.total_transmission, reference.total_transmission);
    if s == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / s
    }
}

/// Single-channel solve on the period-averaged barrier W₀.
pub fn time_averaged_transmission(
    energy: f64,
    potential: &PotentialSpec,
    drive: &DriveField,
    particle: &ParticleSpec,
    opts: &SolverOptions,
) -> Result<ScatteringResult> {
    let problem = ScatteringProblem::new(*particle, *drive, potential.clone(), energy)?;
    solve(&problem, 0, opts)
}

/// Reference solve without the field.
pub fn static_transmission(problem: &ScatteringProblem, opts: &SolverOptions) -> Result<ScatteringResult> {
    solve(&problem.without_drive(), 0, opts)
}

/// Increment of N between adaptive trials.
pub const CHANNEL_STEP: usize = 4;
/// Default upper bound on N.
pub const DEFAULT_MAX_CUTOFF: usize = 64;

/// Converged channel count with its result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSolve {
    pub cutoff: usize,
    pub result: ScatteringResult,
    /// (N, total transmission, deficit) for each trial.
    pub history: Vec<(usize, f64, f64)>,
}

/// Smallest N on the grid 0, 4, 8, … with unitarity deficit and change of
/// the total transmission both below `target`.
pub fn adaptive_channel_count(
    problem: &ScatteringProblem,
    target: f64,
    max_cutoff: usize,
    opts: &SolverOptions,
) -> Result<AdaptiveSolve> {
    if !(target.is_finite() && target > 0.0) {
        return Err(invalid("target deficit must be positive"));
    }
    adaptive_from(problem, target, 0, max_cutoff, opts)
}

/// As [`adaptive_channel_count`], starting the search at `start`.
pub fn adaptive_from(
    problem: &ScatteringProblem,
    target: f64,
    start: usize,
    max_cutoff: usize,
    opts: &SolverOptions,
) -> Result<AdaptiveSolve> {
    let drive_off = problem.quiver().amplitude == 0.0;
    let mut history = Vec::new();
    let mut previous: Option<f64> = None;
    let mut n = if drive_off { 0 } else { start };
    let mut last_change = f64::INFINITY;
    loop {
        let r = solve(problem, n, opts)?;
        history.push((n, r.total_transmission, r.unitarity_deficit));
        let settled = match previous {
            Some(p) => {
                last_change = (r.total_transmission - p).abs();
                last_change < target
            }
            None => drive_off,
        };
        previous = Some(r.total_transmission);
        if settled && r.unitarity_deficit < target {
            return Ok(AdaptiveSolve {
                cutoff: n,
                result: r,
                history,
            });
        }
        if n + CHANNEL_STEP > max_cutoff {
            return Err(Error::ChannelNonConvergence {
                n_max: n,
                last_change,
                best: Some(Box::new(r)),
            });
        }
        n += CHANNEL_STEP;
    }
}
