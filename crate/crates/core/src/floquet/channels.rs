//! Floquet channel grid and the step-matched free solutions.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{invalid, Result};
use crate::setup::{DriveField, ParticleSpec};

/// Sideband indices n ∈ [−N, N] with their asymptotic wave numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    /// Incident energy actually used (after a possible threshold nudge).
    pub energy: f64,
    pub frequency: f64,
    pub mass: f64,
    pub cutoff: usize,
    /// V₁; the right asymptotic level is −V₁.
    pub offset: f64,
    /// k_n for n = −N..=N.
    pub k_left: Vec<c64>,
    /// k_n^R for n = −N..=N.
    pub k_right: Vec<c64>,
    /// Set when E was shifted off an exact channel threshold.
    pub threshold_regularized: bool,
}

/// Relative energy shift applied at an exact threshold, in units of ω.
pub const THRESHOLD_NUDGE: f64 = 1e-12;

/// √(2μ·kinetic) on the branch with Im k ≥ 0.
pub fn momentum(mass: f64, kinetic: f64) -> c64 {
    let k2 = 2.0 * mass * kinetic;
    if k2 >= 0.0 {
        c64::new(k2.sqrt(), 0.0)
    } else {
        c64::new(0.0, (-k2).sqrt())
    }
}

fn at_threshold(level: f64, scale: f64) -> bool {
    level.abs() <= 8.0 * f64::EPSILON * scale
}

/// Build the grid for incident energy `energy` and 2N + 1 channels.
pub fn build_grid(
    energy: f64,
    drive: &DriveField,
    particle: &ParticleSpec,
    offset: f64,
    cutoff: usize,
) -> Result<ChannelGrid> {
    particle.validate()?;
    drive.validate()?;
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid(format!("incident energy must be positive, got {energy}")));
    }
    if !offset.is_finite() {
        return Err(invalid("asymptotic offset must be finite"));
    }
    let omega = drive.frequency;
    if cutoff > 0 && !(omega.is_finite() && omega > 0.0) {
        return Err(invalid("sidebands need a positive drive frequency"));
    }
    let n = cutoff as i64;
    let mut e = energy;
    let mut nudged = false;
    // one nudge suffices: thresholds are spaced by ω ≫ the shift
    for _ in 0..2 {
        let hit = (-n..=n).any(|j| {
            let shift = j as f64 * omega;
            let scale = e.abs() + shift.abs() + offset.abs();
            at_threshold(e + shift, scale) || at_threshold(e + shift + offset, scale)
        });
        if !hit {
            break;
        }
        e += THRESHOLD_NUDGE * if omega > 0.0 { omega } else { energy };
        nudged = true;
    }
    let mu = particle.mass;
    let k_left = (-n..=n).map(|j| momentum(mu, e + j as f64 * omega)).collect();
    let k_right = (-n..=n)
        .map(|j| momentum(mu, e + j as f64 * omega + offset))
        .collect();
    Ok(ChannelGrid {
        energy: e,
        frequency: omega,
        mass: mu,
        cutoff,
        offset,
        k_left,
        k_right,
        threshold_regularized: nudged,
    })
}

impl ChannelGrid {
    pub fn len(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Array position of sideband n.
    pub fn index(&self, n: i32) -> usize {
        (n as i64 + self.cutoff as i64) as usize
    }

    /// Sideband index at array position i.
    pub fn sideband(&self, i: usize) -> i32 {
        i as i32 - self.cutoff as i32
    }

    pub fn sidebands(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.len()).map(|i| self.sideband(i))
    }

    /// Position of the incident channel n = 0.
    pub fn incident(&self) -> usize {
        self.cutoff
    }

    pub fn open_left(&self, i: usize) -> bool {
        self.k_left[i].im == 0.0 && self.k_left[i].re > 0.0
    }

    pub fn open_right(&self, i: usize) -> bool {
        self.k_right[i].im == 0.0 && self.k_right[i].re > 0.0
    }

    /// C_n = −i/(k_n + k_n^R).
    pub fn matching_constant(&self, i: usize) -> c64 {
        -c64::i() / (self.k_left[i] + self.k_right[i])
    }

    /// Same grid with a different channel cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> ChannelGrid {
        let n = cutoff as i64;
        let (mu, e, w, v1) = (self.mass, self.energy, self.frequency, self.offset);
        ChannelGrid {
            cutoff,
            k_left: (-n..=n).map(|j| momentum(mu, e + j as f64 * w)).collect(),
            k_right: (-n..=n).map(|j| momentum(mu, e + j as f64 * w + v1)).collect(),
            ..self.clone()
        }
    }
}

/// Values of the two free solutions of one channel at a point, with their
/// first derivatives and the matching constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSolutionPair {
    /// Left-moving solution: e^{−iky} on the left of the step.
    pub phi1: c64,
    /// Right-moving solution: e^{ik^R y} on the right of the step.
    pub phi2: c64,
    pub dphi1: c64,
    pub dphi2: c64,
    pub matching: c64,
}

/// Step coefficients (a, b, c, d) of one channel:
/// φ₂ = a e^{iky} + b e^{−iky} for y < 0, φ₁ = c e^{ik^R y} + d e^{−ik^R y}
/// for y ≥ 0.
pub(crate) fn step_coefficients(k: c64, kr: c64) -> (c64, c64, c64, c64) {
    let ratio = kr / k;
    let inv = k / kr;
    (
        0.5 * (1.0 + ratio),
        0.5 * (1.0 - ratio),
        0.5 * (1.0 - inv),
        0.5 * (1.0 + inv),
    )
}

/// φ₁, φ₂ of channel position `i` at y (step at y = 0).
pub fn free_solutions(grid: &ChannelGrid, i: usize, y: f64) -> FreeSolutionPair {
    let (k, kr) = (grid.k_left[i], grid.k_right[i]);
    let (a, b, c, d) = step_coefficients(k, kr);
    let iy = c64::i() * y;
    let (phi1, phi2, dphi1, dphi2) = if y < 0.0 {
        let (ep, em) = ((iy * k).exp(), (-iy * k).exp());
        let ik = c64::i() * k;
        (em, a * ep + b * em, -ik * em, ik * (a * ep - b * em))
    } else {
        let (ep, em) = ((iy * kr).exp(), (-iy * kr).exp());
        let ik = c64::i() * kr;
        (c * ep + d * em, ep, ik * (c * ep - d * em), ik * ep)
    };
    FreeSolutionPair {
        phi1,
        phi2,
        dphi1,
        dphi2,
        matching: grid.matching_constant(i),
    }
}
