//! Kramers–Henneberger displacement and the temporal Fourier modes of the
//! displaced barrier.
//!
//! In the oscillating frame the barrier moves as V(x − χ(t)) with
//! χ(t) = χ₀ cos ωt. The asymptotic step −V₁Θ(x − s) is kept fixed and moved
//! into the channel asymptotics, so the remainder
//!
//! W(x, t) = V(x − χ(t)) + V₁ Θ(x − s)
//!
//! has compact support. Since W is even in θ = ωt every harmonic is real and
//! W₋ₙ = Wₙ.

use std::io::{self, Write};

use num_complex::Complex64 as c64;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_vector;
use crate::setup::{to_natural_field, DriveField, ParticleSpec, PotentialSpec, TailWindow};

/// Classical quiver motion of the particle in the drive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuiverMotion {
    /// χ₀ = q𝔈₀/(μω²) in eV⁻¹ (signed with the charge).
    pub amplitude: f64,
    /// ω in eV.
    pub frequency: f64,
}

impl QuiverMotion {
    pub fn new(drive: &DriveField, particle: &ParticleSpec) -> Self {
        let amplitude = if drive.is_off() {
            0.0
        } else {
            to_natural_field(drive, particle) / (particle.mass * drive.frequency * drive.frequency)
        };
        Self {
            amplitude,
            frequency: drive.frequency,
        }
    }

    pub fn at_rest(frequency: f64) -> Self {
        Self {
            amplitude: 0.0,
            frequency,
        }
    }

    pub fn displacement(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).cos()
    }
}

/// χ(t) = χ₀ cos ωt.
pub fn kh_displacement(quiver: &QuiverMotion, t: f64) -> f64 {
    quiver.displacement(t)
}

/// W(x, t) = V(x − χ(t)) + V₁Θ(x − s), vanishing at both spatial infinities.
pub fn localized_dynamic_potential(potential: &PotentialSpec, quiver: &QuiverMotion, x: f64, t: f64) -> f64 {
    localized_at_phase(potential, quiver.amplitude, x, (quiver.frequency * t).cos())
}

fn localized_at_phase(potential: &PotentialSpec, chi0: f64, x: f64, cos_theta: f64) -> f64 {
    let step = if right_of_step(potential, x) {
        potential.offset()
    } else {
        0.0
    };
    potential.value(x - chi0 * cos_theta) + step
}

fn right_of_step(potential: &PotentialSpec, x: f64) -> bool {
    match potential {
        PotentialSpec::TruncatedCoulomb { inner_radius, .. } => x > *inner_radius,
        _ => x >= potential.step_position(),
    }
}

/// Harmonics Wₙ(x), n ∈ [−n_max, n_max], of the localized potential.
pub fn fourier_coefficients(
    potential: &PotentialSpec,
    quiver: &QuiverMotion,
    x: f64,
    n_max: usize,
) -> Result<Vec<c64>> {
    FourierPotential::new(potential.clone(), *quiver, n_max, None)?.coefficients(x)
}

/// Fourier decomposition of W for a fixed barrier and drive, evaluated on
/// demand at any position.
#[derive(Debug, Clone)]
pub struct FourierPotential {
    potential: PotentialSpec,
    quiver: QuiverMotion,
    n_max: usize,
    tail: Option<TailWindow>,
    abs_tol: f64,
    edges: Vec<f64>,
    piecewise_constant: bool,
}

/// Relative accuracy asked of the harmonic quadrature.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

impl FourierPotential {
    /// `tail` switches off long-range tails; it is required for the
    /// truncated Coulomb barrier so the support stays finite.
    pub fn new(
        potential: PotentialSpec,
        quiver: QuiverMotion,
        n_max: usize,
        tail: Option<TailWindow>,
    ) -> Result<Self> {
        potential.validate()?;
        if !quiver.amplitude.is_finite() {
            return Err(Error::InvalidParameter("quiver amplitude must be finite".into()));
        }
        let mut edges = potential.jumps();
        edges.extend(potential.kinks());
        let scale = potential.peak().abs().max(potential.offset().abs()).max(f64::MIN_POSITIVE);
        Ok(Self {
            piecewise_constant: potential.is_piecewise_constant(),
            potential,
            quiver,
            n_max,
            tail,
            abs_tol: DEFAULT_QUADRATURE_TOL * scale,
            edges,
        })
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        let scale = self.potential.peak().abs().max(self.potential.offset().abs());
        self.abs_tol = rel_tol * scale.max(f64::MIN_POSITIVE);
        self
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn quiver(&self) -> &QuiverMotion {
        &self.quiver
    }

    pub fn tail(&self) -> Option<&TailWindow> {
        self.tail.as_ref()
    }

    /// Same potential with a different number of harmonics.
    pub fn with_harmonics(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }

    /// Closed interval outside of which every harmonic vanishes.
    pub fn support(&self) -> (f64, f64) {
        let chi = self.quiver.amplitude.abs();
        let lo = match (&self.potential, &self.tail) {
            (PotentialSpec::TruncatedCoulomb { .. }, Some(t)) => t.end,
            (PotentialSpec::TruncatedCoulomb { .. }, None) => f64::NEG_INFINITY,
            (p, _) => p.support_start(None) - chi,
        };
        (lo, self.potential.step_position() + chi)
    }

    /// Positions where the harmonics are not smooth in x.
    pub fn breakpoints(&self) -> Vec<f64> {
        let chi = self.quiver.amplitude.abs();
        let mut pts = vec![self.potential.step_position()];
        for &a in &self.edges {
            pts.push(a - chi);
            pts.push(a + chi);
        }
        if let Some(t) = &self.tail {
            pts.push(t.start);
            pts.push(t.end);
        }
        pts.retain(|p| p.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Wₙ(x) for n ∈ [−n_max, n_max] as complex numbers (imaginary parts are
    /// exactly zero).
    pub fn coefficients(&self, x: f64) -> Result<Vec<c64>> {
        let mut half = vec![0.0; self.n_max + 1];
        self.harmonics(x, &mut half)?;
        let n = self.n_max as isize;
        Ok((-n..=n).map(|k| c64::new(half[k.unsigned_abs()], 0.0)).collect())
    }

    /// W₀(x) … W_{n_max}(x) written into `out` (length n_max + 1).
    pub fn harmonics(&self, x: f64, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.n_max + 1);
        out.iter_mut().for_each(|v| *v = 0.0);
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return Ok(());
        }
        let taper = self.tail.map_or(1.0, |t| t.factor(x));
        if taper == 0.0 {
            return Ok(());
        }
        let chi = self.quiver.amplitude;
        if chi == 0.0 {
            out[0] = taper * localized_at_phase(&self.potential, 0.0, x, 1.0);
            return Ok(());
        }
        if let PotentialSpec::TruncatedCoulomb {
            strength,
            inner_radius,
            ..
        } = &self.potential
        {
            if x + chi.abs() < *inner_radius {
                coulomb_tail_harmonics(*strength, 2.0 * inner_radius - x, chi, out);
                out.iter_mut().for_each(|v| *v *= taper);
                return Ok(());
            }
        }
        let mut angles = vec![0.0, std::f64::consts::PI];
        for &a in &self.edges {
            let c = (x - a) / chi;
            if c.abs() < 1.0 {
                angles.push(c.acos());
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup();

        for w in angles.windows(2) {
            let (ta, tb) = (w[0], w[1]);
            if tb <= ta {
                continue;
            }
            if self.piecewise_constant {
                let v = localized_at_phase(&self.potential, chi, x, (0.5 * (ta + tb)).cos());
                accumulate_constant(v, ta, tb, out);
            } else {
                let tol = self.abs_tol * (tb - ta) / std::f64::consts::PI;
                let dim = out.len();
                let q = adaptive_vector(ta, tb, dim, tol, 30, &mut |theta, vals| {
                    let c = theta.cos();
                    let v = localized_at_phase(&self.potential, chi, x, c) / std::f64::consts::PI;
                    cosine_series(v, c, vals);
                });
                // a narrow panel's share can fall below rounding at a large
                // jump; only the whole-point budget is binding
                if !q.converged && !(q.error <= self.abs_tol) {
                    return Err(Error::Quadrature {
                        x,
                        achieved: q.error,
                    });
                }
                for (o, v) in out.iter_mut().zip(&q.values) {
                    *o += v;
                }
            }
        }
        out.iter_mut().for_each(|v| *v *= taper);
        Ok(())
    }

    /// Period average W₀(x) minus nothing else; the time-averaged barrier.
    pub fn average(&self, x: f64) -> Result<f64> {
        let mut w = vec![0.0; 1];
        self.with_harmonics(0).harmonics(x, &mut w)?;
        Ok(w[0])
    }

    /// Direct evaluation of W(x, θ) including the tail taper.
    pub fn at_phase(&self, x: f64, theta: f64) -> f64 {
        let taper = self.tail.map_or(1.0, |t| t.factor(x));
        taper * localized_at_phase(&self.potential, self.quiver.amplitude, x, theta.cos())
    }

    /// Diagnostic dump: one `x,n,re,im` row per harmonic.
    pub fn write_csv<W: Write>(&self, xs: &[f64], mut sink: W) -> io::Result<()> {
        writeln!(sink, "x,n,re,im")?;
        for &x in xs {
            let coeffs = self
                .coefficients(x)
                .map_err(|e| io::Error::new(io::ErrorKind::Other, e.to_string()))?;
            let n = self.n_max as isize;
            for (k, c) in (-n..=n).zip(coeffs) {
                writeln!(sink, "{x:.17e},{k},{:.17e},{:.17e}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}

/// vals[n] = v·cos(nθ) with c = cos θ, by the Chebyshev recurrence.
fn cosine_series(v: f64, c: f64, vals: &mut [f64]) {
    let (mut prev, mut cur) = (c, 1.0);
    for slot in vals.iter_mut() {
        *slot = v * cur;
        let next = 2.0 * c * cur - prev;
        prev = cur;
        cur = next;
    }
}

/// (1/π)∫ v cos nθ over [ta, tb].
fn accumulate_constant(v: f64, ta: f64, tb: f64, out: &mut [f64]) {
    let pi = std::f64::consts::PI;
    out[0] += v * (tb - ta) / pi;
    let (ca, cb) = (ta.cos(), tb.cos());
    let (sa1, sb1) = (ta.sin(), tb.sin());
    // sin(nθ) by recurrence from sin 0 = 0, sin θ
    let (mut pa, mut qa) = (0.0, sa1);
    let (mut pb, mut qb) = (0.0, sb1);
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        *slot += v * (qb - qa) / (n as f64 * pi);
        let na = 2.0 * ca * qa - pa;
        let nb = 2.0 * cb * qb - pb;
        pa = qa;
        qa = na;
        pb = qb;
        qb = nb;
    }
}

/// Harmonics of α/(a + χ₀ cos θ) for a > |χ₀|:
/// Wₙ = α ρⁿ/√(a² − χ₀²) with ρ = −χ₀/(a + √(a² − χ₀²)).
fn coulomb_tail_harmonics(strength: f64, a: f64, chi: f64, out: &mut [f64]) {
    let root = ((a - chi) * (a + chi)).sqrt();
    let rho = -chi / (a + root);
    let mut term = strength / root;
    for slot in out.iter_mut() {
        *slot = term;
        term *= rho;
    }
}
