//! Sideband currents behind an opaque quivering barrier.
//!
//! Inside a barrier with √(2μV₀)·L ≫ 1 the evanescent wave sees the quiver
//! motion only through the traversal time 𝔗 = L√(μ/2V₀). The transmitted
//! wave splits into sidebands with weights
//! φ_m = (a/c)^m I_m(|χ₀|√(2μV₀)·c), a = e^{ω𝔗} − 1, b = e^{−ω𝔗} − 1, c = √(ab).

use serde::{Deserialize, Serialize};

use crate::bessel::bessel_i_sequence;
use crate::c64;
use crate::error::{invalid, Result};
use crate::setup::{DriveField, ParticleSpec};
use crate::units::HBAR_C_EV_M;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpaqueSideband {
    /// 𝔗 in eV⁻¹.
    pub traversal_time: f64,
    pub sidebands: Vec<i32>,
    pub weights: Vec<c64>,
    /// ψ⁰ = 4√(E/V₀)·e^{−√(2μV₀)L + E𝔗}.
    pub bare_amplitude: f64,
    /// (k_m/k₀)|ψ⁰φ_m|², zero for closed sidebands.
    pub currents: Vec<f64>,
    pub quiver_amplitude: f64,
    /// V₀ ≫ ω, V₀ ≫ E or L ≫ χ₀ is violated (by less than a factor 10).
    pub outside_validity: bool,
}

impl OpaqueSideband {
    pub fn current(&self, m: i32) -> f64 {
        let c = (self.sidebands.len() / 2) as i64;
        let i = m as i64 + c;
        if (0..self.currents.len() as i64).contains(&i) {
            self.currents[i as usize]
        } else {
            0.0
        }
    }
}

/// Evaluate weights and currents for sidebands |m| ≤ `m_range`.
pub fn opaque_barrier(
    energy: f64,
    height: f64,
    length: f64,
    drive: &DriveField,
    particle: &ParticleSpec,
    m_range: usize,
) -> Result<OpaqueSideband> {
    if !(energy > 0.0 && height > energy && length > 0.0) {
        return Err(invalid("opaque estimate needs 0 < E < V0 and L > 0"));
    }
    drive.validate()?;
    particle.validate()?;
    let mu = particle.mass;
    let omega = drive.frequency;
    let chi = particle.charge_factor * drive.amplitude_si * HBAR_C_EV_M / (mu * omega * omega);
    let tau = length * (mu / (2.0 * height)).sqrt();
    let kappa = (2.0 * mu * height).sqrt();
    let a = (omega * tau).exp_m1();
    let b = (-omega * tau).exp_m1();
    let c = c64::new(a * b, 0.0).sqrt();
    let bessel = bessel_i_sequence(m_range, kappa * chi.abs() * c)?;
    let ratio = c64::new(a, 0.0) / c;
    let bare = 4.0 * (energy / height).sqrt() * (-kappa * length + energy * tau).exp();
    let k0 = (2.0 * mu * energy).sqrt();
    let m = m_range as i32;
    let mut weights = Vec::with_capacity(2 * m_range + 1);
    let mut currents = Vec::with_capacity(2 * m_range + 1);
    for j in -m..=m {
        let w = if chi == 0.0 {
            c64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0)
        } else {
            ratio.powi(j) * bessel[j.unsigned_abs() as usize]
        };
        let kinetic = energy + j as f64 * omega;
        let flux = if kinetic > 0.0 { (2.0 * mu * kinetic).sqrt() / k0 } else { 0.0 };
        weights.push(w);
        currents.push(flux * (bare * w.norm()).powi(2));
    }
    let outside_validity = height < 10.0 * omega || height < 10.0 * energy || length < 10.0 * chi.abs();
    Ok(OpaqueSideband {
        traversal_time: tau,
        sidebands: (-m..=m).collect(),
        weights,
        bare_amplitude: bare,
        currents,
        quiver_amplitude: chi,
        outside_validity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{perturbative_sidebands, BarrierRegime};
    use crate::units::{nm, ELECTRON_MASS_EV};

    fn slope(f: impl Fn(f64) -> f64, l: f64) -> f64 {
        let d = 1e-3 * l;
        (f(l + d).ln() - f(l - d).ln()) / (2.0 * d)
    }

    #[test]
    fn traversal_time_at_reference_barrier() {
        let s = opaque_barrier(0.28, 6.0, nm(0.2), &DriveField::new(1e7, 0.12).unwrap(), &ParticleSpec::electron(), 2).unwrap();
        assert!((s.traversal_time - 0.209).abs() < 5e-4, "{}", s.traversal_time);
        assert!((0.12 * s.traversal_time - 0.0251).abs() < 1e-4);
    }

    #[test]
    fn no_field_leaves_only_the_carrier() {
        let s = opaque_barrier(0.28, 6.0, nm(0.5), &DriveField::off(0.12), &ParticleSpec::electron(), 3).unwrap();
        for (m, w) in s.sidebands.iter().zip(&s.weights) {
            let expect = if *m == 0 { 1.0 } else { 0.0 };
            assert!((w - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn weights_follow_the_generating_function() {
        // Σ φ_m s^m = exp(X(a s + b/s)/2) for |s| = 1
        let drive = DriveField::new(6e8, 0.12).unwrap();
        let s = opaque_barrier(0.28, 6.0, nm(0.4), &drive, &ParticleSpec::electron(), 60).unwrap();
        let tau = s.traversal_time;
        let x = (2.0 * ELECTRON_MASS_EV * 6.0f64).sqrt() * s.quiver_amplitude.abs();
        let (a, b) = ((0.12 * tau).exp_m1(), (-0.12 * tau).exp_m1());
        for phase in [0.3f64, 1.7, 2.9] {
            let u = c64::from_polar(1.0, phase);
            let series: c64 = s.sidebands.iter().zip(&s.weights).map(|(&m, w)| w * u.powi(m)).sum();
            let closed = (0.5 * x * (a * u + b / u)).exp();
            assert!((series - closed).norm() < 1e-10 * closed.norm(), "{series} vs {closed}");
        }
    }

    // The quoted slopes need ω𝔗 ≫ 1 and |χ₀|√(2μV₀)·e^{ω𝔗} ≪ 1.
    #[test]
    fn large_length_slopes() {
        let (e, v0, w) = (0.28, 6.0, 0.12);
        let drive = DriveField::new(1e5, w).unwrap();
        let mu = ELECTRON_MASS_EV;
        let cur = |m: i32| move |l: f64| opaque_barrier(e, v0, l, &drive, &ParticleSpec::electron(), 4).unwrap().current(m);
        let l = nm(15.0);
        let up = slope(cur(1), l);
        let down = slope(cur(-1), l);
        let up_ref = -2.0 * (2.0 * mu * (v0 - e - w)).sqrt();
        let down_ref = -2.0 * (2.0 * mu * (v0 - e)).sqrt();
        assert!((up / up_ref - 1.0).abs() < 0.02, "{up} vs {up_ref}");
        assert!((down / down_ref - 1.0).abs() < 0.02, "{down} vs {down_ref}");
    }

    #[test]
    fn agrees_with_first_order_estimate_in_slope() {
        let (e, v0, w) = (0.28, 6.0, 0.12);
        let drive = DriveField::new(1e5, w).unwrap();
        let particle = ParticleSpec::electron();
        let l = nm(15.0);
        let opaque = |l: f64| opaque_barrier(e, v0, l, &drive, &particle, 4).unwrap();
        let chi = opaque(l).quiver_amplitude;
        let pert = |l: f64| perturbative_sidebands(e, v0, l, chi, w, particle.mass, BarrierRegime::Opaque).unwrap();
        let so = slope(|l| opaque(l).current(1), l);
        let sp = slope(|l| pert(l).upper_current, l);
        assert!((so / sp - 1.0).abs() < 0.02, "{so} vs {sp}");
        let so = slope(|l| opaque(l).current(-1), l);
        let sp = slope(|l| pert(l).lower_current, l);
        assert!((so / sp - 1.0).abs() < 0.02, "{so} vs {sp}");
        let mag = opaque(l).current(1) / pert(l).upper_current;
        assert!(mag > 0.3 && mag < 3.0, "magnitude ratio {mag}");
    }
}
