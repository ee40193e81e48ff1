//! Mode matching for a rectangular barrier in an oscillating field.
//!
//! In the velocity gauge the barrier stays put and every plane wave picks up
//! the quiver phase e^{±ikχ(t)}. Expanding these phases with
//! e^{a cos ωt} = Σ Iₙ(a) e^{inωt} and matching value and slope at x = 0 and
//! x = L gives a linear system for the reflected (A), barrier (B^r, B^l) and
//! transmitted (C) amplitudes. The channel set |m| ≤ M is matched on the
//! Fourier orders |n| ≤ M + 8 in the least-squares sense.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_i_sequence;
use crate::c64;
use crate::error::{invalid, Error, Result};
use crate::setup::{DriveField, ParticleSpec};
use crate::units::HBAR_C_EV_M;

/// Extra Fourier orders matched beyond the channel cutoff.
pub const EXTRA_ORDERS: usize = 8;
/// Condition estimates above this are reported as failures.
pub const CONDITION_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselMatchSolution {
    pub cutoff: usize,
    /// Sideband indices −M..=M.
    pub sidebands: Vec<i32>,
    pub reflected_amplitudes: Vec<c64>,
    pub barrier_right: Vec<c64>,
    pub barrier_left: Vec<c64>,
    pub transmitted_amplitudes: Vec<c64>,
    /// Flux-weighted probability per sideband (0 for closed channels).
    pub reflected: Vec<f64>,
    pub transmitted: Vec<f64>,
    pub total_transmission: f64,
    pub total_reflection: f64,
    /// ‖Ax − b‖/‖b‖ of the equilibrated system.
    pub residual: f64,
    /// Ratio of extreme singular values of the equilibrated matrix.
    pub condition: f64,
    pub quiver_amplitude: f64,
}

fn root(mass: f64, kinetic: f64) -> c64 {
    c64::new(2.0 * mass * kinetic, 0.0).sqrt()
}

/// Iₙ(z) for |n| ≤ n_max, indexable by signed order.
struct BesselRow {
    vals: Vec<c64>,
}

impl BesselRow {
    fn new(n_max: usize, z: c64) -> Result<Self> {
        Ok(Self {
            vals: bessel_i_sequence(n_max, z)?,
        })
    }

    fn at(&self, n: i64) -> c64 {
        self.vals[n.unsigned_abs() as usize]
    }
}

/// Solve the junction system for incidence in sideband 0.
pub fn quivering_rectangular(
    energy: f64,
    height: f64,
    length: f64,
    offset: f64,
    drive: &DriveField,
    particle: &ParticleSpec,
    cutoff: usize,
) -> Result<BesselMatchSolution> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid("junction oracle needs E > 0"));
    }
    if !(length > 0.0) {
        return Err(invalid("junction oracle needs L > 0"));
    }
    drive.validate()?;
    particle.validate()?;
    let mu = particle.mass;
    let omega = drive.frequency;
    let chi = if drive.amplitude_si == 0.0 {
        0.0
    } else {
        particle.charge_factor * drive.amplitude_si * HBAR_C_EV_M / (mu * omega * omega)
    };
    let m = cutoff as i64;
    // same threshold regularization as the channel solver
    let mut e = energy;
    let touches = |e: f64| {
        (-m..=m).any(|j| {
            let s = e + j as f64 * omega;
            let scale = 8.0 * f64::EPSILON * (e.abs() + (j as f64 * omega).abs() + offset.abs() + height.abs());
            s.abs() <= scale || (s + offset).abs() <= scale || (s - height).abs() <= scale
        })
    };
    if touches(e) {
        e += 1e-12 * omega;
    }
    let ks: Vec<(c64, c64, c64)> = (-m..=m)
        .map(|j| {
            let s = e + j as f64 * omega;
            (root(mu, s), root(mu, s - height), root(mu, s + offset))
        })
        .collect();
    let orders = m + EXTRA_ORDERS as i64;
    let top = (orders + m) as usize;
    let i = c64::i();
    let incident = BesselRow::new(orders as usize, i * ks[cutoff].0 * chi)?;
    let mut rows_ref = Vec::with_capacity(ks.len());
    for &(k1, k2, k3) in &ks {
        rows_ref.push((
            BesselRow::new(top, -i * k1 * chi)?,
            BesselRow::new(top, i * k2 * chi)?,
            BesselRow::new(top, -i * k2 * chi)?,
            BesselRow::new(top, i * k3 * chi)?,
        ));
    }
    let nch = ks.len();
    let neq = 4 * (2 * orders as usize + 1);
    let nun = 4 * nch;
    let mut a = Mat::<c64>::zeros(neq, nun);
    let mut b = Mat::<c64>::zeros(neq, 1);
    for (row, n) in (-orders..=orders).enumerate() {
        let r = 4 * row;
        b[(r, 0)] = incident.at(n);
        b[(r + 1, 0)] = i * ks[cutoff].0 * incident.at(n);
        for (c, (jm, &(k1, k2, k3))) in (-m..=m).zip(&ks).enumerate() {
            let (ia, ibr, ibl, ic) = &rows_ref[c];
            let o = n + jm;
            let (ea, ebr, ebl, ec) = (ia.at(o), ibr.at(o), ibl.at(o), ic.at(o));
            let (p2, m2, p3) = ((i * k2 * length).exp(), (-i * k2 * length).exp(), (i * k3 * length).exp());
            // value and slope at x = 0
            a[(r, c)] = -ea;
            a[(r, nch + c)] = ebr;
            a[(r, 2 * nch + c)] = ebl;
            a[(r + 1, c)] = i * k1 * ea;
            a[(r + 1, nch + c)] = i * k2 * ebr;
            a[(r + 1, 2 * nch + c)] = -i * k2 * ebl;
            // value and slope at x = L
            a[(r + 2, nch + c)] = ebr * p2;
            a[(r + 2, 2 * nch + c)] = ebl * m2;
            a[(r + 2, 3 * nch + c)] = -ec * p3;
            a[(r + 3, nch + c)] = i * k2 * ebr * p2;
            a[(r + 3, 2 * nch + c)] = -i * k2 * ebl * m2;
            a[(r + 3, 3 * nch + c)] = -i * k3 * ec * p3;
        }
    }
    // equilibrate rows, then columns
    for r in 0..neq {
        let s = (0..nun).map(|c| a[(r, c)].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for c in 0..nun {
                a[(r, c)] /= s;
            }
            b[(r, 0)] /= s;
        }
    }
    let mut col_scale = vec![1.0; nun];
    for (c, cs) in col_scale.iter_mut().enumerate() {
        let s = (0..neq).map(|r| a[(r, c)].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            *cs = s;
            for r in 0..neq {
                a[(r, c)] /= s;
            }
        }
    }
    if !(0..nun).all(|c| (0..neq).all(|r| a[(r, c)].re.is_finite() && a[(r, c)].im.is_finite())) {
        return Err(Error::IllConditioned { estimate: f64::INFINITY });
    }
    let sv = a.singular_values().map_err(|_| Error::IllConditioned { estimate: f64::INFINITY })?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::IllConditioned { estimate: condition });
    }
    let x = a.qr().solve_lstsq(&b);
    let res = &a * &x - &b;
    let norm = |v: &Mat<c64>| (0..v.nrows()).map(|r| v[(r, 0)].norm_sqr()).sum::<f64>().sqrt();
    let residual = norm(&res) / norm(&b);
    let u: Vec<c64> = (0..nun).map(|c| x[(c, 0)] / col_scale[c]).collect();

    let k0 = ks[cutoff].0.re;
    let flux = |k: c64, amp: c64| if k.im == 0.0 && k.re > 0.0 { amp.norm_sqr() * k.re / k0 } else { 0.0 };
    let reflected: Vec<f64> = (0..nch).map(|c| flux(ks[c].0, u[c])).collect();
    let transmitted: Vec<f64> = (0..nch).map(|c| flux(ks[c].2, u[3 * nch + c])).collect();
    Ok(BesselMatchSolution {
        cutoff,
        sidebands: (-m..=m).map(|j| j as i32).collect(),
        reflected_amplitudes: u[..nch].to_vec(),
        barrier_right: u[nch..2 * nch].to_vec(),
        barrier_left: u[2 * nch..3 * nch].to_vec(),
        transmitted_amplitudes: u[3 * nch..].to_vec(),
        total_transmission: transmitted.iter().sum(),
        total_reflection: reflected.iter().sum(),
        reflected,
        transmitted,
        residual,
        condition,
        quiver_amplitude: chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::static_rectangular;
    use crate::units::{nm, ELECTRON_MASS_EV};

    #[test]
    fn zero_field_reduces_to_static_barrier() {
        let drive = DriveField::off(0.12);
        for v1 in [0.0, 1.0] {
            let s = quivering_rectangular(2.0, 6.0, nm(0.2), v1, &drive, &ParticleSpec::electron(), 3).unwrap();
            let o = static_rectangular(2.0, 6.0, nm(0.2), v1, ELECTRON_MASS_EV).unwrap();
            let c = s.cutoff;
            assert!((s.transmitted_amplitudes[c] - o.transmission).norm() < 1e-10);
            assert!((s.reflected_amplitudes[c] - o.reflection).norm() < 1e-10);
            for j in (0..s.sidebands.len()).filter(|&j| j != c) {
                assert!(s.transmitted_amplitudes[j].norm() < 1e-14);
                assert!(s.reflected_amplitudes[j].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn weak_field_solution_conserves_probability() {
        let drive = DriveField::new(2e7, 0.12).unwrap();
        let s = quivering_rectangular(0.28, 6.0, nm(0.2), 0.0, &drive, &ParticleSpec::electron(), 12).unwrap();
        assert!(s.residual < 1e-9, "residual {}", s.residual);
        let sum = s.total_transmission + s.total_reflection;
        assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
    }

    #[test]
    fn strong_field_system_is_flagged_ill_conditioned() {
        let drive = DriveField::new(6e8, 0.12).unwrap();
        let err = quivering_rectangular(0.2, 6.0, nm(0.2), 0.0, &drive, &ParticleSpec::electron(), 16).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }
}
