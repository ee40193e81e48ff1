//! Closed-form scattering off a static rectangular barrier between uneven
//! asymptotic levels (0 on the left, −V₁ on the right).

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticRectResult {
    pub reflection: c64,
    pub transmission: c64,
    pub k_in: c64,
    pub k_barrier: c64,
    pub k_out: c64,
}

impl StaticRectResult {
    pub fn reflected_probability(&self) -> f64 {
        self.reflection.norm_sqr()
    }

    /// Flux-weighted transmitted probability; zero when the right side is closed.
    pub fn transmitted_probability(&self) -> f64 {
        if self.k_out.im != 0.0 {
            return 0.0;
        }
        self.transmission.norm_sqr() * self.k_out.re / self.k_in.re
    }
}

fn wave_number(mass: f64, kinetic: f64) -> c64 {
    // principal root: imaginary part non-negative below the level
    c64::new(2.0 * mass * kinetic, 0.0).sqrt()
}

/// r_E and t_E for a barrier of height `height` on (0, L) and level −`offset`
/// beyond; valid for any E > 0 (the below-barrier formula continues
/// analytically through the top).
pub fn static_rectangular(energy: f64, height: f64, length: f64, offset: f64, mass: f64) -> Result<StaticRectResult> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(invalid("static oracle needs E > 0"));
    }
    if !(length > 0.0 && mass > 0.0) {
        return Err(invalid("static oracle needs L > 0 and μ > 0"));
    }
    let k1 = wave_number(mass, energy);
    let k2 = wave_number(mass, energy - height);
    let k3 = wave_number(mass, energy + offset);
    if k2.norm() == 0.0 {
        return Err(invalid("energy sits exactly at the barrier top"));
    }
    let i = c64::i();
    let e2 = (2.0 * i * k2 * length).exp();
    let r = ((k1 - k2) * (k2 + k3) + (k1 + k2) * (k2 - k3) * e2)
        / ((k1 + k2) * (k2 + k3) + (k1 - k2) * (k2 - k3) * e2);
    let t = -(4.0 * k1 * k2 * (i * length * (k2 - k3)).exp())
        / (-(k1 + k2) * (k2 + k3) + (k2 - k1) * (k2 - k3) * e2);
    Ok(StaticRectResult {
        reflection: r,
        transmission: t,
        k_in: k1,
        k_barrier: k2,
        k_out: k3,
    })
}
