//! Gamow exponent −2∫√(2μ(V − E)) dx over the classically forbidden region.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::adaptive_vector;
use crate::setup::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamowExponent {
    /// ln of the tunneling probability in the WKB approximation.
    pub exponent: f64,
    /// Closed-form value where one exists (Coulomb: antiderivative).
    pub analytic: Option<f64>,
    /// Forbidden intervals in the incidence coordinate.
    pub forbidden: Vec<(f64, f64)>,
}

impl GamowExponent {
    fn open() -> Self {
        Self {
            exponent: 0.0,
            analytic: Some(0.0),
            forbidden: Vec::new(),
        }
    }
}

/// ∫_{r₀}^{b} √(α/r − E) dr with b = α/E, in closed form (without √(2μ)).
fn coulomb_integral_closed(strength: f64, inner: f64, energy: f64) -> f64 {
    let b = strength / energy;
    let s = inner / b;
    energy.sqrt() * b * (s.sqrt().acos() - (s * (1.0 - s)).sqrt())
}

/// The same integral by adaptive quadrature with r = b − (b − r₀)u², which
/// removes the square-root zero at the outer turning point.
fn coulomb_integral_quadrature(strength: f64, inner: f64, energy: f64) -> (f64, bool) {
    let b = strength / energy;
    let w = b - inner;
    let scale = energy.sqrt() * b;
    let q = adaptive_vector(0.0, 1.0, 1, 1e-12 * scale, 40, &mut |u, out| {
        let r = b - w * u * u;
        out[0] = (strength / r - energy).max(0.0).sqrt() * 2.0 * w * u;
    });
    (q.values[0], q.converged)
}

pub fn wkb_gamow(potential: &PotentialSpec, energy: f64, mass: f64) -> Result<GamowExponent> {
    potential.validate()?;
    if !(energy > 0.0 && mass > 0.0) {
        return Err(invalid("Gamow exponent needs E > 0 and μ > 0"));
    }
    if energy + potential.offset() <= 0.0 {
        return Err(invalid("transmitted side is closed at this energy"));
    }
    let root = (2.0 * mass).sqrt();
    match potential {
        PotentialSpec::Rectangular { height, length, .. } => {
            if energy >= *height {
                return Ok(GamowExponent::open());
            }
            let e = -2.0 * length * (2.0 * mass * (height - energy)).sqrt();
            Ok(GamowExponent {
                exponent: e,
                analytic: Some(e),
                forbidden: vec![(0.0, *length)],
            })
        }
        PotentialSpec::TruncatedCoulomb {
            strength,
            inner_radius,
            ..
        } => {
            if energy >= strength / inner_radius {
                return Ok(GamowExponent::open());
            }
            let (numeric, converged) = coulomb_integral_quadrature(*strength, *inner_radius, energy);
            if !converged {
                return Err(crate::Error::Quadrature {
                    x: *inner_radius,
                    achieved: f64::NAN,
                });
            }
            let closed = coulomb_integral_closed(*strength, *inner_radius, energy);
            let outer = 2.0 * inner_radius - strength / energy;
            Ok(GamowExponent {
                exponent: -2.0 * root * numeric,
                analytic: Some(-2.0 * root * closed),
                forbidden: vec![(outer, *inner_radius)],
            })
        }
        PotentialSpec::Tabulated { samples } => {
            let mut total = 0.0;
            let mut forbidden: Vec<(f64, f64)> = Vec::new();
            for w in samples.windows(2) {
                let ((x0, v0), (x1, v1)) = (w[0], w[1]);
                let (g0, g1) = (v0 - energy, v1 - energy);
                if g0 <= 0.0 && g1 <= 0.0 {
                    continue;
                }
                // clip to the part of the segment where V > E
                let cross = x0 + (x1 - x0) * g0 / (g0 - g1);
                let (a, b, ga, gb) = match (g0 > 0.0, g1 > 0.0) {
                    (true, true) => (x0, x1, g0, g1),
                    (true, false) => (x0, cross, g0, 0.0),
                    _ => (cross, x1, 0.0, g1),
                };
                total += if (gb - ga).abs() <= 1e-14 * ga.max(gb) {
                    (b - a) * ga.sqrt()
                } else {
                    (2.0 / 3.0) * (b - a) * (gb.powf(1.5) - ga.powf(1.5)) / (gb - ga)
                };
                match forbidden.last_mut() {
                    Some(last) if last.1 == a => last.1 = b,
                    _ => forbidden.push((a, b)),
                }
            }
            let e = -2.0 * root * total;
            Ok(GamowExponent {
                exponent: e,
                analytic: Some(e),
                forbidden,
            })
        }
    }
}
