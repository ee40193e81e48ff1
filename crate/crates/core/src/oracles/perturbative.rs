//! First-order sideband estimates for a weakly quivering rectangular barrier
//! with equal asymptotic levels.

use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierRegime {
    /// √(μV₀)·L ≪ 1.
    Transparent,
    /// √(μV₀)·L ≫ 1.
    Opaque,
}

/// Opacities above (transparent) or below (opaque) this bound are flagged.
const REGIME_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandEstimate {
    pub regime: BarrierRegime,
    /// √(μV₀)·L.
    pub opacity: f64,
    /// |C₊₁|².
    pub upper: f64,
    /// |C₋₁|².
    pub lower: f64,
    /// (k₊₁/k₀)|C₊₁|².
    pub upper_current: f64,
    /// (k₋₁/k₀)|C₋₁|².
    pub lower_current: f64,
    /// j⁺/j⁻ from the closed ratio formula (transparent regime only).
    pub current_ratio: Option<f64>,
    /// L_max^{+1} ≈ 1/√(2μ(V₀ − E − ω)); `None` above the sideband level.
    pub upper_peak_length: Option<f64>,
    /// L_max^{−1} ≈ 1/√(2μ(V₀ − E + ω)).
    pub lower_peak_length: Option<f64>,
    /// Parameters lie outside the asymptotic domain of the formulas.
    pub regime_mismatch: bool,
}

fn peak_length(mass: f64, gap: f64) -> Option<f64> {
    (gap > 0.0).then(|| 1.0 / (2.0 * mass * gap).sqrt())
}

/// Transparent ratio j⁺/j⁻ = √(E−ω)/√(E+ω) · (√(E+ω) − √E)² / (√(E−ω) − √E)².
pub fn transparent_current_ratio(energy: f64, frequency: f64) -> Result<f64> {
    if !(energy > frequency && frequency > 0.0) {
        return Err(invalid("current ratio needs E > ω > 0"));
    }
    let (sm, s0, sp) = ((energy - frequency).sqrt(), energy.sqrt(), (energy + frequency).sqrt());
    Ok(sm / sp * (sp - s0).powi(2) / (sm - s0).powi(2))
}

/// Evaluate the ±1 sideband formulas of the chosen regime.
pub fn perturbative_sidebands(
    energy: f64,
    height: f64,
    length: f64,
    quiver: f64,
    frequency: f64,
    mass: f64,
    regime: BarrierRegime,
) -> Result<SidebandEstimate> {
    if !(energy > 0.0 && height > 0.0 && length > 0.0 && mass > 0.0 && frequency > 0.0) {
        return Err(invalid("sideband estimate needs positive E, V0, L, ω, μ"));
    }
    if !quiver.is_finite() {
        return Err(invalid("quiver amplitude must be finite"));
    }
    let opacity = (mass * height).sqrt() * length;
    let (upper, lower, mismatch) = match regime {
        BarrierRegime::Transparent => {
            let pre = (0.5 * mass * height * length * quiver).powi(2);
            let k0 = c64::new(2.0 * mass * energy, 0.0).sqrt();
            let side = |e: f64| {
                let k = c64::new(2.0 * mass * e, 0.0).sqrt();
                pre * (k0 / k - 1.0).norm_sqr()
            };
            (side(energy + frequency), side(energy - frequency), opacity > REGIME_MARGIN || energy <= frequency)
        }
        BarrierRegime::Opaque => {
            let pre = 8.0 * mass * quiver * quiver * energy / height;
            let decay = |gap: f64| (-2.0 * (2.0 * mass * gap.abs()).sqrt() * length).exp();
            let up_gap = height - energy - frequency;
            let gap = height - energy;
            (
                pre * up_gap.abs() * decay(up_gap),
                pre * gap.abs() * decay(gap),
                opacity < REGIME_MARGIN || up_gap <= 0.0,
            )
        }
    };
    let current_ratio = match regime {
        BarrierRegime::Transparent if energy > frequency => Some(transparent_current_ratio(energy, frequency)?),
        _ => None,
    };
    Ok(SidebandEstimate {
        regime,
        opacity,
        upper,
        lower,
        upper_current: (1.0 + frequency / energy).sqrt() * upper,
        lower_current: (1.0 - frequency / energy).max(0.0).sqrt() * lower,
        current_ratio,
        upper_peak_length: peak_length(mass, height - energy - frequency),
        lower_peak_length: peak_length(mass, height - energy + frequency),
        regime_mismatch: mismatch,
    })
}
