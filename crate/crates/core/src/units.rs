//! Unit conversions between laboratory units and the internal natural units.
//!
//! Internally every energy is in eV and every length in eV⁻¹ (ħ = c = 1).
//! Conversions happen only at the I/O boundary.

/// ħc in eV·nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
/// ħc in MeV·fm (numerically identical to the eV·nm value).
pub const HBAR_C_MEV_FM: f64 = 197.326_980_4;
/// ħc in eV·m, used to turn a field in V/m into q·𝔈 in eV².
pub const HBAR_C_EV_M: f64 = HBAR_C_EV_NM * 1e-9;

/// Electron rest energy in eV.
pub const ELECTRON_MASS_EV: f64 = 510_998.95;
/// Deuteron rest energy in eV.
pub const DEUTERON_MASS_EV: f64 = 1_875_612_942.57;
/// Triton rest energy in eV.
pub const TRITON_MASS_EV: f64 = 2_808_921_132.98;
/// e²/(4πε₀) for two unit charges, in MeV·fm.
pub const COULOMB_MEV_FM: f64 = 1.439_96;

/// Conversion constants carried alongside a configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnitContext {
    pub hbar_c_ev_nm: f64,
    pub hbar_c_mev_fm: f64,
}

impl Default for UnitContext {
    fn default() -> Self {
        Self {
            hbar_c_ev_nm: HBAR_C_EV_NM,
            hbar_c_mev_fm: HBAR_C_MEV_FM,
        }
    }
}

impl UnitContext {
    pub fn nm_to_natural(&self, nm: f64) -> f64 {
        nm / self.hbar_c_ev_nm
    }

    pub fn natural_to_nm(&self, len: f64) -> f64 {
        len * self.hbar_c_ev_nm
    }

    pub fn fm_to_natural(&self, fm: f64) -> f64 {
        // 1 fm = 1/(ħc [MeV·fm] · 1e6) eV⁻¹
        fm / (self.hbar_c_mev_fm * 1e6)
    }

    pub fn natural_to_fm(&self, len: f64) -> f64 {
        len * self.hbar_c_mev_fm * 1e6
    }

    /// MeV·fm → dimensionless (eV · eV⁻¹).
    pub fn mev_fm_to_natural(&self, mev_fm: f64) -> f64 {
        mev_fm / self.hbar_c_mev_fm
    }

    /// V/m → eV² for a unit charge.
    pub fn field_to_natural(&self, v_per_m: f64) -> f64 {
        v_per_m * self.hbar_c_ev_nm * 1e-9
    }
}

/// Length in nm expressed in eV⁻¹.
pub fn nm(x: f64) -> f64 {
    x / HBAR_C_EV_NM
}

/// Length in fm expressed in eV⁻¹.
pub fn fm(x: f64) -> f64 {
    x / (HBAR_C_MEV_FM * 1e6)
}

/// eV⁻¹ expressed in nm.
pub fn to_nm(len: f64) -> f64 {
    len * HBAR_C_EV_NM
}

/// eV⁻¹ expressed in fm.
pub fn to_fm(len: f64) -> f64 {
    len * HBAR_C_MEV_FM * 1e6
}

/// MeV·fm expressed as a dimensionless natural-unit coupling.
pub fn mev_fm(x: f64) -> f64 {
    x / HBAR_C_MEV_FM
}

pub fn kev(x: f64) -> f64 {
    x * 1e3
}

pub fn mev(x: f64) -> f64 {
    x * 1e6
}

pub fn gev(x: f64) -> f64 {
    x * 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_round_trip() {
        let u = UnitContext::default();
        assert!((u.natural_to_nm(u.nm_to_natural(0.2)) - 0.2).abs() < 1e-15);
        assert!((u.natural_to_fm(u.fm_to_natural(3.89)) - 3.89).abs() < 1e-13);
        assert!((nm(1.0) - fm(1e6)).abs() < 1e-18);
    }

    #[test]
    fn coulomb_strength_is_fine_structure_constant() {
        let u = UnitContext::default();
        let alpha = u.mev_fm_to_natural(COULOMB_MEV_FM);
        assert!((alpha - 1.0 / 137.036).abs() < 1e-5);
    }
}
