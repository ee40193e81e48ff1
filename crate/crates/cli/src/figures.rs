//! Sweeps behind each figure, with the captioned parameters.

use floquet_core::resonance::ResonanceSettings;

use crate::config::{
    Axis, DriveConfig, ParticleConfig, PotentialConfig, ProblemConfig, SolverConfig, Spacing, SweepSpec,
};
use crate::error::{config_error, CliError};

pub const FIGURE_IDS: [&str; 12] = ["F1", "F2", "F3", "F4", "F5", "F6", "F7", "F8", "A9", "A10", "A11", "A12"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub base: ProblemConfig,
    pub solver: SolverConfig,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone)]
pub enum Dataset {
    Sweeps(Vec<Series>),
    Resonances(ProblemConfig, ResonanceSettings),
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub id: &'static str,
    pub title: &'static str,
    pub dataset: Dataset,
    /// Parameter choices not fixed by the caption.
    pub notes: Vec<&'static str>,
}

fn rect(energy: f64, field: f64, offset: f64, length_nm: f64) -> ProblemConfig {
    ProblemConfig {
        energy_ev: energy,
        particle: ParticleConfig::Electron,
        drive: DriveConfig {
            field_v_per_m: field,
            frequency_ev: 0.12,
        },
        potential: PotentialConfig::Rectangular {
            height_ev: 6.0,
            length_nm,
            offset_ev: offset,
        },
    }
}

fn coulomb(energy_kev: f64, omega_kev: f64, field: f64, depth_ev: f64) -> ProblemConfig {
    ProblemConfig {
        energy_ev: energy_kev * 1e3,
        particle: ParticleConfig::DeuteriumTritium,
        drive: DriveConfig {
            field_v_per_m: field,
            frequency_ev: omega_kev * 1e3,
        },
        potential: PotentialConfig::Coulomb {
            strength_mev_fm: floquet_core::units::COULOMB_MEV_FM,
            inner_radius_fm: 3.89,
            depth_ev,
        },
    }
}

fn solver(cutoff: usize) -> SolverConfig {
    SolverConfig {
        cutoff,
        ..SolverConfig::default()
    }
}

fn axis(axis: Axis, start: f64, stop: f64, count: usize, spacing: Spacing) -> SweepSpec {
    SweepSpec {
        axis,
        start,
        stop,
        count,
        spacing,
        timeout_s: 300.0,
    }
}

fn series(label: String, base: ProblemConfig, solver: SolverConfig, sweep: SweepSpec) -> Series {
    Series {
        label,
        base,
        solver,
        sweep,
    }
}

const RECT_CUTOFF: usize = 16;
const COULOMB_CUTOFF: usize = 8;

/// The dataset behind figure `id`; unknown ids list the available ones.
pub fn figure(id: &str) -> Result<Figure, CliError> {
    use Axis::*;
    use Spacing::*;
    let energy_scan = |start, stop, n| axis(Energy, start, stop, n, Linear);
    let kev_scan = |start: f64, stop: f64, n| axis(Energy, start * 1e3, stop * 1e3, n, Linear);
    let fig = match id.to_ascii_uppercase().as_str() {
        "F1" => Figure {
            id: "F1",
            title: "relative enhancement vs E for uneven asymptotic levels (rectangular barrier)",
            dataset: Dataset::Sweeps(
                [-0.05, 0.0, 0.05]
                    .iter()
                    .map(|&v1| {
                        series(format!("V1={v1}eV"), rect(0.1, 2.4e8, v1, 0.2), solver(RECT_CUTOFF), energy_scan(0.01, 0.4, 79))
                    })
                    .collect(),
            ),
            notes: vec![
                "drive frequency not captioned; 0.12 eV as in F2/F3",
                "V1 values not captioned; ±0.05 eV place E = ω − V1 inside the scan",
            ],
        },
        "F2" => Figure {
            id: "F2",
            title: "relative enhancement vs E for three field strengths (rectangular barrier)",
            dataset: Dataset::Sweeps(
                [4.8e8, 5.4e8, 6.0e8]
                    .iter()
                    .map(|&f| series(format!("field={f:e}"), rect(0.1, f, 0.0, 0.2), solver(RECT_CUTOFF), energy_scan(0.01, 0.36, 176)))
                    .collect(),
            ),
            notes: vec!["E grid of 2 meV; reference lines at E = ω and 2ω"],
        },
        "F3" => Figure {
            id: "F3",
            title: "first sideband probabilities vs barrier width",
            dataset: Dataset::Sweeps(vec![series(
                "E=0.28eV".into(),
                rect(0.28, 6e8, 0.0, 0.2),
                solver(RECT_CUTOFF),
                axis(Length, 0.05, 0.5, 46, Linear),
            )]),
            notes: vec!["sidebands in columns t_p1 (E + ω) and t_m1 (E − ω)"],
        },
        "F4" => Figure {
            id: "F4",
            title: "total transmission vs ω: full, static and time-averaged (truncated Coulomb)",
            dataset: Dataset::Sweeps(vec![series(
                "E=6keV".into(),
                coulomb(6.0, 6.0, 2e16, 0.0),
                SolverConfig {
                    time_averaged: true,
                    ..solver(16)
                },
                axis(Frequency, 1e3, 20e3, 20, Linear),
            )]),
            notes: vec![
                "33 channels (N = 16) as captioned",
                "ω range not captioned; 1 to 20 keV",
            ],
        },
        "F5" => Figure {
            id: "F5",
            title: "relative enhancement vs E at ω = 6 keV for three field strengths (truncated Coulomb)",
            dataset: Dataset::Sweeps(
                [1.5e17, 1.8e17, 2.0e17]
                    .iter()
                    .map(|&f| series(format!("field={f:e}"), coulomb(6.0, 6.0, f, 0.0), solver(COULOMB_CUTOFF), kev_scan(2.0, 14.0, 49)))
                    .collect(),
            ),
            notes: vec!["N = 8 sidebands", "E grid of 0.25 keV; reference line at E = ω"],
        },
        "F6" => Figure {
            id: "F6",
            title: "channel-resolved transmission vs nuclear depth V1 at E = 14 keV",
            dataset: Dataset::Sweeps(vec![series(
                "E=14keV".into(),
                coulomb(14.0, 6.0, 8e16, 0.0),
                solver(16),
                axis(Offset, 1e3, 2e7, 27, Log),
            )]),
            notes: vec!["V1 from 1 keV to 20 MeV, log spaced; N = 16 sidebands"],
        },
        "F7" => Figure {
            id: "F7",
            title: "complex-scaled spectrum at ω = 6 keV",
            dataset: Dataset::Resonances(coulomb(6.0, 6.0, 3e16, 0.0), ResonanceSettings::default()),
            notes: vec!["exterior complex scaling, θ ∈ {0.10, 0.15, 0.20}"],
        },
        "F8" => Figure {
            id: "F8",
            title: "relative enhancement vs field strength at E = ω = 2 keV",
            dataset: Dataset::Sweeps(vec![series(
                "E=2keV".into(),
                coulomb(2.0, 2.0, 1e15, 0.0),
                solver(COULOMB_CUTOFF),
                axis(Field, 1e15, 2e17, 24, Log),
            )]),
            notes: vec!["N = 8 sidebands"],
        },
        "A9" => Figure {
            id: "A9",
            title: "relative enhancement vs E for a strongly attractive level behind the barrier",
            dataset: Dataset::Sweeps(
                [1.6e8, 2.0e8, 2.4e8]
                    .iter()
                    .map(|&f| series(format!("field={f:e}"), rect(0.1, f, 352e3, 0.2), solver(RECT_CUTOFF), energy_scan(0.01, 0.4, 79)))
                    .collect(),
            ),
            notes: vec!["V1 = 352 keV as captioned, although the barrier is eV scale"],
        },
        "A10" => {
            let mut s: Vec<Series> = [1.0e16, 1.5e16, 2.0e16]
                .iter()
                .map(|&f| series(format!("omega=2keV,field={f:e}"), coulomb(6.0, 2.0, f, 0.0), solver(COULOMB_CUTOFF), kev_scan(1.0, 14.0, 53)))
                .collect();
            s.extend(
                [3.0e17, 3.5e17, 4.0e17]
                    .iter()
                    .map(|&f| series(format!("omega=10keV,field={f:e}"), coulomb(6.0, 10.0, f, 0.0), solver(COULOMB_CUTOFF), kev_scan(1.0, 14.0, 53))),
            );
            Figure {
                id: "A10",
                title: "relative enhancement vs E at ω = 2 keV and ω = 10 keV",
                dataset: Dataset::Sweeps(s),
                notes: vec!["N = 8 sidebands"],
            }
        }
        "A11" => Figure {
            id: "A11",
            title: "relative enhancement vs E for several potential depths",
            dataset: Dataset::Sweeps(
                [-4e3, -2e3, 0.0, 2e3, 4e3]
                    .iter()
                    .map(|&v1| series(format!("V1={v1}eV"), coulomb(6.0, 6.0, 8e16, v1), solver(COULOMB_CUTOFF), kev_scan(1.0, 14.0, 53)))
                    .collect(),
            ),
            notes: vec!["captioned depths list 4 keV twice; the set −4, −2, 0, 2, 4 keV is used"],
        },
        "A12" => Figure {
            id: "A12",
            title: "main and first sideband transmission vs E at ω = 6 keV, 1e17 V/m",
            dataset: Dataset::Sweeps(vec![series(
                "E scan".into(),
                coulomb(6.0, 6.0, 1e17, 0.0),
                solver(COULOMB_CUTOFF),
                kev_scan(1.0, 20.0, 39),
            )]),
            notes: vec!["channels in columns t_0, t_p1, t_m1"],
        },
        _ => {
            return Err(config_error(format!(
                "unknown figure id '{id}'; available: {}",
                FIGURE_IDS.join(", ")
            )))
        }
    };
    Ok(fig)
}

impl Figure {
    /// Shrink every sweep to `count` points (at least 2).
    pub fn with_points(mut self, count: usize) -> Self {
        if let Dataset::Sweeps(s) = &mut self.dataset {
            for x in s {
                x.sweep.count = count.max(2);
            }
        }
        self
    }
}
