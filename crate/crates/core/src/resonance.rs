//! Complex-scaled Floquet–Schrödinger operator and resonance classification.
//!
//! The channel equations
//! ℰ u_n = −u_n''/(2μ) − nω u_n + Σ_m W_{n−m} u_m − V₁Θ(x − s) u_n
//! are discretized on a contour z(x) that is real over the interaction core
//! and rotated by e^{iθ} outside it (exterior scaling). Outside the core the
//! harmonics are either zero or, for the Coulomb tail, analytic in z, so the
//! continuum turns into rays ℰ = a + |k|²e^{−2iθ}/(2μ) anchored at the channel
//! thresholds a while resonances stay put.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{invalid, Error, Result};
use crate::floquet::ScatteringProblem;
use crate::kh::FourierPotential;
use crate::setup::PotentialSpec;

/// Grid and contour layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    /// Interior nodes (real contour).
    pub interior_points: usize,
    /// Nodes on each rotated exterior.
    pub exterior_points: usize,
    /// Real core [start, end]; equal ends give uniform scaling about that point.
    pub core: (f64, f64),
    /// Lengths of the left and right exteriors.
    pub exterior: (f64, f64),
}

impl ContourSpec {
    /// Core around the quivering support with exteriors of `reach` on both sides.
    pub fn around(problem: &ScatteringProblem, points: usize, reach: f64) -> Result<Self> {
        if points < 8 {
            return Err(invalid("resonance grid needs at least 8 points per channel"));
        }
        let chi = problem.quiver().amplitude.abs();
        let p = &problem.potential;
        let (lo, hi) = match p {
            PotentialSpec::TruncatedCoulomb { inner_radius, .. } => (inner_radius - chi, inner_radius + chi),
            _ => (p.support_start(None) - chi, p.step_position() + chi),
        };
        let pad = 0.1 * (hi - lo).max(f64::MIN_POSITIVE);
        let interior = (points / 4).max(4);
        Ok(Self {
            interior_points: interior,
            exterior_points: (points - interior) / 2,
            core: (lo - pad, hi + pad),
            exterior: (reach, reach),
        })
    }

    /// Uniform scaling about `origin` over [origin − left, origin + right].
    pub fn uniform(origin: f64, left: f64, right: f64, points: usize) -> Self {
        Self {
            interior_points: 0,
            exterior_points: points / 2,
            core: (origin, origin),
            exterior: (left, right),
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.core;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(invalid("contour core must be a finite interval"));
        }
        if !(self.exterior.0 > 0.0 && self.exterior.1 > 0.0) {
            return Err(invalid("contour exteriors must have positive length"));
        }
        if self.exterior_points < 2 {
            return Err(invalid("contour needs at least 2 exterior points per side"));
        }
        if a < b && self.interior_points < 2 {
            return Err(invalid("a finite core needs at least 2 interior points"));
        }
        Ok(())
    }

    /// Real parameters and contour points, without the two Dirichlet ends.
    fn nodes(&self, theta: f64) -> (Vec<f64>, Vec<c64>, c64, c64) {
        let (a, b) = self.core;
        let rot = c64::from_polar(1.0, theta);
        let map = |x: f64| {
            if x < a {
                a + (x - a) * rot
            } else if x > b {
                b + (x - b) * rot
            } else {
                c64::new(x, 0.0)
            }
        };
        let mut xs = Vec::new();
        let (left, right) = self.exterior;
        let ne = self.exterior_points;
        let hl = left / ne as f64;
        for j in 1..=ne {
            xs.push(a - left + j as f64 * hl);
        }
        if b > a {
            let ni = self.interior_points;
            let hi = (b - a) / ni as f64;
            for j in 1..ni {
                xs.push(a + j as f64 * hi);
            }
            xs.push(b);
        }
        let hr = right / ne as f64;
        for j in 1..ne {
            xs.push(b + j as f64 * hr);
        }
        let zs = xs.iter().map(|&x| map(x)).collect();
        (xs, zs, map(a - left), map(b + right))
    }
}

/// Complex-scaled operator on (points × channels) unknowns, channel-major.
#[derive(Debug, Clone)]
pub struct RotatedOperator {
    pub theta: f64,
    pub positions: Vec<f64>,
    pub contour: Vec<c64>,
    pub channels: Vec<i32>,
    pub frequency: f64,
    pub mass: f64,
    /// Channel thresholds −nω (left) and −nω − V₁ (right).
    pub anchors: Vec<f64>,
    pub matrix: Mat<c64>,
}

impl RotatedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Wₙ(z) of the Coulomb tail continued to complex z (needs Re z + |χ| < r₀).
fn coulomb_tail_at(strength: f64, inner: f64, chi: f64, z: c64, out: &mut [c64]) {
    let a = 2.0 * inner - z;
    let root = ((a - chi) * (a + chi)).sqrt();
    let rho = -chi / (a + root);
    let mut term = strength / root;
    for slot in out.iter_mut() {
        *slot = term;
        term *= rho;
    }
}

/// Smallest allowed distance of the contour to a Coulomb branch point, in
/// units of r₀.
const SINGULARITY_MARGIN: f64 = 1e-3;

pub fn build_rotated(problem: &ScatteringProblem, cutoff: usize, theta: f64, grid: &ContourSpec) -> Result<RotatedOperator> {
    problem.validate()?;
    grid.validate()?;
    if !(theta >= 0.0 && theta < std::f64::consts::FRAC_PI_4) {
        return Err(invalid(format!("rotation angle must lie in [0, π/4), got {theta}")));
    }
    let mu = problem.particle.mass;
    let omega = problem.drive.frequency;
    let quiver = problem.quiver();
    let chi = quiver.amplitude;
    let fourier = FourierPotential::new(problem.potential.clone(), quiver, 2 * cutoff, None)?;
    let v1 = problem.potential.offset();
    let step = problem.potential.step_position();
    let (xs, zs, z_left, z_right) = grid.nodes(theta);
    let np = xs.len();
    let nh = 2 * cutoff + 1;
    let nc = 2 * cutoff + 1;

    // harmonics per node
    let mut harm = vec![vec![c64::new(0.0, 0.0); nh]; np];
    let mut real = vec![0.0; nh];
    let (core_lo, core_hi) = grid.core;
    for (j, (&x, &z)) in xs.iter().zip(&zs).enumerate() {
        if x >= core_lo && x <= core_hi {
            fourier.harmonics(x, &mut real)?;
            for (h, &r) in harm[j].iter_mut().zip(&real) {
                *h = c64::new(r, 0.0);
            }
        } else if x < core_lo {
            if let PotentialSpec::TruncatedCoulomb {
                strength,
                inner_radius,
                ..
            } = &problem.potential
            {
                if z.re + chi.abs() >= *inner_radius {
                    return Err(invalid("Coulomb exterior starts inside the quiver range; widen the contour core"));
                }
                let a = 2.0 * inner_radius - z;
                let gap = (a - chi.abs()).norm().min((a + chi.abs()).norm());
                if gap < SINGULARITY_MARGIN * inner_radius {
                    return Err(invalid(
                        "rotated contour passes too close to the Coulomb singularity; enlarge the margin to r0",
                    ));
                }
                coulomb_tail_at(*strength, *inner_radius, chi, z, &mut harm[j]);
            }
        }
    }

    let n = np * nc;
    let mut m = Mat::<c64>::zeros(n, n);
    let kin = 1.0 / (2.0 * mu);
    for (ci, ch) in (-(cutoff as i32)..=cutoff as i32).enumerate() {
        let base = ci * np;
        for j in 0..np {
            let zl = if j == 0 { z_left } else { zs[j - 1] };
            let zr = if j + 1 == np { z_right } else { zs[j + 1] };
            let (hl, hr) = (zs[j] - zl, zr - zs[j]);
            let s = 2.0 / (hl + hr);
            // −(1/2μ) d²/dz² on the three-point stencil
            m[(base + j, base + j)] = kin * s * (1.0 / hr + 1.0 / hl);
            if j > 0 {
                m[(base + j, base + j - 1)] = -kin * s / hl;
            }
            if j + 1 < np {
                m[(base + j, base + j + 1)] = -kin * s / hr;
            }
            let level = if xs[j] >= step { -v1 } else { 0.0 };
            m[(base + j, base + j)] += c64::new(level - ch as f64 * omega, 0.0);
        }
        for cj in 0..nc {
            let d = ci.abs_diff(cj);
            let other = cj * np;
            for j in 0..np {
                m[(base + j, other + j)] += harm[j][d];
            }
        }
    }
    let mut anchors: Vec<f64> = (-(cutoff as i32)..=cutoff as i32).map(|c| -(c as f64) * omega).collect();
    if v1 != 0.0 {
        anchors.extend((-(cutoff as i32)..=cutoff as i32).map(|c| -(c as f64) * omega - v1));
    }
    anchors.sort_by(f64::total_cmp);
    Ok(RotatedOperator {
        theta,
        positions: xs,
        contour: zs,
        channels: (-(cutoff as i32)..=cutoff as i32).collect(),
        frequency: omega,
        mass: mu,
        anchors,
        matrix: m,
    })
}

/// Full spectrum sorted by real part, then imaginary part.
pub fn eigenvalues(op: &RotatedOperator) -> Result<Vec<c64>> {
    sorted_spectrum(&op.matrix)
}

pub fn sorted_spectrum(m: &Mat<c64>) -> Result<Vec<c64>> {
    let mut ev = m.eigenvalues().map_err(|_| Error::Eigen { size: m.nrows() })?;
    if ev.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Eigen { size: m.nrows() });
    }
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Classification thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResonanceSettings {
    pub thetas: Vec<f64>,
    /// Max displacement across θ, as a fraction of ω.
    pub stability: f64,
    /// Min distance to every continuum ray, as a fraction of ω.
    pub ray_margin: f64,
    pub cutoff: usize,
    pub points: usize,
    /// Exterior length on each side in units of 2π/√(2μω).
    pub reach_wavelengths: f64,
    /// Only eigenvalues with Re ℰ in this range are classified (eV). The
    /// default is one ω beyond the outermost thresholds; far above them the
    /// grid dispersion saturates and produces θ-stable artifacts.
    pub window: Option<(f64, f64)>,
}

impl Default for ResonanceSettings {
    fn default() -> Self {
        Self {
            thetas: vec![0.10, 0.15, 0.20],
            stability: 0.01,
            ray_margin: 0.02,
            cutoff: 3,
            points: 240,
            reach_wavelengths: 8.0,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayFit {
    pub theta: f64,
    pub anchor: f64,
    /// Median argument of the eigenvalues assigned to this ray.
    pub angle: f64,
    pub members: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedEigenvalue {
    /// Value at the first θ.
    pub energy: c64,
    /// Max pairwise displacement across θ.
    pub stability: f64,
    /// Distance to the nearest fitted ray at the first θ.
    pub ray_distance: f64,
    pub resonance: bool,
    /// Two partners within the matching radius at some θ.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub thetas: Vec<f64>,
    pub frequency: f64,
    pub resonances: Vec<TrackedEigenvalue>,
    pub tracked: Vec<TrackedEigenvalue>,
    pub rays: Vec<RayFit>,
    pub spectra: Vec<Vec<c64>>,
}

/// Points within this angle of the nominal ray direction −2θ are fitted to it.
const RAY_CAPTURE: f64 = 0.1;

fn fit_rays(theta: f64, anchors: &[f64], spectrum: &[c64], margin: f64) -> Vec<RayFit> {
    anchors
        .iter()
        .map(|&a| {
            let mut args: Vec<f64> = spectrum
                .iter()
                .map(|&e| e - a)
                .filter(|d| d.norm() > margin)
                .map(|d| d.arg())
                .filter(|g| (g + 2.0 * theta).abs() < RAY_CAPTURE)
                .collect();
            args.sort_by(f64::total_cmp);
            let angle = if args.is_empty() { -2.0 * theta } else { args[args.len() / 2] };
            RayFit {
                theta,
                anchor: a,
                angle,
                members: args.len(),
            }
        })
        .collect()
}

fn ray_distance(e: c64, ray: &RayFit) -> f64 {
    let d = (e - ray.anchor) * c64::from_polar(1.0, -ray.angle);
    if d.re >= 0.0 {
        d.im.abs()
    } else {
        d.norm()
    }
}

/// Track eigenvalues of the first spectrum through the others and classify.
pub fn classify(
    thetas: &[f64],
    spectra: &[Vec<c64>],
    anchors: &[f64],
    frequency: f64,
    settings: &ResonanceSettings,
) -> Result<ResonanceReport> {
    if thetas.len() < 3 || thetas.len() != spectra.len() {
        return Err(invalid("classification needs spectra for at least 3 angles"));
    }
    let stability = settings.stability * frequency;
    let margin = settings.ray_margin * frequency;
    let radius = 2.0 * stability;
    let (lo, hi) = settings.window.unwrap_or_else(|| {
        let lo = anchors.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - frequency, hi + frequency)
    });
    let inside = |e: &c64| e.re >= lo && e.re <= hi;
    let mut rays = Vec::new();
    for (&t, s) in thetas.iter().zip(spectra) {
        rays.extend(fit_rays(t, anchors, s, margin));
    }
    let first_rays: Vec<RayFit> = rays.iter().filter(|r| r.theta == thetas[0]).copied().collect();
    let mut tracked = Vec::new();
    for &e in spectra[0].iter().filter(|e| inside(e)) {
        let mut path = vec![e];
        let mut ambiguous = false;
        for s in &spectra[1..] {
            let mut best = (f64::INFINITY, c64::new(0.0, 0.0));
            let mut close = 0;
            for &f in s {
                let d = (f - e).norm();
                if d < radius {
                    close += 1;
                }
                if d < best.0 {
                    best = (d, f);
                }
            }
            ambiguous |= close > 1;
            path.push(best.1);
        }
        let mut score: f64 = 0.0;
        for i in 0..path.len() {
            for j in i + 1..path.len() {
                score = score.max((path[i] - path[j]).norm());
            }
        }
        let dist = first_rays.iter().map(|r| ray_distance(e, r)).fold(f64::INFINITY, f64::min);
        tracked.push(TrackedEigenvalue {
            energy: e,
            stability: score,
            ray_distance: dist,
            resonance: score < stability && dist > margin,
            ambiguous,
        });
    }
    Ok(ResonanceReport {
        thetas: thetas.to_vec(),
        frequency,
        resonances: tracked.iter().filter(|t| t.resonance).copied().collect(),
        tracked,
        rays,
        spectra: spectra.to_vec(),
    })
}

/// Build, diagonalize and classify over the angle set.
pub fn analyze(problem: &ScatteringProblem, settings: &ResonanceSettings) -> Result<ResonanceReport> {
    let omega = problem.drive.frequency;
    let wavelength = 2.0 * std::f64::consts::PI / (2.0 * problem.particle.mass * omega).sqrt();
    let grid = ContourSpec::around(problem, settings.points, settings.reach_wavelengths * wavelength)?;
    let mut spectra = Vec::with_capacity(settings.thetas.len());
    let mut anchors = Vec::new();
    for &t in &settings.thetas {
        let op = build_rotated(problem, settings.cutoff, t, &grid)?;
        spectra.push(eigenvalues(&op)?);
        anchors = op.anchors;
    }
    classify(&settings.thetas, &spectra, &anchors, omega, settings)
}

/// CSV with columns theta, re, im, class (resonance, continuum, ambiguous).
pub fn write_spectrum_csv<W: std::io::Write>(report: &ResonanceReport, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "theta,re_energy,im_energy,class")?;
    for (i, (&t, s)) in report.thetas.iter().zip(&report.spectra).enumerate() {
        for &e in s {
            let class = if i == 0 {
                report
                    .tracked
                    .iter()
                    .find(|r| r.energy == e)
                    .map_or("continuum", |r| match (r.resonance, r.ambiguous) {
                        (true, false) => "resonance",
                        (true, true) => "ambiguous",
                        _ => "continuum",
                    })
            } else if report.resonances.iter().any(|r| (r.energy - e).norm() <= r.stability) {
                "resonance"
            } else {
                "continuum"
            };
            writeln!(sink, "{:.17e},{:.17e},{:.17e},{class}", t, e.re, e.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::{DriveField, ParticleSpec};
    use crate::units::nm;

    fn free_problem() -> ScatteringProblem {
        ScatteringProblem::new(
            ParticleSpec::electron(),
            DriveField::off(0.12),
            PotentialSpec::rectangular(0.0, nm(0.2), 0.0).unwrap(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn diagonal_matrix_spectrum_is_its_diagonal() {
        let m = Mat::<c64>::from_fn(4, 4, |i, j| if i == j { c64::new(3.0 - i as f64, 0.5) } else { c64::new(0.0, 0.0) });
        let ev = sorted_spectrum(&m).unwrap();
        for (k, e) in ev.iter().enumerate() {
            assert!((e - c64::new(k as f64, 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn free_channel_lies_on_the_rotated_ray() {
        let grid = ContourSpec::uniform(0.0, nm(5.0), nm(5.0), 120);
        let op = build_rotated(&free_problem(), 0, 0.15, &grid).unwrap();
        for e in eigenvalues(&op).unwrap() {
            assert!((e.arg() + 0.3).abs() < 1e-9, "{e}");
        }
    }

    #[test]
    fn decoupled_channels_give_three_rays() {
        let grid = ContourSpec::uniform(0.0, nm(5.0), nm(5.0), 80);
        let op = build_rotated(&free_problem(), 1, 0.1, &grid).unwrap();
        let ev = eigenvalues(&op).unwrap();
        assert_eq!(ev.len(), 3 * op.positions.len());
        for e in ev {
            let on_ray = [-0.12, 0.0, 0.12].iter().any(|&a| ((e - a).arg() + 0.2).abs() < 1e-8);
            assert!(on_ray, "{e}");
        }
    }

    #[test]
    fn unrotated_spectrum_is_real() {
        let p = ScatteringProblem::new(
            ParticleSpec::electron(),
            DriveField::new(6e8, 0.12).unwrap(),
            PotentialSpec::rectangular(6.0, nm(0.2), 0.0).unwrap(),
            0.1,
        )
        .unwrap();
        let grid = ContourSpec::around(&p, 60, nm(10.0)).unwrap();
        let op = build_rotated(&p, 1, 0.0, &grid).unwrap();
        let ev = eigenvalues(&op).unwrap();
        let scale = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
        for e in ev {
            assert!(e.im.abs() < 1e-6 * scale, "{e}");
        }
    }

    #[test]
    fn free_spectrum_has_no_resonances() {
        let grid = ContourSpec::uniform(0.0, nm(4.0), nm(4.0), 60);
        let thetas = [0.10, 0.15, 0.20];
        let mut spectra = Vec::new();
        let mut anchors = Vec::new();
        for &t in &thetas {
            let op = build_rotated(&free_problem(), 1, t, &grid).unwrap();
            spectra.push(eigenvalues(&op).unwrap());
            anchors = op.anchors.clone();
        }
        let report = classify(&thetas, &spectra, &anchors, 0.12, &ResonanceSettings::default()).unwrap();
        assert!(report.resonances.is_empty(), "{:?}", report.resonances);
    }

    #[test]
    fn injected_stable_point_is_recovered() {
        let thetas = [0.10, 0.15, 0.20];
        let w = 1.0;
        let mark = c64::new(0.5, -0.05);
        let spectra: Vec<Vec<c64>> = thetas
            .iter()
            .map(|&t| {
                let mut s: Vec<c64> = (1..40).map(|j| c64::from_polar(0.05 * j as f64, -2.0 * t)).collect();
                s.push(mark + c64::new(1e-4 * t, 0.0));
                s
            })
            .collect();
        let report = classify(&thetas, &spectra, &[0.0], w, &ResonanceSettings::default()).unwrap();
        assert_eq!(report.resonances.len(), 1);
        let r = report.resonances[0];
        assert!((r.energy - mark).norm() < 1e-3);
        assert!(r.stability < 0.01 * w);
    }

    #[test]
    fn too_few_angles_are_rejected() {
        assert!(classify(&[0.1, 0.2], &[vec![], vec![]], &[0.0], 1.0, &ResonanceSettings::default()).is_err());
    }
}
