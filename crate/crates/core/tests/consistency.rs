use floquet_core::floquet::{adaptive_channel_count, solve, ScatteringProblem, SolverOptions};
use floquet_core::oracles::{quivering_rectangular, static_coulomb, static_rectangular};
use floquet_core::setup::{DriveField, ParticleSpec, PotentialSpec};
use floquet_core::units::{fm, kev, mev_fm, nm, COULOMB_MEV_FM, ELECTRON_MASS_EV};
use proptest::prelude::*;

fn rect(e: f64, field: f64, v1: f64) -> ScatteringProblem {
    ScatteringProblem::new(
        ParticleSpec::electron(),
        DriveField::new(field, 0.12).unwrap(),
        PotentialSpec::rectangular(6.0, nm(0.2), v1).unwrap(),
        e,
    )
    .unwrap()
}

fn coulomb(e_kev: f64, field: f64) -> ScatteringProblem {
    ScatteringProblem::new(
        ParticleSpec::deuterium_tritium(),
        DriveField::new(field, kev(6.0)).unwrap(),
        PotentialSpec::truncated_coulomb(mev_fm(COULOMB_MEV_FM), fm(3.89), 0.0).unwrap(),
        kev(e_kev),
    )
    .unwrap()
}

#[test]
fn weak_field_agrees_with_junction_oracle() {
    for e in [0.1, 0.28] {
        let p = rect(e, 2e7, 0.0);
        let j = quivering_rectangular(e, 6.0, nm(0.2), 0.0, &p.drive, &p.particle, 8).unwrap();
        let r = solve(&p, 8, &SolverOptions::default()).unwrap();
        let rel = (r.total_transmission - j.total_transmission).abs() / j.total_transmission;
        assert!(rel < 1e-3, "E={e}: {} vs {} ({rel:e})", r.total_transmission, j.total_transmission);
    }
}

#[test]
fn static_coulomb_oracle_matches_solver() {
    let p = coulomb(6.0, 0.0);
    let r = solve(&p, 0, &SolverOptions::default()).unwrap();
    let o = static_coulomb(kev(6.0), mev_fm(COULOMB_MEV_FM), fm(3.89), 0.0, p.particle.mass).unwrap();
    let rel = (r.total_transmission / o.transmitted_probability - 1.0).abs();
    assert!(rel < 1e-4, "{} vs {}", r.total_transmission, o.transmitted_probability);
    // frozen from the two independent routes above
    assert!((r.total_transmission / 4.6738e-6 - 1.0).abs() < 1e-3, "{}", r.total_transmission);
}

#[test]
fn driven_rectangular_is_unitary() {
    let r = solve(&rect(0.28, 6e8, 0.0), 12, &SolverOptions::default()).unwrap();
    assert!(r.unitarity_deficit < 1e-6, "{}", r.unitarity_deficit);
    let sum: f64 = (-12..=12).map(|n| r.transmitted_into(n)).sum();
    assert!((sum - r.total_transmission).abs() < 1e-12 * r.total_transmission.max(1e-300));
}

#[test]
fn driven_coulomb_is_unitary_and_enhanced() {
    let p = coulomb(6.0, 2e16);
    let opts = SolverOptions::default();
    let d = solve(&p, 4, &opts).unwrap();
    let s = solve(&p.without_drive(), 0, &opts).unwrap();
    assert!(d.unitarity_deficit < 1e-6);
    assert!(d.total_transmission > s.total_transmission);
}

#[test]
fn adaptive_count_is_deterministic() {
    let p = rect(0.2, 2e7, 0.0);
    let opts = SolverOptions::default();
    let a = adaptive_channel_count(&p, 1e-6, 32, &opts).unwrap();
    let b = adaptive_channel_count(&p, 1e-6, 32, &opts).unwrap();
    assert_eq!(a.cutoff, b.cutoff);
    assert_eq!(a.result.total_transmission.to_bits(), b.result.total_transmission.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn static_flux_is_conserved(e in 0.05f64..5.9, v1 in -1.0f64..1.0) {
        // the right lead must carry flux
        prop_assume!(e + v1 > 0.01);
        let r = solve(&rect(e, 0.0, v1), 0, &SolverOptions::default()).unwrap();
        prop_assert!((r.total_transmission + r.total_reflection - 1.0).abs() < 1e-8);
        let o = static_rectangular(e, 6.0, nm(0.2), v1, ELECTRON_MASS_EV).unwrap();
        prop_assert!((r.total_transmission / o.transmitted_probability() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sideband_probabilities_are_nonnegative(e in 0.05f64..0.6, field in 1e7f64..4e8) {
        let r = solve(&rect(e, field, 0.0), 4, &SolverOptions::default()).unwrap();
        for n in -4..=4 {
            prop_assert!(r.transmitted_into(n) >= 0.0);
        }
        prop_assert!(r.unitarity_deficit < 1e-4);
    }
}
