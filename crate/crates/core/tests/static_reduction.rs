use floquet_core::floquet::{solve, ScatteringProblem, SolverOptions};
use floquet_core::oracles::static_rectangular;
use floquet_core::setup::{DriveField, ParticleSpec, PotentialSpec};
use floquet_core::units::{nm, ELECTRON_MASS_EV};

fn problem(e: f64, v1: f64, field: f64) -> ScatteringProblem {
    ScatteringProblem::new(
        ParticleSpec::electron(),
        DriveField::new(field, 0.12).unwrap(),
        PotentialSpec::rectangular(6.0, nm(0.2), v1).unwrap(),
        e,
    )
    .unwrap()
}

#[test]
fn zero_field_matches_closed_form() {
    let opts = SolverOptions { rel_tol: 1e-10, abs_tol: 1e-12, ..SolverOptions::default() };
    for v1 in [0.0, 1.0, -1.0] {
        for i in 0..12 {
            let e = 0.05 + (5.95 - 0.05) * (i as f64 + 0.5) / 12.0;
            if e + v1 <= 0.0 {
                continue;
            }
            let r = solve(&problem(e, v1, 0.0), 0, &opts).unwrap();
            let o = static_rectangular(e, 6.0, nm(0.2), v1, ELECTRON_MASS_EV).unwrap();
            let rel = (r.total_transmission - o.transmitted_probability()).abs() / o.transmitted_probability();
            assert!(rel < 1e-8, "E={e} V1={v1}: {} vs {} (rel {rel:e})", r.total_transmission, o.transmitted_probability());
            assert!(r.unitarity_deficit < 1e-9);
        }
    }
}

#[test]
fn zero_field_keeps_channels_uncoupled() {
    let r = solve(&problem(2.0, 0.0, 0.0), 3, &SolverOptions::default()).unwrap();
    let t = &r.transmission_amplitudes;
    let rr = &r.reflection_amplitudes;
    for i in 0..t.dim {
        for j in 0..t.dim {
            if i != j {
                assert!(t.get(i, j).norm() < 1e-12);
                assert!(rr.get(i, j).norm() < 1e-12);
            }
        }
    }
    let o = static_rectangular(2.0, 6.0, nm(0.2), 0.0, ELECTRON_MASS_EV).unwrap();
    assert!((r.total_transmission / o.transmitted_probability() - 1.0).abs() < 1e-8);
}

#[test]
fn step_without_barrier_is_unitary() {
    let p = ScatteringProblem::new(
        ParticleSpec::electron(),
        DriveField::off(0.12),
        PotentialSpec::rectangular(0.0, nm(0.2), 2.5).unwrap(),
        0.7,
    )
    .unwrap();
    let r = solve(&p, 0, &SolverOptions::default()).unwrap();
    assert!(r.unitarity_deficit < 1e-10, "{}", r.unitarity_deficit);
    let k1 = (2.0 * ELECTRON_MASS_EV * 0.7f64).sqrt();
    let k3 = (2.0 * ELECTRON_MASS_EV * 3.2f64).sqrt();
    let expect = 4.0 * k1 * k3 / (k1 + k3).powi(2);
    assert!((r.total_transmission - expect).abs() < 1e-10);
}
