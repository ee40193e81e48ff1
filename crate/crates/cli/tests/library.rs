use floquet_cli::config::{Axis, OracleConfig, OracleKind, PotentialConfig, RunConfig, Spacing};
use floquet_cli::figures::{figure, Dataset, FIGURE_IDS};
use floquet_cli::record::{Mode, PointInput};
use floquet_cli::run::{csv_columns, float};
use proptest::prelude::*;

const BASE: &str = r#"
energy_ev = 0.28
[particle]
kind = "electron"
[drive]
field_v_per_m = 6.0e8
frequency_ev = 0.12
[potential]
kind = "rectangular"
height_ev = 6.0
length_nm = 0.2
"#;

fn base() -> PointInput {
    let c = RunConfig::parse(BASE).unwrap();
    PointInput::new(Mode::Solve, c.problem(), c.solver)
}

#[test]
fn hash_changes_with_every_parameter() {
    let b = base();
    let h = b.hash();
    assert_eq!(h.len(), 64);
    assert_eq!(h, base().hash());
    let mut variants: Vec<PointInput> = Vec::new();
    let mut push = |f: &dyn Fn(&mut PointInput)| {
        let mut v = base();
        f(&mut v);
        variants.push(v);
    };
    push(&|p| p.problem.energy_ev = 0.28 + 1e-15);
    push(&|p| p.problem.drive.field_v_per_m = 6.1e8);
    push(&|p| p.problem.drive.frequency_ev = 0.121);
    push(&|p| {
        if let PotentialConfig::Rectangular { height_ev, .. } = &mut p.problem.potential {
            *height_ev = 6.01
        }
    });
    push(&|p| p.problem = p.problem.with_axis(Axis::Length, 0.21).unwrap());
    push(&|p| p.problem = p.problem.with_axis(Axis::Offset, 0.01).unwrap());
    push(&|p| p.problem.particle = floquet_cli::config::ParticleConfig::DeuteriumTritium);
    push(&|p| p.solver.cutoff = 9);
    push(&|p| p.solver.adaptive = true);
    push(&|p| p.solver.time_averaged = true);
    push(&|p| p.solver.options.rel_tol = 1e-9);
    push(&|p| p.solver.options.abs_tol = 1e-11);
    push(&|p| p.mode = Mode::Oracle(OracleConfig::new(OracleKind::Junction)));
    push(&|p| p.core_version = "0.0.0".into());
    let mut seen = std::collections::HashSet::new();
    seen.insert(h);
    for v in &variants {
        assert!(seen.insert(v.hash()), "collision for {v:?}");
    }
}

#[test]
fn column_order_is_fixed() {
    let c = csv_columns();
    assert_eq!(c.len(), 17 + 18 + 3);
    assert_eq!(&c[..3], ["series", "axis", "axis_value"]);
    assert_eq!(c[17], "t_m4");
    assert_eq!(c[21], "t_0");
    assert_eq!(c[25], "t_p4");
    assert_eq!(c[26], "r_m4");
    assert_eq!(c.last().unwrap(), "error");
}

#[test]
fn figure_captions_are_encoded() {
    for id in FIGURE_IDS {
        assert!(figure(id).is_ok(), "{id}");
    }
    let Dataset::Sweeps(f3) = figure("F3").unwrap().dataset else { panic!() };
    assert_eq!(f3.len(), 1);
    assert_eq!(f3[0].sweep.axis, Axis::Length);
    assert_eq!((f3[0].sweep.start, f3[0].sweep.stop), (0.05, 0.5));
    assert_eq!(f3[0].base.energy_ev, 0.28);
    assert_eq!(f3[0].base.drive.field_v_per_m, 6e8);

    let Dataset::Sweeps(f4) = figure("F4").unwrap().dataset else { panic!() };
    assert_eq!(f4[0].solver.cutoff, 16);
    assert!(f4[0].solver.time_averaged);
    assert_eq!(f4[0].sweep.axis, Axis::Frequency);
    assert_eq!(f4[0].base.drive.field_v_per_m, 2e16);

    let Dataset::Sweeps(f8) = figure("F8").unwrap().dataset else { panic!() };
    assert_eq!(f8[0].sweep.axis, Axis::Field);
    assert_eq!(f8[0].sweep.spacing, Spacing::Log);
    assert_eq!((f8[0].sweep.start, f8[0].sweep.stop), (1e15, 2e17));
    assert_eq!(f8[0].base.energy_ev, f8[0].base.drive.frequency_ev);

    assert!(matches!(figure("F7").unwrap().dataset, Dataset::Resonances(..)));
    let err = figure("Z1").unwrap_err().to_string();
    assert!(FIGURE_IDS.iter().all(|id| err.contains(id)));
    assert_eq!(figure("f3").unwrap().id, "F3");
}

#[test]
fn config_rejects_bad_input() {
    assert!(RunConfig::parse(&format!("{BASE}\n[solver]\ncutoff = 2\nbogus = 1\n")).is_err());
    assert!(RunConfig::parse(&format!("schema = \"floquet-config/9\"\n{BASE}")).is_err());
    assert!(RunConfig::parse(&BASE.replace("0.2\n", "-0.2\n")).is_err());
    let sweep = "\n[sweep]\naxis = \"energy\"\nstart = 0.3\nstop = 0.2\ncount = 4\n";
    assert!(RunConfig::parse(&format!("{BASE}{sweep}")).is_err());
    let log = "\n[sweep]\naxis = \"field\"\nstart = 0.0\nstop = 1e8\ncount = 4\nspacing = \"log\"\n";
    assert!(RunConfig::parse(&format!("{BASE}{log}")).is_err());
    assert!(OracleKind::Junction.check(&RunConfig::parse(BASE).unwrap().potential).is_ok());
    assert!(OracleKind::StaticCoulomb.check(&RunConfig::parse(BASE).unwrap().potential).is_err());
}

#[test]
fn shipped_configs_parse() {
    for name in ["rectangular", "rectangular-sweep", "coulomb"] {
        let path = format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
        RunConfig::load(std::path::Path::new(&path)).unwrap();
    }
}

#[test]
fn log_sweep_hits_both_ends() {
    let c = RunConfig::parse(&format!(
        "{BASE}\n[sweep]\naxis = \"field\"\nstart = 1e15\nstop = 2e17\ncount = 24\nspacing = \"log\"\n"
    ))
    .unwrap();
    let v = c.sweep.unwrap().values();
    assert_eq!(v.len(), 24);
    assert!((v[0] / 1e15 - 1.0).abs() < 1e-14 && (v[23] / 2e17 - 1.0).abs() < 1e-14);
    assert!(v.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #[test]
    fn csv_float_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = float(Some(x));
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn record_json_round_trips(e in 0.01f64..5.0, f in 0.0f64..1e9) {
        let mut p = base();
        p.problem.energy_ev = e;
        p.problem.drive.field_v_per_m = f;
        let back: PointInput = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back.hash(), p.hash());
        prop_assert_eq!(back, p);
    }
}
