use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use floquet_cli::run::csv_columns;

const BIN: &str = env!("CARGO_BIN_EXE_floquet");

fn rect_config(extra: &str) -> String {
    format!(
        r#"schema = "floquet-config/1"
label = "t"
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
offset_ev = 0.0

{extra}
"#
    )
}

fn zero_field(extra: &str) -> String {
    rect_config(extra).replace("6.0e8", "0.0")
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Self { dir }
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("run.toml")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn exec(&self, args: &[&str], out: &str) -> Output {
        Command::new(BIN)
            .args(args)
            .arg("--config")
            .arg(self.config())
            .arg("--out")
            .arg(self.out(out))
            .env("FLOQUET_CACHE_DIR", self.out("cache"))
            .output()
            .unwrap()
    }
}

fn rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

/// Tight ODE tolerances so the driven and static routes agree to 1e-9.
const TIGHT: &str = "[solver]\ncutoff = 2\nrel_tol = 1e-11\nabs_tol = 1e-13\n";

const SWEEP2: &str = r#"[solver]
cutoff = 2

[sweep]
axis = "energy"
start = 0.2
stop = 0.3
count = 2
"#;

#[test]
fn zero_field_solve_has_unit_enhancement() {
    let run = Run::new(&zero_field(TIGHT));
    let o = run.exec(&["solve"], "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(run.out("out/t.json")).unwrap()).unwrap();
    let enh = record["summary"]["relative_enhancement"].as_f64().unwrap();
    assert!((enh - 1.0).abs() < 1e-9, "{enh}");
    assert_eq!(record["schema_version"], "floquet-record/1");
}

#[test]
fn zero_field_sweep_has_unit_enhancement() {
    let run = Run::new(&zero_field(&SWEEP2.replace("cutoff = 2", "cutoff = 2\nrel_tol = 1e-11\nabs_tol = 1e-13")));
    let o = run.exec(&["sweep"], "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rs) = rows(&run.out("out/t.csv"));
    assert_eq!(h, csv_columns());
    assert_eq!(rs.len(), 2);
    let i = column(&h, "relative_enhancement");
    for r in &rs {
        let v: f64 = r[i].parse().unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }
}

#[test]
fn repeated_sweep_is_cached_and_identical() {
    let run = Run::new(&rect_config(SWEEP2));
    let a = run.exec(&["sweep", "--jobs", "1"], "a");
    assert!(a.status.success());
    let b = run.exec(&["sweep", "--jobs", "2"], "b");
    assert!(b.status.success());
    let stderr = String::from_utf8_lossy(&b.stderr);
    assert!(stderr.contains("2 from cache"), "{stderr}");
    assert_eq!(fs::read(run.out("a/t.csv")).unwrap(), fs::read(run.out("b/t.csv")).unwrap());
    let cache_files = fs::read_dir(run.out("cache")).unwrap().count();
    assert_eq!(cache_files, 2);
}

#[test]
fn sweep_is_deterministic_across_job_counts_without_cache() {
    let run = Run::new(&rect_config(SWEEP2.replace("count = 2", "count = 3").as_str()));
    let a = run.exec(&["sweep", "--jobs", "1", "--no-cache"], "a");
    let b = run.exec(&["sweep", "--jobs", "3", "--no-cache"], "b");
    assert!(a.status.success() && b.status.success());
    assert_eq!(fs::read(run.out("a/t.csv")).unwrap(), fs::read(run.out("b/t.csv")).unwrap());
    assert!(!run.out("cache").exists());
}

#[test]
fn csv_floats_round_trip() {
    let run = Run::new(&rect_config(SWEEP2));
    assert!(run.exec(&["sweep", "--no-cache"], "out").status.success());
    let (h, rs) = rows(&run.out("out/t.csv"));
    let jsonl = fs::read_to_string(run.out("out/t.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let i = column(&h, "total_transmission");
    for (r, rec) in rs.iter().zip(&records) {
        let from_csv: f64 = r[i].parse().unwrap();
        let from_json = rec["summary"]["total_transmission"].as_f64().unwrap();
        assert_eq!(from_csv.to_bits(), from_json.to_bits());
        assert!(!r[column(&h, "t_p1")].is_empty());
        assert_eq!(&r[column(&h, "input_hash")], rec["input_hash"].as_str().unwrap());
    }
}

#[test]
fn timeout_marks_rows_failed() {
    let run = Run::new(&rect_config(&format!("{SWEEP2}timeout_s = 1e-9\n")));
    let o = run.exec(&["sweep", "--no-cache"], "out");
    assert_eq!(o.status.code(), Some(1));
    let (h, rs) = rows(&run.out("out/t.csv"));
    for r in &rs {
        assert!(r[column(&h, "error")].contains("limit"));
        assert!(r[column(&h, "total_transmission")].is_empty());
        assert!(!r[column(&h, "energy_ev")].is_empty());
    }
}

#[test]
fn config_errors_exit_with_two() {
    let run = Run::new(&rect_config("[solver]\ncutoff = 2\nbogus = 1\n"));
    assert_eq!(run.exec(&["solve"], "out").status.code(), Some(2));
    let run = Run::new(&rect_config("[solver]\ncutoff = 2\n"));
    assert_eq!(run.exec(&["sweep"], "out").status.code(), Some(2));
    assert_eq!(run.exec(&["oracle", "--kind", "static-coulomb"], "out").status.code(), Some(2));
    assert_eq!(run.exec(&["oracle", "--kind", "nonsense"], "out").status.code(), Some(2));
    let o = Command::new(BIN).args(["figure", "F99"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("A12"));
}

#[test]
fn solver_failure_exits_with_one() {
    // the junction system is numerically singular at this field and order
    let run = Run::new(&rect_config("[solver]\ncutoff = 2\n\n[oracle]\nkind = \"junction\"\ncutoff = 16\n"));
    let o = run.exec(&["oracle"], "out");
    assert_eq!(o.status.code(), Some(1));
    let (h, rs) = rows(&run.out("out/t-junction.csv"));
    assert!(!rs[0][column(&h, "error")].is_empty());
}

#[test]
fn oracle_output_shares_the_sweep_columns() {
    let run = Run::new(&rect_config(&SWEEP2.replace("[solver]", "[oracle]\nkind = \"perturbative\"\n\n[solver]")));
    let o = run.exec(&["oracle", "--no-cache"], "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rs) = rows(&run.out("out/t-perturbative.csv"));
    assert_eq!(h, csv_columns());
    assert_eq!(rs.len(), 2);
    assert!(!rs[0][column(&h, "t_p1")].is_empty());
}

#[test]
fn static_oracle_matches_zero_field_solve() {
    let run = Run::new(&zero_field(&TIGHT.replace("cutoff = 2", "cutoff = 0")));
    assert!(run.exec(&["oracle", "--kind", "static-rectangular", "--no-cache"], "o").status.success());
    assert!(run.exec(&["solve", "--no-cache"], "s").status.success());
    let (h, o) = rows(&run.out("o/t-static-rectangular.csv"));
    let (_, s) = rows(&run.out("s/t.csv"));
    let i = column(&h, "total_transmission");
    let (a, b): (f64, f64) = (o[0][i].parse().unwrap(), s[0][i].parse().unwrap());
    assert!((a / b - 1.0).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn small_figure_run_writes_sidebands() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["figure", "F3", "--points", "2", "--no-cache", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rs) = rows(&dir.path().join("F3.csv"));
    assert_eq!(rs.len(), 2);
    for r in &rs {
        assert_eq!(&r[column(&h, "axis")], "length");
        assert!(!r[column(&h, "t_p1")].is_empty() && !r[column(&h, "t_m1")].is_empty());
    }
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("F3.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["id"], "F3");
}

#[test]
fn figure_list_names_every_id() {
    let o = Command::new(BIN).args(["figure", "--list"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for id in floquet_cli::figures::FIGURE_IDS {
        assert!(text.contains(id), "{id} missing");
    }
}

#[test]
fn resonance_spectrum_csv() {
    let cfg = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/coulomb.toml"))
        .unwrap()
        .replace("points = 240", "points = 60")
        .replace("cutoff = 3", "cutoff = 1");
    let run = Run::new(&cfg);
    let o = run.exec(&["resonances"], "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rs) = rows(&run.out("out/coulomb-resonances.csv"));
    assert_eq!(h, ["theta", "re_energy", "im_energy", "class"]);
    assert!(!rs.is_empty());
    assert!(rs.iter().all(|r| ["resonance", "ambiguous", "continuum"].contains(&&r[3])));
    assert!(run.out("out/coulomb-resonances.json").exists());
}
