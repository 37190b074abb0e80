use std::path::Path;
use std::process::{Command, Output};

fn biotvem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biotvem"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_cube_then_check_reports_counts_and_tags() {
    let dir = tempfile::tempdir().unwrap();
    let o = biotvem(&["mesh", "gen-cube", "--n", "2", "--out", "cube2.vem"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("cube2.vem").exists());

    let o = biotvem(&["mesh", "check", "cube2.vem"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("vertices 27 edges 54 faces 36 cells 8"), "{out}");
    assert!(out.contains("faces: 4"), "{out}");
}

#[test]
fn run_writes_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mesh.family = cube\nmesh.levels = 1, 2\nsolver.mode = fixed_point\noutput.dir = out\n";
    std::fs::write(dir.path().join("study.cfg"), cfg).unwrap();
    let o = biotvem(&["run", "study.cfg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("e_total"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/eoc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(dir.path().join("out/fields_1.vem").exists());
}

#[test]
fn errors_are_classified_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "mesh.family = torus\n").unwrap();
    let o = biotvem(&["run", "bad.cfg"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error[config]"), "{}", stderr(&o));

    std::fs::write(dir.path().join("syntax.cfg"), "mesh.family = cube\nmesh.levels 2\n").unwrap();
    let o = biotvem(&["run", "syntax.cfg"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error[parse]"), "{}", stderr(&o));

    let o = biotvem(&["mesh", "check", "missing.vem"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error[io]"), "{}", stderr(&o));
}
