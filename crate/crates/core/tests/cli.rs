use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_attractive");

fn attractive(args: &[&str], root: &Path) -> Output {
    Command::new(BIN).args(args).env("ATTRACTIVE_OUTPUT_ROOT", root).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const HALVING: &str = "mapping.id = halving\nstart = 1\nn_max = 2000\nchecks = theorem_3_1\n";

#[test]
fn list_catalog_shows_every_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let out = attractive(&["list-catalog"], tmp.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for id in ["halving", "rotation", "square", "projection", "affine-contraction"] {
        assert!(text.contains(id), "{id} missing");
    }
    assert!(text.contains("A(T)"));

    let machine = stdout(&attractive(&["list-catalog", "--machine"], tmp.path()));
    let records: Vec<&str> = machine.lines().collect();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.starts_with("id=") && r.contains("\tattractive=")));
}

#[test]
fn halving_run_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "halving.cfg", HALVING);
    let out = attractive(&["run", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("[theorem_3_1] PASS"));
    assert!(text.contains("seed=20240601"));

    let runs: Vec<_> = fs::read_dir(tmp.path().join("out")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let dir = runs[0].as_ref().unwrap().path();
    let hash = dir.file_name().unwrap().to_str().unwrap().to_string();
    for name in [format!("trace-{hash}.csv"), format!("approx-{hash}.txt"), format!("report-{hash}.txt")] {
        assert!(dir.join(&name).is_file(), "{name}");
    }
    let csv = fs::read_to_string(dir.join(format!("trace-{hash}.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 2002);
}

#[test]
fn identical_configs_give_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "mapping.id = rotation\nmapping.params = 1.0471975511965976\nstart = 1, 0\nn_max = 300\nsample.seed = 9\nchecks = theorem_3_1\n";
    let a = write(tmp.path(), "a.cfg", &format!("{text}output_dir = {}\n", tmp.path().join("a").display()));
    let b = write(tmp.path(), "b.cfg", &format!("{text}output_dir = {}\n", tmp.path().join("b").display()));
    assert!(attractive(&["run", &a], tmp.path()).status.success());
    assert!(attractive(&["run", &b], tmp.path()).status.success());
    let read = |d: &str| {
        let entry = fs::read_dir(tmp.path().join(d))
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|x| x == "csv"))
            .unwrap();
        fs::read(entry).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn contradiction_is_a_failure_unless_expected() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "mapping.id = square\nstart = 1\nn_max = 200\nchecks = theorem_3_1\n";
    let cfg = write(tmp.path(), "sq.cfg", base);
    let out = attractive(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("contradiction_case = true"));
    assert!(stdout(&out).contains("witness"));

    let cfg = write(tmp.path(), "sq2.cfg", &format!("{base}expect.contradiction = true\n"));
    assert_eq!(attractive(&["run", &cfg], tmp.path()).status.code(), Some(0));
}

#[test]
fn invalid_configs_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in [
        "mapping.id = spiral\nstart = 1\nn_max = 100\n",
        "mapping.id = halving\nstart = 1\nn_max = 20\nchecks = theorem_3_1\n",
        "mapping.id = halving\nstart = -1\nn_max = 100\n",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(tmp.path(), &format!("bad{i}.cfg"), text);
        let out = attractive(&["run", &cfg], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
    }
    let cfg = write(tmp.path(), "ok.cfg", HALVING);
    assert_eq!(attractive(&["check", "lemma_9_9", &cfg], tmp.path()).status.code(), Some(2));
}

#[test]
fn io_failures_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.cfg");
    assert_eq!(attractive(&["run", missing.to_str().unwrap()], tmp.path()).status.code(), Some(3));

    let blocker = write(tmp.path(), "file", "");
    let cfg = write(tmp.path(), "c.cfg", &format!("{HALVING}output_dir = {blocker}/sub\n"));
    assert_eq!(attractive(&["run", &cfg], tmp.path()).status.code(), Some(3));
}

#[test]
fn check_verb_runs_one_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sq.cfg",
        "mapping.id = square\nstart = 0.5\nn_max = 100\nchecks = theorem_3_1, lemma_2_3\n",
    );
    let out = attractive(&["check", "extension", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("[extension] PASS"));
    assert!(!text.contains("[theorem_3_1]"));
    assert!(!text.contains("[lemma_2_3]"));
}
