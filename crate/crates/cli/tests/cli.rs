use std::collections::BTreeMap;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use execlens_core::analysis::correctness;
use execlens_core::corpus::{load_benchmark, load_results, results_path};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn execlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_execlens"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let path = entry.unwrap().path();
        let target = to.join(path.file_name().unwrap());
        if path.is_dir() {
            copy_tree(&path, &target);
        } else {
            std::fs::copy(&path, &target).unwrap();
        }
    }
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            for (k, v) in read_tree(&path) {
                out.insert(Path::new(path.file_name().unwrap()).join(k), v);
            }
        } else {
            out.insert(
                PathBuf::from(path.file_name().unwrap()),
                std::fs::read(&path).unwrap(),
            );
        }
    }
    out
}

/// A project root with the fixture corpus and result files but no traces.
fn untraced_root() -> tempfile::TempDir {
    let tmp = tempfile::TempDir::new().unwrap();
    copy_tree(&fixtures().join("dataset"), &tmp.path().join("dataset"));
    copy_tree(
        &fixtures().join("Experiment_Results/ER"),
        &tmp.path().join("Experiment_Results/ER"),
    );
    tmp
}

/// Stand-in tracer that copies pre-recorded traces from `source`.
fn fake_tracer(dir: &Path, source: &Path) -> PathBuf {
    let script = dir.join("tracer");
    std::fs::write(
        &script,
        format!(
            "#!/bin/sh\n\
             while [ $# -gt 0 ]; do\n\
               case \"$1\" in\n\
                 --problem-dir) dir=\"$2\"; shift 2;;\n\
                 --out) out=\"$2\"; shift 2;;\n\
                 --timeout) shift 2;;\n\
                 *) echo \"bad arg $1\" >&2; exit 64;;\n\
               esac\n\
             done\n\
             echo x >> \"{calls}\"\n\
             cp \"{source}/$(basename \"$dir\").json\" \"$out\"\n",
            calls = dir.join("calls").display(),
            source = source.display()
        ),
    )
    .unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    script
}

fn calls(dir: &Path) -> usize {
    std::fs::read_to_string(dir.join("calls"))
        .map(|s| s.lines().count())
        .unwrap_or(0)
}

#[test]
fn help_documents_every_flag() {
    let top = execlens(&["--help"]);
    assert_eq!(code(&top), 0);
    for word in [
        "analyze",
        "trace",
        "collect",
        "--root",
        "--config",
        "--verbose",
    ] {
        assert!(stdout(&top).contains(word), "{word}");
    }
    let flags: [(&str, &[&str]); 3] = [
        (
            "analyze",
            &[
                "--models",
                "--datasets",
                "--granularity",
                "--jobs",
                "--trace",
                "--loop-aggregate",
                "--out",
                "--tracer",
                "--timeout",
            ],
        ),
        (
            "trace",
            &["--datasets", "--force", "--tracer", "--timeout", "--jobs"],
        ),
        (
            "collect",
            &[
                "--model",
                "--datasets",
                "--provider",
                "--endpoint",
                "--api-key-env",
                "--temperature",
                "--max-tokens",
                "--concurrency",
                "--merge",
            ],
        ),
    ];
    for (cmd, names) in flags {
        let out = execlens(&[cmd, "--help"]);
        assert_eq!(code(&out), 0);
        for name in names {
            assert!(stdout(&out).contains(name), "{cmd} {name}");
        }
    }
}

#[test]
fn constructs_report_lands_in_figures_tree() {
    let out = tempfile::TempDir::new().unwrap();
    let run = execlens(&[
        "analyze",
        "constructs",
        "--models",
        "mock-echo",
        "--datasets",
        "fixture",
        "--root",
        s(&fixtures()),
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let dir = out.path().join("Experiment_Results/figures/constructs");
    for ext in ["csv", "json", "svg"] {
        assert!(dir.join(format!("constructs.{ext}")).is_file(), "{ext}");
    }
    assert!(stdout(&run).contains("constructs (pooled)"));
}

#[test]
fn usage_and_missing_data_exit_codes() {
    let root = fixtures();
    assert_eq!(code(&execlens(&["analyze", "everything"])), 2);
    assert_eq!(
        code(&execlens(&[
            "analyze",
            "cc",
            "--root",
            s(&root),
            "--datasets",
            "fixture"
        ])),
        2
    );
    assert_eq!(code(&execlens(&["analyze", "cc", "--jobs", "x"])), 2);

    let out = tempfile::TempDir::new().unwrap();
    let run = execlens(&[
        "analyze",
        "cc",
        "--models",
        "absent",
        "--datasets",
        "fixture",
        "--root",
        s(&root),
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&run), 3);
    let expected = results_path(&root, "absent", "fixture");
    assert!(stderr(&run).contains(s(&expected)), "{}", stderr(&run));

    let run = execlens(&[
        "analyze",
        "cc",
        "--models",
        "mock-echo",
        "--datasets",
        "nodata",
        "--root",
        s(&root),
    ]);
    assert_eq!(code(&run), 3);
}

#[test]
fn unparseable_program_is_an_analysis_error() {
    let root = untraced_root();
    std::fs::write(
        root.path().join("dataset/fixture/p02_basic_arith/main.py"),
        "def broken(:\n",
    )
    .unwrap();
    let run = execlens(&[
        "analyze",
        "cc",
        "--models",
        "mock-echo",
        "--datasets",
        "fixture",
        "--root",
        s(root.path()),
    ]);
    assert_eq!(code(&run), 4);
    assert!(stderr(&run).contains("p02_basic_arith"));
}

#[test]
fn analyze_all_is_fast_and_byte_identical() {
    let (a, b) = (
        tempfile::TempDir::new().unwrap(),
        tempfile::TempDir::new().unwrap(),
    );
    let args = |out: &Path| {
        vec![
            "analyze".to_string(),
            "all".into(),
            "--models".into(),
            "mock-echo,planted-b".into(),
            "--datasets".into(),
            "fixture".into(),
            "--root".into(),
            s(&fixtures()).into(),
            "--out".into(),
            s(out).into(),
            "--jobs".into(),
            "2".into(),
        ]
    };
    let start = Instant::now();
    let first = Command::new(env!("CARGO_BIN_EXE_execlens"))
        .args(args(a.path()))
        .output()
        .unwrap();
    assert!(start.elapsed() < Duration::from_secs(30));
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let second = Command::new(env!("CARGO_BIN_EXE_execlens"))
        .args(args(b.path()))
        .output()
        .unwrap();
    assert_eq!(code(&second), 0);
    assert_eq!(
        stdout(&first)
            .lines()
            .filter(|l| !l.starts_with("wrote"))
            .collect::<Vec<_>>(),
        stdout(&second)
            .lines()
            .filter(|l| !l.starts_with("wrote"))
            .collect::<Vec<_>>()
    );
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert_eq!(ta.len(), 18);
    assert_eq!(ta, tb);
}

#[test]
fn loop_length_needs_traces_or_tracer() {
    let root = untraced_root();
    let bin = tempfile::TempDir::new().unwrap();
    let base = [
        "analyze",
        "loop-length",
        "--models",
        "planted-b",
        "--datasets",
        "fixture",
        "--root",
        s(root.path()),
    ];
    let run = execlens(&base);
    assert_eq!(code(&run), 3);
    assert!(
        stderr(&run).contains("missing trace file"),
        "{}",
        stderr(&run)
    );

    let tracer = fake_tracer(
        bin.path(),
        &fixtures().join("Experiment_Results/traces/fixture"),
    );
    let mut args = base.to_vec();
    args.extend(["--trace", "--tracer", s(&tracer)]);
    let run = execlens(&args);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert_eq!(calls(bin.path()), 24);
    let csv = std::fs::read_to_string(
        root.path()
            .join("Experiment_Results/figures/loop_length/loop_length.csv"),
    )
    .unwrap();
    let reference = tempfile::TempDir::new().unwrap();
    let with_fixture_traces = execlens(&[
        "analyze",
        "loop-length",
        "--models",
        "planted-b",
        "--datasets",
        "fixture",
        "--root",
        s(&fixtures()),
        "--out",
        s(reference.path()),
    ]);
    assert_eq!(code(&with_fixture_traces), 0);
    let want = std::fs::read_to_string(
        reference
            .path()
            .join("Experiment_Results/figures/loop_length/loop_length.csv"),
    )
    .unwrap();
    assert_eq!(csv, want);
}

#[test]
fn trace_command_caches_and_reports_timeouts() {
    let root = untraced_root();
    let bin = tempfile::TempDir::new().unwrap();
    let source = bin.path().join("recorded");
    copy_tree(
        &fixtures().join("Experiment_Results/traces/fixture"),
        &source,
    );
    let stuck = source.join("p22_while_while.json");
    let text = std::fs::read_to_string(&stuck)
        .unwrap()
        .replace("\"ok\"", "\"timeout\"");
    std::fs::write(&stuck, text).unwrap();
    let tracer = fake_tracer(bin.path(), &source);

    let args = [
        "trace",
        "--datasets",
        "fixture",
        "--root",
        s(root.path()),
        "--tracer",
        s(&tracer),
        "--timeout",
        "2",
    ];
    let run = execlens(&args);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(
        stdout(&run).contains("traced 24, skipped 0 existing, 0 failed, 1 abnormal exits"),
        "{}",
        stdout(&run)
    );
    assert!(stdout(&run).contains("timeout  fixture/p22_while_while"));
    let traces = std::fs::read_dir(root.path().join("Experiment_Results/traces/fixture"))
        .unwrap()
        .count();
    assert_eq!(traces, 24);

    let again = execlens(&args);
    assert!(stdout(&again).contains("traced 0, skipped 24 existing"));
    assert_eq!(calls(bin.path()), 24);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&execlens(&forced)), 0);
    assert_eq!(calls(bin.path()), 48);

    let missing = execlens(&[
        "trace",
        "--datasets",
        "fixture",
        "--root",
        s(root.path()),
        "--tracer",
        "/no/such/tracer",
    ]);
    assert_eq!(code(&missing), 5);
}

#[test]
fn collect_with_mock_writes_result_file() {
    let root = untraced_root();
    std::fs::remove_dir_all(root.path().join("Experiment_Results/ER")).unwrap();
    copy_tree(&fixtures().join("mock"), &root.path().join("mock"));
    let run = execlens(&[
        "collect",
        "--model",
        "mock-echo",
        "--datasets",
        "fixture",
        "--provider",
        "mock",
        "--root",
        s(root.path()),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(stdout(&run).contains("24 queried, 0 reused, 0 failed"));
    let written = load_results(&results_path(root.path(), "mock-echo", "fixture")).unwrap();
    let stored = load_results(&results_path(&fixtures(), "mock-echo", "fixture")).unwrap();
    assert_eq!(written.records.len(), 24);
    for (id, r) in &written.records {
        assert_eq!(r.predicted_output, stored.records[id].predicted_output);
    }
    let rerun = execlens(&[
        "collect",
        "--model",
        "mock-echo",
        "--datasets",
        "fixture",
        "--provider",
        "mock",
        "--root",
        s(root.path()),
    ]);
    assert!(stdout(&rerun).contains("0 queried, 24 reused"));
}

#[test]
fn collect_http_without_key_is_usage_error() {
    let run = execlens(&[
        "collect",
        "--model",
        "gpt-4",
        "--datasets",
        "fixture",
        "--root",
        s(&fixtures()),
        "--api-key-env",
        "EXECLENS_CLI_TEST_UNSET_KEY",
    ]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("MissingApiKey"));
}

#[test]
fn merge_keeps_any_correct_prediction() {
    let root = untraced_root();
    let dir = results_path(&fixtures(), "x", "fixture")
        .parent()
        .unwrap()
        .to_path_buf();
    let run = execlens(&[
        "collect",
        "--model",
        "combined",
        "--datasets",
        "fixture",
        "--root",
        s(root.path()),
        "--merge",
        s(&dir.join("mock-echo_fixture.json")),
        s(&dir.join("planted-b_fixture.json")),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let problems = load_benchmark(&fixtures().join("dataset"), "fixture").unwrap();
    let merged = load_results(&results_path(root.path(), "combined", "fixture")).unwrap();
    let correct = correctness(&problems, &merged)
        .values()
        .filter(|c| **c)
        .count();
    let single = |m: &str| {
        let set = load_results(&results_path(&fixtures(), m, "fixture")).unwrap();
        correctness(&problems, &set)
            .values()
            .filter(|c| **c)
            .count()
    };
    assert!(correct >= single("mock-echo").max(single("planted-b")));
    assert!(stdout(&run).contains(&format!("{correct} correct")));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::TempDir::new().unwrap();
    let conf = tmp.path().join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "# fixture run\nroot = {}\nmodels = absent\ndatasets = fixture\nout = {}\n",
            s(&fixtures()),
            s(tmp.path())
        ),
    )
    .unwrap();
    assert_eq!(code(&execlens(&["analyze", "cc", "--config", s(&conf)])), 3);
    let run = execlens(&[
        "analyze",
        "cc",
        "--config",
        s(&conf),
        "--models",
        "planted-b",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    assert!(tmp
        .path()
        .join("Experiment_Results/figures/cyclomatic_complexity/cyclomatic.csv")
        .is_file());

    std::fs::write(&conf, "colour = blue\n").unwrap();
    let bad = execlens(&["analyze", "cc", "--config", s(&conf)]);
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("unknown key"));
}
