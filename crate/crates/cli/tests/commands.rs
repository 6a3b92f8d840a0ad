use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otforge_annotation::{Phase, Service, ServiceConfig, Store};
use otforge_core::ot::format::{serialize, serialize_pretty};
use otforge_core::sql::compile;
use otforge_testkit::{trees, Fixture};
use tempfile::TempDir;

fn otforge(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_otforge"));
    cmd.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("OTFORGE_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Env {
    dir: TempDir,
    chinook: PathBuf,
    movies: PathBuf,
}

fn env() -> Env {
    let dir = tempfile::tempdir().unwrap();
    let chinook = Fixture::Chinook.write_to(dir.path()).unwrap();
    let movies = Fixture::Movies.write_to(dir.path()).unwrap();
    Env {
        dir,
        chinook,
        movies,
    }
}

impl Env {
    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

#[test]
fn sample_is_deterministic_per_seed() {
    let e = env();
    let a = e.dir.path().join("a.ndjson");
    let b = e.dir.path().join("b.ndjson");
    for out in [&a, &b] {
        let o = otforge(
            &[
                "sample",
                "--db",
                s(&e.chinook),
                "-n",
                "30",
                "--seed",
                "7",
                "-o",
                s(out),
            ],
            &[],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 30);
    let stats: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(e.dir.path().join("a.ndjson.stats.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(stats["accepted"], 30);
    assert_eq!(stats["seed"], 7);

    let par = e.dir.path().join("p.ndjson");
    let o = otforge(
        &[
            "sample",
            "--db",
            s(&e.chinook),
            "-n",
            "30",
            "--seed",
            "7",
            "--jobs",
            "3",
            "-o",
            s(&par),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(text, std::fs::read_to_string(&par).unwrap());
}

#[test]
fn sample_output_feeds_every_other_command() {
    let e = env();
    let cfg = e.file(
        "cfg.json",
        r#"{"path_length": {"min": 1, "max": 3}, "max_total_filters": 2}"#,
    );
    let out = e.dir.path().join("t.ndjson");
    let o = otforge(
        &[
            "sample",
            "--db",
            s(&e.chinook),
            "--config",
            s(&cfg),
            "-n",
            "20",
            "--seed",
            "1",
            "-o",
            s(&out),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let db = s(&e.chinook);
    let compiled = otforge(&["compile", "-i", s(&out), "--db", db], &[]);
    assert_eq!(
        stdout(&compiled).lines().count(),
        20,
        "{}",
        stderr(&compiled)
    );
    let exec = otforge(&["exec", "-i", s(&out), "--db", db, "--row-cap", "3"], &[]);
    assert!(exec.status.success(), "{}", stderr(&exec));
    for line in stdout(&exec).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["rows"].as_array().unwrap().len() <= 3);
    }
    let stats = otforge(&["stats", "-i", s(&out), "--db", db], &[]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&stats)).unwrap();
    assert_eq!(report["query_count"], 20);
    assert_eq!(report["database_id"], "chinook");
    let score = otforge(&["score", "-i", s(&out)], &[]);
    assert_eq!(stdout(&score).lines().count(), 20);
}

#[test]
fn compile_prints_notebook_cast_sql() {
    let e = env();
    let tree = e.file(
        "notebook_cast.json",
        &serialize_pretty(&trees::notebook_cast()),
    );
    let o = otforge(&["compile", "-i", s(&tree), "--db", s(&e.movies)], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let schema = Fixture::Movies.in_memory().load_schema().unwrap();
    assert_eq!(
        stdout(&o).trim_end(),
        compile(&trees::notebook_cast(), &schema).unwrap().sql
    );

    let schema_json = otforge(&["schema", "--db", s(&e.movies)], &[]);
    let schema_file = e.file("schema.json", &stdout(&schema_json));
    let o2 = otforge(
        &["compile", "-i", s(&tree), "--schema", s(&schema_file)],
        &[],
    );
    assert_eq!(stdout(&o), stdout(&o2));
}

#[test]
fn score_labels_the_minimal_tree_easy() {
    let e = env();
    let t = e.file(
        "m.ndjson",
        &(serialize(&trees::minimal("movie", "title")) + "\n"),
    );
    let o = otforge(&["score", "-i", s(&t)], &[]);
    assert!(o.status.success());
    let line = stdout(&o);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(fields[1], "Easy");
    assert_eq!(fields[2], "0");
}

#[test]
fn exec_prints_the_cast() {
    let e = env();
    let t = e.file(
        "notebook_cast.ndjson",
        &(serialize(&trees::notebook_cast()) + "\n"),
    );
    let o = otforge(&["exec", "-i", s(&t), "--db", s(&e.movies)], &[]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["id"], "notebook-cast");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn schema_honours_bridge_overrides() {
    let e = env();
    let bridges = e.file("bridges.json", r#"{"bridge_tables": ["oscar_nominee"]}"#);
    let o = otforge(
        &["schema", "--db", s(&e.movies), "--bridges", s(&bridges)],
        &[],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let flags: Vec<(String, bool)> = v["tables"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            (
                t["name"].as_str().unwrap().to_string(),
                t["is_bridge"].as_bool().unwrap(),
            )
        })
        .collect();
    assert!(flags.contains(&("oscar_nominee".into(), true)));
    assert!(flags.contains(&("cast".into(), false)));
    let bad = e.file("bad.json", r#"{"bridge_tables": ["studio"]}"#);
    let o = otforge(&["schema", "--db", s(&e.movies), "--bridges", s(&bad)], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes_and_error_prefix() {
    let e = env();
    let o = otforge(&["score", "-i", "/nonexistent/trees.ndjson"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: io: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    assert_eq!(otforge(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(
        otforge(&["sample", "-n", "many"], &[]).status.code(),
        Some(2)
    );
    assert_eq!(otforge(&["--help"], &[]).status.code(), Some(0));

    let chinook_tree = e.file(
        "t.ndjson",
        &(serialize(&trees::notebook_cast().with_schema("chinook")) + "\n"),
    );
    let o = otforge(
        &["compile", "-i", s(&chinook_tree), "--db", s(&e.movies)],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: schema_mismatch: "));

    let o = otforge(&["exec", "-i", s(&chinook_tree)], &[]);
    assert!(stderr(&o).starts_with("error: missing_argument: "));
}

#[test]
fn flag_beats_env_beats_settings() {
    let e = env();
    let t = e.file(
        "notebook_cast.ndjson",
        &(serialize(&trees::notebook_cast()) + "\n"),
    );
    let settings = e.file("otforge.toml", &format!("db = {:?}\n", s(&e.movies)));
    let run = |args: &[&str], env: &[(&str, &str)]| {
        let mut all = vec!["exec", "-i", s(&t)];
        all.extend_from_slice(args);
        otforge(&all, env)
    };
    assert!(run(&["--settings", s(&settings)], &[]).status.success());
    let o = run(
        &["--settings", s(&settings)],
        &[("OTFORGE_DB", "/nonexistent.sqlite")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(run(
        &["--db", s(&e.movies)],
        &[("OTFORGE_DB", "/nonexistent.sqlite")]
    )
    .status
    .success());
    assert!(run(&[], &[("OTFORGE_DB", s(&e.movies))]).status.success());
    assert!(run(&[], &[("OTFORGE_SETTINGS", s(&settings))])
        .status
        .success());
}

#[test]
fn commands_leave_the_source_database_untouched() {
    let e = env();
    let before = std::fs::read(&e.chinook).unwrap();
    let out = e.dir.path().join("t.ndjson");
    otforge(
        &[
            "sample",
            "--db",
            s(&e.chinook),
            "-n",
            "10",
            "--seed",
            "2",
            "-o",
            s(&out),
        ],
        &[],
    );
    otforge(&["exec", "-i", s(&out), "--db", s(&e.chinook)], &[]);
    otforge(&["stats", "-i", s(&out), "--db", s(&e.chinook)], &[]);
    assert_eq!(before, std::fs::read(&e.chinook).unwrap());
}

#[test]
fn export_streams_finished_records() {
    let e = env();
    let store_path = e.dir.path().join("tasks.sqlite");
    {
        let svc = Service::new(
            Store::open(&store_path).unwrap(),
            otforge_core::Database::open(&e.movies).unwrap(),
            ServiceConfig::default(),
        )
        .unwrap();
        svc.create_tasks(&[trees::notebook_cast(), trees::jesse_vote()], None)
            .unwrap();
        let t = svc.next_task("ann", Phase::Phase1Pending).unwrap().unwrap();
        svc.submit_question(t.task_id, "ann", "Who starred in 'The Notebook'?")
            .unwrap();
        svc.next_task("bob", Phase::Phase2Pending).unwrap().unwrap();
        svc.submit_tokens(t.task_id, "bob", None, vec![]).unwrap();
    }
    let report = e.dir.path().join("report.json");
    let o = otforge(
        &["export", "--store", s(&store_path), "--report", s(&report)],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 1);
    let rec: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(rec["database_id"], "movies");
    assert_eq!(rec["annotators"]["phase2"], "bob");
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["report"]["query_count"], 1);

    // Exported records are valid input for stats.
    let exported = e.file("export.ndjson", &stdout(&o));
    let stats = otforge(
        &[
            "stats",
            "-i",
            s(&exported),
            "--db",
            s(&e.movies),
            "--segment-length",
            "5",
        ],
        &[],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&stats)).unwrap();
    assert_eq!(v["question_count"], 1);
    assert!(v["msttr"].is_number());

    let o = otforge(
        &["export", "--store", s(&store_path), "--phase", "phase1"],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).starts_with("error: not_exportable: "),
        "{}",
        stderr(&o)
    );
    let o = otforge(
        &["export", "--store", s(&e.dir.path().join("none.sqlite"))],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
}
