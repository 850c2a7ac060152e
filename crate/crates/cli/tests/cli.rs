use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use zkplan::{builtin_task, run_task, BackendConfig, RunConfig, RunResult, TaskRequest};

fn zkplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkplan")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn golden_apple_run_succeeds() {
    let out = zkplan(&["run", "--task", "apple", "--backend", "scripted", "--fixtures", "golden/"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("oracle=true"), "{}", stdout(&out));
}

#[test]
fn parallel_node_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    fs::write(&bad, "<Parallel/>").unwrap();
    let out = zkplan(&["validate-bt", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("UnsupportedNode"), "{}", stderr(&out));
}

#[test]
fn valid_tree_prints_its_canonical_form() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    fs::write(&good, "Sure:\n```xml\n<Sequence><Action name=\"Grab\" target=\"mug\"/></Sequence>\n```").unwrap();
    let out = zkplan(&["validate-bt", "--extract", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("valid: 2 nodes"));
}

#[test]
fn eval_all_tasks_writes_four_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = zkplan(&[
        "eval",
        "--tasks",
        "all",
        "--n",
        "10",
        "--backend",
        "scripted",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = fs::read_to_string(dir.path().join("summary.md")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("| zkplan |")).collect();
    assert_eq!(rows.len(), 4, "{table}");
    assert!(rows.iter().all(|r| r.contains("| 10/10 |")), "{table}");
    let trials = fs::read_to_string(dir.path().join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 40);
}

#[test]
fn unrefined_flawed_plan_exits_with_task_failure() {
    let out = zkplan(&["run", "--task", "mug", "--fixtures", "flawed_fixed", "--max-refinements", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("oracle=false"));
}

#[test]
fn usage_errors_print_subcommand_help() {
    let out = zkplan(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage: zkplan run"), "{}", stderr(&out));

    let out = zkplan(&["eval", "--n", "many"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage: zkplan eval"), "{}", stderr(&out));
}

#[test]
fn config_with_a_secret_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[backend]\napi_key = \"sk-123\"\n").unwrap();
    let out = zkplan(&["run", "--task", "apple", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

fn library_result(task: &str, fixtures: &str) -> RunResult {
    let spec = builtin_task(task).unwrap();
    let config = RunConfig { backend: BackendConfig::scripted(fixtures), ..RunConfig::default() };
    let world = spec.load_world(config.sensor).unwrap();
    let backend = config.backend.build(task).unwrap();
    run_task(&TaskRequest::new(&spec.instruction).unwrap(), world, &spec.goals, &config, backend).unwrap().result
}

#[test]
fn cli_run_matches_the_library() {
    let out = zkplan(&["run", "--task", "mug", "--fixtures", "flawed_fixed", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let from_cli: RunResult = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(from_cli.fingerprint(), library_result("mug", "flawed_fixed").fingerprint());
}

#[test]
fn recorded_transcript_replays_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("coffee.jsonl");
    let t = transcript.to_str().unwrap();
    let first = zkplan(&["run", "--task", "coffee", "--json", "--transcript-out", t]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let replayed = zkplan(&["replay", t, "--task", "coffee", "--json"]);
    assert_eq!(replayed.status.code(), Some(0), "{}", stderr(&replayed));
    assert!(stderr(&replayed).is_empty(), "{}", stderr(&replayed));
    let a: RunResult = serde_json::from_str(&stdout(&first)).unwrap();
    let b: RunResult = serde_json::from_str(&stdout(&replayed)).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());

    let via_run = zkplan(&["run", "--task", "coffee", "--json", "--backend", "replay", "--transcript", t]);
    let c: RunResult = serde_json::from_str(&stdout(&via_run)).unwrap();
    assert_eq!(a.fingerprint(), c.fingerprint());
}

#[test]
fn custom_instruction_with_scene_and_goals() {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/scenes/apple.scene");
    let out = zkplan(&[
        "run",
        "--instruction",
        "put the apple in the fridge",
        "--scene",
        scene.to_str().unwrap(),
        "--goal",
        "In(apple, fridge)=true",
        "--fixtures",
        "golden",
    ]);
    // fixtures are keyed by task name, and a custom task has none bundled
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("no fixture set"), "{}", stderr(&out));
}

#[test]
fn log_file_receives_json_records() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.log");
    let out = zkplan(&["--log-file", log.to_str().unwrap(), "run", "--task", "table"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&log).unwrap();
    let first = text.lines().next().expect("at least one record");
    let record: serde_json::Value = serde_json::from_str(first).unwrap();
    assert!(record.get("level").is_some());
}

#[test]
fn render_scene_prints_one_view_per_heading() {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/scenes/mug.scene");
    let out = zkplan(&["render-scene", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).matches("view ").count(), 4);
}
