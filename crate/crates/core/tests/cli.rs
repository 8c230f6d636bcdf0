use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

fn levelbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelbt"))
        .args(args)
        .current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
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
fn generate_is_reproducible_and_echoes_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = levelbt(&[
            "generate",
            "--tree",
            "trees/smb-worked.bt",
            "--lib",
            "smb/smb.json",
            "--seed",
            "7",
            "--mode",
            "single-tick",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stderr(&o).contains("seed: 7"));
        fs::read(out).unwrap()
    };
    let first = run("a.txt");
    assert_eq!(first, run("b.txt"));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 15);
    assert!(text.lines().all(|l| l.chars().count() == 16 * 10));
}

#[test]
fn dungeon_loop_reaches_room_target() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("layout.json");
    let o = levelbt(&[
        "generate",
        "--tree",
        "trees/dungeon.bt",
        "--lib",
        "zelda/zelda.json",
        "--mode",
        "loop",
        "--stop-key",
        "room_count",
        "--stop-threshold",
        "8",
        "--layout-out",
        layout.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let layout: serde_json::Value = serde_json::from_slice(&fs::read(layout).unwrap()).unwrap();
    assert_eq!(layout["rooms"].as_array().unwrap().len(), 8);
    let grid: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = grid["rows"].as_u64().unwrap();
    assert_eq!(rows % 11, 0);
    assert_eq!(grid["cells"].as_array().unwrap().len() as u64, rows);
}

#[test]
fn loop_mode_needs_stop_condition() {
    let o = levelbt(&[
        "generate",
        "--tree",
        "trees/dungeon.bt",
        "--lib",
        "zelda/zelda.json",
        "--mode",
        "loop",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blend_mixes_three_games() {
    let o = levelbt(&[
        "generate",
        "--tree",
        "trees/blend.bt",
        "--lib",
        "smb/smb.json",
        "--lib",
        "mm/mm.json",
        "--lib",
        "metroid/metroid.json",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    // 'X' ground only occurs in smb tiles, 'D' doors only in metroid ones
    assert!(text.contains('D') && text.contains('X'));
    assert_eq!(text.lines().count() % 15, 0);
}

#[test]
fn failure_exits_one_and_still_writes_level() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.bt");
    fs::write(
        &tree,
        r#"(sequence (action :do "place-pattern" :patterns ("flat")) (action :do "place-pattern" :patterns ("absent")))"#,
    )
    .unwrap();
    let o = levelbt(&[
        "generate",
        "--tree",
        tree.to_str().unwrap(),
        "--lib",
        "smb/smb.json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 15);
}

#[test]
fn tick_budget_exhaustion_exits_one() {
    let o = levelbt(&[
        "generate",
        "--tree",
        "trees/dungeon.bt",
        "--lib",
        "zelda/zelda.json",
        "--mode",
        "loop",
        "--stop-key",
        "room_count",
        "--stop-threshold",
        "50",
        "--max-ticks",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tick budget exhausted"));
}

#[test]
fn trace_lines_are_json() {
    let o = levelbt(&[
        "generate",
        "--tree",
        "trees/smb-gap.bt",
        "--lib",
        "smb/smb.json",
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let records: Vec<serde_json::Value> = stderr(&o)
        .lines()
        .filter(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(!records.is_empty());
    let last = records.last().unwrap();
    assert_eq!(last["node"], 0);
    assert_eq!(last["kind"], "selector");
    assert_eq!(last["name"], "Do Gap?");
}

#[test]
fn set_seeds_the_blackboard() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.bt");
    fs::write(
        &tree,
        r#"(sequence (condition :check "flag" :key "go" :expected "true") (action :do "place-pattern" :patterns ("flat")))"#,
    )
    .unwrap();
    let t = tree.to_str().unwrap();
    assert_eq!(
        levelbt(&["generate", "--tree", t, "--lib", "smb/smb.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        levelbt(&[
            "generate",
            "--tree",
            t,
            "--lib",
            "smb/smb.json",
            "--set",
            "go=true"
        ])
        .status
        .code(),
        Some(0)
    );
}

#[test]
fn validate_reports() {
    let ok = levelbt(&["validate", "--tree", "trees/mm.bt", "--lib", "mm/mm.json"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).is_empty() && stderr(&ok).is_empty());

    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.bt");
    fs::write(&tree, "(sequence\n  (action :do \"teleport\"))").unwrap();
    let bad = levelbt(&["validate", "--tree", tree.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    let lines: Vec<String> = stderr(&bad).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1);
    assert!(
        lines[0].ends_with(":2:3: error: unknown action executor: teleport"),
        "{}",
        lines[0]
    );

    let parse = levelbt(&["validate", "--tree", "dsl/malformed/decorator-arity.bt"]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(stderr(&parse).contains("decorator requires exactly 1 child"));
}

#[test]
fn validate_rejects_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("mm/mm_r_0.txt"), dir.path().join("r.txt")).unwrap();
    let manifest = dir.path().join("dup.json");
    fs::write(
        &manifest,
        r##"{"game":"mm","rows":15,"cols":16,"passable":["-"],"fill":"#",
            "segments":[{"id":"a","file":"r.txt"},{"id":"a","file":"r.txt"}]}"##,
    )
    .unwrap();
    let o = levelbt(&[
        "validate",
        "--tree",
        "trees/mm.bt",
        "--lib",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate segment id: a"));
}

#[test]
fn inspect_filters_and_shows() {
    let ur = levelbt(&["inspect", "--lib", "mm/mm.json", "--openings", "UR"]);
    assert_eq!(ur.status.code(), Some(0));
    let ids: Vec<String> = stdout(&ur)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_owned())
        .collect();
    assert_eq!(ids, ["mm_udlr_0", "mm_ur_0", "mm_ur_1"]);

    let stairs = levelbt(&["inspect", "--lib", "smb/smb.json", "--pattern", "stair-up"]);
    for line in stdout(&stairs).lines() {
        assert!(line
            .split('\t')
            .nth(3)
            .unwrap()
            .split(',')
            .any(|p| p == "stair-up"));
    }
    assert!(!stdout(&stairs).is_empty());

    let show = levelbt(&["inspect", "--lib", "smb/smb.json", "--show", "seg_03"]);
    let raw = fs::read_to_string(fixture("smb/seg_03.txt")).unwrap();
    assert_eq!(stdout(&show), format!("{}\n{raw}", "-".repeat(16)));

    let missing = levelbt(&["inspect", "--lib", "smb/smb.json", "--show", "ghost"]);
    assert_eq!(missing.status.code(), Some(2));
}
