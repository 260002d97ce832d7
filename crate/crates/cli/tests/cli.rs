//! End-to-end tests of the `xgcf` binary: exit codes, artifact schemas,
//! determinism, and the counterfactual report contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn xgcf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xgcf"))
}

fn run(args: &[&str]) -> Output {
    xgcf().args(args).output().expect("binary runs")
}

fn assert_code(output: &Output, expected: i32) {
    let stdout = String::from_utf8_lossy(&output.stdout);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout:\n{stdout}\nstderr:\n{stderr}"
    );
}

/// Deterministic synthetic event fixture: four shooters (one below the
/// filter threshold), one penalty, one keeper-less freeze frame.
fn write_fixture(root: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let events = root.join("events");
    std::fs::create_dir_all(&events).unwrap();

    let mut state = 12345u64;
    let mut unit = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    let mut shot = |id: String, player: &str, team: &str, k: usize, shot_type: &str, keeper: bool| -> Value {
        let x = 96.0 + unit() * 22.0;
        let y = 22.0 + unit() * 36.0;
        let mut frames = vec![];
        if keeper {
            frames.push(json!({
                "location": [114.0 + unit() * 5.0, 37.0 + unit() * 6.0],
                "teammate": false,
                "position": {"name": "Goalkeeper"}
            }));
        }
        frames.push(json!({
            "location": [105.0 + unit() * 10.0, 20.0 + unit() * 40.0],
            "teammate": false,
            "position": {"name": "Center Back"}
        }));
        json!({
            "id": id,
            "type": {"name": "Shot"},
            "player": {"name": player},
            "team": {"name": team},
            "location": [x, y],
            "under_pressure": k % 3 == 0,
            "shot": {
                "type": {"name": shot_type},
                "outcome": {"name": if k % 6 == 0 { "Goal" } else { "Saved" }},
                "body_part": {"name": if k % 2 == 0 { "Right Foot" } else { "Left Foot" }},
                "technique": {"name": if k % 9 == 0 { "Volley" } else { "Normal" }},
                "first_time": k % 4 == 0,
                "one_on_one": k % 11 == 0,
                "freeze_frame": frames
            }
        })
    };

    let mut files: Vec<Vec<Value>> = vec![vec![], vec![], vec![]];
    let roster = [
        ("Anna Alpha", "Team X", 35usize),
        ("Ben Beta", "Team X", 33),
        ("Cora Gamma", "Team Y", 31),
        ("Fringe Player", "Team Y", 5),
    ];
    let mut serial = 0usize;
    for (player, team, count) in roster {
        for k in 0..count {
            files[serial % 3].push(shot(format!("ev-{serial:04}"), player, team, k, "Open Play", true));
            serial += 1;
        }
    }
    // One penalty and one missing-keeper event: both excluded.
    files[0].push(shot("ev-pen".into(), "Anna Alpha", "Team X", 1, "Penalty", true));
    files[1].push(shot("ev-nokeeper".into(), "Ben Beta", "Team X", 2, "Open Play", false));

    for (i, events_in_file) in files.iter().enumerate() {
        std::fs::write(
            events.join(format!("match_{i}.json")),
            serde_json::to_string_pretty(&Value::Array(events_in_file.clone())).unwrap(),
        )
        .unwrap();
    }

    let ratings = root.join("fm_ratings.csv");
    std::fs::write(
        &ratings,
        "name,finishing,technique,long_shots,heading\n\
         Anna Alpha,17,14,15,12\n\
         Ben Beta,9,11,8,13\n\
         Cora Gamma-Delta,13,12,16,7\n",
    )
    .unwrap();

    let aliases = root.join("aliases.csv");
    std::fs::write(&aliases, "event_name,rating_name\nCora Gamma,Cora Gamma-Delta\n").unwrap();

    (events, ratings, aliases)
}

fn fit_fixture(root: &Path, out: &Path, kind: &str, draws: u32, seed: u64) -> Output {
    let (events, ratings, aliases) = write_fixture(root);
    run(&[
        "fit",
        "--events-dir",
        events.to_str().unwrap(),
        "--ratings",
        ratings.to_str().unwrap(),
        "--aliases",
        aliases.to_str().unwrap(),
        "--kind",
        kind,
        "--chains",
        "2",
        "--warmup",
        "250",
        "--draws",
        &draws.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn empty_events_dir_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("empty");
    std::fs::create_dir_all(&events).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--events-dir",
        events.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("no shot events"));
}

#[test]
fn ingest_is_deterministic_and_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let (events, ratings, aliases) = write_fixture(dir.path());
    let mut shots_bytes = Vec::new();
    for run_dir in ["out_a", "out_b"] {
        let out = dir.path().join(run_dir);
        let output = run(&[
            "ingest",
            "--events-dir",
            events.to_str().unwrap(),
            "--ratings",
            ratings.to_str().unwrap(),
            "--aliases",
            aliases.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&output, 0);
        shots_bytes.push(std::fs::read(out.join("shots.csv")).unwrap());
    }
    assert_eq!(shots_bytes[0], shots_bytes[1]);

    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out_a/ingest_report.json")).unwrap())
            .unwrap();
    // 35 + 33 + 31 retained; the 5-shot player is filtered, penalty and
    // keeper-less shots excluded.
    assert_eq!(report["retained"], 99);
    assert_eq!(report["excluded_penalty"], 1);
    assert_eq!(report["excluded_missing_keeper"], 1);

    let players: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out_a/player_table.json")).unwrap())
            .unwrap();
    let entries = players["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    // Alias resolves the third player to its long-form rating row.
    assert!(entries.iter().all(|e| e["rating_row"].is_number()));
}

#[test]
fn features_export_has_fixed_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (events, ratings, _) = write_fixture(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "features",
        "--events-dir",
        events.to_str().unwrap(),
        "--ratings",
        ratings.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let features = std::fs::read_to_string(out.join("features.csv")).unwrap();
    let header = features.lines().next().unwrap();
    assert_eq!(
        header,
        "shot_id,shot_distance,gk_distance,shot_angle,defenders_in_triangle,penalty_area,\
         under_pressure,first_time,one_on_one,body_left,body_right,body_other,tech_normal,\
         tech_volley,tech_halfvolley,tech_lob,tech_dive,tech_overhead,outcome,player_index"
    );
    assert!(out.join("scaler.json").exists());
}

#[test]
fn fit_dimensions_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    assert_code(&fit_fixture(dir.path(), &out_a, "baseline", 60, 9), 0);
    let header = std::fs::read_to_string(out_a.join("draws_chain_0.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    // 18 baseline parameters plus the five stat columns.
    assert_eq!(header.split(',').count(), 23);

    let out_b = dir.path().join("b");
    assert_code(&fit_fixture(dir.path(), &out_b, "baseline", 60, 9), 0);
    for chain in 0..2 {
        let a = std::fs::read(out_a.join(format!("draws_chain_{chain}.csv"))).unwrap();
        let b = std::fs::read(out_b.join(format!("draws_chain_{chain}.csv"))).unwrap();
        assert_eq!(a, b, "chain {chain} not reproducible");
    }

    let out_h = dir.path().join("h");
    assert_code(&fit_fixture(dir.path(), &out_h, "hierarchical", 60, 10), 0);
    // 18 + 17 * 3 players + 4 group scales, plus the stat columns. Player
    // effect names carry commas, so count parsed header fields.
    let mut reader = csv::Reader::from_path(out_h.join("draws_chain_0.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 18 + 17 * 3 + 4 + 5);
    assert!(out_h.join("priors.csv").exists());
    assert!(out_h.join("run_metadata.json").exists());
}

#[test]
fn diagnose_exit_codes_follow_score() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good");
    assert_code(&fit_fixture(dir.path(), &good, "baseline", 400, 11), 0);
    let output = run(&["diagnose", "--draws", good.to_str().unwrap(), "--out", good.to_str().unwrap()]);
    assert_code(&output, 0);
    let diag: Value =
        serde_json::from_str(&std::fs::read_to_string(good.join("diagnostics.json")).unwrap()).unwrap();
    assert!(diag["score"].as_u64().unwrap() >= 4);

    // Too few draws: bulk ESS cannot clear 100, so the score drops and the
    // exit code flips to 1.
    let poor = dir.path().join("poor");
    assert_code(&fit_fixture(dir.path(), &poor, "baseline", 40, 12), 0);
    let output = run(&["diagnose", "--draws", poor.to_str().unwrap(), "--out", poor.to_str().unwrap()]);
    assert_code(&output, 1);

    // A single chain is not diagnosable.
    let single = dir.path().join("single");
    std::fs::create_dir_all(&single).unwrap();
    std::fs::copy(good.join("draws_chain_0.csv"), single.join("draws_chain_0.csv")).unwrap();
    let output = run(&["diagnose", "--draws", single.to_str().unwrap(), "--out", single.to_str().unwrap()]);
    assert_code(&output, 2);
}

#[test]
fn counterfactual_reports_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    assert_code(&fit_fixture(dir.path(), &out, "hierarchical", 150, 13), 0);

    // Identity substitution: zero delta, tie-rule probability.
    let output = run(&[
        "counterfactual",
        "--draws",
        out.to_str().unwrap(),
        "--from",
        "Anna Alpha",
        "--to",
        "Anna Alpha",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("counterfactual_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["delta"]["mean"], 0.0);
    assert_eq!(report["delta"]["prob_positive"], 0.5);
    assert_eq!(report["query"]["from_player"], "Anna Alpha");

    // Substitution with a team weighting produces the FATS block.
    let output = run(&[
        "counterfactual",
        "--draws",
        out.to_str().unwrap(),
        "--from",
        "Anna Alpha",
        "--to",
        "Ben Beta",
        "--team",
        "Team X",
        "--dump-draws",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&output, 0);
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("counterfactual_report.json")).unwrap(),
    )
    .unwrap();
    let weights = report["fats"]["weights"].as_object().unwrap();
    let total: f64 = weights.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let fats = report["fats"]["fats"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&fats));
    assert!(out.join("counterfactual_draws.csv").exists());

    // Unknown players come back with suggestions; empty teams are errors.
    let output = run(&[
        "counterfactual",
        "--draws",
        out.to_str().unwrap(),
        "--from",
        "Anna Alfa",
        "--to",
        "Ben Beta",
    ]);
    assert_code(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("nearest matches"));

    let output = run(&[
        "counterfactual",
        "--draws",
        out.to_str().unwrap(),
        "--from",
        "Anna Alpha",
        "--to",
        "Ben Beta",
        "--team",
        "Nobody FC",
    ]);
    assert_code(&output, 2);
}

#[test]
fn xg_report_totals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    assert_code(&fit_fixture(dir.path(), &out, "baseline", 100, 14), 0);
    let output = run(&["xg", "--draws", out.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_code(&output, 0);
    let xg = std::fs::read_to_string(out.join("xg.csv")).unwrap();
    let mut lines = xg.lines();
    assert_eq!(
        lines.next().unwrap(),
        "shot_id,player_name,player_index,outcome,xg_mean"
    );
    // One row per retained shot, probabilities strictly inside (0, 1).
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 99);
    for row in rows {
        let mean: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(mean > 0.0 && mean < 1.0);
    }
}

#[test]
fn config_file_drives_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (events, ratings, aliases) = write_fixture(dir.path());
    let out = dir.path().join("out");
    let config = json!({
        "events_dir": events,
        "fm_ratings": ratings,
        "aliases": aliases,
        "min_shots": 30,
        "kind": "baseline",
        "prior_mode": "weakly_informative",
        "sampler": {
            "chains": 2,
            "warmup": 250,
            "draws": 60,
            "target_accept": 0.9,
            "max_tree_depth": 10,
            "seed": 5,
            "init": "map"
        },
        "out": out,
        "context_flag": "under_pressure"
    });
    let config_path = dir.path().join("run.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let output = run(&["fit", "--config", config_path.to_str().unwrap()]);
    assert_code(&output, 0);
    assert!(out.join("draws_chain_1.csv").exists());
}
