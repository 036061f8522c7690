//! CLI behavior: exit codes, dependency errors naming the producing
//! command, run manifests, the trend series against an independent
//! recomputation, and the serve line protocol end to end.

mod common;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use common::{build_fixture, run_in, run_ok, trendrec_bin, DAY};

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let fixture = build_fixture();
    let output = run_in(fixture.dir.path(), &["frobnicate"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bad_variant_is_a_usage_error() {
    let fixture = build_fixture();
    let output = run_in(fixture.dir.path(), &["segment", "--variant", "nonsense"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("general|hot|site"));
}

#[test]
fn bad_day_is_a_usage_error() {
    let fixture = build_fixture();
    let output = run_in(fixture.dir.path(), &["insights", "--day", "not-a-date"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_config_is_a_data_error() {
    let fixture = build_fixture();
    let output = run_in(
        fixture.dir.path(),
        &["--config", "missing.json", "train-topics"],
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn segment_before_build_profiles_names_the_producer() {
    let fixture = build_fixture();
    run_ok(fixture.dir.path(), &["train-topics"]);
    let output = run_in(fixture.dir.path(), &["segment"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("build-profiles"),
        "stderr should name build-profiles: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn build_profiles_before_train_topics_names_the_producer() {
    let fixture = build_fixture();
    let output = run_in(fixture.dir.path(), &["build-profiles"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("train-topics"));
}

#[test]
fn manifests_record_config_inputs_and_outputs() {
    let fixture = build_fixture();
    run_ok(fixture.dir.path(), &["train-topics"]);
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(fixture.dir.path().join("artifacts/topics/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "train-topics");
    assert_eq!(manifest["seed"], 13);
    assert!(manifest["config_digest"].as_str().unwrap().starts_with("sha256:"));
    assert!(manifest["inputs"].get("articles.jsonl").is_some());
    for output in ["model.json", "phi.bin", "theta.jsonl"] {
        assert!(
            manifest["outputs"].get(output).is_some(),
            "missing output digest for {output}"
        );
    }
}

#[test]
fn hot_variant_writes_its_own_topic_space() {
    let fixture = build_fixture();
    run_ok(fixture.dir.path(), &["segment", "--variant", "hot"]);
    let dir = fixture.dir.path().join("artifacts/segments-hot");
    assert!(dir.join("segments.json").exists());
    assert!(dir.join("assignments.jsonl").exists());
    assert!(dir.join("topics/model.json").exists());
    assert!(dir.join("profiles/profiles.jsonl").exists());
    let seg: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("segments.json")).unwrap()).unwrap();
    assert_eq!(seg["variant"], "hot_topics");
}

#[test]
fn site_variant_requires_known_section() {
    let fixture = build_fixture();
    let output = run_in(
        fixture.dir.path(),
        &["segment", "--variant", "site", "--section", "finance"],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("finance"));

    run_ok(
        fixture.dir.path(),
        &["segment", "--variant", "site", "--section", "sports"],
    );
    assert!(fixture
        .dir
        .path()
        .join("artifacts/segments-site-sports/segments.json")
        .exists());
}

/// Recompute the trend series from the artifacts with independent test code
/// and compare against the CSV the binary wrote.
#[test]
fn trend_csv_matches_independent_recomputation() {
    let fixture = build_fixture();
    let root = fixture.dir.path();
    run_ok(root, &["train-topics"]);
    run_ok(root, &["trend", "--topic", "1"]);

    // independent recomputation: day means of theta[1], population z-score
    let mut theta_by_id: HashMap<String, f64> = HashMap::new();
    for line in std::fs::read_to_string(root.join("artifacts/topics/theta.jsonl"))
        .unwrap()
        .lines()
    {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        theta_by_id.insert(
            row["article_id"].as_str().unwrap().to_string(),
            row["theta"][1].as_f64().unwrap(),
        );
    }
    let mut day_sums: HashMap<i64, (f64, usize)> = HashMap::new();
    let mut min_day = i64::MAX;
    let mut max_day = i64::MIN;
    for line in std::fs::read_to_string(root.join("articles.jsonl")).unwrap().lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        let day = row["published_at"].as_i64().unwrap().div_euclid(DAY);
        min_day = min_day.min(day);
        max_day = max_day.max(day);
        if let Some(&theta) = theta_by_id.get(row["id"].as_str().unwrap()) {
            let entry = day_sums.entry(day).or_insert((0.0, 0));
            entry.0 += theta;
            entry.1 += 1;
        }
    }
    let mut expected: Vec<Option<f64>> = (min_day..=max_day)
        .map(|d| day_sums.get(&d).map(|&(sum, count)| sum / count as f64))
        .collect();
    let present: Vec<f64> = expected.iter().filter_map(|v| *v).collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    let std = (present.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / present.len() as f64)
        .sqrt();
    for value in expected.iter_mut().flatten() {
        *value = (*value - mean) / std;
    }

    let csv = std::fs::read_to_string(root.join("artifacts/trend/trend-topic1.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), expected.len());
    for (row, want) in rows.iter().zip(&expected) {
        let value = row.split(',').nth(1).unwrap();
        match want {
            None => assert!(value.is_empty()),
            Some(w) => {
                let got: f64 = value.parse().unwrap();
                assert!((got - w).abs() < 1e-9, "row {row}: got {got}, want {w}");
            }
        }
    }
}

#[test]
fn serve_answers_the_line_protocol_and_snapshots_knowledge() {
    let fixture = build_fixture();
    let root = fixture.dir.path();
    run_ok(root, &["train-topics"]);
    run_ok(root, &["build-profiles"]);
    run_ok(root, &["segment"]);

    let mut child = Command::new(trendrec_bin())
        .current_dir(root)
        .args(["serve"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let stdout = child.stdout.take().unwrap();
    let mut reader = BufReader::new(stdout);

    writeln!(stdin, "RESOLVE user-0-0 home").unwrap();
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let response: serde_json::Value = serde_json::from_str(&line).unwrap();
    let segment = response["segment"].as_u64().unwrap();
    assert!(segment >= 1, "profiled user should have a segment: {response}");
    assert_eq!(response["cache_state"], "miss");
    let items = response["items"].as_array().unwrap();
    assert_eq!(items.len(), 4); // config list_len
    let first_item = items[0].as_str().unwrap().to_string();

    // same context again: fresh hit with the identical list
    writeln!(stdin, "RESOLVE user-0-1 home").unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    let second: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(second["cache_state"], "fresh-hit");
    assert_eq!(second["items"], response["items"]);

    // unknown user lands in the cold-start segment
    writeln!(stdin, "RESOLVE nobody home").unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    let cold: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(cold["segment"], 0);

    writeln!(stdin, "REWARD user-0-0 home {first_item} 1.5").unwrap();
    line.clear();
    reader.read_line(&mut line).unwrap();
    assert_eq!(line.trim(), "{\"ok\":true}");

    drop(stdin);
    let status = child.wait().unwrap();
    assert!(status.success());

    // the knowledge snapshot must reflect the recorded reward
    let serve_dir = root.join("artifacts/serve");
    assert!(serve_dir.join("manifest.json").exists());
    let snapshot = std::fs::read_dir(&serve_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.file_name().to_string_lossy().starts_with("knowledge-"))
        .expect("knowledge snapshot written");
    let csv = std::fs::read_to_string(snapshot.path()).unwrap();
    assert!(csv.starts_with("item_id,count,mean_reward"));
    assert!(csv.contains(&format!("{first_item},1,1.5")));
}

#[test]
fn describe_segments_prints_topic_words() {
    let fixture = build_fixture();
    let root = fixture.dir.path();
    run_ok(root, &["train-topics"]);
    run_ok(root, &["build-profiles"]);
    run_ok(root, &["segment"]);
    let output = run_ok(root, &["describe-segments"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("Segment 1"));
    assert!(stdout.contains("Segment 3"));
    assert!(root
        .join("artifacts/segments-general/descriptions.txt")
        .exists());
}

#[test]
fn insights_reports_the_underperforming_segment() {
    let fixture = build_fixture();
    let root = fixture.dir.path();
    run_ok(root, &["train-topics"]);
    run_ok(root, &["build-profiles"]);
    run_ok(root, &["segment"]);
    let day = fixture.reward_day.to_string();
    let output = run_ok(root, &["insights", "--day", &day]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("Unsatisfied segment"),
        "expected an unsatisfied segment in:\n{stdout}"
    );

    let json_path = root.join(format!("artifacts/insights/insights-{day}.json"));
    let insights: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
    let list = insights.as_array().unwrap();
    assert_eq!(list.len(), 1, "exactly the low-reward group should surface");
    let insight = &list[0];
    assert!(insight["cardinality"].as_u64().unwrap() >= 1);
    assert!(insight["topics"].as_array().is_some());
    let top = insight["top_articles"].as_array().unwrap();
    assert!(!top.is_empty());
    for article in top {
        assert!(article["title"].as_str().unwrap().starts_with("Story"));
    }
}
