//! Shared desk-scale fixture: a planted three-group corpus with
//! group-aligned readers, user rewards, and a pipeline config, laid out in a
//! temp directory with relative paths so reruns are byte-comparable.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::process::Output;

use chrono::NaiveDate;
use trendrec::corpus::{Article, Event};
use trendrec::synthetic::{mirrored_pair_scenario, planted_articles};

pub const DAY: i64 = 86_400;
/// Day-aligned corpus start epoch.
pub const START: i64 = 1_600_000_000 - 1_600_000_000 % DAY;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    /// The day the rewards fixture targets (for `insights --day`).
    pub reward_day: NaiveDate,
}

pub fn reward_day_epoch() -> i64 {
    START + 12 * DAY
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) {
    let mut f = File::create(path).unwrap();
    for row in rows {
        serde_json::to_writer(&mut f, row).unwrap();
        writeln!(f).unwrap();
    }
}

/// 3 groups x 8 users; the first 6 users of each group read 10 distinct
/// group articles (training-eligible even within one section), the last 2
/// read 3 (scoring-only).
fn group_events(articles: &[Article], labels: &[usize]) -> Vec<Event> {
    let mut by_group: Vec<Vec<&Article>> = vec![Vec::new(); 3];
    for (article, &label) in articles.iter().zip(labels) {
        by_group[label].push(article);
    }
    let base = START + 11 * DAY;
    let mut events = Vec::new();
    for g in 0..3 {
        for u in 0..8 {
            let reads = if u < 6 { 10 } else { 3 };
            for i in 0..reads {
                let article = by_group[g][(u * 5 + i) % by_group[g].len()];
                events.push(Event {
                    user_id: format!("user-{g}-{u}"),
                    article_id: article.id.clone(),
                    timestamp: base + (g * 8 + u) as i64 * 120 + i as i64 * 7,
                    placement: if i % 2 == 0 { "home" } else { "sports" }.to_string(),
                });
            }
        }
    }
    events
}

/// Rewards on the target day (plus a trickle over the preceding week so the
/// article-score window has data). Group 0 earns far less than groups 1-2,
/// making its segment unsatisfied.
fn rewards_jsonl(events: &[Event]) -> Vec<serde_json::Value> {
    let day = reward_day_epoch();
    let mut rows = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let group: usize = ev.user_id.split('-').nth(1).unwrap().parse().unwrap();
        let value = if group == 0 { 0.2 } else { 2.0 };
        rows.push(serde_json::json!({
            "user_id": ev.user_id,
            "article_id": ev.article_id,
            "timestamp": day + (i as i64 % 600) * 60,
            "reward": value,
        }));
        // historical rewards inside the 7-day lookback
        if i % 3 == 0 {
            rows.push(serde_json::json!({
                "user_id": ev.user_id,
                "article_id": ev.article_id,
                "timestamp": day - 2 * DAY + (i as i64 % 600) * 60,
                "reward": value,
            }));
        }
    }
    rows
}

fn config_json() -> serde_json::Value {
    serde_json::json!({
        "paths": {
            "articles": "articles.jsonl",
            "events": "events.jsonl",
            "rewards": "rewards.jsonl",
            "stopwords": "stopwords.txt",
            "lemmas": "lemmas.tsv",
            "artifacts_dir": "artifacts"
        },
        "corpus": { "min_doc_count": 2, "max_doc_fraction": 0.9 },
        "topics": { "num_topics": 3, "alpha": 0.5, "beta": 0.01, "iterations": 80, "seed": 13 },
        "profiles": { "window_days": 14, "min_articles_score": 2, "min_pageviews_train": 5 },
        "segments": { "k": 3, "variant": "general", "seed": 5, "inner_iters": 20 },
        "bandit": { "window_secs": 100000, "epsilon": 0.1, "ttl_secs": 30, "list_len": 4, "seed": 17 },
        "simulation": {
            "scenario": "scenario.json",
            "grid": [
                { "window_secs": 25, "epsilon": 0.1 },
                { "window_secs": 100000, "epsilon": 0.1 }
            ],
            "repetitions": 4,
            "trials_per_day": 25,
            "seed": 99,
            "horizon": 150
        }
    })
}

pub fn build_fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let (articles, labels) =
        planted_articles(3, 30, 30, 20, START, 10, &["sports", "news"], 3);
    write_jsonl(&root.join("articles.jsonl"), &articles);

    let events = group_events(&articles, &labels);
    write_jsonl(&root.join("events.jsonl"), &events);

    let rewards = rewards_jsonl(&events);
    write_jsonl(&root.join("rewards.jsonl"), &rewards);

    fs::write(root.join("stopwords.txt"), "the\nand\n").unwrap();
    // fold one planted word onto another to exercise the lemma stage
    fs::write(
        root.join("lemmas.tsv"),
        format!(
            "{}\t{}\n",
            trendrec::synthetic::planted_word(1, 0),
            trendrec::synthetic::planted_word(1, 1)
        ),
    )
    .unwrap();

    let scenario = mirrored_pair_scenario(150);
    fs::write(
        root.join("scenario.json"),
        serde_json::to_string_pretty(&scenario).unwrap(),
    )
    .unwrap();

    fs::write(
        root.join("trendrec.json"),
        serde_json::to_string_pretty(&config_json()).unwrap(),
    )
    .unwrap();

    let reward_day = chrono::DateTime::from_timestamp(reward_day_epoch(), 0)
        .unwrap()
        .date_naive();
    Fixture { dir, reward_day }
}

pub fn trendrec_bin() -> &'static str {
    env!("CARGO_BIN_EXE_trendrec")
}

/// Run the trendrec binary in `dir` and return its output.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(trendrec_bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Run and require success.
pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let output = run_in(dir, args);
    assert!(
        output.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}
