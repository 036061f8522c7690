//! Implementations of the pipeline subcommands.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::NaiveDate;

use trendrec::bandit::{BanditKnowledge, ItemPool};
use trendrec::config::PipelineConfig;
use trendrec::corpus::{self, Article, Event, LemmaMap, StopwordSet};
use trendrec::insights::{build_insights, load_user_rewards, render_insight, save_insights};
use trendrec::profiles::{
    build_histories, build_raw_profile, pageview_counts, standardize_profiles,
    StandardizationStats,
};
use trendrec::segments::{
    assign_user, bisecting_kmeans, describe_segment, load_segmentation, run_variant_pipeline,
    save_segmentation, Variant, VariantConfig,
};
use trendrec::serving::{BanditGenerator, Engine, LineProtocol};
use trendrec::simulator::{
    ab_harness, load_scenario, sweep, AbVariant, BanditParams, Policy, SimulationScenario,
};
use trendrec::topics::{daily_topic_trend, load_doc_topics, load_model, save_model, train_lda};

use crate::manifest::{digest_bytes, Manifest};
use crate::{CliError, Command};

pub fn run(config_path: &Path, command: Command) -> Result<(), CliError> {
    let mut config = load_config(config_path)?;
    match command {
        Command::TrainTopics { seed } => {
            if let Some(seed) = seed {
                config.topics.seed = seed;
            }
            train_topics(&config)
        }
        Command::BuildProfiles => build_profiles(&config),
        Command::Segment {
            variant,
            section,
            seed,
        } => {
            if let Some(v) = variant {
                config.segments.variant = v;
            }
            if let Some(s) = section {
                config.segments.section = Some(s);
            }
            if let Some(s) = seed {
                config.segments.seed = s;
            }
            segment(&config)
        }
        Command::DescribeSegments => describe_segments(&config),
        Command::SimulateSweep { scenario, seed } => {
            if let Some(path) = scenario {
                config.simulation.scenario = Some(path);
            }
            if let Some(s) = seed {
                config.simulation.seed = s;
            }
            simulate_sweep(&config)
        }
        Command::SimulateAb { scenario, seed } => {
            if let Some(path) = scenario {
                config.simulation.scenario = Some(path);
            }
            if let Some(s) = seed {
                config.simulation.seed = s;
            }
            simulate_ab(&config)
        }
        Command::Serve => serve(&config),
        Command::Insights {
            day,
            top_n,
            past_days,
        } => insights(&config, &day, top_n, past_days),
        Command::Trend { topic, from, to } => trend(&config, topic, from.as_deref(), to.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig, CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "config file {} does not exist",
            path.display()
        )));
    }
    PipelineConfig::load(path).map_err(CliError::from)
}

fn config_digest(config: &PipelineConfig) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(config)
        .map_err(|e| CliError::Internal(format!("serializing config: {e}")))?;
    Ok(digest_bytes(&bytes))
}

fn require_artifact(path: &Path, producing_command: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "missing artifact {}; run `trendrec {producing_command}` first",
            path.display()
        )))
    }
}

fn load_resources(config: &PipelineConfig) -> Result<(StopwordSet, LemmaMap), CliError> {
    let stopwords = match &config.paths.stopwords {
        Some(path) => corpus::load_stopwords(path)?,
        None => StopwordSet::new(),
    };
    let lemmas = match &config.paths.lemmas {
        Some(path) => corpus::load_lemmas(path)?,
        None => LemmaMap::new(),
    };
    Ok((stopwords, lemmas))
}

fn ingest(config: &PipelineConfig) -> Result<(Vec<Article>, Vec<Event>), CliError> {
    let (articles, _) = corpus::ingest_articles(&config.paths.articles)?;
    let known: HashSet<String> = articles.iter().map(|a| a.id.clone()).collect();
    let (events, report) = corpus::ingest_events(&config.paths.events, &known)?;
    if report.dropped_unknown_article > 0 {
        eprintln!(
            "warning: dropped {} events referencing unknown articles",
            report.dropped_unknown_article
        );
    }
    Ok((articles, events))
}

/// Profile window `[start, end)`: ends just past the newest event unless the
/// config pins a reference time. Shared by build-profiles and segment.
fn profile_window(config: &PipelineConfig, events: &[Event]) -> (i64, i64) {
    let end = config
        .profiles
        .reference_time
        .unwrap_or_else(|| events.iter().map(|e| e.timestamp).max().unwrap_or(0) + 1);
    (end - config.profiles.window_days * 86_400, end)
}

fn topics_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.artifacts_dir.join("topics")
}

fn profiles_dir(config: &PipelineConfig) -> PathBuf {
    config.paths.artifacts_dir.join("profiles")
}

fn configured_variant(config: &PipelineConfig) -> Result<Variant, CliError> {
    match config.segments.variant.as_str() {
        "general" => Ok(Variant::General),
        "hot" => Ok(Variant::HotTopics),
        "site" => {
            let section = config.segments.section.clone().ok_or_else(|| {
                CliError::Usage("the site variant requires --section".into())
            })?;
            Ok(Variant::SiteSpecific(section))
        }
        other => Err(CliError::Usage(format!(
            "unknown variant {other:?}; expected general|hot|site"
        ))),
    }
}

fn variant_dir(config: &PipelineConfig, variant: &Variant) -> PathBuf {
    let name = match variant {
        Variant::General => "segments-general".to_string(),
        Variant::HotTopics => "segments-hot".to_string(),
        Variant::SiteSpecific(section) => {
            let sanitized: String = section
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect();
            format!("segments-site-{sanitized}")
        }
    };
    config.paths.artifacts_dir.join(name)
}

fn add_corpus_inputs(manifest: &mut Manifest, config: &PipelineConfig) -> Result<(), CliError> {
    manifest.add_input(&config.paths.articles)?;
    manifest.add_input(&config.paths.events)?;
    if let Some(path) = &config.paths.stopwords {
        manifest.add_input(path)?;
    }
    if let Some(path) = &config.paths.lemmas {
        manifest.add_input(path)?;
    }
    Ok(())
}

fn train_topics(config: &PipelineConfig) -> Result<(), CliError> {
    let (stopwords, lemmas) = load_resources(config)?;
    let (articles, _) = corpus::ingest_articles(&config.paths.articles)?;
    let (tokenized, report) = corpus::preprocess(
        &articles,
        &stopwords,
        &lemmas,
        config.corpus.min_doc_count,
        config.corpus.max_doc_fraction,
    )?;
    if report.dropped_empty_docs > 0 {
        eprintln!(
            "warning: {} documents empty after filtering",
            report.dropped_empty_docs
        );
    }
    let output = train_lda(
        &tokenized,
        config.topics.num_topics,
        config.topics.effective_alpha(),
        config.topics.beta,
        config.topics.iterations,
        config.topics.seed,
    )?;

    let dir = topics_dir(config);
    save_model(&dir, &output.model, &output.doc_topics)?;

    let mut manifest = Manifest::new("train-topics", Some(config.topics.seed), config_digest(config)?);
    manifest.add_input(&config.paths.articles)?;
    if let Some(path) = &config.paths.stopwords {
        manifest.add_input(path)?;
    }
    if let Some(path) = &config.paths.lemmas {
        manifest.add_input(path)?;
    }
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    println!(
        "trained {} topics over {} documents ({} vocabulary terms) -> {}",
        output.model.num_topics,
        tokenized.docs.len(),
        tokenized.vocabulary.len(),
        dir.display()
    );
    Ok(())
}

fn build_profiles(config: &PipelineConfig) -> Result<(), CliError> {
    let tdir = topics_dir(config);
    require_artifact(&tdir.join("theta.jsonl"), "train-topics")?;
    let doc_topics = load_doc_topics(&tdir)?;
    let theta_by_id: HashMap<&str, &[f64]> = doc_topics
        .iter()
        .map(|dt| (dt.article_id.as_str(), dt.theta.as_slice()))
        .collect();

    let (_, events) = ingest(config)?;
    let window = profile_window(config, &events);
    let histories = build_histories(&events, window, config.profiles.min_articles_score)?;

    let mut raw = Vec::new();
    let mut dropped = 0usize;
    for history in &histories {
        match build_raw_profile(history, &theta_by_id) {
            Some(profile) => raw.push((history.user_id.clone(), profile)),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} users with no scoreable article");
    }
    let (profiles, stats) = standardize_profiles(&raw)?;

    let dir = profiles_dir(config);
    trendrec::profiles::save_profiles(&dir, &profiles, &stats)?;

    let mut manifest = Manifest::new("build-profiles", None, config_digest(config)?);
    add_corpus_inputs(&mut manifest, config)?;
    manifest.add_input(&tdir.join("theta.jsonl"))?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    println!(
        "built {} profiles over a {}-day window -> {}",
        profiles.len(),
        config.profiles.window_days,
        dir.display()
    );
    Ok(())
}

fn segment(config: &PipelineConfig) -> Result<(), CliError> {
    let variant = configured_variant(config)?;
    let dir = variant_dir(config, &variant);
    let mut manifest = Manifest::new("segment", Some(config.segments.seed), config_digest(config)?);

    let segmentation = match &variant {
        Variant::General => {
            let tdir = topics_dir(config);
            let pdir = profiles_dir(config);
            require_artifact(&tdir.join("model.json"), "train-topics")?;
            require_artifact(&pdir.join("profiles.jsonl"), "build-profiles")?;
            let model = load_model(&tdir)?;
            let (stored, stats) = trendrec::profiles::load_profiles(&pdir)?;

            let (_, events) = ingest(config)?;
            let window = profile_window(config, &events);
            let pageviews = pageview_counts(&events, window);

            let mut train_raw = Vec::new();
            let mut score_raw = Vec::new();
            for (user_id, theta) in &stored {
                let raw = stats.invert(theta)?;
                if pageviews.get(user_id).copied().unwrap_or(0)
                    >= config.profiles.min_pageviews_train
                {
                    train_raw.push((user_id.clone(), raw));
                } else {
                    score_raw.push((user_id.clone(), raw));
                }
            }

            let (train_profiles, train_stats) = standardize_profiles(&train_raw)?;
            let mut segmentation = bisecting_kmeans(
                &train_profiles,
                config.segments.k,
                config.segments.seed,
                config.segments.inner_iters,
            )?;
            segmentation.variant = Variant::General;
            segmentation.standardization = train_stats.dims.clone();
            for (user_id, raw) in &score_raw {
                let theta = train_stats.apply(raw)?;
                let assigned = assign_user(Some(&theta), &segmentation)?;
                segmentation.assignments.insert(user_id.clone(), assigned);
            }
            if model.num_topics != segmentation.num_topics {
                return Err(CliError::Data(format!(
                    "topic model has {} topics but profiles have {} dimensions; \
                     re-run build-profiles after train-topics",
                    model.num_topics, segmentation.num_topics
                )));
            }
            segmentation.descriptions = (1..=config.segments.k)
                .map(|k| describe_segment(&segmentation, k, &model))
                .collect::<trendrec::Result<Vec<_>>>()?;

            manifest.add_input(&tdir.join("model.json"))?;
            manifest.add_input(&tdir.join("phi.bin"))?;
            manifest.add_input(&pdir.join("profiles.jsonl"))?;
            manifest.add_input(&pdir.join("standardization.json"))?;
            add_corpus_inputs(&mut manifest, config)?;
            segmentation
        }
        Variant::HotTopics | Variant::SiteSpecific(_) => {
            let (stopwords, lemmas) = load_resources(config)?;
            let (articles, events) = ingest(config)?;
            let window = profile_window(config, &events);
            let variant_config = VariantConfig {
                stopwords,
                lemmas,
                min_doc_count: config.corpus.min_doc_count,
                max_doc_fraction: config.corpus.max_doc_fraction,
                num_topics: config.topics.num_topics,
                alpha: config.topics.effective_alpha(),
                beta: config.topics.beta,
                iterations: config.topics.iterations,
                topic_seed: config.topics.seed,
                window,
                min_pageviews_train: config.profiles.min_pageviews_train,
                min_articles_score: config.profiles.min_articles_score,
                k: config.segments.k,
                cluster_seed: config.segments.seed,
                inner_iters: config.segments.inner_iters,
            };
            let output = run_variant_pipeline(&variant, &articles, &events, &variant_config)?;
            if output.dropped_users > 0 {
                eprintln!(
                    "warning: dropped {} users with no scoreable article",
                    output.dropped_users
                );
            }
            // variant-local topic and profile artifacts
            save_model(&dir.join("topics"), &output.model, &output.doc_topics)?;
            let dims = output
                .segmentation
                .standardization
                .clone();
            let stats = StandardizationStats {
                degenerate: dims
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.std == 0.0)
                    .map(|(i, _)| i)
                    .collect(),
                dims,
            };
            trendrec::profiles::save_profiles(
                &dir.join("profiles"),
                &output.train_profiles,
                &stats,
            )?;
            add_corpus_inputs(&mut manifest, config)?;
            output.segmentation
        }
    };

    save_segmentation(&dir, &segmentation)?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    println!(
        "segmented {} users into {} clusters (sizes {:?}) -> {}",
        segmentation.assignments.len(),
        segmentation.k,
        segmentation.sizes,
        dir.display()
    );
    Ok(())
}

fn describe_segments(config: &PipelineConfig) -> Result<(), CliError> {
    let variant = configured_variant(config)?;
    let dir = variant_dir(config, &variant);
    require_artifact(&dir.join("segments.json"), "segment")?;
    let segmentation = load_segmentation(&dir)?;

    let mut text = String::new();
    for k in 1..=segmentation.k {
        let descriptions = &segmentation.descriptions[k - 1];
        let rendered = if descriptions.is_empty() {
            "(no distinctive topics)".to_string()
        } else {
            descriptions
                .iter()
                .map(|d| d.top_words.join(", "))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        text.push_str(&format!(
            "Segment {k} ({} users): {rendered}\n",
            segmentation.sizes[k - 1]
        ));
    }
    print!("{text}");
    fs::write(dir.join("descriptions.txt"), &text)
        .map_err(|e| CliError::Internal(format!("writing descriptions: {e}")))?;

    let mut manifest = Manifest::new("describe-segments", None, config_digest(config)?);
    manifest.add_input(&dir.join("segments.json"))?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;
    Ok(())
}

fn scenario_for(config: &PipelineConfig) -> Result<(SimulationScenario, PathBuf), CliError> {
    let Some(path) = &config.simulation.scenario else {
        return Err(CliError::Usage(
            "a scenario is required: pass --scenario or set simulation.scenario".into(),
        ));
    };
    Ok((load_scenario(path)?, path.clone()))
}

fn simulate_sweep(config: &PipelineConfig) -> Result<(), CliError> {
    let (scenario, scenario_path) = scenario_for(config)?;
    let grid: Vec<BanditParams> = config
        .simulation
        .grid
        .iter()
        .map(|g| BanditParams {
            window_secs: g.window_secs,
            epsilon: g.epsilon,
        })
        .collect();
    let result = sweep(
        &scenario,
        &grid,
        config.simulation.repetitions,
        config.simulation.seed,
    )?;

    let dir = config.paths.artifacts_dir.join("sweep");
    fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("mkdir: {e}")))?;
    result.write_csv(&dir.join("sweep.csv"))?;
    let mut bytes = serde_json::to_vec_pretty(&result)
        .map_err(|e| CliError::Internal(format!("serializing sweep: {e}")))?;
    bytes.push(b'\n');
    fs::write(dir.join("sweep.json"), bytes)
        .map_err(|e| CliError::Internal(format!("writing sweep.json: {e}")))?;

    let mut manifest = Manifest::new("simulate-sweep", Some(config.simulation.seed), config_digest(config)?);
    manifest.add_input(&scenario_path)?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    let best = result.best_candidate();
    println!(
        "best candidate: l={}s epsilon={} (mean reward {:.2} over {} repetitions) -> {}",
        best.candidate.window_secs,
        best.candidate.epsilon,
        best.mean,
        config.simulation.repetitions,
        dir.display()
    );
    Ok(())
}

fn simulate_ab(config: &PipelineConfig) -> Result<(), CliError> {
    let (scenario, scenario_path) = scenario_for(config)?;
    let params = BanditParams {
        window_secs: config.bandit.window_secs,
        epsilon: config.bandit.epsilon,
    };
    let variants = vec![
        AbVariant {
            name: "contextual".into(),
            policy: Policy::Contextual,
            params,
        },
        AbVariant {
            name: "global".into(),
            policy: Policy::Global,
            params,
        },
        AbVariant {
            name: "random".into(),
            policy: Policy::Random,
            params,
        },
    ];
    let horizon = config.simulation.horizon.unwrap_or(scenario.horizon);
    let report = ab_harness(
        &scenario,
        &variants,
        horizon,
        config.simulation.trials_per_day,
        config.simulation.seed,
    )?;

    let dir = config.paths.artifacts_dir.join("ab");
    fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("mkdir: {e}")))?;
    report.write_csv(&dir.join("ab.csv"))?;
    let mut bytes = serde_json::to_vec_pretty(&report)
        .map_err(|e| CliError::Internal(format!("serializing ab report: {e}")))?;
    bytes.push(b'\n');
    fs::write(dir.join("ab.json"), bytes)
        .map_err(|e| CliError::Internal(format!("writing ab.json: {e}")))?;

    let mut manifest = Manifest::new("simulate-ab", Some(config.simulation.seed), config_digest(config)?);
    manifest.add_input(&scenario_path)?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    for v in &report.variants {
        println!(
            "{:<12} mean daily metric {:>10.2}  uplift vs random {:>+7.1}%",
            v.name,
            v.mean_daily,
            v.uplift_vs_random * 100.0
        );
    }
    Ok(())
}

fn serve(config: &PipelineConfig) -> Result<(), CliError> {
    let variant = configured_variant(config)?;
    let seg_dir = variant_dir(config, &variant);
    require_artifact(&seg_dir.join("segments.json"), "segment")?;
    let segmentation = load_segmentation(&seg_dir)?;

    let (articles, _) = ingest(config)?;
    let mut pool = ItemPool::new();
    for article in &articles {
        let until = config
            .bandit
            .item_lifetime_secs
            .map(|life| article.published_at + life);
        pool.insert(article.id.clone(), article.published_at, until);
    }

    let knowledge = Arc::new(RwLock::new(BanditKnowledge::new(
        config.bandit.window_secs,
        config.bandit.epsilon,
    )?));
    let generator = Arc::new(BanditGenerator::new(
        Arc::clone(&knowledge),
        Arc::new(RwLock::new(pool)),
        config.bandit.list_len,
        config.bandit.seed,
    ));
    let assignments: HashMap<String, usize> = segmentation.assignments.into_iter().collect();
    let engine = Engine::new(assignments, config.bandit.ttl_secs, generator);
    let protocol = LineProtocol {
        engine,
        knowledge: Arc::clone(&knowledge),
    };

    eprintln!("serving on stdin/stdout; RESOLVE <user> <placement> | REWARD <user> <placement> <item> <reward>");
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Internal(format!("stdin: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .expect("clock after epoch")
            .as_secs() as i64;
        let response = protocol.handle(&line, now);
        writeln!(stdout, "{response}").map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
        stdout
            .flush()
            .map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
    }

    // knowledge snapshot for inspection
    let dir = config.paths.artifacts_dir.join("serve");
    protocol.knowledge.read().unwrap().write_snapshot(&dir)?;
    let mut manifest = Manifest::new("serve", Some(config.bandit.seed), config_digest(config)?);
    manifest.add_input(&seg_dir.join("segments.json"))?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;
    Ok(())
}

fn parse_day(text: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|e| CliError::Usage(format!("invalid date {text:?}: {e}")))
}

fn insights(
    config: &PipelineConfig,
    day: &str,
    top_n: usize,
    past_days: i64,
) -> Result<(), CliError> {
    let day = parse_day(day)?;
    let variant = configured_variant(config)?;
    let seg_dir = variant_dir(config, &variant);
    require_artifact(&seg_dir.join("segments.json"), "segment")?;
    let segmentation = load_segmentation(&seg_dir)?;

    let Some(rewards_path) = &config.paths.rewards else {
        return Err(CliError::Data(
            "paths.rewards must point to a user-reward JSONL file for insights".into(),
        ));
    };
    let rewards = load_user_rewards(rewards_path)?;

    let (articles, _) = corpus::ingest_articles(&config.paths.articles)?;
    let titles: HashMap<String, String> = articles
        .iter()
        .map(|a| (a.id.clone(), a.title.clone().unwrap_or_else(|| a.id.clone())))
        .collect();

    let (day_insights, report) =
        build_insights(day, &rewards, &segmentation, &titles, top_n, past_days)?;
    if report.cold_start_users > 0 {
        eprintln!(
            "note: {} active users without a segment were skipped",
            report.cold_start_users
        );
    }
    if !report.inactive_segments.is_empty() {
        eprintln!("note: segments {:?} had no active member", report.inactive_segments);
    }

    let dir = config.paths.artifacts_dir.join("insights");
    let (txt_path, _) = save_insights(&dir, day, &day_insights)?;

    let mut manifest = Manifest::new("insights", None, config_digest(config)?);
    manifest.add_input(rewards_path)?;
    manifest.add_input(&config.paths.articles)?;
    manifest.add_input(&seg_dir.join("segments.json"))?;
    manifest.add_input(&seg_dir.join("assignments.jsonl"))?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    if day_insights.is_empty() {
        println!("no unsatisfied segments on {day}");
    } else {
        for insight in &day_insights {
            print!("{}", render_insight(insight));
        }
    }
    println!("report -> {}", txt_path.display());
    Ok(())
}

fn trend(
    config: &PipelineConfig,
    topic: usize,
    from: Option<&str>,
    to: Option<&str>,
) -> Result<(), CliError> {
    let tdir = topics_dir(config);
    require_artifact(&tdir.join("theta.jsonl"), "train-topics")?;
    let doc_topics = load_doc_topics(&tdir)?;
    let (articles, _) = corpus::ingest_articles(&config.paths.articles)?;

    let day_of = |ts: i64| {
        chrono::DateTime::from_timestamp(ts, 0)
            .map(|dt| dt.date_naive())
            .ok_or_else(|| CliError::Data(format!("timestamp {ts} out of range")))
    };
    let from = match from {
        Some(text) => parse_day(text)?,
        None => day_of(articles.iter().map(|a| a.published_at).min().unwrap_or(0))?,
    };
    let to = match to {
        Some(text) => parse_day(text)?,
        None => day_of(articles.iter().map(|a| a.published_at).max().unwrap_or(0))?,
    };

    let series = daily_topic_trend(&doc_topics, &articles, topic, from, to)?;

    let dir = config.paths.artifacts_dir.join("trend");
    fs::create_dir_all(&dir).map_err(|e| CliError::Internal(format!("mkdir: {e}")))?;
    let path = dir.join(format!("trend-topic{topic}.csv"));
    let mut csv = String::from("day,value\n");
    for point in &series {
        match point.value {
            Some(v) => csv.push_str(&format!("{},{}\n", point.day, v)),
            None => csv.push_str(&format!("{},\n", point.day)),
        }
    }
    fs::write(&path, csv).map_err(|e| CliError::Internal(format!("writing trend csv: {e}")))?;

    let mut manifest = Manifest::new("trend", None, config_digest(config)?);
    manifest.add_input(&config.paths.articles)?;
    manifest.add_input(&tdir.join("theta.jsonl"))?;
    manifest.add_outputs_from_dir(&dir)?;
    manifest.write(&dir)?;

    println!("trend for topic {topic} ({from}..{to}) -> {}", path.display());
    Ok(())
}
