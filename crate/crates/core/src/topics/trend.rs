//! Daily publishing-trend series for one topic.

use chrono::{DateTime, NaiveDate};

use crate::corpus::Article;
use crate::error::{Error, Result};
use crate::util::population_stats;

use super::DocTopics;

/// One day of a standardized topic-trend series. `value` is `None` for days
/// without published articles, or for the whole series when it is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub day: NaiveDate,
    pub value: Option<f64>,
}

fn day_of(epoch_secs: i64) -> Option<NaiveDate> {
    DateTime::from_timestamp(epoch_secs, 0).map(|dt| dt.date_naive())
}

/// Per-day mean of theta for `topic` over articles published that day,
/// standardized to zero mean / unit population std over the days that have
/// articles. A zero-variance series yields all-null markers.
pub fn daily_topic_trend(
    doc_topics: &[DocTopics],
    articles: &[Article],
    topic: usize,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<TrendPoint>> {
    if from > to {
        return Err(Error::InvalidParameter("empty date range".into()));
    }
    let theta_by_id: std::collections::HashMap<&str, &DocTopics> = doc_topics
        .iter()
        .map(|dt| (dt.article_id.as_str(), dt))
        .collect();

    let num_days = (to - from).num_days() as usize + 1;
    let mut sums = vec![0.0f64; num_days];
    let mut counts = vec![0usize; num_days];
    for article in articles {
        let Some(day) = day_of(article.published_at) else {
            continue;
        };
        if day < from || day > to {
            continue;
        }
        let Some(dt) = theta_by_id.get(article.id.as_str()) else {
            continue;
        };
        let Some(&value) = dt.theta.get(topic) else {
            return Err(Error::TopicIndexOutOfRange {
                index: topic,
                num_topics: dt.theta.len(),
            });
        };
        let idx = (day - from).num_days() as usize;
        sums[idx] += value;
        counts[idx] += 1;
    }

    let means: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { Some(s / c as f64) } else { None })
        .collect();
    let present: Vec<f64> = means.iter().filter_map(|m| *m).collect();

    let stats = if present.is_empty() {
        None
    } else {
        let (mean, std) = population_stats(&present);
        // constant series: emit all-null rather than dividing by zero
        if std <= 1e-12 * mean.abs().max(1.0) {
            None
        } else {
            Some((mean, std))
        }
    };

    Ok(means
        .into_iter()
        .enumerate()
        .map(|(i, m)| TrendPoint {
            day: from + chrono::Days::new(i as u64),
            value: match (m, stats) {
                (Some(v), Some((mean, std))) => Some((v - mean) / std),
                _ => None,
            },
        })
        .collect())
}
