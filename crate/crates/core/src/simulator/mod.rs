//! Offline experiment simulation: single episodes, (l, ε) parameter sweeps,
//! and a traffic-splitting A/B harness.
//!
//! Every randomized run takes an explicit seed. Episodes use two independent
//! RNG streams: one for the environment (traffic, segments, item means,
//! rewards) and one for policy decisions, so different policies face the
//! same environment realization under the same seed.

mod scenario;
mod stats;

pub use scenario::{load_scenario, MeanSource, RewardLaw, RewardNoise, SimulationScenario};
pub use stats::{paired_t_test, PairedTTest};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::bandit::{random_policy, select, BanditKnowledge, Context, RewardEvent};
use crate::error::{Error, Result};
use crate::util::{derive_seed, sample_index};

/// Recommendation policy under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// ε-greedy with knowledge keyed by (segment, placement).
    Contextual,
    /// ε-greedy with all segments pooled into one context.
    Global,
    /// Uniform random baseline.
    Random,
}

/// Bandit hyperparameters selected by the sweep: knowledge window l
/// (seconds; one trial advances time by one second) and ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditParams {
    pub window_secs: i64,
    pub epsilon: f64,
}

/// Outcome of one simulated episode.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub cumulative_reward: f64,
    pub per_trial: Vec<f64>,
    pub views: u64,
}

struct LiveItem {
    id: String,
    means: Vec<f64>,
    born: u64,
}

struct World {
    items: Vec<LiveItem>,
    next_seq: u64,
}

impl World {
    fn spawn(
        &mut self,
        born: u64,
        scenario: &SimulationScenario,
        env_rng: &mut ChaCha8Rng,
    ) -> LiveItem {
        let seq = self.next_seq;
        self.next_seq += 1;
        LiveItem {
            id: format!("item-{seq:06}"),
            means: scenario
                .reward_law
                .means
                .draw(seq, scenario.num_segments, env_rng),
            born,
        }
    }

    fn advance(&mut self, t: u64, scenario: &SimulationScenario, env_rng: &mut ChaCha8Rng) {
        for i in 0..self.items.len() {
            if t - self.items[i].born >= scenario.article_lifetime {
                self.items[i] = self.spawn(t, scenario, env_rng);
            }
        }
        if let Some(period) = scenario.reward_law.drift_period {
            if t > 0 && t.is_multiple_of(period) {
                for i in 0..self.items.len() {
                    let seq = self.next_seq;
                    self.next_seq += 1;
                    self.items[i].means =
                        scenario
                            .reward_law
                            .means
                            .draw(seq, scenario.num_segments, env_rng);
                }
            }
        }
    }
}

const SIM_PLACEMENT: &str = "sim";

/// Run one episode of a scenario under one policy.
///
/// Items enter at birth and are replaced after `article_lifetime` trials;
/// traffic per trial is Poisson; each view draws a segment from the mix,
/// lets the policy pick one item, samples its reward, and feeds the reward
/// back into the policy's knowledge. Fully reproducible under `seed`.
pub fn run_episode(
    scenario: &SimulationScenario,
    policy: Policy,
    params: BanditParams,
    seed: u64,
) -> Result<EpisodeResult> {
    scenario.validate()?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));

    let mut world = World {
        items: Vec::new(),
        next_seq: 0,
    };
    for _ in 0..scenario.pool_size {
        let item = world.spawn(0, scenario, &mut env_rng);
        world.items.push(item);
    }

    let mut knowledge = match policy {
        Policy::Random => None,
        _ => Some(BanditKnowledge::new(params.window_secs, params.epsilon)?),
    };
    let poisson = Poisson::new(scenario.traffic_per_trial)
        .map_err(|e| Error::InvalidScenario(format!("traffic_per_trial: {e}")))?;

    let mut per_trial = Vec::with_capacity(scenario.horizon as usize);
    let mut cumulative = 0.0f64;
    let mut views = 0u64;
    for t in 0..scenario.horizon {
        world.advance(t, scenario, &mut env_rng);
        let pool: Vec<String> = world.items.iter().map(|i| i.id.clone()).collect();
        let n_views = poisson.sample(&mut env_rng) as usize;
        let mut trial_reward = 0.0f64;
        for _ in 0..n_views {
            let segment = sample_index(&scenario.segment_mix, &mut env_rng);
            let context = match policy {
                Policy::Contextual => Context::new(segment + 1, SIM_PLACEMENT),
                Policy::Global | Policy::Random => Context::new(0, SIM_PLACEMENT),
            };
            let picked = match &knowledge {
                Some(k) => select(k, &context, &pool, 1, &mut policy_rng)?.remove(0),
                None => random_policy(&pool, 1, &mut policy_rng)?.remove(0),
            };
            let mean = world
                .items
                .iter()
                .find(|i| i.id == picked)
                .expect("picked item is in the pool")
                .means[segment];
            let reward = scenario.reward_law.noise.draw(mean, &mut env_rng);
            if let Some(k) = &mut knowledge {
                k.record_reward(RewardEvent {
                    segment: context.segment,
                    placement: context.placement,
                    item_id: picked,
                    timestamp: t as i64,
                    reward,
                })?;
            }
            cumulative += reward;
            trial_reward += reward;
            views += 1;
        }
        per_trial.push(trial_reward);
    }
    Ok(EpisodeResult {
        cumulative_reward: cumulative,
        per_trial,
        views,
    })
}

/// One grid point of the hyperparameter sweep.
pub type SweepCandidate = BanditParams;

/// Per-candidate sweep outcome over shared-seed repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateResult {
    pub candidate: SweepCandidate,
    pub mean: f64,
    /// Sample standard deviation across repetitions.
    pub std: f64,
    /// Per-repetition cumulative rewards (repetition i shares its seed
    /// across all candidates, enabling paired comparisons).
    pub rewards: Vec<f64>,
}

/// Result of a full sweep; `best` indexes into `candidates`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub candidates: Vec<CandidateResult>,
    pub best: usize,
}

impl SweepResult {
    pub fn best_candidate(&self) -> &CandidateResult {
        &self.candidates[self.best]
    }

    /// Paired t-test between two candidates' per-repetition rewards.
    pub fn compare(&self, a: usize, b: usize) -> Result<PairedTTest> {
        paired_t_test(&self.candidates[a].rewards, &self.candidates[b].rewards)
    }

    /// Write `candidate_l,candidate_eps,mean,std` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "candidate_l,candidate_eps,mean,std")
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        for c in &self.candidates {
            writeln!(
                w,
                "{},{},{},{}",
                c.candidate.window_secs, c.candidate.epsilon, c.mean, c.std
            )
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }
}

/// Evaluate every (l, ε) candidate with the contextual policy over
/// `repetitions` shared-seed episodes and pick the best mean cumulative
/// reward. Ties prefer smaller ε, then smaller l.
pub fn sweep(
    scenario: &SimulationScenario,
    grid: &[SweepCandidate],
    repetitions: usize,
    seed: u64,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if repetitions < 1 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    let mut candidates = Vec::with_capacity(grid.len());
    for &candidate in grid {
        let mut rewards = Vec::with_capacity(repetitions);
        for rep in 0..repetitions {
            let episode = run_episode(
                scenario,
                Policy::Contextual,
                candidate,
                derive_seed(seed, rep as u64),
            )?;
            rewards.push(episode.cumulative_reward);
        }
        let mean = rewards.iter().sum::<f64>() / repetitions as f64;
        let std = if repetitions > 1 {
            (rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
                / (repetitions - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        candidates.push(CandidateResult {
            candidate,
            mean,
            std,
            rewards,
        });
    }

    let mut best = 0usize;
    for i in 1..candidates.len() {
        let (a, b) = (&candidates[i], &candidates[best]);
        let better = a.mean > b.mean
            || (a.mean == b.mean
                && (a.candidate.epsilon < b.candidate.epsilon
                    || (a.candidate.epsilon == b.candidate.epsilon
                        && a.candidate.window_secs < b.candidate.window_secs)));
        if better {
            best = i;
        }
    }
    Ok(SweepResult { candidates, best })
}

/// One A/B experiment variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbVariant {
    pub name: String,
    pub policy: Policy,
    pub params: BanditParams,
}

/// Per-variant A/B outcome.
#[derive(Debug, Clone, Serialize)]
pub struct AbVariantResult {
    pub name: String,
    pub policy: Policy,
    /// Total reward per simulated day.
    pub daily: Vec<f64>,
    pub mean_daily: f64,
    pub cumulative: f64,
    pub views: u64,
    /// (mean daily − random mean daily) / random mean daily.
    pub uplift_vs_random: f64,
}

/// Full A/B harness report.
#[derive(Debug, Clone, Serialize)]
pub struct AbReport {
    pub variants: Vec<AbVariantResult>,
    pub trials_per_day: u64,
}

impl AbReport {
    /// Write `variant,day,metric` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "variant,day,metric").map_err(|e| Error::io(path.display().to_string(), e))?;
        for v in &self.variants {
            for (day, metric) in v.daily.iter().enumerate() {
                writeln!(w, "{},{},{}", v.name, day, metric)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }
}

/// Split simulated traffic uniformly at random across variants and report
/// each variant's daily metric series plus its uplift over the random
/// baseline. `variants` must include a [`Policy::Random`] entry.
pub fn ab_harness(
    scenario: &SimulationScenario,
    variants: &[AbVariant],
    horizon: u64,
    trials_per_day: u64,
    seed: u64,
) -> Result<AbReport> {
    scenario.validate()?;
    if trials_per_day < 1 || horizon < 1 {
        return Err(Error::InvalidParameter(
            "horizon and trials_per_day must be >= 1".into(),
        ));
    }
    let Some(random_idx) = variants.iter().position(|v| v.policy == Policy::Random) else {
        return Err(Error::MissingRandomBaseline);
    };

    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));

    let mut world = World {
        items: Vec::new(),
        next_seq: 0,
    };
    for _ in 0..scenario.pool_size {
        let item = world.spawn(0, scenario, &mut env_rng);
        world.items.push(item);
    }

    let mut knowledge: Vec<Option<BanditKnowledge>> = variants
        .iter()
        .map(|v| match v.policy {
            Policy::Random => Ok(None),
            _ => BanditKnowledge::new(v.params.window_secs, v.params.epsilon).map(Some),
        })
        .collect::<Result<_>>()?;
    let poisson = Poisson::new(scenario.traffic_per_trial)
        .map_err(|e| Error::InvalidScenario(format!("traffic_per_trial: {e}")))?;

    let days = horizon.div_ceil(trials_per_day) as usize;
    let mut daily = vec![vec![0.0f64; days]; variants.len()];
    let mut cumulative = vec![0.0f64; variants.len()];
    let mut views = vec![0u64; variants.len()];
    for t in 0..horizon {
        world.advance(t, scenario, &mut env_rng);
        let pool: Vec<String> = world.items.iter().map(|i| i.id.clone()).collect();
        let day = (t / trials_per_day) as usize;
        let n_views = poisson.sample(&mut env_rng) as usize;
        for _ in 0..n_views {
            let segment = sample_index(&scenario.segment_mix, &mut env_rng);
            let v = (env_rng.next_u64() % variants.len() as u64) as usize;
            let context = match variants[v].policy {
                Policy::Contextual => Context::new(segment + 1, SIM_PLACEMENT),
                _ => Context::new(0, SIM_PLACEMENT),
            };
            let picked = match &knowledge[v] {
                Some(k) => select(k, &context, &pool, 1, &mut policy_rng)?.remove(0),
                None => random_policy(&pool, 1, &mut policy_rng)?.remove(0),
            };
            let mean = world
                .items
                .iter()
                .find(|i| i.id == picked)
                .expect("picked item is in the pool")
                .means[segment];
            let reward = scenario.reward_law.noise.draw(mean, &mut env_rng);
            if let Some(k) = &mut knowledge[v] {
                k.record_reward(RewardEvent {
                    segment: context.segment,
                    placement: context.placement,
                    item_id: picked,
                    timestamp: t as i64,
                    reward,
                })?;
            }
            daily[v][day] += reward;
            cumulative[v] += reward;
            views[v] += 1;
        }
    }

    let mean_daily: Vec<f64> = daily
        .iter()
        .map(|d| d.iter().sum::<f64>() / d.len() as f64)
        .collect();
    let baseline = mean_daily[random_idx];
    let results = variants
        .iter()
        .enumerate()
        .map(|(v, variant)| AbVariantResult {
            name: variant.name.clone(),
            policy: variant.policy,
            daily: daily[v].clone(),
            mean_daily: mean_daily[v],
            cumulative: cumulative[v],
            views: views[v],
            uplift_vs_random: if baseline > 0.0 {
                (mean_daily[v] - baseline) / baseline
            } else {
                0.0
            },
        })
        .collect();
    Ok(AbReport {
        variants: results,
        trials_per_day,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{
        drifting_scenario, mirrored_pair_scenario, single_item_scenario, stationary_scenario,
    };

    fn params(window: i64, epsilon: f64) -> BanditParams {
        BanditParams {
            window_secs: window,
            epsilon,
        }
    }

    #[test]
    fn single_item_scenario_equalizes_policies() {
        let scenario = single_item_scenario();
        let contextual =
            run_episode(&scenario, Policy::Contextual, params(1000, 0.1), 5).unwrap();
        let global = run_episode(&scenario, Policy::Global, params(1000, 0.1), 5).unwrap();
        let random = run_episode(&scenario, Policy::Random, params(1000, 0.1), 5).unwrap();
        assert_eq!(contextual.cumulative_reward, global.cumulative_reward);
        assert_eq!(contextual.cumulative_reward, random.cumulative_reward);
    }

    #[test]
    fn episodes_are_reproducible_under_seed() {
        let scenario = mirrored_pair_scenario(500);
        let a = run_episode(&scenario, Policy::Contextual, params(100_000, 0.1), 9).unwrap();
        let b = run_episode(&scenario, Policy::Contextual, params(100_000, 0.1), 9).unwrap();
        assert_eq!(a.cumulative_reward, b.cumulative_reward);
        assert_eq!(a.per_trial, b.per_trial);
    }

    #[test]
    fn cumulative_reward_equals_trace_sum() {
        let scenario = mirrored_pair_scenario(300);
        let episode = run_episode(&scenario, Policy::Contextual, params(100_000, 0.1), 3).unwrap();
        let total: f64 = episode.per_trial.iter().sum();
        assert!((episode.cumulative_reward - total).abs() < 1e-9);
        assert_eq!(episode.per_trial.len(), 300);
    }

    #[test]
    fn contextual_beats_global_on_opposed_segments() {
        let scenario = mirrored_pair_scenario(800);
        let p = params(100_000, 0.1);
        let mut ctx_rewards = Vec::new();
        let mut glob_rewards = Vec::new();
        for rep in 0..20 {
            let seed = derive_seed(42, rep);
            ctx_rewards
                .push(run_episode(&scenario, Policy::Contextual, p, seed).unwrap().cumulative_reward);
            glob_rewards
                .push(run_episode(&scenario, Policy::Global, p, seed).unwrap().cumulative_reward);
        }
        let test = paired_t_test(&ctx_rewards, &glob_rewards).unwrap();
        assert!(test.mean_diff > 0.0, "contextual should beat global");
        assert!(test.p_two_sided < 0.01, "p = {}", test.p_two_sided);
    }

    #[test]
    fn all_policies_tie_at_epsilon_one() {
        let scenario = mirrored_pair_scenario(600);
        let p = params(100_000, 1.0);
        let mut ctx = Vec::new();
        let mut rand_rewards = Vec::new();
        for rep in 0..30 {
            let seed = derive_seed(7, rep);
            ctx.push(run_episode(&scenario, Policy::Contextual, p, seed).unwrap().cumulative_reward);
            rand_rewards
                .push(run_episode(&scenario, Policy::Random, p, seed).unwrap().cumulative_reward);
        }
        let mc = ctx.iter().sum::<f64>() / ctx.len() as f64;
        let mr = rand_rewards.iter().sum::<f64>() / rand_rewards.len() as f64;
        assert!(
            ((mc - mr) / mr).abs() < 0.03,
            "epsilon=1 means {mc} vs {mr} should be close"
        );
    }

    #[test]
    fn sweep_singleton_grid_returns_it() {
        let scenario = single_item_scenario();
        let grid = [params(50, 0.2)];
        let result = sweep(&scenario, &grid, 3, 1).unwrap();
        assert_eq!(result.best, 0);
        assert_eq!(result.candidates.len(), 1);
        assert_eq!(result.candidates[0].rewards.len(), 3);
    }

    #[test]
    fn drifting_scenario_prefers_short_window() {
        let scenario = drifting_scenario(1200);
        let grid = [params(25, 0.1), params(100, 0.1), params(100_000, 0.1)];
        let result = sweep(&scenario, &grid, 12, 11).unwrap();
        let best_l = result.best_candidate().candidate.window_secs;
        assert!(
            best_l < 100_000,
            "drifting rewards should favor a window below the grid max, got {best_l}"
        );
    }

    #[test]
    fn stationary_scenario_prefers_long_window_or_ties() {
        let scenario = stationary_scenario(1200);
        let grid = [params(25, 0.1), params(100, 0.1), params(100_000, 0.1)];
        let result = sweep(&scenario, &grid, 12, 13).unwrap();
        let best_l = result.best_candidate().candidate.window_secs;
        if best_l != 100_000 {
            let max_idx = 2;
            let test = result
                .compare(result.best, max_idx)
                .unwrap();
            assert!(
                test.p_two_sided >= 0.01,
                "best l={best_l} significantly beat the max window (p={})",
                test.p_two_sided
            );
        }
    }

    #[test]
    fn epsilon_greedy_dominates_random_on_nonconstant_rewards() {
        let scenario = drifting_scenario(800);
        let p = params(40, 0.1);
        let mut greedy = Vec::new();
        let mut baseline = Vec::new();
        for rep in 0..50 {
            let seed = derive_seed(31, rep);
            greedy.push(
                run_episode(&scenario, Policy::Contextual, p, seed)
                    .unwrap()
                    .cumulative_reward,
            );
            baseline.push(
                run_episode(&scenario, Policy::Random, p, seed)
                    .unwrap()
                    .cumulative_reward,
            );
        }
        let test = paired_t_test(&greedy, &baseline).unwrap();
        assert!(test.mean_diff > 0.0);
        assert!(test.p_two_sided < 0.01, "p = {}", test.p_two_sided);
    }

    #[test]
    fn ab_requires_random_baseline() {
        let scenario = mirrored_pair_scenario(100);
        let variants = [AbVariant {
            name: "contextual".into(),
            policy: Policy::Contextual,
            params: params(1000, 0.1),
        }];
        assert!(matches!(
            ab_harness(&scenario, &variants, 100, 10, 1),
            Err(Error::MissingRandomBaseline)
        ));
    }

    #[test]
    fn ab_all_random_variants_have_near_zero_uplift() {
        let scenario = mirrored_pair_scenario(6000);
        let variants: Vec<AbVariant> = (0..2)
            .map(|i| AbVariant {
                name: format!("random{i}"),
                policy: Policy::Random,
                params: params(1000, 1.0),
            })
            .collect();
        let report = ab_harness(&scenario, &variants, 6000, 50, 3).unwrap();
        for v in &report.variants {
            assert!(
                v.uplift_vs_random.abs() < 0.05,
                "variant {} uplift {}",
                v.name,
                v.uplift_vs_random
            );
        }
    }

    #[test]
    fn ab_orders_contextual_above_global_above_random() {
        let scenario = mirrored_pair_scenario(2000);
        let p = params(100_000, 0.1);
        let variants = vec![
            AbVariant {
                name: "contextual".into(),
                policy: Policy::Contextual,
                params: p,
            },
            AbVariant {
                name: "global".into(),
                policy: Policy::Global,
                params: p,
            },
            AbVariant {
                name: "random".into(),
                policy: Policy::Random,
                params: p,
            },
        ];
        let report = ab_harness(&scenario, &variants, 2000, 50, 17).unwrap();
        let uplift = |name: &str| {
            report
                .variants
                .iter()
                .find(|v| v.name == name)
                .unwrap()
                .uplift_vs_random
        };
        assert!(uplift("contextual") > uplift("global"));
        assert!(uplift("global") > 0.0);
    }
}
