//! Evaluation metrics: windowed goal score and steps-to-goal.

use serde::{Deserialize, Serialize};

use crate::physics::Score;
use crate::reward::RewardBreakdown;
use crate::stats::summarize;

pub const DEFAULT_WINDOW: usize = 100;

/// Goal reward accumulated over the `window` steps starting at each step.
///
/// Entry `t` sums `goal_rewards[t..t + window]`, truncated at the end of the series.
pub fn windowed_goal_score(goal_rewards: &[f64], window: usize) -> Vec<f64> {
    let n = goal_rewards.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for r in goal_rewards {
        prefix.push(prefix.last().unwrap() + r);
    }
    (0..n).map(|t| prefix[(t + window).min(n)] - prefix[t]).collect()
}

/// 1-based index of the first step with a positive goal reward.
pub fn steps_to_goal(goal_rewards: &[f64]) -> Option<u64> {
    goal_rewards.iter().position(|&r| r > 0.0).map(|i| i as u64 + 1)
}

/// Reward components summed over one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardSums {
    pub goal: f64,
    pub move_to_ball: f64,
    pub potential: f64,
    pub energy: f64,
    pub total: f64,
}

impl RewardSums {
    pub fn add(&mut self, r: &RewardBreakdown) {
        self.goal += r.r_goal;
        self.move_to_ball += r.r_move;
        self.potential += r.r_potential_grad;
        self.energy += r.r_energy;
        self.total += r.total;
    }
}

/// What one episode contributes to a [`MetricsReport`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    /// Unweighted goal reward of the first blue robot, per step.
    pub goal_rewards: Vec<f64>,
    pub reward_sums: RewardSums,
    pub final_score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub steps: u64,
    pub steps_to_goal: Option<u64>,
    pub final_score: Score,
    pub reward_sums: RewardSums,
    pub max_goal_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    pub window: usize,
    /// Episodes in which blue scored.
    pub scoring_episodes: usize,
    /// `None` when no episode scored.
    pub steps_to_goal_mean: Option<f64>,
    pub steps_to_goal_sd: Option<f64>,
    /// Windowed goal score averaged over episodes, per step index.
    pub goal_score_series: Vec<f64>,
    pub per_episode: Vec<EpisodeMetrics>,
}

impl MetricsReport {
    pub fn from_traces(traces: &[EpisodeTrace], window: usize) -> Self {
        let mut series = Vec::<f64>::new();
        let mut per_episode = Vec::with_capacity(traces.len());
        for (i, tr) in traces.iter().enumerate() {
            let w = windowed_goal_score(&tr.goal_rewards, window);
            if series.len() < w.len() {
                series.resize(w.len(), 0.0);
            }
            series.iter_mut().zip(&w).for_each(|(s, v)| *s += v);
            per_episode.push(EpisodeMetrics {
                episode: i,
                steps: tr.goal_rewards.len() as u64,
                steps_to_goal: steps_to_goal(&tr.goal_rewards),
                final_score: tr.final_score,
                reward_sums: tr.reward_sums,
                max_goal_score: w.iter().copied().fold(0.0, f64::max),
            });
        }
        if !traces.is_empty() {
            series.iter_mut().for_each(|s| *s /= traces.len() as f64);
        }
        let hits: Vec<f64> = per_episode.iter().filter_map(|e| e.steps_to_goal.map(|s| s as f64)).collect();
        let summary = summarize(&hits);
        let defined = !hits.is_empty();
        Self {
            episodes: traces.len(),
            window,
            scoring_episodes: hits.len(),
            steps_to_goal_mean: defined.then_some(summary.mean),
            steps_to_goal_sd: defined.then(|| if summary.sd.is_finite() { summary.sd } else { 0.0 }),
            goal_score_series: series,
            per_episode,
        }
    }

    /// One-paragraph human summary.
    pub fn describe(&self) -> String {
        let stg = match (self.steps_to_goal_mean, self.steps_to_goal_sd) {
            (Some(m), Some(s)) => format!("{m:.1} ± {s:.1}"),
            _ => "undefined (no goals)".to_string(),
        };
        format!(
            "episodes: {}\nscoring episodes: {}\nsteps to goal: {}\nwindow: {}",
            self.episodes, self.scoring_episodes, stg, self.window
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_goal_window() {
        let mut g = vec![0.0; 400];
        g[250] = 1.0;
        let w = windowed_goal_score(&g, 100);
        for (t, v) in w.iter().enumerate() {
            let expected = if (151..=250).contains(&t) { 1.0 } else { 0.0 };
            assert_eq!(*v, expected, "step {t}");
        }
    }

    #[test]
    fn steps_to_goal_is_one_based() {
        assert_eq!(steps_to_goal(&[0.0, 0.0, 1.0]), Some(3));
        assert_eq!(steps_to_goal(&[0.0, -1.0]), None);
    }

    #[test]
    fn no_goals_reports_undefined() {
        let tr = EpisodeTrace { goal_rewards: vec![0.0; 50], ..Default::default() };
        let r = MetricsReport::from_traces(&[tr.clone(), tr], DEFAULT_WINDOW);
        assert_eq!(r.scoring_episodes, 0);
        assert_eq!(r.steps_to_goal_mean, None);
        assert!(r.describe().contains("undefined"));
    }

    #[test]
    fn summary_over_scoring_episodes() {
        let ep = |k: usize| {
            let mut g = vec![0.0; 300];
            g[k - 1] = 1.0;
            EpisodeTrace { goal_rewards: g, ..Default::default() }
        };
        let r = MetricsReport::from_traces(&[ep(100), ep(200)], DEFAULT_WINDOW);
        assert_eq!(r.steps_to_goal_mean, Some(150.0));
        assert!((r.steps_to_goal_sd.unwrap() - 70.71067811865476).abs() < 1e-12);
        assert_eq!(r.goal_score_series.len(), 300);
        for (t, expected) in [(0, 0.5), (99, 0.5), (100, 0.5), (199, 0.5), (200, 0.0)] {
            assert_eq!(r.goal_score_series[t], expected, "step {t}");
        }
    }

    proptest! {
        #[test]
        fn window_matches_naive_sum(g in proptest::collection::vec(-1i8..=1, 0..300), window in 1usize..150) {
            let g: Vec<f64> = g.into_iter().map(f64::from).collect();
            let w = windowed_goal_score(&g, window);
            for t in 0..g.len() {
                let naive: f64 = g[t..(t + window).min(g.len())].iter().sum();
                prop_assert_eq!(w[t], naive);
            }
        }

        #[test]
        fn single_goal_anywhere(n in 1usize..500, k_frac in 0.0f64..1.0) {
            let k = ((n as f64 * k_frac) as usize).min(n - 1);
            let mut g = vec![0.0; n];
            g[k] = 1.0;
            let w = windowed_goal_score(&g, 100);
            for t in 0..n {
                let inside = t + 99 >= k && t <= k;
                prop_assert_eq!(w[t], if inside { 1.0 } else { 0.0 });
            }
        }
    }
}
