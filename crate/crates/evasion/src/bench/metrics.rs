use serde::{Deserialize, Serialize};

use super::episode::EpisodeLog;
use super::BenchError;
use crate::env::Outcome;
use crate::util::mean_std;

/// Episode score: +50 for reaching a hideout, -50 for timing out, and -1 for
/// every step on which at least one pursuer detected the evader.
pub fn raw_score(log: &EpisodeLog) -> f64 {
    let terminal = match log.outcome {
        Outcome::Goal => 50.0,
        Outcome::Timeout => -50.0,
    };
    terminal - f64::from(log.detected_steps)
}

/// Fraction of episode steps on which the evader was detected.
pub fn detection_fraction(log: &EpisodeLog) -> f64 {
    f64::from(log.detected_steps) / f64::from(log.length.max(1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricRow {
    pub policy: String,
    pub episodes: usize,
    pub raw_score_mean: f64,
    pub raw_score_std: f64,
    pub detection_mean: f64,
    pub detection_std: f64,
    pub goal_reach_mean: f64,
    pub goal_reach_std: f64,
    pub norm_score_mean: f64,
    pub norm_score_std: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
    /// Min/max of per-episode raw scores across the whole comparison set.
    pub score_min: f64,
    pub score_max: f64,
}

impl MetricTable {
    pub fn row(&self, policy: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    /// Deterministic CSV rendering (fixed six-decimal formatting).
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "policy,episodes,raw_score_mean,raw_score_std,detection_mean,detection_std,\
             goal_reach_mean,goal_reach_std,norm_score_mean,norm_score_std\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.policy,
                r.episodes,
                r.raw_score_mean,
                r.raw_score_std,
                r.detection_mean,
                r.detection_std,
                r.goal_reach_mean,
                r.goal_reach_std,
                r.norm_score_mean,
                r.norm_score_std
            ));
        }
        s
    }
}

/// Aggregate per-policy logs into the comparison table.
///
/// Scores are min-max normalized per episode against the raw-score range of
/// the entire comparison set; a degenerate range maps everything to 1.
/// Detection and goal-reach are plain per-policy mean +/- std.
pub fn aggregate(per_policy: &[(String, Vec<EpisodeLog>)]) -> Result<MetricTable, BenchError> {
    if per_policy.is_empty() {
        return Err(BenchError::InvalidRequest("aggregate needs at least one policy".into()));
    }
    let n = per_policy[0].1.len();
    if n == 0 {
        return Err(BenchError::InvalidRequest("aggregate needs at least one episode".into()));
    }
    if per_policy.iter().any(|(_, logs)| logs.len() != n) {
        return Err(BenchError::InvalidRequest(
            "all policies must be evaluated on the same number of episodes".into(),
        ));
    }

    let all_scores: Vec<f64> =
        per_policy.iter().flat_map(|(_, logs)| logs.iter().map(raw_score)).collect();
    let score_min = all_scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let score_max = all_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = score_max - score_min;
    let normalize = |raw: f64| if range > 0.0 { (raw - score_min) / range } else { 1.0 };

    let rows = per_policy
        .iter()
        .map(|(tag, logs)| {
            let raws: Vec<f64> = logs.iter().map(raw_score).collect();
            let dets: Vec<f64> = logs.iter().map(detection_fraction).collect();
            let goals: Vec<f64> = logs
                .iter()
                .map(|l| f64::from(u8::from(matches!(l.outcome, Outcome::Goal))))
                .collect();
            let norms: Vec<f64> = raws.iter().map(|&r| normalize(r)).collect();
            let (raw_score_mean, raw_score_std) = mean_std(&raws);
            let (detection_mean, detection_std) = mean_std(&dets);
            let (goal_reach_mean, goal_reach_std) = mean_std(&goals);
            let (norm_score_mean, norm_score_std) = mean_std(&norms);
            MetricRow {
                policy: tag.clone(),
                episodes: logs.len(),
                raw_score_mean,
                raw_score_std,
                detection_mean,
                detection_std,
                goal_reach_mean,
                goal_reach_std,
                norm_score_mean,
                norm_score_std,
            }
        })
        .collect();

    Ok(MetricTable { rows, score_min, score_max })
}
