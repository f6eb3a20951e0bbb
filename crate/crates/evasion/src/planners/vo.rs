use crate::env::{detection_range, EvaderAction, EvaderObservation, WorldConfig};
use crate::geom::{ray_disc_entry_time, Vec2};

/// Number of candidate headings sampled around the circle.
pub const VO_HEADINGS: usize = 64;
/// Candidate speed fractions of the evader max speed.
pub const VO_SPEED_FRACS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Conflict horizon in steps: velocities entering a pursuer disc sooner than
/// this are excluded.
pub const VO_HORIZON_STEPS: f64 = 50.0;

/// Velocity-obstacle evader: sample candidate velocities, exclude those whose
/// relative motion enters a visible pursuer's detection disc within the
/// horizon, and take the feasible candidate closest to the straight-to-goal
/// velocity. With no feasible candidate, maximize time-to-conflict.
///
/// Each pursuer is treated as a moving disc whose radius is its detection
/// range for the candidate's own speed (faster candidates are seen farther).
pub fn vo_action(obs: &EvaderObservation, goal: Vec2, cfg: &WorldConfig) -> EvaderAction {
    let to_goal = goal - obs.evader_pos;
    let goal_heading = to_goal.y.atan2(to_goal.x);
    let visible: Vec<_> = obs.pursuers.iter().filter(|p| p.visible).collect();
    if visible.is_empty() {
        return EvaderAction::new(goal_heading, 1.0);
    }

    let c_v = cfg.visibility.value(obs.evader_pos);
    let v_goal = Vec2::from_polar(goal_heading, cfg.evader_speed);

    let mut best_feasible: Option<(f64, EvaderAction)> = None;
    let mut best_fallback: Option<(f64, EvaderAction)> = None;

    for k in 0..VO_HEADINGS {
        let heading =
            -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / VO_HEADINGS as f64;
        for &frac in &VO_SPEED_FRACS {
            let speed = frac * cfg.evader_speed;
            let v = Vec2::from_polar(heading, speed);

            // Earliest conflict over all visible pursuers.
            let mut min_entry = f64::INFINITY;
            for p in &visible {
                let radius = detection_range(p.kind, c_v, speed, &cfg.detection);
                let rel = v - p.vel;
                if let Some(t) = ray_disc_entry_time(obs.evader_pos, rel, p.pos, radius) {
                    min_entry = min_entry.min(t);
                }
            }

            let action = EvaderAction::new(heading, frac);
            if min_entry > VO_HORIZON_STEPS {
                let score = (v - v_goal).norm();
                if best_feasible.as_ref().map_or(true, |(s, _)| score < *s) {
                    best_feasible = Some((score, action));
                }
            } else if best_fallback.as_ref().map_or(true, |(t, _)| min_entry > *t) {
                best_fallback = Some((min_entry, action));
            }
        }
    }

    if let Some((_, a)) = best_feasible {
        a
    } else {
        best_fallback.expect("candidate set is never empty").1
    }
}
