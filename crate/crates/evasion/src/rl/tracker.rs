use crate::geom::Vec2;
use crate::planners::WaypointPath;

/// Tracks progress along a waypoint path during an episode.
///
/// `advance` consumes waypoints as the evader comes within `reach_radius` of
/// the current target; each waypoint (the final one included) fires the
/// reached flag exactly once. After the last waypoint is consumed the current
/// target stays pinned to the path's endpoint.
#[derive(Clone, Debug)]
pub struct WaypointTracker {
    path: WaypointPath,
    next_idx: usize,
    reach_radius: f64,
}

impl WaypointTracker {
    pub fn new(path: WaypointPath, reach_radius: f64) -> Self {
        assert!(reach_radius > 0.0, "reach radius must be positive");
        assert!(!path.points.is_empty(), "waypoint path must be non-empty");
        WaypointTracker { path, next_idx: 0, reach_radius }
    }

    /// The waypoint currently being pursued (the endpoint once exhausted).
    pub fn current(&self) -> Vec2 {
        let i = self.next_idx.min(self.path.points.len() - 1);
        self.path.points[i]
    }

    /// Consume every waypoint within reach of `pos`, in order. Returns true
    /// if at least one waypoint was newly reached this call.
    pub fn advance(&mut self, pos: Vec2) -> bool {
        let mut fired = false;
        while self.next_idx < self.path.points.len()
            && pos.dist(self.path.points[self.next_idx]) <= self.reach_radius
        {
            self.next_idx += 1;
            fired = true;
        }
        fired
    }

    pub fn reached_final(&self) -> bool {
        self.next_idx >= self.path.points.len()
    }

    pub fn remaining(&self) -> usize {
        self.path.points.len() - self.next_idx.min(self.path.points.len())
    }

    pub fn path(&self) -> &WaypointPath {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> WaypointPath {
        WaypointPath::from_flat(&[0.1, 0.1, 0.5, 0.5, 0.9, 0.9])
    }

    #[test]
    fn waypoints_fire_once_and_target_pins_to_end() {
        let mut tr = WaypointTracker::new(path(), 0.05);
        assert_eq!(tr.current(), Vec2::new(0.1, 0.1));
        assert!(tr.advance(Vec2::new(0.11, 0.1)));
        assert_eq!(tr.current(), Vec2::new(0.5, 0.5));
        // Standing still near the first waypoint fires nothing further.
        assert!(!tr.advance(Vec2::new(0.11, 0.1)));

        assert!(tr.advance(Vec2::new(0.5, 0.5)));
        assert!(tr.advance(Vec2::new(0.9, 0.9)));
        assert!(tr.reached_final());
        // The final waypoint never re-fires, and the target stays put.
        assert!(!tr.advance(Vec2::new(0.9, 0.9)));
        assert_eq!(tr.current(), Vec2::new(0.9, 0.9));
    }

    #[test]
    fn a_single_move_can_consume_several_waypoints() {
        let mut tr = WaypointTracker::new(
            WaypointPath::from_flat(&[0.5, 0.5, 0.5, 0.52, 0.5, 0.54]),
            0.06,
        );
        assert!(tr.advance(Vec2::new(0.5, 0.5)));
        assert!(tr.reached_final());
    }
}
