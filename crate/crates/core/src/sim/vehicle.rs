//! Kinematic bicycle with first-order actuator lags.

use super::grid::OccupancyGrid;
use super::raycast::Pose;
use crate::scan::{ActionPair, SPEED_MAX, SPEED_MIN, STEER_MAX};

pub const WHEELBASE: f64 = 0.33;
pub const TAU_SPEED: f64 = 0.3;
pub const TAU_STEER: f64 = 0.1;
/// Footprint rectangle, centered half a wheelbase ahead of the rear axle.
pub const BODY_LENGTH: f64 = 0.5;
pub const BODY_WIDTH: f64 = 0.3;

/// `(x, y)` is the rear-axle midpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub steer: f64,
}

impl VehicleState {
    pub fn at_rest(x: f64, y: f64, theta: f64) -> Self {
        VehicleState {
            x,
            y,
            theta,
            v: 0.0,
            steer: 0.0,
        }
    }

    /// Body center, which also carries the LiDAR.
    pub fn body_center(&self) -> [f64; 2] {
        let h = WHEELBASE / 2.0;
        [self.x + h * self.theta.cos(), self.y + h * self.theta.sin()]
    }

    pub fn sensor_pose(&self) -> Pose {
        let c = self.body_center();
        Pose {
            x: c[0],
            y: c[1],
            theta: self.theta,
        }
    }

    /// True if any cell under the footprint is occupied. The rectangle is
    /// sampled on a lattice no coarser than half a cell, edges included.
    pub fn collides(&self, grid: &OccupancyGrid) -> bool {
        let c = self.body_center();
        let (cos, sin) = (self.theta.cos(), self.theta.sin());
        let step = grid.resolution / 2.0;
        let nl = (BODY_LENGTH / step).ceil() as usize;
        let nw = (BODY_WIDTH / step).ceil() as usize;
        for i in 0..=nl {
            let a = -BODY_LENGTH / 2.0 + BODY_LENGTH * i as f64 / nl as f64;
            for j in 0..=nw {
                let b = -BODY_WIDTH / 2.0 + BODY_WIDTH * j as f64 / nw as f64;
                if grid.occupied_at(c[0] + a * cos - b * sin, c[1] + a * sin + b * cos) {
                    return true;
                }
            }
        }
        false
    }
}

fn derivative(s: &[f64; 5], v_cmd: f64, steer_cmd: f64) -> [f64; 5] {
    let [_, _, theta, v, steer] = *s;
    [
        v * theta.cos(),
        v * theta.sin(),
        v / WHEELBASE * steer.tan(),
        (v_cmd - v) / TAU_SPEED,
        (steer_cmd - steer) / TAU_STEER,
    ]
}

/// Advances the state by `dt` with one RK4 step toward the commanded action.
pub fn step(state: &VehicleState, action: &ActionPair, dt: f64) -> VehicleState {
    let v_cmd = action.speed_mps.clamp(SPEED_MIN, SPEED_MAX);
    let steer_cmd = action.steering_rad.clamp(-STEER_MAX, STEER_MAX);
    let s0 = [state.x, state.y, state.theta, state.v, state.steer];
    let add = |s: &[f64; 5], k: &[f64; 5], h: f64| -> [f64; 5] {
        std::array::from_fn(|i| s[i] + h * k[i])
    };
    let k1 = derivative(&s0, v_cmd, steer_cmd);
    let k2 = derivative(&add(&s0, &k1, dt / 2.0), v_cmd, steer_cmd);
    let k3 = derivative(&add(&s0, &k2, dt / 2.0), v_cmd, steer_cmd);
    let k4 = derivative(&add(&s0, &k3, dt), v_cmd, steer_cmd);
    let s: [f64; 5] =
        std::array::from_fn(|i| s0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    VehicleState {
        x: s[0],
        y: s[1],
        theta: s[2],
        v: s[3].clamp(SPEED_MIN, SPEED_MAX),
        steer: s[4].clamp(-STEER_MAX, STEER_MAX),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::CONTROL_DT;

    fn cmd(steer: f64, speed: f64) -> ActionPair {
        ActionPair::from_command(steer, speed)
    }

    #[test]
    fn stationary_vehicle_stays_put() {
        let mut s = VehicleState::at_rest(1.0, 2.0, 0.3);
        for _ in 0..40 {
            s = step(&s, &cmd(0.4, 0.0), CONTROL_DT);
        }
        assert_eq!((s.x, s.y, s.theta), (1.0, 2.0, 0.3));
        assert!(s.steer > 0.39);
    }

    #[test]
    fn straight_line_one_meter_per_second() {
        let mut s = VehicleState {
            v: 1.0,
            ..VehicleState::at_rest(0.0, 0.0, 0.0)
        };
        for _ in 0..40 {
            s = step(&s, &cmd(0.0, 1.0), CONTROL_DT);
        }
        assert!((s.x - 1.0).abs() < 1e-6 && s.y.abs() < 1e-12);
    }

    #[test]
    fn turning_radius_matches_bicycle_formula() {
        let delta = 0.1;
        let mut s = VehicleState {
            v: 1.0,
            steer: delta,
            ..VehicleState::at_rest(0.0, 0.0, 0.0)
        };
        let mut pts = Vec::new();
        for _ in 0..400 {
            s = step(&s, &cmd(delta, 1.0), CONTROL_DT);
            pts.push([s.x, s.y]);
        }
        let n = pts.len();
        let k = crate::sim::track::three_point_curvature(pts[0], pts[n / 2], pts[n - 1]);
        let expected = WHEELBASE / delta.tan();
        assert!(
            (1.0 / k - expected).abs() / expected < 1e-3,
            "{} vs {expected}",
            1.0 / k
        );
    }

    #[test]
    fn lags_approach_command_without_overshoot() {
        let mut s = VehicleState::at_rest(0.0, 0.0, 0.0);
        let mut prev = s;
        for _ in 0..200 {
            s = step(&s, &cmd(-0.3, 5.0), CONTROL_DT);
            assert!(s.v >= prev.v && s.v <= 5.0);
            assert!(s.steer <= prev.steer && s.steer >= -0.3);
            prev = s;
        }
        assert!((s.v - 5.0).abs() < 1e-3);
    }

    #[test]
    fn footprint_collision() {
        let mut g = OccupancyGrid::new(100, 100, 0.05, [0.0, 0.0]).unwrap();
        let s = VehicleState::at_rest(2.0, 2.5, 0.0);
        assert!(!s.collides(&g));
        // front bumper reaches x = 2 + 0.165 + 0.25 = 2.415
        g.set((2.40 / 0.05) as usize, 50, true);
        assert!(s.collides(&g));
    }
}
