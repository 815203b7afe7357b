//! Grid-traversal (DDA) LiDAR simulation.

use super::grid::OccupancyGrid;
use super::SimError;
use crate::scan::{beam_angle, MAX_RANGE, NUM_BEAMS};

/// Sensor pose in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Distance along a ray from `(x, y)` in direction `theta` to the first
/// occupied cell, capped at `max_range`.
pub fn cast_ray(grid: &OccupancyGrid, x: f64, y: f64, theta: f64, max_range: f64) -> f64 {
    let (gx, gy) = grid.to_grid(x, y);
    let (dx, dy) = (theta.cos(), theta.sin());
    let (mut cx, mut cy) = (gx.floor() as i64, gy.floor() as i64);
    let (w, h) = (grid.width as i64, grid.height as i64);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // ray parameter (in cells) to cross one full cell along each axis
    let t_delta_x = if dx != 0.0 {
        (1.0 / dx).abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if dy != 0.0 {
        (1.0 / dy).abs()
    } else {
        f64::INFINITY
    };
    let mut t_max_x = if dx > 0.0 {
        (cx as f64 + 1.0 - gx) * t_delta_x
    } else if dx < 0.0 {
        (gx - cx as f64) * t_delta_x
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        (cy as f64 + 1.0 - gy) * t_delta_y
    } else if dy < 0.0 {
        (gy - cy as f64) * t_delta_y
    } else {
        f64::INFINITY
    };
    let t_limit = max_range / grid.resolution;
    loop {
        let t = if t_max_x < t_max_y {
            cx += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            cy += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t >= t_limit {
            return max_range;
        }
        // left the raster and moving away from it: nothing more to hit
        if (cx < 0 && step_x < 0)
            || (cx >= w && step_x > 0)
            || (cy < 0 && step_y < 0)
            || (cy >= h && step_y > 0)
        {
            return max_range;
        }
        if grid.is_occupied(cx, cy) {
            return t * grid.resolution;
        }
    }
}

/// Full 1081-beam sweep in meters. Beam `i` points at `theta + beam_angle(i)`.
pub fn raycast(grid: &OccupancyGrid, pose: Pose) -> Result<Vec<f32>, SimError> {
    if grid.occupied_at(pose.x, pose.y) {
        return Err(SimError::Collision);
    }
    Ok((0..NUM_BEAMS)
        .map(|i| {
            cast_ray(
                grid,
                pose.x,
                pose.y,
                pose.theta + beam_angle(i),
                MAX_RANGE as f64,
            ) as f32
        })
        .collect())
}
