//! Sensor geometry, scan preprocessing and actuator mapping.

use thiserror::Error;

/// Beams per sweep: 270 degrees at 0.25 degree resolution, both ends inclusive.
pub const NUM_BEAMS: usize = 1081;
pub const FOV_DEG: f64 = 270.0;
pub const BEAM_STEP_DEG: f64 = 0.25;
/// Sensor range in meters; also the normalization divisor.
pub const MAX_RANGE: f32 = 10.0;
pub const CONTROL_HZ: f64 = 40.0;
pub const CONTROL_DT: f64 = 1.0 / CONTROL_HZ;
/// Full-scale steering angle (24 degrees) in radians.
pub const STEER_MAX: f64 = 0.4189;
pub const SPEED_MAX: f64 = 5.0;
pub const SPEED_MIN: f64 = -0.5;
pub const MEDIAN_WINDOW: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("scan has {0} beams, expected {NUM_BEAMS}")]
    Length(usize),
    #[error("every beam is invalid")]
    AllInvalid,
    #[error("invalid downsampling factor {0} (expected 1, 2 or 4)")]
    Factor(usize),
    #[error("label out of range: {0}")]
    LabelRange(String),
}

/// Beam angle relative to the heading, in radians. Beam 0 points 135 degrees right.
pub fn beam_angle(i: usize) -> f64 {
    (-FOV_DEG / 2.0 + BEAM_STEP_DEG * i as f64).to_radians()
}

fn is_valid(v: f32) -> bool {
    v.is_finite() && v > 0.0
}

/// Replaces dropped beams (non-finite or non-positive) by linear interpolation
/// between the nearest valid neighbours; edge runs copy the nearest valid value.
fn interpolate_dropouts(ranges: &mut [f32]) -> Result<(), ScanError> {
    let mut prev: Option<usize> = None;
    let mut i = 0;
    let n = ranges.len();
    while i < n {
        if is_valid(ranges[i]) {
            prev = Some(i);
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !is_valid(ranges[i]) {
            i += 1;
        }
        let next = (i < n).then_some(i);
        match (prev, next) {
            (Some(a), Some(b)) => {
                let (va, vb) = (ranges[a], ranges[b]);
                let span = (b - a) as f32;
                for (j, r) in ranges.iter_mut().enumerate().take(b).skip(start) {
                    let w = (j - a) as f32 / span;
                    *r = va + (vb - va) * w;
                }
            }
            (Some(a), None) => {
                let v = ranges[a];
                ranges[start..].iter_mut().for_each(|r| *r = v);
            }
            (None, Some(b)) => {
                let v = ranges[b];
                ranges[..b].iter_mut().for_each(|r| *r = v);
            }
            (None, None) => return Err(ScanError::AllInvalid),
        }
    }
    Ok(())
}

/// Median filter with the window truncated at the edges. Even-sized edge
/// windows take the mean of the two middle values.
fn median_filter(ranges: &[f32], window: usize) -> Vec<f32> {
    let half = window / 2;
    let n = ranges.len();
    let mut buf = [0.0f32; 16];
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let w = &mut buf[..hi - lo];
            w.copy_from_slice(&ranges[lo..hi]);
            w.sort_unstable_by(f32::total_cmp);
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                0.5 * (w[m / 2 - 1] + w[m / 2])
            }
        })
        .collect()
}

/// Raw sweep in meters to normalized network input in `[0, 1]`:
/// dropout interpolation, 5-beam median, clip to the sensor range, divide by it.
pub fn preprocess(raw: &[f32]) -> Result<Vec<f32>, ScanError> {
    if raw.len() != NUM_BEAMS {
        return Err(ScanError::Length(raw.len()));
    }
    let mut ranges = raw.to_vec();
    interpolate_dropouts(&mut ranges)?;
    let mut out = median_filter(&ranges, MEDIAN_WINDOW);
    for v in &mut out {
        *v = v.clamp(0.0, MAX_RANGE) / MAX_RANGE;
    }
    Ok(out)
}

/// Keeps beams `0, f, 2f, ...`.
pub fn downsample(scan: &[f32], factor: usize) -> Result<Vec<f32>, ScanError> {
    if !matches!(factor, 1 | 2 | 4) {
        return Err(ScanError::Factor(factor));
    }
    if scan.len() != NUM_BEAMS {
        return Err(ScanError::Length(scan.len()));
    }
    Ok(scan.iter().step_by(factor).copied().collect())
}

/// Decimation factor producing a given model input length.
pub fn downsample_factor_for(input_length: usize) -> Option<usize> {
    [1, 2, 4]
        .into_iter()
        .find(|f| (NUM_BEAMS - 1) / f + 1 == input_length)
}

/// Normalized network output together with its physical command.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionPair {
    /// Clamped to `[-1, 1]`.
    pub steering_norm: f32,
    /// Raw network value, unclamped.
    pub speed_norm: f32,
    pub steering_rad: f64,
    /// Clamped to `[SPEED_MIN, SPEED_MAX]`.
    pub speed_mps: f64,
    /// Set when the network produced a non-finite value and a stop was substituted.
    pub fault: bool,
}

impl ActionPair {
    pub const STOP: ActionPair = ActionPair {
        steering_norm: 0.0,
        speed_norm: 0.0,
        steering_rad: 0.0,
        speed_mps: 0.0,
        fault: false,
    };

    /// Physical command built directly, e.g. by a controller.
    pub fn from_command(steering_rad: f64, speed_mps: f64) -> Self {
        let steering_rad = steering_rad.clamp(-STEER_MAX, STEER_MAX);
        let speed_mps = speed_mps.clamp(SPEED_MIN, SPEED_MAX);
        ActionPair {
            steering_norm: (steering_rad / STEER_MAX) as f32,
            speed_norm: (speed_mps / SPEED_MAX) as f32,
            steering_rad,
            speed_mps,
            fault: false,
        }
    }
}

/// Network output to actuator command.
pub fn map_output(net_out: [f32; 2]) -> ActionPair {
    if !net_out.iter().all(|v| v.is_finite()) {
        return ActionPair {
            fault: true,
            ..ActionPair::STOP
        };
    }
    let steering_norm = net_out[0].clamp(-1.0, 1.0);
    ActionPair {
        steering_norm,
        speed_norm: net_out[1],
        steering_rad: steering_norm as f64 * STEER_MAX,
        speed_mps: (net_out[1] as f64 * SPEED_MAX).clamp(SPEED_MIN, SPEED_MAX),
        fault: false,
    }
}

/// Inverse of [`map_output`] for building training labels.
pub fn map_labels(steer_rad: f64, speed_mps: f64) -> Result<[f32; 2], ScanError> {
    const TOL: f64 = 1e-9;
    if !steer_rad.is_finite() || steer_rad.abs() > STEER_MAX + TOL {
        return Err(ScanError::LabelRange(format!("steering {steer_rad} rad")));
    }
    if !speed_mps.is_finite() || !(-TOL..=SPEED_MAX + TOL).contains(&speed_mps) {
        return Err(ScanError::LabelRange(format!("speed {speed_mps} m/s")));
    }
    Ok([
        (steer_rad / STEER_MAX).clamp(-1.0, 1.0) as f32,
        (speed_mps / SPEED_MAX).clamp(0.0, 1.0) as f32,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full(v: f32) -> Vec<f32> {
        vec![v; NUM_BEAMS]
    }

    #[test]
    fn constant_scan_normalizes_to_half() {
        assert!(preprocess(&full(5.0)).unwrap().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn median_removes_single_spike() {
        let mut s = full(5.0);
        s[500] = 100.0;
        let out = preprocess(&s).unwrap();
        assert_eq!(out[500], 0.5);
    }

    #[test]
    fn dropout_is_interpolated_before_filtering() {
        let mut raw = full(4.0);
        for v in raw.iter_mut().skip(501) {
            *v = 6.0;
        }
        raw[500] = f32::NAN;
        let mut r = raw.clone();
        interpolate_dropouts(&mut r).unwrap();
        assert_eq!(r[500], 5.0);
        // median of [4, 4, 5, 6, 6]
        assert_eq!(preprocess(&raw).unwrap()[500], 0.5);
    }

    #[test]
    fn edge_dropouts_copy_nearest_valid() {
        let mut raw = full(3.0);
        raw[0] = 0.0;
        raw[1] = f32::INFINITY;
        raw[NUM_BEAMS - 1] = -1.0;
        interpolate_dropouts(&mut raw).unwrap();
        assert_eq!(raw[0], 3.0);
        assert_eq!(raw[NUM_BEAMS - 1], 3.0);
    }

    #[test]
    fn all_invalid_is_rejected() {
        assert_eq!(preprocess(&full(f32::NAN)), Err(ScanError::AllInvalid));
        assert_eq!(preprocess(&[1.0; 10]), Err(ScanError::Length(10)));
    }

    #[test]
    fn downsample_lengths() {
        let s: Vec<f32> = (0..NUM_BEAMS).map(|i| i as f32).collect();
        assert_eq!(downsample(&s, 1).unwrap(), s);
        assert_eq!(downsample(&s, 2).unwrap().len(), 541);
        assert_eq!(downsample(&s, 4).unwrap().len(), 271);
        assert_eq!(downsample(&s, 3), Err(ScanError::Factor(3)));
        assert_eq!(downsample_factor_for(541), Some(2));
        assert_eq!(downsample_factor_for(500), None);
    }

    #[test]
    fn map_output_examples() {
        let a = map_output([0.0, 0.5]);
        assert_eq!((a.steering_rad, a.speed_mps), (0.0, 2.5));
        let a = map_output([2.0, 1.4]);
        assert_eq!(a.steering_norm, 1.0);
        assert_eq!(a.steering_rad, 0.4189);
        assert_eq!(a.speed_mps, 5.0);
        let a = map_output([0.0, -0.4]);
        assert_eq!(a.speed_mps, -0.5);
        let a = map_output([f32::NAN, 0.2]);
        assert!(a.fault);
        assert_eq!((a.steering_rad, a.speed_mps), (0.0, 0.0));
    }

    #[test]
    fn map_labels_examples() {
        assert_eq!(map_labels(0.0, 2.5).unwrap(), [0.0, 0.5]);
        assert_eq!(map_labels(0.4189, 5.0).unwrap(), [1.0, 1.0]);
        assert!(map_labels(0.5, 1.0).is_err());
        assert!(map_labels(0.0, 5.5).is_err());
        assert!(map_labels(0.0, -0.2).is_err());
    }

    #[test]
    fn beam_geometry() {
        assert!((beam_angle(0) + 135f64.to_radians()).abs() < 1e-12);
        assert_eq!(beam_angle(540), 0.0);
        assert!((beam_angle(1080) - 135f64.to_radians()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn preprocessed_values_in_unit_interval(raw in proptest::collection::vec(-5.0f32..50.0, NUM_BEAMS)) {
            if let Ok(out) = preprocess(&raw) {
                prop_assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn preprocess_idempotent_on_step_scans(levels in proptest::collection::vec(0.1f32..12.0, 1..20), run in 3usize..80) {
            // piecewise-constant scans with runs of at least 3 beams are median fixed points
            let last_run = NUM_BEAMS / run - 1;
            let raw: Vec<f32> = (0..NUM_BEAMS).map(|i| levels[(i / run).min(last_run) % levels.len()]).collect();
            let once = preprocess(&raw).unwrap();
            let again = preprocess(&once.iter().map(|x| x * MAX_RANGE).collect::<Vec<_>>()).unwrap();
            for (a, b) in once.iter().zip(&again) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn downsample_picks_strided_beams(f in prop_oneof![Just(1usize), Just(2), Just(4)]) {
            let s: Vec<f32> = (0..NUM_BEAMS).map(|i| i as f32 * 0.01).collect();
            let d = downsample(&s, f).unwrap();
            for (i, v) in d.iter().enumerate() {
                prop_assert_eq!(*v, s[f * i]);
            }
        }

        #[test]
        fn labels_roundtrip_on_interior(steer in -0.41f64..0.41, speed in 0.0f64..4.99) {
            let y = map_labels(steer, speed).unwrap();
            let a = map_output(y);
            prop_assert!((a.steering_rad - steer).abs() < 1e-6);
            prop_assert!((a.speed_mps - speed).abs() < 1e-5);
        }

        #[test]
        fn map_output_monotone(a in -0.99f32..0.99, b in -0.99f32..0.99, s in -0.09f32..0.99, t in -0.09f32..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(map_output([lo, 0.0]).steering_rad <= map_output([hi, 0.0]).steering_rad);
            let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
            prop_assert!(map_output([0.0, lo]).speed_mps <= map_output([0.0, hi]).speed_mps);
        }
    }
}
