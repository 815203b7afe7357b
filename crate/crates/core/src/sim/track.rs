//! Race tracks: occupancy grid plus a closed centerline.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use super::grid::{parse_map_yaml, parse_pgm, write_map_yaml, MapYaml, OccupancyGrid};
use super::SimError;

/// Closed polyline of waypoints; the last waypoint connects back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Centerline {
    points: Vec<[f64; 2]>,
    /// `cum[i]` is the arc length from waypoint 0 to waypoint `i`; `cum[n]` is the loop length.
    cum: Vec<f64>,
}

impl Centerline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, SimError> {
        if points.len() < 3 {
            return Err(SimError::InvalidTrack(format!(
                "centerline needs at least 3 waypoints, got {}",
                points.len()
            )));
        }
        if !points.iter().flatten().all(|v| v.is_finite()) {
            return Err(SimError::InvalidTrack("non-finite waypoint".into()));
        }
        let n = points.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let seg = dist(points[i], points[(i + 1) % n]);
            if seg <= 0.0 {
                return Err(SimError::InvalidTrack(format!(
                    "waypoints {i} and {} coincide",
                    (i + 1) % n
                )));
            }
            cum.push(cum[i] + seg);
        }
        Ok(Centerline { points, cum })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cum[self.points.len()]
    }

    /// Arc length at waypoint `i`.
    pub fn station(&self, i: usize) -> f64 {
        self.cum[i % self.points.len()]
    }

    /// Largest distance between consecutive waypoints.
    pub fn max_spacing(&self) -> f64 {
        self.cum.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Arc length of the closest point on the loop to `p`, in `[0, length)`.
    pub fn project(&self, p: [f64; 2]) -> f64 {
        let n = self.points.len();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len2 = dx * dx + dy * dy;
            let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
            let q = [a[0] + t * dx, a[1] + t * dy];
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < best.0 {
                best = (d2, self.cum[i] + t * (self.cum[i + 1] - self.cum[i]));
            }
        }
        best.1 % self.length()
    }

    /// Point at arc length `s` (wrapped onto the loop).
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let len = self.length();
        let s = s.rem_euclid(len);
        let i = self.segment_at(s);
        let n = self.points.len();
        let (a, b) = (self.points[i], self.points[(i + 1) % n]);
        let t = (s - self.cum[i]) / (self.cum[i + 1] - self.cum[i]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Heading of the segment leaving waypoint `i`.
    pub fn heading(&self, i: usize) -> f64 {
        let n = self.points.len();
        let (a, b) = (self.points[i % n], self.points[(i + 1) % n]);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    /// Signed three-point (circumscribed circle) curvature at waypoint `i`,
    /// using neighbours `k` waypoints away. Positive for left turns.
    pub fn curvature(&self, i: usize, k: usize) -> f64 {
        let n = self.points.len();
        let k = k.clamp(1, (n - 1) / 2);
        let a = self.points[(i + n - k % n) % n];
        let b = self.points[i % n];
        let c = self.points[(i + k) % n];
        three_point_curvature(a, b, c)
    }

    /// Index of the waypoint with the largest station not exceeding `s` (wrapped).
    pub fn index_at(&self, s: f64) -> usize {
        self.segment_at(s.rem_euclid(self.length()))
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.points.len();
        self.cum[..n].partition_point(|c| *c <= s).clamp(1, n) - 1
    }
}

/// Signed curvature of the circle through `a`, `b`, `c`; zero for collinear points.
pub fn three_point_curvature(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let denom = dist(a, b) * dist(b, c) * dist(a, c);
    if denom == 0.0 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackBundle {
    pub name: String,
    pub grid: OccupancyGrid,
    pub centerline: Centerline,
}

impl TrackBundle {
    pub fn new(
        name: impl Into<String>,
        grid: OccupancyGrid,
        centerline: Centerline,
    ) -> Result<Self, SimError> {
        let t = TrackBundle {
            name: name.into(),
            grid,
            centerline,
        };
        t.validate()?;
        Ok(t)
    }

    /// Every centerline segment must lie in free space.
    pub fn validate(&self) -> Result<(), SimError> {
        let pts = self.centerline.points();
        let step = self.grid.resolution / 2.0;
        for i in 0..pts.len() {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            let n = (dist(a, b) / step).ceil().max(1.0) as usize;
            for j in 0..=n {
                let t = j as f64 / n as f64;
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                if self.grid.occupied_at(p[0], p[1]) {
                    return Err(SimError::InvalidTrack(format!(
                        "centerline segment {i} crosses an occupied cell near ({:.3}, {:.3})",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same map with the centerline traversed in the opposite direction,
    /// starting from the same waypoint.
    pub fn reversed(&self) -> TrackBundle {
        let mut pts = self.centerline.points().to_vec();
        pts[1..].reverse();
        TrackBundle {
            name: self.name.clone(),
            grid: self.grid.clone(),
            centerline: Centerline::new(pts).expect("reversal keeps a valid loop"),
        }
    }

    pub fn from_parts(
        name: &str,
        pgm: &[u8],
        yaml: &str,
        centerline_csv: &[u8],
    ) -> Result<Self, SimError> {
        let meta = parse_map_yaml(yaml)?;
        let grid = OccupancyGrid::from_pgm(&parse_pgm(pgm)?, &meta)?;
        let centerline = Centerline::new(parse_centerline_csv(centerline_csv)?)?;
        TrackBundle::new(name, grid, centerline)
    }

    /// Loads `map.pgm`, `map.yaml` and `centerline.csv` from a directory.
    /// The image path named in the YAML is resolved relative to the directory.
    pub fn load(dir: &Path) -> Result<Self, SimError> {
        let read =
            |p: &Path| fs::read(p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())));
        let yaml_bytes = read(&dir.join("map.yaml"))?;
        let yaml = String::from_utf8(yaml_bytes).map_err(|_| {
            SimError::InvalidMap(format!("{}: not UTF-8", dir.join("map.yaml").display()))
        })?;
        let meta = parse_map_yaml(&yaml)?;
        let pgm = read(&dir.join(&meta.image))?;
        let csv = read(&dir.join("centerline.csv"))?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "track".into());
        TrackBundle::from_parts(&name, &pgm, &yaml, &csv)
    }

    pub fn save(&self, dir: &Path) -> Result<(), SimError> {
        let io = |e: std::io::Error| SimError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join("map.pgm"), self.grid.to_pgm()).map_err(io)?;
        fs::write(dir.join("map.yaml"), write_map_yaml(&self.map_yaml())).map_err(io)?;
        fs::write(
            dir.join("centerline.csv"),
            centerline_csv(self.centerline.points()),
        )
        .map_err(io)?;
        Ok(())
    }

    pub fn map_yaml(&self) -> MapYaml {
        MapYaml {
            image: "map.pgm".into(),
            resolution: self.grid.resolution,
            origin: vec![self.grid.origin[0], self.grid.origin[1], 0.0],
            occupied_thresh: 0.65,
            free_thresh: 0.196,
            negate: 0,
        }
    }

    /// Rasterizes a corridor of `half_width` meters around a closed centerline.
    /// Everything else inside the bounding box (plus a margin) is wall.
    pub fn synthesize(
        name: &str,
        points: Vec<[f64; 2]>,
        half_width: f64,
        resolution: f64,
    ) -> Result<Self, SimError> {
        let centerline = Centerline::new(points)?;
        let margin = half_width + 0.5;
        let pts = centerline.points();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let origin = [
            ((lo[0] - margin) / resolution).floor() * resolution,
            ((lo[1] - margin) / resolution).floor() * resolution,
        ];
        let width = ((hi[0] + margin - origin[0]) / resolution).ceil() as usize;
        let height = ((hi[1] + margin - origin[1]) / resolution).ceil() as usize;
        let mut grid = OccupancyGrid::new(width, height, resolution, origin)?;
        grid.fill(true);
        let n = pts.len();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let (cx0, cy0) = grid.cell_of(a[0].min(b[0]) - half_width, a[1].min(b[1]) - half_width);
            let (cx1, cy1) = grid.cell_of(a[0].max(b[0]) + half_width, a[1].max(b[1]) + half_width);
            for cy in cy0.max(0)..=cy1.min(height as i64 - 1) {
                for cx in cx0.max(0)..=cx1.min(width as i64 - 1) {
                    let c = grid.cell_center(cx as usize, cy as usize);
                    if point_segment_distance(c, a, b) <= half_width {
                        grid.set(cx as usize, cy as usize, false);
                    }
                }
            }
        }
        TrackBundle::new(name, grid, centerline)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Reads `x_m,y_m` rows; a non-numeric first row is treated as a header.
pub fn parse_centerline_csv(bytes: &[u8]) -> Result<Vec<[f64; 2]>, SimError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(bytes);
    let mut pts = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SimError::InvalidTrack(format!("centerline csv: {e}")))?;
        if rec.len() < 2 {
            return Err(SimError::InvalidTrack(format!(
                "centerline row {row}: expected x_m,y_m"
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => pts.push([x, y]),
            _ if row == 0 => continue,
            _ => {
                return Err(SimError::InvalidTrack(format!(
                    "centerline row {row}: invalid coordinates"
                )))
            }
        }
    }
    Ok(pts)
}

pub fn centerline_csv(points: &[[f64; 2]]) -> String {
    let mut s = String::from("x_m,y_m\n");
    for p in points {
        s.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    s
}

/// Builds a closed path from straight and circular pieces, sampling every
/// `spacing` meters. Consecutive duplicate endpoints are merged.
#[derive(Clone, Debug)]
pub struct PathBuilder {
    pos: [f64; 2],
    heading: f64,
    spacing: f64,
    points: Vec<[f64; 2]>,
}

impl PathBuilder {
    pub fn new(start: [f64; 2], heading: f64, spacing: f64) -> Self {
        PathBuilder {
            pos: start,
            heading,
            spacing,
            points: vec![start],
        }
    }

    pub fn straight(mut self, length: f64) -> Self {
        let n = (length / self.spacing).round().max(1.0) as usize;
        let (c, s) = (self.heading.cos(), self.heading.sin());
        let start = self.pos;
        for j in 1..=n {
            let d = length * j as f64 / n as f64;
            self.points.push([start[0] + d * c, start[1] + d * s]);
        }
        self.pos = *self.points.last().expect("nonempty");
        self
    }

    /// Circular arc; positive `angle` turns left.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let n = (radius * angle.abs() / self.spacing).round().max(1.0) as usize;
        let side = angle.signum();
        // center lies to the left for left turns
        let center = [
            self.pos[0] - side * radius * self.heading.sin(),
            self.pos[1] + side * radius * self.heading.cos(),
        ];
        let phi0 = self.heading - side * PI / 2.0;
        for j in 1..=n {
            let phi = phi0 + angle * j as f64 / n as f64;
            self.points.push([
                center[0] + radius * phi.cos(),
                center[1] + radius * phi.sin(),
            ]);
        }
        self.heading += angle;
        self.pos = *self.points.last().expect("nonempty");
        self
    }

    /// Distance between the current position and the start.
    pub fn closure_error(&self) -> f64 {
        dist(self.pos, self.points[0])
    }

    /// Finished loop; the final point (which coincides with the start) is dropped.
    pub fn finish(mut self) -> Vec<[f64; 2]> {
        if self.points.len() > 1 && self.closure_error() < self.spacing / 2.0 {
            self.points.pop();
        }
        self.points
    }
}
