//! Occupancy grids and their on-disk form (binary PGM + map YAML).

use serde::{Deserialize, Serialize};

use super::SimError;

/// Binary occupancy raster. Cell `(0, 0)` is the lower-left cell; its lower-left
/// corner sits at `origin` in world coordinates. Cells outside the raster are free.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    /// Meters per cell.
    pub resolution: f64,
    pub origin: [f64; 2],
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
    ) -> Result<Self, SimError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(SimError::InvalidMap(format!(
                "resolution {resolution} must be positive"
            )));
        }
        if width == 0 || height == 0 {
            return Err(SimError::InvalidMap("empty grid".into()));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(SimError::InvalidMap("non-finite origin".into()));
        }
        Ok(OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            occupied: vec![false; width * height],
        })
    }

    #[inline]
    pub fn is_occupied(&self, cx: i64, cy: i64) -> bool {
        if cx < 0 || cy < 0 || cx >= self.width as i64 || cy >= self.height as i64 {
            return false;
        }
        self.occupied[cy as usize * self.width + cx as usize]
    }

    pub fn set(&mut self, cx: usize, cy: usize, occupied: bool) {
        self.occupied[cy * self.width + cx] = occupied;
    }

    pub fn fill(&mut self, occupied: bool) {
        self.occupied.iter_mut().for_each(|c| *c = occupied);
    }

    /// Continuous grid coordinates (in cells) of a world point.
    #[inline]
    pub fn to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin[0]) / self.resolution,
            (y - self.origin[1]) / self.resolution,
        )
    }

    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        let (gx, gy) = self.to_grid(x, y);
        (gx.floor() as i64, gy.floor() as i64)
    }

    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = self.cell_of(x, y);
        self.is_occupied(cx, cy)
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, cx: usize, cy: usize) -> [f64; 2] {
        [
            self.origin[0] + (cx as f64 + 0.5) * self.resolution,
            self.origin[1] + (cy as f64 + 0.5) * self.resolution,
        ]
    }

    /// Binary PGM (P5) with row 0 at the top; 0 = occupied, 254 = free.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push(if self.occupied[row * self.width + col] {
                    0
                } else {
                    254
                });
            }
        }
        out
    }

    pub fn from_pgm(pgm: &Pgm, meta: &MapYaml) -> Result<Self, SimError> {
        meta.validate()?;
        let mut g = OccupancyGrid::new(
            pgm.width,
            pgm.height,
            meta.resolution,
            [meta.origin[0], meta.origin[1]],
        )?;
        let maxval = pgm.maxval as f64;
        for row in 0..pgm.height {
            for col in 0..pgm.width {
                let v = pgm.pixels[row * pgm.width + col] as f64;
                let p = if meta.negate != 0 {
                    v / maxval
                } else {
                    (maxval - v) / maxval
                };
                g.set(col, pgm.height - 1 - row, p > meta.occupied_thresh);
            }
        }
        Ok(g)
    }
}

/// 8-bit greyscale image, row 0 at the top.
#[derive(Clone, Debug, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

const MAX_PGM_PIXELS: usize = 1 << 26;

/// Parses a binary (P5) PGM with `maxval <= 255`. Never panics on malformed input.
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm, SimError> {
    let bad = |m: &str| SimError::InvalidMap(format!("pgm: {m}"));
    let mut pos = 0usize;
    let mut token = || -> Result<&[u8], SimError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let mut num = |what: &str| -> Result<usize, SimError> {
        let t = token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| bad(&format!("invalid {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("maxval must be in 1..=255"));
    }
    let n = width
        .checked_mul(height)
        .filter(|n| *n <= MAX_PGM_PIXELS)
        .ok_or_else(|| bad("image too large"))?;
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    if start > bytes.len() || bytes.len() - start < n {
        return Err(bad("truncated raster"));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels: bytes[start..start + n].to_vec(),
    })
}

/// Map metadata in the common ROS map-server layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapYaml {
    pub image: String,
    pub resolution: f64,
    pub origin: Vec<f64>,
    pub occupied_thresh: f64,
    #[serde(default = "default_free_thresh")]
    pub free_thresh: f64,
    #[serde(default)]
    pub negate: i32,
}

fn default_free_thresh() -> f64 {
    0.196
}

impl MapYaml {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(SimError::InvalidMap(format!(
                "resolution {} must be positive",
                self.resolution
            )));
        }
        if self.origin.len() < 2 || !self.origin.iter().all(|v| v.is_finite()) {
            return Err(SimError::InvalidMap(
                "origin must hold at least two finite values".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.occupied_thresh) {
            return Err(SimError::InvalidMap(
                "occupied_thresh must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

pub fn parse_map_yaml(text: &str) -> Result<MapYaml, SimError> {
    let meta: MapYaml =
        serde_yaml::from_str(text).map_err(|e| SimError::InvalidMap(format!("map yaml: {e}")))?;
    meta.validate()?;
    Ok(meta)
}

pub fn write_map_yaml(meta: &MapYaml) -> String {
    format!(
        "image: {}\nresolution: {}\norigin: [{}, {}, 0.0]\noccupied_thresh: {}\nfree_thresh: {}\nnegate: {}\n",
        meta.image, meta.resolution, meta.origin[0], meta.origin[1], meta.occupied_thresh, meta.free_thresh, meta.negate
    )
}
