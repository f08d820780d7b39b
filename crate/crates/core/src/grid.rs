use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Square image on `[-extent, extent]²` sampled at pixel centers.
///
/// Storage is row-major with rows along `x2`: `values[i2 * n1 + i1]`.
/// Pixel centers are `-extent + (k + 1/2) * (2 extent / n)` on each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub n1: usize,
    pub n2: usize,
    pub extent: f64,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(n1: usize, n2: usize, extent: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(invalid(format!("extent must be positive, got {extent}")));
        }
        Ok(Self {
            n1,
            n2,
            extent,
            values: vec![0.0; n1 * n2],
        })
    }

    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::zeros(n, n, extent)
    }

    pub fn x1(&self, i1: usize) -> f64 {
        pixel_center(i1, self.n1, self.extent)
    }

    pub fn x2(&self, i2: usize) -> f64 {
        pixel_center(i2, self.n2, self.extent)
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.n1 + i1]
    }

    pub fn set(&mut self, i1: usize, i2: usize, v: f64) {
        self.values[i2 * self.n1 + i1] = v;
    }

    /// Index of the column whose center is nearest to `x1`.
    pub fn nearest_column(&self, x1: f64) -> usize {
        nearest_index(x1, self.n1, self.extent)
    }

    pub fn same_geometry(&self, other: &ImageGrid) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2 && self.extent == other.extent
    }

    pub(crate) fn check_same_geometry(&self, other: &ImageGrid) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} (extent {}) vs {}x{} (extent {})",
                self.n1, self.n2, self.extent, other.n1, other.n2, other.extent
            )))
        }
    }
}

pub(crate) fn pixel_center(k: usize, n: usize, extent: f64) -> f64 {
    -extent + (k as f64 + 0.5) * (2.0 * extent / n as f64)
}

pub(crate) fn nearest_index(x: f64, n: usize, extent: f64) -> usize {
    let u = (x + extent) / (2.0 * extent / n as f64) - 0.5;
    u.round().clamp(0.0, (n - 1) as f64) as usize
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, y0, x1, y1 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(invalid(format!("degenerate box {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        (self.x0..=self.x1).contains(&x[0]) && (self.y0..=self.y1).contains(&x[1])
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x0, self.y1],
            [self.x1, self.y1],
        ]
    }

    /// Range of `x·θ` over the box, i.e. the offsets `s` of lines with normal
    /// `θ` that meet it.
    pub fn projection_range(&self, theta: [f64; 2]) -> (f64, f64) {
        self.corners()
            .iter()
            .map(|c| c[0] * theta[0] + c[1] * theta[1])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            })
    }
}

impl std::str::FromStr for Rect {
    type Err = Error;

    /// Parses `x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("bad box {s:?}: {e}")))?;
        match parts.as_slice() {
            [x0, y0, x1, y1] => Rect::new(*x0, *y0, *x1, *y1),
            _ => Err(invalid(format!("box needs four numbers, got {s:?}"))),
        }
    }
}
