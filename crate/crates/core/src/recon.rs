//! The full reconstruction: differentiate, backproject, then invert one
//! cosh-weighted Hilbert transform per image column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cht::{normalize_line, solve_line, DEFAULT_MOMENT_ORDER, EDGE_MARGIN};
use crate::dbp::backproject_points;
use crate::error::{invalid, Error, Result};
use crate::grid::{ImageGrid, Rect};
use crate::phantom::Phantom;
use crate::sinogram::{add_poisson_noise, apply_truncation, differentiate_s, Sinogram};
use crate::tables::{chebyshev_nodes, CoeffCache};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub total_counts: f64,
    pub seed: u64,
}

/// Acquisition and reconstruction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub mu0: f64,
    pub grid_n: usize,
    pub extent: f64,
    pub n_views: usize,
    pub n_rays: usize,
    pub s_max: f64,
    pub moment_order: usize,
    /// Chebyshev nodes per column; `None` uses twice the grid size.
    pub nodes_per_line: Option<usize>,
    pub noise: Option<NoiseConfig>,
    pub truncation: Option<Rect>,
    pub support_radius: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            mu0: 1.5,
            grid_n: 256,
            extent: 1.0,
            n_views: 720,
            n_rays: 400,
            s_max: 1.0,
            moment_order: DEFAULT_MOMENT_ORDER,
            nodes_per_line: None,
            noise: None,
            truncation: None,
            support_radius: 1.0,
        }
    }
}

/// Default ROI box: full vertical coverage, horizontal band.
pub const DEFAULT_TRUNCATION_BOX: Rect = Rect {
    x0: -0.45,
    y0: -1.0,
    x1: 0.45,
    y1: 1.0,
};

impl ReconConfig {
    pub fn nodes(&self) -> usize {
        self.nodes_per_line
            .unwrap_or(2 * self.grid_n)
            .max(2 * self.moment_order + 2)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("extent", self.extent)?;
        positive("s_max", self.s_max)?;
        positive("support radius", self.support_radius)?;
        if !self.mu0.is_finite() {
            return Err(invalid("mu0 must be finite"));
        }
        if self.grid_n == 0 || self.n_views < 2 || self.n_rays < 3 {
            return Err(invalid(
                "grid must be non-empty, with at least 2 views and 3 rays",
            ));
        }
        if self.moment_order == 0 {
            return Err(invalid("moment order must be at least 1"));
        }
        if let Some(nodes) = self.nodes_per_line {
            if nodes < 2 * self.moment_order + 2 {
                return Err(invalid(format!(
                    "{nodes} nodes per line cannot support moment order {}",
                    self.moment_order
                )));
            }
        }
        if let Some(noise) = &self.noise {
            positive("total counts", noise.total_counts)?;
        }
        if let Some(rect) = &self.truncation {
            rect.validate()?;
            self.check_roi(rect)?;
        }
        Ok(())
    }

    /// A truncation box must contain every vertical chord of the support over
    /// its `x1` range; otherwise those lines cannot be inverted.
    fn check_roi(&self, rect: &Rect) -> Result<()> {
        let r = self.support_radius;
        let x_near = if rect.x0 <= 0.0 && rect.x1 >= 0.0 {
            0.0
        } else {
            rect.x0.abs().min(rect.x1.abs())
        };
        if x_near >= r {
            return Err(Error::InteriorProblem(format!(
                "box {rect:?} misses the support"
            )));
        }
        let half = (r * r - x_near * x_near).sqrt();
        if rect.y0 > -half || rect.y1 < half {
            return Err(Error::InteriorProblem(format!(
                "box {rect:?} cuts vertical chords of the support (needs y in [{:.4}, {:.4}])",
                -half, half
            )));
        }
        Ok(())
    }

    /// Maximal per-line attenuation `μ1 = R μ0` (the central chord).
    pub fn mu1_max(&self) -> f64 {
        self.support_radius * self.mu0.abs()
    }
}

/// Summary of one reconstruction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub mu0: f64,
    pub mu1_min: f64,
    pub mu1_max: f64,
    pub moment_order: usize,
    pub nodes_per_line: usize,
    pub condition_max: f64,
    pub columns_reconstructed: usize,
    pub columns_skipped: usize,
}

struct Column {
    i1: usize,
    values: Vec<(usize, f64)>,
    mu1: f64,
    condition: f64,
}

/// Projection of the phantom under `config`, then optional noise and
/// truncation (in that order).
pub fn simulate(config: &ReconConfig, phantom: &Phantom) -> Result<Sinogram> {
    config.validate()?;
    let mut sino = phantom.project(config.mu0, config.n_views, config.n_rays, config.s_max)?;
    if let Some(noise) = &config.noise {
        sino = add_poisson_noise(&sino, noise.total_counts, noise.seed)?.0;
    }
    if let Some(rect) = &config.truncation {
        sino = apply_truncation(&sino, rect)?;
    }
    Ok(sino)
}

/// Reconstructs the activity on the configured grid.
///
/// Every column with `|x1| < R` is required unless a truncation box is set,
/// in which case only the columns inside the box are; a required column
/// without complete data is an error, other columns without complete data
/// are left at zero.
pub fn reconstruct(config: &ReconConfig, sinogram: &Sinogram) -> Result<(ImageGrid, ReconReport)> {
    config.validate()?;
    if sinogram.n_views != config.n_views
        || sinogram.n_rays != config.n_rays
        || sinogram.s_max != config.s_max
    {
        return Err(Error::GridMismatch(format!(
            "sinogram {}x{} (s_max {}) does not match configuration {}x{} (s_max {})",
            sinogram.n_views,
            sinogram.n_rays,
            sinogram.s_max,
            config.n_views,
            config.n_rays,
            config.s_max
        )));
    }
    if sinogram.mu0 != config.mu0 {
        return Err(invalid(format!(
            "sinogram was acquired with mu0 = {}, configuration says {}",
            sinogram.mu0, config.mu0
        )));
    }
    let dg = differentiate_s(sinogram)?;
    let mut image = ImageGrid::square(config.grid_n, config.extent)?;
    let order = config.moment_order;
    let n_nodes = config.nodes();
    let cache = CoeffCache::for_moment_order(order);
    let nodes = chebyshev_nodes(n_nodes);
    let r = config.support_radius;
    let required = |x1: f64| match &config.truncation {
        None => true,
        Some(b) => x1 >= b.x0 && x1 <= b.x1,
    };

    let columns: Vec<usize> = (0..config.grid_n)
        .filter(|&i1| image.x1(i1).abs() < r)
        .collect();
    let x2s: Vec<f64> = (0..config.grid_n).map(|i2| image.x2(i2)).collect();

    let solved: Vec<Result<Option<Column>>> = columns
        .par_iter()
        .map(|&i1| {
            let x1 = image.x1(i1);
            let half = (r * r - x1 * x1).sqrt();
            let incomplete = |what: &str| {
                if required(x1) {
                    Err(Error::InteriorProblem(format!(
                        "column x1 = {x1:.4} has incomplete data ({what})"
                    )))
                } else {
                    Ok(None)
                }
            };
            // ascending in x2
            let x2_nodes: Vec<f64> = nodes.iter().rev().map(|q| half * q).collect();
            let points: Vec<[f64; 2]> = x2_nodes.iter().map(|&x2| [x1, x2]).collect();
            let b: Option<Vec<f64>> = backproject_points(&dg, config.mu0, &points)
                .into_iter()
                .collect();
            let Some(b) = b else {
                return incomplete("backprojection");
            };
            let (Some(g0), Some(gpi)) = (
                sinogram.endpoint_value(0, x1),
                sinogram.endpoint_value(1, -x1),
            ) else {
                return incomplete("endpoint views");
            };
            let line = normalize_line(&x2_nodes, &b, -half, half, config.mu0, g0, gpi, n_nodes)?;
            let solution = solve_line(&line, order, &cache)?;
            let values = x2s
                .iter()
                .enumerate()
                .filter(|(_, &x2)| x2.abs() < half)
                .map(|(i2, &x2)| {
                    (
                        i2,
                        solution.eval(&cache, (x2 - line.center) / line.half_length),
                    )
                })
                .collect();
            Ok(Some(Column {
                i1,
                values,
                mu1: line.mu1,
                condition: solution.moments.condition,
            }))
        })
        .collect();

    let mut report = ReconReport {
        mu0: config.mu0,
        mu1_min: f64::INFINITY,
        mu1_max: 0.0,
        moment_order: order,
        nodes_per_line: n_nodes,
        condition_max: 0.0,
        columns_reconstructed: 0,
        columns_skipped: 0,
    };
    for column in solved {
        match column? {
            Some(col) => {
                for (i2, v) in col.values {
                    image.set(col.i1, i2, v);
                }
                report.mu1_min = report.mu1_min.min(col.mu1);
                report.mu1_max = report.mu1_max.max(col.mu1);
                report.condition_max = report.condition_max.max(col.condition);
                report.columns_reconstructed += 1;
            }
            None => report.columns_skipped += 1,
        }
    }
    if report.columns_reconstructed == 0 {
        report.mu1_min = 0.0;
    }
    log::info!(
        "reconstructed {} columns (skipped {}), mu1 in [{:.4}, {:.4}], max condition {:.3e}",
        report.columns_reconstructed,
        report.columns_skipped,
        report.mu1_min,
        report.mu1_max,
        report.condition_max
    );
    Ok((image, report))
}

/// The column nearest `x1` as `(x2, value)` pairs.
pub fn profile(image: &ImageGrid, x1: f64) -> Result<Vec<(f64, f64)>> {
    if !(x1.abs() <= image.extent) {
        return Err(invalid(format!("x1 = {x1} outside the field of view")));
    }
    let i1 = image.nearest_column(x1);
    Ok((0..image.n2)
        .map(|i2| (image.x2(i2), image.get(i1, i2)))
        .collect())
}

/// Pixel subsets for error metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    Disc { radius: f64 },
    Box(Rect),
}

impl Region {
    /// The support disc.
    pub fn support(radius: f64) -> Self {
        Region::Disc { radius }
    }

    /// The support disc less the edge margin where lines are not reported.
    pub fn interior(radius: f64) -> Self {
        Region::Disc {
            radius: radius * (1.0 - EDGE_MARGIN),
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            Region::All => true,
            Region::Disc { radius } => x[0].hypot(x[1]) <= *radius,
            Region::Box(r) => r.contains(x),
        }
    }
}

/// Root-mean-square difference over the pixels whose centers lie in `region`.
pub fn rmse(image: &ImageGrid, reference: &ImageGrid, region: &Region) -> Result<f64> {
    image.check_same_geometry(reference)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i2 in 0..image.n2 {
        for i1 in 0..image.n1 {
            if region.contains([image.x1(i1), image.x2(i2)]) {
                sum += (image.get(i1, i2) - reference.get(i1, i2)).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(invalid("region contains no pixels"));
    }
    Ok((sum / count as f64).sqrt())
}
