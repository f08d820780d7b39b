//! Weighted differential backprojection.
//!
//! ```text
//! b(x) = ∫_0^π exp(-μ0 x·θ⊥) ∂g/∂s(x·θ, φ) dφ
//! ```
//!
//! For an activity `p` this equals
//! `-2 ∫ cosh(μ0 (x2 - y)) / (x2 - y) p(x1, y) dy` (principal value), i.e. a
//! cosh-weighted Hilbert transform along the vertical line through `x`.
//! The angular integral is a left Riemann sum over the sinogram's own views,
//! with linear interpolation in `s`.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::ImageGrid;
use crate::sinogram::{interp_padded, DerivativeSinogram};

/// `b(x)` on an image grid. `valid` marks pixels whose every view sample came
/// from measured data.
#[derive(Debug, Clone, PartialEq)]
pub struct BField {
    pub grid: ImageGrid,
    pub mu0: f64,
    pub valid: Vec<bool>,
}

struct ViewTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
    dphi: f64,
}

impl ViewTable {
    fn new(dg: &DerivativeSinogram) -> Self {
        Self {
            cos: dg.phi_grid.iter().map(|p| p.cos()).collect(),
            sin: dg.phi_grid.iter().map(|p| p.sin()).collect(),
            dphi: std::f64::consts::PI / dg.n_views as f64,
        }
    }
}

fn backproject_one(
    dg: &DerivativeSinogram,
    views: &ViewTable,
    mu0: f64,
    x: [f64; 2],
) -> Option<f64> {
    let ds = dg.ds();
    let mut acc = 0.0;
    for k in 0..dg.n_views {
        let (c, s) = (views.cos[k], views.sin[k]);
        let offset = x[0] * c + x[1] * s;
        let along = -x[0] * s + x[1] * c;
        let row = dg.row(k);
        let value = match dg.row_mask(k) {
            None => interp_padded(row, &|_| true, dg.s_max, ds, offset),
            Some(m) => interp_padded(row, &|j| m[j], dg.s_max, ds, offset),
        }?;
        acc += (-mu0 * along).exp() * value;
    }
    Some(acc * views.dphi)
}

/// `b` at arbitrary points; `None` where some view needed unmeasured data.
pub fn backproject_points(
    dg: &DerivativeSinogram,
    mu0: f64,
    points: &[[f64; 2]],
) -> Vec<Option<f64>> {
    let views = ViewTable::new(dg);
    points
        .par_iter()
        .map(|&x| backproject_one(dg, &views, mu0, x))
        .collect()
}

/// `b` on the `n × n` pixel grid over `[-extent, extent]²`. Invalid pixels
/// hold zero.
pub fn backproject(dg: &DerivativeSinogram, mu0: f64, n: usize, extent: f64) -> Result<BField> {
    let mut grid = ImageGrid::square(n, extent)?;
    let xs: Vec<f64> = (0..n).map(|k| grid.x1(k)).collect();
    let points: Vec<[f64; 2]> = (0..n)
        .flat_map(|i2| xs.iter().map(move |&x1| (x1, i2)))
        .map(|(x1, i2)| [x1, xs[i2]])
        .collect();
    let values = backproject_points(dg, mu0, &points);
    let valid = values.iter().map(Option::is_some).collect();
    grid.values = values.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    Ok(BField { grid, mu0, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::sinogram::{apply_truncation, differentiate_s, Sinogram};

    #[test]
    fn zero_data_gives_zero_field() {
        let g = Sinogram::zeros(16, 32, 1.0, 0.5).unwrap();
        let b = backproject(&differentiate_s(&g).unwrap(), 0.5, 8, 1.0).unwrap();
        assert!(b.grid.values.iter().all(|&v| v == 0.0));
        assert!(b.valid.iter().all(|&v| v));
    }

    #[test]
    fn truncated_validity_pattern() {
        let mut g = Sinogram::zeros(90, 400, 1.0, 0.0).unwrap();
        g.values.iter_mut().for_each(|v| *v = 1.0);
        let t = apply_truncation(&g, &Rect::new(-0.45, -1.0, 0.45, 1.0).unwrap()).unwrap();
        let b = backproject(&differentiate_s(&t).unwrap(), 0.0, 64, 1.0).unwrap();
        for i2 in 0..64 {
            for i1 in 0..64 {
                let x1 = b.grid.x1(i1);
                let ok = b.valid[i2 * 64 + i1];
                if x1.abs() <= 0.4 {
                    assert!(ok, "pixel ({i1}, {i2}) should be valid");
                }
                if x1.abs() >= 0.6 {
                    assert!(!ok, "pixel ({i1}, {i2}) should be invalid");
                }
            }
        }
    }
}
