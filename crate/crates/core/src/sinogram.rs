//! Sinogram storage and data conditioning.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::Rect;

/// Which bins were measured. `true` = measured.
#[derive(Debug, Clone, PartialEq)]
pub struct SinoMask {
    /// `n_views × n_rays`, view-major.
    pub views: Vec<bool>,
    /// The `φ = 0` and `φ = π` rows.
    pub endpoints: [Vec<bool>; 2],
}

/// Samples of `g(s, φ)`.
///
/// Views are `φ_k = kπ/n_views`, rays sit at the bin centers of
/// `[-s_max, s_max]`. The `φ = 0` and `φ = π` rows are kept separately
/// because the endpoint moment formula needs both.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub n_views: usize,
    pub n_rays: usize,
    pub s_max: f64,
    pub mu0: f64,
    pub phi_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `n_views × n_rays`, view-major.
    pub values: Vec<f64>,
    pub endpoint_rows: [Vec<f64>; 2],
    pub mask: Option<SinoMask>,
}

pub(crate) fn view_angles(n_views: usize) -> Vec<f64> {
    (0..n_views)
        .map(|k| k as f64 * PI / n_views as f64)
        .collect()
}

pub(crate) fn ray_offsets(n_rays: usize, s_max: f64) -> Vec<f64> {
    let ds = 2.0 * s_max / n_rays as f64;
    (0..n_rays)
        .map(|j| -s_max + (j as f64 + 0.5) * ds)
        .collect()
}

impl Sinogram {
    pub fn zeros(n_views: usize, n_rays: usize, s_max: f64, mu0: f64) -> Result<Self> {
        if n_views == 0 || n_rays == 0 {
            return Err(invalid("sinogram dimensions must be positive"));
        }
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(invalid(format!("s_max must be positive, got {s_max}")));
        }
        Ok(Self {
            n_views,
            n_rays,
            s_max,
            mu0,
            phi_grid: view_angles(n_views),
            s_grid: ray_offsets(n_rays, s_max),
            values: vec![0.0; n_views * n_rays],
            endpoint_rows: [vec![0.0; n_rays], vec![0.0; n_rays]],
            mask: None,
        })
    }

    pub fn ds(&self) -> f64 {
        2.0 * self.s_max / self.n_rays as f64
    }

    pub fn row(&self, view: usize) -> &[f64] {
        &self.values[view * self.n_rays..(view + 1) * self.n_rays]
    }

    pub fn is_measured(&self, view: usize, ray: usize) -> bool {
        self.mask
            .as_ref()
            .is_none_or(|m| m.views[view * self.n_rays + ray])
    }

    /// Linear interpolation of endpoint row `which` (0: `φ = 0`, 1: `φ = π`)
    /// at offset `s`. `None` if `s` needs an unmeasured bin.
    ///
    /// Offsets between the outermost bin center and `±s_max` interpolate
    /// toward zero; beyond `±s_max` the value is zero (the object lies inside
    /// the field of view).
    pub fn endpoint_value(&self, which: usize, s: f64) -> Option<f64> {
        let row = &self.endpoint_rows[which];
        let measured = |j: usize| self.mask.as_ref().is_none_or(|m| m.endpoints[which][j]);
        interp_padded(row, &measured, self.s_max, self.ds(), s)
    }

    /// Multiplies every value (including endpoint rows) by `a`.
    pub fn scaled(&self, a: f64) -> Sinogram {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        for row in &mut out.endpoint_rows {
            row.iter_mut().for_each(|v| *v *= a);
        }
        out
    }
}

/// Linear interpolation on bin centers with a zero ghost bin beyond each edge.
///
/// Past the last measured bin of a masked row the two outermost measured
/// bins are extrapolated for up to one bin width. Returns `None` when `s`
/// is further from measured data than that.
pub(crate) fn interp_padded(
    row: &[f64],
    measured: &dyn Fn(usize) -> bool,
    s_max: f64,
    ds: f64,
    s: f64,
) -> Option<f64> {
    let n = row.len();
    // fractional bin index; ghost bins sit at -1 and n
    let u = (s + s_max) / ds - 0.5;
    if !u.is_finite() {
        return None;
    }
    if u <= -1.0 {
        return measured(0).then_some(0.0);
    }
    if u >= n as f64 {
        return measured(n - 1).then_some(0.0);
    }
    let j = u.floor() as isize;
    let w = u - j as f64;
    let fetch = |k: isize| -> Option<f64> {
        if k < -1 || k > n as isize {
            None
        } else if k < 0 {
            measured(0).then_some(0.0)
        } else if k as usize >= n {
            measured(n - 1).then_some(0.0)
        } else {
            measured(k as usize).then(|| row[k as usize])
        }
    };
    match (fetch(j), fetch(j + 1)) {
        (Some(lo), _) if w == 0.0 => Some(lo),
        (Some(lo), Some(hi)) => Some(lo + w * (hi - lo)),
        (Some(lo), None) => fetch(j - 1).map(|prev| lo + w * (lo - prev)),
        (None, Some(hi)) => fetch(j + 2).map(|next| hi + (1.0 - w) * (hi - next)),
        (None, None) => None,
    }
}

/// Samples of `∂g/∂s` on the grid of the source sinogram.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSinogram {
    pub n_views: usize,
    pub n_rays: usize,
    pub s_max: f64,
    pub mu0: f64,
    pub phi_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `n_views × n_rays`; a bin is measured only if its whole stencil was.
    pub mask: Option<Vec<bool>>,
}

impl DerivativeSinogram {
    pub fn ds(&self) -> f64 {
        2.0 * self.s_max / self.n_rays as f64
    }

    pub fn row(&self, view: usize) -> &[f64] {
        &self.values[view * self.n_rays..(view + 1) * self.n_rays]
    }

    pub fn row_mask(&self, view: usize) -> Option<&[bool]> {
        self.mask
            .as_deref()
            .map(|m| &m[view * self.n_rays..(view + 1) * self.n_rays])
    }
}

/// Second-order finite differences in `s`: central where both neighbours
/// were measured, one-sided three-point at the detector edges and at the
/// edges of the measured region.
pub fn differentiate_s(g: &Sinogram) -> Result<DerivativeSinogram> {
    let n = g.n_rays;
    if n < 3 {
        return Err(invalid(format!(
            "differentiation needs at least 3 rays, got {n}"
        )));
    }
    let inv = 1.0 / (2.0 * g.ds());
    let all = vec![true; n];
    let mut values = vec![0.0; g.values.len()];
    let mut mask = vec![true; g.values.len()];
    values
        .par_chunks_mut(n)
        .zip(mask.par_chunks_mut(n))
        .enumerate()
        .for_each(|(k, (out, out_mask))| {
            let row = g.row(k);
            let m = g
                .mask
                .as_ref()
                .map_or(&all[..], |m| &m.views[k * n..(k + 1) * n]);
            let ok = |j: isize| j >= 0 && (j as usize) < n && m[j as usize];
            for j in 0..n {
                let i = j as isize;
                let d = if !ok(i) {
                    None
                } else if ok(i - 1) && ok(i + 1) {
                    Some(row[j + 1] - row[j - 1])
                } else if ok(i + 1) && ok(i + 2) {
                    Some(-3.0 * row[j] + 4.0 * row[j + 1] - row[j + 2])
                } else if ok(i - 1) && ok(i - 2) {
                    Some(3.0 * row[j] - 4.0 * row[j - 1] + row[j - 2])
                } else {
                    None
                };
                out[j] = d.map_or(0.0, |d| d * inv);
                out_mask[j] = d.is_some();
            }
        });
    Ok(DerivativeSinogram {
        n_views: g.n_views,
        n_rays: n,
        s_max: g.s_max,
        mu0: g.mu0,
        phi_grid: g.phi_grid.clone(),
        s_grid: g.s_grid.clone(),
        values,
        mask: g.mask.as_ref().map(|_| mask),
    })
}

/// Count-scaled Poisson noise.
///
/// With `α = total_counts / Σ values`, every bin `v` becomes
/// `Poisson(α v) / α`. Bin `k` draws from its own ChaCha stream `k` under
/// `seed`, so the result does not depend on evaluation order. Negative bins
/// are clamped to zero first; their count is returned.
pub fn add_poisson_noise(g: &Sinogram, total_counts: f64, seed: u64) -> Result<(Sinogram, usize)> {
    if !(total_counts > 0.0 && total_counts.is_finite()) {
        return Err(invalid(format!(
            "total counts must be positive, got {total_counts}"
        )));
    }
    let total: f64 = g.values.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(invalid(
            "cannot scale an all-zero sinogram to a count level",
        ));
    }
    let alpha = total_counts / total;
    let clamped = g
        .values
        .iter()
        .chain(g.endpoint_rows.iter().flatten())
        .filter(|v| **v < 0.0)
        .count();

    let draw = |index: usize, v: f64| -> f64 {
        let lambda = alpha * v.max(0.0);
        if lambda <= 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        match Poisson::new(lambda) {
            Ok(dist) => dist.sample(&mut rng) / alpha,
            // beyond the sampler's range the relative noise is below 1e-9
            Err(_) => v,
        }
    };

    let mut out = g.clone();
    out.values
        .par_iter_mut()
        .enumerate()
        .for_each(|(k, v)| *v = draw(k, *v));
    let base = g.values.len();
    for (r, row) in out.endpoint_rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = draw(base + r * g.n_rays + j, *v);
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} negative sinogram bins clamped to zero before adding noise");
    }
    Ok((out, clamped))
}

/// Keeps only the lines that meet the closed box; everything else is masked
/// out and zeroed. Combines with an existing mask, so it is idempotent.
pub fn apply_truncation(g: &Sinogram, rect: &Rect) -> Result<Sinogram> {
    rect.validate()?;
    let n = g.n_rays;
    let keep_row = |phi: f64| -> Vec<bool> {
        let (lo, hi) = rect.projection_range([phi.cos(), phi.sin()]);
        g.s_grid.iter().map(|&s| s >= lo && s <= hi).collect()
    };
    let mut views = Vec::with_capacity(g.values.len());
    for &phi in &g.phi_grid {
        views.extend(keep_row(phi));
    }
    let mut endpoints = [keep_row(0.0), keep_row(PI)];
    if let Some(old) = &g.mask {
        views.iter_mut().zip(&old.views).for_each(|(a, b)| *a &= *b);
        for (new, old) in endpoints.iter_mut().zip(&old.endpoints) {
            new.iter_mut().zip(old).for_each(|(a, b)| *a &= *b);
        }
    }
    let mut out = g.clone();
    out.values.iter_mut().zip(&views).for_each(|(v, &m)| {
        if !m {
            *v = 0.0
        }
    });
    for (row, m) in out.endpoint_rows.iter_mut().zip(&endpoints) {
        row.iter_mut().zip(m).for_each(|(v, &m)| {
            if !m {
                *v = 0.0
            }
        });
    }
    debug_assert_eq!(views.len(), g.n_views * n);
    out.mask = Some(SinoMask { views, endpoints });
    Ok(out)
}
