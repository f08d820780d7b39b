//! Ellipse phantoms and their exponential Radon transform.
//!
//! Geometry: `θ = (cos φ, sin φ)`, `θ⊥ = (-sin φ, cos φ)`, and the projection
//! of an activity map `p` is
//!
//! ```text
//! g(s, φ) = ∫ p(sθ + tθ⊥) exp(μ0 t) dt.
//! ```
//!
//! Each ellipse carries a constant intensity, so its contribution is closed
//! form once the chord endpoints `t- < t+` are known:
//! `ρ (exp(μ0 t+) - exp(μ0 t-)) / μ0`.
//!
//! Table convention: "axis 1" is the semi-axis along the ellipse's own `x1`
//! direction after a counter-clockwise rotation by `polar_angle` degrees.
//! Coordinates are dimensionless; the support is the disc of radius
//! `support_radius` (the unit disc for the default phantom).

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ImageGrid;
use crate::sinogram::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_axis_1: f64,
    pub semi_axis_2: f64,
    /// Degrees, counter-clockwise from the `x1` axis.
    pub polar_angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn new(
        center: [f64; 2],
        semi_axis_1: f64,
        semi_axis_2: f64,
        polar_angle: f64,
        intensity: f64,
    ) -> Result<Self> {
        if !(semi_axis_1 > 0.0 && semi_axis_2 > 0.0) {
            return Err(invalid(format!(
                "ellipse semi-axes must be positive, got {semi_axis_1}, {semi_axis_2}"
            )));
        }
        let all_finite = [
            center[0],
            center[1],
            semi_axis_1,
            semi_axis_2,
            polar_angle,
            intensity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("ellipse parameters must be finite"));
        }
        Ok(Self {
            center,
            semi_axis_1,
            semi_axis_2,
            polar_angle,
            intensity,
        })
    }

    fn axes(&self) -> ([f64; 2], [f64; 2]) {
        let (sin, cos) = self.polar_angle.to_radians().sin_cos();
        ([cos, sin], [-sin, cos])
    }

    /// Boundary counts as inside.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let (e1, e2) = self.axes();
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let u = (d[0] * e1[0] + d[1] * e1[1]) / self.semi_axis_1;
        let v = (d[0] * e2[0] + d[1] * e2[1]) / self.semi_axis_2;
        u * u + v * v <= 1.0
    }

    /// Coefficients `(A, B, C)` of `A t² + B t + C = 0` for the line
    /// `sθ + tθ⊥`, plus their derivatives in `s`.
    fn line_quadratic(&self, s: f64, phi: f64) -> ([f64; 3], [f64; 2]) {
        let (e1, e2) = self.axes();
        let (sin, cos) = phi.sin_cos();
        let theta = [cos, sin];
        let dir = [-sin, cos];
        let p0 = [s * cos - self.center[0], s * sin - self.center[1]];
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        let (a2, b2) = (self.semi_axis_1.powi(2), self.semi_axis_2.powi(2));
        let (pu, pv) = (dot(p0, e1), dot(p0, e2));
        let (du, dv) = (dot(dir, e1), dot(dir, e2));
        let (tu, tv) = (dot(theta, e1), dot(theta, e2));
        let qa = du * du / a2 + dv * dv / b2;
        let qb = 2.0 * (pu * du / a2 + pv * dv / b2);
        let qc = pu * pu / a2 + pv * pv / b2 - 1.0;
        let dqb = 2.0 * (tu * du / a2 + tv * dv / b2);
        let dqc = 2.0 * (pu * tu / a2 + pv * tv / b2);
        ([qa, qb, qc], [dqb, dqc])
    }

    /// Entry and exit parameters `(t-, t+)` of the line `sθ + tθ⊥`, or `None`
    /// if the line misses (or only touches) the ellipse.
    pub fn chord(&self, s: f64, phi: f64) -> Option<(f64, f64)> {
        let ([a, b, c], _) = self.line_quadratic(s, phi);
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let q = -0.5 * (b + b.signum() * root);
        let (t1, t2) = if q == 0.0 {
            let h = root / (2.0 * a);
            (-h, h)
        } else {
            (q / a, c / q)
        };
        Some((t1.min(t2), t1.max(t2)))
    }

    /// This ellipse's contribution to `g(s, φ)`.
    pub fn ert_line(&self, mu0: f64, s: f64, phi: f64) -> f64 {
        match self.chord(s, phi) {
            Some((lo, hi)) => self.intensity * exp_chord_integral(mu0, lo, hi),
            None => 0.0,
        }
    }

    /// Analytic `∂g/∂s` of this ellipse's contribution. Infinite at tangent
    /// lines; used to validate numerical differentiation only.
    pub fn ert_line_ds(&self, mu0: f64, s: f64, phi: f64) -> f64 {
        let ([a, b, c], [db, dc]) = self.line_quadratic(s, phi);
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return 0.0;
        }
        let root = disc.sqrt();
        let droot = (2.0 * b * db - 4.0 * a * dc) / (2.0 * root);
        let t_hi = (-b + root) / (2.0 * a);
        let t_lo = (-b - root) / (2.0 * a);
        let dt_hi = (-db + droot) / (2.0 * a);
        let dt_lo = (-db - droot) / (2.0 * a);
        self.intensity * ((mu0 * t_hi).exp() * dt_hi - (mu0 * t_lo).exp() * dt_lo)
    }
}

/// `∫_lo^hi exp(μ t) dt` without cancellation for small `μ (hi - lo)`.
pub(crate) fn exp_chord_integral(mu: f64, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    let mid = 0.5 * (hi + lo);
    let x = mu * len;
    if x.abs() < 1e-6 {
        len * (mu * mid).exp() * (1.0 + x * x / 24.0)
    } else {
        2.0 * (0.5 * x).sinh() / mu * (mu * mid).exp()
    }
}

/// Sum of constant-intensity ellipses supported in a centered disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub ellipses: Vec<Ellipse>,
    pub support_radius: f64,
}

impl Phantom {
    /// Every ellipse must fit in the support disc; checked with the bounding
    /// circle `|center| + max(semi axes) <= R`.
    pub fn new(ellipses: Vec<Ellipse>, support_radius: f64) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(invalid(format!(
                "support radius must be positive, got {support_radius}"
            )));
        }
        for (k, e) in ellipses.iter().enumerate() {
            let reach = e.center[0].hypot(e.center[1]) + e.semi_axis_1.max(e.semi_axis_2);
            if reach > support_radius * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "ellipse {} reaches radius {reach}, outside the support disc of radius {support_radius}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            ellipses,
            support_radius,
        })
    }

    pub fn empty(support_radius: f64) -> Result<Self> {
        Self::new(Vec::new(), support_radius)
    }

    /// Activity at `x`.
    pub fn evaluate(&self, x: [f64; 2]) -> f64 {
        if x[0].hypot(x[1]) > self.support_radius {
            return 0.0;
        }
        self.ellipses
            .iter()
            .filter(|e| e.contains(x))
            .map(|e| e.intensity)
            .sum()
    }

    /// Pixel-center sampling on an `n × n` grid over `[-extent, extent]²`.
    pub fn rasterize(&self, n: usize, extent: f64) -> Result<ImageGrid> {
        let mut grid = ImageGrid::square(n, extent)?;
        let xs: Vec<f64> = (0..n).map(|k| grid.x1(k)).collect();
        grid.values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i2, row)| {
                for (i1, v) in row.iter_mut().enumerate() {
                    *v = self.evaluate([xs[i1], xs[i2]]);
                }
            });
        Ok(grid)
    }

    /// `g(s, φ)` for attenuation `mu0`.
    pub fn ert_line(&self, mu0: f64, s: f64, phi: f64) -> f64 {
        self.ellipses.iter().map(|e| e.ert_line(mu0, s, phi)).sum()
    }

    /// Analytic `∂g/∂s`.
    pub fn ert_line_ds(&self, mu0: f64, s: f64, phi: f64) -> f64 {
        self.ellipses
            .iter()
            .map(|e| e.ert_line_ds(mu0, s, phi))
            .sum()
    }

    /// Intervals `[t-, t+]` and intensities where the vertical line through
    /// `x1` crosses each ellipse, in the `x2` coordinate.
    pub fn vertical_chords(&self, x1: f64) -> Vec<(f64, f64, f64)> {
        // φ = 0: the line is (x1, t)
        self.ellipses
            .iter()
            .filter_map(|e| e.chord(x1, 0.0).map(|(lo, hi)| (lo, hi, e.intensity)))
            .collect()
    }

    /// Parallel-beam sinogram: views `φ_k = kπ/n_views`, rays at the bin
    /// centers of `[-s_max, s_max]`, plus the `φ = 0` and `φ = π` endpoint rows.
    pub fn project(&self, mu0: f64, n_views: usize, n_rays: usize, s_max: f64) -> Result<Sinogram> {
        if n_views < 2 || n_rays < 2 {
            return Err(invalid(format!(
                "need at least 2 views and 2 rays, got {n_views} x {n_rays}"
            )));
        }
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(invalid(format!("s_max must be positive, got {s_max}")));
        }
        if !mu0.is_finite() {
            return Err(invalid("mu0 must be finite"));
        }
        let mut sino = Sinogram::zeros(n_views, n_rays, s_max, mu0)?;
        let s_grid = sino.s_grid.clone();
        let phi_grid = sino.phi_grid.clone();
        sino.values
            .par_chunks_mut(n_rays)
            .zip(phi_grid.par_iter())
            .for_each(|(row, &phi)| {
                for (v, &s) in row.iter_mut().zip(&s_grid) {
                    *v = self.ert_line(mu0, s, phi);
                }
            });
        for (row, phi) in sino.endpoint_rows.iter_mut().zip([0.0, PI]) {
            for (v, &s) in row.iter_mut().zip(&s_grid) {
                *v = self.ert_line(mu0, s, phi);
            }
        }
        Ok(sino)
    }

    /// Reads the plain-text description: one ellipse per line as
    /// `cx cy axis1 axis2 angle_deg intensity`, optional
    /// `support_radius R` line, `#` comments.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut ellipses = Vec::new();
        let mut radius = 1.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Format(format!("phantom line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|f| !f.is_empty())
                .collect();
            if fields[0] == "support_radius" {
                if fields.len() != 2 {
                    return Err(bad("expected `support_radius R`".into()));
                }
                radius = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
                continue;
            }
            let nums: Vec<f64> = fields
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("{e}")))?;
            if nums.len() != 6 {
                return Err(bad(format!("expected 6 numbers, found {}", nums.len())));
            }
            let e = Ellipse::new([nums[0], nums[1]], nums[2], nums[3], nums[4], nums[5])
                .map_err(|e| bad(e.to_string()))?;
            ellipses.push(e);
        }
        Phantom::new(ellipses, radius)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("support_radius {}\n", self.support_radius);
        out.push_str("# cx cy axis1 axis2 angle_deg intensity\n");
        for e in &self.ellipses {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                e.center[0], e.center[1], e.semi_axis_1, e.semi_axis_2, e.polar_angle, e.intensity
            ));
        }
        out
    }
}

/// Centre, axis 1, axis 2, polar angle (deg), intensity.
const SPECT_SHEPP_LOGAN: [([f64; 2], f64, f64, f64, f64); 10] = [
    ([0.0, 0.0], 0.69, 0.92, 0.0, 0.5),
    ([0.0, -0.0184], 0.6624, 0.874, 0.0, -0.2),
    ([0.22, 0.0], 0.31, 0.11, 72.0, -0.2),
    ([-0.22, 0.0], 0.41, 0.16, 108.0, -0.2),
    ([0.0, 0.35], 0.21, 0.25, 0.0, 0.1),
    ([0.0, 0.1], 0.046, 0.046, 0.0, 0.1),
    ([0.0, -0.1], 0.046, 0.046, 0.0, 0.1),
    ([-0.08, -0.605], 0.046, 0.023, 0.0, 0.1),
    ([0.0, -0.605], 0.023, 0.023, 0.0, 0.1),
    ([0.06, -0.605], 0.203, 0.046, 0.0, 0.1),
];

/// The SPECT variant of the Shepp-Logan phantom in the unit disc.
pub fn default_phantom() -> Phantom {
    let ellipses = SPECT_SHEPP_LOGAN
        .iter()
        .map(|&(c, a1, a2, ang, rho)| Ellipse {
            center: c,
            semi_axis_1: a1,
            semi_axis_2: a2,
            polar_angle: ang,
            intensity: rho,
        })
        .collect();
    Phantom::new(ellipses, 1.0).expect("built-in phantom fits the unit disc")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64, rho: f64) -> Phantom {
        Phantom::new(vec![Ellipse::new([0.0, 0.0], r, r, 0.0, rho).unwrap()], 1.0).unwrap()
    }

    #[test]
    fn default_rows() {
        let p = default_phantom();
        assert_eq!(p.ellipses.len(), 10);
        let r1 = p.ellipses[0];
        assert_eq!(
            (
                r1.center,
                r1.semi_axis_1,
                r1.semi_axis_2,
                r1.polar_angle,
                r1.intensity
            ),
            ([0.0, 0.0], 0.69, 0.92, 0.0, 0.5)
        );
        let r3 = p.ellipses[2];
        assert_eq!(
            (
                r3.center,
                r3.semi_axis_1,
                r3.semi_axis_2,
                r3.polar_angle,
                r3.intensity
            ),
            ([0.22, 0.0], 0.31, 0.11, 72.0, -0.2)
        );
        assert_eq!(p.support_radius, 1.0);
    }

    #[test]
    fn evaluate_points() {
        let p = default_phantom();
        assert_eq!(p.evaluate([0.0, 0.95]), 0.0);
        assert!((p.evaluate([0.0, 0.0]) - 0.3).abs() < 1e-15);
        assert_eq!(p.evaluate([2.0, 0.0]), 0.0);
        assert_eq!(Phantom::empty(1.0).unwrap().evaluate([0.1, 0.2]), 0.0);
        // boundary inclusive
        assert_eq!(circle(0.5, 1.0).evaluate([0.5, 0.0]), 1.0);
    }

    #[test]
    fn rejects_bad_ellipses() {
        assert!(Ellipse::new([0.0, 0.0], 0.0, 1.0, 0.0, 1.0).is_err());
        let big = Ellipse::new([0.5, 0.0], 0.6, 0.1, 0.0, 1.0).unwrap();
        assert!(Phantom::new(vec![big], 1.0).is_err());
    }

    #[test]
    fn rasterize_basics() {
        let p = default_phantom();
        let g = p.rasterize(400, 1.0).unwrap();
        assert!((g.get(200, 200) - 0.3).abs() < 1e-15);
        let one = p.rasterize(1, 1.0).unwrap();
        assert_eq!(one.values, vec![p.evaluate([0.0, 0.0])]);
        let empty = Phantom::empty(1.0).unwrap().rasterize(16, 1.0).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0.0));
        let again = p.rasterize(400, 1.0).unwrap();
        let nz = |g: &ImageGrid| g.values.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nz(&g), nz(&again));
    }

    #[test]
    fn ert_line_closed_forms() {
        let c = circle(0.5, 1.0);
        for phi in [0.0, 0.3, 2.0] {
            assert!((c.ert_line(0.0, 0.0, phi) - 1.0).abs() < 1e-15);
        }
        let unit = circle(1.0, 1.0);
        let expected = 1f64.exp() - (-1f64).exp();
        assert!((unit.ert_line(1.0, 0.0, 0.0) - expected).abs() < 1e-14);
        // trapezoid oracle of ∫_{-1}^{1} e^t dt
        let n = 100_000;
        let h = 2.0 / n as f64;
        let trap: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * (-1.0 + k as f64 * h).exp()
            })
            .sum::<f64>()
            * h;
        assert!((trap - 2.350402387287603).abs() < 1e-9);
        assert!((unit.ert_line(1.0, 0.0, 0.0) - 2.350402387287603).abs() < 1e-12);
        assert_eq!(default_phantom().ert_line(1.0, 1.2, 0.4), 0.0);
    }

    #[test]
    fn mu0_continuity() {
        let p = default_phantom();
        for k in 0..50 {
            let s = -0.95 + 0.038 * k as f64;
            let phi = 0.123 * k as f64;
            let d = (p.ert_line(1e-8, s, phi) - p.ert_line(0.0, s, phi)).abs();
            assert!(d <= 1e-7, "s = {s}, phi = {phi}: {d}");
        }
    }

    #[test]
    fn centered_circle_rotation_invariant() {
        let c = circle(0.7, 2.0);
        for s in [-0.6, -0.1, 0.0, 0.35] {
            let ref_v = c.ert_line(0.8, s, 0.0);
            for phi in [0.5, 1.0, 2.5, PI] {
                assert!((c.ert_line(0.8, s, phi) - ref_v).abs() <= 1e-13 * ref_v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn analytic_derivative_matches_difference() {
        let p = default_phantom();
        let (mu, phi, s, h) = (1.1, 0.7, 0.13, 1e-6);
        let fd = (p.ert_line(mu, s + h, phi) - p.ert_line(mu, s - h, phi)) / (2.0 * h);
        assert!((fd - p.ert_line_ds(mu, s, phi)).abs() < 1e-6);
    }

    #[test]
    fn text_round_trip() {
        let p = default_phantom();
        let q = Phantom::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert!(Phantom::from_text("0 0 1 1 0").is_err());
        assert!(Phantom::from_text("support_radius 0.5\n0 0 0.6 0.1 0 1").is_err());
    }
}
