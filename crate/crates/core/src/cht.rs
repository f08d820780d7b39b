//! Inversion of the finite cosh-weighted Hilbert transform (CHT).
//!
//! Standard problem: recover `f`, supported in `(-1, 1)`, from
//!
//! ```text
//! h(τ) = (1/π) p.v.∫ cosh(μ1 (τ - t)) / (τ - t) f(t) dt,   |τ| < 1,
//! c    = ∫ f(t) cosh(μ1 t) dt.
//! ```
//!
//! Expanding the cosh in its Taylor series writes `h` as the plain finite
//! Hilbert transform of `f` plus terms that only involve the moments
//! `c_m = ∫ f t^m dt`. Applying the Tricomi inversion to `(h, c)` therefore
//! gives
//!
//! ```text
//! f(t) √(1-t²) = F(t) - (1/π) Σ_k a_k c_{2k}
//!              + (1/π) Σ_k a_k Σ_{l<2k} (-1)^l C(2k-1, l) c_l T_{2k-1-l}(t),
//! ```
//!
//! with `a_k = μ1^{2k}/(2k)!` and `F` the Tricomi output. Integrating that
//! identity against `t^j/√(1-t²)` yields two decoupled linear systems for the
//! even and the odd moments, driven by `d_j = ∫ t^j F(t)/√(1-t²) dt`. Both
//! series are truncated at `k = M`; the systems then produce exactly the
//! moments `c_0 ..= c_{2M}` the synthesis needs.
//!
//! Samples live on the first-kind Chebyshev nodes `q_i = cos((2i-1)π/(2n))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::interp::{cubic_interpolate, ChebyshevInterpolant};
use crate::tables::{
    chebyshev_nodes, gauss_chebyshev_second_kind, weighted_hilbert_powers, CoeffCache,
};

/// Reconstructions are reported on `|t| <= 1 - EDGE_MARGIN` and extended by
/// zero outside; dividing by `√(1-t²)` amplifies any error at the ends.
pub const EDGE_MARGIN: f64 = 0.02;

pub const DEFAULT_MOMENT_ORDER: usize = 6;

/// One line reduced to the standard problem on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLine {
    pub mu1: f64,
    /// `h` at the first-kind Chebyshev nodes of order `h_nodes.len()`.
    pub h_nodes: Vec<f64>,
    pub c_mu1: f64,
    /// Affine map `x2 = center + half_length * t` back to the image line.
    pub center: f64,
    pub half_length: f64,
}

impl StandardLine {
    /// A line already in standard form.
    pub fn new(mu1: f64, h_nodes: Vec<f64>, c_mu1: f64) -> Result<Self> {
        let line = Self {
            mu1,
            h_nodes,
            c_mu1,
            center: 0.0,
            half_length: 1.0,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn n(&self) -> usize {
        self.h_nodes.len()
    }

    pub fn nodes(&self) -> Vec<f64> {
        chebyshev_nodes(self.n())
    }

    fn validate(&self) -> Result<()> {
        if self.h_nodes.is_empty() {
            return Err(invalid("line has no samples"));
        }
        if !(self.mu1 >= 0.0 && self.mu1.is_finite()) {
            return Err(invalid(format!(
                "mu1 must be finite and non-negative, got {}",
                self.mu1
            )));
        }
        if !self.c_mu1.is_finite() || self.h_nodes.iter().any(|v| !v.is_finite()) {
            return Err(invalid("line data must be finite"));
        }
        Ok(())
    }
}

/// Maps the chord `[lower, upper]` of one image column to the standard form.
///
/// * `b_x2`, `b_values`: samples of the backprojection `b(x1, ·)`, ascending
///   in `x2`, covering every mapped node;
/// * `g0`, `gpi`: the projections `g(x1, 0)` and `g(-x1, π)` of this line.
///
/// With `ĉ = (U+L)/2`, `d̂ = (U-L)/2`: `μ1 = d̂ μ0`,
/// `h(q) = -b(ĉ + d̂ q) / (2π)` and
/// `c = (exp(-ĉ μ0) g0 + exp(ĉ μ0) gpi) / (2 d̂)`.
#[allow(clippy::too_many_arguments)]
pub fn normalize_line(
    b_x2: &[f64],
    b_values: &[f64],
    lower: f64,
    upper: f64,
    mu0: f64,
    g0: f64,
    gpi: f64,
    n: usize,
) -> Result<StandardLine> {
    if !(upper > lower) {
        return Err(invalid(format!("empty chord [{lower}, {upper}]")));
    }
    if n == 0 {
        return Err(invalid("node count must be positive"));
    }
    let center = 0.5 * (upper + lower);
    let half_length = 0.5 * (upper - lower);
    let h_nodes = chebyshev_nodes(n)
        .into_iter()
        .map(|q| {
            cubic_interpolate(b_x2, b_values, center + half_length * q).map(|b| -b / (2.0 * PI))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_mu1 = ((-center * mu0).exp() * g0 + (center * mu0).exp() * gpi) / (2.0 * half_length);
    let line = StandardLine {
        mu1: half_length * mu0.abs(),
        h_nodes,
        c_mu1,
        center,
        half_length,
    };
    line.validate()?;
    Ok(line)
}

/// `(1/π) p.v.∫ √(1-τ²) h(τ) / (t-τ) dτ` for `h` given at first-kind
/// Chebyshev nodes.
///
/// Singularity subtraction: `(1/π) ∫ √(1-τ²) (h(τ) - h(t)) / (t-τ) dτ + t h(t)`.
/// `h` is replaced by its barycentric interpolant, which makes the remainder a
/// polynomial; the second-kind rule with `m >= n` nodes integrates it exactly.
#[derive(Debug, Clone)]
pub struct WeightedHilbert {
    interp: ChebyshevInterpolant,
    rule: SubtractionRule,
}

#[derive(Debug, Clone)]
struct SubtractionRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    h_at_nodes: Vec<f64>,
}

impl SubtractionRule {
    fn new(interp: &ChebyshevInterpolant, m: usize) -> Self {
        let (nodes, weights) = gauss_chebyshev_second_kind(m).expect("m >= 1");
        let h_at_nodes = nodes.iter().map(|&x| interp.eval(x)).collect();
        Self {
            nodes,
            weights,
            h_at_nodes,
        }
    }

    fn min_distance(&self, t: f64) -> f64 {
        self.nodes
            .iter()
            .map(|x| (x - t).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn apply(&self, t: f64, h_t: f64) -> f64 {
        let remainder: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.h_at_nodes)
            .map(|((&x, &w), &hx)| w * (hx - h_t) / (t - x))
            .sum();
        remainder / PI + h_t * t
    }
}

/// Closer than this to a quadrature node, the difference quotient loses too
/// many digits and a shifted rule is used instead.
const COLLISION: f64 = 1e-9;

impl WeightedHilbert {
    pub fn new(h_nodes: &[f64]) -> Result<Self> {
        let interp = ChebyshevInterpolant::new(h_nodes.to_vec())?;
        // even m: first-kind nodes never coincide with cos(jπ/(m+1))
        let n = h_nodes.len();
        let m = n + n % 2;
        let rule = SubtractionRule::new(&interp, m);
        Ok(Self { interp, rule })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.abs() < 1.0) {
            return Err(invalid(format!(
                "weighted Hilbert transform needs |t| < 1, got {t}"
            )));
        }
        let h_t = self.interp.eval(t);
        if self.rule.min_distance(t) >= COLLISION {
            return Ok(self.rule.apply(t, h_t));
        }
        let shifted = SubtractionRule::new(&self.interp, self.rule.nodes.len() + 2);
        Ok(shifted.apply(t, h_t))
    }

    /// Values at the interpolation nodes themselves.
    pub fn at_nodes(&self) -> Vec<f64> {
        self.interp
            .nodes()
            .iter()
            .zip(self.interp.values())
            .map(|(&q, &h)| self.rule.apply(q, h))
            .collect()
    }
}

/// One-off evaluation of the weighted finite Hilbert transform.
pub fn weighted_finite_hilbert(h_nodes: &[f64], t: f64) -> Result<f64> {
    WeightedHilbert::new(h_nodes)?.eval(t)
}

/// Tricomi output `F(q_i) = c/π - (1/π) p.v.∫ √(1-τ²) h(τ)/(q_i-τ) dτ`.
pub fn tricomi_inverse(line: &StandardLine) -> Result<Vec<f64>> {
    line.validate()?;
    let hilbert = WeightedHilbert::new(&line.h_nodes)?;
    let c = line.c_mu1 / PI;
    Ok(hilbert.at_nodes().into_iter().map(|v| c - v).collect())
}

/// `d_k = ∫ t^k F(t)/√(1-t²) dt ≈ (π/n) Σ q_i^k F(q_i)` for `k = 0 ..= 2M`.
pub fn compute_d(f_mu1_nodes: &[f64], order: usize) -> Result<Vec<f64>> {
    let n = f_mu1_nodes.len();
    if n < 2 * order + 2 {
        return Err(invalid(format!(
            "{n} nodes cannot resolve moments up to order {} (need at least {})",
            2 * order,
            2 * order + 2
        )));
    }
    let nodes = chebyshev_nodes(n);
    let w = PI / n as f64;
    let mut d = vec![0.0; 2 * order + 1];
    for (&q, &f) in nodes.iter().zip(f_mu1_nodes) {
        let mut p = f;
        for dk in d.iter_mut() {
            *dk += p;
            p *= q;
        }
    }
    d.iter_mut().for_each(|v| *v *= w);
    Ok(d)
}

/// `a_k = μ^{2k}/(2k)!` for `k = 0 ..= order`.
pub fn taylor_coefficients(mu1: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut a = 1.0;
    out.push(a);
    for k in 1..=order {
        a *= mu1 * mu1 / ((2 * k - 1) * (2 * k)) as f64;
        out.push(a);
    }
    out
}

/// The truncated even system `Q` (`(M+1)²`, acting on `c_0, c_2, …, c_2M`)
/// and odd system `P` (`M²`, acting on `c_1, c_3, …, c_{2M-1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystems {
    pub order: usize,
    pub mu1: f64,
    pub q_hat: DMatrix<f64>,
    pub p_hat: DMatrix<f64>,
}

/// Assembles both systems from the moment identities:
///
/// ```text
/// Q_ij = δ_ij + [j>=1] B_2i a_j - Σ_{k=j+1}^{M} a_k C(2k-1, 2j) T_{2(k-j)-1}^{2i}
/// P_ij = δ_ij + Σ_{k=j}^{M} a_k C(2k-1, 2j-1) T_{2(k-j)}^{2i-1}
/// ```
pub fn assemble_systems(mu1: f64, order: usize, cache: &CoeffCache) -> Result<MomentSystems> {
    if order == 0 {
        return Err(invalid("moment order must be at least 1"));
    }
    if cache.max_order() < 2 * order + 1 {
        return Err(invalid(format!(
            "coefficient cache of order {} too shallow for M = {order}",
            cache.max_order()
        )));
    }
    let a = taylor_coefficients(mu1, order);
    let q_hat = DMatrix::from_fn(order + 1, order + 1, |i, j| {
        let mut v = if i == j { 1.0 } else { 0.0 };
        if j >= 1 {
            v += cache.b(2 * i) * a[j];
        }
        for k in j + 1..=order {
            v -= a[k] * cache.binomial(2 * k - 1, 2 * j) * cache.t(2 * (k - j) - 1, 2 * i);
        }
        v
    });
    let p_hat = DMatrix::from_fn(order, order, |r, c| {
        let (i, j) = (r + 1, c + 1);
        let mut v = if i == j { 1.0 } else { 0.0 };
        for k in j..=order {
            v += a[k] * cache.binomial(2 * k - 1, 2 * j - 1) * cache.t(2 * (k - j), 2 * i - 1);
        }
        v
    });
    Ok(MomentSystems {
        order,
        mu1,
        q_hat,
        p_hat,
    })
}

/// Solved moments `c_0 ..= c_2M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub order: usize,
    /// `c_0, c_2, …, c_2M`
    pub even: Vec<f64>,
    /// `c_1, c_3, …, c_{2M-1}`
    pub odd: Vec<f64>,
    /// Largest 1-norm condition number of the two systems.
    pub condition: f64,
}

impl MomentVector {
    pub fn get(&self, k: usize) -> f64 {
        if k.is_multiple_of(2) {
            self.even[k / 2]
        } else {
            self.odd[k / 2]
        }
    }

    /// `c_0, c_1, …, c_2M` in order.
    pub fn interleaved(&self) -> Vec<f64> {
        (0..=2 * self.order).map(|k| self.get(k)).collect()
    }
}

fn solve_dense(
    a: &DMatrix<f64>,
    rhs: Vec<f64>,
    system: &'static str,
    mu1: f64,
    order: usize,
) -> Result<(Vec<f64>, f64)> {
    let singular = || Error::SingularSystem { system, mu1, order };
    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(singular)?;
    let condition = a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
        * inverse
            .column_iter()
            .map(|c| c.lp_norm(1))
            .fold(0.0, f64::max);
    if !condition.is_finite() || condition > 1.0 / f64::EPSILON {
        return Err(singular());
    }
    let x = lu.solve(&DVector::from_vec(rhs)).ok_or_else(singular)?;
    Ok((x.iter().copied().collect(), condition))
}

/// Solves `Q c_even = d_even` and `P c_odd = d_odd` by LU with partial
/// pivoting.
pub fn solve_moments(systems: &MomentSystems, d: &[f64]) -> Result<MomentVector> {
    let order = systems.order;
    if d.len() != 2 * order + 1 {
        return Err(invalid(format!(
            "expected {} moment data values, got {}",
            2 * order + 1,
            d.len()
        )));
    }
    let d_even = d.iter().step_by(2).copied().collect();
    let d_odd = d.iter().skip(1).step_by(2).copied().collect();
    let (even, cond_q) = solve_dense(&systems.q_hat, d_even, "even (Q)", systems.mu1, order)?;
    let (odd, cond_p) = solve_dense(&systems.p_hat, d_odd, "odd (P)", systems.mu1, order)?;
    let condition = cond_q.max(cond_p);
    log::debug!(
        "moment systems mu1 = {:.4}, M = {order}: condition {condition:.3e}",
        systems.mu1
    );
    Ok(MomentVector {
        order,
        even,
        odd,
        condition,
    })
}

/// Moment correction added to the Tricomi output at `t` (before dividing by
/// `√(1-t²)`).
fn moment_correction(moments: &MomentVector, mu1: f64, cache: &CoeffCache, t: f64) -> f64 {
    let order = moments.order;
    let a = taylor_coefficients(mu1, order);
    let powers = weighted_hilbert_powers(cache, 2 * order, t);
    let mut acc = 0.0;
    for k in 1..=order {
        let mut inner = -moments.get(2 * k);
        for l in 0..2 * k {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            inner += sign * cache.binomial(2 * k - 1, l) * moments.get(l) * powers[2 * k - 1 - l];
        }
        acc += a[k] * inner;
    }
    acc / PI
}

/// `f(t)` from the Tricomi output (interpolated from its node samples) and the
/// solved moments. Rejects `|t| > 1 - EDGE_MARGIN`.
pub fn synthesize(
    f_mu1: &ChebyshevInterpolant,
    moments: &MomentVector,
    mu1: f64,
    cache: &CoeffCache,
    t: f64,
) -> Result<f64> {
    if !(t.abs() <= 1.0 - EDGE_MARGIN) {
        return Err(invalid(format!(
            "synthesis restricted to |t| <= {}, got {t}",
            1.0 - EDGE_MARGIN
        )));
    }
    let numerator = f_mu1.eval(t) + moment_correction(moments, mu1, cache, t);
    Ok(numerator / (1.0 - t * t).sqrt())
}

/// Everything needed to evaluate the recovered `f` anywhere on the line.
#[derive(Debug, Clone)]
pub struct LineSolution {
    pub mu1: f64,
    pub f_mu1: ChebyshevInterpolant,
    pub moments: MomentVector,
    pub d: Vec<f64>,
}

impl LineSolution {
    /// `f(t)`, zero outside `|t| <= 1 - EDGE_MARGIN`.
    pub fn eval(&self, cache: &CoeffCache, t: f64) -> f64 {
        synthesize(&self.f_mu1, &self.moments, self.mu1, cache, t).unwrap_or(0.0)
    }

    pub fn node_values(&self, cache: &CoeffCache) -> Vec<f64> {
        self.f_mu1
            .nodes()
            .iter()
            .map(|&q| self.eval(cache, q))
            .collect()
    }
}

/// Tricomi inversion, moment data, both systems, solve. The result can be
/// synthesized anywhere on the line.
pub fn solve_line(line: &StandardLine, order: usize, cache: &CoeffCache) -> Result<LineSolution> {
    let f_nodes = tricomi_inverse(line)?;
    let d = compute_d(&f_nodes, order)?;
    let systems = assemble_systems(line.mu1, order, cache)?;
    let moments = solve_moments(&systems, &d)?;
    Ok(LineSolution {
        mu1: line.mu1,
        f_mu1: ChebyshevInterpolant::new(f_nodes)?,
        moments,
        d,
    })
}

/// `f` at the line's nodes (zero outside the edge margin).
pub fn invert_line(line: &StandardLine, order: usize, cache: &CoeffCache) -> Result<Vec<f64>> {
    Ok(solve_line(line, order, cache)?.node_values(cache))
}
