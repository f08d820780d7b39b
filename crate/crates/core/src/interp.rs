//! Interpolation helpers: barycentric interpolation on first-kind Chebyshev
//! nodes and local cubic interpolation on arbitrary sorted samples.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::tables::chebyshev_nodes;

/// Polynomial interpolant through values at the `n` first-kind Chebyshev
/// nodes `cos((2i-1)π/(2n))`, evaluated with the second barycentric formula.
#[derive(Debug, Clone)]
pub struct ChebyshevInterpolant {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl ChebyshevInterpolant {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(invalid("interpolant needs at least one sample"));
        }
        let nodes = chebyshev_nodes(n);
        let weights = (0..n)
            .map(|j| {
                let w = ((2 * j + 1) as f64 * PI / (2 * n) as f64).sin();
                if j % 2 == 0 {
                    w
                } else {
                    -w
                }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            values,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &wj), &fj) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let d = x - xj;
            if d == 0.0 {
                return fj;
            }
            let c = wj / d;
            num += c * fj;
            den += c;
        }
        num / den
    }
}

/// Four-point Lagrange interpolation on ascending abscissae.
///
/// Fails when `x` lies outside `[xs[0], xs[last]]`. With fewer than four
/// samples the full sample set is used.
pub fn cubic_interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n == 0 || n != ys.len() {
        return Err(invalid(
            "cubic interpolation needs matching, non-empty samples",
        ));
    }
    if !(x >= xs[0] && x <= xs[n - 1]) {
        return Err(invalid(format!(
            "{x} outside sampled range [{}, {}]",
            xs[0],
            xs[n - 1]
        )));
    }
    if n == 1 {
        return Ok(ys[0]);
    }
    // interval containing x, then a stencil centered on it
    let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let (lo, hi) = if n <= 4 {
        (0, n)
    } else {
        let lo = k.saturating_sub(1).min(n - 4);
        (lo, lo + 4)
    };
    let mut acc = 0.0;
    for a in lo..hi {
        let mut basis = 1.0;
        for b in lo..hi {
            if a != b {
                basis *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += basis * ys[a];
    }
    Ok(acc)
}
