//! Special coefficients used by the moment method.
//!
//! Notation used throughout the crate:
//!
//! * `B_m = (1/π) ∫ t^m / √(1-t²) dt` ([`chebyshev_moment`]),
//! * `S_n = (1/π) ∫ t^n √(1-t²) dt` ([`sqrt_weight_moment`]),
//! * `T_n(t) = (1/π) p.v.∫ τ^n √(1-τ²) / (t-τ) dτ` ([`weighted_hilbert_power`]),
//! * `T_i^j = (1/π) ∫ t^j T_i(t) / √(1-t²) dt` ([`t_scalar`]).
//!
//! All integrals are over `(-1, 1)`. None of these are computed by quadrature:
//! `B` comes from the double-factorial ratio, `T_n` from the three-term
//! recursion `T_n = t T_{n-1} - S_{n-1}` seeded with `T_0(t) = t`, and `T_i^j`
//! from `T_i^j = T_{i-1}^{j+1} - S_{i-1} B_j` seeded with `T_0^j = B_{j+1}`.
//!
//! Two printed variants of these identities are known to be wrong and are not
//! used here: `B_{2n} = (2n-2)!!/(2n)!!` (gives `B_4 = 1/4`, the integral is
//! `3/8`), and the parity `T_n(-t) = (-1)^n T_n(t)` (contradicts `T_0(t) = t`;
//! the correct parity is `(-1)^{n+1}`).

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// `B_m = (1/π) ∫ t^m / √(1-t²) dt`: `(m-1)!!/m!!` for even `m`, zero for odd.
pub fn chebyshev_moment(m: usize) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    // ratio recurrence, never forms the double factorials themselves
    (1..=m / 2).fold(1.0, |b, i| b * (2 * i - 1) as f64 / (2 * i) as f64)
}

/// `S_n = (1/π) ∫ t^n √(1-t²) dt = B_n - B_{n+2}`.
pub fn sqrt_weight_moment(n: usize) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        chebyshev_moment(n) - chebyshev_moment(n + 2)
    }
}

/// `T_n(t)`, the weighted finite Hilbert transform of `τ^n`.
///
/// A polynomial of degree `n + 1` in `t`; evaluated by recursion, so no
/// singular integral is ever formed.
pub fn weighted_hilbert_power(n: usize, t: f64) -> f64 {
    let mut value = t;
    for k in 1..=n {
        value = t * value - sqrt_weight_moment(k - 1);
    }
    value
}

/// All of `T_0(t) ..= T_max(t)` in one pass, using a cache for `S`.
pub fn weighted_hilbert_powers(cache: &CoeffCache, max: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut value = t;
    out.push(value);
    for k in 1..=max {
        value = t * value - cache.s(k - 1);
        out.push(value);
    }
    out
}

/// `T_i^j`, the Chebyshev-weighted moment of `T_i`.
pub fn t_scalar(i: usize, j: usize) -> f64 {
    if (i + j).is_multiple_of(2) {
        return 0.0;
    }
    // walk the anti-diagonal from T_0^{i+j} down to T_i^j
    let mut value = chebyshev_moment(i + j + 1);
    for r in 0..i {
        value -= sqrt_weight_moment(r) * chebyshev_moment(i + j - 1 - r);
    }
    value
}

/// Binomial coefficient `C(n, k)` as a float (the `A_n^m` symbol).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The `n`-point Gauss-Chebyshev rule of the first kind.
///
/// Returns the nodes `q_i = cos((2i-1)π/(2n))`, `i = 1..=n` (strictly
/// decreasing) and the common weight `π/n`, so that
/// `∫ s(t)/√(1-t²) dt ≈ (π/n) Σ s(q_i)`, exact for degree `≤ 2n-1`.
pub fn gauss_chebyshev_rule(n: usize) -> Result<(Vec<f64>, f64)> {
    if n == 0 {
        return Err(invalid("Gauss-Chebyshev rule needs at least one node"));
    }
    Ok((chebyshev_nodes(n), PI / n as f64))
}

/// First-kind Chebyshev nodes, written as `sin((n-2i+1)π/(2n))` so that the
/// set is exactly antisymmetric.
pub(crate) fn chebyshev_nodes(n: usize) -> Vec<f64> {
    let n_i = n as isize;
    (1..=n_i)
        .map(|i| ((n_i - 2 * i + 1) as f64 * PI / (2 * n_i) as f64).sin())
        .collect()
}

/// The `m`-point Gauss-Chebyshev rule of the second kind:
/// `∫ s(t) √(1-t²) dt ≈ Σ w_j s(τ_j)` with `τ_j = cos(jπ/(m+1))` and
/// `w_j = π/(m+1) sin²(jπ/(m+1))`. Exact for degree `≤ 2m-1`.
pub fn gauss_chebyshev_second_kind(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(invalid("Gauss-Chebyshev rule needs at least one node"));
    }
    let h = PI / (m + 1) as f64;
    let m_i = m as isize;
    let nodes = (1..=m_i)
        .map(|j| ((m_i + 1 - 2 * j) as f64 * h / 2.0).sin())
        .collect();
    let weights = (1..=m).map(|j| h * (j as f64 * h).sin().powi(2)).collect();
    Ok((nodes, weights))
}

/// Tabulated `B`, `S`, binomials and `T_i^j` up to a fixed order.
///
/// Immutable after construction; share it freely between line solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffCache {
    max_order: usize,
    b_table: Vec<f64>,
    s_table: Vec<f64>,
    binomials: Vec<Vec<f64>>,
    t_ij_table: Vec<Vec<f64>>,
}

impl CoeffCache {
    pub fn new(max_order: usize) -> Self {
        // T_i^j for i, j <= max_order reaches B_{2 max_order + 1}
        let b_len = 2 * max_order + 3;
        let mut b_table = Vec::with_capacity(b_len);
        let mut b = 1.0;
        for m in 0..b_len {
            if m % 2 == 0 {
                if m > 0 {
                    b *= (m - 1) as f64 / m as f64;
                }
                b_table.push(b);
            } else {
                b_table.push(0.0);
            }
        }
        let s_table: Vec<f64> = (0..b_len - 2)
            .map(|n| {
                if n % 2 == 1 {
                    0.0
                } else {
                    b_table[n] - b_table[n + 2]
                }
            })
            .collect();

        let mut binomials = vec![vec![1.0]];
        for n in 1..=2 * max_order + 1 {
            let prev = &binomials[n - 1];
            let row = (0..=n)
                .map(|k| {
                    let left = if k > 0 { prev[k - 1] } else { 0.0 };
                    let right = if k < n { prev[k] } else { 0.0 };
                    left + right
                })
                .collect();
            binomials.push(row);
        }

        // row i needs row i-1 one column further right
        let width = 2 * max_order + 1;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_order + 1);
        rows.push((0..=width).map(|j| b_table[j + 1]).collect());
        for i in 1..=max_order {
            let prev = &rows[i - 1];
            let len = width - i + 1;
            let row = (0..len)
                .map(|j| {
                    if (i + j).is_multiple_of(2) {
                        0.0
                    } else {
                        prev[j + 1] - s_table[i - 1] * b_table[j]
                    }
                })
                .collect();
            rows.push(row);
        }
        let t_ij_table = rows
            .into_iter()
            .map(|row| row.into_iter().take(max_order + 1).collect())
            .collect();

        Self {
            max_order,
            b_table,
            s_table,
            binomials,
            t_ij_table,
        }
    }

    /// Cache deep enough for moment order `m` (`4M + 2`).
    pub fn for_moment_order(m: usize) -> Self {
        Self::new(4 * m + 2)
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn b(&self, m: usize) -> f64 {
        self.b_table[m]
    }

    pub fn s(&self, n: usize) -> f64 {
        self.s_table[n]
    }

    pub fn t(&self, i: usize, j: usize) -> f64 {
        self.t_ij_table[i][j]
    }

    pub fn binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.binomials[n][k]
        }
    }
}
