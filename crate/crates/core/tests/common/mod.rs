//! Independent reference computations. Nothing here calls the recursions or
//! closed forms under test; everything is brute-force quadrature.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Second-kind Gauss-Chebyshev rule: `∫ √(1-τ²) g(τ) dτ ≈ Σ w_j g(τ_j)`.
pub fn second_kind_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (m + 1) as f64;
    let nodes = (1..=m).map(|j| (j as f64 * h).cos()).collect();
    let weights = (1..=m).map(|j| h * (j as f64 * h).sin().powi(2)).collect();
    (nodes, weights)
}

/// First-kind rule nodes: `∫ g(t)/√(1-t²) dt ≈ (π/n) Σ g(x_k)`.
pub fn first_kind_nodes(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

/// `(1/π) p.v. ∫ √(1-τ²) τ^n / (t-τ) dτ` by singularity subtraction on a
/// 4096-node second-kind rule.
pub struct PvHilbert {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PvHilbert {
    pub fn new() -> Self {
        let (nodes, weights) = second_kind_rule(4096);
        Self { nodes, weights }
    }

    pub fn eval(&self, g: impl Fn(f64) -> f64, t: f64) -> f64 {
        let gt = g(t);
        let rest: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&tau, &w)| w * (g(tau) - gt) / (t - tau))
            .sum();
        rest / PI + gt * t
    }

    pub fn monomial(&self, n: usize, t: f64) -> f64 {
        self.eval(|tau| tau.powi(n as i32), t)
    }
}

/// `(1/π) ∫ T_i(t) t^j / √(1-t²) dt` on a 2000-node first-kind rule, with
/// `T_i` itself from [`PvHilbert`].
pub fn t_scalar_quadrature(pv: &PvHilbert, i: usize, j: usize) -> f64 {
    let nodes = first_kind_nodes(2000);
    let sum: f64 = nodes
        .iter()
        .map(|&x| pv.monomial(i, x) * x.powi(j as i32))
        .sum();
    sum / nodes.len() as f64
}

/// `(1/π) ∫ t^m / √(1-t²) dt` by quadrature.
pub fn b_quadrature(m: usize) -> f64 {
    let nodes = first_kind_nodes(64);
    nodes.iter().map(|x| x.powi(m as i32)).sum::<f64>() / nodes.len() as f64
}

pub fn gauss_legendre(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).unwrap())
}

/// The forward finite cosh-weighted Hilbert transform
/// `h(τ) = (1/π) p.v. ∫ cosh(μ(τ-t)) f(t) / (τ-t) dt`.
pub fn forward_cht(gl: &GaussLegendre, f: &dyn Fn(f64) -> f64, mu: f64, tau: f64) -> f64 {
    let ft = f(tau);
    let smooth = gl.integrate(-1.0, 1.0, |t| {
        ((mu * (tau - t)).cosh() * f(t) - ft) / (tau - t)
    });
    (smooth + ft * ((1.0 + tau) / (1.0 - tau)).ln()) / PI
}

pub fn cosh_moment(gl: &GaussLegendre, f: &dyn Fn(f64) -> f64, mu: f64) -> f64 {
    gl.integrate(-1.0, 1.0, |t| (mu * t).cosh() * f(t))
}

pub fn moment(gl: &GaussLegendre, f: &dyn Fn(f64) -> f64, k: usize) -> f64 {
    gl.integrate(-1.0, 1.0, |t| t.powi(k as i32) * f(t))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn choose(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// The truncated moment systems read straight off the moment identities
/// obtained by testing the representation formula against `t^m/√(1-t²)`,
/// with every `l` kept (odd-parity terms included) and quadrature `T`s.
///
/// Returns `(Q, P, leak)` where `leak` is the largest coefficient coupling
/// even equations to odd moments or vice versa; it must vanish.
pub fn brute_force_systems(
    pv: &PvHilbert,
    mu: f64,
    order: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, f64) {
    let a: Vec<f64> = (0..=order)
        .map(|k| mu.powi(2 * k as i32) / factorial(2 * k))
        .collect();
    let mut t_cache = std::collections::HashMap::new();
    let mut tq = |i: usize, j: usize| {
        *t_cache
            .entry((i, j))
            .or_insert_with(|| t_scalar_quadrature(pv, i, j))
    };
    // coefficient of c_l in the equation for c_m
    let mut coef = |m: usize, l: usize| {
        let mut v = if l == m { 1.0 } else { 0.0 };
        if l.is_multiple_of(2) && l >= 2 && l / 2 <= order {
            v += b_quadrature(m) * a[l / 2];
        }
        for k in 1..=order {
            if l < 2 * k {
                let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
                v -= a[k] * choose(2 * k - 1, l) * sign * tq(2 * k - 1 - l, m);
            }
        }
        v
    };
    let mut leak: f64 = 0.0;
    let mut q = vec![vec![0.0; order + 1]; order + 1];
    for i in 0..=order {
        for l in 0..=2 * order {
            let v = coef(2 * i, l);
            if l.is_multiple_of(2) {
                q[i][l / 2] = v;
            } else {
                leak = leak.max(v.abs());
            }
        }
    }
    let mut p = vec![vec![0.0; order]; order];
    for i in 1..=order {
        for l in 0..2 * order {
            let v = coef(2 * i - 1, l);
            if !l.is_multiple_of(2) {
                p[i - 1][(l - 1) / 2] = v;
            } else {
                leak = leak.max(v.abs());
            }
        }
    }
    (q, p, leak)
}

/// Isotropic Gaussian blob `exp(-|x-a|²/σ²)`, whose exponential Radon
/// transform is closed form.
#[derive(Debug, Clone, Copy)]
pub struct Blob {
    pub center: [f64; 2],
    pub sigma: f64,
}

impl Blob {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let d2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        (-d2 / (self.sigma * self.sigma)).exp()
    }

    pub fn ert(&self, mu: f64, s: f64, phi: f64) -> f64 {
        let (c, sn) = (phi.cos(), phi.sin());
        let a_s = self.center[0] * c + self.center[1] * sn;
        let a_t = -self.center[0] * sn + self.center[1] * c;
        let sig = self.sigma;
        sig * PI.sqrt()
            * (-(s - a_s).powi(2) / (sig * sig) + mu * a_t + mu * mu * sig * sig / 4.0).exp()
    }

    /// `-2 p.v. ∫ cosh(μ(x2-y))/(x2-y) p(x1, y) dy` over `|y| <= 1`.
    pub fn dbp_reference(&self, gl: &GaussLegendre, mu: f64, x: [f64; 2]) -> f64 {
        let px = self.value(x);
        let smooth = gl.integrate(-1.0, 1.0, |y| {
            ((mu * (x[1] - y)).cosh() * self.value([x[0], y]) - px) / (x[1] - y)
        });
        -2.0 * (smooth + px * ((x[1] + 1.0) / (1.0 - x[1])).ln())
    }
}

/// Relative L2 error of `got` against `want` over samples with `|t| <= limit`.
pub fn relative_l2(ts: &[f64], got: &[f64], want: &[f64], limit: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((&t, g), w) in ts.iter().zip(got).zip(want) {
        if t.abs() <= limit {
            num += (g - w).powi(2);
            den += w * w;
        }
    }
    (num / den).sqrt()
}

/// `F(u) = ln|u| + ∫_0^u (cosh(μv) - 1)/v dv`, an antiderivative of
/// `cosh(μu)/u` in the principal-value sense.
fn cosh_log(mu: f64, u: f64) -> f64 {
    let z = (mu * u).powi(2);
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..60 {
        term *= z / ((2 * k - 1) * (2 * k)) as f64;
        sum += term / (2 * k) as f64;
        if term < 1e-18 {
            break;
        }
    }
    u.abs().ln() + sum
}

/// `-2 p.v. ∫ cosh(μ(x2-y))/(x2-y) p(x1, y) dy` for `p` piecewise constant on
/// the given `(lo, hi, intensity)` chords.
pub fn dbp_from_chords(chords: &[(f64, f64, f64)], mu: f64, x2: f64) -> f64 {
    -2.0 * chords
        .iter()
        .map(|&(lo, hi, rho)| rho * (cosh_log(mu, x2 - lo) - cosh_log(mu, x2 - hi)))
        .sum::<f64>()
}
