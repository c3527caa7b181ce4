//! Green's function of `η″ − (N−2)η′ + 2(N−2)η` and the semi-infinite
//! convolution `η(ζ) = ∫_ζ^∞ G(σ−ζ) g(σ) dσ`.
//!
//! `G` is a sum of (complex) exponentials, so the convolution obeys a
//! two-step backward recurrence in the node index. Each step adds one
//! Simpson panel, which makes the whole sweep linear in the grid size.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibria::check_dimension;
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `3 <= N <= 9`: complex characteristic roots.
    Oscillatory,
    /// `N = 10`: double root.
    Critical,
    /// `N > 10`: two negative real roots.
    Hyperbolic,
}

/// Constants of the transformed linear operator for a given `(N, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub dimension: u32,
    pub alpha: f64,
    pub beta: f64,
    pub regime: Regime,
    /// Length scale `√(2(N−2)/λ)` of the change of variables `r = m e^{−ζ}`.
    pub m: f64,
}

impl KernelParams {
    /// Characteristic exponents `s` with `G(z) = Σ c e^{s z}` (not used for
    /// the critical regime, where `G(z) = z e^{s z}`).
    fn modes(&self) -> Vec<(Complex64, Complex64)> {
        let a = -0.5 * self.alpha;
        match self.regime {
            Regime::Oscillatory => {
                let s = Complex64::new(a, self.beta);
                let c = Complex64::new(0.0, -0.5 / self.beta);
                vec![(s, c), (s.conj(), c.conj())]
            }
            Regime::Hyperbolic => {
                let c = 0.5 / self.beta;
                vec![
                    (Complex64::new(a + self.beta, 0.0), Complex64::new(c, 0.0)),
                    (Complex64::new(a - self.beta, 0.0), Complex64::new(-c, 0.0)),
                ]
            }
            Regime::Critical => vec![(Complex64::new(a, 0.0), Complex64::new(1.0, 0.0))],
        }
    }

    /// `m²`.
    pub fn m2(&self) -> f64 {
        self.m * self.m
    }
}

pub fn kernel_params(n: u32, lambda: f64) -> Result<KernelParams> {
    check_dimension(n)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let nf = n as f64;
    let alpha = nf - 2.0;
    let beta = ((nf - 2.0) * (nf - 10.0).abs()).sqrt() / 2.0;
    let regime = match n {
        10 => Regime::Critical,
        n if n < 10 => Regime::Oscillatory,
        _ => Regime::Hyperbolic,
    };
    Ok(KernelParams {
        dimension: n,
        alpha,
        beta,
        regime,
        m: (2.0 * alpha / lambda).sqrt(),
    })
}

/// `G_N(z)`; zero for `z < 0`.
pub fn green_value(p: &KernelParams, z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    let a = 0.5 * p.alpha;
    match p.regime {
        Regime::Oscillatory => (-a * z).exp() * (p.beta * z).sin() / p.beta,
        Regime::Critical => z * (-a * z).exp(),
        Regime::Hyperbolic => (((p.beta - a) * z).exp() - (-(p.beta + a) * z).exp()) / (2.0 * p.beta),
    }
}

/// `G_N′(z)`; the value at `z = 0` is the right limit 1, and 0 for `z < 0`.
pub fn green_derivative(p: &KernelParams, z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    let a = 0.5 * p.alpha;
    match p.regime {
        Regime::Oscillatory => (-a * z).exp() * ((p.beta * z).cos() - a / p.beta * (p.beta * z).sin()),
        Regime::Critical => (-a * z).exp() * (1.0 - a * z),
        Regime::Hyperbolic => {
            let ep = ((p.beta - a) * z).exp();
            let em = (-(p.beta + a) * z).exp();
            0.5 * (ep + em) - a * (ep - em) / (2.0 * p.beta)
        }
    }
}

/// `∫_0^∞ |G_N|`. Exact `1/(2(N−2))` when `G_N >= 0` (N >= 10); otherwise
/// adaptive quadrature over the half-periods of the sine factor.
pub fn green_l1_norm(p: &KernelParams) -> f64 {
    match p.regime {
        Regime::Critical | Regime::Hyperbolic => 1.0 / (2.0 * p.alpha),
        Regime::Oscillatory => {
            let half = std::f64::consts::PI / p.beta;
            let g = |z: f64| green_value(p, z).abs();
            let mut total = 0.0;
            for k in 0.. {
                let a = k as f64 * half;
                let piece = adaptive_simpson(&g, a, a + half, 1e-16);
                total += piece;
                if piece < 1e-18 * total {
                    break;
                }
            }
            total
        }
    }
}

/// Uniform grid `ζ_i = ζ₀ + i h`, `i = 0..n`, standing in for `[ζ₀, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiInfiniteGrid {
    pub zeta0: f64,
    pub zeta_max: f64,
    pub h: f64,
    /// Number of intervals (`nodes` has `n + 1` entries).
    pub n: usize,
}

impl SemiInfiniteGrid {
    /// Grid on `[zeta0, zeta0 + length]` with step close to `h` (adjusted so
    /// that the length is an integer number of steps).
    pub fn new(zeta0: f64, length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && length > 0.0 && zeta0.is_finite()) {
            return Err(Error::InvalidInput(format!("bad grid: zeta0 = {zeta0}, length = {length}, h = {h}")));
        }
        let n = (length / h).round().max(4.0) as usize;
        let h = length / n as f64;
        Ok(Self { zeta0, zeta_max: zeta0 + length, h, n })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.zeta_max
        } else {
            self.zeta0 + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}

/// Dominant-mode tail `g(σ) ≈ e^{−p(σ−Z)}(A(σ−Z) + B)` for `σ >= Z`, fitted
/// on the last two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub rate: f64,
    pub slope: f64,
    pub value: f64,
}

impl TailModel {
    pub fn fit(grid: &SemiInfiniteGrid, g: &[f64], rate: f64) -> Result<Self> {
        let n = grid.n;
        let b = g[n];
        let a = (b - g[n - 1] * (-rate * grid.h).exp()) / grid.h;
        if b * (a - rate * b) > 0.0 {
            return Err(Error::TailNotDecaying { zeta_max: grid.zeta_max });
        }
        Ok(Self { rate, slope: a, value: b })
    }

    /// `∫_0^∞ e^{(s−p)w}(A w + B) dw` and `∫_0^∞ w e^{(s−p)w}(A w + B) dw`.
    fn moments(&self, s: Complex64) -> (Complex64, Complex64) {
        let d = Complex64::new(self.rate, 0.0) - s;
        let t0 = self.value / d + self.slope / (d * d);
        let t1 = self.value / (d * d) + 2.0 * self.slope / (d * d * d);
        (t0, t1)
    }
}

/// Values of `η` and `η′` at every node, plus the tail that closed the sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TailConvolution {
    pub eta: Vec<f64>,
    pub eta_prime: Vec<f64>,
    pub tail: TailModel,
}

/// Largest step the oscillatory kernel is resolved with.
pub fn max_step(p: &KernelParams) -> f64 {
    match p.regime {
        Regime::Oscillatory => (1.0 / p.beta).min(1.0) / 8.0,
        _ => 1.0 / 8.0,
    }
}

/// `J0_i = ∫_{ζ_i}^∞ e^{s(σ−ζ_i)} g` and `J1_i = ∫_{ζ_i}^∞ (σ−ζ_i) e^{s(σ−ζ_i)} g`
/// for all nodes, by the backward Simpson recurrence.
fn exp_moments(grid: &SemiInfiniteGrid, g: &[f64], s: Complex64, tail: &TailModel, want_j1: bool) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let h = grid.h;
    let e1 = (s * h).exp();
    let e2 = e1 * e1;
    let em1 = (-s * h).exp();
    let mut j0 = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut j1 = vec![Complex64::new(0.0, 0.0); if want_j1 { n + 1 } else { 0 }];
    let (t0, t1) = tail.moments(s);
    j0[n] = t0;
    if want_j1 {
        j1[n] = t1;
    }
    // Single panel [ζ_{n−1}, ζ_n] from the quadratic through the last three nodes.
    let w = h / 12.0;
    j0[n - 1] = w * (-em1 * g[n - 2] + 8.0 * g[n - 1] + 5.0 * e1 * g[n]) + e1 * j0[n];
    if want_j1 {
        j1[n - 1] = w * (-(-h) * em1 * g[n - 2] + 5.0 * h * e1 * g[n]) + e1 * (j1[n] + h * j0[n]);
    }
    for i in (0..n - 1).rev() {
        let a = g[i];
        let b = e1 * g[i + 1];
        let c = e2 * g[i + 2];
        j0[i] = h / 3.0 * (a + 4.0 * b + c) + e2 * j0[i + 2];
        if want_j1 {
            j1[i] = h / 3.0 * (4.0 * h * b + 2.0 * h * c) + e2 * (j1[i + 2] + 2.0 * h * j0[i + 2]);
        }
    }
    (j0, j1)
}

/// `η(ζ_i) = ∫_{ζ_i}^∞ G(σ−ζ_i) g(σ) dσ` and `η′(ζ_i) = −∫ G′(σ−ζ_i) g(σ) dσ`
/// at every node. Beyond `ζ_max` the tail model with decay `rate` (2 for the
/// forcing of the singular problem) is integrated in closed form.
pub fn convolve_tail_with_rate(p: &KernelParams, grid: &SemiInfiniteGrid, g: &[f64], rate: f64) -> Result<TailConvolution> {
    if g.len() != grid.len() {
        return Err(Error::InvalidInput(format!("{} samples for a grid of {} nodes", g.len(), grid.len())));
    }
    if grid.h > max_step(p) * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "grid step {} does not resolve the kernel (need <= {})",
            grid.h,
            max_step(p)
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite forcing sample".into()));
    }
    let tail = TailModel::fit(grid, g, rate)?;
    let n = grid.len();
    let mut eta = vec![0.0; n];
    let mut eta_prime = vec![0.0; n];
    match p.regime {
        Regime::Critical => {
            // G = z e^{sz}, G′ = (1 + s z) e^{sz}
            let s = Complex64::new(-0.5 * p.alpha, 0.0);
            let (j0, j1) = exp_moments(grid, g, s, &tail, true);
            for i in 0..n {
                eta[i] = j1[i].re;
                eta_prime[i] = -(j0[i] + s * j1[i]).re;
            }
        }
        _ => {
            for (s, c) in p.modes() {
                let (j0, _) = exp_moments(grid, g, s, &tail, false);
                for i in 0..n {
                    eta[i] += (c * j0[i]).re;
                    eta_prime[i] -= (c * s * j0[i]).re;
                }
            }
        }
    }
    Ok(TailConvolution { eta, eta_prime, tail })
}

/// [`convolve_tail_with_rate`] with the default tail decay `e^{−2σ}`.
pub fn convolve_tail(p: &KernelParams, grid: &SemiInfiniteGrid, g: &[f64]) -> Result<TailConvolution> {
    convolve_tail_with_rate(p, grid, g, 2.0)
}

/// `η″ − (N−2)η′ + 2(N−2)η` by fourth-order central differences. Entry `k`
/// corresponds to node `k + 2`.
pub fn apply_operator(p: &KernelParams, h: f64, eta: &[f64]) -> Vec<f64> {
    let a = p.alpha;
    eta.windows(5)
        .map(|w| {
            let d1 = (w[0] - 8.0 * w[1] + 8.0 * w[3] - w[4]) / (12.0 * h);
            let d2 = (-w[0] + 16.0 * w[1] - 30.0 * w[2] + 16.0 * w[3] - w[4]) / (12.0 * h * h);
            d2 - a * d1 + 2.0 * a * w[2]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(p: &KernelParams, grid: &SemiInfiniteGrid, g: &[f64]) -> Vec<f64> {
        // O(n²) composite trapezoid with end corrections, no tail; oracle for interior nodes.
        let nodes = grid.nodes();
        (0..nodes.len())
            .map(|i| {
                let vals: Vec<f64> = (i..nodes.len()).map(|k| green_value(p, nodes[k] - nodes[i]) * g[k]).collect();
                crate::quad::simpson_uniform(&vals, grid.h)
            })
            .collect()
    }

    #[test]
    fn params() {
        let p = kernel_params(3, 0.1).unwrap();
        assert_eq!(p.alpha, 1.0);
        assert!((p.beta - 7f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(p.regime, Regime::Oscillatory);
        assert!((p.m - 20f64.sqrt()).abs() < 1e-14);
        assert_eq!(kernel_params(10, 1.0).unwrap().regime, Regime::Critical);
        let q = kernel_params(12, 1.0).unwrap();
        assert!((q.beta - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(q.regime, Regime::Hyperbolic);
    }

    #[test]
    fn green_quarter_period() {
        let p = kernel_params(3, 0.1).unwrap();
        let z = std::f64::consts::FRAC_PI_2 / p.beta;
        assert!((green_value(&p, z) - 0.417_482_312_929_400_2).abs() < 1e-14);
        assert_eq!(green_value(&p, -1.0), 0.0);
    }

    #[test]
    fn derivative_right_limit() {
        for n in [3, 10, 12] {
            let p = kernel_params(n, 1.0).unwrap();
            assert_eq!(green_derivative(&p, 0.0), 1.0);
            assert_eq!(green_derivative(&p, -0.5), 0.0);
        }
    }

    #[test]
    fn tail_moment_recurrence_matches_direct_sum() {
        let p = kernel_params(3, 0.1).unwrap();
        let grid = SemiInfiniteGrid::new(1.0, 30.0, 0.01).unwrap();
        let g: Vec<f64> = grid.nodes().iter().map(|s| s * (-2.0 * s).exp()).collect();
        let fast = convolve_tail(&p, &grid, &g).unwrap();
        let slow = direct(&p, &grid, &g);
        for i in (0..grid.len() - 100).step_by(37) {
            assert!((fast.eta[i] - slow[i]).abs() < 1e-11, "node {i}: {} vs {}", fast.eta[i], slow[i]);
        }
    }

    #[test]
    fn growing_tail_rejected() {
        let p = kernel_params(3, 0.1).unwrap();
        let grid = SemiInfiniteGrid::new(0.0, 10.0, 0.01).unwrap();
        let g: Vec<f64> = grid.nodes().iter().map(|s| (0.1 * s).exp()).collect();
        assert!(matches!(convolve_tail(&p, &grid, &g), Err(Error::TailNotDecaying { .. })));
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = kernel_params(3, 0.1).unwrap();
        let grid = SemiInfiniteGrid::new(0.0, 10.0, 0.5).unwrap();
        let g = vec![0.0; grid.len()];
        assert!(matches!(convolve_tail(&p, &grid, &g), Err(Error::InvalidInput(_))));
    }
}
