//! Regular solutions `u(0) = γ, u′(0) = 0`, their rescaled limits, and the
//! diagnostics comparing them with the singular solution.
//!
//! Internally a regular solution is integrated in `t = κr` for the state
//! `(u − s, du/dt)`. With `κ = 1, s = 0` this is the plain equation; with
//! `κ = e^{γ/2}, s = γ` it is the rescaled problem for `û(ρ) = u(r) − γ`,
//! which keeps `e^u` from overflowing and resolves the boundary layer at
//! the origin on an `O(1)` scale.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{check_dimension, ProblemParams};
use crate::error::{Error, Result};
use crate::ode::{integrate, DenseSolution, OdeOptions, Termination};
use crate::profile::{log_points, merge_points, refine_mesh, rhs_second, RadialSolution};
use crate::roots::{brent, RootOptions};
use crate::singular::SingularProfile;

/// Above this `γ` the rescaled formulation is used.
pub const HAT_THRESHOLD: f64 = 25.0;

/// Two-term expansion at the origin:
/// `u = γ + (γ − λe^γ) r0²/(2N)`, `u′ = (γ − λe^γ) r0/N`.
pub fn series_start(params: ProblemParams, gamma: f64, r0: f64) -> (f64, f64) {
    let c = gamma - params.lambda * gamma.exp();
    let n = params.n();
    (gamma + c * r0 * r0 / (2.0 * n), c * r0 / n)
}

/// Default step-off radius: `10⁻⁴` shrunk by the size of the second-order
/// coefficient so the dropped `O(r⁴)` term stays at rounding level.
pub fn default_step_off(params: ProblemParams, gamma: f64) -> f64 {
    let c = (gamma - params.lambda * gamma.exp()).abs();
    1e-4 / c.max(params.lambda * gamma.exp()).max(1.0).sqrt()
}

/// Options of [`shoot_regular_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Step-off radius in `r`; [`default_step_off`] when `None`.
    pub step_off: Option<f64>,
    /// Force (or forbid) the rescaled formulation; automatic when `None`.
    pub rescaled: Option<bool>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { step_off: None, rescaled: None, rtol: 1e-12, atol: 1e-13 }
    }
}

/// A regular solution on `[0, r_max]`.
#[derive(Debug, Clone)]
pub struct RegularProfile {
    pub gamma: f64,
    pub params: ProblemParams,
    /// `ln κ` of the internal variable `t = κr`.
    log_kappa: f64,
    shift: f64,
    /// Step-off radius (in `r`).
    pub r_start: f64,
    ode: DenseSolution<2>,
    pub r_nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
}

/// Regular solution up to `r_max` with default options.
pub fn shoot_regular(params: ProblemParams, gamma: f64, r_max: f64) -> Result<RegularProfile> {
    shoot_regular_with(params, gamma, r_max, ShootOptions::default())
}

/// Rescaled solution `û` on `[0, ρ_max]`, returned as the regular profile it
/// represents (on `[0, ρ_max e^{−γ/2}]`).
pub fn shoot_hat(params: ProblemParams, gamma: f64, rho_max: f64) -> Result<RegularProfile> {
    let opts = ShootOptions { rescaled: Some(true), ..ShootOptions::default() };
    shoot_regular_with(params, gamma, rho_max * (-0.5 * gamma).exp(), opts)
}

pub fn shoot_regular_with(params: ProblemParams, gamma: f64, r_max: f64, opts: ShootOptions) -> Result<RegularProfile> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let rescaled = opts.rescaled.unwrap_or(gamma > HAT_THRESHOLD);
    let (log_kappa, shift) = if rescaled { (0.5 * gamma, gamma) } else { (0.0, 0.0) };
    let kappa = log_kappa.exp();
    let r_start = opts.step_off.unwrap_or_else(|| default_step_off(params, gamma));
    if !(r_max > r_start) {
        return Err(Error::InvalidInput(format!("r_max = {r_max} must exceed the step-off radius {r_start}")));
    }
    let n = params.n();
    let lambda = params.lambda;
    let inv_k2 = (-2.0 * log_kappa).exp();

    // Series at the origin, written in t.
    let c_t = gamma * inv_k2 - lambda * (gamma - 2.0 * log_kappa).exp();
    let t0 = r_start * kappa;
    let y0 = [gamma - shift + c_t * t0 * t0 / (2.0 * n), c_t * t0 / n];

    let rhs = move |t: f64, y: &[f64; 2]| {
        let w = y[0] + shift;
        [y[1], -(n - 1.0) / t * y[1] + inv_k2 * w - lambda * (w - 2.0 * log_kappa).exp()]
    };
    let ode_opts = OdeOptions::tol(opts.rtol, opts.atol).h_max(0.05 * kappa).max_steps(5_000_000);
    let ode = integrate(rhs, t0, y0, r_max * kappa, ode_opts, |_, y| (y[0] + shift).abs() > 1e6)?;
    if ode.termination == Termination::Stopped {
        return Err(Error::BlowupBeforeRmax { r: ode.t_end() / kappa, r_max });
    }

    let mut prof = RegularProfile {
        gamma,
        params,
        log_kappa,
        shift,
        r_start,
        ode,
        r_nodes: Vec::new(),
        u: Vec::new(),
        u_prime: Vec::new(),
    };
    let mesh: Vec<f64> = prof.ode.mesh().iter().map(|t| t / kappa).collect();
    let mut nodes = vec![0.0];
    nodes.extend(refine_mesh(&mesh, r_start, r_max, 0.01, 1));
    for &r in &nodes {
        let [u, up] = prof.state(r).expect("node inside domain");
        prof.u.push(u);
        prof.u_prime.push(up);
    }
    prof.r_nodes = nodes;
    Ok(prof)
}

impl RegularProfile {
    pub fn uses_rescaling(&self) -> bool {
        self.shift != 0.0
    }

    pub fn r_max(&self) -> f64 {
        self.ode.t_end() * (-self.log_kappa).exp()
    }

    /// Step boundaries of the integrator, mapped to `r`.
    pub fn mesh(&self) -> Vec<f64> {
        let k = (-self.log_kappa).exp();
        self.ode.mesh().iter().map(|t| t * k).collect()
    }

    /// `(û, dû/dρ)` at `ρ = e^{γ/2} r`.
    pub fn hat_state(&self, rho: f64) -> Option<[f64; 2]> {
        let g = self.gamma;
        if self.log_kappa == 0.5 * g {
            let t0 = self.r_start * self.log_kappa.exp();
            if rho < t0 {
                let [u, up] = self.state(rho * (-0.5 * g).exp())?;
                return Some([u - g, up * (-0.5 * g).exp()]);
            }
            let y = self.ode.eval(rho)?;
            return Some([y[0] + self.shift - g, y[1]]);
        }
        let [u, up] = self.state(rho * (-0.5 * g).exp())?;
        Some([u - g, up * (-0.5 * g).exp()])
    }

    /// `|−u″ − (N−1)/r·u′ + u − λe^u|` from the dense output, scaled by
    /// `1 + |u| + λe^u` (`r` beyond the step-off radius).
    pub fn ode_residual(&self, r: f64) -> Option<f64> {
        let k = self.log_kappa.exp();
        let y = self.ode.eval(r * k)?;
        let dy = self.ode.eval_derivative(r * k)?;
        let u = y[0] + self.shift;
        let up = y[1] * k;
        let upp = dy[1] * k * k;
        let f = self.params.lambda * u.exp();
        Some((upp - rhs_second(self.params.n(), self.params.lambda, r, u, up)).abs() / (1.0 + u.abs() + f))
    }
}

impl RadialSolution for RegularProfile {
    fn problem(&self) -> ProblemParams {
        self.params
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.r_max())
    }

    fn state(&self, r: f64) -> Option<[f64; 2]> {
        if !(r >= 0.0) {
            return None;
        }
        if r < self.r_start {
            let (u, up) = series_start(self.params, self.gamma, r);
            return Some([u, up]);
        }
        let k = self.log_kappa.exp();
        let y = self.ode.eval(r * k)?;
        Some([y[0] + self.shift, y[1] * k])
    }

    fn scan_points(&self) -> Vec<f64> {
        refine_mesh(&self.mesh(), self.r_start, self.r_max(), 0.01, 2)
    }

    fn samples(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.r_nodes, &self.u, &self.u_prime)
    }
}

/// `û(ρ) = u(e^{−γ/2}ρ) − γ` sampled on the induced grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HatProfile {
    pub gamma: f64,
    pub lambda: f64,
    pub dimension: u32,
    pub rho: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub u_hat_prime: Vec<f64>,
}

pub fn rescale_hat(profile: &RegularProfile) -> HatProfile {
    let g = profile.gamma;
    let s = (0.5 * g).exp();
    HatProfile {
        gamma: g,
        lambda: profile.params.lambda,
        dimension: profile.params.dimension,
        rho: profile.r_nodes.iter().map(|r| r * s).collect(),
        u_hat: profile.u.iter().map(|u| u - g).collect(),
        u_hat_prime: profile.u_prime.iter().map(|u| u / s).collect(),
    }
}

impl HatProfile {
    /// Back to `(r, u, u′)`.
    pub fn unscale(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let s = (0.5 * self.gamma).exp();
        (
            self.rho.iter().map(|r| r / s).collect(),
            self.u_hat.iter().map(|u| u + self.gamma).collect(),
            self.u_hat_prime.iter().map(|u| u * s).collect(),
        )
    }
}

/// `E(ρ) = û′²/2 − e^{−γ}û²/2 + λ_n e^{û} − e^{−γ}γû`, non-increasing in `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub rho: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_increase: f64,
}

pub fn energy_hat(hat: &HatProfile, lambda_n: f64, gamma: f64) -> EnergyReport {
    let eg = (-gamma).exp();
    let energy: Vec<f64> = hat
        .u_hat
        .iter()
        .zip(&hat.u_hat_prime)
        .map(|(&u, &p)| 0.5 * p * p - 0.5 * eg * u * u + lambda_n * u.exp() - eg * gamma * u)
        .collect();
    let max_increase = energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    EnergyReport { rho: hat.rho.clone(), energy, max_increase }
}

/// Solution of `ū″ + (N−1)/ρ·ū′ + λe^ū = 0`, `ū(0) = u0`, `ū′(0) = 0`.
#[derive(Debug, Clone)]
pub struct EmdenProfile {
    pub dimension: u32,
    pub lambda_inf: f64,
    pub u0: f64,
    pub rho_start: f64,
    ode: DenseSolution<2>,
    pub rho_nodes: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub u_bar_prime: Vec<f64>,
}

pub fn shoot_emden(n: u32, lambda_inf: f64, rho_max: f64) -> Result<EmdenProfile> {
    shoot_emden_from(n, lambda_inf, 0.0, rho_max)
}

pub fn shoot_emden_from(n: u32, lambda_inf: f64, u0: f64, rho_max: f64) -> Result<EmdenProfile> {
    check_dimension(n)?;
    if !(lambda_inf > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda_inf}")));
    }
    let nf = n as f64;
    let k = lambda_inf * u0.exp();
    let rho0 = 1e-4 / k.max(1.0).sqrt();
    if !(rho_max > rho0) {
        return Err(Error::InvalidInput(format!("rho_max = {rho_max} too small")));
    }
    let a = -k / (2.0 * nf);
    let b = k * k / (8.0 * nf * (nf + 2.0));
    let y0 = [u0 + a * rho0 * rho0 + b * rho0.powi(4), 2.0 * a * rho0 + 4.0 * b * rho0.powi(3)];
    let rhs = |rho: f64, y: &[f64; 2]| [y[1], -(nf - 1.0) / rho * y[1] - lambda_inf * y[0].exp()];
    let ode = integrate(rhs, rho0, y0, rho_max, OdeOptions::tol(1e-13, 1e-14).max_steps(5_000_000), |_, _| false)?;
    let mut prof = EmdenProfile {
        dimension: n,
        lambda_inf,
        u0,
        rho_start: rho0,
        ode,
        rho_nodes: Vec::new(),
        u_bar: Vec::new(),
        u_bar_prime: Vec::new(),
    };
    let mut nodes = vec![0.0];
    nodes.extend(merge_points(&prof.ode.mesh(), &log_points(rho0, rho_max, 50), rho0, rho_max));
    for &r in &nodes {
        let [u, up] = prof.eval(r).expect("node inside domain");
        prof.u_bar.push(u);
        prof.u_bar_prime.push(up);
    }
    prof.rho_nodes = nodes;
    Ok(prof)
}

impl EmdenProfile {
    pub fn rho_max(&self) -> f64 {
        self.ode.t_end()
    }

    /// `(ū, ū′)` at `ρ`.
    pub fn eval(&self, rho: f64) -> Option<[f64; 2]> {
        if rho < 0.0 {
            return None;
        }
        if rho < self.rho_start {
            let nf = self.dimension as f64;
            let k = self.lambda_inf * self.u0.exp();
            let a = -k / (2.0 * nf);
            let b = k * k / (8.0 * nf * (nf + 2.0));
            return Some([self.u0 + a * rho * rho + b * rho.powi(4), 2.0 * a * rho + 4.0 * b * rho.powi(3)]);
        }
        self.ode.eval(rho)
    }

    /// Mesh of the integrator refined to 100 points per unit of `ln ρ`.
    pub fn scan_points(&self) -> Vec<f64> {
        merge_points(&self.ode.mesh(), &log_points(self.rho_start, self.rho_max(), 100), self.rho_start, self.rho_max())
    }
}

/// `ū*(ρ) = −2 ln ρ + ln(2(N−2)/λ)`, the singular solution of the Emden equation.
pub fn emden_singular(n: u32, lambda: f64, rho: f64) -> f64 {
    -2.0 * rho.ln() + (2.0 * (n as f64 - 2.0) / lambda).ln()
}

/// Zeros of `ū(·, 0) − ū*` on `(0, ρ_max]`.
pub fn emden_zero_count(profile: &EmdenProfile) -> Result<ZeroCount> {
    let (n, lambda) = (profile.dimension, profile.lambda_inf);
    let rho_max = profile.rho_max();
    count_zeros(
        |r| {
            let s = profile.eval(r)?;
            Some((s[0] - emden_singular(n, lambda, r), s[1] + 2.0 / r))
        },
        &profile.scan_points(),
        (0.0, rho_max * (1.0 + 1e-12)),
    )
}

/// Sup over the nodes of the shifted solution of
/// `|ū(ρ; a) − ū(e^{a/2}ρ; 0) − a|`.
pub fn emden_scale_law_residual(n: u32, lambda: f64, a: f64, rho_max: f64) -> Result<f64> {
    let base = shoot_emden_from(n, lambda, 0.0, rho_max * (0.5 * a).exp() * (1.0 + 1e-12))?;
    let shifted = shoot_emden_from(n, lambda, a, rho_max)?;
    let s = (0.5 * a).exp();
    let mut worst: f64 = 0.0;
    for (&rho, &u) in shifted.rho_nodes.iter().zip(&shifted.u_bar) {
        let v = base.eval(s * rho).ok_or_else(|| Error::InvalidInput("scaled node outside base profile".into()))?[0];
        worst = worst.max((u - v - a).abs());
    }
    Ok(worst)
}

/// Zeros of a sampled function on an open interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCount {
    pub interval: (f64, f64),
    pub count: usize,
    pub zeros: Vec<f64>,
    pub slopes: Vec<f64>,
    pub all_simple: bool,
}

/// Slope below which a zero is reported as degenerate.
pub const SLOPE_GUARD: f64 = 1e-12;

/// Zeros of `f` on `(a, b)`; `f` returns `(value, slope)`. The sample points
/// are refined locally until consecutive sign changes are at least three
/// intervals apart, then each change is refined by Brent's method.
pub fn count_zeros<F>(f: F, points: &[f64], interval: (f64, f64)) -> Result<ZeroCount>
where
    F: Fn(f64) -> Option<(f64, f64)>,
{
    let (a, b) = interval;
    let value = |x: f64| f(x).map(|v| v.0).ok_or_else(|| Error::InvalidInput(format!("cannot evaluate at {x}")));
    let mut pts: Vec<f64> = points.iter().copied().filter(|&x| x > a && x < b).collect();
    let mut vals: Vec<f64> = pts.iter().map(|&x| value(x)).collect::<Result<_>>()?;
    for _ in 0..8 {
        let changes: Vec<usize> = (0..pts.len().saturating_sub(1))
            .filter(|&k| vals[k] != 0.0 && vals[k + 1] != 0.0 && (vals[k] < 0.0) != (vals[k + 1] < 0.0))
            .collect();
        let crowded: Vec<(usize, usize)> = changes.windows(2).filter(|w| w[1] - w[0] < 3).map(|w| (w[0], w[1])).collect();
        if crowded.is_empty() {
            break;
        }
        let mut refine = vec![false; pts.len()];
        for (k1, k2) in crowded {
            for flag in refine.iter_mut().take((k2 + 3).min(pts.len())).skip(k1.saturating_sub(1)) {
                *flag = true;
            }
        }
        let mut np = Vec::with_capacity(pts.len() * 2);
        let mut nv = Vec::with_capacity(pts.len() * 2);
        for k in 0..pts.len() {
            np.push(pts[k]);
            nv.push(vals[k]);
            if k + 1 < pts.len() && refine[k] {
                for j in 1..4 {
                    let x = pts[k] + (pts[k + 1] - pts[k]) * j as f64 / 4.0;
                    np.push(x);
                    nv.push(value(x)?);
                }
            }
        }
        pts = np;
        vals = nv;
    }
    let mut zeros = Vec::new();
    let mut slopes = Vec::new();
    let opts = RootOptions::default().xtol(0.0).rtol(1e-13);
    for k in 0..pts.len().saturating_sub(1) {
        let (v0, v1) = (vals[k], vals[k + 1]);
        let root = if v0 == 0.0 {
            if k == 0 { Some(pts[0]) } else { None }
        } else if v1 == 0.0 {
            Some(pts[k + 1])
        } else if (v0 < 0.0) != (v1 < 0.0) {
            Some(brent(value, pts[k], pts[k + 1], opts)?.x)
        } else {
            None
        };
        if let Some(x) = root {
            let slope = f(x).map(|v| v.1).unwrap_or(0.0);
            if slope.abs() <= SLOPE_GUARD {
                return Err(Error::DegenerateZero { at: x, slope });
            }
            zeros.push(x);
            slopes.push(slope);
        }
    }
    Ok(ZeroCount { interval, count: zeros.len(), zeros, slopes, all_simple: true })
}

/// Zeros of `u(·,γ) − U*` on `(a, b)` for one `γ`.
pub fn regular_minus_singular_zeros(singular: &SingularProfile, regular: &RegularProfile, interval: (f64, f64)) -> Result<ZeroCount> {
    let (a, b) = interval;
    let lo = a.max(singular.r_min());
    let hi = b.min(singular.r_max()).min(regular.r_max());
    let pts = merge_points(&regular.scan_points(), &singular.scan_points(), lo, hi);
    count_zeros(
        |r| {
            let x = regular.state(r)?;
            let y = singular.state(r)?;
            Some((x[0] - y[0], x[1] - y[1]))
        },
        &pts,
        (lo.max(a), hi.min(b)),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroGrowthEntry {
    pub gamma: f64,
    pub zeros: ZeroCount,
}

/// Zero counts of `u(·,γ) − U*` along a ladder of `γ` (computed in parallel).
pub fn zero_growth_regular(singular: &SingularProfile, gammas: &[f64], interval: (f64, f64)) -> Result<Vec<ZeroGrowthEntry>> {
    let params = singular.problem;
    gammas
        .par_iter()
        .map(|&g| {
            let reg = shoot_regular(params, g, interval.1.min(singular.r_max()))?;
            Ok(ZeroGrowthEntry { gamma: g, zeros: regular_minus_singular_zeros(singular, &reg, interval)? })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceEntry {
    pub gamma: f64,
    pub sup_value: f64,
    pub sup_derivative: f64,
}

/// Sup distances between `u(·,γ)` and `U*` (values and derivatives) on `[a, b]`.
pub fn convergence_report(singular: &SingularProfile, gammas: &[f64], interval: (f64, f64)) -> Result<Vec<ConvergenceEntry>> {
    let (a, b) = interval;
    if !(0.0 < a && a < b) {
        return Err(Error::InvalidInput(format!("need 0 < a < b, got [{a}, {b}]")));
    }
    let params = singular.problem;
    gammas
        .par_iter()
        .map(|&g| {
            let reg = shoot_regular(params, g, b)?;
            let (mut sv, mut sd) = (0.0f64, 0.0f64);
            for k in 0..=4000 {
                let r = a + (b - a) * k as f64 / 4000.0;
                let x = reg.state(r).ok_or_else(|| Error::InvalidInput(format!("regular profile misses r = {r}")))?;
                let y = singular.state(r).ok_or_else(|| Error::ProfileCoverage { need_lo: a, need_hi: b, have_lo: singular.r_min(), have_hi: singular.r_max() })?;
                sv = sv.max((x[0] - y[0]).abs());
                sd = sd.max((x[1] - y[1]).abs());
            }
            Ok(ConvergenceEntry { gamma: g, sup_value: sv, sup_derivative: sd })
        })
        .collect()
}

/// `(η, η′)` of a profile in the variables `η(ζ) = u(m e^{−ζ}) − 2ζ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaTrajectory {
    pub dimension: u32,
    pub m: f64,
    pub zeta: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_prime: Vec<f64>,
}

pub fn eta_transform<P: RadialSolution + ?Sized>(profile: &P, m: f64, zetas: &[f64]) -> Result<EtaTrajectory> {
    let mut eta = Vec::with_capacity(zetas.len());
    let mut eta_prime = Vec::with_capacity(zetas.len());
    for &z in zetas {
        let r = m * (-z).exp();
        let [u, up] = profile.state(r).ok_or_else(|| {
            let (lo, hi) = profile.domain();
            Error::ProfileCoverage { need_lo: r, need_hi: r, have_lo: lo, have_hi: hi }
        })?;
        eta.push(u - 2.0 * z);
        eta_prime.push(-r * up - 2.0);
    }
    Ok(EtaTrajectory { dimension: profile.problem().dimension, m, zeta: zetas.to_vec(), eta, eta_prime })
}

/// `η̂(τ) = û(ρ) − 2τ` with `ρ = m e^{−τ}`, computed from the rescaled state.
pub fn hat_eta(profile: &RegularProfile, m: f64, tau: f64) -> Option<(f64, f64)> {
    let rho = m * (-tau).exp();
    let [u, up] = profile.hat_state(rho)?;
    Some((u - 2.0 * tau, -rho * up - 2.0))
}

/// Left side of the trap condition: `m² e^{−2ζ}(1 + 2ζ)²/2`.
pub fn trap_condition(m: f64, zeta: f64) -> f64 {
    0.5 * m * m * (-2.0 * zeta).exp() * (1.0 + 2.0 * zeta).powi(2)
}

/// Smallest `ζ* >= 2` with `m²e^{−2ζ}(1 + 2ζ)²/2 <= ε/2` for all `ζ > ζ*`.
pub fn trap_zeta_star(m: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    // Decreasing for ζ > 1/2.
    if trap_condition(m, 2.0) <= 0.5 * epsilon {
        return Ok(2.0);
    }
    let mut hi = 3.0;
    while trap_condition(m, hi) > 0.5 * epsilon {
        hi += 1.0;
    }
    brent(|z| Ok(trap_condition(m, z) - 0.5 * epsilon), 2.0, hi, RootOptions::default().xtol(1e-13)).map(|r| r.x)
}

/// `2(N−2)(q e^η − 1 − η) + z²/2`, the level function of the trap regions.
pub fn trap_level(n: u32, ratio: f64, eta: f64, z: f64) -> f64 {
    let a = n as f64 - 2.0;
    let inner = if ratio == 1.0 { eta.exp_m1() - eta } else { ratio * eta.exp() - 1.0 - eta };
    2.0 * a * inner + 0.5 * z * z
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapReport {
    pub epsilon: f64,
    pub zeta_star: f64,
    pub zeta_bar: f64,
    /// Level at `ζ̄` is at most `ε`.
    pub entered: bool,
    /// Level stays at most `2ε` on `(ζ*, ζ̄)`.
    pub stayed: bool,
    pub max_level: f64,
    /// `Ẽ = z²/2 + 2(N−2)(e^η − 1 − η) − m²e^{−2ζ}(η + 2ζ)²/2` at the samples in `(ζ*, ζ̄]`.
    pub modified_energy: Vec<(f64, f64)>,
    /// Same check with `ζ̄` moved to the largest sample inside the `ε` region.
    pub holds_for_every_entry: bool,
}

impl TrapReport {
    pub fn passed(&self) -> bool {
        (!self.entered || self.stayed) && self.holds_for_every_entry
    }
}

/// Check that a trajectory inside `{level <= ε}` at `ζ̄ > ζ*` stays inside
/// `{level <= 2ε}` on `(ζ*, ζ̄)`. `ζ̄` is the trajectory sample closest to `zeta_bar`.
pub fn trapping_check(traj: &EtaTrajectory, epsilon: f64, zeta_star: f64, zeta_bar: f64) -> Result<TrapReport> {
    if !(zeta_star >= 0.5) || trap_condition(traj.m, zeta_star) > 0.5 * epsilon * (1.0 + 1e-12) {
        return Err(Error::PreconditionViolated(format!(
            "trap condition fails at zeta* = {zeta_star}: {} > {}",
            trap_condition(traj.m, zeta_star),
            0.5 * epsilon
        )));
    }
    let n = traj.dimension;
    let level: Vec<f64> = traj.eta.iter().zip(&traj.eta_prime).map(|(&e, &z)| trap_level(n, 1.0, e, z)).collect();
    let bar = (0..traj.zeta.len())
        .min_by(|&i, &j| (traj.zeta[i] - zeta_bar).abs().total_cmp(&(traj.zeta[j] - zeta_bar).abs()))
        .ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let zb = traj.zeta[bar];
    let inside = |i: usize| traj.zeta[i] > zeta_star && traj.zeta[i] < zb;
    let entered = zb > zeta_star && level[bar] <= epsilon;
    let max_level = (0..traj.zeta.len()).filter(|&i| inside(i)).map(|i| level[i]).fold(0.0, f64::max);
    let stayed = max_level <= 2.0 * epsilon;
    let m2 = traj.m * traj.m;
    let modified_energy = (0..traj.zeta.len())
        .filter(|&i| traj.zeta[i] > zeta_star && traj.zeta[i] <= zb)
        .map(|i| {
            let z = traj.zeta[i];
            let e = traj.eta[i];
            (z, level[i] - 0.5 * m2 * (-2.0 * z).exp() * (e + 2.0 * z).powi(2))
        })
        .collect();
    let last_entry = (0..traj.zeta.len()).filter(|&i| traj.zeta[i] > zeta_star && level[i] <= epsilon).max_by(|&i, &j| traj.zeta[i].total_cmp(&traj.zeta[j]));
    let holds_for_every_entry = match last_entry {
        None => true,
        Some(k) => (0..traj.zeta.len())
            .filter(|&i| traj.zeta[i] > zeta_star && traj.zeta[i] < traj.zeta[k])
            .all(|i| level[i] <= 2.0 * epsilon),
    };
    Ok(TrapReport { epsilon, zeta_star, zeta_bar: zb, entered, stayed, max_level, modified_energy, holds_for_every_entry })
}

/// Sup over `[a, b]` of the centred difference `(u(·, λ+h, γ) − u(·, λ−h, γ)) / 2h`.
pub fn lambda_derivative_sup(params: ProblemParams, gamma: f64, h: f64, interval: (f64, f64)) -> Result<f64> {
    let (a, b) = interval;
    if !(h > 0.0 && h < params.lambda) || !(0.0 <= a && a < b) {
        return Err(Error::InvalidInput(format!("need 0 < h < lambda and 0 <= a < b (h = {h}, [{a}, {b}])")));
    }
    let plus = shoot_regular(ProblemParams::new(params.dimension, params.lambda + h)?, gamma, b)?;
    let minus = shoot_regular(ProblemParams::new(params.dimension, params.lambda - h)?, gamma, b)?;
    let pts = merge_points(&plus.scan_points(), &minus.scan_points(), a, b);
    let mut worst: f64 = 0.0;
    for r in std::iter::once(a).chain(pts).chain(std::iter::once(b)) {
        let (Some(x), Some(y)) = (plus.state(r), minus.state(r)) else { continue };
        worst = worst.max(((x[0] - y[0]) / (2.0 * h)).abs());
    }
    Ok(worst)
}
