//! The singular solution `U*_λ`.
//!
//! Near the origin `U*(r) = η(ζ) + 2ζ` with `r = m e^{−ζ}`, and `η` is the
//! fixed point of `η = K[g(η)]` on `[ζ₀, ∞)`, where `K` is the Green's
//! convolution of [`crate::kernel`] and
//! `g(η, ζ) = m²e^{−2ζ}(η + 2ζ) − 2(N−2)(e^η − 1 − η)`.
//! From `r₀ = m e^{−ζ₀}` outwards the radial equation is integrated directly.

use log::debug;
use serde::Serialize;

use crate::equilibria::ProblemParams;
use crate::error::{Error, Result};
use crate::kernel::{apply_operator, convolve_tail, kernel_params, KernelParams, SemiInfiniteGrid, TailModel};
use crate::ode::{integrate, DenseSolution, OdeOptions, Termination};
use crate::profile::{refine_mesh, rhs_second, RadialSolution};
use crate::quad::simpson_uniform;
use crate::roots::{brent, sign_change_roots, RootOptions};

/// Knobs of the fixed-point construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// First `ζ₀`; `ln m + 2` when `None`.
    pub zeta0: Option<f64>,
    /// Grid length in `ζ`.
    pub length: f64,
    pub h: f64,
    /// Radius of the sup-norm ball the iterates must stay in.
    pub ball_radius: f64,
    /// Largest admissible ratio of successive increments.
    pub ratio_limit: f64,
    /// `ζ₀` increment after a failed attempt.
    pub zeta0_step: f64,
    /// Give up once `ζ₀` has been raised by more than this.
    pub zeta0_max_raise: f64,
    pub max_iter: usize,
    /// Keep the `m²e^{−2ζ}(η + 2ζ)` forcing; switching it off leaves the
    /// autonomous problem whose only decaying solution is `η ≡ 0`.
    pub forcing: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            zeta0: None,
            length: 30.0,
            h: 0.01,
            ball_radius: 0.5,
            ratio_limit: 0.5,
            zeta0_step: 1.0,
            zeta0_max_raise: 12.0,
            max_iter: 400,
            forcing: true,
        }
    }
}

/// Converged `η` on `[ζ₀, ζ₀ + length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaProfile {
    pub problem: ProblemParams,
    pub params: KernelParams,
    pub grid: SemiInfiniteGrid,
    pub eta: Vec<f64>,
    pub eta_prime: Vec<f64>,
    pub iterations: usize,
    /// Largest observed ratio of successive sup-distances.
    pub contraction_ratio: f64,
    /// Final sup-distance between iterates.
    pub increment: f64,
    /// Number of `ζ₀` values tried.
    pub attempts: usize,
    pub tail: TailModel,
    forcing: bool,
}

fn forcing_term(p: &KernelParams, zeta: f64, eta: f64, forcing: bool) -> f64 {
    let nonlinear = 2.0 * p.alpha * (eta.exp_m1() - eta);
    if forcing {
        p.m2() * (-2.0 * zeta).exp() * (eta + 2.0 * zeta) - nonlinear
    } else {
        -nonlinear
    }
}

impl EtaProfile {
    pub fn zeta0(&self) -> f64 {
        self.grid.zeta0
    }

    /// `r₀ = m e^{−ζ₀}`, where the direct integration takes over.
    pub fn r0(&self) -> f64 {
        self.params.m * (-self.grid.zeta0).exp()
    }

    /// Smallest radius represented by the grid.
    pub fn r_min(&self) -> f64 {
        self.params.m * (-self.grid.zeta_max).exp()
    }

    /// Right-hand side `g` at node `i`.
    pub fn forcing(&self, i: usize) -> f64 {
        forcing_term(&self.params, self.grid.node(i), self.eta[i], self.forcing)
    }

    /// `η″ = g + (N−2)η′ − 2(N−2)η` at node `i`.
    pub fn eta_second(&self, i: usize) -> f64 {
        let a = self.params.alpha;
        self.forcing(i) + a * self.eta_prime[i] - 2.0 * a * self.eta[i]
    }

    fn hermite(&self, zeta: f64) -> Option<(f64, f64)> {
        let g = &self.grid;
        if !(zeta >= g.zeta0 && zeta <= g.zeta_max) {
            return None;
        }
        let i = (((zeta - g.zeta0) / g.h).floor() as usize).min(g.n - 1);
        let h = g.h;
        let t = (zeta - g.node(i)) / h;
        let (y0, d0, s0) = (self.eta[i], self.eta_prime[i], self.eta_second(i));
        let (y1, d1, s1) = (self.eta[i + 1], self.eta_prime[i + 1], self.eta_second(i + 1));
        let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
        let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let v = y0 * h0 + h * d0 * h1 + h * h * s0 * h2 + h * h * s1 * h3 + h * d1 * h4 + y1 * h5;
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let dh3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let dh4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let dh5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        let dv = (y0 * dh0 + h * d0 * dh1 + h * h * s0 * dh2 + h * h * s1 * dh3 + h * d1 * dh4 + y1 * dh5) / h;
        Some((v, dv))
    }

    /// `η(ζ)` by quintic Hermite interpolation (second derivatives from the equation).
    pub fn eta_at(&self, zeta: f64) -> Option<f64> {
        self.hermite(zeta).map(|p| p.0)
    }

    pub fn eta_prime_at(&self, zeta: f64) -> Option<f64> {
        self.hermite(zeta).map(|p| p.1)
    }

    /// Sup over interior nodes of `|η″ − (N−2)η′ + 2(N−2)η − g|`, with the
    /// operator applied by fourth-order differences.
    pub fn residual_sup(&self) -> f64 {
        let op = apply_operator(&self.params, self.grid.h, &self.eta);
        op.iter()
            .enumerate()
            .map(|(k, v)| (v - self.forcing(k + 2)).abs())
            .fold(0.0, f64::max)
    }
}

enum Attempt {
    Done(EtaProfile),
    Failed(f64),
}

fn picard_attempt(problem: ProblemParams, kp: KernelParams, zeta0: f64, tol: f64, cfg: &PicardConfig, attempts: usize) -> Result<Attempt> {
    let grid = SemiInfiniteGrid::new(zeta0, cfg.length, cfg.h)?;
    let nodes = grid.nodes();
    let mut eta = vec![0.0; grid.len()];
    let mut prev: Option<f64> = None;
    let mut worst_ratio: f64 = 0.0;
    for k in 1..=cfg.max_iter {
        let g: Vec<f64> = nodes.iter().zip(&eta).map(|(&z, &e)| forcing_term(&kp, z, e, cfg.forcing)).collect();
        let conv = match convolve_tail(&kp, &grid, &g) {
            Ok(c) => c,
            Err(Error::TailNotDecaying { .. }) => return Ok(Attempt::Failed(f64::INFINITY)),
            Err(e) => return Err(e),
        };
        let d = conv.eta.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let size = conv.eta.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !d.is_finite() || size > cfg.ball_radius {
            debug!("zeta0 = {zeta0}: iterate left the ball (sup {size:e})");
            return Ok(Attempt::Failed(worst_ratio.max(1.0)));
        }
        if let Some(pd) = prev {
            let floor = 64.0 * f64::EPSILON * size.max(f64::MIN_POSITIVE);
            if pd > floor && d > floor {
                let ratio = d / pd;
                worst_ratio = worst_ratio.max(ratio);
                if ratio >= cfg.ratio_limit {
                    debug!("zeta0 = {zeta0}: ratio {ratio} at iteration {k}");
                    return Ok(Attempt::Failed(ratio));
                }
            }
        }
        eta = conv.eta;
        if d < tol {
            return Ok(Attempt::Done(EtaProfile {
                problem,
                params: kp,
                grid,
                eta,
                eta_prime: conv.eta_prime,
                iterations: k,
                contraction_ratio: worst_ratio,
                increment: d,
                attempts,
                tail: conv.tail,
                forcing: cfg.forcing,
            }));
        }
        prev = Some(d);
    }
    Ok(Attempt::Failed(worst_ratio))
}

/// Fixed point of the Green's-kernel map with default settings.
pub fn picard_solve(problem: ProblemParams, tol: f64) -> Result<EtaProfile> {
    picard_solve_with(problem, tol, &PicardConfig::default())
}

/// Fixed point of the Green's-kernel map. `ζ₀` is raised until the observed
/// ratio of successive increments stays below `ratio_limit` and the iterates
/// stay in the ball.
pub fn picard_solve_with(problem: ProblemParams, tol: f64, cfg: &PicardConfig) -> Result<EtaProfile> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let kp = kernel_params(problem.dimension, problem.lambda)?;
    let start = cfg.zeta0.unwrap_or(kp.m.ln() + 2.0);
    let mut zeta0 = start;
    let mut attempts = 0;
    loop {
        attempts += 1;
        match picard_attempt(problem, kp, zeta0, tol, cfg, attempts)? {
            Attempt::Done(p) => return Ok(p),
            Attempt::Failed(ratio) => {
                zeta0 += cfg.zeta0_step;
                if zeta0 > start + cfg.zeta0_max_raise {
                    return Err(Error::NoContraction { zeta0: zeta0 - cfg.zeta0_step, ratio });
                }
            }
        }
    }
}

/// `f(ζ) = m²/(2(N−1)) · e^{−2ζ}(ζ + (N−2)/(4(N−1)))`, the leading correction
/// to `η`.
pub fn correction_f(p: &KernelParams, zeta: f64) -> f64 {
    let n = p.dimension as f64;
    p.m2() / (2.0 * (n - 1.0)) * (-2.0 * zeta).exp() * (zeta + (n - 2.0) / (4.0 * (n - 1.0)))
}

/// Largest `ζ` with `f(ζ) = level`; `f` decreases beyond its peak at
/// `ζ = 1/2 − (N−2)/(4(N−1))`.
pub fn zeta1_star(p: &KernelParams, level: f64) -> Result<f64> {
    let n = p.dimension as f64;
    let peak = 0.5 - (n - 2.0) / (4.0 * (n - 1.0));
    if correction_f(p, peak) <= level {
        return Err(Error::NotApplicable(format!("f never reaches {level} (max {})", correction_f(p, peak))));
    }
    let mut hi = peak + 1.0;
    while correction_f(p, hi) > level {
        hi += 1.0;
    }
    brent(|z| Ok(correction_f(p, z) - level), peak, hi, RootOptions::default()).map(|r| r.x)
}

/// The constant of the `f(ζ) = Γ` level used to start the sandwich bounds.
pub const GAMMA_LEVEL: f64 = 1.1;

/// `U*` on `[r_min, r_max]`: the `η` grid below `r₀`, the integrated ODE above.
#[derive(Debug, Clone)]
pub struct SingularProfile {
    pub problem: ProblemParams,
    pub source: EtaProfile,
    pub r0: f64,
    ode: DenseSolution<2>,
    pub r_nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
}

/// ODE tolerances used for the outer part of the singular profile.
pub fn singular_ode_options() -> OdeOptions {
    OdeOptions::tol(1e-12, 1e-13).h_max(0.05).max_steps(5_000_000)
}

/// Continue `η` past `r₀ = m e^{−ζ₀}` by integrating the radial equation to `r_max`.
pub fn extend_to_radial(eta: EtaProfile, r_max: f64) -> Result<SingularProfile> {
    let r0 = eta.r0();
    if !(r_max > r0) {
        return Err(Error::InvalidInput(format!("r_max = {r_max} must exceed r0 = {r0}")));
    }
    let problem = eta.problem;
    let (n, lambda) = (problem.n(), problem.lambda);
    let z0 = eta.zeta0();
    let y0 = [eta.eta[0] + 2.0 * z0, -(eta.eta_prime[0] + 2.0) / r0];
    let rhs = |r: f64, y: &[f64; 2]| [y[1], rhs_second(n, lambda, r, y[0], y[1])];
    let ode = integrate(rhs, r0, y0, r_max, singular_ode_options(), |_, y| y[0].abs() > 1e6).map_err(|e| match e {
        Error::StepUnderflow { t, .. } | Error::TooManySteps { t, .. } => Error::BlowupBeforeRmax { r: t, r_max },
        other => other,
    })?;
    if ode.termination == Termination::Stopped {
        return Err(Error::BlowupBeforeRmax { r: ode.t_end(), r_max });
    }

    let m = eta.params.m;
    let mut r_nodes = Vec::new();
    let mut u = Vec::new();
    let mut u_prime = Vec::new();
    for i in (1..eta.grid.len()).rev() {
        let z = eta.grid.node(i);
        let r = m * (-z).exp();
        r_nodes.push(r);
        u.push(eta.eta[i] + 2.0 * z);
        u_prime.push(-(eta.eta_prime[i] + 2.0) / r);
    }
    let k = ((r_max - r0) / 0.01).ceil().max(1.0) as usize;
    for j in 0..=k {
        let r = if j == k { r_max } else { r0 + (r_max - r0) * j as f64 / k as f64 };
        let y = ode.eval(r).expect("inside integrated range");
        r_nodes.push(r);
        u.push(y[0]);
        u_prime.push(y[1]);
    }
    Ok(SingularProfile { problem, source: eta, r0, ode, r_nodes, u, u_prime })
}

/// Picard construction followed by [`extend_to_radial`].
pub fn singular_profile(problem: ProblemParams, r_max: f64) -> Result<SingularProfile> {
    extend_to_radial(picard_solve(problem, 1e-13)?, r_max)
}

impl SingularProfile {
    pub fn kernel(&self) -> &KernelParams {
        &self.source.params
    }

    pub fn r_min(&self) -> f64 {
        self.source.r_min()
    }

    pub fn r_max(&self) -> f64 {
        self.ode.t_end()
    }

    /// `η(ζ) = U*(m e^{−ζ}) − 2ζ` anywhere in the profile.
    pub fn eta_at(&self, zeta: f64) -> Option<f64> {
        if zeta >= self.source.zeta0() {
            return self.source.eta_at(zeta);
        }
        let r = self.kernel().m * (-zeta).exp();
        self.state(r).map(|y| y[0] - 2.0 * zeta)
    }

    /// `η′(ζ) = −r·U*′(r) − 2`.
    pub fn eta_prime_at(&self, zeta: f64) -> Option<f64> {
        if zeta >= self.source.zeta0() {
            return self.source.eta_prime_at(zeta);
        }
        let r = self.kernel().m * (-zeta).exp();
        self.state(r).map(|y| -r * y[1] - 2.0)
    }

    /// `|−u″ − (N−1)/r·u′ + u − λe^u|` from the dense output (`r >= r₀`).
    pub fn ode_residual(&self, r: f64) -> Option<f64> {
        let y = self.ode.eval(r)?;
        let dy = self.ode.eval_derivative(r)?;
        Some((dy[1] - rhs_second(self.problem.n(), self.problem.lambda, r, y[0], y[1])).abs())
    }

    /// `U*(r) + 2 ln r − ln(2(N−2)/λ)`; tends to zero at the origin.
    pub fn asymptotic_defect(&self, r: f64) -> Option<f64> {
        let p = self.problem;
        self.state(r).map(|y| y[0] + 2.0 * r.ln() - (2.0 * (p.n() - 2.0) / p.lambda).ln())
    }
}

impl RadialSolution for SingularProfile {
    fn problem(&self) -> ProblemParams {
        self.problem
    }

    fn domain(&self) -> (f64, f64) {
        (self.r_min(), self.r_max())
    }

    fn state(&self, r: f64) -> Option<[f64; 2]> {
        if r >= self.r0 {
            return self.ode.eval(r);
        }
        let z = (self.kernel().m / r).ln();
        let (e, ep) = self.source.hermite(z)?;
        Some([e + 2.0 * z, -(ep + 2.0) / r])
    }

    fn scan_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.r_nodes.iter().copied().take_while(|&r| r < self.r0).collect();
        pts.extend(refine_mesh(&self.ode.mesh(), self.r0, self.r_max(), 0.01, 2));
        pts
    }

    fn samples(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.r_nodes, &self.u, &self.u_prime)
    }
}

/// `V(r) = ((u′)² − u²)/2 + λe^u`, non-increasing along solutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    /// Largest `V(r_{k+1}) − V(r_k)` (positive means an increase).
    pub max_increase: f64,
    /// Largest increase relative to `max(1, |V(r_k)|)`.
    pub max_relative_increase: f64,
}

pub fn lyapunov_value(lambda: f64, u: f64, up: f64) -> f64 {
    0.5 * (up * up - u * u) + lambda * u.exp()
}

pub fn lyapunov_scan<P: RadialSolution + ?Sized>(profile: &P) -> LyapunovReport {
    let lambda = profile.problem().lambda;
    let (r, u, up) = profile.samples();
    let v: Vec<f64> = u.iter().zip(up).map(|(&u, &p)| lyapunov_value(lambda, u, p)).collect();
    let mut max_increase = f64::NEG_INFINITY;
    let mut max_rel = f64::NEG_INFINITY;
    for w in v.windows(2) {
        let d = w[1] - w[0];
        max_increase = max_increase.max(d);
        max_rel = max_rel.max(d / w[0].abs().max(1.0));
    }
    LyapunovReport { r: r.to_vec(), v, max_increase, max_relative_increase: max_rel }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Min,
    Max,
}

/// Ordered critical radii of `u` and crossings of `u` with a level.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CriticalSet {
    pub critical_radii: Vec<f64>,
    pub kinds: Vec<CriticalKind>,
    pub crossing_radii: Vec<f64>,
    /// Sign changes dropped because the root was not simple (`|u″|` or
    /// `|u′|` below 1e-12 at the refined point).
    pub rejected: Vec<f64>,
}

/// Smallest `|u″|` (resp. `|u′|`) accepted at a critical point (resp. crossing).
pub const SIMPLICITY_GUARD: f64 = 1e-12;

fn refine_roots<P, F>(profile: &P, pts: &[f64], f: F) -> Result<Vec<f64>>
where
    P: RadialSolution + ?Sized,
    F: Fn([f64; 2]) -> f64,
{
    let eval = |r: f64| {
        profile
            .state(r)
            .map(&f)
            .ok_or_else(|| Error::InvalidInput(format!("radius {r} outside the profile")))
    };
    let opts = RootOptions::default().xtol(0.0).rtol(1e-13);
    let roots = sign_change_roots(eval, pts, opts)?;
    let mut xs: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(&last) = xs.last() {
            if (r.x - last).abs() <= 1e-9 * r.x.abs().max(1e-300) {
                continue;
            }
        }
        xs.push(r.x);
    }
    Ok(xs)
}

/// Critical radii and crossings with `level` over the whole profile.
pub fn find_critical_set<P: RadialSolution + ?Sized>(profile: &P, level: f64) -> Result<CriticalSet> {
    let (a, b) = profile.domain();
    find_critical_set_in(profile, level, a, b)
}

/// [`find_critical_set`] restricted to `[a, b]`.
pub fn find_critical_set_in<P: RadialSolution + ?Sized>(profile: &P, level: f64, a: f64, b: f64) -> Result<CriticalSet> {
    let pts: Vec<f64> = profile.scan_points().into_iter().filter(|&r| r > 0.0 && r >= a && r <= b).collect();
    let mut set = CriticalSet::default();
    for r in refine_roots(profile, &pts, |y| y[1])? {
        let upp = profile.second_derivative(r).unwrap_or(0.0);
        if upp.abs() <= SIMPLICITY_GUARD {
            set.rejected.push(r);
            continue;
        }
        set.critical_radii.push(r);
        set.kinds.push(if upp > 0.0 { CriticalKind::Min } else { CriticalKind::Max });
    }
    for r in refine_roots(profile, &pts, |y| y[0] - level)? {
        let up = profile.state(r).map(|y| y[1]).unwrap_or(0.0);
        if up.abs() <= SIMPLICITY_GUARD {
            set.rejected.push(r);
            continue;
        }
        set.crossing_radii.push(r);
    }
    set.rejected.sort_by(f64::total_cmp);
    Ok(set)
}

/// Build `U*` and widen the window (doubling `r_max`, at most `max_doublings`
/// times) until `needed` critical radii are found.
pub fn singular_with_critical_points(problem: ProblemParams, needed: usize, r_max: f64, max_doublings: u32) -> Result<(SingularProfile, CriticalSet)> {
    let eta = picard_solve(problem, 1e-13)?;
    let level = crate::equilibria::solve_equilibria(problem.lambda, 1e-12)?.u_upper;
    let mut window = r_max.max(2.0 * eta.r0());
    for k in 0..=max_doublings {
        let profile = extend_to_radial(eta.clone(), window)?;
        let set = find_critical_set(&profile, level)?;
        if set.critical_radii.len() >= needed {
            return Ok((profile, set));
        }
        if k == max_doublings {
            return Err(Error::NotEnoughCriticalPoints { needed, found: set.critical_radii.len(), r_max: window });
        }
        window *= 2.0;
    }
    unreachable!()
}

/// Samples of `w(r) = r^{(N−1)/2}(u − level)` and the coefficient
/// `(u − λe^u)/(u − level) + (N−1)(N−3)/(4r²)` of the equation it solves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SturmSamples {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub coefficient: Vec<f64>,
}

/// `level` must be an equilibrium (`λe^level = level`); the quotient is then
/// `1 − level·(e^d − 1)/d` with `d = u − level`, continuous through `d = 0`.
pub fn sturm_transform<P: RadialSolution + ?Sized>(profile: &P, level: f64) -> SturmSamples {
    let p = profile.problem();
    let n = p.n();
    let (r, u, _) = profile.samples();
    let mut out = SturmSamples { r: Vec::new(), w: Vec::new(), coefficient: Vec::new() };
    for (&r, &u) in r.iter().zip(u) {
        if r <= 0.0 {
            continue;
        }
        let d = u - level;
        let phi = if d.abs() < 1e-300 { 1.0 } else { d.exp_m1() / d };
        let q = 1.0 - p.lambda * level.exp() * phi;
        out.r.push(r);
        out.w.push(r.powf(0.5 * (n - 1.0)) * d);
        out.coefficient.push(q + (n - 1.0) * (n - 3.0) / (4.0 * r * r));
    }
    out
}

/// `∫_a^b (u′² + u²) r^{N−1} dr` (without the sphere measure), by Simpson in `ln r`.
pub fn weighted_h1<P: RadialSolution + ?Sized>(profile: &P, a: f64, b: f64, points: usize) -> Result<f64> {
    let n = profile.problem().n();
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / (points - 1) as f64;
    let vals = (0..points)
        .map(|k| {
            let r = (la + h * k as f64).exp();
            let [u, up] = profile
                .state(r)
                .ok_or_else(|| Error::ProfileCoverage { need_lo: a, need_hi: b, have_lo: profile.domain().0, have_hi: profile.domain().1 })?;
            Ok((up * up + u * u) * r.powf(n))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(simpson_uniform(&vals, h))
}
