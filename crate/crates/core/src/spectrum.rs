//! Radial Neumann eigenvalues of `−Δ + 1` on a ball, and negative-direction
//! counts of the second variation `∫(|f′|² + (1 − λe^{U*})f²)r^{N−1}dr`
//! around the singular solution.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::check_dimension;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::profile::{refine_mesh, RadialSolution};
use crate::singular::SingularProfile;

/// Area of the unit sphere in `R^N`.
pub fn sphere_area(n: u32) -> f64 {
    let (mut w, start) = if n % 2 == 0 { (2.0 * std::f64::consts::PI, 2) } else { (2.0, 1) };
    let mut k = start;
    while k < n {
        k += 2;
        w *= 2.0 * std::f64::consts::PI / (k as f64 - 2.0);
    }
    w
}

/// Number of zeros of `φ′` in `(0, R]` for `−φ″ − (N−1)/r·φ′ = (Λ − 1)φ`, `φ(0) = 1`.
fn derivative_zero_count(n: u32, radius: f64, lambda: f64) -> Result<usize> {
    let k2 = lambda - 1.0;
    if k2 <= 0.0 {
        return Ok(0);
    }
    let nf = n as f64;
    // Integrate in s = √(Λ−1)·r so the oscillation scale is O(1).
    let k = k2.sqrt();
    let s_end = k * radius;
    let s0 = (1e-4f64).min(0.5 * s_end);
    let y0 = [1.0 - s0 * s0 / (2.0 * nf), -s0 / nf];
    let rhs = |s: f64, y: &[f64; 2]| [y[1], -(nf - 1.0) / s * y[1] - y[0]];
    let sol = integrate(rhs, s0, y0, s_end, OdeOptions::tol(1e-13, 1e-15).h_max(0.05).max_steps(10_000_000), |_, _| false)?;
    let pts = refine_mesh(&sol.mesh(), s0, s_end, 0.02, 4);
    let mut count = 0;
    let mut prev = -1.0;
    for &s in &pts {
        let d = sol.eval(s).expect("inside")[1];
        if d == 0.0 {
            continue;
        }
        if (d > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = d;
    }
    if sol.y_end()[1] == 0.0 {
        count += 1;
    }
    Ok(count)
}

/// First `k` eigenvalues of the radial Neumann problem
/// `−φ″ − (N−1)/r·φ′ + φ = Λφ`, `φ′(0) = φ′(R) = 0`.
///
/// `Λ_i` is the infimum of the `Λ` for which `φ′(·; Λ)` has at least `i − 1`
/// zeros in `(0, R]`, located by bisection on that monotone predicate.
pub fn neumann_radial_eigs(n: u32, radius: f64, k: usize) -> Result<Vec<f64>> {
    check_dimension(n)?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let mut eigs = vec![1.0];
    for i in 2..=k {
        let need = i - 1;
        let mut lo = *eigs.last().expect("nonempty");
        let mut hi = lo + 1.0 / (radius * radius);
        while derivative_zero_count(n, radius, hi)? < need {
            lo = hi;
            hi = 1.0 + 2.0 * (hi - 1.0);
        }
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if derivative_zero_count(n, radius, mid)? >= need {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        eigs.push(0.5 * (lo + hi));
    }
    Ok(eigs)
}

/// Sample of the radial eigenfunction for `Λ` on `[0, R]` (value at `points` uniform nodes).
pub fn neumann_eigenfunction(n: u32, radius: f64, lambda: f64, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dimension(n)?;
    let nf = n as f64;
    let r: Vec<f64> = (0..points).map(|j| radius * j as f64 / (points - 1) as f64).collect();
    let k2 = lambda - 1.0;
    if k2 <= 0.0 {
        return Ok((r, vec![1.0; points]));
    }
    let r0 = (1e-4 / k2.sqrt()).min(0.5 * radius);
    let y0 = [1.0 - k2 * r0 * r0 / (2.0 * nf), -k2 * r0 / nf];
    let rhs = |s: f64, y: &[f64; 2]| [y[1], -(nf - 1.0) / s * y[1] - k2 * y[0]];
    let sol = integrate(rhs, r0, y0, radius, OdeOptions::tol(1e-12, 1e-14), |_, _| false)?;
    let phi = r
        .iter()
        .map(|&x| if x < r0 { 1.0 - k2 * x * x / (2.0 * nf) } else { sol.eval(x).expect("inside")[0] })
        .collect();
    Ok((r, phi))
}

/// Second variation discretized on a uniform grid in `t = ln r` over `[ε, R]`,
/// Dirichlet at `ε`, free at `R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedForm {
    pub dimension: u32,
    pub inner_cutoff: f64,
    pub outer_radius: f64,
    /// Number of intervals; there are `node_count + 1` nodes.
    pub node_count: usize,
    pub log_nodes: Vec<f64>,
    /// `λe^{U*} − 1` at each node.
    pub potential: Vec<f64>,
    pub weight_constant: f64,
}

pub fn assemble_form(profile: &SingularProfile, epsilon: f64, radius: f64, n: usize) -> Result<DiscretizedForm> {
    if !(epsilon > 0.0 && epsilon < radius) || n < 2 {
        return Err(Error::InvalidInput(format!("need 0 < eps < R and n >= 2 (eps = {epsilon}, R = {radius}, n = {n})")));
    }
    let (lo, hi) = profile.domain();
    if epsilon < lo || radius > hi {
        return Err(Error::ProfileCoverage { need_lo: epsilon, need_hi: radius, have_lo: lo, have_hi: hi });
    }
    let (ta, tb) = (epsilon.ln(), radius.ln());
    let log_nodes: Vec<f64> = (0..=n).map(|k| if k == n { tb } else { ta + (tb - ta) * k as f64 / n as f64 }).collect();
    let lambda = profile.problem.lambda;
    let potential = log_nodes
        .iter()
        .map(|&t| {
            let r = if t == ta { epsilon } else if t == tb { radius } else { t.exp() };
            profile.state(r).map(|s| lambda * s[0].exp() - 1.0).ok_or(Error::ProfileCoverage { need_lo: r, need_hi: r, have_lo: lo, have_hi: hi })
        })
        .collect::<Result<_>>()?;
    Ok(DiscretizedForm {
        dimension: profile.problem.dimension,
        inner_cutoff: epsilon,
        outer_radius: radius,
        node_count: n,
        log_nodes,
        potential,
        weight_constant: sphere_area(profile.problem.dimension),
    })
}

impl DiscretizedForm {
    /// Same grid with the potential replaced by `values`.
    pub fn with_potential(&self, values: Vec<f64>) -> Self {
        Self { potential: values, ..self.clone() }
    }

    /// Diagonal and off-diagonal of the symmetric tridiagonal matrix acting on
    /// the free nodes `1..=n`.
    pub fn matrix(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.node_count;
        let a = self.dimension as f64 - 2.0;
        let nf = self.dimension as f64;
        let dt = (self.log_nodes[n] - self.log_nodes[0]) / n as f64;
        // Exact element integral of e^{(N−2)t} over one cell, divided by Δ².
        let cell = |k: usize| (a * self.log_nodes[k]).exp() * (a * dt).exp_m1() / (a * dt * dt);
        let stiff: Vec<f64> = (0..n).map(cell).collect();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for k in 1..=n {
            let half = if k == n { 0.5 } else { 1.0 };
            let mass = half * dt * (-self.potential[k]) * (nf * self.log_nodes[k]).exp();
            let right = if k < n { stiff[k] } else { 0.0 };
            diag[k - 1] = self.weight_constant * (stiff[k - 1] + right + mass);
            if k < n {
                off[k - 1] = -self.weight_constant * stiff[k];
            }
        }
        (diag, off)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InertiaResult {
    pub negative_count: usize,
    pub cutoff: f64,
    pub node_count: usize,
    /// Pivots that came out exactly zero and were shifted to continue.
    pub pivot_breakdowns: usize,
}

/// Negative pivots of the `LDLᵀ` factorization (Sylvester inertia).
pub fn negative_count(form: &DiscretizedForm) -> InertiaResult {
    let (d, e) = form.matrix();
    let scale = d.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut negatives = 0;
    let mut breakdowns = 0;
    let mut p = 0.0;
    for k in 0..d.len() {
        p = if k == 0 { d[0] } else { d[k] - e[k - 1] * e[k - 1] / p };
        if p == 0.0 {
            breakdowns += 1;
            p = 1e-300 * scale;
        }
        if p < 0.0 {
            negatives += 1;
        }
    }
    InertiaResult { negative_count: negatives, cutoff: form.inner_cutoff, node_count: form.node_count, pivot_breakdowns: breakdowns }
}

/// Count with the grid doubled until three consecutive counts agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergedCount {
    pub result: InertiaResult,
    /// `(intervals, count)` for every grid tried.
    pub history: Vec<(usize, usize)>,
    pub converged: bool,
}

pub fn converged_negative_count(profile: &SingularProfile, epsilon: f64, radius: f64, n0: usize, max_doublings: u32) -> Result<ConvergedCount> {
    let mut history = Vec::new();
    let mut n = n0.max(2);
    let mut last = None;
    for _ in 0..=max_doublings {
        let res = negative_count(&assemble_form(profile, epsilon, radius, n)?);
        history.push((n, res.negative_count));
        let h = history.len();
        let converged = h >= 3 && history[h - 1].1 == history[h - 2].1 && history[h - 2].1 == history[h - 3].1;
        last = Some(res);
        if converged {
            return Ok(ConvergedCount { result: last.expect("set"), history, converged: true });
        }
        n *= 2;
    }
    Ok(ConvergedCount { result: last.expect("at least one grid"), history, converged: false })
}

/// Default starting grid: 40 intervals per unit of `ln r`.
pub fn default_intervals(epsilon: f64, radius: f64) -> usize {
    ((radius / epsilon).ln() * 40.0).ceil().max(16.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderEntry {
    pub epsilon: f64,
    pub nodes: usize,
    pub negative_count: usize,
    pub converged: bool,
    /// Count unchanged after one more doubling of the final grid.
    pub stable_under_doubling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MorseReport {
    #[serde(rename = "N")]
    pub dimension: u32,
    pub lambda: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub ladder: Vec<LadderEntry>,
}

impl MorseReport {
    pub fn strictly_increasing(&self) -> bool {
        self.ladder.windows(2).all(|w| w[1].negative_count > w[0].negative_count)
    }

    /// Count increments between consecutive rungs.
    pub fn increments(&self) -> Vec<i64> {
        self.ladder.windows(2).map(|w| w[1].negative_count as i64 - w[0].negative_count as i64).collect()
    }
}

/// Negative counts along a decreasing list of cutoffs (computed in parallel).
pub fn morse_ladder(profile: &SingularProfile, radius: f64, epsilons: &[f64]) -> Result<MorseReport> {
    if profile.problem.dimension == 10 {
        return Err(Error::UnsupportedBorderline);
    }
    let ladder = epsilons
        .par_iter()
        .map(|&eps| {
            let c = converged_negative_count(profile, eps, radius, default_intervals(eps, radius), 8)?;
            let n = c.result.node_count;
            let again = negative_count(&assemble_form(profile, eps, radius, 2 * n)?);
            Ok(LadderEntry {
                epsilon: eps,
                nodes: n,
                negative_count: c.result.negative_count,
                converged: c.converged,
                stable_under_doubling: again.negative_count == c.result.negative_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MorseReport { dimension: profile.problem.dimension, lambda: profile.problem.lambda, radius, ladder })
}

/// A function sampled on a grid together with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
}

/// `f_j(r) = r^{−(N−2)/2} sin(ε₀ ln r / 2)` on `[r_{j+1}, r_j]`, `r_j = e^{−2πj/ε₀}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyFunction {
    pub j: u32,
    pub eps0: f64,
    pub dimension: u32,
    pub r_inner: f64,
    pub r_outer: f64,
    pub samples: SampledFunction,
}

pub fn hardy_radius(j: u32, eps0: f64) -> f64 {
    (-2.0 * std::f64::consts::PI * j as f64 / eps0).exp()
}

/// Value and derivative of the oscillating Euler solution at `r`.
pub fn hardy_value(n: u32, eps0: f64, r: f64) -> (f64, f64) {
    let a = 0.5 * (n as f64 - 2.0);
    let l = r.ln();
    let (s, c) = (0.5 * eps0 * l).sin_cos();
    let p = r.powf(-a);
    (p * s, p / r * (0.5 * eps0 * c - a * s))
}

/// Sampled `f_j` with `points` nodes uniform in `ln r`.
pub fn hardy_test_function(j: u32, eps0: f64, n: u32, points: usize) -> Result<HardyFunction> {
    check_dimension(n)?;
    if n >= 10 {
        return Err(Error::NotApplicable(format!("oscillating test functions need 3 <= N <= 9, got N = {n}")));
    }
    if !(eps0 > 0.0) || points < 3 {
        return Err(Error::InvalidInput(format!("need eps0 > 0 and at least 3 points (eps0 = {eps0}, points = {points})")));
    }
    let (ri, ro) = (hardy_radius(j + 1, eps0), hardy_radius(j, eps0));
    let (ta, tb) = (ri.ln(), ro.ln());
    let r: Vec<f64> = (0..points)
        .map(|k| match k {
            0 => ri,
            _ if k == points - 1 => ro,
            _ => (ta + (tb - ta) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect();
    let (mut f, f_prime): (Vec<f64>, Vec<f64>) = r.iter().map(|&x| hardy_value(n, eps0, x)).unzip();
    // The end points are zeros of the sine; drop the rounding residue.
    f[0] = 0.0;
    f[points - 1] = 0.0;
    Ok(HardyFunction { j, eps0, dimension: n, r_inner: ri, r_outer: ro, samples: SampledFunction { r, f, f_prime } })
}

/// Largest `ε₀` with `λe^{U*} − 1 ≥ ((N−2)²/4 + ε₀²)/r²` at every node of the
/// inner `η` grid (`r ≤ r₀`), where `λe^{U*}r² = 2(N−2)e^η`.
pub fn choose_eps0(profile: &SingularProfile) -> Result<f64> {
    let n = profile.problem.dimension;
    let a = n as f64 - 2.0;
    let eta = &profile.source;
    let m = eta.params.m;
    let mut best = f64::INFINITY;
    for (i, &e) in eta.eta.iter().enumerate() {
        let r = m * (-eta.grid.node(i)).exp();
        best = best.min(2.0 * a * e.exp() - r * r - 0.25 * a * a);
    }
    if !(best > 0.0) {
        return Err(Error::NotApplicable(format!("potential stays below the Hardy constant (margin {best}) for N = {n}")));
    }
    Ok(best.sqrt())
}

/// `J(f)` and its split `−(3/4)ε₀² ∫f²r^{N−3}dr + slack` for a test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JReport {
    pub value: f64,
    pub hardy_term: f64,
    /// `∫(1 − λe^{U*} + ((N−2)²/4 + ε₀²)/r²)f² r^{N−1}dr`, nonpositive when `ε₀` is admissible.
    pub slack: f64,
}

/// `∫(f′² + (1 − λe^{U*})f²)r^{N−1}dr` by the trapezoid rule in `ln r`.
pub fn evaluate_j(f: &SampledFunction, profile: &SingularProfile) -> Result<f64> {
    let integrand = |k: usize| -> Result<f64> {
        let r = f.r[k];
        let u = profile.state(r).ok_or_else(|| {
            let (lo, hi) = profile.domain();
            Error::ProfileCoverage { need_lo: r, need_hi: r, have_lo: lo, have_hi: hi }
        })?[0];
        let p = 1.0 - profile.problem.lambda * u.exp();
        Ok((f.f_prime[k].powi(2) + p * f.f[k].powi(2)) * r.powf(profile.problem.n()))
    };
    log_trapezoid(f, integrand)
}

fn log_trapezoid(f: &SampledFunction, mut g: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    let mut prev = g(0)?;
    for k in 1..f.r.len() {
        let cur = g(k)?;
        sum += 0.5 * (f.r[k].ln() - f.r[k - 1].ln()) * (prev + cur);
        prev = cur;
    }
    Ok(sum)
}

pub fn j_report(h: &HardyFunction, profile: &SingularProfile) -> Result<JReport> {
    let value = evaluate_j(&h.samples, profile)?;
    let nf = profile.problem.n();
    let a2 = 0.25 * (nf - 2.0).powi(2);
    let s = &h.samples;
    let weighted = log_trapezoid(s, |k| Ok(s.f[k].powi(2) * s.r[k].powf(nf - 2.0)))?;
    let slack = log_trapezoid(s, |k| {
        let r = s.r[k];
        let u = profile.state(r).ok_or(Error::ProfileCoverage { need_lo: r, need_hi: r, have_lo: profile.r_min(), have_hi: profile.r_max() })?[0];
        let q = 1.0 - profile.problem.lambda * u.exp() + (a2 + h.eps0 * h.eps0) / (r * r);
        Ok(q * s.f[k].powi(2) * r.powf(nf))
    })?;
    Ok(JReport { value, hardy_term: -0.75 * h.eps0 * h.eps0 * weighted, slack })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn first_eigenvalue_is_one() {
        assert_eq!(neumann_radial_eigs(5, 2.0, 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn hardy_end_points_vanish() {
        let h = hardy_test_function(2, 1.3, 3, 50).unwrap();
        assert_eq!(h.samples.f[0], 0.0);
        assert_eq!(*h.samples.f.last().unwrap(), 0.0);
        assert!(hardy_value(3, 1.3, h.r_inner).0.abs() < 1e-12);
    }

    #[test]
    fn zero_potential_has_no_negatives() {
        let form = DiscretizedForm {
            dimension: 3,
            inner_cutoff: 1e-3,
            outer_radius: 1.0,
            node_count: 100,
            log_nodes: (0..=100).map(|k| (1e-3f64).ln() * (1.0 - k as f64 / 100.0)).collect(),
            potential: vec![0.0; 101],
            weight_constant: sphere_area(3),
        };
        assert_eq!(negative_count(&form).negative_count, 0);
    }
}
