//! Radii of critical points as functions of `λ` (and `γ`), the parameters
//! `λ^i` where the `i`-th critical radius of `U*_λ` hits a prescribed `R`, and
//! the branch `γ ↦ λ(γ)` of regular solutions with `r^i_{λ,γ} = R`.

use serde::Serialize;

use crate::equilibria::{lambda_star, mu_lambda_bridge, solve_equilibria, BridgeDirection, ProblemParams};
use crate::error::{Error, Result};
use crate::profile::RadialSolution;
use crate::roots::{brent, RootOptions};
use crate::shooting::{count_zeros, shoot_regular};
use crate::singular::{find_critical_set_in, singular_with_critical_points};

/// Initial window for critical-point searches; doubled up to `2^10` times.
pub const INITIAL_WINDOW: f64 = 10.0;
pub const MAX_DOUBLINGS: u32 = 10;
/// Lowest `λ` tried when bracketing `λ^i` from below.
pub const LAMBDA_FLOOR: f64 = 1e-60;
/// Band around `λ^i` inside which `λ(γ) − λ^i` has no sign.
pub const DEAD_BAND: f64 = 1e-10;

/// `R^i_λ`, the `i`-th critical radius of `U*_λ` (`i >= 1`).
pub fn r_of_lambda(n: u32, i: usize, lambda: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidInput("critical index starts at 1".into()));
    }
    let (_, set) = singular_with_critical_points(ProblemParams::new(n, lambda)?, i, INITIAL_WINDOW, MAX_DOUBLINGS)?;
    Ok(set.critical_radii[i - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaTarget {
    #[serde(rename = "N")]
    pub dimension: u32,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "i")]
    pub index_i: usize,
    pub lambda_i: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
}

/// Reference parameter `λ̃ = λ*_N / 2`.
pub fn reference_lambda(n: u32) -> Result<f64> {
    Ok(0.5 * lambda_star(n)?)
}

/// Smallest `i` with `R^i_{λ̃} > R`.
pub fn i_star(n: u32, radius: f64) -> Result<usize> {
    let problem = ProblemParams::new(n, reference_lambda(n)?)?;
    let mut needed = 1;
    loop {
        let (_, set) = singular_with_critical_points(problem, needed, INITIAL_WINDOW.max(2.0 * radius), MAX_DOUBLINGS)?;
        if let Some(k) = set.critical_radii.iter().position(|&r| r > radius) {
            return Ok(k + 1);
        }
        needed = set.critical_radii.len() + 1;
    }
}

/// `λ^i` with `R^i_{λ^i} = R`, searched in `(floor, λ̃]`.
pub fn find_lambda_i(n: u32, radius: f64, i: usize) -> Result<LambdaTarget> {
    find_lambda_i_with_floor(n, radius, i, LAMBDA_FLOOR)
}

pub fn find_lambda_i_with_floor(n: u32, radius: f64, i: usize, floor: f64) -> Result<LambdaTarget> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let lt = reference_lambda(n)?;
    let star = i_star(n, radius)?;
    if i < star {
        return Err(Error::PreconditionViolated(format!("index {i} is below i* = {star} for N = {n}, R = {radius}")));
    }
    let miss = |l: f64| r_of_lambda(n, i, l).map(|r| r - radius);
    let hi = lt;
    if miss(hi)? <= 0.0 {
        return Err(Error::BracketFailure(format!("R^{i} at the reference lambda {lt} does not exceed {radius}")));
    }
    let mut lo = 0.5 * hi;
    let mut upper = hi;
    loop {
        if lo < floor {
            return Err(Error::BracketFailure(format!("R^{i}_lambda stays above {radius} down to lambda = {floor}")));
        }
        if miss(lo)? < 0.0 {
            break;
        }
        upper = lo;
        lo *= 0.5;
    }
    let root = brent(miss, lo, upper, RootOptions::default().xtol(0.0).rtol(1e-15).ftol(1e-11))?;
    Ok(LambdaTarget { dimension: n, radius, index_i: i, lambda_i: root.x, bracket: (lo, upper), residual: root.fx.abs() })
}

/// `i`-th critical point of the regular solution `u(·, γ)`.
pub fn r_of(params: ProblemParams, gamma: f64, i: usize) -> Result<f64> {
    r_of_from(params, gamma, i, INITIAL_WINDOW)
}

pub fn r_of_from(params: ProblemParams, gamma: f64, i: usize, window: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidInput("critical index starts at 1".into()));
    }
    let level = solve_equilibria(params.lambda, 1e-12)?.u_upper;
    let mut w = window;
    let mut found = 0;
    for _ in 0..=MAX_DOUBLINGS {
        let prof = shoot_regular(params, gamma, w)?;
        let set = find_critical_set_in(&prof, level, prof.r_start, w)?;
        found = set.critical_radii.len();
        if found >= i {
            return Ok(set.critical_radii[i - 1]);
        }
        w *= 2.0;
    }
    Err(Error::NotEnoughCriticalPoints { needed: i, found, r_max: w / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSample {
    pub gamma: f64,
    pub lambda: f64,
    pub index_i: usize,
    pub residual: f64,
}

/// Number of samples used to scan a bracket for sign changes.
pub const BRACKET_SCAN: usize = 8;

fn miss_at(n: u32, radius: f64, i: usize, gamma: f64, lambda: f64) -> Result<f64> {
    Ok(r_of(ProblemParams::new(n, lambda)?, gamma, i)? - radius)
}

/// `λ` in `bracket` with `r^i_{λ,γ} = R`.
pub fn branch_solve(n: u32, radius: f64, i: usize, gamma: f64, bracket: (f64, f64)) -> Result<BranchSample> {
    let (a, b) = bracket;
    if !(a > 0.0 && a < b) {
        return Err(Error::InvalidInput(format!("bad bracket [{a}, {b}]")));
    }
    let xs: Vec<f64> = (0..=BRACKET_SCAN).map(|k| a + (b - a) * k as f64 / BRACKET_SCAN as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&l| miss_at(n, radius, i, gamma, l)).collect::<Result<_>>()?;
    let changes: Vec<usize> = (0..BRACKET_SCAN).filter(|&k| fs[k] == 0.0 || (fs[k] < 0.0) != (fs[k + 1] < 0.0)).collect();
    match changes.len() {
        0 => Err(Error::NoRootInBracket { lo: a, hi: b, f_lo: fs[0], f_hi: fs[BRACKET_SCAN] }),
        1 => solve_in(n, radius, i, gamma, xs[changes[0]], xs[changes[0] + 1]),
        count => Err(Error::MultipleRoots { lo: a, hi: b, count }),
    }
}

fn solve_in(n: u32, radius: f64, i: usize, gamma: f64, lo: f64, hi: f64) -> Result<BranchSample> {
    let root = brent(|l| miss_at(n, radius, i, gamma, l), lo, hi, RootOptions::default().xtol(0.0).rtol(1e-15).ftol(1e-11))?;
    Ok(BranchSample { gamma, lambda: root.x, index_i: i, residual: root.fx.abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub lambda_i: f64,
    pub sign_changes: usize,
    /// `|λ(γ) − λ^i|` at the interior local extrema of the trace.
    pub extremum_amplitudes: Vec<f64>,
    pub amplitudes_non_increasing: bool,
}

pub fn oscillation_report(trace: &[BranchSample], lambda_i: f64) -> OscillationReport {
    let d: Vec<f64> = trace.iter().map(|s| s.lambda - lambda_i).collect();
    let mut sign_changes = 0;
    let mut last = 0.0;
    for &v in &d {
        if v.abs() <= DEAD_BAND {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            sign_changes += 1;
        }
        last = v;
    }
    let extremum_amplitudes: Vec<f64> = d
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .map(|w| w[1].abs())
        .collect();
    let amplitudes_non_increasing = extremum_amplitudes.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    OscillationReport { lambda_i, sign_changes, extremum_amplitudes, amplitudes_non_increasing }
}

/// Continue the branch along `gammas`, each step bracketed around the previous `λ`.
pub fn branch_trace(n: u32, radius: f64, i: usize, gammas: &[f64], lambda_i: f64) -> Result<(Vec<BranchSample>, OscillationReport)> {
    let cap = lambda_star(n)?.min(crate::equilibria::INV_E);
    let mut out: Vec<BranchSample> = Vec::with_capacity(gammas.len());
    let mut center = lambda_i;
    let mut width = 0.05 * lambda_i;
    for &g in gammas {
        if let Some(prev) = out.last() {
            if g <= prev.gamma {
                return Err(Error::InvalidInput("gamma grid must be strictly increasing".into()));
            }
        }
        let sample = continue_one(n, radius, i, g, center, width, cap)?;
        width = (2.0 * (sample.lambda - center).abs()).max(0.01 * sample.lambda);
        center = sample.lambda;
        out.push(sample);
    }
    let report = oscillation_report(&out, lambda_i);
    Ok((out, report))
}

/// Trace that skips the `γ` values where no branch point exists instead of failing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTrace {
    pub samples: Vec<BranchSample>,
    /// `γ` values with no `λ` in the admissible range satisfying `r^i_{λ,γ} = R`.
    pub gaps: Vec<f64>,
    pub report: OscillationReport,
}

/// Continued from the top of the grid downwards, so the trace stays on the
/// sheet that oscillates about `λ^i` and stops at the fold instead of
/// switching to the sheet that leaves towards `λ → 0`. Samples and gaps are
/// returned in ascending `γ`.
pub fn branch_trace_with_gaps(n: u32, radius: f64, i: usize, gammas: &[f64], lambda_i: f64) -> Result<BranchTrace> {
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("gamma grid must be strictly increasing".into()));
    }
    let cap = lambda_star(n)?.min(crate::equilibria::INV_E);
    let mut samples: Vec<BranchSample> = Vec::with_capacity(gammas.len());
    let mut gaps = Vec::new();
    let mut center = lambda_i;
    let mut width = 0.05 * lambda_i;
    for &g in gammas.iter().rev() {
        match continue_one(n, radius, i, g, center, width, cap) {
            Ok(sample) => {
                width = (2.0 * (sample.lambda - center).abs()).max(0.01 * sample.lambda);
                center = sample.lambda;
                samples.push(sample);
            }
            Err(Error::NoRootInBracket { .. }) => gaps.push(g),
            Err(e) => return Err(e),
        }
    }
    samples.reverse();
    gaps.reverse();
    let report = oscillation_report(&samples, lambda_i);
    Ok(BranchTrace { samples, gaps, report })
}

fn continue_one(n: u32, radius: f64, i: usize, gamma: f64, center: f64, width: f64, cap: f64) -> Result<BranchSample> {
    let mut w = width;
    while w < center {
        match branch_solve(n, radius, i, gamma, (center - w, (center + w).min(cap))) {
            Ok(s) => return Ok(s),
            Err(Error::MultipleRoots { .. }) => break,
            Err(Error::NoRootInBracket { .. }) | Err(Error::NotEnoughCriticalPoints { .. }) => w *= 2.0,
            Err(e) => return Err(e),
        }
    }
    // Local brackets failed or were ambiguous: take the root nearest to the
    // previous λ (in ln λ) among all roots on the admissible range.
    let roots = branch_lambdas(n, radius, i, gamma, (BRANCH_FLOOR, cap))?;
    roots
        .into_iter()
        .min_by(|a, b| (a.lambda / center).ln().abs().total_cmp(&(b.lambda / center).ln().abs()))
        .ok_or_else(|| Error::NoRootInBracket { lo: BRANCH_FLOOR, hi: cap, f_lo: f64::NAN, f_hi: f64::NAN })
}

/// Lowest `λ` considered by the branch scans.
pub const BRANCH_FLOOR: f64 = 1e-12;
/// Scan points per decade of `λ` in [`branch_lambdas`].
pub const SCAN_PER_DECADE: usize = 10;

/// Every `λ` in `range` with `r^i_{λ,γ} = R` detected by a logarithmic scan;
/// a regular solution with fewer than `i` critical points counts as `r^i = ∞`.
pub fn branch_lambdas(n: u32, radius: f64, i: usize, gamma: f64, range: (f64, f64)) -> Result<Vec<BranchSample>> {
    let (a, b) = range;
    if !(a > 0.0 && a < b) {
        return Err(Error::InvalidInput(format!("bad range [{a}, {b}]")));
    }
    let k = ((b / a).log10() * SCAN_PER_DECADE as f64).ceil().max(2.0) as usize;
    let xs: Vec<f64> = (0..=k).map(|j| if j == k { b } else { a * (b / a).powf(j as f64 / k as f64) }).collect();
    let fs: Vec<f64> = xs
        .iter()
        .map(|&l| match miss_at(n, radius, i, gamma, l) {
            Err(Error::NotEnoughCriticalPoints { .. }) => Ok(f64::INFINITY),
            other => other,
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for j in 0..k {
        if fs[j].is_finite() && fs[j + 1].is_finite() && (fs[j] == 0.0 || (fs[j] < 0.0) != (fs[j + 1] < 0.0)) {
            out.push(solve_in(n, radius, i, gamma, xs[j], xs[j + 1])?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuPlanePoint {
    pub gamma: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `u(0)` in units of `μ`.
    pub u0: f64,
}

/// Map branch samples to `(μ, u(0)/μ)` with `μ = ū_λ`.
pub fn export_mu_plane(trace: &[BranchSample]) -> Result<Vec<MuPlanePoint>> {
    trace
        .iter()
        .map(|s| {
            let mu = mu_lambda_bridge(s.lambda, BridgeDirection::LambdaToMu)?;
            Ok(MuPlanePoint { gamma: s.gamma, lambda: s.lambda, mu, u0: s.gamma / mu })
        })
        .collect()
}

/// Zeros of `u(·, γ)/μ − 1` on `(0, R)` for one branch sample.
pub fn mu_crossings(n: u32, radius: f64, sample: &BranchSample) -> Result<usize> {
    let params = ProblemParams::new(n, sample.lambda)?;
    let mu = mu_lambda_bridge(sample.lambda, BridgeDirection::LambdaToMu)?;
    let prof = shoot_regular(params, sample.gamma, radius)?;
    let pts = prof.scan_points();
    let z = count_zeros(|r| prof.state(r).map(|s| (s[0] - mu, s[1])), &pts, (0.0, radius))?;
    Ok(z.count)
}

/// Crossings of `U*_λ` with `ū_λ` on `(0, R)`.
pub fn singular_crossings(n: u32, lambda: f64, radius: f64) -> Result<usize> {
    let (_, set) = singular_with_critical_points(ProblemParams::new(n, lambda)?, 1, INITIAL_WINDOW.max(2.0 * radius), MAX_DOUBLINGS)?;
    Ok(set.crossing_radii.iter().filter(|&&r| r < radius).count())
}

/// Difference quotients `|R^i_{λ+h} − R^i_{λ−h}| / 2h` for each `h`.
pub fn lipschitz_estimates(n: u32, i: usize, lambda: f64, steps: &[f64]) -> Result<Vec<f64>> {
    steps
        .iter()
        .map(|&h| Ok((r_of_lambda(n, i, lambda + h)? - r_of_lambda(n, i, lambda - h)?).abs() / (2.0 * h)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(gamma: f64, lambda: f64) -> BranchSample {
        BranchSample { gamma, lambda, index_i: 1, residual: 0.0 }
    }

    #[test]
    fn empty_trace_has_no_sign_changes() {
        let r = oscillation_report(&[], 0.1);
        assert_eq!(r.sign_changes, 0);
    }

    #[test]
    fn dead_band_suppresses_jitter() {
        let t = [s(1.0, 0.1 + 1e-3), s(2.0, 0.1 - 1e-12), s(3.0, 0.1 + 1e-3), s(4.0, 0.1 - 1e-3)];
        assert_eq!(oscillation_report(&t, 0.1).sign_changes, 1);
    }

    #[test]
    fn tangent_sample_maps_to_unit_mu() {
        let p = export_mu_plane(&[s(3.0, crate::equilibria::INV_E)]).unwrap();
        assert_eq!(p[0].mu, 1.0);
        assert_eq!(p[0].u0, 3.0);
    }
}
