//! Constant solutions of `u = λ e^u` and the thresholds built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{brent, RootOptions};

/// `1/e`, the largest `λ` admitting a constant solution.
pub const INV_E: f64 = 0.367_879_441_171_442_33;

/// Dimension and parameter of the radial problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dimension: u32,
    pub lambda: f64,
}

impl ProblemParams {
    pub fn new(dimension: u32, lambda: f64) -> Result<Self> {
        check_dimension(dimension)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { dimension, lambda })
    }

    /// `N` as a float.
    pub fn n(&self) -> f64 {
        self.dimension as f64
    }
}

pub(crate) fn check_dimension(n: u32) -> Result<()> {
    if n < 3 {
        Err(Error::UnsupportedDimension { dimension: n })
    } else {
        Ok(())
    }
}

/// The two roots `u_lower <= 1 <= u_upper` of `λ e^u = u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    pub u_lower: f64,
    pub u_upper: f64,
}

fn residual(lambda: f64, u: f64) -> f64 {
    lambda * u.exp() - u
}

/// Solve `λ e^u = u`. The lower root is bracketed in `[0, 1]`, the upper one
/// in `[1, cap]` with `cap` doubled from 50 until the sign changes. Each root
/// must satisfy `|λe^u − u| < tol·max(1, u)`.
pub fn solve_equilibria(lambda: f64, tol: f64) -> Result<EquilibriumPair> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if (lambda - INV_E).abs() < 1e-14 {
        return Ok(EquilibriumPair { u_lower: 1.0, u_upper: 1.0 });
    }
    if lambda > INV_E {
        return Err(Error::NoEquilibrium { lambda });
    }
    let opts = RootOptions::default().xtol(0.0).rtol(f64::EPSILON);
    let h = |u: f64| Ok(residual(lambda, u));
    let lower = brent(h, 0.0, 1.0, opts)?.x;
    let mut cap = 50.0;
    while residual(lambda, cap) <= 0.0 {
        cap *= 2.0;
    }
    let upper = brent(h, 1.0, cap, opts)?.x;
    for u in [lower, upper] {
        // Rounding in λe^u alone is of order u·ε·u, so the check is relative to u.
        let r = residual(lambda, u).abs();
        if r >= tol * u.max(1.0) {
            return Err(Error::PreconditionViolated(format!(
                "equilibrium residual {r:e} at u = {u} exceeds tolerance {tol:e}"
            )));
        }
    }
    Ok(EquilibriumPair { u_lower: lower, u_upper: upper })
}

/// The tabulated `λ*_N`: below it the singular solution stays above the
/// lower equilibrium and oscillates around the upper one.
pub fn lambda_star(n: u32) -> Result<f64> {
    check_dimension(n)?;
    Ok(match n {
        3 => 0.16,
        4 => 0.35,
        5 => 0.36,
        _ => INV_E,
    })
}

/// `f(x) = x² − u̲ (N(e^x − 1 − x) − (N−2)/2 · x(e^x − 1))`.
pub fn pohozaev_f(n: u32, u_lower: f64, x: f64) -> f64 {
    let n = n as f64;
    let em1 = x.exp_m1();
    x * x - u_lower * (n * (em1 - x) - 0.5 * (n - 2.0) * x * em1)
}

/// `f′(x)`.
pub fn pohozaev_f_prime(n: u32, u_lower: f64, x: f64) -> f64 {
    let n = n as f64;
    let em1 = x.exp_m1();
    2.0 * x - u_lower * (n * em1 - 0.5 * (n - 2.0) * (em1 + x * x.exp()))
}

/// `f″(x) = 2 − u̲ (2e^x − (N−2)/2 · x e^x)`.
pub fn pohozaev_f_second(n: u32, u_lower: f64, x: f64) -> f64 {
    let n = n as f64;
    2.0 - u_lower * x.exp() * (2.0 - 0.5 * (n - 2.0) * x)
}

/// `f‴(x) = −u̲ e^x (2 − (N−2)/2 · (1 + x))`.
pub fn pohozaev_f_third(n: u32, u_lower: f64, x: f64) -> f64 {
    let n = n as f64;
    -u_lower * x.exp() * (2.0 - 0.5 * (n - 2.0) * (1.0 + x))
}

/// Minimiser of `f″` over `x >= 0`, located as the root of `f‴`.
pub fn pohozaev_f_second_argmin(n: u32) -> Result<f64> {
    check_dimension(n)?;
    let g = |x: f64| Ok(pohozaev_f_third(n, 1.0, x));
    if g(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    brent(g, 0.0, 10.0, RootOptions::default()).map(|r| r.x)
}

/// Largest `u̲` keeping `f″ > 0` on `(0, ∞)`: `4/(N−2) · e^{−(6−N)/(N−2)}`.
pub fn pohozaev_threshold(n: u32) -> Result<f64> {
    check_dimension(n)?;
    if n >= 6 {
        return Err(Error::NotApplicable(format!(
            "for N = {n} the second derivative is positive for every lower equilibrium below 1"
        )));
    }
    let k = (n - 2) as f64;
    Ok(4.0 / k * (-(6.0 - n as f64) / k).exp())
}

/// `λ = u e^{−u}`, the parameter whose lower equilibrium is `u`.
pub fn lambda_of_lower(u: f64) -> f64 {
    u * (-u).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeDirection {
    MuToLambda,
    LambdaToMu,
}

/// Convert between `λ` and `μ = ū_λ`. `μ → λ` is `μ e^{−μ}`; `λ → μ` is the
/// upper equilibrium.
pub fn mu_lambda_bridge(value: f64, direction: BridgeDirection) -> Result<f64> {
    match direction {
        BridgeDirection::MuToLambda => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidInput(format!("mu must be positive, got {value}")));
            }
            Ok(value * (-value).exp())
        }
        BridgeDirection::LambdaToMu => Ok(solve_equilibria(value, 1e-12)?.u_upper),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Newton on λe^u − u from a good start; independent of the bracketing solver.
    fn newton(lambda: f64, mut u: f64) -> f64 {
        for _ in 0..100 {
            let step = (lambda * u.exp() - u) / (lambda * u.exp() - 1.0);
            u -= step;
            if step.abs() < 1e-16 * u.abs().max(1.0) {
                break;
            }
        }
        u
    }

    #[test]
    fn tangent_case() {
        let p = solve_equilibria(INV_E, 1e-12).unwrap();
        assert_eq!((p.u_lower, p.u_upper), (1.0, 1.0));
    }

    #[test]
    fn lambda_point_one_matches_newton() {
        let p = solve_equilibria(0.1, 1e-12).unwrap();
        assert!((p.u_lower - newton(0.1, 0.1)).abs() < 1e-13);
        assert!((p.u_upper - newton(0.1, 4.0)).abs() < 1e-13);
        assert!((p.u_lower - 0.111_832_559_158_963).abs() < 1e-12);
        assert!((p.u_upper - 3.577_152_063_957_297).abs() < 1e-12);
    }

    #[test]
    fn no_equilibrium_above_inverse_e() {
        assert_eq!(solve_equilibria(0.5, 1e-12), Err(Error::NoEquilibrium { lambda: 0.5 }));
    }

    #[test]
    fn table_values() {
        assert_eq!(lambda_star(3).unwrap(), 0.16);
        assert_eq!(lambda_star(4).unwrap(), 0.35);
        assert_eq!(lambda_star(5).unwrap(), 0.36);
        assert_eq!(lambda_star(7).unwrap(), INV_E);
        assert!(matches!(lambda_star(2), Err(Error::UnsupportedDimension { dimension: 2 })));
    }

    #[test]
    fn pohozaev_value_against_extended_precision() {
        // 3.3221887802138699545539145... from 40-digit arithmetic.
        assert!((pohozaev_f(3, 0.1, 2.0) - 3.322_188_780_213_870).abs() < 1e-12);
        assert_eq!(pohozaev_f(4, 0.3, 0.0), 0.0);
        assert_eq!(pohozaev_f_prime(4, 0.3, 0.0), 0.0);
    }

    #[test]
    fn thresholds() {
        assert!((pohozaev_threshold(3).unwrap() - 0.199_148_273_471_455_8).abs() < 1e-14);
        assert!((pohozaev_threshold(4).unwrap() - 0.735_758_882_342_884_6).abs() < 1e-14);
        assert!((pohozaev_threshold(5).unwrap() - 0.955_375_080_765_052_3).abs() < 1e-14);
        assert!(matches!(pohozaev_threshold(6), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn argmin_of_second_derivative() {
        for n in 3..=5u32 {
            let expect = (6.0 - n as f64) / (n as f64 - 2.0);
            assert!((pohozaev_f_second_argmin(n).unwrap() - expect).abs() < 1e-12);
        }
        assert_eq!(pohozaev_f_second_argmin(8).unwrap(), 0.0);
    }

    #[test]
    fn bridge() {
        assert!((mu_lambda_bridge(1.0, BridgeDirection::MuToLambda).unwrap() - INV_E).abs() < 1e-16);
        let mu = mu_lambda_bridge(1e-4, BridgeDirection::LambdaToMu).unwrap();
        assert!((mu - 11.667_114_532_566_354).abs() < 1e-11);
    }
}
