//! Bracketed scalar root finding.
//!
//! Both solvers keep a sign-changing bracket at every iteration, so an
//! accepted root always comes with endpoints of opposite sign. Callers pass
//! fallible closures because most of the functions we solve (critical radii
//! as functions of the parameter) are themselves the output of a numerical
//! construction that can fail.

use crate::error::{Error, Result};

/// Stopping rule for [`bisect`] and [`brent`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Absolute tolerance on the abscissa.
    pub xtol: f64,
    /// Relative tolerance on the abscissa.
    pub rtol: f64,
    /// Stop as soon as `|f(x)| <= ftol`.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-14,
            rtol: 4.0 * f64::EPSILON,
            ftol: 0.0,
            max_iter: 200,
        }
    }
}

impl RootOptions {
    pub fn xtol(mut self, xtol: f64) -> Self {
        self.xtol = xtol;
        self
    }

    pub fn rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn ftol(mut self, ftol: f64) -> Self {
        self.ftol = ftol;
        self
    }

    fn width_ok(&self, a: f64, b: f64) -> bool {
        (b - a).abs() <= self.xtol + self.rtol * a.abs().max(b.abs())
    }
}

/// A located root together with the final bracket that certifies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    /// Final bracket; `f` has opposite (or zero) signs at the two ends.
    pub bracket: (f64, f64),
    pub f_bracket: (f64, f64),
    pub iterations: usize,
}

fn opposite(fa: f64, fb: f64) -> bool {
    fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0)
}

fn check_bracket(a: f64, b: f64, fa: f64, fb: f64) -> Result<()> {
    if !(fa.is_finite() && fb.is_finite()) || !opposite(fa, fb) {
        return Err(Error::NoRootInBracket {
            lo: a.min(b),
            hi: a.max(b),
            f_lo: if a <= b { fa } else { fb },
            f_hi: if a <= b { fb } else { fa },
        });
    }
    Ok(())
}

/// Plain bisection on a sign-changing bracket.
pub fn bisect<F>(mut f: F, a: f64, b: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    check_bracket(a, b, fa, fb)?;
    for it in 0..opts.max_iter {
        if fa == 0.0 {
            return Ok(Root { x: a, fx: fa, bracket: (a, b), f_bracket: (fa, fb), iterations: it });
        }
        if fb == 0.0 {
            return Ok(Root { x: b, fx: fb, bracket: (a, b), f_bracket: (fa, fb), iterations: it });
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b || opts.width_ok(a, b) {
            break;
        }
        let fm = f(m)?;
        if fm.abs() <= opts.ftol {
            return Ok(Root { x: m, fx: fm, bracket: (a, b), f_bracket: (fa, fb), iterations: it + 1 });
        }
        if opposite(fa, fm) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    let (x, fx) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    Ok(Root { x, fx, bracket: (a, b), f_bracket: (fa, fb), iterations: opts.max_iter })
}

/// Brent's method (inverse quadratic interpolation safeguarded by bisection).
pub fn brent<F>(mut f: F, a: f64, b: f64, opts: RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut a = a;
    let mut b = b;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    check_bracket(a, b, fa, fb)?;
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for it in 0..opts.max_iter {
        if fb != 0.0 && fc != 0.0 && (fb < 0.0) == (fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * (opts.xtol + opts.rtol * b.abs());
        let m = 0.5 * (c - b);
        if fb == 0.0 || m.abs() <= tol || fb.abs() <= opts.ftol {
            let (lo, hi, flo, fhi) = if b <= c { (b, c, fb, fc) } else { (c, b, fc, fb) };
            return Ok(Root { x: b, fx: fb, bracket: (lo, hi), f_bracket: (flo, fhi), iterations: it });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite function value at {b}")));
        }
    }
    let (lo, hi, flo, fhi) = if b <= c { (b, c, fb, fc) } else { (c, b, fc, fb) };
    Ok(Root { x: b, fx: fb, bracket: (lo, hi), f_bracket: (flo, fhi), iterations: opts.max_iter })
}

/// Locate every sign change of `f` over the ordered sample points `xs` and
/// refine each one with [`brent`]. Exact zeros at sample points are reported
/// once.
pub fn sign_change_roots<F>(mut f: F, xs: &[f64], opts: RootOptions) -> Result<Vec<Root>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    if xs.len() < 2 {
        return Ok(roots);
    }
    let mut x0 = xs[0];
    let mut f0 = f(x0)?;
    for &x1 in &xs[1..] {
        let f1 = f(x1)?;
        if f0 == 0.0 {
            roots.push(Root { x: x0, fx: 0.0, bracket: (x0, x0), f_bracket: (0.0, 0.0), iterations: 0 });
        } else if f1 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            roots.push(brent(&mut f, x0, x1, opts)?);
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt2() {
        let r = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-14);
        assert!(opposite(r.f_bracket.0, r.f_bracket.1));
    }

    #[test]
    fn bisect_matches_brent() {
        let f = |x: f64| Ok(x.cos() - x);
        let a = bisect(f, 0.0, 1.0, RootOptions::default()).unwrap();
        let b = brent(f, 0.0, 1.0, RootOptions::default()).unwrap();
        assert!((a.x - b.x).abs() < 1e-14);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let err = brent(|x| Ok(x * x + 1.0), -1.0, 1.0, RootOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoRootInBracket { .. }));
    }

    #[test]
    fn errors_from_the_function_propagate() {
        let err = bisect(
            |x| if x > 0.5 { Err(Error::InvalidInput("boom".into())) } else { Ok(x - 0.7) },
            0.0,
            1.0,
            RootOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn sign_change_scan_finds_all_sine_zeros() {
        let xs: Vec<f64> = (0..=1000).map(|k| 0.5 + k as f64 * 0.01).collect();
        let roots = sign_change_roots(|x| Ok(x.sin()), &xs, RootOptions::default()).unwrap();
        let found: Vec<f64> = roots.iter().map(|r| r.x).collect();
        let pi = std::f64::consts::PI;
        assert_eq!(found.len(), 3);
        for (k, x) in found.iter().enumerate() {
            assert!((x - (k + 1) as f64 * pi).abs() < 1e-12);
        }
    }
}
