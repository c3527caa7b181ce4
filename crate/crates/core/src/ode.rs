//! Adaptive Dormand–Prince 5(4) integration with continuous output.
//!
//! States are fixed-size arrays; every problem in this crate is a planar
//! system. The integrator only runs forward (`t_end > t0`).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and budgets for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest admissible step; defaults to the whole interval.
    pub h_max: Option<f64>,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: None,
            h_init: None,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = Some(h);
        self
    }

    pub fn h_init(mut self, h: f64) -> Self {
        self.h_init = Some(h);
        self
    }

    pub fn max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }
}

#[derive(Debug, Clone)]
struct Segment<const D: usize> {
    t: f64,
    h: f64,
    rc: [[f64; D]; 5],
}

/// Why integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached `t_end`.
    Completed,
    /// The stop predicate fired at the end of an accepted step.
    Stopped,
}

/// Accepted steps plus the quartic interpolant on each of them.
#[derive(Debug, Clone)]
pub struct DenseSolution<const D: usize> {
    segments: Vec<Segment<D>>,
    t_start: f64,
    t_last: f64,
    y_last: [f64; D],
    pub termination: Termination,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const D: usize> DenseSolution<D> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    /// End of the integrated range (`t_end` unless stopped early).
    pub fn t_end(&self) -> f64 {
        self.t_last
    }

    pub fn y_end(&self) -> [f64; D] {
        self.y_last
    }

    /// Step boundaries, including both ends.
    pub fn mesh(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.segments.iter().map(|s| s.t).collect();
        ts.push(self.t_last);
        ts
    }

    fn locate(&self, t: f64) -> Option<&Segment<D>> {
        if self.segments.is_empty() || !(t >= self.t_start && t <= self.t_last) {
            return None;
        }
        let k = self.segments.partition_point(|s| s.t <= t);
        Some(&self.segments[k.saturating_sub(1)])
    }

    /// Interpolated state at `t`, or `None` outside the integrated range.
    pub fn eval(&self, t: f64) -> Option<[f64; D]> {
        if t == self.t_last {
            return Some(self.y_last);
        }
        let s = self.locate(t)?;
        let th = (t - s.t) / s.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; D];
        for i in 0..D {
            let rc = |j: usize| s.rc[j][i];
            y[i] = rc(0) + th * (rc(1) + th1 * (rc(2) + th * (rc(3) + th1 * rc(4))));
        }
        Some(y)
    }

    /// Time derivative of the interpolant at `t`.
    pub fn eval_derivative(&self, t: f64) -> Option<[f64; D]> {
        let s = self.locate(t)?;
        let th = (t - s.t) / s.h;
        let th1 = 1.0 - th;
        let mut dy = [0.0; D];
        for i in 0..D {
            let rc = |j: usize| s.rc[j][i];
            dy[i] = (rc(1)
                + (1.0 - 2.0 * th) * rc(2)
                + th * (2.0 - 3.0 * th) * rc(3)
                + 2.0 * th * th1 * (1.0 - 2.0 * th) * rc(4))
                / s.h;
        }
        Some(dy)
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite<const D: usize>(v: &[f64; D]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn initial_step<const D: usize, F>(f: &mut F, t0: f64, y0: &[f64; D], f0: &[f64; D], opts: &OdeOptions, h_max: f64) -> f64
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..D {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(h_max);
    let y1 = axpy(y0, h, &[(1.0, f0)]);
    let f1 = f(t0 + h, &y1);
    let mut der2 = 0.0;
    for i in 0..D {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if !der12.is_finite() {
        h * 1e-3
    } else if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`. After every accepted step
/// `stop(t, y)` is consulted; returning `true` ends the run early with
/// [`Termination::Stopped`]. A non-finite right-hand side is treated as a
/// rejected step.
pub fn integrate<const D: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: OdeOptions,
    mut stop: S,
) -> Result<DenseSolution<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    S: FnMut(f64, &[f64; D]) -> bool,
{
    if !(t_end > t0) || !finite(&y0) {
        return Err(Error::InvalidInput(format!("integration range [{t0}, {t_end}] or initial state not usable")));
    }
    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let (facc1, facc2) = (5.0, 0.1);
    let mut facold: f64 = 1e-4;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !finite(&k1) {
        return Err(Error::InvalidInput(format!("right-hand side not finite at t = {t0}")));
    }
    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => initial_step(&mut f, t, &y, &k1, &opts, h_max),
    };
    let mut sol = DenseSolution {
        segments: Vec::new(),
        t_start: t0,
        t_last: t0,
        y_last: y0,
        termination: Termination::Completed,
        accepted: 0,
        rejected: 0,
    };
    let mut last = false;
    let mut reject = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::TooManySteps { t, max_steps: opts.max_steps });
        }
        if 0.1 * h.abs() <= t.abs() * f64::EPSILON || h < f64::MIN_POSITIVE {
            return Err(Error::StepUnderflow { t, h });
        }
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        steps += 1;

        let y2 = axpy(&y, h, &[(A21, &k1)]);
        let k2 = f(t + C2 * h, &y2);
        let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = f(t + C3 * h, &y3);
        let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = f(t + C4 * h, &y4);
        let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = f(t + C5 * h, &y5);
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(t + h, &y6);
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);

        let mut err = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / D as f64).sqrt();

        if !err.is_finite() || !finite(&y_new) || !finite(&k7) {
            last = false;
            reject = true;
            sol.rejected += 1;
            h *= 0.25;
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(beta) / safe).clamp(facc2, facc1);
            let mut h_new = h / fac;
            facold = err.max(1e-4);

            let mut rc = [[0.0; D]; 5];
            for i in 0..D {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - h * k7[i] - bspl;
                rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.segments.push(Segment { t, h, rc });
            sol.accepted += 1;

            k1 = k7;
            y = y_new;
            t = if last { t_end } else { t + h };
            sol.t_last = t;
            sol.y_last = y;

            if last {
                return Ok(sol);
            }
            if stop(t, &y) {
                sol.termination = Termination::Stopped;
                return Ok(sol);
            }
            h_new = h_new.min(h_max);
            if reject {
                h_new = h_new.min(h);
            }
            reject = false;
            h = h_new;
        } else {
            let h_new = h / (fac11 / safe).min(facc1);
            reject = true;
            last = false;
            sol.rejected += 1;
            h = h_new;
        }
    }
}

/// Shorthand for [`integrate`] without an early-stop predicate.
pub fn integrate_to<const D: usize, F>(f: F, t0: f64, y0: [f64; D], t_end: f64, opts: OdeOptions) -> Result<DenseSolution<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    integrate(f, t0, y0, t_end, opts, |_, _| false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = integrate_to(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 20.0, OdeOptions::tol(1e-11, 1e-13)).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=2000 {
            let t = 0.01 * k as f64;
            let y = sol.eval(t).unwrap();
            let dy = sol.eval_derivative(t).unwrap();
            worst = worst
                .max((y[0] - t.sin()).abs())
                .max((y[1] - t.cos()).abs())
                .max((dy[0] - t.cos()).abs())
                .max((dy[1] + t.sin()).abs());
        }
        assert!(worst < 1e-8, "dense error {worst}");
        assert_eq!(sol.termination, Termination::Completed);
        assert_eq!(sol.t_end(), 20.0);
    }

    #[test]
    fn endpoint_is_exact_and_outside_is_none() {
        let sol = integrate_to(|_, y| [y[0], 0.0], 0.0, [1.0, 0.0], 1.0, OdeOptions::default()).unwrap();
        assert!((sol.y_end()[0] - 1f64.exp()).abs() < 1e-9);
        assert!(sol.eval(1.5).is_none());
        assert!(sol.eval(-0.1).is_none());
    }

    #[test]
    fn stop_predicate_ends_early() {
        let sol = integrate(|_, y| [y[1], -y[0]], 0.0, [0.0, 1.0], 100.0, OdeOptions::default(), |t, _| t > 3.0).unwrap();
        assert_eq!(sol.termination, Termination::Stopped);
        assert!(sol.t_end() > 3.0 && sol.t_end() < 100.0);
    }

    #[test]
    fn blowup_is_reported() {
        let err = integrate_to(|_, y| [y[0] * y[0], 0.0], 0.0, [1.0, 0.0], 2.0, OdeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. } | Error::TooManySteps { .. }));
    }
}
