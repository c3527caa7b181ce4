//! Reference solutions built without the library: classical RK4 at a fixed step.
#![allow(dead_code)]

pub fn rk4<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: F, t0: f64, y0: [f64; 2], t1: f64, steps: usize) -> [f64; 2] {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        t += h;
    }
    y
}

/// `(U*(r), U*′(r))` integrated in `t = ln r` from `r = 1e-8`, where `U*` is
/// replaced by its two-term expansion. The homogeneous modes of the
/// linearization decay as `r` grows, so the start-up error dies out.
pub fn singular_oracle(n: u32, lambda: f64, r: f64) -> [f64; 2] {
    let nf = n as f64;
    let m2 = 2.0 * (nf - 2.0) / lambda;
    let a = m2 / (2.0 * (nf - 1.0));
    let b = (nf + 2.0) / (4.0 * (nf - 1.0));
    let r0: f64 = 1e-8;
    let z = 0.5 * m2.ln() - r0.ln();
    let e2 = (-2.0 * z).exp();
    let eta = a * e2 * (z + b);
    let eta_p = a * e2 * (1.0 - 2.0 * (z + b));
    let f = |t: f64, y: [f64; 2]| [y[1], -(nf - 2.0) * y[1] + (2.0 * t).exp() * (y[0] - lambda * y[0].exp())];
    let steps = ((r.ln() - r0.ln()) / 2e-4).ceil() as usize;
    let y = rk4(f, r0.ln(), [eta + 2.0 * z, -(eta_p + 2.0)], r.ln(), steps);
    [y[0], y[1] / r]
}

/// Regular solution `u(0) = γ` at `r`, from a series start at `r = 1e-6`.
pub fn regular_oracle(n: u32, lambda: f64, gamma: f64, r: f64) -> [f64; 2] {
    let nf = n as f64;
    let c = (gamma - lambda * gamma.exp()) / nf;
    let r0: f64 = 1e-6;
    let f = |s: f64, y: [f64; 2]| [y[1], -(nf - 1.0) / s * y[1] + y[0] - lambda * y[0].exp()];
    // uniform in ln r up to 1e-2, then uniform in r
    let mid = 1e-2_f64.min(r);
    let g = |t: f64, y: [f64; 2]| {
        let s = t.exp();
        let d = f(s, [y[0], y[1] / s]);
        [y[1], s * s * d[1] + y[1]]
    };
    let y = rk4(g, r0.ln(), [gamma + 0.5 * c * r0 * r0, c * r0 * r0], mid.ln(), 40_000);
    let y = [y[0], y[1] / mid];
    if r <= mid {
        return y;
    }
    rk4(f, mid, y, r, ((r - mid) / 2e-5).ceil() as usize)
}
