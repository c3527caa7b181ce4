//! Common interface of radial solutions (singular or regular).

use crate::equilibria::ProblemParams;

/// A radial solution of `−u″ − (N−1)/r·u′ + u = λe^u` that can be evaluated
/// anywhere in its domain.
pub trait RadialSolution {
    fn problem(&self) -> ProblemParams;

    /// Closed range of radii where [`RadialSolution::state`] is defined.
    fn domain(&self) -> (f64, f64);

    /// `(u, u′)` at `r`, `None` outside the domain.
    fn state(&self, r: f64) -> Option<[f64; 2]>;

    /// Ascending radii, fine enough that consecutive oscillations of `u` and
    /// `u′` are separated by several points. Excludes `r = 0`.
    fn scan_points(&self) -> Vec<f64>;

    /// Stored samples `(r, u, u′)` used for export.
    fn samples(&self) -> (&[f64], &[f64], &[f64]);

    /// `u″` from the equation itself.
    fn second_derivative(&self, r: f64) -> Option<f64> {
        let [u, up] = self.state(r)?;
        let p = self.problem();
        Some(rhs_second(p.n(), p.lambda, r, u, up))
    }
}

/// `u″ = −(N−1)/r·u′ + u − λe^u`.
#[inline]
pub fn rhs_second(n: f64, lambda: f64, r: f64, u: f64, up: f64) -> f64 {
    -(n - 1.0) / r * up + u - lambda * u.exp()
}

/// Scan points on `[a, b]` refining each step of `mesh` so that spacing
/// never exceeds `max_spacing`; every step is split at least `min_split` times.
pub(crate) fn refine_mesh(mesh: &[f64], a: f64, b: f64, max_spacing: f64, min_split: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.len() * min_split);
    for w in mesh.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 < a || t0 > b {
            continue;
        }
        let k = (((t1 - t0) / max_spacing).ceil() as usize).max(min_split);
        for j in 0..k {
            let t = t0 + (t1 - t0) * j as f64 / k as f64;
            if t >= a && t <= b {
                out.push(t);
            }
        }
    }
    if let Some(&last) = mesh.last() {
        if last >= a && last <= b {
            out.push(last);
        }
    }
    out.dedup();
    out
}

/// `per_unit` points per unit of `ln r` on `[a, b]`, both ends included.
pub fn log_points(a: f64, b: f64, per_unit: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    let k = (((lb - la) * per_unit as f64).ceil() as usize).max(1);
    (0..=k)
        .map(|j| if j == k { b } else { (la + (lb - la) * j as f64 / k as f64).exp() })
        .collect()
}

/// Sorted union of two ascending point sets, restricted to `[a, b]`.
pub(crate) fn merge_points(x: &[f64], y: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().chain(y).copied().filter(|&r| r >= a && r <= b).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}
