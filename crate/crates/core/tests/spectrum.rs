use kslab::equilibria::ProblemParams;
use kslab::singular::{singular_profile, SingularProfile};
use kslab::spectrum::*;
use proptest::prelude::*;

// 1 + x_k² with x_k the k-th positive root of tan x = x (30-digit root finding).
const NEUMANN_N3: [f64; 3] = [21.19072855642663, 60.679515944109419, 119.89986916362646];

// First bifurcation value for N = 3, R = 1 from an independent shooting run.
const LAMBDA_1_N3: f64 = 4.7260606587123206e-4;

fn profile(n: u32, l: f64, r_max: f64) -> SingularProfile {
    singular_profile(ProblemParams::new(n, l).unwrap(), r_max).unwrap()
}

#[test]
fn neumann_eigenvalues() {
    let e = neumann_radial_eigs(3, 1.0, 4).unwrap();
    assert_eq!(e[0], 1.0);
    for (got, want) in e[1..].iter().zip(NEUMANN_N3) {
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }
    for n in [4, 7] {
        let a = neumann_radial_eigs(n, 1.0, 3).unwrap();
        let b = neumann_radial_eigs(n, 2.5, 3).unwrap();
        for k in 1..3 {
            assert!(((a[k] - 1.0) - (b[k] - 1.0) * 6.25).abs() < 1e-8 * a[k]);
        }
    }
    assert!(neumann_radial_eigs(3, 1.0, 0).is_err());
    assert!(neumann_radial_eigs(3, -1.0, 2).is_err());
}

#[test]
fn eigenfunctions_interlace() {
    let e = neumann_radial_eigs(5, 1.5, 5).unwrap();
    assert!(e.windows(2).all(|w| w[1] > w[0]));
    for (i, &l) in e.iter().enumerate() {
        let (_, phi) = neumann_eigenfunction(5, 1.5, l, 4001).unwrap();
        let changes = phi.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
        assert_eq!(changes, i);
    }
}

#[test]
fn zero_potential_is_positive_definite() {
    let p = profile(3, 0.1, 2.0);
    let form = assemble_form(&p, 1e-3, 1.0, 400).unwrap();
    let flat = form.with_potential(vec![0.0; form.potential.len()]);
    assert_eq!(negative_count(&flat).negative_count, 0);
    assert!(negative_count(&form).negative_count > 0);
}

#[test]
fn potential_near_origin() {
    let p3 = profile(3, 0.1, 2.0);
    let delta = 0.01f64;
    let form = assemble_form(&p3, 1e-6, 1.0, 2000).unwrap();
    let limit = p3.r0.min((2.0 * delta).sqrt());
    for (t, v) in form.log_nodes.iter().zip(&form.potential) {
        let r = t.exp();
        if r < limit {
            assert!(v * r * r >= 2.0 * (1.0 - delta), "{r}");
        }
    }
    let p11 = profile(11, 0.1, 2.0);
    let form = assemble_form(&p11, 1e-6, 1.0, 2000).unwrap();
    for (t, v) in form.log_nodes.iter().zip(&form.potential) {
        let r = t.exp();
        if r < p11.r0 {
            assert!(v * r * r <= 81.0 / 4.0, "{r}");
        }
    }
}

#[test]
fn count_grows_under_refinement_then_stabilizes() {
    let p = profile(3, LAMBDA_1_N3, 2.0);
    let c = converged_negative_count(&p, 1e-3, 1.0, 32, 8).unwrap();
    assert!(c.converged);
    assert!(c.history.windows(2).all(|w| w[1].1 >= w[0].1), "{:?}", c.history);
}

#[test]
fn morse_dichotomy() {
    let p3 = profile(3, LAMBDA_1_N3, 2.0);
    let m = morse_ladder(&p3, 1.0, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    assert!(m.strictly_increasing());
    let inc = m.increments();
    let (lo, hi) = (inc.iter().min().unwrap(), inc.iter().max().unwrap());
    assert!(*lo > 0 && hi - lo <= 1, "{inc:?}");

    let p11 = profile(11, 0.1, 2.0);
    let m = morse_ladder(&p11, 1.0, &[1e-2, 1e-3, 1e-4]).unwrap();
    let c: Vec<usize> = m.ladder.iter().map(|l| l.negative_count).collect();
    assert_eq!(c[1], c[2], "{c:?}");

    let p10 = profile(10, 0.1, 2.0);
    assert!(matches!(morse_ladder(&p10, 1.0, &[1e-2]), Err(kslab::Error::UnsupportedBorderline)));
}

#[test]
fn hardy_functions() {
    let eps0 = 0.7;
    for j in 1..4 {
        let h = hardy_test_function(j, eps0, 3, 501).unwrap();
        assert_eq!(h.samples.f[0], 0.0);
        assert_eq!(*h.samples.f.last().unwrap(), 0.0);
        assert_eq!(h.r_outer, hardy_radius(j, eps0));
        let next = hardy_test_function(j + 1, eps0, 3, 11).unwrap();
        assert!(next.r_outer <= h.r_inner);
    }
    assert!(hardy_test_function(1, eps0, 11, 11).is_err());
}

#[test]
fn hardy_functions_solve_euler_equation() {
    for (n, eps0) in [(3u32, 0.7), (5, 0.3), (9, 1.1)] {
        let a = (n as f64 - 2.0).powi(2) / 4.0 + eps0 * eps0 / 4.0;
        for r in [1e-4, 3e-3, 0.2] {
            let h = 1e-5 * r;
            let (f, fp) = hardy_value(n, eps0, r);
            let fpp = (hardy_value(n, eps0, r + h).1 - hardy_value(n, eps0, r - h).1) / (2.0 * h);
            let res = -fpp - (n as f64 - 1.0) / r * fp - a / (r * r) * f;
            let scale = r.powf(-(n as f64 - 2.0) / 2.0) / (r * r);
            assert!(res.abs() < 1e-8 * scale, "N={n} r={r}: {res}");
        }
    }
}

#[test]
fn quadratic_form_on_hardy_functions() {
    let p = profile(3, LAMBDA_1_N3, 2.0);
    let eps0 = choose_eps0(&p).unwrap();
    let zero = SampledFunction { r: vec![1e-3, 1e-2, 1e-1], f: vec![0.0; 3], f_prime: vec![0.0; 3] };
    assert_eq!(evaluate_j(&zero, &p).unwrap(), 0.0);
    let mut checked = 0;
    let mut j = 1;
    while hardy_radius(j + 1, eps0) >= p.r_min() {
        if hardy_radius(j, eps0) < p.r0 {
            let h = hardy_test_function(j, eps0, 3, 4001).unwrap();
            let rep = j_report(&h, &p).unwrap();
            assert!(rep.value < 0.0);
            assert!(rep.slack <= 1e-12 * rep.hardy_term.abs());
            assert!((rep.value - rep.hardy_term - rep.slack).abs() < 1e-4 * rep.value.abs(), "{rep:?}");
            checked += 1;
        }
        j += 1;
    }
    assert!(checked >= 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eigenvalue_scaling(n in 3u32..9, r in 0.5f64..4.0) {
        let a = neumann_radial_eigs(n, 1.0, 2).unwrap();
        let b = neumann_radial_eigs(n, r, 2).unwrap();
        prop_assert!(((b[1] - 1.0) * r * r - (a[1] - 1.0)).abs() < 1e-8 * a[1]);
    }

    #[test]
    fn negative_count_monotone_in_grid(k in 4usize..9) {
        let p = profile(3, 0.05, 2.0);
        let coarse = negative_count(&assemble_form(&p, 1e-2, 1.0, 1 << k).unwrap()).negative_count;
        let fine = negative_count(&assemble_form(&p, 1e-2, 1.0, 1 << (k + 1)).unwrap()).negative_count;
        prop_assert!(fine >= coarse);
    }
}
