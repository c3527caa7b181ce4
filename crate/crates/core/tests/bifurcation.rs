use kslab::bifurcation::*;
use kslab::equilibria::{solve_equilibria, ProblemParams, INV_E};
use kslab::Error;

// First bifurcation value for N = 3, R = 1 from an independent shooting run.
const LAMBDA_1_N3: f64 = 4.7260606587123206e-4;

// Cap on |∂²r¹/∂λ²| near λ = 0.1, fitted at γ ∈ {20, 40}.
const SECOND_DIFF_CAP: f64 = 5.0;

fn p(l: f64) -> ProblemParams {
    ProblemParams::new(3, l).unwrap()
}

#[test]
fn critical_radii_of_singular_solution() {
    for l in [0.01, 0.05, 0.1] {
        assert!(r_of_lambda(3, 1, l).unwrap() < r_of_lambda(3, 2, l).unwrap());
    }
    let r: Vec<f64> = [1e-3, 1e-2, 0.1].iter().map(|&l| r_of_lambda(3, 1, l).unwrap()).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
    assert!(matches!(r_of_lambda(3, 0, 0.1), Err(Error::InvalidInput(_))));
}

#[test]
fn first_target_lambda() {
    let star = i_star(3, 1.0).unwrap();
    assert_eq!(star, 1);
    let t = find_lambda_i(3, 1.0, star).unwrap();
    assert!(t.residual < 1e-8);
    assert!(t.lambda_i > 0.0 && t.lambda_i < reference_lambda(3).unwrap());
    assert!((t.lambda_i - LAMBDA_1_N3).abs() < 1e-8 * LAMBDA_1_N3, "{}", t.lambda_i);
    assert_eq!(singular_crossings(3, t.lambda_i, 1.0).unwrap(), star);
    // bracket endpoints straddle the root
    let lo = r_of_lambda(3, star, t.bracket.0).unwrap() - 1.0;
    let hi = r_of_lambda(3, star, t.bracket.1).unwrap() - 1.0;
    assert!(lo * hi < 0.0);
}

#[test]
fn target_lambda_errors() {
    assert!(matches!(find_lambda_i_with_floor(3, 1.0, 1, 1e-3), Err(Error::BracketFailure(_))));
    assert!(matches!(find_lambda_i(3, 1.0, 0), Err(Error::PreconditionViolated(_))));
    assert!(find_lambda_i(3, -1.0, 1).is_err());
}

#[test]
fn regular_critical_radius() {
    let hi = solve_equilibria(0.1, 1e-14).unwrap().u_upper;
    assert!(matches!(r_of(p(0.1), hi, 1), Err(Error::NotEnoughCriticalPoints { .. })));
    let target = r_of_lambda(3, 1, 0.1).unwrap();
    let d: Vec<f64> = [15.0, 25.0, 35.0].iter().map(|&g| (r_of(p(0.1), g, 1).unwrap() - target).abs()).collect();
    assert!(d[1] < d[0] && d[2] < d[1], "{d:?}");
}

#[test]
fn second_difference_bounded_in_gamma() {
    let h = 1e-3;
    let second = |g: f64| {
        let r = |l: f64| r_of(p(l), g, 1).unwrap();
        (r(0.1 + h) - 2.0 * r(0.1) + r(0.1 - h)) / (h * h)
    };
    let (a, b) = (second(20.0), second(40.0));
    // observed -2.90 and -3.59; the bound is that pair rounded up
    assert!(a.abs() < SECOND_DIFF_CAP && b.abs() < SECOND_DIFF_CAP, "{a} {b}");
}

#[test]
fn branch_point_and_local_uniqueness() {
    let l1 = LAMBDA_1_N3;
    let s = branch_solve(3, 1.0, 1, 40.0, (0.9 * l1, 1.1 * l1)).unwrap();
    assert!(s.residual < 1e-8);
    let a = branch_solve(3, 1.0, 1, 40.0, (0.95 * l1, 1.08 * l1)).unwrap();
    let b = branch_solve(3, 1.0, 1, 40.0, (0.92 * l1, 1.03 * l1)).unwrap();
    assert!((a.lambda - b.lambda).abs() < 1e-9 * l1);
    assert!((s.lambda - a.lambda).abs() < 1e-9 * l1);
    let far: Vec<f64> = [20.0, 30.0, 40.0].iter().map(|&g| branch_solve(3, 1.0, 1, g, (0.5 * l1, 2.0 * l1)).map(|s| (s.lambda - l1).abs()).unwrap_or(f64::INFINITY)).collect();
    assert!(far[2] < far[0], "{far:?}");
    assert!(matches!(branch_solve(3, 1.0, 1, 40.0, (1.0, 0.5)), Err(Error::InvalidInput(_))));
}

#[test]
fn branch_oscillates_about_target() {
    let gammas: Vec<f64> = (0..=51).map(|k| 14.5 + 0.5 * k as f64).collect();
    let t = branch_trace_with_gaps(3, 1.0, 1, &gammas, LAMBDA_1_N3).unwrap();
    assert!(t.report.sign_changes >= 2);
    assert!(t.report.amplitudes_non_increasing, "{:?}", t.report.extremum_amplitudes);
    assert!(t.samples.iter().all(|s| s.residual < 1e-8));
    let (empty, rep) = branch_trace(3, 1.0, 1, &[], LAMBDA_1_N3).unwrap();
    assert!(empty.is_empty() && rep.sign_changes == 0);

    // crossings of u/μ − 1 between two sign changes, away from any fold
    let seg: Vec<&BranchSample> = t.samples.iter().filter(|s| s.gamma >= 30.0).collect();
    let counts: Vec<usize> = seg.iter().map(|s| mu_crossings(3, 1.0, s).unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
}

#[test]
fn oscillation_counting() {
    let mk = |g: f64, l: f64| BranchSample { gamma: g, lambda: l, index_i: 1, residual: 0.0 };
    let trace = [mk(1.0, 2.0), mk(2.0, 0.5), mk(3.0, 1.5), mk(4.0, 0.8), mk(5.0, 1.0 + 1e-12)];
    let rep = oscillation_report(&trace, 1.0);
    assert_eq!(rep.sign_changes, 3);
    assert_eq!(rep.extremum_amplitudes.len(), 3);
    assert!(rep.amplitudes_non_increasing);
}

#[test]
fn mu_plane_export() {
    let s = BranchSample { gamma: 3.0, lambda: INV_E, index_i: 1, residual: 0.0 };
    let pts = export_mu_plane(&[s]).unwrap();
    assert!((pts[0].mu - 1.0).abs() < 1e-12);
    assert!((pts[0].u0 - 3.0).abs() < 1e-11);
    let s = BranchSample { gamma: 3.0, lambda: 0.01, index_i: 1, residual: 0.0 };
    let mu = export_mu_plane(&[s]).unwrap()[0].mu;
    let back = kslab::equilibria::mu_lambda_bridge(mu, kslab::equilibria::BridgeDirection::MuToLambda).unwrap();
    assert!((back - 0.01).abs() < 1e-14);
    let bad = BranchSample { gamma: 3.0, lambda: 0.5, index_i: 1, residual: 0.0 };
    assert!(matches!(export_mu_plane(&[bad]), Err(Error::NoEquilibrium { .. })));
}

#[test]
fn radius_map_is_lipschitz_and_nondegenerate() {
    let near = lipschitz_estimates(3, 1, 0.1, &[1e-2, 1e-3, 1e-4]).unwrap();
    assert!((near[2] - near[1]).abs() < 0.01 * near[2]);
    let at = lipschitz_estimates(3, 1, LAMBDA_1_N3, &[1e-3 * LAMBDA_1_N3]).unwrap();
    assert!(at[0] > 1.0);
}
