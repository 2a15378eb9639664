mod common;

use common::*;
use entcov_core::model::subspace_from_graph;
use entcov_core::solve::*;
use entcov_core::specfun::{apply_matrix_function, link_gradient};
use entcov_core::{kkt_residual, AffineSubspace, GraphSpec, LinkFunction, SymMatrix};
use proptest::prelude::*;

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn golden_l13_dual() {
    let sub = subspace_from_graph(&chain3());
    let s = ex_l13();
    let cases = [
        (LinkFunction::log_det(), 0.75, 1e-6),
        (LinkFunction::von_neumann(), 0.4298, 5e-4),
        (LinkFunction::power(-2.0).unwrap(), (64.0 - 3754f64.sqrt()) / 3.0, 1e-6),
        (LinkFunction::shifted(1.0).unwrap(), 0.105, 1e-3),
    ];
    for (link, want, tol) in cases {
        let fit = fit_dual_pgd(&link, &sub, &s, &opts()).unwrap();
        assert_eq!(fit.status, Status::Converged, "{link}");
        assert!((fit.sigma_hat.get(0, 2) - want).abs() <= tol, "{link}: {}", fit.sigma_hat.get(0, 2));
        assert!(fit.kkt.max_residual() <= 1e-8, "{link}: {:?}", fit.kkt);
    }
}

#[test]
fn logdet_completion_is_the_schur_value() {
    let s = ex_l13();
    let fit = pd_completion(&LinkFunction::log_det(), &chain3(), &s, &opts()).unwrap();
    let want = s.get(0, 1) * s.get(1, 2) / s.get(1, 1);
    assert!((fit.sigma_hat.get(0, 2) - want).abs() < 1e-10);
    // the inverse vanishes off the graph
    let inv = fit.sigma_hat.as_matrix().clone().try_inverse().unwrap();
    assert!(inv[(0, 2)].abs() < 1e-10);
}

#[test]
fn von_neumann_completion_log_entries() {
    let fit = pd_completion(&LinkFunction::von_neumann(), &chain3(), &ex_l13(), &opts()).unwrap();
    let log = apply_matrix_function(f64::ln, &fit.sigma_hat).unwrap();
    let printed = [((0, 0), 1.3520), ((0, 1), 0.2721), ((1, 1), 0.9305), ((1, 2), 0.9806), ((2, 2), 0.9695)];
    for ((i, j), v) in printed {
        assert!((log.get(i, j) - v).abs() <= 5e-4, "({i},{j}): {}", log.get(i, j));
    }
    assert!(log.get(0, 2).abs() < 1e-8);
}

#[test]
fn completion_on_complete_graph_returns_input() {
    let s = ex_l13();
    for link in solver_links() {
        let fit = pd_completion(&link, &GraphSpec::complete(3), &s, &opts()).unwrap();
        assert!(fit.sigma_hat.max_abs_diff(&s) < 1e-12, "{link}");
    }
}

#[test]
fn completion_ignores_unobserved_entries() {
    // S is indefinite only through its unobserved (1,3) entry
    let s = SymMatrix::from_rows(&[vec![4.0, 1.0, -20.0], vec![1.0, 4.0, 3.0], vec![-20.0, 3.0, 4.0]]).unwrap();
    assert!(s.min_eig() < 0.0);
    let fit = pd_completion(&LinkFunction::log_det(), &chain3(), &s, &opts()).unwrap();
    assert!((fit.sigma_hat.get(0, 2) - 0.75).abs() < 1e-8);
}

#[test]
fn primal_from_minus_identity_agrees() {
    let sub = subspace_from_graph(&chain3());
    let link = LinkFunction::log_det();
    let s = ex_l13();
    let dual = fit_dual_pgd(&link, &sub, &s, &opts()).unwrap();
    let primal = fit_primal_pgd(&link, &sub, &SymMatrix::identity(3).scale(-1.0), &s, &opts()).unwrap();
    assert_eq!(primal.status, Status::Converged);
    assert!((&dual.sigma_hat - &primal.sigma_hat).norm() <= 1e-6);
}

#[test]
fn full_space_returns_sample_covariance() {
    let s = ex_l13();
    let full = AffineSubspace::full_space(3);
    for link in links() {
        let fit = fit_dual_pgd(&link, &full, &s, &opts()).unwrap();
        assert!(fit.sigma_hat.max_abs_diff(&s) < 1e-8, "{link}");
        let l0 = default_primal_start(&link, &full, &s).unwrap();
        let fit = fit_primal_pgd(&link, &full, &l0, &s, &opts()).unwrap();
        assert!(fit.sigma_hat.max_abs_diff(&s) < 1e-6, "{link}");
    }
}

#[test]
fn identity_link_on_equicorrelation_is_least_squares() {
    let sub = AffineSubspace::equicorrelation(3);
    let link = LinkFunction::power(1.0).unwrap();
    let s = ex_l13();
    // averaging oracle: diagonal mean 4, off-diagonal mean 2
    let want = SymMatrix::from_upper_fn(3, |i, j| if i == j { 4.0 } else { 2.0 });
    for fit in [
        fit_dual_pgd(&link, &sub, &s, &opts()).unwrap(),
        fit_primal_pgd(&link, &sub, &default_primal_start(&link, &sub, &s).unwrap(), &s, &opts()).unwrap(),
        fit_jordan_closed_form(&link, &sub, &s).unwrap(),
    ] {
        assert!(fit.sigma_hat.max_abs_diff(&want) < 1e-8);
    }
}

#[test]
fn jordan_equicorrelation_gradient_pattern() {
    let sub = AffineSubspace::equicorrelation(3);
    let want = SymMatrix::from_upper_fn(3, |i, j| if i == j { 4.0 } else { 2.0 });
    for link in [LinkFunction::log_det(), LinkFunction::von_neumann()] {
        let fit = fit_jordan_closed_form(&link, &sub, &ex_l13()).unwrap();
        assert!(fit.sigma_hat.max_abs_diff(&want) < 1e-14);
        assert!(sub.distance(&fit.l_hat).unwrap() < 1e-12, "{link}");
        assert!(fit.kkt.max_residual() < 1e-12);
    }
}

#[test]
fn bregman_projection_examples() {
    let sub = subspace_from_graph(&chain3());
    let planes = sub.to_hyperplanes();
    assert_eq!(planes.len(), 1);
    let fit = fit_bregman_projection(&LinkFunction::shifted(1.0).unwrap(), &planes, &ex_l13(), &opts()).unwrap();
    assert_eq!(fit.status, Status::Converged);
    assert_eq!(fit.iters, 1);
    assert!((fit.sigma_hat.get(0, 2) - 0.105).abs() <= 1e-3);
    let fit = fit_bregman_projection(&LinkFunction::log_det(), &planes, &ex_l13(), &opts()).unwrap();
    assert!((fit.sigma_hat.get(0, 2) - 0.75).abs() <= 1e-6);
}

#[test]
fn shifted_cubic_matches_generic_search() {
    let link = LinkFunction::shifted(1.0).unwrap();
    let s = ex_l13();
    for (i, j) in [(0, 2), (0, 1), (1, 2)] {
        for c in [0.0, 0.7, -1.3] {
            let b = SymMatrix::unit_pair(3, i, j);
            let fast = line_search_1d(&link, &s, &b, c).unwrap();
            let slow = line_search_generic(&link, &s, &b, c).unwrap();
            assert!((fast - slow).abs() < 1e-10, "({i},{j}) c={c}: {fast} vs {slow}");
        }
    }
}

#[test]
fn boundary_divergence_when_projection_leaves_the_cone() {
    // off-diagonals 3/4: zeroing (1,3) gives λ_min = 1 − 3√2/4 < 0
    let s = SymMatrix::from_upper_fn(3, |i, j| if i == j { 1.0 } else { 0.75 });
    let sub = subspace_from_graph(&chain3());
    let fit = fit_dual_pgd(&LinkFunction::power(1.0).unwrap(), &sub, &s, &opts()).unwrap();
    assert_eq!(fit.status, Status::BoundaryDivergence);
    let planes = sub.to_hyperplanes();
    let fit = fit_bregman_projection(&LinkFunction::power(1.0).unwrap(), &planes, &s, &opts()).unwrap();
    assert_eq!(fit.status, Status::BoundaryDivergence);
    let fit = fit_dual_pgd(&LinkFunction::log_det(), &sub, &s, &opts()).unwrap();
    assert_eq!(fit.status, Status::Converged);
}

#[test]
fn auto_dispatch() {
    let s = ex_l13();
    let link = LinkFunction::von_neumann();
    let eq = AffineSubspace::equicorrelation(3);
    let auto = fit(&link, &eq, &s, Solver::Auto, &opts()).unwrap();
    assert_eq!(auto.iters, 0);
    let chain = subspace_from_graph(&chain3());
    let auto = fit(&link, &chain, &s, Solver::Auto, &opts()).unwrap();
    assert!(auto.iters > 0);
}

fn agreement_case(g: &GraphSpec, s: &SymMatrix, link: &LinkFunction) -> Result<(), TestCaseError> {
    let sub = subspace_from_graph(g);
    let dual = fit_dual_pgd(link, &sub, s, &opts()).unwrap();
    prop_assert_eq!(dual.status, Status::Converged, "{}", link);
    prop_assert!(dual.kkt.max_residual() <= 1e-8);
    let recheck = kkt_residual(link, &sub, &dual.sigma_hat, s).unwrap();
    prop_assert!(recheck.max_residual() <= 1e-8);

    let l0 = default_primal_start(link, &sub, s).unwrap();
    let tight = SolveOptions { tol_kkt: 1e-10, ..opts() };
    let primal = fit_primal_pgd(link, &sub, &l0, s, &tight).unwrap();
    prop_assert_eq!(primal.status, Status::Converged, "{}", link);
    prop_assert!((&primal.sigma_hat - &dual.sigma_hat).norm() <= 1e-6, "{}", link);

    let planes = sub.to_hyperplanes();
    let proj = fit_bregman_projection(link, &planes, s, &opts()).unwrap();
    prop_assert_eq!(proj.status, Status::Converged, "{}", link);
    prop_assert!((&proj.sigma_hat - &dual.sigma_hat).norm() <= 1e-6, "{}", link);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn solvers_agree((g, s) in arb_graph_instance(2..=6)) {
        for link in solver_links() {
            agreement_case(&g, &s, &link)?;
        }
    }

    #[test]
    fn dual_iterates_monotone_and_feasible((g, s) in arb_graph_instance(2..=5)) {
        let sub = subspace_from_graph(&g);
        for link in solver_links() {
            let mut last = f64::INFINITY;
            let mut ok = true;
            let mut worst_feas: f64 = 0.0;
            fit_dual_pgd_observed(&link, &sub, &s, &opts(), &mut |info| {
                ok &= info.objective <= last + 1e-12 * last.abs().max(1.0);
                last = info.objective;
                let diff = info.sigma - &s;
                let inside: f64 = sub.basis().iter().map(|a| a.inner(&diff).powi(2)).sum::<f64>().sqrt();
                worst_feas = worst_feas.max(inside);
            }).unwrap();
            prop_assert!(ok, "{}", link);
            prop_assert!(worst_feas <= 1e-12 * s.norm(), "{}: {}", link, worst_feas);
        }
    }

    #[test]
    fn primal_objective_non_decreasing((g, s) in arb_graph_instance(2..=5)) {
        let sub = subspace_from_graph(&g);
        for link in solver_links() {
            let l0 = default_primal_start(&link, &sub, &s).unwrap();
            let mut last = f64::NEG_INFINITY;
            let mut ok = true;
            fit_primal_pgd_observed(&link, &sub, &l0, &s, &opts(), &mut |info| {
                ok &= info.objective >= last - 1e-12 * last.abs().max(1.0);
                last = info.objective;
            }).unwrap();
            prop_assert!(ok, "{}", link);
        }
    }

    #[test]
    fn jordan_matches_dual(s in arb_pd(4..=4)) {
        let sub = AffineSubspace::equicorrelation(4);
        let tight = SolveOptions { tol_kkt: 1e-12, ..opts() };
        for link in [LinkFunction::log_det(), LinkFunction::von_neumann()] {
            let closed = fit_jordan_closed_form(&link, &sub, &s).unwrap();
            let iter = fit_dual_pgd(&link, &sub, &s, &tight).unwrap();
            prop_assert!((&closed.sigma_hat - &iter.sigma_hat).norm() <= 1e-8, "{}", link);
            prop_assert!(sub.distance(&link_gradient(&link, &closed.sigma_hat).unwrap()).unwrap() <= 1e-8);
        }
    }
}
