use copula_bayes::copula::*;
use copula_bayes::estimation::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

fn max_offdiag_error(fit: &FitReport, rho: &CorrelationMatrix) -> f64 {
    let d = rho.dim();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..i {
            worst = worst.max((fit.model.rho().get(i, j) - rho.get(i, j)).abs());
        }
    }
    worst
}

#[test]
fn eml_recovers_two_dimensional_correlation() {
    let rho = CorrelationMatrix::exchangeable(2, 0.6).unwrap();
    let u = sample_gaussian_copula(&rho, 5000, 1);
    let fit = eml_fit_gaussian(&u).unwrap();
    assert!((fit.model.rho().get(0, 1) - 0.6).abs() < 0.05);
    assert!(!fit.repaired);
}

#[test]
fn eml_on_independent_columns() {
    let u = sample_gaussian_copula(&CorrelationMatrix::identity(4), 5000, 2);
    let fit = eml_fit_gaussian(&u).unwrap();
    assert!(max_offdiag_error(&fit, &CorrelationMatrix::identity(4)) < 0.05);
}

#[test]
fn eml_error_shrinks_with_sample_size() {
    let rho = CorrelationMatrix::exchangeable(4, 0.5).unwrap();
    let errs: Vec<f64> = [(500, 10), (5_000, 11), (50_000, 12)]
        .iter()
        .map(|&(n, seed)| {
            let fit = eml_fit_gaussian(&sample_gaussian_copula(&rho, n, seed)).unwrap();
            max_offdiag_error(&fit, &rho)
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn fit_report_loglik_is_recomputable() {
    let rho = CorrelationMatrix::exchangeable(3, 0.3).unwrap();
    let u = sample_gaussian_copula(&rho, 1000, 3);
    let fit = eml_fit_gaussian(&u).unwrap();
    let direct: f64 = u
        .iter()
        .map(|r| gaussian_copula_logdensity(r, fit.model.rho()).unwrap())
        .sum();
    assert!((fit.loglik - direct).abs() < 1e-8);

    let x = sample_t_copula(&rho, 5.0, 1000, 4).unwrap();
    let fit = cml_fit_t(&x).unwrap();
    let pseudo = empirical_transform(&x).unwrap();
    let direct = model_loglik(&fit.model, &pseudo).unwrap();
    assert!((fit.loglik - direct).abs() < 1e-8);
}

#[test]
fn t_loglik_is_sum_of_densities() {
    let rho = CorrelationMatrix::exchangeable(3, 0.4).unwrap();
    let u = sample_t_copula(&rho, 6.0, 300, 5).unwrap();
    for nu in [2.5, 6.0, 50.0] {
        let total = t_loglik(&u, &rho, nu).unwrap();
        let direct: f64 = u
            .iter()
            .map(|r| student_t_copula_logdensity(r, &rho, nu).unwrap())
            .sum();
        assert!((total - direct).abs() < 1e-8, "nu {nu}");
        let (a, b) = u.split_at(120);
        let parts = t_loglik(a, &rho, nu).unwrap() + t_loglik(b, &rho, nu).unwrap();
        assert!((total - parts).abs() < 1e-8);
    }
}

#[test]
fn tau_and_moment_estimates_agree() {
    let rho = CorrelationMatrix::exchangeable(3, 0.45).unwrap();
    let u = sample_gaussian_copula(&rho, 10_000, 6);
    let eml = eml_fit_gaussian(&u).unwrap();
    let tau = tau_correlation(&u).unwrap();
    for i in 0..3 {
        for j in 0..i {
            assert!((eml.model.rho().get(i, j) - tau.get(i, j)).abs() < 0.05);
        }
    }
}

#[test]
fn cml_recovers_t_copula() {
    let rho = CorrelationMatrix::exchangeable(4, 0.5).unwrap();
    let x = sample_t_copula(&rho, 4.0, 5000, 7).unwrap();
    let fit = cml_fit_t(&x).unwrap();
    let nu = fit.model.nu().unwrap();
    assert!(fit.converged);
    assert!((3.2..=4.8).contains(&nu), "nu {nu}");
    assert!(max_offdiag_error(&fit, &rho) < 0.06);
    assert!(fit.iterations > 0 && fit.iterations <= NU_MAX_ITER);
}

#[test]
fn cml_on_independent_uniforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let unif = Uniform::new(0.0, 1.0).unwrap();
    let x: Vec<Vec<f64>> = (0..5000)
        .map(|_| (0..3).map(|_| unif.sample(&mut rng)).collect())
        .collect();
    let fit = cml_fit_t(&x).unwrap();
    assert!(max_offdiag_error(&fit, &CorrelationMatrix::identity(3)) < 0.05);
}

#[test]
fn cml_is_invariant_to_marginal_transforms() {
    let rho = CorrelationMatrix::exchangeable(3, 0.5).unwrap();
    let u = sample_t_copula(&rho, 5.0, 800, 9).unwrap();
    let x: Vec<Vec<f64>> = u
        .iter()
        .map(|r| vec![r[0].ln(), (3.0 * r[1]).exp(), r[2] * r[2]])
        .collect();
    assert_eq!(cml_fit_t(&u).unwrap(), cml_fit_t(&x).unwrap());
}
