//! Gaussian simulation, the Δ statistic, asymptotic covariance,
//! strong-convexity constants and finite-sample bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::AffineSubspace;
use crate::solve::{fit, SolveOptions, Solver, Status};
use crate::specfun::{self, LinkFunction, LinkKind};
use crate::sym::SymMatrix;

/// Generator for replication `rep` under `seed`; each replication draws from
/// its own ChaCha stream.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn cholesky_factor(sigma0: &SymMatrix) -> Result<DMatrix<f64>> {
    Cholesky::new(sigma0.as_matrix().clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite { min_eig: sigma0.min_eig() })
}

/// `n` draws of `N(0, Σ₀)`, one per column.
pub fn gaussian_draws(sigma0: &SymMatrix, n: usize, rng: &mut ChaCha20Rng) -> Result<DMatrix<f64>> {
    let chol = cholesky_factor(sigma0)?;
    let m = sigma0.dim();
    let z = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
    Ok(chol * z)
}

fn sample_covariance_of(draws: &DMatrix<f64>) -> SymMatrix {
    let n = draws.ncols() as f64;
    SymMatrix::from_matrix_symmetrized(draws * draws.transpose() / n)
}

/// `Sₙ = (1/n) Σ xₖxₖᵀ` for `xₖ ~ N(0, Σ₀)` i.i.d.
pub fn simulate_gaussian(sigma0: &SymMatrix, n: usize, seed: u64) -> Result<SymMatrix> {
    simulate_gaussian_rep(sigma0, n, seed, 0)
}

/// As [`simulate_gaussian`] on the stream of replication `rep`.
pub fn simulate_gaussian_rep(sigma0: &SymMatrix, n: usize, seed: u64, rep: u64) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let draws = gaussian_draws(sigma0, n, &mut replication_rng(seed, rep))?;
    Ok(sample_covariance_of(&draws))
}

/// `Δᵢ = ⟨Sₙ − Σ₀, Aᵢ⟩`.
pub fn delta_stat(s_n: &SymMatrix, sigma0: &SymMatrix, basis: &[SymMatrix]) -> Result<Vec<f64>> {
    s_n.check_dim(sigma0)?;
    let diff = s_n - sigma0;
    basis
        .iter()
        .map(|a| {
            a.check_dim(&diff)?;
            Ok(a.inner(&diff))
        })
        .collect()
}

/// `Iᵢⱼ = ∇²F*(L(θ₀))[Aᵢ, Aⱼ]`, the Hessian of the estimation criterion in `θ`.
pub fn info_matrix(link: &LinkFunction, theta0: &[f64], sub: &AffineSubspace) -> Result<DMatrix<f64>> {
    let l0 = sub.point(theta0)?;
    let basis = sub.basis();
    let d = basis.len();
    let mut info = DMatrix::zeros(d, d);
    for (j, aj) in basis.iter().enumerate() {
        let col = specfun::dgrad_conjugate(link, &l0, aj)?;
        for (i, ai) in basis.iter().enumerate() {
            info[(i, j)] = ai.inner(&col);
        }
    }
    Ok((&info + info.transpose()) * 0.5)
}

/// Fourth-moment map `𝒮[A, B] = Cov(⟨XXᵀ, A⟩, ⟨XXᵀ, B⟩)`.
#[derive(Debug, Clone, Copy)]
pub enum FourthMoment<'a> {
    /// Gaussian data with covariance `Σ₀`: `𝒮[A, B] = 2 tr(AΣ₀BΣ₀)`.
    Gaussian(&'a SymMatrix),
    /// Observations (one per column) around the known `Σ₀`.
    Empirical { sigma0: &'a SymMatrix, draws: &'a DMatrix<f64> },
    /// `Ω` given directly in basis coordinates.
    Explicit(&'a DMatrix<f64>),
}

impl FourthMoment<'_> {
    /// `Ωᵢⱼ = 𝒮[Aᵢ, Aⱼ]`.
    pub fn omega(&self, basis: &[SymMatrix]) -> Result<DMatrix<f64>> {
        let d = basis.len();
        match *self {
            FourthMoment::Gaussian(sigma0) => {
                let s = sigma0.as_matrix();
                let products: Vec<DMatrix<f64>> = basis.iter().map(|a| a.as_matrix() * s).collect();
                let mut omega = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..=i {
                        let v = 2.0 * products[i].component_mul(&products[j].transpose()).sum();
                        omega[(i, j)] = v;
                        omega[(j, i)] = v;
                    }
                }
                Ok(omega)
            }
            FourthMoment::Empirical { sigma0, draws } => {
                if draws.nrows() != sigma0.dim() {
                    return Err(Error::DimensionMismatch { expected: sigma0.dim(), found: draws.nrows() });
                }
                let k = draws.ncols();
                if k < 2 {
                    return Err(Error::InvalidArgument("empirical fourth moments need at least two draws".into()));
                }
                let centre: Vec<f64> = basis.iter().map(|a| a.inner(sigma0)).collect();
                let mut values = DMatrix::zeros(d, k);
                for (c, x) in draws.column_iter().enumerate() {
                    for (i, a) in basis.iter().enumerate() {
                        values[(i, c)] = (x.transpose() * a.as_matrix() * x)[(0, 0)] - centre[i];
                    }
                }
                let mean = values.column_mean();
                for mut col in values.column_iter_mut() {
                    col -= &mean;
                }
                Ok(&values * values.transpose() / (k as f64 - 1.0))
            }
            FourthMoment::Explicit(omega) => {
                if omega.nrows() != d || omega.ncols() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: omega.nrows() });
                }
                Ok(omega.clone())
            }
        }
    }
}

/// Ingredients of the asymptotic covariance of `√n(θ̂ₙ − θ₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub info: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// `I₀⁻¹ Ω I₀⁻¹`.
    pub sandwich: DMatrix<f64>,
}

pub fn sandwich_covariance(
    link: &LinkFunction,
    theta0: &[f64],
    sub: &AffineSubspace,
    s_op: FourthMoment<'_>,
) -> Result<AsymptoticReport> {
    let info = info_matrix(link, theta0, sub)?;
    let omega = s_op.omega(sub.basis())?;
    let inv = Cholesky::new(info.clone()).ok_or(Error::SingularInformation)?.inverse();
    let raw = &inv * &omega * &inv;
    let sandwich = (&raw + raw.transpose()) * 0.5;
    Ok(AsymptoticReport { info, omega, sandwich })
}

/// Lower bound on the strong-convexity constant of the criterion on the
/// `ε`-ball around `θ₀`.
pub fn strong_convexity_mu(link: &LinkFunction, theta0: &[f64], sub: &AffineSubspace, epsilon: f64) -> Result<f64> {
    let l0 = sub.point(theta0)?;
    let sigma0 = specfun::link_inverse_gradient(link, &l0)?;
    strong_convexity_mu_at(link, &sigma0, epsilon)
}

/// As [`strong_convexity_mu`], given `Σ₀` directly.
pub fn strong_convexity_mu_at(link: &LinkFunction, sigma0: &SymMatrix, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    match link.kind() {
        LinkKind::Power(1.0) => Ok(1.0),
        LinkKind::LogDet => {
            let lmin = sigma0.min_eig();
            if !(lmin > 0.0) {
                return Err(Error::NotPositiveDefinite { min_eig: lmin });
            }
            Ok(lmin * lmin / ((1.0 + epsilon * lmin) * (1.0 + epsilon * lmin)))
        }
        LinkKind::VonNeumann => Ok(1.0 / (epsilon.exp() * sigma0.op_norm())),
        _ => Err(Error::UnsupportedLink(format!("{link}"))),
    }
}

/// Parameters of the finite-sample deviation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    mu: f64,
    epsilon: f64,
    n: u64,
    d: u64,
    op_norm_sigma0: f64,
}

impl BoundInputs {
    pub fn new(mu: f64, epsilon: f64, n: u64, d: u64, op_norm_sigma0: f64) -> Result<Self> {
        let ok = mu > 0.0 && epsilon > 0.0 && n > 0 && d > 0 && op_norm_sigma0 > 0.0;
        if !ok || !mu.is_finite() || !epsilon.is_finite() || !op_norm_sigma0.is_finite() {
            return Err(Error::InvalidArgument("bound inputs must be positive and finite".into()));
        }
        Ok(BoundInputs { mu, epsilon, n, d, op_norm_sigma0 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn d(&self) -> u64 {
        self.d
    }
    pub fn op_norm_sigma0(&self) -> f64 {
        self.op_norm_sigma0
    }
}

/// Bound on `P(‖θ̂ₙ − θ₀‖ > ε)`.
pub fn finite_sample_bound(b: &BoundInputs) -> f64 {
    let d = b.d as f64;
    let n = b.n as f64;
    let s = b.op_norm_sigma0;
    let exponent = if b.epsilon <= 2.0 * s * s * d.sqrt() / b.mu {
        b.mu * b.mu * b.epsilon * b.epsilon * n / (32.0 * d * s * s)
    } else {
        b.mu * b.epsilon * n / (16.0 * d.sqrt() * s)
    };
    2.0 * d * (-exponent).exp()
}

/// Radius `ε` reached with probability at least `1 − δ`; requires
/// `n ≥ 8 log(2d/δ)`.
pub fn epsilon_for_confidence(delta: f64, n: u64, d: u64, op_norm_sigma0: f64, mu: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || n == 0 || d == 0 || !(op_norm_sigma0 > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidArgument("invalid confidence inputs".into()));
    }
    let log_term = (2.0 * d as f64 / delta).ln();
    if (n as f64) < 8.0 * log_term {
        return Err(Error::InvalidArgument(format!("n = {n} is below 8 log(2d/delta) = {}", 8.0 * log_term)));
    }
    Ok(4.0 * op_norm_sigma0 / mu * (2.0 * d as f64 / n as f64 * log_term).sqrt())
}

/// Moment diagnostics of the standardized estimator across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSummary {
    pub reps: usize,
    /// Replications whose fit errored or did not converge.
    pub failures: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub max_abs_z: f64,
}

/// `θ₀` for the truth `Σ₀`, checking `∇F(Σ₀) ∈ 𝓛`.
pub fn true_theta(link: &LinkFunction, sub: &AffineSubspace, sigma0: &SymMatrix) -> Result<Vec<f64>> {
    let l0 = specfun::link_gradient(link, sigma0)?;
    let dist = sub.distance(&l0)?;
    if dist > 1e-8 * l0.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("the truth is not in the model (distance {dist:e})")));
    }
    sub.coordinates(&(&l0 - sub.offset()))
}

fn fit_replication(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma0: &SymMatrix,
    n: usize,
    seed: u64,
    rep: u64,
    opts: &SolveOptions,
) -> Option<Vec<f64>> {
    let s_n = simulate_gaussian_rep(sigma0, n, seed, rep).ok()?;
    match fit(link, sub, &s_n, Solver::Auto, opts) {
        Ok(r) if r.status == Status::Converged => Some(r.theta_hat),
        _ => None,
    }
}

/// Fits `reps` simulated samples and standardizes `√n(θ̂ − θ₀)` by the
/// Gaussian sandwich covariance.
pub fn clt_check(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma0: &SymMatrix,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<CltSummary> {
    let theta0 = true_theta(link, sub, sigma0)?;
    let d = theta0.len();
    if reps == 0 {
        return Ok(CltSummary { reps, failures: 0, mean: Vec::new(), variance: Vec::new(), max_abs_z: 0.0 });
    }
    let report = sandwich_covariance(link, &theta0, sub, FourthMoment::Gaussian(sigma0))?;
    let chol = Cholesky::new(report.sandwich.clone()).ok_or(Error::SingularInformation)?;
    let root_n = (n as f64).sqrt();
    let mut zs: Vec<DVector<f64>> = Vec::with_capacity(reps);
    let mut failures = 0;
    for rep in 0..reps {
        let Some(theta) = fit_replication(link, sub, sigma0, n, seed, rep as u64, opts) else {
            failures += 1;
            continue;
        };
        let dev = DVector::from_iterator(d, theta.iter().zip(&theta0).map(|(a, b)| root_n * (a - b)));
        let z = chol.l().solve_lower_triangular(&dev).ok_or(Error::SingularInformation)?;
        zs.push(z);
    }
    let k = zs.len();
    if k == 0 {
        return Ok(CltSummary { reps, failures, mean: Vec::new(), variance: Vec::new(), max_abs_z: 0.0 });
    }
    let mut mean = vec![0.0; d];
    for z in &zs {
        for (m, v) in mean.iter_mut().zip(z.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let mut variance = vec![0.0; d];
    let mut max_abs_z: f64 = 0.0;
    for z in &zs {
        for (i, v) in z.iter().enumerate() {
            variance[i] += (v - mean[i]) * (v - mean[i]);
            max_abs_z = max_abs_z.max(v.abs());
        }
    }
    let denom = if k > 1 { (k - 1) as f64 } else { 1.0 };
    variance.iter_mut().for_each(|v| *v /= denom);
    Ok(CltSummary { reps, failures, mean, variance, max_abs_z })
}

/// Exceedance counts of `‖θ̂ − θ₀‖ > ε` for each `ε`, over `reps`
/// replications; failed fits count as exceedances.
#[allow(clippy::too_many_arguments)]
pub fn exceedance_counts(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma0: &SymMatrix,
    n: usize,
    epsilons: &[f64],
    reps: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<Vec<usize>> {
    let theta0 = true_theta(link, sub, sigma0)?;
    let mut counts = vec![0; epsilons.len()];
    for rep in 0..reps {
        let dist = match fit_replication(link, sub, sigma0, n, seed, rep as u64, opts) {
            Some(theta) => theta.iter().zip(&theta0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            None => f64::INFINITY,
        };
        for (c, &eps) in counts.iter_mut().zip(epsilons) {
            if dist > eps {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_identity_ray(m: usize) -> AffineSubspace {
        AffineSubspace::linear(&[SymMatrix::identity(m)]).unwrap()
    }

    #[test]
    fn simulation_is_deterministic() {
        let sigma0 = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let a = simulate_gaussian(&sigma0, 50, 7).unwrap();
        let b = simulate_gaussian(&sigma0, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_gaussian_rep(&sigma0, 50, 7, 1).unwrap());
    }

    #[test]
    fn single_draw_is_rank_one() {
        let s = simulate_gaussian(&SymMatrix::identity(3), 1, 3).unwrap();
        let sp = s.spectral();
        assert!(sp.values[0].abs() < 1e-12 && sp.values[1].abs() < 1e-12 && sp.values[2] > 0.0);
    }

    #[test]
    fn simulation_rejects_bad_input() {
        assert!(simulate_gaussian(&SymMatrix::identity(2), 0, 1).is_err());
        let bad = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(simulate_gaussian(&bad, 10, 1), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn delta_examples() {
        let s0 = SymMatrix::identity(2);
        let basis = half_identity_ray(2).basis().to_vec();
        assert_eq!(delta_stat(&s0, &s0, &basis).unwrap(), vec![0.0]);
        let d = delta_stat(&s0.scale(2.0), &s0, &basis).unwrap();
        assert!((d[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn info_identity_cases() {
        let sub = half_identity_ray(2);
        let p1 = LinkFunction::power(1.0).unwrap();
        let info = info_matrix(&p1, &[2f64.sqrt()], &sub).unwrap();
        assert!((info[(0, 0)] - 1.0).abs() < 1e-12);
        // L₀ = −I for LogDet
        let info = info_matrix(&LinkFunction::log_det(), &[-(2f64.sqrt())], &sub).unwrap();
        assert!((info[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_power_one() {
        let sub = half_identity_ray(2);
        let p1 = LinkFunction::power(1.0).unwrap();
        let s0 = SymMatrix::identity(2);
        let r = sandwich_covariance(&p1, &[2f64.sqrt()], &sub, FourthMoment::Gaussian(&s0)).unwrap();
        assert!((r.omega[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((r.sandwich[(0, 0)] - 2.0).abs() < 1e-12);
        let zero = DMatrix::zeros(1, 1);
        let r = sandwich_covariance(&p1, &[2f64.sqrt()], &sub, FourthMoment::Explicit(&zero)).unwrap();
        assert_eq!(r.sandwich[(0, 0)], 0.0);
    }

    #[test]
    fn mu_closed_forms() {
        let s0 = SymMatrix::identity(3);
        assert_eq!(strong_convexity_mu_at(&LinkFunction::power(1.0).unwrap(), &s0, 0.3).unwrap(), 1.0);
        assert!((strong_convexity_mu_at(&LinkFunction::log_det(), &s0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let mu = strong_convexity_mu_at(&LinkFunction::von_neumann(), &s0.scale(2.0), 0.0).unwrap();
        assert!((mu - 0.5).abs() < 1e-15);
        assert!(matches!(
            strong_convexity_mu_at(&LinkFunction::power(2.0).unwrap(), &s0, 0.1),
            Err(Error::UnsupportedLink(_))
        ));
    }

    #[test]
    fn bound_examples() {
        let b = BoundInputs::new(1.0, 0.1, 3200, 1, 1.0).unwrap();
        assert!((finite_sample_bound(&b) - 2.0 * (-1f64).exp()).abs() < 1e-12);
        assert!(BoundInputs::new(0.0, 0.1, 3200, 1, 1.0).is_err());
        let eps = epsilon_for_confidence(0.05, 1000, 5, 1.0, 1.0).unwrap();
        assert!((eps - 4.0 * (0.01 * 200f64.ln()).sqrt()).abs() < 1e-12);
        assert!(epsilon_for_confidence(0.05, 10, 5, 1.0, 1.0).is_err());
    }

    #[test]
    fn clt_empty() {
        let sub = half_identity_ray(2);
        let p1 = LinkFunction::power(1.0).unwrap();
        let s = clt_check(&p1, &sub, &SymMatrix::identity(2), 100, 0, 1, &SolveOptions::default()).unwrap();
        assert!(s.mean.is_empty() && s.variance.is_empty() && s.failures == 0);
    }

    #[test]
    fn clt_rejects_truth_outside_model() {
        let sub = half_identity_ray(2);
        let p1 = LinkFunction::power(1.0).unwrap();
        let s0 = SymMatrix::from_diagonal(&[1.0, 2.0]);
        assert!(clt_check(&p1, &sub, &s0, 100, 5, 1, &SolveOptions::default()).is_err());
    }
}
