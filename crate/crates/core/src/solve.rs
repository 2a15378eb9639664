//! Bregman estimators: projected gradient on the dual and primal problems,
//! cyclic Bregman projections, the Jordan-algebra closed form and positive
//! definite completion.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix};

#[allow(unused_imports)]
use num_traits::Float;

use crate::breg::{kkt_from_pair, KktReport};
use crate::error::{Error, Result};
use crate::model::{
    contains_identity, is_jordan_algebra_default, orthogonal_complement, subspace_from_graph, AffineSubspace,
    GraphSpec, Hyperplane,
};
use crate::specfun::{self, loewner_kernel, LinkFunction, LinkKind};
use crate::sym::SymMatrix;

/// Steps below this count as a failed line search.
const MIN_STEP: f64 = 1e-16;
/// Consecutive failed line searches before giving up.
const MAX_FAILURES: usize = 5;
/// Smallest eigenvalue (or domain margin) that counts as "at the boundary".
const BOUNDARY_EIG: f64 = 1e-9;
/// Accepted steps with negligible objective change before declaring a stall.
const STALL_WINDOW: usize = 200;
const STALL_REL: f64 = 1e-14;
/// Relative objective change below which Armijo is checked on gradients.
const ROUNDING_REGIME: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol_kkt: f64,
    pub backtrack_beta: f64,
    pub backtrack_c: f64,
    pub step_init: f64,
    pub boundary_guard: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 10_000,
            tol_kkt: 1e-8,
            backtrack_beta: 0.5,
            backtrack_c: 1e-4,
            step_init: 1.0,
            boundary_guard: 1e-12,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.tol_kkt > 0.0
            && self.backtrack_beta > 0.0
            && self.backtrack_beta < 1.0
            && self.backtrack_c > 0.0
            && self.backtrack_c < 0.5
            && self.step_init > 0.0
            && self.boundary_guard > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid solver options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    BoundaryDivergence,
    InfeasibleStart,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIter => "MaxIter",
            Status::BoundaryDivergence => "BoundaryDivergence",
            Status::InfeasibleStart => "InfeasibleStart",
        }
    }
}

/// Estimated pair `(Σ̂, L̂)` with its certificate.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub sigma_hat: SymMatrix,
    pub l_hat: SymMatrix,
    /// Coordinates of `L̂ − A₀` in the subspace basis.
    pub theta_hat: Vec<f64>,
    pub kkt: KktReport,
    pub iters: usize,
    pub status: Status,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Per-iteration snapshot passed to observers.
#[derive(Debug)]
pub struct IterInfo<'a> {
    pub iter: usize,
    /// Dual PGD: `F(Σ) − ⟨A₀, Σ⟩`; primal PGD: `gₙ(L)`.
    pub objective: f64,
    pub step: f64,
    pub sigma: &'a SymMatrix,
    pub l: &'a SymMatrix,
}

/// Solver selection for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    DualPgd,
    PrimalPgd,
    BregmanProjection,
    Jordan,
    /// Jordan closed form when it applies, dual PGD otherwise.
    Auto,
}

fn finish(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma: SymMatrix,
    s_n: &SymMatrix,
    iters: usize,
    status: Status,
) -> FitResult {
    let l_hat = specfun::gradient_unchecked(link, &sigma);
    let kkt = kkt_from_pair(link, sub, &sigma, &l_hat, s_n);
    let theta_hat = sub.basis().iter().map(|a| a.inner(&(&l_hat - sub.offset()))).collect();
    FitResult { sigma_hat: sigma, l_hat, theta_hat, kkt, iters, status }
}

fn check_dims(sub: &AffineSubspace, s: &SymMatrix) -> Result<()> {
    if sub.ambient_dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: sub.ambient_dim(), found: s.dim() });
    }
    Ok(())
}

/// Barzilai–Borwein step from the last displacement `ds` and gradient change
/// `dg`, alternating the two classical variants.
fn bb_step(ds: &SymMatrix, dg: &SymMatrix, iter: usize, fallback: f64) -> f64 {
    let sy = ds.inner(dg);
    if !(sy > 0.0) {
        return fallback;
    }
    let step = if iter.is_multiple_of(2) { ds.inner(ds) / sy } else { sy / dg.inner(dg) };
    if step.is_finite() {
        step.clamp(1e-12, 1e12)
    } else {
        fallback
    }
}

/// Dual projected gradient: minimize `F(Σ) − ⟨A₀, Σ⟩` subject to
/// `Σ − Sₙ ∈ 𝓛⊥`, starting at `Σ = Sₙ`.
pub fn fit_dual_pgd(
    link: &LinkFunction,
    sub: &AffineSubspace,
    s_n: &SymMatrix,
    opts: &SolveOptions,
) -> Result<FitResult> {
    fit_dual_pgd_observed(link, sub, s_n, opts, &mut |_| {})
}

pub fn fit_dual_pgd_observed(
    link: &LinkFunction,
    sub: &AffineSubspace,
    s_n: &SymMatrix,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&IterInfo<'_>),
) -> Result<FitResult> {
    opts.validate()?;
    check_dims(sub, s_n)?;
    if !(s_n.min_eig() > opts.boundary_guard) {
        return Err(Error::InfeasibleStart(format!(
            "sample covariance is not positive definite (smallest eigenvalue {:e})",
            s_n.min_eig()
        )));
    }
    let a0 = sub.offset();
    let objective = |sigma: &SymMatrix| specfun::value_unchecked(link, sigma.spectral()) - a0.inner(sigma);
    let direction = |l: &SymMatrix| {
        let g = l - a0;
        &g - &sub.project_linear_unchecked(&g)
    };
    let c = opts.backtrack_c;

    let mut sigma = s_n.clone();
    let mut l = specfun::gradient_unchecked(link, &sigma);
    let mut d = direction(&l);
    let mut f = objective(&sigma);
    let mut step = opts.step_init;
    let mut failures = 0;
    let mut stalled = 0;

    for iter in 0..=opts.max_iter {
        observer(&IterInfo { iter, objective: f, step, sigma: &sigma, l: &l });
        let primal = d.norm();
        let dual = sub.project_linear_unchecked(&(&sigma - s_n)).norm();
        if primal.max(dual) <= opts.tol_kkt {
            return Ok(finish(link, sub, sigma, s_n, iter, Status::Converged));
        }
        if iter == opts.max_iter {
            break;
        }
        let dd = primal * primal;
        let mut s = step;
        let mut accepted = None;
        while s >= MIN_STEP {
            let cand = sigma.axpy(-s, &d);
            if cand.min_eig() > opts.boundary_guard {
                let fc = objective(&cand);
                if fc <= f - c * s * dd {
                    accepted = Some((cand, fc, None));
                    break;
                }
                if (f - fc).abs() <= ROUNDING_REGIME * (1.0 + f.abs()) {
                    // objective differences are at rounding level; use the
                    // trapezoidal form of the sufficient-decrease test
                    let lc = specfun::gradient_unchecked(link, &cand);
                    let dc = direction(&lc);
                    if dc.inner(&d) >= (2.0 * c - 1.0) * dd {
                        accepted = Some((cand, fc, Some((lc, dc))));
                        break;
                    }
                }
            }
            s *= opts.backtrack_beta;
        }
        let Some((cand, fc, grads)) = accepted else {
            failures += 1;
            if failures >= MAX_FAILURES {
                let status = if sigma.min_eig() < BOUNDARY_EIG { Status::BoundaryDivergence } else { Status::MaxIter };
                return Ok(finish(link, sub, sigma, s_n, iter + 1, status));
            }
            step = opts.step_init;
            continue;
        };
        failures = 0;
        let (lc, dc) = grads.unwrap_or_else(|| {
            let lc = specfun::gradient_unchecked(link, &cand);
            let dc = direction(&lc);
            (lc, dc)
        });
        let ds = &cand - &sigma;
        let dg = &dc - &d;
        step = bb_step(&ds, &dg, iter, (2.0 * s).min(1e12));
        if (f - fc).abs() <= STALL_REL * f.abs().max(1.0) {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                let status = if cand.min_eig() < BOUNDARY_EIG { Status::BoundaryDivergence } else { Status::MaxIter };
                return Ok(finish(link, sub, cand, s_n, iter + 1, status));
            }
        } else {
            stalled = 0;
        }
        sigma = cand;
        l = lc;
        d = dc;
        f = fc;
    }
    Ok(finish(link, sub, sigma, s_n, opts.max_iter, Status::MaxIter))
}

/// Primal start `Π_𝓛(∇F(cI))` with `c = tr(Sₙ)/m`, if it lies in the image of
/// `∇F`.
pub fn default_primal_start(link: &LinkFunction, sub: &AffineSubspace, s_n: &SymMatrix) -> Result<SymMatrix> {
    check_dims(sub, s_n)?;
    let m = s_n.dim();
    let c = s_n.trace() / m as f64;
    if !(c > 0.0) {
        return Err(Error::InfeasibleStart("sample covariance has nonpositive trace".into()));
    }
    let l0 = sub.project(&SymMatrix::identity(m).scale(link.phi_prime(c)))?;
    if !(specfun::gradient_image_margin(link, &l0) > 0.0) {
        return Err(Error::InfeasibleStart("projected start lies outside the domain of the dual".into()));
    }
    Ok(l0)
}

/// Primal projected gradient: maximize `gₙ(L)` over `𝓛 ∩ 𝕃ᵐ₊` from `L0`.
pub fn fit_primal_pgd(
    link: &LinkFunction,
    sub: &AffineSubspace,
    l0: &SymMatrix,
    s_n: &SymMatrix,
    opts: &SolveOptions,
) -> Result<FitResult> {
    fit_primal_pgd_observed(link, sub, l0, s_n, opts, &mut |_| {})
}

pub fn fit_primal_pgd_observed(
    link: &LinkFunction,
    sub: &AffineSubspace,
    l0: &SymMatrix,
    s_n: &SymMatrix,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(&IterInfo<'_>),
) -> Result<FitResult> {
    opts.validate()?;
    check_dims(sub, s_n)?;
    check_dims(sub, l0)?;
    let dist = sub.distance(l0)?;
    if dist > 1e-8 * l0.norm().max(1.0) {
        return Err(Error::InfeasibleStart(format!("L0 is at distance {dist:e} from the subspace")));
    }
    if !(specfun::gradient_image_margin(link, l0) > opts.boundary_guard) {
        return Err(Error::InfeasibleStart("L0 lies outside the domain of the dual".into()));
    }
    let c = opts.backtrack_c;
    let g_of = |l: &SymMatrix| -specfun::conjugate_value_unchecked(link, l.spectral()) + l.inner(s_n);
    let ascent = |sigma: &SymMatrix| sub.project_linear_unchecked(&(s_n - sigma));
    let residual = |sigma: &SymMatrix| -> f64 {
        if !(sigma.min_eig() > 0.0) {
            return f64::INFINITY;
        }
        let l_hat = specfun::gradient_unchecked(link, sigma);
        kkt_from_pair(link, sub, sigma, &l_hat, s_n).max_residual()
    };

    let mut l = sub.project(l0)?;
    let mut sigma = specfun::inverse_gradient_unchecked(link, &l);
    let mut p = ascent(&sigma);
    let mut g = g_of(&l);
    let mut step = opts.step_init;
    let mut failures = 0;
    let mut stalled = 0;

    for iter in 0..=opts.max_iter {
        observer(&IterInfo { iter, objective: g, step, sigma: &sigma, l: &l });
        if residual(&sigma) <= opts.tol_kkt {
            return Ok(finish(link, sub, sigma, s_n, iter, Status::Converged));
        }
        if iter == opts.max_iter {
            break;
        }
        let pp = p.inner(&p);
        let mut s = step;
        let mut accepted = None;
        while s >= MIN_STEP {
            let cand = l.axpy(s, &p);
            if specfun::gradient_image_margin(link, &cand) > opts.boundary_guard {
                let gc = g_of(&cand);
                if gc >= g + c * s * pp {
                    accepted = Some((cand, gc, None));
                    break;
                }
                if (g - gc).abs() <= ROUNDING_REGIME * (1.0 + g.abs()) {
                    let sc = specfun::inverse_gradient_unchecked(link, &cand);
                    let pc = ascent(&sc);
                    if pc.inner(&p) >= (2.0 * c - 1.0) * pp {
                        accepted = Some((cand, gc, Some((sc, pc))));
                        break;
                    }
                }
            }
            s *= opts.backtrack_beta;
        }
        let Some((cand, gc, extra)) = accepted else {
            failures += 1;
            if failures >= MAX_FAILURES {
                let margin = specfun::gradient_image_margin(link, &l).min(sigma.min_eig());
                let status = if margin < BOUNDARY_EIG { Status::BoundaryDivergence } else { Status::MaxIter };
                return Ok(finish(link, sub, sigma, s_n, iter + 1, status));
            }
            step = opts.step_init;
            continue;
        };
        failures = 0;
        let (sc, pc) = extra.unwrap_or_else(|| {
            let sc = specfun::inverse_gradient_unchecked(link, &cand);
            let pc = ascent(&sc);
            (sc, pc)
        });
        // ascent on g is descent on −g, whose gradient change is −(pc − p)
        let dl = &cand - &l;
        let dgrad = &p - &pc;
        step = bb_step(&dl, &dgrad, iter, (2.0 * s).min(1e12));
        if (g - gc).abs() <= STALL_REL * g.abs().max(1.0) {
            stalled += 1;
            if stalled >= STALL_WINDOW {
                let margin = specfun::gradient_image_margin(link, &cand).min(sc.min_eig());
                let status = if margin < BOUNDARY_EIG { Status::BoundaryDivergence } else { Status::MaxIter };
                return Ok(finish(link, sub, sc, s_n, iter + 1, status));
            }
        } else {
            stalled = 0;
        }
        l = cand;
        sigma = sc;
        p = pc;
        g = gc;
    }
    Ok(finish(link, sub, sigma, s_n, opts.max_iter, Status::MaxIter))
}

/// Interval `(lo, hi)` of `λ` keeping `Σ + λB` positive definite.
fn feasible_interval(sigma: &SymMatrix, b: &SymMatrix) -> Result<(f64, f64)> {
    let chol =
        Cholesky::new(sigma.as_matrix().clone()).ok_or(Error::NotPositiveDefinite { min_eig: sigma.min_eig() })?;
    let lower = chol.l();
    let half =
        lower.solve_lower_triangular(b.as_matrix()).ok_or(Error::NotPositiveDefinite { min_eig: sigma.min_eig() })?;
    let whitened = lower
        .solve_lower_triangular(&half.transpose())
        .ok_or(Error::NotPositiveDefinite { min_eig: sigma.min_eig() })?;
    let c = SymMatrix::from_matrix_symmetrized(whitened);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let scale = c.op_norm();
    for &nu in c.spectral().values.iter() {
        if nu > 1e-14 * scale {
            lo = lo.max(-1.0 / nu);
        } else if nu < -1e-14 * scale {
            hi = hi.min(-1.0 / nu);
        }
    }
    Ok((lo, hi))
}

struct Slope {
    value: f64,
    curvature: f64,
    scale: f64,
}

fn slope(link: &LinkFunction, sigma: &SymMatrix, b: &SymMatrix, c: f64, lambda: f64) -> Option<Slope> {
    let point = sigma.axpy(lambda, b);
    let sp = point.spectral();
    if !(sp.min() > 0.0) {
        return None;
    }
    let u = &sp.vectors;
    let rot = u.transpose() * b.as_matrix() * u;
    let vals = sp.values.as_slice();
    let mut value = -c;
    let mut scale = c.abs();
    for (i, &x) in vals.iter().enumerate() {
        let t = link.phi_prime(x) * rot[(i, i)];
        value += t;
        scale += t.abs();
    }
    let kernel = loewner_kernel(vals, |x| link.phi_prime(x), |x| link.phi_second(x));
    let curvature = rot.component_mul(&rot).dot(&kernel);
    if !value.is_finite() {
        return None;
    }
    Some(Slope { value, curvature, scale })
}

/// Minimizes `λ ↦ F(Σ + λB) − λc` over the interval where `Σ + λB` is
/// positive definite.
pub fn line_search_1d(link: &LinkFunction, sigma: &SymMatrix, b: &SymMatrix, c: f64) -> Result<f64> {
    sigma.check_dim(b)?;
    if b.norm() == 0.0 {
        return Err(Error::InvalidArgument("search direction is zero".into()));
    }
    if let LinkKind::Shifted(lambda) = link.kind() {
        if let Some(root) = shifted_pair_search(lambda, sigma, b, c)? {
            return Ok(root);
        }
    }
    line_search_generic(link, sigma, b, c)
}

/// Safeguarded Newton on the slope; used directly as the reference path for
/// links without a closed form.
pub fn line_search_generic(link: &LinkFunction, sigma: &SymMatrix, b: &SymMatrix, c: f64) -> Result<f64> {
    let (lo, hi) = feasible_interval(sigma, b)?;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::NoInterior);
    }
    let s0 = slope(link, sigma, b, c, 0.0).ok_or(Error::NotPositiveDefinite { min_eig: sigma.min_eig() })?;
    if s0.value == 0.0 {
        return Ok(0.0);
    }
    if s0.value > 0.0 {
        // mirror: h(−λ) for direction −B and level −c
        let neg_b = b.scale(-1.0);
        return search_right(link, sigma, &neg_b, -c, -lo, s0.value.abs(), s0).map(|x| -x);
    }
    search_right(link, sigma, b, c, hi, s0.value.abs(), s0)
}

/// Root of the slope on `(0, hi)` given a negative slope at 0.
fn search_right(
    link: &LinkFunction,
    sigma: &SymMatrix,
    b: &SymMatrix,
    c: f64,
    hi: f64,
    _start_mag: f64,
    s0: Slope,
) -> Result<f64> {
    let mut a = 0.0;
    let mut upper = hi;
    if !upper.is_finite() {
        // slope increases; double until it turns positive
        let mut t = 1.0;
        loop {
            match slope(link, sigma, b, c, t) {
                Some(st) if st.value > 0.0 => {
                    upper = t;
                    break;
                }
                Some(st) if st.value == 0.0 => return Ok(t),
                _ => {
                    a = t;
                    t *= 2.0;
                    if t > 1e300 {
                        return Err(Error::InvalidArgument("objective is unbounded along the direction".into()));
                    }
                }
            }
        }
    }
    let mut x = a;
    let mut cur = if a == 0.0 { Some(s0) } else { slope(link, sigma, b, c, a) };
    for _ in 0..300 {
        let Some(st) = cur.as_ref() else { break };
        if st.value.abs() <= 1e-14 * st.scale {
            return Ok(x);
        }
        let newton = x - st.value / st.curvature;
        let mut next = if newton > a && newton < upper && newton.is_finite() { newton } else { 0.5 * (a + upper) };
        if upper - a <= 4.0 * f64::EPSILON * a.abs().max(upper.abs()).max(1e-300) {
            break;
        }
        let mut eval = slope(link, sigma, b, c, next);
        if eval.is_none() {
            upper = next;
            next = 0.5 * (a + upper);
            eval = slope(link, sigma, b, c, next);
        }
        match eval {
            Some(ref sn) if sn.value > 0.0 => upper = next,
            Some(ref sn) if sn.value < 0.0 => a = next,
            Some(_) => return Ok(next),
            None => upper = next,
        }
        x = next;
        cur = eval;
    }
    if (hi - x).abs() <= 1e-10 * hi.abs().max(1.0) {
        if let Some(st) = slope(link, sigma, b, c, x) {
            if st.value < -1e-10 * st.scale {
                return Err(Error::BoundaryOptimum);
            }
        }
    }
    Ok(x)
}

/// If `B = β(eᵢeⱼᵀ + eⱼeᵢᵀ)` with `i ≠ j`, returns `(i, j, β)`.
fn as_pair_direction(b: &SymMatrix) -> Option<(usize, usize, f64)> {
    let m = b.dim();
    let mut found = None;
    for i in 0..m {
        for j in i..m {
            let v = b.get(i, j);
            if v != 0.0 {
                if i == j || found.is_some() {
                    return None;
                }
                found = Some((i, j, v));
            }
        }
    }
    found
}

/// Real roots of `a₃x³ + a₂x² + a₁x + a₀` with `a₃ ≠ 0`, Newton-polished.
pub fn cubic_real_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let (p, q, r) = (a2 / a3, a1 / a3, a0 / a3);
    let qq = (3.0 * q - p * p) / 9.0;
    let rr = (9.0 * p * q - 27.0 * r - 2.0 * p * p * p) / 54.0;
    let disc = qq * qq * qq + rr * rr;
    let mut roots = Vec::with_capacity(3);
    if disc > 0.0 {
        let sd = disc.sqrt();
        roots.push((rr + sd).cbrt() + (rr - sd).cbrt() - p / 3.0);
    } else if qq == 0.0 {
        roots.push(-p / 3.0);
    } else {
        let theta = (rr / (-qq * qq * qq).sqrt()).clamp(-1.0, 1.0).acos();
        let amp = 2.0 * (-qq).sqrt();
        for k in 0..3 {
            let ang = (theta + 2.0 * core::f64::consts::PI * k as f64) / 3.0;
            roots.push(amp * ang.cos() - p / 3.0);
        }
    }
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((a3 * *x + a2) * *x + a1) * *x + a0;
            let df = (3.0 * a3 * *x + 2.0 * a2) * *x + a1;
            if df != 0.0 {
                let nx = *x - f / df;
                if nx.is_finite() {
                    *x = nx;
                }
            }
        }
    }
    roots
}

/// Closed-form line search for the shifted link along an off-diagonal pair
/// direction. Returns `None` when `B` is not of that form or the root is
/// ambiguous.
fn shifted_pair_search(lambda_s: f64, sigma: &SymMatrix, b: &SymMatrix, c: f64) -> Result<Option<f64>> {
    let Some((i, j, beta)) = as_pair_direction(b) else {
        return Ok(None);
    };
    let w = pair_schur_complement(sigma, i, j)?;
    let (w11, w22, w12) = (w[(0, 0)], w[(1, 1)], w[(0, 1)]);
    let det = w11 * w22 - w12 * w12;
    let cc = c / beta;
    // slope in μ = λβ:
    //   (2μ + 2w₁₂)/(det − 2μw₁₂ − μ²) + λₛ(2Σᵢⱼ + 2μ) − c/β = 0
    let k = 2.0 * lambda_s;
    let r = 2.0 * lambda_s * sigma.get(i, j) - cc;
    let roots = cubic_real_roots(-k, -2.0 * k * w12 - r, k * det - 2.0 * r * w12 + 2.0, r * det + 2.0 * w12);
    let feasible: Vec<f64> = roots.into_iter().filter(|&mu| w11 * w22 > (w12 + mu) * (w12 + mu)).collect();
    let unique = match feasible.as_slice() {
        [mu] => *mu,
        [first, rest @ ..] if rest.iter().all(|x| (x - first).abs() <= 1e-12 * first.abs().max(1.0)) => *first,
        _ => return Ok(None),
    };
    Ok(Some(unique / beta))
}

/// `Σ_{AA} − Σ_{AC} Σ_{CC}⁻¹ Σ_{CA}` for `A = {i, j}`.
fn pair_schur_complement(sigma: &SymMatrix, i: usize, j: usize) -> Result<DMatrix<f64>> {
    let m = sigma.dim();
    let a = [i, j];
    let rest: Vec<usize> = (0..m).filter(|&k| k != i && k != j).collect();
    let s = sigma.as_matrix();
    let saa = DMatrix::from_fn(2, 2, |p, q| s[(a[p], a[q])]);
    if rest.is_empty() {
        return Ok(saa);
    }
    let n = rest.len();
    let scc = DMatrix::from_fn(n, n, |p, q| s[(rest[p], rest[q])]);
    let sca = DMatrix::from_fn(n, 2, |p, q| s[(rest[p], a[q])]);
    let chol = Cholesky::new(scc).ok_or(Error::NotPositiveDefinite { min_eig: sigma.min_eig() })?;
    let x = chol.solve(&sca);
    Ok(saa - sca.transpose() * x)
}

/// Cyclic Bregman projections onto the hyperplanes `⟨Bᵢ, L⟩ = cᵢ`, starting
/// at `Σ = S`.
pub fn fit_bregman_projection(
    link: &LinkFunction,
    planes: &[Hyperplane],
    s: &SymMatrix,
    opts: &SolveOptions,
) -> Result<FitResult> {
    opts.validate()?;
    let m = s.dim();
    if !(s.min_eig() > opts.boundary_guard) {
        return Err(Error::InfeasibleStart(format!(
            "starting matrix is not positive definite (smallest eigenvalue {:e})",
            s.min_eig()
        )));
    }
    if !link.domain_is_open_cone() {
        log::warn!("cyclic Bregman projection has no convergence guarantee for {link}");
    }
    let sub = AffineSubspace::from_hyperplanes(m, planes)?;
    let mut sigma = s.clone();
    for sweep in 0..=opts.max_iter {
        let l = specfun::gradient_unchecked(link, &sigma);
        if kkt_from_pair(link, &sub, &sigma, &l, s).max_residual() <= opts.tol_kkt {
            return Ok(finish(link, &sub, sigma, s, sweep, Status::Converged));
        }
        if sweep == opts.max_iter {
            break;
        }
        for p in planes {
            match line_search_1d(link, &sigma, &p.normal, p.level) {
                Ok(step) => sigma = sigma.axpy(step, &p.normal),
                Err(Error::BoundaryOptimum) => {
                    return Ok(finish(link, &sub, sigma, s, sweep + 1, Status::BoundaryDivergence));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(finish(link, &sub, sigma, s, opts.max_iter, Status::MaxIter))
}

impl AffineSubspace {
    /// Describes the subspace as an intersection of hyperplanes with
    /// orthonormal normals spanning the complement of the linear part.
    pub fn to_hyperplanes(&self) -> Vec<Hyperplane> {
        orthogonal_complement(self.ambient_dim(), self.basis())
            .into_iter()
            .map(|normal| {
                let level = normal.inner(self.offset());
                Hyperplane { normal, level }
            })
            .collect()
    }
}

/// Closed form when `𝓛` is a Jordan algebra containing `I`: `Σ̂ = Π_𝓛(Sₙ)`.
pub fn fit_jordan_closed_form(link: &LinkFunction, sub: &AffineSubspace, s_n: &SymMatrix) -> Result<FitResult> {
    check_dims(sub, s_n)?;
    if !sub.is_linear() || !is_jordan_algebra_default(sub)? || !contains_identity(sub) {
        return Err(Error::NotJordan);
    }
    let sigma = sub.project_linear_unchecked(s_n);
    let sp = sigma.spectral();
    if !(sp.min() > LinkFunction::eig_floor(sp.max())) {
        return Err(Error::ProjectionNotPd);
    }
    Ok(finish(link, sub, sigma, s_n, 0, Status::Converged))
}

/// Whether the Jordan closed form applies to `(sub, Sₙ)`.
pub fn jordan_applies(sub: &AffineSubspace, s_n: &SymMatrix) -> bool {
    sub.is_linear()
        && sub.ambient_dim() == s_n.dim()
        && is_jordan_algebra_default(sub).unwrap_or(false)
        && contains_identity(sub)
        && {
            let p = sub.project_linear_unchecked(s_n);
            p.min_eig() > LinkFunction::eig_floor(p.max_eig())
        }
}

/// Unique `Σ̂` agreeing with `S` on the diagonal and the edges of `g` whose
/// link vanishes off the graph.
pub fn pd_completion(link: &LinkFunction, g: &GraphSpec, s: &SymMatrix, opts: &SolveOptions) -> Result<FitResult> {
    if g.nodes() != s.dim() {
        return Err(Error::DimensionMismatch { expected: g.nodes(), found: s.dim() });
    }
    let sub = subspace_from_graph(g);
    let start = if s.min_eig() > opts.boundary_guard {
        s.clone()
    } else {
        let zeroed = SymMatrix::from_upper_fn(s.dim(), |i, j| if g.has_edge(i, j) { s.get(i, j) } else { 0.0 });
        if !(zeroed.min_eig() > opts.boundary_guard) {
            return Err(Error::InfeasibleStart(
                "neither S nor its zero-filled restriction to the graph is positive definite".into(),
            ));
        }
        zeroed
    };
    fit_dual_pgd(link, &sub, &start, opts)
}

/// Dispatches to the selected solver.
pub fn fit(
    link: &LinkFunction,
    sub: &AffineSubspace,
    s_n: &SymMatrix,
    solver: Solver,
    opts: &SolveOptions,
) -> Result<FitResult> {
    match solver {
        Solver::DualPgd => fit_dual_pgd(link, sub, s_n, opts),
        Solver::PrimalPgd => {
            let l0 = default_primal_start(link, sub, s_n)?;
            fit_primal_pgd(link, sub, &l0, s_n, opts)
        }
        Solver::BregmanProjection => {
            check_dims(sub, s_n)?;
            let planes = sub.to_hyperplanes();
            fit_bregman_projection(link, &planes, s_n, opts)
        }
        Solver::Jordan => fit_jordan_closed_form(link, sub, s_n),
        Solver::Auto => {
            if jordan_applies(sub, s_n) {
                fit_jordan_closed_form(link, sub, s_n)
            } else {
                fit_dual_pgd(link, sub, s_n, opts)
            }
        }
    }
}
