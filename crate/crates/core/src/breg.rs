//! Bregman divergence, the estimation objective and KKT residuals.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::AffineSubspace;
use crate::specfun::{self, LinkFunction};
use crate::sym::SymMatrix;

/// Optimality certificate for a candidate pair `(Σ̂, L̂ = ∇F(Σ̂))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `‖L̂ − Π_𝓛(L̂)‖_F`.
    pub primal_feas: f64,
    /// `‖Π_{𝓛₀}(Σ̂ − Sₙ)‖_F` where `𝓛₀` is the linear part of `𝓛`.
    pub dual_feas: f64,
    pub min_eig_sigma: f64,
    /// Distance of the spectrum of `L̂` to the boundary of `∇F(𝕊ᵐ₊)`.
    pub min_eig_l_domain: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_feas.max(self.dual_feas)
    }
}

/// `F(S)` allowing PSD `S` where the link is finite on the boundary.
fn value_on_domain(link: &LinkFunction, s: &SymMatrix, argument: &'static str) -> Result<f64> {
    let sp = s.spectral();
    let floor = LinkFunction::eig_floor(sp.max());
    if link.finite_on_boundary() {
        if sp.min() < -floor {
            return Err(Error::NotInDomain { argument, min_eig: sp.min() });
        }
        // eigenvalues within the floor of zero count as zero
        Ok(sp.values.iter().map(|&x| link.phi(x.max(0.0))).sum())
    } else {
        if sp.min() <= floor {
            return Err(Error::NotInDomain { argument, min_eig: sp.min() });
        }
        Ok(specfun::value_unchecked(link, sp))
    }
}

/// `D_F(S, Σ) = F(S) − F(Σ) − ⟨∇F(Σ), S − Σ⟩`.
pub fn bregman(link: &LinkFunction, s: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    s.check_dim(sigma)?;
    let fs = value_on_domain(link, s, "S")?;
    let fsig = specfun::link_value(link, sigma).map_err(|e| match e {
        Error::NotPositiveDefinite { min_eig } => Error::NotInDomain { argument: "Sigma", min_eig },
        other => other,
    })?;
    let grad = specfun::link_gradient(link, sigma)?;
    let d = fs - fsig - grad.inner(&(s - sigma));
    Ok(d.max(0.0))
}

/// `D_F(S, L) = F(S) + F*(L) − ⟨L, S⟩`.
pub fn bregman_dual(link: &LinkFunction, s: &SymMatrix, l: &SymMatrix) -> Result<f64> {
    s.check_dim(l)?;
    let fs = value_on_domain(link, s, "S")?;
    let fl = specfun::link_conjugate_value(link, l)?;
    Ok(fs + fl - l.inner(s))
}

/// `gₙ(L) = −F*(L) + ⟨L, Sₙ⟩`.
pub fn objective(link: &LinkFunction, l: &SymMatrix, s_n: &SymMatrix) -> Result<f64> {
    l.check_dim(s_n)?;
    Ok(-specfun::link_conjugate_value(link, l)? + l.inner(s_n))
}

/// `∇gₙ(L) = Sₙ − ∇F*(L)`.
pub fn objective_gradient(link: &LinkFunction, l: &SymMatrix, s_n: &SymMatrix) -> Result<SymMatrix> {
    l.check_dim(s_n)?;
    Ok(s_n - &specfun::link_inverse_gradient(link, l)?)
}

/// KKT residuals of `Σ̂` for the estimation problem over `sub`.
pub fn kkt_residual(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma_hat: &SymMatrix,
    s_n: &SymMatrix,
) -> Result<KktReport> {
    sigma_hat.check_dim(s_n)?;
    if sigma_hat.dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: sub.ambient_dim(), found: sigma_hat.dim() });
    }
    let min_eig_sigma = sigma_hat.min_eig();
    if min_eig_sigma <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: min_eig_sigma });
    }
    let l_hat = specfun::gradient_unchecked(link, sigma_hat);
    Ok(kkt_from_pair(link, sub, sigma_hat, &l_hat, s_n))
}

pub(crate) fn kkt_from_pair(
    link: &LinkFunction,
    sub: &AffineSubspace,
    sigma_hat: &SymMatrix,
    l_hat: &SymMatrix,
    s_n: &SymMatrix,
) -> KktReport {
    let shifted = l_hat - sub.offset();
    let primal_feas = (&shifted - &sub.project_linear_unchecked(&shifted)).norm();
    let dual_feas = sub.project_linear_unchecked(&(sigma_hat - s_n)).norm();
    KktReport {
        primal_feas,
        dual_feas,
        min_eig_sigma: sigma_hat.min_eig(),
        min_eig_l_domain: specfun::gradient_image_margin(link, l_hat),
    }
}
