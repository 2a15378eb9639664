//! Spectral-sum link functions `F(Σ) = tr φ(Σ)`.
//!
//! Every built-in link is described by a scalar convex `φ` on `(0, ∞)`; the
//! matrix maps (`F`, `∇F`, `F*`, `∇F*` and the derivative of `∇F*`) are
//! obtained by applying scalar maps to the spectrum.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::sym::{Spectral, SymMatrix};

/// Relative threshold below which an eigenvalue counts as zero.
pub const EIG_FLOOR_REL: f64 = 1e-10;

/// Relative gap below which divided differences switch to the derivative.
pub const DIVIDED_DIFF_TOL: f64 = 1e-7;

/// The family a link belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkKind {
    /// `∇F(Σ) = Σ^q` for `q > 0`, `∇F(Σ) = −Σ^q` for `q < 0`.
    Power(f64),
    /// `F(Σ) = −log det Σ`, `∇F(Σ) = −Σ⁻¹`.
    LogDet,
    /// `F(Σ) = −tr(Σ − Σ log Σ)`, `∇F(Σ) = log Σ`.
    VonNeumann,
    /// `F(Σ) = −log det Σ + (λ/2) tr Σ²`, `∇F(Σ) = λΣ − Σ⁻¹`.
    Shifted(f64),
}

/// A convex spectral link `φ` together with its derivative, inverse
/// derivative and Fenchel conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFunction {
    kind: LinkKind,
}

impl LinkFunction {
    pub fn new(kind: LinkKind) -> Result<Self> {
        match kind {
            LinkKind::Power(q) => {
                if !q.is_finite() || q == 0.0 {
                    return Err(Error::InvalidLink(format!("power exponent must be finite and nonzero, got {q}")));
                }
                if q == -1.0 {
                    return Err(Error::InvalidLink("power exponent -1 is the log-determinant link; use LogDet".into()));
                }
            }
            LinkKind::Shifted(lambda) => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::InvalidLink(format!("shift must be positive, got {lambda}")));
                }
            }
            LinkKind::LogDet | LinkKind::VonNeumann => {}
        }
        Ok(LinkFunction { kind })
    }

    pub fn power(q: f64) -> Result<Self> {
        Self::new(LinkKind::Power(q))
    }

    pub fn log_det() -> Self {
        LinkFunction { kind: LinkKind::LogDet }
    }

    pub fn von_neumann() -> Self {
        LinkFunction { kind: LinkKind::VonNeumann }
    }

    pub fn shifted(lambda: f64) -> Result<Self> {
        Self::new(LinkKind::Shifted(lambda))
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    /// `|φ′(x)| → ∞` as `x → 0⁺`.
    pub fn essential_smooth(&self) -> bool {
        match self.kind {
            LinkKind::Power(q) => q < 0.0,
            LinkKind::LogDet | LinkKind::VonNeumann | LinkKind::Shifted(_) => true,
        }
    }

    /// Whether `F` stays finite on the boundary of the PSD cone (so PSD
    /// arguments are accepted by the Bregman divergence).
    pub fn finite_on_boundary(&self) -> bool {
        match self.kind {
            LinkKind::Power(q) => q > 0.0,
            LinkKind::VonNeumann => true,
            LinkKind::LogDet | LinkKind::Shifted(_) => false,
        }
    }

    /// Whether `dom F` is exactly the open PD cone.
    pub fn domain_is_open_cone(&self) -> bool {
        match self.kind {
            LinkKind::Power(q) => q < -1.0,
            LinkKind::LogDet | LinkKind::Shifted(_) => true,
            LinkKind::VonNeumann => false,
        }
    }

    /// `φ(x)`, extended by lower semicontinuity to `x = 0`.
    pub fn phi(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::INFINITY;
        }
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => x.powf(q + 1.0) / (q + 1.0),
            LinkKind::Power(q) => {
                if x == 0.0 {
                    if q > -1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    -x.powf(q + 1.0) / (q + 1.0)
                }
            }
            LinkKind::LogDet => -x.ln(),
            LinkKind::VonNeumann => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln() - x
                }
            }
            LinkKind::Shifted(lambda) => -x.ln() + 0.5 * lambda * x * x,
        }
    }

    /// `φ′(x)` for `x > 0`.
    pub fn phi_prime(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => x.powf(q),
            LinkKind::Power(q) => -x.powf(q),
            LinkKind::LogDet => -1.0 / x,
            LinkKind::VonNeumann => x.ln(),
            LinkKind::Shifted(lambda) => lambda * x - 1.0 / x,
        }
    }

    /// `φ″(x)` for `x > 0`.
    pub fn phi_second(&self, x: f64) -> f64 {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => q * x.powf(q - 1.0),
            LinkKind::Power(q) => -q * x.powf(q - 1.0),
            LinkKind::LogDet => 1.0 / (x * x),
            LinkKind::VonNeumann => 1.0 / x,
            LinkKind::Shifted(lambda) => lambda + 1.0 / (x * x),
        }
    }

    /// Whether `y` lies in the interior of the image of `φ′`.
    pub fn in_gradient_image(&self, y: f64) -> bool {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => y > 0.0,
            LinkKind::Power(_) | LinkKind::LogDet => y < 0.0,
            LinkKind::VonNeumann | LinkKind::Shifted(_) => y.is_finite(),
        }
    }

    /// Signed distance of `y` to the boundary of the image of `φ′`
    /// (`+∞` when the image is the whole line).
    pub fn gradient_image_margin(&self, y: f64) -> f64 {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => y,
            LinkKind::Power(_) | LinkKind::LogDet => -y,
            LinkKind::VonNeumann | LinkKind::Shifted(_) => f64::INFINITY,
        }
    }

    /// `(φ′)⁻¹(y) = (φ*)′(y)` on the image of `φ′`.
    pub fn phi_prime_inverse(&self, y: f64) -> f64 {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => y.powf(1.0 / q),
            LinkKind::Power(q) => (-y).powf(1.0 / q),
            LinkKind::LogDet => -1.0 / y,
            LinkKind::VonNeumann => y.exp(),
            LinkKind::Shifted(lambda) => shifted_root(lambda, y),
        }
    }

    /// Derivative of `(φ′)⁻¹` at `y`.
    pub fn phi_prime_inverse_derivative(&self, y: f64) -> f64 {
        match self.kind {
            LinkKind::VonNeumann => y.exp(),
            LinkKind::LogDet => 1.0 / (y * y),
            _ => 1.0 / self.phi_second(self.phi_prime_inverse(y)),
        }
    }

    /// Whether `φ*(y)` is finite.
    pub fn in_conjugate_domain(&self, y: f64) -> bool {
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => y.is_finite(),
            LinkKind::Power(_) | LinkKind::LogDet => y < 0.0,
            LinkKind::VonNeumann | LinkKind::Shifted(_) => y.is_finite(),
        }
    }

    /// Fenchel conjugate `φ*(y) = sup_x { xy − φ(x) }`.
    pub fn phi_conjugate(&self, y: f64) -> f64 {
        if !self.in_conjugate_domain(y) {
            return f64::INFINITY;
        }
        match self.kind {
            LinkKind::Power(q) if q > 0.0 => {
                if y <= 0.0 {
                    0.0
                } else {
                    q / (q + 1.0) * y.powf((q + 1.0) / q)
                }
            }
            LinkKind::Power(q) => {
                let x = (-y).powf(1.0 / q);
                -q / (q + 1.0) * x.powf(q + 1.0)
            }
            LinkKind::LogDet => -1.0 - (-y).ln(),
            LinkKind::VonNeumann => y.exp(),
            LinkKind::Shifted(lambda) => {
                let x = shifted_root(lambda, y);
                x * y + x.ln() - 0.5 * lambda * x * x
            }
        }
    }

    /// Lower bound on eigenvalues considered positive for a matrix whose
    /// largest eigenvalue is `lambda_max`.
    pub fn eig_floor(lambda_max: f64) -> f64 {
        EIG_FLOOR_REL * lambda_max.abs().max(1.0)
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LinkKind::Power(q) => write!(f, "power:{q}"),
            LinkKind::LogDet => write!(f, "logdet"),
            LinkKind::VonNeumann => write!(f, "vonneumann"),
            LinkKind::Shifted(l) => write!(f, "shifted:{l}"),
        }
    }
}

/// Positive root of `λx − 1/x = y`, evaluated without cancellation.
fn shifted_root(lambda: f64, y: f64) -> f64 {
    let disc = (y * y + 4.0 * lambda).sqrt();
    if y >= 0.0 {
        (y + disc) / (2.0 * lambda)
    } else {
        2.0 / (disc - y)
    }
}

fn check_pd(sigma: &SymMatrix) -> Result<&Spectral> {
    let s = sigma.spectral();
    if s.min() <= LinkFunction::eig_floor(s.max()) {
        return Err(Error::NotPositiveDefinite { min_eig: s.min() });
    }
    Ok(s)
}

fn check_gradient_image<'a>(link: &LinkFunction, l: &'a SymMatrix) -> Result<&'a Spectral> {
    let s = l.spectral();
    for &y in s.values.iter() {
        if !link.in_gradient_image(y) {
            return Err(Error::ConjugateDomainError { eigenvalue: y });
        }
    }
    Ok(s)
}

/// `U f(Λ) Uᵀ`; fails if `f` is not finite at some eigenvalue.
pub fn apply_matrix_function(f: impl Fn(f64) -> f64, sigma: &SymMatrix) -> Result<SymMatrix> {
    let s = sigma.spectral();
    let mut d = Vec::with_capacity(s.values.len());
    for &x in s.values.iter() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::DomainError { eigenvalue: x });
        }
        d.push(v);
    }
    Ok(s.reconstruct(&d))
}

/// `F(Σ) = Σᵢ φ(λᵢ)` for positive definite `Σ`.
pub fn link_value(link: &LinkFunction, sigma: &SymMatrix) -> Result<f64> {
    let s = check_pd(sigma)?;
    Ok(s.values.iter().map(|&x| link.phi(x)).sum())
}

/// `∇F(Σ) = φ′(Σ)`.
pub fn link_gradient(link: &LinkFunction, sigma: &SymMatrix) -> Result<SymMatrix> {
    check_pd(sigma)?;
    Ok(sigma.map_spectrum(|x| link.phi_prime(x)))
}

/// `F*(L) = Σᵢ φ*(μᵢ)`.
pub fn link_conjugate_value(link: &LinkFunction, l: &SymMatrix) -> Result<f64> {
    let s = l.spectral();
    let mut total = 0.0;
    for &y in s.values.iter() {
        if !link.in_conjugate_domain(y) {
            return Err(Error::ConjugateDomainError { eigenvalue: y });
        }
        total += link.phi_conjugate(y);
    }
    Ok(total)
}

/// `∇F*(L)`: the unique `Σ` with `∇F(Σ) = L`.
pub fn link_inverse_gradient(link: &LinkFunction, l: &SymMatrix) -> Result<SymMatrix> {
    check_gradient_image(link, l)?;
    Ok(l.map_spectrum(|y| link.phi_prime_inverse(y)))
}

/// First divided differences of `g` on `values`, with `g′` on (near-)ties.
pub fn loewner_kernel(values: &[f64], g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let m = values.len();
    let gv: Vec<f64> = values.iter().map(|&x| g(x)).collect();
    DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (values[i], values[j]);
        if (a - b).abs() <= DIVIDED_DIFF_TOL * a.abs().max(1.0) {
            dg(0.5 * (a + b))
        } else {
            (gv[i] - gv[j]) / (a - b)
        }
    })
}

/// Directional derivative of `∇F*` at `L` in direction `B`.
pub fn dgrad_conjugate(link: &LinkFunction, l: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    l.check_dim(b)?;
    let s = check_gradient_image(link, l)?;
    let kernel =
        loewner_kernel(s.values.as_slice(), |y| link.phi_prime_inverse(y), |y| link.phi_prime_inverse_derivative(y));
    Ok(s.hadamard_conjugate(&kernel, b))
}

/// Directional derivative of `∇F` at `Σ` in direction `B`.
pub fn dgrad(link: &LinkFunction, sigma: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    sigma.check_dim(b)?;
    let s = check_pd(sigma)?;
    let kernel = loewner_kernel(s.values.as_slice(), |x| link.phi_prime(x), |x| link.phi_second(x));
    Ok(s.hadamard_conjugate(&kernel, b))
}

// Evaluations without the relative eigenvalue floor, for solvers that manage
// their own boundary guard.
pub(crate) fn value_unchecked(link: &LinkFunction, s: &Spectral) -> f64 {
    s.values.iter().map(|&x| link.phi(x)).sum()
}

pub(crate) fn gradient_unchecked(link: &LinkFunction, sigma: &SymMatrix) -> SymMatrix {
    sigma.map_spectrum(|x| link.phi_prime(x))
}

pub(crate) fn conjugate_value_unchecked(link: &LinkFunction, s: &Spectral) -> f64 {
    s.values.iter().map(|&y| link.phi_conjugate(y)).sum()
}

pub(crate) fn inverse_gradient_unchecked(link: &LinkFunction, l: &SymMatrix) -> SymMatrix {
    l.map_spectrum(|y| link.phi_prime_inverse(y))
}

/// Smallest signed distance of the spectrum of `L` to the boundary of the
/// image of `∇F` (`+∞` when unbounded).
pub fn gradient_image_margin(link: &LinkFunction, l: &SymMatrix) -> f64 {
    let s = l.spectral();
    s.values.iter().map(|&y| link.gradient_image_margin(y)).fold(f64::INFINITY, f64::min)
}
