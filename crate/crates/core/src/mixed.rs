//! Mixed parametrization `(Σ_A, L_B)`, correlation-matrix parametrizations
//! and the two-step estimator under mixed constraints.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{coordinate_matrix, orthogonal_complement, AffineSubspace};
use crate::solve::{fit_dual_pgd, FitResult, SolveOptions, Status};
use crate::specfun::{LinkFunction, LinkKind};
use crate::sym::SymMatrix;

/// Split of the upper-triangular index pairs of an `m × m` matrix into `A`
/// and its complement `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPartition {
    m: usize,
    set_a: Vec<(usize, usize)>,
    set_b: Vec<(usize, usize)>,
    sorted_a: Vec<(usize, usize)>,
}

impl EntryPartition {
    /// `a` lists 0-based pairs in either orientation; duplicates are rejected.
    /// Values on `A` follow the order of `a`.
    pub fn new(m: usize, a: &[(usize, usize)]) -> Result<Self> {
        let mut set_a: Vec<(usize, usize)> = Vec::with_capacity(a.len());
        for &(i, j) in a {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            if j >= m {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) out of range for m = {m}")));
            }
            set_a.push((i, j));
        }
        let mut sorted_a = set_a.clone();
        sorted_a.sort_unstable();
        sorted_a.dedup();
        if sorted_a.len() != set_a.len() {
            return Err(Error::InvalidArgument("duplicate entries in A".into()));
        }
        let set_b = upper_pairs(m).filter(|p| sorted_a.binary_search(p).is_err()).collect();
        Ok(EntryPartition { m, set_a, set_b, sorted_a })
    }

    /// `A` = diagonal, `B` = off-diagonal.
    pub fn diagonal(m: usize) -> Self {
        let a: Vec<_> = (0..m).map(|i| (i, i)).collect();
        Self::new(m, &a).expect("diagonal pairs are valid")
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn set_a(&self) -> &[(usize, usize)] {
        &self.set_a
    }

    pub fn set_b(&self) -> &[(usize, usize)] {
        &self.set_b
    }

    pub fn in_a(&self, i: usize, j: usize) -> bool {
        let p = if i <= j { (i, j) } else { (j, i) };
        self.sorted_a.binary_search(&p).is_ok()
    }

    /// Values of `x` on `A`, in the order of [`set_a`](Self::set_a).
    pub fn restrict_a(&self, x: &SymMatrix) -> Vec<f64> {
        self.set_a.iter().map(|&(i, j)| x.get(i, j)).collect()
    }

    /// Values of `x` on `B`, in the order of [`set_b`](Self::set_b).
    pub fn restrict_b(&self, x: &SymMatrix) -> Vec<f64> {
        self.set_b.iter().map(|&(i, j)| x.get(i, j)).collect()
    }

    fn coords_a(&self) -> Vec<SymMatrix> {
        self.set_a.iter().map(|&(i, j)| coordinate_matrix(self.m, i, j)).collect()
    }

    fn coords_b(&self) -> Vec<SymMatrix> {
        self.set_b.iter().map(|&(i, j)| coordinate_matrix(self.m, i, j)).collect()
    }

    /// Matrix with the given values on `pairs` and zeros elsewhere.
    fn fill(&self, pairs: &[(usize, usize)], values: &[f64]) -> SymMatrix {
        let mut data = nalgebra::DMatrix::zeros(self.m, self.m);
        for (&(i, j), &v) in pairs.iter().zip(values) {
            data[(i, j)] = v;
            data[(j, i)] = v;
        }
        SymMatrix::from_matrix_symmetrized(data)
    }

    /// Largest absolute entry of `x` on `B` (`on_a = false`) or `A`.
    fn max_abs_on(&self, x: &SymMatrix, on_a: bool) -> f64 {
        let pairs = if on_a { &self.set_a } else { &self.set_b };
        pairs.iter().map(|&(i, j)| x.get(i, j).abs()).fold(0.0, f64::max)
    }
}

fn upper_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| (i..m).map(move |j| (i, j)))
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

const PD_TOL: f64 = 1e-12;

fn is_pd(x: &SymMatrix) -> bool {
    x.min_eig() > PD_TOL * x.max_eig().abs().max(1.0)
}

/// A positive definite matrix whose `A` entries equal `sigma_a`.
pub fn pd_extension(part: &EntryPartition, sigma_a: &[f64]) -> Result<SymMatrix> {
    check_len(part.set_a.len(), sigma_a.len())?;
    let m = part.m;
    for (&(i, j), &v) in part.set_a.iter().zip(sigma_a) {
        if i == j && !(v > 0.0) {
            return Err(Error::NoPdExtension);
        }
    }
    let base = part.fill(&part.set_a, sigma_a);
    let free_diag: Vec<usize> = (0..m).filter(|&i| !part.in_a(i, i)).collect();
    let scale = base.op_norm().max(1.0);

    // zero fill, inflating the free diagonal
    let mut delta = 1e-6;
    loop {
        let mut cand = base.clone();
        if !free_diag.is_empty() {
            let bump: Vec<f64> = (0..m).map(|i| if free_diag.contains(&i) { delta } else { 0.0 }).collect();
            cand = &cand + &SymMatrix::from_diagonal(&bump);
        }
        if is_pd(&cand) {
            return Ok(cand);
        }
        if free_diag.is_empty() || delta > 1e6 * scale {
            break;
        }
        delta *= 2.0;
    }
    homotopy_extension(part, sigma_a)
}

/// Continuation from the diagonal part of the targets, scaling the
/// off-diagonal targets by `α ∈ [0, 1]` and re-centring at the max-det
/// completion after each accepted step.
fn homotopy_extension(part: &EntryPartition, sigma_a: &[f64]) -> Result<SymMatrix> {
    let m = part.m;
    let link = LinkFunction::log_det();
    let with_alpha = |current: &SymMatrix, alpha: f64| {
        let mut data = current.as_matrix().clone();
        for (&(i, j), &v) in part.set_a.iter().zip(sigma_a) {
            if i != j {
                data[(i, j)] = alpha * v;
                data[(j, i)] = alpha * v;
            }
        }
        SymMatrix::from_matrix_symmetrized(data)
    };
    let diag: Vec<f64> =
        (0..m).map(|i| part.set_a.iter().position(|&p| p == (i, i)).map_or(1.0, |k| sigma_a[k])).collect();
    let mut current = SymMatrix::from_diagonal(&diag);
    let centring = AffineSubspace::linear(&part.coords_a()).ok();
    let opts = SolveOptions { max_iter: 500, ..Default::default() };
    let mut alpha = 0.0;
    let mut h = 1.0;
    while h >= 1e-8 {
        let next = (alpha + h).min(1.0);
        let cand = with_alpha(&current, next);
        if !is_pd(&cand) {
            h *= 0.5;
            continue;
        }
        if next >= 1.0 {
            return Ok(cand);
        }
        current = match &centring {
            Some(sub) => match fit_dual_pgd(&link, sub, &cand, &opts) {
                Ok(fit) if is_pd(&fit.sigma_hat) => fit.sigma_hat,
                _ => cand,
            },
            None => cand,
        };
        alpha = next;
        h = (2.0 * h).min(1.0);
    }
    Err(Error::NoPdExtension)
}

/// The unique `Σ̂ ≻ 0` with `Σ̂_A = sigma_a` and `∇F(Σ̂)_B = l_b`.
pub fn solve_mixed(
    link: &LinkFunction,
    part: &EntryPartition,
    sigma_a: &[f64],
    l_b: &[f64],
    opts: &SolveOptions,
) -> Result<SymMatrix> {
    if !link.essential_smooth() {
        return Err(Error::NotEssentiallySmooth);
    }
    check_len(part.set_a.len(), sigma_a.len())?;
    check_len(part.set_b.len(), l_b.len())?;
    let offset = part.fill(&part.set_b, l_b);
    let sub = AffineSubspace::from_orthonormal(offset, part.coords_a());
    let start = pd_extension(part, sigma_a)?;
    let fit = fit_dual_pgd(link, &sub, &start, opts)?;
    if fit.status != Status::Converged {
        return Err(Error::NotConverged(fit.status.as_str()));
    }
    Ok(fit.sigma_hat)
}

/// Correlation matrix whose link transform has the given off-diagonal entries
/// (upper triangle, row by row).
pub fn corr_from_offdiag(link: &LinkFunction, m: usize, offdiag: &[f64], opts: &SolveOptions) -> Result<SymMatrix> {
    match link.kind() {
        LinkKind::LogDet | LinkKind::VonNeumann | LinkKind::Shifted(_) => {}
        LinkKind::Power(_) => return Err(Error::UnsupportedLink(format!("{link}"))),
    }
    if m == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    check_len(m * (m - 1) / 2, offdiag.len())?;
    let part = EntryPartition::diagonal(m);
    solve_mixed(link, &part, &alloc::vec![1.0; m], offdiag, opts)
}

/// Output of [`two_step_fit`].
#[derive(Debug, Clone)]
pub struct TwoStepResult {
    /// Step (S1): `L̂` minimizing `D_F(Sₙ, L)` over `L_B ∈ 𝒞_B`.
    pub step1: FitResult,
    /// Step (S2): `Σ̌` minimizing `D_F(Σ, L̂)` over `Σ_A ∈ 𝒞_A`.
    pub fit: FitResult,
    /// `max |Ľ_B − L̂_B|`; zero in exact arithmetic.
    pub l_b_gap: f64,
}

fn check_support(part: &EntryPartition, sub: &AffineSubspace, on_a: bool, what: &str) -> Result<()> {
    if sub.ambient_dim() != part.m {
        return Err(Error::DimensionMismatch { expected: part.m, found: sub.ambient_dim() });
    }
    let leaks = |x: &SymMatrix| part.max_abs_on(x, !on_a) > 1e-12 * x.norm().max(1.0);
    if leaks(sub.offset()) || sub.basis().iter().any(leaks) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be supported on the entries of {}",
            if on_a { "A" } else { "B" }
        )));
    }
    Ok(())
}

/// Two-step estimator for the constraints `Σ_A ∈ 𝒞_A` and `L_B ∈ 𝒞_B`,
/// each given as an affine subspace of matrices supported on `A` (resp. `B`).
pub fn two_step_fit(
    link: &LinkFunction,
    part: &EntryPartition,
    constraint_a: &AffineSubspace,
    constraint_b: &AffineSubspace,
    s_n: &SymMatrix,
    opts: &SolveOptions,
) -> Result<TwoStepResult> {
    if !link.essential_smooth() {
        return Err(Error::NotEssentiallySmooth);
    }
    check_support(part, constraint_a, true, "constraint on Sigma_A")?;
    check_support(part, constraint_b, false, "constraint on L_B")?;
    if s_n.dim() != part.m {
        return Err(Error::DimensionMismatch { expected: part.m, found: s_n.dim() });
    }

    // (S1) L_A free, L_B in the constraint set
    let mut gens1: Vec<SymMatrix> = constraint_b.basis().to_vec();
    gens1.extend(part.coords_a());
    let sub1 = AffineSubspace::new(constraint_b.offset().clone(), &gens1)?;
    let step1 = fit_dual_pgd(link, &sub1, s_n, opts)?;
    if step1.status != Status::Converged {
        return Err(Error::NotConverged(step1.status.as_str()));
    }
    let l_hat = step1.l_hat.clone();

    // (S2) Σ ranges over {Σ_A ∈ 𝒞_A}; the normal directions complete it
    let mut tangent: Vec<SymMatrix> = constraint_a.basis().to_vec();
    tangent.extend(part.coords_b());
    let normals = if tangent.is_empty() {
        AffineSubspace::full_space(part.m).basis().to_vec()
    } else {
        orthogonal_complement(part.m, &crate::model::orthonormalize(&tangent)?)
    };
    let sub2 = AffineSubspace::from_orthonormal(l_hat.clone(), normals);

    let restricted = part.fill(&part.set_a, &part.restrict_a(s_n));
    let target_a = part.restrict_a(&constraint_a.project(&restricted)?);
    let start = pd_extension(part, &target_a)?;
    let fit = fit_dual_pgd(link, &sub2, &start, opts)?;
    let gap = part.set_b.iter().map(|&(i, j)| (fit.l_hat.get(i, j) - l_hat.get(i, j)).abs()).fold(0.0, f64::max);
    if gap > 1e-6 * l_hat.norm().max(1.0) {
        log::warn!("two-step fit: L_B moved by {gap:e} in the second step");
    }
    Ok(TwoStepResult { step1, fit, l_b_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn partition_complement() {
        let p = EntryPartition::new(3, &[(1, 0), (2, 2)]).unwrap();
        assert_eq!(p.set_a(), &[(0, 1), (2, 2)]);
        let q = EntryPartition::new(3, &[(2, 2), (1, 0)]).unwrap();
        assert_eq!(q.set_a(), &[(2, 2), (0, 1)]);
        assert_eq!(q.set_b(), p.set_b());
        assert_eq!(p.set_b(), &[(0, 0), (0, 2), (1, 1), (1, 2)]);
        assert!(p.in_a(1, 0));
        assert!(EntryPartition::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(EntryPartition::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn pd_extension_inflates_free_diagonal() {
        // A = {(0,1)} with a large off-diagonal target
        let p = EntryPartition::new(2, &[(0, 1)]).unwrap();
        let s = pd_extension(&p, &[3.0]).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert!(s.min_eig() > 0.0);
    }

    #[test]
    fn pd_extension_by_continuation() {
        // all of A on a chain with strong correlations; zero fill of (0,2)
        // is indefinite but a completion exists
        let p = EntryPartition::new(3, &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]).unwrap();
        let vals = [1.0, 1.0, 1.0, 0.9, 0.9];
        assert!(
            SymMatrix::from_rows(&[vec![1.0, 0.9, 0.0], vec![0.9, 1.0, 0.9], vec![0.0, 0.9, 1.0]]).unwrap().min_eig()
                < 0.0
        );
        let s = pd_extension(&p, &vals).unwrap();
        assert!(s.min_eig() > 0.0);
        assert_eq!(p.restrict_a(&s), vals.to_vec());
    }

    #[test]
    fn pd_extension_impossible() {
        let p = EntryPartition::new(2, &[(0, 0), (1, 1), (0, 1)]).unwrap();
        assert!(matches!(pd_extension(&p, &[1.0, 1.0, 2.0]), Err(Error::NoPdExtension)));
        assert!(matches!(pd_extension(&p, &[-1.0, 1.0, 0.0]), Err(Error::NoPdExtension)));
    }

    #[test]
    fn logdet_two_by_two() {
        let link = LinkFunction::log_det();
        let p = EntryPartition::diagonal(2);
        let s = solve_mixed(&link, &p, &[1.0, 1.0], &[2.0 / 3.0], &SolveOptions::default()).unwrap();
        assert!((s.get(0, 1) - 0.5).abs() < 1e-8);
        let s = solve_mixed(&link, &p, &[1.0, 1.0], &[0.0], &SolveOptions::default()).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn rejects_power_positive() {
        let link = LinkFunction::power(1.0).unwrap();
        let p = EntryPartition::diagonal(2);
        assert!(matches!(
            solve_mixed(&link, &p, &[1.0, 1.0], &[0.0], &SolveOptions::default()),
            Err(Error::NotEssentiallySmooth)
        ));
        assert!(matches!(
            corr_from_offdiag(&link, 2, &[0.0], &SolveOptions::default()),
            Err(Error::UnsupportedLink(_))
        ));
    }

    #[test]
    fn corr_zero_is_identity() {
        for link in [LinkFunction::log_det(), LinkFunction::von_neumann(), LinkFunction::shifted(1.0).unwrap()] {
            let r = corr_from_offdiag(&link, 3, &[0.0; 3], &SolveOptions::default()).unwrap();
            assert!(r.max_abs_diff(&SymMatrix::identity(3)) < 1e-12, "{link}");
        }
        assert!(corr_from_offdiag(&LinkFunction::log_det(), 3, &[0.0; 2], &SolveOptions::default()).is_err());
    }

    #[test]
    fn two_step_rejects_misplaced_constraints() {
        let link = LinkFunction::log_det();
        let p = EntryPartition::diagonal(2);
        let on_b = AffineSubspace::linear(&[coordinate_matrix(2, 0, 1)]).unwrap();
        let on_a = AffineSubspace::linear(&[SymMatrix::identity(2)]).unwrap();
        let s = SymMatrix::identity(2);
        assert!(two_step_fit(&link, &p, &on_b, &on_b, &s, &SolveOptions::default()).is_err());
        assert!(two_step_fit(&link, &p, &on_a, &on_a, &s, &SolveOptions::default()).is_err());
        assert!(two_step_fit(&link, &p, &on_a, &on_b, &s, &SolveOptions::default()).is_ok());
    }
}
