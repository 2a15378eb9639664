//! Affine constraint sets `𝓛 = A₀ + span{A₁ … A_d}` in the space of symmetric
//! matrices with the trace inner product.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::sym::SymMatrix;

/// Relative residual norm below which Gram–Schmidt drops a vector.
pub const RANK_TOL: f64 = 1e-10;

/// Default tolerance scale for the Jordan closure check.
pub const JORDAN_TOL: f64 = 1e-9;

/// `A₀ + span{A₁ … A_d}` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    offset: SymMatrix,
    basis: Vec<SymMatrix>,
}

/// Undirected simple graph on nodes `0..m`; the diagonal is always free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    m: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphSpec {
    /// Zero-based edges; duplicates (in either orientation) and self-loops are
    /// rejected.
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut out: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for {m} nodes")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if out.contains(&e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            out.push(e);
        }
        out.sort_unstable();
        Ok(GraphSpec { m, edges: out })
    }

    pub fn complete(m: usize) -> Self {
        let edges = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
        GraphSpec { m, edges }
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i == j || self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Off-diagonal pairs `(i, j)`, `i < j`, that are not edges.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        (0..self.m)
            .flat_map(|i| ((i + 1)..self.m).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.has_edge(i, j))
            .collect()
    }
}

/// A hyperplane `{L : ⟨normal, L⟩ = level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: SymMatrix,
    pub level: f64,
}

/// Orthonormal element of the coordinate basis of 𝕊ᵐ for the pair `(i, j)`.
pub fn coordinate_matrix(m: usize, i: usize, j: usize) -> SymMatrix {
    let e = SymMatrix::unit_pair(m, i, j);
    if i == j {
        e
    } else {
        e.scale(core::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Modified Gram–Schmidt under `⟨A, B⟩ = tr(AB)`.
///
/// Vectors whose residual falls below `1e-10` times the largest input norm
/// are dropped.
pub fn orthonormalize(mats: &[SymMatrix]) -> Result<Vec<SymMatrix>> {
    let Some(first) = mats.first() else {
        return Err(Error::EmptyBasis);
    };
    let m = first.dim();
    for a in mats {
        if a.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: a.dim() });
        }
    }
    let scale = mats.iter().map(SymMatrix::norm).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::EmptyBasis);
    }
    let out = gram_schmidt(mats.iter().cloned(), &[], RANK_TOL * scale);
    if out.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if out.len() < mats.len() {
        log::warn!("basis is rank deficient: {} of {} generators kept", out.len(), mats.len());
    }
    Ok(out)
}

fn gram_schmidt(candidates: impl Iterator<Item = SymMatrix>, against: &[SymMatrix], drop_below: f64) -> Vec<SymMatrix> {
    let mut out: Vec<SymMatrix> = Vec::new();
    for a in candidates {
        let mut v = a.into_matrix();
        // two passes keep the output orthonormal to rounding
        for _ in 0..2 {
            for q in against.iter().chain(out.iter()) {
                let c = v.dot(q.as_matrix());
                v -= q.as_matrix() * c;
            }
        }
        let n = v.norm();
        if n > drop_below {
            out.push(SymMatrix::from_matrix_symmetrized(v / n));
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in 𝕊ᵐ.
/// `basis` must already be orthonormal.
pub fn orthogonal_complement(m: usize, basis: &[SymMatrix]) -> Vec<SymMatrix> {
    let coords = (0..m).flat_map(|i| (i..m).map(move |j| coordinate_matrix(m, i, j)));
    gram_schmidt(coords, basis, 1e-8)
}

impl AffineSubspace {
    /// `offset + span(generators)`; generators are orthonormalized and may be
    /// empty (a single point).
    pub fn new(offset: SymMatrix, generators: &[SymMatrix]) -> Result<Self> {
        for g in generators {
            offset.check_dim(g)?;
        }
        let basis = if generators.is_empty() { Vec::new() } else { orthonormalize(generators)? };
        Ok(AffineSubspace { offset, basis })
    }

    /// Linear subspace spanned by `generators`.
    pub fn linear(generators: &[SymMatrix]) -> Result<Self> {
        let first = generators.first().ok_or(Error::EmptyBasis)?;
        Self::new(SymMatrix::zeros(first.dim()), generators)
    }

    /// Takes an already orthonormal basis as is.
    pub(crate) fn from_orthonormal(offset: SymMatrix, basis: Vec<SymMatrix>) -> Self {
        AffineSubspace { offset, basis }
    }

    /// All of 𝕊ᵐ.
    pub fn full_space(m: usize) -> Self {
        let basis = (0..m).flat_map(|i| (i..m).map(move |j| coordinate_matrix(m, i, j))).collect();
        AffineSubspace { offset: SymMatrix::zeros(m), basis }
    }

    /// Matrices with equal diagonal entries and equal off-diagonal entries.
    pub fn equicorrelation(m: usize) -> Self {
        let mut gens = alloc::vec![SymMatrix::identity(m)];
        if m > 1 {
            gens.push(&SymMatrix::ones(m) - &SymMatrix::identity(m));
        }
        Self::linear(&gens).expect("equicorrelation generators are nonzero")
    }

    /// The intersection of hyperplanes `⟨Bᵢ, L⟩ = cᵢ`. With no hyperplanes this
    /// is all of 𝕊ᵐ.
    pub fn from_hyperplanes(m: usize, planes: &[Hyperplane]) -> Result<Self> {
        if planes.is_empty() {
            return Ok(Self::full_space(m));
        }
        for p in planes {
            if p.normal.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, found: p.normal.dim() });
            }
        }
        // offset: minimum-norm solution Σ αⱼ Bⱼ of the level equations
        let k = planes.len();
        let gram = DMatrix::from_fn(k, k, |i, j| planes[i].normal.inner(&planes[j].normal));
        let levels = DVector::from_iterator(k, planes.iter().map(|p| p.level));
        let alpha = gram
            .clone()
            .svd(true, true)
            .solve(&levels, 1e-12 * gram.amax().max(1e-300))
            .map_err(|e| Error::InvalidArgument(e.into()))?;
        let mut offset = SymMatrix::zeros(m);
        for (a, p) in alpha.iter().zip(planes) {
            offset = offset.axpy(*a, &p.normal);
        }
        for p in planes {
            let gap = (p.normal.inner(&offset) - p.level).abs();
            if gap > 1e-8 * (1.0 + p.level.abs()) * p.normal.norm().max(1.0) {
                return Err(Error::InvalidArgument(format!("inconsistent hyperplanes (residual {gap:e})")));
            }
        }
        let normals: Vec<SymMatrix> = planes.iter().map(|p| p.normal.clone()).collect();
        let normals = orthonormalize(&normals)?;
        let basis = orthogonal_complement(m, &normals);
        Ok(AffineSubspace { offset, basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn offset(&self) -> &SymMatrix {
        &self.offset
    }

    pub fn basis(&self) -> &[SymMatrix] {
        &self.basis
    }

    pub fn is_linear(&self) -> bool {
        self.offset.norm() == 0.0
    }

    /// The linear part `span{A₁ … A_d}`.
    pub fn linear_part(&self) -> AffineSubspace {
        AffineSubspace { offset: SymMatrix::zeros(self.ambient_dim()), basis: self.basis.clone() }
    }

    /// Coordinates `⟨M, Aᵢ⟩`.
    pub fn coordinates(&self, m: &SymMatrix) -> Result<Vec<f64>> {
        self.offset.check_dim(m)?;
        Ok(self.basis.iter().map(|a| a.inner(m)).collect())
    }

    /// `A₀ + Σ θᵢ Aᵢ`.
    pub fn point(&self, theta: &[f64]) -> Result<SymMatrix> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: theta.len() });
        }
        Ok(self.basis.iter().zip(theta).fold(self.offset.clone(), |acc, (a, t)| acc.axpy(*t, a)))
    }

    /// Orthogonal projection onto the linear part.
    pub fn project_linear(&self, m: &SymMatrix) -> Result<SymMatrix> {
        self.offset.check_dim(m)?;
        Ok(self.project_linear_unchecked(m))
    }

    pub(crate) fn project_linear_unchecked(&self, m: &SymMatrix) -> SymMatrix {
        let mut acc = SymMatrix::zeros(self.ambient_dim()).into_matrix();
        for a in &self.basis {
            acc += a.as_matrix() * a.inner(m);
        }
        SymMatrix::from_matrix_symmetrized(acc)
    }

    /// Orthogonal projection onto the complement of the linear part.
    pub fn project_complement(&self, m: &SymMatrix) -> Result<SymMatrix> {
        Ok(m - &self.project_linear(m)?)
    }

    /// `A₀ + Σᵢ ⟨M − A₀, Aᵢ⟩ Aᵢ`.
    pub fn project(&self, m: &SymMatrix) -> Result<SymMatrix> {
        let shifted = m - self.offset_checked(m)?;
        Ok(&self.offset + &self.project_linear_unchecked(&shifted))
    }

    fn offset_checked(&self, m: &SymMatrix) -> Result<&SymMatrix> {
        self.offset.check_dim(m)?;
        Ok(&self.offset)
    }

    /// Frobenius distance from `M` to the subspace.
    pub fn distance(&self, m: &SymMatrix) -> Result<f64> {
        Ok((m - &self.project(m)?).norm())
    }
}

/// `𝓛_G`: symmetric matrices vanishing off the graph (diagonal free).
pub fn subspace_from_graph(g: &GraphSpec) -> AffineSubspace {
    let m = g.nodes();
    let mut basis: Vec<SymMatrix> = (0..m).map(|i| coordinate_matrix(m, i, i)).collect();
    basis.extend(g.edges().iter().map(|&(i, j)| coordinate_matrix(m, i, j)));
    AffineSubspace::from_orthonormal(SymMatrix::zeros(m), basis)
}

/// Hyperplanes `L_ij = 0` for every non-edge.
pub fn graph_hyperplanes(g: &GraphSpec) -> Vec<Hyperplane> {
    g.non_edges()
        .into_iter()
        .map(|(i, j)| Hyperplane { normal: SymMatrix::unit_pair(g.nodes(), i, j), level: 0.0 })
        .collect()
}

/// Symmetric matrices whose row sums are all equal.
pub fn row_sum_subspace(m: usize) -> AffineSubspace {
    if m == 1 {
        return AffineSubspace::full_space(1);
    }
    // I together with the zero-row-sum matrices E_ij − E_ii − E_jj
    // (as symmetric pairs) spans the space.
    let mut gens = alloc::vec![SymMatrix::identity(m)];
    for i in 0..m {
        for j in (i + 1)..m {
            gens.push(SymMatrix::from_upper_fn(m, |a, b| {
                if (a, b) == (i, j) {
                    1.0
                } else if a == b && (a == i || a == j) {
                    -1.0
                } else {
                    0.0
                }
            }));
        }
    }
    AffineSubspace::linear(&gens).expect("row-sum generators are nonzero")
}

/// Whether the linear subspace is closed under `½(AB + BA)`.
pub fn is_jordan_algebra(sub: &AffineSubspace, tol: f64) -> Result<bool> {
    if !sub.is_linear() {
        return Err(Error::NotLinear);
    }
    let basis = sub.basis();
    for (i, a) in basis.iter().enumerate() {
        for b in &basis[i..] {
            let prod = a.jordan_product(b);
            let resid = (&prod - &sub.project_linear_unchecked(&prod)).norm();
            if resid > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// [`is_jordan_algebra`] with the default tolerance `1e-9 · d`.
pub fn is_jordan_algebra_default(sub: &AffineSubspace) -> Result<bool> {
    is_jordan_algebra(sub, JORDAN_TOL * (sub.dim().max(1) as f64))
}

/// Whether `I ∈ span{A₁ … A_d}`.
pub fn contains_identity(sub: &AffineSubspace) -> bool {
    let m = sub.ambient_dim();
    let id = SymMatrix::identity(m);
    let resid = (&id - &sub.project_linear_unchecked(&id)).norm();
    resid <= 1e-10 * (m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gram_is_identity(b: &[SymMatrix]) -> bool {
        b.iter().enumerate().all(|(i, a)| {
            b.iter().enumerate().all(|(j, c)| {
                let want = if i == j { 1.0 } else { 0.0 };
                (a.inner(c) - want).abs() < 1e-10
            })
        })
    }

    #[test]
    fn orthonormalize_examples() {
        let i2 = SymMatrix::identity(2);
        let out = orthonormalize(core::slice::from_ref(&i2)).unwrap();
        assert!(out[0].max_abs_diff(&i2.scale(1.0 / 2f64.sqrt())) < 1e-15);

        let d = SymMatrix::from_diagonal(&[1.0, -1.0]);
        let out = orthonormalize(&[i2.clone(), d.clone()]).unwrap();
        assert!(out[1].max_abs_diff(&d.scale(1.0 / 2f64.sqrt())) < 1e-15);

        let out = orthonormalize(&[i2.clone(), i2.scale(2.0), d]).unwrap();
        assert_eq!(out.len(), 2);
        assert!(gram_is_identity(&out));

        assert_eq!(orthonormalize(&[SymMatrix::zeros(2)]), Err(Error::EmptyBasis));
        assert_eq!(orthonormalize(&[]), Err(Error::EmptyBasis));
    }

    #[test]
    fn graph_subspace_dimensions() {
        let chain = GraphSpec::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(subspace_from_graph(&chain).dim(), 5);
        assert_eq!(subspace_from_graph(&GraphSpec::new(2, &[]).unwrap()).dim(), 2);
        assert_eq!(subspace_from_graph(&GraphSpec::complete(3)).dim(), 6);
        assert!(gram_is_identity(subspace_from_graph(&chain).basis()));
    }

    #[test]
    fn graph_validation() {
        assert!(GraphSpec::new(3, &[(0, 3)]).is_err());
        assert!(GraphSpec::new(3, &[(1, 1)]).is_err());
        assert!(GraphSpec::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(GraphSpec::new(0, &[]).is_err());
    }

    #[test]
    fn projection_examples() {
        let chain = subspace_from_graph(&GraphSpec::new(3, &[(0, 1), (1, 2)]).unwrap());
        let m = SymMatrix::from_rows(&[vec![1.0, 0.2, 0.7], vec![0.2, 2.0, -0.4], vec![0.7, -0.4, 3.0]]).unwrap();
        let p = chain.project(&m).unwrap();
        let want = SymMatrix::from_rows(&[vec![1.0, 0.2, 0.0], vec![0.2, 2.0, -0.4], vec![0.0, -0.4, 3.0]]).unwrap();
        assert!(p.max_abs_diff(&want) < 1e-15);

        assert!(AffineSubspace::full_space(3).project(&m).unwrap().max_abs_diff(&m) < 1e-15);

        let ray = AffineSubspace::linear(&[SymMatrix::identity(2)]).unwrap();
        let p = ray.project(&SymMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert!(p.max_abs_diff(&SymMatrix::identity(2).scale(2.0)) < 1e-14);

        assert!(matches!(ray.project(&m), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn jordan_examples() {
        let eq = AffineSubspace::equicorrelation(3);
        assert!(is_jordan_algebra_default(&eq).unwrap());
        assert!(contains_identity(&eq));

        let chain = subspace_from_graph(&GraphSpec::new(3, &[(0, 1), (1, 2)]).unwrap());
        assert!(!is_jordan_algebra_default(&chain).unwrap());
        assert!(contains_identity(&chain));

        assert!(is_jordan_algebra_default(&AffineSubspace::full_space(3)).unwrap());

        let anti = AffineSubspace::linear(&[SymMatrix::from_diagonal(&[1.0, -1.0])]).unwrap();
        assert!(!contains_identity(&anti));

        let shifted = AffineSubspace::new(SymMatrix::identity(2), &[SymMatrix::unit_pair(2, 0, 1)]).unwrap();
        assert_eq!(is_jordan_algebra_default(&shifted), Err(Error::NotLinear));
    }

    #[test]
    fn chain_jordan_product_has_corner_entry() {
        // (E12 + E21)(E23 + E32) + transpose has a nonzero (1,3) entry
        let a = SymMatrix::unit_pair(3, 0, 1);
        let b = SymMatrix::unit_pair(3, 1, 2);
        let p = a.jordan_product(&b);
        assert_eq!(p.get(0, 2), 0.5);
    }

    #[test]
    fn row_sum_space() {
        assert_eq!(row_sum_subspace(2).dim(), 2);
        assert_eq!(row_sum_subspace(1).dim(), 1);
        for m in 1..=5 {
            let sub = row_sum_subspace(m);
            assert_eq!(sub.dim(), m * (m - 1) / 2 + 1);
            assert!(gram_is_identity(sub.basis()));
            let j = SymMatrix::ones(m);
            assert!(sub.distance(&j).unwrap() < 1e-12);
            assert!(is_jordan_algebra_default(&sub).unwrap());
            assert!(contains_identity(&sub));
        }
    }

    #[test]
    fn hyperplane_subspace_matches_graph() {
        let g = GraphSpec::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let from_planes = AffineSubspace::from_hyperplanes(4, &graph_hyperplanes(&g)).unwrap();
        let direct = subspace_from_graph(&g);
        assert_eq!(from_planes.dim(), direct.dim());
        let m = SymMatrix::from_upper_fn(4, |i, j| (i * 4 + j) as f64 * 0.1 + 1.0);
        let a = from_planes.project(&m).unwrap();
        let b = direct.project(&m).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn affine_hyperplane_offset() {
        let plane = Hyperplane { normal: SymMatrix::unit_pair(2, 0, 1), level: 0.8 };
        let sub = AffineSubspace::from_hyperplanes(2, &[plane]).unwrap();
        assert!((sub.offset().get(0, 1) - 0.4).abs() < 1e-14);
        assert_eq!(sub.dim(), 2);
        let p = sub.project(&SymMatrix::identity(2)).unwrap();
        assert!((p.get(0, 1) - 0.4).abs() < 1e-14);
    }
}
