#![allow(dead_code)]

use entcov_core::{GraphSpec, LinkFunction, SymMatrix};
use proptest::prelude::*;

pub fn links() -> Vec<LinkFunction> {
    vec![
        LinkFunction::log_det(),
        LinkFunction::von_neumann(),
        LinkFunction::power(1.0).unwrap(),
        LinkFunction::power(2.0).unwrap(),
        LinkFunction::power(-2.0).unwrap(),
        LinkFunction::power(0.5).unwrap(),
        LinkFunction::shifted(1.0).unwrap(),
        LinkFunction::shifted(0.3).unwrap(),
    ]
}

/// The four links used for solver comparisons.
pub fn solver_links() -> Vec<LinkFunction> {
    vec![
        LinkFunction::log_det(),
        LinkFunction::von_neumann(),
        LinkFunction::power(-2.0).unwrap(),
        LinkFunction::shifted(1.0).unwrap(),
    ]
}

/// `BBᵀ/m + cI` from entries of `B` in `[-1, 1]`.
pub fn pd_from(m: usize, entries: &[f64], shift: f64) -> SymMatrix {
    let b = nalgebra::DMatrix::from_fn(m, m, |i, j| entries[i * m + j]);
    let s = &b * b.transpose() / m as f64 + nalgebra::DMatrix::identity(m, m) * shift;
    SymMatrix::from_matrix_symmetrized(s)
}

pub fn sym_from(m: usize, entries: &[f64]) -> SymMatrix {
    SymMatrix::from_upper_fn(m, |i, j| entries[i * m + j])
}

pub fn arb_pd(m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = SymMatrix> {
    m.prop_flat_map(|m| (Just(m), prop::collection::vec(-1.0..1.0f64, m * m), 0.3..1.5f64))
        .prop_map(|(m, e, c)| pd_from(m, &e, c))
}

pub fn arb_pd_dir(m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (SymMatrix, SymMatrix)> {
    m.prop_flat_map(|m| {
        (Just(m), prop::collection::vec(-1.0..1.0f64, m * m), 0.3..1.5f64, prop::collection::vec(-1.0..1.0f64, m * m))
    })
    .prop_map(|(m, e, c, d)| (pd_from(m, &e, c), sym_from(m, &d)))
}

/// Random graph from a bit mask over the upper pairs.
pub fn graph_from_mask(m: usize, mask: &[bool]) -> GraphSpec {
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            if mask[k] {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    GraphSpec::new(m, &edges).unwrap()
}

pub fn arb_graph_instance(m: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (GraphSpec, SymMatrix)> {
    m.prop_flat_map(|m| {
        (
            Just(m),
            prop::collection::vec(any::<bool>(), m * (m - 1) / 2),
            prop::collection::vec(-1.0..1.0f64, m * m),
            0.3..1.5f64,
        )
    })
    .prop_map(|(m, mask, e, c)| (graph_from_mask(m, &mask), pd_from(m, &e, c)))
}

pub fn ex_l13() -> SymMatrix {
    SymMatrix::from_rows(&[vec![4.0, 1.0, 2.0], vec![1.0, 4.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap()
}

pub fn chain3() -> GraphSpec {
    GraphSpec::new(3, &[(0, 1), (1, 2)]).unwrap()
}
