//! JSON model specifications. Matrix indices are 1-based.

use std::path::Path;

use entcov_core::mixed::EntryPartition;
use entcov_core::model::{row_sum_subspace, subspace_from_graph};
use entcov_core::{AffineSubspace, GraphSpec, SymMatrix};
use serde::Deserialize;

use crate::{CliError, Result};

/// Constraint on the link matrix `L`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintSpec {
    /// `L` vanishes off the graph.
    Graph { m: usize, edges: Vec<[usize; 2]> },
    /// `offset + span(generators)`; the offset defaults to zero.
    Basis {
        #[serde(default)]
        offset: Option<Vec<Vec<f64>>>,
        generators: Vec<Vec<Vec<f64>>>,
    },
    /// Matrices with equal row sums.
    Rowsum { m: usize },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConstraintFile {
    Wrapped { constraint: ConstraintSpec },
    Bare(ConstraintSpec),
}

/// Mixed parametrization input: `Σ` on the listed entries `A`, `L` on the
/// remaining upper-triangular entries (row by row).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename = "mixed")]
pub struct MixedSpec {
    pub m: usize,
    pub a_entries: Vec<[usize; 2]>,
    pub sigma_a: Vec<f64>,
    pub l_b: Vec<f64>,
}

fn zero_based(m: usize, [i, j]: [usize; 2]) -> Result<(usize, usize)> {
    if i == 0 || j == 0 || i > m || j > m {
        return Err(CliError::Input(format!("index pair [{i}, {j}] out of range 1..={m}")));
    }
    Ok((i - 1, j - 1))
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<SymMatrix> {
    SymMatrix::from_rows(rows).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

impl ConstraintSpec {
    pub fn parse(text: &str) -> Result<Self> {
        match serde_json::from_str::<ConstraintFile>(text) {
            Ok(ConstraintFile::Wrapped { constraint }) | Ok(ConstraintFile::Bare(constraint)) => Ok(constraint),
            Err(e) => Err(CliError::Input(format!("invalid constraint specification: {e}"))),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            ConstraintSpec::Graph { m, .. } | ConstraintSpec::Rowsum { m } => Some(*m),
            ConstraintSpec::Basis { offset, generators } => {
                offset.as_ref().map(Vec::len).or_else(|| generators.first().map(Vec::len))
            }
        }
    }

    pub fn graph(&self) -> Result<GraphSpec> {
        match self {
            ConstraintSpec::Graph { m, edges } => {
                let edges = edges.iter().map(|&e| zero_based(*m, e)).collect::<Result<Vec<_>>>()?;
                Ok(GraphSpec::new(*m, &edges)?)
            }
            _ => Err(CliError::Input("a graph constraint is required".into())),
        }
    }

    pub fn subspace(&self) -> Result<AffineSubspace> {
        match self {
            ConstraintSpec::Graph { .. } => Ok(subspace_from_graph(&self.graph()?)),
            ConstraintSpec::Rowsum { m } => {
                if *m == 0 {
                    return Err(CliError::Input("m must be positive".into()));
                }
                Ok(row_sum_subspace(*m))
            }
            ConstraintSpec::Basis { offset, generators } => {
                let m = self
                    .dim()
                    .ok_or_else(|| CliError::Input("basis constraint needs an offset or generators".into()))?;
                let offset = match offset {
                    Some(rows) => matrix_from_rows(rows, "offset")?,
                    None => SymMatrix::zeros(m),
                };
                let gens = generators
                    .iter()
                    .enumerate()
                    .map(|(k, g)| matrix_from_rows(g, &format!("generator {}", k + 1)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AffineSubspace::new(offset, &gens)?)
            }
        }
    }
}

impl MixedSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid mixed specification: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn partition(&self) -> Result<EntryPartition> {
        let a = self.a_entries.iter().map(|&e| zero_based(self.m, e)).collect::<Result<Vec<_>>>()?;
        Ok(EntryPartition::new(self.m, &a)?)
    }
}
