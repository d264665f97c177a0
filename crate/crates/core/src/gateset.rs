//! Gate sets, partitions of gate sets, and the gate-set JSON file format.

use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::{matrix_from_json, matrix_to_json, GateDoc, GateSetDoc};
use crate::numkernel::{unitarity_residual, CMatrix, Tolerance};

/// A named representative of a gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    pub name: String,
    pub matrix: CMatrix,
}

impl Unitary {
    pub fn new(name: impl Into<String>, matrix: CMatrix) -> Self {
        Self { name: name.into(), matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same representative multiplied by a scalar.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { name: self.name.clone(), matrix: &self.matrix * factor }
    }
}

/// Ordered, validated collection of unitaries over one dimension.
#[derive(Debug, Clone)]
pub struct GateSet {
    dimension: usize,
    members: Vec<Unitary>,
    tolerance: Tolerance,
}

impl GateSet {
    pub fn new(dimension: usize, members: Vec<Unitary>, tolerance: Tolerance) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::DimensionMismatch("dimension must be positive".into()));
        }
        if members.is_empty() {
            return Err(Error::EmptyGateSet);
        }
        let mut names = HashSet::new();
        for u in &members {
            if u.matrix.shape() != (dimension, dimension) {
                return Err(Error::DimensionMismatch(format!(
                    "gate `{}` is {}x{}, expected {dimension}x{dimension}",
                    u.name,
                    u.matrix.nrows(),
                    u.matrix.ncols()
                )));
            }
            if !names.insert(u.name.as_str()) {
                return Err(Error::DuplicateName(u.name.clone()));
            }
            if unitarity_residual(&u.matrix) > tolerance.eps * dimension as f64 {
                return Err(Error::NotUnitary(u.name.clone()));
            }
        }
        Ok(Self { dimension, members, tolerance })
    }

    /// Build from unnamed matrices, naming them `U0`, `U1`, ...
    pub fn from_matrices(matrices: Vec<CMatrix>, tolerance: Tolerance) -> Result<Self> {
        let dimension = matrices.first().map(|m| m.nrows()).unwrap_or(0);
        let members = matrices
            .into_iter()
            .enumerate()
            .map(|(k, m)| Unitary::new(format!("U{k}"), m))
            .collect();
        Self::new(dimension, members, tolerance)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Unitary] {
        &self.members
    }

    pub fn matrix(&self, k: usize) -> &CMatrix {
        &self.members[k].matrix
    }

    pub fn names(&self) -> Vec<String> {
        self.members.iter().map(|u| u.name.clone()).collect()
    }

    pub fn unitarity_residuals(&self) -> Vec<f64> {
        self.members.iter().map(|u| unitarity_residual(&u.matrix)).collect()
    }

    /// Same gates, members replaced one for one.
    pub fn with_members(&self, members: Vec<Unitary>) -> Result<Self> {
        Self::new(self.dimension, members, self.tolerance)
    }

    pub fn to_doc(&self) -> GateSetDoc {
        GateSetDoc {
            dimension: self.dimension,
            tolerance: Some(self.tolerance.eps),
            gates: gate_docs(&self.members),
        }
    }
}

pub(crate) fn gate_docs(members: &[Unitary]) -> Vec<GateDoc> {
    members
        .iter()
        .map(|u| GateDoc { name: u.name.clone(), matrix: matrix_to_json(&u.matrix) })
        .collect()
}

/// Parse and validate a gate-set JSON document.
///
/// `override_tol` takes precedence over a `tolerance` field in the document.
pub fn parse_gate_set_with(text: &[u8], override_tol: Option<Tolerance>) -> Result<GateSet> {
    let doc: GateSetDoc = serde_json::from_slice(text).map_err(|e| Error::Syntax(e.to_string()))?;
    let tolerance = match (override_tol, doc.tolerance) {
        (Some(t), _) => t,
        (None, Some(eps)) => Tolerance::new(eps)?,
        (None, None) => Tolerance::default(),
    };
    let members = doc
        .gates
        .iter()
        .map(|g| Ok(Unitary::new(g.name.clone(), matrix_from_json(&g.matrix)?)))
        .collect::<Result<Vec<_>>>()?;
    GateSet::new(doc.dimension, members, tolerance)
}

pub fn parse_gate_set(text: &[u8]) -> Result<GateSet> {
    parse_gate_set_with(text, None)
}

/// Representative whose first largest-modulus entry (column-major scan) is
/// real and positive.
pub fn canonical_representative(u: &Unitary) -> Unitary {
    let m = &u.matrix;
    let mut at = 0;
    let mut best_norm = m[(0, 0)].norm();
    // column-major storage matches the scan order
    for (k, z) in m.iter().enumerate() {
        if z.norm() > best_norm * (1.0 + 1e-12) {
            at = k;
            best_norm = z.norm();
        }
    }
    let best = m.as_slice()[at];
    if best_norm == 0.0 || (best.im == 0.0 && best.re > 0.0) {
        return u.clone();
    }
    let mut out = u.scaled(best.conj() / best_norm);
    // pin the reference entry so a second pass is an exact no-op
    out.matrix.as_mut_slice()[at] = Complex64::new(best_norm, 0.0);
    out
}

/// Disjoint, covering, nonempty blocks of member indices.
///
/// Stored normalized: indices ascending within a block, blocks ordered by
/// their smallest index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, len: usize) -> Result<Self> {
        let mut seen = vec![false; len];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &i in b {
                if i >= len {
                    return Err(Error::InvalidPartition(format!("index {i} out of range")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!("index {i} repeated")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition("blocks do not cover every member".into()));
        }
        Ok(Self::normalized(blocks))
    }

    fn normalized(mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Self { blocks }
    }

    pub fn trivial(len: usize) -> Self {
        Self { blocks: vec![(0..len).collect()] }
    }

    pub fn singletons(len: usize) -> Self {
        Self { blocks: (0..len).map(|i| vec![i]).collect() }
    }

    /// Partition from a block label per member.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match blocks.iter_mut().find(|(label, _)| *label == l) {
                Some((_, b)) => b.push(i),
                None => blocks.push((l, vec![i])),
            }
        }
        Self::normalized(blocks.into_iter().map(|(_, b)| b).collect())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Number of members covered.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn block_of(&self, member: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&member))
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && self.blocks.iter().all(|b| {
                let target = coarser.block_of(b[0]);
                b.iter().all(|&i| coarser.block_of(i) == target)
            })
    }
}

/// Coarsest common refinement of two partitions.
pub fn join_partitions(p: &Partition, q: &Partition) -> Result<Partition> {
    if p.len() != q.len() {
        return Err(Error::RangeMismatch);
    }
    let mut blocks = Vec::new();
    for a in p.blocks() {
        for b in q.blocks() {
            let common: Vec<usize> = a.iter().copied().filter(|i| b.contains(i)).collect();
            if !common.is_empty() {
                blocks.push(common);
            }
        }
    }
    Ok(Partition::normalized(blocks))
}
