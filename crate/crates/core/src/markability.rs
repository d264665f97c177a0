//! Markability: deciding which partitions of a gate set can be read out
//! while the gate still acts undisturbed, and synthesizing the marking
//! circuits `C`, `D` with `D (U ⊗ I) C (I ⊗ |0⟩) = U ⊗ |n⟩`.
//!
//! For qubits a non-trivial bipartition is markable exactly when, after
//! left-multiplying by the inverse of one member, one block is diagonal and
//! the other anti-diagonal in a common basis `W`. The search below tries
//! every basis that can arise this way instead of committing to the first
//! non-scalar member, which can sit in the anti-diagonal block.

use crate::boards::{apply_board, cnot, nest_boards, CircuitBoard, Register, Wire};
use crate::discrimination::{hs_orthogonal, jointly_discriminable, Verdict};
use crate::error::{Error, Result};
use crate::format::{
    matrix_from_json, matrix_to_json, vector_from_json, vector_to_json, CircuitDoc, WireRole,
};
use crate::gateset::{join_partitions, GateSet, Partition};
use crate::numkernel::{
    basis_vector, complete_to_unitary, dominant_index, eig_unitary, fix_vector_phase, hadamard, identity,
    is_scalar, kron, kron_vec, span_intersection_dim, CMatrix, CVector, Tolerance,
};

/// Diagonal/anti-diagonal classification of a qubit set in a basis `W`,
/// possibly after left-multiplying every member by `prefix†`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitStructure {
    pub basis: CMatrix,
    pub prefix: Option<usize>,
    pub anti_diagonal: Vec<bool>,
}

impl QubitStructure {
    pub fn partition(&self) -> Partition {
        let labels: Vec<usize> = self.anti_diagonal.iter().map(|&a| a as usize).collect();
        Partition::from_labels(&labels)
    }

    pub fn is_nontrivial(&self) -> bool {
        self.anti_diagonal.iter().any(|&a| a) && self.anti_diagonal.iter().any(|&a| !a)
    }

    /// Ancilla label (0 diagonal, 1 anti-diagonal) of each block of `p`,
    /// provided distinct blocks get distinct labels.
    fn block_labels(&self, p: &Partition) -> Option<Vec<usize>> {
        let labels: Vec<usize> = p
            .blocks()
            .iter()
            .map(|b| {
                let label = self.anti_diagonal[b[0]];
                b.iter().all(|&i| self.anti_diagonal[i] == label).then_some(label as usize)
            })
            .collect::<Option<_>>()?;
        let distinct = labels.iter().enumerate().all(|(i, a)| labels[i + 1..].iter().all(|b| a != b));
        distinct.then_some(labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkabilityVerdict {
    pub markable: bool,
    pub partition: Option<Partition>,
    pub structure: Option<QubitStructure>,
}

impl MarkabilityVerdict {
    pub fn basis_change(&self) -> Option<&CMatrix> {
        self.structure.as_ref().map(|s| &s.basis)
    }

    pub fn used_prefix_inverse(&self) -> bool {
        self.structure.as_ref().is_some_and(|s| s.prefix.is_some())
    }

    /// Markable with more than one block.
    pub fn nontrivial(&self) -> bool {
        self.markable && self.partition.as_ref().is_some_and(|p| !p.is_trivial())
    }
}

/// Marking board plus the partition it labels and the label state of each block.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkingCircuit {
    pub board: CircuitBoard,
    pub partition: Partition,
    pub outcomes: Vec<CVector>,
}

impl MarkingCircuit {
    pub fn new(board: CircuitBoard, partition: Partition, outcomes: Vec<CVector>) -> Result<Self> {
        if !board.is_marking_shape() {
            return Err(Error::NotMarkingShape);
        }
        if outcomes.len() != partition.num_blocks() || outcomes.iter().any(|o| o.len() != board.side_dim()) {
            return Err(Error::ShapeMismatch);
        }
        if !orthonormal(&outcomes, 1e-8) {
            return Err(Error::OutcomesNotOrthonormal);
        }
        Ok(Self { board, partition, outcomes })
    }

    pub fn system_dim(&self) -> usize {
        self.board.wires[0].dim
    }

    pub fn ancilla_dims(&self) -> Vec<usize> {
        self.board.wires[1..].iter().map(|w| w.dim).collect()
    }

    /// `C`.
    pub fn pre(&self) -> &CMatrix {
        &self.board.pre
    }

    /// `D`.
    pub fn post(&self) -> &CMatrix {
        &self.board.post
    }

    pub fn to_doc(&self) -> CircuitDoc {
        CircuitDoc {
            wires: self.board.wires.iter().map(Wire::to_doc).collect(),
            pre: matrix_to_json(&self.board.pre),
            post: matrix_to_json(&self.board.post),
            partition: self.partition.blocks().to_vec(),
            outcomes: self.outcomes.iter().map(vector_to_json).collect(),
            fixed_vector: None,
            representatives: None,
        }
    }

    pub fn from_doc(doc: &CircuitDoc) -> Result<Self> {
        let wires = doc.wires.iter().map(Wire::from_doc).collect::<Result<Vec<_>>>()?;
        let slot = wires
            .iter()
            .position(|w| w.role == WireRole::System)
            .ok_or_else(|| Error::DimensionMismatch("circuit has no system wire".into()))?;
        let board = CircuitBoard::new(wires, slot, matrix_from_json(&doc.pre)?, matrix_from_json(&doc.post)?)?;
        let len = doc.partition.iter().map(Vec::len).sum();
        let partition = Partition::new(doc.partition.clone(), len)?;
        let outcomes = doc.outcomes.iter().map(vector_from_json).collect::<Result<Vec<_>>>()?;
        Self::new(board, partition, outcomes)
    }
}

pub(crate) fn orthonormal(vs: &[CVector], tol: f64) -> bool {
    vs.iter().enumerate().all(|(i, a)| {
        vs.iter().enumerate().all(|(j, b)| {
            let expect = if i == j { 1.0 } else { 0.0 };
            (a.dotc(b).norm() - expect).abs() <= tol
        })
    })
}

/// Off-pattern entries of `W† M W` have modulus ≤ tol: `Some(false)` for
/// diagonal, `Some(true)` for anti-diagonal.
fn classify(m: &CMatrix, basis: &CMatrix, tol: f64) -> Option<bool> {
    let r = basis.adjoint() * m * basis;
    let diagonal = r[(0, 1)].norm() <= tol && r[(1, 0)].norm() <= tol;
    let anti = r[(0, 0)].norm() <= tol && r[(1, 1)].norm() <= tol;
    match (diagonal, anti) {
        (true, _) => Some(false),
        (false, true) => Some(true),
        _ => None,
    }
}

fn classification_tol(tol: Tolerance) -> f64 {
    tol.eps.max(1e-12)
}

/// Orthonormal eigenbasis with columns ordered by dominant component and
/// phase-fixed, for reproducible output.
fn eigenbasis(m: &CMatrix, tol: Tolerance) -> Option<CMatrix> {
    let mut pairs = eig_unitary(m, tol.scaled(10.0)).ok()?;
    pairs.sort_by_key(|p| dominant_index(&p.vector));
    let cols: Vec<CVector> = pairs.iter().map(|p| fix_vector_phase(&p.vector)).collect();
    Some(CMatrix::from_columns(&cols))
}

/// Bases in which some member, or some product `U_i† U_j`, is diagonal,
/// each followed by its Hadamard rotation (in which it is anti-diagonal).
fn candidate_bases(gs: &GateSet) -> Vec<CMatrix> {
    let tol = gs.tolerance();
    let n = gs.len();
    let mut sources: Vec<CMatrix> = (0..n).map(|i| gs.matrix(i).clone()).collect();
    for i in 0..n {
        for j in i + 1..n {
            sources.push(gs.matrix(i).adjoint() * gs.matrix(j));
        }
    }
    let h = hadamard();
    let mut out = Vec::new();
    for m in sources.iter().filter(|m| !is_scalar(m, tol)) {
        if let Some(w) = eigenbasis(m, tol) {
            let rotated = &w * &h;
            out.push(w);
            out.push(rotated);
        }
    }
    out.push(identity(2));
    out.push(h);
    out
}

/// First structure (prefix-free before prefixed, bases in candidate order)
/// accepted by `accept`.
pub fn find_structure(gs: &GateSet, accept: impl Fn(&QubitStructure) -> bool) -> Option<QubitStructure> {
    if gs.dimension() != 2 {
        return None;
    }
    let tol = classification_tol(gs.tolerance());
    let bases = candidate_bases(gs);
    let prefixes = std::iter::once(None).chain((0..gs.len()).map(Some));
    for prefix in prefixes {
        let shifted: Vec<CMatrix> = (0..gs.len())
            .map(|i| match prefix {
                Some(p) => gs.matrix(p).adjoint() * gs.matrix(i),
                None => gs.matrix(i).clone(),
            })
            .collect();
        for basis in &bases {
            let classes: Option<Vec<bool>> = shifted.iter().map(|m| classify(m, basis, tol)).collect();
            if let Some(anti_diagonal) = classes {
                let s = QubitStructure { basis: basis.clone(), prefix, anti_diagonal };
                if accept(&s) {
                    return Some(s);
                }
            }
        }
    }
    None
}

/// Whether the bipartition `p` of a qubit set is markable: blocks mutually
/// Hilbert–Schmidt orthogonal, trivially intersecting spans, and neither
/// span more than two-dimensional.
pub fn check_bipartition_markable_qubit(gs: &GateSet, p: &Partition) -> Result<bool> {
    if gs.dimension() != 2 {
        return Err(Error::NotQubit);
    }
    if p.num_blocks() != 2 || p.len() != gs.len() {
        return Err(Error::InvalidPartition("expected a bipartition of the gate set".into()));
    }
    let tol = gs.tolerance();
    let (b0, b1) = (&p.blocks()[0], &p.blocks()[1]);
    let m = gs.members();
    let cross_orthogonal = b0.iter().all(|&i| b1.iter().all(|&j| hs_orthogonal(&m[i], &m[j], tol)));
    let s0: Vec<&CMatrix> = b0.iter().map(|&i| gs.matrix(i)).collect();
    let s1: Vec<&CMatrix> = b1.iter().map(|&i| gs.matrix(i)).collect();
    let (dim0, dim1, common) = span_intersection_dim(&s0, &s1, tol.scaled(1e3))?;
    Ok(cross_orthogonal && common == 0 && dim0 <= 2 && dim1 <= 2)
}

/// Minimal markable partition of a qubit set.
///
/// `markable` is false when no diagonal/anti-diagonal structure exists (the
/// set then admits only the trivial partition). Jointly discriminable sets
/// refine to singletons.
pub fn minimal_partition_qubit(gs: &GateSet) -> Result<MarkabilityVerdict> {
    if gs.dimension() != 2 {
        return Err(Error::NotQubit);
    }
    let n = gs.len();
    let tol = gs.tolerance();
    if (0..n).all(|i| is_scalar(gs.matrix(i), tol)) {
        return Ok(MarkabilityVerdict {
            markable: true,
            partition: Some(Partition::trivial(n)),
            structure: Some(QubitStructure { basis: identity(2), prefix: None, anti_diagonal: vec![false; n] }),
        });
    }
    let joint = jointly_discriminable(gs) == Verdict::Yes;
    let structure = find_structure(gs, QubitStructure::is_nontrivial).or_else(|| find_structure(gs, |_| true));
    let Some(structure) = structure else {
        return Ok(MarkabilityVerdict { markable: false, partition: None, structure: None });
    };
    let partition = if joint { Partition::singletons(n) } else { structure.partition() };
    Ok(MarkabilityVerdict { markable: true, partition: Some(partition), structure: Some(structure) })
}

/// Single-ancilla marking circuit `C = (W ⊗ I) CX (W† ⊗ I)`, with `D = C`
/// conjugated by the prefix member when the structure needed one.
pub fn marking_from_structure(gs: &GateSet, structure: &QubitStructure, p: &Partition) -> Result<MarkingCircuit> {
    let labels = structure.block_labels(p).ok_or(Error::StructureMismatch)?;
    let w = &structure.basis;
    let i2 = identity(2);
    let c = kron(w, &i2) * cnot() * kron(&w.adjoint(), &i2);
    let d = match structure.prefix {
        Some(k) => {
            let v = gs.matrix(k);
            kron(v, &i2) * &c * kron(&v.adjoint(), &i2)
        }
        None => c.clone(),
    };
    let wires = vec![Wire::input(WireRole::System, 2), Wire::ready(WireRole::Outcome, 2)];
    let board = CircuitBoard::new(wires, 0, c, d)?;
    let outcomes = labels.iter().map(|&l| basis_vector(2, l)).collect();
    MarkingCircuit::new(board, p.clone(), outcomes)
}

fn self_checked(gs: &GateSet, mc: MarkingCircuit) -> Result<MarkingCircuit> {
    let (ok, residual) = verify_marking(gs, &mc)?;
    if ok {
        Ok(mc)
    } else {
        Err(Error::SelfCheckFailed(residual))
    }
}

pub fn synthesize_marking_qubit(gs: &GateSet, verdict: &MarkabilityVerdict) -> Result<MarkingCircuit> {
    if gs.dimension() != 2 {
        return Err(Error::NotQubit);
    }
    let (true, Some(p), Some(s)) = (verdict.markable, &verdict.partition, &verdict.structure) else {
        return Err(Error::NotMarkable);
    };
    if p.is_trivial() {
        return trivial_marking(gs);
    }
    if s.block_labels(p).is_some() {
        return self_checked(gs, marking_from_structure(gs, s, p)?);
    }
    synthesize_marking_joint(gs)
}

/// Marking circuit for a prescribed bipartition of a qubit set.
pub fn synthesize_marking_bipartition_qubit(gs: &GateSet, p: &Partition) -> Result<MarkingCircuit> {
    if !check_bipartition_markable_qubit(gs, p)? {
        return Err(Error::NotMarkable);
    }
    let s = find_structure(gs, |s| s.partition() == *p).ok_or(Error::NotMarkable)?;
    self_checked(gs, marking_from_structure(gs, &s, p)?)
}

/// Marking with the trivial partition: `C = D = I`, one idle qubit.
pub fn trivial_marking(gs: &GateSet) -> Result<MarkingCircuit> {
    let d = gs.dimension();
    let wires = vec![Wire::input(WireRole::System, d), Wire::ready(WireRole::Outcome, 2)];
    let board = CircuitBoard::new(wires, 0, identity(2 * d), identity(2 * d))?;
    MarkingCircuit::new(board, Partition::trivial(gs.len()), vec![basis_vector(2, 0)])
}

/// Marking for a Hilbert–Schmidt-orthogonal set in any dimension.
///
/// The input is parked in a holding register while half of a maximally
/// entangled pair probes the gate. The probe's orthonormal Choi vectors are
/// rotated onto `|n⟩` and the identified member is re-applied to the held
/// input, which is then swapped back onto the system wire.
pub fn synthesize_marking_joint(gs: &GateSet) -> Result<MarkingCircuit> {
    let tol = gs.tolerance();
    let d = gs.dimension();
    let n = gs.len();
    let m = gs.members();
    let orthogonal = (0..n).all(|i| (i + 1..n).all(|j| hs_orthogonal(&m[i], &m[j], tol)));
    if !orthogonal {
        return Err(Error::NotJointlyDiscriminable);
    }
    let dd = d * d;
    let scale = 1.0 / (d as f64).sqrt();
    let choi = |u: &CMatrix| CVector::from_fn(dd, |idx, _| u[(idx / d, idx % d)] * scale);
    let bell = choi(&identity(d));
    let prepare = complete_to_unitary(&[bell], dd);
    let chois: Vec<CVector> = (0..n).map(|k| choi(gs.matrix(k))).collect();
    let readout = complete_to_unitary(&chois, dd).adjoint();

    // hold ⊗ (sys, partner): apply U_k to the held input when the probe reads k
    let mut correction = kron(&identity(d), &identity(dd));
    for k in 0..n {
        let proj = kron(&identity(d), &{
            let e = basis_vector(dd, k);
            &e * e.adjoint()
        });
        let apply = kron(gs.matrix(k), &{
            let e = basis_vector(dd, k);
            &e * e.adjoint()
        });
        correction = correction - proj + apply;
    }

    let reg = Register::new(vec![d, d, d]);
    let (sys, hold, partner) = (0, 1, 2);
    let c = reg.lift(&prepare, &[sys, partner]) * reg.lift(&crate::boards::swap(d), &[sys, hold]);
    let dmat = reg.lift(&crate::boards::swap(d), &[sys, hold])
        * reg.lift(&correction, &[hold, sys, partner])
        * reg.lift(&readout, &[sys, partner]);
    let wires = vec![
        Wire::input(WireRole::System, d),
        Wire::ready(WireRole::Outcome, d),
        Wire::ready(WireRole::Outcome, d),
    ];
    let board = CircuitBoard::new(wires, 0, c, dmat)?;
    let outcomes = (0..n).map(|k| basis_vector(dd, k)).collect();
    self_checked(gs, MarkingCircuit::new(board, Partition::singletons(n), outcomes)?)
}

/// Nested composition of two marking circuits for the same set; labels the
/// join of their partitions.
pub fn compose_markings(a: &MarkingCircuit, b: &MarkingCircuit) -> Result<MarkingCircuit> {
    let board = nest_boards(&a.board, &b.board)?;
    let partition = join_partitions(&a.partition, &b.partition)?;
    let outcomes = partition
        .blocks()
        .iter()
        .map(|blk| {
            let na = a.partition.block_of(blk[0]).expect("join refines a");
            let nb = b.partition.block_of(blk[0]).expect("join refines b");
            kron_vec(&a.outcomes[na], &b.outcomes[nb])
        })
        .collect();
    MarkingCircuit::new(board, partition, outcomes)
}

/// Per-member residuals `‖D (U ⊗ I) C (I ⊗ |0⟩) − U ⊗ |n⟩‖_F`.
pub fn marking_residuals(gs: &GateSet, mc: &MarkingCircuit) -> Result<Vec<f64>> {
    if mc.system_dim() != gs.dimension() || mc.partition.len() != gs.len() {
        return Err(Error::ShapeMismatch);
    }
    (0..gs.len())
        .map(|k| {
            let n = mc.partition.block_of(k).ok_or(Error::ShapeMismatch)?;
            let u = gs.matrix(k);
            let realized = apply_board(&mc.board, u)?;
            let outcome = CMatrix::from_column_slice(mc.outcomes[n].len(), 1, mc.outcomes[n].as_slice());
            Ok((realized - kron(u, &outcome)).norm())
        })
        .collect()
}

/// `(ok, max residual)` with `ok` iff every residual is at most `tol · d`.
pub fn verify_marking(gs: &GateSet, mc: &MarkingCircuit) -> Result<(bool, f64)> {
    let residuals = marking_residuals(gs, mc)?;
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    Ok((max <= gs.tolerance().eps * gs.dimension() as f64, max))
}
