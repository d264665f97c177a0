//! Controllability: fixed vectors, representative alignment, and the two
//! control-circuit constructions.
//!
//! Basis order is `control ⊗ system ⊗ side wires` with the identity block
//! first, so control `|0⟩` leaves the system alone and `|1⟩` applies `U`.

use num_complex::Complex64;

use crate::boards::{apply_board, branch, cnot, extract_side_state, swap, CircuitBoard, Register, Wire};
use crate::discrimination::{hs_orthogonal, jointly_discriminable, Verdict};
use crate::error::{Error, Result};
use crate::format::{
    matrix_from_json, matrix_to_json, vector_from_json, vector_to_json, CircuitDoc, GateDoc, WireRole,
};
use crate::gateset::{gate_docs, GateSet, Partition, Unitary};
use crate::markability::{
    marking_from_structure, minimal_partition_qubit, synthesize_marking_joint, trivial_marking,
    verify_marking, MarkingCircuit, QubitStructure,
};
use crate::numkernel::{
    basis_vector, fix_vector_phase, identity, intersect_subspaces, kron, kron_vec, null_space,
    unitary_eigenspaces, CMatrix, CVector, Tolerance, ONE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedVectorMode {
    /// `V_n† U ψ = ψ`.
    Strict,
    /// `V_n† U ψ ∝ ψ`.
    Projective,
}

/// A common fixed vector with the phase `c` of `V_n† U ψ = c ψ` for every
/// member, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedVector {
    pub psi: CVector,
    pub phases: Vec<Complex64>,
}

impl FixedVector {
    /// Phases of `psi` against every member of `gs` grouped by `p`, or
    /// `None` if `psi` is not a common eigenvector within `10·tol`.
    pub fn measure(gs: &GateSet, p: &Partition, psi: &CVector) -> Option<Self> {
        let tol = gs.tolerance().eps.max(1e-12) * 10.0;
        let psi = psi.normalize();
        let mut phases = vec![ONE; gs.len()];
        for block in p.blocks() {
            let v = gs.matrix(block[0]);
            for &k in block {
                let image = v.adjoint() * gs.matrix(k) * &psi;
                let c = psi.dotc(&image);
                if c.norm() < 0.5 || (&image - &psi * c).norm() > tol {
                    return None;
                }
                phases[k] = c / c.norm();
            }
        }
        Some(Self { psi, phases })
    }

    pub fn is_strict(&self, tol: Tolerance) -> bool {
        let tol = tol.eps.max(1e-12) * 10.0;
        self.phases.iter().all(|c| (c - ONE).norm() <= tol)
    }
}

/// `V_n† U` for every member, `V_n` the first member of its block.
fn relative_family(gs: &GateSet, p: &Partition) -> Vec<CMatrix> {
    let mut family = vec![identity(gs.dimension()); gs.len()];
    for block in p.blocks() {
        let v = gs.matrix(block[0]).adjoint();
        for &k in block {
            family[k] = &v * gs.matrix(k);
        }
    }
    family
}

/// Unit vector of a subspace closest to the lowest-index standard basis vector.
fn pick_vector(subspace: &CMatrix) -> CVector {
    let d = subspace.nrows();
    let projector = subspace * subspace.adjoint();
    let mut best = 0;
    let mut best_norm = -1.0;
    for j in 0..d {
        let n = projector.column(j).norm();
        if n > best_norm + 1e-9 {
            best = j;
            best_norm = n;
        }
    }
    fix_vector_phase(&projector.column(best).into_owned().normalize())
}

fn common_eigenvector(family: &[CMatrix], subspace: CMatrix, tol: Tolerance) -> Option<CVector> {
    let Some((first, rest)) = family.split_first() else {
        return Some(pick_vector(&subspace));
    };
    for space in unitary_eigenspaces(first, tol.scaled(10.0)).ok()? {
        let inter = intersect_subspaces(&subspace, &space.basis, tol);
        if inter.ncols() > 0 {
            if let Some(v) = common_eigenvector(rest, inter, tol) {
                return Some(v);
            }
        }
    }
    None
}

/// Common fixed vector of `{V_n† U}` over the blocks of `p`.
pub fn solve_fixed_vector(gs: &GateSet, p: &Partition, mode: FixedVectorMode) -> Option<FixedVector> {
    if p.len() != gs.len() {
        return None;
    }
    let tol = gs.tolerance();
    let d = gs.dimension();
    let family = relative_family(gs, p);
    let psi = match mode {
        FixedVectorMode::Strict => {
            let mut stacked = CMatrix::zeros(d * family.len(), d);
            for (k, m) in family.iter().enumerate() {
                stacked.view_mut((k * d, 0), (d, d)).copy_from(&(m - identity(d)));
            }
            if stacked.norm() <= tol.eps {
                basis_vector(d, 0)
            } else {
                // absolute threshold: stacked rows of unitaries have norm ~1
                let scale = stacked.norm().max(1.0);
                let basis = null_space(&stacked, Tolerance { eps: tol.eps.max(1e-12) / scale });
                if basis.is_empty() {
                    return None;
                }
                pick_vector(&CMatrix::from_columns(&basis))
            }
        }
        FixedVectorMode::Projective => {
            let nontrivial: Vec<CMatrix> = family.into_iter().filter(|m| !crate::numkernel::is_scalar(m, tol)).collect();
            common_eigenvector(&nontrivial, identity(d), tol)?
        }
    };
    let fv = FixedVector::measure(gs, p, &psi)?;
    (mode == FixedVectorMode::Projective || fv.is_strict(tol)).then_some(fv)
}

/// Rescale every member so the strict fixed-vector relation holds:
/// `U ↦ U / c` with `c = ⟨ψ|V_n† U|ψ⟩` made unit-modulus.
pub fn align_representatives(gs: &GateSet, p: &Partition, fv: &FixedVector) -> Result<GateSet> {
    if p.len() != gs.len() || fv.psi.len() != gs.dimension() {
        return Err(Error::ShapeMismatch);
    }
    let measured = FixedVector::measure(gs, p, &fv.psi).ok_or(Error::InvalidWitness)?;
    let members = gs
        .members()
        .iter()
        .zip(&measured.phases)
        .map(|(u, c)| u.scaled(c.inv()))
        .collect();
    gs.with_members(members)
}

/// Everything needed to build a control circuit.
#[derive(Debug, Clone)]
pub struct ControlWitness {
    pub partition: Partition,
    pub fixed_vector: FixedVector,
    pub representatives: GateSet,
    /// Set when the single-ancilla qubit construction applies.
    pub structure: Option<QubitStructure>,
}

#[derive(Debug, Clone)]
pub struct Controllability {
    pub verdict: Verdict,
    pub witness: Option<ControlWitness>,
}

fn structure_supports_qubit_circuit(s: &QubitStructure, p: &Partition) -> bool {
    s.prefix.is_none()
        && p.num_blocks() == 2
        && p.blocks().iter().all(|b| b.iter().all(|&i| s.anti_diagonal[i] == s.anti_diagonal[b[0]]))
}

/// Representatives with `⟨W e_l|U|W e₀⟩ = 1`, `l` the member's diagonal (0)
/// or anti-diagonal (1) label.
fn normalize_for_structure(gs: &GateSet, s: &QubitStructure) -> Result<GateSet> {
    let w0 = s.basis.column(0).into_owned();
    let w1 = s.basis.column(1).into_owned();
    let members = gs
        .members()
        .iter()
        .zip(&s.anti_diagonal)
        .map(|(u, &anti)| {
            let target = if anti { &w1 } else { &w0 };
            let c = target.dotc(&(&u.matrix * &w0));
            u.scaled((c / c.norm()).inv())
        })
        .collect();
    gs.with_members(members)
}

fn witness_for(gs: &GateSet, p: &Partition, structure: Option<&QubitStructure>) -> Result<Option<ControlWitness>> {
    if let Some(s) = structure.filter(|s| structure_supports_qubit_circuit(s, p)) {
        let psi = s.basis.column(0).into_owned();
        if let Some(fixed_vector) = FixedVector::measure(gs, p, &psi) {
            return Ok(Some(ControlWitness {
                partition: p.clone(),
                fixed_vector,
                representatives: normalize_for_structure(gs, s)?,
                structure: Some(s.clone()),
            }));
        }
    }
    let Some(fixed_vector) = solve_fixed_vector(gs, p, FixedVectorMode::Projective) else {
        return Ok(None);
    };
    let representatives = align_representatives(gs, p, &fixed_vector)?;
    Ok(Some(ControlWitness { partition: p.clone(), fixed_vector, representatives, structure: None }))
}

/// Qubit controllability: non-trivially markable, or the relative family
/// `{U₀† U}` has a common eigenvector (equivalently, commutes).
pub fn decide_controllable_qubit(gs: &GateSet) -> Result<(bool, Option<ControlWitness>)> {
    if gs.dimension() != 2 {
        return Err(Error::NotQubit);
    }
    let verdict = minimal_partition_qubit(gs)?;
    if verdict.nontrivial() {
        let p = verdict.partition.as_ref().expect("non-trivial verdict has a partition");
        if let Some(w) = witness_for(gs, p, verdict.structure.as_ref())? {
            return Ok((true, Some(w)));
        }
    }
    let trivial = Partition::trivial(gs.len());
    let structure = verdict.structure.as_ref().filter(|_| verdict.markable && !verdict.nontrivial());
    let witness = witness_for(gs, &trivial, structure)?;
    Ok((witness.is_some(), witness))
}

/// Three-valued controllability in any dimension. Above `d = 2` only the
/// trivial partition (common eigenvector) and the jointly discriminable
/// case are certified; everything else is `Unknown`.
pub fn decide_controllable(gs: &GateSet) -> Result<Controllability> {
    if gs.dimension() == 2 {
        let (ok, witness) = decide_controllable_qubit(gs)?;
        let verdict = if ok { Verdict::Yes } else { Verdict::No };
        return Ok(Controllability { verdict, witness });
    }
    if let Some(w) = witness_for(gs, &Partition::trivial(gs.len()), None)? {
        return Ok(Controllability { verdict: Verdict::Yes, witness: Some(w) });
    }
    if jointly_discriminable(gs) == Verdict::Yes {
        let w = witness_for(gs, &Partition::singletons(gs.len()), None)?;
        return Ok(Controllability { verdict: Verdict::Yes, witness: w });
    }
    Ok(Controllability { verdict: Verdict::Unknown, witness: None })
}

/// Control board with its provenance.
#[derive(Debug, Clone)]
pub struct ControlCircuit {
    pub board: CircuitBoard,
    pub partition: Partition,
    /// Side state left on the initialized wires, per block.
    pub outcomes: Vec<CVector>,
    pub fixed_vector: CVector,
    pub representatives: GateSet,
    pub marking: Option<MarkingCircuit>,
    /// Correction `Σ V_n† ⊗ |o_n⟩⟨o_n|` on (control, ψ-register, marking wires).
    pub correction: Option<CMatrix>,
    /// The correction acts only in the control branch where `ψ` met `U`.
    pub correction_conditioned: bool,
}

impl ControlCircuit {
    /// `A`.
    pub fn pre(&self) -> &CMatrix {
        &self.board.pre
    }

    /// `B`.
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
            fixed_vector: Some(vector_to_json(&self.fixed_vector)),
            representatives: Some(gate_docs(self.representatives.members())),
        }
    }

    pub fn from_doc(doc: &CircuitDoc, tol: Tolerance) -> Result<Self> {
        let wires = doc.wires.iter().map(Wire::from_doc).collect::<Result<Vec<_>>>()?;
        if wires.first().map(|w| (w.role, w.dim)) != Some((WireRole::Control, 2)) {
            return Err(Error::DimensionMismatch("control circuit must start with a control qubit".into()));
        }
        if wires.get(1).map(|w| w.role) != Some(WireRole::System) {
            return Err(Error::DimensionMismatch("control circuit needs a system wire after the control".into()));
        }
        let board = CircuitBoard::new(wires, 1, matrix_from_json(&doc.pre)?, matrix_from_json(&doc.post)?)?;
        if board.num_inputs() != 2 {
            return Err(Error::DimensionMismatch("only the control and system wires may be inputs".into()));
        }
        let len = doc.partition.iter().map(Vec::len).sum();
        let partition = Partition::new(doc.partition.clone(), len)?;
        let outcomes = doc.outcomes.iter().map(vector_from_json).collect::<Result<Vec<_>>>()?;
        if outcomes.len() != partition.num_blocks() || outcomes.iter().any(|o| o.len() != board.side_dim()) {
            return Err(Error::ShapeMismatch);
        }
        let fixed_vector = match &doc.fixed_vector {
            Some(v) => vector_from_json(v)?,
            None => basis_vector(board.slot_dim(), 0),
        };
        let reps: &[GateDoc] = doc.representatives.as_deref().ok_or(Error::InvalidWitness)?;
        let members = reps
            .iter()
            .map(|g| Ok(Unitary::new(g.name.clone(), matrix_from_json(&g.matrix)?)))
            .collect::<Result<Vec<_>>>()?;
        let representatives = GateSet::new(board.slot_dim(), members, tol)?;
        if representatives.len() != partition.len() {
            return Err(Error::RangeMismatch);
        }
        Ok(Self {
            board,
            partition,
            outcomes,
            fixed_vector,
            representatives,
            marking: None,
            correction: None,
            correction_conditioned: true,
        })
    }
}

fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}


/// Control circuit from a marking circuit and a strict fixed vector.
///
/// Wires: control, system, ψ-register, marking wires. In the control-`|0⟩`
/// branch the system and ψ-register are swapped so `U` acts on `ψ` while
/// the marking records the block; the correction then undoes `V_n`.
pub fn synthesize_control_general(gs: &GateSet, mc: &MarkingCircuit, psi: &CVector) -> Result<ControlCircuit> {
    let d = gs.dimension();
    let tol = gs.tolerance();
    let (ok, residual) = verify_marking(gs, mc)?;
    if !ok {
        return Err(Error::MarkingInvalid(residual));
    }
    let p = &mc.partition;
    let fv = FixedVector::measure(gs, p, psi).ok_or(Error::FixedVectorInvalid)?;
    if !fv.is_strict(tol) {
        return Err(Error::FixedVectorInvalid);
    }

    let marking_wires = mc.board.wires[1..].to_vec();
    let anc_dim: usize = marking_wires.iter().map(|w| w.dim).product();
    let mut wires = vec![
        Wire::input(WireRole::Control, 2),
        Wire::input(WireRole::System, d),
        Wire::prepared(WireRole::Ancilla, fv.psi.clone()),
    ];
    wires.extend(marking_wires);
    let reg = Register::new(wires.iter().map(|w| w.dim).collect());
    let anc: Vec<usize> = (3..wires.len()).collect();
    let sys_anc: Vec<usize> = std::iter::once(1).chain(anc.iter().copied()).collect();
    let ctrl_psi_anc: Vec<usize> = [0, 2].into_iter().chain(anc.iter().copied()).collect();

    let parked_swap = reg.lift(&branch(&swap(d), &identity(d * d)), &[0, 1, 2]);
    let mut undo = kron(&identity(d), &identity(anc_dim));
    for (block, outcome) in p.blocks().iter().zip(&mc.outcomes) {
        let pr = projector(outcome);
        undo = undo - kron(&identity(d), &pr) + kron(&gs.matrix(block[0]).adjoint(), &pr);
    }
    let correction = branch(&undo, &identity(d * anc_dim));

    let a = reg.lift(mc.pre(), &sys_anc) * &parked_swap;
    let b = reg.lift(&correction, &ctrl_psi_anc) * &parked_swap * reg.lift(mc.post(), &sys_anc);
    let board = CircuitBoard::new(wires, 1, a, b)?;
    let outcomes = mc.outcomes.iter().map(|o| kron_vec(&fv.psi, o)).collect();
    let cc = ControlCircuit {
        board,
        partition: p.clone(),
        outcomes,
        fixed_vector: fv.psi,
        representatives: gs.clone(),
        marking: Some(mc.clone()),
        correction: Some(correction),
        correction_conditioned: true,
    };
    self_checked(gs, cc)
}

/// Single-ancilla control circuit for a qubit set that is diagonal or
/// anti-diagonal in the basis `W` of `structure`.
///
/// The ancilla starts in `W e₀`. With control `|1⟩` a `W`-basis CNOT copies
/// the system into the ancilla before `U` and uncopies after, leaving
/// `W e_l`; with control `|0⟩` the ancilla is swapped into the slot instead.
pub fn synthesize_control_qubit(gs: &GateSet, structure: &QubitStructure, p: &Partition) -> Result<ControlCircuit> {
    if gs.dimension() != 2 {
        return Err(Error::NotQubit);
    }
    if !structure_supports_qubit_circuit(structure, p) || structure.anti_diagonal.len() != gs.len() {
        return Err(Error::StructureMismatch);
    }
    let reps = normalize_for_structure(gs, structure)?;
    let w = &structure.basis;
    let w0 = w.column(0).into_owned();
    let ww = kron(w, w);
    let copy = &ww * cnot() * ww.adjoint();
    let wires = vec![
        Wire::input(WireRole::Control, 2),
        Wire::input(WireRole::System, 2),
        Wire::prepared(WireRole::Outcome, w0.clone()),
    ];
    let on_one = branch(&identity(4), &copy);
    let parked_swap = branch(&swap(2), &identity(4));
    let a = &on_one * &parked_swap;
    let b = &parked_swap * &on_one;
    let board = CircuitBoard::new(wires, 1, a, b)?;
    let outcomes = p
        .blocks()
        .iter()
        .map(|blk| w.column(structure.anti_diagonal[blk[0]] as usize).into_owned())
        .collect();
    let cc = ControlCircuit {
        board,
        partition: p.clone(),
        outcomes,
        fixed_vector: w0,
        representatives: reps.clone(),
        marking: None,
        correction: None,
        correction_conditioned: false,
    };
    self_checked(&reps, cc)
}

/// Marking circuit used by the general construction for a witness partition.
fn marking_for(gs: &GateSet, p: &Partition) -> Result<MarkingCircuit> {
    if p.is_trivial() {
        return trivial_marking(gs);
    }
    if gs.dimension() == 2 && p.num_blocks() == 2 {
        let verdict = minimal_partition_qubit(gs)?;
        if let Some(s) = crate::markability::find_structure(gs, |s| s.partition() == *p) {
            return marking_from_structure(gs, &s, p);
        }
        if verdict.partition.as_ref() != Some(p) {
            return Err(Error::NotMarkable);
        }
    }
    let tol = gs.tolerance();
    let m = gs.members();
    let orthogonal = p.blocks().iter().all(|b| b.len() == 1)
        && (0..m.len()).all(|i| (i + 1..m.len()).all(|j| hs_orthogonal(&m[i], &m[j], tol)));
    if orthogonal {
        return synthesize_marking_joint(gs);
    }
    Err(Error::NotMarkable)
}

/// Control circuit for a witness: the single-ancilla construction when the
/// witness carries a usable structure, the general one otherwise.
pub fn synthesize_control(witness: &ControlWitness) -> Result<ControlCircuit> {
    let gs = &witness.representatives;
    let p = &witness.partition;
    if let Some(s) = &witness.structure {
        match synthesize_control_qubit(gs, s, p) {
            Err(Error::StructureMismatch) => {}
            other => return other,
        }
    }
    let mc = marking_for(gs, p)?;
    synthesize_control_general(gs, &mc, &witness.fixed_vector.psi)
}

fn self_checked(gs: &GateSet, cc: ControlCircuit) -> Result<ControlCircuit> {
    let (ok, residual, _) = verify_control(gs, &cc)?;
    if ok {
        Ok(cc)
    } else {
        Err(Error::SelfCheckFailed(residual))
    }
}

/// Per-member residual against `(I ⊕ U) ⊗ |ψ_U⟩` together with the
/// extracted `ψ_U`. The residual also counts the distance from `ψ_U` to the
/// declared side state of the member's block.
pub fn control_residuals(gs: &GateSet, cc: &ControlCircuit) -> Result<Vec<(f64, CVector)>> {
    if !cc.board.has_control() || cc.board.slot_dim() != gs.dimension() || cc.partition.len() != gs.len() {
        return Err(Error::ShapeMismatch);
    }
    (0..gs.len())
        .map(|k| {
            let u = gs.matrix(k);
            let realized = apply_board(&cc.board, u)?;
            let expected = cc.board.expected_action(u);
            let (psi, fit) = extract_side_state(&realized, &expected);
            let n = cc.partition.block_of(k).ok_or(Error::ShapeMismatch)?;
            let declared = (&psi - &cc.outcomes[n]).norm();
            Ok((fit.max(declared), psi))
        })
        .collect()
}

/// `(ok, max residual, extracted side states)`; `ok` iff every residual is
/// at most `tol · 2d`.
pub fn verify_control(gs: &GateSet, cc: &ControlCircuit) -> Result<(bool, f64, Vec<CVector>)> {
    let rows = control_residuals(gs, cc)?;
    let max = rows.iter().map(|(r, _)| *r).fold(0.0, f64::max);
    let states = rows.into_iter().map(|(_, s)| s).collect();
    Ok((max <= gs.tolerance().eps * 2.0 * gs.dimension() as f64, max, states))
}

/// Residuals of the two control branches for member `k`: control `|0⟩`
/// against `I ⊗ |o⟩` and control `|1⟩` against `U ⊗ |o⟩`, `o` the declared
/// side state.
pub fn control_branch_residuals(gs: &GateSet, cc: &ControlCircuit, k: usize) -> Result<(f64, f64)> {
    let d = gs.dimension();
    let u = gs.matrix(k);
    let realized = apply_board(&cc.board, u)?;
    let n = cc.partition.block_of(k).ok_or(Error::ShapeMismatch)?;
    let side = CMatrix::from_column_slice(cc.outcomes[n].len(), 1, cc.outcomes[n].as_slice());
    let e0 = CMatrix::from_column_slice(2, 1, basis_vector(2, 0).as_slice());
    let e1 = CMatrix::from_column_slice(2, 1, basis_vector(2, 1).as_slice());
    let zero_branch = realized.columns(0, d).into_owned();
    let one_branch = realized.columns(d, d).into_owned();
    let r0 = (zero_branch - kron(&kron(&e0, &identity(d)), &side)).norm();
    let r1 = (one_branch - kron(&kron(&e1, u), &side)).norm();
    Ok((r0, r1))
}

/// Whether the block could be estimated with one use and the gate applied
/// afterwards: the set must be jointly discriminable, and `blocks_proportional`
/// reports whether every same-block pair represents the same gate.
pub fn decide_estimate_before_use(gs: &GateSet) -> (bool, bool) {
    let tol = gs.tolerance();
    let n = gs.len();
    let possible = jointly_discriminable(gs) == Verdict::Yes;
    let p = if possible {
        Partition::singletons(n)
    } else if gs.dimension() == 2 {
        minimal_partition_qubit(gs)
            .ok()
            .filter(|v| v.markable)
            .and_then(|v| v.partition)
            .unwrap_or_else(|| Partition::trivial(n))
    } else {
        Partition::trivial(n)
    };
    let d = gs.dimension() as f64;
    let proportional = p.blocks().iter().all(|b| {
        b.iter().all(|&i| {
            b.iter().all(|&j| crate::numkernel::hs_product(gs.matrix(i), gs.matrix(j)).norm() >= (1.0 - tol.eps) * d)
        })
    });
    (possible, proportional)
}
