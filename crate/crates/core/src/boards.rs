//! Circuit boards in unitary-dilated form: a pre-unitary, one slot for the
//! unknown gate, and a post-unitary, over a register of wires.
//!
//! Uninitialized wires (the inputs) always precede initialized ones, so the
//! realized isometry maps the input wires onto the full register with the
//! side wires trailing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::{vector_from_json, vector_to_json, WireDoc, WireRole};
use crate::gateset::GateSet;
use crate::numkernel::{basis_vector, direct_sum, identity, kron, kron_vec, CMatrix, CVector, Tolerance, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub role: WireRole,
    pub dim: usize,
    pub init: Option<CVector>,
}

impl Wire {
    pub fn input(role: WireRole, dim: usize) -> Self {
        Self { role, dim, init: None }
    }

    pub fn ready(role: WireRole, dim: usize) -> Self {
        Self { role, dim, init: Some(basis_vector(dim, 0)) }
    }

    pub fn prepared(role: WireRole, state: CVector) -> Self {
        Self { role, dim: state.len(), init: Some(state) }
    }

    pub fn to_doc(&self) -> WireDoc {
        WireDoc { role: self.role, dim: self.dim, init: self.init.as_ref().map(vector_to_json) }
    }

    pub fn from_doc(doc: &WireDoc) -> Result<Self> {
        if doc.dim == 0 {
            return Err(Error::DimensionMismatch("wire of dimension 0".into()));
        }
        let init = doc.init.as_ref().map(vector_from_json).transpose()?;
        if let Some(v) = &init {
            if v.len() != doc.dim {
                return Err(Error::DimensionMismatch("wire init length differs from its dim".into()));
            }
        }
        Ok(Self { role: doc.role, dim: doc.dim, init })
    }
}

/// A register layout: wire dimensions in order, most significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    dims: Vec<usize>,
}

impl Register {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    /// Full-register matrix of `op` acting on `wires` (in the listed order).
    pub fn lift(&self, op: &CMatrix, wires: &[usize]) -> CMatrix {
        let sub_dims: Vec<usize> = wires.iter().map(|&w| self.dims[w]).collect();
        let sub = Register::new(sub_dims);
        assert_eq!(op.nrows(), sub.total(), "operator does not match the selected wires");
        let n = self.total();
        let mut out = CMatrix::zeros(n, n);
        for col in 0..n {
            let digits = self.digits(col);
            let sub_col = sub.index(&wires.iter().map(|&w| digits[w]).collect::<Vec<_>>());
            for sub_row in 0..sub.total() {
                let z = op[(sub_row, sub_col)];
                if z == ZERO {
                    continue;
                }
                let mut row_digits = digits.clone();
                for (k, &w) in wires.iter().enumerate() {
                    row_digits[w] = sub.digits(sub_row)[k];
                }
                out[(self.index(&row_digits), col)] += z;
            }
        }
        out
    }
}

/// `|0⟩⟨0| ⊗ on_zero + |1⟩⟨1| ⊗ on_one` with a qubit control first.
pub fn branch(on_zero: &CMatrix, on_one: &CMatrix) -> CMatrix {
    direct_sum(on_zero, on_one).expect("branch operators are square")
}

/// Swap of two wires of equal dimension `d`.
pub fn swap(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = ONE;
        }
    }
    s
}

/// Controlled-NOT on two qubits, first qubit controlling.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitBoard {
    pub wires: Vec<Wire>,
    pub slot: usize,
    pub pre: CMatrix,
    pub post: CMatrix,
}

impl CircuitBoard {
    pub fn new(wires: Vec<Wire>, slot: usize, pre: CMatrix, post: CMatrix) -> Result<Self> {
        let board = Self { wires, slot, pre, post };
        board.check_shape()?;
        Ok(board)
    }

    fn check_shape(&self) -> Result<()> {
        if self.slot >= self.wires.len() {
            return Err(Error::DimensionMismatch("slot wire out of range".into()));
        }
        let n = self.register().total();
        if self.pre.shape() != (n, n) || self.post.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("board unitaries must be {n}x{n}")));
        }
        let first_init = self.wires.iter().position(|w| w.init.is_some()).unwrap_or(self.wires.len());
        if self.wires[first_init..].iter().any(|w| w.init.is_none()) {
            return Err(Error::DimensionMismatch("input wires must precede initialized wires".into()));
        }
        Ok(())
    }

    pub fn register(&self) -> Register {
        Register::new(self.wires.iter().map(|w| w.dim).collect())
    }

    pub fn num_inputs(&self) -> usize {
        self.wires.iter().take_while(|w| w.init.is_none()).count()
    }

    pub fn input_dim(&self) -> usize {
        self.wires.iter().take_while(|w| w.init.is_none()).map(|w| w.dim).product()
    }

    pub fn side_dim(&self) -> usize {
        self.wires.iter().skip(self.num_inputs()).map(|w| w.dim).product()
    }

    pub fn slot_dim(&self) -> usize {
        self.wires[self.slot].dim
    }

    pub fn has_control(&self) -> bool {
        self.wires.iter().any(|w| w.role == WireRole::Control)
    }

    /// Product of the initial states of the side wires.
    pub fn side_init(&self) -> CVector {
        self.wires
            .iter()
            .filter_map(|w| w.init.as_ref())
            .fold(CVector::from_element(1, ONE), |acc, v| kron_vec(&acc, v))
    }

    /// The action a disturbance-free board must realize on its inputs:
    /// `u` itself, or `I ⊕ u` when a control qubit leads the register.
    pub fn expected_action(&self, u: &CMatrix) -> CMatrix {
        if self.has_control() {
            direct_sum(&identity(u.nrows()), u).expect("unitaries are square")
        } else {
            u.clone()
        }
    }

    /// A single input wire in the slot with everything else initialized.
    pub fn is_marking_shape(&self) -> bool {
        self.num_inputs() == 1 && self.slot == 0 && !self.has_control()
    }
}

/// Realized isometry `post · (u on slot) · pre · (I ⊗ |init⟩)`.
pub fn apply_board(board: &CircuitBoard, u: &CMatrix) -> Result<CMatrix> {
    if u.shape() != (board.slot_dim(), board.slot_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "gate is {}x{}, slot wire has dimension {}",
            u.nrows(),
            u.ncols(),
            board.slot_dim()
        )));
    }
    let reg = board.register();
    let embed = kron(&identity(board.input_dim()), &CMatrix::from_column_slice(board.side_dim(), 1, board.side_init().as_slice()));
    let slot = reg.lift(u, &[board.slot]);
    Ok(&board.post * slot * &board.pre * embed)
}

/// Best rank-one factorization `M ≈ E ⊗ |ψ⟩`: returns `ψ` and `‖M − E⊗ψ‖_F`.
pub fn extract_side_state(realized: &CMatrix, expected: &CMatrix) -> (CVector, f64) {
    let k = expected.nrows();
    let r = realized.nrows() / k;
    let weight = expected.norm_squared();
    let mut psi = CVector::zeros(r);
    for i in 0..k {
        for j in 0..expected.ncols() {
            let e = expected[(i, j)].conj();
            if e == ZERO {
                continue;
            }
            for s in 0..r {
                psi[s] += e * realized[(i * r + s, j)];
            }
        }
    }
    psi /= Complex64::from(weight);
    let residual = (realized - kron(expected, &CMatrix::from_column_slice(r, 1, psi.as_slice()))).norm();
    (psi, residual)
}

/// Nest `inner` inside the slot of `outer`: one use of the gate, with the
/// side states of both boards produced side by side.
pub fn nest_boards(outer: &CircuitBoard, inner: &CircuitBoard) -> Result<CircuitBoard> {
    if !outer.is_marking_shape() || !inner.is_marking_shape() || outer.slot_dim() != inner.slot_dim() {
        return Err(Error::NotMarkingShape);
    }
    let mut wires = outer.wires.clone();
    wires.extend(inner.wires[1..].iter().cloned());
    let reg = Register::new(wires.iter().map(|w| w.dim).collect());
    let n_outer = outer.wires.len();
    let outer_wires: Vec<usize> = (0..n_outer).collect();
    let inner_wires: Vec<usize> = std::iter::once(0).chain(n_outer..wires.len()).collect();
    let pre = reg.lift(&inner.pre, &inner_wires) * reg.lift(&outer.pre, &outer_wires);
    let post = reg.lift(&outer.post, &outer_wires) * reg.lift(&inner.post, &inner_wires);
    CircuitBoard::new(wires, 0, pre, post)
}

/// Appendix-style doubling: the board nested inside itself, so every side
/// state `ψ_U` becomes `ψ_U ⊗ ψ_U`.
pub fn double_board(board: &CircuitBoard) -> Result<CircuitBoard> {
    nest_boards(board, board)
}

/// Side states of every member, checking that the board leaves each action
/// undisturbed.
pub fn side_states(board: &CircuitBoard, gs: &GateSet) -> Result<Vec<CVector>> {
    let tol = gs.tolerance();
    gs.members()
        .iter()
        .map(|u| {
            let realized = apply_board(board, &u.matrix)?;
            let expected = board.expected_action(&u.matrix);
            let (psi, residual) = extract_side_state(&realized, &expected);
            if residual > tol.eps * 2.0 * gs.dimension() as f64 {
                return Err(Error::Disturbing(u.name.clone()));
            }
            Ok(psi)
        })
        .collect()
}

/// Gram matrix `G[i][j] = ⟨ψ_i|ψ_j⟩` of the extracted side states.
pub fn psi_gram_matrix(board: &CircuitBoard, gs: &GateSet) -> Result<CMatrix> {
    let states = side_states(board, gs)?;
    let n = states.len();
    Ok(CMatrix::from_fn(n, n, |i, j| states[i].dotc(&states[j])))
}

/// `|G[i][j]|` is 0 or 1 within `tol`.
pub fn gram_is_zero_one(gram: &CMatrix, tol: Tolerance) -> bool {
    gram.iter().all(|z| {
        let m = z.norm();
        m <= tol.eps || (m - 1.0).abs() <= tol.eps
    })
}
