//! Independent oracles shared by the integration tests. Nothing here calls
//! the crate's linear-algebra or board code.

#![allow(dead_code)]

use num_complex::Complex64;
use qcond::{CMatrix, CVector, GateSet, Tolerance};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn mat(d: usize, entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_row_slice(d, d, &entries.iter().map(|&(r, i)| c(r, i)).collect::<Vec<_>>())
}

pub fn px() -> CMatrix {
    mat(2, &[(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
}

pub fn py() -> CMatrix {
    mat(2, &[(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
}

pub fn pz() -> CMatrix {
    mat(2, &[(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
}

pub fn had() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    mat(2, &[(s, 0.), (s, 0.), (s, 0.), (-s, 0.)])
}

pub fn phase_gate(theta: f64) -> CMatrix {
    mat(2, &[(1., 0.), (0., 0.), (0., 0.), (theta.cos(), theta.sin())])
}

pub fn cis(theta: f64) -> Complex64 {
    c(theta.cos(), theta.sin())
}

/// `{W₁, W₂, W₃}` built from Pauli sums.
pub fn w_matrices() -> Vec<CMatrix> {
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![(px() + py()) * s, (py() + pz()) * s, (pz() + px()) * s]
}

pub fn gate_set(ms: Vec<CMatrix>) -> GateSet {
    GateSet::from_matrices(ms, Tolerance::default()).unwrap()
}

/// Four nested loops, straight from the definition.
pub fn kron_loops(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec_loops(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            out[i * b.len() + k] = a[i] * b[k];
        }
    }
    out
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn gaussian(rng: &mut StdRng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix.
pub fn haar(d: usize, rng: &mut StdRng) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::new();
    while cols.len() < d {
        let mut v = CVector::from_fn(d, |_, _| gaussian(rng));
        for q in &cols {
            let p = q.dotc(&v);
            v -= q * p;
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v / c(n, 0.0));
        }
    }
    CMatrix::from_columns(&cols)
}

pub fn random_phase(rng: &mut StdRng) -> Complex64 {
    cis(rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn random_diagonal(rng: &mut StdRng) -> CMatrix {
    let (a, b) = (random_phase(rng), random_phase(rng));
    CMatrix::from_row_slice(2, 2, &[a, c(0., 0.), c(0., 0.), b])
}

pub fn random_antidiagonal(rng: &mut StdRng) -> CMatrix {
    let (a, b) = (random_phase(rng), random_phase(rng));
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), a, b, c(0., 0.)])
}

/// `n_diag` diagonal and `n_anti` anti-diagonal unitaries conjugated by `W`.
pub fn structured_set(n_diag: usize, n_anti: usize, rng: &mut StdRng) -> (Vec<CMatrix>, CMatrix) {
    let w = haar(2, rng);
    let mut ms = Vec::new();
    for _ in 0..n_diag {
        ms.push(&w * random_diagonal(rng) * w.adjoint());
    }
    for _ in 0..n_anti {
        ms.push(&w * random_antidiagonal(rng) * w.adjoint());
    }
    (ms, w)
}

/// Apply `u` to wire `slot` of a register with the given dims, acting on a
/// state vector by explicit index arithmetic.
pub fn apply_on_wire(state: &CVector, dims: &[usize], slot: usize, u: &CMatrix) -> CVector {
    let inner: usize = dims[slot + 1..].iter().product();
    let d = dims[slot];
    let outer: usize = dims[..slot].iter().product();
    let mut out = CVector::zeros(state.len());
    for o in 0..outer {
        for i in 0..inner {
            for row in 0..d {
                let mut acc = c(0., 0.);
                for col in 0..d {
                    acc += u[(row, col)] * state[(o * d + col) * inner + i];
                }
                out[(o * d + row) * inner + i] = acc;
            }
        }
    }
    out
}

/// Column-by-column state-vector simulation of `post (u on slot) pre` on
/// `input ⊗ init`.
pub fn simulate(
    dims: &[usize],
    slot: usize,
    input_dim: usize,
    init: &CVector,
    pre: &CMatrix,
    post: &CMatrix,
    u: &CMatrix,
) -> CMatrix {
    let total: usize = dims.iter().product();
    let mut out = CMatrix::zeros(total, input_dim);
    for j in 0..input_dim {
        let mut e = CVector::zeros(input_dim);
        e[j] = c(1.0, 0.0);
        let state = pre * kron_vec_loops(&e, init);
        let state = post * apply_on_wire(&state, dims, slot, u);
        out.set_column(j, &state);
    }
    out
}

pub fn board_init(board: &qcond::boards::CircuitBoard) -> CVector {
    board
        .wires
        .iter()
        .filter_map(|w| w.init.clone())
        .fold(CVector::from_element(1, c(1.0, 0.0)), |acc, v| kron_vec_loops(&acc, &v))
}

pub fn simulate_board(board: &qcond::boards::CircuitBoard, u: &CMatrix) -> CMatrix {
    let dims: Vec<usize> = board.wires.iter().map(|w| w.dim).collect();
    let input_dim: usize = board.wires.iter().filter(|w| w.init.is_none()).map(|w| w.dim).product();
    simulate(&dims, board.slot, input_dim, &board_init(board), &board.pre, &board.post, u)
}

pub fn unitarity_gap(m: &CMatrix) -> f64 {
    (m.adjoint() * m - eye(m.nrows())).norm()
}

pub fn ket(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = c(1.0, 0.0);
    v
}

pub fn col(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}
