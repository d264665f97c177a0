//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices and vectors are plain `nalgebra` dynamic types over `Complex64`.
//! Every routine that makes a numerical decision takes an explicit
//! [`Tolerance`].

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Absolute numeric tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Tolerance {
    pub const DEFAULT_EPS: f64 = 1e-9;

    pub fn new(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidTolerance(eps));
        }
        Ok(Self { eps })
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self { eps: self.eps * factor }
    }

    /// Threshold used to group numerically coincident eigenvalues.
    pub(crate) fn cluster(self) -> f64 {
        (self.eps * 1e3).max(1e-10)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps: Self::DEFAULT_EPS }
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn basis_vector(d: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[k] = ONE;
    v
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn hadamard() -> CMatrix {
    let s = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// Diagonal matrix from its entries.
pub fn diag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

/// Unit-modulus complex number `e^{iθ}`.
pub fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Block-diagonal `diag(a, b)`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::NonSquare);
    }
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    Ok(out)
}

/// `‖U†U − I‖_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// Unitary within `tol · d` in Frobenius norm.
pub fn is_unitary(u: &CMatrix, tol: Tolerance) -> bool {
    u.is_square() && unitarity_residual(u) <= tol.eps * u.nrows() as f64
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr[a† b]`.
pub fn hs_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `‖M − (Tr M / d) I‖_F ≤ tol · d`; the matrix is a multiple of the identity.
pub fn is_scalar(m: &CMatrix, tol: Tolerance) -> bool {
    let d = m.nrows();
    let mean = trace(m) / d as f64;
    (m - identity(d) * mean).norm() <= tol.eps * d as f64
}

/// One eigenpair of a unitary.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: CVector,
}

/// Complete orthonormal eigensystem of a unitary matrix.
///
/// Unitaries are normal, so the triangular factor of the complex Schur
/// decomposition is diagonal up to rounding and the Schur vectors are
/// eigenvectors. Eigenvalues are projected onto the unit circle.
pub fn eig_unitary(u: &CMatrix, tol: Tolerance) -> Result<Vec<EigenPair>> {
    if !is_unitary(u, tol) {
        return Err(Error::NotUnitary("matrix".into()));
    }
    let (q, t) = Schur::new(u.clone()).unpack();
    Ok((0..u.nrows())
        .map(|k| {
            let raw = t[(k, k)];
            let value = if raw.norm() > 0.0 { raw / raw.norm() } else { ONE };
            EigenPair { value, vector: q.column(k).into_owned() }
        })
        .collect())
}

/// Eigenspace of a unitary: a shared eigenvalue and an orthonormal basis
/// stored as the columns of a matrix.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: Complex64,
    pub basis: CMatrix,
}

/// Eigenspaces of a unitary, with numerically coincident eigenvalues merged.
///
/// Ordered by the position of the dominant component of the first basis
/// vector, so that an eigenspace close to `e₀` comes first.
pub fn unitary_eigenspaces(u: &CMatrix, tol: Tolerance) -> Result<Vec<Eigenspace>> {
    let pairs = eig_unitary(u, tol)?;
    let mut groups: Vec<(Complex64, Vec<CVector>)> = Vec::new();
    for p in pairs {
        match groups.iter_mut().find(|(v, _)| (v - p.value).norm() <= tol.cluster()) {
            Some((_, vs)) => vs.push(p.vector),
            None => groups.push((p.value, vec![p.vector])),
        }
    }
    let mut spaces: Vec<Eigenspace> = groups
        .into_iter()
        .map(|(value, vs)| Eigenspace { value, basis: CMatrix::from_columns(&vs) })
        .collect();
    spaces.sort_by_key(|s| dominant_index(&s.basis.column(0).into_owned()));
    Ok(spaces)
}

/// Index of the first entry of largest modulus.
pub fn dominant_index(v: &CVector) -> usize {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (k, z) in v.iter().enumerate() {
        if z.norm() > best_norm + 1e-12 {
            best = k;
            best_norm = z.norm();
        }
    }
    best
}

/// Rescale by a unit phase so the dominant entry is real and positive.
pub fn fix_vector_phase(v: &CVector) -> CVector {
    let k = dominant_index(v);
    let z = v[k];
    if z.norm() == 0.0 {
        return v.clone();
    }
    v * (z.conj() / z.norm())
}

fn singular_values_desc(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank: singular values below `tol · σ_max` count as zero.
pub fn rank(m: &CMatrix, tol: Tolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = singular_values_desc(m);
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol.eps * max).count()
}

/// Column-stacked `d²`-vector of a matrix.
fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

fn span_matrix(ms: &[&CMatrix], len: usize) -> CMatrix {
    if ms.is_empty() {
        return CMatrix::zeros(len, 0);
    }
    let cols: Vec<CVector> = ms.iter().map(|m| vectorize(m)).collect();
    CMatrix::from_columns(&cols)
}

/// Dimensions of `span(sa)`, `span(sb)` and of their intersection.
pub fn span_intersection_dim(
    sa: &[&CMatrix],
    sb: &[&CMatrix],
    tol: Tolerance,
) -> Result<(usize, usize, usize)> {
    let shape = sa.iter().chain(sb.iter()).map(|m| m.shape()).next();
    let Some(shape) = shape else {
        return Ok((0, 0, 0));
    };
    if sa.iter().chain(sb.iter()).any(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch);
    }
    let len = shape.0 * shape.1;
    let ma = span_matrix(sa, len);
    let mb = span_matrix(sb, len);
    let ra = rank(&ma, tol);
    let rb = rank(&mb, tol);
    let all: Vec<&CMatrix> = sa.iter().chain(sb.iter()).copied().collect();
    let ru = rank(&span_matrix(&all, len), tol);
    Ok((ra, rb, (ra + rb).saturating_sub(ru)))
}

/// Orthonormal basis of `{v : ‖Mv‖ ≤ tol·‖M‖·‖v‖}`.
pub fn null_space(m: &CMatrix, tol: Tolerance) -> Vec<CVector> {
    let cols = m.ncols();
    if cols == 0 {
        return Vec::new();
    }
    // SVD of a wide matrix only yields min(rows, cols) right vectors.
    let padded = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return (0..cols).map(|k| basis_vector(cols, k)).collect();
    }
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol.eps * max)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

/// Phase `c` with `c·a ≈ b` when `|Tr[a†b]| ≥ (1 − tol)·‖a‖_F·‖b‖_F`.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix, tol: Tolerance) -> Result<Option<Complex64>> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch);
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let overlap = hs_product(a, b);
    if overlap.norm() >= (1.0 - tol.eps) * na * nb {
        Ok(Some(overlap / overlap.norm()))
    } else {
        Ok(None)
    }
}

/// Orthonormal basis (columns) of the intersection of two subspaces given
/// by orthonormal columns.
pub fn intersect_subspaces(a: &CMatrix, b: &CMatrix, tol: Tolerance) -> CMatrix {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return CMatrix::zeros(n, 0);
    }
    // Components of a's basis outside span(b); null directions lie inside.
    let outside = a - b * (b.adjoint() * a);
    let coeffs = null_space_abs(&outside, tol);
    if coeffs.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    let vs: Vec<CVector> = coeffs.iter().map(|c| a * c).collect();
    orthonormalize(&vs, tol)
}

/// Null space with an absolute singular-value threshold.
fn null_space_abs(m: &CMatrix, tol: Tolerance) -> Vec<CVector> {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let cutoff = tol.cluster();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect()
}

/// Modified Gram–Schmidt, dropping vectors that are numerically dependent.
pub fn orthonormalize(vs: &[CVector], tol: Tolerance) -> CMatrix {
    let n = vs.first().map(|v| v.len()).unwrap_or(0);
    let mut out: Vec<CVector> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm > tol.cluster() {
            out.push(w / Complex64::from(norm));
        }
    }
    if out.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&out)
    }
}

/// Unitary whose leading columns are the given orthonormal vectors, completed
/// with Gram–Schmidt against the standard basis.
pub fn complete_to_unitary(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut cols: Vec<CVector> = vectors.to_vec();
    for k in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut w = basis_vector(dim, k);
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            cols.push(w / Complex64::from(norm));
        }
    }
    CMatrix::from_columns(&cols)
}
