//! Single-use perfect discriminability of unitaries.
//!
//! Two unitaries are perfectly discriminable with one use iff the origin
//! lies in the convex hull of the eigenvalues of `U†V`; for qubits this
//! reduces to `Tr[U†V] = 0`. Joint discriminability is certified by mutual
//! Hilbert–Schmidt orthogonality (an entangled probe then produces
//! orthogonal outputs).

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gateset::{GateSet, Unitary};
use crate::numkernel::{eig_unitary, hs_product, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationReport {
    pub pairwise: Vec<Vec<bool>>,
    pub jointly: Verdict,
}

/// `Tr[u†v]`.
pub fn hs_inner(u: &Unitary, v: &Unitary) -> Result<Complex64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", u.name, v.name)));
    }
    Ok(hs_product(&u.matrix, &v.matrix))
}

pub(crate) fn hs_orthogonal(u: &Unitary, v: &Unitary, tol: Tolerance) -> bool {
    hs_product(&u.matrix, &v.matrix).norm() <= tol.eps * u.dim() as f64
}

pub fn pairwise_perfectly_discriminable(u: &Unitary, v: &Unitary, tol: Tolerance) -> Result<bool> {
    let overlap = hs_inner(u, v)?;
    let d = u.dim();
    if d == 2 {
        return Ok(overlap.norm() <= tol.eps * d as f64);
    }
    let product = u.matrix.adjoint() * &v.matrix;
    // validated members are unitary, but the product may carry d·eps roundoff
    let loose = Tolerance { eps: tol.eps.max(1e-12) * 10.0 };
    let points: Vec<(f64, f64)> = eig_unitary(&product, loose)?
        .into_iter()
        .map(|p| (p.value.re, p.value.im))
        .collect();
    Ok(hull::origin_distance(&points) <= tol.eps)
}

pub fn jointly_discriminable(gs: &GateSet) -> Verdict {
    let tol = gs.tolerance();
    let m = gs.members();
    let pairs = || (0..m.len()).flat_map(|i| (i + 1..m.len()).map(move |j| (i, j)));
    if pairs().all(|(i, j)| hs_orthogonal(&m[i], &m[j], tol)) {
        return Verdict::Yes;
    }
    if gs.dimension() == 2 {
        return Verdict::No;
    }
    let pairwise_ok = pairs().all(|(i, j)| pairwise_perfectly_discriminable(&m[i], &m[j], tol).unwrap_or(false));
    if pairwise_ok {
        Verdict::Unknown
    } else {
        Verdict::No
    }
}

pub fn discrimination_report(gs: &GateSet) -> DiscriminationReport {
    let tol = gs.tolerance();
    let m = gs.members();
    let pairwise = (0..m.len())
        .map(|i| {
            (0..m.len())
                .map(|j| i != j && pairwise_perfectly_discriminable(&m[i], &m[j], tol).unwrap_or(false))
                .collect()
        })
        .collect();
    DiscriminationReport { pairwise, jointly: jointly_discriminable(gs) }
}

/// Planar convex hull and origin containment.
pub mod hull {
    type Point = (f64, f64);

    fn cross(o: Point, a: Point, b: Point) -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    }

    /// Counter-clockwise hull vertices (monotone chain), collinear points dropped.
    pub fn convex_hull(points: &[Point]) -> Vec<Point> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        if pts.len() < 3 {
            return pts;
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        lower
    }

    fn segment_distance(a: Point, b: Point) -> f64 {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 { 0.0 } else { (-(a.0 * dx + a.1 * dy) / len2).clamp(0.0, 1.0) };
        let (px, py) = (a.0 + t * dx, a.1 + t * dy);
        (px * px + py * py).sqrt()
    }

    /// Euclidean distance from the origin to the convex hull (0 inside).
    pub fn origin_distance(points: &[Point]) -> f64 {
        let h = convex_hull(points);
        match h.len() {
            0 => f64::INFINITY,
            1 => (h[0].0 * h[0].0 + h[0].1 * h[0].1).sqrt(),
            2 => segment_distance(h[0], h[1]),
            n => {
                let inside = (0..n).all(|k| cross(h[k], h[(k + 1) % n], (0.0, 0.0)) >= 0.0);
                if inside {
                    0.0
                } else {
                    (0..n).map(|k| segment_distance(h[k], h[(k + 1) % n])).fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

}
