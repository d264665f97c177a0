//! JSON document shapes shared by the gate-set and circuit files.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major nested
//! arrays of pairs and vectors are flat arrays of pairs. Output uses a fixed
//! 17-significant-digit float format so reports are byte-reproducible.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::numkernel::{c64, CMatrix, CVector};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;
pub type JsonVector = Vec<JsonComplex>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    let entries: Vec<_> = rows.iter().flatten().map(|&[re, im]| c64(re, im)).collect();
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Syntax("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_row_slice(nrows, ncols, &entries))
}

pub fn vector_to_json(v: &CVector) -> JsonVector {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &JsonVector) -> Result<CVector> {
    if v.is_empty() {
        return Err(Error::DimensionMismatch("empty vector".into()));
    }
    let entries: Vec<_> = v.iter().map(|&[re, im]| c64(re, im)).collect();
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Syntax("non-finite vector entry".into()));
    }
    Ok(CVector::from_column_slice(&entries))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub name: String,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSetDoc {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub gates: Vec<GateDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireRole {
    System,
    Control,
    Ancilla,
    Outcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireDoc {
    pub role: WireRole,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<JsonVector>,
}

/// Shared circuit file. Marking circuits leave `fixed_vector` and
/// `representatives` out; control circuits carry both, and their `outcomes`
/// are the full side states on every initialized wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    pub wires: Vec<WireDoc>,
    pub pre: JsonMatrix,
    pub post: JsonMatrix,
    pub partition: Vec<Vec<usize>>,
    pub outcomes: Vec<JsonVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_vector: Option<JsonVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representatives: Option<Vec<GateDoc>>,
}

/// Pretty printer that writes every float with 17 significant digits.
struct FixedPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FixedPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // normalise negative zero
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Deterministic pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serialising to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
