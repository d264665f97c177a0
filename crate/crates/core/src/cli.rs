//! Command-line surface: `analyze`, `synthesize` and `verify`.
//!
//! Exit codes: 0 success, 1 not markable/controllable (synthesize only),
//! 2 invalid input, 3 verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::control::{decide_controllable, decide_estimate_before_use, synthesize_control, verify_control, ControlCircuit};
use crate::discrimination::{discrimination_report, jointly_discriminable, Verdict};
use crate::error::{Error, Result};
use crate::format::{to_json_string, vector_to_json, CircuitDoc, GateDoc, JsonVector, WireRole};
use crate::gateset::{gate_docs, parse_gate_set_with, GateSet};
use crate::markability::{
    marking_residuals, minimal_partition_qubit, synthesize_marking_joint, synthesize_marking_qubit, MarkingCircuit,
};
use crate::numkernel::{equal_up_to_phase, is_scalar, Tolerance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IMPOSSIBLE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qcond", version, about = "Markability and controllability of finite unitary gate sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Emit JSON instead of text.
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Emit text (default).
    #[arg(long)]
    text: bool,
    /// Numerical tolerance; overrides the file's value.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Marking,
    Control,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide discriminability, markability and controllability.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a verified marking or control circuit.
    Synthesize {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a circuit file against a gate set by dense simulation.
    Verify {
        file: PathBuf,
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkabilitySection {
    pub markable: Verdict,
    pub all_scalar: bool,
    pub partition: Option<Vec<Vec<usize>>>,
    pub used_prefix_inverse: bool,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllabilitySection {
    pub controllable: Verdict,
    pub partition: Option<Vec<Vec<usize>>>,
    pub fixed_vector: Option<JsonVector>,
    pub representatives: Option<Vec<GateDoc>>,
    pub construction: Option<&'static str>,
    pub correction_conditioned: Option<bool>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateSection {
    pub possible: bool,
    pub blocks_proportional: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub names: Vec<String>,
    pub dimension: usize,
    pub tolerance: f64,
    pub unitarity_residuals: Vec<f64>,
    pub pairwise_discriminable: Vec<Vec<bool>>,
    pub jointly_discriminable: Verdict,
    pub markability: MarkabilitySection,
    pub controllability: ControllabilitySection,
    pub estimate_before_use: EstimateSection,
}

/// Marking circuit for the finest partition this crate can certify, or
/// `None` when no non-trivial marking is known.
fn best_marking(gs: &GateSet) -> Result<(Verdict, Option<MarkingCircuit>, bool)> {
    if gs.dimension() == 2 {
        let verdict = minimal_partition_qubit(gs)?;
        if !verdict.markable {
            return Ok((Verdict::No, None, false));
        }
        let mc = synthesize_marking_qubit(gs, &verdict)?;
        return Ok((Verdict::Yes, Some(mc), verdict.used_prefix_inverse()));
    }
    if jointly_discriminable(gs) == Verdict::Yes {
        return Ok((Verdict::Yes, Some(synthesize_marking_joint(gs)?), false));
    }
    Ok((Verdict::Unknown, None, false))
}

pub fn analyze(gs: &GateSet) -> Result<AnalysisReport> {
    let disc = discrimination_report(gs);
    let (markable, mc, used_prefix_inverse) = best_marking(gs)?;
    let marking_residual = match &mc {
        Some(mc) => Some(marking_residuals(gs, mc)?.into_iter().fold(0.0, f64::max)),
        None => None,
    };
    let markability = MarkabilitySection {
        markable,
        all_scalar: gs.members().iter().all(|u| is_scalar(&u.matrix, gs.tolerance())),
        partition: mc.as_ref().map(|m| m.partition.blocks().to_vec()),
        used_prefix_inverse,
        residual: marking_residual,
    };

    let control = decide_controllable(gs)?;
    let mut controllability = ControllabilitySection {
        controllable: control.verdict,
        partition: None,
        fixed_vector: None,
        representatives: None,
        construction: None,
        correction_conditioned: None,
        residual: None,
    };
    if let Some(w) = &control.witness {
        let cc = synthesize_control(w)?;
        let (_, residual, _) = verify_control(&cc.representatives, &cc)?;
        controllability.partition = Some(w.partition.blocks().to_vec());
        controllability.fixed_vector = Some(vector_to_json(&w.fixed_vector.psi));
        controllability.representatives = Some(gate_docs(w.representatives.members()));
        controllability.construction = Some(if cc.marking.is_some() { "general" } else { "single-ancilla" });
        controllability.correction_conditioned = Some(cc.correction_conditioned);
        controllability.residual = Some(residual);
    }

    let (possible, blocks_proportional) = decide_estimate_before_use(gs);
    Ok(AnalysisReport {
        names: gs.names(),
        dimension: gs.dimension(),
        tolerance: gs.tolerance().eps,
        unitarity_residuals: gs.unitarity_residuals(),
        pairwise_discriminable: disc.pairwise,
        jointly_discriminable: disc.jointly,
        markability,
        controllability,
        estimate_before_use: EstimateSection { possible, blocks_proportional },
    })
}

fn fmt_blocks(blocks: &Option<Vec<Vec<usize>>>, names: &[String]) -> String {
    match blocks {
        None => "-".into(),
        Some(bs) => bs
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join(" | "),
    }
}

fn fmt_residual(r: Option<f64>) -> String {
    r.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "-".into())
}

pub fn render_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "gates: {} (d = {}, tol = {:e})", r.names.join(", "), r.dimension, r.tolerance);
    let max_unitarity = r.unitarity_residuals.iter().cloned().fold(0.0, f64::max);
    let _ = writeln!(s, "max unitarity residual: {max_unitarity:.3e}");
    let _ = writeln!(s, "pairwise perfectly discriminable:");
    for (name, row) in r.names.iter().zip(&r.pairwise_discriminable) {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "." }).collect();
        let _ = writeln!(s, "  {name:>8}  {}", cells.join(" "));
    }
    let _ = writeln!(s, "jointly discriminable: {}", r.jointly_discriminable);
    let m = &r.markability;
    let _ = writeln!(s, "markable: {}", m.markable);
    let _ = writeln!(s, "  minimal partition: {}", fmt_blocks(&m.partition, &r.names));
    if m.all_scalar {
        let _ = writeln!(s, "  every member is a multiple of the identity, so the marking is vacuous");
    }
    if m.used_prefix_inverse {
        let _ = writeln!(s, "  structure found after a known prefix");
    }
    let _ = writeln!(s, "  marking residual: {}", fmt_residual(m.residual));
    let c = &r.controllability;
    let _ = writeln!(s, "controllable: {}", c.controllable);
    let _ = writeln!(s, "  witness partition: {}", fmt_blocks(&c.partition, &r.names));
    if let Some(psi) = &c.fixed_vector {
        let entries: Vec<String> = psi.iter().map(|[re, im]| format!("{re:+.6}{im:+.6}i")).collect();
        let _ = writeln!(s, "  fixed vector: [{}]", entries.join(", "));
    }
    if let Some(kind) = c.construction {
        let _ = writeln!(s, "  construction: {kind}");
    }
    let _ = writeln!(s, "  control residual: {}", fmt_residual(c.residual));
    let e = &r.estimate_before_use;
    let _ = writeln!(s, "estimate before use: possible = {}, blocks proportional = {}", e.possible, e.blocks_proportional);
    s
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SelfCheckFailed(_) => EXIT_VERIFY_FAILED,
        Error::NotMarkable | Error::NotControllable | Error::NotJointlyDiscriminable => EXIT_IMPOSSIBLE,
        _ => EXIT_INVALID,
    }
}

fn load_gate_set(path: &Path, common: &Common) -> Result<GateSet> {
    let tol = common.tol.map(Tolerance::new).transpose()?;
    let bytes = std::fs::read(path)?;
    parse_gate_set_with(&bytes, tol)
}

fn cmd_analyze(file: &Path, common: &Common, out: &mut dyn Write) -> Result<i32> {
    let gs = load_gate_set(file, common)?;
    let report = analyze(&gs)?;
    let text = if common.json { to_json_string(&report) } else { render_text(&report) };
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_synthesize(file: &Path, mode: Mode, target: &Path, common: &Common, out: &mut dyn Write) -> Result<i32> {
    let gs = load_gate_set(file, common)?;
    let doc = match mode {
        Mode::Marking => match best_marking(&gs)? {
            (Verdict::Yes, Some(mc), _) => mc.to_doc(),
            _ => return Err(Error::NotMarkable),
        },
        Mode::Control => {
            let c = decide_controllable(&gs)?;
            match (&c.verdict, &c.witness) {
                (Verdict::Yes, Some(w)) => synthesize_control(w)?.to_doc(),
                _ => return Err(Error::NotControllable),
            }
        }
    };
    std::fs::write(target, to_json_string(&doc))?;
    if common.json {
        out.write_all(to_json_string(&serde_json::json!({ "written": target.display().to_string() })).as_bytes())?;
    } else {
        writeln!(out, "wrote {}", target.display())?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyReport {
    kind: &'static str,
    residuals: Vec<(String, f64)>,
    max_residual: f64,
    threshold: f64,
    ok: bool,
}

/// Control circuits carry their own phase-aligned representatives; each
/// must be the same gate as the corresponding file member.
fn check_representatives(gs: &GateSet, cc: &ControlCircuit) -> Result<()> {
    if cc.representatives.len() != gs.len() || cc.representatives.dimension() != gs.dimension() {
        return Err(Error::RangeMismatch);
    }
    for (u, r) in gs.members().iter().zip(cc.representatives.members()) {
        if equal_up_to_phase(&u.matrix, &r.matrix, gs.tolerance().scaled(10.0))?.is_none() {
            return Err(Error::DimensionMismatch(format!("representative `{}` is not the gate `{}`", r.name, u.name)));
        }
    }
    Ok(())
}

fn cmd_verify(file: &Path, circuit: &Path, common: &Common, out: &mut dyn Write) -> Result<i32> {
    let gs = load_gate_set(file, common)?;
    let doc: CircuitDoc = serde_json::from_slice(&std::fs::read(circuit)?).map_err(|e| Error::Syntax(e.to_string()))?;
    let is_control = doc.fixed_vector.is_some() || doc.wires.iter().any(|w| w.role == WireRole::Control);
    let (kind, residuals) = if is_control {
        let cc = ControlCircuit::from_doc(&doc, gs.tolerance())?;
        check_representatives(&gs, &cc)?;
        let rows = crate::control::control_residuals(&cc.representatives, &cc)?;
        ("control", rows.into_iter().map(|(r, _)| r).collect::<Vec<_>>())
    } else {
        let mc = MarkingCircuit::from_doc(&doc)?;
        ("marking", marking_residuals(&gs, &mc)?)
    };
    let threshold = gs.tolerance().eps * 2.0 * gs.dimension() as f64;
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let ok = max_residual <= threshold;
    let report = VerifyReport {
        kind,
        residuals: gs.names().into_iter().zip(residuals).collect(),
        max_residual,
        threshold,
        ok,
    };
    if common.json {
        out.write_all(to_json_string(&report).as_bytes())?;
    } else {
        writeln!(out, "{kind} circuit")?;
        for (name, r) in &report.residuals {
            writeln!(out, "  {name:>8}  {r:.3e}")?;
        }
        writeln!(out, "max residual {max_residual:.3e} (threshold {threshold:.3e}): {}", if ok { "ok" } else { "FAILED" })?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze { file, common } => cmd_analyze(file, common, out),
        Command::Synthesize { file, mode, out: target, common } => cmd_synthesize(file, *mode, target, common, out),
        Command::Verify { file, circuit, common } => cmd_verify(file, circuit, common, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "qcond: {e}");
            exit_code(&e)
        }
    }
}
