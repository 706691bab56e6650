//! Static checks run before assembly and execution.

use std::fmt;

use super::{Instruction, Program, ValueType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Index of the offending instruction.
    pub index: usize,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    InvalidJumpTarget { target: usize, len: usize },
    /// MLINPUT not followed by an NNLAYER.
    MlInputWithoutLayer,
    /// NNLAYER outside an MLINPUT ... MLOUTPUT block.
    StrayNnLayer,
    /// Layer chain not closed by MLOUTPUT.
    MissingMlOutput,
    /// MLOUTPUT not preceded by an NNLAYER.
    StrayMlOutput,
    BadCoefficientCount { fan_in: u64, neurons: u64, expected: u64, found: u64 },
    ZeroNeurons,
    ZeroArity,
    NonScalarInput(ValueType),
    InvalidLiteral(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "instruction {}: ", self.index)?;
        match &self.kind {
            DiagnosticKind::InvalidJumpTarget { target, len } => {
                write!(f, "InvalidJumpTarget: ({target}) is past the exit index ({len})")
            }
            DiagnosticKind::MlInputWithoutLayer => write!(f, "MlSequence: MLINPUT must be followed by NNLAYER"),
            DiagnosticKind::StrayNnLayer => write!(f, "MlSequence: NNLAYER outside an MLINPUT block"),
            DiagnosticKind::MissingMlOutput => write!(f, "MlSequence: layer chain must end with MLOUTPUT"),
            DiagnosticKind::StrayMlOutput => write!(f, "MlSequence: MLOUTPUT without preceding NNLAYER"),
            DiagnosticKind::BadCoefficientCount { fan_in, neurons, expected, found } => write!(
                f,
                "BadCoefficientCount: {neurons} neurons with fan-in {fan_in} need {expected} coefficients, found {found}"
            ),
            DiagnosticKind::ZeroNeurons => write!(f, "NNLAYER needs at least one neuron"),
            DiagnosticKind::ZeroArity => write!(f, "MLINPUT needs at least one input"),
            DiagnosticKind::NonScalarInput(t) => write!(f, "INPUT of non-scalar type {t}"),
            DiagnosticKind::InvalidLiteral(msg) => write!(f, "invalid literal: {msg}"),
        }
    }
}

fn check_value(index: usize, v: &super::Value, out: &mut Vec<Diagnostic>) {
    if let Err(msg) = v.check() {
        out.push(Diagnostic { index, kind: DiagnosticKind::InvalidLiteral(msg) });
    }
}

fn check_operand(index: usize, op: &super::Operand, out: &mut Vec<Diagnostic>) {
    if let super::Operand::Literal(v) = op {
        check_value(index, v, out);
    }
}

/// Returns every problem found; an empty list means the program may be
/// assembled and executed.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let len = p.len();
    let mut out = Vec::new();
    let diag = |index, kind| Diagnostic { index, kind };
    // Fan-in for the next NNLAYER, when inside an ML block.
    let mut fan_in: Option<u64> = None;
    // Whether the current block has at least one layer.
    let mut has_layer = false;

    for (i, instr) in p.instructions.iter().enumerate() {
        if let Some(target) = instr.jump_target() {
            if target > len {
                out.push(diag(i, DiagnosticKind::InvalidJumpTarget { target, len }));
            }
        }

        let in_block = fan_in.is_some();
        match instr {
            Instruction::NnLayer { .. } | Instruction::MlOutput { .. } => {}
            _ if in_block => {
                let kind = if has_layer {
                    DiagnosticKind::MissingMlOutput
                } else {
                    DiagnosticKind::MlInputWithoutLayer
                };
                out.push(diag(i - 1, kind));
                fan_in = None;
            }
            _ => {}
        }

        match instr {
            Instruction::Set { value, .. } => check_value(i, value, &mut out),
            Instruction::Input { input_type, .. } => {
                if input_type.as_scalar().is_none() {
                    out.push(diag(i, DiagnosticKind::NonScalarInput(*input_type)));
                }
            }
            Instruction::Print { source } => check_operand(i, source, &mut out),
            Instruction::TreeCondition { lhs, rhs, .. } => {
                check_operand(i, lhs, &mut out);
                check_operand(i, rhs, &mut out);
            }
            Instruction::TreeJump { .. } => {}
            Instruction::MlInput { arity, .. } => {
                if *arity == 0 {
                    out.push(diag(i, DiagnosticKind::ZeroArity));
                }
                fan_in = Some(*arity);
                has_layer = false;
            }
            Instruction::NnLayer { neurons, coefficients, .. } => {
                if *neurons == 0 {
                    out.push(diag(i, DiagnosticKind::ZeroNeurons));
                }
                match fan_in {
                    None => out.push(diag(i, DiagnosticKind::StrayNnLayer)),
                    Some(fi) => {
                        let expected = neurons.saturating_mul(fi.saturating_add(1));
                        let found = coefficients.len() as u64;
                        if expected != found {
                            out.push(diag(
                                i,
                                DiagnosticKind::BadCoefficientCount { fan_in: fi, neurons: *neurons, expected, found },
                            ));
                        }
                        fan_in = Some(*neurons);
                        has_layer = true;
                    }
                }
            }
            Instruction::MlOutput { .. } => {
                if !(in_block && has_layer) {
                    out.push(diag(i, DiagnosticKind::StrayMlOutput));
                }
                fan_in = None;
                has_layer = false;
            }
        }
    }
    if fan_in.is_some() {
        let kind = if has_layer { DiagnosticKind::MissingMlOutput } else { DiagnosticKind::MlInputWithoutLayer };
        out.push(diag(len - 1, kind));
    }
    out
}
