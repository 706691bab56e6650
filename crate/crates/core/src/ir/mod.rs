//! Intermediate representation: instructions, programs, text parsing and
//! static validation.

mod parse;
mod render;
mod validate;
mod value;

use std::fmt;

pub use parse::{parse_ir, parse_literal, ParseError, ParseErrorKind};
pub use validate::{validate, Diagnostic, DiagnosticKind};
pub use value::{Scalar, ScalarType, Value, ValueType};

use crate::codec::f16::F16;
use crate::mlp::{Activation, Encoding};

/// A register, optionally subscripted (`R1` or `R1[0]`). There is no upper
/// bound on the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterRef {
    pub index: u64,
    pub element: Option<u64>,
}

impl RegisterRef {
    pub const fn new(index: u64) -> Self {
        Self { index, element: None }
    }

    pub const fn element(index: u64, element: u64) -> Self {
        Self { index, element: Some(element) }
    }
}

impl fmt::Display for RegisterRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.element {
            Some(e) => write!(f, "R{}[{}]", self.index, e),
            None => write!(f, "R{}", self.index),
        }
    }
}

/// `<reg>|<lit>` operand.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Register(RegisterRef),
    Literal(Value),
}

impl From<RegisterRef> for Operand {
    fn from(r: RegisterRef) -> Self {
        Operand::Register(r)
    }
}

impl From<Value> for Operand {
    fn from(v: Value) -> Self {
        Operand::Literal(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// 3-bit wire code.
    pub fn code(self) -> u8 {
        match self {
            CmpOp::Eq => 0,
            CmpOp::Ne => 1,
            CmpOp::Lt => 2,
            CmpOp::Le => 3,
            CmpOp::Gt => 4,
            CmpOp::Ge => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        CmpOp::ALL.get(usize::from(code)).copied()
    }

    pub fn is_equality(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Model family fed by MLINPUT. Only the multilayer perceptron exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MlKind {
    Mlp,
}

impl MlKind {
    pub fn code(self) -> u8 {
        0b000
    }

    pub fn from_code(code: u8) -> Option<Self> {
        (code == 0).then_some(MlKind::Mlp)
    }

    pub fn name(self) -> &'static str {
        "MLP"
    }
}

/// Weights and biases of one NNLAYER, kept at their storage precision.
///
/// Ordered per upper-layer neuron: its fan-in weights left to right, then its
/// bias. For fan-in 2 and three neurons that is
/// `w11, w12, b1, w21, w22, b2, w31, w32, b3`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    F16(Vec<F16>),
    F32(Vec<f32>),
}

impl Coefficients {
    /// Rounds each value to the storage precision of `encoding`.
    pub fn from_f64(encoding: Encoding, values: &[f64]) -> Self {
        match encoding {
            Encoding::Float16 => Coefficients::F16(values.iter().map(|&v| F16::from_f64(v)).collect()),
            Encoding::Float32 => Coefficients::F32(values.iter().map(|&v| v as f32).collect()),
        }
    }

    pub fn encoding(&self) -> Encoding {
        match self {
            Coefficients::F16(_) => Encoding::Float16,
            Coefficients::F32(_) => Encoding::Float32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Coefficients::F16(v) => v.len(),
            Coefficients::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Coefficients::F16(v) => v.iter().map(|c| c.to_f64()).collect(),
            Coefficients::F32(v) => v.iter().map(|&c| f64::from(c)).collect(),
        }
    }
}

/// One line of the intermediate representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Set { target: RegisterRef, value: Value },
    Input { input_type: ValueType, target: RegisterRef },
    Print { source: Operand },
    TreeCondition { lhs: Operand, op: CmpOp, rhs: Operand, target: usize },
    TreeJump { target: usize },
    MlInput { kind: MlKind, arity: u64, source: RegisterRef },
    NnLayer { neurons: u64, activation: Activation, coefficients: Coefficients },
    MlOutput { target: RegisterRef },
}

/// 4-bit instruction opcodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    Set = 0b0000,
    Input = 0b0001,
    Print = 0b0010,
    TreeCondition = 0b0011,
    TreeJump = 0b0100,
    MlInput = 0b0101,
    NnLayer = 0b0110,
    MlOutput = 0b0111,
}

impl Opcode {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0b0000 => Opcode::Set,
            0b0001 => Opcode::Input,
            0b0010 => Opcode::Print,
            0b0011 => Opcode::TreeCondition,
            0b0100 => Opcode::TreeJump,
            0b0101 => Opcode::MlInput,
            0b0110 => Opcode::NnLayer,
            0b0111 => Opcode::MlOutput,
            _ => return None,
        })
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Set => "SET",
            Opcode::Input => "INPUT",
            Opcode::Print => "PRINT",
            Opcode::TreeCondition => "TREECONDITION",
            Opcode::TreeJump => "TREEJUMP",
            Opcode::MlInput => "MLINPUT",
            Opcode::NnLayer => "NNLAYER",
            Opcode::MlOutput => "MLOUTPUT",
        }
    }
}

impl Instruction {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instruction::Set { .. } => Opcode::Set,
            Instruction::Input { .. } => Opcode::Input,
            Instruction::Print { .. } => Opcode::Print,
            Instruction::TreeCondition { .. } => Opcode::TreeCondition,
            Instruction::TreeJump { .. } => Opcode::TreeJump,
            Instruction::MlInput { .. } => Opcode::MlInput,
            Instruction::NnLayer { .. } => Opcode::NnLayer,
            Instruction::MlOutput { .. } => Opcode::MlOutput,
        }
    }

    /// Jump destination, for the two control-transfer instructions.
    pub fn jump_target(&self) -> Option<usize> {
        match self {
            Instruction::TreeCondition { target, .. } | Instruction::TreeJump { target } => {
                Some(*target)
            }
            _ => None,
        }
    }
}

/// An ordered instruction list. A jump to `len()` or beyond ends execution.
///
/// `source_lines` keeps the original text of each instruction for
/// diagnostics; it is ignored by equality and not carried by the bytecode.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    pub source_lines: Option<Vec<String>>,
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self { instructions, source_lines: None }
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Source text of instruction `index`, falling back to the canonical form.
    pub fn line_text(&self, index: usize) -> Option<String> {
        if let Some(line) = self.source_lines.as_ref().and_then(|l| l.get(index)) {
            return Some(line.clone());
        }
        self.instructions.get(index).map(|i| i.to_string())
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.instructions == other.instructions
    }
}

impl From<Vec<Instruction>> for Program {
    fn from(instructions: Vec<Instruction>) -> Self {
        Program::new(instructions)
    }
}
