//! eQRbytecode: the bit-packed binary form of a program.
//!
//! Layout: one header byte (format version in the high nibble, dialect id in
//! the low nibble), then each instruction as a 4-bit opcode followed by its
//! operands, then zero bits up to the next byte boundary.
//!
//! | field | encoding |
//! |-------|----------|
//! | register | varint(index), 1 subscript flag, [varint(element)] |
//! | type | 4-bit tag; `ARRAY(T)` adds T's 4-bit tag |
//! | value | type tag, payload |
//! | `<reg>\|<lit>` | 1 bit (0 register, 1 literal), operand |
//! | comparison | 3 bits |
//! | jump target | varint(absolute instruction index) |
//! | MLINPUT | 3-bit model type, varint(arity), register |
//! | NNLAYER | varint(neurons), 3-bit activation, 1-bit encoding (0 = f16), coefficients |
//! | MLOUTPUT | register |
//!
//! Scalar payloads: BOOL 1 bit, INT8 8 bits, INT16 16 bits, FLOAT16/FLOAT32
//! their IEEE bits, STR_A7 varint(length) + 7 bits per character, STR_U8
//! varint(byte length) + bytes. Arrays are varint(count) followed by the
//! elements: bare payloads for `ARRAY(T)`, tag + payload for `ARRAY`.
//!
//! NNLAYER does not store its fan-in; it is the arity of the preceding
//! MLINPUT or the neuron count of the preceding NNLAYER.

pub mod bits;
pub mod f16;
pub mod varint;

use thiserror::Error;

use self::bits::{BitReader, BitWriter};
use self::f16::F16;
use self::varint::{read_varint, write_varint};
use crate::ir::{
    validate, CmpOp, Coefficients, Diagnostic, Instruction, MlKind, Opcode, Operand, Program,
    RegisterRef, Scalar, ScalarType, Value, ValueType,
};
use crate::mlp::{Activation, Encoding};

/// Largest payload a single QR symbol carries (version 40, low error correction, byte mode).
pub const MAX_BYTECODE_LEN: usize = 2953;
pub const FORMAT_VERSION: u8 = 0b0001;
pub const DIALECT_QRIND: u8 = 0b0010;
pub const HEADER_BYTE: u8 = (FORMAT_VERSION << 4) | DIALECT_QRIND;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("program is invalid: {}", join(.0))]
    ProgramInvalid(Vec<Diagnostic>),
    #[error("bytecode is {len} bytes, more than the {max} a QR symbol can hold", max = MAX_BYTECODE_LEN)]
    CapacityExceeded { len: usize },
    #[error("bad header: expected 0x{expected:02x}, found {}", found.map_or("nothing".to_string(), |b| format!("0x{b:02x}")))]
    BadHeader { expected: u8, found: Option<u8> },
    #[error("bytecode truncated at bit {bit}")]
    TruncatedStream { bit: usize },
    #[error("unknown opcode {code:#06b} at bit {bit}")]
    UnknownOpcode { code: u8, bit: usize },
    #[error("unknown type tag {code:#06b} at bit {bit}")]
    UnknownTypeTag { code: u8, bit: usize },
    #[error("unknown {what} code {code} at bit {bit}")]
    UnknownCode { what: &'static str, code: u8, bit: usize },
    #[error("nested array type at bit {bit}")]
    NestedArray { bit: usize },
    #[error("varint at bit {bit} overflows 64 bits")]
    VarintOverflow { bit: usize },
    #[error("NNLAYER at instruction {index} has no preceding MLINPUT or NNLAYER")]
    MissingLayerContext { index: usize },
    #[error("invalid UTF-8 string at bit {bit}")]
    InvalidUtf8 { bit: usize },
    #[error("value out of range at bit {bit}")]
    OutOfRange { bit: usize },
    #[error("non-zero padding after the last instruction")]
    NonZeroPadding,
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Assembled bytes, header included.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bytecode(Vec<u8>);

impl Bytecode {
    /// Wraps raw bytes after checking the header byte.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CodecError> {
        match bytes.first() {
            Some(&HEADER_BYTE) => Ok(Bytecode(bytes)),
            found => Err(CodecError::BadHeader { expected: HEADER_BYTE, found: found.copied() }),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn format_version(&self) -> u8 {
        self.0[0] >> 4
    }

    pub fn dialect(&self) -> u8 {
        self.0[0] & 0x0f
    }

    pub fn body(&self) -> &[u8] {
        &self.0[1..]
    }
}

impl AsRef<[u8]> for Bytecode {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

fn scalar_tag(t: ScalarType) -> u8 {
    match t {
        ScalarType::Bool => 0b0000,
        ScalarType::Int8 => 0b0001,
        ScalarType::Int16 => 0b0010,
        ScalarType::Float16 => 0b0011,
        ScalarType::Float32 => 0b0100,
        ScalarType::StrA7 => 0b0101,
        ScalarType::StrU8 => 0b0110,
    }
}

const TAG_ARRAY_HOM: u8 = 0b0111;
const TAG_ARRAY_HET: u8 = 0b1000;

/// 4-bit wire tag of a type (the first tag only, for `ARRAY(T)`).
pub fn type_tag(t: ValueType) -> u8 {
    match t {
        ValueType::Scalar(s) => scalar_tag(s),
        ValueType::ArrayHom(_) => TAG_ARRAY_HOM,
        ValueType::ArrayHet => TAG_ARRAY_HET,
    }
}

fn scalar_from_tag(tag: u8) -> Option<ScalarType> {
    ScalarType::ALL.into_iter().find(|&t| scalar_tag(t) == tag)
}

struct Encoder {
    w: BitWriter,
}

impl Encoder {
    fn register(&mut self, r: RegisterRef) {
        write_varint(&mut self.w, r.index);
        match r.element {
            Some(e) => {
                self.w.push_bit(true);
                write_varint(&mut self.w, e);
            }
            None => self.w.push_bit(false),
        }
    }

    fn value_type(&mut self, t: ValueType) {
        self.w.push_bits(u64::from(type_tag(t)), 4);
        if let ValueType::ArrayHom(elem) = t {
            self.w.push_bits(u64::from(scalar_tag(elem)), 4);
        }
    }

    fn scalar_payload(&mut self, s: &Scalar) {
        match s {
            Scalar::Bool(b) => self.w.push_bit(*b),
            Scalar::Int8(v) => self.w.push_bits(u64::from(*v as u8), 8),
            Scalar::Int16(v) => self.w.push_bits(u64::from(*v as u16), 16),
            Scalar::Float16(v) => self.w.push_bits(u64::from(v.to_bits()), 16),
            Scalar::Float32(v) => self.w.push_bits(u64::from(v.to_bits()), 32),
            Scalar::StrA7(text) => {
                write_varint(&mut self.w, text.len() as u64);
                for b in text.bytes() {
                    self.w.push_bits(u64::from(b & 0x7f), 7);
                }
            }
            Scalar::StrU8(text) => {
                write_varint(&mut self.w, text.len() as u64);
                self.w.push_bytes(text.as_bytes());
            }
        }
    }

    fn value(&mut self, v: &Value) {
        self.value_type(v.value_type());
        match v {
            Value::Scalar(s) => self.scalar_payload(s),
            Value::ArrayHom { items, .. } => {
                write_varint(&mut self.w, items.len() as u64);
                items.iter().for_each(|s| self.scalar_payload(s));
            }
            Value::ArrayHet(items) => {
                write_varint(&mut self.w, items.len() as u64);
                for s in items {
                    self.w.push_bits(u64::from(scalar_tag(s.scalar_type())), 4);
                    self.scalar_payload(s);
                }
            }
        }
    }

    fn operand(&mut self, op: &Operand) {
        match op {
            Operand::Register(r) => {
                self.w.push_bit(false);
                self.register(*r);
            }
            Operand::Literal(v) => {
                self.w.push_bit(true);
                self.value(v);
            }
        }
    }

    fn instruction(&mut self, instr: &Instruction) {
        self.w.push_bits(instr.opcode() as u64, 4);
        match instr {
            Instruction::Set { target, value } => {
                self.register(*target);
                self.value(value);
            }
            Instruction::Input { input_type, target } => {
                self.value_type(*input_type);
                self.register(*target);
            }
            Instruction::Print { source } => self.operand(source),
            Instruction::TreeCondition { lhs, op, rhs, target } => {
                self.operand(lhs);
                self.w.push_bits(u64::from(op.code()), 3);
                self.operand(rhs);
                write_varint(&mut self.w, *target as u64);
            }
            Instruction::TreeJump { target } => write_varint(&mut self.w, *target as u64),
            Instruction::MlInput { kind, arity, source } => {
                self.w.push_bits(u64::from(kind.code()), 3);
                write_varint(&mut self.w, *arity);
                self.register(*source);
            }
            Instruction::NnLayer { neurons, activation, coefficients } => {
                write_varint(&mut self.w, *neurons);
                self.w.push_bits(u64::from(activation.code()), 3);
                match coefficients {
                    Coefficients::F16(values) => {
                        self.w.push_bit(false);
                        values.iter().for_each(|c| self.w.push_bits(u64::from(c.to_bits()), 16));
                    }
                    Coefficients::F32(values) => {
                        self.w.push_bit(true);
                        values.iter().for_each(|c| self.w.push_bits(u64::from(c.to_bits()), 32));
                    }
                }
            }
            Instruction::MlOutput { target } => self.register(*target),
        }
    }
}

/// Bit-exact body encoding without validation or the capacity check.
fn encode_unchecked(p: &Program) -> Vec<u8> {
    let mut enc = Encoder { w: BitWriter::new() };
    enc.w.push_bits(u64::from(HEADER_BYTE), 8);
    for instr in &p.instructions {
        enc.instruction(instr);
    }
    enc.w.finish()
}

/// Assembles a valid program. Equal programs give byte-identical output.
pub fn assemble(p: &Program) -> Result<Bytecode, CodecError> {
    let diags = validate(p);
    if !diags.is_empty() {
        return Err(CodecError::ProgramInvalid(diags));
    }
    let bytes = encode_unchecked(p);
    if bytes.len() > MAX_BYTECODE_LEN {
        return Err(CodecError::CapacityExceeded { len: bytes.len() });
    }
    Ok(Bytecode(bytes))
}

/// Size in bits of the instruction stream (header and padding excluded).
pub fn body_bits(p: &Program) -> usize {
    let mut enc = Encoder { w: BitWriter::new() };
    for instr in &p.instructions {
        enc.instruction(instr);
    }
    enc.w.len()
}

struct Decoder<'a> {
    r: BitReader<'a>,
}

impl Decoder<'_> {
    fn varint_usize(&mut self) -> Result<usize, CodecError> {
        let bit = self.r.position();
        usize::try_from(read_varint(&mut self.r)?).map_err(|_| CodecError::OutOfRange { bit })
    }

    fn register(&mut self) -> Result<RegisterRef, CodecError> {
        let index = read_varint(&mut self.r)?;
        let element = if self.r.read_bit()? { Some(read_varint(&mut self.r)?) } else { None };
        Ok(RegisterRef { index, element })
    }

    fn scalar_type(&mut self) -> Result<ScalarType, CodecError> {
        let bit = self.r.position();
        let tag = self.r.read_bits(4)? as u8;
        match tag {
            TAG_ARRAY_HOM | TAG_ARRAY_HET => Err(CodecError::NestedArray { bit }),
            _ => scalar_from_tag(tag).ok_or(CodecError::UnknownTypeTag { code: tag, bit }),
        }
    }

    fn value_type(&mut self) -> Result<ValueType, CodecError> {
        let bit = self.r.position();
        let tag = self.r.read_bits(4)? as u8;
        match tag {
            TAG_ARRAY_HOM => Ok(ValueType::ArrayHom(self.scalar_type()?)),
            TAG_ARRAY_HET => Ok(ValueType::ArrayHet),
            _ => scalar_from_tag(tag)
                .map(ValueType::Scalar)
                .ok_or(CodecError::UnknownTypeTag { code: tag, bit }),
        }
    }

    fn scalar_payload(&mut self, t: ScalarType) -> Result<Scalar, CodecError> {
        Ok(match t {
            ScalarType::Bool => Scalar::Bool(self.r.read_bit()?),
            ScalarType::Int8 => Scalar::Int8(self.r.read_bits(8)? as u8 as i8),
            ScalarType::Int16 => Scalar::Int16(self.r.read_bits(16)? as u16 as i16),
            ScalarType::Float16 => Scalar::Float16(F16::from_bits(self.r.read_bits(16)? as u16)),
            ScalarType::Float32 => Scalar::Float32(f32::from_bits(self.r.read_bits(32)? as u32)),
            ScalarType::StrA7 => {
                let len = self.varint_usize()?;
                if self.r.remaining() < len.saturating_mul(7) {
                    return Err(CodecError::TruncatedStream { bit: self.r.position() });
                }
                let mut s = String::with_capacity(len);
                for _ in 0..len {
                    s.push(char::from(self.r.read_bits(7)? as u8));
                }
                Scalar::StrA7(s)
            }
            ScalarType::StrU8 => {
                let bit = self.r.position();
                let len = self.varint_usize()?;
                let bytes = self.r.read_bytes(len)?;
                Scalar::StrU8(String::from_utf8(bytes).map_err(|_| CodecError::InvalidUtf8 { bit })?)
            }
        })
    }

    fn count(&mut self) -> Result<usize, CodecError> {
        let n = self.varint_usize()?;
        // Every element takes at least one bit; reject counts the stream cannot hold.
        if n > self.r.remaining() {
            return Err(CodecError::TruncatedStream { bit: self.r.position() });
        }
        Ok(n)
    }

    fn value(&mut self) -> Result<Value, CodecError> {
        Ok(match self.value_type()? {
            ValueType::Scalar(t) => Value::Scalar(self.scalar_payload(t)?),
            ValueType::ArrayHom(elem) => {
                let n = self.count()?;
                let items = (0..n).map(|_| self.scalar_payload(elem)).collect::<Result<_, _>>()?;
                Value::ArrayHom { elem, items }
            }
            ValueType::ArrayHet => {
                let n = self.count()?;
                let mut items = Vec::with_capacity(n);
                for _ in 0..n {
                    let t = self.scalar_type()?;
                    items.push(self.scalar_payload(t)?);
                }
                Value::ArrayHet(items)
            }
        })
    }

    fn operand(&mut self) -> Result<Operand, CodecError> {
        if self.r.read_bit()? {
            Ok(Operand::Literal(self.value()?))
        } else {
            Ok(Operand::Register(self.register()?))
        }
    }

    /// Reads a fixed-width code, returning it with its bit offset.
    fn code(&mut self, bits: u32) -> Result<(u8, usize), CodecError> {
        let bit = self.r.position();
        Ok((self.r.read_bits(bits)? as u8, bit))
    }

    fn instruction(&mut self, index: usize, fan_in: Option<u64>) -> Result<Instruction, CodecError> {
        let bit = self.r.position();
        let code = self.r.read_bits(4)? as u8;
        let opcode = Opcode::from_code(code).ok_or(CodecError::UnknownOpcode { code, bit })?;
        Ok(match opcode {
            Opcode::Set => {
                let target = self.register()?;
                Instruction::Set { target, value: self.value()? }
            }
            Opcode::Input => {
                let input_type = self.value_type()?;
                Instruction::Input { input_type, target: self.register()? }
            }
            Opcode::Print => Instruction::Print { source: self.operand()? },
            Opcode::TreeCondition => {
                let lhs = self.operand()?;
                let (c, bit) = self.code(3)?;
                let op = CmpOp::from_code(c).ok_or(CodecError::UnknownCode { what: "comparison", code: c, bit })?;
                let rhs = self.operand()?;
                Instruction::TreeCondition { lhs, op, rhs, target: self.varint_usize()? }
            }
            Opcode::TreeJump => Instruction::TreeJump { target: self.varint_usize()? },
            Opcode::MlInput => {
                let (c, bit) = self.code(3)?;
                let kind = MlKind::from_code(c).ok_or(CodecError::UnknownCode { what: "model type", code: c, bit })?;
                let arity = read_varint(&mut self.r)?;
                Instruction::MlInput { kind, arity, source: self.register()? }
            }
            Opcode::NnLayer => {
                let fan_in = fan_in.ok_or(CodecError::MissingLayerContext { index })?;
                let neurons = read_varint(&mut self.r)?;
                let (c, bit) = self.code(3)?;
                let activation =
                    Activation::from_code(c).ok_or(CodecError::UnknownCode { what: "activation", code: c, bit })?;
                let encoding = if self.r.read_bit()? { Encoding::Float32 } else { Encoding::Float16 };
                let count = neurons
                    .checked_mul(fan_in.saturating_add(1))
                    .and_then(|n| usize::try_from(n).ok())
                    .ok_or(CodecError::OutOfRange { bit })?;
                let width = encoding.bytes_per_coefficient() * 8;
                if self.r.remaining() / width < count {
                    return Err(CodecError::TruncatedStream { bit: self.r.position() });
                }
                let coefficients = match encoding {
                    Encoding::Float16 => Coefficients::F16(
                        (0..count)
                            .map(|_| Ok(F16::from_bits(self.r.read_bits(16)? as u16)))
                            .collect::<Result<_, CodecError>>()?,
                    ),
                    Encoding::Float32 => Coefficients::F32(
                        (0..count)
                            .map(|_| Ok(f32::from_bits(self.r.read_bits(32)? as u32)))
                            .collect::<Result<_, CodecError>>()?,
                    ),
                };
                Instruction::NnLayer { neurons, activation, coefficients }
            }
            Opcode::MlOutput => Instruction::MlOutput { target: self.register()? },
        })
    }
}

/// Decodes raw bytes (header included) back into a program.
pub fn disassemble_bytes(bytes: &[u8]) -> Result<Program, CodecError> {
    match bytes.first() {
        Some(&HEADER_BYTE) => {}
        found => return Err(CodecError::BadHeader { expected: HEADER_BYTE, found: found.copied() }),
    }
    let mut dec = Decoder { r: BitReader::new(&bytes[1..]) };
    let mut instructions = Vec::new();
    // Fan-in available to an NNLAYER at the current position.
    let mut fan_in: Option<u64> = None;
    loop {
        // Every instruction contains a 1 bit (each has a varint or a non-zero
        // opcode), so a tail shorter than a byte that is all zero is padding.
        if dec.r.remaining() < 8 && dec.r.rest_is_zero() {
            break;
        }
        let tail_start = dec.r.remaining() < 8;
        let instr = match dec.instruction(instructions.len(), fan_in) {
            Ok(i) => i,
            Err(CodecError::TruncatedStream { .. }) if tail_start => return Err(CodecError::NonZeroPadding),
            Err(e) => return Err(e),
        };
        fan_in = match &instr {
            Instruction::MlInput { arity, .. } => Some(*arity),
            Instruction::NnLayer { neurons, .. } => Some(*neurons),
            _ => None,
        };
        instructions.push(instr);
    }
    Ok(Program::new(instructions))
}

pub fn disassemble(b: &Bytecode) -> Result<Program, CodecError> {
    disassemble_bytes(b.as_bytes())
}
