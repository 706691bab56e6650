//! Toolchain for QRind programs: text IR, bit-packed bytecode, an MLP
//! inference engine, a session-based VM and QR embedding.

pub mod codec;
pub mod ir;
pub mod mlp;
pub mod qr;
pub mod vm;

pub use codec::{assemble, disassemble, Bytecode, CodecError, MAX_BYTECODE_LEN};
pub use ir::{parse_ir, validate, Instruction, Program, RegisterRef, Scalar, ScalarType, Value, ValueType};
pub use mlp::{Activation, Encoding, MlpLayer, MlpModel};
pub use qr::{capacity, emit_qr, extract_payload, EcLevel, QrError, QrParams};
pub use vm::{run_to_completion, Session, SessionEvent, Status, Transcript, VmError};
