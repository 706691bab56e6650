//! Interpreter for validated programs.
//!
//! A [`Session`] runs one program against a register file, stopping at every
//! `INPUT` until the host resumes it with a value. [`run_to_completion`] is
//! the batch driver used by tests and the CLI.

mod input;
pub mod protocol;
mod registers;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::ir::{validate, CmpOp, Diagnostic, Instruction, Operand, Program, RegisterRef, Scalar, ScalarType, Value, ValueType};
use crate::mlp::{MlpError, MlpLayer};

pub use input::{coerce_input, parse_user_text, value_from_text};
pub use registers::RegisterFile;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Runtime faults. Any of these ends the session.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VmError {
    #[error("UndefinedRegister: {0} was read before being written")]
    UndefinedRegister(RegisterRef),
    #[error("TypeMismatch: {0}")]
    TypeMismatch(String),
    #[error("MlArityMismatch: MLINPUT declares {expected} inputs, {source_reg} holds {found}")]
    MlArityMismatch { source_reg: RegisterRef, expected: u64, found: usize },
    #[error("MlSequence: {0}")]
    MlSequence(String),
    #[error("MlSequence: {0}")]
    Mlp(#[from] MlpError),
    #[error("BudgetExceeded: no halt within {0} steps")]
    BudgetExceeded(u64),
}

/// Misuse of the session API. These never change the session state.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("session is {0}, not running")]
    NotRunning(&'static str),
    #[error("session is not waiting for input")]
    NotAwaitingInput,
    #[error("input rejected: {0}")]
    InputRejected(VmError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Running,
    AwaitingInput { target: RegisterRef, expected: ScalarType },
    Halted,
    Faulted { pc: usize, error: VmError },
}

impl Status {
    fn name(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::AwaitingInput { .. } => "awaiting input",
            Status::Halted => "halted",
            Status::Faulted { .. } => "faulted",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Status::Halted | Status::Faulted { .. })
    }
}

/// Something the host should react to.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionEvent {
    /// Text produced by PRINT.
    Output(String),
    /// The program is blocked on INPUT. `prompt` is the most recent output,
    /// if any, which conventionally carries the question.
    InputRequest { expected: ScalarType, prompt: Option<String> },
    Halted,
    Fault { pc: usize, error: VmError },
}

/// One execution of a program.
#[derive(Debug, Clone)]
pub struct Session {
    program: Program,
    registers: RegisterFile,
    pc: usize,
    status: Status,
    steps: u64,
    budget: u64,
    ml: Option<Vec<f64>>,
    last_output: Option<String>,
    halt_reported: bool,
}

impl Session {
    /// Starts a session with the default step budget. The program is
    /// validated first.
    pub fn new(program: Program) -> Result<Self, Vec<Diagnostic>> {
        Self::with_budget(program, DEFAULT_STEP_BUDGET)
    }

    pub fn with_budget(program: Program, budget: u64) -> Result<Self, Vec<Diagnostic>> {
        let diags = validate(&program);
        if !diags.is_empty() {
            return Err(diags);
        }
        Ok(Self::unchecked(program, budget))
    }

    /// Starts a session without static validation. Malformed ML blocks then
    /// surface as runtime faults and any jump past the end halts.
    pub fn unchecked(program: Program, budget: u64) -> Self {
        let status = if program.is_empty() { Status::Halted } else { Status::Running };
        Self {
            program,
            registers: RegisterFile::new(),
            pc: 0,
            status,
            steps: 0,
            budget,
            ml: None,
            last_output: None,
            halt_reported: false,
        }
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn registers(&self) -> &RegisterFile {
        &self.registers
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Executes one instruction. Returns the event it produced, if any:
    /// `Output`, `InputRequest` or `Fault`. Halting is silent here; see
    /// [`Session::next_event`].
    pub fn step(&mut self) -> Result<Option<SessionEvent>, SessionError> {
        if self.status != Status::Running {
            return Err(SessionError::NotRunning(self.status.name()));
        }
        if self.steps >= self.budget {
            return Ok(Some(self.fault(VmError::BudgetExceeded(self.budget))));
        }
        self.steps += 1;
        match self.execute() {
            Ok(ev) => Ok(ev),
            Err(e) => Ok(Some(self.fault(e))),
        }
    }

    /// Runs until something observable happens. Reports `Halted` exactly
    /// once, then `None`. Returns `None` after a fault as well.
    pub fn next_event(&mut self) -> Result<Option<SessionEvent>, SessionError> {
        loop {
            match self.status {
                Status::Running => {
                    if let Some(ev) = self.step()? {
                        return Ok(Some(ev));
                    }
                }
                Status::Halted if !self.halt_reported => {
                    self.halt_reported = true;
                    return Ok(Some(SessionEvent::Halted));
                }
                Status::Halted | Status::Faulted { .. } => return Ok(None),
                Status::AwaitingInput { .. } => return Err(SessionError::NotRunning("awaiting input")),
            }
        }
    }

    /// Supplies the value for a pending INPUT. A value of the wrong type is
    /// rejected and the session keeps waiting.
    pub fn resume_with_input(&mut self, value: Value) -> Result<(), SessionError> {
        let Status::AwaitingInput { target, expected } = self.status else {
            return Err(SessionError::NotAwaitingInput);
        };
        let s = coerce_input(value, expected).map_err(SessionError::InputRejected)?;
        if let Err(e) = self.registers.write(target, Value::Scalar(s)) {
            self.fault(e);
            return Ok(());
        }
        self.status = Status::Running;
        self.advance(self.pc + 1);
        Ok(())
    }

    /// Like [`Session::resume_with_input`] but parses raw user text against
    /// the expected type.
    pub fn resume_with_text(&mut self, text: &str) -> Result<(), SessionError> {
        let Status::AwaitingInput { expected, .. } = self.status else {
            return Err(SessionError::NotAwaitingInput);
        };
        let v = parse_user_text(text, expected).map_err(SessionError::InputRejected)?;
        self.resume_with_input(v)
    }

    fn fault(&mut self, error: VmError) -> SessionEvent {
        let pc = self.pc;
        self.status = Status::Faulted { pc, error: error.clone() };
        SessionEvent::Fault { pc, error }
    }

    fn advance(&mut self, to: usize) {
        self.pc = to;
        if to >= self.program.len() {
            self.pc = self.program.len();
            self.status = Status::Halted;
        }
    }

    fn operand(&self, op: &Operand) -> Result<Value, VmError> {
        match op {
            Operand::Register(r) => self.registers.read(*r),
            Operand::Literal(v) => Ok(v.clone()),
        }
    }

    fn execute(&mut self) -> Result<Option<SessionEvent>, VmError> {
        let pc = self.pc;
        let mut next = pc + 1;
        let mut event = None;
        match &self.program.instructions[pc] {
            Instruction::Set { target, value } => {
                let (t, v) = (*target, value.clone());
                self.registers.write(t, v)?;
            }
            Instruction::Input { input_type, target } => {
                let ValueType::Scalar(expected) = *input_type else {
                    return Err(VmError::TypeMismatch(format!("INPUT of non-scalar type {input_type}")));
                };
                self.status = Status::AwaitingInput { target: *target, expected };
                return Ok(Some(SessionEvent::InputRequest { expected, prompt: self.last_output.clone() }));
            }
            Instruction::Print { source } => {
                let text = self.operand(source)?.display_text();
                self.last_output = Some(text.clone());
                event = Some(SessionEvent::Output(text));
            }
            Instruction::TreeCondition { lhs, op, rhs, target } => {
                let (op, target) = (*op, *target);
                let l = self.operand(lhs)?;
                let r = self.operand(rhs)?;
                if compare(&l, op, &r)? {
                    next = target;
                }
            }
            Instruction::TreeJump { target } => next = *target,
            Instruction::MlInput { arity, source, .. } => {
                let x = self.registers.read_numeric(*source)?;
                if x.len() as u64 != *arity {
                    return Err(VmError::MlArityMismatch { source_reg: *source, expected: *arity, found: x.len() });
                }
                self.ml = Some(x);
            }
            Instruction::NnLayer { neurons, activation, coefficients } => {
                let x = self
                    .ml
                    .take()
                    .ok_or_else(|| VmError::MlSequence("NNLAYER reached without a preceding MLINPUT".into()))?;
                let layer = MlpLayer::from_coefficients(
                    x.len(),
                    *neurons as usize,
                    *activation,
                    coefficients.encoding(),
                    &coefficients.to_f64(),
                )?;
                self.ml = Some(layer.forward(&x)?);
            }
            Instruction::MlOutput { target } => {
                let target = *target;
                let y = self
                    .ml
                    .take()
                    .ok_or_else(|| VmError::MlSequence("MLOUTPUT reached without a preceding NNLAYER".into()))?;
                let v = if y.len() == 1 {
                    Value::float32(y[0] as f32)
                } else {
                    Value::ArrayHom {
                        elem: ScalarType::Float32,
                        items: y.iter().map(|&v| Scalar::Float32(v as f32)).collect(),
                    }
                };
                self.registers.write(target, v)?;
            }
        }
        self.advance(next);
        Ok(event)
    }
}

/// Evaluates `lhs op rhs`. Numbers of any width compare by value; booleans
/// and strings support only equality tests.
pub fn compare(lhs: &Value, op: CmpOp, rhs: &Value) -> Result<bool, VmError> {
    let mismatch = || {
        VmError::TypeMismatch(format!(
            "cannot compare {} {} {}",
            lhs.value_type(),
            op.symbol(),
            rhs.value_type()
        ))
    };
    let (Value::Scalar(l), Value::Scalar(r)) = (lhs, rhs) else {
        return Err(mismatch());
    };
    let ord = match (l, r) {
        (Scalar::Bool(a), Scalar::Bool(b)) if op.is_equality() => Some(a.cmp(b)),
        (a, b) if a.scalar_type().is_text() && b.scalar_type().is_text() && op.is_equality() => {
            Some(a.as_str().cmp(&b.as_str()))
        }
        (a, b) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x.partial_cmp(&y),
            _ => return Err(mismatch()),
        },
    };
    // NaN is unordered: only NE holds.
    let Some(ord) = ord else {
        return Ok(op == CmpOp::Ne);
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

/// Result of a batch run that reached a terminal state.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub outputs: Vec<String>,
    pub status: Status,
    pub registers: RegisterFile,
    pub steps: u64,
    /// Number of supplied inputs actually consumed.
    pub inputs_used: usize,
}

impl Transcript {
    pub fn halted(&self) -> bool {
        self.status == Status::Halted
    }
}

#[derive(Debug, Clone, Error)]
pub enum RunError {
    #[error("program is invalid: {}", join_diags(.0))]
    ProgramInvalid(Vec<Diagnostic>),
    #[error("program asked for input #{} but only {} were supplied", .0.inputs_used + 1, .0.inputs_used)]
    InputsExhausted(Box<Transcript>),
    #[error("input #{index} rejected: {error}")]
    InputRejected { index: usize, error: VmError, transcript: Box<Transcript> },
}

fn join_diags(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Runs a program feeding `inputs` to successive INPUT instructions.
/// Runtime faults, including an exhausted step budget, end up in the
/// transcript's status.
pub fn run_to_completion(program: &Program, inputs: &[Value], budget: u64) -> Result<Transcript, RunError> {
    let mut session = Session::with_budget(program.clone(), budget).map_err(RunError::ProgramInvalid)?;
    let mut outputs = Vec::new();
    let mut used = 0;
    let transcript = |s: &Session, outputs: &[String], used| Transcript {
        outputs: outputs.to_vec(),
        status: s.status.clone(),
        registers: s.registers.clone(),
        steps: s.steps,
        inputs_used: used,
    };
    loop {
        let ev = match session.next_event() {
            Ok(Some(ev)) => ev,
            Ok(None) => break,
            Err(e) => unreachable!("driver only calls next_event while runnable: {e}"),
        };
        match ev {
            SessionEvent::Output(t) => outputs.push(t),
            SessionEvent::InputRequest { .. } => {
                let Some(v) = inputs.get(used) else {
                    return Err(RunError::InputsExhausted(Box::new(transcript(&session, &outputs, used))));
                };
                if let Err(SessionError::InputRejected(error)) = session.resume_with_input(v.clone()) {
                    return Err(RunError::InputRejected {
                        index: used,
                        error,
                        transcript: Box::new(transcript(&session, &outputs, used)),
                    });
                }
                used += 1;
            }
            SessionEvent::Halted | SessionEvent::Fault { .. } => {}
        }
    }
    Ok(transcript(&session, &outputs, used))
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Faulted { pc, error } => write!(f, "faulted at ({pc}): {error}"),
            Status::AwaitingInput { target, expected } => write!(f, "awaiting {expected} input for {target}"),
            s => f.write_str(s.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;

    fn prog(src: &str) -> Program {
        parse_ir(src).unwrap()
    }

    #[test]
    fn empty_program_halts_immediately() {
        let mut s = Session::new(Program::default()).unwrap();
        assert_eq!(s.next_event().unwrap(), Some(SessionEvent::Halted));
        assert_eq!(s.next_event().unwrap(), None);
    }

    #[test]
    fn print_then_halt() {
        let p = prog("(0) PRINT \"hi\"\n(1) PRINT 3");
        let t = run_to_completion(&p, &[], 100).unwrap();
        assert_eq!(t.outputs, ["hi", "3"]);
        assert!(t.halted());
        assert_eq!(t.steps, 2);
    }

    #[test]
    fn input_wait_and_strict_resume() {
        let p = prog("(0) INPUT BOOL INTO R0\n(1) PRINT R0");
        let mut s = Session::new(p).unwrap();
        assert_eq!(
            s.next_event().unwrap(),
            Some(SessionEvent::InputRequest { expected: ScalarType::Bool, prompt: None })
        );
        assert!(matches!(s.step(), Err(SessionError::NotRunning(_))));
        assert!(matches!(s.resume_with_input(Value::float32(3.2)), Err(SessionError::InputRejected(_))));
        assert!(matches!(s.status(), Status::AwaitingInput { .. }));
        s.resume_with_input(Value::bool(true)).unwrap();
        assert_eq!(s.next_event().unwrap(), Some(SessionEvent::Output("TRUE".into())));
        assert_eq!(s.next_event().unwrap(), Some(SessionEvent::Halted));
        assert!(matches!(s.resume_with_input(Value::bool(true)), Err(SessionError::NotAwaitingInput)));
    }

    #[test]
    fn undefined_register_faults() {
        let p = prog("(0) PRINT R7");
        let t = run_to_completion(&p, &[], 100).unwrap();
        assert_eq!(t.status, Status::Faulted { pc: 0, error: VmError::UndefinedRegister(RegisterRef::new(7)) });
    }

    #[test]
    fn budget_exceeded() {
        let p = prog("(0) TREEJUMP (0)");
        let t = run_to_completion(&p, &[], 50).unwrap();
        assert_eq!(t.status, Status::Faulted { pc: 0, error: VmError::BudgetExceeded(50) });
        assert_eq!(t.steps, 50);
    }

    #[test]
    fn jump_to_exit_halts() {
        let p = prog("(0) TREEJUMP (2)\n(1) PRINT 1");
        let t = run_to_completion(&p, &[], 10).unwrap();
        assert!(t.outputs.is_empty());
        assert!(t.halted());
    }

    #[test]
    fn comparisons() {
        use CmpOp::*;
        assert!(compare(&Value::int8(3), Lt, &Value::float32(3.5)).unwrap());
        assert!(compare(&Value::int16(1000), Eq, &Value::float16(1000.0)).unwrap());
        assert!(compare(&Value::text("a"), Eq, &Value::Scalar(Scalar::StrU8("a".into()))).unwrap());
        assert!(compare(&Value::text("a"), Lt, &Value::text("b")).is_err());
        assert!(compare(&Value::bool(true), Ne, &Value::bool(false)).unwrap());
        assert!(compare(&Value::bool(true), Gt, &Value::bool(false)).is_err());
        assert!(compare(&Value::text("1"), Eq, &Value::int8(1)).is_err());
        let nan = Value::float32(f32::NAN);
        assert!(!compare(&nan, Eq, &nan).unwrap());
        assert!(compare(&nan, Ne, &nan).unwrap());
        assert!(!compare(&nan, Le, &Value::int8(0)).unwrap());
    }

    #[test]
    fn ml_block_runs() {
        let p = prog(
            "(0) SET R0 TO ARRAY(FLOAT32)[1.0, 2.0]\n\
             (1) MLINPUT MLP 2 FROM R0\n\
             (2) NNLAYER 1 LINEAR FLOAT32 0.5, 0.25, 1.0\n\
             (3) MLOUTPUT INTO R1\n\
             (4) PRINT R1",
        );
        let t = run_to_completion(&p, &[], 100).unwrap();
        assert_eq!(t.outputs, ["2"]);
    }

    #[test]
    fn ml_arity_mismatch_faults() {
        let p = prog(
            "(0) SET R0 TO 1.0\n\
             (1) MLINPUT MLP 2 FROM R0\n\
             (2) NNLAYER 1 LINEAR FLOAT32 0.5, 0.25, 1.0\n\
             (3) MLOUTPUT INTO R1",
        );
        let t = run_to_completion(&p, &[], 100).unwrap();
        assert!(matches!(t.status, Status::Faulted { pc: 1, error: VmError::MlArityMismatch { .. } }));
    }

    #[test]
    fn inputs_exhausted() {
        let p = prog("(0) INPUT FLOAT32 INTO R0");
        assert!(matches!(run_to_completion(&p, &[], 10), Err(RunError::InputsExhausted(_))));
    }
}
