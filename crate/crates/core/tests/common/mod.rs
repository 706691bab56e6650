#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use qrind_core::codec::f16::F16;
use qrind_core::codec::{assemble, CodecError};
use qrind_core::ir::{CmpOp, Coefficients, MlKind, Operand};
use qrind_core::{Activation, Encoding, Instruction, Program, RegisterRef, Scalar, ScalarType, Value, ValueType};

pub const FIG3: &str = include_str!("../../fixtures/machine_check.qri");

pub const MAX_INSTRUCTIONS: usize = 50;
pub const MAX_REGISTER: u64 = 100;
pub const MAX_STRING: usize = 40;
pub const MAX_ML_DIM: u64 = 8;

pub fn scalar_type() -> impl Strategy<Value = ScalarType> {
    prop::sample::select(ScalarType::ALL.to_vec())
}

pub fn f32_no_nan() -> impl Strategy<Value = f32> {
    any::<f32>().prop_filter("NaN breaks equality", |x| !x.is_nan())
}

pub fn f16_any() -> impl Strategy<Value = F16> {
    any::<u16>().prop_map(F16::from_bits)
}

pub fn scalar_of(t: ScalarType) -> BoxedStrategy<Scalar> {
    match t {
        ScalarType::Bool => any::<bool>().prop_map(Scalar::Bool).boxed(),
        ScalarType::Int8 => any::<i8>().prop_map(Scalar::Int8).boxed(),
        ScalarType::Int16 => any::<i16>().prop_map(Scalar::Int16).boxed(),
        ScalarType::Float16 => f16_any().prop_filter("NaN", |h| !h.is_nan()).prop_map(Scalar::Float16).boxed(),
        ScalarType::Float32 => f32_no_nan().prop_map(Scalar::Float32).boxed(),
        ScalarType::StrA7 => "[\\x00-\\x7f]{0,40}".prop_map(Scalar::StrA7).boxed(),
        ScalarType::StrU8 => "\\PC{0,40}".prop_map(Scalar::StrU8).boxed(),
    }
}

pub fn any_scalar() -> impl Strategy<Value = Scalar> {
    scalar_type().prop_flat_map(scalar_of)
}

pub fn any_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        4 => any_scalar().prop_map(Value::Scalar),
        1 => scalar_type().prop_flat_map(|t| vec(scalar_of(t), 0..=8).prop_map(move |items| Value::ArrayHom { elem: t, items })),
        1 => vec(any_scalar(), 0..=8).prop_map(Value::ArrayHet),
    ]
}

pub fn register() -> impl Strategy<Value = RegisterRef> {
    (0..=MAX_REGISTER, prop::option::weighted(0.3, 0..=MAX_REGISTER))
        .prop_map(|(index, element)| RegisterRef { index, element })
}

pub fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof![register().prop_map(Operand::Register), any_value().prop_map(Operand::Literal)]
}

pub fn cmp_op() -> impl Strategy<Value = CmpOp> {
    (0u8..6).prop_map(|c| CmpOp::from_code(c).unwrap())
}

pub fn activation() -> impl Strategy<Value = Activation> {
    (0u8..6).prop_map(|c| Activation::from_code(c).unwrap())
}

pub fn encoding() -> impl Strategy<Value = Encoding> {
    prop_oneof![Just(Encoding::Float16), Just(Encoding::Float32)]
}

/// Instruction templates. Jump targets are raw numbers, reduced modulo
/// `len + 1` once the program length is known.
#[derive(Debug, Clone)]
pub enum Block {
    Plain(Instruction),
    Cond { lhs: Operand, op: CmpOp, rhs: Operand, raw: u32 },
    Jump { raw: u32 },
    Ml(Vec<Instruction>),
}

impl Block {
    fn len(&self) -> usize {
        match self {
            Block::Ml(v) => v.len(),
            _ => 1,
        }
    }
}

pub fn ml_block() -> impl Strategy<Value = Block> {
    (1..=MAX_ML_DIM, vec((1..=MAX_ML_DIM, activation(), encoding()), 1..=3), register(), register())
        .prop_flat_map(|(arity, layers, src, dst)| {
            let mut fan_in = arity;
            let mut shapes = Vec::new();
            for (n, a, e) in layers {
                shapes.push((fan_in, n, a, e));
                fan_in = n;
            }
            let coeffs: Vec<_> = shapes
                .iter()
                .map(|&(fi, n, _, _)| vec(-8.0f64..8.0, (n * (fi + 1)) as usize))
                .collect();
            (Just((arity, shapes, src, dst)), coeffs)
        })
        .prop_map(|((arity, shapes, source, target), coeffs)| {
            let mut out = vec![Instruction::MlInput { kind: MlKind::Mlp, arity, source }];
            for ((_, neurons, activation, enc), c) in shapes.into_iter().zip(coeffs) {
                out.push(Instruction::NnLayer {
                    neurons,
                    activation,
                    coefficients: Coefficients::from_f64(enc, &c),
                });
            }
            out.push(Instruction::MlOutput { target });
            Block::Ml(out)
        })
}

pub fn block() -> impl Strategy<Value = Block> {
    prop_oneof![
        3 => (register(), any_value()).prop_map(|(target, value)| Block::Plain(Instruction::Set { target, value })),
        1 => (scalar_type(), register())
            .prop_map(|(t, target)| Block::Plain(Instruction::Input { input_type: ValueType::Scalar(t), target })),
        2 => operand().prop_map(|source| Block::Plain(Instruction::Print { source })),
        2 => (operand(), cmp_op(), operand(), any::<u32>()).prop_map(|(lhs, op, rhs, raw)| Block::Cond { lhs, op, rhs, raw }),
        1 => any::<u32>().prop_map(|raw| Block::Jump { raw }),
        1 => ml_block(),
    ]
}

/// Lays blocks out into a program, mapping raw targets into `0..=len + slack`.
pub fn build(blocks: &[Block], slack: usize) -> Program {
    let len: usize = blocks.iter().map(Block::len).sum();
    let target = |raw: u32| raw as usize % (len + 1 + slack);
    let mut out = Vec::with_capacity(len);
    for b in blocks {
        match b {
            Block::Plain(i) => out.push(i.clone()),
            Block::Cond { lhs, op, rhs, raw } => out.push(Instruction::TreeCondition {
                lhs: lhs.clone(),
                op: *op,
                rhs: rhs.clone(),
                target: target(*raw),
            }),
            Block::Jump { raw } => out.push(Instruction::TreeJump { target: target(*raw) }),
            Block::Ml(v) => out.extend(v.iter().cloned()),
        }
    }
    Program::new(out)
}

/// Drops trailing blocks until the program has at most `MAX_INSTRUCTIONS`
/// instructions and fits the bytecode capacity.
pub fn fit(mut blocks: Vec<Block>) -> Program {
    loop {
        while blocks.iter().map(Block::len).sum::<usize>() > MAX_INSTRUCTIONS {
            blocks.pop();
        }
        let p = build(&blocks, 0);
        match assemble(&p) {
            Err(CodecError::CapacityExceeded { .. }) => {
                blocks.pop();
            }
            _ => return p,
        }
    }
}

/// Valid programs within the bytecode capacity.
pub fn program() -> impl Strategy<Value = Program> {
    vec(block(), 0..=MAX_INSTRUCTIONS).prop_map(fit)
}

/// Naive reference MLP forward pass.
pub type RefLayer = (Vec<Vec<f64>>, Vec<f64>, Activation);

pub fn reference_forward(layers: &[RefLayer], x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (w, b, act) in layers {
        let mut z = vec![0.0; w.len()];
        for i in 0..w.len() {
            let mut s = 0.0;
            for j in 0..a.len() {
                s += w[i][j] * a[j];
            }
            z[i] = s + b[i];
        }
        a = reference_activation(*act, &z);
    }
    a
}

pub fn reference_activation(act: Activation, z: &[f64]) -> Vec<f64> {
    match act {
        Activation::Linear => z.to_vec(),
        Activation::Sigmoid => z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
        Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
        Activation::Relu => z.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect(),
        Activation::LeakyRelu => z.iter().map(|v| if *v > 0.0 { *v } else { 0.01 * v }).collect(),
        Activation::Softmax => {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }
}

fn numeric_literal() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i8>().prop_map(Value::int8),
        any::<i16>().prop_map(Value::int16),
        (-4.0f32..4.0).prop_map(Value::float32),
        (-4.0f64..4.0).prop_map(Value::float16),
    ]
}

/// Control-flow-heavy instructions whose operands are literals, so the only
/// possible fault is an exhausted step budget.
pub fn exit_block() -> impl Strategy<Value = Block> {
    prop_oneof![
        1 => (register(), numeric_literal()).prop_map(|(target, value)| Block::Plain(Instruction::Set { target, value })),
        1 => numeric_literal().prop_map(|v| Block::Plain(Instruction::Print { source: Operand::Literal(v) })),
        1 => register().prop_map(|target| Block::Plain(Instruction::Input {
            input_type: ValueType::Scalar(ScalarType::Float32),
            target
        })),
        3 => (numeric_literal(), cmp_op(), numeric_literal(), any::<u32>()).prop_map(|(l, op, r, raw)| Block::Cond {
            lhs: Operand::Literal(l),
            op,
            rhs: Operand::Literal(r),
            raw
        }),
        2 => any::<u32>().prop_map(|raw| Block::Jump { raw }),
    ]
}

/// Programs with jump targets drawn from `0..=len + 3`.
pub fn exit_program() -> impl Strategy<Value = Program> {
    vec(exit_block(), 0..=30).prop_map(|b| build(&b, 3))
}

#[derive(Debug, Default)]
pub struct ExitStats {
    pub jump_exits: usize,
    pub fallthrough_exits: usize,
    pub budget_faults: usize,
}

/// Steps `p` one instruction at a time and checks that every transfer to an
/// index at or past the end halts cleanly.
pub fn check_implicit_exit(p: &Program, budget: u64, stats: &mut ExitStats) -> Result<(), String> {
    use qrind_core::vm::{compare, SessionError};
    use qrind_core::{Session, SessionEvent, Status};

    let len = p.len();
    let mut s = Session::unchecked(p.clone(), budget);
    let halted_cleanly = |s: &mut Session| -> Result<(), String> {
        if *s.status() != Status::Halted || s.pc() != len {
            return Err(format!("expected halt at {len}, got {:?} at {}", s.status(), s.pc()));
        }
        if s.next_event() != Ok(Some(SessionEvent::Halted)) {
            return Err("missing Halted event".into());
        }
        if s.next_event() != Ok(None) || s.next_event() != Ok(None) {
            return Err("events after Halted".into());
        }
        if !matches!(s.step(), Err(SessionError::NotRunning(_))) {
            return Err("step accepted after halt".into());
        }
        Ok(())
    };
    if len == 0 {
        return halted_cleanly(&mut s);
    }
    loop {
        let pc = s.pc();
        let lit = |o: &Operand| match o {
            Operand::Literal(v) => v.clone(),
            Operand::Register(_) => unreachable!("exit programs use literals only"),
        };
        let (expected, by_jump) = match &p.instructions[pc] {
            Instruction::TreeJump { target } => (*target, true),
            Instruction::TreeCondition { lhs, op, rhs, target } => {
                if compare(&lit(lhs), *op, &lit(rhs)).map_err(|e| e.to_string())? {
                    (*target, true)
                } else {
                    (pc + 1, false)
                }
            }
            _ => (pc + 1, false),
        };
        match s.step().map_err(|e| e.to_string())? {
            Some(SessionEvent::Fault { error: qrind_core::VmError::BudgetExceeded(_), .. }) => {
                stats.budget_faults += 1;
                return Ok(());
            }
            Some(SessionEvent::Fault { error, pc }) => return Err(format!("fault at {pc}: {error}")),
            Some(SessionEvent::InputRequest { .. }) => {
                s.resume_with_input(Value::float32(1.0)).map_err(|e| e.to_string())?;
            }
            _ => {}
        }
        if expected >= len {
            if by_jump {
                stats.jump_exits += 1;
            } else {
                stats.fallthrough_exits += 1;
            }
            return halted_cleanly(&mut s);
        }
        if s.pc() != expected || *s.status() != Status::Running {
            return Err(format!("at {pc}: expected pc {expected}, got {} ({:?})", s.pc(), s.status()));
        }
    }
}

/// Nearest-even binary16 for any non-NaN f64, decided with exact rationals.
/// `half::f16::from_f64` goes through f32 on some targets and can double-round
/// just above a midpoint, so it is only trusted for bit patterns, not rounding.
pub fn exact_f16_bits(x: f64) -> u16 {
    use num_rational::BigRational;
    assert!(!x.is_nan());
    let sign = if x.is_sign_negative() { 0x8000 } else { 0 };
    if x.is_infinite() {
        return sign | 0x7c00;
    }
    // 0x7c00 stands in for 2^16 here: the first value past the largest finite.
    let value = |b: u16| -> BigRational {
        if b == 0x7c00 {
            BigRational::from_integer(65536.into())
        } else {
            BigRational::from_float(half::f16::from_bits(b).to_f64()).unwrap()
        }
    };
    let target = BigRational::from_float(x.abs()).unwrap();
    if target >= value(0x7c00) {
        return sign | 0x7c00;
    }
    // Largest pattern whose value is <= target.
    let (mut lo, mut hi) = (0u16, 0x7c00u16);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if value(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let below = &target - value(lo);
    let above = value(hi) - &target;
    let pick = match below.cmp(&above) {
        std::cmp::Ordering::Less => lo,
        std::cmp::Ordering::Greater => hi,
        std::cmp::Ordering::Equal if lo % 2 == 0 => lo,
        std::cmp::Ordering::Equal => hi,
    };
    sign | pick
}
