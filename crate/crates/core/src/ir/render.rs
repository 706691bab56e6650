//! Canonical text form. `parse_ir(&p.render()) == p` for every valid program.

use std::fmt::{self, Write};

use super::{Coefficients, Instruction, Operand, Program, Scalar, ScalarType, Value};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn float_text(x: f64, shortest: String) -> String {
    if x.is_nan() {
        "NAN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "INF" } else { "-INF" }.into()
    } else {
        shortest
    }
}

/// A FLOAT32 literal that the parser will not mistake for an integer.
fn f32_literal(v: f32) -> String {
    let text = float_text(f64::from(v), v.to_string());
    if v.is_finite() && !text.contains(['.', 'e', 'E']) {
        format!("{text}.0")
    } else {
        text
    }
}

impl Scalar {
    /// Literal text that parses back to exactly this scalar.
    pub fn literal(&self) -> String {
        match self {
            Scalar::Bool(true) => "TRUE".into(),
            Scalar::Bool(false) => "FALSE".into(),
            Scalar::Int8(v) => v.to_string(),
            Scalar::Int16(v) if i8::try_from(*v).is_ok() => format!("INT16({v})"),
            Scalar::Int16(v) => v.to_string(),
            Scalar::Float16(v) => format!("FLOAT16({})", float_text(v.to_f64(), v.to_string())),
            Scalar::Float32(v) => f32_literal(*v),
            Scalar::StrA7(s) => escape(s),
            Scalar::StrU8(s) if s.is_ascii() => format!("STR_U8({})", escape(s)),
            Scalar::StrU8(s) => escape(s),
        }
    }
}

impl Value {
    /// Literal text that parses back to exactly this value.
    pub fn literal(&self) -> String {
        match self {
            Value::Scalar(s) => s.literal(),
            Value::ArrayHom { elem, items } if items.is_empty() => format!("ARRAY({elem})[]"),
            Value::ArrayHom { items, .. } => list(items),
            Value::ArrayHet(items) => {
                let uniform = items
                    .first()
                    .map(Scalar::scalar_type)
                    .is_some_and(|t: ScalarType| items.iter().all(|s| s.scalar_type() == t));
                if uniform {
                    format!("ARRAY{}", list(items))
                } else {
                    list(items)
                }
            }
        }
    }
}

fn list(items: &[Scalar]) -> String {
    let parts: Vec<String> = items.iter().map(Scalar::literal).collect();
    format!("[{}]", parts.join(", "))
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Register(r) => write!(f, "{r}"),
            Operand::Literal(v) => f.write_str(&v.literal()),
        }
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            Coefficients::F16(v) => v.iter().map(|c| float_text(c.to_f64(), c.to_string())).collect(),
            Coefficients::F32(v) => v.iter().map(|c| float_text(f64::from(*c), c.to_string())).collect(),
        };
        f.write_str(&parts.join(", "))
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Set { target, value } => write!(f, "SET {target} TO {}", value.literal()),
            Instruction::Input { input_type, target } => write!(f, "INPUT {input_type} INTO {target}"),
            Instruction::Print { source } => write!(f, "PRINT {source}"),
            Instruction::TreeCondition { lhs, op, rhs, target } => {
                write!(f, "TREECONDITION {lhs} {op} {rhs} ({target})")
            }
            Instruction::TreeJump { target } => write!(f, "TREEJUMP ({target})"),
            Instruction::MlInput { kind, arity, source } => {
                write!(f, "MLINPUT {} {arity} FROM {source}", kind.name())
            }
            Instruction::NnLayer { neurons, activation, coefficients } => {
                write!(f, "NNLAYER {neurons} {activation} {}", coefficients.encoding())?;
                if !coefficients.is_empty() {
                    write!(f, " {coefficients}")?;
                }
                Ok(())
            }
            Instruction::MlOutput { target } => write!(f, "MLOUTPUT INTO {target}"),
        }
    }
}

impl Program {
    /// Canonical listing, one `(index) instruction` per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, instr) in self.instructions.iter().enumerate() {
            let _ = writeln!(out, "({i}) {instr}");
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_ir;
    use super::*;

    #[test]
    fn literal_forms() {
        assert_eq!(Value::float32(1.0).literal(), "1.0");
        assert_eq!(Value::float32(-0.0).literal(), "-0.0");
        assert_eq!(Value::float32(0.5).literal(), "0.5");
        assert_eq!(Value::int16(5).literal(), "INT16(5)");
        assert_eq!(Value::int16(500).literal(), "500");
        assert_eq!(Value::float16(0.1).literal(), "FLOAT16(0.1)");
        assert_eq!(Value::Scalar(Scalar::StrU8("x".into())).literal(), "STR_U8(\"x\")");
        assert_eq!(Value::text("°C").literal(), "\"°C\"");
        assert_eq!(Value::ArrayHet(vec![Scalar::Int8(1)]).literal(), "ARRAY[1]");
        assert_eq!(Value::float32(f32::INFINITY).literal(), "INF");
    }

    #[test]
    fn listing_is_table_order() {
        let p = parse_ir("NNLAYER SIGMOID 1 FLOAT32 0.01, 0.001, -1.5\nTREEJUMP (2)").unwrap();
        assert_eq!(p.render(), "(0) NNLAYER 1 SIGMOID FLOAT32 0.01, 0.001, -1.5\n(1) TREEJUMP (2)\n");
    }

    #[test]
    fn control_characters_escape() {
        let v = Value::text("a\u{1}b\"\\");
        let p = parse_ir(&format!("PRINT {}", v.literal())).unwrap();
        assert_eq!(p.instructions[0], crate::ir::Instruction::Print { source: Operand::Literal(v) });
    }
}
