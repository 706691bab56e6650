//! Parser for the textual intermediate representation.
//!
//! One instruction per line; blank lines and `#` comments are skipped. A line
//! may start with its instruction index in parentheses, `(3) PRINT R0`, and
//! jump operands are written the same way.

use thiserror::Error;

use super::{
    CmpOp, Coefficients, Instruction, MlKind, Operand, Program, RegisterRef, Scalar, ScalarType,
    Value, ValueType,
};
use crate::codec::f16::F16;
use crate::mlp::{Activation, Encoding};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based source line.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("malformed operand: {0}")]
    MalformedOperand(String),
    #[error("label ({found}) does not match instruction index {expected}")]
    LabelMismatch { expected: usize, found: String },
    #[error("non-numeric weight `{0}` in NNLAYER")]
    NonNumericWeight(String),
    #[error("unexpected character `{0}`")]
    UnexpectedCharacter(char),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unexpected trailing input `{0}`")]
    TrailingInput(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Cmp(CmpOp),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) | Tok::Number(w) => w.clone(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::Comma => ",".into(),
            Tok::Cmp(op) => op.symbol().into(),
        }
    }
}

fn lex(line: &str) -> Result<Vec<Tok>, ParseErrorKind> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '(' => (toks.push(Tok::LParen), i += 1).1,
            ')' => (toks.push(Tok::RParen), i += 1).1,
            '[' => (toks.push(Tok::LBracket), i += 1).1,
            ']' => (toks.push(Tok::RBracket), i += 1).1,
            ',' => (toks.push(Tok::Comma), i += 1).1,
            '=' | '!' | '<' | '>' => {
                let (op, width) = match (c, next) {
                    ('=', Some('=')) => (CmpOp::Eq, 2),
                    ('!', Some('=')) => (CmpOp::Ne, 2),
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    ('>', _) => (CmpOp::Gt, 1),
                    _ => return Err(ParseErrorKind::UnexpectedCharacter(c)),
                };
                toks.push(Tok::Cmp(op));
                i += width;
            }
            '"' => {
                let (s, end) = lex_string(&chars, i + 1)?;
                toks.push(Tok::Str(s));
                i = end;
            }
            c if c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && next.is_some_and(|n| n.is_ascii_digit() || n == '.')) =>
            {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Number(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_alphabetic()
                || c == '_'
                || (c == '-' && next.is_some_and(|n| n.is_ascii_alphabetic())) =>
            {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Word(chars[start..i].iter().collect()));
            }
            other => return Err(ParseErrorKind::UnexpectedCharacter(other)),
        }
    }
    Ok(toks)
}

/// Reads a string body starting after the opening quote. Returns the text and
/// the index just past the closing quote.
fn lex_string(chars: &[char], mut i: usize) -> Result<(String, usize), ParseErrorKind> {
    let mut out = String::new();
    while i < chars.len() {
        match chars[i] {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                let esc = *chars.get(i + 1).ok_or(ParseErrorKind::UnterminatedString)?;
                i += 2;
                match esc {
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    '\\' => out.push('\\'),
                    '"' => out.push('"'),
                    'u' => {
                        // \u{XXXX}
                        if chars.get(i) != Some(&'{') {
                            return Err(ParseErrorKind::MalformedOperand("bad \\u escape".into()));
                        }
                        let close = chars[i..]
                            .iter()
                            .position(|&c| c == '}')
                            .ok_or(ParseErrorKind::UnterminatedString)?;
                        let hex: String = chars[i + 1..i + close].iter().collect();
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| {
                                ParseErrorKind::MalformedOperand(format!("bad \\u{{{hex}}} escape"))
                            })?;
                        out.push(ch);
                        i += close + 1;
                    }
                    other => {
                        return Err(ParseErrorKind::MalformedOperand(format!(
                            "unknown escape `\\{other}`"
                        )))
                    }
                }
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Err(ParseErrorKind::UnterminatedString)
}

fn malformed(msg: impl Into<String>) -> ParseErrorKind {
    ParseErrorKind::MalformedOperand(msg.into())
}

fn is_int_text(s: &str) -> bool {
    !s.contains(['.', 'e', 'E'])
}

fn parse_f32(s: &str) -> Option<f32> {
    match s.to_ascii_uppercase().as_str() {
        "INF" => Some(f32::INFINITY),
        "-INF" => Some(f32::NEG_INFINITY),
        "NAN" => Some(f32::NAN),
        _ if s.chars().any(|c| c.is_ascii_digit()) && !s.contains(['i', 'I', 'n', 'N']) => {
            s.parse().ok()
        }
        _ => None,
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s.to_ascii_uppercase().as_str() {
        "INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        "NAN" => Some(f64::NAN),
        _ if s.chars().any(|c| c.is_ascii_digit()) && !s.contains(['i', 'I', 'n', 'N']) => {
            s.parse().ok()
        }
        _ => None,
    }
}

struct Cursor {
    toks: Vec<Tok>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.pos + ahead)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn next_or(&mut self, what: &str) -> Result<Tok, ParseErrorKind> {
        self.next().ok_or_else(|| malformed(format!("expected {what}, found end of line")))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseErrorKind> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(malformed(format!("expected `{}`, found `{}`", tok.describe(), t.describe()))),
            None => Err(malformed(format!("expected `{}`, found end of line", tok.describe()))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseErrorKind> {
        match self.next() {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw) => Ok(()),
            Some(t) => Err(malformed(format!("expected `{kw}`, found `{}`", t.describe()))),
            None => Err(malformed(format!("expected `{kw}`, found end of line"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<String, ParseErrorKind> {
        match self.next_or(what)? {
            Tok::Word(w) => Ok(w),
            t => Err(malformed(format!("expected {what}, found `{}`", t.describe()))),
        }
    }

    fn unsigned(&mut self, what: &str) -> Result<u64, ParseErrorKind> {
        match self.next_or(what)? {
            Tok::Number(n) if !n.starts_with(['-', '+']) && is_int_text(&n) => {
                n.parse().map_err(|_| malformed(format!("{what} `{n}` is not a valid integer")))
            }
            t => Err(malformed(format!("expected {what}, found `{}`", t.describe()))),
        }
    }

    fn positive(&mut self, what: &str) -> Result<u64, ParseErrorKind> {
        match self.unsigned(what)? {
            0 => Err(malformed(format!("{what} must be positive"))),
            n => Ok(n),
        }
    }

    fn finish(&self) -> Result<(), ParseErrorKind> {
        match self.peek() {
            None => Ok(()),
            Some(_) => {
                let rest: Vec<String> = self.toks[self.pos..].iter().map(Tok::describe).collect();
                Err(ParseErrorKind::TrailingInput(rest.join(" ")))
            }
        }
    }

    fn at_register(&self) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if register_index(w).is_some())
    }

    fn register(&mut self) -> Result<RegisterRef, ParseErrorKind> {
        let w = self.word("register")?;
        let index = register_index(&w).ok_or_else(|| malformed(format!("`{w}` is not a register")))?;
        if self.peek() == Some(&Tok::LBracket) {
            self.next();
            let element = self.unsigned("array subscript")?;
            self.expect(Tok::RBracket)?;
            Ok(RegisterRef { index, element: Some(element) })
        } else {
            Ok(RegisterRef { index, element: None })
        }
    }

    fn jump_target(&mut self) -> Result<usize, ParseErrorKind> {
        self.expect(Tok::LParen)?;
        let n = self.unsigned("jump target")?;
        self.expect(Tok::RParen)?;
        usize::try_from(n).map_err(|_| malformed("jump target too large"))
    }

    fn operand(&mut self) -> Result<Operand, ParseErrorKind> {
        if self.at_register() {
            Ok(Operand::Register(self.register()?))
        } else {
            Ok(Operand::Literal(self.literal()?))
        }
    }

    fn value_type(&mut self) -> Result<ValueType, ParseErrorKind> {
        let w = self.word("type")?;
        if w.eq_ignore_ascii_case("ARRAY") {
            if self.peek() == Some(&Tok::LParen) {
                self.next();
                let elem = self.scalar_type()?;
                self.expect(Tok::RParen)?;
                return Ok(ValueType::ArrayHom(elem));
            }
            return Ok(ValueType::ArrayHet);
        }
        ScalarType::from_name(&w)
            .map(ValueType::Scalar)
            .ok_or_else(|| malformed(format!("unknown type `{w}`")))
    }

    fn scalar_type(&mut self) -> Result<ScalarType, ParseErrorKind> {
        let w = self.word("element type")?;
        ScalarType::from_name(&w).ok_or_else(|| malformed(format!("unknown element type `{w}`")))
    }

    fn literal(&mut self) -> Result<Value, ParseErrorKind> {
        match self.peek() {
            Some(Tok::LBracket) => self.array_literal(None),
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case("ARRAY") => {
                self.next();
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let elem = self.scalar_type()?;
                    self.expect(Tok::RParen)?;
                    self.array_literal(Some(Some(elem)))
                } else {
                    self.array_literal(Some(None))
                }
            }
            _ => Ok(Value::Scalar(self.scalar_literal()?)),
        }
    }

    /// `forced`: `None` infers; `Some(None)` heterogeneous; `Some(Some(t))`
    /// homogeneous of `t`.
    fn array_literal(&mut self, forced: Option<Option<ScalarType>>) -> Result<Value, ParseErrorKind> {
        self.expect(Tok::LBracket)?;
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::RBracket) {
            self.next();
        } else {
            loop {
                items.push(self.scalar_literal()?);
                match self.next_or("`,` or `]`")? {
                    Tok::Comma => continue,
                    Tok::RBracket => break,
                    t => return Err(malformed(format!("expected `,` or `]`, found `{}`", t.describe()))),
                }
            }
        }
        match forced {
            Some(Some(elem)) => {
                if let Some(bad) = items.iter().find(|s| s.scalar_type() != elem) {
                    return Err(malformed(format!(
                        "{} element in ARRAY({elem}) literal",
                        bad.scalar_type()
                    )));
                }
                Ok(Value::ArrayHom { elem, items })
            }
            Some(None) => Ok(Value::ArrayHet(items)),
            None => match items.first().map(Scalar::scalar_type) {
                Some(t) if items.iter().all(|s| s.scalar_type() == t) => {
                    Ok(Value::ArrayHom { elem: t, items })
                }
                _ => Ok(Value::ArrayHet(items)),
            },
        }
    }

    fn scalar_literal(&mut self) -> Result<Scalar, ParseErrorKind> {
        match self.next_or("literal")? {
            Tok::Str(s) => Ok(Scalar::text(s)),
            Tok::Number(n) => infer_number(&n),
            Tok::Word(w) => {
                let upper = w.to_ascii_uppercase();
                match upper.as_str() {
                    "TRUE" => return Ok(Scalar::Bool(true)),
                    "FALSE" => return Ok(Scalar::Bool(false)),
                    "INF" | "-INF" | "NAN" => return Ok(Scalar::Float32(parse_f32(&w).unwrap())),
                    _ => {}
                }
                if self.peek() == Some(&Tok::LParen) {
                    if let Some(ty) = ScalarType::from_name(&w) {
                        self.next();
                        let inner = self.cast_body(ty)?;
                        self.expect(Tok::RParen)?;
                        return Ok(inner);
                    }
                }
                Err(malformed(format!("`{w}` is not a literal")))
            }
            t => Err(malformed(format!("expected literal, found `{}`", t.describe()))),
        }
    }

    fn cast_body(&mut self, ty: ScalarType) -> Result<Scalar, ParseErrorKind> {
        let tok = self.next_or("literal")?;
        let text = match &tok {
            Tok::Number(n) | Tok::Word(n) => n.clone(),
            Tok::Str(s) => s.clone(),
            t => return Err(malformed(format!("expected literal, found `{}`", t.describe()))),
        };
        let bad = || malformed(format!("`{}` is not a valid {ty} literal", tok.describe()));
        match (ty, &tok) {
            (ScalarType::Bool, Tok::Word(w)) if w.eq_ignore_ascii_case("TRUE") => Ok(Scalar::Bool(true)),
            (ScalarType::Bool, Tok::Word(w)) if w.eq_ignore_ascii_case("FALSE") => {
                Ok(Scalar::Bool(false))
            }
            (ScalarType::Int8, Tok::Number(n)) if is_int_text(n) => {
                n.parse().map(Scalar::Int8).map_err(|_| bad())
            }
            (ScalarType::Int16, Tok::Number(n)) if is_int_text(n) => {
                n.parse().map(Scalar::Int16).map_err(|_| bad())
            }
            (ScalarType::Float16, Tok::Number(_) | Tok::Word(_)) => {
                parse_f64(&text).map(|v| Scalar::Float16(F16::from_f64(v))).ok_or_else(bad)
            }
            (ScalarType::Float32, Tok::Number(_) | Tok::Word(_)) => {
                parse_f32(&text).map(Scalar::Float32).ok_or_else(bad)
            }
            (ScalarType::StrA7, Tok::Str(s)) if s.is_ascii() => Ok(Scalar::StrA7(s.clone())),
            (ScalarType::StrU8, Tok::Str(s)) => Ok(Scalar::StrU8(s.clone())),
            _ => Err(bad()),
        }
    }

    fn coefficient_list(&mut self, encoding: Encoding) -> Result<Coefficients, ParseErrorKind> {
        let mut raw = Vec::new();
        while let Some(tok) = self.next() {
            let text = match tok {
                Tok::Number(n) | Tok::Word(n) => n,
                t => return Err(ParseErrorKind::NonNumericWeight(t.describe())),
            };
            raw.push(text);
            match self.next() {
                None => break,
                Some(Tok::Comma) if self.peek().is_some() => continue,
                Some(t) => return Err(ParseErrorKind::NonNumericWeight(t.describe())),
            }
        }
        match encoding {
            Encoding::Float16 => raw
                .iter()
                .map(|t| parse_f64(t).map(F16::from_f64).ok_or_else(|| ParseErrorKind::NonNumericWeight(t.clone())))
                .collect::<Result<_, _>>()
                .map(Coefficients::F16),
            Encoding::Float32 => raw
                .iter()
                .map(|t| parse_f32(t).ok_or_else(|| ParseErrorKind::NonNumericWeight(t.clone())))
                .collect::<Result<_, _>>()
                .map(Coefficients::F32),
        }
    }

    fn instruction(&mut self) -> Result<Instruction, ParseErrorKind> {
        let mnemonic = self.word("mnemonic")?;
        let instr = match mnemonic.to_ascii_uppercase().as_str() {
            "SET" => {
                let target = self.register()?;
                self.keyword("TO")?;
                Instruction::Set { target, value: self.literal()? }
            }
            "INPUT" => {
                let input_type = self.value_type()?;
                self.keyword("INTO")?;
                Instruction::Input { input_type, target: self.register()? }
            }
            "PRINT" => Instruction::Print { source: self.operand()? },
            "TREECONDITION" => {
                let lhs = self.operand()?;
                let op = match self.next_or("comparison operator")? {
                    Tok::Cmp(op) => op,
                    t => return Err(malformed(format!("expected comparison operator, found `{}`", t.describe()))),
                };
                let rhs = self.operand()?;
                Instruction::TreeCondition { lhs, op, rhs, target: self.jump_target()? }
            }
            "TREEJUMP" => Instruction::TreeJump { target: self.jump_target()? },
            "MLINPUT" => {
                let kind = self.word("model type")?;
                if !kind.eq_ignore_ascii_case(MlKind::Mlp.name()) {
                    return Err(malformed(format!("unknown model type `{kind}`")));
                }
                let arity = self.positive("input count")?;
                self.keyword("FROM")?;
                Instruction::MlInput { kind: MlKind::Mlp, arity, source: self.register()? }
            }
            "NNLAYER" => {
                // Both `<int> <activation>` and `<activation> <int>` are accepted.
                let (neurons, activation) = match (self.peek(), self.peek_at(1)) {
                    (Some(Tok::Number(_)), _) => {
                        let n = self.positive("neuron count")?;
                        (n, self.activation()?)
                    }
                    _ => {
                        let a = self.activation()?;
                        (self.positive("neuron count")?, a)
                    }
                };
                let enc = self.word("weight encoding")?;
                let encoding = Encoding::from_name(&enc)
                    .ok_or_else(|| malformed(format!("unknown weight encoding `{enc}`")))?;
                let coefficients = self.coefficient_list(encoding)?;
                Instruction::NnLayer { neurons, activation, coefficients }
            }
            "MLOUTPUT" => {
                self.keyword("INTO")?;
                Instruction::MlOutput { target: self.register()? }
            }
            _ => return Err(ParseErrorKind::UnknownMnemonic(mnemonic)),
        };
        self.finish()?;
        Ok(instr)
    }

    fn activation(&mut self) -> Result<Activation, ParseErrorKind> {
        let w = self.word("activation")?;
        Activation::from_name(&w).ok_or_else(|| malformed(format!("unknown activation `{w}`")))
    }
}

fn register_index(word: &str) -> Option<u64> {
    let digits = word.strip_prefix(['R', 'r'])?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn infer_number(text: &str) -> Result<Scalar, ParseErrorKind> {
    if is_int_text(text) {
        let v: i64 = text
            .parse()
            .map_err(|_| malformed(format!("`{text}` is not a number")))?;
        if let Ok(v) = i8::try_from(v) {
            Ok(Scalar::Int8(v))
        } else if let Ok(v) = i16::try_from(v) {
            Ok(Scalar::Int16(v))
        } else {
            Err(malformed(format!("integer literal {text} does not fit in INT16")))
        }
    } else {
        parse_f32(text)
            .map(Scalar::Float32)
            .ok_or_else(|| malformed(format!("`{text}` is not a number")))
    }
}

/// Parses a program. The i-th instruction is the i-th line that is neither
/// blank nor a comment.
pub fn parse_ir(text: &str) -> Result<Program, ParseError> {
    let mut instructions = Vec::new();
    let mut source_lines = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |kind| ParseError { line, kind };
        let toks = lex(raw).map_err(err)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { toks, pos: 0 };
        if cur.peek() == Some(&Tok::LParen) {
            cur.next();
            let label = match cur.next() {
                Some(Tok::Number(n)) => n,
                Some(t) => return Err(err(malformed(format!("bad line label `{}`", t.describe())))),
                None => return Err(err(malformed("unterminated line label"))),
            };
            cur.expect(Tok::RParen).map_err(err)?;
            if label.parse::<usize>().ok() != Some(instructions.len()) {
                return Err(err(ParseErrorKind::LabelMismatch {
                    expected: instructions.len(),
                    found: label,
                }));
            }
        }
        instructions.push(cur.instruction().map_err(err)?);
        source_lines.push(raw.trim().to_string());
    }
    Ok(Program { instructions, source_lines: Some(source_lines) })
}

/// Parses a single literal (`0.5`, `TRUE`, `"text"`, `FLOAT16(1.5)`, `[1, 2]`).
pub fn parse_literal(text: &str) -> Result<Value, ParseError> {
    let err = |kind| ParseError { line: 1, kind };
    let mut cur = Cursor { toks: lex(text).map_err(err)?, pos: 0 };
    let v = cur.literal().map_err(err)?;
    cur.finish().map_err(err)?;
    Ok(v)
}
