//! Value types and literals.

use std::fmt;

use crate::codec::f16::F16;

/// Element type of a scalar value or of a homogeneous array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Bool,
    Int8,
    Int16,
    Float16,
    Float32,
    /// ASCII text, packed 7 bits per character.
    StrA7,
    /// UTF-8 text.
    StrU8,
}

impl ScalarType {
    pub const ALL: [ScalarType; 7] = [
        ScalarType::Bool,
        ScalarType::Int8,
        ScalarType::Int16,
        ScalarType::Float16,
        ScalarType::Float32,
        ScalarType::StrA7,
        ScalarType::StrU8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Bool => "BOOL",
            ScalarType::Int8 => "INT8",
            ScalarType::Int16 => "INT16",
            ScalarType::Float16 => "FLOAT16",
            ScalarType::Float32 => "FLOAT32",
            ScalarType::StrA7 => "STR_A7",
            ScalarType::StrU8 => "STR_U8",
        }
    }

    /// Accepts the canonical names plus the short spellings `INT`, `FLOAT`
    /// and `STRING` (INT16, FLOAT32 and STR_U8 respectively).
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_uppercase().as_str() {
            "BOOL" | "BOOLEAN" => ScalarType::Bool,
            "INT8" => ScalarType::Int8,
            "INT16" | "INT" => ScalarType::Int16,
            "FLOAT16" => ScalarType::Float16,
            "FLOAT32" | "FLOAT" => ScalarType::Float32,
            "STR_A7" => ScalarType::StrA7,
            "STR_U8" | "STRING" => ScalarType::StrU8,
            _ => return None,
        })
    }

    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            ScalarType::Int8 | ScalarType::Int16 | ScalarType::Float16 | ScalarType::Float32
        )
    }

    pub fn is_text(self) -> bool {
        matches!(self, ScalarType::StrA7 | ScalarType::StrU8)
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Type of any value. Arrays nest at most one level: a homogeneous array
/// names a scalar element type and heterogeneous arrays hold scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Scalar(ScalarType),
    ArrayHom(ScalarType),
    ArrayHet,
}

impl ValueType {
    pub fn as_scalar(self) -> Option<ScalarType> {
        match self {
            ValueType::Scalar(s) => Some(s),
            _ => None,
        }
    }
}

impl From<ScalarType> for ValueType {
    fn from(s: ScalarType) -> Self {
        ValueType::Scalar(s)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Scalar(s) => write!(f, "{s}"),
            ValueType::ArrayHom(s) => write!(f, "ARRAY({s})"),
            ValueType::ArrayHet => f.write_str("ARRAY"),
        }
    }
}

/// A scalar datum.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int8(i8),
    Int16(i16),
    Float16(F16),
    Float32(f32),
    StrA7(String),
    StrU8(String),
}

impl Scalar {
    pub fn scalar_type(&self) -> ScalarType {
        match self {
            Scalar::Bool(_) => ScalarType::Bool,
            Scalar::Int8(_) => ScalarType::Int8,
            Scalar::Int16(_) => ScalarType::Int16,
            Scalar::Float16(_) => ScalarType::Float16,
            Scalar::Float32(_) => ScalarType::Float32,
            Scalar::StrA7(_) => ScalarType::StrA7,
            Scalar::StrU8(_) => ScalarType::StrU8,
        }
    }

    /// Numeric value widened to f64 (exact for every numeric variant).
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int8(v) => Some(f64::from(*v)),
            Scalar::Int16(v) => Some(f64::from(*v)),
            Scalar::Float16(v) => Some(v.to_f64()),
            Scalar::Float32(v) => Some(f64::from(*v)),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::StrA7(s) | Scalar::StrU8(s) => Some(s),
            _ => None,
        }
    }

    /// Text literal typed the way the parser infers quoted strings.
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_ascii() {
            Scalar::StrA7(s)
        } else {
            Scalar::StrU8(s)
        }
    }

    /// Checks the payload invariants that the variant types cannot express.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Scalar::StrA7(s) if !s.is_ascii() => {
                Err(format!("STR_A7 literal {s:?} contains non-ASCII characters"))
            }
            _ => Ok(()),
        }
    }

    /// Text shown by PRINT.
    pub fn display_text(&self) -> String {
        match self {
            Scalar::Bool(true) => "TRUE".into(),
            Scalar::Bool(false) => "FALSE".into(),
            Scalar::Int8(v) => v.to_string(),
            Scalar::Int16(v) => v.to_string(),
            Scalar::Float16(v) => display_float(v.to_f64(), v.to_string()),
            Scalar::Float32(v) => display_float(f64::from(*v), v.to_string()),
            Scalar::StrA7(s) | Scalar::StrU8(s) => s.clone(),
        }
    }
}

fn display_float(x: f64, shortest: String) -> String {
    if x.is_nan() {
        "NAN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "INF" } else { "-INF" }.into()
    } else {
        shortest
    }
}

/// A runtime or literal value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(Scalar),
    ArrayHom { elem: ScalarType, items: Vec<Scalar> },
    ArrayHet(Vec<Scalar>),
}

impl Value {
    pub fn bool(v: bool) -> Self {
        Value::Scalar(Scalar::Bool(v))
    }

    pub fn int8(v: i8) -> Self {
        Value::Scalar(Scalar::Int8(v))
    }

    pub fn int16(v: i16) -> Self {
        Value::Scalar(Scalar::Int16(v))
    }

    pub fn float16(v: f64) -> Self {
        Value::Scalar(Scalar::Float16(F16::from_f64(v)))
    }

    pub fn float32(v: f32) -> Self {
        Value::Scalar(Scalar::Float32(v))
    }

    pub fn text(s: impl Into<String>) -> Self {
        Value::Scalar(Scalar::text(s))
    }

    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Scalar(s) => ValueType::Scalar(s.scalar_type()),
            Value::ArrayHom { elem, .. } => ValueType::ArrayHom(*elem),
            Value::ArrayHet(_) => ValueType::ArrayHet,
        }
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            Value::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self {
            Value::Scalar(s) => s.check(),
            Value::ArrayHom { elem, items } => items.iter().try_for_each(|item| {
                if item.scalar_type() != *elem {
                    return Err(format!(
                        "element of type {} in ARRAY({elem})",
                        item.scalar_type()
                    ));
                }
                item.check()
            }),
            Value::ArrayHet(items) => items.iter().try_for_each(Scalar::check),
        }
    }

    /// Text shown by PRINT: arrays as `[a, b, c]`.
    pub fn display_text(&self) -> String {
        match self {
            Value::Scalar(s) => s.display_text(),
            Value::ArrayHom { items, .. } | Value::ArrayHet(items) => {
                let parts: Vec<String> = items.iter().map(Scalar::display_text).collect();
                format!("[{}]", parts.join(", "))
            }
        }
    }
}

impl From<Scalar> for Value {
    fn from(s: Scalar) -> Self {
        Value::Scalar(s)
    }
}
