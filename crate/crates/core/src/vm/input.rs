//! Typed user input: strict coercion of resume values to the requested type.

use crate::codec::f16::F16;
use crate::ir::{parse_literal, Scalar, ScalarType, Value};

use super::VmError;

fn mismatch(v: &Value, expected: ScalarType) -> VmError {
    VmError::TypeMismatch(format!("expected {expected} input, got {}", v.display_text()))
}

/// Checks and converts a resume value. BOOL takes only booleans, integer
/// types take in-range integers, float types take any number, STR_A7 takes
/// ASCII text and STR_U8 any text.
pub fn coerce_input(v: Value, expected: ScalarType) -> Result<Scalar, VmError> {
    let Value::Scalar(s) = &v else {
        return Err(mismatch(&v, expected));
    };
    let out = match (expected, s) {
        (ScalarType::Bool, Scalar::Bool(b)) => Scalar::Bool(*b),
        (ScalarType::Int8, Scalar::Int8(i)) => Scalar::Int8(*i),
        (ScalarType::Int8, Scalar::Int16(i)) => i8::try_from(*i).map(Scalar::Int8).map_err(|_| mismatch(&v, expected))?,
        (ScalarType::Int16, Scalar::Int8(i)) => Scalar::Int16(i16::from(*i)),
        (ScalarType::Int16, Scalar::Int16(i)) => Scalar::Int16(*i),
        (ScalarType::Float16, s) if s.scalar_type().is_numeric() => {
            Scalar::Float16(F16::from_f64(s.as_f64().unwrap_or_default()))
        }
        (ScalarType::Float32, s) if s.scalar_type().is_numeric() => Scalar::Float32(s.as_f64().unwrap_or_default() as f32),
        (ScalarType::StrA7, Scalar::StrA7(t)) => Scalar::StrA7(t.clone()),
        (ScalarType::StrA7, Scalar::StrU8(t)) if t.is_ascii() => Scalar::StrA7(t.clone()),
        (ScalarType::StrU8, Scalar::StrA7(t) | Scalar::StrU8(t)) => Scalar::StrU8(t.clone()),
        _ => return Err(mismatch(&v, expected)),
    };
    Ok(out)
}

/// Interprets a line typed by a user once the expected type is known.
/// Booleans accept `true/false/yes/no/y/n` in any case; numbers are decimal;
/// text is taken verbatim.
pub fn parse_user_text(text: &str, expected: ScalarType) -> Result<Value, VmError> {
    let t = text.trim();
    let bad = || VmError::TypeMismatch(format!("`{t}` is not a valid {expected} input"));
    match expected {
        ScalarType::Bool => match t.to_ascii_lowercase().as_str() {
            "true" | "yes" | "y" => Ok(Value::bool(true)),
            "false" | "no" | "n" => Ok(Value::bool(false)),
            _ => Err(bad()),
        },
        ScalarType::Int8 | ScalarType::Int16 => {
            let n: i64 = t.parse().map_err(|_| bad())?;
            let v = i16::try_from(n).map(Value::int16).map_err(|_| bad())?;
            coerce_input(v, expected).map(Value::Scalar)
        }
        ScalarType::Float16 | ScalarType::Float32 => {
            let x: f64 = t.parse().map_err(|_| bad())?;
            coerce_input(Value::Scalar(Scalar::Float32(x as f32)), expected)
                .map(Value::Scalar)
                .map_err(|_| bad())
                .map(|v| if expected == ScalarType::Float16 { Value::float16(x) } else { v })
        }
        ScalarType::StrA7 if !text.is_ascii() => Err(bad()),
        ScalarType::StrA7 => Ok(Value::Scalar(Scalar::StrA7(text.to_string()))),
        ScalarType::StrU8 => Ok(Value::Scalar(Scalar::StrU8(text.to_string()))),
    }
}

/// Interprets a batch input given before its type is known: an IR literal
/// (`60`, `0.5`, `TRUE`, `"text"`), a yes/no word, or else plain text.
pub fn value_from_text(text: &str) -> Value {
    if let Ok(v) = parse_literal(text) {
        return v;
    }
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" => Value::bool(true),
        "false" | "no" | "n" => Value::bool(false),
        _ => Value::text(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_bool() {
        assert!(coerce_input(Value::float32(3.2), ScalarType::Bool).is_err());
        assert!(coerce_input(Value::int8(1), ScalarType::Bool).is_err());
        assert_eq!(coerce_input(Value::bool(true), ScalarType::Bool).unwrap(), Scalar::Bool(true));
    }

    #[test]
    fn numeric_widening() {
        assert_eq!(coerce_input(Value::int16(1000), ScalarType::Float32).unwrap(), Scalar::Float32(1000.0));
        assert_eq!(coerce_input(Value::int8(-3), ScalarType::Int16).unwrap(), Scalar::Int16(-3));
        assert!(coerce_input(Value::int16(300), ScalarType::Int8).is_err());
        assert!(coerce_input(Value::float32(1.0), ScalarType::Int16).is_err());
        assert_eq!(
            coerce_input(Value::float32(0.1), ScalarType::Float16).unwrap(),
            Scalar::Float16(F16::from_f64(0.1f32 as f64))
        );
    }

    #[test]
    fn text_inputs() {
        assert!(coerce_input(Value::text("é"), ScalarType::StrA7).is_err());
        assert_eq!(coerce_input(Value::text("ok"), ScalarType::StrU8).unwrap(), Scalar::StrU8("ok".into()));
        assert!(coerce_input(Value::text("1"), ScalarType::Float32).is_err());
    }

    #[test]
    fn user_text() {
        assert_eq!(parse_user_text(" Yes ", ScalarType::Bool).unwrap(), Value::bool(true));
        assert!(parse_user_text("maybe", ScalarType::Bool).is_err());
        assert_eq!(parse_user_text("60", ScalarType::Float32).unwrap(), Value::float32(60.0));
        assert_eq!(parse_user_text("0.1", ScalarType::Float16).unwrap(), Value::float16(0.1));
        assert_eq!(parse_user_text("-7", ScalarType::Int8).unwrap(), Value::int8(-7));
        assert!(parse_user_text("40000", ScalarType::Int16).is_err());
        assert!(parse_user_text("abc", ScalarType::Float32).is_err());
        assert_eq!(parse_user_text("hi there", ScalarType::StrU8).unwrap(), Value::Scalar(Scalar::StrU8("hi there".into())));
    }

    #[test]
    fn batch_text() {
        assert_eq!(value_from_text("60"), Value::int8(60));
        assert_eq!(value_from_text("1000.0"), Value::float32(1000.0));
        assert_eq!(value_from_text("TRUE"), Value::bool(true));
        assert_eq!(value_from_text("no"), Value::bool(false));
        assert_eq!(value_from_text("hello world"), Value::text("hello world"));
    }
}
