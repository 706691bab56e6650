//! Newline-delimited JSON framing of session events, for frontends that run
//! in another process.
//!
//! Outgoing messages:
//!
//! ```text
//! {"type":"output","text":"Current machine RPM?"}
//! {"type":"input_request","expected_type":"FLOAT32","text":"Current machine RPM?"}
//! {"type":"halted"}
//! {"type":"fault","text":"faulted at (4): UndefinedRegister: R9 was read before being written"}
//! ```
//!
//! Incoming messages are `{"type":"input","value":1000}`. A value that does
//! not fit the pending type is answered with a fresh `input_request` whose
//! `text` carries the reason.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::ir::{Scalar, ScalarType, Value};

use super::{parse_user_text, Session, SessionEvent, Status, VmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Output,
    InputRequest,
    Halted,
    Fault,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<serde_json::Value>,
}

impl Message {
    fn new(kind: MessageType) -> Self {
        Self { kind, text: None, expected_type: None, value: None }
    }

    pub fn input(value: serde_json::Value) -> Self {
        Self { value: Some(value), ..Self::new(MessageType::Input) }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("message serialization cannot fail")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

impl From<&SessionEvent> for Message {
    fn from(ev: &SessionEvent) -> Self {
        match ev {
            SessionEvent::Output(t) => Self { text: Some(t.clone()), ..Self::new(MessageType::Output) },
            SessionEvent::InputRequest { expected, prompt } => Self {
                text: prompt.clone(),
                expected_type: Some(expected.name().to_string()),
                ..Self::new(MessageType::InputRequest)
            },
            SessionEvent::Halted => Self::new(MessageType::Halted),
            SessionEvent::Fault { pc, error } => {
                Self { text: Some(format!("faulted at ({pc}): {error}")), ..Self::new(MessageType::Fault) }
            }
        }
    }
}

/// Maps a JSON resume value onto a VM value for the expected type. Strings
/// are parsed against non-text types so a plain text box also works.
pub fn value_from_json(v: &serde_json::Value, expected: ScalarType) -> Result<Value, VmError> {
    let bad = || VmError::TypeMismatch(format!("{v} is not a valid {expected} input"));
    match v {
        serde_json::Value::Bool(b) => Ok(Value::bool(*b)),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                if matches!(expected, ScalarType::Int8 | ScalarType::Int16) {
                    return i16::try_from(i).map(Value::int16).map_err(|_| bad());
                }
            }
            let x = n.as_f64().ok_or_else(bad)?;
            Ok(match expected {
                ScalarType::Float16 => Value::float16(x),
                ScalarType::Float32 => Value::float32(x as f32),
                // Left as a float so strict coercion rejects it.
                _ => Value::Scalar(Scalar::Float32(x as f32)),
            })
        }
        serde_json::Value::String(s) if expected.is_text() => Ok(Value::text(s.as_str())),
        serde_json::Value::String(s) => parse_user_text(s, expected),
        _ => Err(bad()),
    }
}

/// Drives `session` over a line-oriented transport until it halts or faults,
/// or the reader hits end of input while the session waits. Returns the
/// final status.
pub fn serve<R: BufRead, W: Write>(session: &mut Session, mut reader: R, mut writer: W) -> io::Result<Status> {
    let send = |w: &mut W, m: &Message| -> io::Result<()> {
        writeln!(w, "{}", m.to_line())?;
        w.flush()
    };
    loop {
        match session.next_event() {
            Ok(Some(ev)) => send(&mut writer, &Message::from(&ev))?,
            Ok(None) => return Ok(session.status().clone()),
            Err(_) => {}
        }
        let Status::AwaitingInput { expected, .. } = *session.status() else {
            continue;
        };
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Ok(session.status().clone());
            }
            if line.trim().is_empty() {
                continue;
            }
            let outcome = match Message::from_line(line.trim()) {
                Ok(Message { kind: MessageType::Input, value: Some(v), .. }) => value_from_json(&v, expected)
                    .map_err(|e| e.to_string())
                    .and_then(|v| session.resume_with_input(v).map_err(|e| e.to_string())),
                Ok(_) => Err("expected an input message with a value".to_string()),
                Err(e) => Err(format!("malformed message: {e}")),
            };
            match outcome {
                Ok(()) => break,
                Err(reason) => {
                    let m = Message {
                        text: Some(reason),
                        expected_type: Some(expected.name().to_string()),
                        ..Message::new(MessageType::InputRequest)
                    };
                    send(&mut writer, &m)?;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;
    use serde_json::json;

    #[test]
    fn field_names() {
        let m = Message::from(&SessionEvent::InputRequest { expected: ScalarType::Bool, prompt: Some("ok?".into()) });
        assert_eq!(m.to_line(), r#"{"type":"input_request","text":"ok?","expected_type":"BOOL"}"#);
        assert_eq!(Message::from(&SessionEvent::Halted).to_line(), r#"{"type":"halted"}"#);
        let back = Message::from_line(r#"{"type":"input","value":true}"#).unwrap();
        assert_eq!(back, Message::input(json!(true)));
    }

    #[test]
    fn json_values() {
        assert_eq!(value_from_json(&json!(60), ScalarType::Float32).unwrap(), Value::float32(60.0));
        assert_eq!(value_from_json(&json!(-4), ScalarType::Int16).unwrap(), Value::int16(-4));
        assert_eq!(value_from_json(&json!("Yes"), ScalarType::Bool).unwrap(), Value::bool(true));
        assert!(value_from_json(&json!(70000), ScalarType::Int16).is_err());
        assert!(value_from_json(&json!(null), ScalarType::Bool).is_err());
    }

    #[test]
    fn serve_round() {
        let p = parse_ir("(0) PRINT \"n?\"\n(1) INPUT BOOL INTO R0\n(2) PRINT R0").unwrap();
        let mut s = Session::new(p).unwrap();
        let input = "{\"type\":\"input\",\"value\":3.2}\n{\"type\":\"input\",\"value\":false}\n";
        let mut out = Vec::new();
        let st = serve(&mut s, input.as_bytes(), &mut out).unwrap();
        assert_eq!(st, Status::Halted);
        let lines: Vec<Message> =
            String::from_utf8(out).unwrap().lines().map(|l| Message::from_line(l).unwrap()).collect();
        let kinds: Vec<MessageType> = lines.iter().map(|m| m.kind).collect();
        use MessageType::*;
        assert_eq!(kinds, [Output, InputRequest, InputRequest, Output, Halted]);
        assert_eq!(lines[3].text.as_deref(), Some("FALSE"));
    }
}
