//! Reads a program from bytecode, a PNG holding bytecode, or a listing.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use qrind_core::codec::{assemble, disassemble, Bytecode, HEADER_BYTE};
use qrind_core::ir::parse_ir;
use qrind_core::qr::{extract_payload, is_png};
use qrind_core::Program;

pub fn bytecode(path: &Path) -> Result<Bytecode> {
    let raw = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if is_png(&raw) {
        let payload = extract_payload(&raw).with_context(|| format!("{}", path.display()))?;
        return Ok(Bytecode::from_bytes(payload)?);
    }
    if raw.first() == Some(&HEADER_BYTE) || raw.is_empty() {
        return Ok(Bytecode::from_bytes(raw)?);
    }
    match std::str::from_utf8(&raw) {
        // A listing; assemble it so every command sees validated bytecode.
        Ok(text) if path.extension().is_some_and(|e| e == "qri") => {
            let p = parse_ir(text).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))?;
            Ok(assemble(&p)?)
        }
        _ => Ok(Bytecode::from_bytes(raw)?),
    }
}

pub fn program(path: &Path) -> Result<Program> {
    let b = bytecode(path)?;
    let mut p = disassemble(&b).with_context(|| format!("{}", path.display()))?;
    // Keep the author's text for fault messages when running a listing.
    if path.extension().is_some_and(|e| e == "qri") {
        if let Ok(src) = fs::read_to_string(path).map(|t| parse_ir(&t)) {
            p.source_lines = src.ok().and_then(|s| s.source_lines);
        }
    }
    Ok(p)
}
