//! The three ways of driving a session from the command line.

use std::io::{self, BufRead, Write};

use anyhow::Result;
use qrind_core::vm::{protocol as wire, SessionError};
use qrind_core::{Program, Session, SessionEvent, Status, VmError};

fn session(program: Program, budget: u64) -> Result<Session> {
    Session::with_budget(program, budget).map_err(|diags| {
        anyhow::anyhow!("{}", diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
    })
}

fn report_fault(s: &Session, pc: usize, error: &VmError) {
    eprintln!("error: faulted at ({pc}): {error}");
    if let Some(line) = s.program().line_text(pc) {
        eprintln!("  ({pc}) {}", line.trim());
    }
}

/// Feeds `inputs` to successive INPUT instructions and prints each output
/// line. Each input is read against the type the program asks for.
pub fn batch(program: Program, inputs: &[String], budget: u64) -> Result<bool> {
    let mut s = session(program, budget)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut next = 0;
    while let Some(ev) = s.next_event()? {
        match ev {
            SessionEvent::Output(t) => writeln!(out, "{t}")?,
            SessionEvent::InputRequest { expected, .. } => {
                let Some(text) = inputs.get(next) else {
                    out.flush()?;
                    eprintln!(
                        "error: InputsExhausted: program asked for input #{} but only {} were supplied",
                        next + 1,
                        inputs.len()
                    );
                    return Ok(false);
                };
                match s.resume_with_text(text) {
                    Ok(()) => next += 1,
                    Err(SessionError::InputRejected(e)) => {
                        out.flush()?;
                        eprintln!("error: input #{} `{text}` rejected, expected {expected}: {e}", next + 1);
                        return Ok(false);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            SessionEvent::Halted => {}
            SessionEvent::Fault { pc, error } => {
                out.flush()?;
                report_fault(&s, pc, &error);
                return Ok(false);
            }
        }
    }
    out.flush()?;
    if next < inputs.len() {
        eprintln!("warning: {} unused input(s)", inputs.len() - next);
    }
    Ok(true)
}

/// Prompts on the terminal for each INPUT, retrying until the answer fits.
pub fn interactive(program: Program, budget: u64) -> Result<bool> {
    let mut s = session(program, budget)?;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    while let Some(ev) = s.next_event()? {
        match ev {
            SessionEvent::Output(t) => println!("{t}"),
            SessionEvent::InputRequest { expected, .. } => loop {
                print!("[{expected}]> ");
                io::stdout().flush()?;
                let Some(line) = lines.next().transpose()? else {
                    println!();
                    eprintln!("error: input closed while the program was waiting");
                    return Ok(false);
                };
                match s.resume_with_text(&line) {
                    Ok(()) => break,
                    Err(SessionError::InputRejected(e)) => eprintln!("{e}"),
                    Err(e) => return Err(e.into()),
                }
            },
            SessionEvent::Halted => {}
            SessionEvent::Fault { pc, error } => {
                report_fault(&s, pc, &error);
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Newline-delimited JSON session on stdin/stdout.
pub fn protocol(program: Program, budget: u64) -> Result<bool> {
    let mut s = session(program, budget)?;
    let status = wire::serve(&mut s, io::stdin().lock(), io::stdout().lock())?;
    Ok(status == Status::Halted)
}
