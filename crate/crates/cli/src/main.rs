//! `qrind`: compile, inspect, embed and run QRind programs.

mod load;
mod model;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qrind_core::codec::{assemble, disassemble, CodecError};
use qrind_core::ir::{parse_ir, Opcode};
use qrind_core::qr::{capacity, smallest_version, EcLevel, OutputFormat, QrParams, VersionChoice};
use qrind_core::{emit_qr, Encoding, Instruction, Program, RegisterRef, MAX_BYTECODE_LEN};

#[derive(Parser)]
#[command(name = "qrind", version, about = "Toolchain for QRind executable QR codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a .qri listing into .eqr bytecode.
    Compile {
        input: PathBuf,
        /// Output path (defaults to the input with an .eqr extension).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the listing held by bytecode or a QR image.
    Dis {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a program from bytecode, a QR image or a listing.
    Run {
        input: PathBuf,
        /// Answer for the next INPUT, in order. Any use selects batch mode.
        #[arg(short, long = "input", value_name = "VALUE")]
        inputs: Vec<String>,
        /// Batch mode with no inputs.
        #[arg(long)]
        batch: bool,
        /// Speak newline-delimited JSON on stdin/stdout.
        #[arg(long, conflicts_with_all = ["inputs", "batch"])]
        protocol: bool,
        /// Maximum instructions executed before giving up.
        #[arg(long, default_value_t = qrind_core::vm::DEFAULT_STEP_BUDGET)]
        budget: u64,
    },
    /// Embed bytecode in a QR image.
    Qr {
        input: PathBuf,
        /// Error correction level: L, M, Q or H.
        #[arg(long, default_value = "M", value_parser = parse_ec)]
        ec: EcLevel,
        /// Symbol version 1-40, or `auto` for the smallest that fits.
        #[arg(long, default_value = "auto", value_parser = parse_version)]
        version: VersionChoice,
        /// Output image; `.svg` selects SVG, anything else PNG.
        #[arg(short, long)]
        out: PathBuf,
        /// Pixels per module.
        #[arg(long, default_value_t = 8)]
        module_size: u32,
    },
    /// Summarize a program: size, instruction mix and QR fit.
    Info { input: PathBuf },
    /// Turn a JSON model description into MLINPUT/NNLAYER/MLOUTPUT lines.
    MlImport {
        model: PathBuf,
        /// Coefficient storage, overriding per-layer settings.
        #[arg(long, value_enum)]
        encoding: Option<EncodingArg>,
        /// Register holding the input vector.
        #[arg(long, default_value = "R1", value_parser = parse_register)]
        source: RegisterRef,
        /// Register receiving the output.
        #[arg(long, default_value = "R2", value_parser = parse_register)]
        target: RegisterRef,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    F16,
    F32,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::F16 => Encoding::Float16,
            EncodingArg::F32 => Encoding::Float32,
        }
    }
}

fn parse_ec(s: &str) -> Result<EcLevel, String> {
    EcLevel::from_name(s).ok_or_else(|| format!("unknown error correction level `{s}` (use L, M, Q or H)"))
}

fn parse_version(s: &str) -> Result<VersionChoice, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(VersionChoice::Auto);
    }
    match s.parse::<u8>() {
        Ok(v) if (1..=40).contains(&v) => Ok(VersionChoice::Fixed(v)),
        _ => Err(format!("version must be 1-40 or auto, got `{s}`")),
    }
}

fn parse_register(s: &str) -> Result<RegisterRef, String> {
    let digits = s.strip_prefix(['R', 'r']).ok_or_else(|| format!("`{s}` is not a register"))?;
    digits.parse().map(RegisterRef::new).map_err(|_| format!("`{s}` is not a register"))
}

fn fit_report(len: usize) -> String {
    EcLevel::ALL
        .iter()
        .map(|&ec| match smallest_version(len, ec) {
            Some(v) => format!("{}: v{v}", ec.letter()),
            None => format!("{}: too large", ec.letter()),
        })
        .collect::<Vec<_>>()
        .join("  ")
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compile(input: &Path, output: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let program = parse_ir(&text).map_err(|e| anyhow::anyhow!("{}:{e}", input.display()))?;
    let bytecode = assemble(&program).map_err(|e| match e {
        CodecError::ProgramInvalid(diags) => anyhow::anyhow!(
            "{}",
            diags.iter().map(|d| format!("{}: {d}", input.display())).collect::<Vec<_>>().join("\n")
        ),
        e => e.into(),
    })?;
    let out = output.unwrap_or_else(|| input.with_extension("eqr"));
    fs::write(&out, bytecode.as_bytes()).with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "{}: {} instructions, {} bytes (limit {MAX_BYTECODE_LEN})",
        out.display(),
        program.len(),
        bytecode.len()
    );
    println!("smallest QR version  {}", fit_report(bytecode.len()));
    Ok(())
}

fn dis(input: &Path, output: Option<PathBuf>) -> Result<()> {
    let program = load::program(input)?;
    write_or_print(output.as_deref(), &program.render())
}

fn qr(input: &Path, ec: EcLevel, version: VersionChoice, out: &Path, module_size: u32) -> Result<()> {
    let bytes = load::bytecode(input)?;
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("svg") => OutputFormat::Svg,
        _ => OutputFormat::Png,
    };
    let params = QrParams { version, ec_level: ec, module_pixel_size: module_size, format };
    let image = emit_qr(bytes.as_bytes(), &params)?;
    fs::write(out, image).with_context(|| format!("cannot write {}", out.display()))?;
    let v = match version {
        VersionChoice::Fixed(v) => v,
        VersionChoice::Auto => smallest_version(bytes.len(), ec).expect("emit succeeded"),
    };
    println!(
        "{}: version {v}-{}, {} of {} bytes used",
        out.display(),
        ec.letter(),
        bytes.len(),
        capacity(v, ec)
    );
    Ok(())
}

fn info(input: &Path) -> Result<()> {
    let bytes = load::bytecode(input)?;
    let program = disassemble(&bytes)?;
    println!("format version {}, dialect {}", bytes.format_version(), bytes.dialect());
    println!("{} bytes, {} instructions", bytes.len(), program.len());
    let opcodes = [
        Opcode::Set,
        Opcode::Input,
        Opcode::Print,
        Opcode::TreeCondition,
        Opcode::TreeJump,
        Opcode::MlInput,
        Opcode::NnLayer,
        Opcode::MlOutput,
    ];
    for op in opcodes {
        let n = program.instructions.iter().filter(|i| i.opcode() == op).count();
        if n > 0 {
            println!("  {:<14}{n}", op.mnemonic());
        }
    }
    let coefficients: usize = program
        .instructions
        .iter()
        .map(|i| match i {
            Instruction::NnLayer { coefficients, .. } => coefficients.len(),
            _ => 0,
        })
        .sum();
    if coefficients > 0 {
        println!("{coefficients} model coefficients");
    }
    println!("smallest QR version  {}", fit_report(bytes.len()));
    Ok(())
}

fn ml_import(
    path: &Path,
    encoding: Option<EncodingArg>,
    source: RegisterRef,
    target: RegisterRef,
    output: Option<PathBuf>,
) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let model = model::import(&text, encoding.map(Encoding::from))?;
    let fragment = Program::new(model.to_instructions(source, target));
    let listing: String = fragment.instructions.iter().map(|i| format!("{i}\n")).collect();
    write_or_print(output.as_deref(), &listing)?;
    let n = model.coefficient_count();
    let f16 = model.clone().with_encoding(Encoding::Float16).storage_bytes();
    let f32 = model.clone().with_encoding(Encoding::Float32).storage_bytes();
    eprintln!("{n} coefficients, {f16} bytes (f16) / {f32} bytes (f32)");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Compile { input, output } => compile(&input, output)?,
        Command::Dis { input, output } => dis(&input, output)?,
        Command::Run { input, inputs, batch, protocol, budget } => {
            if budget == 0 {
                bail!("--budget must be positive");
            }
            let program = load::program(&input)?;
            let ok = if protocol {
                run::protocol(program, budget)?
            } else if batch || !inputs.is_empty() {
                run::batch(program, &inputs, budget)?
            } else {
                run::interactive(program, budget)?
            };
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Qr { input, ec, version, out, module_size } => qr(&input, ec, version, &out, module_size)?,
        Command::Info { input } => info(&input)?,
        Command::MlImport { model, encoding, source, target, output } => {
            ml_import(&model, encoding, source, target, output)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => ExitCode::from(2),
    }
}
