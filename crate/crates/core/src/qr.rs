//! Embedding bytecode in QR symbols and reading it back.
//!
//! Symbols are always byte mode. Generation uses the `qrcode` crate and
//! recognition uses `rqrr`; this module adds capacity rules, version
//! selection and the PNG/SVG plumbing.

use std::fmt;
use std::io::Cursor;

use image::{GrayImage, ImageFormat as RasterFormat, Luma};
use qrcode::bits::Bits;
use qrcode::render::svg;
use qrcode::{QrCode, Version};
use thiserror::Error;

pub const MIN_VERSION: u8 = 1;
pub const MAX_VERSION: u8 = 40;
/// Modules of light border on each side.
pub const QUIET_ZONE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EcLevel {
    Low,
    Medium,
    Quartile,
    High,
}

impl EcLevel {
    pub const ALL: [EcLevel; 4] = [EcLevel::Low, EcLevel::Medium, EcLevel::Quartile, EcLevel::High];

    pub fn letter(self) -> char {
        match self {
            EcLevel::Low => 'L',
            EcLevel::Medium => 'M',
            EcLevel::Quartile => 'Q',
            EcLevel::High => 'H',
        }
    }

    /// Accepts `L`/`M`/`Q`/`H` or the full names, in any case.
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L" | "LOW" => Some(EcLevel::Low),
            "M" | "MEDIUM" => Some(EcLevel::Medium),
            "Q" | "QUARTILE" => Some(EcLevel::Quartile),
            "H" | "HIGH" => Some(EcLevel::High),
            _ => None,
        }
    }

    fn to_qrcode(self) -> qrcode::EcLevel {
        match self {
            EcLevel::Low => qrcode::EcLevel::L,
            EcLevel::Medium => qrcode::EcLevel::M,
            EcLevel::Quartile => qrcode::EcLevel::Q,
            EcLevel::High => qrcode::EcLevel::H,
        }
    }
}

impl fmt::Display for EcLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcLevel::Low => "LOW",
            EcLevel::Medium => "MEDIUM",
            EcLevel::Quartile => "QUARTILE",
            EcLevel::High => "HIGH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VersionChoice {
    /// Smallest version that fits the payload.
    #[default]
    Auto,
    Fixed(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Png,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrParams {
    pub version: VersionChoice,
    pub ec_level: EcLevel,
    pub module_pixel_size: u32,
    pub format: OutputFormat,
}

impl Default for QrParams {
    fn default() -> Self {
        Self { version: VersionChoice::Auto, ec_level: EcLevel::Medium, module_pixel_size: 8, format: OutputFormat::Png }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QrError {
    #[error("QR version {0} does not exist (valid: 1-40)")]
    InvalidVersion(u8),
    #[error("module size must be positive")]
    InvalidModuleSize,
    #[error("{}", capacity_message(*.len, *.version, *.ec_level, *.smallest_fit))]
    CapacityExceeded { len: usize, version: Option<u8>, ec_level: EcLevel, smallest_fit: Option<(u8, EcLevel)> },
    #[error("no QR symbol found in the image")]
    NoSymbolFound,
    #[error("QR symbol found but could not be decoded: {0}")]
    UndecodableSymbol(String),
    #[error("image error: {0}")]
    Image(String),
}

fn capacity_message(len: usize, version: Option<u8>, ec: EcLevel, fit: Option<(u8, EcLevel)>) -> String {
    let at = match version {
        Some(v) => format!("version {v}-{}", ec.letter()),
        None => format!("any version at EC {ec}"),
    };
    let hint = match fit {
        Some((v, e)) => format!("; smallest fit is version {v}-{}", e.letter()),
        None => String::new(),
    };
    format!("CapacityExceeded: {len} bytes do not fit {at}{hint}")
}

fn qr_version(version: u8) -> Result<Version, QrError> {
    if (MIN_VERSION..=MAX_VERSION).contains(&version) {
        Ok(Version::Normal(i16::from(version)))
    } else {
        Err(QrError::InvalidVersion(version))
    }
}

/// Byte-mode payload capacity in bytes.
///
/// # Panics
/// If `version` is outside 1..=40.
pub fn capacity(version: u8, ec: EcLevel) -> usize {
    let v = qr_version(version).expect("version in 1..=40");
    let data_bits = Bits::new(v).max_len(ec.to_qrcode()).expect("normal versions support every level");
    let count_bits = if version <= 9 { 8 } else { 16 };
    (data_bits - 4 - count_bits) / 8
}

/// Smallest version holding `len` bytes at `ec`.
pub fn smallest_version(len: usize, ec: EcLevel) -> Option<u8> {
    (MIN_VERSION..=MAX_VERSION).find(|&v| capacity(v, ec) >= len)
}

/// Smallest version holding `len` bytes at any level, preferring `ec` and
/// then the weaker levels.
fn smallest_fit(len: usize, ec: EcLevel) -> Option<(u8, EcLevel)> {
    if let Some(v) = smallest_version(len, ec) {
        return Some((v, ec));
    }
    EcLevel::ALL.iter().rev().filter(|e| **e < ec).find_map(|&e| smallest_version(len, e).map(|v| (v, e)))
}

/// A square grid of modules, `true` for dark, without the quiet zone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleMatrix {
    size: usize,
    dark: Vec<bool>,
}

impl ModuleMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.dark[y * self.size + x]
    }

    pub fn set(&mut self, x: usize, y: usize, dark: bool) {
        self.dark[y * self.size + x] = dark;
    }

    pub fn invert(&mut self, x: usize, y: usize) {
        let i = y * self.size + x;
        self.dark[i] = !self.dark[i];
    }

    pub fn dark_count(&self) -> usize {
        self.dark.iter().filter(|d| **d).count()
    }
}

/// An encoded symbol.
#[derive(Clone)]
pub struct Symbol {
    code: QrCode,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("version", &self.version()).field("ec_level", &self.ec_level()).finish()
    }
}

impl Symbol {
    pub fn version(&self) -> u8 {
        match self.code.version() {
            Version::Normal(v) => v as u8,
            Version::Micro(_) => unreachable!("only normal symbols are produced"),
        }
    }

    pub fn ec_level(&self) -> EcLevel {
        match self.code.error_correction_level() {
            qrcode::EcLevel::L => EcLevel::Low,
            qrcode::EcLevel::M => EcLevel::Medium,
            qrcode::EcLevel::Q => EcLevel::Quartile,
            qrcode::EcLevel::H => EcLevel::High,
        }
    }

    pub fn modules(&self) -> ModuleMatrix {
        ModuleMatrix { size: self.code.width(), dark: self.code.to_colors().into_iter().map(|c| c == qrcode::Color::Dark).collect() }
    }

    pub fn to_svg(&self, module_pixel_size: u32) -> String {
        self.code
            .render::<svg::Color>()
            .module_dimensions(module_pixel_size, module_pixel_size)
            .quiet_zone(true)
            .build()
    }
}

/// Builds a byte-mode symbol for `payload`.
pub fn encode_symbol(payload: &[u8], version: VersionChoice, ec: EcLevel) -> Result<Symbol, QrError> {
    let len = payload.len();
    let v = match version {
        VersionChoice::Fixed(v) => {
            qr_version(v)?;
            if capacity(v, ec) < len {
                return Err(QrError::CapacityExceeded { len, version: Some(v), ec_level: ec, smallest_fit: smallest_fit(len, ec) });
            }
            v
        }
        VersionChoice::Auto => smallest_version(len, ec).ok_or(QrError::CapacityExceeded {
            len,
            version: None,
            ec_level: ec,
            smallest_fit: smallest_fit(len, ec),
        })?,
    };
    let internal = |e: qrcode::types::QrError| QrError::Image(format!("symbol construction failed: {e}"));
    let mut bits = Bits::new(qr_version(v)?);
    bits.push_byte_data(payload).map_err(internal)?;
    bits.push_terminator(ec.to_qrcode()).map_err(internal)?;
    let code = QrCode::with_bits(bits, ec.to_qrcode()).map_err(internal)?;
    Ok(Symbol { code })
}

/// Draws modules as a greyscale PNG with the standard quiet zone.
pub fn render_png(m: &ModuleMatrix, module_pixel_size: u32) -> Result<Vec<u8>, QrError> {
    if module_pixel_size == 0 {
        return Err(QrError::InvalidModuleSize);
    }
    let px = module_pixel_size as usize;
    let side = ((m.size + 2 * QUIET_ZONE) * px) as u32;
    let img = GrayImage::from_fn(side, side, |x, y| {
        let mx = (x as usize / px).checked_sub(QUIET_ZONE);
        let my = (y as usize / px).checked_sub(QUIET_ZONE);
        match (mx, my) {
            (Some(mx), Some(my)) if mx < m.size && my < m.size && m.get(mx, my) => Luma([0]),
            _ => Luma([255]),
        }
    });
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, RasterFormat::Png).map_err(|e| QrError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

/// Encodes `payload` and renders it in the requested format.
pub fn emit_qr(payload: &[u8], params: &QrParams) -> Result<Vec<u8>, QrError> {
    if params.module_pixel_size == 0 {
        return Err(QrError::InvalidModuleSize);
    }
    let symbol = encode_symbol(payload, params.version, params.ec_level)?;
    match params.format {
        OutputFormat::Png => render_png(&symbol.modules(), params.module_pixel_size),
        OutputFormat::Svg => Ok(symbol.to_svg(params.module_pixel_size).into_bytes()),
    }
}

/// Finds a QR symbol in an encoded raster image and returns its payload.
pub fn extract_payload(image_bytes: &[u8]) -> Result<Vec<u8>, QrError> {
    let img = image::load_from_memory(image_bytes).map_err(|e| QrError::Image(e.to_string()))?.to_luma8();
    let mut prepared = rqrr::PreparedImage::prepare_from_greyscale(img.width() as usize, img.height() as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0]
    });
    let grids = prepared.detect_grids();
    if grids.is_empty() {
        return Err(QrError::NoSymbolFound);
    }
    let mut last = None;
    for g in &grids {
        let mut out = Vec::new();
        match g.decode_to(&mut out) {
            Ok(_) => return Ok(out),
            Err(e) => last = Some(e),
        }
    }
    Err(QrError::UndecodableSymbol(last.map(|e| e.to_string()).unwrap_or_default()))
}

/// Decodes a module grid directly, skipping image recognition.
pub fn decode_modules(m: &ModuleMatrix) -> Result<Vec<u8>, QrError> {
    let grid = rqrr::Grid::new(rqrr::SimpleGrid::from_func(m.size, |x, y| m.get(x, y)));
    let mut out = Vec::new();
    grid.decode_to(&mut out).map_err(|e| QrError::UndecodableSymbol(e.to_string()))?;
    Ok(out)
}

/// True when the bytes start with the PNG signature.
pub fn is_png(bytes: &[u8]) -> bool {
    bytes.starts_with(b"\x89PNG\r\n\x1a\n")
}
