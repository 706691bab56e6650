//! IEEE 754 binary16 conversion.

use std::fmt;

/// A binary16 value stored as its raw bit pattern.
///
/// Equality and hashing are on the bits, so `-0.0 != 0.0` and a NaN equals
/// itself when the payload matches.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct F16(u16);

const SIGN_MASK: u16 = 0x8000;
const EXP_MASK: u16 = 0x7c00;
const MAN_MASK: u16 = 0x03ff;

impl F16 {
    pub const ZERO: F16 = F16(0);
    pub const INFINITY: F16 = F16(EXP_MASK);
    pub const NEG_INFINITY: F16 = F16(SIGN_MASK | EXP_MASK);
    /// Largest finite value, 65504.
    pub const MAX: F16 = F16(0x7bff);

    pub const fn from_bits(bits: u16) -> Self {
        F16(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Rounds `x` to the nearest binary16 value, ties to even. Values at or
    /// above 65520 in magnitude become infinity.
    pub fn from_f64(x: f64) -> Self {
        let bits = x.to_bits();
        let sign = ((bits >> 48) as u16) & SIGN_MASK;
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let man = bits & 0x000f_ffff_ffff_ffff;

        if exp == 0x7ff {
            if man == 0 {
                return F16(sign | EXP_MASK);
            }
            // Keep the high payload bits and force a quiet NaN.
            return F16(sign | EXP_MASK | 0x0200 | ((man >> 42) as u16 & MAN_MASK));
        }
        if exp == 0 {
            // f64 subnormals (and zero) are far below the binary16 range.
            return F16(sign);
        }

        let unbiased = exp - 1023;
        if unbiased > 15 {
            return F16(sign | EXP_MASK);
        }
        let significand = man | (1u64 << 52);

        if unbiased >= -14 {
            let kept = round_shift(significand, 42);
            // `kept` carries the implicit bit at position 10; adding it on top of
            // (exp - 1) lets a mantissa carry roll into the exponent.
            let magnitude = (((unbiased + 14) as u64) << 10) + kept;
            if magnitude >= u64::from(EXP_MASK) {
                return F16(sign | EXP_MASK);
            }
            F16(sign | magnitude as u16)
        } else {
            let shift = 42 + (-14 - unbiased) as u32;
            if shift > 53 {
                return F16(sign);
            }
            F16(sign | round_shift(significand, shift) as u16)
        }
    }

    pub fn from_f32(x: f32) -> Self {
        // f32 -> f64 is exact, so this rounds once.
        Self::from_f64(f64::from(x))
    }

    /// Exact widening conversion.
    pub fn to_f64(self) -> f64 {
        let sign = if self.0 & SIGN_MASK != 0 { -1.0 } else { 1.0 };
        let exp = (self.0 & EXP_MASK) >> 10;
        let man = f64::from(self.0 & MAN_MASK);
        match exp {
            0 => sign * man * 2f64.powi(-24),
            0x1f if man == 0.0 => sign * f64::INFINITY,
            0x1f => f64::NAN.copysign(sign),
            _ => sign * (1.0 + man / 1024.0) * 2f64.powi(i32::from(exp) - 15),
        }
    }

    pub fn to_f32(self) -> f32 {
        self.to_f64() as f32
    }

    pub fn is_nan(self) -> bool {
        self.0 & EXP_MASK == EXP_MASK && self.0 & MAN_MASK != 0
    }

    pub fn is_finite(self) -> bool {
        self.0 & EXP_MASK != EXP_MASK
    }
}

/// `value >> shift` rounded to nearest, ties to even. `shift` is in 1..=53.
fn round_shift(value: u64, shift: u32) -> u64 {
    let kept = value >> shift;
    let rem = value & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    if rem > half || (rem == half && kept & 1 == 1) {
        kept + 1
    } else {
        kept
    }
}

impl fmt::Debug for F16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F16({:?})", self.to_f64())
    }
}

impl fmt::Display for F16 {
    /// Shortest decimal that reads back to the same binary16 value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.to_f64();
        if !x.is_finite() {
            return write!(f, "{}", x);
        }
        for digits in 0..32 {
            let text = format!("{:.*}", digits, x);
            if text.parse::<f64>().map(F16::from_f64) == Ok(*self) {
                return f.write_str(&text);
            }
        }
        write!(f, "{}", x)
    }
}

/// Encodes a real as binary16 bits.
pub fn encode_f16(x: f64) -> u16 {
    F16::from_f64(x).to_bits()
}

/// Decodes binary16 bits. Exact.
pub fn decode_f16(bits: u16) -> f64 {
    F16::from_bits(bits).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(encode_f16(0.0), 0x0000);
        assert_eq!(encode_f16(-0.0), 0x8000);
        assert_eq!(encode_f16(1.5), 0x3e00);
        assert_eq!(decode_f16(0x3e00), 1.5);
        assert_eq!(encode_f16(65504.0), 0x7bff);
        assert_eq!(encode_f16(65519.99), 0x7bff);
        assert_eq!(encode_f16(65520.0), 0x7c00);
        assert_eq!(encode_f16(-1e9), 0xfc00);
        assert_eq!(encode_f16(f64::INFINITY), 0x7c00);
        assert!(F16::from_f64(f64::NAN).is_nan());
    }

    #[test]
    fn subnormals_and_underflow() {
        let tiny = 2f64.powi(-24);
        assert_eq!(encode_f16(tiny), 0x0001);
        // Exactly half the smallest subnormal ties to even (zero).
        assert_eq!(encode_f16(tiny / 2.0), 0x0000);
        assert_eq!(encode_f16(tiny * 0.5000001), 0x0001);
        assert_eq!(encode_f16(1e-300), 0x0000);
        // Largest subnormal rounds up into the smallest normal.
        assert_eq!(encode_f16(2f64.powi(-14) - tiny / 4.0), 0x0400);
    }

    #[test]
    fn ties_to_even() {
        // 1 + 2^-11 is halfway between 1.0 and the next value; 1.0 has even mantissa.
        assert_eq!(encode_f16(1.0 + 2f64.powi(-11)), 0x3c00);
        // 1 + 3 * 2^-11 is halfway between mantissas 1 and 2; rounds to 2.
        assert_eq!(encode_f16(1.0 + 3.0 * 2f64.powi(-11)), 0x3c02);
    }

    #[test]
    fn shortest_display() {
        assert_eq!(F16::from_f64(0.5).to_string(), "0.5");
        assert_eq!(F16::from_f64(0.1).to_string(), "0.1");
        assert_eq!(F16::from_f64(-1.5).to_string(), "-1.5");
        assert_eq!(F16::from_f64(65504.0).to_string(), "65504");
    }
}
