//! Exponential (Elias gamma) coding of non-negative integers.
//!
//! A value `v` is written as the gamma code of `v + 1`: with `k` the bit
//! length of `v + 1`, emit `k - 1` zero bits followed by the `k` bits of
//! `v + 1`. Small values take few bits, so frequently used registers should
//! get low indices.

use super::bits::{BitReader, BitWriter};
use super::CodecError;

/// Longest zero prefix a decodable `u64` can have (`u64::MAX + 1` is 65 bits).
const MAX_PREFIX: u32 = 64;

/// Number of bits `encode_varint(v)` produces.
pub fn varint_len(v: u64) -> u32 {
    let n = u128::from(v) + 1;
    let k = 128 - n.leading_zeros();
    2 * k - 1
}

pub fn write_varint(w: &mut BitWriter, v: u64) {
    let n = u128::from(v) + 1;
    let k = 128 - n.leading_zeros();
    for _ in 1..k {
        w.push_bit(false);
    }
    for i in (0..k).rev() {
        w.push_bit((n >> i) & 1 == 1);
    }
}

pub fn read_varint(r: &mut BitReader<'_>) -> Result<u64, CodecError> {
    let start = r.position();
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros > MAX_PREFIX {
            return Err(CodecError::VarintOverflow { bit: start });
        }
    }
    let mut n: u128 = 1;
    for _ in 0..zeros {
        n = (n << 1) | u128::from(r.read_bit()?);
    }
    u64::try_from(n - 1).map_err(|_| CodecError::VarintOverflow { bit: start })
}

/// Encodes `v` as a bit sequence.
pub fn encode_varint(v: u64) -> Vec<bool> {
    let mut w = BitWriter::new();
    write_varint(&mut w, v);
    w.to_bits()
}

/// Decodes one code from the front of `bits`, returning the value and the
/// number of bits consumed.
pub fn decode_varint(bits: &[bool]) -> Result<(u64, usize), CodecError> {
    let mut w = BitWriter::new();
    for &b in bits {
        w.push_bit(b);
    }
    let bytes = w.finish();
    // Only the first `bits.len()` bits are real; padding must not be consumed.
    let mut r = BitReader::new(&bytes);
    let v = read_varint(&mut r)?;
    if r.position() > bits.len() {
        return Err(CodecError::TruncatedStream { bit: bits.len() });
    }
    Ok((v, r.position()))
}
