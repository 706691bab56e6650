//! MSB-first bit packing used by the bytecode body.

use super::CodecError;

/// Append-only bit buffer. Bits are packed MSB-first into bytes and the final
/// partial byte is zero-filled by [`BitWriter::finish`].
#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push_bit(&mut self, bit: bool) {
        let offset = self.len % 8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> offset;
        }
        self.len += 1;
    }

    /// Writes the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 64);
        for i in (0..count).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    pub fn push_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.push_bits(u64::from(b), 8);
        }
    }

    /// Bits written so far, as booleans. Mostly useful for inspecting codes.
    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len)
            .map(|i| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect()
    }

    /// Returns the zero-padded byte buffer.
    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// Cursor over a packed bit buffer. Never reads past the end of the slice.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Bit offset of the cursor from the start of the slice.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool, CodecError> {
        if self.pos >= self.bytes.len() * 8 {
            return Err(CodecError::TruncatedStream { bit: self.pos });
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64, CodecError> {
        debug_assert!(count <= 64);
        if self.remaining() < count as usize {
            return Err(CodecError::TruncatedStream { bit: self.bytes.len() * 8 });
        }
        let mut value = 0u64;
        for _ in 0..count {
            value = (value << 1) | u64::from(self.read_bit()?);
        }
        Ok(value)
    }

    pub fn read_bytes(&mut self, count: usize) -> Result<Vec<u8>, CodecError> {
        if self.remaining() < count.saturating_mul(8) {
            return Err(CodecError::TruncatedStream { bit: self.bytes.len() * 8 });
        }
        (0..count).map(|_| Ok(self.read_bits(8)? as u8)).collect()
    }

    /// True if every remaining bit is zero.
    pub fn rest_is_zero(&self) -> bool {
        (self.pos..self.bytes.len() * 8).all(|i| self.bytes[i / 8] & (0x80 >> (i % 8)) == 0)
    }
}
