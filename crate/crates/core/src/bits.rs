//! Variable-length bit strings and MSB-first bit packing.

use std::fmt;

/// A bit string of up to 127 bits, stored as an integer with MSB-first
/// semantics: `bit(0)` is the most significant of the `len` bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    value: u128,
    len: u32,
}

impl BitString {
    pub const EMPTY: BitString = BitString { value: 0, len: 0 };

    /// Panics if `len > 127` or `value` does not fit in `len` bits.
    pub fn new(value: u128, len: u32) -> BitString {
        assert!(len <= 127, "bit string too long: {len}");
        assert!(
            value >> len == 0,
            "value {value:#x} does not fit in {len} bits"
        );
        BitString { value, len }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The bits interpreted as an unsigned integer, MSB first.
    pub fn value(&self) -> u128 {
        self.value
    }

    /// Bit at position `i`, counting from the most significant end.
    pub fn bit(&self, i: u32) -> u8 {
        assert!(
            i < self.len,
            "bit index {i} out of range (len {})",
            self.len
        );
        ((self.value >> (self.len - 1 - i)) & 1) as u8
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    /// Parses a string of `0`/`1` characters; test and display helper.
    pub fn parse(s: &str) -> BitString {
        let mut value = 0u128;
        for c in s.chars() {
            match c {
                '0' => value <<= 1,
                '1' => value = (value << 1) | 1,
                _ => panic!("invalid bit character {c:?}"),
            }
        }
        BitString::new(value, s.len() as u32)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

/// Accumulates bits MSB-first into bytes. The final partial byte is
/// zero-padded on flush; the exact bit count is reported alongside.
#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u32,
    used: u32,
    bit_count: u64,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    pub fn write_bit(&mut self, bit: u8) {
        self.acc = (self.acc << 1) | (bit & 1) as u32;
        self.used += 1;
        self.bit_count += 1;
        if self.used == 8 {
            self.bytes.push(self.acc as u8);
            self.acc = 0;
            self.used = 0;
        }
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u128, n: u32) {
        debug_assert!(n == 128 || value >> n == 0);
        let mut remaining = n;
        while remaining > 0 {
            let take = (8 - self.used).min(remaining);
            let chunk = ((value >> (remaining - take)) & ((1u128 << take) - 1)) as u32;
            self.acc = (self.acc << take) | chunk;
            self.used += take;
            self.bit_count += take as u64;
            remaining -= take;
            if self.used == 8 {
                self.bytes.push(self.acc as u8);
                self.acc = 0;
                self.used = 0;
            }
        }
    }

    pub fn append(&mut self, bits: &BitString) {
        self.write_bits(bits.value(), bits.len());
    }

    pub fn bit_count(&self) -> u64 {
        self.bit_count
    }

    /// Flushes the partial byte (zero-padded) and returns the packed bytes
    /// together with the exact number of bits written.
    pub fn finish(mut self) -> (Vec<u8>, u64) {
        if self.used > 0 {
            self.bytes.push((self.acc << (8 - self.used)) as u8);
        }
        (self.bytes, self.bit_count)
    }
}

/// Reads bits MSB-first from packed bytes.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    bit_count: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_count: u64) -> BitReader<'a> {
        assert!(bit_count <= bytes.len() as u64 * 8);
        BitReader {
            bytes,
            pos: 0,
            bit_count,
        }
    }

    pub fn read_bit(&mut self) -> Option<u8> {
        if self.pos >= self.bit_count {
            return None;
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Some(bit)
    }
}

/// Unpacks `bit_count` bits (MSB-first within each byte) into one byte per bit.
pub fn unpack_bits(bytes: &[u8], bit_count: u64) -> Vec<u8> {
    let mut reader = BitReader::new(bytes, bit_count);
    let mut out = Vec::with_capacity(bit_count as usize);
    while let Some(b) = reader.read_bit() {
        out.push(b);
    }
    out
}
