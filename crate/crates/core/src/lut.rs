//! The precomputed extraction table for the device configuration (4-letter
//! alphabet, 10-symbol words): 2^20 entries of 2 bytes, addressed by the
//! word's symbols packed MSB-first. Table-driven extraction replaces the
//! per-word ranking arithmetic with one memory lookup per word.

use crate::bits::{BitString, BitWriter};
use crate::elias::{extract_word, Word};
use crate::error::{Error, Result};
use crate::files::write_atomic;
use crate::pipeline::Symbol;
use std::path::Path;

/// Device word length N.
pub const WORD_LEN: usize = 10;
/// Device alphabet size M.
pub const TABLE_ALPHABET: u8 = 4;
pub const TABLE_ENTRIES: usize = 1 << 20;
pub const TABLE_PAYLOAD_BYTES: usize = TABLE_ENTRIES * 2;
/// Longest possible output: the largest permutation count over all word
/// patterns is 25200 < 2^15, whose top block emits 14 bits.
pub const MAX_OUTPUT_BITS: u32 = 14;

pub const TABLE_MAGIC: [u8; 8] = *b"QRNGLUT1";
pub const TABLE_VERSION: u8 = 1;
/// Identifies the rank-to-bits and entry-coding conventions baked into the
/// entries (power-of-two blocks largest first, offsets MSB-first,
/// length-prefix bit coding).
pub const TABLE_CODING_ID: u8 = 1;
pub const TABLE_HEADER_BYTES: usize = 16;

/// One coded table entry: the output bits left-padded with a single 1 bit,
/// so `coded = (1 << k) | bits` for a k-bit output. Always in `1..2^15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableEntry(u16);

impl TableEntry {
    pub fn from_raw(coded: u16) -> Result<TableEntry> {
        if coded == 0 {
            return Err(Error::CorruptTable("zero entry".into()));
        }
        if coded >= 1 << 15 {
            return Err(Error::CorruptTable(format!(
                "entry {coded:#06x} exceeds the {MAX_OUTPUT_BITS}-bit output bound"
            )));
        }
        Ok(TableEntry(coded))
    }

    pub fn raw(self) -> u16 {
        self.0
    }
}

/// Codes an output bit string into the 16-bit entry format.
pub fn encode_entry(bits: &BitString) -> Result<TableEntry> {
    if bits.len() > MAX_OUTPUT_BITS {
        return Err(Error::Capacity {
            got: bits.len(),
            max: MAX_OUTPUT_BITS,
        });
    }
    Ok(TableEntry((1u16 << bits.len()) | bits.value() as u16))
}

/// Inverse of [`encode_entry`]: the position of the highest set bit is the
/// output length, the bits below it are the output.
pub fn decode_entry(entry: TableEntry) -> BitString {
    let coded = entry.raw();
    let k = 15 - coded.leading_zeros();
    BitString::new((coded & !(1 << k)) as u128, k)
}

/// Packs ten symbols into a 20-bit address, first symbol in the two most
/// significant bits.
pub fn address_of(word: &[Symbol]) -> u32 {
    assert_eq!(word.len(), WORD_LEN, "table words have {WORD_LEN} symbols");
    word.iter()
        .fold(0u32, |acc, s| (acc << 2) | s.value() as u32)
}

/// Symbols of the word at a table address; inverse of [`address_of`].
pub fn word_of(address: u32) -> [u8; WORD_LEN] {
    assert!(address < TABLE_ENTRIES as u32);
    let mut symbols = [0u8; WORD_LEN];
    for (i, s) in symbols.iter_mut().enumerate() {
        *s = ((address >> (2 * (WORD_LEN - 1 - i))) & 3) as u8;
    }
    symbols
}

/// The full extraction table. Immutable once built; concurrent readers are
/// safe.
pub struct ExtractionTable {
    entries: Vec<u16>,
}

impl ExtractionTable {
    /// Computes every entry from the extractor; deterministic and
    /// bit-identical across runs.
    pub fn build() -> ExtractionTable {
        let entries = (0..TABLE_ENTRIES as u32)
            .map(|address| {
                let word = Word::new(word_of(address).to_vec(), TABLE_ALPHABET)
                    .expect("table words are valid by construction");
                encode_entry(&extract_word(&word))
                    .expect("device outputs fit 14 bits")
                    .raw()
            })
            .collect();
        ExtractionTable { entries }
    }

    pub fn entry(&self, address: u32) -> TableEntry {
        TableEntry(self.entries[address as usize])
    }

    /// Decoded output bits for the word at `address`.
    pub fn decode(&self, address: u32) -> BitString {
        decode_entry(self.entry(address))
    }

    /// Raw little-endian payload, exactly [`TABLE_PAYLOAD_BYTES`] long —
    /// the image a memory chip would hold.
    pub fn payload(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(TABLE_PAYLOAD_BYTES);
        for &e in &self.entries {
            bytes.extend_from_slice(&e.to_le_bytes());
        }
        bytes
    }

    /// Writes header plus payload atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(TABLE_HEADER_BYTES + TABLE_PAYLOAD_BYTES);
        bytes.extend_from_slice(&TABLE_MAGIC);
        bytes.push(TABLE_VERSION);
        bytes.push(TABLE_ALPHABET);
        bytes.push(WORD_LEN as u8);
        bytes.push(TABLE_CODING_ID);
        bytes.extend_from_slice(&[0u8; 4]);
        bytes.extend_from_slice(&self.payload());
        write_atomic(path, &bytes)
    }

    /// Headerless payload for hardware parity.
    pub fn write_raw(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.payload())
    }

    pub fn read(path: &Path) -> Result<ExtractionTable> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != TABLE_HEADER_BYTES + TABLE_PAYLOAD_BYTES {
            return Err(Error::CorruptTable(format!(
                "file is {} bytes, expected {}",
                bytes.len(),
                TABLE_HEADER_BYTES + TABLE_PAYLOAD_BYTES
            )));
        }
        if bytes[..8] != TABLE_MAGIC {
            return Err(Error::CorruptTable("bad magic".into()));
        }
        if bytes[8] != TABLE_VERSION {
            return Err(Error::CorruptTable(format!(
                "unsupported version {}",
                bytes[8]
            )));
        }
        if bytes[9] != TABLE_ALPHABET || bytes[10] != WORD_LEN as u8 {
            return Err(Error::Config(format!(
                "table is for M = {}, N = {}; this build expects M = {TABLE_ALPHABET}, N = {WORD_LEN}",
                bytes[9], bytes[10]
            )));
        }
        if bytes[11] != TABLE_CODING_ID {
            return Err(Error::Config(format!(
                "unknown coding convention {}",
                bytes[11]
            )));
        }
        let mut entries = Vec::with_capacity(TABLE_ENTRIES);
        for (i, pair) in bytes[TABLE_HEADER_BYTES..].chunks_exact(2).enumerate() {
            let coded = u16::from_le_bytes([pair[0], pair[1]]);
            TableEntry::from_raw(coded).map_err(|_| {
                Error::CorruptTable(format!("invalid entry {coded:#06x} at address {i:#07x}"))
            })?;
            entries.push(coded);
        }
        Ok(ExtractionTable { entries })
    }
}

/// Packed output bits plus the exact bit count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedBits {
    pub bytes: Vec<u8>,
    pub bit_count: u64,
}

/// Table-driven streaming extraction: consumes the symbols in consecutive
/// non-overlapping 10-symbol words, appending each word's decoded bits
/// MSB-first; fewer than 10 leftover symbols come back as the residue.
pub fn extract_stream<'a>(
    symbols: &'a [Symbol],
    table: &ExtractionTable,
) -> (ExtractedBits, &'a [Symbol]) {
    let mut writer = BitWriter::new();
    let whole = symbols.len() / WORD_LEN * WORD_LEN;
    for word in symbols[..whole].chunks_exact(WORD_LEN) {
        let entry = table.entry(address_of(word));
        let coded = entry.raw();
        let k = 15 - coded.leading_zeros();
        writer.write_bits((coded & !(1 << k)) as u128, k);
    }
    let (bytes, bit_count) = writer.finish();
    (ExtractedBits { bytes, bit_count }, &symbols[whole..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::unpack_bits;
    use crate::elias::{perm_count, PatternClass};
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn symbols_of(values: &[u8]) -> Vec<Symbol> {
        values.iter().map(|&v| Symbol::new(v).unwrap()).collect()
    }

    fn shared_table() -> &'static ExtractionTable {
        use std::sync::OnceLock;
        static TABLE: OnceLock<ExtractionTable> = OnceLock::new();
        TABLE.get_or_init(ExtractionTable::build)
    }

    #[test]
    fn address_packing() {
        assert_eq!(address_of(&symbols_of(&[0; 10])), 0);
        assert_eq!(address_of(&symbols_of(&[3; 10])), 0xFFFFF);
        assert_eq!(address_of(&symbols_of(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 1])), 1);
        assert_eq!(word_of(1), [0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        for address in [0u32, 1, 0xFFFFF, 0x2468A, 0x13579] {
            assert_eq!(address_of(&symbols_of(&word_of(address))), address);
        }
    }

    #[test]
    fn entry_coding_examples() {
        let code = |s: &str| encode_entry(&BitString::parse(s)).unwrap().raw();
        assert_eq!(code(""), 0x0001);
        assert_eq!(code("01"), 0x0005);
        assert_eq!(encode_entry(&BitString::new(0, 14)).unwrap().raw(), 0x4000);

        assert_eq!(
            decode_entry(TableEntry::from_raw(0x0001).unwrap()),
            BitString::EMPTY
        );
        assert_eq!(
            decode_entry(TableEntry::from_raw(0x0005).unwrap()),
            BitString::parse("01")
        );
        assert_eq!(
            decode_entry(TableEntry::from_raw(0x4000).unwrap()),
            BitString::new(0, 14)
        );

        assert!(TableEntry::from_raw(0).is_err());
        assert!(matches!(
            encode_entry(&BitString::new(0, 15)),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn entry_roundtrip_all_lengths() {
        for k in 0..=MAX_OUTPUT_BITS {
            for value in [0u128, 1, (1 << k) - 1, (1 << k) / 2] {
                let value = value & ((1 << k) - 1);
                let bits = BitString::new(value, k);
                let entry = encode_entry(&bits).unwrap();
                assert!(entry.raw() >= 1 && entry.raw() < 1 << 15);
                assert_eq!(decode_entry(entry), bits);
            }
        }
    }

    #[test]
    fn table_spot_values_and_domain() {
        let table = shared_table();
        assert_eq!(table.entry(0).raw(), 0x0001); // constant word, empty output
        let mut max_len = 0;
        for a in 0..TABLE_ENTRIES as u32 {
            let e = table.entry(a).raw();
            assert!((1..1 << 15).contains(&e), "entry {e:#x} at {a:#x}");
            max_len = max_len.max(decode_entry(TableEntry(e)).len());
        }
        assert_eq!(max_len, MAX_OUTPUT_BITS);
    }

    #[test]
    fn table_matches_direct_extraction_on_random_addresses() {
        let table = shared_table();
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        for _ in 0..100_000 {
            let address = (rng.next_u64() & 0xFFFFF) as u32;
            let word = Word::new(word_of(address).to_vec(), TABLE_ALPHABET).unwrap();
            assert_eq!(
                table.decode(address),
                extract_word(&word),
                "address {address:#x}"
            );
        }
    }

    /// Whole permutation classes: for 100 randomly chosen words, every
    /// member of the word's class (enumerated by rank) decodes to the block
    /// assignment of its rank.
    #[test]
    fn table_matches_rank_assignment_on_whole_classes() {
        use crate::elias::{elias_assign, unrank};
        let table = shared_table();
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..100 {
            let address = (rng.next_u64() & 0xFFFFF) as u32;
            let mut counts = [0u32; TABLE_ALPHABET as usize];
            for &s in &word_of(address) {
                counts[s as usize] += 1;
            }
            let word = Word::new(word_of(address).to_vec(), TABLE_ALPHABET).unwrap();
            let p = perm_count(&word);
            for r in 0..p {
                let member = unrank(&counts, r);
                let member_symbols: Vec<Symbol> = member
                    .symbols()
                    .iter()
                    .map(|&s| Symbol::new(s).unwrap())
                    .collect();
                let a = address_of(&member_symbols);
                assert_eq!(
                    table.decode(a),
                    elias_assign(p, r),
                    "class {counts:?} rank {r}"
                );
            }
        }
    }

    /// Every member of a worst-case class lands in the block structure of
    /// P = 25200 = 2^14 + 2^13 + 2^9 + 2^6 + 2^5 + 2^4.
    #[test]
    fn worst_case_class_block_tally() {
        let table = shared_table();
        let class = PatternClass::new(vec![3, 3, 2, 2]).unwrap();
        let p = class.perm_count();
        assert_eq!(p, 25_200);

        // one concrete letter assignment: counts (3, 3, 2, 2) for letters 0..3
        let base = Word::new(vec![0, 0, 0, 1, 1, 1, 2, 2, 3, 3], TABLE_ALPHABET).unwrap();
        assert_eq!(perm_count(&base), p);
        let mut by_len: HashMap<u32, u64> = HashMap::new();
        for address in 0..TABLE_ENTRIES as u32 {
            let word = word_of(address);
            let mut counts = [0u32; 4];
            for &s in &word {
                counts[s as usize] += 1;
            }
            if counts == [3, 3, 2, 2] {
                *by_len.entry(table.decode(address).len()).or_insert(0) += 1;
            }
        }
        let expected: HashMap<u32, u64> = [
            (14, 16_384),
            (13, 8_192),
            (9, 512),
            (6, 64),
            (5, 32),
            (4, 16),
        ]
        .into_iter()
        .collect();
        assert_eq!(by_len, expected);
        assert!(by_len.values().sum::<u64>() == 25_200);
    }

    #[test]
    fn stream_extraction_matches_per_word_oracle() {
        let table = shared_table();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let symbols: Vec<Symbol> = (0..1_000_000)
            .map(|_| Symbol::new((rng.next_u64() & 3) as u8).unwrap())
            .collect();

        let (bits, residue) = extract_stream(&symbols, table);
        assert!(residue.is_empty());

        let mut oracle = BitWriter::new();
        for chunk in symbols.chunks_exact(WORD_LEN) {
            let word =
                Word::new(chunk.iter().map(|s| s.value()).collect(), TABLE_ALPHABET).unwrap();
            oracle.append(&extract_word(&word));
        }
        let (oracle_bytes, oracle_count) = oracle.finish();
        assert_eq!(bits.bit_count, oracle_count);
        assert_eq!(bits.bytes, oracle_bytes);
    }

    #[test]
    fn stream_extraction_block_arithmetic() {
        let table = shared_table();
        let constant = symbols_of(&[2; 10]);
        let (bits, residue) = extract_stream(&constant, table);
        assert_eq!(bits.bit_count, 0);
        assert!(residue.is_empty());

        let symbols = symbols_of(&(0..25).map(|i| (i % 4) as u8).collect::<Vec<_>>());
        let (_, residue) = extract_stream(&symbols, table);
        assert_eq!(residue.len(), 5);

        let (empty_bits, empty_residue) = extract_stream(&[], table);
        assert_eq!(empty_bits.bit_count, 0);
        assert!(empty_residue.is_empty());
    }

    /// Mean decoded bits per word over the full table equals the analytic
    /// bits/symbol times the word length, as exact rationals.
    #[test]
    fn output_rate_identity() {
        use crate::analysis::{efficiency, SymbolDist};
        use num_bigint::BigInt;
        use num_rational::BigRational;

        let table = shared_table();
        let total_bits: u64 = (0..TABLE_ENTRIES as u32)
            .map(|a| table.decode(a).len() as u64)
            .sum();
        let mean_bits_per_word =
            BigRational::new(BigInt::from(total_bits), BigInt::from(TABLE_ENTRIES as u64));
        let point = efficiency(4, WORD_LEN as u32, &SymbolDist::Uniform).unwrap();
        let expected = point.exact * BigRational::from(BigInt::from(WORD_LEN as u64));
        assert_eq!(mean_bits_per_word, expected);
    }

    #[test]
    fn file_roundtrip_and_corruption() {
        let table = shared_table();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.lut");

        table.write(&path).unwrap();
        let meta = std::fs::metadata(&path).unwrap();
        assert_eq!(
            meta.len(),
            (TABLE_HEADER_BYTES + TABLE_PAYLOAD_BYTES) as u64
        );
        let reread = ExtractionTable::read(&path).unwrap();
        assert_eq!(reread.entries, table.entries);

        // truncated file
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(
            ExtractionTable::read(&path),
            Err(Error::CorruptTable(_))
        ));

        // header M mismatch
        let mut tampered = bytes.clone();
        tampered[9] = 8;
        std::fs::write(&path, &tampered).unwrap();
        assert!(matches!(
            ExtractionTable::read(&path),
            Err(Error::Config(_))
        ));

        // zeroed entry
        let mut zeroed = bytes.clone();
        zeroed[TABLE_HEADER_BYTES] = 0;
        zeroed[TABLE_HEADER_BYTES + 1] = 0;
        std::fs::write(&path, &zeroed).unwrap();
        assert!(matches!(
            ExtractionTable::read(&path),
            Err(Error::CorruptTable(_))
        ));
    }

    #[test]
    fn extracted_bits_unpack_to_word_outputs() {
        let table = shared_table();
        let symbols = symbols_of(&[0, 1, 2, 3, 3, 2, 1, 0, 1, 2]);
        let (bits, _) = extract_stream(&symbols, table);
        let word = Word::new(symbols.iter().map(|s| s.value()).collect(), 4).unwrap();
        let expected = extract_word(&word);
        assert_eq!(bits.bit_count, expected.len() as u64);
        let unpacked = unpack_bits(&bits.bytes, bits.bit_count);
        let expected_bits: Vec<u8> = expected.iter().collect();
        assert_eq!(unpacked, expected_bits);
    }
}
