//! Binary and text stream formats shared with the hardware side:
//! time tags (8-byte little-endian ticks, headerless), symbol streams
//! (one byte per symbol, or four symbols packed per byte), and packed bit
//! streams. All writes go through a temp file plus rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{Symbol, ALPHABET};
use crate::source::TimeTagStream;

/// Writes via a temp file in the same directory and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = format!(
        ".{}.tmp{}",
        path.file_name().unwrap_or_default().to_string_lossy(),
        std::process::id()
    );
    let tmp = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(d) => d.join(name),
        None => std::path::PathBuf::from(name),
    };
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_tags_bin(path: &Path, stream: &TimeTagStream) -> Result<()> {
    let mut bytes = Vec::with_capacity(stream.len() * 8);
    for &t in stream.ticks() {
        bytes.extend_from_slice(&t.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

pub fn read_tags_bin(path: &Path) -> Result<TimeTagStream> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            what: "time-tag file",
            offset: (bytes.len() - bytes.len() % 8) as u64,
            detail: format!("{} trailing bytes, tags are 8 bytes each", bytes.len() % 8),
        });
    }
    let mut ticks = Vec::with_capacity(bytes.len() / 8);
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let t = u64::from_le_bytes(chunk.try_into().unwrap());
        if let Some(&prev) = ticks.last() {
            if t <= prev {
                return Err(Error::Format {
                    what: "time-tag file",
                    offset: (i * 8) as u64,
                    detail: format!("tag {t} not above its predecessor {prev}"),
                });
            }
        }
        ticks.push(t);
    }
    TimeTagStream::from_ticks(ticks)
}

pub fn write_tags_text(path: &Path, stream: &TimeTagStream) -> Result<()> {
    let mut s = String::new();
    for &t in stream.ticks() {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// One byte per symbol, values 0..4.
pub fn write_symbols(path: &Path, symbols: &[Symbol]) -> Result<()> {
    let bytes: Vec<u8> = symbols.iter().map(|s| s.value()).collect();
    write_atomic(path, &bytes)
}

pub fn read_symbols(path: &Path) -> Result<Vec<Symbol>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            Symbol::new(b).map_err(|_| Error::Format {
                what: "symbol file",
                offset: i as u64,
                detail: format!("byte {b:#04x} is not a symbol below {ALPHABET}"),
            })
        })
        .collect()
}

/// Four symbols per byte, first symbol in the two most significant bits;
/// a final partial byte is zero-padded.
pub fn write_symbols_packed(path: &Path, symbols: &[Symbol]) -> Result<()> {
    let mut bytes = Vec::with_capacity(symbols.len().div_ceil(4));
    for chunk in symbols.chunks(4) {
        let mut b = 0u8;
        for (i, s) in chunk.iter().enumerate() {
            b |= s.value() << (6 - 2 * i);
        }
        bytes.push(b);
    }
    write_atomic(path, &bytes)
}

/// Packed bit stream as produced by extraction; the exact bit count travels
/// in the metadata sidecar, the file holds whole bytes.
pub fn write_bits(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes)
}

pub fn read_bits(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
