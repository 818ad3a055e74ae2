//! Minimal binary Netpbm codecs for the formats the demonstration store
//! uses: P6 RGB (maxval 255), P5 8-bit gray (maxval 255), and P5 16-bit
//! big-endian gray (maxval 65535).
//!
//! Readers accept arbitrary header whitespace and `#` comments; writers
//! emit one canonical header form so that re-saving a loaded file is
//! byte-identical.

use std::io::{self, Read, Write};

#[derive(Debug)]
pub struct PnmHeader {
    pub magic: [u8; 2],
    pub width: u32,
    pub height: u32,
    pub maxval: u32,
}

fn bad(reason: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, reason.into())
}

/// Reads the magic, three header integers, and the single whitespace byte
/// that precedes the raster.
pub fn read_header(r: &mut impl Read) -> io::Result<PnmHeader> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)?;
    if magic[0] != b'P' {
        return Err(bad("not a Netpbm file"));
    }
    let mut fields = [0u32; 3];
    for field in &mut fields {
        *field = read_header_int(r)?;
    }
    Ok(PnmHeader { magic, width: fields[0], height: fields[1], maxval: fields[2] })
}

fn read_header_int(r: &mut impl Read) -> io::Result<u32> {
    let mut byte = [0u8; 1];
    // Skip whitespace and comments.
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b' ' | b'\t' | b'\r' | b'\n' => continue,
            b'#' => {
                while byte[0] != b'\n' {
                    r.read_exact(&mut byte)?;
                }
            }
            _ => break,
        }
    }
    if !byte[0].is_ascii_digit() {
        return Err(bad("malformed Netpbm header"));
    }
    let mut value: u64 = 0;
    while byte[0].is_ascii_digit() {
        value = value * 10 + (byte[0] - b'0') as u64;
        if value > u32::MAX as u64 {
            return Err(bad("Netpbm header value overflow"));
        }
        r.read_exact(&mut byte)?;
    }
    // The digit run must be terminated by exactly one whitespace byte.
    match byte[0] {
        b' ' | b'\t' | b'\r' | b'\n' => Ok(value as u32),
        _ => Err(bad("malformed Netpbm header")),
    }
}

fn read_raster(r: &mut impl Read, len: usize) -> io::Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// P6, maxval 255. Returns (width, height, interleaved RGB bytes).
pub fn read_ppm(r: &mut impl Read) -> io::Result<(u32, u32, Vec<u8>)> {
    let h = read_header(r)?;
    if &h.magic != b"P6" {
        return Err(bad(format!("expected P6, got {}", String::from_utf8_lossy(&h.magic))));
    }
    if h.maxval != 255 {
        return Err(bad(format!("P6 maxval must be 255, got {}", h.maxval)));
    }
    let data = read_raster(r, (h.width * h.height * 3) as usize)?;
    Ok((h.width, h.height, data))
}

pub fn write_ppm(w: &mut impl Write, width: u32, height: u32, data: &[u8]) -> io::Result<()> {
    debug_assert_eq!(data.len(), (width * height * 3) as usize);
    write!(w, "P6\n{} {}\n255\n", width, height)?;
    w.write_all(data)
}

/// P5, maxval 255.
pub fn read_pgm8(r: &mut impl Read) -> io::Result<(u32, u32, Vec<u8>)> {
    let h = read_header(r)?;
    if &h.magic != b"P5" {
        return Err(bad(format!("expected P5, got {}", String::from_utf8_lossy(&h.magic))));
    }
    if h.maxval != 255 {
        return Err(bad(format!("P5 8-bit maxval must be 255, got {}", h.maxval)));
    }
    let data = read_raster(r, (h.width * h.height) as usize)?;
    Ok((h.width, h.height, data))
}

pub fn write_pgm8(w: &mut impl Write, width: u32, height: u32, data: &[u8]) -> io::Result<()> {
    debug_assert_eq!(data.len(), (width * height) as usize);
    write!(w, "P5\n{} {}\n255\n", width, height)?;
    w.write_all(data)
}

/// P5, maxval 65535, big-endian 16-bit samples.
pub fn read_pgm16(r: &mut impl Read) -> io::Result<(u32, u32, Vec<u16>)> {
    let h = read_header(r)?;
    if &h.magic != b"P5" {
        return Err(bad(format!("expected P5, got {}", String::from_utf8_lossy(&h.magic))));
    }
    if h.maxval != 65535 {
        return Err(bad(format!("P5 16-bit maxval must be 65535, got {}", h.maxval)));
    }
    let raw = read_raster(r, (h.width * h.height * 2) as usize)?;
    let data = raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    Ok((h.width, h.height, data))
}

pub fn write_pgm16(w: &mut impl Write, width: u32, height: u32, data: &[u16]) -> io::Result<()> {
    debug_assert_eq!(data.len(), (width * height) as usize);
    write!(w, "P5\n{} {}\n65535\n", width, height)?;
    let mut raw = Vec::with_capacity(data.len() * 2);
    for &v in data {
        raw.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&raw)
}
