//! Elias-delta index coding and the `RDPC` container.
//!
//! Container layout, all integers big-endian:
//!
//! | bytes | field                         |
//! |-------|-------------------------------|
//! | 4     | magic `RDPC`                  |
//! | 1     | version, `1`                  |
//! | 8     | seed                          |
//! | 2     | block size `N`                |
//! | 4     | number of indices             |
//! | …     | Elias-delta codewords, MSB first, zero-padded to a byte |

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RDPC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 19;

/// Appends bits MSB-first into bytes.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bit: bool) {
        if self.bits.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.bits % 8);
        }
        self.bits += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    /// The bytes written so far, the last one zero-padded.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits MSB-first.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bytes.len() as u64 * 8 - self.pos
    }

    pub fn read(&mut self) -> Result<bool> {
        let byte = *self
            .bytes
            .get((self.pos / 8) as usize)
            .ok_or(Error::Truncated)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.read()?);
        }
        Ok(v)
    }
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Codeword length: `⌊log2 k⌋ + 2⌊log2(⌊log2 k⌋ + 1)⌋ + 1`.
pub fn codeword_len(k: u64) -> Result<u32> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let l = bit_length(k);
    Ok(l - 1 + 2 * (bit_length(u64::from(l)) - 1) + 1)
}

pub fn write_delta(w: &mut BitWriter, k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let l = bit_length(k);
    let ll = bit_length(u64::from(l));
    w.push_bits(0, ll - 1);
    w.push_bits(u64::from(l), ll);
    w.push_bits(k, l - 1);
    Ok(())
}

pub fn read_delta(r: &mut BitReader<'_>) -> Result<u64> {
    let mut zeros = 0u32;
    while !r.read()? {
        zeros += 1;
        if zeros > 64 {
            return Err(Error::Malformed("leading-zero run longer than 64".into()));
        }
    }
    let l = (1u64 << zeros) | r.read_bits(zeros)?;
    if l > 64 {
        return Err(Error::Malformed(format!(
            "codeword announces {l} value bits"
        )));
    }
    let l = l as u32;
    let rest = r.read_bits(l - 1)?;
    Ok(if l == 1 { 1 } else { (1u64 << (l - 1)) | rest })
}

/// The codeword for `k` as a bit vector.
pub fn elias_delta_encode(k: u64) -> Result<Vec<bool>> {
    let mut w = BitWriter::new();
    write_delta(&mut w, k)?;
    let n = w.bit_len();
    let bytes = w.into_bytes();
    let mut r = BitReader::new(&bytes);
    (0..n).map(|_| r.read()).collect()
}

/// Decodes one codeword from the front of `bits`; returns the value and the
/// number of bits consumed.
pub fn elias_delta_decode(bits: &[bool]) -> Result<(u64, usize)> {
    let mut w = BitWriter::new();
    for &b in bits {
        w.push(b);
    }
    let bytes = w.into_bytes();
    let mut r = BitReader::new(&bytes);
    // Padding bits introduced by packing must not be read as code bits.
    let k = read_delta(&mut r)?;
    let used = r.position() as usize;
    if used > bits.len() {
        return Err(Error::Truncated);
    }
    Ok((k, used))
}

/// Decoded contents of a container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamContents {
    pub seed: u64,
    pub block_size: u16,
    pub indices: Vec<u64>,
}

/// Payload bits before padding.
pub fn payload_bits(indices: &[u64]) -> Result<u64> {
    indices
        .iter()
        .map(|&k| codeword_len(k).map(u64::from))
        .sum()
}

pub fn write_stream(indices: &[u64], seed: u64, block_size: u16) -> Result<Vec<u8>> {
    let count = u32::try_from(indices.len())
        .map_err(|_| Error::TooLarge(format!("{} indices in one stream", indices.len())))?;
    let mut w = BitWriter::new();
    for &k in indices {
        write_delta(&mut w, k)?;
    }
    let mut out = Vec::with_capacity(HEADER_LEN + w.bit_len().div_ceil(8) as usize);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&seed.to_be_bytes());
    out.extend_from_slice(&block_size.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    out.extend_from_slice(&w.into_bytes());
    Ok(out)
}

pub fn read_stream(bytes: &[u8]) -> Result<StreamContents> {
    if bytes.len() < 5 {
        return Err(Error::Truncated);
    }
    if bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated);
    }
    let seed = u64::from_be_bytes(bytes[5..13].try_into().unwrap());
    let block_size = u16::from_be_bytes(bytes[13..15].try_into().unwrap());
    let count = u32::from_be_bytes(bytes[15..19].try_into().unwrap());
    let mut r = BitReader::new(&bytes[HEADER_LEN..]);
    let indices = (0..count)
        .map(|_| read_delta(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let rest = r.remaining();
    if rest >= 8 {
        return Err(Error::Malformed(format!("{} trailing bytes", rest / 8)));
    }
    if r.read_bits(rest as u32)? != 0 {
        return Err(Error::Malformed("non-zero padding".into()));
    }
    Ok(StreamContents {
        seed,
        block_size,
        indices,
    })
}
