//! Shared binary container: little-endian, `TIDS` magic, one version byte,
//! one kind byte. Every serialized artifact in the crate uses this header.
//!
//! Kinds: 0 = prepared dataset, 1 = float MLP, 2 = quantized MLP,
//! 3 = random forest.

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TIDS";
pub const VERSION: u8 = 1;

pub const KIND_DATASET: u8 = 0;
pub const KIND_FLOAT_MLP: u8 = 1;
pub const KIND_QUANT_MLP: u8 = 2;
pub const KIND_FOREST: u8 = 3;

/// Append-only little-endian writer.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn with_header(kind: u8) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.bytes(&MAGIC);
        w.u8(VERSION);
        w.u8(kind);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn i8(&mut self, v: i8) {
        self.buf.push(v as u8);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// u16 length prefix + UTF-8 bytes.
    pub fn str(&mut self, s: &str) {
        debug_assert!(s.len() <= u16::MAX as usize);
        self.u16(s.len() as u16);
        self.bytes(s.as_bytes());
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor-based reader; every error carries the byte offset it occurred at.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Checks magic and version, returns the kind byte.
    pub fn header(&mut self) -> Result<u8> {
        let magic = self.take(4)?;
        if magic != MAGIC {
            return Err(Error::format_at(0, "bad magic (expected TIDS)"));
        }
        let version = self.u8()?;
        if version != VERSION {
            return Err(Error::format_at(
                4,
                format!("unsupported version {version} (expected {VERSION})"),
            ));
        }
        self.u8()
    }

    /// Like [`Reader::header`] but also requires a specific kind.
    pub fn header_expect(&mut self, kind: u8) -> Result<()> {
        let got = self.header()?;
        if got != kind {
            return Err(Error::format_at(
                5,
                format!("wrong artifact kind {got} (expected {kind})"),
            ));
        }
        Ok(())
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format_at(
                self.pos,
                format!(
                    "truncated: need {n} more byte(s), only {} left of {}",
                    self.remaining(),
                    self.buf.len()
                ),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn i8(&mut self) -> Result<i8> {
        Ok(self.take(1)?[0] as i8)
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn byte_slice(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let at = self.pos;
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::format_at(at, "invalid UTF-8 in string"))
    }

    /// Fails unless the whole buffer was consumed.
    pub fn expect_end(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::format_at(
                self.pos,
                format!("{} trailing byte(s) after payload", self.remaining()),
            ));
        }
        Ok(())
    }
}

/// Label-name table: u8 count, then length-prefixed UTF-8 names.
pub fn write_label_table(w: &mut Writer, names: &[String]) {
    debug_assert!(names.len() <= u8::MAX as usize);
    w.u8(names.len() as u8);
    for name in names {
        w.str(name);
    }
}

pub fn read_label_table(r: &mut Reader) -> Result<Vec<String>> {
    let count = r.u8()? as usize;
    let mut names = Vec::with_capacity(count);
    for _ in 0..count {
        names.push(r.str()?);
    }
    Ok(names)
}

/// Scaler block at full f64 width: u16 column count, means, then stds.
/// Used by the float-precision artifacts (float MLP, forest).
pub fn write_scaler_f64(w: &mut Writer, scaler: &crate::dataset::ScalerParams) {
    w.u16(scaler.mean.len() as u16);
    for &m in &scaler.mean {
        w.f64(m);
    }
    for &s in &scaler.std {
        w.f64(s);
    }
}

pub fn read_scaler_f64(r: &mut Reader) -> Result<crate::dataset::ScalerParams> {
    let n = r.u16()? as usize;
    let mut mean = Vec::with_capacity(n);
    for _ in 0..n {
        mean.push(r.f64()?);
    }
    let mut std = Vec::with_capacity(n);
    for _ in 0..n {
        std.push(r.f64()?);
    }
    Ok(crate::dataset::ScalerParams { mean, std })
}

/// Scaler block at f32 width, used by the size-optimized quantized model
/// where every float is 32-bit.
pub fn write_scaler_f32(w: &mut Writer, scaler: &crate::dataset::ScalerParams) {
    w.u16(scaler.mean.len() as u16);
    for &m in &scaler.mean {
        w.f32(m as f32);
    }
    for &s in &scaler.std {
        w.f32(s as f32);
    }
}

pub fn read_scaler_f32(r: &mut Reader) -> Result<crate::dataset::ScalerParams> {
    let n = r.u16()? as usize;
    let mut mean = Vec::with_capacity(n);
    for _ in 0..n {
        mean.push(r.f32()? as f64);
    }
    let mut std = Vec::with_capacity(n);
    for _ in 0..n {
        std.push(r.f32()? as f64);
    }
    Ok(crate::dataset::ScalerParams { mean, std })
}

/// 64-bit FNV-1a, used for model-file digests exchanged over the wire.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_scalars() {
        let mut w = Writer::with_header(KIND_DATASET);
        w.u16(513);
        w.u32(70000);
        w.f32(-2.5);
        w.str("hello");
        let bytes = w.finish();

        let mut r = Reader::new(&bytes);
        r.header_expect(KIND_DATASET).unwrap();
        assert_eq!(r.u16().unwrap(), 513);
        assert_eq!(r.u32().unwrap(), 70000);
        assert_eq!(r.f32().unwrap(), -2.5);
        assert_eq!(r.str().unwrap(), "hello");
        r.expect_end().unwrap();
    }

    #[test]
    fn bad_magic_rejected() {
        let err = Reader::new(b"XIDS\x01\x00").header().unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
    }

    #[test]
    fn truncation_reports_offset_and_lengths() {
        let mut w = Writer::with_header(KIND_FLOAT_MLP);
        w.u32(1);
        let mut bytes = w.finish();
        bytes.truncate(8);
        let mut r = Reader::new(&bytes);
        r.header_expect(KIND_FLOAT_MLP).unwrap();
        let err = r.u32().unwrap_err();
        match err {
            Error::Format { offset, detail } => {
                assert_eq!(offset, 6);
                assert!(detail.contains("need 4"), "{detail}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn fnv_vector() {
        // Reference value for the empty input is the offset basis.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        // Known vector: fnv1a64("a") = 0xaf63dc4c8601ec8c.
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
