//! Bounds-checked big-endian reader over one table's bytes.

use super::{FontError, Tag};

#[derive(Clone, Copy)]
pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    tag: Tag,
    /// Offset of `data[0]` within the font file, for error reporting.
    base: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], tag: Tag, base: usize) -> Self {
        Reader { data, pos: 0, tag, base }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn malformed(&self, offset: usize, reason: impl Into<String>) -> FontError {
        FontError::Malformed {
            table: self.tag,
            offset: self.base + offset,
            reason: reason.into(),
        }
    }

    /// A reader positioned at `offset`, sharing the same backing bytes.
    pub fn at(&self, offset: usize) -> Result<Reader<'a>, FontError> {
        if offset > self.data.len() {
            return Err(self.malformed(offset, "offset past end of table"));
        }
        Ok(Reader { pos: offset, ..*self })
    }

    /// A reader over `data[offset..offset + len]`.
    pub fn sub(&self, offset: usize, len: usize) -> Result<Reader<'a>, FontError> {
        let end = offset
            .checked_add(len)
            .ok_or_else(|| self.malformed(offset, "length overflow"))?;
        if end > self.data.len() {
            return Err(self.malformed(offset, format!("range of {len} bytes past end of table")));
        }
        Ok(Reader {
            data: &self.data[offset..end],
            pos: 0,
            tag: self.tag,
            base: self.base + offset,
        })
    }

    pub fn skip(&mut self, n: usize) -> Result<(), FontError> {
        self.bytes(n).map(|_| ())
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], FontError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.malformed(self.pos, "unexpected end of data"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, FontError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn i8(&mut self) -> Result<i8, FontError> {
        Ok(self.u8()? as i8)
    }

    pub fn u16(&mut self) -> Result<u16, FontError> {
        let b = self.bytes(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub fn i16(&mut self) -> Result<i16, FontError> {
        Ok(self.u16()? as i16)
    }

    pub fn u32(&mut self) -> Result<u32, FontError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn i32(&mut self) -> Result<i32, FontError> {
        Ok(self.u32()? as i32)
    }

    /// 16.16 fixed point.
    pub fn fixed(&mut self) -> Result<f64, FontError> {
        Ok(self.i32()? as f64 / 65536.0)
    }

    /// 2.14 fixed point.
    pub fn f2dot14(&mut self) -> Result<f64, FontError> {
        Ok(self.i16()? as f64 / 16384.0)
    }

    pub fn tag4(&mut self) -> Result<Tag, FontError> {
        let b = self.bytes(4)?;
        Ok(Tag([b[0], b[1], b[2], b[3]]))
    }
}
