//! Little-endian primitives shared by the binary file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub struct Encoder<W: Write> {
    out: W,
}

impl<W: Write> Encoder<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.out
            .write_all(bytes)
            .map_err(|e| Error::io("writing binary file", e))
    }

    pub fn magic(&mut self, magic: &[u8]) -> Result<()> {
        self.put(magic)
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.put(&[v])
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn usize(&mut self, v: usize) -> Result<()> {
        self.u64(v as u64)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.put(&v.to_le_bytes())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.put(s.as_bytes())
    }

    pub fn opt_str(&mut self, s: Option<&str>) -> Result<()> {
        match s {
            Some(s) => {
                self.u8(1)?;
                self.str(s)
            }
            None => self.u8(0),
        }
    }

    pub fn f64s(&mut self, values: &[f64]) -> Result<()> {
        self.usize(values.len())?;
        for &v in values {
            self.f64(v)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out
            .flush()
            .map_err(|e| Error::io("writing binary file", e))?;
        Ok(self.out)
    }
}

pub struct Decoder<R: Read> {
    input: R,
    format: &'static str,
}

impl<R: Read> Decoder<R> {
    pub fn new(input: R, format: &'static str) -> Self {
        Self { input, format }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.input
            .read_exact(&mut buf)
            .map_err(|e| Error::format(self.format, format!("truncated input ({e})")))?;
        Ok(buf)
    }

    pub fn expect_magic(&mut self, magic: &[u8]) -> Result<()> {
        let mut buf = vec![0u8; magic.len()];
        self.input
            .read_exact(&mut buf)
            .map_err(|_| Error::format(self.format, "missing magic bytes"))?;
        if buf != magic {
            return Err(Error::format(self.format, "wrong magic bytes"));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::format(self.format, "length overflow"))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.input
            .read_exact(&mut buf)
            .map_err(|_| Error::format(self.format, "truncated string"))?;
        String::from_utf8(buf).map_err(|_| Error::format(self.format, "string is not UTF-8"))
    }

    pub fn opt_str(&mut self) -> Result<Option<String>> {
        match self.u8()? {
            0 => Ok(None),
            1 => self.str().map(Some),
            t => Err(Error::format(self.format, format!("bad option tag {t}"))),
        }
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let len = self.usize()?;
        (0..len).map(|_| self.f64()).collect()
    }

    pub fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::format(self.format, reason))
    }
}
