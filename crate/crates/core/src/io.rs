//! BIGANN vector files (`.fvecs`, `.bvecs`, `.ivecs`) and packed code files.
//!
//! Vector files are a sequence of records, each a little-endian `i32`
//! dimension followed by that many components. Code files start with a
//! 20-byte header (`WHDC`, version, width, count) followed by `ceil(b/8)`
//! little-endian bytes per code, position 1 in the least significant bit of
//! the first byte.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::bitcode::{BinaryCode, MAX_WIDTH};
use crate::error::{Error, Result};

/// A vector component with a fixed little-endian encoding.
pub trait Component: Copy + Sized {
    const SIZE: usize;
    fn decode(bytes: &[u8]) -> Self;
    fn encode(self, out: &mut Vec<u8>);
}

impl Component for f32 {
    const SIZE: usize = 4;
    fn decode(bytes: &[u8]) -> Self {
        LittleEndian::read_f32(bytes)
    }
    fn encode(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Component for u8 {
    const SIZE: usize = 1;
    fn decode(bytes: &[u8]) -> Self {
        bytes[0]
    }
    fn encode(self, out: &mut Vec<u8>) {
        out.push(self);
    }
}

impl Component for i32 {
    const SIZE: usize = 4;
    fn decode(bytes: &[u8]) -> Self {
        LittleEndian::read_i32(bytes)
    }
    fn encode(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

/// Streaming reader over vector records. Every record must have the
/// dimension of the first one. The first error ends the iteration.
pub struct VecsReader<R, C> {
    inner: R,
    offset: u64,
    dim: Option<usize>,
    buf: Vec<u8>,
    done: bool,
    _component: PhantomData<C>,
}

pub type FvecsReader<R> = VecsReader<R, f32>;
pub type BvecsReader<R> = VecsReader<R, u8>;
pub type IvecsReader<R> = VecsReader<R, i32>;

impl<C: Component> VecsReader<BufReader<File>, C> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: Read, C: Component> VecsReader<R, C> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            offset: 0,
            dim: None,
            buf: Vec::new(),
            done: false,
            _component: PhantomData,
        }
    }

    /// Dimension of the records read so far.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Bytes consumed so far.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn read_record(&mut self) -> Result<Option<Vec<C>>> {
        let start = self.offset;
        let mut header = [0u8; 4];
        let got = read_up_to(&mut self.inner, &mut header)?;
        if got == 0 {
            return Ok(None);
        }
        if got < 4 {
            return Err(Error::format(start, format!("truncated dimension field ({got} of 4 bytes)")));
        }
        let d = i32::from_le_bytes(header);
        if d <= 0 {
            return Err(Error::format(start, format!("non-positive dimension {d}")));
        }
        let d = d as usize;
        match self.dim {
            Some(expected) if expected != d => {
                return Err(Error::format(start, format!("dimension {d} differs from first record's {expected}")));
            }
            _ => self.dim = Some(d),
        }
        self.buf.resize(d * C::SIZE, 0);
        let got = read_up_to(&mut self.inner, &mut self.buf)?;
        if got < self.buf.len() {
            return Err(Error::format(
                start,
                format!("truncated record: {got} of {} payload bytes", self.buf.len()),
            ));
        }
        self.offset += 4 + self.buf.len() as u64;
        Ok(Some(self.buf.chunks_exact(C::SIZE).map(C::decode).collect()))
    }
}

impl<R: Read, C: Component> Iterator for VecsReader<R, C> {
    type Item = Result<Vec<C>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let r = self.read_record().transpose();
        if !matches!(r, Some(Ok(_))) {
            self.done = true;
        }
        r
    }
}

/// Fills `buf` unless the stream ends first; returns the bytes read.
fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

fn read_all<C: Component>(path: impl AsRef<Path>) -> Result<Vec<Vec<C>>> {
    VecsReader::<_, C>::open(path)?.collect()
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    read_all(path)
}

pub fn read_bvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<u8>>> {
    read_all(path)
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    read_all(path)
}

/// Writes records; all vectors must share one nonzero dimension.
pub fn write_vecs<C: Component, V: AsRef<[C]>>(mut out: impl Write, vectors: &[V]) -> Result<()> {
    let mut dim = None;
    let mut buf = Vec::new();
    for v in vectors {
        let v = v.as_ref();
        if v.is_empty() || v.len() > i32::MAX as usize {
            return Err(Error::InvalidParameter(format!("cannot write a vector of dimension {}", v.len())));
        }
        if let Some(d) = dim {
            if d != v.len() {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        dim = Some(v.len());
        buf.clear();
        buf.extend_from_slice(&(v.len() as i32).to_le_bytes());
        v.iter().for_each(|&c| c.encode(&mut buf));
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn write_file<C: Component, V: AsRef<[C]>>(path: impl AsRef<Path>, vectors: &[V]) -> Result<()> {
    write_vecs(BufWriter::new(File::create(path)?), vectors)
}

pub fn write_fvecs<V: AsRef<[f32]>>(path: impl AsRef<Path>, vectors: &[V]) -> Result<()> {
    write_file(path, vectors)
}

pub fn write_bvecs<V: AsRef<[u8]>>(path: impl AsRef<Path>, vectors: &[V]) -> Result<()> {
    write_file(path, vectors)
}

pub fn write_ivecs<V: AsRef<[i32]>>(path: impl AsRef<Path>, vectors: &[V]) -> Result<()> {
    write_file(path, vectors)
}

pub const CODE_MAGIC: [u8; 4] = *b"WHDC";
pub const CODE_VERSION: u32 = 1;
pub const CODE_HEADER_LEN: u64 = 20;

/// Bytes per stored code of width `width`.
pub fn code_bytes(width: usize) -> usize {
    width.div_ceil(8)
}

/// Codes of one width, as stored in a code file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeFile {
    pub width: usize,
    pub codes: Vec<BinaryCode>,
}

fn write_header(out: &mut impl Write, width: usize, count: u64) -> io::Result<()> {
    out.write_all(&CODE_MAGIC)?;
    out.write_u32::<LittleEndian>(CODE_VERSION)?;
    out.write_u32::<LittleEndian>(width as u32)?;
    out.write_u64::<LittleEndian>(count)
}

/// Streaming code writer; the count in the header is filled in by
/// [`CodeWriter::finish`].
pub struct CodeWriter<W: Write + Seek> {
    inner: W,
    width: usize,
    count: u64,
}

impl CodeWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, width: usize) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), width)
    }
}

impl<W: Write + Seek> CodeWriter<W> {
    pub fn new(mut inner: W, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::UnsupportedWidth(width));
        }
        write_header(&mut inner, width, 0)?;
        Ok(Self { inner, width, count: 0 })
    }

    pub fn push(&mut self, code: &BinaryCode) -> Result<()> {
        code.check_width(self.width)?;
        self.inner.write_all(&code.to_le_bytes())?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Patches the header count and flushes; returns the inner writer.
    pub fn finish(mut self) -> Result<W> {
        self.inner.seek(SeekFrom::Start(0))?;
        write_header(&mut self.inner, self.width, self.count)?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_codes(path: impl AsRef<Path>, width: usize, codes: &[BinaryCode]) -> Result<()> {
    let mut w = CodeWriter::create(path, width)?;
    codes.iter().try_for_each(|c| w.push(c))?;
    w.finish()?;
    Ok(())
}

/// Streaming code reader. The header and total length are validated on
/// open, so a file that opens successfully holds exactly `len()` codes.
pub struct CodeReader<R> {
    inner: R,
    width: usize,
    count: u64,
    read: u64,
    buf: Vec<u8>,
}

impl CodeReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        let r = Self::new(BufReader::new(file))?;
        let expected = CODE_HEADER_LEN + r.count * code_bytes(r.width) as u64;
        if len != expected {
            return Err(Error::format(
                len.min(expected),
                format!("file holds {len} bytes, header implies {expected}"),
            ));
        }
        Ok(r)
    }
}

impl<R: Read> CodeReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = [0u8; CODE_HEADER_LEN as usize];
        let got = read_up_to(&mut inner, &mut header)?;
        if got < header.len() {
            return Err(Error::format(got as u64, "truncated header"));
        }
        if header[..4] != CODE_MAGIC {
            return Err(Error::format(0, "bad magic"));
        }
        let mut fields = &header[4..];
        let version = fields.read_u32::<LittleEndian>()?;
        if version != CODE_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let width = fields.read_u32::<LittleEndian>()? as usize;
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::format(8, format!("unsupported width {width}")));
        }
        let count = fields.read_u64::<LittleEndian>()?;
        Ok(Self {
            inner,
            width,
            count,
            read: 0,
            buf: vec![0; code_bytes(width)],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of codes declared in the header.
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn offset(&self) -> u64 {
        CODE_HEADER_LEN + self.read * self.buf.len() as u64
    }

    fn read_code(&mut self) -> Result<BinaryCode> {
        let at = self.offset();
        let got = read_up_to(&mut self.inner, &mut self.buf)?;
        if got < self.buf.len() {
            return Err(Error::format(at + got as u64, "truncated code payload"));
        }
        let code = BinaryCode::from_le_bytes(self.width, &self.buf)
            .map_err(|_| Error::format(at, "bits set beyond the code width"))?;
        self.read += 1;
        Ok(code)
    }

    /// Up to `max` further codes; an empty vector once all are read.
    pub fn next_chunk(&mut self, max: usize) -> Result<Vec<BinaryCode>> {
        let take = (self.count - self.read).min(max as u64) as usize;
        (0..take).map(|_| self.read_code()).collect()
    }
}

impl<R: Read> Iterator for CodeReader<R> {
    type Item = Result<BinaryCode>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.read >= self.count {
            return None;
        }
        let r = self.read_code();
        if r.is_err() {
            self.read = self.count;
        }
        Some(r)
    }
}

pub fn read_codes(path: impl AsRef<Path>) -> Result<CodeFile> {
    let r = CodeReader::open(path)?;
    let width = r.width();
    Ok(CodeFile {
        width,
        codes: r.collect::<Result<_>>()?,
    })
}
