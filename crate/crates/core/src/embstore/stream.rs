//! Reader and writer for the `.cemb` contextual embedding stream.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header: magic "CEMB" | version u16 | dim u32
//! record: doc_id u32 | seq_id u32 | word_idx u32 | len u16 | word (UTF-8, len bytes) | dim x f32
//! ```
//!
//! Records follow the header back to back until end of file. There is no
//! record count in the header so shards can be produced by appending.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CEMB";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub magic: [u8; 4],
    pub format_version: u16,
    pub dim: u32,
}

impl StreamHeader {
    pub fn new(dim: u32) -> Self {
        StreamHeader {
            magic: MAGIC,
            format_version: FORMAT_VERSION,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    fn validate(&self) -> Result<()> {
        if self.magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&self.magic),
                String::from_utf8_lossy(&MAGIC)
            )));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}",
                self.format_version
            )));
        }
        if self.dim == 0 {
            return Err(Error::Format("dimension must be at least 1".into()));
        }
        Ok(())
    }
}

/// One subword occurrence with its position keys.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub doc_id: u32,
    pub seq_id: u32,
    pub word_idx: u32,
    pub word_text: String,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    /// Grouping key of the word this subword belongs to.
    pub fn key(&self) -> (u32, u32, u32) {
        (self.doc_id, self.seq_id, self.word_idx)
    }
}

fn check_word(word: &str) -> std::result::Result<(), String> {
    if word.is_empty() {
        return Err("empty word text".into());
    }
    if word.chars().any(char::is_whitespace) {
        return Err(format!("word text {word:?} contains whitespace"));
    }
    if word.len() > u16::MAX as usize {
        return Err(format!("word text of {} bytes is too long", word.len()));
    }
    Ok(())
}

/// Sequential reader over a `.cemb` stream.
pub struct StreamReader<R> {
    inner: R,
    header: StreamHeader,
    offset: u64,
    records: u64,
    done: bool,
}

impl<R: Read> StreamReader<R> {
    /// Reads and validates the header.
    pub fn new(mut inner: R) -> Result<Self> {
        let mut buf = [0u8; HEADER_LEN as usize];
        inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Format("stream shorter than header".into()),
            _ => Error::Io(e),
        })?;
        let header = StreamHeader {
            magic: [buf[0], buf[1], buf[2], buf[3]],
            format_version: u16::from_le_bytes([buf[4], buf[5]]),
            dim: u32::from_le_bytes([buf[6], buf[7], buf[8], buf[9]]),
        };
        header.validate()?;
        Ok(StreamReader {
            inner,
            header,
            offset: HEADER_LEN,
            records: 0,
            done: false,
        })
    }

    pub fn header(&self) -> StreamHeader {
        self.header
    }

    /// Number of records yielded so far; the total once exhausted.
    pub fn record_count(&self) -> u64 {
        self.records
    }

    /// Byte offset of the next unread record.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn corrupt(&self, start: u64, message: impl Into<String>) -> Error {
        Error::Corruption {
            offset: start,
            message: message.into(),
        }
    }

    /// Fills `buf` completely. `Ok(false)` means clean EOF before the first byte.
    fn fill(&mut self, buf: &mut [u8], start: u64, allow_eof: bool) -> Result<bool> {
        let mut read = 0;
        while read < buf.len() {
            match self.inner.read(&mut buf[read..]) {
                Ok(0) => {
                    if read == 0 && allow_eof {
                        return Ok(false);
                    }
                    return Err(self.corrupt(start, "truncated record"));
                }
                Ok(n) => read += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(Error::Io(e)),
            }
        }
        Ok(true)
    }

    fn read_record(&mut self) -> Result<Option<EmbeddingRecord>> {
        let start = self.offset;
        let mut fixed = [0u8; 14];
        if !self.fill(&mut fixed, start, true)? {
            return Ok(None);
        }
        let doc_id = u32::from_le_bytes(fixed[0..4].try_into().unwrap());
        let seq_id = u32::from_le_bytes(fixed[4..8].try_into().unwrap());
        let word_idx = u32::from_le_bytes(fixed[8..12].try_into().unwrap());
        let len = u16::from_le_bytes([fixed[12], fixed[13]]) as usize;

        let mut word = vec![0u8; len];
        self.fill(&mut word, start, false)?;
        let word_text =
            String::from_utf8(word).map_err(|_| self.corrupt(start, "word text is not UTF-8"))?;
        check_word(&word_text).map_err(|m| self.corrupt(start, m))?;

        let dim = self.header.dim();
        let mut raw = vec![0u8; dim * 4];
        self.fill(&mut raw, start, false)?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();

        self.offset += 14 + len as u64 + dim as u64 * 4;
        self.records += 1;
        Ok(Some(EmbeddingRecord {
            doc_id,
            seq_id,
            word_idx,
            word_text,
            vector,
        }))
    }
}

impl<R: Read> Iterator for StreamReader<R> {
    type Item = Result<EmbeddingRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Opens a stream: validates the header and returns a record iterator.
pub fn read_stream<R: Read>(source: R) -> Result<StreamReader<R>> {
    StreamReader::new(source)
}

/// Appends records to a `.cemb` stream.
pub struct StreamWriter<W: Write> {
    inner: W,
    dim: usize,
    records: u64,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut inner: W, dim: u32) -> Result<Self> {
        let header = StreamHeader::new(dim);
        header.validate()?;
        inner.write_all(&header.magic)?;
        inner.write_all(&header.format_version.to_le_bytes())?;
        inner.write_all(&header.dim.to_le_bytes())?;
        Ok(StreamWriter {
            inner,
            dim: dim as usize,
            records: 0,
        })
    }

    pub fn write(&mut self, record: &EmbeddingRecord) -> Result<()> {
        if record.vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: record.vector.len(),
            });
        }
        check_word(&record.word_text).map_err(Error::InvalidArgument)?;
        let mut buf = Vec::with_capacity(14 + record.word_text.len() + 4 * self.dim);
        buf.extend_from_slice(&record.doc_id.to_le_bytes());
        buf.extend_from_slice(&record.seq_id.to_le_bytes());
        buf.extend_from_slice(&record.word_idx.to_le_bytes());
        buf.extend_from_slice(&(record.word_text.len() as u16).to_le_bytes());
        buf.extend_from_slice(record.word_text.as_bytes());
        for v in &record.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        self.records += 1;
        Ok(())
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
