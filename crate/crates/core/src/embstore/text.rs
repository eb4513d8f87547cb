//! Plain-text word vector format (`<count> <dim>` header, one word per line)
//! and the binary occurrence-count sidecar written next to it.

use std::io::{BufRead, Read, Write};

use crate::embstore::aggregate::WordVectorTable;
use crate::error::{Error, Result};

/// Parses the text vector format. Every entry gets `count`, since external
/// vector files carry no occurrence counts.
pub fn load_text_vectors<R: BufRead>(source: R, count: u64) -> Result<WordVectorTable> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::parse(1, "missing header line")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::parse(1, "header must be `<word_count> <dim>`"));
    }
    let n_words: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad word count {:?}", fields[0])))?;
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad dimension {:?}", fields[1])))?;
    if dim == 0 {
        return Err(Error::parse(1, "dimension must be positive"));
    }

    let mut table = WordVectorTable::new(dim);
    let mut seen = 0usize;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default();
        if word.is_empty() {
            return Err(Error::parse(lineno, "empty word"));
        }
        let values = parts
            .map(|p| {
                let v: f64 = p
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad number {p:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(lineno, format!("non-finite value {p:?}")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                lineno,
                format!("expected {dim} coordinates, found {}", values.len()),
            ));
        }
        if table.contains(word) {
            return Err(Error::parse(lineno, format!("duplicate word {word:?}")));
        }
        table.insert(word, values, count.max(1))?;
        seen += 1;
    }
    if seen != n_words {
        return Err(Error::parse(
            1,
            format!("header announces {n_words} words, file has {seen}"),
        ));
    }
    Ok(table)
}

/// Writes the table in key order. Coordinates are stored at 32-bit precision.
pub fn write_text_vectors<W: Write>(table: &WordVectorTable, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    let mut line = String::new();
    for (word, entry) in table.iter() {
        line.clear();
        line.push_str(word);
        for &v in &entry.vector {
            line.push(' ');
            line.push_str(&(v as f32).to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub const COUNTS_MAGIC: [u8; 4] = *b"WCNT";
pub const COUNTS_VERSION: u16 = 1;

/// Writes occurrence counts: magic, version u16, n u32, then per word
/// `len u16 | UTF-8 bytes | count u64`, little-endian, in key order.
pub fn write_counts<W: Write>(table: &WordVectorTable, mut out: W) -> Result<()> {
    out.write_all(&COUNTS_MAGIC)?;
    out.write_all(&COUNTS_VERSION.to_le_bytes())?;
    out.write_all(&(table.len() as u32).to_le_bytes())?;
    for (word, entry) in table.iter() {
        let len = u16::try_from(word.len())
            .map_err(|_| Error::InvalidArgument(format!("word {word:?} too long")))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(word.as_bytes())?;
        out.write_all(&entry.count.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a count sidecar as `(word, count)` pairs in file order.
pub fn read_counts<R: Read>(mut source: R) -> Result<Vec<(String, u64)>> {
    let mut offset = 0u64;
    let mut take = |buf: &mut [u8], offset: &mut u64| -> Result<()> {
        source.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Corruption {
                offset: *offset,
                message: "truncated count file".into(),
            },
            _ => Error::Io(e),
        })?;
        *offset += buf.len() as u64;
        Ok(())
    };
    let mut head = [0u8; 10];
    take(&mut head, &mut offset)?;
    if head[0..4] != COUNTS_MAGIC {
        return Err(Error::Format("bad count file magic".into()));
    }
    if u16::from_le_bytes([head[4], head[5]]) != COUNTS_VERSION {
        return Err(Error::Format("unsupported count file version".into()));
    }
    let n = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut len = [0u8; 2];
        take(&mut len, &mut offset)?;
        let mut word = vec![0u8; u16::from_le_bytes(len) as usize];
        take(&mut word, &mut offset)?;
        let word = String::from_utf8(word).map_err(|_| Error::Corruption {
            offset,
            message: "word is not UTF-8".into(),
        })?;
        let mut count = [0u8; 8];
        take(&mut count, &mut offset)?;
        out.push((word, u64::from_le_bytes(count)));
    }
    Ok(out)
}

/// Replaces table counts with those from a sidecar. Every table word must be listed.
pub fn apply_counts(table: &mut WordVectorTable, counts: &[(String, u64)]) -> Result<()> {
    if counts.len() != table.len() {
        return Err(Error::Integrity(format!(
            "count file lists {} words, vector file has {}",
            counts.len(),
            table.len()
        )));
    }
    for (word, count) in counts {
        let vector = match table.get(word) {
            Some(e) => e.vector.clone(),
            None => {
                return Err(Error::Integrity(format!(
                    "count file word {word:?} missing from vectors"
                )))
            }
        };
        table.insert(word.clone(), vector, *count)?;
    }
    Ok(())
}
