//! Contextual embedding stream format and aggregation into static word vectors.

mod aggregate;
mod stream;
mod text;

pub use aggregate::{
    aggregate, merge_accumulators, reconstruct_words, Accumulator, AccumulatorEntry, Reconstruct,
    WordOccurrence, WordVector, WordVectorTable, DEFAULT_MIN_COUNT,
};
pub use stream::{
    read_stream, EmbeddingRecord, StreamHeader, StreamReader, StreamWriter, FORMAT_VERSION,
    HEADER_LEN, MAGIC,
};
pub use text::{
    apply_counts, load_text_vectors, read_counts, write_counts, write_text_vectors, COUNTS_MAGIC,
};

use std::io::Read;

use crate::error::Result;

/// Reads a whole stream into an accumulator (no frequency filter applied).
pub fn accumulate_stream<R: Read>(source: R) -> Result<Accumulator> {
    let reader = read_stream(source)?;
    let mut acc = Accumulator::new(reader.header().dim());
    acc.add_occurrences(reconstruct_words(reader))?;
    Ok(acc)
}
