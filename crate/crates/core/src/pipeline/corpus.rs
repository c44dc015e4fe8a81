use std::io::{Read, Write};

use crate::codec::{Decoder, Encoder};
use crate::error::Result;
use crate::ingest::{LabelHierarchy, LabeledSequence, SequenceRecord};

const MAGIC: &[u8] = b"SQCORP1";

/// Binary corpus: magic `SQCORP1`, record count (u64), then per record the
/// id, residues, continent and country as u32-length-prefixed UTF-8 and the
/// state as a presence byte plus string.
pub fn write_corpus<W: Write>(out: W, data: &[LabeledSequence]) -> Result<()> {
    let mut enc = Encoder::new(out);
    enc.magic(MAGIC)?;
    enc.usize(data.len())?;
    for s in data {
        enc.str(&s.record.id)?;
        enc.str(&s.record.residues)?;
        enc.str(&s.label.continent)?;
        enc.str(&s.label.country)?;
        enc.opt_str(s.label.state.as_deref())?;
    }
    enc.finish()?;
    Ok(())
}

/// Reads a corpus and re-validates every record.
pub fn read_corpus<R: Read>(input: R) -> Result<Vec<LabeledSequence>> {
    let mut dec = Decoder::new(input, "SQCORP1 corpus");
    dec.expect_magic(MAGIC)?;
    let n = dec.usize()?;
    let mut data = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let id = dec.str()?;
        let residues = dec.str()?;
        let record = SequenceRecord::new(id, residues)?;
        let label = LabelHierarchy {
            continent: dec.str()?,
            country: dec.str()?,
            state: dec.opt_str()?,
        };
        data.push(LabeledSequence { record, label });
    }
    Ok(data)
}
