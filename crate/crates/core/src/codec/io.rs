//! Embedding serialization.
//!
//! Binary layout: 8-byte magic, `D` as little-endian `u64`, then `D`
//! little-endian `f64` components. JSON is a plain array of numbers.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::HarmonicEmbedding;

pub const VECTOR_MAGIC: [u8; 8] = *b"HTPVEC01";

#[derive(Debug, Error)]
pub enum VectorIoError {
    #[error("not an embedding file (bad magic)")]
    BadMagic,
    #[error("embedding file truncated: header says {expected} components, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} trailing bytes after the last component")]
    TrailingBytes(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_binary<W: Write>(embedding: &HarmonicEmbedding, mut out: W) -> io::Result<()> {
    out.write_all(&VECTOR_MAGIC)?;
    out.write_all(&(embedding.dim() as u64).to_le_bytes())?;
    for x in embedding.components() {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_binary<R: Read>(mut input: R) -> Result<HarmonicEmbedding, VectorIoError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || bytes[..8] != VECTOR_MAGIC {
        return Err(VectorIoError::BadMagic);
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    let found = body.len() / 8;
    if found < dim {
        return Err(VectorIoError::Truncated {
            expected: dim,
            found,
        });
    }
    if body.len() > dim * 8 {
        return Err(VectorIoError::TrailingBytes(body.len() - dim * 8));
    }
    let components = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(HarmonicEmbedding::from_components(components))
}

pub fn write_json<W: Write>(embedding: &HarmonicEmbedding, out: W) -> Result<(), VectorIoError> {
    serde_json::to_writer(out, embedding.components())?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<HarmonicEmbedding, VectorIoError> {
    let components: Vec<f64> = serde_json::from_reader(input)?;
    Ok(HarmonicEmbedding::from_components(components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode, CodecConfig};
    use proptest::prelude::*;

    #[test]
    fn binary_header_layout() {
        let e = HarmonicEmbedding::from_components(vec![0.5, -1.0]);
        let mut buf = Vec::new();
        write_binary(&e, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 16);
        assert_eq!(&buf[..8], b"HTPVEC01");
        assert_eq!(&buf[8..16], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &0.5f64.to_le_bytes());
    }

    #[test]
    fn binary_rejects_malformed_input() {
        assert!(matches!(read_binary(&b"nope"[..]), Err(VectorIoError::BadMagic)));
        let mut buf = Vec::new();
        write_binary(&HarmonicEmbedding::from_components(vec![1.0; 4]), &mut buf).unwrap();
        assert!(matches!(
            read_binary(&buf[..buf.len() - 8]),
            Err(VectorIoError::Truncated { expected: 4, found: 3 })
        ));
        buf.push(0);
        assert!(matches!(read_binary(&buf[..]), Err(VectorIoError::TrailingBytes(1))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let e = encode("vector", &CodecConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_json(&e, &mut buf).unwrap();
        assert_eq!(read_json(&buf[..]).unwrap(), e);
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bit_exact(components in proptest::collection::vec(any::<f64>(), 0..64)) {
            let e = HarmonicEmbedding::from_components(components);
            let mut buf = Vec::new();
            write_binary(&e, &mut buf).unwrap();
            let back = read_binary(&buf[..]).unwrap();
            let bits = |v: &HarmonicEmbedding| v.components().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&e));
        }
    }
}
