//! Binary index file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "LSIX" | version: u32 | section_count: u32
//! section*: tag: [u8; 4] | byte_len: u64 | payload
//! ```
//!
//! Sections, in order: `PARM` (k1, b as f64), `IDS ` and `TEXT` (u32 count,
//! then u32-length-prefixed UTF-8 strings), `LENS` (u32 count, u32 each),
//! `POST` (u32 term count; per term a prefixed string, u32 posting count,
//! then `(ordinal: u32, tf: u32)` pairs).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::index::{Bm25Params, Index, Posting};
use super::RetrievalError;

pub const MAGIC: &[u8; 4] = b"LSIX";
pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: [&[u8; 4]; 5] = [b"PARM", b"IDS ", b"TEXT", b"LENS", b"POST"];

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strings(&mut self, items: &[String]) {
        self.u32(items.len() as u32);
        for s in items {
            self.str(s);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| RetrievalError::CorruptIndex("unexpected end of data".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, RetrievalError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, RetrievalError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String, RetrievalError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| RetrievalError::CorruptIndex("invalid UTF-8".into()))
    }
    fn strings(&mut self) -> Result<Vec<String>, RetrievalError> {
        let n = self.u32()? as usize;
        (0..n).map(|_| self.str()).collect()
    }
    fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn encode(index: &Index) -> Vec<u8> {
    let mut parm = Writer::default();
    parm.f64(index.params.k1);
    parm.f64(index.params.b);

    let mut ids = Writer::default();
    ids.strings(&index.passage_ids);
    let mut texts = Writer::default();
    texts.strings(&index.passage_texts);

    let mut lens = Writer::default();
    lens.u32(index.doc_lengths.len() as u32);
    for &l in &index.doc_lengths {
        lens.u32(l);
    }

    let mut post = Writer::default();
    post.u32(index.postings.len() as u32);
    for (term, list) in &index.postings {
        post.str(term);
        post.u32(list.len() as u32);
        for p in list {
            post.u32(p.ordinal);
            post.u32(p.tf);
        }
    }

    let mut out = Writer::default();
    out.0.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    out.u32(SECTIONS.len() as u32);
    for (tag, body) in SECTIONS.iter().zip([parm, ids, texts, lens, post]) {
        out.0.extend_from_slice(*tag);
        out.0
            .extend_from_slice(&(body.0.len() as u64).to_le_bytes());
        out.0.extend_from_slice(&body.0);
    }
    out.0
}

pub fn decode(bytes: &[u8]) -> Result<Index, RetrievalError> {
    let mut r = Reader::new(bytes);
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(RetrievalError::CorruptIndex("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(RetrievalError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut sections: BTreeMap<[u8; 4], &[u8]> = BTreeMap::new();
    for _ in 0..count {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let len = usize::try_from(r.u64()?)
            .map_err(|_| RetrievalError::CorruptIndex("section too large".into()))?;
        sections.insert(tag, r.take(len)?);
    }
    if !r.finished() {
        return Err(RetrievalError::CorruptIndex("trailing bytes".into()));
    }
    let section = |tag: &[u8; 4]| {
        sections.get(tag).map(|b| Reader::new(b)).ok_or_else(|| {
            RetrievalError::CorruptIndex(format!(
                "missing section {}",
                String::from_utf8_lossy(tag)
            ))
        })
    };

    let mut parm = section(b"PARM")?;
    let params = Bm25Params {
        k1: parm.f64()?,
        b: parm.f64()?,
    };
    let passage_ids = section(b"IDS ")?.strings()?;
    let passage_texts = section(b"TEXT")?.strings()?;

    let mut lens = section(b"LENS")?;
    let n = lens.u32()? as usize;
    let doc_lengths = (0..n).map(|_| lens.u32()).collect::<Result<Vec<_>, _>>()?;

    let mut post = section(b"POST")?;
    let terms = post.u32()? as usize;
    let mut postings = BTreeMap::new();
    for _ in 0..terms {
        let term = post.str()?;
        let n = post.u32()? as usize;
        let list = (0..n)
            .map(|_| {
                Ok(Posting {
                    ordinal: post.u32()?,
                    tf: post.u32()?,
                })
            })
            .collect::<Result<Vec<_>, RetrievalError>>()?;
        postings.insert(term, list);
    }
    Index::from_parts(params, passage_ids, passage_texts, doc_lengths, postings)
}

pub fn save_index(index: &Index, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
    let path = path.as_ref();
    fs::write(path, encode(index)).map_err(|source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index, RetrievalError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;
    use crate::retrieval::build_index;

    fn sample() -> Index {
        let ps: Vec<Passage> = ["alpha beta", "beta gamma gamma", "délta ünïcode"]
            .iter()
            .enumerate()
            .map(|(i, t)| Passage {
                id: format!("w{i}"),
                text: t.to_string(),
                source: String::new(),
            })
            .collect();
        build_index(&ps, Bm25Params { k1: 1.2, b: 0.75 }).unwrap()
    }

    #[test]
    fn round_trip() {
        let idx = sample();
        let bytes = encode(&idx);
        assert_eq!(&bytes[..4], b"LSIX");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(decode(&bytes).unwrap(), idx);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.lsix");
        save_index(&idx, &path).unwrap();
        assert_eq!(load_index(&path).unwrap(), idx);
    }

    #[test]
    fn rejects_bad_files() {
        let mut bytes = encode(&sample());
        assert!(matches!(
            decode(b"NOPE"),
            Err(RetrievalError::CorruptIndex(_))
        ));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 3]),
            Err(RetrievalError::CorruptIndex(_))
        ));
        bytes[4] = 9;
        assert!(matches!(
            decode(&bytes),
            Err(RetrievalError::UnsupportedVersion(9))
        ));
        assert!(matches!(
            load_index("/nonexistent/i.lsix"),
            Err(RetrievalError::Io { .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_posting() {
        let mut idx = sample();
        idx.postings.get_mut("beta").unwrap()[1].ordinal = 99;
        assert!(matches!(
            decode(&encode(&idx)),
            Err(RetrievalError::CorruptIndex(_))
        ));
    }
}
