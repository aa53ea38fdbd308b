//! On-disk snapshot of an [`IndexShardSet`].
//!
//! Layout of a snapshot directory:
//!
//! * `manifest.json`: `format_version`, hasher config and the shard list.
//! * `shard_<category>.fwd`: sections `IDS ` (id table), `EMB ` (fixed-stride
//!   little-endian f32 block) and `ATTR` (one JSON attribute map per doc).
//! * `shard_<category>.inv`: sections `KEYS` (sorted key table) and `POST`
//!   (LEB128 delta-encoded postings, one list per key in key order).
//!
//! Each shard file starts with a 4-byte magic and a little-endian u32 format
//! version. A section is `tag[4] | len: u64 | payload | xxh3-64(payload): u64`.
//! Category names are percent-escaped in file names; the manifest is the
//! source of truth for the mapping.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use super::{ForwardIndex, IndexShard, IndexShardSet, PostingList, ATTR_PREFIX};
use crate::error::{Error, Result};
use crate::lsh::{binarize_slice, HasherConfig, LshHasher, Token};
use crate::model::AttributeMap;

pub const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const FWD_MAGIC: &[u8; 4] = b"LSFW";
const INV_MAGIC: &[u8; 4] = b"LSIV";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    hasher: HasherConfig,
    shards: Vec<ShardEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShardEntry {
    category: String,
    file_stem: String,
    num_docs: usize,
}

fn file_stem(category: &str) -> String {
    let mut stem = String::from("shard_");
    for b in category.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            stem.push(b as char);
        } else {
            stem.push_str(&format!("%{b:02X}"));
        }
    }
    stem
}

pub fn save_index(set: &IndexShardSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for shard in set.shards.values() {
        let stem = file_stem(&shard.category);
        write_file(&dir.join(format!("{stem}.fwd")), &encode_forward(&shard.forward)?)?;
        write_file(&dir.join(format!("{stem}.inv")), &encode_inverted(shard))?;
        entries.push(ShardEntry {
            category: shard.category.clone(),
            file_stem: stem,
            num_docs: shard.len(),
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        hasher: *set.hasher.config(),
        shards: entries,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_file(&dir.join(MANIFEST), &bytes)
}

pub fn load_index(dir: impl AsRef<Path>) -> Result<IndexShardSet> {
    let dir = dir.as_ref();
    let manifest_bytes = read_file(&dir.join(MANIFEST))?;
    let raw: serde_json::Value = serde_json::from_slice(&manifest_bytes).map_err(|e| Error::Integrity {
        section: MANIFEST.into(),
        message: e.to_string(),
    })?;
    match raw.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                supported: FORMAT_VERSION,
            })
        }
        None => {
            return Err(Error::Integrity {
                section: MANIFEST.into(),
                message: "missing format_version".into(),
            })
        }
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| Error::Integrity {
        section: MANIFEST.into(),
        message: e.to_string(),
    })?;
    let hasher = LshHasher::new(manifest.hasher)?;

    let mut shards = BTreeMap::new();
    for entry in &manifest.shards {
        let fwd_name = format!("{}.fwd", entry.file_stem);
        let inv_name = format!("{}.inv", entry.file_stem);
        let forward = decode_forward(&fwd_name, &read_file(&dir.join(&fwd_name))?, manifest.hasher.dim)?;
        if forward.len() != entry.num_docs {
            return Err(Error::Integrity {
                section: fwd_name,
                message: format!("holds {} docs, manifest says {}", forward.len(), entry.num_docs),
            });
        }
        let mut shard = IndexShard::new(entry.category.clone(), manifest.hasher);
        shard.forward = forward;
        decode_inverted(&inv_name, &read_file(&dir.join(&inv_name))?, &mut shard)?;
        if shards.insert(entry.category.clone(), shard).is_some() {
            return Err(Error::Integrity {
                section: MANIFEST.into(),
                message: format!("duplicate shard {:?}", entry.category),
            });
        }
    }
    Ok(IndexShardSet { hasher, shards })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

// ---- encoding -------------------------------------------------------------

struct FileWriter {
    buf: Vec<u8>,
}

impl FileWriter {
    fn new(magic: &[u8; 4]) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        FileWriter { buf }
    }

    fn section(&mut self, tag: &[u8; 4], payload: &[u8]) {
        self.buf.extend_from_slice(tag);
        self.buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        self.buf.extend_from_slice(payload);
        self.buf.extend_from_slice(&xxh3_64(payload).to_le_bytes());
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(buf, bytes.len() as u32);
    buf.extend_from_slice(bytes);
}

fn put_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

fn encode_forward(fwd: &ForwardIndex) -> Result<Vec<u8>> {
    let mut file = FileWriter::new(FWD_MAGIC);

    let mut ids = Vec::new();
    put_u32(&mut ids, fwd.len() as u32);
    for id in &fwd.ids {
        put_bytes(&mut ids, id.as_bytes());
    }
    file.section(b"IDS ", &ids);

    let mut emb = Vec::with_capacity(8 + fwd.embeddings.len() * 4);
    put_u32(&mut emb, fwd.dim as u32);
    put_u32(&mut emb, fwd.len() as u32);
    for v in &fwd.embeddings {
        emb.extend_from_slice(&v.to_le_bytes());
    }
    file.section(b"EMB ", &emb);

    let mut attrs = Vec::new();
    put_u32(&mut attrs, fwd.len() as u32);
    for a in &fwd.attributes {
        put_bytes(&mut attrs, &serde_json::to_vec(a)?);
    }
    file.section(b"ATTR", &attrs);
    Ok(file.buf)
}

fn encode_inverted(shard: &IndexShard) -> Vec<u8> {
    let entries = shard.inverted_entries();
    let mut file = FileWriter::new(INV_MAGIC);

    let mut keys = Vec::new();
    put_u32(&mut keys, entries.len() as u32);
    for (key, _) in &entries {
        put_bytes(&mut keys, key.as_bytes());
    }
    file.section(b"KEYS", &keys);

    let mut postings = Vec::new();
    for (_, list) in &entries {
        put_varint(&mut postings, list.len() as u64);
        let mut prev = 0u32;
        for (i, &o) in list.as_slice().iter().enumerate() {
            put_varint(&mut postings, u64::from(if i == 0 { o } else { o - prev }));
            prev = o;
        }
    }
    file.section(b"POST", &postings);
    file.buf
}

// ---- decoding -------------------------------------------------------------

/// Cursor over one file; every failure is reported against a named section.
struct Reader<'a> {
    file: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(file: &'a str, bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Reader { file, bytes, pos: 0 };
        let header = r.take(8, "header")?;
        if &header[..4] != magic {
            return Err(r.integrity("header", "bad magic"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(r)
    }

    fn integrity(&self, section: &str, message: impl Into<String>) -> Error {
        Error::Integrity {
            section: format!("{}/{}", self.file, section),
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, section: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.integrity(section, "truncated")),
        }
    }

    fn section(&mut self, tag: &[u8; 4], name: &str) -> Result<&'a [u8]> {
        if self.take(4, name)? != tag {
            return Err(self.integrity(name, "unexpected section tag"));
        }
        let len = u64::from_le_bytes(self.take(8, name)?.try_into().unwrap());
        let len = usize::try_from(len).map_err(|_| self.integrity(name, "section too large"))?;
        let payload = self.take(len, name)?;
        let stored = u64::from_le_bytes(self.take(8, name)?.try_into().unwrap());
        if xxh3_64(payload) != stored {
            return Err(self.integrity(name, "checksum mismatch"));
        }
        Ok(payload)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.integrity("trailer", "unexpected trailing bytes"));
        }
        Ok(())
    }
}

/// Cursor inside a verified section payload.
struct Payload<'a> {
    bytes: &'a [u8],
    pos: usize,
    file: &'a str,
    section: &'a str,
}

impl<'a> Payload<'a> {
    fn new(bytes: &'a [u8], reader: &Reader<'a>, section: &'a str) -> Self {
        Payload {
            bytes,
            pos: 0,
            file: reader.file,
            section,
        }
    }

    fn err(&self, message: &str) -> Error {
        Error::Integrity {
            section: format!("{}/{}", self.file, self.section),
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()) {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.err("payload truncated")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    fn string(&mut self) -> Result<String> {
        let b = self.bytes()?;
        String::from_utf8(b.to_vec()).map_err(|_| self.err("invalid utf-8"))
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.take(1)?[0];
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(self.err("varint overflow"))
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.err("trailing payload bytes"));
        }
        Ok(())
    }
}

fn decode_forward(name: &str, bytes: &[u8], dim: usize) -> Result<ForwardIndex> {
    let mut reader = Reader::open(name, bytes, FWD_MAGIC)?;
    let ids_raw = reader.section(b"IDS ", "ids")?;
    let emb_raw = reader.section(b"EMB ", "embeddings")?;
    let attr_raw = reader.section(b"ATTR", "attributes")?;
    reader.finish()?;

    let mut p = Payload::new(ids_raw, &reader, "ids");
    let count = p.u32()? as usize;
    let ids = (0..count).map(|_| p.string()).collect::<Result<Vec<_>>>()?;
    p.done()?;

    let mut p = Payload::new(emb_raw, &reader, "embeddings");
    let stored_dim = p.u32()? as usize;
    let emb_count = p.u32()? as usize;
    if stored_dim != dim || emb_count != count {
        return Err(reader.integrity("embeddings", "shape disagrees with manifest or id table"));
    }
    let block = p.take(count.checked_mul(dim).and_then(|n| n.checked_mul(4)).ok_or_else(|| reader.integrity("embeddings", "too large"))?)?;
    p.done()?;
    let embeddings: Vec<f32> = block
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut p = Payload::new(attr_raw, &reader, "attributes");
    if p.u32()? as usize != count {
        return Err(reader.integrity("attributes", "count disagrees with id table"));
    }
    let attributes = (0..count)
        .map(|_| {
            serde_json::from_slice::<AttributeMap>(p.bytes()?)
                .map_err(|e| reader.integrity("attributes", e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    p.done()?;

    let codes = embeddings.chunks(dim.max(1)).take(count).map(binarize_slice).collect();
    Ok(ForwardIndex {
        dim,
        ids,
        embeddings,
        codes,
        attributes,
    })
}

fn decode_inverted(name: &str, bytes: &[u8], shard: &mut IndexShard) -> Result<()> {
    let mut reader = Reader::open(name, bytes, INV_MAGIC)?;
    let keys_raw = reader.section(b"KEYS", "keys")?;
    let post_raw = reader.section(b"POST", "postings")?;
    reader.finish()?;

    let mut p = Payload::new(keys_raw, &reader, "keys");
    let count = p.u32()? as usize;
    let keys = (0..count).map(|_| p.string()).collect::<Result<Vec<_>>>()?;
    p.done()?;
    if keys.windows(2).any(|w| w[0] >= w[1]) {
        return Err(reader.integrity("keys", "key table not strictly sorted"));
    }

    let num_docs = shard.len() as u64;
    let mut token_postings: Vec<HashMap<u64, PostingList>> = vec![HashMap::new(); shard.hasher.num_bands];
    let mut attr_postings = BTreeMap::new();
    let mut p = Payload::new(post_raw, &reader, "postings");
    for key in keys {
        let len = p.varint()?;
        let mut list = Vec::with_capacity(len.min(num_docs) as usize);
        let mut prev = 0u64;
        for i in 0..len {
            let v = p.varint()?;
            if i > 0 && v == 0 {
                return Err(reader.integrity("postings", format!("postings for {key:?} not strictly increasing")));
            }
            let ordinal = if i == 0 { v } else { prev + v };
            if ordinal >= num_docs {
                return Err(reader.integrity("postings", format!("ordinal {ordinal} out of range")));
            }
            list.push(ordinal as u32);
            prev = ordinal;
        }
        let list = PostingList(list);
        if key.starts_with(ATTR_PREFIX) {
            attr_postings.insert(key, list);
        } else {
            let token: Token = key
                .parse()
                .map_err(|_| reader.integrity("keys", format!("unrecognized key {key:?}")))?;
            let band = token_postings
                .get_mut(token.band as usize)
                .ok_or_else(|| reader.integrity("keys", format!("band out of range in {key:?}")))?;
            band.insert(token.pattern, list);
        }
    }
    p.done()?;
    shard.token_postings = token_postings;
    shard.attr_postings = attr_postings;
    Ok(())
}
