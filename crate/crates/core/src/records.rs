//! Line-delimited JSON record files. The first line is a [`Header`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("value serializes to JSON");
    hex::encode(Sha256::digest(json))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub format_version: u32,
    pub config_hash: String,
}

impl Header {
    pub fn new(kind: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            format_version: FORMAT_VERSION,
            config_hash: config_hash.into(),
        }
    }
}

/// Appends records to a JSONL file, one per line, header first.
pub struct RecordWriter {
    out: BufWriter<File>,
}

impl RecordWriter {
    pub fn create(path: impl AsRef<Path>, header: &Header) -> Result<Self> {
        let mut w = Self {
            out: BufWriter::new(File::create(path)?),
        };
        w.write(header)?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_records<T: Serialize>(path: impl AsRef<Path>, header: &Header, records: &[T]) -> Result<()> {
    let mut w = RecordWriter::create(path, header)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn read_records<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<(Header, Vec<T>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Incompatible("empty record file".into()))??;
    let header: Header = serde_json::from_str(&first)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Incompatible(format!(
            "format version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, out))
}
