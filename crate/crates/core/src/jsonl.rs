//! Line-oriented JSON reading and writing shared by every file format.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// A decoded record and the 1-based line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Numbered<T> {
    pub line: usize,
    pub value: T,
}

/// Reads one JSON object per line. Blank lines are skipped.
pub fn read_records<T, R>(reader: R, source_name: &str) -> Result<Vec<Numbered<T>>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(source_name, line_no, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value = serde_json::from_str(trimmed).map_err(|e| Error::parse(source_name, line_no, e))?;
        out.push(Numbered {
            line: line_no,
            value,
        });
    }
    Ok(out)
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<Numbered<T>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file), &path.display().to_string())
}

pub fn write_record<T: Serialize, W: Write>(writer: &mut W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *writer, value)?;
    writer.write_all(b"\n")
}
