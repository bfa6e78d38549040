//! Key file formats: decimal text (one key per line, shortest
//! round-trip representation) and raw little-endian 64-bit IEEE-754.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum KeyFormat {
    Text,
    Raw,
}

pub fn read_keys(path: &Path, format: KeyFormat) -> Result<Vec<f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    match format {
        KeyFormat::Text => {
            let reader = BufReader::new(file);
            let mut keys = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line =
                    line.map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
                let s = line.trim();
                if s.is_empty() {
                    continue;
                }
                let v: f64 = s.parse().map_err(|e| {
                    CliError::Validation(format!(
                        "{} line {}: cannot parse '{s}' as a key: {e}",
                        path.display(),
                        i + 1
                    ))
                })?;
                keys.push(v);
            }
            Ok(keys)
        }
        KeyFormat::Raw => {
            let mut bytes = Vec::new();
            BufReader::new(file)
                .read_to_end(&mut bytes)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            if bytes.len() % 8 != 0 {
                return Err(CliError::Validation(format!(
                    "{}: raw key file length {} is not a multiple of 8",
                    path.display(),
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        }
    }
}

pub fn write_keys(path: &Path, format: KeyFormat, keys: &[f64]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let res = match format {
        KeyFormat::Text => keys.iter().try_for_each(|k| writeln!(out, "{k}")),
        KeyFormat::Raw => keys
            .iter()
            .try_for_each(|k| out.write_all(&k.to_le_bytes())),
    };
    res.and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}
