//! Batched ±1 spin samples with a text serialization.
//!
//! One sample per line as space-separated `1`/`-1`; a line holding `---` ends a batch.
//! Metadata travels in a JSON sidecar.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BATCH_SEPARATOR: &str = "---";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sampler: String,
    pub seed: u64,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    l: usize,
    batches: Vec<Vec<Vec<i8>>>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(l: usize, batches: Vec<Vec<Vec<i8>>>, meta: SampleMeta) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("samples need at least one spin".into()));
        }
        for (b, batch) in batches.iter().enumerate() {
            if batch.is_empty() {
                return Err(Error::InvalidArgument(format!("batch {b} is empty")));
            }
            for s in batch {
                if s.len() != l {
                    return Err(Error::InvalidArgument(format!("sample of length {} in a set with L = {l}", s.len())));
                }
                if s.iter().any(|&x| x != 1 && x != -1) {
                    return Err(Error::InvalidArgument("spins must be +1 or -1".into()));
                }
            }
        }
        Ok(Self { l, batches, meta })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batches(&self) -> &[Vec<Vec<i8>>] {
        &self.batches
    }

    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    pub fn n_samples(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = &[i8]> {
        self.batches.iter().flatten().map(Vec::as_slice)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for batch in &self.batches {
            for s in batch {
                let line: Vec<&str> = s.iter().map(|&x| if x > 0 { "1" } else { "-1" }).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            writeln!(out, "{BATCH_SEPARATOR}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R, origin: &Path, meta: SampleMeta) -> Result<Self> {
        let mut batches = Vec::new();
        let mut current: Vec<Vec<i8>> = Vec::new();
        let mut l = None;
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == BATCH_SEPARATOR {
                if !current.is_empty() {
                    batches.push(std::mem::take(&mut current));
                }
                continue;
            }
            let parse_err = |msg: String| Error::Parse { path: origin.to_path_buf(), line: n + 1, msg };
            let s = line
                .split_whitespace()
                .map(|t| match t {
                    "1" | "+1" => Ok(1),
                    "-1" => Ok(-1),
                    other => Err(parse_err(format!("expected ±1, found {other:?}"))),
                })
                .collect::<Result<Vec<i8>>>()?;
            match l {
                None => l = Some(s.len()),
                Some(l) if l != s.len() => return Err(parse_err(format!("expected {l} spins, found {}", s.len()))),
                _ => {}
            }
            current.push(s);
        }
        if !current.is_empty() {
            batches.push(current);
        }
        let l = l.ok_or_else(|| Error::InsufficientData(format!("{} holds no samples", origin.display())))?;
        Self::new(l, batches, meta)
    }

    /// Writes `<stem>.txt` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let txt = stem.with_extension("txt");
        let file = std::fs::File::create(&txt).map_err(|e| Error::io(&txt, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_text(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&txt, e))?;
        let js = stem.with_extension("json");
        let body = serde_json::to_string_pretty(&SidecarOut { l: self.l, batch_sizes: self.batch_sizes(), meta: &self.meta })?;
        std::fs::write(&js, body + "\n").map_err(|e| Error::io(&js, e))
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let js = stem.with_extension("json");
        let text = std::fs::read_to_string(&js).map_err(|e| Error::io(&js, e))?;
        let side: SidecarIn = serde_json::from_str(&text)?;
        let txt = stem.with_extension("txt");
        let file = std::fs::File::open(&txt).map_err(|e| Error::io(&txt, e))?;
        let set = Self::read_text(std::io::BufReader::new(file), &txt, side.meta)?;
        if set.l != side.l || set.batch_sizes() != side.batch_sizes {
            return Err(Error::Config(format!("{} does not match its sidecar", txt.display())));
        }
        Ok(set)
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batches.iter().map(Vec::len).collect()
    }
}

#[derive(Serialize)]
struct SidecarOut<'a> {
    l: usize,
    batch_sizes: Vec<usize>,
    meta: &'a SampleMeta,
}

#[derive(Deserialize)]
struct SidecarIn {
    l: usize,
    batch_sizes: Vec<usize>,
    meta: SampleMeta,
}
