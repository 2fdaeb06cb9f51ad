use std::fmt::Debug;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of every output file: version, parsed flags and seed.
pub fn header_line<T: Debug>(flags: &T, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| format!("{s:#x}"));
    format!("# pgilab {VERSION} | flags: {flags:?} | seed: {seed}\n")
}

/// File at `path` or stdout. Files start with the header line.
pub fn open(path: Option<&Path>, header: &str) -> Result<Box<dyn Write>, Failure> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display())).map_err(Failure::input)?;
            }
            let f = File::create(p).with_context(|| format!("creating {}", p.display())).map_err(Failure::input)?;
            let mut w = BufWriter::new(f);
            w.write_all(header.as_bytes()).map_err(|e| Failure::input(e.into()))?;
            Ok(Box::new(w))
        }
    }
}

pub struct OutDir {
    pub root: PathBuf,
    header: String,
}

impl OutDir {
    pub fn create(root: &Path, header: String) -> Result<Self, Failure> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display())).map_err(Failure::input)?;
        Ok(Self {
            root: root.to_path_buf(),
            header,
        })
    }

    pub fn file(&self, name: &str) -> Result<Box<dyn Write>, Failure> {
        open(Some(&self.root.join(name)), &self.header)
    }
}

pub fn parse_weights(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated weights, got `{text}`"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("cannot parse weight `{p}`"))?;
    }
    Ok(out)
}

pub fn parse_seed(text: &str) -> Result<u64, String> {
    pgi_lab::abm::config::parse_seed(text).ok_or_else(|| format!("cannot parse seed `{text}`"))
}
