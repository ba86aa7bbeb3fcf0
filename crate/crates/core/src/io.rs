//! CSV and JSON artifacts, each carrying a provenance block.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Identifies the code version, configuration and seed behind an artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_sha256: String, seed: u64) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
            seed,
        }
    }
}

/// Writes artifacts into one directory.
#[derive(Clone, Debug)]
pub struct ArtifactWriter {
    pub dir: PathBuf,
    pub provenance: Provenance,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    data: &'a T,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            provenance,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// CSV with `#`-prefixed provenance lines before the header row.
    pub fn csv<R, I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        R: IntoIterator<Item = String>,
        I: IntoIterator<Item = R>,
    {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path)?);
        let p = &self.provenance;
        writeln!(f, "# {} {}", p.tool, p.version)?;
        writeln!(f, "# config_sha256 {}", p.config_sha256)?;
        writeln!(f, "# seed {}", p.seed)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Pretty JSON `{"provenance": …, "data": …}`.
    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut f = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(
            &mut f,
            &Envelope {
                provenance: &self.provenance,
                data,
            },
        )?;
        writeln!(f)?;
        f.flush()?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Empty cell for missing values.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
