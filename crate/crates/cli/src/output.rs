//! Self-describing artifacts: every file carries the code version and the
//! resolved configuration.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use levywalk::config::ExperimentConfig;
use levywalk::{Result, VERSION};
use serde::Serialize;

pub struct Artifacts<'a> {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    generator: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    report: &'a T,
}

impl<'a> Artifacts<'a> {
    pub fn new(dir: &Path, command: &'static str, config: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config,
        })
    }

    /// CSV with two leading `#` lines (version, config as JSON), then the
    /// header row and data written by `body`.
    pub fn csv<F>(&self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "# levywalk {VERSION} {}", self.command)?;
        let config = serde_json::to_string(self.config).map_err(std::io::Error::other)?;
        writeln!(out, "# config {config}")?;
        body(&mut out)?;
        out.flush()?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, report: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let envelope = Envelope {
            generator: "levywalk",
            version: VERSION,
            command: self.command,
            config: self.config,
            report,
        };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
