//! Output files. Text and CSV files open with `#` comment lines carrying
//! the command, config hash and seed; JSON documents carry the same keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn preamble(&self) -> String {
        format!(
            "# command={}\n# config_hash={}\n# seed={}\n",
            self.command, self.config_hash, self.seed
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    #[serde(flatten)]
    pub stamp: Stamp,
    #[serde(flatten)]
    pub body: T,
}

/// Collects written paths so the command can report them.
pub struct Writer<'a> {
    pub root: &'a Path,
    pub stamp: Stamp,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(root: &'a Path, stamp: Stamp) -> Self {
        Self {
            root,
            stamp,
            written: Vec::new(),
        }
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Text or CSV with the comment preamble; `body` fills the rest.
    pub fn text(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut Vec<u8>) -> deathtoll::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = self.stamp.preamble().into_bytes();
        body(&mut buf).map_err(|source| CliError::Core {
            context: format!("writing {rel}"),
            source,
        })?;
        self.put(rel, &buf)
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, body: &T) -> Result<(), CliError> {
        let doc = Envelope {
            stamp: self.stamp.clone(),
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Document {
            path: self.root.join(rel),
            message: e.to_string(),
        })?;
        text.push('\n');
        self.put(rel, text.as_bytes())
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Envelope<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Document {
        path: path.into(),
        message: e.to_string(),
    })
}
