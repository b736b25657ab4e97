//! Run manifests: a flat `key = value` text file written next to every
//! output artifact, carrying the fully resolved configuration and seeds
//! needed to reproduce it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Manifest {
        let mut m = Manifest {
            entries: Vec::new(),
        };
        m.push("tool", format!("zggp {}", env!("CARGO_PKG_VERSION")));
        m.push("subcommand", subcommand);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_opt(&mut self, key: &str, value: Option<impl ToString>) {
        match value {
            Some(v) => self.push(key, v),
            None => self.push(key, "none"),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# zggp run manifest\n");
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Writes `<artifact>.manifest` next to the artifact.
    pub fn write_next_to(&self, artifact: &Path) -> io::Result<PathBuf> {
        let mut path = artifact.to_path_buf();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "artifact".to_string());
        path.set_file_name(format!("{name}.manifest"));
        fs::write(&path, self.render())?;
        Ok(path)
    }
}
