//! Output directory with a sentinel lock, and writers for the report files.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::Failure;

pub const LOCK_FILE: &str = ".lock";

/// An output directory held for the lifetime of the value.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    pub fn acquire(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::Io(format!("cannot create {}: {e}", root.display())))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputDir { root: root.to_path_buf(), lock })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Failure::Locked(lock)),
            Err(e) => Err(Failure::Io(format!("cannot create {}: {e}", lock.display()))),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// CSV body preceded by a `# seed = N` comment line.
    pub fn write_csv(&self, name: &str, seed: u64, body: &str) -> Result<PathBuf, Failure> {
        self.write_text(name, &format!("# seed = {seed}\n{body}"))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
