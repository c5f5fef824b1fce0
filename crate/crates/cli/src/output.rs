use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bnstruct::numeric::SquareMatrix;
use serde::Serialize;

use crate::args::Format;
use crate::error::CliError;

/// Output files staged in memory and written together at the end of a run,
/// so a failing run leaves nothing behind.
pub struct Outputs {
    dir: PathBuf,
    format: Format,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path, format: Format) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: impl Into<String>, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(bnstruct::Error::from)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    /// Writes a matrix as `<stem>.csv`, or `<stem>.json` (nested arrays)
    /// under `--format json`.
    pub fn matrix(&mut self, stem: &str, m: &SquareMatrix) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                self.add(format!("{stem}.csv"), m.to_csv());
                Ok(())
            }
            Format::Json => self.json(format!("{stem}.json"), &m.to_rows()),
        }
    }

    /// Writes each file to a temporary name, then renames them all into
    /// place. Temporaries are removed if any write fails.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let target = self.dir.join(name);
            let tmp = self.dir.join(format!(".{name}.tmp"));
            let written = fs::File::create(&tmp)
                .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()));
            if let Err(e) = written {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(io_err(&tmp, e));
            }
            staged.push((tmp, target));
        }
        for (tmp, target) in &staged {
            fs::rename(tmp, target).map_err(|e| io_err(target, e))?;
        }
        Ok(staged.into_iter().map(|(_, t)| t).collect())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Lib(bnstruct::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Line-per-row CSV with a header.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
