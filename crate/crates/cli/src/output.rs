//! CSV tables with a commented provenance header, written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

/// One figure's data. Cells are already formatted; an empty cell means the
/// value is undefined at that point.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct Header<'a> {
    pub figure_id: &'a str,
    pub config_sha256: &'a str,
    pub seed: u64,
}

/// Writes `<dir>/<figure_id>.csv` through a temporary file in the same
/// directory, so readers never see a partial table.
pub fn write_table(dir: &Path, header: &Header<'_>, table: &Table) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.csv", header.figure_id));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let file = tmp.as_file_mut();
        writeln!(file, "# figure_id: {}", header.figure_id)?;
        writeln!(file, "# config_sha256: {}", header.config_sha256)?;
        writeln!(file, "# seed: {}", header.seed)?;
        writeln!(file, "# version: onebit-mimo {}", onebit_mimo::VERSION)?;
        let mut w = csv::Writer::from_writer(&mut *file);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    // Temporary files are created owner-only.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| CliError::Io(e.error))?;
    Ok(path)
}

#[cfg(test)]
/// Parses a table written by [`write_table`], skipping the header comments.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut table = Table::new(&r.headers()?.iter().collect::<Vec<_>>());
    for rec in r.records() {
        table.rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(table)
}
