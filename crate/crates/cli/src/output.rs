//! CSV products and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Twelve significant digits, locale-independent.
pub fn float(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `bytes` to a temporary sibling, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// In-memory table flushed with [`Table::save`].
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn save(self, path: &Path) -> Result<()> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        write_atomic(path, &bytes)
    }
}

/// A CSV read back from disk, with columns looked up by name.
#[derive(Debug)]
pub struct Rows {
    pub path: PathBuf,
    header: Vec<String>,
    pub records: Vec<csv::StringRecord>,
}

impl Rows {
    /// Fails naming the file when it is missing or holds no data rows.
    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            bail!("missing input {}", path.display());
        }
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let records = reader.records().collect::<Result<Vec<_>, _>>()?;
        if records.is_empty() {
            bail!("input {} has no rows", path.display());
        }
        Ok(Rows {
            path: path.to_path_buf(),
            header,
            records,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no column `{name}`", self.path.display()))
    }

    pub fn f64(&self, row: &csv::StringRecord, col: usize) -> Result<f64> {
        let v = row.get(col).unwrap_or("");
        v.parse()
            .with_context(|| format!("{}: cannot parse `{v}` as a number", self.path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_has_twelve_significant_digits() {
        assert_eq!(float(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(float(-1.5e-7), "-1.50000000000e-7");
        assert_eq!(float(float(2.0 / 3.0).parse().unwrap()), float(2.0 / 3.0));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row([float(1.0), "x".into()]).unwrap();
        t.save(&path).unwrap();
        let rows = Rows::read(&path).unwrap();
        let a = rows.column("a").unwrap();
        assert_eq!(rows.f64(&rows.records[0], a).unwrap(), 1.0);
        assert!(rows.column("c").is_err());
        assert!(!dir.path().join(".t.csv.tmp").exists());
    }

    #[test]
    fn empty_or_missing_inputs_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        assert!(Rows::read(&path).unwrap_err().to_string().contains("e.csv"));
        Table::new(&["a"]).unwrap().save(&path).unwrap();
        assert!(Rows::read(&path).is_err());
    }
}
