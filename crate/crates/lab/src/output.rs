//! CSV export: a `#`-prefixed key=value header, one header row of column
//! names, then data rows. Floats use the shortest round-trip form so
//! identical runs give identical bytes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::LabError;

/// One experiment's output table plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultRecord {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn render_csv(record: &ResultRecord) -> String {
    let mut out = String::new();
    for (k, v) in &record.header {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(&record.columns.join(","));
    out.push('\n');
    for row in &record.rows {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), LabError> {
    let io = |source| LabError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ResultRecord {
        ResultRecord {
            header: vec![("seed".into(), "3".into())],
            columns: vec!["tau".into(), "mean".into()],
            rows: vec![vec![-0.1, 0.25], vec![0.0, 1.0 / 3.0]],
        }
    }

    #[test]
    fn layout() {
        let text = render_csv(&record());
        assert_eq!(text, "# seed=3\ntau,mean\n-0.1,0.25\n0,0.3333333333333333\n");
    }

    #[test]
    fn floats_round_trip() {
        let text = render_csv(&record());
        let last = text.lines().last().unwrap();
        let v: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "old").unwrap();
        write_atomic(&path, "new").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn unwritable_target() {
        let err = write_atomic(Path::new("/nonexistent-dir/x.csv"), "x").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
