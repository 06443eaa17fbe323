//! CSV tables and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::{FracError, Result};

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a header row and `\n` line endings.
pub fn csv_table(header: &[String], columns: &[Vec<f64>]) -> Result<String> {
    if header.len() != columns.len() {
        return Err(FracError::Usage("header and column counts differ".into()));
    }
    let rows = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != rows) {
        return Err(FracError::Usage("columns have different lengths".into()));
    }
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_float(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Pretty JSON followed by a newline.
pub fn json_text<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| FracError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn table_layout() {
        let t = csv_table(&["r".into(), "u".into()], &[vec![0.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let lines: Vec<&str> = t.split('\n').collect();
        assert_eq!(lines[0], "r,u");
        assert_eq!(lines.len(), 4);
        assert!(t.ends_with('\n') && !t.contains('\r'));
        assert!(csv_table(&["r".into()], &[vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
