//! Self-describing solution CSVs.
//!
//! ```text
//! # model=jinxin
//! # N=320
//! x,u,v
//! 1.5625000000000000e-03,9.8017140329560604e-03,6.8611998230692423e-03
//! ```
//!
//! Floats carry 17 significant digits so a write/read cycle is lossless.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::SolutionField;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `contents` to a sibling temp file, then rename it over `path`.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// A parsed solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCsv {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub x: Vec<f64>,
    /// Row-major `x.len() x columns.len()`.
    pub data: Vec<f64>,
}

impl SolutionCsv {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        let d = self.columns.len();
        Some(self.data.chunks_exact(d).map(|r| r[k]).collect())
    }
}

pub fn render_solution_csv(field: &SolutionField, columns: &[String], meta: &[(String, String)]) -> Result<String> {
    if columns.len() != field.n_comp {
        return Err(Error::InvalidParameter(format!(
            "{} column names for {} components",
            columns.len(),
            field.n_comp
        )));
    }
    let mut s = String::new();
    for (k, v) in meta {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s.push('x');
    for c in columns {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for (i, cell) in field.cells().enumerate() {
        s.push_str(&fmt_f64(field.grid.center(i)));
        for v in cell {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write_solution_csv(
    path: &Path,
    field: &SolutionField,
    columns: &[String],
    meta: &[(String, String)],
) -> Result<()> {
    atomic_write(path, &render_solution_csv(field, columns, meta)?)
}

pub fn parse_solution_csv(text: &str) -> Result<SolutionCsv> {
    let mut meta = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut x = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        match &columns {
            None => {
                let mut names = line.split(',').map(|s| s.trim().to_string());
                if names.next().as_deref() != Some("x") {
                    return Err(Error::Parse(format!("line {}: header must start with `x`", lineno + 1)));
                }
                columns = Some(names.collect());
            }
            Some(cols) => {
                let values: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
                let values = values.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                if values.len() != cols.len() + 1 {
                    return Err(Error::Parse(format!(
                        "line {}: expected {} values, found {}",
                        lineno + 1,
                        cols.len() + 1,
                        values.len()
                    )));
                }
                x.push(values[0]);
                data.extend_from_slice(&values[1..]);
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::Parse("missing header line".into()))?;
    Ok(SolutionCsv { meta, columns, x, data })
}

pub fn read_solution_csv(path: &Path) -> Result<SolutionCsv> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;

    #[test]
    fn float_format_is_lossless() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn solution_round_trip() {
        let g = Grid1D::new(0.0, 1.0, 7).unwrap();
        let f = SolutionField::from_point_values(g, 2, |x, c| {
            c[0] = (x * 7.3).sin();
            c[1] = x / 3.0;
        });
        let meta = vec![("model".to_string(), "jinxin".to_string()), ("N".to_string(), "7".to_string())];
        let cols = vec!["u".to_string(), "v".to_string()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_solution_csv(&path, &f, &cols, &meta).unwrap();
        let back = read_solution_csv(&path).unwrap();
        assert_eq!(back.meta, meta);
        assert_eq!(back.meta("N"), Some("7"));
        assert_eq!(back.columns, cols);
        assert_eq!(back.data, f.data);
        assert_eq!(back.x, g.centers());
        assert_eq!(back.column("v").unwrap(), f.component(1));
        // no temp files left behind
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse_solution_csv("x,u\n1,2,3\n").is_err());
        assert!(parse_solution_csv("x,u\n1,abc\n").is_err());
        assert!(parse_solution_csv("# a=b\n").is_err());
        assert!(parse_solution_csv("y,u\n").is_err());
    }

    #[test]
    fn write_to_missing_directory_is_io_error() {
        let f = SolutionField::zeros(Grid1D::new(0.0, 1.0, 4).unwrap(), 1);
        let err = write_solution_csv(Path::new("/nonexistent-dir/x.csv"), &f, &["u".into()], &[]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
