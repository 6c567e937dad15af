//! Text formatting and atomic file output shared by the CSV and model writers.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// 12 significant digits; enough for data CSVs to round-trip through text
/// (parse-then-reformat is a fixed point).
pub(crate) fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// 17 significant digits; round-trips every finite f64 exactly. Used by the
/// model file.
pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn parse_f64(tok: &str, path: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("expected a number, got {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(v)
}

/// Write `contents` to `path` via a temp file in the same directory plus an
/// atomic rename, so an interrupted run never leaves a truncated file.
pub(crate) fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let display = path.display().to_string();
    let io_err = |source| Error::Io {
        path: display.clone(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_is_reparse_stable() {
        for &x in &[0.0, 1.0, -0.5, 1234.5678, 1e-9, -3.25e17] {
            let s = fmt12(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(fmt12(y), s);
        }
    }

    #[test]
    fn fmt17_round_trips_exactly() {
        for &x in &[0.1, 1.0 / 3.0, std::f64::consts::PI, 2.5e-308, -7.75] {
            let y: f64 = fmt17(x).parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, "first").unwrap();
        atomic_write(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
    }
}
