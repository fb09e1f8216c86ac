//! Configuration files, absorption spectra and result tables.

mod config;
mod kappa;
mod output;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use config::{CaseKind, KappaSource, ProfileSpec, RunConfig, NU_MAX, NU_MIN, NU_NODES};
pub use kappa::{frequency_from_um, wavelength_um, Co2Modifier, KappaTable};
pub use output::{
    format_value, write_convergence, write_diagnostic, write_outputs, write_spectra, write_surface, write_temperature,
    OutputFiles, SurfaceChannel, K0_CLAMP,
};

/// Parse whitespace separated numeric rows with exactly `ncols` fields.
/// Blank lines and `#` comments are skipped.
pub fn parse_columns(path: &Path, text: &str, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != ncols {
            return Err(err(format!("expected {ncols} columns, found {}", fields.len())));
        }
        let row = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("not a number: {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_with_comments() {
        let text = "# header\n1 2\n\n 3.5   4e-2 # trailing\n";
        let rows = parse_columns(Path::new("x"), text, 2).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.5, 0.04]]);
    }

    #[test]
    fn malformed_rows_report_line() {
        match parse_columns(Path::new("f.txt"), "1 2\n3 x\n", 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_columns(Path::new("f.txt"), "1 2 3\n", 2).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
