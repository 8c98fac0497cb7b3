//! CSV and JSON emission.
//!
//! CSV files start with `#`-prefixed metadata lines (experiment, config
//! hash, seed), then the header row, then data rows. Floats are serialized
//! with 17 significant digits so values round-trip exactly and reruns are
//! byte-identical.

use std::path::Path;

use crate::CliError;

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(
    path: &Path,
    experiment: &str,
    config_hash: &str,
    seed: u64,
    header: &str,
    rows: &[String],
) -> Result<(), CliError> {
    let mut text = String::new();
    text.push_str(&format!("# experiment: {experiment}\n"));
    text.push_str(&format!("# config_hash: {config_hash}\n"));
    text.push_str(&format!("# seed: {seed}\n"));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [
            0.75,
            1.0 / 3.0,
            std::f64::consts::SQRT_2 - 1.0,
            1e-300,
            4.0e1,
            0.0,
        ] {
            let text = fmt_float(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back, v, "round trip broke for {text}");
        }
    }
}
