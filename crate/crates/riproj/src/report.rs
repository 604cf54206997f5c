//! Deterministic report emission: CSV (comma-separated, header row, LF
//! line endings), line-delimited JSON, and `key = value` manifests.
//! Floating-point cells carry 10 significant digits, and every extended
//! real is paired with a provenance status so a downstream reader never
//! has to guess whether a number is exact, a one-sided bracket, or an
//! infinity spelled out.

use std::io::Write as _;
use std::path::Path;

use crate::divergence::GainStatus;
use crate::xreal::ExtReal;
use crate::Result;

/// Formats with 10 significant digits (scientific, so the precision is
/// uniform across magnitudes). Infinities and the undefined sentinel get
/// fixed spellings; negative zero collapses to zero so equal values
/// always produce equal bytes.
pub fn sig10(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x == f64::INFINITY {
        return "inf".into();
    }
    if x == f64::NEG_INFINITY {
        return "-inf".into();
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.9e}")
}

/// Cell text plus provenance status for an extended real.
pub fn ext_cell(v: ExtReal) -> (String, &'static str) {
    match v {
        ExtReal::Finite(x) => (sig10(x), "exact"),
        ExtReal::PosInf => ("inf".into(), "diverged"),
        ExtReal::NegInf => ("-inf".into(), "diverged"),
        ExtReal::Undefined => ("nan".into(), "undefined"),
    }
}

/// Cell text plus status for a plain float whose computation may have
/// dropped a grid tail.
pub fn finite_cell(x: f64, truncated: bool) -> (String, &'static str) {
    (sig10(x), if truncated { "truncated" } else { "exact" })
}

/// The status word for a hull-gain result.
pub fn gain_status_str(s: GainStatus) -> &'static str {
    match s {
        GainStatus::Exact => "exact",
        GainStatus::LowerBound => "lower_bound",
        GainStatus::Diverged => "diverged",
        GainStatus::Undefined => "undefined",
    }
}

/// An in-memory CSV table; rows are built in a fixed order and written in
/// one pass, so identical inputs give identical bytes.
#[derive(Debug, Clone)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; its width must match the header.
    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "csv row width");
        debug_assert!(
            row.iter().all(|c| !c.contains(',') && !c.contains('\n')),
            "csv cells must not need quoting"
        );
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())
        })?;
        out.push_str(&line);
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes `key = value` lines in the given order.
pub fn write_manifest(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut out = String::new();
    for (key, value) in entries {
        out.push_str(&format!("{key} = {value}\n"));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits_round_trip_within_tolerance() {
        for &x in &[
            std::f64::consts::LN_2,
            1.0 / 3.0,
            6.842122293224974e-1,
            -4.000008000021e-6,
            1.0e-300,
            9.999999999e9,
        ] {
            let s = sig10(x);
            let back: f64 = s.parse().unwrap();
            assert!(
                (back - x).abs() <= x.abs() * 1e-9,
                "{x} -> {s} -> {back}"
            );
        }
        assert_eq!(sig10(0.0), sig10(-0.0));
        assert_eq!(sig10(f64::INFINITY), "inf");
        assert_eq!(sig10(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig10(f64::NAN), "nan");
    }

    #[test]
    fn extended_real_cells_carry_status() {
        assert_eq!(ext_cell(ExtReal::Finite(1.0)).1, "exact");
        assert_eq!(ext_cell(ExtReal::PosInf), ("inf".into(), "diverged"));
        assert_eq!(ext_cell(ExtReal::NegInf), ("-inf".into(), "diverged"));
        assert_eq!(ext_cell(ExtReal::Undefined), ("nan".into(), "undefined"));
        assert_eq!(finite_cell(2.0, true).1, "truncated");
        assert_eq!(finite_cell(2.0, false).1, "exact");
    }

    #[test]
    fn csv_layout_is_comma_header_lf() {
        let mut csv = Csv::new(&["k", "value", "status"]);
        csv.push(vec!["1".into(), sig10(0.5), "exact".into()]);
        csv.push(vec!["2".into(), "inf".into(), "diverged".into()]);
        let text = csv.to_text();
        assert_eq!(
            text,
            "k,value,status\n1,5.000000000e-1,exact\n2,inf,diverged\n"
        );
        assert!(!text.contains('\r'));
    }

    #[test]
    fn jsonl_and_manifest_forms() {
        let dir = std::env::temp_dir().join(format!("riproj-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        #[derive(serde::Serialize)]
        struct Row {
            k: usize,
            v: f64,
        }
        let jl = dir.join("rows.jsonl");
        write_jsonl(&jl, &[Row { k: 1, v: 0.5 }, Row { k: 2, v: 1.5 }]).unwrap();
        let text = std::fs::read_to_string(&jl).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| l.starts_with('{') && l.ends_with('}')));

        let mf = dir.join("MANIFEST");
        write_manifest(
            &mf,
            &[("seed", "42".to_string()), ("command", "rate".to_string())],
        )
        .unwrap();
        assert_eq!(
            std::fs::read_to_string(&mf).unwrap(),
            "seed = 42\ncommand = rate\n"
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
