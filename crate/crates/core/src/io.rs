//! CSV ingestion of tabulated spectra and modulator masks, plus the fixed
//! number formatting and atomic file writes shared by all exporters.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Fixed 9-significant-digit scientific formatting used for every CSV value.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        // avoid "-0.00000000e0"
        return "0.00000000e0".to_string();
    }
    format!("{v:.8e}")
}

/// Column-tagged numeric table read from CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Reads a header-tagged numeric CSV. Lines starting with `#` are comments.
/// `accepted` lists the allowed header sets, e.g. `[&["x", "re"], &["x", "re", "im"]]`.
pub fn read_table(path: &Path, accepted: &[&[&str]]) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    parse_table(&text, path, accepted)
}

pub(crate) fn parse_table(text: &str, path: &Path, accepted: &[&[&str]]) -> Result<Table> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header_record = reader
        .headers()
        .map_err(|e| parse_err(e.position().map_or(1, |p| p.line()), e.to_string()))?
        .clone();
    let headers: Vec<String> = header_record.iter().map(|h| h.to_ascii_lowercase()).collect();
    let header_line = header_record.position().map_or(1, |p| p.line());
    if !accepted
        .iter()
        .any(|set| set.len() == headers.len() && set.iter().zip(&headers).all(|(a, b)| a == b))
    {
        let options: Vec<String> = accepted.iter().map(|s| s.join(",")).collect();
        return Err(parse_err(
            header_line,
            format!(
                "unexpected header `{}`; expected one of: {}",
                headers.join(","),
                options.join(" | ")
            ),
        ));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", headers.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("`{field}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
