//! Plain CSV reading and writing.
//!
//! The documented schema is simple: a header row, comma separators, no
//! quoting, empty cells for missing values. Exposure files carry the five
//! metal columns plus `sex`; dataset files optionally add a response column.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bkmr_core::dataset::{ExposureDataset, Stratum};
use bkmr_core::design::METALS;
use bkmr_core::linalg::Matrix;

/// A raw exposure table: metal concentrations (NaN for missing) plus the
/// stratum column, in file order.
#[derive(Debug)]
pub struct RawExposures {
    pub values: Matrix,
    pub sex: Vec<Stratum>,
    pub names: Vec<String>,
}

fn split_line(line: &str) -> Vec<&str> {
    line.trim_end_matches(['\r', '\n']).split(',').map(str::trim).collect()
}

/// Reads a raw exposure CSV: header with the five metal names and `sex`, in
/// any column order; empty metal cells mean missing.
pub fn read_raw_exposures(path: &Path) -> Result<RawExposures> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading csv {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("csv {} is empty", path.display()))?;
    let columns = split_line(header);
    let mut metal_cols = Vec::with_capacity(METALS.len());
    for metal in METALS {
        let idx = columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(metal))
            .ok_or_else(|| anyhow!("csv {} is missing column {metal:?}", path.display()))?;
        metal_cols.push(idx);
    }
    let sex_col = columns
        .iter()
        .position(|c| c.eq_ignore_ascii_case("sex"))
        .ok_or_else(|| anyhow!("csv {} is missing column \"sex\"", path.display()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut sex = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != columns.len() {
            bail!(
                "csv {} line {}: {} fields, header has {}",
                path.display(),
                lineno + 2,
                fields.len(),
                columns.len()
            );
        }
        let mut row = Vec::with_capacity(METALS.len());
        for (&col, metal) in metal_cols.iter().zip(METALS.iter()) {
            let cell = fields[col];
            if cell.is_empty() {
                row.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().with_context(|| {
                    format!("csv {} line {}: bad {metal} value {cell:?}", path.display(), lineno + 2)
                })?;
                row.push(v);
            }
        }
        let stratum = Stratum::parse(fields[sex_col])
            .map_err(|e| anyhow!("csv {} line {}: {e}", path.display(), lineno + 2))?;
        rows.push(row);
        sex.push(stratum);
    }
    if rows.is_empty() {
        bail!("csv {} has no data rows", path.display());
    }
    Ok(RawExposures {
        values: Matrix::from_rows(&rows).map_err(|e| anyhow!("{e}"))?,
        sex,
        names: METALS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Writes a (transformed-scale) dataset CSV: metals, `sex`, and optionally a
/// response column named `y`.
pub fn write_dataset(path: &Path, data: &ExposureDataset) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    for name in data.names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("sex");
    if data.response().is_some() {
        out.push_str(",y");
    }
    out.push('\n');
    for i in 0..data.n() {
        for v in data.exposures().row(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(data.sex()[i].as_str());
        if let Some(y) = data.response() {
            out.push_str(&format!(",{}", y[i]));
        }
        out.push('\n');
    }
    fs::write(path, out.as_bytes())
        .with_context(|| format!("writing dataset {}", path.display()))?;
    Ok(())
}

/// Reads a dataset CSV produced by [`write_dataset`] (or hand-built to the
/// same schema). When `response_column` is given, that column becomes `y`.
pub fn read_dataset(path: &Path, response_column: Option<&str>) -> Result<ExposureDataset> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading csv {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("csv {} is empty", path.display()))?;
    let columns = split_line(header);

    let mut metal_cols = Vec::with_capacity(METALS.len());
    for metal in METALS {
        let idx = columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(metal))
            .ok_or_else(|| anyhow!("csv {} is missing column {metal:?}", path.display()))?;
        metal_cols.push(idx);
    }
    let sex_col = columns
        .iter()
        .position(|c| c.eq_ignore_ascii_case("sex"))
        .ok_or_else(|| anyhow!("csv {} is missing column \"sex\"", path.display()))?;
    let y_col = match response_column {
        Some(name) => Some(
            columns
                .iter()
                .position(|c| c.eq_ignore_ascii_case(name))
                .ok_or_else(|| anyhow!("csv {} is missing response column {name:?}", path.display()))?,
        ),
        None => None,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut sex = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != columns.len() {
            bail!(
                "csv {} line {}: {} fields, header has {}",
                path.display(),
                lineno + 2,
                fields.len(),
                columns.len()
            );
        }
        let mut row = Vec::with_capacity(METALS.len());
        for &col in &metal_cols {
            let v: f64 = fields[col]
                .parse()
                .with_context(|| format!("csv {} line {}: bad value", path.display(), lineno + 2))?;
            row.push(v);
        }
        sex.push(
            Stratum::parse(fields[sex_col])
                .map_err(|e| anyhow!("csv {} line {}: {e}", path.display(), lineno + 2))?,
        );
        if let Some(col) = y_col {
            let v: f64 = fields[col].parse().with_context(|| {
                format!("csv {} line {}: bad response value", path.display(), lineno + 2)
            })?;
            y.push(v);
        }
        rows.push(row);
    }
    let z = Matrix::from_rows(&rows).map_err(|e| anyhow!("{e}"))?;
    let n = z.rows();
    let response = y_col.map(|_| y);
    ExposureDataset::new(
        z,
        Matrix::zeros(n, 0),
        response,
        sex,
        METALS.iter().map(|s| s.to_string()).collect(),
    )
    .map_err(|e| anyhow!("{e}"))
}

/// Writes a generic table: header plus rows of preformatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out.as_bytes()).with_context(|| format!("writing table {}", path.display()))?;
    Ok(())
}
