//! FoV field files.
//!
//! AFF1: the magic `AFF1`, little-endian `u32` width and height, then
//! `width·height` pairs of little-endian `f32` `(θx, θy)`, row-major from the
//! top-left cell. The CSV variant has one `u,v,theta_x,theta_y` line per
//! cell, `(u, v)` being the cell's pixel center.

use std::collections::BTreeMap;
use std::path::Path;

use raycalib_core::FovField;

use crate::error::{self, CliError, Result};

pub const AFF1_MAGIC: &[u8; 4] = b"AFF1";
pub const CSV_HEADER: [&str; 4] = ["u", "v", "theta_x", "theta_y"];

/// Encodes a `cols × rows` grid of 2-vectors.
pub fn encode_aff1(cols: u32, rows: u32, values: &[[f64; 2]]) -> Vec<u8> {
    debug_assert_eq!(values.len(), cols as usize * rows as usize);
    let mut out = Vec::with_capacity(12 + 8 * values.len());
    out.extend_from_slice(AFF1_MAGIC);
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    for v in values {
        out.extend_from_slice(&(v[0] as f32).to_le_bytes());
        out.extend_from_slice(&(v[1] as f32).to_le_bytes());
    }
    out
}

/// Grid size and values of an AFF1 buffer.
pub fn decode_aff1(bytes: &[u8]) -> std::result::Result<(u32, u32, Vec<[f64; 2]>), String> {
    if bytes.len() < 12 || &bytes[..4] != AFF1_MAGIC {
        return Err("missing AFF1 header".into());
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    let (w, h) = (word(4), word(8));
    let n = w as usize * h as usize;
    let body = &bytes[12..];
    if body.len() != 8 * n {
        return Err(format!("expected {} bytes of data for {w}x{h}, found {}", 8 * n, body.len()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| {
            let x = f32::from_le_bytes(c[..4].try_into().unwrap());
            let y = f32::from_le_bytes(c[4..].try_into().unwrap());
            [x as f64, y as f64]
        })
        .collect();
    Ok((w, h, values))
}

/// Writes a field as AFF1. Strided fields store their cell grid.
pub fn aff1_bytes(field: &FovField) -> Vec<u8> {
    encode_aff1(field.cols() as u32, field.rows() as u32, &field.theta)
}

pub fn csv_string(field: &FovField) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for (px, t) in field.cells() {
        w.serialize((px.u, px.v, t[0], t[1])).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses the CSV variant. Cells must form a complete grid of pixel
/// centers `(i·s + 0.5, j·s + 0.5)`; the stride `s` is inferred.
pub fn parse_csv(text: &str) -> std::result::Result<FovField, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != 4 {
            return Err(format!("line {}: expected 4 columns", k + 1));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push([v[0], v[1], v[2], v[3]]),
            Err(_) if k == 0 => continue, // header
            Err(e) => return Err(format!("line {}: {e}", k + 1)),
        }
    }
    if rows.is_empty() {
        return Err("no cells".into());
    }
    let stride = infer_stride(rows.iter().map(|r| r[0]).chain(rows.iter().map(|r| r[1])));
    let index = |x: f64| -> std::result::Result<usize, String> {
        let i = (x - 0.5) / stride as f64;
        if i < -1e-6 || (i - i.round()).abs() > 1e-6 {
            return Err(format!("{x} is not a pixel center on a stride-{stride} grid"));
        }
        Ok(i.round() as usize)
    };
    let mut cells = BTreeMap::new();
    for r in &rows {
        let (i, j) = (index(r[0])?, index(r[1])?);
        if cells.insert((j, i), [r[2], r[3]]).is_some() {
            return Err(format!("duplicate cell at ({}, {})", r[0], r[1]));
        }
    }
    let cols = cells.keys().map(|&(_, i)| i).max().unwrap() + 1;
    let nrows = cells.keys().map(|&(j, _)| j).max().unwrap() + 1;
    if cells.len() != cols * nrows {
        return Err(format!("incomplete grid: {} of {}x{} cells", cells.len(), cols, nrows));
    }
    let theta = cells.into_values().collect();
    let (w, h) = ((cols as u32) * stride, (nrows as u32) * stride);
    FovField::with_stride(w, h, stride, theta).map_err(|e| e.to_string())
}

fn infer_stride(coords: impl Iterator<Item = f64>) -> u32 {
    let mut c: Vec<f64> = coords.collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c.windows(2)
        .map(|w| w[1] - w[0])
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .map_or(1, |d| d.round().max(1.0) as u32)
}

/// Reads an AFF1 or CSV field, telling them apart by the magic bytes.
pub fn read_field(path: &Path) -> Result<FovField> {
    let bytes = error::read(path)?;
    if bytes.starts_with(AFF1_MAGIC) {
        let (w, h, theta) = decode_aff1(&bytes).map_err(|m| CliError::parse(path, m))?;
        Ok(FovField::new(w, h, theta)?)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| CliError::parse(path, "neither AFF1 nor UTF-8 CSV"))?;
        parse_csv(&text).map_err(|m| CliError::parse(path, m))
    }
}

/// Writes a field; `.csv` paths get the CSV variant, anything else AFF1.
pub fn write_field(path: &Path, field: &FovField) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        error::write(path, csv_string(field)?)
    } else {
        error::write(path, aff1_bytes(field))
    }
}
