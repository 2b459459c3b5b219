//! Feature matrix and ranking files.
//!
//! Feature matrix: header `origin,<feature>__<axis>__<location>,...`, one row
//! per window tagged `user/activity/session/window_index`.
//! Ranking: header `rank,feature,axis,location,score`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{FeatureDescriptor, FeatureError, FeatureVector, RankedFeatures};

pub fn write_feature_matrix<W: Write>(out: &mut W, rows: &[FeatureVector]) -> Result<(), FeatureError> {
    let Some(first) = rows.first() else {
        return Err(FeatureError::EmptyMatrix);
    };
    write!(out, "origin")?;
    for c in &first.columns {
        write!(out, ",{}", c.column_name())?;
    }
    writeln!(out)?;
    for r in rows {
        if r.columns != first.columns {
            return Err(FeatureError::DimensionMismatch { expected: first.columns.len(), got: r.columns.len() });
        }
        write!(out, "{}", r.origin.tag())?;
        for v in &r.values {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_feature_matrix(path: &Path, rows: &[FeatureVector]) -> Result<(), FeatureError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_feature_matrix(&mut out, rows)?;
    out.flush()?;
    Ok(())
}

/// A feature matrix as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<FeatureDescriptor>,
    pub origins: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn load_feature_matrix(path: &Path) -> Result<FeatureTable, FeatureError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or(FeatureError::EmptyMatrix)??;
    let mut fields = header.split(',');
    if fields.next() != Some("origin") {
        return Err(FeatureError::Malformed("first header column must be `origin`".into()));
    }
    let columns = fields
        .map(FeatureDescriptor::parse_column_name)
        .collect::<Result<Vec<_>, _>>()
        .map_err(FeatureError::Malformed)?;
    let mut origins = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        origins.push(fields.next().unwrap_or_default().to_string());
        let row = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| FeatureError::Malformed(format!("row {}", i + 1)))?;
        if row.len() != columns.len() {
            return Err(FeatureError::Malformed(format!("row {} has {} values", i + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(FeatureTable { columns, origins, rows })
}

/// Writes the first `limit` entries (all when `None`).
pub fn write_ranking<W: Write>(out: &mut W, ranked: &RankedFeatures, limit: Option<usize>) -> Result<(), FeatureError> {
    writeln!(out, "rank,feature,axis,location,score")?;
    let n = limit.unwrap_or(ranked.len()).min(ranked.len());
    for (i, e) in ranked.entries[..n].iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{:.4}",
            i + 1,
            e.descriptor.kind.name(),
            e.descriptor.axis,
            e.descriptor.location.file_stem(),
            e.score
        )?;
    }
    Ok(())
}

/// Three-column layout of the ranking table, e.g.
/// `Mean Squared Error (LRC, Z) & 0.0358 & ...`.
pub fn ranking_table(ranked: &RankedFeatures, limit: usize) -> String {
    let n = limit.min(ranked.len());
    let rows_per_col = n.div_ceil(3);
    let mut out = String::new();
    for r in 0..rows_per_col {
        let cells: Vec<String> = (0..3)
            .filter_map(|c| ranked.entries[..n].get(c * rows_per_col + r))
            .map(|e| format!("{:<48} {:>7.4}", e.descriptor.table_label(), e.score))
            .collect();
        out.push_str(cells.join("  |  ").trim_end());
        out.push('\n');
    }
    out
}
