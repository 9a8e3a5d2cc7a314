//! On-disk forms of sweep results.
//!
//! * raw records: one row per trial, as CSV and JSON-lines;
//! * per-cell summary CSV;
//! * heatmap CSVs, one file per (statistic, site, swarm size, variant),
//!   with a header row of black-informed proportions and a leading column
//!   of informed proportions;
//! * histogram CSV for the symmetry-breaking experiment.

use super::{CellSummary, SummaryTable, SymmetryBreakingResult, TrialRecord};
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub fn write_records_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize::<TrialRecord>() {
        match row {
            Ok(record) => records.push(record),
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or_default();
                return Err(Error::MalformedRecord {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::EmptySample("raw results file has no records"));
    }
    Ok(records)
}

pub fn write_records_jsonl(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut writer, record)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_jsonl(path: &Path) -> Result<Vec<TrialRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: index as u64 + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::EmptySample("raw results file has no records"));
    }
    Ok(records)
}

/// Reads raw records, choosing the format from the file extension
/// (`.jsonl` / `.ndjson` as JSON-lines, anything else as CSV).
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => read_records_jsonl(path),
        _ => read_records_csv(path),
    }
}

pub fn write_summary_csv(path: &Path, summary: &SummaryTable) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writeln!(
        writer,
        "swarm_size,rho_informed,rho_black,variant,trials,\
         median_black,median_white,iqr_black,iqr_white"
    )?;
    for cell in &summary.cells {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{}",
            cell.cell.swarm_size,
            cell.cell.rho_informed,
            cell.cell.rho_black,
            cell.cell.variant,
            cell.trials,
            cell.median_black,
            cell.median_white,
            cell.iqr_black,
            cell.iqr_white,
        )?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes one heatmap CSV per (statistic, site, swarm size, variant)
/// present in the summary and returns the written paths. Rows are informed
/// proportions, columns are black-informed proportions; cells without data
/// stay empty.
pub fn write_heatmap_csvs(dir: &Path, summary: &SummaryTable) -> Result<Vec<PathBuf>> {
    let sizes: BTreeSet<u32> = summary.cells.iter().map(|c| c.cell.swarm_size).collect();
    let variants: BTreeSet<&str> = summary
        .cells
        .iter()
        .map(|c| c.cell.variant.as_str())
        .collect();
    let mut written = Vec::new();
    for &size in &sizes {
        for variant in &variants {
            let group: Vec<&CellSummary> = summary
                .cells
                .iter()
                .filter(|c| c.cell.swarm_size == size && c.cell.variant == *variant)
                .collect();
            if group.is_empty() {
                continue;
            }
            let rows: BTreeSet<u64> = group
                .iter()
                .map(|c| c.cell.rho_informed.to_bits())
                .collect();
            let cols: BTreeSet<u64> = group.iter().map(|c| c.cell.rho_black.to_bits()).collect();
            for (stat, site) in [
                ("median", "black"),
                ("median", "white"),
                ("iqr", "black"),
                ("iqr", "white"),
            ] {
                let path = dir.join(format!("{stat}_{site}_n{size}_{variant}.csv"));
                let mut writer = BufWriter::new(File::create(&path)?);
                write!(writer, "rho_informed")?;
                for &col in &cols {
                    write!(writer, ",{}", f64::from_bits(col))?;
                }
                writeln!(writer)?;
                for &row in &rows {
                    write!(writer, "{}", f64::from_bits(row))?;
                    for &col in &cols {
                        let value = group.iter().find(|c| {
                            c.cell.rho_informed.to_bits() == row
                                && c.cell.rho_black.to_bits() == col
                        });
                        match value {
                            Some(c) => {
                                let v = match (stat, site) {
                                    ("median", "black") => c.median_black,
                                    ("median", "white") => c.median_white,
                                    ("iqr", "black") => c.iqr_black,
                                    _ => c.iqr_white,
                                };
                                write!(writer, ",{v}")?;
                            }
                            None => write!(writer, ",")?,
                        }
                    }
                    writeln!(writer)?;
                }
                writer.flush()?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

pub fn write_histogram_csv(path: &Path, result: &SymmetryBreakingResult) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    writeln!(writer, "site_count,frequency")?;
    for &(count, frequency) in &result.histogram {
        writeln!(writer, "{count},{frequency}")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{summarize, CellKey};

    fn sample_records() -> Vec<TrialRecord> {
        (0..4)
            .map(|i| TrialRecord {
                swarm_size: 50,
                rho_informed: 0.3,
                rho_black: if i < 2 { 0.5 } else { 1.0 },
                variant: "simplified".into(),
                trial_index: i % 2,
                seed: 100 + u64::from(i),
                on_black: 20 + i,
                on_white: 25 - i,
                elsewhere: 5,
            })
            .collect()
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("raw.csv");
        let records = sample_records();
        write_records_csv(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-j{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("raw.jsonl");
        let records = sample_records();
        write_records_jsonl(&path, &records).unwrap();
        assert_eq!(read_records(&path).unwrap(), records);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_record_errors_name_the_line() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-m{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("raw.csv");
        std::fs::write(
            &path,
            "swarm_size,rho_informed,rho_black,variant,trial_index,seed,on_black,on_white,elsewhere\n\
             50,0.3,0.5,simplified,0,1,20,25,5\n\
             50,not-a-number,0.5,simplified,1,2,20,25,5\n",
        )
        .unwrap();
        match read_records(&path) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed-record error, got {other:?}"),
        }

        let empty = dir.join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(read_records(&empty).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn heatmaps_cover_the_grid() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-h{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let summary = summarize(&sample_records()).unwrap();
        let written = write_heatmap_csvs(&dir, &summary).unwrap();
        assert_eq!(written.len(), 4);
        let median_black = std::fs::read_to_string(dir.join("median_black_n50_simplified.csv"))
            .unwrap();
        let mut lines = median_black.lines();
        assert_eq!(lines.next().unwrap(), "rho_informed,0.5,1");
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.3,"), "{row}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn summary_csv_layout() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-s{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let summary = summarize(&sample_records()).unwrap();
        let path = dir.join("summary.csv");
        write_summary_csv(&path, &summary).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + summary.cells.len());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn histogram_csv_layout() {
        let dir = std::env::temp_dir().join(format!("aggsim-files-g{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let result = SymmetryBreakingResult {
            histogram: vec![(2, 1), (93, 1)],
            offsite_median: 5.0,
            offsite_iqr: 0.0,
            records: vec![],
        };
        let path = dir.join("histogram.csv");
        write_histogram_csv(&path, &result).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "site_count,frequency\n2,1\n93,1\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn record_cell_roundtrip() {
        let record = &sample_records()[0];
        assert_eq!(
            record.cell(),
            CellKey {
                swarm_size: 50,
                rho_informed: 0.3,
                rho_black: 0.5,
                variant: "simplified".into(),
            }
        );
    }
}
