use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SweepConfig;

/// One `(cell, statistic)` line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub q: f64,
    pub stat: String,
    pub power: f64,
    pub power_se: f64,
    pub null_lo: f64,
    pub null_hi: f64,
    pub h1_mean: f64,
    /// Seed of the cell's alternative draws.
    pub seed: u64,
}

pub const CSV_HEADER: [&str; 9] = ["d", "q", "stat", "power", "power_se", "null_lo", "null_hi", "h1_mean", "seed"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub null_seconds: f64,
    pub alternative_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub version: String,
    pub threads: usize,
    pub timings: Timings,
    pub rows: Vec<SweepRow>,
}

/// Everything in the result except the rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: SweepConfig,
    pub version: String,
    pub threads: usize,
    pub timings: Timings,
    pub cells: usize,
}

impl SweepResult {
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            config: self.config.clone(),
            version: self.version.clone(),
            threads: self.threads,
            timings: self.timings.clone(),
            cells: self.rows.len(),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Format(format!("unexpected sweep header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let row: SweepRow = rec?;
        if !(0.0..=1.0).contains(&row.power) {
            return Err(Error::Format(format!("row {}: power {} outside [0, 1]", i + 1, row.power)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// `results.csv` gets its sidecar at `results.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

/// Writes the CSV table and its JSON sidecar.
pub fn write_outputs(result: &SweepResult, output: &Path) -> Result<PathBuf> {
    let file = std::fs::File::create(output)?;
    write_csv(&result.rows, std::io::BufWriter::new(file))?;
    let side = sidecar_path(output);
    if side == output {
        return Err(Error::invalid("the CSV output must not have a .json extension"));
    }
    std::fs::write(&side, serde_json::to_string_pretty(&result.sidecar())? + "\n")?;
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SweepRow> {
        vec![
            SweepRow {
                d: 20,
                q: 0.1,
                stat: "c4".into(),
                power: 0.935,
                power_se: (0.935f64 * 0.065 / 200.0).sqrt(),
                null_lo: -1234.5678901234,
                null_hi: 1e-7,
                h1_mean: 1.0 / 3.0,
                seed: u64::MAX,
            },
            SweepRow {
                d: 1,
                q: 1.0,
                stat: "wedge-masked".into(),
                power: 0.0,
                power_se: 0.0,
                null_lo: 0.0,
                null_hi: 0.0,
                h1_mean: -0.0,
                seed: 0,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let first = csv_string(&rows()).unwrap();
        assert!(first.starts_with("d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed\n"));
        let parsed = read_csv(first.as_bytes()).unwrap();
        assert_eq!(parsed, rows());
        assert_eq!(csv_string(&parsed).unwrap(), first);
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = "d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed\n1,1,c4,1.5,0,0,0,0,0\n";
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Format(_))));
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert_eq!(csv_string(&[]).unwrap(), CSV_HEADER.join(",") + "\n");
    }
}
