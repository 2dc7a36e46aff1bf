use std::io::{Read, Write};
use std::path::Path;

use crate::human::Phase;

pub const HEADER: [&str; 13] =
    ["t", "cop_x", "dz_lo", "dz_hi", "f_x", "f_y", "f_z", "ee_x", "ee_z", "ref_x", "ref_z", "elbow", "phase"];

/// Rounds to six significant digits.
///
/// Logged values are stored already rounded so that metrics recomputed from
/// a persisted CSV match the in-memory result exactly.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn fmt_sig6(x: f64) -> String {
    let r = sig6(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub cop_x: f64,
    pub dz_lo: f64,
    pub dz_hi: f64,
    pub f: [f64; 3],
    pub ee_x: f64,
    pub ee_z: f64,
    pub ref_x: f64,
    pub ref_z: f64,
    pub elbow: f64,
    pub phase: Phase,
}

impl LogRow {
    pub fn quantized(self) -> Self {
        Self {
            t: sig6(self.t),
            cop_x: sig6(self.cop_x),
            dz_lo: sig6(self.dz_lo),
            dz_hi: sig6(self.dz_hi),
            f: self.f.map(sig6),
            ee_x: sig6(self.ee_x),
            ee_z: sig6(self.ee_z),
            ref_x: sig6(self.ref_x),
            ref_z: sig6(self.ref_z),
            elbow: sig6(self.elbow),
            phase: self.phase,
        }
    }

    /// Sagittal distance of the CoP from the DZ interval.
    pub fn dz_distance(&self) -> f64 {
        (self.dz_lo - self.cop_x).max(0.0).max(self.cop_x - self.dz_hi)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialLog {
    pub period: f64,
    pub rows: Vec<LogRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected header")]
    Header,
    #[error("row {0}: {1}")]
    Row(usize, String),
    #[error("log is empty")]
    Empty,
}

impl TrialLog {
    pub fn new(period: f64) -> Self {
        Self { period, rows: Vec::new() }
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row.quantized());
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), LogError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(HEADER)?;
        for r in &self.rows {
            let vals =
                [r.t, r.cop_x, r.dz_lo, r.dz_hi, r.f[0], r.f[1], r.f[2], r.ee_x, r.ee_z, r.ref_x, r.ref_z, r.elbow];
            let mut rec: Vec<String> = vals.iter().map(|v| fmt_sig6(*v)).collect();
            rec.push(r.phase.name().to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), LogError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, LogError> {
        let mut rd = csv::Reader::from_reader(r);
        if rd.headers()?.iter().collect::<Vec<_>>() != HEADER {
            return Err(LogError::Header);
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64, LogError> {
                rec.get(k).unwrap_or("").parse::<f64>().map_err(|e| LogError::Row(i, e.to_string()))
            };
            let phase = Phase::parse(rec.get(12).unwrap_or("")).ok_or_else(|| LogError::Row(i, "bad phase".into()))?;
            rows.push(LogRow {
                t: num(0)?,
                cop_x: num(1)?,
                dz_lo: num(2)?,
                dz_hi: num(3)?,
                f: [num(4)?, num(5)?, num(6)?],
                ee_x: num(7)?,
                ee_z: num(8)?,
                ref_x: num(9)?,
                ref_z: num(10)?,
                elbow: num(11)?,
                phase,
            });
        }
        if rows.is_empty() {
            return Err(LogError::Empty);
        }
        let period = if rows.len() > 1 { rows[1].t - rows[0].t } else { 0.0 };
        Ok(Self { period, rows })
    }

    pub fn load(path: &Path) -> Result<Self, LogError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
