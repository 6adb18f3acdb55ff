use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{IoError, Result};
use crate::dynamics::StepRecord;

pub const RUN_HEADER: [&str; 14] = [
    "step",
    "t",
    "E_total",
    "kinetic",
    "dirichlet",
    "potential",
    "concave",
    "dissipation_integral",
    "ineq_residual",
    "max_abs_u",
    "norm_V_u",
    "norm_H_v",
    "norm_Vprime_v",
    "newton_iters",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run_row(r: &StepRecord) -> Vec<String> {
    let l = &r.ledger;
    let mut row = vec![r.step.to_string()];
    row.extend(
        [
            r.t,
            l.total,
            l.kinetic,
            l.dirichlet,
            l.potential,
            l.concave,
            r.dissipation_integral,
            l.inequality_residual,
            r.max_abs_u,
            r.norm_v_u,
            r.norm_h_v,
            r.norm_vprime_v,
        ]
        .map(fmt),
    );
    row.push(r.newton_iters.to_string());
    row
}

/// Line-oriented CSV writer with LF endings.
pub struct CsvSink {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| IoError::io(path, e))?;
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(file));
        inner.write_record(header).map_err(|e| IoError::from_csv(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    /// Opens an existing file for appending (no header written).
    pub fn append(path: &Path) -> Result<Self> {
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| IoError::io(path, e))?;
        let inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .has_headers(false)
            .from_writer(BufWriter::new(file));
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| IoError::from_csv(&self.path, e))?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let path = self.path;
        let buf = self.inner.into_inner().map_err(|e| IoError::io(&path, e.into_error()))?;
        buf.into_inner().map_err(|e| IoError::io(&path, e.into_error()))?;
        Ok(())
    }
}

/// A CSV file read fully into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| IoError::from_csv(path, e))?;
        let header = rdr
            .headers()
            .map_err(|e| IoError::from_csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(|e| IoError::from_csv(path, e))?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::Refused(format!("missing column {name:?}")))
    }

    /// Parsed floats of one column.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>()
                    .map_err(|_| IoError::Refused(format!("column {name:?}: bad number {:?}", r[c])))
            })
            .collect()
    }
}

/// Keeps the header and the rows whose `step` is at most `last_step`.
pub fn truncate_run_csv(path: &Path, last_step: u64) -> Result<()> {
    let table = Table::read(path)?;
    let steps = table.floats("step")?;
    let mut sink = CsvSink::create(path, &table.header.iter().map(String::as_str).collect::<Vec<_>>())?;
    for (row, s) in table.rows.iter().zip(steps) {
        if s as u64 <= last_step {
            sink.row(row)?;
        }
    }
    sink.finish()
}

/// Writes `text` followed by nothing else, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, f64::MIN_POSITIVE, 0.0] {
            let s = fmt(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
            assert_eq!(digits.len(), 17);
        }
    }

    #[test]
    fn sink_writes_lf_and_truncation_keeps_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let mut s = CsvSink::create(&p, &["step", "x"]).unwrap();
        for k in 0..5u64 {
            s.row([k.to_string(), fmt(k as f64 * 0.5)]).unwrap();
        }
        s.finish().unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("step,x\n0,0.0000000000000000e0\n"));
        truncate_run_csv(&p, 2).unwrap();
        let t = Table::read(&p).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.floats("x").unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
