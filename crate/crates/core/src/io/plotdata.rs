use std::path::{Path, PathBuf};

use super::commands::{RUN_CSV, SWEEP_CSV, SWEEP_HEADER};
use super::table::{fmt, CsvSink, Table};
use super::{IoError, Result};

const PLOT_DIR: &str = "plot";

/// Writes plot-ready CSV series derived from a run or sweep directory into
/// `<dir>/plot` and returns their paths.
pub fn emit_plotdata(dir: &Path) -> Result<Vec<PathBuf>> {
    let run = dir.join(RUN_CSV);
    let sweep = dir.join(SWEEP_CSV);
    if !run.is_file() && !sweep.is_file() {
        return Err(IoError::Refused(format!(
            "{} holds neither {RUN_CSV} nor {SWEEP_CSV}",
            dir.display()
        )));
    }
    let out = dir.join(PLOT_DIR);
    std::fs::create_dir_all(&out).map_err(|e| IoError::io(&out, e))?;
    let mut written = Vec::new();
    if run.is_file() {
        written.extend(run_series(&run, &out, "")?);
    }
    if sweep.is_file() {
        written.extend(sweep_series(dir, &sweep, &out)?);
    }
    Ok(written)
}

fn write_columns(path: PathBuf, header: &[&str], cols: &[Vec<f64>]) -> Result<PathBuf> {
    let mut sink = CsvSink::create(&path, header)?;
    for i in 0..cols[0].len() {
        sink.row(cols.iter().map(|c| fmt(c[i])))?;
    }
    sink.finish()?;
    Ok(path)
}

fn run_series(csv: &Path, out: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let t = Table::read(csv)?;
    if t.rows.is_empty() {
        return Err(IoError::Refused(format!("{} has no rows", csv.display())));
    }
    let energy_cols = ["t", "E_total", "kinetic", "dirichlet", "potential", "concave"];
    let energy: Vec<Vec<f64>> = energy_cols.iter().map(|c| t.floats(c)).collect::<Result<_>>()?;
    let maxu = vec![t.floats("t")?, t.floats("max_abs_u")?];
    Ok(vec![
        write_columns(out.join(format!("{prefix}energy.csv")), &energy_cols, &energy)?,
        write_columns(out.join(format!("{prefix}max_abs_u.csv")), &["t", "max_abs_u"], &maxu)?,
    ])
}

fn sweep_series(dir: &Path, csv: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let t = Table::read(csv)?;
    if t.rows.is_empty() {
        return Err(IoError::Refused(format!("{} has no rows", csv.display())));
    }
    let log = |c: &str| -> Result<Vec<f64>> { Ok(t.floats(c)?.into_iter().map(f64::log10).collect()) };
    let mut written = Vec::new();

    let cauchy = vec![log("eps")?, log("cauchy_L2V")?, log("cauchy_L2Vprime")?];
    written.push(write_columns(
        out.join("cauchy_loglog.csv"),
        &["log10_eps", "log10_cauchy_L2V", "log10_cauchy_L2Vprime"],
        &cauchy,
    )?);

    let monitor_names = &SWEEP_HEADER[6..];
    let mut cols = vec![log("eps")?];
    let mut header = vec!["log10_eps".to_string()];
    for m in monitor_names {
        cols.push(log(m)?);
        header.push(format!("log10_{m}"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    written.push(write_columns(out.join("monitors_loglog.csv"), &header, &cols)?);

    for i in 0..t.rows.len() {
        let rung = dir.join(format!("rung_{i}"));
        let eta = rung.join("eta_profile.csv");
        if eta.is_file() {
            let e = Table::read(&eta)?;
            let cols = vec![e.floats("t")?, e.floats("eta_L1")?];
            written.push(write_columns(out.join(format!("eta_profile_rung{i}.csv")), &["t", "eta_L1"], &cols)?);
        }
        let run = rung.join(RUN_CSV);
        if run.is_file() {
            written.extend(run_series(&run, out, &format!("rung{i}_"))?);
        }
    }
    Ok(written)
}
