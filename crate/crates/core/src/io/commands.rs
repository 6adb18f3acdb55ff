use std::path::{Path, PathBuf};

use super::checkpoint::{resume, write_checkpoint};
use super::config::{parse_config, RunConfig};
use super::manifest::RunManifest;
use super::table::{fmt, run_row, truncate_run_csv, write_text, CsvSink, Table, RUN_HEADER};
use super::{IoError, Result};
use crate::dynamics::{energy, prepare_initial_data, SimState, Simulation, StepRecord};
use crate::harness::{duality_limsup_check, run_sweep, DualityVerdict, SweepPlan, SweepReport};
use crate::potential::{verify_l1_bound, yosida_curve, L1BoundReport, PotentialSpec};

pub const CONFIG_FILE: &str = "config.txt";
pub const RUN_CSV: &str = "run.csv";
pub const SWEEP_CSV: &str = "sweep_summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const POTENTIAL_TABLE_FILE: &str = "potential_table.csv";
pub const ENERGY_REPORT_FILE: &str = "energy_report.csv";
const ETA_PROFILE_FILE: &str = "eta_profile.csv";

pub const SWEEP_HEADER: [&str; 13] = [
    "eps",
    "cauchy_L2V",
    "cauchy_L2Vprime",
    "duality_pairing",
    "duality_gap",
    "concentration_index",
    "sup_V_of_u",
    "L2_H_of_ut",
    "sup_Vprime_of_ut",
    "L2_DA_of_u",
    "sup_L1_of_jeps",
    "L1L1_of_beta",
    "Vprime_dual_of_beta_proxy",
];

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| IoError::io(path, e))
}

fn checkpoint_name(step: u64) -> String {
    format!("{CHECKPOINT_DIR}/step_{step:08}.chvi")
}

/// Checkpoint files under `dir`, sorted by name.
fn list_checkpoints(dir: &Path) -> Result<Vec<String>> {
    let cdir = dir.join(CHECKPOINT_DIR);
    if !cdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut names = Vec::new();
    for entry in std::fs::read_dir(&cdir).map_err(|e| IoError::io(&cdir, e))? {
        let entry = entry.map_err(|e| IoError::io(&cdir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".chvi") {
            names.push(format!("{CHECKPOINT_DIR}/{name}"));
        }
    }
    names.sort();
    Ok(names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub final_state: SimState,
    pub last_record: StepRecord,
    /// Largest per-step inequality residual seen by this invocation.
    pub max_ineq_residual: f64,
}

/// Writes the run CSV, checkpoints and manifest of one simulation into `out`.
///
/// With `resume_from`, the run continues from that checkpoint: an existing
/// run CSV is cut back to the checkpoint's step and extended, so that the
/// files match those of an uninterrupted run.
pub fn execute_run(cfg: &RunConfig, out: &Path, resume_from: Option<&Path>) -> Result<RunSummary> {
    let sim_cfg = cfg.sim.clone();
    mkdir(&out.join(CHECKPOINT_DIR))?;
    let normalized = cfg.normalize();
    write_text(&out.join(CONFIG_FILE), &normalized)?;
    let mut manifest = RunManifest::new(cfg.hash());

    let csv_path = out.join(RUN_CSV);
    let (state, mut sink) = match resume_from {
        Some(ck) => {
            let state = resume(ck, &sim_cfg.grid, sim_cfg.eps)?;
            let sink = if csv_path.is_file() {
                truncate_run_csv(&csv_path, state.step)?;
                CsvSink::append(&csv_path)?
            } else {
                CsvSink::create(&csv_path, &RUN_HEADER)?
            };
            (state, sink)
        }
        None => {
            let (u0, u1) = cfg.initial_data()?;
            let prep = prepare_initial_data(&u0, &u1, &sim_cfg)?;
            if let Some(check) = prep.energy_check {
                if !check.holds {
                    manifest.warnings.push(format!(
                        "regularized initial energy {} exceeds original {}",
                        check.j_eps_regularized, check.j_original
                    ));
                }
            }
            (SimState::initial(prep.u0, prep.u1)?, CsvSink::create(&csv_path, &RUN_HEADER)?)
        }
    };

    let mut sim = Simulation::new(sim_cfg.clone(), state)?;
    let total = sim_cfg.num_steps();
    if resume_from.is_none() {
        sink.row(run_row(&sim.record()))?;
        write_checkpoint(&out.join(checkpoint_name(0)), sim.state(), sim_cfg.eps)?;
    }
    let mut max_ineq: f64 = 0.0;
    let outcome = loop {
        if sim.is_finished() {
            break Ok(());
        }
        match sim.advance() {
            Ok(rec) => {
                sink.row(run_row(&rec))?;
                max_ineq = max_ineq.max(rec.ledger.inequality_residual);
                if rec.step % cfg.output_every == 0 || rec.step == total {
                    write_checkpoint(&out.join(checkpoint_name(rec.step)), sim.state(), sim_cfg.eps)?;
                }
            }
            Err(e) => break Err(e),
        }
    };
    sink.finish()?;

    manifest.add(CONFIG_FILE, "config");
    manifest.add(RUN_CSV, "run-csv");
    for name in list_checkpoints(out)? {
        manifest.add(name, "checkpoint");
    }
    if let Err(e) = &outcome {
        manifest.warnings.push(format!("run aborted: {e}"));
    }
    manifest.write(&out.join(MANIFEST_FILE))?;
    outcome?;
    Ok(RunSummary {
        manifest,
        final_state: sim.state().clone(),
        last_record: sim.record(),
        max_ineq_residual: max_ineq,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub manifest: RunManifest,
    pub report: SweepReport,
    pub verdict: Option<DualityVerdict>,
}

/// Runs an `eps` ladder and writes per-rung run CSVs, eta profiles, stored
/// checkpoints (every `output.every` steps) and the sweep summary.
pub fn execute_sweep(cfg: &RunConfig, ladder: &[f64], joint_refine: bool, out: &Path) -> Result<SweepSummary> {
    mkdir(out)?;
    write_text(&out.join(CONFIG_FILE), &cfg.normalize())?;
    let (u0, u1) = cfg.initial_data()?;
    let mut plan = SweepPlan::new(cfg.sim.clone(), u0, u1).with_ladder(ladder);
    plan.joint_refine = joint_refine;
    plan.stored_fields = Some(cfg.output_every);
    let report = run_sweep(&plan)?;

    let mut manifest = RunManifest::new(cfg.hash());
    manifest.add(CONFIG_FILE, "config");
    for (i, rung) in report.rungs.iter().enumerate() {
        let dir_name = format!("rung_{i}");
        let dir = out.join(&dir_name);
        mkdir(&dir.join(CHECKPOINT_DIR))?;
        let mut sink = CsvSink::create(&dir.join(RUN_CSV), &RUN_HEADER)?;
        for r in &rung.records {
            sink.row(run_row(r))?;
        }
        sink.finish()?;
        manifest.add(format!("{dir_name}/{RUN_CSV}"), "run-csv");

        let mut sink = CsvSink::create(&dir.join(ETA_PROFILE_FILE), &["step", "t", "eta_L1"])?;
        for (r, eta) in rung.records.iter().zip(&rung.eta_time_profile) {
            sink.row([r.step.to_string(), fmt(r.t), fmt(*eta)])?;
        }
        sink.finish()?;
        manifest.add(format!("{dir_name}/{ETA_PROFILE_FILE}"), "eta-profile");

        for s in &rung.stored {
            let name = checkpoint_name(s.step);
            write_checkpoint(&dir.join(&name), s, rung.eps)?;
            manifest.add(format!("{dir_name}/{name}"), "checkpoint");
        }
        if let Some(check) = rung.initial_check {
            if !check.holds {
                manifest.warnings.push(format!(
                    "eps = {}: regularized initial energy {} exceeds original {}",
                    rung.eps, check.j_eps_regularized, check.j_original
                ));
            }
        }
    }

    let mut sink = CsvSink::create(&out.join(SWEEP_CSV), &SWEEP_HEADER)?;
    for (i, rung) in report.rungs.iter().enumerate() {
        let prev = |v: &Vec<f64>| if i == 0 || !report.complete { f64::NAN } else { v[i - 1] };
        let gap = report.duality_gaps.get(i).copied().unwrap_or(f64::NAN);
        let mut row = vec![
            fmt(rung.eps),
            fmt(prev(&report.cauchy_l2v_of_u)),
            fmt(prev(&report.cauchy_l2vprime_of_ut)),
            fmt(rung.duality_pairing),
            fmt(gap),
            fmt(rung.concentration_index),
        ];
        row.extend(rung.monitors.values().map(fmt));
        sink.row(row)?;
    }
    sink.finish()?;
    manifest.add(SWEEP_CSV, "sweep-csv");

    let verdict = if report.complete {
        let v = duality_limsup_check(&report)?;
        if !v.pass {
            manifest
                .warnings
                .push(format!("duality limsup check failed: gaps {:?}, tol {}", v.gaps, v.tol));
        }
        Some(v)
    } else {
        manifest.warnings.push(format!(
            "sweep incomplete: {}",
            report.failure.clone().unwrap_or_default()
        ));
        None
    };
    manifest.write(&out.join(MANIFEST_FILE))?;
    if !report.complete {
        return Err(IoError::Numerical(report.failure.clone().unwrap_or_default()));
    }
    Ok(SweepSummary {
        manifest,
        report,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCheck {
    pub bound: L1BoundReport,
    pub max_residual: f64,
    pub table: Option<PathBuf>,
}

/// Tabulates the Yosida family on `samples` points of `range` for every
/// `eps` and certifies the uniform `L^1` bound.
pub fn check_potential(
    spec: &PotentialSpec,
    eps_list: &[f64],
    range: (f64, f64),
    samples: usize,
    out: Option<&Path>,
) -> Result<PotentialCheck> {
    let bound = verify_l1_bound(spec, eps_list, range, samples)?;
    let grid: Vec<f64> = if samples == 1 {
        vec![range.0]
    } else {
        (0..samples)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (samples - 1) as f64)
            .collect()
    };
    let mut max_residual: f64 = 0.0;
    let mut sink = match out {
        Some(dir) => {
            mkdir(dir)?;
            Some(CsvSink::create(
                &dir.join(POTENTIAL_TABLE_FILE),
                &["kind", "eps", "r", "resolvent", "yosida", "moreau", "residual"],
            )?)
        }
        None => None,
    };
    for &eps in eps_list {
        for e in yosida_curve(spec, eps, &grid)? {
            max_residual = max_residual.max(e.residual);
            if let Some(s) = sink.as_mut() {
                s.row([
                    spec.kind().name().to_string(),
                    fmt(eps),
                    fmt(e.r),
                    fmt(e.resolvent),
                    fmt(e.yosida),
                    fmt(e.moreau),
                    fmt(e.residual),
                ])?;
            }
        }
    }
    let table = match (sink, out) {
        (Some(s), Some(dir)) => {
            s.finish()?;
            let mut manifest = RunManifest::new(super::config::config_hash(&format!(
                "potential.kind={}\nlambda={:?}\neps={eps_list:?}\nrange={range:?}\nsamples={samples}\n",
                spec.kind().name(),
                spec.lambda()
            )));
            manifest.add(POTENTIAL_TABLE_FILE, "potential-table");
            manifest.write(&dir.join(MANIFEST_FILE))?;
            Some(dir.join(POTENTIAL_TABLE_FILE))
        }
        _ => None,
    };
    Ok(PotentialCheck {
        bound,
        max_residual,
        table,
    })
}

/// Cross-check of the run CSV against ledgers recomputed from checkpoints,
/// plus both readings of the discrete energy balance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `(step, E_total from CSV, E_total recomputed)` per checkpoint.
    pub checkpoints: Vec<(u64, f64, f64)>,
    /// Largest difference over all five ledger columns.
    pub max_abs_diff: f64,
    /// Largest `ineq_residual` in the CSV (inequality reading).
    pub max_ineq_residual: f64,
    /// Smallest and summed per-step defect `E_n - E_{n+1} - dD` (equality reading).
    pub min_step_defect: f64,
    pub total_defect: f64,
    pub consistent: bool,
}

/// Recomputes the ledger at every checkpoint of a run directory and
/// compares it with the CSV.
pub fn energy_report(dir: &Path) -> Result<EnergyReport> {
    let cfg_path = dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| IoError::io(&cfg_path, e))?;
    let cfg = parse_config(&text, Some(dir))?;
    let table = Table::read(&dir.join(RUN_CSV))?;
    if table.header != RUN_HEADER {
        return Err(IoError::Refused(format!("{RUN_CSV}: unexpected header {:?}", table.header)));
    }
    let steps = table.floats("step")?;
    let cols = ["E_total", "kinetic", "dirichlet", "potential", "concave"];
    let values: Vec<Vec<f64>> = cols.iter().map(|c| table.floats(c)).collect::<Result<_>>()?;
    let diss = table.floats("dissipation_integral")?;
    let ineq = table.floats("ineq_residual")?;

    let names = list_checkpoints(dir)?;
    if names.is_empty() {
        return Err(IoError::Refused(format!("no checkpoints in {}", dir.display())));
    }
    let mut checkpoints = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    for name in names {
        let state = resume(&dir.join(&name), &cfg.sim.grid, cfg.sim.eps)?;
        let row = steps
            .iter()
            .position(|&s| s as u64 == state.step)
            .ok_or_else(|| IoError::Refused(format!("{name}: step {} missing from {RUN_CSV}", state.step)))?;
        let l = energy(&state, &cfg.sim);
        let recomputed = [l.total, l.kinetic, l.dirichlet, l.potential, l.concave];
        for (col, r) in values.iter().zip(recomputed) {
            max_abs_diff = max_abs_diff.max((col[row] - r).abs());
        }
        checkpoints.push((state.step, values[0][row], l.total));
    }

    let e = &values[0];
    let defects: Vec<f64> = (1..e.len()).map(|i| e[i - 1] - e[i] - (diss[i] - diss[i - 1])).collect();
    let scale = 1.0 + e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let report = EnergyReport {
        checkpoints,
        max_abs_diff,
        max_ineq_residual: ineq.iter().copied().fold(0.0, f64::max),
        min_step_defect: defects.iter().copied().fold(f64::INFINITY, f64::min),
        total_defect: defects.iter().sum(),
        consistent: max_abs_diff <= 1e-12 * scale,
    };

    let mut sink = CsvSink::create(
        &dir.join(ENERGY_REPORT_FILE),
        &["step", "E_total_csv", "E_total_recomputed", "abs_diff"],
    )?;
    for &(s, a, b) in &report.checkpoints {
        sink.row([s.to_string(), fmt(a), fmt(b), fmt((a - b).abs())])?;
    }
    sink.finish()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::read_checkpoint;

    const CFG: &str = "dim=1\nn=15\nalpha=1\ndelta=1\nlambda=2\neps=0.05\nT=0.05\ndt=1e-3\npotential.kind=logarithmic\noutput.every=10\ninit.kind=mode1\ninit.amplitude=0.9\n";

    #[test]
    fn run_writes_listed_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(CFG, None).unwrap();
        let s = execute_run(&cfg, dir.path(), None).unwrap();
        s.manifest.verify(dir.path()).unwrap();
        let t = Table::read(&dir.path().join(RUN_CSV)).unwrap();
        assert_eq!(t.header, RUN_HEADER);
        assert_eq!(t.rows.len(), 51);
        let cks: Vec<_> = s.manifest.outputs.iter().filter(|o| o.role == "checkpoint").collect();
        assert_eq!(cks.len(), 6);
        let stored = std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap();
        let hash = format!("{:016x}", parse_config(&stored, None).unwrap().hash());
        assert_eq!(s.manifest.config_hash, hash);

        let rep = energy_report(dir.path()).unwrap();
        assert!(rep.consistent, "{rep:?}");
        assert_eq!(rep.max_abs_diff, 0.0);
        assert!(rep.min_step_defect >= -1e-12);
    }

    #[test]
    fn resume_extends_to_identical_files() {
        let full = tempfile::tempdir().unwrap();
        let cfg = parse_config(CFG, None).unwrap();
        execute_run(&cfg, full.path(), None).unwrap();

        let part = tempfile::tempdir().unwrap();
        let short = RunConfig {
            sim: crate::dynamics::SimConfig {
                t_final: 0.02,
                ..cfg.sim.clone()
            },
            ..cfg.clone()
        };
        execute_run(&short, part.path(), None).unwrap();
        let ck = part.path().join(checkpoint_name(20));
        execute_run(&cfg, part.path(), Some(&ck)).unwrap();

        let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
        assert_eq!(read(full.path(), RUN_CSV), read(part.path(), RUN_CSV));
        for k in [30, 40, 50] {
            assert_eq!(read(full.path(), &checkpoint_name(k)), read(part.path(), &checkpoint_name(k)));
        }
        assert_eq!(read_checkpoint(&part.path().join(checkpoint_name(50))).unwrap().step, 50);
    }

    #[test]
    fn resume_refuses_other_eps() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(CFG, None).unwrap();
        execute_run(&cfg, dir.path(), None).unwrap();
        let other = parse_config(&CFG.replace("eps=0.05", "eps=0.1"), None).unwrap();
        let ck = dir.path().join(checkpoint_name(10));
        let e = execute_run(&other, dir.path(), Some(&ck)).unwrap_err();
        assert!(matches!(e, IoError::Checkpoint(_)));
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn potential_table_and_bound() {
        let dir = tempfile::tempdir().unwrap();
        let spec = PotentialSpec::logarithmic(0.0).unwrap();
        let c = check_potential(&spec, &[0.1, 0.01], (-5.0, 5.0), 101, Some(dir.path())).unwrap();
        assert!(c.bound.ok);
        assert!(c.max_residual <= 1e-12);
        let t = Table::read(c.table.as_ref().unwrap()).unwrap();
        assert_eq!(t.rows.len(), 202);
    }
}
