use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chvi::dynamics::EstimateReport;
use chvi::io::{
    check_potential, emit_plotdata, energy_report, execute_run, execute_sweep, parse_config, IoError, RunConfig,
};
use chvi::harness::DEFAULT_LADDER;
use chvi::potential::{PotentialKind, PotentialSpec};

#[derive(Parser)]
#[command(name = "chvi", version, about = "Viscous Cahn-Hilliard with inertia: regularized runs and eps sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, default_value = "chvi-out")]
        out: PathBuf,
    },
    /// Run a ladder of eps values on the same data.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps_ladder: Option<Vec<f64>>,
        /// Scale dt proportionally to eps.
        #[arg(long)]
        joint_refine: bool,
        #[arg(long, default_value = "chvi-sweep")]
        out: PathBuf,
    },
    /// Tabulate the Yosida family and certify the uniform L1 bound.
    CheckPotential {
        #[arg(long, default_value = "logarithmic")]
        kind: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, alias = "eps-ladder", value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        r_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        r_max: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Directory for the potential table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the energy ledger from checkpoints and compare with the CSV.
    EnergyReport { dir: PathBuf },
    /// Write plot-ready series for a run or sweep directory.
    Plotdata { dir: PathBuf },
}

fn load_config(path: &Path) -> Result<RunConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text, path.parent())
}

fn print_monitors(m: &EstimateReport) {
    for (name, v) in EstimateReport::NAMES.iter().zip(m.values()) {
        println!("  {name:<26} {v:.6e}");
    }
}

fn main_inner(cli: Cli) -> Result<(), IoError> {
    match cli.command {
        Command::Run { config, resume, out } => {
            let cfg = load_config(&config)?;
            let s = execute_run(&cfg, &out, resume.as_deref())?;
            let r = &s.last_record;
            println!(
                "run complete: step {} t={} E={:.10e} max ineq residual {:.3e}",
                r.step, r.t, r.ledger.total, s.max_ineq_residual
            );
            for w in &s.manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!("outputs in {}", out.display());
        }
        Command::Sweep {
            config,
            eps_ladder,
            joint_refine,
            out,
        } => {
            let cfg = load_config(&config)?;
            let ladder = eps_ladder.unwrap_or_else(|| DEFAULT_LADDER.to_vec());
            let s = execute_sweep(&cfg, &ladder, joint_refine, &out)?;
            let rep = &s.report;
            println!("eps ladder {:?}", rep.eps_ladder);
            println!("cauchy L2(V) of u      {:?}", rep.cauchy_l2v_of_u);
            println!("cauchy L2(V') of u_t   {:?}", rep.cauchy_l2vprime_of_ut);
            println!("duality pairing        {:?}", rep.duality_pairing());
            println!("concentration index    {:?}", rep.concentration_index());
            if let Some(v) = &s.verdict {
                println!(
                    "duality limsup check: {} (gaps {:?}, tol {:.3e})",
                    if v.pass { "pass" } else { "FAIL" },
                    v.gaps,
                    v.tol
                );
            }
            if let Some(finest) = rep.rungs.last() {
                println!("monitors at eps = {}:", finest.eps);
                print_monitors(&finest.monitors);
            }
            for w in &s.manifest.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::CheckPotential {
            kind,
            lambda,
            eps,
            r_min,
            r_max,
            samples,
            out,
        } => {
            let k = PotentialKind::from_name(&kind).ok_or_else(|| IoError::Config {
                line: 0,
                message: format!("unknown potential kind {kind:?}"),
            })?;
            let spec = PotentialSpec::new(k, lambda)?;
            let c = check_potential(&spec, &eps, (r_min, r_max), samples, out.as_deref())?;
            println!("max resolvent residual {:.3e}", c.max_residual);
            println!("c1 = {}, c2 = {:.10e} (limit {:.10e})", c.bound.c1, c.bound.c2, c.bound.c2_limit);
            for (e, c2) in &c.bound.per_eps {
                println!("  eps = {e:<8} c2 = {c2:.10e}");
            }
            if let Some(t) = &c.table {
                println!("table written to {}", t.display());
            }
            if !c.bound.ok {
                return Err(IoError::Numerical(format!(
                    "L1 bound not uniform in eps (offending sample {:?})",
                    c.bound.offending
                )));
            }
        }
        Command::EnergyReport { dir } => {
            let r = energy_report(&dir)?;
            for (step, csv, re) in &r.checkpoints {
                println!("step {step:>8}  csv {csv:.16e}  recomputed {re:.16e}");
            }
            println!("max ledger difference   {:.3e}", r.max_abs_diff);
            println!("max inequality residual {:.3e}", r.max_ineq_residual);
            println!("energy defect: min per step {:.3e}, total {:.6e}", r.min_step_defect, r.total_defect);
            if !r.consistent {
                return Err(IoError::Numerical("ledger recomputed from checkpoints disagrees with CSV".into()));
            }
        }
        Command::Plotdata { dir } => {
            for p in emit_plotdata(&dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
