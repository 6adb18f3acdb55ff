//! Acceptance gate: runs every criterion, prints one line per criterion and
//! exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chvi::dynamics::{prepare_initial_data, SimConfig, SimState, Simulation, StepRecord};
use chvi::harness::{duality_limsup_check, run_sweep, SweepPlan, DEFAULT_LADDER};
use chvi::io::{execute_run, execute_sweep, parse_config};
use chvi::potential::{verify_l1_bound, yosida_curve, PotentialSpec, L1_BOUND_C1};
use chvi::spectral::{Grid, SpectralField};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn standard_cfg(pot: PotentialSpec, eps: f64, dt: f64) -> SimConfig {
    let grid = Grid::new(1, 31).unwrap();
    SimConfig::new(grid, pot, 1.0, 1.0, eps, 1.0, dt)
}

fn run_records(cfg: &SimConfig, amplitude: f64) -> Vec<StepRecord> {
    let u0 = SpectralField::sine_profile(&cfg.grid, amplitude);
    let u1 = SpectralField::zeros(&cfg.grid);
    let prep = prepare_initial_data(&u0, &u1, cfg).unwrap();
    let mut sim = Simulation::new(cfg.clone(), SimState::initial(prep.u0, prep.u1).unwrap()).unwrap();
    sim.run_to_end().unwrap()
}

fn potential_kernel() -> Outcome {
    let specs = [
        PotentialSpec::logarithmic(0.0).unwrap(),
        PotentialSpec::obstacle(0.0).unwrap(),
        PotentialSpec::double_well(1.0, 0.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let spec = &specs[rng.random_range(0..3)];
        let r = rng.random_range(-10.0..10.0);
        let eps = 10f64.powf(rng.random_range(-4.0..0.0));
        worst = worst.max(spec.resolvent(r, eps).map_err(|e| e.to_string())?.residual);
    }
    ensure!(worst <= 1e-12, "max resolvent residual {worst:e}");

    let obstacle = &specs[1];
    for i in 0..=400 {
        let r = -4.0 + 0.02 * i as f64;
        for eps in [1e-4, 1e-2, 0.3] {
            let y = obstacle.resolvent(r, eps).unwrap();
            let x = r.clamp(-1.0, 1.0);
            ensure!(
                y.resolvent == x && y.yosida == (r - x) / eps && y.moreau == (r - x) * (r - x) / (2.0 * eps),
                "obstacle closed form at r={r}, eps={eps}"
            );
        }
    }

    let grid: Vec<f64> = (0..=2000).map(|i| -5.0 + 0.005 * i as f64).collect();
    let ladder = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut fd_worst = 0.0_f64;
    for spec in &specs {
        for &eps in &ladder {
            let c = yosida_curve(spec, eps, &grid).unwrap();
            for w in c.windows(2) {
                let d = w[1].yosida - w[0].yosida;
                let slack = 1e-9 * (1.0 + w[1].yosida.abs());
                ensure!(d >= -slack, "{} not monotone at r={}", spec.kind().name(), w[0].r);
                ensure!(d <= (w[1].r - w[0].r) / eps + slack, "{} not 1/eps-Lipschitz at r={}", spec.kind().name(), w[0].r);
            }
            // Offset so no sample sits on the obstacle corner, where j_eps is
            // only C^{1,1} and a central difference is first order.
            for r in grid.iter().step_by(20).map(|r| r + 0.0123) {
                let h = 1e-4 * eps;
                let fd = (spec.resolvent(r + h, eps).unwrap().moreau - spec.resolvent(r - h, eps).unwrap().moreau) / (2.0 * h);
                let y = spec.resolvent(r, eps).unwrap().yosida;
                fd_worst = fd_worst.max((fd - y).abs() / y.abs().max(1.0));
            }
        }
        if spec.kind().is_singular() {
            for &r in grid.iter().filter(|r| r.abs() < 1.0) {
                let mut prev = f64::NEG_INFINITY;
                for &eps in &ladder {
                    let m = spec.resolvent(r, eps).unwrap().moreau;
                    ensure!(m >= prev - 1e-12 * m.abs().max(1.0), "envelope order at r={r}, eps={eps}");
                    prev = m;
                }
                ensure!(prev <= spec.j(r) + 1e-12 * prev.abs().max(1.0), "envelope above j at r={r}");
            }
        }
    }
    ensure!(fd_worst <= 1e-6, "finite-difference relative error {fd_worst:e}");
    Ok(format!("max residual {worst:.1e}, fd rel err {fd_worst:.1e}"))
}

fn l1_bound() -> Outcome {
    let mut parts = Vec::new();
    for spec in [PotentialSpec::logarithmic(0.0).unwrap(), PotentialSpec::obstacle(0.0).unwrap()] {
        let rep = verify_l1_bound(&spec, &[1e-1, 1e-2, 1e-3, 1e-4], (-5.0, 5.0), 2000).map_err(|e| e.to_string())?;
        ensure!(rep.c1 == L1_BOUND_C1 && rep.ok, "{}: {rep:?}", spec.kind().name());
        parts.push(format!("{} c2={:.6}", spec.kind().name(), rep.c2));
    }
    Ok(parts.join(", "))
}

/// Stiffness matrix of the 1-D sine basis by midpoint quadrature, exact for
/// these trigonometric products.
fn stiffness_1d(n: usize) -> DMatrix<f64> {
    let m = 4096;
    let h = 1.0 / m as f64;
    DMatrix::from_fn(n, n, |k, l| {
        let (a, b) = ((k + 1) as f64 * PI, (l + 1) as f64 * PI);
        (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                2.0 * a * b * (a * x).cos() * (b * x).cos()
            })
            .sum::<f64>()
            * h
    })
}

fn dense_power(eig: &SymmetricEigen<f64, nalgebra::Dyn>, s: f64, c: &DVector<f64>) -> DVector<f64> {
    let lam = eig.eigenvalues.map(|l| l.powf(s));
    &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose() * c
}

fn spectral_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for dim in [1, 2] {
        let n = 8;
        let grid = Grid::new(dim, n).unwrap();
        let k1 = stiffness_1d(n);
        let a = if dim == 1 {
            k1
        } else {
            let id = DMatrix::<f64>::identity(n, n);
            k1.kronecker(&id) + id.kronecker(&k1)
        };
        let eig = SymmetricEigen::new(a);
        let coeffs: Vec<f64> = (0..grid.modes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = DVector::from_vec(coeffs.clone());
        let f = SpectralField::new(grid.clone(), coeffs).unwrap();
        for s in [-1.0, -0.5, 0.5, 1.0, 2.0] {
            let dense = dense_power(&eig, s, &c);
            let ours = DVector::from_column_slice(f.apply_power(s).coeffs());
            let rel = (&ours - &dense).norm() / dense.norm();
            worst = worst.max(rel);
        }
        let norms = f.norms();
        for (s, got) in [(0.0, norms.h), (1.0, norms.v), (-1.0, norms.vprime), (2.0, norms.da)] {
            let want = c.dot(&dense_power(&eig, s, &c)).sqrt();
            worst = worst.max((got - want).abs() / want);
        }
    }
    ensure!(worst <= 1e-12, "dense oracle relative mismatch {worst:e}");

    let mut worst_big = 0.0_f64;
    for dim in [1, 2] {
        let grid = Grid::new(dim, 63).unwrap();
        let coeffs: Vec<f64> = (0..grid.modes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::new(grid.clone(), coeffs).unwrap();
        let h2 = f.norm_h().powi(2);
        let vals = grid.collocation(false).weight() * f.to_values().iter().map(|x| x * x).sum::<f64>();
        worst_big = worst_big.max((vals - h2).abs() / h2);
        for (s, t) in [(0.5, 0.5), (1.0, -1.0), (-0.5, 1.5), (0.25, 0.75)] {
            let a = f.apply_power(s).apply_power(t);
            let b = f.apply_power(s + t);
            let d = a.axpy(-1.0, &b).unwrap().norm_h() / b.norm_h();
            worst_big = worst_big.max(d);
        }
    }
    ensure!(worst_big <= 1e-12, "Parseval/semigroup relative mismatch {worst_big:e}");
    Ok(format!("dense oracle {worst:.1e}, n=63 identities {worst_big:.1e}"))
}

/// `alpha c'' + (1 + delta mu) c' + mu^2 c = 0` by RK4.
fn modal_oracle(alpha: f64, delta: f64, mu: f64, c0: f64, t_final: f64, steps: usize) -> f64 {
    let h = t_final / steps as f64;
    let rhs = |c: f64, d: f64| (d, -((1.0 + delta * mu) * d + mu * mu * c) / alpha);
    let (mut c, mut d) = (c0, 0.0);
    for _ in 0..steps {
        let k1 = rhs(c, d);
        let k2 = rhs(c + 0.5 * h * k1.0, d + 0.5 * h * k1.1);
        let k3 = rhs(c + 0.5 * h * k2.0, d + 0.5 * h * k2.1);
        let k4 = rhs(c + h * k3.0, d + h * k3.1);
        c += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        d += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    c
}

fn linear_oracle() -> Outcome {
    let (alpha, delta, t_final) = (1.0, 10.0, 1.0);
    let exact = modal_oracle(alpha, delta, PI * PI, 1.0, t_final, 200_000);
    let mut errors = Vec::new();
    for dt in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let grid = Grid::new(1, 8).unwrap();
        let cfg = SimConfig::new(grid.clone(), PotentialSpec::double_well(0.0, 0.0).unwrap(), alpha, delta, 0.1, t_final, dt);
        let u = SpectralField::single_mode(&grid, &[1], 1.0).unwrap();
        let mut sim = Simulation::new(cfg, SimState::initial(u, SpectralField::zeros(&grid)).unwrap()).unwrap();
        sim.run_to_end().map_err(|e| e.to_string())?;
        errors.push((sim.state().u.coeffs()[0] - exact).abs());
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ensure!(orders.iter().all(|o| (0.8..=1.2).contains(o)), "orders {orders:?}");
    let rel = errors[3] / exact.abs();
    ensure!(rel <= 1e-3, "finest relative error {rel:e}");
    Ok(format!("orders {orders:.3?}, finest rel err {rel:.2e}"))
}

fn energy_inequality() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for lambda in [0.0, 2.0] {
        let cfg = standard_cfg(PotentialSpec::logarithmic(lambda).unwrap(), 0.05, 1e-3);
        let recs = run_records(&cfg, 0.5);
        let e0 = recs[0].ledger.total;
        for w in recs.windows(2) {
            let incr = w[1].dissipation_integral - w[0].dissipation_integral;
            let excess = w[1].ledger.total + incr - w[0].ledger.total;
            ensure!(
                excess <= 1e-8 * (1.0 + e0),
                "lambda={lambda} step {}: excess {excess:e}",
                w[1].step
            );
            worst = worst.max(excess / (1.0 + e0));
        }
    }
    Ok(format!("max scaled excess {worst:.2e}"))
}

fn energy_sharpness() -> Outcome {
    let mut totals = Vec::new();
    let mut min_defect = f64::INFINITY;
    for dt in [1e-3, 5e-4] {
        let cfg = standard_cfg(PotentialSpec::logarithmic(0.0).unwrap(), 0.05, dt);
        let recs = run_records(&cfg, 0.5);
        let min = recs[1..].iter().map(|r| r.energy_defect).fold(f64::INFINITY, f64::min);
        min_defect = min_defect.min(min);
        totals.push(recs[1..].iter().map(|r| r.energy_defect).sum::<f64>());
    }
    ensure!(min_defect >= 0.0, "negative step defect {min_defect:e}");
    let ratio = totals[1] / totals[0];
    ensure!((0.4..=0.6).contains(&ratio), "defect integrals {totals:?}, ratio {ratio}");
    Ok(format!("defect integrals {:.4e} -> {:.4e}, ratio {ratio:.3}", totals[0], totals[1]))
}

fn initial_data() -> Outcome {
    let mut lines = Vec::new();
    for pot in [PotentialSpec::logarithmic(0.0).unwrap(), PotentialSpec::obstacle(0.0).unwrap()] {
        let base = standard_cfg(pot, 0.1, 1e-3);
        let u0 = SpectralField::sine_profile(&base.grid, 0.99);
        let u1 = SpectralField::zeros(&base.grid);
        let mut errs = Vec::new();
        for eps in DEFAULT_LADDER {
            let cfg = base.with_eps(eps);
            let prep = prepare_initial_data(&u0, &u1, &cfg).map_err(|e| e.to_string())?;
            let check = prep.energy_check.unwrap();
            ensure!(check.holds, "{} eps={eps}: {check:?}", pot.kind().name());
            errs.push(prep.u0.axpy(-1.0, &u0).unwrap().norm_v());
        }
        ensure!(errs.windows(2).all(|w| w[1] < w[0]), "{}: V errors {errs:?}", pot.kind().name());
        lines.push(format!("{} V errors {errs:.3?}", pot.kind().name()));
    }
    Ok(lines.join("; "))
}

fn eps_sweep() -> Outcome {
    let cfg = standard_cfg(PotentialSpec::logarithmic(0.0).unwrap(), DEFAULT_LADDER[0], 1e-3);
    let plan = SweepPlan::new(cfg.clone(), SpectralField::sine_profile(&cfg.grid, 0.5), SpectralField::zeros(&cfg.grid));
    let rep = run_sweep(&plan).map_err(|e| e.to_string())?;
    ensure!(rep.complete, "sweep incomplete: {:?}", rep.failure);
    for (name, c) in [("u in L2(V)", &rep.cauchy_l2v_of_u), ("u_t in L2(V')", &rep.cauchy_l2vprime_of_ut)] {
        ensure!(c.windows(2).all(|w| w[1] <= 1.1 * w[0]), "Cauchy differences of {name}: {c:?}");
    }
    let slopes = rep.monitor_slopes();
    let maxima = rep.monitor_maxima();
    ensure!(maxima.iter().all(|m| m.is_finite()), "monitor maxima {maxima:?}");
    ensure!(slopes.iter().all(|&s| s.abs() <= 0.05 || s < 0.0), "monitor slopes {slopes:?}");
    let excess: Vec<f64> = rep.rungs.iter().map(|r| r.max_excess).collect();
    ensure!(excess.windows(2).all(|w| w[1] <= 1.1 * w[0]), "constraint excess {excess:?}");
    let v = duality_limsup_check(&rep).map_err(|e| e.to_string())?;
    ensure!(v.pass, "duality check {v:?}");
    Ok(format!(
        "cauchy V {:.4?}, V' {:.4?}, max slope {:.3}, gaps {:.3?}",
        rep.cauchy_l2v_of_u,
        rep.cauchy_l2vprime_of_ut,
        slopes.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        v.gaps
    ))
}

fn concentration() -> Outcome {
    let pot = PotentialSpec::obstacle(0.0).unwrap();
    let cfg = standard_cfg(pot, DEFAULT_LADDER[0], 1e-3);
    let plan = SweepPlan::new(
        cfg.clone(),
        SpectralField::sine_profile(&cfg.grid, 0.99),
        SpectralField::sine_profile(&cfg.grid, 100.0),
    );
    let rep = run_sweep(&plan).map_err(|e| e.to_string())?;
    ensure!(rep.complete, "sweep incomplete: {:?}", rep.failure);
    let idx = rep.concentration_index();
    ensure!(idx.windows(2).all(|w| w[1] >= w[0]), "concentration index {idx:?}");
    let c2 = verify_l1_bound(&pot, &rep.eps_ladder, (-5.0, 5.0), 2000).unwrap().c2;
    let bound = rep.rungs.iter().map(|r| r.estbeta_bound(L1_BOUND_C1, c2)).fold(0.0, f64::max);
    let mass: Vec<f64> = rep.rungs.iter().map(|r| r.monitors.l1l1_of_beta).collect();
    ensure!(mass.iter().all(|&m| m <= bound), "L1L1 mass {mass:?} above bound {bound}");
    ensure!(duality_limsup_check(&rep).map_err(|e| e.to_string())?.pass, "duality check failed");
    Ok(format!("index {idx:.2?}, mass {mass:.2?} <= {bound:.1}"))
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv" || x == "chvi") {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dst = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &dst);
        } else {
            std::fs::copy(&p, &dst).unwrap();
        }
    }
}

fn determinism_and_resume() -> Outcome {
    let text = "dim=1\nn=31\nalpha=1\ndelta=1\nlambda=2\neps=0.05\nT=0.1\ndt=1e-3\n\
                potential.kind=logarithmic\ninit.kind=mode1\ninit.amplitude=0.9\noutput.every=20\n";
    let cfg = parse_config(text, None).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    execute_run(&cfg, &a, None).map_err(|e| e.to_string())?;
    execute_run(&cfg, &b, None).map_err(|e| e.to_string())?;
    let reference = files_under(&a);
    ensure!(reference == files_under(&b), "repeated runs differ");

    let ckpts: Vec<String> = reference.iter().filter(|(p, _)| p.ends_with(".chvi")).map(|(p, _)| p.clone()).collect();
    ensure!(ckpts.len() == 6, "expected 6 checkpoints, got {ckpts:?}");
    for ck in &ckpts {
        let dir = tmp.path().join(format!("resume_{}", ck.replace('/', "_")));
        copy_tree(&a, &dir);
        execute_run(&cfg, &dir, Some(&dir.join(ck))).map_err(|e| e.to_string())?;
        ensure!(files_under(&dir) == reference, "resume from {ck} differs");
    }

    let (s1, s2) = (tmp.path().join("s1"), tmp.path().join("s2"));
    let ladder = [0.1, 0.05, 0.025];
    let short = parse_config(&text.replace("T=0.1", "T=0.05"), None).unwrap();
    execute_sweep(&short, &ladder, false, &s1).map_err(|e| e.to_string())?;
    execute_sweep(&short, &ladder, false, &s2).map_err(|e| e.to_string())?;
    ensure!(files_under(&s1) == files_under(&s2), "repeated sweeps differ");
    Ok(format!("{} files identical; resumed from {} checkpoints", reference.len(), ckpts.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("potential kernel", potential_kernel),
        ("uniform L1 bound", l1_bound),
        ("spectral calculus", spectral_calculus),
        ("linear oracle", linear_oracle),
        ("discrete energy inequality", energy_inequality),
        ("energy defect sharpness", energy_sharpness),
        ("initial-data regularization", initial_data),
        ("eps sweep", eps_sweep),
        ("concentration", concentration),
        ("determinism and resume", determinism_and_resume),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name:<28} PASS ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name:<28} FAIL ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
