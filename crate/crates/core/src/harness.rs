//! The `eps -> 0` sweep: a ladder of regularized runs at fixed
//! discretization, their Cauchy differences, duality pairings and
//! concentration diagnostics for `eta_eps = beta_eps(u_eps)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    diagnose, prepare_initial_data, DynamicsError, EnergyLedger, EstimateReport, InitialEnergyCheck,
    Monitor, SimConfig, SimState, StepRecord, step,
};
use crate::spectral::SpectralField;

pub const DEFAULT_LADDER: [f64; 4] = [1e-1, 5e-2, 2.5e-2, 1.25e-2];

/// Fractions of `T` at which energy snapshots are taken.
pub const SNAPSHOT_FRACTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Relative tolerance of the duality limsup check.
pub const DUALITY_REL_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("sweep report is incomplete: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// A ladder of runs sharing grid, time step and initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Its `eps` is ignored.
    pub base: SimConfig,
    pub eps_ladder: Vec<f64>,
    /// Keep every `k`-th state of each rung, if set.
    pub stored_fields: Option<u64>,
    /// Scale `dt` with `eps` (`dt_i = dt eps_i / eps_0`).
    pub joint_refine: bool,
    pub u0: SpectralField,
    pub u1: SpectralField,
}

impl SweepPlan {
    pub fn new(base: SimConfig, u0: SpectralField, u1: SpectralField) -> Self {
        Self {
            base,
            eps_ladder: DEFAULT_LADDER.to_vec(),
            stored_fields: None,
            joint_refine: false,
            u0,
            u1,
        }
    }

    pub fn with_ladder(mut self, ladder: &[f64]) -> Self {
        self.eps_ladder = ladder.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.eps_ladder;
        if l.len() < 3 {
            return Err(HarnessError::InvalidPlan(format!(
                "ladder needs at least 3 rungs, got {}",
                l.len()
            )));
        }
        if l.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(HarnessError::InvalidPlan(format!("ladder entries must lie in (0, 1): {l:?}")));
        }
        if l.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HarnessError::InvalidPlan(format!("ladder must be strictly decreasing: {l:?}")));
        }
        if self.stored_fields == Some(0) {
            return Err(HarnessError::InvalidPlan("stored-field stride must be >= 1".into()));
        }
        if self.joint_refine {
            for w in l.windows(2) {
                let ratio = w[0] / w[1];
                if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    return Err(HarnessError::InvalidPlan(format!(
                        "joint refinement needs integer ratios between rungs, got {ratio}"
                    )));
                }
            }
        }
        for i in 0..l.len() {
            self.rung_config(i).validate()?;
        }
        self.u0.grid().check_same(&self.base.grid).map_err(DynamicsError::from)?;
        self.u1.grid().check_same(&self.base.grid).map_err(DynamicsError::from)?;
        Ok(())
    }

    pub fn rung_config(&self, i: usize) -> SimConfig {
        let eps = self.eps_ladder[i];
        let mut cfg = self.base.with_eps(eps);
        if self.joint_refine {
            cfg.dt = self.base.dt * eps / self.eps_ladder[0];
        }
        cfg
    }
}

/// Everything measured on one rung.
#[derive(Debug, Clone, PartialEq)]
pub struct RungOutput {
    pub eps: f64,
    pub config: SimConfig,
    /// Per-step records, starting with the initial state.
    pub records: Vec<StepRecord>,
    /// States kept at the stored-field stride (always including the first).
    pub stored: Vec<SimState>,
    pub monitors: EstimateReport,
    pub initial_check: Option<InitialEnergyCheck>,
    /// `||u0_eps - u0||_V`.
    pub initial_error_v: f64,
    /// `||beta_eps(u(t))||_{L^1}` per time level.
    pub eta_time_profile: Vec<f64>,
    /// `int_0^T (beta_eps(u), u) dt`.
    pub duality_pairing: f64,
    /// Peak-to-mean ratio of the profile, `>= 1`.
    pub concentration_index: f64,
    /// `(t, ledger)` at [`SNAPSHOT_FRACTIONS`] of `T`.
    pub energy_snapshots: Vec<(f64, EnergyLedger)>,
    /// Largest windowed inequality residual over all snapshot pairs.
    pub max_window_residual: f64,
    /// Sum of the per-step energy defects.
    pub energy_defect_integral: f64,
    /// `max (|u| - 1)_+` over the run.
    pub max_excess: f64,
    /// Cauchy-Schwarz bound on the duality pairing built from the same
    /// norms; with the pointwise bound `beta r >= c1 |beta| - c2` it controls
    /// the `L^1(L^1)` mass of `beta_eps(u)`.
    pub estxx_rhs: f64,
    trajectory: Trajectory,
}

impl RungOutput {
    /// Bound on `||beta_eps(u)||_{L^1(L^1)}` implied by [`Self::estxx_rhs`].
    pub fn estbeta_bound(&self, c1: f64, c2: f64) -> f64 {
        (self.estxx_rhs + c2 * self.config.t_final) / c1
    }
}

/// Coefficients of `u` and `u_t` at every time level of a rung.
#[derive(Debug, Clone, PartialEq, Default)]
struct Trajectory {
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub eps_ladder: Vec<f64>,
    /// Completed rungs in ladder order.
    pub rungs: Vec<RungOutput>,
    /// `||u^{i+1} - u^i||_{L^2(0,T;V)}` for consecutive rungs.
    pub cauchy_l2v_of_u: Vec<f64>,
    /// `||u_t^{i+1} - u_t^i||_{L^2(0,T;V')}` for consecutive rungs.
    pub cauchy_l2vprime_of_ut: Vec<f64>,
    /// Right side of the pairing identity on the finest trajectory.
    pub duality_rhs: f64,
    /// `duality_pairing_i - duality_rhs`.
    pub duality_gaps: Vec<f64>,
    pub complete: bool,
    /// First rung failure, if any.
    pub failure: Option<String>,
}

impl SweepReport {
    pub fn duality_pairing(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.duality_pairing).collect()
    }

    pub fn concentration_index(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.concentration_index).collect()
    }

    /// Least-squares slope of `log M` against `log eps` for each monitor.
    pub fn monitor_slopes(&self) -> [f64; 7] {
        let x: Vec<f64> = self.rungs.iter().map(|r| r.eps.ln()).collect();
        std::array::from_fn(|k| {
            let y: Vec<f64> = self.rungs.iter().map(|r| r.monitors.values()[k]).collect();
            loglog_slope(&x, &y)
        })
    }

    /// Largest value of each monitor across the ladder.
    pub fn monitor_maxima(&self) -> [f64; 7] {
        std::array::from_fn(|k| {
            self.rungs
                .iter()
                .map(|r| r.monitors.values()[k])
                .fold(0.0, f64::max)
        })
    }
}

/// Slope of `ln y` against `x`; zero when any value vanishes (no trend to
/// measure).
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if y.iter().any(|&v| !(v > 0.0)) || x.len() < 2 {
        return 0.0;
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs every rung (in parallel) and assembles the report.
///
/// A step failure on any rung yields `Ok` with `complete == false`; the
/// completed rungs are still reported, cross-rung fields are left empty.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let outputs: Vec<std::result::Result<RungOutput, DynamicsError>> = (0..plan.eps_ladder.len())
        .into_par_iter()
        .map(|i| run_rung(plan, i))
        .collect();

    let mut rungs = Vec::new();
    let mut failure = None;
    for (out, eps) in outputs.into_iter().zip(&plan.eps_ladder) {
        match out {
            Ok(r) => rungs.push(r),
            Err(e) => {
                failure.get_or_insert_with(|| format!("eps = {eps}: {e}"));
            }
        }
    }
    let mut report = SweepReport {
        eps_ladder: plan.eps_ladder.clone(),
        rungs,
        cauchy_l2v_of_u: Vec::new(),
        cauchy_l2vprime_of_ut: Vec::new(),
        duality_rhs: 0.0,
        duality_gaps: Vec::new(),
        complete: failure.is_none(),
        failure,
    };
    if !report.complete {
        return Ok(report);
    }
    for w in report.rungs.windows(2) {
        let (a, b) = cauchy(&w[0], &w[1]);
        report.cauchy_l2v_of_u.push(a);
        report.cauchy_l2vprime_of_ut.push(b);
    }
    let finest = report.rungs.last().expect("ladder has rungs");
    report.duality_rhs = pairing_identity_rhs(finest);
    report.duality_gaps = report
        .rungs
        .iter()
        .map(|r| r.duality_pairing - report.duality_rhs)
        .collect();
    Ok(report)
}

fn run_rung(plan: &SweepPlan, i: usize) -> std::result::Result<RungOutput, DynamicsError> {
    let cfg = plan.rung_config(i);
    let prep = prepare_initial_data(&plan.u0, &plan.u1, &cfg)?;
    let initial_error_v = prep.u0.axpy(-1.0, &plan.u0)?.norm_v();
    let mut state = SimState::initial(prep.u0, prep.u1)?;
    let steps = cfg.num_steps();
    let stride = plan.stored_fields;

    let d0 = diagnose(&state, &cfg);
    let mut monitor = Monitor::new(cfg.t_final);
    monitor.observe_initial(&d0);
    let mut records = vec![record(&state, &d0, 0, d0.ledger, 0.0)];
    let mut stored = Vec::new();
    if stride.is_some() {
        stored.push(state.clone());
    }
    let mut traj = Trajectory::default();
    traj.u.push(state.u.coeffs().to_vec());
    traj.v.push(state.v.coeffs().to_vec());
    let mut profile = vec![d0.eta_l1];
    let mut max_excess = (d0.max_abs_u - 1.0).max(0.0);
    let (mut pairing, mut defects) = (0.0, 0.0);
    let mut prev_ledger = d0.ledger;

    while state.step < steps {
        let out = step(&state, &cfg)?;
        let next = out.state;
        let dt = next.t - state.t;
        let d = diagnose(&next, &cfg);
        let increment = next.dissipation_integral - state.dissipation_integral;
        let ledger = d.ledger.with_window(&prev_ledger, increment);
        let defect = prev_ledger.total - ledger.total - increment;
        defects += defect;
        pairing += dt * d.eta_pairing;
        monitor.observe_step(&d, next.t, dt);
        profile.push(d.eta_l1);
        max_excess = max_excess.max(d.max_abs_u - 1.0);
        records.push(record(&next, &d, out.newton_iters, ledger, defect));
        traj.u.push(next.u.coeffs().to_vec());
        traj.v.push(next.v.coeffs().to_vec());
        if let Some(k) = stride {
            if next.step % k == 0 || next.step == steps {
                stored.push(next.clone());
            }
        }
        prev_ledger = ledger;
        state = next;
    }

    let energy_snapshots: Vec<(f64, EnergyLedger)> = SNAPSHOT_FRACTIONS
        .iter()
        .map(|f| {
            let k = (f * steps as f64).round() as usize;
            (records[k].t, records[k].ledger)
        })
        .collect();
    let snap_diss: Vec<f64> = SNAPSHOT_FRACTIONS
        .iter()
        .map(|f| records[(f * steps as f64).round() as usize].dissipation_integral)
        .collect();
    let mut max_window_residual: f64 = 0.0;
    for a in 0..energy_snapshots.len() {
        for b in a + 1..energy_snapshots.len() {
            let w = energy_snapshots[b]
                .1
                .with_window(&energy_snapshots[a].1, snap_diss[b] - snap_diss[a]);
            max_window_residual = max_window_residual.max(w.inequality_residual);
        }
    }

    let dt = cfg.dt;
    let mass: f64 = profile[1..].iter().map(|p| dt * p).sum();
    let peak = profile[1..].iter().fold(0.0, |m: f64, &p| m.max(p));
    let concentration_index = if mass > 0.0 {
        (peak * cfg.t_final / mass).max(1.0)
    } else {
        1.0
    };

    let mut out = RungOutput {
        eps: cfg.eps,
        estxx_rhs: 0.0,
        records,
        stored,
        monitors: monitor.report(),
        initial_check: prep.energy_check,
        initial_error_v,
        eta_time_profile: profile,
        duality_pairing: pairing,
        concentration_index,
        energy_snapshots,
        max_window_residual,
        energy_defect_integral: defects,
        max_excess,
        trajectory: traj,
        config: cfg,
    };
    out.estxx_rhs = estxx_rhs(&out);
    Ok(out)
}

fn record(state: &SimState, d: &crate::dynamics::StateDiagnostics, iters: usize, ledger: EnergyLedger, defect: f64) -> StepRecord {
    StepRecord {
        step: state.step,
        t: state.t,
        ledger,
        dissipation_integral: state.dissipation_integral,
        max_abs_u: d.max_abs_u,
        norm_v_u: d.u_norms.v,
        norm_h_v: d.v_norms.h,
        norm_vprime_v: d.v_norms.vprime,
        newton_iters: iters,
        energy_defect: defect,
    }
}

/// Weighted inner product `sum mu^s a_k b_k`.
fn dot(mu: &[f64], s: i32, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mu)
        .map(|((x, y), m)| m.powi(s) * x * y)
        .sum()
}

fn diff_norm_sq(mu: &[f64], s: i32, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mu)
        .map(|((x, y), m)| m.powi(s) * (x - y) * (x - y))
        .sum()
}

/// Cauchy differences between two rungs on the coarser rung's time grid,
/// right-endpoint rule.
fn cauchy(a: &RungOutput, b: &RungOutput) -> (f64, f64) {
    let mu = a.config.grid.eigenvalues();
    let ratio = (a.config.dt / b.config.dt).round() as usize;
    let dt = a.config.dt;
    let (mut su, mut sv) = (0.0, 0.0);
    for n in 1..a.trajectory.u.len() {
        let m = n * ratio;
        su += dt * diff_norm_sq(mu, 1, &a.trajectory.u[n], &b.trajectory.u[m]);
        sv += dt * diff_norm_sq(mu, -1, &a.trajectory.v[n], &b.trajectory.v[m]);
    }
    (su.sqrt(), sv.sqrt())
}

/// Right side of the discrete pairing identity obtained by testing the
/// scheme with `u^{n+1}` and summing by parts:
///
/// ```text
/// sum dt (beta(u^{n+1}), u^{n+1})
///   = -alpha (v^N, u^N)_* + alpha (v^0, u^1)_* + alpha sum_{n=1}^{N-1} dt (v^n, v^{n+1})_*
///     - sum dt (v^{n+1}, u^{n+1})_* - delta sum dt (v^{n+1}, u^{n+1})
///     - sum dt |u^{n+1}|_V^2 + lambda sum dt |u^{n+1}|_H^2
/// ```
fn pairing_identity_rhs(r: &RungOutput) -> f64 {
    let cfg = &r.config;
    let mu = cfg.grid.eigenvalues();
    let (u, v) = (&r.trajectory.u, &r.trajectory.v);
    let n = u.len() - 1;
    let dt = cfg.dt;
    let mut rhs = -cfg.alpha * dot(mu, -1, &v[n], &u[n]) + cfg.alpha * dot(mu, -1, &v[0], &u[1]);
    for m in 1..n {
        rhs += cfg.alpha * dt * dot(mu, -1, &v[m], &v[m + 1]);
    }
    for m in 1..=n {
        rhs -= dt * dot(mu, -1, &v[m], &u[m]);
        rhs -= cfg.delta * dt * dot(mu, 0, &v[m], &u[m]);
        rhs -= dt * dot(mu, 1, &u[m], &u[m]);
        rhs += cfg.lambda() * dt * dot(mu, 0, &u[m], &u[m]);
    }
    rhs
}

/// Cauchy-Schwarz bound on every term of [`pairing_identity_rhs`].
fn estxx_rhs(r: &RungOutput) -> f64 {
    let cfg = &r.config;
    let mu = cfg.grid.eigenvalues();
    let (u, v) = (&r.trajectory.u, &r.trajectory.v);
    let n = u.len() - 1;
    let dt = cfg.dt;
    let norm = |s: i32, a: &[f64]| dot(mu, s, a, a).sqrt();
    let (mut vv_star, mut uu_star, mut vv_h, mut uu_h, mut uu_v) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for m in 1..=n {
        vv_star += dt * dot(mu, -1, &v[m], &v[m]);
        uu_star += dt * dot(mu, -1, &u[m], &u[m]);
        vv_h += dt * dot(mu, 0, &v[m], &v[m]);
        uu_h += dt * dot(mu, 0, &u[m], &u[m]);
        uu_v += dt * dot(mu, 1, &u[m], &u[m]);
    }
    cfg.alpha * norm(-1, &v[n]) * norm(-1, &u[n])
        + cfg.alpha * norm(-1, &v[0]) * norm(-1, &u[1.min(n)])
        + cfg.alpha * vv_star
        + (vv_star * uu_star).sqrt()
        + cfg.delta * (vv_h * uu_h).sqrt()
        + uu_v
        + cfg.lambda() * uu_h
}

/// Outcome of the discrete limsup inequality for the duality pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityVerdict {
    pub lhs: Vec<f64>,
    pub rhs: f64,
    pub gaps: Vec<f64>,
    pub tol: f64,
    /// Gap at the finest rung within `tol`.
    pub finest_ok: bool,
    /// Gap at the next-to-finest rung is `<= tol` (limsup direction).
    pub one_signed: bool,
    /// `|gap|` does not grow between the last two rungs.
    pub nonincreasing: bool,
    pub pass: bool,
}

pub fn duality_limsup_check(report: &SweepReport) -> Result<DualityVerdict> {
    if !report.complete {
        return Err(HarnessError::Incomplete(
            report.failure.clone().unwrap_or_else(|| "unknown failure".into()),
        ));
    }
    let gaps = report.duality_gaps.clone();
    let k = gaps.len();
    if k < 2 {
        return Err(HarnessError::Incomplete("fewer than two rungs".into()));
    }
    let rhs = report.duality_rhs;
    let tol = (DUALITY_REL_TOL * rhs.abs()).max(1e-12);
    let finest_ok = gaps[k - 1] <= tol;
    let one_signed = gaps[k - 2] <= tol;
    let nonincreasing = gaps[k - 1].abs() <= gaps[k - 2].abs() + tol;
    Ok(DualityVerdict {
        lhs: report.duality_pairing(),
        rhs,
        gaps,
        tol,
        finest_ok,
        one_signed,
        nonincreasing,
        pass: finest_ok && one_signed && nonincreasing,
    })
}
