use super::diagnostics::{diagnose, StateDiagnostics};
use super::energy::EnergyLedger;
use super::integrator::step;
use super::monitor::{EstimateReport, Monitor};
use super::{Result, SimConfig, SimState};

/// One row of the per-step run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    /// Ledger closed against the previous step.
    pub ledger: EnergyLedger,
    pub dissipation_integral: f64,
    pub max_abs_u: f64,
    pub norm_v_u: f64,
    pub norm_h_v: f64,
    pub norm_vprime_v: f64,
    pub newton_iters: usize,
    /// `E(t_n) - E(t_{n+1}) - dt (delta ||v||_H^2 + ||v||_{V'}^2)`, the
    /// slack in the discrete energy balance. Nonnegative up to roundoff.
    pub energy_defect: f64,
}

impl StepRecord {
    fn from_diagnostics(state: &SimState, d: &StateDiagnostics, newton_iters: usize) -> Self {
        Self {
            step: state.step,
            t: state.t,
            ledger: d.ledger,
            dissipation_integral: state.dissipation_integral,
            max_abs_u: d.max_abs_u,
            norm_v_u: d.u_norms.v,
            norm_h_v: d.v_norms.h,
            norm_vprime_v: d.v_norms.vprime,
            newton_iters,
            energy_defect: 0.0,
        }
    }
}

/// Sequential driver for one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    state: SimState,
    last: StepRecord,
    diagnostics: StateDiagnostics,
    monitor: Monitor,
}

impl Simulation {
    /// Starts (or resumes) a run from `state`. Monitors only see the run
    /// from `state` onward.
    pub fn new(cfg: SimConfig, state: SimState) -> Result<Self> {
        cfg.validate()?;
        state.u.grid().check_same(&cfg.grid)?;
        state.v.grid().check_same(&cfg.grid)?;
        let diagnostics = diagnose(&state, &cfg);
        let mut monitor = Monitor::new(cfg.t_final);
        monitor.observe_initial(&diagnostics);
        let last = StepRecord::from_diagnostics(&state, &diagnostics, 0);
        Ok(Self {
            cfg,
            state,
            last,
            diagnostics,
            monitor,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn diagnostics(&self) -> &StateDiagnostics {
        &self.diagnostics
    }

    /// Record of the current state (the initial one before any step).
    pub fn record(&self) -> StepRecord {
        self.last
    }

    pub fn monitors(&self) -> EstimateReport {
        self.monitor.report()
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.cfg.num_steps()
    }

    /// Advances one step and returns its record.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let out = step(&self.state, &self.cfg)?;
        let d = diagnose(&out.state, &self.cfg);
        let increment = out.state.dissipation_integral - self.state.dissipation_integral;
        let prev = self.last.ledger;
        let ledger = d.ledger.with_window(&prev, increment);
        let mut rec = StepRecord::from_diagnostics(&out.state, &d, out.newton_iters);
        rec.ledger = ledger;
        rec.energy_defect = prev.total - ledger.total - increment;
        self.monitor
            .observe_step(&d, out.state.t, out.state.t - self.state.t);
        self.state = out.state;
        self.diagnostics = StateDiagnostics { ledger, ..d };
        self.last = rec;
        Ok(rec)
    }

    /// Runs to `T`, handing every record (including the starting one) to `sink`.
    pub fn run_with(&mut self, mut sink: impl FnMut(&StepRecord, &SimState)) -> Result<()> {
        sink(&self.last, &self.state);
        while !self.is_finished() {
            let rec = self.advance()?;
            sink(&rec, &self.state);
        }
        Ok(())
    }

    /// Runs to `T` and returns all records.
    pub fn run_to_end(&mut self) -> Result<Vec<StepRecord>> {
        let mut out = Vec::new();
        self.run_with(|r, _| out.push(*r))?;
        Ok(out)
    }
}
