//! Time integration of the regularized system and its energy bookkeeping.
//!
//! The state is the pair `(u, v = u_t)`. One step of fully implicit Euler
//! solves
//!
//! ```text
//! (u' - u) / dt = v'
//! alpha (v' - v) / dt + v' + A (delta v' + A u' + beta_eps(u') - lambda u') = 0
//! ```
//!
//! for `u'` by Newton's method. The linear part is diagonal in the
//! eigenbasis; `beta_eps(u')` is evaluated pointwise on the collocation grid
//! and projected back.

mod diagnostics;
mod energy;
mod initial;
mod integrator;
mod monitor;
mod run;

pub use diagnostics::{diagnose, StateDiagnostics};
pub use energy::{energy, functional_j, EnergyLedger};
pub use initial::{
    check_initial_energy, prepare_initial_data, regularize_initial_data, InitialEnergyCheck,
    PreparedInitialData,
};
pub use integrator::{step, StepOutcome, MAX_HALVINGS};
pub use monitor::{monitor, EstimateReport, Monitor, DICTIONARY_SIZE};
pub use run::{Simulation, StepRecord};

use thiserror::Error;

use crate::potential::PotentialSpec;
use crate::spectral::{Grid, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial datum leaves [-1, 1]: max |u0| = {max_abs}")]
    ConstraintViolation { max_abs: f64 },
    #[error("step {step} failed after {halvings} dt halvings: last residual {residual:e}")]
    StepFailure {
        step: u64,
        residual: f64,
        halvings: u32,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 50;

/// Parameters of one regularized run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Inertial coefficient, `> 0`.
    pub alpha: f64,
    /// Viscosity, `> 0`.
    pub delta: f64,
    /// Yosida parameter in `(0, 1)`.
    pub eps: f64,
    pub t_final: f64,
    pub dt: f64,
    pub potential: PotentialSpec,
    pub grid: Grid,
    /// Acceptance threshold on `dt * ||R||_{V'}`, where `R` is the residual
    /// of the momentum equation.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Evaluate nonlinear terms on the 3/2-padded grid.
    pub dealias: bool,
}

impl SimConfig {
    /// A configuration with the documented solver defaults.
    pub fn new(grid: Grid, potential: PotentialSpec, alpha: f64, delta: f64, eps: f64, t_final: f64, dt: f64) -> Self {
        Self {
            alpha,
            delta,
            eps,
            t_final,
            dt,
            potential,
            grid,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
            dealias: false,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.potential.lambda()
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(DynamicsError::InvalidConfig(format!("{what} = {v}")));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be > 0, got", self.alpha);
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad("delta must be > 0, got", self.delta);
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must lie in (0, 1), got", self.eps);
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad("T must be > 0, got", self.t_final);
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_final) {
            return bad("dt must lie in (0, T], got", self.dt);
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return bad("newton tolerance must be > 0, got", self.newton_tol);
        }
        if self.newton_max_iter == 0 {
            return Err(DynamicsError::InvalidConfig("newton.max_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `T`; the last step ends at `num_steps * dt >= T`.
    pub fn num_steps(&self) -> u64 {
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as u64
        } else {
            ratio.ceil() as u64
        }
    }

    /// Time of step `k`, computed without accumulation.
    pub fn time_of(&self, step: u64) -> f64 {
        step as f64 * self.dt
    }
}

/// The pair `(u, u_t)` at a time level, plus the running dissipation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
    pub step: u64,
    /// `int_0^t (delta ||u_t||_H^2 + ||u_t||_{V'}^2) ds`, accumulated with
    /// the same right-endpoint rule the scheme uses.
    pub dissipation_integral: f64,
}

impl SimState {
    pub fn initial(u: SpectralField, v: SpectralField) -> Result<Self> {
        u.grid().check_same(v.grid())?;
        Ok(Self {
            u,
            v,
            t: 0.0,
            step: 0,
            dissipation_integral: 0.0,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            u: SpectralField::zeros(grid),
            v: SpectralField::zeros(grid),
            t: 0.0,
            step: 0,
            dissipation_integral: 0.0,
        }
    }
}
