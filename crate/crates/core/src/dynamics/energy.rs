use super::{SimConfig, SimState};
use crate::potential::PotentialSpec;
use crate::spectral::SpectralField;

/// Components of the regularized energy at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyLedger {
    /// `(alpha/2) ||u_t||_{V'}^2`
    pub kinetic: f64,
    /// `(1/2) ||A^{1/2} u||_H^2`
    pub dirichlet: f64,
    /// `J_eps(u)` by collocation quadrature.
    pub potential: f64,
    /// `(lambda/2) ||u||_H^2`
    pub concave: f64,
    pub total: f64,
    /// `max(0, E(t2) + dissipation(t1, t2) - E(t1))` over the window the
    /// ledger was closed against; zero for a ledger without a window.
    pub inequality_residual: f64,
}

impl EnergyLedger {
    pub(crate) fn assemble(cfg: &SimConfig, state: &SimState, potential: f64) -> Self {
        let vp = state.v.norm_vprime();
        let v = state.u.norm_v();
        let h = state.u.norm_h();
        let kinetic = 0.5 * cfg.alpha * vp * vp;
        let dirichlet = 0.5 * v * v;
        let concave = 0.5 * cfg.lambda() * h * h;
        Self {
            kinetic,
            dirichlet,
            potential,
            concave,
            total: kinetic + dirichlet + potential - concave,
            inequality_residual: 0.0,
        }
    }

    /// Closes this ledger (at `t2`) against an earlier one, given the
    /// dissipation accumulated in between.
    pub fn with_window(mut self, earlier: &EnergyLedger, dissipation: f64) -> Self {
        self.inequality_residual = (self.total + dissipation - earlier.total).max(0.0);
        self
    }
}

/// Energy ledger of a state; `J_eps` uses the integrator's collocation grid.
pub fn energy(state: &SimState, cfg: &SimConfig) -> EnergyLedger {
    let colloc = cfg.grid.collocation(cfg.dealias);
    let pts = colloc.synthesize(state.u.coeffs());
    let j: f64 = pts
        .iter()
        .map(|&r| cfg.potential.pointwise(r, cfg.eps).energy)
        .sum();
    EnergyLedger::assemble(cfg, state, colloc.weight() * j)
}

/// `J(u) = int j(u)` by the same quadrature; `+inf` if `u` leaves the domain.
pub fn functional_j(u: &SpectralField, spec: &PotentialSpec, dealias: bool) -> f64 {
    let colloc = u.grid().collocation(dealias);
    colloc.weight() * colloc.synthesize(u.coeffs()).iter().map(|&r| spec.j(r)).sum::<f64>()
}
