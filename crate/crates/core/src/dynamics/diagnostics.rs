use super::energy::EnergyLedger;
use super::{SimConfig, SimState};
use crate::spectral::Norms;

/// Everything the ledger, monitors and sweep need from one state, computed
/// in a single collocation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDiagnostics {
    pub u_norms: Norms,
    pub v_norms: Norms,
    pub ledger: EnergyLedger,
    pub max_abs_u: f64,
    /// `||beta_eps(u)||_{L^1}`.
    pub eta_l1: f64,
    /// `(beta_eps(u), u)_H`.
    pub eta_pairing: f64,
    /// `(beta_eps(u), psi_b)_H` for the four lowest eigenmodes `psi_b`.
    pub eta_modes: [f64; 4],
}

/// Indices of the four modes with the smallest eigenvalues.
pub(crate) fn lowest_modes(eigenvalues: &[f64]) -> [usize; 4] {
    let mut idx: Vec<usize> = (0..eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    [idx[0], idx[1], idx[2], idx[3]]
}

pub fn diagnose(state: &SimState, cfg: &SimConfig) -> StateDiagnostics {
    let colloc = cfg.grid.collocation(cfg.dealias);
    let w = colloc.weight();
    let pts = colloc.synthesize(state.u.coeffs());
    let mut eta = Vec::with_capacity(pts.len());
    let (mut j, mut l1, mut pairing, mut max_abs) = (0.0, 0.0, 0.0, 0.0_f64);
    for &r in &pts {
        let p = cfg.potential.pointwise(r, cfg.eps);
        j += p.energy;
        l1 += p.value.abs();
        pairing += p.value * r;
        max_abs = max_abs.max(r.abs());
        eta.push(p.value);
    }
    let projected = colloc.analyze(&eta);
    let modes = lowest_modes(cfg.grid.eigenvalues());
    StateDiagnostics {
        u_norms: state.u.norms(),
        v_norms: state.v.norms(),
        ledger: EnergyLedger::assemble(cfg, state, w * j),
        max_abs_u: max_abs,
        eta_l1: w * l1,
        eta_pairing: w * pairing,
        eta_modes: modes.map(|m| projected[m]),
    }
}
