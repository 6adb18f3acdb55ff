use super::energy::functional_j;
use super::{DynamicsError, Result, SimConfig};
use crate::spectral::SpectralField;

/// Pointwise tolerance on `|u0| <= 1`.
const CONSTRAINT_TOL: f64 = 1e-12;

/// Smooths initial data with the resolvent `(I + eps A)^{-1}`.
///
/// Diagonal in the eigenbasis: `c_k -> c_k / (1 + eps mu_k)`. Rejects `u0`
/// whose collocation values leave `[-1, 1]`.
pub fn regularize_initial_data(
    u0: &SpectralField,
    u1: &SpectralField,
    eps: f64,
) -> Result<(SpectralField, SpectralField)> {
    u0.grid().check_same(u1.grid())?;
    if !(eps > 0.0) {
        return Err(DynamicsError::InvalidConfig(format!("eps must be > 0, got {eps}")));
    }
    let max_abs = u0.max_abs();
    if max_abs > 1.0 + CONSTRAINT_TOL {
        return Err(DynamicsError::ConstraintViolation { max_abs });
    }
    let smooth = |mu: f64| 1.0 / (1.0 + eps * mu);
    Ok((u0.map_spectrum(smooth), u1.map_spectrum(smooth)))
}

/// Runtime check of `J_eps(u0_eps) <= J(u0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialEnergyCheck {
    pub j_eps_regularized: f64,
    pub j_original: f64,
    pub holds: bool,
}

pub fn check_initial_energy(
    u0: &SpectralField,
    u0_eps: &SpectralField,
    cfg: &SimConfig,
) -> InitialEnergyCheck {
    let colloc = cfg.grid.collocation(cfg.dealias);
    let j_eps_regularized = colloc.weight()
        * colloc
            .synthesize(u0_eps.coeffs())
            .iter()
            .map(|&r| cfg.potential.pointwise(r, cfg.eps).energy)
            .sum::<f64>();
    let j_original = functional_j(u0, &cfg.potential, cfg.dealias);
    InitialEnergyCheck {
        j_eps_regularized,
        j_original,
        holds: j_eps_regularized <= j_original,
    }
}

/// Initial data as handed to the integrator for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInitialData {
    pub u0: SpectralField,
    pub u1: SpectralField,
    /// `None` for the smooth control potential, which uses the data as given.
    pub energy_check: Option<InitialEnergyCheck>,
}

/// Regularizes initial data for singular potentials and verifies the
/// energy inequality; passes data through unchanged for the smooth kind so
/// that control runs do not depend on `eps`.
pub fn prepare_initial_data(
    u0: &SpectralField,
    u1: &SpectralField,
    cfg: &SimConfig,
) -> Result<PreparedInitialData> {
    u0.grid().check_same(&cfg.grid)?;
    u1.grid().check_same(&cfg.grid)?;
    if !cfg.potential.kind().is_singular() {
        return Ok(PreparedInitialData {
            u0: u0.clone(),
            u1: u1.clone(),
            energy_check: None,
        });
    }
    let (a, b) = regularize_initial_data(u0, u1, cfg.eps)?;
    let check = check_initial_energy(u0, &a, cfg);
    Ok(PreparedInitialData {
        u0: a,
        u1: b,
        energy_check: Some(check),
    })
}
