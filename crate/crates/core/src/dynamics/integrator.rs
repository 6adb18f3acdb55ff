use nalgebra::{DMatrix, DVector};

use super::{DynamicsError, Result, SimConfig, SimState};
use crate::spectral::SpectralField;

/// Retry depth of the dt-halving ladder before a step is abandoned.
pub const MAX_HALVINGS: u32 = 10;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Result of advancing one full step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    /// Newton linear solves, summed over substeps.
    pub newton_iters: usize,
    /// Deepest dt-halving level used (0 when the full step succeeded).
    pub halvings: u32,
    /// Largest accepted residual over the substeps.
    pub residual: f64,
}

/// One implicit Euler step of size `cfg.dt`.
///
/// If Newton fails, the step is redone as two half steps, recursively, up
/// to [`MAX_HALVINGS`] levels deep.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<StepOutcome> {
    state.u.grid().check_same(&cfg.grid)?;
    state.v.grid().check_same(&cfg.grid)?;
    let mut acc = Accum::default();
    let (u, v) = advance(cfg, &state.u, &state.v, cfg.dt, 0, &mut acc).map_err(|residual| {
        DynamicsError::StepFailure {
            step: state.step + 1,
            residual,
            halvings: MAX_HALVINGS,
        }
    })?;
    let next = state.step + 1;
    Ok(StepOutcome {
        state: SimState {
            u,
            v,
            t: cfg.time_of(next),
            step: next,
            dissipation_integral: state.dissipation_integral + acc.dissipation,
        },
        newton_iters: acc.iters,
        halvings: acc.depth,
        residual: acc.residual,
    })
}

#[derive(Default)]
struct Accum {
    iters: usize,
    depth: u32,
    residual: f64,
    dissipation: f64,
}

fn advance(
    cfg: &SimConfig,
    u: &SpectralField,
    v: &SpectralField,
    dt: f64,
    level: u32,
    acc: &mut Accum,
) -> std::result::Result<(SpectralField, SpectralField), f64> {
    match newton(cfg, u, v, dt) {
        Ok(sol) => {
            acc.iters += sol.iters;
            acc.depth = acc.depth.max(level);
            acc.residual = acc.residual.max(sol.residual);
            let vn = &sol.v;
            let (h, vp) = (vn.norm_h(), vn.norm_vprime());
            acc.dissipation += dt * (cfg.delta * h * h + vp * vp);
            Ok((sol.u, sol.v))
        }
        Err(fail) => {
            acc.iters += fail.iters;
            if level >= MAX_HALVINGS {
                return Err(fail.residual);
            }
            let half = 0.5 * dt;
            let (um, vm) = advance(cfg, u, v, half, level + 1, acc)?;
            advance(cfg, &um, &vm, half, level + 1, acc)
        }
    }
}

struct Solved {
    u: SpectralField,
    v: SpectralField,
    iters: usize,
    residual: f64,
}

struct Failed {
    iters: usize,
    residual: f64,
}

/// Residual, merit value and pointwise slopes at one Newton iterate.
struct Eval {
    f: Vec<f64>,
    residual: f64,
    merit: f64,
    slopes: Vec<f64>,
}

/// The substep equation, multiplied through by `A^{-1}`:
///
/// ```text
/// F(c) = diag * c - b + P beta_eps(Phi c) = 0
/// diag_k = (alpha/dt^2 + 1/dt)/mu_k + delta/dt + mu_k - lambda
/// b_k    = (alpha/dt^2 + 1/dt) u_k/mu_k + (alpha/dt) v_k/mu_k + (delta/dt) u_k
/// ```
///
/// `F` is the gradient of `0.5 diag c^2 - b c + J_eps(Phi c)`, used as the
/// line-search merit. The reported residual is `dt ||A F||_{V'} = dt ||F||_V`.
struct Substep<'a> {
    cfg: &'a SimConfig,
    dt: f64,
    diag: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> Substep<'a> {
    fn new(cfg: &'a SimConfig, u: &SpectralField, v: &SpectralField, dt: f64) -> Self {
        let mu = cfg.grid.eigenvalues();
        let inertia = cfg.alpha / (dt * dt) + 1.0 / dt;
        let diag = mu
            .iter()
            .map(|&m| inertia / m + cfg.delta / dt + m - cfg.lambda())
            .collect();
        let b = u
            .coeffs()
            .iter()
            .zip(v.coeffs())
            .zip(mu)
            .map(|((&uk, &vk), &m)| inertia * uk / m + cfg.alpha / dt * vk / m + cfg.delta / dt * uk)
            .collect();
        Self { cfg, dt, diag, b }
    }

    fn eval(&self, c: &[f64]) -> Option<Eval> {
        let cfg = self.cfg;
        let colloc = cfg.grid.collocation(cfg.dealias);
        let pts = colloc.synthesize(c);
        let mut values = Vec::with_capacity(pts.len());
        let mut slopes = Vec::with_capacity(pts.len());
        let mut j = 0.0;
        for &r in &pts {
            if !r.is_finite() {
                return None;
            }
            let p = cfg.potential.pointwise(r, cfg.eps);
            values.push(p.value);
            slopes.push(p.slope);
            j += p.energy;
        }
        let nonlinear = colloc.analyze(&values);
        let mut merit = colloc.weight() * j;
        let mut norm_v = 0.0;
        let f: Vec<f64> = (0..c.len())
            .map(|k| {
                merit += 0.5 * self.diag[k] * c[k] * c[k] - self.b[k] * c[k];
                let fk = self.diag[k] * c[k] - self.b[k] + nonlinear[k];
                norm_v += cfg.grid.eigenvalues()[k] * fk * fk;
                fk
            })
            .collect();
        let residual = self.dt * norm_v.sqrt();
        residual.is_finite().then_some(Eval {
            f,
            residual,
            merit,
            slopes,
        })
    }

    fn jacobian(&self, slopes: &[f64]) -> DMatrix<f64> {
        let colloc = self.cfg.grid.collocation(self.cfg.dealias);
        let modes = self.diag.len();
        let w = colloc.weight();
        let mut jac = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        let mut phi = Vec::with_capacity(modes);
        for (p, &s) in slopes.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            colloc.basis_at(p, &mut phi);
            let ws = w * s;
            for col in 0..modes {
                let a = ws * phi[col];
                if a == 0.0 {
                    continue;
                }
                for row in 0..modes {
                    jac[(row, col)] += a * phi[row];
                }
            }
        }
        jac
    }
}

fn newton(
    cfg: &SimConfig,
    u: &SpectralField,
    v: &SpectralField,
    dt: f64,
) -> std::result::Result<Solved, Failed> {
    let sub = Substep::new(cfg, u, v, dt);
    // Explicit predictor.
    let mut c: Vec<f64> = u
        .coeffs()
        .iter()
        .zip(v.coeffs())
        .map(|(a, b)| a + dt * b)
        .collect();
    let mut cur = match sub.eval(&c) {
        Some(e) => e,
        None => {
            return Err(Failed {
                iters: 0,
                residual: f64::INFINITY,
            })
        }
    };
    let mut iters = 0;
    loop {
        if cur.residual <= cfg.newton_tol {
            let grid = &cfg.grid;
            let vn: Vec<f64> = c.iter().zip(u.coeffs()).map(|(a, b)| (a - b) / dt).collect();
            return Ok(Solved {
                u: SpectralField::new(grid.clone(), c).expect("mode count preserved"),
                v: SpectralField::new(grid.clone(), vn).expect("mode count preserved"),
                iters,
                residual: cur.residual,
            });
        }
        if iters >= cfg.newton_max_iter {
            return Err(Failed {
                iters,
                residual: cur.residual,
            });
        }
        iters += 1;

        let jac = sub.jacobian(&cur.slopes);
        let rhs = DVector::from_iterator(c.len(), cur.f.iter().map(|x| -x));
        let (dir, convex) = match jac.clone().cholesky() {
            Some(ch) => (ch.solve(&rhs), true),
            None => match jac.lu().solve(&rhs) {
                Some(d) => (d, false),
                None => {
                    return Err(Failed {
                        iters,
                        residual: cur.residual,
                    })
                }
            },
        };
        let slope: f64 = cur.f.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = c.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            if let Some(e) = sub.eval(&trial) {
                let sufficient = e.merit <= cur.merit + ARMIJO * t * slope;
                let smaller = e.residual <= (1.0 - ARMIJO * t) * cur.residual;
                if !convex || sufficient || smaller {
                    accepted = Some((trial, e));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, e)) => {
                c = trial;
                cur = e;
            }
            None => {
                return Err(Failed {
                    iters,
                    residual: cur.residual,
                })
            }
        }
    }
}
