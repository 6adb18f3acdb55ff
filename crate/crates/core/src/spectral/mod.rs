//! Dirichlet Laplacian calculus on the unit interval and the unit square.
//!
//! Fields are stored as coefficients in the exact eigenbasis
//! `phi_k(x) = sqrt(2) sin(k pi x)` (tensor products in 2-D), normalized to
//! unit `L^2` norm. In that basis `A = -Laplace` is diagonal with
//! eigenvalues `(k pi)^2`, so fractional powers and the `H`, `V`, `V'` and
//! `D(A)` norms are weighted `l^2` sums.
//!
//! Point values live on the uniform interior collocation grid
//! `x_j = j / (m + 1)`, `j = 1..=m`. With `m = n` the discrete sine transform
//! is an exact bijection and the trapezoid rule reproduces the `H` inner
//! product on the span of the basis. A padded grid is available for the
//! 3/2-rule evaluation of nonlinear terms.

mod basis;
mod field;

pub use basis::Collocation;
pub use field::{Norms, SpectralField};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },
}

/// Spectral grid on `(0,1)^dim` with `n` interior modes per axis.
///
/// Cheap to clone: transform tables are shared.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    data: Arc<GridData>,
}

struct GridData {
    eigenvalues: Vec<f64>,
    collocation: Collocation,
    padded: Collocation,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self, SpectralError> {
        if dim != 1 && dim != 2 {
            return Err(SpectralError::InvalidArgument(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if n < 4 {
            return Err(SpectralError::InvalidArgument(format!(
                "need at least 4 modes per axis, got {n}"
            )));
        }
        let axis: Vec<f64> = (1..=n).map(|k| (k as f64 * PI).powi(2)).collect();
        let eigenvalues = if dim == 1 {
            axis
        } else {
            let mut ev = Vec::with_capacity(n * n);
            for &a in &axis {
                for &b in &axis {
                    ev.push(a + b);
                }
            }
            ev
        };
        // 3/2 rule: (m + 1) >= 3 (n + 1) / 2.
        let padded_m = (3 * (n + 1)).div_ceil(2) - 1;
        Ok(Self {
            dim,
            n,
            data: Arc::new(GridData {
                eigenvalues,
                collocation: Collocation::new(dim, n, n),
                padded: Collocation::new(dim, n, padded_m),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Modes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of modes, `n^dim`.
    pub fn modes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Physical collocation spacing `1 / (n + 1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// Eigenvalues of `A`, in coefficient order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.data.eigenvalues
    }

    /// Flat coefficient index of the mode with 1-based wavenumbers.
    pub fn mode_index(&self, wavenumbers: &[usize]) -> Option<usize> {
        if wavenumbers.len() != self.dim || wavenumbers.iter().any(|&k| k == 0 || k > self.n) {
            return None;
        }
        Some(wavenumbers.iter().fold(0, |acc, &k| acc * self.n + (k - 1)))
    }

    /// The standard (`dealias = false`) or 3/2-padded collocation grid.
    pub fn collocation(&self, dealias: bool) -> &Collocation {
        if dealias {
            &self.data.padded
        } else {
            &self.data.collocation
        }
    }

    pub fn check_same(&self, other: &Grid) -> Result<(), SpectralError> {
        if self == other {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch {
                left: format!("{self:?}"),
                right: format!("{other:?}"),
            })
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid(dim={}, n={})", self.dim, self.n)
    }
}

/// Coefficients of the sine expansion interpolating `values` at the
/// collocation points of `grid`.
pub fn to_spectral(values: &[f64], grid: &Grid) -> Result<SpectralField, SpectralError> {
    let colloc = grid.collocation(false);
    if values.len() != colloc.num_points() {
        return Err(SpectralError::InvalidArgument(format!(
            "expected {} collocation values, got {}",
            colloc.num_points(),
            values.len()
        )));
    }
    SpectralField::new(grid.clone(), colloc.analyze(values))
}
