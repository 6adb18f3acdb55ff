use super::{Grid, SpectralError};

/// The four weighted `l^2` norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `L^2`: `sum c_k^2`.
    pub h: f64,
    /// `H^1_0`: `sum mu_k c_k^2`.
    pub v: f64,
    /// `H^{-1}`: `sum c_k^2 / mu_k`.
    pub vprime: f64,
    /// `D(A)`: `sum mu_k^2 c_k^2`.
    pub da: f64,
}

/// A field on the unit box, stored by its eigenbasis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<f64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.modes() {
            return Err(SpectralError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.modes(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            coeffs: vec![0.0; grid.modes()],
            grid: grid.clone(),
        }
    }

    /// `amplitude * phi_k`; `wavenumbers` are 1-based, one per axis.
    pub fn single_mode(grid: &Grid, wavenumbers: &[usize], amplitude: f64) -> Result<Self, SpectralError> {
        let idx = grid.mode_index(wavenumbers).ok_or_else(|| {
            SpectralError::InvalidArgument(format!("no mode {wavenumbers:?} on {grid:?}"))
        })?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    /// The profile `amplitude * prod_i sin(pi x_i)`, whose maximum is `amplitude`.
    pub fn sine_profile(grid: &Grid, amplitude: f64) -> Self {
        let ones = vec![1; grid.dim()];
        let scale = std::f64::consts::SQRT_2.powi(grid.dim() as i32);
        Self::single_mode(grid, &ones, amplitude / scale).expect("mode 1 exists on every grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Point values on the standard collocation grid.
    pub fn to_values(&self) -> Vec<f64> {
        self.grid.collocation(false).synthesize(&self.coeffs)
    }

    /// Largest absolute collocation value.
    pub fn max_abs(&self) -> f64 {
        self.to_values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies each coefficient by `f(mu_k)`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.eigenvalues())
            .map(|(&c, &mu)| f(mu) * c)
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `A^s u`.
    pub fn apply_power(&self, s: f64) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        self.map_spectrum(|mu| mu.powf(s))
    }

    fn weighted(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.eigenvalues())
            .map(|(&c, &mu)| mu.powf(s) * c * c)
            .sum::<f64>()
    }

    pub fn norms(&self) -> Norms {
        Norms {
            h: self.norm_h(),
            v: self.weighted(1.0).sqrt(),
            vprime: self.weighted(-1.0).sqrt(),
            da: self.weighted(2.0).sqrt(),
        }
    }

    pub fn norm_h(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn norm_v(&self) -> f64 {
        self.weighted(1.0).sqrt()
    }

    pub fn norm_vprime(&self) -> f64 {
        self.weighted(-1.0).sqrt()
    }

    /// `(u, v)` in `H`.
    pub fn inner_h(&self, other: &Self) -> Result<f64, SpectralError> {
        self.grid.check_same(&other.grid)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// `(u, v)_* = <v, A^{-1} u>`.
    pub fn inner_vprime(&self, other: &Self) -> Result<f64, SpectralError> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(self.grid.eigenvalues())
            .map(|((a, b), mu)| a * b / mu)
            .sum())
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self, SpectralError> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + scale * b)
                .collect(),
        })
    }
}
