use std::path::Path;

use super::{IoError, Result};
use crate::dynamics::SimState;
use crate::spectral::{Grid, SpectralField};

pub const MAGIC: &[u8; 6] = b"CHVI1\0";

/// Decoded contents of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dim: u32,
    pub n: u32,
    pub step: u64,
    pub t: f64,
    pub eps: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub dissipation_integral: f64,
}

impl Checkpoint {
    pub fn from_state(state: &SimState, eps: f64) -> Self {
        let g = state.u.grid();
        Self {
            dim: g.dim() as u32,
            n: g.n() as u32,
            step: state.step,
            t: state.t,
            eps,
            u: state.u.coeffs().to_vec(),
            v: state.v.coeffs().to_vec(),
            dissipation_integral: state.dissipation_integral,
        }
    }

    /// Rebuilds the state, refusing a grid or `eps` that differs from the run's.
    pub fn into_state(self, grid: &Grid, eps: f64) -> Result<SimState> {
        if self.dim as usize != grid.dim() || self.n as usize != grid.n() {
            return Err(IoError::Checkpoint(format!(
                "grid mismatch: checkpoint has dim={} n={}, config has dim={} n={}",
                self.dim,
                self.n,
                grid.dim(),
                grid.n()
            )));
        }
        if self.eps.to_bits() != eps.to_bits() {
            return Err(IoError::Checkpoint(format!(
                "eps mismatch: checkpoint has {}, config has {eps}",
                self.eps
            )));
        }
        let field = |c| SpectralField::new(grid.clone(), c).map_err(|e| IoError::Checkpoint(e.to_string()));
        Ok(SimState {
            u: field(self.u)?,
            v: field(self.v)?,
            t: self.t,
            step: self.step,
            dissipation_integral: self.dissipation_integral,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(6 + 32 + 8 * (2 * self.u.len() + 1));
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&self.dim.to_le_bytes());
        b.extend_from_slice(&self.n.to_le_bytes());
        b.extend_from_slice(&self.step.to_le_bytes());
        b.extend_from_slice(&self.t.to_le_bytes());
        b.extend_from_slice(&self.eps.to_le_bytes());
        for x in self.u.iter().chain(&self.v) {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b.extend_from_slice(&self.dissipation_integral.to_le_bytes());
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(6)? != MAGIC {
            return Err(IoError::Checkpoint("bad magic: not a CHVI1 checkpoint".into()));
        }
        let dim = r.u32()?;
        let n = r.u32()?;
        if !(1..=2).contains(&dim) || n == 0 {
            return Err(IoError::Checkpoint(format!("invalid shape dim={dim} n={n}")));
        }
        let len = (n as usize)
            .checked_pow(dim)
            .ok_or_else(|| IoError::Checkpoint("shape overflows".into()))?;
        let step = r.u64()?;
        let t = r.f64()?;
        let eps = r.f64()?;
        let u = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let v = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let dissipation_integral = r.f64()?;
        if r.pos != bytes.len() {
            return Err(IoError::Checkpoint(format!(
                "{} trailing bytes after payload",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            dim,
            n,
            step,
            t,
            eps,
            u,
            v,
            dissipation_integral,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos + k;
        if end > self.bytes.len() {
            return Err(IoError::Checkpoint(format!(
                "truncated checkpoint: needed {end} bytes, have {}",
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_checkpoint(path: &Path, state: &SimState, eps: f64) -> Result<()> {
    std::fs::write(path, Checkpoint::from_state(state, eps).to_bytes()).map_err(|e| IoError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Loads a checkpoint as the starting state of a run on `grid` at `eps`.
pub fn resume(path: &Path, grid: &Grid, eps: f64) -> Result<SimState> {
    read_checkpoint(path)?.into_state(grid, eps)
}
