use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{IoError, Result};
use crate::dynamics::SimConfig;
use crate::potential::{PotentialKind, PotentialSpec};
use crate::spectral::{to_spectral, Grid, SpectralField};

/// Every accepted key, in normalized order.
pub const KEYS: [&str; 17] = [
    "dim",
    "n",
    "alpha",
    "delta",
    "lambda",
    "eps",
    "T",
    "dt",
    "potential.kind",
    "output.every",
    "newton.tol",
    "newton.max_iter",
    "dealias",
    "seed",
    "init.kind",
    "init.amplitude",
    "init.path",
];

const REQUIRED: [&str; 10] = [
    "dim",
    "n",
    "alpha",
    "delta",
    "lambda",
    "eps",
    "T",
    "dt",
    "potential.kind",
    "init.kind",
];

pub const DEFAULT_OUTPUT_EVERY: u64 = 100;

/// Number of modes per axis mixed by the randomized initial datum.
const RANDOM_MODES: usize = 4;

/// How the initial datum is built.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// `amplitude * prod sin(pi x_i)`, zero velocity.
    Mode1 { amplitude: f64 },
    /// Seeded combination of the lowest modes, rescaled so that
    /// `max |u0| = amplitude`, zero velocity.
    Modes { amplitude: f64, seed: u64 },
    /// Collocation values read from a text file: one line per point with
    /// `u` or `u v`.
    File { path: PathBuf },
}

/// A fully validated configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Checkpoint stride in steps.
    pub output_every: u64,
    pub seed: Option<u64>,
    pub init: InitSpec,
}

fn err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Config {
        line,
        message: msg.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| err(line, format!("{key}: not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(err(line, format!("{key}: must be finite, got {v}")));
    }
    Ok(x)
}

fn parse_u64(line: usize, key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| err(line, format!("{key}: not a nonnegative integer: {v:?}")))
}

/// Parses and validates a configuration.
///
/// Paths in `init.path` are taken relative to `base_dir` when given.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key=value, got {s:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        let key = KEYS
            .iter()
            .find(|&&known| known == k)
            .ok_or_else(|| err(line, format!("unknown key {k:?}")))?;
        if entries.insert(key, (line, v)).is_some() {
            return Err(err(line, format!("duplicate key {k:?}")));
        }
    }
    for key in REQUIRED {
        if !entries.contains_key(key) {
            return Err(IoError::MissingKey(key.to_string()));
        }
    }
    let get = |k: &str| entries.get(k).copied();
    let num = |k: &str| -> Result<f64> {
        let (l, v) = get(k).expect("required key present");
        parse_f64(l, k, v)
    };
    let (dim_line, dim_text) = get("dim").unwrap();
    let dim = parse_u64(dim_line, "dim", dim_text)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(err(dim_line, format!("dim must be 1 or 2, got {dim}")));
    }
    let (n_line, n_text) = get("n").unwrap();
    let n = parse_u64(n_line, "n", n_text)? as usize;
    let grid = Grid::new(dim, n).map_err(|e| err(n_line, e.to_string()))?;

    let positive = |k: &str, strict: bool| -> Result<f64> {
        let x = num(k)?;
        let ok = if strict { x > 0.0 } else { x >= 0.0 };
        if !ok {
            let rel = if strict { "> 0" } else { ">= 0" };
            return Err(err(get(k).unwrap().0, format!("{k} must be {rel}, got {x}")));
        }
        Ok(x)
    };
    let alpha = positive("alpha", true)?;
    let delta = positive("delta", true)?;
    let lambda = positive("lambda", false)?;
    let t_final = positive("T", true)?;
    let dt = positive("dt", true)?;
    let eps = num("eps")?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(err(get("eps").unwrap().0, format!("eps must lie in (0, 1), got {eps}")));
    }
    if dt > t_final {
        return Err(err(get("dt").unwrap().0, format!("dt = {dt} exceeds T = {t_final}")));
    }

    let (pk_line, pk) = get("potential.kind").unwrap();
    let kind = PotentialKind::from_name(pk)
        .ok_or_else(|| err(pk_line, format!("unknown potential.kind {pk:?}")))?;
    let potential = PotentialSpec::new(kind, lambda).map_err(|e| err(pk_line, e.to_string()))?;

    let mut sim = SimConfig::new(grid, potential, alpha, delta, eps, t_final, dt);
    if let Some((l, v)) = get("newton.tol") {
        sim.newton_tol = parse_f64(l, "newton.tol", v)?;
        if sim.newton_tol <= 0.0 {
            return Err(err(l, "newton.tol must be > 0"));
        }
    }
    if let Some((l, v)) = get("newton.max_iter") {
        sim.newton_max_iter = parse_u64(l, "newton.max_iter", v)? as usize;
        if sim.newton_max_iter == 0 {
            return Err(err(l, "newton.max_iter must be >= 1"));
        }
    }
    if let Some((l, v)) = get("dealias") {
        sim.dealias = match v {
            "0" => false,
            "1" => true,
            _ => return Err(err(l, format!("dealias must be 0 or 1, got {v:?}"))),
        };
    }
    let output_every = match get("output.every") {
        Some((l, v)) => {
            let k = parse_u64(l, "output.every", v)?;
            if k == 0 {
                return Err(err(l, "output.every must be >= 1"));
            }
            k
        }
        None => DEFAULT_OUTPUT_EVERY,
    };
    let seed = get("seed")
        .map(|(l, v)| parse_u64(l, "seed", v))
        .transpose()?;

    let (ik_line, ik) = get("init.kind").unwrap();
    let amplitude = || -> Result<f64> {
        let (l, v) = get("init.amplitude")
            .ok_or_else(|| IoError::MissingKey(format!("init.amplitude (required by init.kind={ik})")))?;
        let a = parse_f64(l, "init.amplitude", v)?;
        if a.abs() > 1.0 && kind.is_singular() {
            return Err(err(l, format!("init.amplitude {a} leaves [-1, 1]")));
        }
        Ok(a)
    };
    let init = match ik {
        "mode1" => InitSpec::Mode1 {
            amplitude: amplitude()?,
        },
        "modes" => InitSpec::Modes {
            amplitude: amplitude()?,
            seed: seed.ok_or_else(|| IoError::MissingKey("seed (required by init.kind=modes)".into()))?,
        },
        "file" => {
            let (_, p) = get("init.path")
                .ok_or_else(|| IoError::MissingKey("init.path (required by init.kind=file)".into()))?;
            let path = PathBuf::from(p);
            let path = match base_dir {
                Some(b) if path.is_relative() => b.join(path),
                _ => path,
            };
            // Absolute paths keep the normalized text valid from any directory.
            let path = std::fs::canonicalize(&path).unwrap_or(path);
            InitSpec::File { path }
        }
        _ => return Err(err(ik_line, format!("init.kind must be mode1, modes or file, got {ik:?}"))),
    };
    sim.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(RunConfig {
        sim,
        output_every,
        seed,
        init,
    })
}

/// Writes an `f64` so that it parses back to the same value.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl RunConfig {
    /// Canonical text: every key that has a value, in [`KEYS`] order, with
    /// defaults written out.
    pub fn normalize(&self) -> String {
        let s = &self.sim;
        let mut lines = vec![
            format!("dim={}", s.grid.dim()),
            format!("n={}", s.grid.n()),
            format!("alpha={}", fmt_f64(s.alpha)),
            format!("delta={}", fmt_f64(s.delta)),
            format!("lambda={}", fmt_f64(s.lambda())),
            format!("eps={}", fmt_f64(s.eps)),
            format!("T={}", fmt_f64(s.t_final)),
            format!("dt={}", fmt_f64(s.dt)),
            format!("potential.kind={}", s.potential.kind().name()),
            format!("output.every={}", self.output_every),
            format!("newton.tol={}", fmt_f64(s.newton_tol)),
            format!("newton.max_iter={}", s.newton_max_iter),
            format!("dealias={}", u8::from(s.dealias)),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed={seed}"));
        }
        match &self.init {
            InitSpec::Mode1 { amplitude } => {
                lines.push("init.kind=mode1".into());
                lines.push(format!("init.amplitude={}", fmt_f64(*amplitude)));
            }
            InitSpec::Modes { amplitude, .. } => {
                lines.push("init.kind=modes".into());
                lines.push(format!("init.amplitude={}", fmt_f64(*amplitude)));
            }
            InitSpec::File { path } => {
                lines.push("init.kind=file".into());
                lines.push(format!("init.path={}", path.display()));
            }
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    /// First eight bytes of the SHA-256 of the normalized text.
    pub fn hash(&self) -> u64 {
        config_hash(&self.normalize())
    }

    /// Builds `(u0, u1)` on the configured grid (before any regularization).
    pub fn initial_data(&self) -> Result<(SpectralField, SpectralField)> {
        let grid = &self.sim.grid;
        match &self.init {
            InitSpec::Mode1 { amplitude } => Ok((
                SpectralField::sine_profile(grid, *amplitude),
                SpectralField::zeros(grid),
            )),
            InitSpec::Modes { amplitude, seed } => Ok((random_modes(grid, *amplitude, *seed), SpectralField::zeros(grid))),
            InitSpec::File { path } => read_init_file(path, grid),
        }
    }
}

pub fn config_hash(normalized: &str) -> u64 {
    let digest = Sha256::digest(normalized.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}

fn random_modes(grid: &Grid, amplitude: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; grid.modes()];
    let kmax = RANDOM_MODES.min(grid.n());
    let mut idx = vec![1usize; grid.dim()];
    loop {
        let k2: usize = idx.iter().map(|k| k * k).sum();
        let flat = grid.mode_index(&idx).expect("index within grid");
        coeffs[flat] = rng.random_range(-1.0..1.0) / k2 as f64;
        // Odometer over the first `kmax` wavenumbers per axis.
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                let field = SpectralField::new(grid.clone(), coeffs).expect("mode count");
                let peak = field.max_abs();
                return if peak > 0.0 {
                    field.map_spectrum(|_| amplitude / peak)
                } else {
                    field
                };
            }
            idx[axis] += 1;
            if idx[axis] <= kmax {
                break;
            }
            idx[axis] = 1;
            axis += 1;
        }
    }
}

fn read_init_file(path: &Path, grid: &Grid) -> Result<(SpectralField, SpectralField)> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut cols = s.split_whitespace();
        let bad = || IoError::InitFile(format!("{}:{}: expected `u` or `u v`", path.display(), i + 1));
        let a: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let b: f64 = match cols.next() {
            Some(c) => c.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if cols.next().is_some() {
            return Err(bad());
        }
        u.push(a);
        v.push(b);
    }
    let expected = grid.collocation(false).num_points();
    if u.len() != expected {
        return Err(IoError::InitFile(format!(
            "{}: expected {expected} points, found {}",
            path.display(),
            u.len()
        )));
    }
    let to = |vals: &[f64]| to_spectral(vals, grid).map_err(|e| IoError::InitFile(e.to_string()));
    Ok((to(&u)?, to(&v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DEFAULT_NEWTON_MAX_ITER, DEFAULT_NEWTON_TOL};

    const MINIMAL: &str = "dim=1\nn=31\nalpha=1\ndelta=1\nlambda=0\neps=0.1\nT=1\ndt=1e-3\npotential.kind=logarithmic\ninit.kind=mode1\ninit.amplitude=0.5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.sim.newton_tol, DEFAULT_NEWTON_TOL);
        assert_eq!(c.sim.newton_max_iter, DEFAULT_NEWTON_MAX_ITER);
        assert!(!c.sim.dealias);
        assert_eq!(c.output_every, DEFAULT_OUTPUT_EVERY);
        assert_eq!(c.init, InitSpec::Mode1 { amplitude: 0.5 });
        assert_eq!(c.sim.grid, Grid::new(1, 31).unwrap());
    }

    #[test]
    fn normalize_round_trips() {
        let c = parse_config(MINIMAL, None).unwrap();
        let text = c.normalize();
        let again = parse_config(&text, None).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.normalize(), text);
        assert_eq!(again.hash(), c.hash());
    }

    fn replace(key: &str, value: &str) -> String {
        MINIMAL
            .lines()
            .map(|l| if l.starts_with(&format!("{key}=")) { format!("{key}={value}") } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn range_errors_name_the_line() {
        for (key, value, line) in [("alpha", "0", 3), ("delta", "0", 4), ("eps", "1.5", 6), ("lambda", "-1", 5)] {
            match parse_config(&replace(key, value), None) {
                Err(IoError::Config { line: l, message }) => {
                    assert_eq!(l, line, "{message}");
                    assert!(message.contains(key));
                }
                other => panic!("{key}={value}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_and_missing_keys_are_errors() {
        let text = format!("{MINIMAL}colour=blue\n");
        assert!(matches!(parse_config(&text, None), Err(IoError::Config { line: 12, .. })));
        let text = MINIMAL.replace("dt=1e-3\n", "");
        assert!(matches!(parse_config(&text, None), Err(IoError::MissingKey(k)) if k == "dt"));
        let text = format!("{MINIMAL}eps=0.2\n");
        assert!(matches!(parse_config(&text, None), Err(IoError::Config { .. })));
    }

    #[test]
    fn random_modes_are_seeded_and_scaled() {
        let text = replace("init.kind", "modes") + "\nseed=7\n";
        let c = parse_config(&text, None).unwrap();
        let (a, _) = c.initial_data().unwrap();
        let (b, _) = c.initial_data().unwrap();
        assert_eq!(a, b);
        assert!((a.max_abs() - 0.5).abs() < 1e-12);
        assert!(parse_config(&replace("init.kind", "modes"), None).is_err());
    }

    #[test]
    fn init_file_reads_values_and_velocities() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(1, 7).unwrap();
        let u = SpectralField::sine_profile(&grid, 0.3);
        let body: String = u.to_values().iter().map(|x| format!("{x:?} 0.25\n")).collect();
        std::fs::write(dir.path().join("u0.txt"), body).unwrap();
        let text = "dim=1\nn=7\nalpha=1\ndelta=1\nlambda=0\neps=0.1\nT=1\ndt=0.1\npotential.kind=obstacle\ninit.kind=file\ninit.path=u0.txt\n";
        let c = parse_config(text, Some(dir.path())).unwrap();
        let (a, b) = c.initial_data().unwrap();
        for (x, y) in a.coeffs().iter().zip(u.coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((b.to_values()[3] - 0.25).abs() < 1e-14);
    }
}
