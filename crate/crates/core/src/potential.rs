//! Scalar convex-analysis kernel.
//!
//! A [`PotentialSpec`] describes the convex part `j` of a free energy
//! `F(u) = j(u) - (lambda/2) u^2` together with its subdifferential
//! `beta = dj`, a maximal monotone graph whose domain closure is `[-1, 1]`.
//! For a regularization parameter `eps` the module evaluates
//!
//! * the resolvent `x = (I + eps beta)^{-1}(r)`,
//! * the Yosida approximation `beta_eps(r) = (r - x) / eps`,
//! * the Moreau envelope `j_eps(r) = j(x) + (r - x)^2 / (2 eps)`.
//!
//! For the logarithmic potential the resolvent equation is solved in the
//! dual variable `y = beta(x)`, using `x = tanh(y / 2)`:
//!
//! ```text
//! g(y) = tanh(y / 2) + eps * y - r = 0
//! ```
//!
//! `g` is smooth and strictly increasing on all of `R`, so a bracketed
//! Newton iteration with bisection fallback always converges. In `x`
//! the root can sit closer to `+-1` than any `f64` can resolve (for `r = 5`
//! and `eps = 1e-4` the distance is about `exp(-4e4)`). In `y` it is an
//! ordinary number of size about `(r - 1) / eps`.

use std::f64::consts::LN_2;

use thiserror::Error;

/// Absolute residual accepted by the scalar resolvent solvers.
pub const RESOLVENT_TOL: f64 = 1e-12;

/// Smallest argument passed to a logarithm near the boundary of `[-1, 1]`.
const LOG_FLOOR: f64 = 1e-300;

const MAX_SCALAR_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

type Result<T> = std::result::Result<T, PotentialError>;

/// Which convex part `j` is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// `j(u) = (1-u) log(1-u) + (1+u) log(1+u)` on `[-1, 1]`.
    Logarithmic,
    /// Indicator of `[-1, 1]`; `beta` is the normal cone map.
    Obstacle,
    /// `j(u) = coefficient * u^4` on all of `R`.
    ///
    /// Smooth control case without constraint activity. The dynamics use
    /// `beta` itself rather than its Yosida approximation, so runs with this
    /// kind do not depend on `eps`. A zero coefficient gives `beta == 0`.
    DoubleWellSmooth { coefficient: f64 },
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::Logarithmic => "logarithmic",
            PotentialKind::Obstacle => "obstacle",
            PotentialKind::DoubleWellSmooth { coefficient } if *coefficient == 0.0 => "none",
            PotentialKind::DoubleWellSmooth { .. } => "double-well",
        }
    }

    /// Parses the names used on the command line and in config files.
    ///
    /// `double-well` is `u^4` with unit coefficient and `none` is the
    /// zero-coefficient smooth kind (`beta == 0`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "logarithmic" | "log" => Some(PotentialKind::Logarithmic),
            "obstacle" => Some(PotentialKind::Obstacle),
            "double-well" | "doublewell" | "double_well" => {
                Some(PotentialKind::DoubleWellSmooth { coefficient: 1.0 })
            }
            "none" | "linear" => Some(PotentialKind::DoubleWellSmooth { coefficient: 0.0 }),
            _ => None,
        }
    }

    /// True for the kinds whose domain is the bounded interval `[-1, 1]`.
    pub fn is_singular(&self) -> bool {
        !matches!(self, PotentialKind::DoubleWellSmooth { .. })
    }
}

/// A maximal monotone graph `beta = dj` on `R` plus the concave shift `lambda`.
///
/// Immutable after construction. `j(0) = 0` and `0 in beta(0)` hold for
/// every kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    lambda: f64,
}

/// One evaluation of the Moreau-Yosida family at a scalar point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaEval {
    pub r: f64,
    pub eps: f64,
    /// `x` solving `x + eps beta(x) = r`.
    pub resolvent: f64,
    /// `beta_eps(r)`.
    pub yosida: f64,
    /// `j_eps(r)`.
    pub moreau: f64,
    /// `|x + eps beta(x) - r|`; zero for the obstacle kind.
    pub residual: f64,
}

/// Value, derivative and energy of the pointwise nonlinearity used by the
/// time integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pointwise {
    pub value: f64,
    pub slope: f64,
    pub energy: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(PotentialError::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if let PotentialKind::DoubleWellSmooth { coefficient } = kind {
            if !coefficient.is_finite() || coefficient < 0.0 {
                return Err(PotentialError::InvalidArgument(format!(
                    "double-well coefficient must be finite and >= 0, got {coefficient}"
                )));
            }
        }
        Ok(Self { kind, lambda })
    }

    pub fn logarithmic(lambda: f64) -> Result<Self> {
        Self::new(PotentialKind::Logarithmic, lambda)
    }

    pub fn obstacle(lambda: f64) -> Result<Self> {
        Self::new(PotentialKind::Obstacle, lambda)
    }

    pub fn double_well(coefficient: f64, lambda: f64) -> Result<Self> {
        Self::new(PotentialKind::DoubleWellSmooth { coefficient }, lambda)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The convex part `j`, with `+inf` outside its domain.
    pub fn j(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::Logarithmic => {
                let a = u.abs();
                if a > 1.0 || u.is_nan() {
                    f64::INFINITY
                } else if a == 1.0 {
                    2.0 * LN_2
                } else {
                    log_entropy(u)
                }
            }
            PotentialKind::Obstacle => {
                if u.abs() <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            PotentialKind::DoubleWellSmooth { coefficient } => coefficient * u.powi(4),
        }
    }

    /// `beta(u)` where it is single-valued: the open interval `(-1, 1)` for
    /// the singular kinds, everywhere for the smooth kind.
    pub fn beta(&self, u: f64) -> Option<f64> {
        match self.kind {
            PotentialKind::Logarithmic if u.abs() < 1.0 => {
                let p = (1.0 + u).max(LOG_FLOOR);
                let m = (1.0 - u).max(LOG_FLOOR);
                Some(p.ln() - m.ln())
            }
            PotentialKind::Obstacle if u.abs() < 1.0 => Some(0.0),
            PotentialKind::DoubleWellSmooth { coefficient } if u.is_finite() => {
                Some(4.0 * coefficient * u.powi(3))
            }
            _ => None,
        }
    }

    /// Resolvent, Yosida value and Moreau envelope at `r`.
    pub fn resolvent(&self, r: f64, eps: f64) -> Result<YosidaEval> {
        check_args(r, eps)?;
        Ok(match self.kind {
            PotentialKind::Logarithmic => {
                let y = log_dual_root(r, eps);
                let x = (0.5 * y).tanh();
                YosidaEval {
                    r,
                    eps,
                    resolvent: x,
                    yosida: y,
                    moreau: log_entropy_dual(x, y) + 0.5 * eps * y * y,
                    residual: (x + eps * y - r).abs(),
                }
            }
            PotentialKind::Obstacle => {
                let x = r.clamp(-1.0, 1.0);
                let d = r - x;
                YosidaEval {
                    r,
                    eps,
                    resolvent: x,
                    yosida: d / eps,
                    moreau: d * d / (2.0 * eps),
                    residual: 0.0,
                }
            }
            PotentialKind::DoubleWellSmooth { coefficient } => {
                let x = quartic_resolvent(r, eps, coefficient);
                let y = 4.0 * coefficient * x.powi(3);
                YosidaEval {
                    r,
                    eps,
                    resolvent: x,
                    yosida: y,
                    moreau: coefficient * x.powi(4) + 0.5 * eps * y * y,
                    residual: (x + eps * y - r).abs(),
                }
            }
        })
    }

    /// The nonlinearity seen by the time integrator at a collocation value.
    ///
    /// Singular kinds return `beta_eps`, its a.e. derivative and `j_eps`.
    /// The obstacle derivative is `1/eps` strictly outside `[-1, 1]` and `0`
    /// on it (the corner is resolved to 0). The smooth kind returns `beta`,
    /// `beta'` and `j` directly and ignores `eps`.
    pub fn pointwise(&self, r: f64, eps: f64) -> Pointwise {
        match self.kind {
            PotentialKind::Logarithmic => {
                let y = log_dual_root(r, eps);
                let x = (0.5 * y).tanh();
                let sech = 1.0 / (0.5 * y).cosh();
                Pointwise {
                    value: y,
                    slope: 1.0 / (eps + 0.5 * sech * sech),
                    energy: log_entropy_dual(x, y) + 0.5 * eps * y * y,
                }
            }
            PotentialKind::Obstacle => {
                let x = r.clamp(-1.0, 1.0);
                let d = r - x;
                Pointwise {
                    value: d / eps,
                    slope: if d == 0.0 { 0.0 } else { 1.0 / eps },
                    energy: d * d / (2.0 * eps),
                }
            }
            PotentialKind::DoubleWellSmooth { coefficient } => Pointwise {
                value: 4.0 * coefficient * r * r * r,
                slope: 12.0 * coefficient * r * r,
                energy: coefficient * r.powi(4),
            },
        }
    }
}

fn check_args(r: f64, eps: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(PotentialError::InvalidArgument(format!(
            "r must be finite, got {r}"
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(PotentialError::InvalidArgument(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// `(1-u) log(1-u) + (1+u) log(1+u)` for `|u| < 1`.
fn log_entropy(u: f64) -> f64 {
    (1.0 - u) * (-u).ln_1p() + (1.0 + u) * u.ln_1p()
}

/// `j(x)` for `x = tanh(y/2)`, accurate even when `x` rounds to `+-1`.
fn log_entropy_dual(x: f64, y: f64) -> f64 {
    if x.abs() <= 0.5 {
        log_entropy(x)
    } else {
        // j(x) = x y - 2 log cosh(y/2), rewritten without cancellation in 1 - |x|.
        let a = y.abs();
        let e = (-a).exp();
        2.0 * LN_2 - a * 2.0 * e / (1.0 + e) - 2.0 * e.ln_1p()
    }
}

/// Root of `tanh(y/2) + eps y = r`, i.e. `y = beta_eps(r)` for the
/// logarithmic potential. Odd in `r` by construction.
fn log_dual_root(r: f64, eps: f64) -> f64 {
    let target = r.abs();
    if target == 0.0 {
        return 0.0;
    }
    let g = |y: f64| (0.5 * y).tanh() + eps * y - target;
    // 0 <= tanh(y/2) <= 1 pins the root inside [(target - 1)/eps, target/eps].
    let mut lo = ((target - 1.0) / eps).max(0.0);
    let mut hi = target / eps;
    let tol = 0.1 * RESOLVENT_TOL * target.max(1.0);
    let mut y = (target / (0.5 + eps)).clamp(lo, hi);
    for _ in 0..MAX_SCALAR_ITER {
        let gy = g(y);
        if gy.abs() <= tol {
            break;
        }
        if gy > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let sech = 1.0 / (0.5 * y).cosh();
        let slope = 0.5 * sech * sech + eps;
        let newton = y - gy / slope;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == y || hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
        y = next;
    }
    y.copysign(r)
}

/// Root of `x + 4 c eps x^3 = r`.
fn quartic_resolvent(r: f64, eps: f64, coefficient: f64) -> f64 {
    let target = r.abs();
    let k = 4.0 * coefficient * eps;
    if target == 0.0 || k == 0.0 {
        return r;
    }
    // Increasing and convex on [0, target]: Newton from the right end
    // decreases monotonically to the root.
    let tol = 0.1 * RESOLVENT_TOL * target.max(1.0);
    let mut x = target;
    for _ in 0..MAX_SCALAR_ITER {
        let h = x + k * x * x * x - target;
        if h <= tol {
            break;
        }
        let next = x - h / (1.0 + 3.0 * k * x * x);
        if next >= x {
            break;
        }
        x = next.max(0.0);
    }
    x.copysign(r)
}

/// Tabulates the Yosida family on a sorted grid of points.
pub fn yosida_curve(spec: &PotentialSpec, eps: f64, grid: &[f64]) -> Result<Vec<YosidaEval>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(PotentialError::InvalidArgument(
            "grid must be sorted in nondecreasing order".into(),
        ));
    }
    grid.iter().map(|&r| spec.resolvent(r, eps)).collect()
}

/// Outcome of the uniform lower bound check
/// `beta_eps(r) r >= c1 |beta_eps(r)| - c2`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1BoundReport {
    pub c1: f64,
    /// Smallest admissible `c2` for all samples and all `eps` together.
    pub c2: f64,
    pub ok: bool,
    /// Smallest admissible `c2` for each `eps`, in the order given.
    pub per_eps: Vec<(f64, f64)>,
    /// The same constant computed from `beta` itself on the samples where it
    /// is single-valued: the `eps -> 0` ceiling for every `c2(eps)`.
    pub c2_limit: f64,
    /// Sample `(r, eps)` whose constant exceeds the ceiling, if any.
    pub offending: Option<(f64, f64)>,
}

/// Fixed slope constant of the bound check.
pub const L1_BOUND_C1: f64 = 0.5;

/// Relative slack allowed between a per-`eps` constant and the ceiling.
pub const L1_BOUND_UNIFORMITY: f64 = 0.01;

/// Certifies the uniform lower bound on a sampled range.
///
/// `c1` is fixed to 1/2 and `c2` is the maximum over all samples of
/// `(c1 |beta_eps(r)| - beta_eps(r) r)_+`, which makes the inequality hold at
/// every sample. Since `|beta_eps(r)| <= |beta(r)|`, each per-`eps` constant
/// is bounded by the constant of `beta` itself; the check fails when some
/// sample exceeds that ceiling by more than 1%, which would mean `c2` grows
/// as `eps` decreases.
pub fn verify_l1_bound(
    spec: &PotentialSpec,
    eps_list: &[f64],
    r_range: (f64, f64),
    samples: usize,
) -> Result<L1BoundReport> {
    let (r_min, r_max) = r_range;
    if eps_list.is_empty() {
        return Err(PotentialError::InvalidArgument("eps list is empty".into()));
    }
    if samples == 0 || !(r_min <= r_max) || !r_min.is_finite() || !r_max.is_finite() {
        return Err(PotentialError::InvalidArgument(format!(
            "need samples >= 1 and a finite range, got {samples} on [{r_min}, {r_max}]"
        )));
    }
    let c1 = L1_BOUND_C1;
    let points: Vec<f64> = if samples == 1 {
        vec![0.5 * (r_min + r_max)]
    } else {
        let step = (r_max - r_min) / (samples - 1) as f64;
        (0..samples).map(|i| r_min + step * i as f64).collect()
    };
    let deficit = |y: f64, r: f64| (c1 * y.abs() - y * r).max(0.0);

    let c2_limit = points
        .iter()
        .filter_map(|&r| spec.beta(r).map(|b| deficit(b, r)))
        .fold(0.0_f64, f64::max);
    let ceiling = (1.0 + L1_BOUND_UNIFORMITY) * c2_limit + 1e-14;

    let mut per_eps = Vec::with_capacity(eps_list.len());
    let mut offending = None;
    for &eps in eps_list {
        let mut best = 0.0_f64;
        for &r in &points {
            let d = deficit(spec.resolvent(r, eps)?.yosida, r);
            if d > ceiling && offending.is_none() {
                offending = Some((r, eps));
            }
            best = best.max(d);
        }
        per_eps.push((eps, best));
    }
    let c2 = per_eps.iter().fold(0.0_f64, |m, &(_, c)| m.max(c));
    Ok(L1BoundReport {
        c1,
        c2,
        ok: offending.is_none(),
        per_eps,
        c2_limit,
        offending,
    })
}
