use std::f64::consts::PI;

use super::diagnostics::{diagnose, StateDiagnostics};
use super::{SimConfig, SimState};

/// Number of space-time test functions in the dual-norm proxy: four time
/// profiles times the four lowest eigenmodes.
pub const DICTIONARY_SIZE: usize = 16;

/// Running values of the a priori bounds that must stay uniform in `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateReport {
    /// `sup_t ||u||_V`
    pub sup_v_of_u: f64,
    /// `||u_t||_{L^2(0,t;H)}`
    pub l2_h_of_ut: f64,
    /// `sup_t ||u_t||_{V'}`
    pub sup_vprime_of_ut: f64,
    /// `||u||_{L^2(0,t;D(A))}`
    pub l2_da_of_u: f64,
    /// `sup_t ||j_eps(u)||_{L^1}`
    pub sup_l1_of_jeps: f64,
    /// `||beta_eps(u)||_{L^1(0,t;L^1)}`
    pub l1l1_of_beta: f64,
    /// `sup_s sup_phi |<<beta_eps(u), phi>>_s| / ||phi||_{H^1(0,s;H)}` over
    /// the fixed dictionary.
    pub vprime_dual_of_beta_proxy: f64,
}

impl EstimateReport {
    pub const NAMES: [&'static str; 7] = [
        "sup_V_of_u",
        "L2_H_of_ut",
        "sup_Vprime_of_ut",
        "L2_DA_of_u",
        "sup_L1_of_jeps",
        "L1L1_of_beta",
        "Vprime_dual_of_beta_proxy",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.sup_v_of_u,
            self.l2_h_of_ut,
            self.sup_vprime_of_ut,
            self.l2_da_of_u,
            self.sup_l1_of_jeps,
            self.l1l1_of_beta,
            self.vprime_dual_of_beta_proxy,
        ]
    }
}

/// Time profiles of the dictionary on `[0, T]` and their derivatives.
fn time_profile(a: usize, t: f64, t_final: f64) -> (f64, f64) {
    let w = PI / t_final;
    match a {
        0 => (1.0, 0.0),
        1 => ((w * t).cos(), -w * (w * t).sin()),
        2 => ((w * t).sin(), w * (w * t).cos()),
        _ => ((2.0 * w * t).cos(), -2.0 * w * (2.0 * w * t).sin()),
    }
}

/// Incremental accumulator for [`EstimateReport`].
///
/// Integrals use the right-endpoint rule of the time scheme.
#[derive(Debug, Clone)]
pub struct Monitor {
    t_final: f64,
    report: EstimateReport,
    l2_h_sq: f64,
    l2_da_sq: f64,
    pairing: [[f64; 4]; 4],
    profile_norm_sq: [f64; 4],
}

impl Monitor {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            report: EstimateReport::default(),
            l2_h_sq: 0.0,
            l2_da_sq: 0.0,
            pairing: [[0.0; 4]; 4],
            profile_norm_sq: [0.0; 4],
        }
    }

    fn observe_pointwise(&mut self, d: &StateDiagnostics) {
        let r = &mut self.report;
        r.sup_v_of_u = r.sup_v_of_u.max(d.u_norms.v);
        r.sup_vprime_of_ut = r.sup_vprime_of_ut.max(d.v_norms.vprime);
        r.sup_l1_of_jeps = r.sup_l1_of_jeps.max(d.ledger.potential);
    }

    /// Records the state at `t = 0`.
    pub fn observe_initial(&mut self, d: &StateDiagnostics) {
        self.observe_pointwise(d);
    }

    /// Records the state that closes a step of length `dt` ending at `t`.
    pub fn observe_step(&mut self, d: &StateDiagnostics, t: f64, dt: f64) {
        self.observe_pointwise(d);
        self.l2_h_sq += dt * d.v_norms.h * d.v_norms.h;
        self.l2_da_sq += dt * d.u_norms.da * d.u_norms.da;
        let r = &mut self.report;
        r.l2_h_of_ut = self.l2_h_sq.sqrt();
        r.l2_da_of_u = self.l2_da_sq.sqrt();
        r.l1l1_of_beta += dt * d.eta_l1;

        let mut best = r.vprime_dual_of_beta_proxy;
        for a in 0..4 {
            let (tau, dtau) = time_profile(a, t, self.t_final);
            self.profile_norm_sq[a] += dt * (tau * tau + dtau * dtau);
            let norm = self.profile_norm_sq[a].sqrt();
            for b in 0..4 {
                self.pairing[a][b] += dt * tau * d.eta_modes[b];
                if norm > 0.0 {
                    best = best.max(self.pairing[a][b].abs() / norm);
                }
            }
        }
        r.vprime_dual_of_beta_proxy = best;
    }

    pub fn report(&self) -> EstimateReport {
        self.report
    }
}

/// Monitor values over a sequence of states, the first taken as `t = 0`.
pub fn monitor<'a>(history: impl IntoIterator<Item = &'a SimState>, cfg: &SimConfig) -> EstimateReport {
    let mut m = Monitor::new(cfg.t_final);
    let mut prev_t: Option<f64> = None;
    for s in history {
        let d = diagnose(s, cfg);
        match prev_t {
            None => m.observe_initial(&d),
            Some(p) => m.observe_step(&d, s.t, s.t - p),
        }
        prev_t = Some(s.t);
    }
    m.report()
}
