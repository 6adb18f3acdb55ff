//! Pinned values of the standard logarithmic sweep (mode-1 data of
//! amplitude 1/2, n = 31, dt = 1e-3, T = 1, default ladder).

use chvi::harness::{duality_limsup_check, run_sweep, SweepPlan};
use chvi::dynamics::SimConfig;
use chvi::potential::PotentialSpec;
use chvi::spectral::{Grid, SpectralField};

const GAPS: [f64; 4] = [
    -1.3346154619066176e-2,
    -8.744484066532332e-3,
    -3.8718018999577847e-3,
    1.4527965636057516e-11,
];
const CAUCHY_V: [f64; 3] = [5.549623926606899e-2, 4.407551182741887e-2, 2.9218485259489193e-2];
const CAUCHY_VPRIME: [f64; 3] = [4.385613604594549e-2, 3.511546305515659e-2, 2.3426721563904126e-2];

fn close(got: &[f64], want: &[f64], abs: f64) {
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 1e-8 * w.abs() + abs, "{got:?} vs {want:?}");
    }
}

#[test]
fn standard_sweep_matches_pinned_values() {
    let grid = Grid::new(1, 31).unwrap();
    let cfg = SimConfig::new(grid.clone(), PotentialSpec::logarithmic(0.0).unwrap(), 1.0, 1.0, 0.1, 1.0, 1e-3);
    let plan = SweepPlan::new(cfg, SpectralField::sine_profile(&grid, 0.5), SpectralField::zeros(&grid));
    let rep = run_sweep(&plan).unwrap();
    let v = duality_limsup_check(&rep).unwrap();
    assert!(v.pass);
    close(&v.gaps, &GAPS, 1e-10);
    close(&rep.cauchy_l2v_of_u, &CAUCHY_V, 0.0);
    close(&rep.cauchy_l2vprime_of_ut, &CAUCHY_VPRIME, 0.0);
    assert!(rep.cauchy_l2v_of_u.windows(2).all(|w| w[1] < w[0]));
    for rung in &rep.rungs {
        assert!(rung.records.windows(2).all(|w| w[1].ledger.total <= w[0].ledger.total));
    }
}
