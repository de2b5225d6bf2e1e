use sasa_core::pde::{conserved_l2, evolve_snapshots, EvolveConfig, WaveField};
use sasa_core::rh::{reconstruct, LineConfig};
use sasa_core::scattering::{
    reflection_coefficient, scatter, solitonless_certificate, InitialDatum, Profile, ScatterConfig, ScatteringRecord,
};
use sasa_core::{Complex64, Error};

fn gaussian(amplitude: f64, phase: f64) -> InitialDatum {
    let p = Profile::Gaussian { amplitude, width: 1.0, center: 0.3, phase };
    InitialDatum::from_profile(p, -8.0, 8.0, 1601).unwrap()
}

#[test]
fn record_csv_round_trip() {
    let u0 = gaussian(0.2, 0.5);
    let rec = scatter(&u0, &ScatterConfig { k_max: 8.0, k_nodes: 257, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    rec.write_csv(&path).unwrap();
    let back = ScatteringRecord::read_csv(&path).unwrap();
    assert_eq!(back.k_grid.len, rec.k_grid.len);
    for (a, b) in back.s.iter().zip(&rec.s) {
        assert_eq!((*a - *b).max_abs(), 0.0);
    }
    for (a, b) in back.rho1.iter().zip(&rec.rho1) {
        assert_eq!(a, b);
    }
    assert_eq!(back.winding_s33, 0);
    assert!((back.det_defect - rec.det_defect).abs() < 1e-15);
    // rewriting gives identical bytes
    let again = dir.path().join("again.csv");
    back.write_csv(&again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn scatter_then_reconstruct_recovers_datum() {
    let u0 = gaussian(0.3, -0.8);
    let rec = scatter(&u0, &ScatterConfig::default()).unwrap();
    assert_eq!(solitonless_certificate(&rec).unwrap(), 0);
    let rho1 = reflection_coefficient(&rec).unwrap();
    for x in [-1.7, 0.0, 0.3, 2.2] {
        let r = reconstruct(&rho1, x, 0.0, &LineConfig::default()).unwrap();
        let err = (Complex64::new(r.u_re, r.u_im) - u0.eval(x)).norm();
        assert!(err < 1e-8, "x = {x}: {err}");
    }
}

#[test]
fn reconstruction_matches_evolver_at_short_time() {
    let u0 = gaussian(0.3, 0.0);
    let rec = scatter(&u0, &ScatterConfig::default()).unwrap();
    let rho1 = reflection_coefficient(&rec).unwrap();
    let t = 0.005;
    let w0 = WaveField::from_fn(64.0, 2048, 0.0, |x| if u0.grid().contains(x) { u0.eval(x) } else { Complex64::new(0.0, 0.0) })
        .unwrap();
    let w = evolve_snapshots(&w0, &EvolveConfig::new(1e-4, t).unwrap(), &[t]).unwrap().pop().unwrap();
    for x in [-1.0, 0.5] {
        let r = reconstruct(&rho1, x, t, &LineConfig::default()).unwrap();
        let err = (Complex64::new(r.u_re, r.u_im) - w.interpolate(x)).norm();
        assert!(err < 1e-6, "x = {x}: {err}");
    }
    assert!((conserved_l2(&w) - conserved_l2(&w0)).abs() < 1e-10);
}

#[test]
fn large_time_hits_oscillation_budget() {
    let u0 = gaussian(0.1, 0.0);
    let rec = scatter(&u0, &ScatterConfig::default()).unwrap();
    let rho1 = reflection_coefficient(&rec).unwrap();
    match reconstruct(&rho1, 0.0, 1e3, &LineConfig::default()) {
        Err(Error::OscillationBudget { .. }) => {}
        other => panic!("expected the budget error, got {other:?}"),
    }
}
