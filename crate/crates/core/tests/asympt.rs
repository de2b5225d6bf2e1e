use sasa_core::asympt::*;
use sasa_core::pde::Sponge;
use sasa_core::scattering::{InitialDatum, Profile};

fn quick_config() -> SectorConfig {
    SectorConfig {
        t_list: vec![5.0, 10.0, 20.0, 40.0],
        box_length: 512.0,
        n: 4096,
        sponge: Sponge { fraction: 0.25, strength: 20.0 },
        ..SectorConfig::default()
    }
}

#[test]
fn zero_datum_has_zero_error_and_no_exponent() {
    let u0 = InitialDatum::zero(-8.0, 8.0, 801).unwrap();
    let r = validate_sector(&u0, &quick_config()).unwrap();
    assert!(r.sup_errors.iter().all(|e| *e == 0.0));
    assert!(r.exponent.is_none());
}

#[test]
fn real_datum_stays_real_in_sector() {
    let profile = Profile::Gaussian { amplitude: 0.1, width: 1.0, center: 0.0, phase: 0.0 };
    let u0 = InitialDatum::from_profile(profile, -8.0, 8.0, 1601).unwrap();
    let r = validate_sector(&u0, &quick_config()).unwrap();
    for s in &r.samples {
        assert!(s.max_imag_measured < 1e-4 && s.max_imag_predicted < 1e-4, "t = {}", s.t);
    }
    assert!(r.phase_flatness < 1e-6);
    // errors shrink with t
    assert!(r.sup_errors.windows(2).all(|w| w[1] < w[0]), "{:?}", r.sup_errors);
    assert!(!r.spans_decade);
}

#[test]
fn phase_rotated_datum_rotates_prediction() {
    let base = Profile::Gaussian { amplitude: 0.1, width: 1.0, center: 0.0, phase: 0.0 };
    let rot = Profile::Gaussian { amplitude: 0.1, width: 1.0, center: 0.0, phase: 0.7 };
    let cfg = quick_config();
    let a = validate_sector(&InitialDatum::from_profile(base, -8.0, 8.0, 1601).unwrap(), &cfg).unwrap();
    let b = validate_sector(&InitialDatum::from_profile(rot, -8.0, 8.0, 1601).unwrap(), &cfg).unwrap();
    // ρ₁(0) = conj(s₁₃)/conj(s₃₃) rotates by the conjugate phase
    assert!((b.s - a.s * sasa_core::Complex64::from_polar(1.0, -0.7)).norm() < 1e-10, "{} {}", a.s, b.s);
    for (x, y) in a.sup_errors.iter().zip(&b.sup_errors) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn report_exports() {
    let u0 = InitialDatum::zero(-8.0, 8.0, 801).unwrap();
    let r = validate_sector(&u0, &quick_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    r.write_json(&dir.path().join("r.json")).unwrap();
    r.write_csv(&dir.path().join("r.csv")).unwrap();
    let back: AsymptoticsReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(back.t_list, r.t_list);
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
