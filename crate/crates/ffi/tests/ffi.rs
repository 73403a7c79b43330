use std::ffi::{CStr, CString};
use std::ptr;

use dcec_ffi::*;

fn last_error() -> String {
    let p = dcec_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(json: &str) -> *mut DcecScenario {
    let json = CString::new(json).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dcec_scenario_from_json(json.as_ptr(), &mut s) }, DcecStatus::Ok);
    s
}

#[test]
fn analytic_matches_core() {
    let s = dcec_scenario_default();
    let mut p = DcecPoint::default();
    assert_eq!(unsafe { dcec_analytic(s, DcecPolicy::Dcec, &mut p) }, DcecStatus::Ok);

    let sc = dcec::config::Scenario::default();
    let want = dcec::analytic::evaluate(&sc.params, &sc.catalog().unwrap(), &sc.cache, dcec::popularity::Policy::Dcec)
        .unwrap();
    assert_eq!(p.d_total, want.delay.total);
    assert_eq!(p.offloading_gain, want.offloading_gain());
    assert_eq!(p.r_d2d, want.rates.d2d.unwrap());

    let mut m = DcecPoint::default();
    assert_eq!(unsafe { dcec_analytic(s, DcecPolicy::Mpc, &mut m) }, DcecStatus::Ok);
    assert!(m.r_d2d.is_nan());
    assert!(m.d_total > p.d_total);
    unsafe { dcec_scenario_free(s) };
}

#[test]
fn optimal_cluster_size_from_json() {
    let s = scenario(r#"{"core": {"B": 16e9}}"#);
    let (mut k, mut d) = (0usize, 0.0);
    assert_eq!(unsafe { dcec_optimal_cluster_size(s, 1, 8, &mut k, &mut d) }, DcecStatus::Ok);
    assert_eq!(k, 3);
    assert!(d > 0.0);
    assert_eq!(unsafe { dcec_optimal_cluster_size(s, 0, 8, &mut k, &mut d) }, DcecStatus::InvalidParameter);
    unsafe { dcec_scenario_free(s) };
}

#[test]
fn simulate_is_deterministic() {
    let s = dcec_scenario_default();
    let run = || {
        let mut out = DcecSimulation::default();
        assert_eq!(unsafe { dcec_simulate(s, DcecPolicy::Dcec, 50, 7, &mut out) }, DcecStatus::Ok);
        out
    };
    let (a, b) = (run(), run());
    assert_eq!(a.drops, 50);
    assert_eq!(a.r_nearest.to_bits(), b.r_nearest.to_bits());
    assert_eq!(a.d_total.to_bits(), b.d_total.to_bits());
    assert!(a.r_nearest_ci > 0.0);
    let mut out = DcecSimulation::default();
    assert_eq!(unsafe { dcec_simulate(s, DcecPolicy::Dcec, 0, 7, &mut out) }, DcecStatus::InvalidParameter);
    unsafe { dcec_scenario_free(s) };
}

#[test]
fn errors_are_reported() {
    let mut s = ptr::null_mut();
    let bad = CString::new(r#"{"core": {"lambda_BS": -1}}"#).unwrap();
    assert_eq!(unsafe { dcec_scenario_from_json(bad.as_ptr(), &mut s) }, DcecStatus::InvalidParameter);
    assert!(s.is_null());
    assert!(last_error().contains("density"), "{}", last_error());

    let junk = CString::new("{nope").unwrap();
    assert_eq!(unsafe { dcec_scenario_from_json(junk.as_ptr(), &mut s) }, DcecStatus::Config);

    assert_eq!(unsafe { dcec_scenario_from_json(ptr::null(), &mut s) }, DcecStatus::NullPointer);
    let mut p = DcecPoint::default();
    assert_eq!(unsafe { dcec_analytic(ptr::null(), DcecPolicy::Dcec, &mut p) }, DcecStatus::NullPointer);
    assert!(last_error().contains("scenario"));
    unsafe { dcec_scenario_free(ptr::null_mut()) };
}

#[test]
fn zipf_and_gain() {
    let mut q = vec![0.0; 100];
    assert_eq!(unsafe { dcec_zipf(100, 0.8, q.as_mut_ptr()) }, DcecStatus::Ok);
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(q.windows(2).all(|w| w[1] <= w[0]));

    let mut g = 0.0;
    assert_eq!(unsafe { dcec_average_gain(18.0, -2.0, 10.0, 0.0, 0.3, &mut g) }, DcecStatus::Ok);
    let want = dcec::antenna::AntennaPattern::from_db(18.0, -2.0, 10.0, None, 0.3).unwrap().average_gain();
    assert_eq!(g, want);
    assert_eq!(unsafe { dcec_average_gain(18.0, -2.0, -5.0, 0.0, 0.3, &mut g) }, DcecStatus::InvalidParameter);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dcec_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
