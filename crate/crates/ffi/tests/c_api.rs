use std::ffi::CStr;
use std::ptr;

use kzsim_ffi::*;

fn last_error() -> String {
    let p = kzsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn handles_round_trip_and_match_the_library() {
    unsafe {
        let mut sch = ptr::null_mut();
        assert_eq!(kzsim_schedule_linear(1.0, &mut sch), KzStatus::Ok);
        let (mut s_c, mut b) = (0.0, 0.0);
        assert_eq!(kzsim_schedule_critical(sch, -1.0, &mut s_c, &mut b), KzStatus::Ok);
        assert!((s_c - 0.5).abs() < 1e-12);
        assert!((b - std::f64::consts::FRAC_PI_4).abs() < 1e-9);

        let mut chain = ptr::null_mut();
        assert_eq!(kzsim_chain_uniform(8, -1.0, &mut chain), KzStatus::Ok);
        assert_eq!(kzsim_chain_len(chain), 8);

        let mut k1 = 0.0;
        let mut p_modes = 0.0;
        let st = kzsim_modes_run(sch, -1.0, 2.0, 8, &mut k1, ptr::null_mut(), ptr::null_mut(), &mut p_modes);
        assert_eq!(st, KzStatus::Ok);

        let mut bdg = ptr::null_mut();
        assert_eq!(kzsim_bdg_evolve(chain, sch, 2.0, &mut bdg), KzStatus::Ok);
        let mut n_bar = 0.0;
        let mut ckk = [0.0; 4];
        assert_eq!(kzsim_bdg_kinks(bdg, chain, 4, &mut n_bar, ckk.as_mut_ptr()), KzStatus::Ok);
        assert!((n_bar - k1).abs() < 1e-8);
        let mut p_bdg = 0.0;
        assert_eq!(kzsim_bdg_ground_state_probability(bdg, chain, sch, &mut p_bdg), KzStatus::Ok);
        assert!((p_bdg - p_modes).abs() < 1e-7);

        let (mut n_dense, mut p_dense) = (0.0, 0.0);
        assert_eq!(kzsim_dense_run(chain, sch, 2.0, &mut n_dense, &mut p_dense), KzStatus::Ok);
        assert!((n_dense - n_bar).abs() < 1e-6);
        assert!((p_dense - p_bdg).abs() < 1e-6);

        let (mut n_tebd, mut s_max, mut w) = (0.0, 0.0, 0.0);
        let mut ckk_t = [0.0; 4];
        let st = kzsim_tebd_run(chain, sch, 2.0, 16, 0.01, 4, &mut n_tebd, ckk_t.as_mut_ptr(), &mut s_max, &mut w);
        assert_eq!(st, KzStatus::Ok);
        assert!((n_tebd - n_bar).abs() < 1e-3);

        kzsim_bdg_free(bdg);
        kzsim_chain_free(chain);
        kzsim_schedule_free(sch);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    unsafe {
        kzsim_clear_error();
        assert!(kzsim_last_error().is_null());
        let mut sch = ptr::null_mut();
        assert_eq!(kzsim_schedule_linear(-1.0, &mut sch), KzStatus::InvalidArgument);
        assert!(sch.is_null());
        assert!(last_error().contains("schedule"));
        assert_eq!(kzsim_schedule_linear(1.0, ptr::null_mut()), KzStatus::NullPointer);
        assert!(last_error().contains("NULL"));

        let mut chain = ptr::null_mut();
        assert_eq!(kzsim_chain_uniform(4, -1.0, &mut chain), KzStatus::Ok);
        let bad = [1.0, 2.0];
        assert_eq!(kzsim_chain_set_couplings(chain, bad.as_ptr(), 2), KzStatus::InvalidArgument);
        assert_eq!(kzsim_chain_len(chain), 4);
        let mut spins = [0i8; 4];
        let st = kzsim_sa_sample(chain, 10, 0.1, 10.0, 2, 1, spins.as_mut_ptr(), spins.len());
        assert_eq!(st, KzStatus::BufferTooSmall);
        kzsim_chain_free(chain);
        kzsim_chain_free(ptr::null_mut());
        kzsim_schedule_free(ptr::null_mut());
    }
}

#[test]
fn disorder_and_sampling_are_reproducible() {
    unsafe {
        let mut nominal = ptr::null_mut();
        assert_eq!(kzsim_chain_uniform(16, -1.4, &mut nominal), KzStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(kzsim_chain_disorder(nominal, 0.05, KzTargets::Both, 9, 3, &mut a), KzStatus::Ok);
        assert_eq!(kzsim_chain_disorder(nominal, 0.05, KzTargets::Both, 9, 3, &mut b), KzStatus::Ok);
        let n = 50;
        let mut s1 = vec![0i8; n * 16];
        let mut s2 = vec![0i8; n * 16];
        assert_eq!(kzsim_sa_sample(a, 100, 0.1, 100.0, n, 4, s1.as_mut_ptr(), s1.len()), KzStatus::Ok);
        assert_eq!(kzsim_sa_sample(b, 100, 0.1, 100.0, n, 4, s2.as_mut_ptr(), s2.len()), KzStatus::Ok);
        assert_eq!(s1, s2);
        let (mut k1, mut k2, mut k3) = (0.0, 0.0, 0.0);
        assert_eq!(kzsim_kink_cumulants(s1.as_ptr(), n, 16, -1.0, &mut k1, &mut k2, &mut k3), KzStatus::Ok);
        assert!((0.0..0.5).contains(&k1));
        s1[0] = 0;
        assert_eq!(kzsim_kink_cumulants(s1.as_ptr(), n, 16, -1.0, &mut k1, &mut k2, &mut k3), KzStatus::InvalidArgument);
        for c in [nominal, a, b] {
            kzsim_chain_free(c);
        }
    }
}

#[test]
fn theory_and_version() {
    unsafe {
        let mut a = 0.0;
        assert_eq!(kzsim_lz_rate(std::f64::consts::FRAC_PI_4, 8, &mut a), KzStatus::Ok);
        assert!((a - 2.0 * std::f64::consts::PI.powi(3) * std::f64::consts::FRAC_PI_4 / 64.0).abs() < 1e-14);
        let mut n = 0.0;
        assert_eq!(kzsim_predict_density(1.0, 0.0, &mut n), KzStatus::InvalidArgument);
        let v = CStr::from_ptr(kzsim_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn commands_run_through_the_c_entry_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.json");
    std::fs::write(&cfg, r#"{"l": 8, "j": -1, "t_a": [1, 2]}"#).unwrap();
    let c = |s: &str| std::ffi::CString::new(s).unwrap();
    let (cmd, path, out) = (c("theory"), c(cfg.to_str().unwrap()), c(dir.path().join("o").to_str().unwrap()));
    let mut failures = 99;
    let st = unsafe { kzsim_run_command(cmd.as_ptr(), path.as_ptr(), out.as_ptr(), &mut failures) };
    assert_eq!(st, KzStatus::Ok);
    assert_eq!(failures, 0);
    assert!(dir.path().join("o/theory.csv").exists());
    let bad = c("plot");
    let st = unsafe { kzsim_run_command(bad.as_ptr(), path.as_ptr(), ptr::null(), ptr::null_mut()) };
    assert_eq!(st, KzStatus::InvalidArgument);
}
