//! Drive the whole C surface from Rust: happy paths, error paths, and the
//! thread-local error message.

use std::ffi::{CStr, CString};

use tideprob_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tideprob_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn synthesize(days: f64) -> *mut tideprob_tide {
    let cons = [tideprob_constituent {
        amplitude_m: 1.0,
        speed_deg_per_hr: 30.0,
        phase_deg: 0.0,
    }];
    let mut tide: *mut tideprob_tide = std::ptr::null_mut();
    let status =
        unsafe { tideprob_tide_synthesize(cons.as_ptr(), cons.len(), days, 0.0, &mut tide) };
    assert_eq!(status, tideprob_status::TIDEPROB_OK, "{}", last_error());
    assert!(!tide.is_null());
    tide
}

#[test]
fn full_pipeline_through_the_c_surface() {
    let tide = synthesize(10.0);
    unsafe {
        assert_eq!(tideprob_tide_len(tide), 14400);

        let mut levels = vec![0.0f64; 14400];
        assert_eq!(
            tideprob_tide_levels(tide, levels.as_mut_ptr(), levels.len()),
            tideprob_status::TIDEPROB_OK
        );
        assert!((levels[0] - 1.0).abs() < 1e-12);

        let mut datums = std::mem::zeroed::<tideprob_datums>();
        assert_eq!(
            tideprob_tide_datums(tide, &mut datums),
            tideprob_status::TIDEPROB_OK
        );
        assert!((datums.xi_mhhw - 1.0).abs() < 1e-3);
        assert!((datums.sigma0 - 0.70710678).abs() < 1e-3);

        let mut bins = std::mem::zeroed::<tideprob_bins>();
        assert_eq!(
            tideprob_bins_for_tide(tide, 0.0, 0.01, &mut bins),
            tideprob_status::TIDEPROB_OK
        );
        assert!(bins.n_bins > 100);

        let mut phi: *mut tideprob_ccdf = std::ptr::null_mut();
        assert_eq!(
            tideprob_phi_dt(tide, 72, bins, &mut phi),
            tideprob_status::TIDEPROB_OK
        );
        let mut value = 0.0;
        assert_eq!(
            tideprob_ccdf_eval(phi, 0.5, &mut value),
            tideprob_status::TIDEPROB_OK
        );
        let expected = (0.5f64.acos() / std::f64::consts::PI + 0.1).min(1.0);
        assert!((value - expected).abs() < 0.01, "got {value}");

        let n = tideprob_ccdf_n_bins(phi);
        let mut edges = vec![0.0; n];
        let mut phis = vec![0.0; n];
        assert_eq!(
            tideprob_ccdf_values(
                phi,
                edges.as_mut_ptr(),
                phis.as_mut_ptr(),
                std::ptr::null_mut(),
                n
            ),
            tideprob_status::TIDEPROB_OK
        );
        assert_eq!(phis[0], 1.0);
        assert_eq!(tideprob_ccdf_n_windows(phi), 14400 - 72);

        // Hazard composition through a monotone response.
        let stages = [-1.0, 0.0, 1.0];
        let qois = [0.5, 2.0, 3.5];
        let mut response: *mut tideprob_response = std::ptr::null_mut();
        assert_eq!(
            tideprob_response_new(
                -124.18,
                41.74,
                -5.0,
                stages.as_ptr(),
                qois.as_ptr(),
                3,
                0,
                0,
                false,
                0.0,
                &mut response,
            ),
            tideprob_status::TIDEPROB_OK
        );
        let mut z = 0.0;
        assert_eq!(
            tideprob_response_eval(response, 0.5, &mut z),
            tideprob_status::TIDEPROB_OK
        );
        assert!((z - 2.75).abs() < 1e-12);

        let mut inverse = 0.0;
        assert_eq!(
            tideprob_response_inverse(response, 2.0, -1.0, 1.0, &mut inverse),
            tideprob_status::TIDEPROB_OK
        );
        assert!((inverse - 0.0).abs() < 1e-12);

        let levels = [0.5, 2.0, 3.0, 4.0];
        let mut probs = [0.0f64; 4];
        for mode in [0, 1] {
            assert_eq!(
                tideprob_psi(
                    response,
                    phi,
                    levels.as_ptr(),
                    levels.len(),
                    mode,
                    -1.0,
                    1.0,
                    probs.as_mut_ptr(),
                ),
                tideprob_status::TIDEPROB_OK
            );
            assert_eq!(probs[0], 1.0, "always exceeded at the lowest level");
            assert_eq!(probs[3], 0.0, "never exceeded above the response range");
            assert!(probs[1] > 0.4 && probs[1] < 0.7);
        }

        tideprob_response_free(response);
        tideprob_ccdf_free(phi);
        tideprob_tide_free(tide);
    }
}

#[test]
fn pattern_surface_matches_reference_values() {
    unsafe {
        let mut p: *mut tideprob_pattern = std::ptr::null_mut();
        assert_eq!(
            tideprob_pattern_reference_aasze02(&mut p),
            tideprob_status::TIDEPROB_OK
        );
        assert_eq!(tideprob_pattern_wave_count(p), 7);
        assert_eq!(tideprob_pattern_duration(p), 396);
        assert_eq!(tideprob_pattern_recommend_dt(p, 0.1), 24);
        assert!((tideprob_pattern_max_offset(p) - 1.45).abs() < 1e-12);

        let tide = synthesize(4.0);
        let mut bins = std::mem::zeroed::<tideprob_bins>();
        assert_eq!(
            tideprob_bins_for_tide(tide, tideprob_pattern_max_offset(p), 0.01, &mut bins),
            tideprob_status::TIDEPROB_OK
        );
        let mut phi: *mut tideprob_ccdf = std::ptr::null_mut();
        assert_eq!(
            tideprob_phi_pattern(tide, p, bins, &mut phi),
            tideprob_status::TIDEPROB_OK
        );
        assert_eq!(tideprob_ccdf_n_windows(phi), (4 * 1440 - 396) as u64);
        tideprob_ccdf_free(phi);
        tideprob_tide_free(tide);
        tideprob_pattern_free(p);
    }
}

#[test]
fn extraction_from_raw_arrays() {
    let minutes: Vec<f64> = (0..500).map(|i| i as f64).collect();
    let mut eta = vec![0.0f64; 500];
    for v in &mut eta[0..=42] {
        *v = 1.5;
    }
    for v in &mut eta[372..=396] {
        *v = 2.0;
    }
    unsafe {
        let mut p: *mut tideprob_pattern = std::ptr::null_mut();
        assert_eq!(
            tideprob_pattern_extract(
                minutes.as_ptr(),
                eta.as_ptr(),
                minutes.len(),
                0.0,
                0.25,
                20.0,
                0,
                &mut p,
            ),
            tideprob_status::TIDEPROB_OK
        );
        assert_eq!(tideprob_pattern_wave_count(p), 2);
        assert_eq!(tideprob_pattern_duration(p), 396);
        tideprob_pattern_free(p);
    }
}

#[test]
fn mofjeld_and_erf_surface() {
    unsafe {
        let gp = tideprob_g_params_crescent_city();
        assert_eq!(gp.t_g_minutes, 7200);
        let datums = tideprob_datums {
            xi_mllw: -1.13,
            xi_mlw: -0.75,
            xi_msl: 0.0,
            xi_mhw: 0.77,
            xi_mhhw: 0.97,
            xi_lowest: -1.83,
            xi_highest: 1.5,
            sigma0: 0.638,
        };
        let (mut xi0, mut sigma) = (0.0, 0.0);
        assert_eq!(
            tideprob_mofjeld_moments(3.92, &gp, &datums, &mut xi0, &mut sigma),
            tideprob_status::TIDEPROB_OK
        );
        assert!((xi0 - 0.45).abs() <= 0.01);
        assert!((sigma - 0.34).abs() <= 0.01);

        let mut p = 0.0;
        assert_eq!(
            tideprob_phi_erf(xi0, xi0, sigma, &mut p),
            tideprob_status::TIDEPROB_OK
        );
        assert_eq!(p, 0.5);

        assert_eq!(tideprob_phi_infinity(1.49, &datums), 1.0);
        assert_eq!(tideprob_phi_infinity(1.50, &datums), 0.0);

        let mut bins = std::mem::zeroed::<tideprob_bins>();
        assert_eq!(
            tideprob_bins_covering(-1.83, 1.5, 0.0, 0.01, &mut bins),
            tideprob_status::TIDEPROB_OK
        );
        let mut table: *mut tideprob_ccdf = std::ptr::null_mut();
        assert_eq!(
            tideprob_phi_from_moments(xi0, sigma, bins, &mut table),
            tideprob_status::TIDEPROB_OK
        );
        let (mut m0, mut m1) = (0.0, 0.0);
        assert_eq!(
            tideprob_ccdf_moments(table, &mut m0, &mut m1),
            tideprob_status::TIDEPROB_OK
        );
        assert!((m0 - xi0).abs() < 0.01);
        assert!((m1 - sigma).abs() < 0.01);
        tideprob_ccdf_free(table);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        // Null arguments.
        let status = tideprob_tide_from_csv(std::ptr::null(), 120, false, std::ptr::null_mut());
        assert_eq!(status, tideprob_status::TIDEPROB_ERR_NULL_ARG);
        assert!(!last_error().is_empty());

        // Missing file.
        let path = CString::new("/no/such/file.csv").unwrap();
        let mut tide: *mut tideprob_tide = std::ptr::null_mut();
        assert_eq!(
            tideprob_tide_from_csv(path.as_ptr(), 120, false, &mut tide),
            tideprob_status::TIDEPROB_ERR_IO
        );
        assert!(last_error().contains("/no/such/file.csv"));

        // Invalid numerics.
        let mut out = 0.0;
        assert_eq!(
            tideprob_phi_erf(0.0, 0.0, 0.0, &mut out),
            tideprob_status::TIDEPROB_ERR_INVALID
        );
        assert!(last_error().contains("sigma"));

        // Degenerate synthesis.
        let cons = [tideprob_constituent {
            amplitude_m: 1.0,
            speed_deg_per_hr: 30.0,
            phase_deg: 0.0,
        }];
        assert_eq!(
            tideprob_tide_synthesize(cons.as_ptr(), 0, 1.0, 0.0, &mut tide),
            tideprob_status::TIDEPROB_ERR_INVALID
        );

        // Wrong buffer length.
        let tide = synthesize(1.0);
        let mut small = [0.0f64; 3];
        assert_eq!(
            tideprob_tide_levels(tide, small.as_mut_ptr(), small.len()),
            tideprob_status::TIDEPROB_ERR_INVALID
        );
        assert!(last_error().contains("buffer"));
        tideprob_tide_free(tide);

        // Freeing null is a no-op.
        tideprob_tide_free(std::ptr::null_mut());
        tideprob_pattern_free(std::ptr::null_mut());
        tideprob_ccdf_free(std::ptr::null_mut());
        tideprob_response_free(std::ptr::null_mut());
    }
}
