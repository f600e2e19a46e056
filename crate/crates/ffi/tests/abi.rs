use std::ffi::{CStr, CString};
use std::ptr;

use jamlab_ffi::*;

fn last_error() -> String {
    let p = jamlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tone(freq: f64, fs: f64, dur: f64) -> *mut JamlabBuffer {
    let spec = CString::new(format!(
        r#"{{"kind":"single_tone","power_j":1.0,"freq_hz":{freq},"phase_rad":0.0}}"#
    ))
    .unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { jamlab_jammer_generate(spec.as_ptr(), fs, dur, 1, &mut out) };
    assert_eq!(st, JamlabStatus::Ok);
    out
}

#[test]
fn tone_roundtrips_through_handles() {
    let buf = tone(1000.0, 8000.0, 0.5);
    unsafe {
        assert_eq!(jamlab_buffer_len(buf), 4000);
        assert_eq!(jamlab_buffer_sample_rate(buf), 8000.0);
        assert!((jamlab_buffer_mean_power(buf) - 1.0).abs() < 1e-9);

        let mut iq = vec![0f32; 8000];
        let mut written = 0;
        assert_eq!(jamlab_buffer_copy_iq(buf, iq.as_mut_ptr(), iq.len(), &mut written), JamlabStatus::Ok);
        assert_eq!(written, 8000);
        assert!((iq[0] - 2f32.sqrt()).abs() < 1e-6);
        assert_eq!(iq[1], 0.0);

        let st = jamlab_buffer_copy_iq(buf, iq.as_mut_ptr(), 10, ptr::null_mut());
        assert_eq!(st, JamlabStatus::BufferTooSmall);
        assert!(last_error().contains("8000"));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.jsiq").to_str().unwrap()).unwrap();
        assert_eq!(jamlab_buffer_save(buf, path.as_ptr()), JamlabStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(jamlab_buffer_load(path.as_ptr(), &mut back), JamlabStatus::Ok);
        assert_eq!(jamlab_buffer_len(back), 4000);
        jamlab_buffer_free(back);
        jamlab_buffer_free(buf);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(jamlab_jammer_generate(ptr::null(), 1e6, 1e-3, 1, &mut out), JamlabStatus::NullArgument);
        assert!(last_error().contains("spec_json"));

        let junk = CString::new("{not json").unwrap();
        assert_eq!(jamlab_jammer_generate(junk.as_ptr(), 1e6, 1e-3, 1, &mut out), JamlabStatus::Format);

        let neg = CString::new(r#"{"kind":"single_tone","power_j":-1,"freq_hz":5,"phase_rad":0}"#).unwrap();
        assert_eq!(jamlab_jammer_generate(neg.as_ptr(), 1e6, 1e-3, 1, &mut out), JamlabStatus::InvalidArgument);
        assert!(out.is_null());

        let missing = CString::new("/nonexistent/x.jsiq").unwrap();
        assert_eq!(jamlab_buffer_load(missing.as_ptr(), &mut out), JamlabStatus::Io);

        let bad_ckpt = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(bad_ckpt.path(), b"JNET\x09\0\0\0").unwrap();
        let p = CString::new(bad_ckpt.path().to_str().unwrap()).unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(jamlab_model_load(p.as_ptr(), &mut model), JamlabStatus::Checkpoint);
    }
    // A successful call clears the message.
    unsafe { jamlab_buffer_free(tone(10.0, 1000.0, 0.1)) };
    assert!(jamlab_last_error().is_null());
}

#[test]
fn mix_render_and_normalize() {
    unsafe {
        let mut sig = ptr::null_mut();
        assert_eq!(jamlab_ofdm_generate(1e6, 1e-3, 3, &mut sig), JamlabStatus::Ok);
        let jam = tone(50e3, 1e6, 1e-3);
        let mut mixed = ptr::null_mut();
        assert_eq!(jamlab_mix(sig, jam, 10.0, 20.0, 4, &mut mixed), JamlabStatus::Ok);
        // 1 (signal) + 10 (jammer) + 0.01 (noise), cross terms aside.
        let p = jamlab_buffer_mean_power(mixed);
        assert!((p - 11.01).abs() < 0.6, "{p}");

        let mut grid = ptr::null_mut();
        assert_eq!(jamlab_grid_render(mixed, JAMLAB_PROFILE_REDUCED, &mut grid), JamlabStatus::Ok);
        let (mut c, mut h, mut w) = (0, 0, 0);
        assert_eq!(jamlab_grid_dims(grid, &mut c, &mut h, &mut w), JamlabStatus::Ok);
        assert_eq!((c, h, w), (3, 100, 100));
        assert_eq!(jamlab_grid_render(mixed, 7, &mut grid), JamlabStatus::InvalidArgument);

        let (mean, std) = ([0.5; 3], [0.25; 3]);
        let mut norm = ptr::null_mut();
        assert_eq!(jamlab_grid_normalize(grid, mean.as_ptr(), std.as_ptr(), 3, &mut norm), JamlabStatus::Ok);
        let mut raw = vec![0f32; 30000];
        let mut z = vec![0f32; 30000];
        jamlab_grid_copy(grid, raw.as_mut_ptr(), raw.len(), ptr::null_mut());
        jamlab_grid_copy(norm, z.as_mut_ptr(), z.len(), ptr::null_mut());
        for (r, n) in raw.iter().zip(&z) {
            assert!(((r - 0.5) / 0.25 - n).abs() < 1e-5);
        }
        let zero = [0.0; 3];
        assert_eq!(jamlab_grid_normalize(grid, mean.as_ptr(), zero.as_ptr(), 3, &mut norm), JamlabStatus::InvalidArgument);

        for g in [grid, norm] {
            jamlab_grid_free(g);
        }
        for b in [sig, jam, mixed] {
            jamlab_buffer_free(b);
        }
    }
}

#[test]
fn model_prediction_matches_library() {
    use jamlab::detector::{save_model, DetectorModel, NetworkSpec};
    use jamlab::raster::{normalize, NormStats};

    let model = DetectorModel::<f32>::init(NetworkSpec::for_input(100), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jnet");
    save_model(&model, &path).unwrap();

    let buf = jamlab::synth::gen_ofdm(&Default::default(), 1e6, 1e-3, 2).unwrap();
    let raw = jamlab::raster::RasterProfile::REDUCED.render(&buf).unwrap();
    let expect = model.predict(&normalize(&raw, &NormStats::identity(3)).unwrap()).unwrap();

    unsafe {
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(jamlab_model_load(cpath.as_ptr(), &mut m), JamlabStatus::Ok);
        assert_eq!(jamlab_model_param_count(m), model.params().len());

        let mut b = ptr::null_mut();
        assert_eq!(jamlab_ofdm_generate(1e6, 1e-3, 2, &mut b), JamlabStatus::Ok);
        let mut g = ptr::null_mut();
        jamlab_grid_render(b, JAMLAB_PROFILE_REDUCED, &mut g);
        let mut prob = -1.0;
        // Raw grids are refused.
        assert_eq!(jamlab_model_predict(m, g, &mut prob), JamlabStatus::Input);
        let (mean, std) = ([0.0; 3], [1.0; 3]);
        let mut n = ptr::null_mut();
        jamlab_grid_normalize(g, mean.as_ptr(), std.as_ptr(), 3, &mut n);
        assert_eq!(jamlab_model_predict(m, n, &mut prob), JamlabStatus::Ok);
        assert_eq!(prob, expect);

        jamlab_grid_free(n);
        jamlab_grid_free(g);
        jamlab_buffer_free(b);
        jamlab_model_free(m);
    }
}

#[test]
fn simulation_summary_json() {
    let cfg = CString::new(
        r#"{"jammer":{"kind":"static_band","channels":[0]},"predictor":"oracle","n_slots":40}"#,
    )
    .unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(jamlab_simulate(cfg.as_ptr(), 9, &mut out), JamlabStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        jamlab_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["delivery_ratio"], 1.0);
        assert_eq!(v["n_slots"], 40);

        let bad = CString::new(r#"{"n_slots":0}"#).unwrap();
        assert_eq!(jamlab_simulate(bad.as_ptr(), 9, &mut out), JamlabStatus::InvalidArgument);
        let typo = CString::new(r#"{"n_slot":5}"#).unwrap();
        assert_eq!(jamlab_simulate(typo.as_ptr(), 9, &mut out), JamlabStatus::Format);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        jamlab_buffer_free(ptr::null_mut());
        jamlab_grid_free(ptr::null_mut());
        jamlab_model_free(ptr::null_mut());
        jamlab_string_free(ptr::null_mut());
        assert_eq!(jamlab_buffer_len(ptr::null()), 0);
        let mut c = 0;
        assert_eq!(
            jamlab_grid_dims(ptr::null(), &mut c, &mut c as *mut usize, ptr::null_mut()),
            JamlabStatus::NullArgument
        );
    }
    let v = unsafe { CStr::from_ptr(jamlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
