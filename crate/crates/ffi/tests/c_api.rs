use std::ffi::{CStr, CString};
use std::ptr;

use ssfind_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { ssf_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn code(n: usize, seed: u64) -> *mut SsfCode {
    let mut g = ptr::null_mut();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(ssf_graph_generate(n, 3, 6, seed, &mut g), SsfStatus::Ok);
        assert_eq!(ssf_code_new(g, &mut c), SsfStatus::Ok);
        ssf_graph_free(g);
    }
    c
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ssf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn code_parameters() {
    let c = code(24, 1);
    let mut p = SsfCodeParams::default();
    unsafe {
        assert_eq!(ssf_code_params(c, &mut p), SsfStatus::Ok);
        ssf_code_free(c);
    }
    assert_eq!((p.n, p.m, p.delta_v, p.delta_c), (24, 12, 3, 6));
    assert_eq!(p.num_qubits, 24 * 24 + 12 * 12);
    assert_eq!(p.num_checks, 24 * 12);
    assert_eq!(p.num_generators, 12 * 24);
    assert_eq!(p.logical_qubits, 144);
}

#[test]
fn graph_text_round_trip() {
    let text = CString::new("2 1 1 2\n0\n0\n").unwrap();
    let mut g = ptr::null_mut();
    let mut buf = vec![0 as std::ffi::c_char; 64];
    let mut len = 0;
    unsafe {
        assert_eq!(ssf_graph_parse(text.as_ptr(), &mut g), SsfStatus::Ok);
        assert_eq!(ssf_graph_write(g, buf.as_mut_ptr(), 4, &mut len), SsfStatus::BufferTooSmall);
        assert_eq!(len, 12);
        assert_eq!(ssf_graph_write(g, buf.as_mut_ptr(), buf.len(), &mut len), SsfStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "2 1 1 2\n0\n0\n");
        ssf_graph_free(g);
    }
}

#[test]
fn parse_errors_carry_the_line() {
    let text = CString::new("2 1 1 2\n0\nx\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ssf_graph_parse(text.as_ptr(), &mut g) }, SsfStatus::Parse);
    assert!(g.is_null());
    assert!(last_error().starts_with("line 3"), "{}", last_error());
}

#[test]
fn decode_a_known_error() {
    let c = code(24, 1);
    let error = [3usize * 24 + 5, 24 * 24 + 2 * 12 + 7];
    let mut res = ptr::null_mut();
    let mut verdict = SsfVerdict::NoSolution;
    let mut env = vec![0usize; 64];
    let mut len = 0;
    unsafe {
        assert_eq!(ssf_decode_error(c, error.as_ptr(), error.len(), 1, 20, &mut res), SsfStatus::Ok);
        assert_eq!(ssf_result_verdict(res, &mut verdict), SsfStatus::Ok);
        assert_eq!(verdict, SsfVerdict::Success);
        assert_eq!(ssf_result_coset_equivalent(res), 1);
        assert!(ssf_result_iterations(res) >= 1);
        assert_eq!(ssf_result_envelope(res, env.as_mut_ptr(), env.len(), &mut len), SsfStatus::Ok);
        assert!(error.iter().all(|q| env[..len].contains(q)));
        ssf_result_free(res);
        ssf_code_free(c);
    }
}

#[test]
fn syndrome_decode_matches_error_decode() {
    let c = code(24, 2);
    let error = [0usize, 100, 600];
    let mut sigma = vec![0usize; 32];
    let mut slen = 0;
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    let (mut xa, mut xb) = (vec![0usize; 64], vec![0usize; 64]);
    let (mut la, mut lb) = (0, 0);
    unsafe {
        assert_eq!(ssf_code_syndrome(c, error.as_ptr(), error.len(), sigma.as_mut_ptr(), sigma.len(), &mut slen), SsfStatus::Ok);
        assert!(slen > 0);
        assert_eq!(ssf_decode_syndrome(c, sigma.as_ptr(), slen, 1, 20, &mut a), SsfStatus::Ok);
        assert_eq!(ssf_decode_error(c, error.as_ptr(), error.len(), 1, 20, &mut b), SsfStatus::Ok);
        assert_eq!(ssf_result_coset_equivalent(a), -1);
        assert_eq!(ssf_result_correction(a, xa.as_mut_ptr(), xa.len(), &mut la), SsfStatus::Ok);
        assert_eq!(ssf_result_correction(b, xb.as_mut_ptr(), xb.len(), &mut lb), SsfStatus::Ok);
        assert_eq!(xa[..la], xb[..lb]);
        ssf_result_free(a);
        ssf_result_free(b);
        ssf_code_free(c);
    }
}

#[test]
fn bad_arguments_are_rejected() {
    let c = code(12, 1);
    let mut res = ptr::null_mut();
    let q = [1_000_000usize];
    unsafe {
        assert_eq!(ssf_decode_error(c, q.as_ptr(), 1, 1, 20, &mut res), SsfStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        assert_eq!(ssf_decode_error(c, ptr::null(), 0, 1, 0, &mut res), SsfStatus::InvalidArgument);
        assert_eq!(ssf_decode_error(c, ptr::null(), 3, 1, 20, &mut res), SsfStatus::NullPointer);
        assert_eq!(ssf_decode_error(ptr::null(), ptr::null(), 0, 1, 20, &mut res), SsfStatus::NullPointer);
        assert!(res.is_null());
        let mut g = ptr::null_mut();
        assert_eq!(ssf_graph_generate(7, 3, 6, 0, &mut g), SsfStatus::Graph);
        ssf_code_free(c);
        ssf_code_free(ptr::null_mut());
        ssf_result_free(ptr::null_mut());
    }
}

#[test]
fn radius_coefficients() {
    let mut out = [0.0f64; 3];
    unsafe {
        assert_eq!(ssf_radius_coefficients(1, 2, 1, 20, 6, out.as_mut_ptr()), SsfStatus::Ok);
    }
    assert!((out[0] - 1.0 / 21.0).abs() < 1e-15);
    assert!((out[2] - 0.0625).abs() < 1e-15);
    assert_eq!(unsafe { ssf_radius_coefficients(3, 2, 1, 20, 6, out.as_mut_ptr()) }, SsfStatus::InvalidArgument);
}
