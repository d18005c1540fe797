use std::path::Path;
use std::process::Command;
use std::ptr;

use rdpc_ffi::*;

const SOURCE: [f64; 2] = [0.5, 0.5];
const HAMMING: [f64; 4] = [0.0, 1.0, 1.0, 0.0];

#[test]
fn solve_matches_closed_form() {
    let (mut rate, mut gap) = (0.0, 0.0);
    let mut q = [0.0; 4];
    let s = unsafe {
        rdpc_rdpf_solve(
            SOURCE.as_ptr(),
            2,
            HAMMING.as_ptr(),
            2,
            RdpcDivergence::TotalVariation,
            ptr::null(),
            ptr::null(),
            0.25,
            f64::INFINITY,
            1e-8,
            &mut rate,
            &mut gap,
            q.as_mut_ptr(),
        )
    };
    assert_eq!(s, RdpcStatus::Ok);
    assert!((rate - 0.188_721_875_540_867).abs() < 1e-6);
    assert!(gap <= 1e-8);
    assert!((q[1] - 0.25).abs() < 1e-6);

    let values = [0.0, 1.0];
    let s = unsafe {
        rdpc_rdpf_solve(
            SOURCE.as_ptr(),
            2,
            HAMMING.as_ptr(),
            2,
            RdpcDivergence::Wasserstein1,
            values.as_ptr(),
            values.as_ptr(),
            0.25,
            0.0,
            1e-6,
            &mut rate,
            &mut gap,
            ptr::null_mut(),
        )
    };
    assert_eq!(s, RdpcStatus::Ok);
}

#[test]
fn solve_reports_errors() {
    let (mut rate, mut gap) = (0.0, 0.0);
    let far = [0.5, 1.0, 1.0, 0.5];
    let s = unsafe {
        rdpc_rdpf_solve(
            SOURCE.as_ptr(),
            2,
            far.as_ptr(),
            2,
            RdpcDivergence::TotalVariation,
            ptr::null(),
            ptr::null(),
            0.25,
            f64::INFINITY,
            1e-6,
            &mut rate,
            &mut gap,
            ptr::null_mut(),
        )
    };
    assert_eq!(s, RdpcStatus::Infeasible);
    let s = unsafe {
        rdpc_rdpf_solve(
            SOURCE.as_ptr(),
            2,
            HAMMING.as_ptr(),
            2,
            RdpcDivergence::Wasserstein1,
            ptr::null(),
            ptr::null(),
            0.25,
            0.0,
            1e-6,
            &mut rate,
            &mut gap,
            ptr::null_mut(),
        )
    };
    assert_eq!(s, RdpcStatus::NullPointer);
    let bad = [0.7, 0.7];
    let s = unsafe {
        rdpc_rdpf_solve(
            bad.as_ptr(),
            2,
            HAMMING.as_ptr(),
            2,
            RdpcDivergence::TotalVariation,
            ptr::null(),
            ptr::null(),
            0.25,
            0.0,
            1e-6,
            &mut rate,
            &mut gap,
            ptr::null_mut(),
        )
    };
    assert_eq!(s, RdpcStatus::InvalidArgument);
}

#[test]
fn codec_and_stream_roundtrip() {
    let bsc = [0.75, 0.25, 0.25, 0.75];
    let mut codec = ptr::null_mut();
    assert_eq!(
        unsafe { rdpc_codec_new(bsc.as_ptr(), 2, 2, SOURCE.as_ptr(), &mut codec) },
        RdpcStatus::Ok
    );
    let seed = 42;
    let xs: Vec<usize> = (0..500).map(|i| (i * 7 % 3) % 2).collect();
    let mut ks = Vec::new();
    let mut ys = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let mut k = 0;
        assert_eq!(
            unsafe { rdpc_codec_encode(codec, x, seed, i as u64, &mut k) },
            RdpcStatus::Ok
        );
        let mut y = 9;
        assert_eq!(
            unsafe { rdpc_codec_decode(codec, k, seed, i as u64, &mut y) },
            RdpcStatus::Ok
        );
        ks.push(k);
        ys.push(y);
    }
    let mut buf = RdpcBuffer {
        data: ptr::null_mut(),
        len: 0,
    };
    assert_eq!(
        unsafe { rdpc_stream_write(ks.as_ptr(), ks.len(), seed, 1, &mut buf) },
        RdpcStatus::Ok
    );
    let bytes = unsafe { std::slice::from_raw_parts(buf.data, buf.len) }.to_vec();
    assert_eq!(bytes, rdpc::bitcode::write_stream(&ks, seed, 1).unwrap());

    let mut stream = ptr::null_mut();
    assert_eq!(
        unsafe { rdpc_stream_read(buf.data, buf.len, &mut stream) },
        RdpcStatus::Ok
    );
    unsafe { rdpc_buffer_free(buf) };
    let back =
        unsafe { std::slice::from_raw_parts(rdpc_stream_indices(stream), rdpc_stream_len(stream)) };
    assert_eq!(back, &ks[..]);
    assert_eq!(unsafe { rdpc_stream_seed(stream) }, seed);
    assert_eq!(unsafe { rdpc_stream_block_size(stream) }, 1);
    for (i, (&k, &y)) in back.iter().zip(&ys).enumerate() {
        let mut d = 9;
        assert_eq!(
            unsafe { rdpc_codec_decode(codec, k, seed, i as u64, &mut d) },
            RdpcStatus::Ok
        );
        assert_eq!(d, y);
    }
    unsafe {
        rdpc_stream_free(stream);
        rdpc_codec_free(codec);
    }
}

#[test]
fn codec_errors() {
    let identity = [1.0, 0.0, 0.0, 1.0];
    let mut codec = ptr::null_mut();
    assert_eq!(
        unsafe { rdpc_codec_new(identity.as_ptr(), 2, 2, SOURCE.as_ptr(), &mut codec) },
        RdpcStatus::Ok
    );
    let mut k = 0;
    assert_eq!(
        unsafe { rdpc_codec_decode(codec, 0, 1, 0, &mut 0) },
        RdpcStatus::ZeroIndex
    );
    assert_eq!(
        unsafe { rdpc_codec_set_budget(codec, 0) },
        RdpcStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { rdpc_codec_encode(ptr::null(), 0, 1, 0, &mut k) },
        RdpcStatus::NullPointer
    );
    assert_eq!(
        unsafe { rdpc_codec_encode(codec, 0, 1, 0, ptr::null_mut()) },
        RdpcStatus::NullPointer
    );
    assert_eq!(
        unsafe { rdpc_codec_encode(codec, 5, 1, 0, &mut k) },
        RdpcStatus::InvalidArgument
    );
    unsafe {
        rdpc_codec_free(codec);
        rdpc_codec_free(ptr::null_mut());
        rdpc_stream_free(ptr::null_mut());
    }

    let mut stream = ptr::null_mut();
    let junk = *b"XXXX\x01\0\0\0\0\0\0\0\0\0\x01\0\0\0\0";
    assert_eq!(
        unsafe { rdpc_stream_read(junk.as_ptr(), junk.len(), &mut stream) },
        RdpcStatus::BadMagic
    );
    assert_eq!(
        unsafe { rdpc_stream_read(junk.as_ptr(), 3, &mut stream) },
        RdpcStatus::Truncated
    );
    assert!(stream.is_null());
}

#[test]
fn header_is_current_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/rdpc.h")).unwrap();
    for f in [
        "rdpc_rdpf_solve",
        "rdpc_codec_new",
        "rdpc_codec_encode",
        "rdpc_codec_decode",
        "rdpc_codec_free",
        "rdpc_stream_write",
        "rdpc_stream_read",
        "rdpc_buffer_free",
        "rdpc_status_message",
        "RDPC_STATUS_PANIC",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping header compilation");
        return;
    };
    assert!(cc.status.success());
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(dir.join("include/rdpc.h"))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{lang}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
