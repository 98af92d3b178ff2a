//! Exercises the C ABI from Rust. A separate test compiles and runs the C
//! smoke client in `tests/smoke.c` against the generated header and static
//! library.

use std::ffi::CStr;
use std::ptr;

use tvcut_ffi::*;

fn path4() -> *mut TvcutGraph {
    let src = [0usize, 1, 2];
    let dst = [1usize, 2, 3];
    let w = [1.0f64, 1.0, 1.0];
    let mut g: *mut TvcutGraph = ptr::null_mut();
    let status =
        unsafe { tvcut_graph_from_edges(4, src.as_ptr(), dst.as_ptr(), w.as_ptr(), 3, &mut g) };
    assert_eq!(status, TvcutStatus::Ok);
    assert!(!g.is_null());
    g
}

fn default_options() -> TvcutOptions {
    let mut opts = std::mem::MaybeUninit::<TvcutOptions>::uninit();
    unsafe {
        assert_eq!(tvcut_options_default(opts.as_mut_ptr()), TvcutStatus::Ok);
        opts.assume_init()
    }
}

#[test]
fn graph_accessors_and_connectivity() {
    let g = path4();
    unsafe {
        assert_eq!(tvcut_graph_vertex_count(g), 4);
        assert_eq!(tvcut_graph_edge_count(g), 3);
        let mut connected = false;
        assert_eq!(tvcut_graph_is_connected(g, &mut connected), TvcutStatus::Ok);
        assert!(connected);
        tvcut_graph_free(g);
    }
}

#[test]
fn invalid_edges_are_rejected_with_message() {
    let src = [0usize];
    let dst = [0usize];
    let w = [1.0f64];
    let mut g: *mut TvcutGraph = ptr::null_mut();
    let status =
        unsafe { tvcut_graph_from_edges(2, src.as_ptr(), dst.as_ptr(), w.as_ptr(), 1, &mut g) };
    assert_eq!(status, TvcutStatus::InvalidArgument);
    let msg = unsafe { CStr::from_ptr(tvcut_last_error_message()) };
    assert!(msg.to_string_lossy().contains("self-loop"));
    assert!(g.is_null());
}

#[test]
fn cluster_path4_spectral_finds_the_balanced_cut() {
    let g = path4();
    let mut opts = default_options();
    opts.init = TvcutInit::Spectral;
    let mut run: *mut TvcutRun = ptr::null_mut();
    unsafe {
        assert_eq!(tvcut_cluster(g, &opts, &mut run), TvcutStatus::Ok);
        assert!(tvcut_run_converged(run));
        let e = tvcut_run_energy(run);
        assert!((e - 0.5).abs() < 1e-6, "energy {e}");
        assert!((tvcut_run_ratio_cut(run) - 1.0).abs() < 1e-12);

        let mut labels = [255u8; 4];
        assert_eq!(
            tvcut_run_labels(run, labels.as_mut_ptr(), 4),
            TvcutStatus::Ok
        );
        assert!(
            labels == [1, 1, 0, 0] || labels == [0, 0, 1, 1],
            "labels {labels:?}"
        );

        let mut signal = [0.0f64; 4];
        assert_eq!(
            tvcut_run_signal(run, signal.as_mut_ptr(), 4),
            TvcutStatus::Ok
        );
        let norm: f64 = signal.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);

        let n = tvcut_run_trace_len(run);
        assert!(n >= 1 && n == tvcut_run_iterations(run));
        let mut row = TvcutTraceRow {
            energy: 0.0,
            increment: 0.0,
            prox_gap: 0.0,
            descent_slack: 0.0,
        };
        assert_eq!(tvcut_run_trace_row(run, n - 1, &mut row), TvcutStatus::Ok);
        assert!(row.increment < 1e-6);
        assert_eq!(
            tvcut_run_trace_row(run, n, &mut row),
            TvcutStatus::InvalidArgument
        );

        tvcut_run_free(run);
        tvcut_graph_free(g);
    }
}

#[test]
fn knn_and_energy_round_trip() {
    // Three collinear points; k = 1 gives the two-edge path.
    let pts = [0.0f64, 1.0, 10.0];
    let mut g: *mut TvcutGraph = ptr::null_mut();
    unsafe {
        assert_eq!(
            tvcut_graph_knn(pts.as_ptr(), 3, 1, 1, 1, 1.0, &mut g),
            TvcutStatus::Ok
        );
        assert_eq!(tvcut_graph_edge_count(g), 2);
        let f = [1.0f64, 0.0, -1.0];
        let mut e = 0.0;
        assert_eq!(tvcut_energy(g, f.as_ptr(), 3, &mut e), TvcutStatus::Ok);
        assert!(e > 0.0);
        let labels = [1u8, 0, 0];
        let mut rc = 0.0;
        assert_eq!(
            tvcut_ratio_cut_value(g, labels.as_ptr(), 3, &mut rc),
            TvcutStatus::Ok
        );
        assert!(rc > 0.0);
        tvcut_graph_free(g);
    }
}

#[test]
fn disconnected_graph_needs_opt_in() {
    let src = [0usize, 2];
    let dst = [1usize, 3];
    let w = [1.0f64, 1.0];
    let mut g: *mut TvcutGraph = ptr::null_mut();
    unsafe {
        assert_eq!(
            tvcut_graph_from_edges(4, src.as_ptr(), dst.as_ptr(), w.as_ptr(), 2, &mut g),
            TvcutStatus::Ok
        );
        let mut opts = default_options();
        opts.seed = 2;
        let mut run: *mut TvcutRun = ptr::null_mut();
        assert_eq!(tvcut_cluster(g, &opts, &mut run), TvcutStatus::Disconnected);
        assert!(run.is_null());
        opts.allow_disconnected = true;
        assert_eq!(tvcut_cluster(g, &opts, &mut run), TvcutStatus::Ok);
        assert!(tvcut_run_converged(run));
        assert!(tvcut_run_energy(run) < 1e-10);
        tvcut_run_free(run);
        tvcut_graph_free(g);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(tvcut_graph_vertex_count(ptr::null()), 0);
        let mut out = 0.0;
        assert_eq!(
            tvcut_energy(ptr::null(), ptr::null(), 0, &mut out),
            TvcutStatus::NullPointer
        );
        let msg = CStr::from_ptr(tvcut_last_error_message());
        assert!(msg.to_string_lossy().contains("null pointer"));
    }
}

/// Compile `tests/smoke.c` against the generated header and the static
/// library, then run it.
#[test]
fn c_smoke_client_builds_and_runs() {
    let manifest = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("tvcut.h").exists(), "header not generated");
    let smoke = manifest.join("tests/smoke.c");

    // The static library sits in the same target directory as this test.
    let mut lib_dir = std::env::current_exe().unwrap();
    lib_dir.pop(); // test binary
    lib_dir.pop(); // deps/
    let lib = lib_dir.join("libtvcut_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let compile = std::process::Command::new("cc")
        .arg(&smoke)
        .arg("-I")
        .arg(&header_dir)
        .arg(lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("cc not available");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = std::process::Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "smoke client failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}
