//! C ABI for the tvcut clustering library.
//!
//! Graphs and run results are opaque handles created and freed here; every
//! fallible call returns a [`TvcutStatus`] and leaves a human-readable
//! message retrievable with [`tvcut_last_error_message`]. The generated
//! header lives at `include/tvcut.h`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;

use tvcut::descent::{init_random, init_spectral, run, DescentConfig, DescentResult};
use tvcut::error::Error;
use tvcut::graph::{knn_graph, PointCloud, WeightedGraph};
use tvcut::ratio_cut::{ratio_cut_value, threshold_cluster, threshold_cluster_sweep, Partition};

/// Opaque graph handle.
pub struct TvcutGraph(WeightedGraph);

/// Opaque clustering-run handle.
pub struct TvcutRun {
    result: DescentResult,
    labels: Vec<u8>,
    ratio_cut: f64,
}

/// Call outcome. Mirrors the CLI exit contract: 1 for usage errors,
/// 2 for numerical failures, 3 for non-convergence.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvcutStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    NotConverged = 3,
    NullPointer = 4,
    Disconnected = 5,
}

/// Initialization of the descent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvcutInit {
    Random = 0,
    Spectral = 1,
}

/// How labels are read off the final signal.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvcutThreshold {
    Zero = 0,
    Sweep = 1,
}

/// Clustering-run options; fill with `tvcut_options_default` first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvcutOptions {
    pub c: f64,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_outer_iter: usize,
    pub inner_max_iter: usize,
    pub seed: u64,
    pub init: TvcutInit,
    pub threshold: TvcutThreshold,
    pub check_lemmas: bool,
    /// Accept disconnected graphs; the descent then stops at a zero-energy
    /// component split.
    pub allow_disconnected: bool,
}

/// One row of the convergence trace.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvcutTraceRow {
    pub energy: f64,
    pub increment: f64,
    pub prox_gap: f64,
    pub descent_slack: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> TvcutStatus {
    match err.exit_code() {
        1 => match err {
            Error::Disconnected { .. } => TvcutStatus::Disconnected,
            _ => TvcutStatus::InvalidArgument,
        },
        3 => TvcutStatus::NotConverged,
        _ => TvcutStatus::NumericalFailure,
    }
}

fn fail(err: &Error) -> TvcutStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn fail_null(what: &str) -> TvcutStatus {
    set_error(&format!("null pointer: {what}"));
    TvcutStatus::NullPointer
}

/// Message describing the most recent failure on this thread. Valid until
/// the next failing call; never null.
#[no_mangle]
pub extern "C" fn tvcut_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a graph from `n_edges` undirected edges given as parallel arrays.
///
/// # Safety
/// `src`, `dst`, `weights` must point to `n_edges` readable elements and
/// `out` must be a valid location for the handle.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_from_edges(
    n_vertices: usize,
    src: *const usize,
    dst: *const usize,
    weights: *const f64,
    n_edges: usize,
    out: *mut *mut TvcutGraph,
) -> TvcutStatus {
    if out.is_null() {
        return fail_null("out");
    }
    if n_edges > 0 && (src.is_null() || dst.is_null() || weights.is_null()) {
        return fail_null("edge arrays");
    }
    let src = std::slice::from_raw_parts(src, n_edges);
    let dst = std::slice::from_raw_parts(dst, n_edges);
    let w = std::slice::from_raw_parts(weights, n_edges);
    let triples: Vec<(usize, usize, f64)> = (0..n_edges).map(|i| (src[i], dst[i], w[i])).collect();
    match WeightedGraph::new(n_vertices, &triples) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(TvcutGraph(g)));
            TvcutStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Build the self-tuning kNN graph of `n_points` points in row-major layout.
///
/// # Safety
/// `points` must hold `n_points * dim` readable doubles; `out` must be a
/// valid location for the handle.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_knn(
    points: *const f64,
    n_points: usize,
    dim: usize,
    k: usize,
    self_tune_m: usize,
    universal_scale: f64,
    out: *mut *mut TvcutGraph,
) -> TvcutStatus {
    if out.is_null() {
        return fail_null("out");
    }
    if points.is_null() {
        return fail_null("points");
    }
    let data = std::slice::from_raw_parts(points, n_points.saturating_mul(dim)).to_vec();
    let cloud = match PointCloud::from_flat(data, dim) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match knn_graph(&cloud, k, self_tune_m, universal_scale) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(TvcutGraph(g)));
            TvcutStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `g` must be a handle from this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_free(g: *mut TvcutGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_vertex_count(g: *const TvcutGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Stored undirected edge count; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_edge_count(g: *const TvcutGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvcut_graph_is_connected(
    g: *const TvcutGraph,
    out: *mut bool,
) -> TvcutStatus {
    let Some(g) = g.as_ref() else {
        return fail_null("graph");
    };
    if out.is_null() {
        return fail_null("out");
    }
    *out = g.0.is_connected();
    TvcutStatus::Ok
}

/// Fill `out` with the default options (c = 1/4, random init, zero split).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvcut_options_default(out: *mut TvcutOptions) -> TvcutStatus {
    if out.is_null() {
        return fail_null("out");
    }
    let d = DescentConfig::default();
    *out = TvcutOptions {
        c: d.c,
        outer_tol: d.outer_tol,
        inner_tol: d.inner_tol,
        max_outer_iter: d.max_outer_iter,
        inner_max_iter: d.inner_max_iter,
        seed: d.seed,
        init: TvcutInit::Random,
        threshold: TvcutThreshold::Zero,
        check_lemmas: false,
        allow_disconnected: false,
    };
    TvcutStatus::Ok
}

/// Run the descent clustering on `g`. On success (or bounded
/// non-convergence, status `NotConverged`) `out` receives a run handle.
///
/// # Safety
/// `g` must be a live graph handle; `opts` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tvcut_cluster(
    g: *const TvcutGraph,
    opts: *const TvcutOptions,
    out: *mut *mut TvcutRun,
) -> TvcutStatus {
    let Some(graph) = g.as_ref().map(|g| &g.0) else {
        return fail_null("graph");
    };
    let Some(opts) = opts.as_ref() else {
        return fail_null("opts");
    };
    if out.is_null() {
        return fail_null("out");
    }

    if !opts.allow_disconnected && !graph.is_connected() {
        return fail(&Error::Disconnected {
            components: graph.connected_components(),
        });
    }
    let cfg = DescentConfig {
        c: opts.c,
        outer_tol: opts.outer_tol,
        max_outer_iter: opts.max_outer_iter,
        inner_tol: opts.inner_tol,
        inner_max_iter: opts.inner_max_iter,
        check_lemmas: opts.check_lemmas,
        seed: opts.seed,
    };
    let cluster = || -> Result<TvcutRun, Error> {
        let f0 = match opts.init {
            TvcutInit::Random => init_random(graph.n(), opts.seed)?,
            TvcutInit::Spectral => init_spectral(graph)?,
        };
        let result = run(graph, &f0, &cfg)?;
        let partition = match opts.threshold {
            TvcutThreshold::Zero => threshold_cluster(&result.f_star)?,
            TvcutThreshold::Sweep => threshold_cluster_sweep(graph, &result.f_star)?,
        };
        let rc = ratio_cut_value(graph, &partition)?;
        Ok(TvcutRun {
            result,
            labels: partition.labels().iter().map(|&b| b as u8).collect(),
            ratio_cut: rc,
        })
    };
    match cluster() {
        Ok(run) => {
            let converged = run.result.converged;
            *out = Box::into_raw(Box::new(run));
            if converged {
                TvcutStatus::Ok
            } else {
                set_error("descent stopped at the iteration budget");
                TvcutStatus::NotConverged
            }
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `r` must be a handle from `tvcut_cluster`, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_free(r: *mut TvcutRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Final energy of the run; NaN for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_energy(r: *const TvcutRun) -> f64 {
    r.as_ref()
        .and_then(|r| r.result.trace.last())
        .map_or(f64::NAN, |rec| rec.energy)
}

/// Outer iterations executed; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_iterations(r: *const TvcutRun) -> usize {
    r.as_ref().map_or(0, |r| r.result.trace.len())
}

#[no_mangle]
pub unsafe extern "C" fn tvcut_run_converged(r: *const TvcutRun) -> bool {
    r.as_ref().is_some_and(|r| r.result.converged)
}

/// Increment of the last step; NaN for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_critical_residual(r: *const TvcutRun) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.result.critical_residual)
}

/// Discrete ratio cut of the extracted partition; NaN for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_ratio_cut(r: *const TvcutRun) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.ratio_cut)
}

/// Copy the 0/1 labels into `buf` (`len` must equal the vertex count).
///
/// # Safety
/// `buf` must hold `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_labels(
    r: *const TvcutRun,
    buf: *mut u8,
    len: usize,
) -> TvcutStatus {
    let Some(r) = r.as_ref() else {
        return fail_null("run");
    };
    if buf.is_null() {
        return fail_null("buf");
    }
    if len != r.labels.len() {
        return fail(&Error::LengthMismatch {
            expected: r.labels.len(),
            got: len,
        });
    }
    std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&r.labels);
    TvcutStatus::Ok
}

/// Copy the final unit-norm signal into `buf` (`len` = vertex count).
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_signal(
    r: *const TvcutRun,
    buf: *mut f64,
    len: usize,
) -> TvcutStatus {
    let Some(r) = r.as_ref() else {
        return fail_null("run");
    };
    if buf.is_null() {
        return fail_null("buf");
    }
    let f = r.result.f_star.values();
    if len != f.len() {
        return fail(&Error::LengthMismatch {
            expected: f.len(),
            got: len,
        });
    }
    std::slice::from_raw_parts_mut(buf, len).copy_from_slice(f);
    TvcutStatus::Ok
}

/// Number of trace rows; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_trace_len(r: *const TvcutRun) -> usize {
    r.as_ref().map_or(0, |r| r.result.trace.len())
}

/// Fetch trace row `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvcut_run_trace_row(
    r: *const TvcutRun,
    k: usize,
    out: *mut TvcutTraceRow,
) -> TvcutStatus {
    let Some(r) = r.as_ref() else {
        return fail_null("run");
    };
    if out.is_null() {
        return fail_null("out");
    }
    let Some(rec) = r.result.trace.get(k) else {
        return fail(&Error::InvalidParameter(format!(
            "trace row {k} out of range ({} rows)",
            r.result.trace.len()
        )));
    };
    *out = TvcutTraceRow {
        energy: rec.energy,
        increment: rec.increment,
        prox_gap: rec.prox_gap,
        descent_slack: rec.descent_slack,
    };
    TvcutStatus::Ok
}

/// Ratio cut of an arbitrary 0/1 labeling of `g`.
///
/// # Safety
/// `labels` must hold `len` readable bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvcut_ratio_cut_value(
    g: *const TvcutGraph,
    labels: *const u8,
    len: usize,
    out: *mut f64,
) -> TvcutStatus {
    let Some(g) = g.as_ref() else {
        return fail_null("graph");
    };
    if labels.is_null() {
        return fail_null("labels");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let bits: Vec<bool> = std::slice::from_raw_parts(labels, len)
        .iter()
        .map(|&b| b != 0)
        .collect();
    let result = Partition::new(bits).and_then(|p| ratio_cut_value(&g.0, &p));
    match result {
        Ok(v) => {
            *out = v;
            TvcutStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Relaxed energy T(f)/B(f) of an arbitrary signal on `g`.
///
/// # Safety
/// `values` must hold `len` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvcut_energy(
    g: *const TvcutGraph,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> TvcutStatus {
    let Some(g) = g.as_ref() else {
        return fail_null("graph");
    };
    if values.is_null() {
        return fail_null("values");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let vals = std::slice::from_raw_parts(values, len).to_vec();
    let result = tvcut::Signal::new(vals).and_then(|f| tvcut::functional::energy(&g.0, &f));
    match result {
        Ok(v) => {
            *out = v;
            TvcutStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
