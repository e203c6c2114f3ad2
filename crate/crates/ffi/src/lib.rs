//! C ABI over the `actattr` pipeline.
//!
//! Every entry point returns an [`ActattrStatus`]. On failure the message is
//! kept per thread and can be read with [`actattr_last_error`]. Objects are
//! handed out as opaque pointers and must be released with their `_free`
//! function. Matrices cross the boundary as row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use actattr::attributes::ScoreMatrix;
use actattr::composites::{build_knn_graph, propagate, script_score, seq_feature, EdgeKernel, NeighborGraph, PstConfig, SigmaMode};
use actattr::corpus::{build_documents, mine_weights, AttributeVocab, MatchMode, ScriptCorpus, SynonymLexicon, WeightMatrix, Weighting};
use actattr::psinfer::{infer_map, infer_marginals, Algorithm, Grid, PartGraph};
use actattr::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActattrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Parse = 5,
    Degenerate = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActattrMatchMode {
    Literal = 0,
    Synonym = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActattrWeighting {
    Freq = 0,
    Tfidf = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActattrAlgorithm {
    Naive = 0,
    DistanceTransform = 1,
}

/// Composite × attribute weight matrix.
pub struct ActattrWeights(WeightMatrix);

/// Attribute × interval score matrix of one video.
pub struct ActattrScores(ScoreMatrix);

/// kNN graph over sequence features, used for label propagation.
pub struct ActattrGraph(NeighborGraph);

/// Tree of body parts with Gaussian pairwise terms.
pub struct ActattrPartGraph(PartGraph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Internal failure carrying its status.
struct Fail(ActattrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config { .. } => ActattrStatus::InvalidArgument,
            Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } | Error::WindowOutOfRange { .. } => ActattrStatus::DimensionMismatch,
            Error::Io { .. } => ActattrStatus::Io,
            Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => ActattrStatus::Io,
            Error::Parse { .. } | Error::Format(_) | Error::Csv(_) | Error::Json(_) => ActattrStatus::Parse,
            Error::TooFewSamples { .. } | Error::Degenerate(_) | Error::NonFinite(_) => ActattrStatus::Degenerate,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ActattrStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ActattrStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ActattrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ActattrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(&format!("panic: {}", msg.unwrap_or_default()));
            ActattrStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_scalar<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

fn checked_len(a: usize, b: usize) -> Result<usize, Fail> {
    a.checked_mul(b).ok_or_else(|| invalid("size overflow"))
}

fn rows_of(values: &[f64], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|r| values[r * cols..(r + 1) * cols].to_vec()).collect()
}

fn copy_into(dst: &mut [f64], rows: &[Vec<f64>]) -> Result<(), Fail> {
    let total: usize = rows.iter().map(Vec::len).sum();
    if dst.len() != total {
        return Err(Fail(ActattrStatus::DimensionMismatch, format!("buffer holds {} values, need {total}", dst.len())));
    }
    for (chunk, row) in dst.chunks_mut(rows.first().map_or(1, Vec::len).max(1)).zip(rows) {
        chunk.copy_from_slice(row);
    }
    Ok(())
}

/// Message of the last failed call on this thread; empty after a successful one.
///
/// The pointer stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn actattr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn actattr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- weights

/// Reads a weight matrix CSV (`composite,<attribute>...`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_load_csv(path: *const c_char, out: *mut *mut ActattrWeights) -> ActattrStatus {
    guard(|| put(out, ActattrWeights(WeightMatrix::load_csv(&path_arg(path, "path")?)?)))
}

/// Mines L1-normalized weights from a script directory with one sub-directory per scenario.
///
/// `lexicon` may be null.
///
/// # Safety
/// Paths must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_mine(
    scripts_dir: *const c_char,
    vocab: *const c_char,
    lexicon: *const c_char,
    match_mode: ActattrMatchMode,
    weighting: ActattrWeighting,
    out: *mut *mut ActattrWeights,
) -> ActattrStatus {
    guard(|| {
        let corpus = ScriptCorpus::load_dir(&path_arg(scripts_dir, "scripts_dir")?)?;
        let vocab = AttributeVocab::load_tsv(&path_arg(vocab, "vocab")?)?;
        let lexicon = if lexicon.is_null() { SynonymLexicon::new() } else { SynonymLexicon::load_tsv(&path_arg(lexicon, "lexicon")?)? };
        let mode = match match_mode {
            ActattrMatchMode::Literal => MatchMode::Literal,
            ActattrMatchMode::Synonym => MatchMode::Synonym,
        };
        let weighting = match weighting {
            ActattrWeighting::Freq => Weighting::Freq,
            ActattrWeighting::Tfidf => Weighting::Tfidf,
        };
        put(out, ActattrWeights(mine_weights(&build_documents(&corpus), &vocab, &lexicon, mode, weighting)))
    })
}

/// Wraps a row-major `rows × cols` buffer. Rows are labelled `c<k>`, columns `a<k>`.
///
/// # Safety
/// `values` must point to `rows * cols` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_from_values(rows: usize, cols: usize, values: *const f64, out: *mut *mut ActattrWeights) -> ActattrStatus {
    guard(|| {
        let v = slice_arg(values, checked_len(rows, cols)?, "values")?;
        let w = WeightMatrix::new(rows_of(v, rows, cols), (0..rows).map(|k| format!("c{k}")).collect(), (0..cols).map(|k| format!("a{k}")).collect())?;
        put(out, ActattrWeights(w))
    })
}

/// # Safety
/// `w` must come from this library; `rows` and `cols` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_shape(w: *const ActattrWeights, rows: *mut usize, cols: *mut usize) -> ActattrStatus {
    guard(|| {
        let w = &handle(w, "weights")?.0;
        put_scalar(rows, w.rows())?;
        put_scalar(cols, w.cols())
    })
}

/// Copies the matrix row-major into `buf`, which must hold exactly `rows * cols` values.
///
/// # Safety
/// `w` must come from this library and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_copy(w: *const ActattrWeights, buf: *mut f64, len: usize) -> ActattrStatus {
    guard(|| copy_into(out_slice(buf, len, "buf")?, &handle(w, "weights")?.0.values))
}

/// # Safety
/// `w` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn actattr_weights_free(w: *mut ActattrWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

// ---- scores

/// Wraps a row-major `n × t` attribute score buffer.
///
/// # Safety
/// `values` must point to `n * t` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_scores_from_values(n: usize, t: usize, values: *const f64, out: *mut *mut ActattrScores) -> ActattrStatus {
    guard(|| {
        let v = slice_arg(values, checked_len(n, t)?, "values")?;
        let s = ScoreMatrix::new((0..n).map(|k| format!("a{k}")).collect(), (0..t).map(|k| k.to_string()).collect(), rows_of(v, n, t))?;
        put(out, ActattrScores(s))
    })
}

/// Reads a score matrix CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_scores_load_csv(path: *const c_char, out: *mut *mut ActattrScores) -> ActattrStatus {
    guard(|| put(out, ActattrScores(ScoreMatrix::load_csv(&path_arg(path, "path")?)?)))
}

/// # Safety
/// `s` must come from this library; `n` and `t` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn actattr_scores_shape(s: *const ActattrScores, n: *mut usize, t: *mut usize) -> ActattrStatus {
    guard(|| {
        let s = &handle(s, "scores")?.0;
        put_scalar(n, s.n())?;
        put_scalar(t, s.t())
    })
}

/// Max over intervals for every attribute; `buf` must hold `n` values.
///
/// # Safety
/// `s` must come from this library and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn actattr_scores_pool_max(s: *const ActattrScores, buf: *mut f64, len: usize) -> ActattrStatus {
    guard(|| copy_into(out_slice(buf, len, "buf")?, &[seq_feature(&handle(s, "scores")?.0)]))
}

/// # Safety
/// `s` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn actattr_scores_free(s: *mut ActattrScores) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Zero-shot composite scores `Σ_i w_{z,i} g_i` of a pooled feature `g`.
///
/// # Safety
/// `g` must point to `g_len` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn actattr_script_scores(w: *const ActattrWeights, g: *const f64, g_len: usize, out: *mut f64, out_len: usize) -> ActattrStatus {
    guard(|| {
        let scores = script_score(slice_arg(g, g_len, "g")?, &handle(w, "weights")?.0)?;
        copy_into(out_slice(out, out_len, "out")?, &[scores])
    })
}

// ---- label propagation

/// Builds a symmetric kNN graph over `d` sequence features of length `dim` (row-major).
///
/// `squared_kernel` selects `exp(−‖a − b‖² / 2σ²)` edges instead of the default kernel.
///
/// # Safety
/// `features` must point to `d * dim` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_graph_build(
    features: *const f64,
    d: usize,
    dim: usize,
    k: usize,
    squared_kernel: bool,
    out: *mut *mut ActattrGraph,
) -> ActattrStatus {
    guard(|| {
        let f = rows_of(slice_arg(features, checked_len(d, dim)?, "features")?, d, dim);
        let kernel = if squared_kernel { EdgeKernel::Squared } else { EdgeKernel::Literal };
        put(out, ActattrGraph(build_knn_graph(&f, k, SigmaMode::Nearest, kernel)?))
    })
}

/// # Safety
/// `g` must come from this library and `n` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_graph_nodes(g: *const ActattrGraph, n: *mut usize) -> ActattrStatus {
    guard(|| put_scalar(n, handle(g, "graph")?.0.n))
}

/// Propagates `z` rows of initial scores (row-major `z × n`) over the graph.
///
/// `out` receives the converged `z × n` scores; `iterations` may be null.
///
/// # Safety
/// `init` must point to `z * n` doubles and `out` to as many writable ones.
#[no_mangle]
pub unsafe extern "C" fn actattr_graph_propagate(
    g: *const ActattrGraph,
    init: *const f64,
    z: usize,
    alpha: f64,
    out: *mut f64,
    out_len: usize,
    iterations: *mut usize,
) -> ActattrStatus {
    guard(|| {
        let g = &handle(g, "graph")?.0;
        let y = rows_of(slice_arg(init, checked_len(z, g.n)?, "init")?, z, g.n);
        let defaults = PstConfig::default();
        let p = propagate(g, &y, alpha, defaults.tol, defaults.max_iters)?;
        if !p.converged {
            return Err(Fail(ActattrStatus::Degenerate, format!("no convergence after {} iterations", p.iterations)));
        }
        copy_into(out_slice(out, out_len, "out")?, &p.scores)?;
        if !iterations.is_null() {
            *iterations = p.iterations;
        }
        Ok(())
    })
}

/// # Safety
/// `g` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn actattr_graph_free(g: *mut ActattrGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---- pictorial structures

/// The ten-part upper-body model.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_part_graph_upper_body(out: *mut *mut ActattrPartGraph) -> ActattrStatus {
    guard(|| put(out, ActattrPartGraph(PartGraph::upper_body())))
}

/// Reads a part graph from JSON.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_part_graph_load(path: *const c_char, out: *mut *mut ActattrPartGraph) -> ActattrStatus {
    guard(|| put(out, ActattrPartGraph(PartGraph::load(&path_arg(path, "path")?)?)))
}

/// # Safety
/// `g` must come from this library and `parts` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn actattr_part_graph_len(g: *const ActattrPartGraph, parts: *mut usize) -> ActattrStatus {
    guard(|| put_scalar(parts, handle(g, "graph")?.0.len()))
}

/// # Safety
/// `g` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn actattr_part_graph_free(g: *mut ActattrPartGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn grids_arg(g: &PartGraph, grids: *const f64, h: usize, w: usize) -> Result<Vec<Grid>, Fail> {
    let cell = checked_len(h, w)?;
    let v = slice_arg(grids, checked_len(g.len(), cell)?, "grids")?;
    (0..g.len()).map(|p| Grid::from_values(h, w, v[p * cell..(p + 1) * cell].to_vec()).map_err(Fail::from)).collect()
}

fn algorithm(a: ActattrAlgorithm) -> Algorithm {
    match a {
        ActattrAlgorithm::Naive => Algorithm::Naive,
        ActattrAlgorithm::DistanceTransform => Algorithm::DistanceTransform,
    }
}

/// Joint MAP placement. `grids` holds one `h × w` likelihood grid per part in graph order.
///
/// `xs` and `ys` receive one coordinate per part; `log_score` may be null.
///
/// # Safety
/// `grids` must point to `parts * h * w` doubles; `xs` and `ys` to `parts` writable entries.
#[no_mangle]
pub unsafe extern "C" fn actattr_pose_infer_map(
    g: *const ActattrPartGraph,
    grids: *const f64,
    h: usize,
    w: usize,
    algo: ActattrAlgorithm,
    xs: *mut usize,
    ys: *mut usize,
    log_score: *mut f64,
) -> ActattrStatus {
    guard(|| {
        let g = &handle(g, "graph")?.0;
        let map = infer_map(&grids_arg(g, grids, h, w)?, g, algorithm(algo))?;
        if xs.is_null() || ys.is_null() {
            return Err(null("xs/ys"));
        }
        for (k, &(x, y)) in map.placements.iter().enumerate() {
            *xs.add(k) = x;
            *ys.add(k) = y;
        }
        if !log_score.is_null() {
            *log_score = map.log_score;
        }
        Ok(())
    })
}

/// Posterior marginals per part, written like the input grids.
///
/// # Safety
/// `grids` must point to `parts * h * w` doubles and `out` to `out_len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn actattr_pose_infer_marginals(
    g: *const ActattrPartGraph,
    grids: *const f64,
    h: usize,
    w: usize,
    algo: ActattrAlgorithm,
    out: *mut f64,
    out_len: usize,
) -> ActattrStatus {
    guard(|| {
        let g = &handle(g, "graph")?.0;
        let m = infer_marginals(&grids_arg(g, grids, h, w)?, g, algorithm(algo))?;
        let rows: Vec<Vec<f64>> = m.into_iter().map(|g| g.values).collect();
        copy_into(out_slice(out, out_len, "out")?, &rows)
    })
}
