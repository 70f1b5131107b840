//! C ABI over the mimf toolkit: opaque handles, integer status codes, and
//! explicit free functions. The companion header lives in
//! `include/mimf.h` and mirrors the declarations in this file.
//!
//! Conventions: every fallible call returns a [`MimfStatus`]; outputs come
//! back through out-pointers that are written only on `MIMF_OK`. Strings
//! returned by the library must be released with [`mimf_string_free`],
//! handles with their matching `_free` function. `mimf_last_error_message`
//! returns a thread-local description of the most recent failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use mimf::bench::{build_relaxed_milp, generate_instance, BenchFormulation, Instance};
use mimf::io::{instance_from_json, instance_to_json, read_mps, write_mps};
use mimf::model::LinearModel;
use mimf::solver::{lp_gap, solve_lp, solve_milp, MilpOptions, SolveResult, SolveStatus};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MimfStatus {
    MimfOk = 0,
    MimfErrNullPointer = 1,
    MimfErrUtf8 = 2,
    MimfErrInvalidArgument = 3,
    MimfErrParse = 4,
}

/// Formulation selector for `mimf_build_relaxation`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MimfFormulation {
    MimfFormulationLambda = 0,
    MimfFormulationRmc = 1,
}

/// Solve outcome mirrored from the core solver.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MimfSolveStatus {
    MimfSolveOptimal = 0,
    MimfSolveInfeasible = 1,
    MimfSolveUnbounded = 2,
    MimfSolveNodeLimit = 3,
    MimfSolveIterLimit = 4,
}

/// Opaque benchmark instance.
pub struct MimfInstance(Instance);
/// Opaque mixed-binary linear model.
pub struct MimfModel(LinearModel);
/// Opaque solve result.
pub struct MimfSolveResult(SolveResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into()).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn utf8_in<'a>(ptr: *const c_char) -> Result<&'a str, MimfStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(MimfStatus::MimfErrNullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("input is not valid UTF-8");
        MimfStatus::MimfErrUtf8
    })
}

fn string_out(s: String, out: *mut *mut c_char) -> MimfStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            MimfStatus::MimfOk
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            MimfStatus::MimfErrInvalidArgument
        }
    }
}

/// Description of the most recent error on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mimf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null(), |c| c.as_ptr())
    })
}

/// Frees a string returned by this library.
#[no_mangle]
pub extern "C" fn mimf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Generates a benchmark instance (`demand = demand_factor * n`).
#[no_mangle]
pub extern "C" fn mimf_instance_generate(
    n: usize,
    k: usize,
    seed: u64,
    demand_factor: f64,
    out: *mut *mut MimfInstance,
) -> MimfStatus {
    if out.is_null() {
        set_error("null output pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    match generate_instance(n, k, seed, demand_factor) {
        Ok(inst) => {
            unsafe { *out = Box::into_raw(Box::new(MimfInstance(inst))) };
            MimfStatus::MimfOk
        }
        Err(e) => {
            set_error(e.to_string());
            MimfStatus::MimfErrInvalidArgument
        }
    }
}

/// Parses an instance from its JSON form.
#[no_mangle]
pub extern "C" fn mimf_instance_from_json(
    json: *const c_char,
    out: *mut *mut MimfInstance,
) -> MimfStatus {
    if out.is_null() {
        set_error("null output pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let text = match utf8_in(json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match instance_from_json(text) {
        Ok(inst) => {
            unsafe { *out = Box::into_raw(Box::new(MimfInstance(inst))) };
            MimfStatus::MimfOk
        }
        Err(e) => {
            set_error(e.to_string());
            MimfStatus::MimfErrParse
        }
    }
}

/// Serializes an instance to JSON (free with `mimf_string_free`).
#[no_mangle]
pub extern "C" fn mimf_instance_to_json(
    instance: *const MimfInstance,
    out: *mut *mut c_char,
) -> MimfStatus {
    if instance.is_null() || out.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let inst = unsafe { &*instance };
    string_out(instance_to_json(&inst.0), out)
}

#[no_mangle]
pub extern "C" fn mimf_instance_free(instance: *mut MimfInstance) {
    if !instance.is_null() {
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// Builds the lower-bounding MILP of an instance under one of the two
/// disjunctive relaxations.
#[no_mangle]
pub extern "C" fn mimf_build_relaxation(
    instance: *const MimfInstance,
    formulation: MimfFormulation,
    out: *mut *mut MimfModel,
) -> MimfStatus {
    if instance.is_null() || out.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let inst = unsafe { &*instance };
    let f = match formulation {
        MimfFormulation::MimfFormulationLambda => BenchFormulation::FLambda,
        MimfFormulation::MimfFormulationRmc => BenchFormulation::FRmc,
    };
    match build_relaxed_milp(&inst.0, f) {
        Ok((model, _)) => {
            unsafe { *out = Box::into_raw(Box::new(MimfModel(model))) };
            MimfStatus::MimfOk
        }
        Err(e) => {
            set_error(e.to_string());
            MimfStatus::MimfErrInvalidArgument
        }
    }
}

/// Parses a model from free-format MPS text.
#[no_mangle]
pub extern "C" fn mimf_model_from_mps(
    text: *const c_char,
    out: *mut *mut MimfModel,
) -> MimfStatus {
    if out.is_null() {
        set_error("null output pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let text = match utf8_in(text) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match read_mps(text) {
        Ok(model) => {
            unsafe { *out = Box::into_raw(Box::new(MimfModel(model))) };
            MimfStatus::MimfOk
        }
        Err(e) => {
            set_error(e.to_string());
            MimfStatus::MimfErrParse
        }
    }
}

/// Serializes a model to MPS text (free with `mimf_string_free`).
#[no_mangle]
pub extern "C" fn mimf_model_to_mps(
    model: *const MimfModel,
    out: *mut *mut c_char,
) -> MimfStatus {
    if model.is_null() || out.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let m = unsafe { &*model };
    match write_mps(&m.0) {
        Ok(text) => string_out(text, out),
        Err(e) => {
            set_error(e.to_string());
            MimfStatus::MimfErrInvalidArgument
        }
    }
}

#[no_mangle]
pub extern "C" fn mimf_model_num_variables(model: *const MimfModel) -> usize {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.0.num_variables()
}

#[no_mangle]
pub extern "C" fn mimf_model_num_constraints(model: *const MimfModel) -> usize {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.0.num_constraints()
}

#[no_mangle]
pub extern "C" fn mimf_model_free(model: *mut MimfModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Solves the continuous relaxation.
#[no_mangle]
pub extern "C" fn mimf_solve_lp(
    model: *const MimfModel,
    out: *mut *mut MimfSolveResult,
) -> MimfStatus {
    if model.is_null() || out.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let m = unsafe { &*model };
    let r = solve_lp(&m.0);
    unsafe { *out = Box::into_raw(Box::new(MimfSolveResult(r))) };
    MimfStatus::MimfOk
}

/// Solves the MILP by branch-and-bound (`node_limit` 0 means the default
/// of 100000 nodes).
#[no_mangle]
pub extern "C" fn mimf_solve_milp(
    model: *const MimfModel,
    node_limit: u64,
    out: *mut *mut MimfSolveResult,
) -> MimfStatus {
    if model.is_null() || out.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let m = unsafe { &*model };
    let opts = MilpOptions {
        node_limit: if node_limit == 0 { 100_000 } else { node_limit },
        ..MilpOptions::default()
    };
    let r = solve_milp(&m.0, &opts);
    unsafe { *out = Box::into_raw(Box::new(MimfSolveResult(r))) };
    MimfStatus::MimfOk
}

#[no_mangle]
pub extern "C" fn mimf_result_status(result: *const MimfSolveResult) -> MimfSolveStatus {
    if result.is_null() {
        return MimfSolveStatus::MimfSolveIterLimit;
    }
    match unsafe { &*result }.0.status {
        SolveStatus::Optimal => MimfSolveStatus::MimfSolveOptimal,
        SolveStatus::Infeasible => MimfSolveStatus::MimfSolveInfeasible,
        SolveStatus::Unbounded => MimfSolveStatus::MimfSolveUnbounded,
        SolveStatus::NodeLimit => MimfSolveStatus::MimfSolveNodeLimit,
        SolveStatus::IterLimit => MimfSolveStatus::MimfSolveIterLimit,
    }
}

#[no_mangle]
pub extern "C" fn mimf_result_objective(result: *const MimfSolveResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { &*result }.0.objective
}

#[no_mangle]
pub extern "C" fn mimf_result_best_bound(result: *const MimfSolveResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { &*result }.0.best_bound
}

#[no_mangle]
pub extern "C" fn mimf_result_bb_nodes(result: *const MimfSolveResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.0.bb_nodes
}

#[no_mangle]
pub extern "C" fn mimf_result_lp_iterations(result: *const MimfSolveResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.0.lp_iterations
}

#[no_mangle]
pub extern "C" fn mimf_result_wall_time(result: *const MimfSolveResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { &*result }.0.wall_time
}

/// Number of entries in the solution point (0 when none is available).
#[no_mangle]
pub extern "C" fn mimf_result_point_len(result: *const MimfSolveResult) -> usize {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.0.point.len()
}

/// Copies the solution point into a caller-owned buffer of `len` doubles;
/// `len` must be at least `mimf_result_point_len`.
#[no_mangle]
pub extern "C" fn mimf_result_point_copy(
    result: *const MimfSolveResult,
    buffer: *mut f64,
    len: usize,
) -> MimfStatus {
    if result.is_null() || buffer.is_null() {
        set_error("null pointer");
        return MimfStatus::MimfErrNullPointer;
    }
    let point = &unsafe { &*result }.0.point;
    if len < point.len() {
        set_error(format!(
            "buffer holds {len} entries but the point has {}",
            point.len()
        ));
        return MimfStatus::MimfErrInvalidArgument;
    }
    unsafe { ptr::copy_nonoverlapping(point.as_ptr(), buffer, point.len()) };
    MimfStatus::MimfOk
}

#[no_mangle]
pub extern "C" fn mimf_result_free(result: *mut MimfSolveResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// LP gap in percent, `(opt - lb) / opt * 100`; NaN when `opt` is zero.
#[no_mangle]
pub extern "C" fn mimf_lp_gap(opt: f64, lb: f64) -> f64 {
    lp_gap(opt, lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_build_solve_through_the_c_surface() {
        let mut inst: *mut MimfInstance = ptr::null_mut();
        assert_eq!(
            mimf_instance_generate(6, 2, 3, 0.7, &mut inst),
            MimfStatus::MimfOk
        );
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(mimf_instance_to_json(inst, &mut json), MimfStatus::MimfOk);
        let mut inst2: *mut MimfInstance = ptr::null_mut();
        assert_eq!(
            mimf_instance_from_json(json, &mut inst2),
            MimfStatus::MimfOk
        );
        mimf_string_free(json);

        let mut model: *mut MimfModel = ptr::null_mut();
        assert_eq!(
            mimf_build_relaxation(inst2, MimfFormulation::MimfFormulationLambda, &mut model),
            MimfStatus::MimfOk
        );
        assert!(mimf_model_num_variables(model) > 0);

        let mut mps: *mut c_char = ptr::null_mut();
        assert_eq!(mimf_model_to_mps(model, &mut mps), MimfStatus::MimfOk);
        let mut model2: *mut MimfModel = ptr::null_mut();
        assert_eq!(mimf_model_from_mps(mps, &mut model2), MimfStatus::MimfOk);
        assert_eq!(
            mimf_model_num_constraints(model),
            mimf_model_num_constraints(model2)
        );
        mimf_string_free(mps);

        let mut lp: *mut MimfSolveResult = ptr::null_mut();
        assert_eq!(mimf_solve_lp(model, &mut lp), MimfStatus::MimfOk);
        assert_eq!(mimf_result_status(lp), MimfSolveStatus::MimfSolveOptimal);
        let lb = mimf_result_objective(lp);

        let mut milp: *mut MimfSolveResult = ptr::null_mut();
        assert_eq!(mimf_solve_milp(model, 0, &mut milp), MimfStatus::MimfOk);
        assert_eq!(mimf_result_status(milp), MimfSolveStatus::MimfSolveOptimal);
        let opt = mimf_result_objective(milp);
        assert!(lb <= opt + 1e-6);
        assert!(mimf_lp_gap(opt, lb) >= -1e-6);

        let n = mimf_result_point_len(milp);
        assert!(n > 0);
        let mut buf = vec![0.0f64; n];
        assert_eq!(
            mimf_result_point_copy(milp, buf.as_mut_ptr(), n),
            MimfStatus::MimfOk
        );

        mimf_result_free(lp);
        mimf_result_free(milp);
        mimf_model_free(model);
        mimf_model_free(model2);
        mimf_instance_free(inst);
        mimf_instance_free(inst2);
    }

    #[test]
    fn errors_set_the_thread_local_message() {
        let mut out: *mut MimfInstance = ptr::null_mut();
        assert_eq!(
            mimf_instance_generate(2, 5, 0, 0.7, &mut out),
            MimfStatus::MimfErrInvalidArgument
        );
        let msg = mimf_last_error_message();
        assert!(!msg.is_null());
        let text = unsafe { CStr::from_ptr(msg) }.to_str().unwrap();
        assert!(text.contains("n >= k"), "message: {text}");

        let bad = CString::new("{ not json").unwrap();
        let mut inst: *mut MimfInstance = ptr::null_mut();
        assert_eq!(
            mimf_instance_from_json(bad.as_ptr(), &mut inst),
            MimfStatus::MimfErrParse
        );
        assert_eq!(
            mimf_instance_from_json(ptr::null(), &mut inst),
            MimfStatus::MimfErrNullPointer
        );
    }
}
