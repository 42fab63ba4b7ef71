//! C ABI over the toric homology engine: opaque fan handles, integer
//! error codes, JSON strings for structured results.
//!
//! Conventions:
//! - every returned `char*` is owned by the caller and must be released
//!   with `tobm_string_free`;
//! - fan handles are created by `tobm_fan_parse` / `tobm_fan_resolve` and
//!   released with `tobm_fan_free`;
//! - functions returning `int32_t` use `TOBM_OK` (0) for success,
//!   `TOBM_ERR_DOMAIN` (1) for domain errors (non-smooth input where
//!   smoothness is required, unsupported descent, incompleteness),
//!   `TOBM_ERR_PARSE` (2) for malformed input and `TOBM_ERR_NULL` (3)
//!   for null or non-UTF-8 arguments;
//! - the last error message is kept per thread and retrieved with
//!   `tobm_last_error_message`.
//!
//! Safety: handle arguments must be valid pointers from this library (or
//! null, which is reported as `TOBM_ERR_NULL`); string arguments must be
//! NUL-terminated; returned strings and handles must be freed exactly
//! once with the matching `tobm_*_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};

use toric_obm::calculus::{equivariant_presentation, graded_invariants, simplify};
use toric_obm::descent::singular_presentation_seeded;
use toric_obm::duality::{check_kunneth, dual_module};
use toric_obm::error::Error;
use toric_obm::fan::{fan_to_json, parse_fan, Fan};
use toric_obm::report::{dual_to_json, invariants_to_json, presentation_to_json};
use toric_obm::ring::Theory;

pub const TOBM_OK: c_int = 0;
pub const TOBM_ERR_DOMAIN: c_int = 1;
pub const TOBM_ERR_PARSE: c_int = 2;
pub const TOBM_ERR_NULL: c_int = 3;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code_of(e: &Error) -> c_int {
    e.exit_code() as c_int
}

/// Opaque fan handle.
pub struct TobmFan {
    fan: Fan,
}

fn theory_from(name: &str, truncation: u32, beta: i64) -> Option<Theory> {
    match name {
        "chow" => Some(Theory::additive(truncation)),
        "ktheory" => Some(Theory::multiplicative(truncation, beta)),
        "cobordism" => Some(Theory::universal(truncation)),
        _ => None,
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

fn to_cstring(s: String) -> *mut c_char {
    CString::new(s)
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Parse a fan file (JSON text). Returns null on error; inspect
/// `tobm_last_error_message`.
#[no_mangle]
pub unsafe extern "C" fn tobm_fan_parse(json: *const c_char) -> *mut TobmFan {
    let Some(text) = cstr(json) else {
        set_error("null or non-UTF-8 input".into());
        return std::ptr::null_mut();
    };
    match parse_fan(text) {
        Ok(fan) => Box::into_raw(Box::new(TobmFan { fan })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

#[no_mangle]
pub unsafe extern "C" fn tobm_fan_free(fan: *mut TobmFan) {
    if !fan.is_null() {
        drop(Box::from_raw(fan));
    }
}

/// Serialize the fan back to its JSON file form.
#[no_mangle]
pub unsafe extern "C" fn tobm_fan_to_json(fan: *const TobmFan) -> *mut c_char {
    let Some(f) = fan.as_ref() else {
        set_error("null fan handle".into());
        return std::ptr::null_mut();
    };
    to_cstring(serde_json::to_string(&fan_to_json(&f.fan)).unwrap())
}

/// 1 if every cone is smooth, 0 otherwise, -TOBM_ERR_NULL on null.
#[no_mangle]
pub unsafe extern "C" fn tobm_fan_is_smooth(fan: *const TobmFan) -> c_int {
    match fan.as_ref() {
        Some(f) => f.fan.is_smooth() as c_int,
        None => -TOBM_ERR_NULL,
    }
}

/// 1 if the fan is complete, 0 otherwise, -TOBM_ERR_NULL on null.
#[no_mangle]
pub unsafe extern "C" fn tobm_fan_is_complete(fan: *const TobmFan) -> c_int {
    match fan.as_ref() {
        Some(f) => f.fan.is_complete() as c_int,
        None => -TOBM_ERR_NULL,
    }
}

/// Toric resolution; returns a new handle (the input stays valid).
#[no_mangle]
pub unsafe extern "C" fn tobm_fan_resolve(fan: *const TobmFan) -> *mut TobmFan {
    let Some(f) = fan.as_ref() else {
        set_error("null fan handle".into());
        return std::ptr::null_mut();
    };
    match f.fan.resolve() {
        Ok((resolved, _)) => Box::into_raw(Box::new(TobmFan { fan: resolved })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

unsafe fn present_impl(
    fan: *const TobmFan,
    theory: *const c_char,
    truncation: u32,
    beta: i64,
    equivariant: bool,
    out: *mut *mut c_char,
) -> c_int {
    if out.is_null() {
        return TOBM_ERR_NULL;
    }
    *out = std::ptr::null_mut();
    let Some(f) = fan.as_ref() else {
        set_error("null fan handle".into());
        return TOBM_ERR_NULL;
    };
    let Some(name) = cstr(theory) else {
        set_error("null or non-UTF-8 theory name".into());
        return TOBM_ERR_NULL;
    };
    let d = if truncation == 0 {
        f.fan.rank as u32
    } else {
        truncation
    };
    let Some(th) = theory_from(name, d, beta) else {
        set_error(format!("unknown theory `{}`", name));
        return TOBM_ERR_PARSE;
    };
    let result = if equivariant {
        equivariant_presentation(&f.fan, &th).map(|p| simplify(&p, &th))
    } else {
        singular_presentation_seeded(&f.fan, &th, None).map(|(p, _)| p)
    };
    match result {
        Ok(pres) => {
            let mut value = presentation_to_json(&pres);
            if !pres.desc.equivariant {
                value.as_object_mut().unwrap().insert(
                    "invariants".into(),
                    invariants_to_json(&graded_invariants(&pres, &th)),
                );
            }
            *out = to_cstring(serde_json::to_string(&value).unwrap());
            TOBM_OK
        }
        Err(e) => {
            set_error(e.to_string());
            code_of(&e)
        }
    }
}

/// Presentation of the homology of the toric variety (descent for singular
/// input). `truncation` 0 means the fan rank; `beta` scales the
/// multiplicative law. The JSON report is written to `*out`.
#[no_mangle]
pub unsafe extern "C" fn tobm_present(
    fan: *const TobmFan,
    theory: *const c_char,
    truncation: u32,
    beta: i64,
    out: *mut *mut c_char,
) -> c_int {
    present_impl(fan, theory, truncation, beta, false, out)
}

/// Equivariant presentation (smooth fans only).
#[no_mangle]
pub unsafe extern "C" fn tobm_present_equivariant(
    fan: *const TobmFan,
    theory: *const c_char,
    truncation: u32,
    beta: i64,
    out: *mut *mut c_char,
) -> c_int {
    present_impl(fan, theory, truncation, beta, true, out)
}

/// Kronecker-dual module report.
#[no_mangle]
pub unsafe extern "C" fn tobm_dual(
    fan: *const TobmFan,
    theory: *const c_char,
    truncation: u32,
    beta: i64,
    allow_noncomplete: c_int,
    out: *mut *mut c_char,
) -> c_int {
    if out.is_null() {
        return TOBM_ERR_NULL;
    }
    *out = std::ptr::null_mut();
    let Some(f) = fan.as_ref() else {
        set_error("null fan handle".into());
        return TOBM_ERR_NULL;
    };
    let Some(name) = cstr(theory) else {
        set_error("null or non-UTF-8 theory name".into());
        return TOBM_ERR_NULL;
    };
    let d = if truncation == 0 {
        f.fan.rank as u32
    } else {
        truncation
    };
    let Some(th) = theory_from(name, d, beta) else {
        set_error(format!("unknown theory `{}`", name));
        return TOBM_ERR_PARSE;
    };
    let complete = f.fan.is_complete();
    let run = singular_presentation_seeded(&f.fan, &th, None)
        .and_then(|(p, _)| dual_module(&p, &th, complete, allow_noncomplete != 0));
    match run {
        Ok(dualm) => {
            *out = to_cstring(serde_json::to_string(&dual_to_json(&dualm, &[])).unwrap());
            TOBM_OK
        }
        Err(e) => {
            set_error(e.to_string());
            code_of(&e)
        }
    }
}

/// Künneth comparison for two fans: writes 1 (holds) or 0 to `*holds`.
#[no_mangle]
pub unsafe extern "C" fn tobm_kunneth_check(
    fan_x: *const TobmFan,
    fan_y: *const TobmFan,
    theory: *const c_char,
    beta: i64,
    holds: *mut c_int,
) -> c_int {
    if holds.is_null() {
        return TOBM_ERR_NULL;
    }
    let (Some(fx), Some(fy)) = (fan_x.as_ref(), fan_y.as_ref()) else {
        set_error("null fan handle".into());
        return TOBM_ERR_NULL;
    };
    let Some(name) = cstr(theory) else {
        set_error("null or non-UTF-8 theory name".into());
        return TOBM_ERR_NULL;
    };
    let d = (fx.fan.rank + fy.fan.rank) as u32;
    let Some(th) = theory_from(name, d, beta) else {
        set_error(format!("unknown theory `{}`", name));
        return TOBM_ERR_PARSE;
    };
    match check_kunneth(&fx.fan, &fy.fan, &th) {
        Ok(rep) => {
            *holds = rep.holds as c_int;
            TOBM_OK
        }
        Err(e) => {
            set_error(e.to_string());
            code_of(&e)
        }
    }
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn tobm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The last error message on this thread (owned by the caller).
#[no_mangle]
pub extern "C" fn tobm_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| to_cstring(e.borrow().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn parse(text: &str) -> *mut TobmFan {
        let c = CString::new(text).unwrap();
        unsafe { tobm_fan_parse(c.as_ptr()) }
    }

    fn take_string(p: *mut c_char) -> String {
        assert!(!p.is_null());
        let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
        unsafe { tobm_string_free(p) };
        s
    }

    #[test]
    fn parse_present_free() {
        let fan = parse(r#"{"dim":2,"rays":[[1,0],[0,1],[-1,-1]],"cones":[[0,1],[1,2],[0,2]]}"#);
        assert!(!fan.is_null());
        assert_eq!(unsafe { tobm_fan_is_smooth(fan) }, 1);
        assert_eq!(unsafe { tobm_fan_is_complete(fan) }, 1);
        let theory = CString::new("chow").unwrap();
        let mut out: *mut c_char = std::ptr::null_mut();
        let code = unsafe { tobm_present(fan, theory.as_ptr(), 0, 1, &mut out) };
        assert_eq!(code, TOBM_OK);
        let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(report["relations"].as_array().unwrap().len(), 0);
        unsafe { tobm_fan_free(fan) };
    }

    #[test]
    fn error_paths_set_codes_and_messages() {
        let bad = parse(r#"{"dim":1,"rays":[[0]],"cones":[[0]]}"#);
        assert!(bad.is_null());
        let msg = take_string(tobm_last_error_message());
        assert!(msg.contains("zero vector"), "got {}", msg);
        // equivariant on a singular fan is a domain error
        let cube = parse(
            r#"{"dim":3,
                "rays":[[1,0,0],[-1,1,1],[1,-1,0],[1,0,-1],[-1,0,1],[-1,1,0],[1,-1,-1],[-1,0,0]],
                "cones":[[0,2,3,6],[1,4,5,7],[0,1,3,5],[2,4,6,7],[0,1,2,4],[3,5,6,7]]}"#,
        );
        assert!(!cube.is_null());
        let theory = CString::new("cobordism").unwrap();
        let mut out: *mut c_char = std::ptr::null_mut();
        let code = unsafe { tobm_present_equivariant(cube, theory.as_ptr(), 0, 1, &mut out) };
        assert_eq!(code, TOBM_ERR_DOMAIN);
        assert!(out.is_null());
        unsafe { tobm_fan_free(cube) };
    }

    #[test]
    fn resolve_and_kunneth_through_the_abi() {
        let singular = parse(
            r#"{"dim":2,"rays":[[1,0],[-1,2],[-1,0],[-1,-3]],"cones":[[0,1],[1,2],[2,3],[3,0]]}"#,
        );
        assert_eq!(unsafe { tobm_fan_is_smooth(singular) }, 0);
        let resolved = unsafe { tobm_fan_resolve(singular) };
        assert!(!resolved.is_null());
        assert_eq!(unsafe { tobm_fan_is_smooth(resolved) }, 1);
        let json = take_string(unsafe { tobm_fan_to_json(resolved) });
        assert!(json.contains("\"dim\":2"));
        let p1 = parse(r#"{"dim":1,"rays":[[1],[-1]],"cones":[[0],[1]]}"#);
        let theory = CString::new("cobordism").unwrap();
        let mut holds: c_int = -1;
        let code = unsafe { tobm_kunneth_check(singular, p1, theory.as_ptr(), 1, &mut holds) };
        assert_eq!(code, TOBM_OK);
        assert_eq!(holds, 1);
        unsafe {
            tobm_fan_free(singular);
            tobm_fan_free(resolved);
            tobm_fan_free(p1);
        }
    }
}
