//! Keeps `include/ruinprob.h` in lockstep with the exported Rust surface.
//!
//! The header is written by hand, so drift is possible in three places:
//! constant values, function prototypes, and the `RpSimResult` layout.
//! Each gets its own check against a canonical list maintained here.

use ruinprob_ffi::*;

const HEADER: &str = include_str!("../include/ruinprob.h");

/// Every `RP_*` constant the library exports, with its value.
fn rust_constants() -> Vec<(&'static str, i32)> {
    vec![
        ("RP_OK", RP_OK),
        ("RP_ERR_INVALID_ARGUMENT", RP_ERR_INVALID_ARGUMENT),
        ("RP_ERR_NUMERICAL", RP_ERR_NUMERICAL),
        ("RP_ERR_UNSUPPORTED", RP_ERR_UNSUPPORTED),
        ("RP_ERR_INTERNAL", RP_ERR_INTERNAL),
        ("RP_CASE_EXP_EXP", RP_CASE_EXP_EXP),
        ("RP_CASE_ERLANG2_EXP", RP_CASE_ERLANG2_EXP),
        ("RP_CASE_EXP_ERLANG2", RP_CASE_EXP_ERLANG2),
        ("RP_PREMIUM_CONST", RP_PREMIUM_CONST),
        ("RP_PREMIUM_LINEAR", RP_PREMIUM_LINEAR),
        ("RP_PREMIUM_POLY", RP_PREMIUM_POLY),
        ("RP_PREMIUM_RATL", RP_PREMIUM_RATL),
        ("RP_REGIME_NONE", RP_REGIME_NONE),
        ("RP_REGIME_ONE_ROOT", RP_REGIME_ONE_ROOT),
        ("RP_REGIME_TWO_ROOT", RP_REGIME_TWO_ROOT),
    ]
}

/// Every function the library exports with C linkage.
const EXPORTED_FUNCTIONS: &[&str] = &[
    "rp_last_error",
    "rp_version",
    "rp_model_new",
    "rp_model_free",
    "rp_ruin_exact",
    "rp_ruin_curve_bvp",
    "rp_simulate",
    "rp_safe_load",
    "rp_roots",
];

/// `RpSimResult` fields in declaration order (must match the `#[repr(C)]`
/// struct in `src/lib.rs` exactly -- order is ABI).
const SIM_RESULT_FIELDS: &[&str] = &[
    "psi_hat",
    "half_width_95",
    "n_paths",
    "ruined_paths",
    "horizon",
    "truncated",
];

/// Parses `#define RP_NAME value` lines, ignoring the include guard and
/// trailing comments.
fn header_defines() -> Vec<(String, i32)> {
    let mut out = Vec::new();
    for line in HEADER.lines() {
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("#define") {
            continue;
        }
        let name = match tokens.next() {
            Some(n) if n.starts_with("RP_") => n,
            _ => continue,
        };
        let value = tokens
            .next()
            .and_then(|v| v.parse::<i32>().ok())
            .unwrap_or_else(|| panic!("#define {name} has no integer value"));
        out.push((name.to_string(), value));
    }
    out
}

#[test]
fn header_constants_match_rust_constants() {
    let rust = rust_constants();
    let header = header_defines();

    for (name, value) in &rust {
        let found = header.iter().find(|(n, _)| n == name);
        match found {
            Some((_, v)) => assert_eq!(
                v, value,
                "{name} is {v} in the header but {value} in Rust"
            ),
            None => panic!("{name} is exported from Rust but missing from the header"),
        }
    }
    for (name, _) in &header {
        assert!(
            rust.iter().any(|(n, _)| n == name),
            "{name} is defined in the header but not exported from Rust"
        );
    }
}

#[test]
fn header_declares_every_exported_function() {
    for name in EXPORTED_FUNCTIONS {
        let needle = format!("{name}(");
        assert!(
            HEADER.contains(&needle),
            "no prototype for {name} in the header"
        );
    }
}

#[test]
fn sim_result_fields_appear_in_abi_order() {
    let start = HEADER
        .find("typedef struct RpSimResult")
        .expect("RpSimResult typedef missing from the header");
    let body = &HEADER[start..];
    let end = body
        .find("} RpSimResult;")
        .expect("RpSimResult typedef is not closed");
    let body = &body[..end];

    let mut cursor = 0;
    for field in SIM_RESULT_FIELDS {
        let at = body[cursor..].find(field).unwrap_or_else(|| {
            panic!("field {field} missing or out of order in RpSimResult")
        });
        cursor += at + field.len();
    }
}

#[test]
fn header_keeps_the_model_handle_opaque() {
    assert!(
        HEADER.contains("typedef struct RpModel RpModel;"),
        "opaque RpModel typedef missing"
    );
    // The struct must never be given a body in the header.
    assert!(!HEADER.contains("struct RpModel {"));
}
