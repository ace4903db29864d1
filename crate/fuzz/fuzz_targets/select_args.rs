//! Fuzzes the `select` argument decoding path end to end: sizes/prior strings
//! plus budget floats must produce a record or a diagnostic, never a panic.

#![no_main]

use cli::commands::cmd_select;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (String, Option<String>, u8, f64, f64, f64, f64)| {
    let (sizes, prior, mech, eta, tau, alpha, alpha_prime) = input;
    let mechanism = match mech % 5 {
        0 => "minse",
        1 => "ada_minse",
        2 => "exponential",
        3 => "laplace",
        _ => "unknown",
    };
    let mut sink = Vec::new();
    let _ = cmd_select(
        &sizes,
        prior.as_deref(),
        mechanism,
        Some(eta),
        Some(tau),
        Some(alpha),
        Some(alpha_prime),
        Some(0),
        &mut sink,
    );
});
