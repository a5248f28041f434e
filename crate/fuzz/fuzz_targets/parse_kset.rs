//! Fuzz the packing-instance parser: arbitrary bytes must produce
//! `Ok` or a structured error, never a panic or runaway validation.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = stochprobe::io::parse_kset_instance(data);
});
