//! Fuzzes the CSV dataset decoder: arbitrary bytes must yield a dataset or a
//! structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = experiments::parse_csv_dataset(data);
});
