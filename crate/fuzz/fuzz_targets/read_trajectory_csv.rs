#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = dissipa_harness::io::read_trajectory_csv(data);
});
