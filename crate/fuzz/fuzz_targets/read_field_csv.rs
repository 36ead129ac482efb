#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = dissipa_harness::io::read_field_csv(data) {
        let n = series.n_cells();
        assert!(series.snapshots.iter().all(|s| s.values.len() == n && s.x.len() == n));
    }
});
