#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scenario) = dissipa_harness::parse_config(text) {
        // anything accepted must survive its own serialisation
        let again = dissipa_harness::parse_config(&scenario.to_config_string()).expect("re-parse");
        assert_eq!(again, scenario);
    }
});
