#![no_main]

use ladder_dmrm::cli_io::{parse_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_csv(text) {
        // NaN fields parse but do not compare equal; compare the text instead.
        let again = write_csv(&rows);
        assert_eq!(write_csv(&parse_csv(&again).unwrap()), again);
    }
});
