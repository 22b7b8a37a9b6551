#![no_main]

use ladder_dmrm::cli_io::parse_range;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_range(text) {
        assert!(r.step > 0 && r.start >= 1 && r.start <= r.end);
        assert_eq!(parse_range(&r.to_string()).unwrap(), r);
        let _ = r.all_even();
    }
});
