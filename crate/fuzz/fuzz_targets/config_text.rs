#![no_main]

use ladder_dmrm::cli_io::config_from_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = config_from_text(text) {
        let _ = cfg.validate();
        for &m in &cfg.legs {
            if m > 0 {
                let _ = cfg.max_subset_for(m);
            }
        }
    }
});
