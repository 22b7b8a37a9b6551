#![no_main]

use ladder_dmrm::lattice::LadderSpec;
use ladder_dmrm::oracle::parse_state_dump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&width, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let legs = 2;
    let rungs = (usize::from(width) % 40) / legs + 1;
    let sites = LadderSpec::open(legs, rungs).unwrap().all_sites();
    if let Ok(psi) = parse_state_dump(text, sites.clone()) {
        let back = parse_state_dump(&psi.dump(), sites).unwrap();
        assert_eq!(back.sorted_entries(), psi.sorted_entries());
        let _ = psi.norm_sq();
    }
});
