#![no_main]

use ebsw::EnergyFunction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(f) = s.parse::<EnergyFunction>() {
        let printed = f.to_string();
        let back: EnergyFunction = printed.parse().expect("printed spec must parse");
        assert_eq!(back, f, "{s:?} -> {printed:?}");
    }
});
