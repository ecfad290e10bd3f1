#![no_main]

use ebsw::measures::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_csv(text) {
        let again = parse_csv(&m.to_csv()).expect("printed measure must re-parse");
        assert_eq!(again.dim(), m.dim());
        for (a, b) in m.points().iter().zip(again.points()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
