#![no_main]

use ebsw::{GradientMode, Method, SeedPolicy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = s.parse::<Method>() {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
    if let Ok(g) = s.parse::<GradientMode>() {
        assert_eq!(g.to_string().parse::<GradientMode>().unwrap(), g);
    }
    if let Ok(p) = s.parse::<SeedPolicy>() {
        assert_eq!(p.to_string().parse::<SeedPolicy>().unwrap(), p);
    }
});
