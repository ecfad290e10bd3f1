#![no_main]

use ebsw::image::decode_ppm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_ppm(data) {
        let again = decode_ppm(&img.encode_ppm()).expect("encoded image must decode");
        assert_eq!(again, img);
    }
});
