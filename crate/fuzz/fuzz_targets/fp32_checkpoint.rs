#![no_main]

use libfuzzer_sys::fuzz_target;
use tinylidar::nn::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = decode_checkpoint(data) {
        assert_eq!(encode_checkpoint(&p), data);
    }
});
