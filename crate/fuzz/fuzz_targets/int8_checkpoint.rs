#![no_main]

use libfuzzer_sys::fuzz_target;
use tinylidar::quant::{decode_quantized, encode_quantized, forward_int8};

fuzz_target!(|data: &[u8]| {
    if let Ok(q) = decode_quantized(data) {
        assert_eq!(encode_quantized(&q), data);
        let _ = forward_int8(&q, &vec![0; q.input_length()]);
    }
});
