#![no_main]

use libfuzzer_sys::fuzz_target;
use tinylidar::sim::parse_pgm;

fuzz_target!(|data: &[u8]| {
    let _ = parse_pgm(data);
});
