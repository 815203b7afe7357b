#![no_main]

use libfuzzer_sys::fuzz_target;
use tinylidar::sim::parse_centerline_csv;

fuzz_target!(|data: &[u8]| {
    let _ = parse_centerline_csv(data);
});
