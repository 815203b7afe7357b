#![no_main]

use libfuzzer_sys::fuzz_target;
use tinylidar::dataset::parse_dataset_csv;

fuzz_target!(|data: &[u8]| {
    let _ = parse_dataset_csv(data);
});
