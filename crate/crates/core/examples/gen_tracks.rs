//! Writes the bundled track files under `crates/core/tracks/`.

use std::path::Path;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tracks");
    for name in tinylidar::sim::tracks::BUNDLED {
        let t = tinylidar::sim::tracks::generate(name)
            .expect("known track")
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        t.save(&root.join(name)).expect("write track");
        println!(
            "{name}: {}x{} cells, centerline {:.2} m, {} waypoints",
            t.grid.width,
            t.grid.height,
            t.centerline.length(),
            t.centerline.len()
        );
    }
}
