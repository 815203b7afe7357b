use std::time::Instant;
use tinylidar::sim::{raycast, tracks};

fn main() {
    for name in tracks::BUNDLED {
        let t = tracks::bundled(name).unwrap().unwrap();
        let s = tinylidar::sim::start_state(&t, 5);
        let n = 200;
        let now = Instant::now();
        for _ in 0..n {
            std::hint::black_box(raycast(&t.grid, s.sensor_pose()).unwrap());
        }
        let now2 = Instant::now();
        for _ in 0..n {
            std::hint::black_box(t.centerline.project([s.x, s.y]));
        }
        println!(
            "{name}: raycast {:.1} us, project {:.1} us",
            now.elapsed().as_secs_f64() / n as f64 * 1e6
                - now2.elapsed().as_secs_f64() / n as f64 * 1e6,
            now2.elapsed().as_secs_f64() / n as f64 * 1e6
        );
    }
}
