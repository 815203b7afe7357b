use tinylidar::expert::Expert;
use tinylidar::sim::{run_blind, start_state, tracks, Outcome};

fn main() {
    for name in tracks::BUNDLED {
        let t = tracks::bundled(name).unwrap().unwrap();
        let mut e = Expert::new(&t).unwrap();
        let mut times = Vec::new();
        let mut fails = 0;
        for i in 0..t.centerline.len() {
            let log = run_blind(&t, &mut e, start_state(&t, i), 120.0).unwrap();
            if log.outcome == Outcome::LapComplete {
                times.push(log.lap_time.unwrap());
            } else {
                fails += 1;
                if fails < 5 {
                    println!(
                        "{name} start {i}: {:?} progress {:.1}",
                        log.outcome, log.progress
                    );
                }
            }
        }
        let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
        println!(
            "{name}: {} ok, {fails} failed, mean lap {mean:.2} s",
            times.len()
        );
    }
}
