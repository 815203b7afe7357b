//! End-to-end run: expert data on one track, training, evaluation on all bundled tracks.

use std::time::Instant;

use tinylidar::eval::{evaluate, EvalConfig, EvalReport};
use tinylidar::expert::collect;
use tinylidar::nn::{train, TrainConfig};
use tinylidar::policy::Model;
use tinylidar::sim::tracks;
use tinylidar::zoo::{Family, ModelSize};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let laps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let oval = tracks::bundled("oval").unwrap().unwrap();
    let uturn = tracks::bundled("uturn").unwrap().unwrap();
    let t = Instant::now();
    let data = collect(&oval, laps, seed).unwrap();
    println!(
        "collected {} samples in {:.1}s (complete {})",
        data.len(),
        t.elapsed().as_secs_f64(),
        data.complete
    );
    let mut reports = Vec::new();
    for fam in [Family::TinyLidarNet, Family::Mlp256] {
        let spec = fam.build(ModelSize::M);
        let t = Instant::now();
        let out = train(
            &spec,
            &data,
            &TrainConfig {
                epochs,
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let last = out.history.last().unwrap();
        println!(
            "{}: trained in {:.1}s, train {:.5} val {:?}",
            spec.name,
            t.elapsed().as_secs_f64(),
            last.train,
            last.val
        );
        let model = Model::Float(out.params);
        for track in [&oval, &uturn] {
            let r = evaluate(
                &model,
                track,
                &EvalConfig {
                    seed: 1,
                    ..Default::default()
                },
            )
            .unwrap();
            for tr in &r.trials {
                print!("{:?}/{:.0} ", tr.outcome, tr.progress);
            }
            println!();
            reports.push(r);
        }
    }
    print!("{}", EvalReport::table(&reports));
}
