use std::time::Instant;
use tinylidar::nn::{init_params, Tape};
use tinylidar::zoo::{Family, ModelSize};

fn main() {
    for fam in [Family::TinyLidarNet, Family::Mlp256] {
        for size in ModelSize::ALL {
            let spec = fam.build(size);
            let p = init_params(&spec, 0).unwrap();
            let x = vec![0.3f32; spec.input_length];
            let mut tape = Tape::new();
            let mut g = p.zero_grads();
            let n = 500;
            let t = Instant::now();
            for _ in 0..n {
                tape.forward(&p, &x).unwrap();
                tape.backward_into(&p, &[0.1, 0.1], &mut g).unwrap();
            }
            let fb = t.elapsed().as_secs_f64() / n as f64 * 1e6;
            let t = Instant::now();
            for _ in 0..n {
                tape.forward(&p, &x).unwrap();
            }
            let f = t.elapsed().as_secs_f64() / n as f64 * 1e6;
            println!("{}: fwd+bwd {fb:.1} us  fwd {f:.1} us", spec.name);
        }
    }
}
