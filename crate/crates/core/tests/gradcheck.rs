//! Analytic gradients against f64 central differences.

mod support;

use support::{gradcheck_nets, gradcheck_worst, random_params, GRAD_TOL};
use tinylidar::nn::{Tape, Tensor};

#[test]
fn analytic_gradients_match_central_differences() {
    for spec in gradcheck_nets() {
        for trial in 0..3u64 {
            let worst = gradcheck_worst(&spec, trial);
            assert!(
                worst < GRAD_TOL,
                "{} trial {trial}: worst relative error {worst:e}",
                spec.name
            );
        }
    }
}

#[test]
fn functional_backward_matches_tape() {
    let spec = &gradcheck_nets()[3];
    let p = random_params(spec, 9);
    let x: Vec<f64> = (0..spec.input_length)
        .map(|i| (i as f64 * 0.37).sin())
        .collect();
    let dy = vec![0.7, -1.3];
    let mut tape = Tape::new();
    tape.forward(&p, &x).unwrap();
    let a = tape.backward(&p, &dy).unwrap();
    let b = tinylidar::nn::backward(&p, &Tensor::vector(x), &Tensor::vector(dy)).unwrap();
    assert_eq!(a, b);
}
