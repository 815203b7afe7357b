use super::network::{Gradients, NetParams};
use super::tensor::{Scalar, Tensor};
use super::NnError;

/// Adam optimizer state.
#[derive(Clone, Debug)]
pub struct AdamState<T = f32> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &NetParams<T>, lr: T) -> Self {
        let zeros = || {
            params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect()
        };
        AdamState {
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut NetParams<T>, grads: &Gradients<T>) -> Result<(), NnError> {
        grads.check_congruent(params)?;
        let congruent = self.m.len() == params.tensors().len()
            && self
                .m
                .iter()
                .zip(params.tensors())
                .all(|(m, p)| m.shape() == p.shape());
        if !congruent {
            return Err(NnError::Shape(
                "optimizer state does not match parameters".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params
            .tensors_mut()
            .iter_mut()
            .zip(&grads.tensors)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((w, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w = *w - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step<T: Scalar>(
    state: &mut AdamState<T>,
    params: &mut NetParams<T>,
    grads: &Gradients<T>,
) -> Result<(), NnError> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, NetSpec};

    fn scalar_net(w: f32) -> NetParams<f32> {
        let spec = NetSpec::new(
            "scalar",
            1,
            vec![LayerSpec::Dense {
                in_features: 1,
                out_features: 1,
            }],
        );
        NetParams::from_tensors(
            spec,
            vec![
                Tensor::from_vec(&[1, 1], vec![w]).unwrap(),
                Tensor::vector(vec![0.0]),
            ],
        )
        .unwrap()
    }

    fn grads_of(g: f32) -> Gradients<f32> {
        Gradients {
            tensors: vec![
                Tensor::from_vec(&[1, 1], vec![g]).unwrap(),
                Tensor::vector(vec![0.0]),
            ],
        }
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut p = scalar_net(0.7);
        let mut st = AdamState::new(&p, 5e-5);
        st.step(&mut p, &grads_of(0.0)).unwrap();
        assert_eq!(p.tensors()[0].data()[0], 0.7);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_net(0.0);
        let mut st = AdamState::new(&p, 5e-5);
        st.step(&mut p, &grads_of(1.0)).unwrap();
        // m_hat = 1, v_hat = 1 -> lr / (1 + eps)
        assert!((p.tensors()[0].data()[0] + 5e-5).abs() < 1e-9);
    }

    #[test]
    fn repeated_steps_move_monotonically_against_gradient() {
        let mut p = scalar_net(0.0);
        let mut st = AdamState::new(&p, 5e-5);
        st.step(&mut p, &grads_of(1.0)).unwrap();
        let w1 = p.tensors()[0].data()[0];
        st.step(&mut p, &grads_of(1.0)).unwrap();
        let w2 = p.tensors()[0].data()[0];
        assert!(w1 < 0.0 && w2 < w1);
    }

    #[test]
    fn mismatched_gradients_rejected() {
        let mut p = scalar_net(0.0);
        let mut st = AdamState::new(&p, 5e-5);
        let bad = Gradients {
            tensors: vec![Tensor::vector(vec![1.0])],
        };
        assert!(st.step(&mut p, &bad).is_err());
    }
}
