use std::sync::Arc;

use super::spec::{ActShape, LayerSpec, NetSpec};
use super::tensor::{axpy, dot, Scalar, Tensor};
use super::NnError;

/// Learned weights for a [`NetSpec`]: one weight and one bias tensor per
/// learnable layer, interleaved in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams<T = f32> {
    spec: Arc<NetSpec>,
    tensors: Vec<Tensor<T>>,
}

/// Gradient tensors, congruent with [`NetParams::tensors`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T = f32> {
    pub tensors: Vec<Tensor<T>>,
}

fn param_shapes(spec: &NetSpec) -> Vec<Vec<usize>> {
    spec.learnable()
        .flat_map(|(_, l)| {
            [
                l.weight_shape().expect("learnable"),
                vec![l.bias_len().expect("learnable")],
            ]
        })
        .collect()
}

impl<T: Scalar> NetParams<T> {
    /// All-zero parameters.
    pub fn zeros(spec: NetSpec) -> Result<Self, NnError> {
        spec.shapes()?;
        let tensors = param_shapes(&spec)
            .iter()
            .map(|s| Tensor::zeros(s))
            .collect();
        Ok(NetParams {
            spec: Arc::new(spec),
            tensors,
        })
    }

    /// Wraps existing tensors after checking they match the spec's shapes.
    pub fn from_tensors(spec: NetSpec, tensors: Vec<Tensor<T>>) -> Result<Self, NnError> {
        spec.shapes()?;
        let expected = param_shapes(&spec);
        if expected.len() != tensors.len() {
            return Err(NnError::Shape(format!(
                "expected {} parameter tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (i, (e, t)) in expected.iter().zip(&tensors).enumerate() {
            if e.as_slice() != t.shape() {
                return Err(NnError::Shape(format!(
                    "parameter tensor {i}: expected shape {e:?}, got {:?}",
                    t.shape()
                )));
            }
        }
        Ok(NetParams {
            spec: Arc::new(spec),
            tensors,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    /// Weight and bias of the `n`-th learnable layer.
    pub fn layer(&self, n: usize) -> (&Tensor<T>, &Tensor<T>) {
        (&self.tensors[2 * n], &self.tensors[2 * n + 1])
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> NetParams<U> {
        NetParams {
            spec: self.spec.clone(),
            tensors: self.tensors.iter().map(|t| t.cast()).collect(),
        }
    }

    pub fn zero_grads(&self) -> Gradients<T> {
        Gradients {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect(),
        }
    }
}

impl<T: Scalar> Gradients<T> {
    pub fn fill_zero(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::fill_zero);
    }

    pub fn scale(&mut self, k: T) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = *v * k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data().iter().all(|v| *v == T::zero()))
    }

    pub(crate) fn check_congruent(&self, params: &NetParams<T>) -> Result<(), NnError> {
        let ok = self.tensors.len() == params.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&params.tensors)
                .all(|(g, p)| g.shape() == p.shape());
        if ok {
            Ok(())
        } else {
            Err(NnError::Shape(
                "gradients are not congruent with parameters".into(),
            ))
        }
    }
}

fn check_input<T: Scalar>(spec: &NetSpec, input: &[T]) -> Result<(), NnError> {
    if input.len() != spec.input_length {
        return Err(NnError::Shape(format!(
            "input: expected length {}, got {}",
            spec.input_length,
            input.len()
        )));
    }
    Ok(())
}

/// Lays out convolution windows as rows: `col[t][ci * k + j] = x[ci][t * stride + j]`.
fn im2col<T: Scalar>(
    x: &[T],
    in_len: usize,
    cin: usize,
    k: usize,
    stride: usize,
    out_len: usize,
    col: &mut Vec<T>,
) {
    let width = cin * k;
    col.clear();
    col.resize(out_len * width, T::zero());
    for t in 0..out_len {
        let row = &mut col[t * width..(t + 1) * width];
        for ci in 0..cin {
            let src = &x[ci * in_len + t * stride..ci * in_len + t * stride + k];
            row[ci * k..(ci + 1) * k].copy_from_slice(src);
        }
    }
}

fn conv_forward<T: Scalar>(
    w: &[T],
    b: &[T],
    col: &[T],
    cout: usize,
    out_len: usize,
    out: &mut Vec<T>,
) {
    let width = col.len() / out_len.max(1);
    out.clear();
    out.resize(cout * out_len, T::zero());
    for (co, (wrow, bias)) in w.chunks_exact(width).zip(b).enumerate() {
        let dst = &mut out[co * out_len..(co + 1) * out_len];
        for (t, d) in dst.iter_mut().enumerate() {
            *d = *bias + dot(wrow, &col[t * width..(t + 1) * width]);
        }
    }
}

fn dense_forward<T: Scalar>(w: &[T], b: &[T], x: &[T], out: &mut Vec<T>) {
    out.clear();
    out.extend(
        w.chunks_exact(x.len())
            .zip(b)
            .map(|(row, bias)| *bias + dot(row, x)),
    );
}

/// Runs the network on one input.
///
/// Pure function of `(params, input)`; the returned tensor has the shape of
/// the last layer's output.
pub fn forward<T: Scalar>(params: &NetParams<T>, input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let mut tape = Tape::new();
    tape.forward(params, input.data())?;
    let out = tape.output().to_vec();
    Ok(Tensor::vector(out))
}

/// Forward pass that keeps the activations needed by [`Tape::backward`].
///
/// Buffers are reused across calls, so one tape per worker is enough for a
/// whole training run.
#[derive(Debug, Default)]
pub struct Tape<T = f32> {
    /// `acts[i]` is the input of layer `i`; the final entry is the network output.
    acts: Vec<Vec<T>>,
    /// im2col buffers for convolution layers.
    cols: Vec<Vec<T>>,
    shapes: Vec<ActShape>,
    ready: bool,
    grad_a: Vec<T>,
    grad_b: Vec<T>,
    dcol: Vec<T>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            acts: Vec::new(),
            cols: Vec::new(),
            shapes: Vec::new(),
            ready: false,
            grad_a: Vec::new(),
            grad_b: Vec::new(),
            dcol: Vec::new(),
        }
    }

    pub fn forward(&mut self, params: &NetParams<T>, input: &[T]) -> Result<&[T], NnError> {
        let spec = params.spec();
        check_input(spec, input)?;
        self.ready = false;
        self.shapes = spec.shapes()?;
        let n = spec.layers.len();
        self.acts.resize_with(n + 1, Vec::new);
        self.cols.resize_with(n, Vec::new);
        self.acts[0].clear();
        self.acts[0].extend_from_slice(input);

        let mut learnable = 0;
        for (i, layer) in spec.layers.iter().enumerate() {
            let (head, tail) = self.acts.split_at_mut(i + 1);
            let x = &head[i];
            let out = &mut tail[0];
            match *layer {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                } => {
                    let ActShape::Seq { len: in_len, .. } = self.shapes[i] else {
                        unreachable!("validated spec")
                    };
                    let ActShape::Seq { len: out_len, .. } = self.shapes[i + 1] else {
                        unreachable!("validated spec")
                    };
                    let (w, b) = params.layer(learnable);
                    learnable += 1;
                    im2col(
                        x,
                        in_len,
                        in_channels,
                        kernel_size,
                        stride,
                        out_len,
                        &mut self.cols[i],
                    );
                    conv_forward(
                        w.data(),
                        b.data(),
                        &self.cols[i],
                        out_channels,
                        out_len,
                        out,
                    );
                }
                LayerSpec::Dense { .. } => {
                    let (w, b) = params.layer(learnable);
                    learnable += 1;
                    dense_forward(w.data(), b.data(), x, out);
                }
                LayerSpec::Relu => {
                    out.clear();
                    out.extend(x.iter().map(|v| v.max(T::zero())));
                }
                LayerSpec::Flatten => {
                    out.clear();
                    out.extend_from_slice(x);
                }
            }
        }
        self.ready = true;
        Ok(&self.acts[n])
    }

    /// Activation `i` of the most recent forward pass: the input of layer `i`,
    /// or the network output for `i == layers.len()`.
    pub fn activation(&self, i: usize) -> &[T] {
        &self.acts[i]
    }

    /// Output of the most recent forward pass.
    pub fn output(&self) -> &[T] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Accumulates `dLoss/dParam` into `grads` given `dLoss/dOutput`.
    ///
    /// Consumes the cached forward state: a second call without an intervening
    /// forward pass is rejected.
    pub fn backward_into(
        &mut self,
        params: &NetParams<T>,
        loss_grad: &[T],
        grads: &mut Gradients<T>,
    ) -> Result<(), NnError> {
        if !self.ready {
            return Err(NnError::NoForwardState);
        }
        let spec = params.spec();
        if self.acts.len() != spec.layers.len() + 1 {
            return Err(NnError::NoForwardState);
        }
        grads.check_congruent(params)?;
        if loss_grad.len() != self.output().len() {
            return Err(NnError::Shape(format!(
                "loss gradient: expected length {}, got {}",
                self.output().len(),
                loss_grad.len()
            )));
        }
        self.ready = false;

        let mut learnable = spec.learnable().count();
        // index of the first learnable layer; no input gradient is needed below it
        let first = spec.learnable().next().map(|(i, _)| i).unwrap_or(0);
        self.grad_a.clear();
        self.grad_a.extend_from_slice(loss_grad);

        for i in (0..spec.layers.len()).rev() {
            let x = &self.acts[i];
            let need_dx = i > first;
            match spec.layers[i] {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel_size,
                    stride,
                } => {
                    learnable -= 1;
                    let ActShape::Seq { len: in_len, .. } = self.shapes[i] else {
                        unreachable!()
                    };
                    let ActShape::Seq { len: out_len, .. } = self.shapes[i + 1] else {
                        unreachable!()
                    };
                    let width = in_channels * kernel_size;
                    let col = &self.cols[i];
                    let w = params.tensors[2 * learnable].data();
                    let (gw, gb) = grads.tensors.split_at_mut(2 * learnable + 1);
                    let gw = gw[2 * learnable].data_mut();
                    let gb = gb[0].data_mut();
                    let g = &self.grad_a;
                    for co in 0..out_channels {
                        let grow = &g[co * out_len..(co + 1) * out_len];
                        let dw = &mut gw[co * width..(co + 1) * width];
                        let mut db = T::zero();
                        for (t, &gv) in grow.iter().enumerate() {
                            db = db + gv;
                            axpy(gv, &col[t * width..(t + 1) * width], dw);
                        }
                        gb[co] = gb[co] + db;
                    }
                    if need_dx {
                        self.dcol.clear();
                        self.dcol.resize(out_len * width, T::zero());
                        for t in 0..out_len {
                            let drow = &mut self.dcol[t * width..(t + 1) * width];
                            for co in 0..out_channels {
                                let gv = g[co * out_len + t];
                                axpy(gv, &w[co * width..(co + 1) * width], drow);
                            }
                        }
                        self.grad_b.clear();
                        self.grad_b.resize(in_channels * in_len, T::zero());
                        for t in 0..out_len {
                            let drow = &self.dcol[t * width..(t + 1) * width];
                            for ci in 0..in_channels {
                                let dst = &mut self.grad_b[ci * in_len + t * stride
                                    ..ci * in_len + t * stride + kernel_size];
                                for (d, s) in dst
                                    .iter_mut()
                                    .zip(&drow[ci * kernel_size..(ci + 1) * kernel_size])
                                {
                                    *d = *d + *s;
                                }
                            }
                        }
                        std::mem::swap(&mut self.grad_a, &mut self.grad_b);
                    }
                }
                LayerSpec::Dense {
                    in_features,
                    out_features,
                } => {
                    learnable -= 1;
                    let w = params.tensors[2 * learnable].data();
                    let (gw, gb) = grads.tensors.split_at_mut(2 * learnable + 1);
                    let gw = gw[2 * learnable].data_mut();
                    let gb = gb[0].data_mut();
                    let g = &self.grad_a;
                    for o in 0..out_features {
                        let gv = g[o];
                        gb[o] = gb[o] + gv;
                        if gv != T::zero() {
                            axpy(gv, x, &mut gw[o * in_features..(o + 1) * in_features]);
                        }
                    }
                    if need_dx {
                        self.grad_b.clear();
                        self.grad_b.resize(in_features, T::zero());
                        for o in 0..out_features {
                            let gv = g[o];
                            if gv != T::zero() {
                                axpy(
                                    gv,
                                    &w[o * in_features..(o + 1) * in_features],
                                    &mut self.grad_b,
                                );
                            }
                        }
                        std::mem::swap(&mut self.grad_a, &mut self.grad_b);
                    }
                }
                LayerSpec::Relu => {
                    for (g, v) in self.grad_a.iter_mut().zip(x) {
                        if *v <= T::zero() {
                            *g = T::zero();
                        }
                    }
                }
                LayerSpec::Flatten => {}
            }
        }
        Ok(())
    }

    /// Gradients for a single sample.
    pub fn backward(
        &mut self,
        params: &NetParams<T>,
        loss_grad: &[T],
    ) -> Result<Gradients<T>, NnError> {
        let mut grads = params.zero_grads();
        self.backward_into(params, loss_grad, &mut grads)?;
        Ok(grads)
    }
}

/// Functional form: runs a fresh forward pass and returns the gradients for `loss_grad`.
pub fn backward<T: Scalar>(
    params: &NetParams<T>,
    input: &Tensor<T>,
    loss_grad: &Tensor<T>,
) -> Result<Gradients<T>, NnError> {
    let mut tape = Tape::new();
    tape.forward(params, input.data())?;
    tape.backward(params, loss_grad.data())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(i: usize, o: usize) -> LayerSpec {
        LayerSpec::Dense {
            in_features: i,
            out_features: o,
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = crate::zoo::build_tinylidarnet(crate::zoo::ModelSize::S);
        let params = NetParams::<f32>::zeros(spec).unwrap();
        let input = Tensor::vector(vec![0.37; 271]);
        let out = forward(&params, &input).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_dense_passes_input_through() {
        let spec = NetSpec::new("id", 2, vec![dense(2, 2)]);
        let w = Tensor::from_vec(&[2, 2], vec![1.0f32, 0.0, 0.0, 1.0]).unwrap();
        let b = Tensor::vector(vec![0.0f32, 0.0]);
        let params = NetParams::from_tensors(spec, vec![w, b]).unwrap();
        let out = forward(&params, &Tensor::vector(vec![0.3, -0.7])).unwrap();
        assert_eq!(out.data(), &[0.3, -0.7]);
    }

    #[test]
    fn tinylidarnet_l_outputs_two_values() {
        let spec = crate::zoo::build_tinylidarnet(crate::zoo::ModelSize::L);
        let params = crate::nn::init::init_params(&spec, 1).unwrap();
        let out = forward(&params, &Tensor::vector(vec![0.5; 1081])).unwrap();
        assert_eq!(out.shape(), &[2]);
        assert!(out.all_finite());
    }

    #[test]
    fn wrong_input_length_names_expected_and_actual() {
        let spec = crate::zoo::build_tinylidarnet(crate::zoo::ModelSize::M);
        let params = NetParams::<f32>::zeros(spec).unwrap();
        let err = forward(&params, &Tensor::vector(vec![0.0; 1081]))
            .unwrap_err()
            .to_string();
        assert!(err.contains("541") && err.contains("1081"), "{err}");
    }

    #[test]
    fn backward_without_forward_is_rejected() {
        let spec = NetSpec::new("d", 3, vec![dense(3, 2)]);
        let params = NetParams::<f64>::zeros(spec).unwrap();
        let mut tape = Tape::new();
        assert!(matches!(
            tape.backward(&params, &[1.0, 1.0]),
            Err(NnError::NoForwardState)
        ));
        tape.forward(&params, &[1.0, 2.0, 3.0]).unwrap();
        assert!(tape.backward(&params, &[1.0, 1.0]).is_ok());
        // state is consumed
        assert!(matches!(
            tape.backward(&params, &[1.0, 1.0]),
            Err(NnError::NoForwardState)
        ));
    }

    #[test]
    fn zero_loss_grad_gives_zero_gradients() {
        let spec = crate::zoo::build_tinylidarnet(crate::zoo::ModelSize::S);
        let params = crate::nn::init::init_params(&spec, 3).unwrap();
        let grads = backward(
            &params,
            &Tensor::vector(vec![0.4; 271]),
            &Tensor::vector(vec![0.0, 0.0]),
        )
        .unwrap();
        assert!(grads.is_zero());
    }

    #[test]
    fn from_tensors_rejects_wrong_shapes() {
        let spec = NetSpec::new("d", 3, vec![dense(3, 2)]);
        let w = Tensor::<f32>::zeros(&[3, 2]);
        let b = Tensor::<f32>::zeros(&[2]);
        assert!(NetParams::from_tensors(spec, vec![w, b]).is_err());
    }
}
