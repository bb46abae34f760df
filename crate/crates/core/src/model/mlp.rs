use std::str::FromStr;

use super::classifier::{argmax, check_batch, output_loss};
use super::{check_theta, fan_in_bound, finite_loss, DifferentiableModel, LossKind};
use super::{ParameterLayout, SegmentKind};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// ReLU uses 0 at the kink.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::config(format!("unknown activation {other:?}"))),
        }
    }
}

/// Fully connected network; hidden layers use `activation`, the output layer is linear.
///
/// Parameters are stored layer by layer as `layer{l}.weight` (row-major,
/// `dims[l+1] x dims[l]`) followed by `layer{l}.bias`.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    activation: Activation,
    loss_kind: LossKind,
    layout: ParameterLayout,
    // (weight offset, bias offset) per layer
    offsets: Vec<(usize, usize)>,
}

struct Trace {
    // pre-activations and activations per layer; acts[0] is the input
    pre: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(dims: &[usize], activation: Activation, loss_kind: LossKind) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidModel(
                "an MLP needs at least two non-zero layer widths".into(),
            ));
        }
        let mut parts = Vec::new();
        for l in 0..dims.len() - 1 {
            parts.push((
                format!("layer{l}.weight"),
                SegmentKind::DenseWeight,
                dims[l + 1] * dims[l],
            ));
            parts.push((format!("layer{l}.bias"), SegmentKind::Bias, dims[l + 1]));
        }
        let layout = ParameterLayout::sequential(parts)?;
        let offsets = layout
            .segments()
            .chunks(2)
            .map(|pair| (pair[0].offset, pair[1].offset))
            .collect();
        Ok(Mlp {
            dims: dims.to_vec(),
            activation,
            loss_kind,
            layout,
            offsets,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn forward(&self, theta: &[f64], x: &[f64], trace: &mut Trace) {
        trace.acts[0].copy_from_slice(x);
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (wo, bo) = self.offsets[l];
            let last = l + 1 == self.layers();
            let (before, after) = trace.acts.split_at_mut(l + 1);
            let input = &before[l];
            let output = &mut after[0];
            let pre = &mut trace.pre[l];
            for j in 0..n_out {
                let row = &theta[wo + j * n_in..wo + (j + 1) * n_in];
                let mut acc = 0.0;
                for (w, a) in row.iter().zip(input.iter()) {
                    acc += w * a;
                }
                let z = acc + theta[bo + j];
                pre[j] = z;
                output[j] = if last { z } else { self.activation.apply(z) };
            }
        }
    }

    fn new_trace(&self) -> Trace {
        Trace {
            pre: self.dims[1..].iter().map(|&n| vec![0.0; n]).collect(),
            acts: self.dims.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn classes(&self) -> usize {
        *self.dims.last().unwrap()
    }
}

impl DifferentiableModel for Mlp {
    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    fn loss_and_grad(&self, theta: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        check_theta(self, theta)?;
        check_batch(batch, self.dims[0], self.classes())?;
        let th = theta.as_slice();
        let mut grad = vec![0.0; self.layout.dim()];
        let mut trace = self.new_trace();
        let mut delta: Vec<Vec<f64>> = self.dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut total = 0.0;
        let layers = self.layers();
        for (x, &y) in batch.rows() {
            self.forward(th, x, &mut trace);
            total += output_loss(
                self.loss_kind,
                &trace.acts[layers],
                y,
                &mut delta[layers - 1],
            );
            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
                let (wo, bo) = self.offsets[l];
                let input = &trace.acts[l];
                for j in 0..n_out {
                    let d = delta[l][j];
                    let g = &mut grad[wo + j * n_in..wo + (j + 1) * n_in];
                    for (gi, a) in g.iter_mut().zip(input.iter()) {
                        *gi += d * a;
                    }
                    grad[bo + j] += d;
                }
                if l > 0 {
                    let (lower, upper) = delta.split_at_mut(l);
                    let down = &mut lower[l - 1];
                    let up = &upper[0];
                    for i in 0..n_in {
                        let mut acc = 0.0;
                        for (j, &d) in up.iter().enumerate() {
                            acc += th[wo + j * n_in + i] * d;
                        }
                        down[i] = acc
                            * self
                                .activation
                                .derivative(trace.pre[l - 1][i], trace.acts[l][i]);
                    }
                }
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        let loss = finite_loss(total * inv)?;
        Ok((
            loss,
            ParamVector::from_vec_unchecked(grad).finite("mlp grad")?,
        ))
    }

    fn loss(&self, theta: &ParamVector, batch: &Batch) -> Result<f64> {
        check_theta(self, theta)?;
        check_batch(batch, self.dims[0], self.classes())?;
        let mut trace = self.new_trace();
        let mut dz = vec![0.0; self.classes()];
        let mut total = 0.0;
        for (x, &y) in batch.rows() {
            self.forward(theta.as_slice(), x, &mut trace);
            total += output_loss(self.loss_kind, &trace.acts[self.layers()], y, &mut dz);
        }
        finite_loss(total / batch.len() as f64)
    }

    fn accuracy(&self, theta: &ParamVector, batch: &Batch) -> Result<Option<f64>> {
        check_theta(self, theta)?;
        check_batch(batch, self.dims[0], self.classes())?;
        let mut trace = self.new_trace();
        let mut hits = 0usize;
        for (x, &y) in batch.rows() {
            self.forward(theta.as_slice(), x, &mut trace);
            if argmax(&trace.acts[self.layers()]) == y {
                hits += 1;
            }
        }
        Ok(Some(hits as f64 / batch.len() as f64))
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector {
        let mut v = Vec::with_capacity(self.layout.dim());
        for l in 0..self.layers() {
            let bound = fan_in_bound(self.dims[l]);
            for _ in 0..self.dims[l] * self.dims[l + 1] {
                v.push(rng.uniform_in(-bound, bound));
            }
            v.extend(std::iter::repeat(0.0).take(self.dims[l + 1]));
        }
        ParamVector::from_vec_unchecked(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fd_gradient, LogReg};

    fn batch(seed: u64, n: usize, p: usize, classes: usize) -> Batch {
        let mut rng = Stream::new(seed, 42);
        let x = (0..n * p).map(|_| rng.normal()).collect();
        let y = (0..n).map(|_| rng.below(classes as u64) as usize).collect();
        Batch::new(x, y, p).unwrap()
    }

    #[test]
    fn single_layer_matches_logreg_exactly() {
        let mlp = Mlp::new(&[3, 4], Activation::Tanh, LossKind::CrossEntropy).unwrap();
        let lr = LogReg::new(3, 4, LossKind::CrossEntropy).unwrap();
        let theta = mlp.init_params(&mut Stream::new(5, 1));
        let b = batch(1, 7, 3, 4);
        assert_eq!(mlp.loss(&theta, &b).unwrap(), lr.loss(&theta, &b).unwrap());
        assert_eq!(mlp.grad(&theta, &b).unwrap(), lr.grad(&theta, &b).unwrap());
        assert_eq!(
            mlp.accuracy(&theta, &b).unwrap(),
            lr.accuracy(&theta, &b).unwrap()
        );
    }

    #[test]
    fn zero_network_gives_log_classes() {
        let mlp = Mlp::new(&[2, 5, 3], Activation::Tanh, LossKind::CrossEntropy).unwrap();
        let b = batch(2, 4, 2, 3);
        let loss = mlp.loss(&ParamVector::zeros(mlp.dim()), &b).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for (act, loss_kind) in [
            (Activation::Tanh, LossKind::CrossEntropy),
            (Activation::Relu, LossKind::CrossEntropy),
            (Activation::Tanh, LossKind::MeanSquared),
        ] {
            let mlp = Mlp::new(&[3, 6, 5, 3], act, loss_kind).unwrap();
            let theta = mlp.init_params(&mut Stream::new(0, 1));
            let b = batch(0, 9, 3, 3);
            let g = mlp.grad(&theta, &b).unwrap();
            let f = fd_gradient(&mlp, &theta, &b, 1e-5).unwrap();
            let err = g.sub(&f).unwrap().max_abs() / f.max_abs();
            assert!(err < 1e-5, "{act:?} {loss_kind:?}: {err}");
        }
    }

    #[test]
    fn rejects_degenerate_dims() {
        assert!(Mlp::new(&[3], Activation::Tanh, LossKind::CrossEntropy).is_err());
        assert!(Mlp::new(&[3, 0, 2], Activation::Tanh, LossKind::CrossEntropy).is_err());
    }
}
