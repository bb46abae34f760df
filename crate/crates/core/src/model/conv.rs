use super::classifier::{argmax, check_batch, output_loss};
use super::{check_theta, fan_in_bound, finite_loss, DifferentiableModel, LossKind};
use super::{ParameterLayout, SegmentKind};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Stream;

/// One-channel 1-D convolution (valid padding, stride 1) with tanh, followed
/// by a dense output layer.
///
/// Its layout starts with a `conv.filters` filter group so that the
/// filter-norm branch of the ASAM operator has something to act on.
#[derive(Debug, Clone)]
pub struct Conv1d {
    input_len: usize,
    filters: usize,
    width: usize,
    classes: usize,
    loss_kind: LossKind,
    layout: ParameterLayout,
}

impl Conv1d {
    pub fn new(
        input_len: usize,
        filters: usize,
        width: usize,
        classes: usize,
        loss_kind: LossKind,
    ) -> Result<Self> {
        if filters == 0 || width == 0 || classes == 0 || width > input_len {
            return Err(Error::InvalidModel(format!(
                "conv1d needs filters, width, classes >= 1 and width <= input length \
                 (got filters={filters}, width={width}, classes={classes}, input={input_len})"
            )));
        }
        let out_len = input_len - width + 1;
        let layout = ParameterLayout::sequential(vec![
            (
                "conv.filters".into(),
                SegmentKind::ConvFilterGroup {
                    filter_sizes: vec![width; filters],
                },
                filters * width,
            ),
            ("conv.bias".into(), SegmentKind::Bias, filters),
            (
                "fc.weight".into(),
                SegmentKind::DenseWeight,
                classes * filters * out_len,
            ),
            ("fc.bias".into(), SegmentKind::Bias, classes),
        ])?;
        Ok(Conv1d {
            input_len,
            filters,
            width,
            classes,
            loss_kind,
            layout,
        })
    }

    fn out_len(&self) -> usize {
        self.input_len - self.width + 1
    }

    fn offsets(&self) -> [usize; 4] {
        let s = self.layout.segments();
        [s[0].offset, s[1].offset, s[2].offset, s[3].offset]
    }

    fn forward(&self, th: &[f64], x: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        let [fo, cbo, wo, bo] = self.offsets();
        let out_len = self.out_len();
        for f in 0..self.filters {
            let filter = &th[fo + f * self.width..fo + (f + 1) * self.width];
            for i in 0..out_len {
                let mut acc = 0.0;
                for (s, w) in filter.iter().enumerate() {
                    acc += w * x[i + s];
                }
                hidden[f * out_len + i] = (acc + th[cbo + f]).tanh();
            }
        }
        let h_len = hidden.len();
        for c in 0..self.classes {
            let row = &th[wo + c * h_len..wo + (c + 1) * h_len];
            let mut acc = 0.0;
            for (w, h) in row.iter().zip(hidden.iter()) {
                acc += w * h;
            }
            logits[c] = acc + th[bo + c];
        }
    }
}

impl DifferentiableModel for Conv1d {
    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    fn loss_and_grad(&self, theta: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        check_theta(self, theta)?;
        check_batch(batch, self.input_len, self.classes)?;
        let th = theta.as_slice();
        let [fo, cbo, wo, bo] = self.offsets();
        let out_len = self.out_len();
        let h_len = self.filters * out_len;
        let mut grad = vec![0.0; self.layout.dim()];
        let mut hidden = vec![0.0; h_len];
        let mut logits = vec![0.0; self.classes];
        let mut dz = vec![0.0; self.classes];
        let mut dh = vec![0.0; h_len];
        let mut total = 0.0;
        for (x, &y) in batch.rows() {
            self.forward(th, x, &mut hidden, &mut logits);
            total += output_loss(self.loss_kind, &logits, y, &mut dz);
            dh.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..self.classes {
                for k in 0..h_len {
                    grad[wo + c * h_len + k] += dz[c] * hidden[k];
                    dh[k] += th[wo + c * h_len + k] * dz[c];
                }
                grad[bo + c] += dz[c];
            }
            for f in 0..self.filters {
                for i in 0..out_len {
                    let h = hidden[f * out_len + i];
                    let d = dh[f * out_len + i] * (1.0 - h * h);
                    for s in 0..self.width {
                        grad[fo + f * self.width + s] += d * x[i + s];
                    }
                    grad[cbo + f] += d;
                }
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        let loss = finite_loss(total * inv)?;
        Ok((
            loss,
            ParamVector::from_vec_unchecked(grad).finite("conv1d grad")?,
        ))
    }

    fn accuracy(&self, theta: &ParamVector, batch: &Batch) -> Result<Option<f64>> {
        check_theta(self, theta)?;
        check_batch(batch, self.input_len, self.classes)?;
        let mut hidden = vec![0.0; self.filters * self.out_len()];
        let mut logits = vec![0.0; self.classes];
        let mut hits = 0usize;
        for (x, &y) in batch.rows() {
            self.forward(theta.as_slice(), x, &mut hidden, &mut logits);
            if argmax(&logits) == y {
                hits += 1;
            }
        }
        Ok(Some(hits as f64 / batch.len() as f64))
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector {
        let conv_bound = fan_in_bound(self.width);
        let fc_bound = fan_in_bound(self.filters * self.out_len());
        let mut v = Vec::with_capacity(self.layout.dim());
        v.extend((0..self.filters * self.width).map(|_| rng.uniform_in(-conv_bound, conv_bound)));
        v.extend(std::iter::repeat(0.0).take(self.filters));
        v.extend(
            (0..self.classes * self.filters * self.out_len())
                .map(|_| rng.uniform_in(-fc_bound, fc_bound)),
        );
        v.extend(std::iter::repeat(0.0).take(self.classes));
        ParamVector::from_vec_unchecked(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_gradient;

    #[test]
    fn backprop_matches_finite_differences() {
        let m = Conv1d::new(8, 3, 3, 2, LossKind::CrossEntropy).unwrap();
        assert_eq!(m.dim(), 9 + 3 + 2 * 3 * 6 + 2);
        let mut rng = Stream::new(3, 3);
        let theta = m.init_params(&mut rng);
        let x: Vec<f64> = (0..5 * 8).map(|_| rng.normal()).collect();
        let b = Batch::new(x, vec![0, 1, 1, 0, 1], 8).unwrap();
        let g = m.grad(&theta, &b).unwrap();
        let f = fd_gradient(&m, &theta, &b, 1e-5).unwrap();
        let err = g.sub(&f).unwrap().max_abs() / f.max_abs();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn layout_declares_filter_group() {
        let m = Conv1d::new(5, 2, 4, 3, LossKind::CrossEntropy).unwrap();
        match &m.layout().segments()[0].kind {
            SegmentKind::ConvFilterGroup { filter_sizes } => assert_eq!(filter_sizes, &[4, 4]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Conv1d::new(3, 1, 4, 2, LossKind::CrossEntropy).is_err());
    }
}
