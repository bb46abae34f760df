use super::{check_theta, fan_in_bound, finite_loss, DifferentiableModel, LossKind};
use super::{ParameterLayout, SegmentKind};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Stream;

/// Loss of one example given its output logits, writing d(loss)/d(logits) into `dz`.
pub(crate) fn output_loss(kind: LossKind, logits: &[f64], label: usize, dz: &mut [f64]) -> f64 {
    match kind {
        LossKind::CrossEntropy => {
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (d, &z) in dz.iter_mut().zip(logits) {
                *d = (z - m).exp();
                sum += *d;
            }
            for d in dz.iter_mut() {
                *d /= sum;
            }
            dz[label] -= 1.0;
            m + sum.ln() - logits[label]
        }
        LossKind::MeanSquared => {
            let mut loss = 0.0;
            for (c, (d, &z)) in dz.iter_mut().zip(logits).enumerate() {
                let target = if c == label { 1.0 } else { 0.0 };
                *d = z - target;
                loss += 0.5 * *d * *d;
            }
            loss
        }
    }
}

/// Index of the largest logit; ties resolve to the lowest index.
pub(crate) fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate().skip(1) {
        if z > logits[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_batch(batch: &Batch, input_dim: usize, classes: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidModel("empty batch".into()));
    }
    if batch.dim() != input_dim {
        return Err(Error::Dimension {
            expected: input_dim,
            found: batch.dim(),
        });
    }
    if let Some(&bad) = batch.labels().iter().find(|&&y| y >= classes) {
        return Err(Error::InvalidModel(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Multinomial logistic regression: `logits = W x + b`.
#[derive(Debug, Clone)]
pub struct LogReg {
    input_dim: usize,
    classes: usize,
    loss_kind: LossKind,
    layout: ParameterLayout,
}

impl LogReg {
    pub fn new(input_dim: usize, classes: usize, loss_kind: LossKind) -> Result<Self> {
        if input_dim == 0 || classes == 0 {
            return Err(Error::InvalidModel(
                "logistic regression needs input_dim >= 1 and classes >= 1".into(),
            ));
        }
        let layout = ParameterLayout::sequential(vec![
            (
                "weight".into(),
                SegmentKind::DenseWeight,
                classes * input_dim,
            ),
            ("bias".into(), SegmentKind::Bias, classes),
        ])?;
        Ok(LogReg {
            input_dim,
            classes,
            loss_kind,
            layout,
        })
    }

    fn logits(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let (w, b) = theta.split_at(self.classes * self.input_dim);
        for c in 0..self.classes {
            let row = &w[c * self.input_dim..(c + 1) * self.input_dim];
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            out[c] = acc + b[c];
        }
    }
}

impl DifferentiableModel for LogReg {
    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    fn loss_and_grad(&self, theta: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        check_theta(self, theta)?;
        check_batch(batch, self.input_dim, self.classes)?;
        let th = theta.as_slice();
        let nw = self.classes * self.input_dim;
        let mut grad = vec![0.0; self.layout.dim()];
        let mut z = vec![0.0; self.classes];
        let mut dz = vec![0.0; self.classes];
        let mut total = 0.0;
        for (x, &y) in batch.rows() {
            self.logits(th, x, &mut z);
            total += output_loss(self.loss_kind, &z, y, &mut dz);
            for c in 0..self.classes {
                let g = &mut grad[c * self.input_dim..(c + 1) * self.input_dim];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += dz[c] * xi;
                }
                grad[nw + c] += dz[c];
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        let loss = finite_loss(total * inv)?;
        Ok((
            loss,
            ParamVector::from_vec_unchecked(grad).finite("logreg grad")?,
        ))
    }

    fn loss(&self, theta: &ParamVector, batch: &Batch) -> Result<f64> {
        check_theta(self, theta)?;
        check_batch(batch, self.input_dim, self.classes)?;
        let mut z = vec![0.0; self.classes];
        let mut dz = vec![0.0; self.classes];
        let mut total = 0.0;
        for (x, &y) in batch.rows() {
            self.logits(theta.as_slice(), x, &mut z);
            total += output_loss(self.loss_kind, &z, y, &mut dz);
        }
        finite_loss(total / batch.len() as f64)
    }

    fn accuracy(&self, theta: &ParamVector, batch: &Batch) -> Result<Option<f64>> {
        check_theta(self, theta)?;
        check_batch(batch, self.input_dim, self.classes)?;
        let mut z = vec![0.0; self.classes];
        let hits = batch
            .rows()
            .filter(|(x, &y)| {
                self.logits(theta.as_slice(), x, &mut z);
                argmax(&z) == y
            })
            .count();
        Ok(Some(hits as f64 / batch.len() as f64))
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector {
        let bound = fan_in_bound(self.input_dim);
        let mut v: Vec<f64> = (0..self.classes * self.input_dim)
            .map(|_| rng.uniform_in(-bound, bound))
            .collect();
        v.extend(std::iter::repeat(0.0).take(self.classes));
        ParamVector::from_vec_unchecked(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fd_gradient;

    #[test]
    fn zero_params_give_log_classes() {
        let m = LogReg::new(3, 4, LossKind::CrossEntropy).unwrap();
        let b = Batch::new(vec![0.3, -1.0, 2.0, 1.0, 1.0, 1.0], vec![2, 0], 3).unwrap();
        let loss = m.loss(&ParamVector::zeros(m.dim()), &b).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn grad_at_zero_single_example_by_hand() {
        // 2 features, 2 classes, x = [1, 2], y = 0: softmax = [0.5, 0.5],
        // dz = [-0.5, 0.5]; dW = dz outer x, db = dz.
        let m = LogReg::new(2, 2, LossKind::CrossEntropy).unwrap();
        let b = Batch::new(vec![1.0, 2.0], vec![0], 2).unwrap();
        let g = m.grad(&ParamVector::zeros(6), &b).unwrap();
        assert_eq!(g.as_slice(), &[-0.5, -1.0, 0.5, 1.0, -0.5, 0.5]);
    }

    #[test]
    fn permutation_invariance_and_fd() {
        let m = LogReg::new(2, 3, LossKind::CrossEntropy).unwrap();
        let mut rng = Stream::new(0, 9);
        let theta = m.init_params(&mut rng);
        let x = vec![0.1, 0.2, -1.0, 0.5, 2.0, -0.3];
        let b1 = Batch::new(x.clone(), vec![0, 1, 2], 2).unwrap();
        let b2 = Batch::new(vec![2.0, -0.3, 0.1, 0.2, -1.0, 0.5], vec![2, 0, 1], 2).unwrap();
        let l1 = m.loss(&theta, &b1).unwrap();
        let l2 = m.loss(&theta, &b2).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        let g = m.grad(&theta, &b1).unwrap();
        let f = fd_gradient(&m, &theta, &b1, 1e-5).unwrap();
        for (a, b) in g.iter().zip(f.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn label_out_of_range() {
        let m = LogReg::new(1, 2, LossKind::CrossEntropy).unwrap();
        let b = Batch::new(vec![1.0], vec![5], 1).unwrap();
        assert!(m.loss(&ParamVector::zeros(4), &b).is_err());
    }

    #[test]
    fn ties_break_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}
