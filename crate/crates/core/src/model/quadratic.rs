use super::{check_theta, finite_loss, DifferentiableModel, LossKind, ParameterLayout};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Stream;

fn check_curvature(curvature: &ParamVector) -> Result<()> {
    if curvature.is_empty() {
        return Err(Error::InvalidModel(
            "quadratic needs at least one coordinate".into(),
        ));
    }
    if let Some(bad) = curvature.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::InvalidModel(format!(
            "curvature entries must be positive, got {bad}"
        )));
    }
    Ok(())
}

/// `L(theta) = 1/2 sum_i a_i (theta_i - c_i)^2`, independent of the batch.
#[derive(Debug, Clone)]
pub struct Quadratic {
    curvature: ParamVector,
    center: ParamVector,
    layout: ParameterLayout,
}

impl Quadratic {
    pub fn new(curvature: ParamVector, center: ParamVector) -> Result<Self> {
        check_curvature(&curvature)?;
        if curvature.len() != center.len() {
            return Err(Error::Dimension {
                expected: curvature.len(),
                found: center.len(),
            });
        }
        let layout = ParameterLayout::dense("theta", curvature.len());
        Ok(Quadratic {
            curvature,
            center,
            layout,
        })
    }

    pub fn curvature(&self) -> &ParamVector {
        &self.curvature
    }
}

impl DifferentiableModel for Quadratic {
    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn loss_kind(&self) -> LossKind {
        LossKind::MeanSquared
    }

    fn loss_and_grad(&self, theta: &ParamVector, _batch: &Batch) -> Result<(f64, ParamVector)> {
        check_theta(self, theta)?;
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(theta.len());
        for ((t, c), a) in theta
            .iter()
            .zip(self.center.iter())
            .zip(self.curvature.iter())
        {
            let r = t - c;
            loss += 0.5 * a * r * r;
            grad.push(a * r);
        }
        Ok((
            finite_loss(loss)?,
            ParamVector::from_vec_unchecked(grad).finite("quadratic grad")?,
        ))
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector {
        ParamVector::from_vec_unchecked((0..self.layout.dim()).map(|_| rng.normal()).collect())
    }
}

/// Quadratic whose center is supplied by the data: each example's feature row
/// is an anchor point and `L(theta, B) = mean_b 1/2 sum_i a_i (theta_i - x_{b,i})^2`.
///
/// Two batches with different anchors give a train/validation pair of
/// quadratics that share one Hessian `diag(a)`.
#[derive(Debug, Clone)]
pub struct AnchorQuadratic {
    curvature: ParamVector,
    layout: ParameterLayout,
}

impl AnchorQuadratic {
    pub fn new(curvature: ParamVector) -> Result<Self> {
        check_curvature(&curvature)?;
        let layout = ParameterLayout::dense("theta", curvature.len());
        Ok(AnchorQuadratic { curvature, layout })
    }

    pub fn curvature(&self) -> &ParamVector {
        &self.curvature
    }
}

impl DifferentiableModel for AnchorQuadratic {
    fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    fn loss_kind(&self) -> LossKind {
        LossKind::MeanSquared
    }

    fn loss_and_grad(&self, theta: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)> {
        check_theta(self, theta)?;
        if batch.is_empty() {
            return Err(Error::InvalidModel("empty batch".into()));
        }
        if batch.dim() != theta.len() {
            return Err(Error::Dimension {
                expected: theta.len(),
                found: batch.dim(),
            });
        }
        let a = self.curvature.as_slice();
        let th = theta.as_slice();
        let mut loss = 0.0;
        let mut grad = vec![0.0; th.len()];
        for (x, _) in batch.rows() {
            for i in 0..th.len() {
                let r = th[i] - x[i];
                loss += 0.5 * a[i] * r * r;
                grad[i] += a[i] * r;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        Ok((
            finite_loss(loss * inv)?,
            ParamVector::from_vec_unchecked(grad).finite("quadratic grad")?,
        ))
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector {
        ParamVector::from_vec_unchecked((0..self.layout.dim()).map(|_| rng.normal()).collect())
    }
}
