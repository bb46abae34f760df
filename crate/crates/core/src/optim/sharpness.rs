use super::{build_normalization, sgd_step, NormalizationOperator, SgdConfig, SgdState};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::model::DifferentiableModel;
use crate::param::ParamVector;

/// How the ASAM operator is formed at each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Rebuilt from the current parameters with floor `xi`.
    Adaptive { xi: f64 },
    /// Forced to the identity.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SharpnessVariant {
    Sam,
    Asam(Normalization),
}

impl SharpnessVariant {
    pub(crate) fn operator(
        &self,
        model: &dyn DifferentiableModel,
        theta: &ParamVector,
    ) -> Result<Option<NormalizationOperator>> {
        match self {
            SharpnessVariant::Sam => Ok(None),
            SharpnessVariant::Asam(Normalization::Identity) => {
                Ok(Some(NormalizationOperator::identity(theta.len())))
            }
            SharpnessVariant::Asam(Normalization::Adaptive { xi }) => {
                build_normalization(model.layout(), theta, *xi).map(Some)
            }
        }
    }
}

fn check_radius(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "radius must be finite and >= 0, got {rho}"
        )))
    }
}

/// `eps = rho g / ||g||`.
pub fn sam_perturbation(grad: &ParamVector, rho: f64) -> Result<ParamVector> {
    check_radius(rho)?;
    let norm = grad.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::NoDescentDirection("gradient norm is zero".into()));
    }
    let scale = rho / norm;
    ParamVector::from_vec_unchecked(grad.iter().map(|g| g * scale).collect())
        .finite("sam perturbation")
}

/// `eps = rho T^2 g / ||T g||`.
pub fn asam_perturbation(
    grad: &ParamVector,
    rho: f64,
    op: &NormalizationOperator,
) -> Result<ParamVector> {
    check_radius(rho)?;
    let t = op.scale();
    if t.len() != grad.len() {
        return Err(Error::Dimension {
            expected: t.len(),
            found: grad.len(),
        });
    }
    let norm = t.multiply(grad)?.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::NoDescentDirection(
            "normalized gradient norm is zero".into(),
        ));
    }
    let scale = rho / norm;
    ParamVector::from_vec_unchecked(
        t.iter()
            .zip(grad.iter())
            .map(|(t, g)| (t * t * g) * scale)
            .collect(),
    )
    .finite("asam perturbation")
}

/// Everything one sharpness-aware update produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpStep {
    /// Parameters after the update.
    pub theta: ParamVector,
    /// Training loss at the starting parameters.
    pub loss: f64,
    /// Gradient at the starting parameters.
    pub grad: ParamVector,
    /// Gradient at the perturbed point; the one fed to SGD.
    pub perturbed_grad: ParamVector,
    /// Perturbation that was applied (zero for ERM).
    pub perturbation: ParamVector,
    /// ASAM operator at the starting parameters, if any.
    pub operator: Option<NormalizationOperator>,
    /// Learning rate used by this step.
    pub lr: f64,
}

/// Plain SGD on the batch gradient.
pub fn erm_step(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<SharpStep> {
    let (loss, grad) = model.loss_and_grad(theta, batch)?;
    let lr = state.current_lr(cfg);
    let next = sgd_step(theta, &grad, state, cfg)?;
    Ok(SharpStep {
        theta: next,
        loss,
        perturbation: ParamVector::zeros(theta.len()),
        perturbed_grad: grad.clone(),
        grad,
        operator: None,
        lr,
    })
}

/// One SAM or ASAM update: perturb along the (normalized) gradient of the
/// batch, take the gradient there on the same batch, and hand it to SGD.
pub fn sharpness_step(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    rho: f64,
    variant: SharpnessVariant,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<SharpStep> {
    let (loss, grad) = model.loss_and_grad(theta, batch)?;
    let operator = variant.operator(model, theta)?;
    let perturbation = match &operator {
        None => sam_perturbation(&grad, rho)?,
        Some(op) => asam_perturbation(&grad, rho, op)?,
    };
    let perturbed_grad = model.grad(&theta.add(&perturbation)?, batch)?;
    let lr = state.current_lr(cfg);
    let next = sgd_step(theta, &perturbed_grad, state, cfg)?;
    Ok(SharpStep {
        theta: next,
        loss,
        grad,
        perturbed_grad,
        perturbation,
        operator,
        lr,
    })
}

/// Returns `(theta', g_hat)` where `g_hat` is the gradient at the perturbed point.
pub fn sam_step(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    rho: f64,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<(ParamVector, ParamVector)> {
    let s = sharpness_step(model, theta, batch, rho, SharpnessVariant::Sam, state, cfg)?;
    Ok((s.theta, s.perturbed_grad))
}

/// ASAM with `T` rebuilt from `theta` using floor `xi`.
pub fn asam_step(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    rho: f64,
    xi: f64,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<(ParamVector, ParamVector)> {
    let variant = SharpnessVariant::Asam(Normalization::Adaptive { xi });
    let s = sharpness_step(model, theta, batch, rho, variant, state, cfg)?;
    Ok((s.theta, s.perturbed_grad))
}

/// ASAM with a caller-supplied operator.
pub fn asam_step_with_operator(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    rho: f64,
    op: &NormalizationOperator,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<(ParamVector, ParamVector)> {
    let grad = model.grad(theta, batch)?;
    let eps = asam_perturbation(&grad, rho, op)?;
    let g_hat = model.grad(&theta.add(&eps)?, batch)?;
    let next = sgd_step(theta, &g_hat, state, cfg)?;
    Ok((next, g_hat))
}
