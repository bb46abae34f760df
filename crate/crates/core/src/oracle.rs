//! Brute-force checks of the radius hypergradient.
//!
//! The oracle rebuilds the one-step map `rho -> theta'(rho) -> J` from raw
//! model gradients and differentiates it by central differences in `rho`
//! alone, with `theta` and both batches held fixed. It does not go through
//! [`crate::lets::lets_step`], so agreement between the two is a real check.

use std::fmt;

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::lets::{
    generalization_metric, lets_step, DirectionSource, HessianMode, LetsConfig, MetricKind,
    Parameterization, RadiusConfig, RadiusOptimizer, RadiusState,
};
use crate::model::{fd_hvp, DifferentiableModel, DEFAULT_FD_STEP};
use crate::optim::{NormalizationOperator, Schedule, SgdConfig, SgdState, SharpnessVariant};
use crate::param::ParamVector;

pub const DEFAULT_RHO_STEP: f64 = 1e-4;

/// One lower-level step's inputs: parameters, batches and learning rate.
#[derive(Debug, Clone, Copy)]
pub struct OneStepProblem<'a> {
    pub model: &'a dyn DifferentiableModel,
    pub theta: &'a ParamVector,
    pub train: &'a Batch,
    pub val: &'a Batch,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub metric: MetricKind,
    pub variant: SharpnessVariant,
    pub direction: DirectionSource,
    /// Central-difference step in `rho`.
    pub rho_step: f64,
    /// Step used by the exact-mode Hessian-vector product.
    pub hvp_step: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            metric: MetricKind::SquaredGap,
            variant: SharpnessVariant::Sam,
            direction: DirectionSource::PostStep,
            rho_step: DEFAULT_RHO_STEP,
            hvp_step: DEFAULT_FD_STEP,
        }
    }
}

/// `T^2 g / ||T g||`, or `g / ||g||` without an operator.
fn direction_of(grad: &ParamVector, op: Option<&NormalizationOperator>) -> Result<ParamVector> {
    let g = grad.as_slice();
    let t: Vec<f64> = match op {
        Some(op) => op.scale().as_slice().to_vec(),
        None => vec![1.0; g.len()],
    };
    let norm = g
        .iter()
        .zip(&t)
        .map(|(g, t)| (t * g) * (t * g))
        .sum::<f64>()
        .sqrt();
    if !(norm > 0.0) {
        return Err(Error::NoDescentDirection("oracle direction is zero".into()));
    }
    ParamVector::new(g.iter().zip(&t).map(|(g, t)| t * t * g / norm).collect())
}

/// The map `r -> J(theta'(r))` with the perturbation direction frozen at the
/// nominal radius.
struct OneStepMap<'a> {
    problem: OneStepProblem<'a>,
    metric: MetricKind,
    /// `theta + rho0 * u`: the nominal perturbed point.
    base: ParamVector,
    /// Direction along which the perturbed point moves with `r`.
    along: ParamVector,
    rho0: f64,
}

impl<'a> OneStepMap<'a> {
    fn new(problem: OneStepProblem<'a>, rho0: f64, settings: &OracleSettings) -> Result<Self> {
        let OneStepProblem {
            model,
            theta,
            train,
            eta,
            ..
        } = problem;
        let grad = model.grad(theta, train)?;
        let op = settings.variant.operator(model, theta)?;
        let u = direction_of(&grad, op.as_ref())?;
        let base = theta.axpy(rho0, &u)?;
        let along = match settings.direction {
            DirectionSource::PreStep => u,
            DirectionSource::PostStep => {
                let stepped = theta.axpy(-eta, &model.grad(&base, train)?)?;
                direction_of(&model.grad(&stepped, train)?, op.as_ref())?
            }
        };
        Ok(OneStepMap {
            problem,
            metric: settings.metric,
            base,
            along,
            rho0,
        })
    }

    fn objective(&self, r: f64) -> Result<f64> {
        let p = &self.problem;
        let perturbed = self.base.axpy(r - self.rho0, &self.along)?;
        let stepped = p.theta.axpy(-p.eta, &p.model.grad(&perturbed, p.train)?)?;
        let val = p.model.loss(&stepped, p.val)?;
        let train = p.model.loss(&stepped, p.train)?;
        Ok(generalization_metric(self.metric, val, train))
    }
}

/// `(J(rho + h) - J(rho - h)) / 2h` through one plain lower-level step.
pub fn oracle_dj_drho_fd(
    problem: OneStepProblem<'_>,
    rho: f64,
    settings: &OracleSettings,
) -> Result<f64> {
    let h = settings.rho_step;
    if !(h > 0.0) {
        return Err(Error::config(format!("rho step must be positive, got {h}")));
    }
    if !(rho - h > 0.0) {
        return Err(Error::config(format!(
            "rho - h must stay positive (rho={rho}, h={h})"
        )));
    }
    let map = OneStepMap::new(problem, rho, settings)?;
    Ok((map.objective(rho + h)? - map.objective(rho - h)?) / (2.0 * h))
}

fn relative_error(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Analytic hypergradients in both Hessian modes against the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergradReport {
    pub descriptor: String,
    pub rho: f64,
    pub eta: f64,
    /// `eta * g_rho` with the squared-gradient diagonal.
    pub analytic_diag: f64,
    /// `eta * g_rho` with a finite-difference Hessian-vector product.
    pub analytic_exact: f64,
    pub fd: f64,
    pub rel_err_diag: f64,
    pub rel_err_exact: f64,
    pub sign_agree_diag: bool,
    pub sign_agree_exact: bool,
    pub rho_step: f64,
}

impl HypergradReport {
    pub const CSV_HEADER: &'static str = "descriptor,rho,eta,analytic_diag,analytic_exact,fd,\
rel_err_diag,rel_err_exact,sign_agree_diag,sign_agree_exact,rho_step";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.descriptor,
            self.rho,
            self.eta,
            self.analytic_diag,
            self.analytic_exact,
            self.fd,
            self.rel_err_diag,
            self.rel_err_exact,
            self.sign_agree_diag,
            self.sign_agree_exact,
            self.rho_step
        )
    }
}

impl fmt::Display for HypergradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hypergradient check: {}", self.descriptor)?;
        writeln!(
            f,
            "  rho = {}, eta = {}, fd step = {}",
            self.rho, self.eta, self.rho_step
        )?;
        writeln!(f, "  finite difference dJ/drho : {:+.10e}", self.fd)?;
        writeln!(
            f,
            "  exact-hvp  eta*g_rho      : {:+.10e}  rel err {:.3e}  sign {}",
            self.analytic_exact,
            self.rel_err_exact,
            if self.sign_agree_exact {
                "ok"
            } else {
                "FLIPPED"
            }
        )?;
        write!(
            f,
            "  diag-approx eta*g_rho     : {:+.10e}  rel err {:.3e}  sign {}",
            self.analytic_diag,
            self.rel_err_diag,
            if self.sign_agree_diag {
                "ok"
            } else {
                "FLIPPED"
            }
        )
    }
}

fn analytic(
    problem: OneStepProblem<'_>,
    rho: f64,
    settings: &OracleSettings,
    hessian: HessianMode,
) -> Result<f64> {
    let radius_cfg = RadiusConfig {
        parameterization: Parameterization::Direct,
        optimizer: RadiusOptimizer::Plain,
        schedule: Schedule::constant(0.0),
        rho_max: None,
    };
    let mut radius = RadiusState::new(rho, radius_cfg)?;
    let cfg = LetsConfig {
        variant: settings.variant,
        metric: settings.metric,
        hessian,
        direction: settings.direction,
    };
    let (_, d) = lets_step(
        problem.model,
        problem.theta,
        &mut radius,
        problem.train,
        problem.val,
        &mut SgdState::new(),
        &SgdConfig::plain(problem.eta),
        &cfg,
    )?;
    Ok(problem.eta * d.g_rho)
}

pub fn verify_hypergradient(
    problem: OneStepProblem<'_>,
    rho: f64,
    settings: &OracleSettings,
    descriptor: impl Into<String>,
) -> Result<HypergradReport> {
    let fd = oracle_dj_drho_fd(problem, rho, settings)?;
    let analytic_diag = analytic(problem, rho, settings, HessianMode::DiagApprox)?;
    let analytic_exact = analytic(
        problem,
        rho,
        settings,
        HessianMode::ExactFdHvp {
            h: settings.hvp_step,
        },
    )?;
    Ok(HypergradReport {
        descriptor: descriptor.into(),
        rho,
        eta: problem.eta,
        analytic_diag,
        analytic_exact,
        fd,
        rel_err_diag: relative_error(analytic_diag, fd),
        rel_err_exact: relative_error(analytic_exact, fd),
        sign_agree_diag: analytic_diag.signum() == fd.signum(),
        sign_agree_exact: analytic_exact.signum() == fd.signum(),
        rho_step: settings.rho_step,
    })
}

/// Relative error of `diag(g_hat^2) v` against a finite-difference `H v` at the
/// SAM-perturbed point, with `v` the unit gradient direction.
pub fn hessian_diag_error(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    rho: f64,
    batch: &Batch,
) -> Result<f64> {
    let v = direction_of(&model.grad(theta, batch)?, None)?;
    let perturbed = theta.axpy(rho, &v)?;
    let g_hat = model.grad(&perturbed, batch)?;
    let approx = g_hat.square()?.multiply(&v)?;
    let exact = fd_hvp(model, &perturbed, batch, &v, DEFAULT_FD_STEP)?;
    let denom = exact.l2_norm();
    if denom == 0.0 {
        return Err(Error::NoDescentDirection("Hessian action is zero".into()));
    }
    Ok(approx.sub(&exact)?.l2_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnchorQuadratic, Quadratic};

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    fn fixture() -> (AnchorQuadratic, ParamVector, Batch, Batch) {
        (
            AnchorQuadratic::new(pv(&[1.0])).unwrap(),
            pv(&[1.0]),
            Batch::new(vec![0.0], vec![0], 1).unwrap(),
            Batch::new(vec![2.0], vec![0], 1).unwrap(),
        )
    }

    #[test]
    fn closed_form_derivative() {
        let (m, theta, tr, vl) = fixture();
        let p = OneStepProblem {
            model: &m,
            theta: &theta,
            train: &tr,
            val: &vl,
            eta: 0.1,
        };
        // J(rho) = (0.2 + 0.2 rho)^2 / 2, dJ/drho = 0.2 * 0.22
        let fd = oracle_dj_drho_fd(p, 0.1, &OracleSettings::default()).unwrap();
        assert!((fd - 0.044).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cases_vanish() {
        let (m, theta, tr, vl) = fixture();
        let same = OneStepProblem {
            model: &m,
            theta: &theta,
            train: &tr,
            val: &tr,
            eta: 0.1,
        };
        assert_eq!(
            oracle_dj_drho_fd(same, 0.1, &OracleSettings::default()).unwrap(),
            0.0
        );
        let frozen = OneStepProblem {
            model: &m,
            theta: &theta,
            train: &tr,
            val: &vl,
            eta: 0.0,
        };
        assert_eq!(
            oracle_dj_drho_fd(frozen, 0.1, &OracleSettings::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_step_larger_than_rho() {
        let (m, theta, tr, vl) = fixture();
        let p = OneStepProblem {
            model: &m,
            theta: &theta,
            train: &tr,
            val: &vl,
            eta: 0.1,
        };
        let s = OracleSettings {
            rho_step: 0.2,
            ..OracleSettings::default()
        };
        assert!(oracle_dj_drho_fd(p, 0.1, &s).is_err());
    }

    #[test]
    fn report_on_worked_example() {
        let (m, theta, tr, vl) = fixture();
        let p = OneStepProblem {
            model: &m,
            theta: &theta,
            train: &tr,
            val: &vl,
            eta: 0.1,
        };
        let r = verify_hypergradient(p, 0.1, &OracleSettings::default(), "1d").unwrap();
        assert!(r.rel_err_exact < 1e-6);
        assert!((r.analytic_diag - 0.05324).abs() < 1e-12);
        assert!(r.sign_agree_diag && r.sign_agree_exact);
        assert!(r.to_string().contains("exact-hvp"));
        assert_eq!(
            r.csv_row().split(',').count(),
            HypergradReport::CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn diag_error_on_unit_quadratic() {
        let q = Quadratic::new(pv(&[1.0]), pv(&[0.0])).unwrap();
        let b = Batch::new(vec![0.0], vec![0], 1).unwrap();
        let e = hessian_diag_error(&q, &pv(&[1.0]), 0.1, &b).unwrap();
        assert!((e - 0.21).abs() < 1e-9);
        assert!(matches!(
            hessian_diag_error(&q, &pv(&[0.0]), 0.1, &b),
            Err(Error::NoDescentDirection(_))
        ));
    }
}
