//! C interface to `sharplab`.
//!
//! Models and LETS sessions are opaque heap handles released with their
//! `*_free` function. Every call returns an [`SlStatus`]; on failure the
//! message is available from [`sl_last_error`] until the next failing call
//! on the same thread. Panics are caught at the boundary and reported as
//! `SL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::Arc;

use sharplab::data::Batch;
use sharplab::harness::{run_experiment, ExperimentConfig};
use sharplab::lets::{
    lets_step, DirectionSource, HessianMode, LetsConfig, MetricKind, Parameterization,
    RadiusConfig, RadiusOptimizer, RadiusState,
};
use sharplab::model::{Activation, AnchorQuadratic, DifferentiableModel, LogReg, LossKind, Mlp, Quadratic};
use sharplab::optim::{
    asam_perturbation, build_normalization, sam_perturbation, Normalization, NormalizationOperator,
    Schedule, SgdConfig, SgdState, SharpnessVariant,
};
use sharplab::rng::{Stream, Substream};
use sharplab::{Error, ParamVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    Null = 1,
    Dimension = 2,
    NonFinite = 3,
    NoDescent = 4,
    InvalidModel = 5,
    Config = 6,
    Format = 7,
    Io = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Dimension { .. } => SlStatus::Dimension,
        Error::NonFinite(_) => SlStatus::NonFinite,
        Error::NoDescentDirection(_) => SlStatus::NoDescent,
        Error::InvalidModel(_) => SlStatus::InvalidModel,
        Error::Config(_) => SlStatus::Config,
        Error::Format { .. } => SlStatus::Format,
        Error::Io(_) => SlStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            SlStatus::Null
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside sharplab");
            SlStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn vector(p: *const f64, len: usize, what: &'static str) -> Result<ParamVector, Failure> {
    Ok(ParamVector::new(input(p, len, what)?.to_vec())?)
}

fn check_len(expected: usize, found: usize) -> FfiResult {
    if expected != found {
        return Err(Error::Dimension { expected, found }.into());
    }
    Ok(())
}

unsafe fn batch(
    features: *const f64,
    labels: *const usize,
    n: usize,
    feature_dim: usize,
) -> Result<Batch, Failure> {
    let x = input(features, n * feature_dim, "features")?.to_vec();
    let y = input(labels, n, "labels")?.to_vec();
    Ok(Batch::new(x, y, feature_dim)?)
}

/// A differentiable model.
pub struct SlModel {
    inner: Arc<dyn DifferentiableModel>,
}

/// A LETS training session: parameters, radius and optimizer state.
pub struct SlSession {
    model: Arc<dyn DifferentiableModel>,
    theta: ParamVector,
    radius: RadiusState,
    sgd: SgdState,
    sgd_cfg: SgdConfig,
    cfg: LetsConfig,
}

/// Options for [`sl_session_new`]. Enumerations are small integers; see the
/// field comments.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlLetsOptions {
    /// 0 = LETS-SAM, 1 = LETS-ASAM.
    pub asam: i32,
    pub xi: f64,
    /// 0 = val-loss, 1 = gap, 2 = squared-gap.
    pub metric: i32,
    /// 0 = diagonal approximation, 1 = finite-difference Hessian-vector product.
    pub exact_hessian: i32,
    /// 0 = post-step direction, 1 = pre-step.
    pub pre_step_direction: i32,
    /// 0 = exp, 1 = direct.
    pub direct_parameterization: i32,
    /// 0 = Adam, 1 = plain.
    pub plain_radius_optimizer: i32,
    /// Radius step size.
    pub beta: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

/// Per-step numbers reported by [`sl_session_step`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SlStepInfo {
    pub train_loss: f64,
    pub val_loss: f64,
    pub gap: f64,
    pub g_rho: f64,
    pub rho: f64,
    pub lr: f64,
}

/// Default options: LETS-SAM, squared gap, diagonal Hessian, post-step
/// direction, exp parameterization, Adam on the radius with step 1e-4.
#[no_mangle]
pub extern "C" fn sl_lets_options_default() -> SlLetsOptions {
    SlLetsOptions {
        asam: 0,
        xi: 0.01,
        metric: 2,
        exact_hessian: 0,
        pre_step_direction: 0,
        direct_parameterization: 0,
        plain_radius_optimizer: 0,
        beta: 1e-4,
        momentum: 0.0,
        weight_decay: 0.0,
    }
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn emit_model(model: Arc<dyn DifferentiableModel>, out: *mut *mut SlModel) -> FfiResult {
    unsafe { *out = Box::into_raw(Box::new(SlModel { inner: model })) };
    Ok(())
}

/// `L(theta) = 1/2 sum curvature_i (theta_i - center_i)^2`.
///
/// # Safety
/// `curvature` and `center` point to `d` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_model_quadratic(
    curvature: *const f64,
    center: *const f64,
    d: usize,
    out: *mut *mut SlModel,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let q = Quadratic::new(vector(curvature, d, "curvature")?, vector(center, d, "center")?)?;
        emit_model(Arc::new(q), out)
    })
}

/// `L(theta; B) = mean_b 1/2 sum curvature_i (theta_i - x_bi)^2`: a quadratic
/// centred on each example's features.
///
/// # Safety
/// `curvature` points to `d` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_model_anchor_quadratic(curvature: *const f64, d: usize, out: *mut *mut SlModel) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let q = AnchorQuadratic::new(vector(curvature, d, "curvature")?)?;
        emit_model(Arc::new(q), out)
    })
}

/// Fully connected cross-entropy classifier with layer widths `dims`.
/// `activation` is 0 for tanh, 1 for ReLU.
///
/// # Safety
/// `dims` points to `n_dims` sizes; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_model_mlp(
    dims: *const usize,
    n_dims: usize,
    activation: i32,
    out: *mut *mut SlModel,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let act = match activation {
            0 => Activation::Tanh,
            1 => Activation::Relu,
            a => return Err(Error::InvalidModel(format!("unknown activation code {a}")).into()),
        };
        let m = Mlp::new(input(dims, n_dims, "dims")?, act, LossKind::CrossEntropy)?;
        emit_model(Arc::new(m), out)
    })
}

/// Multinomial logistic regression.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_model_logreg(input_dim: usize, classes: usize, out: *mut *mut SlModel) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        emit_model(Arc::new(LogReg::new(input_dim, classes, LossKind::CrossEntropy)?), out)
    })
}

/// # Safety
/// `model` is null or came from a `sl_model_*` constructor and is not used again.
#[no_mangle]
pub unsafe extern "C" fn sl_model_free(model: *mut SlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Parameter count, or 0 for a null handle.
///
/// # Safety
/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_model_dim(model: *const SlModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Seeded initial parameters.
///
/// # Safety
/// `theta_out` points to `d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_model_init(model: *const SlModel, seed: u64, theta_out: *mut f64, d: usize) -> SlStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        check_len(m.inner.dim(), d)?;
        let theta = m.inner.init_params(&mut Stream::substream(seed, Substream::Init));
        output(theta_out, d, "theta_out")?.copy_from_slice(theta.as_slice());
        Ok(())
    })
}

/// Batch-mean loss and, if `grad_out` is non-null, its gradient.
///
/// # Safety
/// `theta` holds `d` doubles, `features` `n * feature_dim` doubles, `labels`
/// `n` sizes; `loss_out` is writable and `grad_out` is null or holds `d` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sl_model_loss_grad(
    model: *const SlModel,
    theta: *const f64,
    d: usize,
    features: *const f64,
    labels: *const usize,
    n: usize,
    feature_dim: usize,
    loss_out: *mut f64,
    grad_out: *mut f64,
) -> SlStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        if loss_out.is_null() {
            return Err(Failure::Null("loss_out"));
        }
        let b = batch(features, labels, n, feature_dim)?;
        let (loss, grad) = m.inner.loss_and_grad(&vector(theta, d, "theta")?, &b)?;
        *loss_out = loss;
        if !grad_out.is_null() {
            output(grad_out, d, "grad_out")?.copy_from_slice(grad.as_slice());
        }
        Ok(())
    })
}

/// `out = rho grad / ||grad||`.
///
/// # Safety
/// `grad` and `out` hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_sam_perturbation(grad: *const f64, d: usize, rho: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let e = sam_perturbation(&vector(grad, d, "grad")?, rho)?;
        output(out, d, "out")?.copy_from_slice(e.as_slice());
        Ok(())
    })
}

/// `out = rho T^2 grad / ||T grad||` with `T = diag(scale)`.
///
/// # Safety
/// `grad`, `scale` and `out` hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_asam_perturbation(
    grad: *const f64,
    scale: *const f64,
    d: usize,
    rho: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let op = NormalizationOperator::from_scale(vector(scale, d, "scale")?)?;
        let e = asam_perturbation(&vector(grad, d, "grad")?, rho, &op)?;
        output(out, d, "out")?.copy_from_slice(e.as_slice());
        Ok(())
    })
}

/// Diagonal of the ASAM operator at `theta` for the model's layout.
///
/// # Safety
/// `theta` and `out` hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_build_normalization(
    model: *const SlModel,
    theta: *const f64,
    d: usize,
    xi: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        let op = build_normalization(m.inner.layout(), &vector(theta, d, "theta")?, xi)?;
        output(out, d, "out")?.copy_from_slice(op.scale().as_slice());
        Ok(())
    })
}

fn lets_setup(o: &SlLetsOptions, lr: f64) -> Result<(LetsConfig, RadiusConfig, SgdConfig), Error> {
    let metric = match o.metric {
        0 => MetricKind::ValLoss,
        1 => MetricKind::Gap,
        2 => MetricKind::SquaredGap,
        m => return Err(Error::Config(format!("unknown metric code {m}"))),
    };
    let cfg = LetsConfig {
        variant: if o.asam != 0 {
            SharpnessVariant::Asam(Normalization::Adaptive { xi: o.xi })
        } else {
            SharpnessVariant::Sam
        },
        metric,
        hessian: if o.exact_hessian != 0 {
            HessianMode::exact()
        } else {
            HessianMode::DiagApprox
        },
        direction: if o.pre_step_direction != 0 {
            DirectionSource::PreStep
        } else {
            DirectionSource::PostStep
        },
    };
    let radius = RadiusConfig {
        parameterization: if o.direct_parameterization != 0 {
            Parameterization::Direct
        } else {
            Parameterization::Exp
        },
        optimizer: if o.plain_radius_optimizer != 0 {
            RadiusOptimizer::Plain
        } else {
            RadiusOptimizer::Adam
        },
        schedule: Schedule::constant(o.beta),
        rho_max: None,
    };
    let sgd = SgdConfig::new(Schedule::constant(lr), o.momentum, o.weight_decay)?;
    Ok((cfg, radius, sgd))
}

/// Starts a session at `theta0` with initial radius `rho0` and learning rate
/// `lr`. `options` may be null for the defaults. The session keeps its own
/// reference to the model, so the model handle may be freed first.
///
/// # Safety
/// `model` is a live handle, `theta0` holds `d` doubles, `options` is null or
/// valid, and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sl_session_new(
    model: *const SlModel,
    theta0: *const f64,
    d: usize,
    rho0: f64,
    lr: f64,
    options: *const SlLetsOptions,
    out: *mut *mut SlSession,
) -> SlStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        check_len(m.inner.dim(), d)?;
        let opts = options.as_ref().copied().unwrap_or_else(|| sl_lets_options_default());
        let (cfg, radius_cfg, sgd_cfg) = lets_setup(&opts, lr)?;
        let session = SlSession {
            model: Arc::clone(&m.inner),
            theta: vector(theta0, d, "theta0")?,
            radius: RadiusState::new(rho0, radius_cfg)?,
            sgd: SgdState::new(),
            sgd_cfg,
            cfg,
        };
        *out = Box::into_raw(Box::new(session));
        Ok(())
    })
}

/// One LETS step on a training and a validation batch. On failure the
/// session is unchanged. `info` may be null.
///
/// # Safety
/// `session` is live; feature arrays hold `n * feature_dim` doubles and label
/// arrays `n` sizes for their respective batch.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sl_session_step(
    session: *mut SlSession,
    train_features: *const f64,
    train_labels: *const usize,
    n_train: usize,
    val_features: *const f64,
    val_labels: *const usize,
    n_val: usize,
    feature_dim: usize,
    info: *mut SlStepInfo,
) -> SlStatus {
    guard(|| {
        let s = session.as_mut().ok_or(Failure::Null("session"))?;
        let tr = batch(train_features, train_labels, n_train, feature_dim)?;
        let vl = batch(val_features, val_labels, n_val, feature_dim)?;
        let mut radius = s.radius.clone();
        let mut sgd = s.sgd.clone();
        let (theta, d) = lets_step(s.model.as_ref(), &s.theta, &mut radius, &tr, &vl, &mut sgd, &s.sgd_cfg, &s.cfg)?;
        s.theta = theta;
        s.radius = radius;
        s.sgd = sgd;
        if let Some(info) = info.as_mut() {
            *info = SlStepInfo {
                train_loss: d.train_loss,
                val_loss: d.val_loss,
                gap: d.gap,
                g_rho: d.g_rho,
                rho: d.rho_after,
                lr: d.lr,
            };
        }
        Ok(())
    })
}

/// Copies the current parameters.
///
/// # Safety
/// `session` is live and `out` holds `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_session_theta(session: *const SlSession, out: *mut f64, d: usize) -> SlStatus {
    guard(|| {
        let s = session.as_ref().ok_or(Failure::Null("session"))?;
        check_len(s.theta.len(), d)?;
        output(out, d, "out")?.copy_from_slice(s.theta.as_slice());
        Ok(())
    })
}

/// Current radius, or NaN for a null handle.
///
/// # Safety
/// `session` is null or live.
#[no_mangle]
pub unsafe extern "C" fn sl_session_rho(session: *const SlSession) -> f64 {
    session.as_ref().map_or(f64::NAN, |s| s.radius.rho())
}

/// # Safety
/// `session` is null or came from [`sl_session_new`] and is not used again.
#[no_mangle]
pub unsafe extern "C" fn sl_session_free(session: *mut SlSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Runs a full experiment from configuration text (`key=value` lines).
/// `test_acc_out` and `final_rho_out` may be null.
///
/// # Safety
/// `config` is a NUL-terminated string; the outputs are null or writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run_experiment(
    config: *const c_char,
    test_acc_out: *mut f64,
    final_rho_out: *mut f64,
) -> SlStatus {
    guard(|| {
        if config.is_null() {
            return Err(Failure::Null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Error::Config("config text is not UTF-8".into()))?;
        let run = run_experiment(&ExperimentConfig::parse(text)?)?;
        if let Some(acc) = test_acc_out.as_mut() {
            *acc = run.summary.final_test_acc.unwrap_or(f64::NAN);
        }
        if let Some(rho) = final_rho_out.as_mut() {
            *rho = run.summary.final_rho;
        }
        Ok(())
    })
}
