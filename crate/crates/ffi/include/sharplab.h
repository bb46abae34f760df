#ifndef SHARPLAB_H
#define SHARPLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL = 1,
  SL_STATUS_DIMENSION = 2,
  SL_STATUS_NON_FINITE = 3,
  SL_STATUS_NO_DESCENT = 4,
  SL_STATUS_INVALID_MODEL = 5,
  SL_STATUS_CONFIG = 6,
  SL_STATUS_FORMAT = 7,
  SL_STATUS_IO = 8,
  SL_STATUS_PANIC = 9,
} SlStatus;

/**
 * A differentiable model.
 */
typedef struct SlModel SlModel;

/**
 * A LETS training session: parameters, radius and optimizer state.
 */
typedef struct SlSession SlSession;

/**
 * Options for [`sl_session_new`]. Enumerations are small integers; see the
 * field comments.
 */
typedef struct SlLetsOptions {
  /**
   * 0 = LETS-SAM, 1 = LETS-ASAM.
   */
  int32_t asam;
  double xi;
  /**
   * 0 = val-loss, 1 = gap, 2 = squared-gap.
   */
  int32_t metric;
  /**
   * 0 = diagonal approximation, 1 = finite-difference Hessian-vector product.
   */
  int32_t exact_hessian;
  /**
   * 0 = post-step direction, 1 = pre-step.
   */
  int32_t pre_step_direction;
  /**
   * 0 = exp, 1 = direct.
   */
  int32_t direct_parameterization;
  /**
   * 0 = Adam, 1 = plain.
   */
  int32_t plain_radius_optimizer;
  /**
   * Radius step size.
   */
  double beta;
  double momentum;
  double weight_decay;
} SlLetsOptions;

/**
 * Per-step numbers reported by [`sl_session_step`].
 */
typedef struct SlStepInfo {
  double train_loss;
  double val_loss;
  double gap;
  double g_rho;
  double rho;
  double lr;
} SlStepInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default options: LETS-SAM, squared gap, diagonal Hessian, post-step
 * direction, exp parameterization, Adam on the radius with step 1e-4.
 */
struct SlLetsOptions sl_lets_options_default(void);

/**
 * Message of the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *sl_last_error(void);

/**
 * `L(theta) = 1/2 sum curvature_i (theta_i - center_i)^2`.
 *
 * # Safety
 * `curvature` and `center` point to `d` doubles; `out` is writable.
 */
enum SlStatus sl_model_quadratic(const double *curvature,
                                 const double *center,
                                 size_t d,
                                 struct SlModel **out);

/**
 * `L(theta; B) = mean_b 1/2 sum curvature_i (theta_i - x_bi)^2`: a quadratic
 * centred on each example's features.
 *
 * # Safety
 * `curvature` points to `d` doubles; `out` is writable.
 */
enum SlStatus sl_model_anchor_quadratic(const double *curvature, size_t d, struct SlModel **out);

/**
 * Fully connected cross-entropy classifier with layer widths `dims`.
 * `activation` is 0 for tanh, 1 for ReLU.
 *
 * # Safety
 * `dims` points to `n_dims` sizes; `out` is writable.
 */
enum SlStatus sl_model_mlp(const size_t *dims,
                           size_t n_dims,
                           int32_t activation,
                           struct SlModel **out);

/**
 * Multinomial logistic regression.
 *
 * # Safety
 * `out` is writable.
 */
enum SlStatus sl_model_logreg(size_t input_dim, size_t classes, struct SlModel **out);

/**
 * # Safety
 * `model` is null or came from a `sl_model_*` constructor and is not used again.
 */
void sl_model_free(struct SlModel *model);

/**
 * Parameter count, or 0 for a null handle.
 *
 * # Safety
 * `model` is null or a live handle.
 */
size_t sl_model_dim(const struct SlModel *model);

/**
 * Seeded initial parameters.
 *
 * # Safety
 * `theta_out` points to `d` writable doubles.
 */
enum SlStatus sl_model_init(const struct SlModel *model,
                            uint64_t seed,
                            double *theta_out,
                            size_t d);

/**
 * Batch-mean loss and, if `grad_out` is non-null, its gradient.
 *
 * # Safety
 * `theta` holds `d` doubles, `features` `n * feature_dim` doubles, `labels`
 * `n` sizes; `loss_out` is writable and `grad_out` is null or holds `d` doubles.
 */
enum SlStatus sl_model_loss_grad(const struct SlModel *model,
                                 const double *theta,
                                 size_t d,
                                 const double *features,
                                 const size_t *labels,
                                 size_t n,
                                 size_t feature_dim,
                                 double *loss_out,
                                 double *grad_out);

/**
 * `out = rho grad / ||grad||`.
 *
 * # Safety
 * `grad` and `out` hold `d` doubles.
 */
enum SlStatus sl_sam_perturbation(const double *grad, size_t d, double rho, double *out);

/**
 * `out = rho T^2 grad / ||T grad||` with `T = diag(scale)`.
 *
 * # Safety
 * `grad`, `scale` and `out` hold `d` doubles.
 */
enum SlStatus sl_asam_perturbation(const double *grad,
                                   const double *scale,
                                   size_t d,
                                   double rho,
                                   double *out);

/**
 * Diagonal of the ASAM operator at `theta` for the model's layout.
 *
 * # Safety
 * `theta` and `out` hold `d` doubles.
 */
enum SlStatus sl_build_normalization(const struct SlModel *model,
                                     const double *theta,
                                     size_t d,
                                     double xi,
                                     double *out);

/**
 * Starts a session at `theta0` with initial radius `rho0` and learning rate
 * `lr`. `options` may be null for the defaults. The session keeps its own
 * reference to the model, so the model handle may be freed first.
 *
 * # Safety
 * `model` is a live handle, `theta0` holds `d` doubles, `options` is null or
 * valid, and `out` is writable.
 */
enum SlStatus sl_session_new(const struct SlModel *model,
                             const double *theta0,
                             size_t d,
                             double rho0,
                             double lr,
                             const struct SlLetsOptions *options,
                             struct SlSession **out);

/**
 * One LETS step on a training and a validation batch. On failure the
 * session is unchanged. `info` may be null.
 *
 * # Safety
 * `session` is live; feature arrays hold `n * feature_dim` doubles and label
 * arrays `n` sizes for their respective batch.
 */
enum SlStatus sl_session_step(struct SlSession *session,
                              const double *train_features,
                              const size_t *train_labels,
                              size_t n_train,
                              const double *val_features,
                              const size_t *val_labels,
                              size_t n_val,
                              size_t feature_dim,
                              struct SlStepInfo *info);

/**
 * Copies the current parameters.
 *
 * # Safety
 * `session` is live and `out` holds `d` doubles.
 */
enum SlStatus sl_session_theta(const struct SlSession *session, double *out, size_t d);

/**
 * Current radius, or NaN for a null handle.
 *
 * # Safety
 * `session` is null or live.
 */
double sl_session_rho(const struct SlSession *session);

/**
 * # Safety
 * `session` is null or came from [`sl_session_new`] and is not used again.
 */
void sl_session_free(struct SlSession *session);

/**
 * Runs a full experiment from configuration text (`key=value` lines).
 * `test_acc_out` and `final_rho_out` may be null.
 *
 * # Safety
 * `config` is a NUL-terminated string; the outputs are null or writable.
 */
enum SlStatus sl_run_experiment(const char *config, double *test_acc_out, double *final_rho_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHARPLAB_H */
