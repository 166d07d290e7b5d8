//! Shared test support: the central finite-difference oracle used to check
//! every analytic gradient, independent of the tape's backward pass.
#![allow(dead_code)] // each integration target compiles its own copy

use hybrid_distill::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;

/// Worst relative error between analytic gradients and central finite
/// differences of `eval` over every coordinate of every parameter.
///
/// `eval` must recompute the loss from scratch for the given parameter
/// values; `analytic` holds one gradient tensor per parameter, aligned.
pub fn max_fd_error(
    params: &[Tensor],
    analytic: &[Tensor],
    eval: &mut dyn FnMut(&[Tensor]) -> f64,
) -> f64 {
    assert_eq!(params.len(), analytic.len(), "one gradient per parameter");
    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = params.to_vec();
    for (pi, grad) in analytic.iter().enumerate() {
        assert_eq!(params[pi].shape(), grad.shape(), "gradient shape mismatch");
        for i in 0..params[pi].len() {
            let base = params[pi].data()[i];
            work[pi].data_mut()[i] = base + FD_STEP;
            let plus = eval(&work);
            work[pi].data_mut()[i] = base - FD_STEP;
            let minus = eval(&work);
            work[pi].data_mut()[i] = base;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = grad.data()[i];
            let rel = (a - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Asserts the gradient check and reports the offending error on failure.
pub fn assert_grads_match(
    what: &str,
    params: &[Tensor],
    analytic: &[Tensor],
    eval: &mut dyn FnMut(&[Tensor]) -> f64,
) -> f64 {
    let err = max_fd_error(params, analytic, eval);
    assert!(
        err < FD_TOL,
        "{}: relative gradient error {} exceeds {}",
        what,
        err,
        FD_TOL
    );
    err
}
