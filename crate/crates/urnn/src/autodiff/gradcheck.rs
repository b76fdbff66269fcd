//! Central finite-difference gradient checking.
//!
//! The checker only evaluates the function under test at perturbed inputs;
//! it never looks at the tape, so it stays independent of the reverse pass
//! it is used to validate.

/// Central difference gradient of `f` at `x` with half-step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Largest elementwise relative error between two gradients.
///
/// Each element is compared as `|a - n| / max(|a|, |n|, floor)` so that
/// near-zero pairs do not blow up the ratio.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Convenience: checks `analytic` against central differences of `f` at `x`.
/// Returns the worst relative error observed.
pub fn check(f: impl Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64], h: f64) -> f64 {
    let numeric = central_diff(f, x, h);
    max_rel_error(analytic, &numeric, 1e-6)
}
