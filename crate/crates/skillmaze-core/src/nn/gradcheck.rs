//! Central-difference gradient checking for any scalar objective.

/// Numeric gradient of a scalar objective over `len` flat coordinates.
///
/// `objective(k, delta)` must evaluate the objective with coordinate `k`
/// shifted by `delta` (and every other coordinate at its base value); it is
/// called twice per coordinate with `±h`.
pub fn central_difference(
    len: usize,
    h: f64,
    mut objective: impl FnMut(usize, f64) -> f64,
) -> Vec<f64> {
    (0..len)
        .map(|k| (objective(k, h) - objective(k, -h)) / (2.0 * h))
        .collect()
}

/// Largest relative disagreement between two gradient vectors.
///
/// Each coordinate is compared as `|a − n| / max(|a|, |n|, 1)`, so the
/// returned value can be tested directly against a relative tolerance.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(
        analytic.len(),
        numeric.len(),
        "gradient length mismatch: {} vs {}",
        analytic.len(),
        numeric.len()
    );
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Panic with a per-coordinate report unless the gradients agree.
pub fn assert_gradients_match(analytic: &[f64], numeric: &[f64], tol: f64, label: &str) {
    assert_eq!(analytic.len(), numeric.len(), "{label}: length mismatch");
    for (k, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1.0);
        assert!(
            rel < tol,
            "{label}: coordinate {k}: analytic {a} vs numeric {n} (rel {rel:.3e})"
        );
    }
}
