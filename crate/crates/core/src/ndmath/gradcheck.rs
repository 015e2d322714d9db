use crate::error::{Error, Result};

/// Per-coordinate comparison of an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate where `max_rel_error` occurs.
    pub worst_index: usize,
    pub num_params: usize,
}

/// Relative error `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares the gradient returned by `loss_fn` at `params` with central
/// differences `(f(θ+εe) - f(θ-εe)) / 2ε` on every coordinate.
///
/// `loss_fn` returns the loss and its analytic gradient; only the gradient at
/// `params` itself is used.
pub fn finite_diff_check<F>(mut loss_fn: F, params: &[f64], eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (loss, analytic) = loss_fn(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    if analytic.len() != params.len() {
        return Err(Error::shape(
            "finite_diff_check",
            format!(
                "{} gradient entries for {} params",
                analytic.len(),
                params.len()
            ),
        ));
    }
    let mut theta = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        num_params: params.len(),
    };
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let (plus, _) = loss_fn(&theta)?;
        theta[i] = orig - eps;
        let (minus, _) = loss_fn(&theta)?;
        theta[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::softmax_xent;
    use rand::Rng;

    #[test]
    fn linear_loss_is_exact() {
        let c = [0.5, -2.0, 3.25];
        let f = |w: &[f64]| Ok((w.iter().zip(&c).map(|(a, b)| a * b).sum(), c.to_vec()));
        let r = finite_diff_check(f, &[1.0, 2.0, -1.0], 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[test]
    fn softmax_xent_self_test() {
        let mut rng = crate::seed::rng(5);
        let logits: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = finite_diff_check(|l| softmax_xent(l, 2), &logits, 1e-5).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let f = |w: &[f64]| Ok((w[0] * w[0], vec![w[0]]));
        let r = finite_diff_check(f, &[1.5], 1e-5).unwrap();
        assert!(r.max_rel_error > 0.3);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let f = |w: &[f64]| Ok((w[0].ln(), vec![1.0 / w[0]]));
        assert!(matches!(
            finite_diff_check(f, &[-1.0], 1e-5),
            Err(Error::NonFinite(_))
        ));
    }
}
