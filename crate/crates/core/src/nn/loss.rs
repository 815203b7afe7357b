use super::tensor::Scalar;
use super::NnError;

/// Huber loss of one prediction, summed over components, with its gradient
/// with respect to `pred`.
pub fn huber_loss<T: Scalar>(pred: &[T], target: &[T], delta: T) -> Result<(T, Vec<T>), NnError> {
    if pred.len() != target.len() {
        return Err(NnError::Shape(format!(
            "huber: prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(NnError::InvalidArgument(
            "huber delta must be positive".into(),
        ));
    }
    if pred.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(NnError::NonFinite("huber loss input"));
    }
    let half = T::of(0.5);
    let mut loss = T::zero();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let r = p - t;
            if r.abs() <= delta {
                loss = loss + half * r * r;
                r
            } else {
                loss = loss + delta * (r.abs() - half * delta);
                delta * r.signum()
            }
        })
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_prediction_has_zero_loss_and_gradient() {
        let (l, g) = huber_loss(&[0.3f64, -0.2], &[0.3, -0.2], 1.0).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn quadratic_region() {
        let (l, g) = huber_loss(&[0.5f64], &[0.0], 1.0).unwrap();
        assert!((l - 0.125).abs() < 1e-15);
        assert!((g[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_region_clips_gradient() {
        let (l, g) = huber_loss(&[2.0f64], &[0.0], 1.0).unwrap();
        assert!((l - 1.5).abs() < 1e-15);
        assert_eq!(g[0], 1.0);
        let (_, g) = huber_loss(&[-2.0f64], &[0.0], 1.0).unwrap();
        assert_eq!(g[0], -1.0);
    }

    #[test]
    fn continuous_with_continuous_slope_at_delta() {
        let d = 1.0f64;
        let eps = 1e-9;
        let (lo, glo) = huber_loss(&[d - eps], &[0.0], d).unwrap();
        let (hi, ghi) = huber_loss(&[d + eps], &[0.0], d).unwrap();
        assert!((hi - lo).abs() < 1e-8);
        assert!((ghi[0] - glo[0]).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_finite_and_bad_delta() {
        assert!(huber_loss(&[f64::NAN], &[0.0], 1.0).is_err());
        assert!(huber_loss(&[0.0f64], &[f64::INFINITY], 1.0).is_err());
        assert!(huber_loss(&[0.0f64], &[0.0], 0.0).is_err());
    }
}
