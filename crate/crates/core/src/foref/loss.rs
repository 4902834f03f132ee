//! Wrap-around angular deviation and the squared-deviation training loss.

use crate::geometry::signed_angle_diff;

use super::ForefError;

/// Shortest angular distance between two angles, in [0, pi]. Inputs may
/// be any real angles; they are reduced internally.
pub fn angular_deviation(theta: f64, theta_star: f64) -> f64 {
    signed_angle_diff(theta, theta_star).abs()
}

/// Mean squared angular deviation over a batch.
pub fn loss(predictions: &[f64], labels: &[f64]) -> Result<f64, ForefError> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(ForefError::BadBatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(&p, &l)| {
            let d = angular_deviation(p, l);
            d * d
        })
        .sum();
    Ok(sum / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn deviation_examples() {
        assert!((angular_deviation(0.5, 0.0) - 0.5).abs() < 1e-12);
        assert!((angular_deviation(TAU - 0.5, 0.0) - 0.5).abs() < 1e-12);
        assert!((angular_deviation(PI, 0.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((loss(&[PI], &[0.0]).unwrap() - PI * PI).abs() < 1e-12);
        assert!((loss(&[0.5, TAU - 0.5], &[0.0, 0.0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_or_mismatched_batch_is_an_error() {
        assert!(loss(&[], &[]).is_err());
        assert!(loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn deviation_symmetry_and_periodicity() {
        let mut x = 0.13_f64;
        for _ in 0..10_000 {
            // cheap deterministic pseudo-random walk over angle pairs
            x = (x * 9301.0 + 49297.0) % 233280.0;
            let a = x / 233280.0 * 4.0 * TAU - 2.0 * TAU;
            let b = (x * 7.0 + 11.0) % 233280.0 / 233280.0 * TAU;
            let d = angular_deviation(a, b);
            assert!((0.0..=PI + 1e-12).contains(&d));
            assert!((d - angular_deviation(b, a)).abs() < 1e-9);
            assert!((d - angular_deviation(a + TAU, b)).abs() < 1e-9);
            assert!((d - angular_deviation(a, b - TAU)).abs() < 1e-9);
        }
    }
}
