//! Regression scores used by the experiment harness.

use crate::error::{Error, Result};

/// Root mean squared error.
pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check(predictions, actuals, 1)?;
    let sse: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / actuals.len() as f64).sqrt())
}

/// Coefficient of determination, `1 - SSE / SST`. Can be negative.
pub fn r_squared(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    check(predictions, actuals, 2)?;
    let mean = actuals.iter().sum::<f64>() / actuals.len() as f64;
    let sst: f64 = actuals.iter().map(|a| (a - mean) * (a - mean)).sum();
    if sst <= 0.0 {
        return Err(Error::ZeroVariance("actuals".into()));
    }
    let sse: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(1.0 - sse / sst)
}

fn check(predictions: &[f64], actuals: &[f64], min_len: usize) -> Result<()> {
    if predictions.len() != actuals.len() {
        return Err(Error::DimensionMismatch {
            expected: actuals.len(),
            actual: predictions.len(),
        });
    }
    if actuals.len() < min_len {
        return Err(Error::Empty(format!("need at least {min_len} value(s)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            12.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.53553, epsilon = 1e-5);
        assert_eq!(rmse(&[2.0], &[5.0]).unwrap(), 3.0);
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn r_squared_examples() {
        let a = [1.0, 2.0, 4.0];
        assert_eq!(r_squared(&a, &a).unwrap(), 1.0);
        let mean = 7.0 / 3.0;
        assert_abs_diff_eq!(r_squared(&[mean; 3], &a).unwrap(), 0.0, epsilon = 1e-15);
        assert!(r_squared(&[4.0, 2.0, 1.0], &a).unwrap() < 0.0);
        assert!(matches!(
            r_squared(&[1.0, 1.0], &[3.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
    }
}
