use serde::{Deserialize, Serialize};

use crate::stats::linear_fit;

use super::{DynamicsError, Trajectory};

/// Distances at or below this are treated as numerical noise.
pub const FIT_FLOOR: f64 = 1e-13;
pub const MIN_SAMPLES: usize = 50;
const MIN_R_SQUARED: f64 = 0.9;

/// `||z^k - z*|| = Theta((1 - r)^k)` fitted on `[k0, k1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub r: f64,
    /// Slope of `log d_k` per step.
    pub slope: f64,
    pub k0: usize,
    pub k1: usize,
    pub r_squared: f64,
    pub samples: usize,
}

pub fn fit_rate(t: &Trajectory) -> Result<RateFit, DynamicsError> {
    fit_series(&t.ks, &t.distances)
}

/// Least squares of `log d_k` on `k` over the last half of the samples above
/// [`FIT_FLOOR`].
pub fn fit_series(ks: &[usize], d: &[f64]) -> Result<RateFit, DynamicsError> {
    let (k, ld): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .zip(d)
        .filter(|(_, &v)| v > FIT_FLOOR && v.is_finite())
        .map(|(&k, &v)| (k as f64, v.ln()))
        .unzip();
    if k.len() < MIN_SAMPLES {
        return Err(DynamicsError::InsufficientSamples {
            usable: k.len(),
            needed: MIN_SAMPLES,
        });
    }
    let start = k.len() / 2;
    let (kw, lw) = (&k[start..], &ld[start..]);
    let spread = lw.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - lw.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let fit = linear_fit(kw, lw).ok_or(DynamicsError::InsufficientDecay { r_squared: 0.0 })?;
    if spread == 0.0 || fit.r_squared < MIN_R_SQUARED {
        return Err(DynamicsError::InsufficientDecay {
            r_squared: if spread == 0.0 { 0.0 } else { fit.r_squared },
        });
    }
    Ok(RateFit {
        r: 1.0 - fit.slope.exp(),
        slope: fit.slope,
        k0: kw[0] as usize,
        k1: *kw.last().expect("nonempty") as usize,
        r_squared: fit.r_squared,
        samples: kw.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_series() {
        let ks: Vec<usize> = (0..400).collect();
        let d: Vec<f64> = ks.iter().map(|&k| 0.9f64.powi(k as i32)).collect();
        let f = fit_series(&ks, &d).unwrap();
        assert!((f.r - 0.1).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);

        let ks: Vec<usize> = (0..2000).collect();
        let d: Vec<f64> = ks.iter().map(|&k| 0.99f64.powi(k as i32) * (2.0 + (k as f64).sin())).collect();
        let f = fit_series(&ks, &d).unwrap();
        assert!((f.r - 0.01).abs() < 0.002, "{f:?}");

        let flat = vec![1.0; 100];
        let ks: Vec<usize> = (0..100).collect();
        assert!(matches!(fit_series(&ks, &flat), Err(DynamicsError::InsufficientDecay { .. })));
        assert!(matches!(
            fit_series(&ks[..10], &flat[..10]),
            Err(DynamicsError::InsufficientSamples { .. })
        ));
    }
}
