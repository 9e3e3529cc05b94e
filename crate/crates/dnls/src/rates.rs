//! Least-squares power-law fits in log-log coordinates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MIN_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub t_lo: f64,
    pub t_hi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Largest |log v - (intercept + slope log t)| over the window.
    pub max_residual: f64,
    pub points: usize,
}

/// Fit log v = intercept + slope log t over the samples with t in [lo, hi].
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo < hi) || !(lo > 0.0) {
        return Err(Error::Domain(format!("bad window [{lo}, {hi}]")));
    }
    let mut pts = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            need: MIN_POINTS,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        t_lo: lo,
        t_hi: hi,
        slope,
        intercept,
        max_residual,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<_> = logspace(1.0, 1e3, 20)
            .into_iter()
            .map(|t| (t, 3.0 * t.powf(-0.75)))
            .collect();
        let f = fit_rate(&s, (1.0, 1e3)).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-10);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        let c: Vec<_> = s.iter().map(|&(t, _)| (t, 0.2)).collect();
        assert!(fit_rate(&c, (1.0, 1e3)).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_decade() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s: Vec<_> = logspace(10.0, 100.0, 12)
                .into_iter()
                .map(|t| (t, t.powf(-0.25) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
                .collect();
            let f = fit_rate(&s, (10.0, 100.0)).unwrap();
            assert!((f.slope + 0.25).abs() < 0.05, "{}", f.slope);
        }
    }

    #[test]
    fn errors() {
        let s: Vec<_> = (1..=5).map(|k| (k as f64, 1.0)).collect();
        assert_eq!(
            fit_rate(&s, (1.0, 5.0)),
            Err(Error::TooFewPoints { need: 6, got: 5 })
        );
        let mut s: Vec<_> = (1..=8).map(|k| (k as f64, 1.0)).collect();
        s[3].1 = 0.0;
        assert!(
            matches!(fit_rate(&s, (1.0, 8.0)), Err(Error::NonPositiveValue { t, .. }) if t == 4.0)
        );
        assert!(fit_rate(&s, (8.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_exponent(a in -2.0f64..2.0, c in 0.1f64..10.0) {
            let s: Vec<_> = logspace(2.0, 500.0, 9).into_iter().map(|t| (t, c * t.powf(a))).collect();
            let f = fit_rate(&s, (2.0, 500.0)).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-9);
            prop_assert!(f.max_residual < 1e-9);
        }
    }
}
