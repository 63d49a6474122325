use crate::error::{Error, Result};

/// Smallest sample count accepted by [`hpd_interval`].
pub const MIN_HPD_SAMPLES: usize = 100;

/// Shortest interval holding `⌈mass·N⌉` of the sorted samples. Ties go to
/// the leftmost window.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::param(format!("HPD mass must lie in (0, 1), got {mass}")));
    }
    if samples.len() < MIN_HPD_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_HPD_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::param("HPD samples contain NaN"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = 0;
    for i in 1..=n - k {
        if s[i + k - 1] - s[i] < s[best + k - 1] - s[best] {
            best = i;
        }
    }
    Ok((s[best], s[best + k - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn uniform_grid_takes_leftmost_window() {
        let grid: Vec<f64> = (0..1000).map(f64::from).collect();
        let (lo, hi) = hpd_interval(&grid, 0.5).unwrap();
        assert_eq!((lo, hi), (0.0, 499.0));
    }

    #[test]
    fn standard_normal_is_about_plus_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (lo, hi) = hpd_interval(&s, 0.682).unwrap();
        assert!((lo + 1.0).abs() < 0.02 && (hi - 1.0).abs() < 0.02, "{lo} {hi}");
    }

    #[test]
    fn point_mass_has_zero_width() {
        let (lo, hi) = hpd_interval(&[2.5; 150], 0.682).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(hpd_interval(&[1.0; 99], 0.5), Err(Error::InsufficientSamples { needed: 100, got: 99 })));
        assert!(hpd_interval(&[1.0; 200], 1.0).is_err());
        assert!(hpd_interval(&[1.0; 200], 0.0).is_err());
    }
}
