//! Log-log least squares for power laws `value = prefactor * eps^slope`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit<T> {
    pub slope: T,
    /// Natural log of the prefactor.
    pub intercept: T,
    pub r2: T,
}

impl<T: Scalar> PowerLawFit<T> {
    pub fn prefactor(&self) -> T {
        self.intercept.exp()
    }

    pub fn predict(&self, eps: T) -> T {
        (self.intercept + self.slope * eps.ln()).exp()
    }
}

/// Least-squares fit of `ln value` against `ln eps`.
pub fn scaling_exponent<T: Scalar>(series: &[(T, T)]) -> Result<PowerLawFit<T>> {
    if series.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", series.len())));
    }
    if series.iter().any(|&(e, v)| !(e > T::zero() && v > T::zero() && e.is_finite() && v.is_finite())) {
        return Err(Error::DegenerateFit("all entries must be positive and finite".into()));
    }
    let n = T::of_usize(series.len());
    let xs: Vec<T> = series.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<T> = series.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit("eps values do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: T = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > T::zero() { T::one() - sse / syy } else { T::one() };
    Ok(PowerLawFit { slope, intercept, r2 })
}

/// `n` log-spaced values from `hi` down to `lo`.
pub fn log_space_desc<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n)
        .map(|i| (a + (b - a) * T::of_usize(i) / T::of_usize(n - 1)).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn exact_power_laws() {
        let eps = log_space_desc(1e-3, 1e-1, 7);
        let lin: Vec<_> = eps.iter().map(|&e| (e, e)).collect();
        assert_abs_diff_eq!(scaling_exponent(&lin).unwrap().slope, 1.0, epsilon = 1e-10);
        let quad: Vec<_> = eps.iter().map(|&e| (e, 3.0 * e * e)).collect();
        let fit = scaling_exponent(&quad).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = crate::rng::stream(5, 0);
        let eps = log_space_desc(1e-3, 1e-1, 20);
        let s: Vec<_> = eps
            .iter()
            .map(|&e| (e, f64::powf(e, 2.5) * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0))))
            .collect();
        assert_abs_diff_eq!(scaling_exponent(&s).unwrap().slope, 2.5, epsilon = 0.02);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(scaling_exponent(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(scaling_exponent(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(Error::DegenerateFit(_))));
        assert!(matches!(scaling_exponent(&[(1.0, 0.0), (2.0, 2.0), (3.0, 3.0)]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space_desc(1e-3f64, 1e-1, 3);
        assert_abs_diff_eq!(v[0], 1e-1, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1e-2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 1e-3, epsilon = 1e-15);
    }
}
