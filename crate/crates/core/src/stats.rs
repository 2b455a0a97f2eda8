//! Small statistical helpers: Kolmogorov–Smirnov distances, order statistics
//! and moment summaries.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and a
/// continuous CDF. The sample is sorted in place.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    assert!(!sample.is_empty());
    sample.sort_by(|a, b| a.total_cmp(b));
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance. Both samples are sorted in place.
/// Ties across samples are handled by advancing through equal values together.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS distance at the level whose
/// Kolmogorov constant is `k` (1.36 for 5%, 1.63 for 1%, 1.95 for 0.1%).
pub fn ks_two_sample_critical(k: f64, na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    k * ((na + nb) / (na * nb)).sqrt()
}

/// Asymptotic Kolmogorov tail probability `P(K > lambda)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        total += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

pub fn normal_cdf(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    let dist = Normal::new(mean, sd).expect("valid normal");
    move |x| dist.cdf(x)
}

pub fn chi_square_cdf(dof: f64) -> impl Fn(f64) -> f64 {
    let dist = ChiSquared::new(dof).expect("valid chi-square");
    move |x| dist.cdf(x)
}

/// Linear-interpolation quantile (type 7) of an unsorted slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let (a, b) = (v[lo], v[hi]);
    // endpoints may be infinite (log of a zero norm)
    if lo == hi || a == b || a == f64::NEG_INFINITY {
        return a;
    }
    if b == f64::INFINITY {
        return b;
    }
    a + (pos - lo as f64) * (b - a)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Pairwise sum, stable under reordering of equal-sized halves.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and unbiased sample variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0).max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ks_uniform_grid() {
        let mut s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert_relative_eq!(ks_one_sample(&mut s, |x| x.clamp(0.0, 1.0)), 0.005, epsilon = 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_and_shifted() {
        let mut a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let mut b = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut b), 0.0);
        let mut c: Vec<f64> = (0..50).map(|i| i as f64 + 10.0).collect();
        assert_relative_eq!(ks_two_sample(&mut a, &mut c), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn ks_two_sample_ties() {
        let mut a = vec![0.0, 0.0, 1.0, 1.0];
        let mut b = vec![0.0, 1.0, 1.0, 1.0];
        assert_relative_eq!(ks_two_sample(&mut a, &mut b), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn kolmogorov_tail_known() {
        assert_relative_eq!(kolmogorov_tail(1.358), 0.05, epsilon = 1e-3);
        assert_relative_eq!(kolmogorov_tail(1.628), 0.01, epsilon = 1e-3);
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_relative_eq!(median(&v), 2.5);
        assert_relative_eq!(quantile(&v, 0.0), 1.0);
        assert_relative_eq!(quantile(&v, 1.0), 4.0);
        let w = [f64::NEG_INFINITY, 0.5, f64::NEG_INFINITY, 1.0];
        assert_eq!(median(&w), f64::NEG_INFINITY);
        assert_relative_eq!(quantile(&w, 5.0 / 6.0), 0.75);
    }

    #[test]
    fn cdfs() {
        assert_relative_eq!(normal_cdf(0.0, 1.0)(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(chi_square_cdf(2.0)(2.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }
}
