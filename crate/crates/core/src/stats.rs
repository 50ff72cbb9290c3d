//! Small summary statistics shared across modules.

/// Arithmetic mean, accumulated as offsets from the first element so that a
/// constant series returns that constant exactly.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    match xs.first() {
        None => 0.0,
        Some(&x0) => x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64,
    }
}

/// Sample (n − 1) standard deviation.
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Population standard deviation.
pub(crate) fn population_sd(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_exact() {
        assert_eq!(mean(&[0.05; 24]), 0.05);
        assert_eq!(sample_sd(&[0.7; 3]), 0.0);
        assert_eq!(population_sd(&[0.1; 7]), 0.0);
    }

    #[test]
    fn known_values() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(sample_sd(&[1.0, 3.0]), 2f64.sqrt());
        assert_eq!(population_sd(&[100.0, 300.0]), 100.0);
    }
}
