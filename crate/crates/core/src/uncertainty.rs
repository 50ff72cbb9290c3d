//! Synthetic day profiles drawn from interval uncertainty sets built on
//! historical data.
//!
//! Each state gets a data-spread interval `mean ± k·sd` of the historical
//! values at that hour. The day as a whole is held to a budget of
//! uncertainty on its mean value, stated twice: from the hourly statistics
//! (`Σ mean_s ± k·Σ sd_s`, averaged over states) and from the spread of
//! whole historical days (`mean of day-means ± k·sd of day-means`). A
//! synthetic day must satisfy the per-state intervals and both budgets.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd};

const BUDGET_TOL: f64 = 1e-12;
const MAX_PROJECTION_PASSES: usize = 50;

/// Normalized multipliers indexed `[day][state]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalSeries {
    values: Vec<Vec<f64>>,
    month: Option<String>,
}

impl HistoricalSeries {
    pub fn new(values: Vec<Vec<f64>>, month: Option<String>) -> Result<Self> {
        let states = values.first().map_or(0, Vec::len);
        if values.iter().any(|day| day.len() != states) {
            return Err(Error::Input("historical days have differing state counts".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("historical series contains non-finite values".into()));
        }
        Ok(Self { values, month })
    }

    /// One row per day, one column per state; a non-numeric first row is a header.
    pub fn from_csv<R: Read>(reader: R, month: Option<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().filter(|f| !f.is_empty()).map(str::parse).collect();
            match parsed {
                Ok(day) if !day.is_empty() => values.push(day),
                Ok(_) => {}
                Err(_) if row == 0 => {}
                Err(_) => {
                    return Err(Error::Input(format!(
                        "historical data row {}: non-numeric value",
                        row + 1
                    )))
                }
            }
        }
        Self::new(values, month)
    }

    pub fn days(&self) -> usize {
        self.values.len()
    }

    pub fn states(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn month(&self) -> Option<&str> {
        self.month.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyEnvelope {
    /// Historical mean per state.
    pub mean: Vec<f64>,
    /// Data-spread lower bound per state (clipped at zero).
    pub lower: Vec<f64>,
    /// Data-spread upper bound per state.
    pub upper: Vec<f64>,
    /// Hourly-basis budget bounds per state; their average bounds the day mean.
    pub mean_lower: Vec<f64>,
    pub mean_upper: Vec<f64>,
    /// Daily-basis budget on the day mean.
    pub daily_lower: f64,
    pub daily_upper: f64,
    pub k: f64,
}

impl UncertaintyEnvelope {
    pub fn states(&self) -> usize {
        self.mean.len()
    }

    /// Interval the synthetic day mean has to land in.
    pub fn day_mean_bounds(&self) -> (f64, f64) {
        let n = self.states() as f64;
        let lo = [
            self.mean_lower.iter().sum::<f64>() / n,
            self.daily_lower,
            self.lower.iter().sum::<f64>() / n,
        ];
        let hi = [
            self.mean_upper.iter().sum::<f64>() / n,
            self.daily_upper,
            self.upper.iter().sum::<f64>() / n,
        ];
        (
            lo.into_iter().fold(f64::NEG_INFINITY, f64::max),
            hi.into_iter().fold(f64::INFINITY, f64::min),
        )
    }

    /// Whether `day` satisfies the per-state intervals and both budgets.
    pub fn contains(&self, day: &[f64], tol: f64) -> bool {
        if day.len() != self.states() {
            return false;
        }
        let per_state = day
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol);
        let (lo, hi) = self.day_mean_bounds();
        let m = mean(day);
        per_state && m >= lo - tol && m <= hi + tol
    }
}

pub fn build_envelope(h: &HistoricalSeries, k: f64) -> Result<UncertaintyEnvelope> {
    if h.days() < 2 || h.states() == 0 {
        return Err(Error::Input(format!(
            "need at least 2 historical days, got {}",
            h.days()
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Input(format!("spread coefficient must be positive, got {k}")));
    }
    let states = h.states();
    let mut env = UncertaintyEnvelope {
        mean: Vec::with_capacity(states),
        lower: Vec::with_capacity(states),
        upper: Vec::with_capacity(states),
        mean_lower: Vec::with_capacity(states),
        mean_upper: Vec::with_capacity(states),
        daily_lower: 0.0,
        daily_upper: 0.0,
        k,
    };
    for s in 0..states {
        let column: Vec<f64> = h.values.iter().map(|day| day[s]).collect();
        let m = mean(&column);
        let sd = sample_sd(&column);
        env.mean.push(m);
        env.lower.push((m - k * sd).max(0.0));
        env.upper.push(m + k * sd);
        env.mean_lower.push(m - k * sd);
        env.mean_upper.push(m + k * sd);
    }
    let day_means: Vec<f64> = h.values.iter().map(|d| mean(d)).collect();
    let dm = mean(&day_means);
    let dsd = sample_sd(&day_means);
    env.daily_lower = dm - k * dsd;
    env.daily_upper = dm + k * dsd;
    Ok(env)
}

/// Draw one synthetic day. Deterministic for a given `(env, seed)`.
pub fn synthesize_day(env: &UncertaintyEnvelope, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut day: Vec<f64> = env
        .lower
        .iter()
        .zip(&env.upper)
        .map(|(&lo, &hi)| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    project_day(env, &mut day)?;
    Ok(day)
}

/// Pull deviations from the hourly mean in proportionally until the day
/// mean falls inside the budget.
fn project_day(env: &UncertaintyEnvelope, day: &mut [f64]) -> Result<()> {
    let (lo, hi) = env.day_mean_bounds();
    if lo > hi + BUDGET_TOL {
        return Err(Error::Envelope(format!(
            "day-mean budget is empty: [{lo:.6}, {hi:.6}]"
        )));
    }
    let centre = mean(&env.mean);
    for _ in 0..MAX_PROJECTION_PASSES {
        let m = mean(day);
        if m >= lo - BUDGET_TOL && m <= hi + BUDGET_TOL {
            return Ok(());
        }
        let target = if m < lo { lo } else { hi };
        let scale = if (m - centre).abs() > f64::EPSILON {
            ((target - centre) / (m - centre)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        for (s, x) in day.iter_mut().enumerate() {
            let pulled = env.mean[s] + scale * (*x - env.mean[s]);
            *x = pulled.clamp(env.lower[s], env.upper[s]);
        }
    }
    let m = mean(day);
    if m >= lo - BUDGET_TOL && m <= hi + BUDGET_TOL {
        Ok(())
    } else {
        Err(Error::Envelope(format!(
            "no day inside the per-state spread meets the budget [{lo:.6}, {hi:.6}]"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(days: &[&[f64]]) -> HistoricalSeries {
        HistoricalSeries::new(days.iter().map(|d| d.to_vec()).collect(), None).unwrap()
    }

    #[test]
    fn identical_days_collapse_envelope() {
        let day = [0.0, 0.2, 0.7, 0.4];
        let h = series(&[&day, &day, &day]);
        let env = build_envelope(&h, 1.0).unwrap();
        assert_eq!(env.lower, env.upper);
        for seed in 0..20 {
            assert_eq!(synthesize_day(&env, seed).unwrap(), day.to_vec());
        }
    }

    #[test]
    fn two_day_bounds_match_direct_statistics() {
        let h = series(&[&[0.4], &[0.6]]);
        let env = build_envelope(&h, 1.0).unwrap();
        // mean 0.5, sample sd sqrt(((0.1)^2 + (0.1)^2) / 1)
        let sd = (0.02f64).sqrt();
        assert!((env.lower[0] - (0.5 - sd)).abs() < 1e-12);
        assert!((env.upper[0] - (0.5 + sd)).abs() < 1e-12);
    }

    #[test]
    fn spread_width_is_two_k_sigma() {
        let days: Vec<Vec<f64>> = (0..30)
            .map(|d| (0..24).map(|s| 0.5 + 0.3 * (((d * 7 + s * 3) % 11) as f64 / 11.0 - 0.5)).collect())
            .collect();
        let h = HistoricalSeries::new(days.clone(), Some("jan".into())).unwrap();
        for k in [0.5, 1.0, 2.0] {
            let env = build_envelope(&h, k).unwrap();
            for s in 0..24 {
                let column: Vec<f64> = days.iter().map(|d| d[s]).collect();
                let width = env.upper[s] - env.lower[s];
                assert!((width - 2.0 * k * sample_sd(&column)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_short_series_and_bad_k() {
        let one = series(&[&[0.1, 0.2]]);
        assert!(matches!(build_envelope(&one, 1.0), Err(Error::Input(_))));
        let two = series(&[&[0.1], &[0.2]]);
        assert!(build_envelope(&two, 0.0).is_err());
        assert!(HistoricalSeries::new(vec![vec![0.1, 0.2], vec![0.3]], None).is_err());
    }

    #[test]
    fn night_states_stay_dark() {
        let h = series(&[&[0.0, 0.5, 0.0], &[0.0, 0.8, 0.0], &[0.0, 0.3, 0.0]]);
        let env = build_envelope(&h, 1.0).unwrap();
        for seed in 0..200 {
            let d = synthesize_day(&env, seed).unwrap();
            assert_eq!(d[0], 0.0);
            assert_eq!(d[2], 0.0);
        }
    }

    #[test]
    fn infeasible_envelope_is_reported() {
        let h = series(&[&[0.4, 0.5], &[0.6, 0.7]]);
        let mut env = build_envelope(&h, 1.0).unwrap();
        env.daily_lower = 0.9;
        env.daily_upper = 0.95;
        assert!(matches!(synthesize_day(&env, 3), Err(Error::Envelope(_))));
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let h = series(&[&[0.1, 0.5, 0.9], &[0.3, 0.4, 0.6], &[0.2, 0.7, 0.8]]);
        let env = build_envelope(&h, 1.0).unwrap();
        assert_eq!(synthesize_day(&env, 11).unwrap(), synthesize_day(&env, 11).unwrap());
        assert_ne!(synthesize_day(&env, 11).unwrap(), synthesize_day(&env, 12).unwrap());
    }

    #[test]
    fn csv_with_header_row() {
        let text = "h0,h1,h2\n0.1,0.2,0.3\n0.2,0.3,0.4\n";
        let h = HistoricalSeries::from_csv(text.as_bytes(), None).unwrap();
        assert_eq!((h.days(), h.states()), (2, 3));
        let bad = "0.1,0.2\nx,0.3\n";
        assert!(HistoricalSeries::from_csv(bad.as_bytes(), None).is_err());
    }
}
