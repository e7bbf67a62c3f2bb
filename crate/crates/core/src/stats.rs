//! Small numeric helpers shared by the exact and Monte Carlo paths:
//! compensated summation, batch summaries and log-log least squares.

use serde::Serialize;

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
///
/// Terms are accumulated in the order they are added, so any reduction that
/// must be reproducible should feed terms in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Mean and unbiased sample variance (denominator `n - 1`; zero for one value).
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1.0))
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    assert_eq!(xs.len(), ys.len(), "x and y lengths differ");
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = compensated_sum(ys.iter().map(|y| (y - my) * (y - my)));
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fit `log y = intercept + slope * log x` over the points with `y > 0`.
///
/// Returns the fit together with the indices of the points that were
/// dropped because `y` was zero (or negative).
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<(LinearFit, Vec<usize>)> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    let mut dropped = Vec::new();
    for (idx, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if y > 0.0 && x > 0.0 {
            lx.push(x.ln());
            ly.push(y.ln());
        } else {
            dropped.push(idx);
        }
    }
    if lx.len() < 2 {
        return Err(Error::DegenerateFit(lx.len()));
    }
    Ok((least_squares(&lx, &ly)?, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive_on_cancellation() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(terms), 2.0);
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_slope() {
        let xs: Vec<f64> = (10..18).map(|e| 2f64.powi(e)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * x.powf(-1.0 / 6.0)).collect();
        let (fit, dropped) = log_log_fit(&xs, &ys).unwrap();
        assert!(dropped.is_empty());
        assert!((fit.slope + 1.0 / 6.0).abs() < 1e-12);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn zeros_are_dropped() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys = [0.0, 0.5, 0.25, 0.125];
        let (fit, dropped) = log_log_fit(&xs, &ys).unwrap();
        assert_eq!(dropped, vec![0]);
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            log_log_fit(&[1.0, 2.0], &[0.0, 1.0]),
            Err(Error::DegenerateFit(1))
        ));
    }

    #[test]
    fn sample_variance() {
        let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_and_variance(&[0.7]), (0.7, 0.0));
    }
}
