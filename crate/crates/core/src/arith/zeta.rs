use serde::Serialize;

use super::check_k;
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// A truncated value with an absolute bound on the truncation error: the
/// exact quantity lies in `[value - tail_bound, value + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl CertifiedValue {
    pub fn lower(&self) -> f64 {
        self.value - self.tail_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// ζ(k) as the partial sum over `n <= terms`, with the integral tail bound
/// `terms^(1-k) / (k-1)`.
pub fn zeta_k(k: u32, terms: u64) -> Result<CertifiedValue> {
    check_k(k)?;
    if terms == 0 {
        return Err(Error::param("terms", "must be at least 1"));
    }
    let exp = -(k.min(i32::MAX as u32) as i32);
    // smallest terms first
    let mut sum = CompensatedSum::new();
    for n in (1..=terms).rev() {
        sum.add((n as f64).powi(exp));
    }
    let tail_bound = (terms as f64).powi(exp + 1) / (k - 1) as f64;
    Ok(CertifiedValue {
        value: sum.value(),
        tail_bound,
    })
}
