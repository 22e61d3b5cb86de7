//! Good-Turing count re-estimation, r* = (r + 1) N_{r+1} / N_r.
//!
//! N0 here is the total mass sum of i * N_i, so the unseen estimate
//! r*(0) = N_1 / N0 is the share of the mass held by singletons.

use std::collections::BTreeMap;

use crate::counts::CountsOfCounts;
use crate::error::{Error, Result};

/// Highest raw count that gets discounted by default.
pub const DEFAULT_GT_MAX: u64 = 5;

/// Adjusted count for `r`. Counts above `gt_max`, or whose N_{r+1} is zero,
/// pass through unchanged.
pub fn good_turing_adjust(coc: &CountsOfCounts, r: u64, gt_max: u64) -> Result<f64> {
    if r == 0 {
        let n0 = coc.n0();
        if n0 == 0 {
            return Ok(0.0);
        }
        return Ok(coc.n(1) as f64 / n0 as f64);
    }
    if r > gt_max {
        return Ok(r as f64);
    }
    let next = coc.n(r + 1);
    if next == 0 {
        return Ok(r as f64);
    }
    let nr = coc.n(r);
    if nr == 0 {
        return Err(Error::UndefinedHistogram { r });
    }
    Ok((r + 1) as f64 * next as f64 / nr as f64)
}

/// The bare formula with no cutoff: `None` when N_r is zero, and zero at
/// the top of the histogram where N_{r+1} is zero.
pub fn turing_estimate(coc: &CountsOfCounts, r: u64) -> Option<f64> {
    let nr = coc.n(r);
    if nr == 0 {
        return None;
    }
    Some((r + 1) as f64 * coc.n(r + 1) as f64 / nr as f64)
}

/// Share of an order's mass held back for unseen events: N_1 / N0, kept in
/// `[0.5 / N0, 0.5]` so that neither side of the split is ever empty.
pub fn reserved_unseen_mass(coc: &CountsOfCounts) -> f64 {
    let n0 = coc.n0() as f64;
    if n0 == 0.0 {
        return 0.5;
    }
    (coc.n(1) as f64 / n0).clamp(0.5 / n0, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountTable {
    adjusted: BTreeMap<u64, f64>,
    unseen_mass: f64,
    gt_max: u64,
}

impl DiscountTable {
    /// Adjusted counts for 1 <= r <= gt_max. An adjusted count that does not
    /// discount (r* >= r) falls back to r.
    pub fn new(coc: &CountsOfCounts, gt_max: u64) -> Self {
        let mut adjusted = BTreeMap::new();
        for (r, _) in coc.iter().take_while(|&(r, _)| r <= gt_max) {
            let star = good_turing_adjust(coc, r, gt_max).expect("N_r > 0 for observed r");
            adjusted.insert(r, if star >= r as f64 { r as f64 } else { star });
        }
        DiscountTable {
            adjusted,
            unseen_mass: reserved_unseen_mass(coc),
            gt_max,
        }
    }

    pub fn adjust(&self, r: u64) -> f64 {
        self.adjusted.get(&r).copied().unwrap_or(r as f64)
    }

    pub fn unseen_mass(&self) -> f64 {
        self.unseen_mass
    }

    pub fn gt_max(&self) -> u64 {
        self.gt_max
    }
}
