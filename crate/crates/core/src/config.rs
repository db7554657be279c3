use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

/// A problem instance: `k` attributes with a common number of levels `v`,
/// where every alternative shows exactly `s` of the attributes.
///
/// The model holds main effects plus interactions up to order four
/// (third-order interactions), so order-q blocks exist for q ≤ min(4, k)
/// and are estimable only when s ≥ q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignConfig {
    k: usize,
    s: usize,
    v: usize,
}

impl DesignConfig {
    pub fn new(k: usize, s: usize, v: usize) -> Result<Self> {
        if k < 1 {
            return Err(DesignError::InvalidConfig("need at least one attribute".into()));
        }
        if s < 1 || s > k {
            return Err(DesignError::InvalidConfig(format!(
                "profile strength S={s} must satisfy 1 <= S <= K={k}"
            )));
        }
        if v < 2 {
            return Err(DesignError::InvalidConfig(format!(
                "need at least two levels per attribute, got v={v}"
            )));
        }
        Ok(Self { k, s, v })
    }

    /// Full profiles: every attribute is shown.
    pub fn full_profile(k: usize, v: usize) -> Result<Self> {
        Self::new(k, k, v)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn v(&self) -> usize {
        self.v
    }

    /// Highest interaction order present in the model: min(4, K).
    pub fn max_order(&self) -> usize {
        self.k.min(4)
    }

    /// Orders with a nonzero parameter block.
    pub fn active_orders(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.max_order()
    }

    /// Order-q effects are estimable iff the block exists (q <= K) and some
    /// pair of partial profiles can differ in q shown attributes (q <= S).
    pub fn identifiable(&self, order: usize) -> bool {
        (1..=self.max_order()).contains(&order) && self.s >= order
    }

    /// Every order present in the model is estimable.
    pub fn fully_identifiable(&self) -> bool {
        self.s >= self.max_order()
    }

    /// Number of order-q blocks, C(K, q).
    pub fn block_count(&self, order: usize) -> usize {
        binomial(self.k, order) as usize
    }

    /// Side length of one order-q block, (v-1)^q.
    pub fn block_dim(&self, order: usize) -> usize {
        (self.v - 1).pow(order as u32)
    }

    /// Parameter count of order q: C(K, q) (v-1)^q, zero when q > K.
    pub fn param_dim(&self, order: usize) -> usize {
        if order > self.k {
            0
        } else {
            self.block_count(order) * self.block_dim(order)
        }
    }

    /// Total parameter dimension p.
    pub fn total_params(&self) -> usize {
        self.active_orders().map(|q| self.param_dim(q)).sum()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for j in 0..k {
        out = out * (n - j) as u128 / (j + 1) as u128;
    }
    out
}
