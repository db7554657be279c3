//! Closed-form information coefficients of invariant designs, the block
//! representation of their information matrices, and the dense brute-force
//! construction used to validate both.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coding::{kron_power, oneway_info, oneway_log_det};
use crate::config::DesignConfig;
use crate::error::{DesignError, Result};
use crate::orbits::{enumerate_pairs, orbit_size, regression_vector};

/// Information coefficients h_1..h_4 of a design, one scalar per interaction
/// order. Entries for orders absent from the model (q > K) stay zero and are
/// ignored by every consumer; a zero on an active order marks a singular
/// block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HVector {
    h: [f64; 4],
}

impl HVector {
    pub fn get(&self, order: usize) -> f64 {
        self.h[order - 1]
    }

    pub(crate) fn set(&mut self, order: usize, value: f64) {
        self.h[order - 1] = value;
    }

    pub(crate) fn zero() -> Self {
        Self { h: [0.0; 4] }
    }

    /// First active order whose block is singular, if any.
    pub fn singular_order(&self, config: &DesignConfig) -> Option<usize> {
        config.active_orders().find(|&q| self.get(q) <= 0.0)
    }
}

// The lambda polynomials of the depth-d uniform design. Integer arithmetic
// up to the single final division keeps exact ties exact.
pub(crate) fn lambda1(s: i128, v: i128, d: i128) -> i128 {
    (d - 1) * (d - 2) * (v * v - 3 * v + 3)
        + 3 * (s - d) * (d - 1) * (v - 1) * (v - 2)
        + 3 * (s - d) * (s - d - 1) * (v - 1) * (v - 1)
}

pub(crate) fn lambda2(s: i128, v: i128, d: i128) -> i128 {
    (d - 1) * (d - 2) * (d - 3) * (v * v * v - 4 * v * v + 6 * v - 4)
        + 4 * (s - d) * (d - 1) * (d - 2) * (v * v - 3 * v + 3) * (v - 1)
        + 6 * (s - d) * (s - d - 1) * (d - 1) * (v - 1) * (v - 1) * (v - 2)
        + 4 * (s - d) * (s - d - 1) * (s - d - 2) * (v - 1) * (v - 1) * (v - 1)
}

pub(crate) fn h2_core(s: i128, v: i128, d: i128) -> i128 {
    (d - 1) * (v - 2) + 2 * (s - d) * (v - 1)
}

/// Integer numerator of h_q(d); the denominator depends on (K, v, q) only,
/// so argmax comparisons over d are exact.
pub(crate) fn h_numerator(config: &DesignConfig, order: usize, d: usize) -> i128 {
    let (s, v, d) = (config.s() as i128, config.v() as i128, d as i128);
    match order {
        1 => d,
        2 => d * h2_core(s, v, d),
        3 => d * lambda1(s, v, d),
        4 => d * lambda2(s, v, d),
        _ => unreachable!("order out of range"),
    }
}

pub(crate) fn h_denominator(config: &DesignConfig, order: usize) -> i128 {
    let (k, v) = (config.k() as i128, config.v() as i128);
    match order {
        1 => k,
        2 => 2 * v * k * (k - 1),
        3 => 4 * v * v * k * (k - 1) * (k - 2),
        4 => 8 * v * v * v * k * (k - 1) * (k - 2) * (k - 3),
        _ => unreachable!("order out of range"),
    }
}

/// Information coefficients of the uniform design on comparison depth `d`.
pub fn h_uniform(config: &DesignConfig, d: usize) -> HVector {
    assert!(
        d >= 1 && d <= config.s(),
        "depth {d} outside 1..={}",
        config.s()
    );
    let mut h = HVector::zero();
    for q in config.active_orders() {
        h.set(
            q,
            h_numerator(config, q, d) as f64 / h_denominator(config, q) as f64,
        );
    }
    h
}

/// A design supported on comparison depths, given by weights w_1..w_S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDesign {
    config: DesignConfig,
    weights: Vec<f64>,
}

impl InvariantDesign {
    pub fn new(config: DesignConfig, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != config.s() {
            return Err(DesignError::InvalidWeights(format!(
                "expected one weight per depth 1..={}, got {}",
                config.s(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(DesignError::InvalidWeights(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DesignError::InvalidWeights(format!(
                "weights must sum to 1 within 1e-12, got {sum}"
            )));
        }
        Ok(Self { config, weights })
    }

    /// All mass on a single comparison depth.
    pub fn point_mass(config: DesignConfig, d: usize) -> Result<Self> {
        if d < 1 || d > config.s() {
            return Err(DesignError::InvalidWeights(format!(
                "depth {d} outside 1..={}",
                config.s()
            )));
        }
        let mut weights = vec![0.0; config.s()];
        weights[d - 1] = 1.0;
        Ok(Self { config, weights })
    }

    /// Uniform on every comparison (all pairs of distinct alternatives):
    /// w_d proportional to the orbit size N_d over d = 1..=S.
    pub fn uniform_on_all(config: DesignConfig) -> Self {
        let sizes: Vec<u128> = (1..=config.s()).map(|d| orbit_size(&config, d)).collect();
        let total: u128 = sizes.iter().sum();
        let weights = sizes.iter().map(|&n| n as f64 / total as f64).collect();
        Self { config, weights }
    }

    pub fn config(&self) -> &DesignConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, d: usize) -> f64 {
        self.weights[d - 1]
    }

    /// Depths carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (1..=self.config.s())
            .filter(|&d| self.weight(d) > 0.0)
            .collect()
    }

    pub fn h(&self) -> HVector {
        let mut h = HVector::zero();
        for q in self.config.active_orders() {
            let mix: f64 = (1..=self.config.s())
                .map(|d| self.weight(d) * h_uniform(&self.config, d).get(q))
                .sum();
            h.set(q, mix);
        }
        h
    }
}

/// Mixture coefficients h_q(design) = sum_d w_d h_q(d).
pub fn h_mix(design: &InvariantDesign) -> HVector {
    design.h()
}

/// Block form of the information matrix of an invariant design: for each
/// order q the matrix holds C(K, q) diagonal copies of h_q M^{⊗q}. The dense
/// matrix is only ever materialized at oracle scale.
#[derive(Debug, Clone)]
pub struct BlockInfo {
    config: DesignConfig,
    h: HVector,
}

impl BlockInfo {
    pub fn from_design(design: &InvariantDesign) -> Self {
        Self { config: *design.config(), h: design.h() }
    }

    pub fn from_depth(config: DesignConfig, d: usize) -> Self {
        Self { config, h: h_uniform(&config, d) }
    }

    pub fn from_h(config: DesignConfig, h: HVector) -> Self {
        Self { config, h }
    }

    pub fn config(&self) -> &DesignConfig {
        &self.config
    }

    pub fn h(&self) -> &HVector {
        &self.h
    }

    /// log det of the information matrix:
    /// sum_q [ p_q log h_q + C(K,q) q (v-1)^{q-1} log det M ].
    pub fn log_det(&self) -> Result<f64> {
        if let Some(order) = self.h.singular_order(&self.config) {
            return Err(DesignError::Singular { order });
        }
        let log_det_m = oneway_log_det(self.config.v());
        let mut total = 0.0;
        for q in self.config.active_orders() {
            let p_q = self.config.param_dim(q) as f64;
            // det(M^{⊗q}) = det(M)^{q (v-1)^{q-1}}
            let kron_exp = (q * self.config.block_dim(q) / (self.config.v() - 1)) as f64;
            total += p_q * self.h.get(q).ln()
                + self.config.block_count(q) as f64 * kron_exp * log_det_m;
        }
        Ok(total)
    }

    /// Dense p x p expansion (oracle scale only).
    pub fn dense(&self) -> DMatrix<f64> {
        let p = self.config.total_params();
        let mut out = DMatrix::zeros(p, p);
        let m = oneway_info(self.config.v()).m;
        let mut offset = 0;
        for q in self.config.active_orders() {
            let block = kron_power(&m, q) * self.h.get(q);
            let dim = self.config.block_dim(q);
            for _ in 0..self.config.block_count(q) {
                out.view_mut((offset, offset), (dim, dim)).copy_from(&block);
                offset += dim;
            }
        }
        out
    }
}

/// Dense information matrix straight from the definition: the weighted
/// average over supported orbits of the outer products of regression-vector
/// differences. Fully independent of the closed forms above.
pub fn brute_force_info(
    config: &DesignConfig,
    design: &InvariantDesign,
    cap: u128,
) -> Result<DMatrix<f64>> {
    let p = config.total_params();
    let mut total = DMatrix::zeros(p, p);
    for d in design.support() {
        let orbit = enumerate_pairs(config, d, cap)?;
        let n = orbit.pairs.len();
        let mut diffs = DMatrix::zeros(n, p);
        for (row, (i, j)) in orbit.pairs.iter().enumerate() {
            let z = regression_vector(i, config) - regression_vector(j, config);
            diffs.row_mut(row).copy_from(&z.transpose());
        }
        total += diffs.tr_mul(&diffs) * (design.weight(d) / n as f64);
    }
    Ok(total)
}

/// Entrywise deviation between a dense information matrix and a block form,
/// split into the per-order diagonal blocks and everything outside them.
#[derive(Debug, Clone, Copy)]
pub struct BlockDeviation {
    /// max |dense - h_q M^{⊗q}| over the order-q diagonal blocks
    pub per_order: [f64; 4],
    /// max |dense| outside all diagonal blocks
    pub off_diagonal: f64,
}

impl BlockDeviation {
    pub fn max(&self) -> f64 {
        self.per_order
            .iter()
            .copied()
            .fold(self.off_diagonal, f64::max)
    }

    /// First order whose block deviation exceeds `tol`, if any.
    pub fn worst_order_above(&self, tol: f64) -> Option<usize> {
        (1..=4).find(|&q| self.per_order[q - 1] > tol)
    }
}

pub fn block_deviation(dense: &DMatrix<f64>, reference: &BlockInfo) -> BlockDeviation {
    let config = reference.config();
    let m = oneway_info(config.v()).m;
    let mut per_order = [0.0f64; 4];
    let mut remainder = dense.clone();
    let mut offset = 0;
    for q in config.active_orders() {
        let template = kron_power(&m, q) * reference.h().get(q);
        let dim = config.block_dim(q);
        for _ in 0..config.block_count(q) {
            let block = dense.view((offset, offset), (dim, dim));
            let dev = (block - &template).amax();
            per_order[q - 1] = per_order[q - 1].max(dev);
            remainder
                .view_mut((offset, offset), (dim, dim))
                .fill(0.0);
            offset += dim;
        }
    }
    let off_diagonal = if remainder.is_empty() { 0.0 } else { remainder.amax() };
    BlockDeviation { per_order, off_diagonal }
}
