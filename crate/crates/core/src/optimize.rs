//! Optimal comparison depths per effect block, and D-optimal depth weights
//! for the whole parameter vector.
//!
//! The objective g(w) = sum_q p_q log h_q(w) is concave over the weight
//! simplex and an optimum supported on at most four depths always exists, so
//! the optimizer enumerates every depth subset of size <= 4 and maximizes on
//! each face with a damped Newton step in the reduced coordinates. The
//! winner must pass the equivalence certificate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::DesignConfig;
use crate::error::{DesignError, Result};
use crate::info::{h_numerator, h_uniform, HVector, InvariantDesign};
use crate::variance::{kw_certificate, KwReport, DEFAULT_KW_TOLERANCE};

/// Weights below this are treated as numerically zero and pruned.
pub const WEIGHT_PRUNE_THRESHOLD: f64 = 1e-9;

/// Maximizing depths of one effect order under depth-uniform designs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderOptimum {
    pub order: usize,
    pub identifiable: bool,
    /// Every depth attaining max_d h_q(d); empty when unidentifiable.
    /// Ties are exact: the numerators are integers over a shared denominator.
    pub best_depths: Vec<usize>,
}

impl OrderOptimum {
    pub fn tied(&self) -> bool {
        self.best_depths.len() > 1
    }
}

/// Per-order optimal depths for a configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDepthResult {
    pub config: DesignConfig,
    pub per_order: Vec<OrderOptimum>,
}

impl BlockDepthResult {
    pub fn order(&self, q: usize) -> &OrderOptimum {
        &self.per_order[q - 1]
    }

    /// h value attained by the maximizing depths of order q.
    pub fn best_h(&self, q: usize) -> Option<f64> {
        let best = self.per_order[q - 1].best_depths.first()?;
        Some(h_uniform(&self.config, *best).get(q))
    }
}

/// Scan h_q(d) over d = 1..=S for every order, comparing exact integer
/// numerators so ties are reported exactly.
pub fn best_depth_per_block(config: &DesignConfig) -> BlockDepthResult {
    let mut per_order = Vec::with_capacity(4);
    for q in 1..=4 {
        if q > config.max_order() || !config.identifiable(q) {
            per_order.push(OrderOptimum { order: q, identifiable: false, best_depths: vec![] });
            continue;
        }
        let nums: Vec<i128> = (1..=config.s()).map(|d| h_numerator(config, q, d)).collect();
        let max = *nums.iter().max().expect("S >= 1");
        if max <= 0 {
            per_order.push(OrderOptimum { order: q, identifiable: false, best_depths: vec![] });
            continue;
        }
        let best_depths = (1..=config.s()).filter(|&d| nums[d - 1] == max).collect();
        per_order.push(OrderOptimum { order: q, identifiable: true, best_depths });
    }
    BlockDepthResult { config: *config, per_order }
}

/// A certified D-optimal design for the full parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalDesignReport {
    pub config: DesignConfig,
    pub design: InvariantDesign,
    /// sum_q p_q log h_q at the optimum.
    pub objective: f64,
    /// (depth, weight) over the support, ascending by depth.
    pub support: Vec<(usize, f64)>,
    pub kw: KwReport,
}

/// Objective sum_q p_q log h_q, infinite blocks rejected.
pub fn objective(config: &DesignConfig, h: &HVector) -> Result<f64> {
    if let Some(order) = h.singular_order(config) {
        return Err(DesignError::Singular { order });
    }
    Ok(config
        .active_orders()
        .map(|q| config.param_dim(q) as f64 * h.get(q).ln())
        .sum())
}

/// D-efficiency of a design against a reference on the same configuration:
/// exp((g(design) - g(reference)) / p).
pub fn d_efficiency(design: &InvariantDesign, reference: &InvariantDesign) -> Result<f64> {
    if design.config() != reference.config() {
        return Err(DesignError::ConfigMismatch);
    }
    let config = design.config();
    let g1 = objective(config, &design.h())?;
    let g2 = objective(config, &reference.h())?;
    Ok(((g1 - g2) / config.total_params() as f64).exp())
}

/// Maximize g over the simplex of depth weights and certify the result.
pub fn optimize_weights(config: &DesignConfig, tol: f64) -> Result<OptimalDesignReport> {
    optimize_weights_seeded(config, tol, None)
}

/// As `optimize_weights`, but with randomized inner starting points when a
/// seed is given (the default starts every face at its barycenter). Used to
/// confirm that restarts land on the same optimum of the concave objective.
pub fn optimize_weights_seeded(
    config: &DesignConfig,
    tol: f64,
    seed: Option<u64>,
) -> Result<OptimalDesignReport> {
    if tol <= 0.0 {
        return Err(DesignError::InvalidConfig(format!(
            "objective tolerance must be positive, got {tol}"
        )));
    }
    if config.max_order() < 4 || config.s() < 4 {
        let order = if config.max_order() < 4 { 4 } else { config.max_order() };
        return Err(DesignError::Unidentifiable {
            order,
            k: config.k(),
            s: config.s(),
        });
    }

    let s = config.s();
    // h_q(d) table, depth-major
    let h_table: Vec<HVector> = (1..=s).map(|d| h_uniform(config, d)).collect();
    let p_dims: Vec<f64> = (1..=4).map(|q| config.param_dim(q) as f64).collect();

    let mut rng_state = seed;
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;

    for size in 1..=s.min(4) {
        for face in combinations(s, size) {
            // skip faces where some order carries no information at all
            let feasible = (1..=4).all(|q| face.iter().any(|&d| h_table[d - 1].get(q) > 0.0));
            if !feasible {
                continue;
            }
            let start = starting_point(size, &mut rng_state);
            if let Some((w, g)) = maximize_on_face(config, &face, &h_table, &p_dims, start) {
                let improved = match &best {
                    None => true,
                    Some((_, _, g_best)) => g > g_best + 1e-11 * (1.0 + g_best.abs()),
                };
                if improved {
                    best = Some((face, w, g));
                }
            }
        }
    }

    let (face, w, _) = best.ok_or_else(|| DesignError::Unidentifiable {
        order: 4,
        k: config.k(),
        s: config.s(),
    })?;

    // embed, prune, renormalize
    let mut weights = vec![0.0; s];
    for (&d, &wd) in face.iter().zip(w.iter()) {
        if wd > WEIGHT_PRUNE_THRESHOLD {
            weights[d - 1] = wd;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|x| *x /= total);

    let design = InvariantDesign::new(*config, weights)?;
    let g = objective(config, &design.h())?;
    let kw = kw_certificate(&design, DEFAULT_KW_TOLERANCE)?;
    if !kw.is_optimal {
        return Err(DesignError::CertificationFailed {
            max_ratio: kw.max_ratio,
            tolerance: kw.tolerance,
            report: Box::new(kw),
        });
    }
    let support = design
        .support()
        .into_iter()
        .map(|d| (d, design.weight(d)))
        .collect();
    Ok(OptimalDesignReport { config: *config, design, objective: g, support, kw })
}

/// True when the support fits the two-cluster pattern {a, a+1} u {b, b+1}
/// with at most four depths in total.
pub fn support_structure_check(report: &OptimalDesignReport) -> bool {
    let sup: Vec<usize> = report.support.iter().map(|&(d, _)| d).collect();
    if sup.len() > 4 {
        return false;
    }
    if sup.len() <= 2 {
        return true;
    }
    sup.iter().any(|&a| {
        sup.iter().any(|&b| {
            sup.iter().all(|&x| x == a || x == a + 1 || x == b || x == b + 1)
        })
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    (1..=n).combinations(k).collect()
}

fn starting_point(size: usize, rng_state: &mut Option<u64>) -> Vec<f64> {
    match rng_state {
        None => vec![1.0 / size as f64; size],
        Some(state) => {
            // xorshift-style splitmix, enough to scatter the start
            let mut w = Vec::with_capacity(size);
            for _ in 0..size {
                *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = ((*state >> 11) as f64) / (1u64 << 53) as f64;
                w.push(0.05 + u);
            }
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            w
        }
    }
}

/// Damped Newton ascent of g on the face spanned by `depths`. Returns the
/// maximizing weights (indexed like `depths`) and the objective there.
fn maximize_on_face(
    config: &DesignConfig,
    depths: &[usize],
    h_table: &[HVector],
    p_dims: &[f64],
    mut w: Vec<f64>,
) -> Option<(Vec<f64>, f64)> {
    let m = depths.len();
    let hq = |w: &[f64], q: usize| -> f64 {
        depths
            .iter()
            .zip(w.iter())
            .map(|(&d, &wd)| wd * h_table[d - 1].get(q))
            .sum()
    };
    let g_of = |w: &[f64]| -> Option<f64> {
        let mut g = 0.0;
        for q in 1..=4 {
            let h = hq(w, q);
            if h <= 0.0 {
                return None;
            }
            g += p_dims[q - 1] * h.ln();
        }
        Some(g)
    };

    let mut g = g_of(&w)?;
    if m == 1 {
        return Some((w, g));
    }

    let p_total = config.total_params() as f64;
    for _ in 0..200 {
        let h: Vec<f64> = (1..=4).map(|q| hq(&w, q)).collect();
        // V_j = dg/dw_j = sum_q p_q h_q(d_j)/h_q(w)
        let v: Vec<f64> = depths
            .iter()
            .map(|&d| {
                (1..=4)
                    .map(|q| p_dims[q - 1] * h_table[d - 1].get(q) / h[q - 1])
                    .sum()
            })
            .collect();

        // reduced gradient against the last coordinate
        let grad = DVector::from_fn(m - 1, |i, _| v[i] - v[m - 1]);
        if grad.amax() <= 1e-11 * p_total {
            break;
        }

        // reduced Hessian: B_jl = -sum_q p_q h_q(d_j) h_q(d_l)/h_q(w)^2
        let b = |j: usize, l: usize| -> f64 {
            -(1..=4)
                .map(|q| {
                    p_dims[q - 1] * h_table[depths[j] - 1].get(q) * h_table[depths[l] - 1].get(q)
                        / (h[q - 1] * h[q - 1])
                })
                .sum::<f64>()
        };
        let neg_hess = DMatrix::from_fn(m - 1, m - 1, |i, l| {
            -(b(i, l) - b(i, m - 1) - b(m - 1, l) + b(m - 1, m - 1))
        });

        let step = match neg_hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            // collinear h-vectors flatten the face; fall back to a small
            // gradient step
            None => &grad * (1e-3 / p_total),
        };

        // largest feasible move keeping every weight nonnegative
        let mut t_max = 1.0f64;
        let step_last: f64 = -step.iter().sum::<f64>();
        for (j, &dj) in step.iter().chain(std::iter::once(&step_last)).enumerate() {
            if dj < 0.0 {
                t_max = t_max.min(-w[j] / dj);
            }
        }
        if !t_max.is_finite() || t_max <= 0.0 {
            break;
        }

        let slope: f64 = grad.dot(&step);
        let mut t = t_max.min(1.0);
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = w.clone();
            for j in 0..m - 1 {
                cand[j] = (w[j] + t * step[j]).max(0.0);
            }
            cand[m - 1] = (1.0 - cand[..m - 1].iter().sum::<f64>()).max(0.0);
            if let Some(g_new) = g_of(&cand) {
                if g_new >= g + 0.25 * t * slope || g_new > g {
                    let done = g_new - g <= 1e-15 * (1.0 + g.abs());
                    w = cand;
                    g = g_new;
                    accepted = true;
                    if done {
                        return Some((w, g));
                    }
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-14 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Some((w, g))
}
