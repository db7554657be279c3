//! Partial profiles, exhaustive pair enumeration at fixed comparison depth,
//! and full regression vectors for the brute-force path.

use itertools::Itertools;
use nalgebra::DVector;

use crate::coding::code_level;
use crate::config::{binomial, DesignConfig};
use crate::error::{DesignError, Result};

/// Default ceiling on the number of ordered pairs an orbit may hold before
/// enumeration refuses to materialize it.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// One alternative: a level in 1..=v per shown attribute, `None` elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    levels: Vec<Option<usize>>,
}

impl Profile {
    pub fn new(levels: Vec<Option<usize>>, config: &DesignConfig) -> Result<Self> {
        if levels.len() != config.k() {
            return Err(DesignError::InvalidConfig(format!(
                "profile has {} attributes, config has K={}",
                levels.len(),
                config.k()
            )));
        }
        let shown = levels.iter().flatten().count();
        if shown > config.s() {
            return Err(DesignError::InvalidConfig(format!(
                "profile shows {shown} attributes, above the profile strength S={}",
                config.s()
            )));
        }
        for &l in levels.iter().flatten() {
            if l < 1 || l > config.v() {
                return Err(DesignError::InvalidLevel { level: l, v: config.v() });
            }
        }
        Ok(Self { levels })
    }

    pub(crate) fn from_raw(levels: Vec<Option<usize>>) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> &[Option<usize>] {
        &self.levels
    }

    /// Zero-based indices of the shown attributes.
    pub fn shown_set(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter_map(|(a, l)| l.map(|_| a))
            .collect()
    }
}

/// All ordered pairs of strength-S profiles sharing a shown set and differing
/// in exactly `depth` shown attributes.
#[derive(Debug, Clone)]
pub struct PairOrbit {
    pub config: DesignConfig,
    pub depth: usize,
    pub pairs: Vec<(Profile, Profile)>,
}

/// Orbit cardinality N_d = C(K,S) C(S,d) v^S (v-1)^d (ordered pairs).
pub fn orbit_size(config: &DesignConfig, depth: usize) -> u128 {
    let (k, s, v) = (config.k(), config.s(), config.v());
    assert!(depth <= s, "depth {depth} above profile strength {s}");
    binomial(k, s)
        * binomial(s, depth)
        * (v as u128).pow(s as u32)
        * ((v - 1) as u128).pow(depth as u32)
}

/// Exhaustively enumerate the orbit at `depth` in lexicographic order:
/// shown sets, then the differing subset, then first-profile levels
/// (attribute-major), then second-profile levels ascending with the matching
/// level skipped. Both orderings of every unordered pair appear.
pub fn enumerate_pairs(config: &DesignConfig, depth: usize, cap: u128) -> Result<PairOrbit> {
    let (k, s, v) = (config.k(), config.s(), config.v());
    if depth < 1 || depth > s {
        return Err(DesignError::InvalidConfig(format!(
            "comparison depth {depth} must satisfy 1 <= d <= S={s}"
        )));
    }
    let n_pairs = orbit_size(config, depth);
    if n_pairs > cap {
        return Err(DesignError::OrbitTooLarge { depth, n_pairs, cap });
    }

    let mut pairs = Vec::with_capacity(n_pairs as usize);
    for shown in (0..k).combinations(s) {
        for diff in shown.iter().copied().combinations(depth) {
            for ilev in (0..s).map(|_| 1..=v).multi_cartesian_product() {
                let mut i_levels = vec![None; k];
                for (&a, &l) in shown.iter().zip(ilev.iter()) {
                    i_levels[a] = Some(l);
                }
                for joff in (0..depth).map(|_| 1..v).multi_cartesian_product() {
                    let mut j_levels = i_levels.clone();
                    for (&a, &off) in diff.iter().zip(joff.iter()) {
                        let i = i_levels[a].unwrap();
                        // ascending over 1..=v with level i skipped
                        j_levels[a] = Some(if off < i { off } else { off + 1 });
                    }
                    pairs.push((Profile::from_raw(i_levels.clone()), Profile::from_raw(j_levels)));
                }
            }
        }
    }
    debug_assert_eq!(pairs.len() as u128, n_pairs);
    Ok(PairOrbit { config: *config, depth, pairs })
}

/// Regression vector of a profile: effects codes of the K attributes, then
/// Kronecker products over every 2-, 3-, and 4-subset of attributes in
/// lexicographic order (factors by ascending attribute index). Blocks that
/// touch a hidden attribute are zero.
pub fn regression_vector(profile: &Profile, config: &DesignConfig) -> DVector<f64> {
    let codes: Vec<DVector<f64>> = profile
        .levels()
        .iter()
        .map(|&l| code_level(l, config.v()).expect("profile validated against config"))
        .collect();

    let mut out = DVector::zeros(config.total_params());
    let mut offset = 0;
    for q in config.active_orders() {
        let dim = config.block_dim(q);
        for subset in (0..config.k()).combinations(q) {
            if subset.iter().all(|&a| profile.levels()[a].is_some()) {
                let mut block = codes[subset[0]].clone();
                for &a in &subset[1..] {
                    block = block.kronecker(&codes[a]);
                }
                out.rows_mut(offset, dim).copy_from(&block);
            }
            offset += dim;
        }
    }
    debug_assert_eq!(offset, config.total_params());
    out
}
