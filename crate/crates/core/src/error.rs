use crate::variance::KwReport;

/// Errors raised while constructing, evaluating, or optimizing designs.
#[derive(Debug, Clone, thiserror::Error)]
pub enum DesignError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("level {level} out of range for {v} levels")]
    InvalidLevel { level: usize, v: usize },

    #[error("orbit at depth {depth} holds {n_pairs} ordered pairs, above the cap of {cap}")]
    OrbitTooLarge { depth: usize, n_pairs: u128, cap: u128 },

    #[error("invalid design weights: {0}")]
    InvalidWeights(String),

    /// An order with a nonzero parameter block carries no information under
    /// the design (h_q = 0), so the information matrix is singular.
    #[error("singular information block for order-{order} effects (h_{order} = 0)")]
    Singular { order: usize },

    #[error("order-{order} effects are not identifiable for K={k}, S={s}")]
    Unidentifiable { order: usize, k: usize, s: usize },

    /// The two variance routes must agree; a gap is an internal defect.
    #[error("variance formulas disagree at depth {depth}: closed form {closed} vs block ratio {ratio}")]
    VarianceMismatch { depth: usize, closed: f64, ratio: f64 },

    #[error("optimum failed the equivalence certificate: max V/p = {max_ratio} at tolerance {tolerance}")]
    CertificationFailed {
        max_ratio: f64,
        tolerance: f64,
        report: Box<KwReport>,
    },

    #[error("designs belong to different configurations")]
    ConfigMismatch,
}

pub type Result<T> = std::result::Result<T, DesignError>;
