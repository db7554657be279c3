//! Effects-type coding of attribute levels and the one-way layout matrices
//! every closed form is assembled from.

use nalgebra::{DMatrix, DVector};

use crate::error::{DesignError, Result};

/// Effects coding of one attribute level into a (v-1)-vector.
///
/// Levels 1..v-1 map to the standard unit vectors, level v to the
/// all-minus-one vector, and a hidden attribute (`None`) to the zero vector,
/// so the codes of the v visible levels sum to zero.
pub fn code_level(level: Option<usize>, v: usize) -> Result<DVector<f64>> {
    if v < 2 {
        return Err(DesignError::InvalidConfig(format!(
            "effects coding needs v >= 2, got {v}"
        )));
    }
    match level {
        None => Ok(DVector::zeros(v - 1)),
        Some(i) if (1..v).contains(&i) => {
            let mut e = DVector::zeros(v - 1);
            e[i - 1] = 1.0;
            Ok(e)
        }
        Some(i) if i == v => Ok(DVector::from_element(v - 1, -1.0)),
        Some(i) => Err(DesignError::InvalidLevel { level: i, v }),
    }
}

/// Information matrix of the one-way layout under effects coding,
/// M = (2/(v-1)) (I + 11ᵀ), together with its closed-form inverse
/// M⁻¹ = ((v-1)/2) (I - 11ᵀ/v).
#[derive(Debug, Clone)]
pub struct OneWayInfo {
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
}

pub fn oneway_info(v: usize) -> OneWayInfo {
    assert!(v >= 2, "one-way layout needs v >= 2");
    let n = v - 1;
    let scale = 2.0 / n as f64;
    let m = DMatrix::from_fn(n, n, |r, c| if r == c { 2.0 * scale } else { scale });
    let inv_scale = n as f64 / 2.0;
    let m_inv = DMatrix::from_fn(n, n, |r, c| {
        let base = if r == c { 1.0 } else { 0.0 };
        inv_scale * (base - 1.0 / v as f64)
    });
    OneWayInfo { m, m_inv }
}

/// log det M = (v-1) log(2/(v-1)) + log v, from the eigenvalues of I + 11ᵀ
/// (v once, 1 with multiplicity v-2).
pub fn oneway_log_det(v: usize) -> f64 {
    let n = (v - 1) as f64;
    n * (2.0 / n).ln() + (v as f64).ln()
}

/// q-fold Kronecker power, q in 1..=4.
pub fn kron_power(a: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    assert!((1..=4).contains(&q), "Kronecker power order must be 1..=4");
    let mut out = a.clone();
    for _ in 1..q {
        out = out.kronecker(a);
    }
    out
}
