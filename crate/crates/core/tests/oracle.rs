//! Brute-force validation of the closed forms: the dense information matrix
//! assembled from enumerated pairs must equal the block form entrywise, the
//! off-diagonal blocks must vanish, determinants must agree, and the
//! pair-level variance must be constant on orbits and equal the closed form.

use nalgebra::DMatrix;
use paircomp::{
    block_deviation, brute_force_info, kw_certificate, regression_vector, variance_at_depth,
    BlockInfo, DesignConfig, InvariantDesign, DEFAULT_ENUMERATION_CAP,
};

fn cfg(k: usize, s: usize, v: usize) -> DesignConfig {
    DesignConfig::new(k, s, v).unwrap()
}

#[test]
fn dense_matrix_equals_block_form_across_small_configs() {
    for k in 1..=5 {
        for s in 1..=k {
            for v in 2..=3 {
                let c = cfg(k, s, v);
                for d in 1..=s {
                    let design = InvariantDesign::point_mass(c, d).unwrap();
                    let dense = brute_force_info(&c, &design, DEFAULT_ENUMERATION_CAP).unwrap();
                    let dev = block_deviation(&dense, &BlockInfo::from_design(&design));
                    assert!(
                        dev.max() <= 1e-10,
                        "K={k} S={s} v={v} d={d}: block dev {:?}",
                        dev
                    );
                    assert!(
                        dev.off_diagonal <= 1e-10,
                        "K={k} S={s} v={v} d={d}: off-diagonal {}",
                        dev.off_diagonal
                    );
                }
            }
        }
    }
}

#[test]
fn dense_matrix_equals_block_form_for_mixtures() {
    for (k, s, v, w) in [
        (4, 4, 2, vec![0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0]),
        (4, 4, 3, vec![0.1, 0.3, 0.4, 0.2]),
        (5, 4, 2, vec![0.25, 0.25, 0.25, 0.25]),
    ] {
        let c = cfg(k, s, v);
        let design = InvariantDesign::new(c, w).unwrap();
        let dense = brute_force_info(&c, &design, DEFAULT_ENUMERATION_CAP).unwrap();
        let dev = block_deviation(&dense, &BlockInfo::from_design(&design));
        assert!(dev.max() <= 1e-10, "K={k} S={s} v={v}: {dev:?}");
    }
}

#[test]
fn block_log_det_matches_dense_log_det() {
    for (k, s, v, d) in [(4, 4, 3, 2), (5, 5, 2, 1), (5, 4, 3, 3), (3, 3, 3, 2)] {
        let c = cfg(k, s, v);
        let design = InvariantDesign::point_mass(c, d).unwrap();
        let block = BlockInfo::from_design(&design);
        if block.h().singular_order(&c).is_some() {
            continue;
        }
        let dense = brute_force_info(&c, &design, DEFAULT_ENUMERATION_CAP).unwrap();
        let dense_log_det = dense.determinant().ln();
        let block_log_det = block.log_det().unwrap();
        assert!(
            (dense_log_det - block_log_det).abs() <= 1e-8,
            "K={k} S={s} v={v} d={d}: {dense_log_det} vs {block_log_det}"
        );
    }
}

#[test]
fn pair_variance_is_constant_on_orbits_and_matches_closed_form() {
    for (k, s, v, weights) in [
        (4, 4, 3, vec![0.1, 0.3, 0.4, 0.2]),
        (5, 5, 2, vec![0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0]),
        (5, 4, 2, vec![0.5, 0.3, 0.2, 0.0]),
    ] {
        let c = cfg(k, s, v);
        let design = InvariantDesign::new(c, weights).unwrap();
        let dense = brute_force_info(&c, &design, DEFAULT_ENUMERATION_CAP).unwrap();
        let inv = dense.clone().try_inverse().expect("nonsingular at oracle scale");
        for d in 1..=s {
            let expected = variance_at_depth(&design, d).unwrap();
            let orbit = paircomp::enumerate_pairs(&c, d, DEFAULT_ENUMERATION_CAP).unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            // stride through the orbit; constancy over a spread of pairs plus
            // the exact extremes is as strong as checking all of them
            let stride = (orbit.pairs.len() / 64).max(1);
            for (i, j) in orbit.pairs.iter().step_by(stride) {
                let z = regression_vector(i, &c) - regression_vector(j, &c);
                let val = (z.transpose() * &inv * &z)[(0, 0)];
                lo = lo.min(val);
                hi = hi.max(val);
            }
            assert!(
                (hi - lo).abs() <= 1e-8 * (1.0 + hi.abs()),
                "K={k} S={s} v={v} d={d}: variance varies {lo}..{hi}"
            );
            assert!(
                (hi - expected).abs() <= 1e-8 * (1.0 + expected.abs()),
                "K={k} S={s} v={v} d={d}: {hi} vs closed form {expected}"
            );
        }
    }
}

#[test]
fn certificate_agrees_with_dense_variance_for_the_uniform_design() {
    // the K = S = 4 uniform-on-all-comparisons design attains V = p at every
    // depth; confirm against the dense inverse
    let c = cfg(4, 4, 2);
    let design = InvariantDesign::uniform_on_all(c);
    let report = kw_certificate(&design, 1e-6).unwrap();
    assert!(report.is_optimal);

    let dense = brute_force_info(&c, &design, DEFAULT_ENUMERATION_CAP).unwrap();
    let p = c.total_params() as f64;
    let inv: DMatrix<f64> = dense.try_inverse().unwrap();
    for d in 1..=4 {
        let orbit = paircomp::enumerate_pairs(&c, d, DEFAULT_ENUMERATION_CAP).unwrap();
        let (i, j) = &orbit.pairs[0];
        let z = regression_vector(i, &c) - regression_vector(j, &c);
        let val = (z.transpose() * &inv * &z)[(0, 0)];
        assert!((val / p - report.variance_by_depth[d - 1]).abs() <= 1e-9);
        assert!((val / p - 1.0).abs() <= 1e-9);
    }
}
