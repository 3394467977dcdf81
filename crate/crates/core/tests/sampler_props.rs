// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use andor_core::exprtree::TreeShape;
use andor_core::seeding::trial_rng;
use andor_core::treegen::{
    associative_offspring, sample_alpha, sample_bst, sample_gw, sample_gw_conditioned, spine_generator, OffspringDist,
    SizeMode,
};
use proptest::prelude::*;

fn no_unary(t: &TreeShape) -> bool {
    (0..t.num_nodes()).all(|v| t.children(v).len() != 1)
}

proptest! {
    #[test]
    fn samplers_never_make_unary_nodes(seed in any::<u64>(), n in 1usize..200, a in 0.05f64..=1.0) {
        let mut rng = trial_rng(seed, 0);
        prop_assert!(no_unary(&sample_bst(n, &mut rng).unwrap()));
        prop_assert!(no_unary(&sample_alpha(n, a, &mut rng).unwrap()));
        let assoc = associative_offspring(3).unwrap();
        prop_assert!(no_unary(&sample_gw_conditioned(&assoc, n, SizeMode::Leaves, &mut rng, 1 << 32).unwrap()));
        if let Ok(t) = sample_gw(&OffspringDist::catalan(), &mut rng, 10_000) {
            prop_assert!(no_unary(&t));
        }
    }
}

/// Binary plane trees with `n` leaves, as signatures.
fn binary_shapes(n: usize) -> Vec<TreeShape> {
    if n == 1 {
        return vec![TreeShape::leaf()];
    }
    let mut out = Vec::new();
    for j in 1..n {
        for l in binary_shapes(j) {
            for r in binary_shapes(n - j) {
                out.push(TreeShape::join(vec![l.clone(), r]).unwrap());
            }
        }
    }
    out
}

#[test]
fn conditioned_catalan_is_uniform_on_binary_shapes() {
    const TRIALS: u64 = 100_000;
    let d = OffspringDist::catalan();
    for leaves in 1..=4 {
        let shapes = binary_shapes(leaves);
        let q = 1.0 / shapes.len() as f64;
        let mut counts: HashMap<String, u64> = HashMap::new();
        for i in 0..TRIALS {
            let t = sample_gw_conditioned(&d, leaves, SizeMode::Leaves, &mut trial_rng(leaves as u64, i), 1 << 30).unwrap();
            *counts.entry(t.signature()).or_default() += 1;
        }
        assert_eq!(counts.len(), shapes.len());
        for s in &shapes {
            let p = counts[&s.signature()] as f64 / TRIALS as f64;
            let se = (q * (1.0 - q) / TRIALS as f64).sqrt();
            assert!((p - q).abs() <= 3.0 * se + f64::EPSILON, "{} at {leaves} leaves: {p}", s.signature());
        }
    }
}

#[test]
fn hung_subtrees_are_independent_across_levels() {
    // 2×2 contingency of "hung subtree is a single leaf" at consecutive levels.
    const TRIALS: u64 = 50_000;
    let gen = spine_generator(&OffspringDist::catalan()).unwrap();
    let mut table = [[0f64; 2]; 2];
    for i in 0..TRIALS {
        let mut rng = trial_rng(3, i);
        let mut leafy = || match gen.level(&mut rng, 1_000) {
            Ok(l) => l.hung.iter().all(|t| t.num_nodes() == 1) as usize,
            Err(_) => 0,
        };
        let (a, b) = (leafy(), leafy());
        table[a][b] += 1.0;
    }
    let n = TRIALS as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut chi2 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let e = rows[r] * cols[c] / n;
            chi2 += (table[r][c] - e).powi(2) / e;
        }
    }
    // Upper 0.1% point of chi-square with one degree of freedom.
    assert!(chi2 < 10.83, "chi2 = {chi2}, table {table:?}");
}
