// SPDX-License-Identifier: Apache-2.0

use andor_core::boolfn::{BoolFn, Op};
use proptest::prelude::*;

fn any_fn(max_k: usize) -> impl Strategy<Value = BoolFn> {
    (1..=max_k).prop_flat_map(|k| {
        proptest::collection::vec(any::<bool>(), 1 << k).prop_map(move |bits| BoolFn::from_fn(k, |i| bits[i]).unwrap())
    })
}

fn assignment(k: usize, idx: usize) -> Vec<bool> {
    (0..k).map(|j| (idx >> j) & 1 == 1).collect()
}

proptest! {
    #[test]
    fn negation_keeps_essential_variables(f in any_fn(8)) {
        prop_assert_eq!(f.not().essential_vars(), f.essential_vars());
        prop_assert_eq!(f.not().not(), f);
    }

    #[test]
    fn restriction_drops_the_variable(f in any_fn(8), i_seed in any::<usize>(), b in any::<bool>()) {
        let i = i_seed % f.arity() + 1;
        let g = f.restrict(i, b).unwrap();
        let before = f.essential_vars();
        for v in g.essential_vars() {
            prop_assert!(v != i && before.contains(&v));
        }
    }

    #[test]
    fn extend_then_restrict_is_identity(f in any_fn(6), extra in 1usize..=3, bits in any::<u8>()) {
        let k = f.arity();
        let mut g = f.extend(k + extra).unwrap();
        for j in 0..extra {
            g = g.restrict(k + j + 1, (bits >> j) & 1 == 1).unwrap();
        }
        prop_assert_eq!(&g, &f.extend(k + extra).unwrap());
        let back = BoolFn::from_fn(k, |i| g.bit(i)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn hex_round_trip(f in any_fn(10)) {
        let parsed: BoolFn = f.to_hex().parse().unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn permutation_inverse_restores(f in any_fn(7), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let k = f.arity();
        let mut perm: Vec<usize> = (1..=k).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut inv = vec![0; k];
        for (i, &p) in perm.iter().enumerate() {
            inv[p - 1] = i + 1;
        }
        let g = f.permute(&perm).unwrap();
        prop_assert_eq!(g.ess(), f.ess());
        prop_assert_eq!(g.count_ones(), f.count_ones());
        prop_assert_eq!(g.permute(&inv).unwrap(), f);
    }
}

#[test]
fn combine_is_pointwise_for_small_arities() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for k in 1..=4 {
        for _ in 0..50 {
            let f = BoolFn::from_fn(k, |_| rng.gen()).unwrap();
            let g = BoolFn::from_fn(k, |_| rng.gen()).unwrap();
            let and = BoolFn::combine(Op::And, &f, Some(&g)).unwrap();
            let or = BoolFn::combine(Op::Or, &f, Some(&g)).unwrap();
            let not = BoolFn::combine(Op::Not, &f, None).unwrap();
            for idx in 0..1 << k {
                let a = assignment(k, idx);
                let (x, y) = (f.eval(&a).unwrap(), g.eval(&a).unwrap());
                assert_eq!(and.eval(&a).unwrap(), x && y);
                assert_eq!(or.eval(&a).unwrap(), x || y);
                assert_eq!(not.eval(&a).unwrap(), !x);
            }
        }
    }
}
