// SPDX-License-Identifier: Apache-2.0

//! Statistics of the forest hanging from one spine node.
//!
//! The forest is generated lazily into an arena: a node's children and labels
//! are drawn the first time a traversal asks for them, so the pair statistics
//! and the trimmed size are computed on the same random forest while only the
//! explored part is ever built.

use rand::Rng;

use crate::exprtree::{random_gate, random_literal, Gate, Literal};
use crate::spine::{Pending, SpineCaps, SpineSource};
use crate::trimming::MaskConstraints;

const NONE: u32 = u32::MAX;

struct Node {
    pend: Pending,
    parent: u32,
    root: u32,
    depth: u32,
    first: u32,
    len: u32,
    expanded: bool,
    lit: Option<Literal>,
    gate: Option<Gate>,
}

/// A lazily generated forest of finite trees.
pub(crate) struct LazyForest<'a> {
    src: &'a SpineSource,
    k: usize,
    nodes: Vec<Node>,
    roots: usize,
    scratch: Vec<Pending>,
    node_cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Overflow;

impl<'a> LazyForest<'a> {
    pub(crate) fn new(src: &'a SpineSource, k: usize, roots: &[Pending], node_cap: usize) -> Self {
        let nodes = roots
            .iter()
            .enumerate()
            .map(|(i, &p)| Node {
                pend: p,
                parent: NONE,
                root: i as u32,
                depth: 0,
                first: 0,
                len: 0,
                expanded: p.is_leaf(),
                lit: None,
                gate: None,
            })
            .collect();
        LazyForest { src, k, nodes, roots: roots.len(), scratch: Vec::new(), node_cap }
    }

    fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].pend.is_leaf()
    }

    fn children<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> Result<std::ops::Range<usize>, Overflow> {
        if !self.nodes[v].expanded {
            self.scratch.clear();
            self.src.expand(self.nodes[v].pend, rng, &mut self.scratch);
            if self.nodes.len() + self.scratch.len() > self.node_cap {
                return Err(Overflow);
            }
            let first = self.nodes.len() as u32;
            let (root, depth) = (self.nodes[v].root, self.nodes[v].depth + 1);
            for &p in &self.scratch {
                self.nodes.push(Node {
                    pend: p,
                    parent: v as u32,
                    root,
                    depth,
                    first: 0,
                    len: 0,
                    expanded: p.is_leaf(),
                    lit: None,
                    gate: None,
                });
            }
            let n = &mut self.nodes[v];
            n.first = first;
            n.len = self.scratch.len() as u32;
            n.expanded = true;
        }
        let n = &self.nodes[v];
        Ok(n.first as usize..(n.first + n.len) as usize)
    }

    fn literal<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> Literal {
        let k = self.k;
        *self.nodes[v].lit.get_or_insert_with(|| random_literal(k, rng))
    }

    fn gate<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R) -> Gate {
        *self.nodes[v].gate.get_or_insert_with(|| random_gate(rng))
    }

    /// Branching nodes on the union of the root paths of two leaves.
    fn pair_cost(&self, a: usize, b: usize) -> u32 {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        if na.root != nb.root {
            return na.depth + nb.depth;
        }
        let (mut x, mut y) = (a, b);
        while self.nodes[x].depth > self.nodes[y].depth {
            x = self.nodes[x].parent as usize;
        }
        while self.nodes[y].depth > self.nodes[x].depth {
            y = self.nodes[y].parent as usize;
        }
        while x != y {
            x = self.nodes[x].parent as usize;
            y = self.nodes[y].parent as usize;
        }
        na.depth + nb.depth - self.nodes[x].depth - 1
    }

    /// `(C_A, N_A)`, or `None` for a forest with fewer than two leaves.
    pub(crate) fn min_pair_cost<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<(u32, u64)>, Overflow> {
        let mut best = NONE;
        let mut count = 0u64;
        let mut leaves: Vec<usize> = Vec::new();
        let mut level: Vec<usize> = (0..self.roots).collect();
        let mut next: Vec<usize> = Vec::new();
        let mut depth = 0u32;
        while !level.is_empty() {
            for &v in &level {
                if !self.is_leaf(v) {
                    continue;
                }
                for &u in &leaves {
                    let c = self.pair_cost(u, v);
                    if c < best {
                        best = c;
                        count = 1;
                    } else if c == best {
                        count += 1;
                    }
                }
                leaves.push(v);
            }
            // every pair involving a deeper leaf costs more than its depth
            if best != NONE && depth >= best {
                break;
            }
            next.clear();
            for &v in &level {
                if !self.is_leaf(v) {
                    let r = self.children(v, rng)?;
                    next.extend(r);
                }
            }
            std::mem::swap(&mut level, &mut next);
            depth += 1;
        }
        Ok((best != NONE).then_some((best, count)))
    }

    /// Literal leaves of the trimmed forest placed under a root labelled `top`.
    pub(crate) fn trimmed_size<R: Rng + ?Sized>(&mut self, top: Gate, rng: &mut R) -> Result<u64, Overflow> {
        let roots: Vec<usize> = (0..self.roots).collect();
        let mut stack: Vec<(usize, MaskConstraints)> = Vec::new();
        let mut size = 0u64;
        let mut pending_group = Some((roots, top, MaskConstraints::default()));
        loop {
            if let Some((group, gate, c)) = pending_group.take() {
                let mut c2 = c;
                let mut leaves = 0u64;
                for &w in &group {
                    if self.is_leaf(w) {
                        let lit = self.literal(w, rng);
                        c2.add_leaf(lit, gate);
                        leaves += 1;
                    }
                }
                if c2.is_consistent() {
                    size += leaves;
                    stack.extend(group.iter().filter(|&&w| !self.is_leaf(w)).map(|&w| (w, c2)));
                }
            }
            let Some((v, c)) = stack.pop() else { break };
            let gate = self.gate(v, rng);
            let group: Vec<usize> = self.children(v, rng)?.collect();
            pending_group = Some((group, gate, c));
        }
        Ok(size)
    }
}

/// One sampled hanging forest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestSample {
    /// `(C_A, N_A)`; `None` when the forest has fewer than two leaves.
    pub pair: Option<(u32, u64)>,
    /// Literal leaves of the trimmed labelled forest.
    pub trimmed: u64,
}

impl ForestSample {
    /// `N_A / 2^{C_A}`, zero without a pair.
    pub fn weight(&self) -> f64 {
        match self.pair {
            Some((c, n)) => n as f64 * (-(c as f64)).exp2(),
            None => 0.0,
        }
    }
}

/// Samples the forest hanging from one spine node and measures it.
/// `None` when a cap is hit.
pub fn sample_forest<R: Rng + ?Sized>(src: &SpineSource, k: usize, caps: &SpineCaps, rng: &mut R) -> Option<ForestSample> {
    assert!((1..=64).contains(&k), "forest trimming supports 1 ≤ k ≤ 64");
    let mut roots = Vec::new();
    src.hung_roots(rng, caps, &mut roots).ok()?;
    let top = random_gate(rng);
    let mut forest = LazyForest::new(src, k, &roots, caps.node_cap);
    let pair = forest.min_pair_cost(rng).ok()?;
    let trimmed = forest.trimmed_size(top, rng).ok()?;
    Some(ForestSample { pair, trimmed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprtree::{AndOrTree, Label, TreeShape};
    use crate::spine::PendKind;
    use crate::treegen::{spine_generator, OffspringDist};
    use crate::trimming::trim;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn catalan() -> SpineSource {
        SpineSource::Gw(spine_generator(&OffspringDist::catalan()).unwrap())
    }

    fn gw(arity: u32) -> Pending {
        Pending::new(PendKind::Gw(arity))
    }

    fn expand_all(f: &mut LazyForest, rng: &mut ChaCha8Rng) -> Result<(), Overflow> {
        let mut v = 0;
        while v < f.nodes.len() {
            if !f.is_leaf(v) {
                f.children(v, rng)?;
                f.gate(v, rng);
            } else {
                f.literal(v, rng);
            }
            v += 1;
        }
        Ok(())
    }

    /// The fully expanded arena as one tree under a root labelled `top`.
    fn explicit(f: &LazyForest, top: Gate) -> AndOrTree {
        let mut kids: Vec<Vec<u32>> = vec![Vec::new(); f.nodes.len() + 1];
        let mut labels = vec![Label::Gate(top)];
        for (i, node) in f.nodes.iter().enumerate() {
            let parent = if node.parent == NONE { 0 } else { node.parent as usize + 1 };
            kids[parent].push(i as u32 + 1);
            labels.push(match (node.lit, node.gate) {
                (Some(l), _) => Label::Lit(l),
                (None, Some(g)) => Label::Gate(g),
                (None, None) => unreachable!("expanded forest is fully labelled"),
            });
        }
        AndOrTree::new_unchecked(TreeShape::from_arena_unchecked(kids), labels)
    }

    fn brute_pairs(f: &LazyForest) -> Option<(u32, u64)> {
        let ancestors = |mut v: usize| {
            let mut s = std::collections::BTreeSet::new();
            while f.nodes[v].parent != NONE {
                v = f.nodes[v].parent as usize;
                s.insert(v);
            }
            s
        };
        let leaves: Vec<usize> = (0..f.nodes.len()).filter(|&v| f.is_leaf(v)).collect();
        let mut best: Option<(u32, u64)> = None;
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                let c = ancestors(leaves[i]).union(&ancestors(leaves[j])).count() as u32;
                best = match best {
                    Some((b, n)) if c == b => Some((b, n + 1)),
                    Some((b, _)) if c > b => best,
                    _ => Some((c, 1)),
                };
            }
        }
        best
    }

    #[test]
    fn small_forests() {
        let src = catalan();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut two = LazyForest::new(&src, 4, &[gw(0), gw(0)], 100);
        assert_eq!(two.min_pair_cost(&mut rng).unwrap(), Some((0, 1)));
        let mut one = LazyForest::new(&src, 4, &[gw(0)], 100);
        assert_eq!(one.min_pair_cost(&mut rng).unwrap(), None);
        let mut seen_cherry = false;
        for _ in 0..100 {
            let mut f = LazyForest::new(&src, 4, &[gw(2)], 100);
            let r = f.children(0, &mut rng).unwrap();
            if r.clone().all(|c| f.is_leaf(c)) {
                assert_eq!(f.min_pair_cost(&mut rng).unwrap(), Some((1, 1)));
                seen_cherry = true;
            }
        }
        assert!(seen_cherry);
    }

    #[test]
    fn pair_statistics_match_brute_force() {
        let src = catalan();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut checked = 0;
        for _ in 0..2000 {
            let roots: Vec<Pending> = (0..rng.gen_range(1..4)).map(|_| gw(rng.gen_range(0..2) * 2)).collect();
            let mut f = LazyForest::new(&src, 4, &roots, 300);
            let Ok(lazy) = f.min_pair_cost(&mut rng) else { continue };
            if expand_all(&mut f, &mut rng).is_err() {
                continue;
            }
            assert_eq!(lazy, brute_pairs(&f));
            checked += 1;
        }
        assert!(checked > 1500, "{checked}");
    }

    #[test]
    fn trimmed_size_matches_trim_of_explicit_forest() {
        let src = catalan();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [2usize, 4, 8] {
            let mut checked = 0;
            for _ in 0..1000 {
                let roots: Vec<Pending> = (0..rng.gen_range(1..4)).map(|_| gw(rng.gen_range(0..2) * 2)).collect();
                let mut f = LazyForest::new(&src, k, &roots, 2000);
                let top = random_gate(&mut rng);
                let lazy = f.trimmed_size(top, &mut rng).unwrap();
                if expand_all(&mut f, &mut rng).is_err() {
                    continue;
                }
                assert_eq!(lazy, trim(&explicit(&f, top)).trim_size() as u64);
                checked += 1;
            }
            assert!(checked > 700);
        }
    }
}
