// SPDX-License-Identifier: Apache-2.0

//! Constraint-set trimming.
//!
//! Every node carries a set of literal constraints. The children of `u` all
//! receive `C_u` plus one constraint per leaf-child `w` of `u`: `Lab(w) = True`
//! under ∧, `Lab(w) = False` under ∨. When that set is contradictory every
//! child of `u` is cut and `u` becomes a gate-leaf.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::exprtree::{AndOrTree, Gate, Label, Literal, TreeShape};

/// A conjunction of `variable = bit` requirements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    required: BTreeMap<u32, bool>,
    contradictory: bool,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn require(&mut self, var: u32, value: bool) {
        match self.required.get(&var) {
            Some(&v) if v != value => self.contradictory = true,
            Some(_) => {}
            None => {
                self.required.insert(var, value);
            }
        }
    }

    /// Adds the constraint contributed by a leaf-child under `gate`.
    pub fn add_leaf(&mut self, lit: Literal, gate: Gate) {
        let want = gate == Gate::And;
        self.require(lit.var, want != lit.negated);
    }

    pub fn is_consistent(&self) -> bool {
        !self.contradictory
    }

    pub fn get(&self, var: u32) -> Option<bool> {
        self.required.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.required.len()
    }

    pub fn is_empty(&self) -> bool {
        self.required.is_empty()
    }
}

/// Constraint set over variables `1..=64` as two bitmasks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaskConstraints {
    pub must_true: u64,
    pub must_false: u64,
}

impl MaskConstraints {
    #[inline]
    pub fn add_leaf(&mut self, lit: Literal, gate: Gate) {
        let bit = 1u64 << (lit.var - 1);
        if (gate == Gate::And) != lit.negated {
            self.must_true |= bit;
        } else {
            self.must_false |= bit;
        }
    }

    #[inline]
    pub fn is_consistent(&self) -> bool {
        self.must_true & self.must_false == 0
    }
}

/// `trim(τ)` together with bookkeeping about what was removed.
#[derive(Debug, Clone)]
pub struct TrimmedTree {
    tree: AndOrTree,
    removed: Vec<bool>,
    cut_parents: Vec<usize>,
}

impl TrimmedTree {
    /// The trimmed tree; gate-leaves mark nodes whose progeny was cut.
    pub fn tree(&self) -> &AndOrTree {
        &self.tree
    }

    /// Whether an original node was removed.
    pub fn is_removed(&self, v: usize) -> bool {
        self.removed[v]
    }

    /// Original nodes whose children were all cut.
    pub fn cut_parents(&self) -> &[usize] {
        &self.cut_parents
    }

    /// Number of original nodes removed.
    pub fn cut_nodes(&self) -> usize {
        self.removed.iter().filter(|&&r| r).count()
    }

    pub fn trim_size(&self) -> usize {
        trim_size(&self.tree)
    }
}

/// Runs the trimming procedure.
pub fn trim(tau: &AndOrTree) -> TrimmedTree {
    let shape = tau.shape();
    let n = shape.num_nodes();
    let mut removed = vec![false; n];
    let mut becomes_leaf = vec![false; n];
    let mut cut_parents = Vec::new();
    let mut queue: VecDeque<(usize, ConstraintSet)> = VecDeque::from([(0, ConstraintSet::new())]);
    while let Some((u, cu)) = queue.pop_front() {
        let Label::Gate(gate) = tau.label(u) else { continue };
        let ch = shape.children(u);
        if ch.is_empty() {
            continue;
        }
        let mut child_set = cu;
        for &c in ch {
            if let Label::Lit(l) = tau.label(c as usize) {
                if shape.is_leaf(c as usize) {
                    child_set.add_leaf(l, gate);
                }
            }
        }
        if child_set.is_consistent() {
            for &c in ch {
                queue.push_back((c as usize, child_set.clone()));
            }
        } else {
            becomes_leaf[u] = true;
            cut_parents.push(u);
            let mut stack: Vec<usize> = ch.iter().map(|&c| c as usize).collect();
            while let Some(v) = stack.pop() {
                removed[v] = true;
                stack.extend(shape.children(v).iter().map(|&c| c as usize));
            }
        }
    }
    let mut map = vec![u32::MAX; n];
    let order: Vec<usize> = shape.preorder().into_iter().filter(|&v| !removed[v]).collect();
    for (i, &v) in order.iter().enumerate() {
        map[v] = i as u32;
    }
    let kids: Vec<Vec<u32>> = order
        .iter()
        .map(|&v| {
            if becomes_leaf[v] {
                Vec::new()
            } else {
                shape.children(v).iter().map(|&c| map[c as usize]).collect()
            }
        })
        .collect();
    let labels = order.iter().map(|&v| tau.label(v)).collect();
    let tree = AndOrTree::new_unchecked(TreeShape::from_arena_unchecked(kids), labels);
    TrimmedTree { tree, removed, cut_parents }
}

/// Number of literal-labelled leaves.
pub fn trim_size(t: &AndOrTree) -> usize {
    t.labels().iter().filter(|l| matches!(l, Label::Lit(_))).count()
}

/// Literal leaves minus distinct variables among them.
pub fn repetitions(t: &AndOrTree) -> usize {
    let lits = t.literals();
    let distinct: BTreeSet<u32> = lits.iter().map(|l| l.var).collect();
    lits.len() - distinct.len()
}
