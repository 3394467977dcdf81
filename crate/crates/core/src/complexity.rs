// SPDX-License-Identifier: Apache-2.0

//! Exhaustive complexity `L(f)`: the fewest leaves of an and/or tree computing `f`.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::boolfn::{BoolFn, BoolFnError, LiteralTable};
use crate::exprtree::{AndOrTree, Gate, Label, Literal, TreeShape};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexityError {
    #[error("shape enumeration supports 1 ≤ m ≤ 8, got {0}")]
    ShapeRange(usize),
    #[error("table build limited to k ≤ 3 and max_size ≤ 6, got k={k}, max_size={max_size}")]
    CostGuard { k: usize, max_size: usize },
    #[error("function {0} is not in the table")]
    Unknown(BoolFn),
    #[error("orbit enumeration limited to k ≤ 10, got {0}")]
    OrbitGuard(usize),
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
}

/// Ordered compositions of `m` into at least two positive parts.
pub fn compositions(m: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            if cur.len() >= 2 {
                out.push(cur.clone());
            }
            return;
        }
        for p in 1..=rest {
            cur.push(p);
            rec(rest - p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, &mut Vec::new(), &mut out);
    out
}

/// All plane trees without unary nodes having exactly `m` leaves.
pub fn enumerate_shapes(m: usize) -> Result<Vec<TreeShape>, ComplexityError> {
    if !(1..=8).contains(&m) {
        return Err(ComplexityError::ShapeRange(m));
    }
    let mut by_size: Vec<Vec<TreeShape>> = vec![Vec::new(), vec![TreeShape::leaf()]];
    for s in 2..=m {
        let mut shapes = Vec::new();
        for comp in compositions(s) {
            let mut partial: Vec<Vec<TreeShape>> = vec![Vec::new()];
            for &c in &comp {
                partial = partial
                    .into_iter()
                    .flat_map(|prefix| {
                        by_size[c].iter().map(move |t| {
                            let mut p = prefix.clone();
                            p.push(t.clone());
                            p
                        })
                    })
                    .collect();
            }
            shapes.extend(partial.into_iter().map(|ch| TreeShape::join(ch).expect("≥ 2 children")));
        }
        by_size.push(shapes);
    }
    Ok(by_size.swap_remove(m))
}

/// `L(f)` and one minimal witness for every function reachable within `max_size` leaves.
#[derive(Debug, Clone)]
pub struct ComplexityTable {
    k: usize,
    max_size: usize,
    entries: BTreeMap<BoolFn, (usize, AndOrTree)>,
}

impl ComplexityTable {
    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn complexity(&self, f: &BoolFn) -> Result<usize, ComplexityError> {
        self.entries.get(f).map(|e| e.0).ok_or_else(|| ComplexityError::Unknown(f.clone()))
    }

    pub fn witness(&self, f: &BoolFn) -> Result<&AndOrTree, ComplexityError> {
        self.entries.get(f).map(|e| &e.1).ok_or_else(|| ComplexityError::Unknown(f.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BoolFn, usize, &AndOrTree)> {
        self.entries.iter().map(|(f, (l, w))| (f, *l, w))
    }
}

/// Achievable functions of one subtree, each with a preorder labelling.
type Reach = HashMap<BoolFn, Vec<Label>>;

fn shape_reach(shape: &TreeShape, lits: &LiteralTable) -> Reach {
    let k = lits.arity();
    let order = shape.preorder();
    let mut reach: Vec<Option<Reach>> = vec![None; shape.num_nodes()];
    for &v in order.iter().rev() {
        let ch = shape.children(v);
        let mut here: Reach = HashMap::new();
        if ch.is_empty() {
            for var in 1..=k {
                for neg in [false, true] {
                    here.entry(lits.get(var, neg).clone())
                        .or_insert_with(|| vec![Label::Lit(Literal::new(var as u32, neg))]);
                }
            }
        } else {
            let child_reach: Vec<Reach> = ch.iter().map(|&c| reach[c as usize].take().expect("done")).collect();
            for gate in [Gate::And, Gate::Or] {
                let mut acc: Reach = HashMap::from([(
                    if gate == Gate::And { lits.truth().clone() } else { lits.falsity().clone() },
                    vec![Label::Gate(gate)],
                )]);
                for cr in &child_reach {
                    let mut next: Reach = HashMap::with_capacity(acc.len());
                    for (f, lf) in &acc {
                        for (g, lg) in cr {
                            let h = if gate == Gate::And { f.and(g) } else { f.or(g) };
                            next.entry(h).or_insert_with(|| {
                                let mut l = lf.clone();
                                l.extend_from_slice(lg);
                                l
                            });
                        }
                    }
                    acc = next;
                }
                for (f, l) in acc {
                    here.entry(f).or_insert(l);
                }
            }
        }
        reach[v] = Some(here);
    }
    reach[0].take().expect("root")
}

/// Builds the table by trying every shape and every labelling, smallest sizes first.
pub fn build_complexity_table(k: usize, max_size: usize) -> Result<ComplexityTable, ComplexityError> {
    if k == 0 || k > 3 || max_size == 0 || max_size > 6 {
        return Err(ComplexityError::CostGuard { k, max_size });
    }
    let lits = LiteralTable::new(k)?;
    let mut entries = BTreeMap::new();
    entries.insert(
        lits.truth().clone(),
        (0, AndOrTree::new(TreeShape::leaf(), vec![Label::Gate(Gate::Or)]).expect("gate-leaf")),
    );
    entries.insert(
        lits.falsity().clone(),
        (0, AndOrTree::new(TreeShape::leaf(), vec![Label::Gate(Gate::And)]).expect("gate-leaf")),
    );
    for size in 1..=max_size {
        for shape in enumerate_shapes(size)? {
            let mut found: Vec<(BoolFn, Vec<Label>)> = shape_reach(&shape, &lits).into_iter().collect();
            found.sort_by(|a, b| a.0.cmp(&b.0));
            for (f, labels) in found {
                entries.entry(f).or_insert_with(|| {
                    (size, AndOrTree::new(shape.clone(), labels).expect("labelling matches shape"))
                });
            }
        }
    }
    Ok(ComplexityTable { k, max_size, entries })
}

/// `L(f) = Ess(f)` for a non-constant `f`.
pub fn is_read_once(f: &BoolFn, table: &ComplexityTable) -> Result<bool, ComplexityError> {
    let l = table.complexity(f)?;
    Ok(!f.is_constant() && l == f.ess())
}

/// Number of distinct functions obtained by permuting the `k` variables.
pub fn orbit_size(f: &BoolFn, k: usize) -> Result<usize, ComplexityError> {
    if k > 10 {
        return Err(ComplexityError::OrbitGuard(k));
    }
    let g = f.extend(k)?;
    let mut seen = std::collections::HashSet::new();
    let mut perm: Vec<usize> = (1..=k).collect();
    // Heap's algorithm
    let mut c = vec![0usize; k];
    seen.insert(g.permute(&perm)?);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            seen.insert(g.permute(&perm)?);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(seen.len())
}

/// Labelled expression used by the brute-force oracle.
#[derive(Debug, Clone)]
enum Expr {
    Lit(usize, bool),
    Node(Gate, Vec<Expr>),
}

impl Expr {
    fn value(&self, assignment: usize) -> bool {
        match self {
            Expr::Lit(v, neg) => ((assignment >> (v - 1)) & 1 == 1) != *neg,
            Expr::Node(Gate::And, ch) => ch.iter().all(|c| c.value(assignment)),
            Expr::Node(Gate::Or, ch) => ch.iter().any(|c| c.value(assignment)),
        }
    }
}

/// Smallest size of a labelled tree computing each function, by listing every
/// labelled tree with at most `max_size` leaves and evaluating it pointwise.
/// Constants are assigned 0.
pub fn brute_force_min_sizes(k: usize, max_size: usize) -> Result<BTreeMap<BoolFn, usize>, ComplexityError> {
    if k == 0 || k > 3 || max_size == 0 || max_size > 4 {
        return Err(ComplexityError::CostGuard { k, max_size });
    }
    let mut trees: Vec<Vec<Expr>> = vec![Vec::new()];
    trees.push((1..=k).flat_map(|v| [Expr::Lit(v, false), Expr::Lit(v, true)]).collect());
    for m in 2..=max_size {
        let mut out = Vec::new();
        for gate in [Gate::And, Gate::Or] {
            for comp in compositions(m) {
                let mut partial: Vec<Vec<Expr>> = vec![Vec::new()];
                for &c in &comp {
                    let mut next = Vec::new();
                    for p in &partial {
                        for t in &trees[c] {
                            let mut q = p.clone();
                            q.push(t.clone());
                            next.push(q);
                        }
                    }
                    partial = next;
                }
                out.extend(partial.into_iter().map(|ch| Expr::Node(gate, ch)));
            }
        }
        trees.push(out);
    }
    let mut best = BTreeMap::new();
    best.insert(BoolFn::truth(k)?, 0);
    best.insert(BoolFn::falsity(k)?, 0);
    for (m, list) in trees.iter().enumerate().skip(1) {
        for t in list {
            let f = BoolFn::from_fn(k, |a| t.value(a))?;
            best.entry(f).or_insert(m);
        }
    }
    Ok(best)
}
