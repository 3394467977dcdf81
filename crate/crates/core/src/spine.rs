// SPDX-License-Identifier: Apache-2.0

//! Lazy evaluation of randomly labelled trees with one infinite spine.
//!
//! The spine is revealed level by level. Two functions are tracked: `Q`, the
//! assignments already forced to True, and `P`, the assignments on which the
//! root still equals the unrevealed tail. Evaluation stops once `P` is empty,
//! which is exactly when the tail-True and tail-False values coincide.
//!
//! Hanging subtrees are generated only as far as trimming keeps them: a
//! subtree is needed only on the subcube of its constraint set, so nodes whose
//! children receive a contradictory set are replaced by their gate constant.
//! Remaining siblings are skipped once a gate's accumulator is absorbing.

use rand::Rng;
use smallvec::SmallVec;

use crate::boolfn::{BoolFn, LiteralTable};
use crate::exprtree::{random_gate, random_literal, Gate, Literal};
use crate::treegen::{sample_alpha_hung_size, sample_alpha_split, SpineModel};
use crate::trimming::MaskConstraints;

/// Where the spine and its hanging subtrees come from.
#[derive(Debug, Clone)]
pub enum SpineSource {
    /// Kesten's tree of a critical Galton–Watson law.
    Gw(SpineModel),
    /// Local limit of Ford's alpha trees: one alpha tree of random size per level.
    Alpha(f64),
}

/// A generated node whose subtree has not been expanded yet.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pending {
    kind: PendKind,
    pub(crate) id: u32,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum PendKind {
    /// Galton–Watson node with its offspring count already drawn.
    Gw(u32),
    /// Alpha tree with this many leaves.
    Alpha(u64),
}

impl Pending {
    #[cfg(test)]
    pub(crate) fn new(kind: PendKind) -> Self {
        Pending { kind, id: 0 }
    }

    #[inline]
    pub(crate) fn is_leaf(self) -> bool {
        match self.kind {
            PendKind::Gw(r) => r == 0,
            PendKind::Alpha(n) => n == 1,
        }
    }
}

/// Budgets for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpineCaps {
    /// Spine levels revealed before giving up.
    pub depth_cap: usize,
    /// Nodes generated before giving up.
    pub node_cap: usize,
    /// Largest alpha tree hung off the spine.
    pub alpha_size_cap: u64,
}

impl Default for SpineCaps {
    fn default() -> Self {
        SpineCaps { depth_cap: 10_000, node_cap: 5_000_000, alpha_size_cap: 1 << 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpineOutcome {
    Function(BoolFn),
    NotStabilized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Overflow;

impl SpineSource {
    /// Pushes the roots hanging from the next spine node.
    pub(crate) fn hung_roots<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        caps: &SpineCaps,
        out: &mut Vec<Pending>,
    ) -> Result<(), Overflow> {
        match self {
            SpineSource::Gw(m) => {
                let step = m.step(rng);
                for _ in 1..step.degree {
                    out.push(Pending { kind: PendKind::Gw(m.offspring().sample(rng) as u32), id: 0 });
                }
            }
            SpineSource::Alpha(alpha) => {
                let n = sample_alpha_hung_size(*alpha, caps.alpha_size_cap, rng).ok_or(Overflow)?;
                out.push(Pending { kind: PendKind::Alpha(n), id: 0 });
            }
        }
        Ok(())
    }

    /// Pushes the children of an internal node.
    #[inline]
    pub(crate) fn expand<R: Rng + ?Sized>(&self, p: Pending, rng: &mut R, out: &mut Vec<Pending>) {
        match (self, p.kind) {
            (SpineSource::Gw(m), PendKind::Gw(r)) => {
                for _ in 0..r {
                    out.push(Pending { kind: PendKind::Gw(m.offspring().sample(rng) as u32), id: 0 });
                }
            }
            (SpineSource::Alpha(alpha), PendKind::Alpha(n)) => {
                let j = sample_alpha_split(n, *alpha, rng);
                out.push(Pending { kind: PendKind::Alpha(j), id: 0 });
                out.push(Pending { kind: PendKind::Alpha(n - j), id: 0 });
            }
            _ => unreachable!("pending node from a different source"),
        }
    }
}

/// Label of a node recorded while tracing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceLabel {
    Gate(Gate),
    Lit(Literal),
    /// Generated but never expanded; any subtree may stand here.
    Unexpanded,
}

/// The part of the infinite tree that one evaluation looked at. Node 0 is the root.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub parent: Vec<u32>,
    pub label: Vec<TraceLabel>,
}

impl Trace {
    fn add(&mut self, parent: u32, label: TraceLabel) -> u32 {
        self.parent.push(parent);
        self.label.push(label);
        (self.parent.len() - 1) as u32
    }
}

struct Frame {
    gate: Gate,
    acc: BoolFn,
    c: MaskConstraints,
    start: usize,
    next: usize,
    end: usize,
}

enum Opened {
    Const(bool),
    Pushed,
}

/// Reusable evaluator; holds scratch buffers between trials.
pub struct SpineEvaluator<'a> {
    src: &'a SpineSource,
    lits: &'a LiteralTable,
    caps: SpineCaps,
    frames: Vec<Frame>,
    depth: usize,
    pend: Vec<Pending>,
    nodes: usize,
    trace: Option<Trace>,
}

#[inline]
fn absorbing(gate: Gate, acc: &BoolFn) -> bool {
    match gate {
        Gate::And => acc.is_false(),
        Gate::Or => acc.is_true(),
    }
}

#[inline]
fn combine(gate: Gate, acc: &mut BoolFn, v: &BoolFn) {
    match gate {
        Gate::And => acc.and_assign(v),
        Gate::Or => acc.or_assign(v),
    }
}

impl<'a> SpineEvaluator<'a> {
    pub fn new(src: &'a SpineSource, lits: &'a LiteralTable, caps: SpineCaps) -> Self {
        SpineEvaluator { src, lits, caps, frames: Vec::new(), depth: 0, pend: Vec::new(), nodes: 0, trace: None }
    }

    /// Records the explored tree during the next evaluations.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Trace::default());
        self
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.replace(Trace::default())
    }

    fn neutral(&self, gate: Gate) -> &BoolFn {
        match gate {
            Gate::And => self.lits.truth(),
            Gate::Or => self.lits.falsity(),
        }
    }

    fn note_children(&mut self, start: usize, parent: u32) {
        if let Some(t) = self.trace.as_mut() {
            for p in &mut self.pend[start..] {
                p.id = t.add(parent, TraceLabel::Unexpanded);
            }
        }
    }

    /// Labels the leaf children in `pend[start..]`, folds them into `acc` and
    /// `c`, and compacts the internal children to the front of the range.
    fn absorb_leaves<R: Rng + ?Sized>(
        &mut self,
        start: usize,
        gate: Gate,
        acc: &mut BoolFn,
        c: &mut MaskConstraints,
        rng: &mut R,
    ) {
        let k = self.lits.arity();
        let mut keep = start;
        for i in start..self.pend.len() {
            let p = self.pend[i];
            if p.is_leaf() {
                let lit = random_literal(k, rng);
                if let Some(t) = self.trace.as_mut() {
                    t.label[p.id as usize] = TraceLabel::Lit(lit);
                }
                c.add_leaf(lit, gate);
                combine(gate, acc, self.lits.get(lit.var as usize, lit.negated));
            } else {
                self.pend[keep] = p;
                keep += 1;
            }
        }
        self.pend.truncate(keep);
    }

    fn open<R: Rng + ?Sized>(&mut self, p: Pending, c: MaskConstraints, rng: &mut R) -> Result<Opened, Overflow> {
        let gate = random_gate(rng);
        if let Some(t) = self.trace.as_mut() {
            t.label[p.id as usize] = TraceLabel::Gate(gate);
        }
        let start = self.pend.len();
        self.src.expand(p, rng, &mut self.pend);
        self.nodes += self.pend.len() - start;
        if self.nodes > self.caps.node_cap {
            return Err(Overflow);
        }
        self.note_children(start, p.id);
        let mut acc = self.neutral(gate).clone();
        let mut c2 = c;
        self.absorb_leaves(start, gate, &mut acc, &mut c2, rng);
        if !c2.is_consistent() {
            self.pend.truncate(start);
            return Ok(Opened::Const(gate.leaf_value()));
        }
        let end = self.pend.len();
        if self.frames.len() == self.depth {
            self.frames.push(Frame { gate, acc, c: c2, start, next: start, end });
        } else {
            let f = &mut self.frames[self.depth];
            f.gate = gate;
            f.acc.assign_from(&acc);
            f.c = c2;
            f.start = start;
            f.next = start;
            f.end = end;
        }
        self.depth += 1;
        Ok(Opened::Pushed)
    }

    /// Value of the subtree at `p` on the subcube of `c`, written into `out`.
    fn eval_subtree<R: Rng + ?Sized>(
        &mut self,
        p: Pending,
        c: MaskConstraints,
        rng: &mut R,
        out: &mut BoolFn,
    ) -> Result<(), Overflow> {
        let base = self.depth;
        match self.open(p, c, rng)? {
            Opened::Const(b) => {
                out.assign_from(if b { self.lits.truth() } else { self.lits.falsity() });
                return Ok(());
            }
            Opened::Pushed => {}
        }
        loop {
            let top = self.depth - 1;
            let (gate, done) = {
                let f = &self.frames[top];
                (f.gate, f.next == f.end || absorbing(f.gate, &f.acc))
            };
            if done {
                self.pend.truncate(self.frames[top].start);
                self.depth -= 1;
                if self.depth == base {
                    out.assign_from(&self.frames[top].acc);
                    return Ok(());
                }
                let (lower, upper) = self.frames.split_at_mut(top);
                let parent = &mut lower[top - 1];
                combine(parent.gate, &mut parent.acc, &upper[0].acc);
                continue;
            }
            let child = self.pend[self.frames[top].next];
            self.frames[top].next += 1;
            let c = self.frames[top].c;
            if let Opened::Const(b) = self.open(child, c, rng)? {
                let f = &mut self.frames[top];
                match (gate, b) {
                    (Gate::And, false) => f.acc.assign_from(self.lits.falsity()),
                    (Gate::Or, true) => f.acc.assign_from(self.lits.truth()),
                    _ => {}
                }
            }
        }
    }

    /// Evaluates a finite alpha tree with `n` leaves grown by recursive
    /// splitting; `α = 0` gives uniform splits, the random binary search tree.
    /// `None` when the node cap is hit.
    pub fn eval_split_tree<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> Option<BoolFn> {
        assert!(matches!(self.src, SpineSource::Alpha(_)), "split trees need an alpha source");
        assert!(n >= 1);
        self.pend.clear();
        self.depth = 0;
        self.nodes = 1;
        if n == 1 {
            let lit = random_literal(self.lits.arity(), rng);
            return Some(self.lits.get(lit.var as usize, lit.negated).clone());
        }
        let root = Pending { kind: PendKind::Alpha(n), id: 0 };
        if let Some(t) = self.trace.as_mut() {
            t.add(u32::MAX, TraceLabel::Unexpanded);
        }
        let mut out = self.lits.falsity().clone();
        let res = self.eval_subtree(root, MaskConstraints::default(), rng, &mut out);
        self.pend.clear();
        self.depth = 0;
        res.ok().map(|_| out)
    }

    /// Evaluates one random labelled spine tree.
    pub fn eval<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SpineOutcome {
        self.pend.clear();
        self.depth = 0;
        self.nodes = 0;
        let res = self.eval_inner(rng);
        self.pend.clear();
        self.depth = 0;
        match res {
            Ok(Some(f)) => SpineOutcome::Function(f),
            _ => SpineOutcome::NotStabilized,
        }
    }

    fn eval_inner<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<BoolFn>, Overflow> {
        let lits = self.lits;
        let mut p = lits.truth().clone();
        let mut q = lits.falsity().clone();
        let mut g = lits.falsity().clone();
        let mut v = lits.falsity().clone();
        let mut c = MaskConstraints::default();
        let mut spine_id = match self.trace.as_mut() {
            Some(t) => t.add(u32::MAX, TraceLabel::Unexpanded),
            None => 0,
        };
        for _ in 0..self.caps.depth_cap {
            let gate = random_gate(rng);
            if let Some(t) = self.trace.as_mut() {
                t.label[spine_id as usize] = TraceLabel::Gate(gate);
            }
            self.src.hung_roots(rng, &self.caps, &mut self.pend)?;
            self.nodes += self.pend.len() + 1;
            if self.nodes > self.caps.node_cap {
                return Err(Overflow);
            }
            self.note_children(0, spine_id);
            if let Some(t) = self.trace.as_mut() {
                spine_id = t.add(spine_id, TraceLabel::Unexpanded);
            }
            g.assign_from(self.neutral(gate));
            let mut c2 = c;
            self.absorb_leaves(0, gate, &mut g, &mut c2, rng);
            if !c2.is_consistent() {
                // every child of this spine node is cut; it becomes a gate-leaf
                if gate == Gate::Or {
                    q.or_assign(&p);
                }
                return Ok(Some(q));
            }
            let internal: SmallVec<[Pending; 4]> = self.pend.drain(..).collect();
            for &child in &internal {
                if absorbing(gate, &g) {
                    break;
                }
                self.eval_subtree(child, c2, rng, &mut v)?;
                combine(gate, &mut g, &v);
            }
            match gate {
                Gate::And => p.and_assign(&g),
                Gate::Or => {
                    v.assign_from(&g);
                    v.and_assign(&p);
                    q.or_assign(&v);
                    p.and_not_assign(&g);
                }
            }
            debug_assert!({
                let mut outside = p.clone();
                outside.and_not_assign(&lits.cube(c2.must_true, c2.must_false));
                outside.is_false()
            });
            if p.is_false() {
                return Ok(Some(q));
            }
            c = c2;
        }
        Ok(None)
    }
}

/// Size and repetitions of `trim` applied to a whole spine tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimCount {
    pub size: u64,
    pub repetitions: u64,
}

/// Generates the trimmed spine tree for `k ≤ 64` variables and counts its
/// literal leaves. `None` when a cap is hit first.
pub fn trim_spine<R: Rng + ?Sized>(src: &SpineSource, k: usize, caps: &SpineCaps, rng: &mut R) -> Option<TrimCount> {
    assert!((1..=64).contains(&k), "trim counting supports 1 ≤ k ≤ 64");
    let mut c = MaskConstraints::default();
    let mut size = 0u64;
    let mut vars = 0u64;
    let mut nodes = 0usize;
    let mut roots: Vec<Pending> = Vec::new();
    let mut stack: Vec<(Pending, MaskConstraints)> = Vec::new();
    let mut kids: Vec<Pending> = Vec::new();
    for _ in 0..caps.depth_cap {
        let gate = random_gate(rng);
        roots.clear();
        src.hung_roots(rng, caps, &mut roots).ok()?;
        let mut c2 = c;
        let mut level_size = 0u64;
        let mut level_vars = 0u64;
        for _ in roots.iter().filter(|r| r.is_leaf()) {
            let lit = random_literal(k, rng);
            c2.add_leaf(lit, gate);
            level_size += 1;
            level_vars |= 1u64 << (lit.var - 1);
        }
        if !c2.is_consistent() {
            return Some(TrimCount { size, repetitions: size - vars.count_ones() as u64 });
        }
        size += level_size;
        vars |= level_vars;
        stack.extend(roots.iter().filter(|r| !r.is_leaf()).map(|&r| (r, c2)));
        while let Some((p, cp)) = stack.pop() {
            let g = random_gate(rng);
            kids.clear();
            src.expand(p, rng, &mut kids);
            nodes += kids.len();
            if nodes > caps.node_cap {
                return None;
            }
            let mut c3 = cp;
            let mut s = 0u64;
            let mut vs = 0u64;
            for _ in kids.iter().filter(|x| x.is_leaf()) {
                let lit = random_literal(k, rng);
                c3.add_leaf(lit, g);
                s += 1;
                vs |= 1u64 << (lit.var - 1);
            }
            if c3.is_consistent() {
                size += s;
                vars |= vs;
                stack.extend(kids.iter().filter(|x| !x.is_leaf()).map(|&x| (x, c3)));
            }
        }
        c = c2;
        nodes += roots.len() + 1;
        if nodes > caps.node_cap {
            return None;
        }
    }
    None
}
