// SPDX-License-Identifier: Apache-2.0

//! And/or trees: shapes, labellings, evaluation and the expression syntax.
//!
//! Trees are plane and stored as arenas with the root at index 0. Traversals
//! are iterative so that deep samples do not exhaust the stack.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::boolfn::{BoolFn, BoolFnError, LiteralTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0} has exactly one child")]
    UnaryNode(usize),
    #[error("malformed arena: {0}")]
    Arena(&'static str),
    #[error("literal x{var} exceeds arity {k}")]
    LiteralOutOfRange { var: u32, k: usize },
    #[error("label kind does not match node {0}")]
    LabelMismatch(usize),
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unary group at {pos}")]
    UnaryGroup { pos: usize },
    #[error("mixed operators in group at {pos}")]
    MixedOps { pos: usize },
}

/// An unlabelled rooted plane tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeShape {
    kids: Vec<Vec<u32>>,
}

impl TreeShape {
    pub fn leaf() -> Self {
        TreeShape { kids: vec![Vec::new()] }
    }

    /// A root whose subtrees are `children`, in order.
    pub fn join(children: Vec<TreeShape>) -> Result<Self, TreeError> {
        if children.len() == 1 {
            return Err(TreeError::UnaryNode(0));
        }
        let total: usize = 1 + children.iter().map(|c| c.kids.len()).sum::<usize>();
        let mut kids: Vec<Vec<u32>> = Vec::with_capacity(total);
        kids.push(Vec::with_capacity(children.len()));
        for c in children {
            let off = kids.len() as u32;
            kids[0].push(off);
            kids.extend(c.kids.into_iter().map(|v| v.into_iter().map(|x| x + off).collect()));
        }
        Ok(TreeShape { kids })
    }

    /// Validates an arena whose root is node 0.
    pub fn from_arena(kids: Vec<Vec<u32>>) -> Result<Self, TreeError> {
        if kids.is_empty() {
            return Err(TreeError::Arena("empty arena"));
        }
        let mut parent_seen = vec![false; kids.len()];
        parent_seen[0] = true;
        for (v, ch) in kids.iter().enumerate() {
            if ch.len() == 1 {
                return Err(TreeError::UnaryNode(v));
            }
            for &c in ch {
                let c = c as usize;
                if c >= kids.len() || parent_seen[c] {
                    return Err(TreeError::Arena("child index repeated or out of range"));
                }
                parent_seen[c] = true;
            }
        }
        let shape = TreeShape { kids };
        if shape.preorder().len() != shape.kids.len() {
            return Err(TreeError::Arena("unreachable nodes"));
        }
        Ok(shape)
    }

    /// Arena without validation; callers guarantee the tree invariants.
    pub(crate) fn from_arena_unchecked(kids: Vec<Vec<u32>>) -> Self {
        TreeShape { kids }
    }

    pub fn num_nodes(&self) -> usize {
        self.kids.len()
    }

    pub fn children(&self, v: usize) -> &[u32] {
        &self.kids[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.kids[v].is_empty()
    }

    /// Leaf count `‖t‖`.
    pub fn size(&self) -> usize {
        self.kids.iter().filter(|c| c.is_empty()).count()
    }

    pub fn internal_count(&self) -> usize {
        self.kids.len() - self.size()
    }

    /// Nodes in preorder.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.kids.len());
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.kids[v].iter().rev().map(|&c| c as usize));
        }
        out
    }

    /// Depth of every node.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.kids.len()];
        for v in self.preorder() {
            for &c in &self.kids[v] {
                d[c as usize] = d[v] + 1;
            }
        }
        d
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Depth of the leaf closest to the root.
    pub fn saturation_level(&self) -> usize {
        let mut frontier = vec![0usize];
        let mut depth = 0;
        loop {
            if frontier.iter().any(|&v| self.kids[v].is_empty()) {
                return depth;
            }
            frontier = frontier
                .iter()
                .flat_map(|&v| self.kids[v].iter().map(|&c| c as usize))
                .collect();
            depth += 1;
        }
    }

    /// Subtree induced on the nodes at distance at most `h` from the root.
    pub fn truncate(&self, h: usize) -> TreeShape {
        let depth = self.depths();
        let mut map = vec![u32::MAX; self.kids.len()];
        let mut kids = Vec::new();
        for v in self.preorder() {
            if depth[v] <= h {
                map[v] = kids.len() as u32;
                kids.push(Vec::new());
            }
        }
        for v in self.preorder() {
            if depth[v] < h {
                kids[map[v] as usize] = self.kids[v].iter().map(|&c| map[c as usize]).collect();
            }
        }
        TreeShape { kids }
    }

    /// Subtree sizes (in leaves) of the root's children.
    pub fn root_split(&self) -> Vec<usize> {
        self.kids[0].iter().map(|&c| self.subtree_leaves(c as usize)).collect()
    }

    pub fn subtree_leaves(&self, v: usize) -> usize {
        let mut n = 0;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if self.kids[u].is_empty() {
                n += 1;
            }
            stack.extend(self.kids[u].iter().map(|&c| c as usize));
        }
        n
    }

    /// Bracket signature, `.` for a leaf; equal signatures mean equal shapes.
    pub fn signature(&self) -> String {
        let mut s = String::new();
        let mut stack: Vec<(usize, bool)> = vec![(0, false)];
        while let Some((v, closing)) = stack.pop() {
            if closing {
                s.push(')');
                continue;
            }
            if self.kids[v].is_empty() {
                s.push('.');
            } else {
                s.push('(');
                stack.push((v, true));
                stack.extend(self.kids[v].iter().rev().map(|&c| (c as usize, false)));
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    And,
    Or,
}

impl Gate {
    pub fn flip(self) -> Gate {
        match self {
            Gate::And => Gate::Or,
            Gate::Or => Gate::And,
        }
    }

    /// Value of a gate-leaf: an ∧-leaf is False, an ∨-leaf is True.
    pub fn leaf_value(self) -> bool {
        self == Gate::Or
    }

    fn symbol(self) -> char {
        match self {
            Gate::And => '&',
            Gate::Or => '|',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: u32,
    pub negated: bool,
}

impl Literal {
    pub fn new(var: u32, negated: bool) -> Self {
        Literal { var, negated }
    }

    pub fn value(self, assignment: &[bool]) -> bool {
        assignment[self.var as usize - 1] != self.negated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Gate(Gate),
    Lit(Literal),
}

/// A labelled tree. A childless node labelled by a gate is a gate-leaf; these
/// only arise from trimming or from parsing `T()` / `F()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AndOrTree {
    shape: TreeShape,
    labels: Vec<Label>,
}

impl AndOrTree {
    pub fn new(shape: TreeShape, labels: Vec<Label>) -> Result<Self, TreeError> {
        if labels.len() != shape.num_nodes() {
            return Err(TreeError::Arena("label count differs from node count"));
        }
        for (v, l) in labels.iter().enumerate() {
            if !shape.is_leaf(v) && matches!(l, Label::Lit(_)) {
                return Err(TreeError::LabelMismatch(v));
            }
        }
        Ok(AndOrTree { shape, labels })
    }

    pub(crate) fn new_unchecked(shape: TreeShape, labels: Vec<Label>) -> Self {
        AndOrTree { shape, labels }
    }

    pub fn shape(&self) -> &TreeShape {
        &self.shape
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Label {
        self.labels[v]
    }

    /// Leaf count of the underlying shape.
    pub fn size(&self) -> usize {
        self.shape.size()
    }

    /// Literal-labelled leaves, in preorder.
    pub fn literals(&self) -> Vec<Literal> {
        self.shape
            .preorder()
            .into_iter()
            .filter_map(|v| match self.labels[v] {
                Label::Lit(l) => Some(l),
                Label::Gate(_) => None,
            })
            .collect()
    }

    pub fn max_var(&self) -> u32 {
        self.literals().iter().map(|l| l.var).max().unwrap_or(0)
    }

    pub fn has_gate_leaves(&self) -> bool {
        self.labels
            .iter()
            .enumerate()
            .any(|(v, l)| matches!(l, Label::Gate(_)) && self.shape.is_leaf(v))
    }

    /// The function computed by the tree on `k` variables.
    pub fn eval(&self, k: usize) -> Result<BoolFn, TreeError> {
        let lits = LiteralTable::new(k)?;
        self.eval_with(&lits)
    }

    /// As [`eval`](Self::eval) with a precomputed literal table.
    pub fn eval_with(&self, lits: &LiteralTable) -> Result<BoolFn, TreeError> {
        let k = lits.arity();
        let order = self.shape.preorder();
        let mut vals: Vec<Option<BoolFn>> = vec![None; self.labels.len()];
        for &v in order.iter().rev() {
            let f = match self.labels[v] {
                Label::Lit(l) => {
                    if l.var == 0 || l.var as usize > k {
                        return Err(TreeError::LiteralOutOfRange { var: l.var, k });
                    }
                    lits.get(l.var as usize, l.negated).clone()
                }
                Label::Gate(g) => {
                    let ch = self.shape.children(v);
                    if ch.is_empty() {
                        if g.leaf_value() {
                            lits.truth().clone()
                        } else {
                            lits.falsity().clone()
                        }
                    } else {
                        let mut acc = vals[ch[0] as usize].take().expect("child evaluated");
                        for &c in &ch[1..] {
                            let cv = vals[c as usize].take().expect("child evaluated");
                            match g {
                                Gate::And => acc.and_assign(&cv),
                                Gate::Or => acc.or_assign(&cv),
                            }
                        }
                        acc
                    }
                }
            };
            vals[v] = Some(f);
        }
        Ok(vals[0].take().expect("root evaluated"))
    }

    /// Value at one assignment by direct traversal.
    pub fn eval_at(&self, assignment: &[bool]) -> bool {
        let order = self.shape.preorder();
        let mut vals = vec![false; self.labels.len()];
        for &v in order.iter().rev() {
            vals[v] = match self.labels[v] {
                Label::Lit(l) => l.value(assignment),
                Label::Gate(g) => {
                    let ch = self.shape.children(v);
                    if ch.is_empty() {
                        g.leaf_value()
                    } else if g == Gate::And {
                        ch.iter().all(|&c| vals[c as usize])
                    } else {
                        ch.iter().any(|&c| vals[c as usize])
                    }
                }
            };
        }
        vals[0]
    }

    /// Flips every gate and negates every literal; computes `¬f`.
    pub fn dual(&self) -> AndOrTree {
        let labels = self
            .labels
            .iter()
            .map(|l| match *l {
                Label::Gate(g) => Label::Gate(g.flip()),
                Label::Lit(l) => Label::Lit(Literal::new(l.var, !l.negated)),
            })
            .collect();
        AndOrTree { shape: self.shape.clone(), labels }
    }

    /// Canonical expression text.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some((v, i)) = stack.pop() {
            let ch = self.shape.children(v);
            match self.labels[v] {
                Label::Lit(l) => {
                    if l.negated {
                        s.push('~');
                    }
                    let _ = write!(s, "x{}", l.var);
                }
                Label::Gate(g) if ch.is_empty() => {
                    s.push_str(if g.leaf_value() { "T()" } else { "F()" });
                }
                Label::Gate(g) => {
                    if i == 0 {
                        s.push('(');
                    } else if i < ch.len() {
                        s.push(g.symbol());
                    }
                    if i < ch.len() {
                        stack.push((v, i + 1));
                        stack.push((ch[i] as usize, 0));
                    } else {
                        s.push(')');
                    }
                }
            }
        }
        s
    }
}

/// Labels `t` with i.i.d. uniform gates and i.i.d. uniform literals over `2k`.
pub fn random_labelling<R: Rng + ?Sized>(t: &TreeShape, k: usize, rng: &mut R) -> AndOrTree {
    let labels = (0..t.num_nodes())
        .map(|v| {
            if t.is_leaf(v) {
                Label::Lit(random_literal(k, rng))
            } else {
                Label::Gate(random_gate(rng))
            }
        })
        .collect();
    AndOrTree { shape: t.clone(), labels }
}

#[inline]
pub fn random_gate<R: Rng + ?Sized>(rng: &mut R) -> Gate {
    if rng.gen::<bool>() {
        Gate::And
    } else {
        Gate::Or
    }
}

#[inline]
pub fn random_literal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Literal {
    let r = rng.gen_range(0..2 * k as u32);
    Literal::new(r / 2 + 1, r & 1 == 1)
}

/// Parses the expression grammar; whitespace is ignored.
pub fn parse(text: &str) -> Result<AndOrTree, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, kids: Vec::new(), labels: Vec::new() };
    p.skip_ws();
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    debug_assert_eq!(root, 0);
    Ok(AndOrTree { shape: TreeShape { kids: p.kids }, labels: p.labels })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    kids: Vec<Vec<u32>>,
    labels: Vec<Label>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn node(&mut self, label: Label) -> usize {
        self.kids.push(Vec::new());
        self.labels.push(label);
        self.kids.len() - 1
    }

    fn expr(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(b'(') => self.group(),
            Some(b'~') | Some(b'x') => self.literal(),
            Some(b'T') | Some(b'F') => self.gate_leaf(),
            Some(_) => Err(self.err("expected '(' or a literal")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn gate_leaf(&mut self) -> Result<usize, ParseError> {
        let gate = if self.peek() == Some(b'T') { Gate::Or } else { Gate::And };
        self.pos += 1;
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(self.err("expected '(' after gate-leaf marker"));
        }
        self.pos += 1;
        self.skip_ws();
        if self.peek() != Some(b')') {
            return Err(self.err("expected ')' closing gate-leaf marker"));
        }
        self.pos += 1;
        Ok(self.node(Label::Gate(gate)))
    }

    fn literal(&mut self) -> Result<usize, ParseError> {
        let mut negated = false;
        if self.peek() == Some(b'~') {
            negated = true;
            self.pos += 1;
            self.skip_ws();
        }
        if self.peek() != Some(b'x') {
            return Err(self.err("expected 'x'"));
        }
        self.pos += 1;
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits = &self.src[start..self.pos];
        if digits.is_empty() {
            return Err(self.err("expected variable number"));
        }
        if digits[0] == b'0' {
            return Err(ParseError::Syntax {
                pos: start,
                msg: "variable numbers start at 1 without leading zeros".into(),
            });
        }
        let var: u32 = std::str::from_utf8(digits)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ParseError::Syntax { pos: start, msg: "variable number too large".into() })?;
        Ok(self.node(Label::Lit(Literal::new(var, negated))))
    }

    fn group(&mut self) -> Result<usize, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let v = self.node(Label::Gate(Gate::And));
        let mut children = Vec::new();
        let mut op: Option<u8> = None;
        loop {
            self.skip_ws();
            children.push(self.expr()? as u32);
            self.skip_ws();
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(c @ (b'&' | b'|')) => {
                    if op.is_some_and(|o| o != c) {
                        return Err(ParseError::MixedOps { pos: open });
                    }
                    op = Some(c);
                    self.pos += 1;
                }
                Some(_) => return Err(self.err("expected '&', '|' or ')'")),
                None => return Err(self.err("unclosed group")),
            }
        }
        let Some(op) = op else {
            return Err(ParseError::UnaryGroup { pos: open });
        };
        self.labels[v] = Label::Gate(if op == b'&' { Gate::And } else { Gate::Or });
        self.kids[v] = children;
        Ok(v)
    }
}
