// SPDX-License-Identifier: Apache-2.0

//! Tree-shape samplers and split laws.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::Deserialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::exprtree::TreeShape;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid offspring distribution: {0}")]
    Offspring(String),
    #[error("tree exceeded the node cap of {0}")]
    Overflow(usize),
    #[error("size {0} is not attainable under this offspring law")]
    Unattainable(usize),
    #[error("retry budget of {0} node generations exhausted")]
    BudgetExhausted(u64),
    #[error("parameter out of range: {0}")]
    Domain(String),
}

/// Offspring law `ξ` with finite (possibly truncated) support.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDist {
    p: Vec<f64>,
    cdf: Vec<f64>,
    critical: bool,
}

#[derive(Deserialize)]
struct OffspringJson {
    p: BTreeMap<String, f64>,
    #[serde(default)]
    critical: bool,
}

impl OffspringDist {
    pub fn new(p: Vec<f64>, critical: bool) -> Result<Self, GenError> {
        if p.is_empty() || p.iter().any(|&x| !(0.0..=1.0).contains(&x) || x.is_nan()) {
            return Err(GenError::Offspring("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GenError::Offspring(format!("probabilities sum to {total}")));
        }
        if p.get(1).copied().unwrap_or(0.0) != 0.0 {
            return Err(GenError::Offspring("p_1 must be 0 (no unary nodes)".into()));
        }
        let d = OffspringDist { cdf: cumulative(&p), p, critical };
        if critical && (d.mean() - 1.0).abs() > 1e-9 {
            return Err(GenError::Offspring(format!("flagged critical but mean is {}", d.mean())));
        }
        Ok(d)
    }

    /// `p_0 = p_2 = 1/2`.
    pub fn catalan() -> Self {
        OffspringDist::new(vec![0.5, 0.0, 0.5], true).expect("valid")
    }

    /// Parses `{"p": {"0": 0.5, "2": 0.5}, "critical": true}`.
    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let raw: OffspringJson =
            serde_json::from_str(text).map_err(|e| GenError::Offspring(e.to_string()))?;
        let mut p = Vec::new();
        for (key, prob) in raw.p {
            let i: usize = key
                .trim()
                .parse()
                .map_err(|_| GenError::Offspring(format!("arity key {key:?} is not an integer")))?;
            if i >= 1 << 16 {
                return Err(GenError::Offspring(format!("arity {i} too large")));
            }
            if p.len() <= i {
                p.resize(i + 1, 0.0);
            }
            p[i] += prob;
        }
        OffspringDist::new(p, raw.critical)
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.p.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_critical(&self) -> bool {
        self.critical
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, &x)| i as f64 * x).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, &x)| (i * i) as f64 * x).sum()
    }

    /// The size-biased law `P(ξ̂ = i) = i·p_i`, renormalised.
    pub fn size_biased(&self) -> Result<OffspringDist, GenError> {
        let m = self.mean();
        if m <= 0.0 {
            return Err(GenError::Offspring("mean is zero".into()));
        }
        let p: Vec<f64> = self.p.iter().enumerate().map(|(i, &x)| i as f64 * x / m).collect();
        Ok(OffspringDist { cdf: cumulative(&p), p, critical: false })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match self.cdf.iter().position(|&c| u < c) {
            Some(i) => i,
            None => self.cdf.iter().rposition(|_| true).map_or(0, |last| {
                (0..=last).rev().find(|&i| self.p[i] > 0.0).unwrap_or(0)
            }),
        }
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

/// Whether sizes count every node or only leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeMode {
    TotalNodes,
    Leaves,
}

/// Unconditioned Galton–Watson tree, generated breadth first.
pub fn sample_gw<R: Rng + ?Sized>(
    d: &OffspringDist,
    rng: &mut R,
    node_cap: usize,
) -> Result<TreeShape, GenError> {
    let mut kids: Vec<Vec<u32>> = vec![Vec::new()];
    let mut next = 0usize;
    while next < kids.len() {
        let r = d.sample(rng);
        if kids.len() + r > node_cap {
            return Err(GenError::Overflow(node_cap));
        }
        let first = kids.len() as u32;
        kids[next] = (first..first + r as u32).collect();
        kids.extend(std::iter::repeat_with(Vec::new).take(r));
        next += 1;
    }
    Ok(TreeShape::from_arena_unchecked(kids))
}

/// Whether a GW tree with exactly `n` units (nodes or leaves) has positive probability.
pub fn size_attainable(d: &OffspringDist, n: usize, mode: SizeMode) -> bool {
    if n == 0 || d.prob(0) == 0.0 {
        return false;
    }
    // Each internal node of arity i adds i nodes (or i-1 leaves) to a lone root.
    let steps: Vec<usize> = (2..d.probs().len())
        .filter(|&i| d.prob(i) > 0.0)
        .map(|i| if mode == SizeMode::TotalNodes { i } else { i - 1 })
        .collect();
    let target = n - 1;
    let mut reach = vec![false; target + 1];
    reach[0] = true;
    for s in 1..=target {
        reach[s] = steps.iter().any(|&st| st <= s && reach[s - st]);
    }
    reach[target]
}

/// GW tree conditioned on having exactly `n` nodes or leaves, by rejection.
pub fn sample_gw_conditioned<R: Rng + ?Sized>(
    d: &OffspringDist,
    n: usize,
    mode: SizeMode,
    rng: &mut R,
    budget: u64,
) -> Result<TreeShape, GenError> {
    if !size_attainable(d, n, mode) {
        return Err(GenError::Unattainable(n));
    }
    let mut spent = 0u64;
    let mut kids: Vec<Vec<u32>> = Vec::with_capacity(2 * n);
    'attempt: loop {
        kids.clear();
        kids.push(Vec::new());
        let mut next = 0usize;
        let mut leaves = 0usize;
        while next < kids.len() {
            let r = d.sample(rng);
            spent += 1;
            if spent > budget {
                return Err(GenError::BudgetExhausted(budget));
            }
            if r == 0 {
                leaves += 1;
            }
            let first = kids.len() as u32;
            kids[next] = (first..first + r as u32).collect();
            kids.extend(std::iter::repeat_with(Vec::new).take(r));
            next += 1;
            let too_big = match mode {
                SizeMode::TotalNodes => kids.len() > n,
                // every pending node contributes at least one leaf
                SizeMode::Leaves => leaves + (kids.len() - next) > n,
            };
            if too_big {
                continue 'attempt;
            }
        }
        let size = match mode {
            SizeMode::TotalNodes => kids.len(),
            SizeMode::Leaves => leaves,
        };
        if size == n {
            return Ok(TreeShape::from_arena_unchecked(std::mem::take(&mut kids)));
        }
    }
}

/// Kesten's tree for a critical law: spine nodes have size-biased degree.
#[derive(Debug, Clone)]
pub struct SpineModel {
    offspring: OffspringDist,
    biased: OffspringDist,
}

/// One spine node: its degree and the position of the spine child.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpineStep {
    pub degree: usize,
    pub spine_pos: usize,
}

/// A spine node together with its fully sampled hanging subtrees.
#[derive(Debug, Clone)]
pub struct SpineLevel {
    pub step: SpineStep,
    pub hung: Vec<TreeShape>,
}

pub fn spine_generator(d: &OffspringDist) -> Result<SpineModel, GenError> {
    if !d.is_critical() {
        return Err(GenError::Offspring("spine construction needs a critical law".into()));
    }
    Ok(SpineModel { offspring: d.clone(), biased: d.size_biased()? })
}

impl SpineModel {
    pub fn offspring(&self) -> &OffspringDist {
        &self.offspring
    }

    pub fn size_biased(&self) -> &OffspringDist {
        &self.biased
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> SpineStep {
        let degree = self.biased.sample(rng);
        SpineStep { degree, spine_pos: rng.gen_range(0..degree) }
    }

    /// Next spine level with its `degree − 1` hanging GW trees.
    pub fn level<R: Rng + ?Sized>(&self, rng: &mut R, node_cap: usize) -> Result<SpineLevel, GenError> {
        let step = self.step(rng);
        let hung = (1..step.degree)
            .map(|_| sample_gw(&self.offspring, rng, node_cap))
            .collect::<Result<_, _>>()?;
        Ok(SpineLevel { step, hung })
    }
}

/// Random binary search tree on `n − 1` keys; its `n` external nodes are the leaves.
pub fn sample_bst<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<TreeShape, GenError> {
    if n == 0 {
        return Err(GenError::Domain("BST needs n ≥ 1 leaves".into()));
    }
    let keys = n - 1;
    if keys == 0 {
        return Ok(TreeShape::leaf());
    }
    let mut perm: Vec<u32> = (0..keys as u32).collect();
    for i in (1..keys).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    const NIL: u32 = u32::MAX;
    let mut left = vec![NIL; keys];
    let mut right = vec![NIL; keys];
    let root = perm[0];
    for &key in &perm[1..] {
        let mut cur = root;
        loop {
            let slot = if key < cur { &mut left[cur as usize] } else { &mut right[cur as usize] };
            if *slot == NIL {
                *slot = key;
                break;
            }
            cur = *slot;
        }
    }
    // Preorder relabelling with external nodes as leaves.
    let mut kids: Vec<Vec<u32>> = Vec::with_capacity(2 * keys + 1);
    let mut stack: Vec<(u32, usize)> = vec![(root, usize::MAX)];
    while let Some((key, parent)) = stack.pop() {
        let id = kids.len() as u32;
        kids.push(Vec::new());
        if parent != usize::MAX {
            kids[parent].push(id);
        }
        if key == NIL {
            continue;
        }
        let k = key as usize;
        stack.push((right[k], id as usize));
        stack.push((left[k], id as usize));
    }
    Ok(TreeShape::from_arena_unchecked(kids))
}

/// Complete binary tree with `2^h` leaves.
pub fn balanced_binary(h: usize) -> TreeShape {
    let mut kids: Vec<Vec<u32>> = Vec::with_capacity((2usize << h) - 1);
    let mut stack = vec![(0usize, usize::MAX)];
    while let Some((depth, parent)) = stack.pop() {
        let id = kids.len();
        kids.push(Vec::new());
        if parent != usize::MAX {
            kids[parent].push(id as u32);
        }
        if depth < h {
            stack.push((depth + 1, id));
            stack.push((depth + 1, id));
        }
    }
    TreeShape::from_arena_unchecked(kids)
}

fn check_alpha(alpha: f64) -> Result<(), GenError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(GenError::Domain(format!("alpha = {alpha} outside (0, 1]")))
    }
}

/// Ford's alpha tree with `n` leaves, grown by weighted edge insertion.
///
/// Every node owns the edge above it (the root owns the root edge). Edges
/// above leaves weigh `1 − α`, all others `α`; the class is picked by weight
/// and the edge uniformly within it, which is cumulative inversion over the
/// order `[internal edges…, leaf edges…]`.
pub fn sample_alpha<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Result<TreeShape, GenError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(GenError::Domain("alpha tree needs n ≥ 1".into()));
    }
    const NIL: u32 = u32::MAX;
    let mut parent: Vec<u32> = vec![NIL];
    let mut kids: Vec<[u32; 2]> = vec![[NIL, NIL]];
    let mut leaves: Vec<u32> = vec![0];
    let mut internals: Vec<u32> = Vec::new();
    let mut root = 0u32;
    for m in 1..n {
        let target = if m == 1 {
            leaves[0]
        } else {
            let iw = internals.len() as f64 * alpha;
            let u = rng.gen::<f64>() * (m as f64 - alpha);
            if u < iw {
                internals[((u / alpha) as usize).min(internals.len() - 1)]
            } else {
                let j = ((u - iw) / (1.0 - alpha)) as usize;
                leaves[j.min(leaves.len() - 1)]
            }
        };
        let w = kids.len() as u32;
        let leaf = w + 1;
        let p = parent[target as usize];
        kids.push(if rng.gen::<bool>() { [target, leaf] } else { [leaf, target] });
        kids.push([NIL, NIL]);
        parent.push(p);
        parent.push(w);
        parent[target as usize] = w;
        if p == NIL {
            root = w;
        } else {
            let slot = kids[p as usize].iter().position(|&c| c == target).expect("child link");
            kids[p as usize][slot] = w;
        }
        internals.push(w);
        leaves.push(leaf);
    }
    let mut out: Vec<Vec<u32>> = Vec::with_capacity(kids.len());
    let mut stack: Vec<(u32, usize)> = vec![(root, usize::MAX)];
    while let Some((v, par)) = stack.pop() {
        let id = out.len() as u32;
        out.push(Vec::new());
        if par != usize::MAX {
            out[par].push(id);
        }
        let [a, b] = kids[v as usize];
        if a != NIL {
            stack.push((b, id as usize));
            stack.push((a, id as usize));
        }
    }
    Ok(TreeShape::from_arena_unchecked(out))
}

/// `q_n^α(j)`: probability that the alpha tree of size `n` has a left subtree of size `j`.
pub fn alpha_split_pmf(n: usize, alpha: f64, j: usize) -> Result<f64, GenError> {
    check_alpha(alpha)?;
    if n < 2 || j == 0 || j >= n {
        return Err(GenError::Domain(format!("need 1 ≤ j ≤ n−1 and n ≥ 2, got n={n}, j={j}")));
    }
    if n == 2 {
        return Ok(1.0);
    }
    let (nf, jf) = (n as f64, j as f64);
    let bracket = alpha / 2.0 * binom(n, j) + (1.0 - 2.0 * alpha) * binom(n - 2, j - 1);
    if alpha < 1.0 {
        let ln = ln_gamma(jf - alpha) + ln_gamma(nf - jf - alpha) - ln_gamma(nf - alpha) - ln_gamma(1.0 - alpha);
        Ok(ln.exp() * bracket)
    } else {
        // Γ(m−α)/Γ(1−α) = ∏_{i<m}(i−α); at α = 1 the i = 1 factor vanishes.
        let zeros = (j >= 2) as i32 + (n - j >= 2) as i32 - 1;
        if zeros > 0 {
            return Ok(0.0);
        }
        let r = |m: usize| (2..m).map(|i| (i - 1) as f64).product::<f64>();
        Ok(r(j) * r(n - j) / r(n) * bracket)
    }
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        .exp()
}

/// Samples the left subtree size of an alpha tree with `n` leaves.
///
/// Small trees scan the pmf of the smaller side upward with the ratio
/// recurrence for `T(j) = Γ(j−α)Γ(n−j−α)/(Γ(n−α)Γ(1−α))·C(n,j)`. Large trees
/// split the pmf as `α/2·T(j) + (1−2α)·T(j)·j(n−j)/(n(n−1))`: the second part
/// is `1 + BetaBinomial(n−2, 1−α, 1−α)`, the first is drawn by rejection from
/// the hanging-size law. For `α > 1/2` the second part is negative and is
/// handled by thinning the first.
pub fn sample_alpha_split<R: Rng + ?Sized>(n: u64, alpha: f64, rng: &mut R) -> u64 {
    debug_assert!(n >= 2);
    if n == 2 {
        return 1;
    }
    if n <= SPLIT_SCAN_LIMIT || alpha >= 1.0 {
        return scan_alpha_split(n, alpha, rng);
    }
    let nf = n as f64;
    if alpha <= 0.5 {
        let ln_b = ln_gamma(1.0 - alpha) - ln_gamma(2.0 - 2.0 * alpha) + ln_gamma_ratio(nf, -2.0 * alpha, -alpha);
        let mass2 = (1.0 - 2.0 * alpha) * ln_b.exp();
        if rng.gen::<f64>() < mass2 {
            let a = 1.0 - alpha;
            let p = Beta::new(a, a).expect("positive shape").sample(rng);
            return 1 + Binomial::new(n - 2, p).expect("p in [0,1]").sample(rng);
        }
        sample_alpha_split_heavy(n, alpha, rng)
    } else {
        let c = 2.0 * (2.0 * alpha - 1.0) / alpha / (nf * (nf - 1.0));
        loop {
            let j = sample_alpha_split_heavy(n, alpha, rng);
            let jf = j as f64;
            if rng.gen::<f64>() < 1.0 - c * jf * (nf - jf) {
                return j;
            }
        }
    }
}

const SPLIT_SCAN_LIMIT: u64 = 256;

fn scan_alpha_split<R: Rng + ?Sized>(n: u64, alpha: f64, rng: &mut R) -> u64 {
    let nf = n as f64;
    let half = n / 2;
    let u: f64 = rng.gen();
    let mut t = nf / (nf - 1.0 - alpha);
    let mut cum = 0.0;
    let mut m = 1u64;
    loop {
        let mf = m as f64;
        let q = t * (alpha / 2.0 + (1.0 - 2.0 * alpha) * mf * (nf - mf) / (nf * (nf - 1.0)));
        cum += if 2 * m == n { q } else { 2.0 * q };
        if u < cum || m >= half {
            break;
        }
        t *= (mf - alpha) / (nf - mf - 1.0 - alpha) * (nf - mf) / (mf + 1.0);
        m += 1;
    }
    if 2 * m != n && rng.gen::<bool>() {
        n - m
    } else {
        m
    }
}

/// Draws `j` with probability proportional to `T(j)`, for `0 < α < 1`.
fn sample_alpha_split_heavy<R: Rng + ?Sized>(n: u64, alpha: f64, rng: &mut R) -> u64 {
    let half = n / 2;
    let ln_w = |m: u64| ln_gamma_ratio(m as f64, -alpha, 1.0);
    let floor = alpha_hung_log_survival(alpha, half + 1).exp();
    loop {
        // the smaller side, proposed from the hanging-size law restricted to [1, half]
        let u = floor + (1.0 - floor) * (1.0 - rng.gen::<f64>());
        let s = hung_size_inverse(alpha, u.ln(), half);
        let mult = if 2 * s == n { 1.0 } else { 2.0 };
        let accept = (ln_w(n - s) - ln_w(n - half)).exp() * mult / 2.0;
        if rng.gen::<f64>() < accept {
            return if 2 * s != n && rng.gen::<bool>() { n - s } else { s };
        }
    }
}

/// `ln Γ(x+a) − ln Γ(x+b)`, stable for large `x`.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    if x < 1e4 {
        return ln_gamma(x + a) - ln_gamma(x + b);
    }
    let b2 = |t: f64| t * t - t + 1.0 / 6.0;
    let b3 = |t: f64| t * t * t - 1.5 * t * t + 0.5 * t;
    (a - b) * x.ln() + (b2(a) - b2(b)) / (2.0 * x) - (b3(a) - b3(b)) / (6.0 * x * x)
}

/// `ln P(N ≥ m) = ln Γ(m−α) − ln Γ(1−α) − ln Γ(m)` for the hanging-tree size
/// `P(N = m) = αΓ(m−α)/(m!Γ(1−α))` of the alpha spine.
fn alpha_hung_log_survival(alpha: f64, m: u64) -> f64 {
    ln_gamma_ratio(m as f64, -alpha, 0.0) - ln_gamma(1.0 - alpha)
}

/// Largest `m ≤ hi` with `ln P(N ≥ m) ≥ lu`.
fn hung_size_inverse(alpha: f64, lu: f64, hi: u64) -> u64 {
    let (mut lo, mut hi) = (1u64, hi + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if alpha_hung_log_survival(alpha, mid) >= lu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Size of an alpha tree hanging off the alpha spine; `None` beyond `cap`.
pub fn sample_alpha_hung_size<R: Rng + ?Sized>(alpha: f64, cap: u64, rng: &mut R) -> Option<u64> {
    if alpha >= 1.0 {
        return Some(1);
    }
    let u: f64 = 1.0 - rng.gen::<f64>();
    let lu = u.ln();
    if alpha_hung_log_survival(alpha, cap) >= lu {
        return None;
    }
    Some(hung_size_inverse(alpha, lu, cap - 1))
}

/// `P(N = m)` for the alpha-spine hanging size.
pub fn alpha_hung_size_pmf(alpha: f64, m: u64) -> f64 {
    let mf = m as f64;
    (alpha.ln() + ln_gamma(mf - alpha) - ln_gamma(mf + 1.0) - ln_gamma(1.0 - alpha)).exp()
}

/// Value with a separate count of `(1−α)` factors, exact at `α = 1`.
#[derive(Clone, Copy)]
struct Vanishing {
    zeros: i32,
    log: f64,
}

impl Vanishing {
    fn one() -> Self {
        Vanishing { zeros: 0, log: 0.0 }
    }

    fn mul_factor(&mut self, x: f64, is_one_minus_alpha: bool, alpha_is_one: bool) {
        if is_one_minus_alpha && alpha_is_one {
            self.zeros += 1;
        } else {
            self.log += x.ln();
        }
    }

    fn div(&mut self, other: Vanishing) {
        self.zeros -= other.zeros;
        self.log -= other.log;
    }

    fn mul(&mut self, other: Vanishing) {
        self.zeros += other.zeros;
        self.log += other.log;
    }
}

/// `Γ(m−α)/Γ(1−α) = ∏_{i=1}^{m−1}(i−α)`.
fn rising_ratio(m: usize, alpha: f64) -> Vanishing {
    let mut v = Vanishing::one();
    for i in 1..m {
        v.mul_factor(i as f64 - alpha, i == 1, alpha == 1.0);
    }
    v
}

/// Alpha–gamma split probability of the multiset `parts` (any order).
pub fn alpha_gamma_split_pmf(n: usize, alpha: f64, gamma: f64, parts: &[usize]) -> Result<f64, GenError> {
    if !(gamma > 0.0 && gamma <= alpha && alpha <= 1.0) {
        return Err(GenError::Domain(format!("need 0 < γ ≤ α ≤ 1, got α={alpha}, γ={gamma}")));
    }
    let k = parts.len();
    if k < 2 || parts.contains(&0) || parts.iter().sum::<usize>() != n {
        return Err(GenError::Domain(format!("{parts:?} is not a partition of {n} into ≥ 2 parts")));
    }
    let a1 = alpha == 1.0;
    let nf = n as f64;
    let sum_sq: f64 = parts.iter().map(|&x| (x * x) as f64).sum();
    let cross = nf * nf - sum_sq;
    let mut v = Vanishing::one();
    if parts.iter().all(|&x| x == 1) {
        // the bracket is exactly 1 − α for singleton parts
        v.mul_factor(1.0 - alpha, true, a1);
    } else {
        v.mul_factor(gamma + (1.0 - alpha - gamma) / (nf * (nf - 1.0)) * cross, false, a1);
    }
    let mut ln_multi = ln_gamma(nf + 1.0);
    for &x in parts {
        ln_multi -= ln_gamma(x as f64 + 1.0);
    }
    let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
    for &x in parts {
        *mult.entry(x).or_default() += 1;
    }
    for &m in mult.values() {
        ln_multi -= ln_gamma(m as f64 + 1.0);
    }
    v.log += ln_multi + (k as f64 - 2.0) * alpha.ln();
    let ratio = gamma / alpha;
    for j in 1..=k.saturating_sub(2) {
        let f = j as f64 - ratio;
        if f == 0.0 {
            return Ok(0.0);
        }
        v.log += f.ln();
    }
    for &x in parts {
        v.mul(rising_ratio(x, alpha));
    }
    v.div(rising_ratio(n, alpha));
    match v.zeros {
        z if z > 0 => Ok(0.0),
        0 => Ok(v.log.exp()),
        _ => Err(GenError::Domain("singular split probability".into())),
    }
}

/// All partitions of `n` into at least two parts, parts non-increasing.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n.saturating_sub(1), &mut Vec::new(), &mut out);
    out
}

/// Offspring law of the associative tree with `k` variables.
pub fn associative_offspring(k: usize) -> Result<OffspringDist, GenError> {
    if k == 0 {
        return Err(GenError::Domain("k must be ≥ 1".into()));
    }
    let s = (k as f64).sqrt();
    let r = s / (1.0 + s);
    let c = 1.0 / (k as f64 * (1.0 + 1.0 / (1.0 + s)));
    let mut p = vec![c * k as f64, 0.0];
    let mut term = c * r;
    let mut i = 2;
    loop {
        term *= r;
        if term < 1e-17 && i > 2 {
            break;
        }
        p.push(term);
        i += 1;
    }
    let cdf = cumulative(&p);
    Ok(OffspringDist { p, cdf, critical: true })
}

/// Wedderburn–Etherington numbers `y_1, …, y_nmax`.
pub fn unordered_binary_counts(nmax: usize) -> Vec<BigUint> {
    let mut y: Vec<BigUint> = vec![BigUint::zero(); nmax + 1];
    if nmax >= 1 {
        y[1] = BigUint::one();
    }
    for n in 2..=nmax {
        let mut s = BigUint::zero();
        for i in 1..n.div_ceil(2) {
            s += &y[i] * &y[n - i];
        }
        if n % 2 == 0 {
            let h = &y[n / 2];
            s += h * (h + 1u32) / 2u32;
        }
        y[n] = s;
    }
    y.remove(0);
    y
}

/// `y_{n−i}·y_i / y_n`, the chance that the smaller root subtree has `i < n/2` leaves.
pub fn unordered_split_pmf(n: usize, i: usize) -> Result<BigRational, GenError> {
    if i == 0 || 2 * i >= n {
        return Err(GenError::Domain(format!("need 1 ≤ i < n/2, got n={n}, i={i}")));
    }
    let y = unordered_binary_counts(n);
    let num = &y[n - i - 1] * &y[i - 1];
    Ok(BigRational::new(num.into(), y[n - 1].clone().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn offspring_validation() {
        assert!(OffspringDist::new(vec![0.5, 0.1, 0.4], false).is_err());
        assert!(OffspringDist::new(vec![0.5, 0.0, 0.4], false).is_err());
        assert!(OffspringDist::new(vec![0.6, 0.0, 0.4], true).is_err());
        let d = OffspringDist::from_json(r#"{"p": {"0": 0.5, "2": 0.5}, "critical": true}"#).unwrap();
        assert_eq!(d, OffspringDist::catalan());
        assert!(OffspringDist::from_json(r#"{"p": {"a": 1.0}}"#).is_err());
    }

    #[test]
    fn catalan_small_tree_probabilities() {
        let d = OffspringDist::catalan();
        let mut r = rng(1);
        let n = 200_000;
        let (mut one, mut three) = (0, 0);
        for _ in 0..n {
            match sample_gw(&d, &mut r, 1 << 20).map(|t| t.num_nodes()) {
                Ok(1) => one += 1,
                Ok(3) => three += 1,
                _ => {}
            }
        }
        let p1 = one as f64 / n as f64;
        let p3 = three as f64 / n as f64;
        assert!((p1 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        assert!((p3 - 0.125).abs() < 4.0 * (0.125 * 0.875 / n as f64).sqrt());
        let d0 = OffspringDist::new(vec![1.0], false).unwrap();
        assert_eq!(sample_gw(&d0, &mut r, 10).unwrap().num_nodes(), 1);
    }

    #[test]
    fn overflow_is_reported() {
        let d = OffspringDist::new(vec![0.0, 0.0, 1.0], false).unwrap();
        assert_eq!(sample_gw(&d, &mut rng(0), 100), Err(GenError::Overflow(100)));
    }

    #[test]
    fn conditioned_sizes_and_errors() {
        let d = OffspringDist::catalan();
        let mut r = rng(2);
        assert_eq!(sample_gw_conditioned(&d, 1, SizeMode::Leaves, &mut r, 1000).unwrap().num_nodes(), 1);
        assert_eq!(
            sample_gw_conditioned(&d, 4, SizeMode::TotalNodes, &mut r, 1000),
            Err(GenError::Unattainable(4))
        );
        for n in [5usize, 21, 101] {
            let t = sample_gw_conditioned(&d, n, SizeMode::TotalNodes, &mut r, 10_000_000).unwrap();
            assert_eq!(t.num_nodes(), n);
        }
        // Poisson(1) with the unary mass moved to zero children: no longer critical.
        let mut p: Vec<f64> = (0..30)
            .map(|i| (-1.0f64).exp() / (1..=i).map(|x| x as f64).product::<f64>())
            .collect();
        p[0] += p[1];
        p[1] = 0.0;
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let pois = OffspringDist::new(p, false).unwrap();
        for n in [6usize, 9] {
            let t = sample_gw_conditioned(&pois, n, SizeMode::TotalNodes, &mut r, 10_000_000).unwrap();
            assert_eq!(t.num_nodes(), n);
        }
        assert!(matches!(
            sample_gw_conditioned(&d, 2001, SizeMode::TotalNodes, &mut r, 10),
            Err(GenError::BudgetExhausted(10))
        ));
    }

    #[test]
    fn conditioned_catalan_three_leaves_is_uniform() {
        let d = OffspringDist::catalan();
        let mut r = rng(3);
        let n = 20_000;
        let left_heavy = (0..n)
            .filter(|_| {
                let t = sample_gw_conditioned(&d, 3, SizeMode::Leaves, &mut r, 1 << 30).unwrap();
                t.root_split() == vec![2, 1]
            })
            .count();
        let p = left_heavy as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn catalan_spine_degree_is_two() {
        let m = spine_generator(&OffspringDist::catalan()).unwrap();
        let b = m.size_biased();
        assert_eq!(b.probs(), &[0.0, 0.0, 1.0]);
        let mean: f64 = b.mean();
        assert!((mean - 2.0).abs() < 1e-15);
        let mut r = rng(4);
        for _ in 0..100 {
            let lvl = m.level(&mut r, 1 << 20).unwrap();
            assert_eq!(lvl.step.degree, 2);
            assert_eq!(lvl.hung.len(), 1);
        }
        assert!(spine_generator(&OffspringDist::new(vec![0.6, 0.0, 0.4], false).unwrap()).is_err());
    }

    #[test]
    fn bst_small_cases() {
        let mut r = rng(5);
        assert_eq!(sample_bst(1, &mut r).unwrap().num_nodes(), 1);
        assert_eq!(sample_bst(2, &mut r).unwrap().signature(), "(..)");
        let n = 20_000;
        let left = (0..n)
            .filter(|_| sample_bst(3, &mut r).unwrap().signature() == "((..).)")
            .count();
        let p = left as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        let t = sample_bst(1000, &mut r).unwrap();
        assert_eq!(t.size(), 1000);
        assert!(t.preorder().iter().all(|&v| t.children(v).len() != 1));
    }

    #[test]
    fn balanced_shapes() {
        assert_eq!(balanced_binary(0).num_nodes(), 1);
        let t = balanced_binary(3);
        assert_eq!(t.size(), 8);
        assert_eq!(t.saturation_level(), 3);
        for h in 0..10 {
            assert_eq!(balanced_binary(h).size(), 1 << h);
        }
    }

    #[test]
    fn alpha_small_cases() {
        let mut r = rng(6);
        assert_eq!(sample_alpha(1, 0.3, &mut r).unwrap().num_nodes(), 1);
        assert_eq!(sample_alpha(2, 0.3, &mut r).unwrap().signature(), "(..)");
        assert!(sample_alpha(3, 0.0, &mut r).is_err());
        assert!(sample_alpha(3, 1.2, &mut r).is_err());
        for alpha in [0.2, 0.5, 1.0] {
            let t = sample_alpha(50, alpha, &mut r).unwrap();
            assert_eq!(t.size(), 50);
            assert!(t.preorder().iter().all(|&v| matches!(t.children(v).len(), 0 | 2)));
        }
    }

    #[test]
    fn alpha_split_pmf_properties() {
        for alpha in [0.1, 0.3, 0.5, 0.8, 1.0] {
            assert_eq!(alpha_split_pmf(2, alpha, 1).unwrap(), 1.0);
            for n in [3usize, 7, 10, 40] {
                let total: f64 = (1..n).map(|j| alpha_split_pmf(n, alpha, j).unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-10, "alpha={alpha} n={n} total={total}");
                for j in 1..n {
                    let a = alpha_split_pmf(n, alpha, j).unwrap();
                    let b = alpha_split_pmf(n, alpha, n - j).unwrap();
                    assert!((a - b).abs() < 1e-12);
                }
                assert!(alpha_split_pmf(n, alpha, 1).unwrap() >= alpha / 2.0 - 1e-12);
            }
        }
        assert!(alpha_split_pmf(5, 0.5, 0).is_err());
        assert!(alpha_split_pmf(5, 0.5, 5).is_err());
    }

    #[test]
    fn alpha_half_split_is_catalan() {
        // At α = 1/2 the split is C_{j−1}C_{n−j−1}/C_{n−1}.
        let cat = |m: usize| -> f64 {
            (0..m).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
        };
        let n = 9;
        for j in 1..n {
            let want = cat(j - 1) * cat(n - j - 1) / cat(n - 1);
            assert!((alpha_split_pmf(n, 0.5, j).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn split_sampler_matches_pmf() {
        let mut r = rng(7);
        for (n, alpha) in [(10u64, 0.3), (11, 0.8), (6, 1.0)] {
            let trials = 100_000;
            let mut hist = vec![0u32; n as usize];
            for _ in 0..trials {
                hist[sample_alpha_split(n, alpha, &mut r) as usize] += 1;
            }
            for j in 1..n as usize {
                let p = alpha_split_pmf(n as usize, alpha, j).unwrap();
                let ph = hist[j] as f64 / trials as f64;
                let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
                assert!((ph - p).abs() < 5.0 * se, "n={n} alpha={alpha} j={j} {ph} vs {p}");
            }
        }
    }

    #[test]
    fn large_split_sampler_matches_pmf() {
        let mut r = rng(8);
        let n = 1000u64;
        // bins of the smaller side: 1, 2, 3..=9, 10..=99, 100..=500
        let bins: [(u64, u64); 5] = [(1, 1), (2, 2), (3, 9), (10, 99), (100, 500)];
        for alpha in [0.0, 0.2, 0.5, 0.8] {
            let trials = 100_000;
            let mut hist = [0u32; 5];
            let mut left_small = 0u32;
            for _ in 0..trials {
                let j = sample_alpha_split(n, alpha, &mut r);
                assert!((1..n).contains(&j));
                let s = j.min(n - j);
                left_small += (j < n - j) as u32;
                let b = bins.iter().position(|&(lo, hi)| (lo..=hi).contains(&s)).unwrap();
                hist[b] += 1;
            }
            for (b, &(lo, hi)) in bins.iter().enumerate() {
                let p: f64 = (lo..=hi)
                    .map(|s| {
                        let q = alpha_split_pmf(n as usize, alpha.max(1e-300), s as usize).unwrap();
                        if 2 * s == n { q } else { 2.0 * q }
                    })
                    .sum();
                let ph = hist[b] as f64 / trials as f64;
                let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
                assert!((ph - p).abs() < 5.0 * se, "alpha={alpha} bin={b} {ph} vs {p}");
            }
            let frac = left_small as f64 / trials as f64;
            assert!((frac - 0.5).abs() < 0.01, "alpha={alpha} side balance {frac}");
        }
    }

    #[test]
    fn gamma_ratio_asymptotics() {
        for x in [1.5e4, 3e5, 1e8] {
            for (a, b) in [(-0.3, 0.0), (-0.7, 1.0), (-1.0, -0.5)] {
                let direct = ln_gamma(x + a) - ln_gamma(x + b);
                let approx = ln_gamma_ratio(x, a, b);
                assert!((direct - approx).abs() < 1e-7 * (1.0 + direct.abs()), "{x} {a} {b}");
            }
        }
        assert!((ln_gamma_ratio(5.0, 0.5, 0.0) - (ln_gamma(5.5) - ln_gamma(5.0))).abs() < 1e-14);
    }

    #[test]
    fn hung_size_law() {
        let alpha = 0.5;
        let total: f64 = (1..200_000u64).map(|m| alpha_hung_size_pmf(alpha, m)).sum();
        assert!((total - 1.0).abs() < 3e-3);
        // α = 1/2 reproduces the leaf count of a critical binary GW tree.
        assert!((alpha_hung_size_pmf(alpha, 1) - 0.5).abs() < 1e-12);
        assert!((alpha_hung_size_pmf(alpha, 2) - 0.125).abs() < 1e-12);
        let mut r = rng(8);
        let n = 100_000;
        let mut ones = 0;
        let mut twos = 0;
        for _ in 0..n {
            match sample_alpha_hung_size(alpha, 1 << 40, &mut r) {
                Some(1) => ones += 1,
                Some(2) => twos += 1,
                _ => {}
            }
        }
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
        assert!((twos as f64 / n as f64 - 0.125).abs() < 0.005);
        assert_eq!(sample_alpha_hung_size(1.0, 10, &mut r), Some(1));
    }

    #[test]
    fn alpha_gamma_sums_and_matches_binary_split() {
        for (alpha, gamma) in [(0.5, 0.3), (0.7, 0.7), (1.0, 0.4), (1.0, 1.0)] {
            for n in [2usize, 3, 5, 8] {
                let total: f64 = partitions(n)
                    .iter()
                    .map(|p| alpha_gamma_split_pmf(n, alpha, gamma, p).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "α={alpha} γ={gamma} n={n}: {total}");
            }
        }
        let (n, alpha) = (6usize, 0.4);
        for j in 1..=n / 2 {
            let ag = alpha_gamma_split_pmf(n, alpha, alpha, &[n - j, j]).unwrap();
            let q = alpha_split_pmf(n, alpha, j).unwrap();
            let factor = if 2 * j == n { 1.0 } else { 2.0 };
            assert!((ag - factor * q).abs() < 1e-12);
        }
        assert!(alpha_gamma_split_pmf(4, 0.3, 0.5, &[2, 2]).is_err());
        assert!(alpha_gamma_split_pmf(4, 0.5, 0.3, &[4]).is_err());
        assert!(alpha_gamma_split_pmf(4, 0.5, 0.3, &[2, 1]).is_err());
    }

    #[test]
    fn associative_law() {
        for k in [1usize, 2, 5, 10] {
            let d = associative_offspring(k).unwrap();
            let s: f64 = d.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!((d.mean() - 1.0).abs() < 1e-9);
            assert_eq!(d.prob(1), 0.0);
            let sk = (k as f64).sqrt();
            assert!((d.prob(0) - (1.0 + sk) / (2.0 + sk)).abs() < 1e-14);
        }
    }

    #[test]
    fn wedderburn_etherington() {
        let y: Vec<u64> = unordered_binary_counts(10).iter().map(|v| v.try_into().unwrap()).collect();
        assert_eq!(y, vec![1, 1, 1, 2, 3, 6, 11, 23, 46, 98]);
        assert_eq!(unordered_split_pmf(4, 1).unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(unordered_split_pmf(3, 1).unwrap(), BigRational::one());
        assert!(unordered_split_pmf(4, 2).is_err());
    }

    #[test]
    fn partition_enumeration() {
        assert_eq!(partitions(4), vec![vec![3, 1], vec![2, 2], vec![2, 1, 1], vec![1, 1, 1, 1]]);
        assert_eq!(partitions(8).len(), 21);
    }
}
