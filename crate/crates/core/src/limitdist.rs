// SPDX-License-Identifier: Apache-2.0

//! Distributions induced on Boolean functions, exact and Monte Carlo, and the
//! quantitative laws built on them.
//!
//! Monte Carlo trial `i` always draws from `trial_rng(seed, i)` and per-worker
//! histograms hold integer counts, so estimates do not depend on the thread
//! count. Floating-point aggregates are summed in trial order.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boolfn::{BoolFn, BoolFnError, LiteralTable};
use crate::complexity::build_complexity_table;
use crate::exprtree::{Gate, TreeShape};
use crate::forest::{sample_forest, ForestSample};
use crate::model::{Draw, Drawer, Model, ModelError};
use crate::seeding::{derive_seed, trial_rng};
use crate::spine::{trim_spine, SpineCaps};
use crate::treegen::GenError;

/// Largest arity for which full histograms are kept.
pub const FULL_HIST_MAX_ARITY: usize = 8;

/// Labelling budget of [`exact_dist`].
pub const EXACT_GUARD: f64 = 1e7;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("exact enumeration needs 2^internal·(2k)^leaves ≤ 1e7, got {0:.3e}")]
    CostGuard(f64),
    #[error("full histograms are limited to k ≤ {FULL_HIST_MAX_ARITY}; give target functions")]
    HistogramArity,
    #[error("assignments must differ and have length k")]
    Assignments,
    #[error("u1 = {0} outside [0, 1/2]")]
    Domain(f64),
    #[error("{0} requires a spine model")]
    NeedsSpine(&'static str),
    #[error("need at least one trial")]
    NoTrials,
    #[error("target arity {arity} exceeds k = {k}")]
    TargetArity { arity: usize, k: usize },
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn binomial_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Exact law of `f[t̂]` under a uniform random labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDist {
    pub k: usize,
    pub probs: Vec<(BoolFn, BigRational)>,
}

impl ExactDist {
    pub fn prob(&self, f: &BoolFn) -> BigRational {
        self.probs.iter().find(|(g, _)| g == f).map_or_else(BigRational::zero, |(_, p)| p.clone())
    }

    /// `P(f(a) = α, f(b) = β)` by summing over the functions.
    pub fn pair_marginal(&self, a: &[bool], b: &[bool], alpha: bool, beta: bool) -> Result<BigRational, LimitError> {
        let mut s = BigRational::zero();
        for (f, p) in &self.probs {
            if f.eval(a)? == alpha && f.eval(b)? == beta {
                s += p;
            }
        }
        Ok(s)
    }

    pub fn to_estimate(&self, model: &str) -> DistEstimate {
        let entries = self
            .probs
            .iter()
            .map(|(f, p)| DistEntry { function: f.clone(), count: 0, p: p.to_f64().unwrap_or(f64::NAN), stderr: 0.0 })
            .collect();
        DistEstimate { model: model.to_string(), k: self.k, trials: 0, seed: None, unclassified: 0, other: None, entries }
    }
}

/// Enumerates every labelling of `t`, grouping by node so that each
/// subtree contributes a histogram of functions with integer multiplicities.
pub fn exact_dist(t: &TreeShape, k: usize) -> Result<ExactDist, LimitError> {
    let internal = t.internal_count() as f64;
    let leaves = t.size() as f64;
    let cost = internal.exp2() * (2.0 * k as f64).powf(leaves);
    if cost > EXACT_GUARD {
        return Err(LimitError::CostGuard(cost));
    }
    let lits = LiteralTable::new(k)?;
    let mut hist: Vec<Option<HashMap<BoolFn, u64>>> = vec![None; t.num_nodes()];
    for &v in t.preorder().iter().rev() {
        let mut here: HashMap<BoolFn, u64> = HashMap::new();
        if t.is_leaf(v) {
            for var in 1..=k {
                for neg in [false, true] {
                    *here.entry(lits.get(var, neg).clone()).or_default() += 1;
                }
            }
        } else {
            let kids: Vec<HashMap<BoolFn, u64>> =
                t.children(v).iter().map(|&c| hist[c as usize].take().expect("child first")).collect();
            for gate in [Gate::And, Gate::Or] {
                let neutral = if gate == Gate::And { lits.truth() } else { lits.falsity() };
                let mut acc: HashMap<BoolFn, u64> = HashMap::from([(neutral.clone(), 1)]);
                for kid in &kids {
                    let mut next: HashMap<BoolFn, u64> = HashMap::new();
                    for (f, &cf) in &acc {
                        for (g, &cg) in kid {
                            let h = if gate == Gate::And { f.and(g) } else { f.or(g) };
                            *next.entry(h).or_default() += cf * cg;
                        }
                    }
                    acc = next;
                }
                for (f, c) in acc {
                    *here.entry(f).or_default() += c;
                }
            }
        }
        hist[v] = Some(here);
    }
    let root = hist[0].take().expect("root");
    let total: u64 = root.values().sum();
    let mut probs: Vec<(BoolFn, BigRational)> = root
        .into_iter()
        .map(|(f, c)| (f, BigRational::new(BigInt::from(c), BigInt::from(total))))
        .collect();
    probs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ExactDist { k, probs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistEntry {
    #[serde(rename = "fn")]
    pub function: BoolFn,
    pub count: u64,
    pub p: f64,
    pub stderr: f64,
}

/// Estimated law of the random function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistEstimate {
    pub model: String,
    pub k: usize,
    pub trials: u64,
    pub seed: Option<u64>,
    /// Spine evaluations that did not stabilize within the caps.
    pub unclassified: u64,
    /// Classified draws outside the target list, when targets were given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other: Option<u64>,
    pub entries: Vec<DistEntry>,
}

impl DistEstimate {
    pub fn entry(&self, f: &BoolFn) -> Option<&DistEntry> {
        self.entries.iter().find(|e| &e.function == f)
    }

    pub fn count(&self, f: &BoolFn) -> u64 {
        self.entry(f).map_or(0, |e| e.count)
    }

    pub fn p(&self, f: &BoolFn) -> f64 {
        self.entry(f).map_or(0.0, |e| e.p)
    }

    pub fn stderr(&self, f: &BoolFn) -> f64 {
        self.entry(f).map_or(0.0, |e| e.stderr)
    }

    /// Estimated probability of an event given by its count.
    pub fn frac(&self, count: u64) -> (f64, f64) {
        let p = count as f64 / self.trials as f64;
        (p, binomial_stderr(p, self.trials))
    }
}

/// What to count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tally {
    /// Every function observed.
    Full,
    /// Only these functions; the rest are lumped into `other`.
    Targets(Vec<BoolFn>),
}

#[derive(Debug, Default)]
struct Hist {
    counts: HashMap<BoolFn, u64>,
    targets: Vec<u64>,
    other: u64,
    unclassified: u64,
}

impl Hist {
    fn merge(mut self, o: Hist) -> Hist {
        for (f, c) in o.counts {
            *self.counts.entry(f).or_default() += c;
        }
        if self.targets.len() < o.targets.len() {
            self.targets.resize(o.targets.len(), 0);
        }
        for (a, b) in self.targets.iter_mut().zip(o.targets) {
            *a += b;
        }
        self.other += o.other;
        self.unclassified += o.unclassified;
        self
    }
}

/// Minimum trials per rayon task.
const MIN_CHUNK: usize = 64;

/// Monte Carlo estimate of the law of `f[t̂]` for a model.
pub fn mc_dist(
    model: &Model,
    k: usize,
    trials: u64,
    seed: u64,
    tally: &Tally,
    caps: SpineCaps,
) -> Result<DistEstimate, LimitError> {
    if trials == 0 {
        return Err(LimitError::NoTrials);
    }
    if *tally == Tally::Full && k > FULL_HIST_MAX_ARITY {
        return Err(LimitError::HistogramArity);
    }
    let lits = LiteralTable::new(k)?;
    let targets: Vec<BoolFn> = match tally {
        Tally::Full => Vec::new(),
        Tally::Targets(fs) => fs.iter().map(|f| check_target(f, k)).collect::<Result<_, _>>()?,
    };
    let full = *tally == Tally::Full;
    let hist = (0..trials as usize)
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .try_fold(
            || (Drawer::new(model, &lits, caps), Hist { targets: vec![0; targets.len()], ..Hist::default() }),
            |(mut drawer, mut h), i| {
                let mut rng = trial_rng(seed, i as u64);
                match drawer.draw(&mut rng)? {
                    Draw::Unclassified => h.unclassified += 1,
                    Draw::Function(f) if full => *h.counts.entry(f).or_default() += 1,
                    Draw::Function(f) => match targets.iter().position(|t| *t == f) {
                        Some(j) => h.targets[j] += 1,
                        None => h.other += 1,
                    },
                }
                Ok::<_, LimitError>((drawer, h))
            },
        )
        .map(|r| r.map(|(_, h)| h))
        .try_reduce(Hist::default, |a, b| Ok(a.merge(b)))?;
    let mut counted: Vec<(BoolFn, u64)> = if full {
        hist.counts.into_iter().collect()
    } else {
        let mut t = hist.targets;
        t.resize(targets.len(), 0);
        targets.iter().cloned().zip(t).collect()
    };
    if full {
        counted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }
    let entries = counted
        .into_iter()
        .map(|(f, c)| {
            let p = c as f64 / trials as f64;
            DistEntry { function: f, count: c, p, stderr: binomial_stderr(p, trials) }
        })
        .collect();
    Ok(DistEstimate {
        model: model.name.clone(),
        k,
        trials,
        seed: Some(seed),
        unclassified: hist.unclassified,
        other: (!full).then_some(hist.other),
        entries,
    })
}

fn check_target(f: &BoolFn, k: usize) -> Result<BoolFn, LimitError> {
    if f.arity() > k {
        return Err(LimitError::TargetArity { arity: f.arity(), k });
    }
    Ok(f.extend(k)?)
}

/// Default targets for large `k`: both constants and all `2k` literals.
pub fn default_targets(k: usize) -> Result<Vec<BoolFn>, LimitError> {
    let mut out = vec![BoolFn::truth(k)?, BoolFn::falsity(k)?];
    for var in 1..=k {
        for neg in [false, true] {
            out.push(BoolFn::literal(k, var, neg)?);
        }
    }
    Ok(out)
}

/// Joint law of `(f(a), f(b))` as `[P00, P01, P10, P11]`.
pub type PairVec = [BigRational; 4];

fn check_pair(k: usize, a: &[bool], b: &[bool]) -> Result<usize, LimitError> {
    if a.len() != k || b.len() != k || a == b {
        return Err(LimitError::Assignments);
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `[P00, P01, P10, P11]` by the gate-by-gate recursion on the joint law.
pub fn pair_vector(t: &TreeShape, k: usize, a: &[bool], b: &[bool]) -> Result<PairVec, LimitError> {
    let d = check_pair(k, a, b)?;
    let same = ratio(k - d, 2 * k);
    let diff = ratio(d, 2 * k);
    let leaf: PairVec = [same.clone(), diff.clone(), diff, same];
    let half = ratio(1, 2);
    let mut val: Vec<Option<PairVec>> = vec![None; t.num_nodes()];
    for &v in t.preorder().iter().rev() {
        if t.is_leaf(v) {
            val[v] = Some(leaf.clone());
            continue;
        }
        let kids: Vec<PairVec> = t.children(v).iter().map(|&c| val[c as usize].take().expect("child first")).collect();
        let prod = |f: &dyn Fn(&PairVec) -> BigRational| kids.iter().fold(BigRational::one(), |acc, x| acc * f(x));
        // ∧: both true iff all children are
        let a11 = prod(&|x| x[3].clone());
        let a10 = prod(&|x| &x[2] + &x[3]) - &a11;
        let a01 = prod(&|x| &x[1] + &x[3]) - &a11;
        let a00 = BigRational::one() - &a11 - &a10 - &a01;
        // ∨: both false iff all children are
        let o00 = prod(&|x| x[0].clone());
        let o01 = prod(&|x| &x[0] + &x[1]) - &o00;
        let o10 = prod(&|x| &x[0] + &x[2]) - &o00;
        let o11 = BigRational::one() - &o00 - &o01 - &o10;
        val[v] = Some([
            (a00 + o00) * &half,
            (a01 + o01) * &half,
            (a10 + o10) * &half,
            (a11 + o11) * &half,
        ]);
    }
    Ok(val[0].take().expect("root"))
}

/// `P(f[t̂](a) = α, f[t̂](b) = β)`, exact.
pub fn pair_prob(t: &TreeShape, k: usize, a: &[bool], b: &[bool], alpha: bool, beta: bool) -> Result<BigRational, LimitError> {
    let v = pair_vector(t, k, a, b)?;
    Ok(v[2 * alpha as usize + beta as usize].clone())
}

/// `P^{10}` from the one-line recursion `1/2^r − ∏(1/2 − P^{10}_i)`.
pub fn pair_p10_closed(t: &TreeShape, k: usize, a: &[bool], b: &[bool]) -> Result<BigRational, LimitError> {
    let d = check_pair(k, a, b)?;
    let half = ratio(1, 2);
    let mut val: Vec<BigRational> = vec![BigRational::zero(); t.num_nodes()];
    for &v in t.preorder().iter().rev() {
        val[v] = if t.is_leaf(v) {
            ratio(d, 2 * k)
        } else {
            let ch = t.children(v);
            let pow = ratio(1, 1usize << ch.len().min(62));
            let prod = ch.iter().fold(BigRational::one(), |acc, &c| acc * (&half - &val[c as usize]));
            pow - prod
        };
    }
    Ok(val[0].clone())
}

/// `u_1, …, u_{σ_max}` with `u_{σ+1} = u_σ − u_σ²`.
pub fn u_sequence(u1: f64, sigma_max: usize) -> Result<Vec<f64>, LimitError> {
    if !(0.0..=0.5).contains(&u1) {
        return Err(LimitError::Domain(u1));
    }
    let mut out = Vec::with_capacity(sigma_max);
    let mut u = u1;
    for _ in 0..sigma_max {
        out.push(u);
        u -= u * u;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonconstantReport {
    pub sigma: usize,
    pub trials: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub floor: f64,
    pub pass: bool,
}

/// Checks `P(f[t̂] non-constant) ≥ 2^{−σ}` for a fixed shape of saturation level `σ`.
pub fn nonconstant_lower_bound_check(t: &TreeShape, k: usize, trials: u64, seed: u64) -> Result<NonconstantReport, LimitError> {
    let model = Model::fixed("fixed", t.clone());
    let est = mc_dist(&model, k, trials, seed, &Tally::Targets(vec![BoolFn::truth(k)?, BoolFn::falsity(k)?]), SpineCaps::default())?;
    let (p_hat, stderr) = est.frac(est.other.unwrap_or(0));
    let sigma = t.saturation_level();
    let floor = (-(sigma as f64)).exp2();
    Ok(NonconstantReport { sigma, trials, p_hat, stderr, floor, pass: p_hat >= floor - 3.0 * stderr })
}

/// Hanging-forest statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestStats {
    pub k: usize,
    pub trials: u64,
    /// Samples dropped because a cap was hit.
    pub overflow: u64,
    /// `E[N_A / 2^{C_A}]`.
    pub mean_weight: f64,
    pub mean_l: f64,
    pub mean_l2: f64,
    #[serde(skip)]
    pub samples: Vec<ForestSample>,
}

pub fn forest_stats(model: &Model, k: usize, trials: u64, seed: u64, caps: SpineCaps) -> Result<ForestStats, LimitError> {
    let src = model.spine_source().ok_or(LimitError::NeedsSpine("forest_stats"))?;
    if trials == 0 {
        return Err(LimitError::NoTrials);
    }
    let draws: Vec<Option<ForestSample>> = (0..trials as usize)
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .map(|i| sample_forest(src, k, &caps, &mut trial_rng(seed, i as u64)))
        .collect();
    let samples: Vec<ForestSample> = draws.iter().flatten().copied().collect();
    let n = samples.len().max(1) as f64;
    let mut w = 0.0;
    let mut l = 0.0;
    let mut l2 = 0.0;
    for s in &samples {
        w += s.weight();
        l += s.trimmed as f64;
        l2 += (s.trimmed * s.trimmed) as f64;
    }
    Ok(ForestStats {
        k,
        trials,
        overflow: trials - samples.len() as u64,
        mean_weight: w / n,
        mean_l: l / n,
        mean_l2: l2 / n,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub p_true: f64,
    pub p_false: f64,
    pub stderr_true: f64,
    pub stderr_false: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `|p̂(True) − p̂(False)|` within 4 combined standard errors.
    pub symmetric_ok: bool,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.lower_ok && self.upper_ok && self.symmetric_ok
    }
}

/// Compares `p̂_k(True)` with the forest bounds
/// `E[N_A/2^{C_A}]/k` and `((2e+1)E[L] + E[L²])/k`.
pub fn sandwich_from(forest: &ForestStats, est: &DistEstimate) -> Result<SandwichReport, LimitError> {
    let k = est.k;
    let kf = k as f64;
    let (t, f) = (BoolFn::truth(k)?, BoolFn::falsity(k)?);
    let (p_true, p_false) = (est.p(&t), est.p(&f));
    let (st, sf) = (est.stderr(&t), est.stderr(&f));
    let lower = forest.mean_weight / kf;
    let upper = ((2.0 * std::f64::consts::E + 1.0) * forest.mean_l + forest.mean_l2) / kf;
    Ok(SandwichReport {
        k,
        lower,
        upper,
        p_true,
        p_false,
        stderr_true: st,
        stderr_false: sf,
        lower_ok: lower - 3.0 * st <= p_true,
        upper_ok: p_true <= upper + 3.0 * st,
        symmetric_ok: (p_true - p_false).abs() <= 4.0 * (st * st + sf * sf).sqrt(),
    })
}

pub fn theta_true_sandwich(model: &Model, k: usize, trials: u64, seed: u64, caps: SpineCaps) -> Result<SandwichReport, LimitError> {
    let forest = forest_stats(model, k, trials, derive_seed(seed, 1), caps)?;
    let targets = Tally::Targets(vec![BoolFn::truth(k)?, BoolFn::falsity(k)?]);
    let est = mc_dist(model, k, trials, derive_seed(seed, 2), &targets, caps)?;
    sandwich_from(&forest, &est)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub k: usize,
    pub trials: u64,
    pub count: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub log_k: f64,
    pub log_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub model: String,
    #[serde(rename = "fn")]
    pub function: BoolFn,
    pub seed: u64,
    pub points: Vec<ScalingPoint>,
    pub fit: Option<ScalingFit>,
    /// `−(L(f) + 1)` when `L(f)` is tabled.
    pub predicted_slope: Option<f64>,
    pub warnings: Vec<String>,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<ScalingFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(ScalingFit { slope, intercept, r2, residuals })
}

/// `−(L(f)+1)` from the exhaustive table, for arity ≤ 3.
pub fn predicted_slope(f: &BoolFn) -> Option<f64> {
    if f.arity() > 3 {
        return None;
    }
    let table = build_complexity_table(f.arity(), 4).ok()?;
    table.complexity(f).ok().map(|l| -(l as f64) - 1.0)
}

/// Builds the report for one target from per-`k` estimates that tallied it.
pub fn scaling_report(model: &str, f: &BoolFn, seed: u64, estimates: &[DistEstimate]) -> Result<ScalingReport, LimitError> {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for est in estimates {
        let g = check_target(f, est.k)?;
        let count = est.count(&g);
        let (p_hat, stderr) = est.frac(count);
        let log_p = (count > 0).then(|| p_hat.ln());
        if count == 0 {
            warnings.push(format!("k={}: no hits in {} trials; excluded from the fit", est.k, est.trials));
        }
        points.push(ScalingPoint { k: est.k, trials: est.trials, count, p_hat, stderr, log_k: (est.k as f64).ln(), log_p });
    }
    let used: Vec<(f64, f64)> = points.iter().filter_map(|p| p.log_p.map(|y| (p.log_k, y))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = used.into_iter().unzip();
    let fit = ols(&x, &y);
    if fit.is_none() {
        warnings.push("fewer than two usable points; no fit".into());
    }
    Ok(ScalingReport {
        model: model.to_string(),
        function: f.clone(),
        seed,
        points,
        fit,
        predicted_slope: predicted_slope(f),
        warnings,
    })
}

/// Spine estimates at each `k`, tallying every target in one run per `k`.
pub fn scaling_estimates(
    model: &Model,
    fs: &[BoolFn],
    ks: &[usize],
    trials: u64,
    seed: u64,
    caps: SpineCaps,
) -> Result<Vec<DistEstimate>, LimitError> {
    if !model.is_spine() {
        return Err(LimitError::NeedsSpine("scaling"));
    }
    ks.iter()
        .map(|&k| mc_dist(model, k, trials, derive_seed(seed, k as u64), &Tally::Targets(fs.to_vec()), caps))
        .collect()
}

/// Slope of `log p̂_k(extend(f, k))` against `log k` for every target.
pub fn scaling_exponents(
    model: &Model,
    fs: &[BoolFn],
    ks: &[usize],
    trials: u64,
    seed: u64,
    caps: SpineCaps,
) -> Result<Vec<ScalingReport>, LimitError> {
    let est = scaling_estimates(model, fs, ks, trials, seed, caps)?;
    fs.iter().map(|f| scaling_report(&model.name, f, seed, &est)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionReport {
    pub k: usize,
    pub trials: u64,
    pub overflow: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub mean_size: f64,
    pub mean_size_sq: f64,
    /// `(E‖trim‖² + 2e·E‖trim‖) / k`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Default)]
struct RepAcc {
    n: u64,
    hits: u64,
    s1: u128,
    s2: u128,
}

/// Compares `P(trim has a repetition)` with the moment bound at `q = 1`.
pub fn repetition_bound_check(model: &Model, k: usize, trials: u64, seed: u64, caps: SpineCaps) -> Result<RepetitionReport, LimitError> {
    let src = model.spine_source().ok_or(LimitError::NeedsSpine("repetition_bound_check"))?;
    if trials == 0 {
        return Err(LimitError::NoTrials);
    }
    let acc = (0..trials as usize)
        .into_par_iter()
        .with_min_len(MIN_CHUNK)
        .fold(RepAcc::default, |mut a, i| {
            if let Some(t) = trim_spine(src, k, &caps, &mut trial_rng(seed, i as u64)) {
                a.n += 1;
                a.hits += (t.repetitions > 0) as u64;
                a.s1 += t.size as u128;
                a.s2 += (t.size as u128) * (t.size as u128);
            }
            a
        })
        .reduce(RepAcc::default, |a, b| RepAcc { n: a.n + b.n, hits: a.hits + b.hits, s1: a.s1 + b.s1, s2: a.s2 + b.s2 });
    let n = acc.n.max(1);
    let p_hat = acc.hits as f64 / n as f64;
    let stderr = binomial_stderr(p_hat, n);
    let mean_size = acc.s1 as f64 / n as f64;
    let mean_size_sq = acc.s2 as f64 / n as f64;
    let bound = (mean_size_sq + 2.0 * std::f64::consts::E * mean_size) / k as f64;
    Ok(RepetitionReport {
        k,
        trials,
        overflow: trials - acc.n,
        p_hat,
        stderr,
        mean_size,
        mean_size_sq,
        bound,
        pass: p_hat <= bound + 3.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprtree::{parse, random_labelling};
    use crate::model::{parse_model, SizeSpec};
    use crate::treegen::balanced_binary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cherry() -> TreeShape {
        TreeShape::join(vec![TreeShape::leaf(), TreeShape::leaf()]).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn cherry_at_one_variable() {
        let d = exact_dist(&cherry(), 1).unwrap();
        assert_eq!(d.probs.len(), 4);
        for (_, p) in &d.probs {
            assert_eq!(*p, r(1, 4));
        }
        let total: BigRational = d.probs.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total, BigRational::one());
    }

    #[test]
    fn single_leaf_law() {
        for k in 1..=4 {
            let d = exact_dist(&TreeShape::leaf(), k).unwrap();
            assert_eq!(d.probs.len(), 2 * k);
            assert!(d.probs.iter().all(|(_, p)| *p == r(1, 2 * k as i64)));
        }
    }

    /// Direct enumeration of every labelling through the tree evaluator.
    fn brute_exact(t: &TreeShape, k: usize) -> HashMap<BoolFn, u64> {
        let n = t.num_nodes();
        let mut out = HashMap::new();
        let radix: Vec<usize> = (0..n).map(|v| if t.is_leaf(v) { 2 * k } else { 2 }).collect();
        let mut digits = vec![0usize; n];
        loop {
            let labels = (0..n)
                .map(|v| {
                    if t.is_leaf(v) {
                        crate::exprtree::Label::Lit(crate::exprtree::Literal::new(digits[v] as u32 / 2 + 1, digits[v] % 2 == 1))
                    } else {
                        crate::exprtree::Label::Gate(if digits[v] == 0 { Gate::And } else { Gate::Or })
                    }
                })
                .collect();
            let tree = crate::exprtree::AndOrTree::new(t.clone(), labels).unwrap();
            *out.entry(tree.eval(k).unwrap()).or_default() += 1;
            let mut i = 0;
            while i < n {
                digits[i] += 1;
                if digits[i] < radix[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == n {
                return out;
            }
        }
    }

    #[test]
    fn exact_matches_direct_enumeration() {
        for m in 1..=4 {
            for t in crate::complexity::enumerate_shapes(m).unwrap() {
                for k in 1..=2 {
                    let d = exact_dist(&t, k).unwrap();
                    let b = brute_exact(&t, k);
                    let total: u64 = b.values().sum();
                    assert_eq!(d.probs.len(), b.len());
                    for (f, p) in &d.probs {
                        assert_eq!(*p, BigRational::new((b[f] as i64).into(), (total as i64).into()));
                    }
                }
            }
        }
    }

    #[test]
    fn cost_guard() {
        assert!(matches!(exact_dist(&balanced_binary(4), 4), Err(LimitError::CostGuard(_))));
    }

    #[test]
    fn pair_routes_agree_with_each_other_and_enumeration() {
        let shapes = [TreeShape::leaf(), cherry(), balanced_binary(2), parse("(x1|(x1&x1&x1))").unwrap().shape().clone()];
        for t in &shapes {
            for k in 1..=2usize {
                let d = exact_dist(t, k).unwrap();
                for ia in 0..(1 << k) {
                    for ib in 0..(1 << k) {
                        if ia == ib {
                            continue;
                        }
                        let a: Vec<bool> = (0..k).map(|i| ia >> i & 1 == 1).collect();
                        let b: Vec<bool> = (0..k).map(|i| ib >> i & 1 == 1).collect();
                        let v = pair_vector(t, k, &a, &b).unwrap();
                        assert_eq!(v[2], pair_p10_closed(t, k, &a, &b).unwrap());
                        assert_eq!(&v[2] + &v[3], r(1, 2));
                        for (x, y) in [(false, false), (false, true), (true, false), (true, true)] {
                            assert_eq!(pair_prob(t, k, &a, &b, x, y).unwrap(), d.pair_marginal(&a, &b, x, y).unwrap());
                        }
                    }
                }
            }
        }
        assert_eq!(pair_prob(&TreeShape::leaf(), 1, &[true], &[false], true, false).unwrap(), r(1, 2));
        assert_eq!(pair_prob(&cherry(), 1, &[true], &[false], true, false).unwrap(), r(1, 4));
        assert!(pair_prob(&cherry(), 1, &[true], &[true], true, false).is_err());
    }

    #[test]
    fn u_iteration() {
        let u = u_sequence(0.5, 10_000).unwrap();
        assert_eq!(u[0], 0.5);
        assert_eq!(u[1], 0.25);
        assert!(u.windows(2).all(|w| w[1] <= w[0]));
        let s = 10_000.0 * u[9_999];
        assert!((s - 1.0).abs() <= 0.05, "{s}");
        assert_eq!(u_sequence(0.0, 3).unwrap(), vec![0.0; 3]);
        assert!(u_sequence(0.6, 3).is_err());
    }

    #[test]
    fn mc_matches_exact_on_the_cherry() {
        let model = Model::fixed("cherry", cherry());
        let est = mc_dist(&model, 1, 100_000, 3, &Tally::Full, SpineCaps::default()).unwrap();
        let exact = exact_dist(&cherry(), 1).unwrap();
        assert_eq!(est.entries.iter().map(|e| e.count).sum::<u64>(), 100_000);
        for (f, p) in &exact.probs {
            let p = p.to_f64().unwrap();
            assert!((est.p(f) - p).abs() <= 3.0 * est.stderr(f).max(1e-9), "{f}");
        }
    }

    #[test]
    fn mc_is_thread_count_invariant() {
        let model = parse_model("spine:catalan", &SizeSpec::default()).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_dist(&model, 2, 20_000, 9, &Tally::Full, SpineCaps::default()).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn split_tree_models_match_explicit_sampling() {
        // lazy split evaluation against explicit shapes plus labelling
        for preset in ["bst", "alpha:0.3"] {
            let model = parse_model(preset, &SizeSpec { leaves: Some(6), ..Default::default() }).unwrap();
            let lazy = mc_dist(&model, 1, 100_000, 1, &Tally::Full, SpineCaps::default()).unwrap();
            let crate::model::ModelKind::Finite(shape) = &model.kind else { unreachable!() };
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut counts: HashMap<BoolFn, u64> = HashMap::new();
            for _ in 0..100_000 {
                let t = shape.sample(&mut rng).unwrap();
                *counts.entry(random_labelling(&t, 1, &mut rng).eval(1).unwrap()).or_default() += 1;
            }
            for e in &lazy.entries {
                let q = counts.get(&e.function).copied().unwrap_or(0) as f64 / 1e5;
                let se = (e.stderr * e.stderr + q * (1.0 - q) / 1e5).sqrt();
                assert!((e.p - q).abs() <= 4.0 * se, "{preset} {}", e.function);
            }
        }
    }

    #[test]
    fn targets_and_other_sum_to_trials() {
        let model = parse_model("spine:catalan", &SizeSpec::default()).unwrap();
        let est = mc_dist(&model, 12, 5_000, 4, &Tally::Targets(default_targets(12).unwrap()), SpineCaps::default()).unwrap();
        let s: u64 = est.entries.iter().map(|e| e.count).sum::<u64>() + est.other.unwrap() + est.unclassified;
        assert_eq!(s, 5_000);
        assert!(mc_dist(&model, 12, 10, 4, &Tally::Full, SpineCaps::default()).is_err());
    }

    #[test]
    fn nonconstant_floor() {
        let rep = nonconstant_lower_bound_check(&balanced_binary(2), 2, 20_000, 5).unwrap();
        assert_eq!(rep.sigma, 2);
        assert!(rep.pass);
        let leaf = nonconstant_lower_bound_check(&TreeShape::leaf(), 2, 100, 5).unwrap();
        assert_eq!(leaf.p_hat, 1.0);
    }

    #[test]
    fn ols_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 1.5 * v).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(ols(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn predicted_slopes() {
        assert_eq!(predicted_slope(&"1:3".parse().unwrap()), Some(-1.0));
        assert_eq!(predicted_slope(&"1:2".parse().unwrap()), Some(-2.0));
        assert_eq!(predicted_slope(&"2:8".parse().unwrap()), Some(-3.0));
    }
}
