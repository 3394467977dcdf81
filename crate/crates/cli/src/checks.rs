// SPDX-License-Identifier: Apache-2.0

//! The acceptance suite: one check per criterion, each returning a verdict
//! and the numbers behind it.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::Serialize;

use andor_core::boolfn::BoolFn;
use andor_core::complexity::{brute_force_min_sizes, build_complexity_table, enumerate_shapes};
use andor_core::exprtree::{random_labelling, AndOrTree, Gate, Label, Literal, TreeShape};
use andor_core::limitdist::{
    exact_dist, forest_stats, mc_dist, nonconstant_lower_bound_check, pair_p10_closed, pair_prob, repetition_bound_check,
    sandwich_from, scaling_exponents, u_sequence, DistEstimate, Tally, EXACT_GUARD,
};
use andor_core::model::{parse_model, Model, SizeSpec, CONDITIONING_BUDGET};
use andor_core::seeding::{derive_seed, derive_seed_str, trial_rng};
use andor_core::spine::SpineCaps;
use andor_core::treegen::{
    alpha_gamma_split_pmf, alpha_split_pmf, associative_offspring, balanced_binary, partitions, sample_alpha, sample_bst,
    sample_gw_conditioned, unordered_binary_counts, OffspringDist, SizeMode,
};
use andor_core::trimming::trim;

use crate::output::CliError;

/// Binomial slack for single estimates.
pub const SIGMA: f64 = 3.0;
/// Slack where two estimates are differenced.
pub const SIGMA_DIFF: f64 = 4.0;

pub const C1_TRIALS: u64 = 100_000;
pub const C2_EXHAUSTIVE_LEAVES: usize = 5;
pub const C2_EXHAUSTIVE_K: usize = 2;
pub const C2_RANDOM_TREES: u64 = 10_000;
pub const C2_MAX_NODES: usize = 101;
pub const C2_RANDOM_K: usize = 3;
pub const C3_MAX_LEAVES: usize = 7;
pub const C3_MAX_K: usize = 3;
pub const C3_TRIALS: u64 = 100_000;
pub const C4_SHAPES: usize = 50;
pub const C4_MAX_NODES: usize = 8;
pub const C5_SIGMA: usize = 10_000;
pub const C5_TOL: f64 = 0.05;
pub const C6_HEIGHTS: [usize; 3] = [2, 4, 6];
pub const C6_TRIALS: u64 = 100_000;
pub const C6_MARGIN: f64 = 2.0;
pub const C7_SATURATION_N: usize = 100_000;
pub const C7_SATURATION_TREES: u64 = 100;
pub const C7_BAND: (f64, f64) = (0.30, 0.45);
pub const C7_SIZES: [usize; 3] = [100, 1_000, 10_000];
pub const C7_TRIALS: u64 = 20_000;
pub const C8_KS: [usize; 3] = [4, 8, 16];
pub const C8_TRIALS: u64 = 1_000_000;
pub const C8_MAX_RATIO: f64 = 3.0;
pub const C8_SANDWICH_K: usize = 8;
pub const C9_KS: [usize; 4] = [3, 4, 6, 8];
pub const C9_TRIALS: u64 = 4_000_000;
pub const C9_TRUE_BAND: (f64, f64) = (-1.3, -0.7);
pub const C9_X1_BAND: (f64, f64) = (-2.4, -1.6);
pub const C9_AND_BAND: (f64, f64) = (-3.5, -2.5);
pub const C10_ALPHAS: [f64; 3] = [0.3, 0.5, 0.8];
pub const C10_N: usize = 10;
pub const C10_TRIALS: u64 = 100_000;
pub const C10_TV: f64 = 0.02;
pub const C10_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const C10_MAX_N: usize = 1_000;
pub const C10_KS: [usize; 4] = [2, 4, 8, 16];
pub const C10_SCALING_TRIALS: u64 = 1_000_000;
pub const C10_BAND: (f64, f64) = (-2.4, -1.6);
pub const C11_SHAPE_COUNTS: [usize; 6] = [1, 1, 3, 11, 45, 197];
pub const C11_Y: [u32; 6] = [1, 1, 1, 2, 3, 6];
pub const C11_RATIO_RANGE: (usize, usize) = (50, 200);
pub const C11_TOL: f64 = 1e-9;
pub const C13_KS: [usize; 2] = [16, 32];
pub const C13_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!("criterion {:<3} {} {}: {}", self.id, if self.pass { "PASS" } else { "FAIL" }, self.title, self.detail)
    }
}

type CheckFn = fn(u64) -> Result<CheckResult, CliError>;

/// Every criterion in order.
pub const CRITERIA: [(&str, CheckFn); 15] = [
    ("1", c1_cherry),
    ("2", c2_trim_preservation),
    ("3", c3_negation_symmetry),
    ("4", c4_pair_oracle),
    ("5", c5_u_law),
    ("6", c6_degeneracy),
    ("7a", c7a_bst_saturation),
    ("7b", c7b_bst_constants),
    ("8", c8_constant_scaling),
    ("9", c9_exponents),
    ("10", c10_alpha),
    ("11", c11_combinatorics),
    ("12", c12_complexity),
    ("13", c13_repetitions),
    ("14", c14_determinism),
];

/// Runs one criterion by id.
pub fn run_check(id: &str, seed: u64) -> Result<CheckResult, CliError> {
    let (name, f) = CRITERIA
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| CliError::Usage(format!("unknown criterion {id:?}")))?;
    f(derive_seed_str(seed, name))
}

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn model(preset: &str, size: SizeSpec) -> Result<Model, CliError> {
    parse_model(preset, &size).map_err(rt)
}

fn spine_catalan() -> Result<Model, CliError> {
    model("spine:catalan", SizeSpec::default())
}

fn within(x: f64, band: (f64, f64)) -> bool {
    band.0 <= x && x <= band.1
}

fn lit(k: usize, var: usize) -> Result<BoolFn, CliError> {
    BoolFn::literal(k, var, false).map_err(rt)
}

fn caps() -> SpineCaps {
    SpineCaps::default()
}

/// Calls `visit` on every labelling of `t` over `k` variables.
fn for_each_labelling(t: &TreeShape, k: usize, mut visit: impl FnMut(AndOrTree)) {
    let n = t.num_nodes();
    let radix: Vec<usize> = (0..n).map(|v| if t.is_leaf(v) { 2 * k } else { 2 }).collect();
    let mut digits = vec![0usize; n];
    loop {
        let labels = (0..n)
            .map(|v| {
                if t.is_leaf(v) {
                    Label::Lit(Literal::new((digits[v] / 2 + 1) as u32, digits[v] % 2 == 1))
                } else {
                    Label::Gate(if digits[v] == 0 { Gate::And } else { Gate::Or })
                }
            })
            .collect();
        visit(AndOrTree::new(t.clone(), labels).expect("labelling matches shape"));
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
            return;
        }
    }
}

pub fn c1_cherry(seed: u64) -> Result<CheckResult, CliError> {
    let cherry = balanced_binary(1);
    let exact = exact_dist(&cherry, 1).map_err(rt)?;
    let quarter = BigRational::new(1.into(), 4.into());
    let fns: Vec<BoolFn> = ["1:2", "1:1", "1:3", "1:0"].iter().map(|s| s.parse().expect("valid")).collect();
    let exact_ok = exact.probs.len() == 4 && fns.iter().all(|f| exact.prob(f) == quarter);
    let est = mc_dist(&Model::fixed("cherry", cherry), 1, C1_TRIALS, seed, &Tally::Full, caps()).map_err(rt)?;
    let worst = fns.iter().map(|f| (est.p(f) - 0.25).abs() / est.stderr(f)).fold(0.0, f64::max);
    Ok(CheckResult {
        id: "1",
        title: "exact cherry distribution",
        pass: exact_ok && worst <= SIGMA,
        detail: format!("exact all 1/4: {exact_ok}; worst Monte Carlo deviation {worst:.2}σ"),
    })
}

pub fn c2_trim_preservation(seed: u64) -> Result<CheckResult, CliError> {
    let mut checked = 0u64;
    let mut violations = 0u64;
    for m in 1..=C2_EXHAUSTIVE_LEAVES {
        for shape in enumerate_shapes(m).map_err(rt)? {
            for k in 1..=C2_EXHAUSTIVE_K {
                for_each_labelling(&shape, k, |tau| {
                    checked += 1;
                    if trim(&tau).tree().eval(k).ok() != tau.eval(k).ok() {
                        violations += 1;
                    }
                });
            }
        }
    }
    let catalan = OffspringDist::catalan();
    let mut random_violations = 0u64;
    for i in 0..C2_RANDOM_TREES {
        let mut rng = trial_rng(seed, i);
        let nodes = 2 * rng.gen_range(0..=(C2_MAX_NODES - 1) / 2) + 1;
        let t = sample_gw_conditioned(&catalan, nodes, SizeMode::TotalNodes, &mut rng, CONDITIONING_BUDGET).map_err(rt)?;
        let tau = random_labelling(&t, C2_RANDOM_K, &mut rng);
        if trim(&tau).tree().eval(C2_RANDOM_K).map_err(rt)? != tau.eval(C2_RANDOM_K).map_err(rt)? {
            random_violations += 1;
        }
    }
    Ok(CheckResult {
        id: "2",
        title: "trim preserves the function",
        pass: violations == 0 && random_violations == 0,
        detail: format!(
            "{violations} violations in {checked} exhaustive labellings; {random_violations} in {C2_RANDOM_TREES} random trees"
        ),
    })
}

fn negation_gap(est: &DistEstimate) -> f64 {
    est.entries
        .iter()
        .map(|e| {
            let g = e.function.not();
            let s = (e.stderr.powi(2) + est.stderr(&g).powi(2)).sqrt();
            (e.p - est.p(&g)).abs() / s
        })
        .fold(0.0, f64::max)
}

pub fn c3_negation_symmetry(seed: u64) -> Result<CheckResult, CliError> {
    let mut dists = 0usize;
    let mut asymmetric = 0usize;
    for m in 1..=C3_MAX_LEAVES {
        for shape in enumerate_shapes(m).map_err(rt)? {
            for k in 1..=C3_MAX_K {
                let cost = (shape.internal_count() as f64).exp2() * (2.0 * k as f64).powi(m as i32);
                if cost > EXACT_GUARD {
                    continue;
                }
                let d = exact_dist(&shape, k).map_err(rt)?;
                dists += 1;
                if d.probs.iter().any(|(f, p)| d.prob(&f.not()) != *p) {
                    asymmetric += 1;
                }
            }
        }
    }
    let est = mc_dist(&spine_catalan()?, 2, C3_TRIALS, seed, &Tally::Full, caps()).map_err(rt)?;
    let worst = negation_gap(&est);
    Ok(CheckResult {
        id: "3",
        title: "negation symmetry",
        pass: asymmetric == 0 && worst <= SIGMA_DIFF,
        detail: format!("{asymmetric} asymmetric of {dists} exact laws; worst spine gap {worst:.2}σ"),
    })
}

pub fn c4_pair_oracle(seed: u64) -> Result<CheckResult, CliError> {
    let mut pool = Vec::new();
    for m in 1..=C4_MAX_NODES.div_ceil(2) {
        pool.extend(enumerate_shapes(m).map_err(rt)?.into_iter().filter(|t| t.num_nodes() <= C4_MAX_NODES));
    }
    let mut rng = trial_rng(seed, 0);
    let mut cases = 0u64;
    let mut mismatches = 0u64;
    for _ in 0..C4_SHAPES {
        let t = &pool[rng.gen_range(0..pool.len())];
        for k in 1..=2 {
            let d = exact_dist(t, k).map_err(rt)?;
            let points: Vec<Vec<bool>> = (0..1usize << k).map(|i| (0..k).map(|j| (i >> j) & 1 == 1).collect()).collect();
            for a in &points {
                for b in points.iter().filter(|b| *b != a) {
                    for alpha in [false, true] {
                        for beta in [false, true] {
                            cases += 1;
                            let rec = pair_prob(t, k, a, b, alpha, beta).map_err(rt)?;
                            if rec != d.pair_marginal(a, b, alpha, beta).map_err(rt)? {
                                mismatches += 1;
                            }
                            if alpha && !beta && rec != pair_p10_closed(t, k, a, b).map_err(rt)? {
                                mismatches += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CheckResult {
        id: "4",
        title: "pair recursion oracle",
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches in {cases} cases over {C4_SHAPES} shapes"),
    })
}

pub fn c5_u_law(_seed: u64) -> Result<CheckResult, CliError> {
    let u = u_sequence(0.5, C5_SIGMA).map_err(rt)?;
    let scaled = C5_SIGMA as f64 * u[C5_SIGMA - 1];
    Ok(CheckResult {
        id: "5",
        title: "u_σ ~ 1/σ",
        pass: (scaled - 1.0).abs() <= C5_TOL,
        detail: format!("σ·u_σ = {scaled:.5} at σ = {C5_SIGMA}"),
    })
}

pub fn c6_degeneracy(seed: u64) -> Result<CheckResult, CliError> {
    let mut consts = Vec::new();
    let mut floors_ok = true;
    let mut detail = Vec::new();
    for (i, &h) in C6_HEIGHTS.iter().enumerate() {
        let r = nonconstant_lower_bound_check(&balanced_binary(h), 2, C6_TRIALS, derive_seed(seed, i as u64)).map_err(rt)?;
        floors_ok &= r.pass;
        consts.push((1.0 - r.p_hat, r.stderr));
        detail.push(format!("σ={h}: p̂(const)={:.4}, p̂(nonconst)={:.4} vs floor {:.4}", 1.0 - r.p_hat, r.p_hat, r.floor));
    }
    let increasing = consts
        .windows(2)
        .all(|w| w[1].0 - w[0].0 > C6_MARGIN * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    Ok(CheckResult {
        id: "6",
        title: "degeneracy with height",
        pass: increasing && floors_ok,
        detail: format!("{}; increasing: {increasing}; floors: {floors_ok}", detail.join("; ")),
    })
}

pub fn c7a_bst_saturation(seed: u64) -> Result<CheckResult, CliError> {
    use rayon::prelude::*;
    let levels: Vec<usize> = (0..C7_SATURATION_TREES as usize)
        .into_par_iter()
        .map(|i| sample_bst(C7_SATURATION_N, &mut trial_rng(seed, i as u64)).map(|t| t.saturation_level()))
        .collect::<Result<_, _>>()
        .map_err(rt)?;
    let mean = levels.iter().sum::<usize>() as f64 / levels.len() as f64;
    let ratio = mean / (C7_SATURATION_N as f64).ln();
    Ok(CheckResult {
        id: "7a",
        title: "BST saturation level",
        pass: within(ratio, C7_BAND),
        detail: format!(
            "mean saturation {mean:.3} at n = {C7_SATURATION_N}, ratio to ln n {ratio:.4}, band [{}, {}]",
            C7_BAND.0, C7_BAND.1
        ),
    })
}

fn constant_mass(est: &DistEstimate) -> Result<(f64, f64), CliError> {
    let k = est.k;
    let c = est.count(&BoolFn::truth(k).map_err(rt)?) + est.count(&BoolFn::falsity(k).map_err(rt)?);
    Ok(est.frac(c))
}

pub fn c7b_bst_constants(seed: u64) -> Result<CheckResult, CliError> {
    let mut mass = Vec::new();
    for (i, &n) in C7_SIZES.iter().enumerate() {
        let m = model("bst", SizeSpec { leaves: Some(n), ..Default::default() })?;
        let targets = Tally::Targets(vec![BoolFn::truth(2).map_err(rt)?, BoolFn::falsity(2).map_err(rt)?]);
        let est = mc_dist(&m, 2, C7_TRIALS, derive_seed(seed, i as u64), &targets, caps()).map_err(rt)?;
        mass.push(constant_mass(&est)?.0);
    }
    let increasing = mass.windows(2).all(|w| w[1] > w[0]);
    let shown: Vec<String> = C7_SIZES.iter().zip(&mass).map(|(n, p)| format!("n={n}: {p:.4}")).collect();
    Ok(CheckResult {
        id: "7b",
        title: "BST constant mass grows with n",
        pass: increasing,
        detail: format!("p̂(const) {}", shown.join(", ")),
    })
}

pub fn c8_constant_scaling(seed: u64) -> Result<CheckResult, CliError> {
    let m = spine_catalan()?;
    let mut scaled = Vec::new();
    let mut at_sandwich = None;
    for &k in &C8_KS {
        let targets = Tally::Targets(vec![BoolFn::truth(k).map_err(rt)?, BoolFn::falsity(k).map_err(rt)?]);
        let est = mc_dist(&m, k, C8_TRIALS, derive_seed(seed, k as u64), &targets, caps()).map_err(rt)?;
        scaled.push(k as f64 * est.p(&BoolFn::truth(k).map_err(rt)?));
        if k == C8_SANDWICH_K {
            at_sandwich = Some(est);
        }
    }
    let ratio = scaled.iter().cloned().fold(f64::MIN, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
    let est = at_sandwich.expect("sandwich k is among the ks");
    let forest = forest_stats(&m, C8_SANDWICH_K, C8_TRIALS, derive_seed(seed, 1_000), caps()).map_err(rt)?;
    let s = sandwich_from(&forest, &est).map_err(rt)?;
    let shown: Vec<String> = C8_KS.iter().zip(&scaled).map(|(k, x)| format!("k={k}: {x:.4}")).collect();
    Ok(CheckResult {
        id: "8",
        title: "constant-function scaling",
        pass: ratio <= C8_MAX_RATIO && s.pass(),
        detail: format!(
            "k·p̂(True) {}; ratio {ratio:.3}; sandwich at k={}: {:.5} ≤ {:.5} ≤ {:.3} ({})",
            shown.join(", "),
            C8_SANDWICH_K,
            s.lower,
            s.p_true,
            s.upper,
            if s.pass() { "holds" } else { "violated" }
        ),
    })
}

pub fn c9_exponents(seed: u64) -> Result<CheckResult, CliError> {
    let x1 = lit(1, 1)?;
    let and = lit(2, 1)?.and(&lit(2, 2)?);
    let fs = [BoolFn::truth(1).map_err(rt)?, x1, and];
    let bands = [C9_TRUE_BAND, C9_X1_BAND, C9_AND_BAND];
    let reports = scaling_exponents(&spine_catalan()?, &fs, &C9_KS, C9_TRIALS, seed, caps()).map_err(rt)?;
    let mut pass = true;
    let mut shown = Vec::new();
    for ((r, band), name) in reports.iter().zip(bands).zip(["True", "x1", "x1∧x2"]) {
        let slope = r.fit.as_ref().map(|f| f.slope);
        let ok = slope.is_some_and(|s| within(s, band));
        pass &= ok;
        shown.push(format!("{name}: {} in [{}, {}]", slope.map_or("none".into(), |s| format!("{s:.3}")), band.0, band.1));
    }
    Ok(CheckResult { id: "9", title: "spine scaling exponents", pass, detail: shown.join("; ") })
}

pub fn c10_alpha(seed: u64) -> Result<CheckResult, CliError> {
    use rayon::prelude::*;
    let mut tvs = Vec::new();
    for (i, &a) in C10_ALPHAS.iter().enumerate() {
        let s = derive_seed(seed, i as u64);
        let lefts: Vec<usize> = (0..C10_TRIALS as usize)
            .into_par_iter()
            .map(|t| sample_alpha(C10_N, a, &mut trial_rng(s, t as u64)).map(|tree| tree.root_split()[0]))
            .collect::<Result<_, _>>()
            .map_err(rt)?;
        let mut counts = vec![0u64; C10_N];
        for j in lefts {
            counts[j] += 1;
        }
        let mut tv = 0.0;
        for (j, &c) in counts.iter().enumerate().skip(1) {
            tv += (c as f64 / C10_TRIALS as f64 - alpha_split_pmf(C10_N, a, j).map_err(rt)?).abs();
        }
        tvs.push(tv / 2.0);
    }
    let tv_ok = tvs.iter().all(|&t| t <= C10_TV);
    let mut floor_ok = true;
    for &a in &C10_GRID {
        for n in 2..=C10_MAX_N {
            floor_ok &= alpha_split_pmf(n, a, 1).map_err(rt)? >= a / 2.0;
        }
    }
    let m = model("spine:alpha:0.5", SizeSpec::default())?;
    let r = scaling_exponents(&m, &[lit(1, 1)?], &C10_KS, C10_SCALING_TRIALS, derive_seed(seed, 99), caps()).map_err(rt)?;
    let slope = r[0].fit.as_ref().map(|f| f.slope);
    let slope_ok = slope.is_some_and(|s| within(s, C10_BAND));
    let shown: Vec<String> = C10_ALPHAS.iter().zip(&tvs).map(|(a, t)| format!("α={a}: {t:.4}")).collect();
    Ok(CheckResult {
        id: "10",
        title: "alpha model",
        pass: tv_ok && floor_ok && slope_ok,
        detail: format!(
            "split TV {}; q_n(1) ≥ α/2: {floor_ok}; alpha:0.5 spine x1 slope {} in [{}, {}]",
            shown.join(", "),
            slope.map_or("none".into(), |s| format!("{s:.3}")),
            C10_BAND.0,
            C10_BAND.1
        ),
    })
}

/// Plane trees without unary nodes, counted by leaves through sequences of subtrees.
fn plane_tree_counts(mmax: usize) -> Vec<u64> {
    let mut s = vec![0u64; mmax + 1];
    // seq[j][m]: ordered j-tuples of trees with m leaves in total.
    let mut seq = vec![vec![0u64; mmax + 1]; mmax + 1];
    seq[0][0] = 1;
    for m in 1..=mmax {
        if m == 1 {
            s[1] = 1;
        } else {
            s[m] = (2..=m).map(|j| seq_count(&s, &mut seq, j, m)).sum();
        }
        seq[1][m] = s[m];
    }
    s.remove(0);
    s
}

fn seq_count(s: &[u64], seq: &mut [Vec<u64>], j: usize, m: usize) -> u64 {
    let v = (1..m).map(|i| s[i] * seq[j - 1][m - i]).sum();
    seq[j][m] = v;
    v
}

pub fn c11_combinatorics(_seed: u64) -> Result<CheckResult, CliError> {
    let enumerated: Vec<usize> = (1..=6).map(|m| enumerate_shapes(m).map(|v| v.len())).collect::<Result<_, _>>().map_err(rt)?;
    let recursion: Vec<usize> = plane_tree_counts(6).into_iter().map(|x| x as usize).collect();
    let shapes_ok = enumerated == C11_SHAPE_COUNTS && recursion == C11_SHAPE_COUNTS;
    let y = unordered_binary_counts(C11_RATIO_RANGE.1 + 1);
    let y_ok = y[..6].iter().zip(C11_Y).all(|(a, b)| *a == b.into());
    let ratios: Vec<f64> = (C11_RATIO_RANGE.0..=C11_RATIO_RANGE.1)
        .map(|n| y[n].to_f64().unwrap_or(f64::NAN) / y[n - 1].to_f64().unwrap_or(f64::NAN))
        .collect();
    let ratio_ok = ratios.iter().all(|&r| r > 2.0 && r < 4.0);
    let mut sums = Vec::new();
    for (a, g) in [(0.5, 0.3), (0.7, 0.7)] {
        let mut s = 0.0;
        for p in partitions(8).into_iter().filter(|p| p.len() >= 2) {
            s += alpha_gamma_split_pmf(8, a, g, &p).map_err(rt)?;
        }
        sums.push(s);
    }
    let sums_ok = sums.iter().all(|s| (s - 1.0).abs() <= C11_TOL);
    let means: Vec<f64> = [1, 2, 5, 10]
        .iter()
        .map(|&k| associative_offspring(k).map(|d| d.mean()))
        .collect::<Result<_, _>>()
        .map_err(rt)?;
    let crit_ok = means.iter().all(|m| (m - 1.0).abs() <= C11_TOL);
    Ok(CheckResult {
        id: "11",
        title: "combinatorial oracles",
        pass: shapes_ok && y_ok && ratio_ok && sums_ok && crit_ok,
        detail: format!(
            "shape counts {enumerated:?} vs recursion {recursion:?}; y_1..6 ok: {y_ok}; ratios in ({:.4}, {:.4}); alpha-gamma sums {:?}; assoc means {:?}",
            ratios.iter().cloned().fold(f64::MAX, f64::min),
            ratios.iter().cloned().fold(f64::MIN, f64::max),
            sums,
            means
        ),
    })
}

pub fn c12_complexity(_seed: u64) -> Result<CheckResult, CliError> {
    let table = build_complexity_table(2, 4).map_err(rt)?;
    let l = |f: &BoolFn| table.complexity(f).ok();
    let (x1, x2) = (lit(2, 1)?, lit(2, 2)?);
    let xor = x1.and(&x2.not()).or(&x1.not().and(&x2));
    let expected: Vec<(BoolFn, usize)> = vec![
        (BoolFn::truth(2).map_err(rt)?, 0),
        (BoolFn::falsity(2).map_err(rt)?, 0),
        (x1.clone(), 1),
        (x1.not(), 1),
        (x2.clone(), 1),
        (x2.not(), 1),
        (x1.and(&x2), 2),
        (x1.or(&x2), 2),
        (xor.clone(), 4),
        (xor.not(), 4),
    ];
    let values_ok = expected.iter().all(|(f, want)| l(f) == Some(*want));
    let table_map: std::collections::BTreeMap<BoolFn, usize> = table.iter().map(|(f, s, _)| (f.clone(), s)).collect();
    let brute = brute_force_min_sizes(2, 4).map_err(rt)?;
    let oracle_ok = table_map == brute;
    Ok(CheckResult {
        id: "12",
        title: "complexity table",
        pass: values_ok && table.len() == 16 && oracle_ok,
        detail: format!("named values ok: {values_ok}; {} functions assigned; equals brute force: {oracle_ok}", table.len()),
    })
}

pub fn c13_repetitions(seed: u64) -> Result<CheckResult, CliError> {
    let m = spine_catalan()?;
    let mut pass = true;
    let mut shown = Vec::new();
    for &k in &C13_KS {
        let r = repetition_bound_check(&m, k, C13_TRIALS, derive_seed(seed, k as u64), caps()).map_err(rt)?;
        pass &= r.pass && r.p_hat <= r.bound + SIGMA * r.stderr;
        shown.push(format!("k={k}: p̂ {:.4} ≤ bound {:.2}", r.p_hat, r.bound));
    }
    Ok(CheckResult { id: "13", title: "repetition bound", pass, detail: shown.join("; ") })
}

/// Stochastic commands re-run under different thread counts.
pub fn determinism_commands(seed: u64) -> Vec<Vec<String>> {
    let s = seed.to_string();
    let cmds: [&[&str]; 7] = [
        &["sample", "--model", "catalan", "--leaves", "7", "--k", "3", "--trials", "200"],
        &["sample", "--model", "alpha:0.5", "--n", "10", "--stats", "split", "--trials", "5000"],
        &["sample", "--model", "bst", "--n", "2000", "--stats", "saturation", "--trials", "50"],
        &["dist", "--model", "spine:catalan", "--k", "3", "--trials", "20000"],
        &["dist", "--model", "bst", "--leaves", "60", "--k", "2", "--trials", "5000", "--format", "csv"],
        &["dist", "--model", "spine:alpha:0.3", "--k", "10", "--trials", "5000"],
        &["scaling", "--model", "spine:catalan", "--fn", "1:2", "--ks", "2,4", "--trials", "20000", "--format", "csv"],
    ];
    cmds.iter()
        .map(|c| {
            let mut v: Vec<String> = std::iter::once("andor").chain(c.iter().copied()).map(String::from).collect();
            v.extend(["--seed".to_string(), s.clone()]);
            v
        })
        .collect()
}

pub fn c14_determinism(seed: u64) -> Result<CheckResult, CliError> {
    let mut differing = Vec::new();
    let cmds = determinism_commands(seed);
    for cmd in &cmds {
        let mut outs = Vec::new();
        for threads in ["1", "3"] {
            let mut args = cmd.clone();
            args.extend(["--threads".to_string(), threads.to_string()]);
            let (code, out, err) = crate::run_captured(&args);
            if code != 0 {
                return Err(CliError::Runtime(format!("{} failed: {}", cmd.join(" "), String::from_utf8_lossy(&err))));
            }
            outs.push(out);
        }
        if outs[0] != outs[1] {
            differing.push(cmd[1].clone());
        }
    }
    Ok(CheckResult {
        id: "14",
        title: "determinism across thread counts",
        pass: differing.is_empty(),
        detail: format!("{} commands compared, {} differ {:?}", cmds.len(), differing.len(), differing),
    })
}

