// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations. Each returns the full rendered output so that
//! nothing is written when a command fails.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use andor_core::boolfn::{BoolFn, MAX_ARITY};
use andor_core::complexity::{build_complexity_table, is_read_once};
use andor_core::exprtree::{parse, random_labelling, TreeShape};
use andor_core::limitdist::{default_targets, mc_dist, scaling_estimates, scaling_report, Tally, FULL_HIST_MAX_ARITY};
use andor_core::model::{parse_model, Model, ModelError, ModelKind, ShapeModel};
use andor_core::seeding::trial_rng;
use andor_core::treegen::{alpha_split_pmf, GenError};
use andor_core::trimming::{repetitions, trim};

use crate::args::{ComplexityArgs, DistArgs, Format, SampleArgs, ScalingArgs, Stat, TrimArgs};
use crate::output::{csv_text, json_text, CliError};

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Io { .. } => CliError::Runtime(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn check_arity(k: usize) -> Result<(), CliError> {
    if k == 0 || k > MAX_ARITY {
        return Err(CliError::Usage(format!("k must be in 1..={MAX_ARITY}, got {k}")));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be ≥ 1".into()));
    }
    Ok(())
}

fn parse_fn(text: &str) -> Result<BoolFn, CliError> {
    text.parse().map_err(|e| CliError::Usage(format!("bad function {text:?}: {e}")))
}

fn finite_shape(model: &Model) -> Result<&ShapeModel, CliError> {
    match &model.kind {
        ModelKind::Finite(s) => Ok(s),
        ModelKind::Spine(_) => Err(CliError::Usage(format!("{model} is infinite; sample needs a finite model"))),
    }
}

fn sample_shapes(shape: &ShapeModel, trials: u64, seed: u64) -> Result<Vec<TreeShape>, CliError> {
    (0..trials as usize)
        .into_par_iter()
        .map(|i| shape.sample(&mut trial_rng(seed, i as u64)))
        .collect::<Result<_, GenError>>()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
struct Trees<'a> {
    model: &'a str,
    k: usize,
    seed: u64,
    trees: Vec<String>,
}

#[derive(Serialize)]
struct SplitRow {
    split: Vec<usize>,
    count: u64,
    p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pmf: Option<f64>,
}

#[derive(Serialize)]
struct SplitStats<'a> {
    model: &'a str,
    trials: u64,
    seed: u64,
    rows: Vec<SplitRow>,
    /// Total variation distance to the model's split law, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    tv: Option<f64>,
}

#[derive(Serialize)]
struct SaturationStats<'a> {
    model: &'a str,
    trials: u64,
    seed: u64,
    mean: f64,
    stderr: f64,
    /// Mean of `saturation / ln(leaves)`.
    ratio: f64,
    histogram: BTreeMap<usize, u64>,
}

#[derive(Serialize)]
struct SizeStats<'a> {
    model: &'a str,
    trials: u64,
    seed: u64,
    mean_leaves: f64,
    mean_nodes: f64,
    mean_height: f64,
    mean_saturation: f64,
}

/// Binary split law of the model, if it has a known one.
fn split_pmf(shape: &ShapeModel, split: &[usize]) -> Option<f64> {
    let [j, r] = split else { return None };
    let n = j + r;
    match shape {
        ShapeModel::Alpha { alpha, n: size } if *size == n => alpha_split_pmf(n, *alpha, *j).ok(),
        ShapeModel::Bst(size) if *size == n => Some(1.0 / (n - 1) as f64),
        _ => None,
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sample(a: &SampleArgs, format: Format) -> Result<String, CliError> {
    let model = parse_model(&a.model, &a.size.spec()).map_err(model_error)?;
    let shape = finite_shape(&model)?;
    check_arity(a.k)?;
    check_trials(a.trials)?;
    let name = model.name.as_str();
    let Some(stat) = a.stats else {
        let trees: Vec<String> = (0..a.trials as usize)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(a.seed, i as u64);
                let t = shape.sample(&mut rng)?;
                Ok(random_labelling(&t, a.k, &mut rng).serialize())
            })
            .collect::<Result<_, GenError>>()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        return match format {
            Format::Json => json_text(&Trees { model: name, k: a.k, seed: a.seed, trees }),
            Format::Csv => csv_text(&["expr"], trees.iter().map(|t| vec![t.clone()])),
        };
    };
    let shapes = sample_shapes(shape, a.trials, a.seed)?;
    let n = a.trials as f64;
    match stat {
        Stat::Split => {
            let mut hist: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
            for t in &shapes {
                *hist.entry(t.root_split()).or_default() += 1;
            }
            let rows: Vec<SplitRow> = hist
                .into_iter()
                .map(|(split, count)| {
                    let pmf = split_pmf(shape, &split);
                    SplitRow { split, count, p: count as f64 / n, pmf }
                })
                .collect();
            let tv = split_tv(shape, &rows);
            match format {
                Format::Json => json_text(&SplitStats { model: name, trials: a.trials, seed: a.seed, rows, tv }),
                Format::Csv => csv_text(
                    &["split", "count", "p", "pmf"],
                    rows.iter().map(|r| {
                        let split = r.split.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+");
                        vec![split, r.count.to_string(), r.p.to_string(), r.pmf.map_or(String::new(), |x| x.to_string())]
                    }),
                ),
            }
        }
        Stat::Saturation => {
            let levels: Vec<f64> = shapes.iter().map(|t| t.saturation_level() as f64).collect();
            let ratios: Vec<f64> = shapes
                .iter()
                .map(|t| if t.size() > 1 { t.saturation_level() as f64 / (t.size() as f64).ln() } else { f64::NAN })
                .collect();
            let (mean, stderr) = mean_and_stderr(&levels);
            let (ratio, _) = mean_and_stderr(&ratios);
            let mut histogram = BTreeMap::new();
            for t in &shapes {
                *histogram.entry(t.saturation_level()).or_default() += 1;
            }
            let s = SaturationStats { model: name, trials: a.trials, seed: a.seed, mean, stderr, ratio, histogram };
            match format {
                Format::Json => json_text(&s),
                Format::Csv => csv_text(
                    &["saturation", "count"],
                    s.histogram.iter().map(|(l, c)| vec![l.to_string(), c.to_string()]),
                ),
            }
        }
        Stat::Size => {
            let avg = |f: &dyn Fn(&TreeShape) -> usize| shapes.iter().map(|t| f(t) as f64).sum::<f64>() / n;
            let s = SizeStats {
                model: name,
                trials: a.trials,
                seed: a.seed,
                mean_leaves: avg(&|t| t.size()),
                mean_nodes: avg(&|t| t.num_nodes()),
                mean_height: avg(&|t| t.height()),
                mean_saturation: avg(&|t| t.saturation_level()),
            };
            match format {
                Format::Json => json_text(&s),
                Format::Csv => csv_text(
                    &["mean_leaves", "mean_nodes", "mean_height", "mean_saturation"],
                    [vec![
                        s.mean_leaves.to_string(),
                        s.mean_nodes.to_string(),
                        s.mean_height.to_string(),
                        s.mean_saturation.to_string(),
                    ]],
                ),
            }
        }
    }
}

fn split_tv(shape: &ShapeModel, rows: &[SplitRow]) -> Option<f64> {
    let n = match shape {
        ShapeModel::Alpha { n, .. } | ShapeModel::Bst(n) if *n >= 2 => *n,
        _ => return None,
    };
    let observed: BTreeMap<usize, f64> = rows.iter().filter(|r| r.split.len() == 2).map(|r| (r.split[0], r.p)).collect();
    let mut tv = 0.0;
    for j in 1..n {
        let q = split_pmf(shape, &[j, n - j])?;
        tv += (observed.get(&j).copied().unwrap_or(0.0) - q).abs();
    }
    Some(tv / 2.0)
}

#[derive(Serialize)]
struct TrimReport {
    input: String,
    k: usize,
    /// `True`, `False` or the truth table.
    function: String,
    truth_table: BoolFn,
    class: &'static str,
    size: usize,
    trim_size: usize,
    cut_nodes: usize,
    repetitions: usize,
    trimmed: String,
}

pub fn trim_cmd(a: &TrimArgs, format: Format) -> Result<String, CliError> {
    let tree = parse(&a.expr).map_err(|e| CliError::Usage(format!("parse error: {e}")))?;
    let used = tree.max_var() as usize;
    let k = a.k.unwrap_or(used.max(1));
    check_arity(k)?;
    if k < used {
        return Err(CliError::Usage(format!("expression uses x{used} but k = {k}")));
    }
    let f = tree.eval(k).map_err(|e| CliError::Runtime(e.to_string()))?;
    let trimmed = trim(&tree);
    let (function, class) = if f.is_true() {
        ("True".to_string(), "constant")
    } else if f.is_false() {
        ("False".to_string(), "constant")
    } else {
        (f.to_hex(), "nonconstant")
    };
    let r = TrimReport {
        input: a.expr.clone(),
        k,
        function,
        truth_table: f,
        class,
        size: tree.size(),
        trim_size: trimmed.trim_size(),
        cut_nodes: trimmed.cut_nodes(),
        repetitions: repetitions(trimmed.tree()),
        trimmed: trimmed.tree().serialize(),
    };
    match format {
        Format::Json => json_text(&r),
        Format::Csv => csv_text(
            &["input", "k", "function", "truth_table", "class", "size", "trim_size", "cut_nodes", "repetitions", "trimmed"],
            [vec![
                r.input.clone(),
                r.k.to_string(),
                r.function.clone(),
                r.truth_table.to_hex(),
                r.class.to_string(),
                r.size.to_string(),
                r.trim_size.to_string(),
                r.cut_nodes.to_string(),
                r.repetitions.to_string(),
                r.trimmed.clone(),
            ]],
        ),
    }
}

pub fn dist(a: &DistArgs, format: Format) -> Result<String, CliError> {
    let model = parse_model(&a.model, &a.size.spec()).map_err(model_error)?;
    check_arity(a.k)?;
    check_trials(a.trials)?;
    let tally = if !a.targets.is_empty() {
        let fs = a.targets.iter().map(|t| parse_fn(t)).collect::<Result<Vec<_>, _>>()?;
        if let Some(f) = fs.iter().find(|f| f.arity() > a.k) {
            return Err(CliError::Usage(format!("target {f} has more than k = {} variables", a.k)));
        }
        Tally::Targets(fs)
    } else if a.k > FULL_HIST_MAX_ARITY {
        Tally::Targets(default_targets(a.k).map_err(|e| CliError::Runtime(e.to_string()))?)
    } else {
        Tally::Full
    };
    let est = mc_dist(&model, a.k, a.trials, a.seed, &tally, a.caps.caps()).map_err(|e| CliError::Runtime(e.to_string()))?;
    match format {
        Format::Json => json_text(&est),
        Format::Csv => {
            let (pu, su) = est.frac(est.unclassified);
            let mut rows: Vec<Vec<String>> = est
                .entries
                .iter()
                .map(|e| vec![e.function.to_hex(), e.count.to_string(), e.p.to_string(), e.stderr.to_string()])
                .collect();
            if let Some(o) = est.other {
                let (p, s) = est.frac(o);
                rows.push(vec!["other".into(), o.to_string(), p.to_string(), s.to_string()]);
            }
            rows.push(vec!["unclassified".into(), est.unclassified.to_string(), pu.to_string(), su.to_string()]);
            csv_text(&["fn", "count", "p", "stderr"], rows)
        }
    }
}

pub fn scaling(a: &ScalingArgs, format: Format) -> Result<String, CliError> {
    let model = parse_model(&a.model, &Default::default()).map_err(model_error)?;
    if !model.is_spine() {
        return Err(CliError::Usage(format!("scaling needs a spine model, got {model}")));
    }
    let f = parse_fn(&a.function)?;
    check_trials(a.trials)?;
    for &k in &a.ks {
        check_arity(k)?;
        if k < f.arity() {
            return Err(CliError::Usage(format!("k = {k} is below the arity of {f}")));
        }
    }
    let caps = a.caps.caps();
    let est = scaling_estimates(&model, std::slice::from_ref(&f), &a.ks, a.trials, a.seed, caps)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = scaling_report(&model.name, &f, a.seed, &est).map_err(|e| CliError::Runtime(e.to_string()))?;
    match format {
        Format::Json => json_text(&report),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.k.to_string(),
                        p.p_hat.to_string(),
                        p.stderr.to_string(),
                        p.log_k.to_string(),
                        p.log_p.map_or(String::new(), |x| x.to_string()),
                    ]
                })
                .collect();
            rows.push(vec!["slope".into(), "intercept".into(), "r2".into(), String::new(), String::new()]);
            rows.push(match &report.fit {
                Some(fit) => vec![fit.slope.to_string(), fit.intercept.to_string(), fit.r2.to_string(), String::new(), String::new()],
                None => vec![String::new(); 5],
            });
            csv_text(&["k", "p_hat", "stderr", "log_k", "log_p"], rows)
        }
    }
}

#[derive(Serialize)]
struct ComplexityRow {
    #[serde(rename = "fn")]
    function: BoolFn,
    #[serde(rename = "L")]
    l: usize,
    ess: usize,
    read_once: bool,
    witness: String,
}

pub fn complexity(a: &ComplexityArgs, format: Format) -> Result<String, CliError> {
    let table = build_complexity_table(a.k, a.max_size).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<ComplexityRow> = table
        .iter()
        .map(|(f, l, w)| ComplexityRow {
            function: f.clone(),
            l,
            ess: f.ess(),
            read_once: is_read_once(f, &table).unwrap_or(false),
            witness: w.serialize(),
        })
        .collect();
    match format {
        Format::Json => json_text(&rows),
        Format::Csv => csv_text(
            &["fn", "L", "Ess", "read_once", "witness"],
            rows.iter().map(|r| {
                vec![r.function.to_hex(), r.l.to_string(), r.ess.to_string(), r.read_once.to_string(), r.witness.clone()]
            }),
        ),
    }
}
