// SPDX-License-Identifier: Apache-2.0

//! Named tree models.
//!
//! Finite presets: `catalan`, `bst`, `balanced`, `alpha:<α>`, `assoc:<k>`,
//! `gw:<file>`. Spine presets prefix any of the Galton–Watson or alpha
//! presets with `spine:`.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::boolfn::{BoolFn, LiteralTable};
use crate::exprtree::{random_labelling, TreeShape};
use crate::spine::{SpineCaps, SpineEvaluator, SpineOutcome, SpineSource};
use crate::treegen::{
    associative_offspring, balanced_binary, sample_alpha, sample_bst, sample_gw_conditioned, spine_generator,
    GenError, OffspringDist, SizeMode,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model preset {0:?}")]
    Unknown(String),
    #[error("model {model}: {msg}")]
    Size { model: String, msg: String },
    #[error("bad parameter in {0:?}")]
    Parameter(String),
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// Size flags shared by the finite presets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SizeSpec {
    pub leaves: Option<usize>,
    pub nodes: Option<usize>,
    pub height: Option<usize>,
}

/// Sampler for one finite shape.
#[derive(Debug, Clone)]
pub enum ShapeModel {
    Fixed(TreeShape),
    /// Galton–Watson tree conditioned on its size.
    Gw { dist: OffspringDist, size: usize, mode: SizeMode },
    /// Random binary search tree with `n` leaves.
    Bst(usize),
    Balanced(usize),
    /// Ford alpha tree with `n` leaves.
    Alpha { alpha: f64, n: usize },
}

/// Node-generation budget for conditioned Galton–Watson sampling.
pub const CONDITIONING_BUDGET: u64 = 20_000_000_000;

impl ShapeModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TreeShape, GenError> {
        match self {
            ShapeModel::Fixed(t) => Ok(t.clone()),
            ShapeModel::Gw { dist, size, mode } => sample_gw_conditioned(dist, *size, *mode, rng, CONDITIONING_BUDGET),
            ShapeModel::Bst(n) => sample_bst(*n, rng),
            ShapeModel::Balanced(h) => Ok(balanced_binary(*h)),
            ShapeModel::Alpha { alpha, n } => sample_alpha(*n, *alpha, rng),
        }
    }

    /// Split law driving lazy evaluation, when the model is a recursive split tree.
    pub fn split_source(&self) -> Option<(SpineSource, u64)> {
        match self {
            ShapeModel::Bst(n) => Some((SpineSource::Alpha(0.0), *n as u64)),
            ShapeModel::Alpha { alpha, n } => Some((SpineSource::Alpha(*alpha), *n as u64)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Finite(ShapeModel),
    Spine(SpineSource),
}

/// A parsed preset together with its canonical name.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub kind: ModelKind,
    split: Option<(SpineSource, u64)>,
}

impl Model {
    pub fn new(name: impl Into<String>, kind: ModelKind) -> Self {
        let split = match &kind {
            ModelKind::Finite(s) => s.split_source(),
            ModelKind::Spine(_) => None,
        };
        Model { name: name.into(), kind, split }
    }

    /// A model that always returns `shape`.
    pub fn fixed(name: impl Into<String>, shape: TreeShape) -> Self {
        Model::new(name, ModelKind::Finite(ShapeModel::Fixed(shape)))
    }

    pub fn is_spine(&self) -> bool {
        matches!(self.kind, ModelKind::Spine(_))
    }

    pub fn spine_source(&self) -> Option<&SpineSource> {
        match &self.kind {
            ModelKind::Spine(s) => Some(s),
            ModelKind::Finite(_) => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn param<T: std::str::FromStr>(preset: &str, text: &str) -> Result<T, ModelError> {
    text.trim().parse().map_err(|_| ModelError::Parameter(preset.to_string()))
}

fn alpha_param(preset: &str, text: &str) -> Result<f64, ModelError> {
    let a: f64 = param(preset, text)?;
    if a > 0.0 && a <= 1.0 {
        Ok(a)
    } else {
        Err(ModelError::Parameter(preset.to_string()))
    }
}

fn read_gw(path: &str) -> Result<OffspringDist, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|err| ModelError::Io { path: path.to_string(), err })?;
    Ok(OffspringDist::from_json(&text)?)
}

fn need(preset: &str, v: Option<usize>, what: &str) -> Result<usize, ModelError> {
    match v {
        Some(x) if x >= 1 => Ok(x),
        Some(_) => Err(ModelError::Size { model: preset.into(), msg: format!("{what} must be ≥ 1") }),
        None => Err(ModelError::Size { model: preset.into(), msg: format!("needs {what}") }),
    }
}

fn gw_size(preset: &str, size: &SizeSpec) -> Result<(usize, SizeMode), ModelError> {
    match (size.leaves, size.nodes) {
        (Some(_), Some(_)) => {
            Err(ModelError::Size { model: preset.into(), msg: "give either leaves or nodes, not both".into() })
        }
        (Some(n), None) => Ok((need(preset, Some(n), "leaves")?, SizeMode::Leaves)),
        (None, Some(n)) => Ok((need(preset, Some(n), "nodes")?, SizeMode::TotalNodes)),
        (None, None) => Err(ModelError::Size { model: preset.into(), msg: "needs leaves or nodes".into() }),
    }
}

/// Parses a preset name; finite presets take their size from `size`.
pub fn parse_model(preset: &str, size: &SizeSpec) -> Result<Model, ModelError> {
    let unknown = || ModelError::Unknown(preset.to_string());
    if let Some(rest) = preset.strip_prefix("spine:") {
        let src = match rest.split_once(':') {
            None if rest == "catalan" => SpineSource::Gw(spine_generator(&OffspringDist::catalan())?),
            Some(("alpha", a)) => SpineSource::Alpha(alpha_param(preset, a)?),
            Some(("assoc", k)) => SpineSource::Gw(spine_generator(&associative_offspring(param(preset, k)?)?)?),
            Some(("gw", path)) => SpineSource::Gw(spine_generator(&read_gw(path)?)?),
            _ => return Err(unknown()),
        };
        return Ok(Model::new(preset, ModelKind::Spine(src)));
    }
    let (shape, name) = match preset.split_once(':') {
        None if preset == "catalan" => {
            let (n, mode) = gw_size(preset, size)?;
            (ShapeModel::Gw { dist: OffspringDist::catalan(), size: n, mode }, size_name(preset, n, mode))
        }
        None if preset == "bst" => {
            let n = need(preset, size.leaves, "leaves")?;
            (ShapeModel::Bst(n), format!("bst(leaves={n})"))
        }
        None if preset == "balanced" => {
            let h = size.height.ok_or_else(|| ModelError::Size { model: preset.into(), msg: "needs height".into() })?;
            if h > 24 {
                return Err(ModelError::Size { model: preset.into(), msg: "height must be ≤ 24".into() });
            }
            (ShapeModel::Balanced(h), format!("balanced(height={h})"))
        }
        Some(("alpha", a)) => {
            let alpha = alpha_param(preset, a)?;
            let n = need(preset, size.leaves, "leaves")?;
            (ShapeModel::Alpha { alpha, n }, format!("{preset}(leaves={n})"))
        }
        Some(("assoc", k)) => {
            let dist = associative_offspring(param(preset, k)?)?;
            let (n, mode) = gw_size(preset, size)?;
            (ShapeModel::Gw { dist, size: n, mode }, size_name(preset, n, mode))
        }
        Some(("gw", path)) => {
            let dist = read_gw(path)?;
            let (n, mode) = gw_size(preset, size)?;
            (ShapeModel::Gw { dist, size: n, mode }, size_name(preset, n, mode))
        }
        _ => return Err(unknown()),
    };
    if let ShapeModel::Gw { dist, size, mode } = &shape {
        if !crate::treegen::size_attainable(dist, *size, *mode) {
            return Err(GenError::Unattainable(*size).into());
        }
    }
    Ok(Model::new(name, ModelKind::Finite(shape)))
}

fn size_name(preset: &str, n: usize, mode: SizeMode) -> String {
    match mode {
        SizeMode::Leaves => format!("{preset}(leaves={n})"),
        SizeMode::TotalNodes => format!("{preset}(nodes={n})"),
    }
}

/// Result of one labelled draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Draw {
    Function(BoolFn),
    Unclassified,
}

/// Per-worker state for drawing functions from a model.
pub struct Drawer<'a> {
    model: &'a Model,
    lits: &'a LiteralTable,
    split: Option<(SpineEvaluator<'a>, u64)>,
    spine: Option<SpineEvaluator<'a>>,
}

impl<'a> Drawer<'a> {
    pub fn new(model: &'a Model, lits: &'a LiteralTable, caps: SpineCaps) -> Self {
        let split = model.split.as_ref().map(|(src, n)| (SpineEvaluator::new(src, lits, caps), *n));
        let spine = match &model.kind {
            ModelKind::Spine(src) => Some(SpineEvaluator::new(src, lits, caps)),
            ModelKind::Finite(_) => None,
        };
        Drawer { model, lits, split, spine }
    }

    /// Draws a shape, labels it and evaluates it.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Draw, GenError> {
        if let Some(ev) = self.spine.as_mut() {
            return Ok(match ev.eval(rng) {
                SpineOutcome::Function(f) => Draw::Function(f),
                SpineOutcome::NotStabilized => Draw::Unclassified,
            });
        }
        if let Some((ev, n)) = self.split.as_mut() {
            return Ok(ev.eval_split_tree(*n, rng).map_or(Draw::Unclassified, Draw::Function));
        }
        let ModelKind::Finite(shape) = &self.model.kind else { unreachable!() };
        let t = shape.sample(rng)?;
        let tree = random_labelling(&t, self.lits.arity(), rng);
        Ok(Draw::Function(tree.eval_with(self.lits).expect("labels fit k")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        let s = SizeSpec { leaves: Some(5), ..Default::default() };
        assert_eq!(parse_model("catalan", &s).unwrap().name, "catalan(leaves=5)");
        assert_eq!(parse_model("alpha:0.5", &s).unwrap().name, "alpha:0.5(leaves=5)");
        assert!(matches!(parse_model("spine:catalan", &s).unwrap().kind, ModelKind::Spine(_)));
        assert!(matches!(parse_model("spine:assoc:3", &s).unwrap().kind, ModelKind::Spine(_)));
        assert!(matches!(parse_model("spine:alpha:0.3", &s).unwrap().kind, ModelKind::Spine(_)));
        assert!(matches!(parse_model("nope", &s), Err(ModelError::Unknown(_))));
        assert!(matches!(parse_model("alpha:1.5", &s), Err(ModelError::Parameter(_))));
        assert!(matches!(parse_model("catalan", &SizeSpec::default()), Err(ModelError::Size { .. })));
        let even = SizeSpec { nodes: Some(4), ..Default::default() };
        assert!(matches!(parse_model("catalan", &even), Err(ModelError::Gen(GenError::Unattainable(4)))));
        assert!(matches!(parse_model("gw:/nonexistent.json", &s), Err(ModelError::Io { .. })));
    }

    #[test]
    fn gw_file_preset() {
        let dir = std::env::temp_dir().join(format!("andor-gw-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("law.json");
        std::fs::write(&path, r#"{"p": {"0": 0.5, "2": 0.5}, "critical": true}"#).unwrap();
        let name = format!("spine:gw:{}", path.display());
        assert!(matches!(parse_model(&name, &SizeSpec::default()).unwrap().kind, ModelKind::Spine(_)));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
