//! Flat `key = value` text format for classifier parameters.
//!
//! ```text
//! # season-core classifier parameters
//! format = season-core-classifier
//! version = 1
//! n_styles = 2
//! n_formations = 2
//! prior_features = false
//! win.0 = 1.2500000000000000e-1
//! ...
//! ```
//!
//! Reals are written with 17 significant digits, so reading a file back
//! reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::classifier::ClassifierParams;
use super::features::FeatureLayout;
use super::{ModelError, TacticCatalog};

const FORMAT: &str = "season-core-classifier";
const VERSION: u32 = 1;

pub fn write_params(params: &ClassifierParams) -> String {
    let mut out = String::new();
    let c = params.layout.catalog;
    let _ = writeln!(out, "# season-core classifier parameters");
    let _ = writeln!(out, "format = {FORMAT}");
    let _ = writeln!(out, "version = {VERSION}");
    let _ = writeln!(out, "n_styles = {}", c.n_styles);
    let _ = writeln!(out, "n_formations = {}", c.n_formations);
    let _ = writeln!(out, "prior_features = {}", params.layout.prior);
    for (i, v) in params.win.iter().enumerate() {
        let _ = writeln!(out, "win.{i} = {v:.16e}");
    }
    for (i, v) in params.draw.iter().enumerate() {
        let _ = writeln!(out, "draw.{i} = {v:.16e}");
    }
    for (i, v) in params.home_advantage.iter().enumerate() {
        let _ = writeln!(out, "home_advantage.{i} = {v:.16e}");
    }
    let _ = writeln!(out, "bias_win = {:.16e}", params.bias_win);
    let _ = writeln!(out, "bias_draw = {:.16e}", params.bias_draw);
    out
}

pub fn read_params(text: &str) -> Result<ClassifierParams, ModelError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| ModelError::Parse { line, message: format!("expected `key = value`, got {body:?}") })?;
        if entries.insert(k.trim().to_string(), (line, v.trim().to_string())).is_some() {
            return Err(ModelError::Parse { line, message: format!("duplicate key {:?}", k.trim()) });
        }
    }
    let mut take = |key: &str| {
        entries.remove(key).ok_or_else(|| ModelError::Parse { line: 0, message: format!("missing key {key:?}") })
    };
    let (line, fmt) = take("format")?;
    if fmt != FORMAT {
        return Err(ModelError::Parse { line, message: format!("unknown format {fmt:?}") });
    }
    let (line, version) = take("version")?;
    if version != VERSION.to_string() {
        return Err(ModelError::Parse { line, message: format!("unsupported version {version}") });
    }
    let int = |(line, v): (usize, String)| {
        v.parse::<usize>().map_err(|_| ModelError::Parse { line, message: format!("{v:?} is not a count") })
    };
    let n_styles = int(take("n_styles")?)?;
    let n_formations = int(take("n_formations")?)?;
    let (line, prior) = take("prior_features")?;
    let prior = prior
        .parse::<bool>()
        .map_err(|_| ModelError::Parse { line, message: format!("{prior:?} is not true/false") })?;
    let layout = FeatureLayout::new(TacticCatalog::new(n_styles, n_formations)?, prior);
    let n = layout.len();

    let real = |(line, v): (usize, String)| {
        v.parse::<f64>().map_err(|_| ModelError::Parse { line, message: format!("{v:?} is not a number") })
    };
    let mut flat = Vec::with_capacity(2 * n + 5);
    for i in 0..n {
        flat.push(real(take(&format!("win.{i}"))?)?);
    }
    for i in 0..n {
        flat.push(real(take(&format!("draw.{i}"))?)?);
    }
    for i in 0..3 {
        flat.push(real(take(&format!("home_advantage.{i}"))?)?);
    }
    flat.push(real(take("bias_win")?)?);
    flat.push(real(take("bias_draw")?)?);
    if let Some((key, (line, _))) = entries.into_iter().next() {
        return Err(ModelError::Parse { line, message: format!("unexpected key {key:?}") });
    }
    ClassifierParams::from_flat(layout, &flat)
}
