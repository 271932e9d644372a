//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, section prefixes are dotted.
//! Every key and its default is listed in [`KEYS`]; anything else is an
//! error. Pairs and vectors use `;`-separated entries:
//!
//! ```text
//! n = 3
//! quadrature.level = 1
//! pair.mine.f = 1:0.0:-1.0:0.5:1.0:0.0      # type:x0:x1:radius:re[:im]
//! pair.mine.g = 2:0.2:1.1:0.5:1.0
//! pair.mine.left = 0.0:0.0                 # wedge translation x0:x1
//! vector.ket = 1:0.9:-0.1:0.7:-0.2; 0:1.0  # type:re:im:width:center, 0 = vacuum re[:im]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use znwedge::{Bump, FockVector, QuadratureSettings, TestFunction};

/// `(key, default, description)` for every scalar key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("n", "3", "model size N, at least 2"),
    ("base_mass", "1.0", "mass of particle type 1"),
    ("output.dir", "znwedge-out", "directory for report files"),
    (
        "quadrature.base_panels",
        "30",
        "Gauss–Legendre panels on the rapidity window at level 0",
    ),
    ("quadrature.order", "16", "nodes per panel"),
    (
        "quadrature.level",
        "1",
        "refinement level used for verdicts; panels double per level",
    ),
    ("quadrature.max_level", "2", "highest level in the refinement study"),
    ("quadrature.half_width", "auto", "rapidity window half-width, or auto"),
    ("axioms.real_points", "100", "real grid size for unitarity"),
    ("axioms.real_half_width", "5.0", "real grid spans [-w, w]"),
    ("axioms.strip_points", "12", "strip grid is points x points"),
    ("axioms.strip_half_width", "3.0", "strip grid spans Re in [-w, w]"),
    ("fusion.eta", "calibrate", "calibrate, or closed-form for i·sqrt(2π|R|)"),
    (
        "weak.default_pairs",
        "true",
        "include the five built-in wedge-separated pairs",
    ),
    ("vector.bra", "edge", "bra vector, or edge for the built-in Gaussians"),
    ("vector.ket", "edge", "ket vector, or edge for the built-in Gaussians"),
];

/// Keys accepted under `pair.<label>.`.
pub const PAIR_KEYS: &[(&str, &str)] = &[
    ("f", "left-wedge test function, required"),
    ("g", "right-wedge test function, required"),
    ("left", "translation of the left wedge, default 0:0"),
    ("right", "translation of the right wedge, default 0:0"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum EtaMode {
    Calibrate,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub label: String,
    pub f: TestFunction,
    pub g: TestFunction,
    pub left: [f64; 2],
    pub right: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub base_mass: f64,
    pub output_dir: PathBuf,
    pub quadrature: QuadratureSettings,
    pub max_level: u32,
    pub real_points: usize,
    pub real_half_width: f64,
    pub strip_points: usize,
    pub strip_half_width: f64,
    pub eta: EtaMode,
    pub default_pairs: bool,
    pub pairs: Vec<PairSpec>,
    pub bra: Option<FockVector>,
    pub ket: Option<FockVector>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::parse("").expect("defaults parse")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        let mut pairs: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", lineno + 1);
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            if let Some(rest) = key.strip_prefix("pair.") {
                let Some((label, field)) = rest.rsplit_once('.') else {
                    bail!("line {}: pair keys look like pair.<label>.<field>", lineno + 1);
                };
                if !label
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_')
                {
                    bail!("line {}: pair labels use letters, digits, - and _", lineno + 1);
                }
                if label.is_empty() || !PAIR_KEYS.iter().any(|(k, _)| *k == field) {
                    bail!("line {}: unknown key {key}", lineno + 1);
                }
                if pairs
                    .entry(label.to_string())
                    .or_default()
                    .insert(field.to_string(), value)
                    .is_some()
                {
                    bail!("line {}: duplicate key {key}", lineno + 1);
                }
                continue;
            }
            if !KEYS.iter().any(|(k, _, _)| *k == key) {
                bail!("line {}: unknown key {key}", lineno + 1);
            }
            if values.insert(key.to_string(), value).is_some() {
                bail!("line {}: duplicate key {key}", lineno + 1);
            }
        }
        let get = |key: &str| -> &str {
            values
                .get(key)
                .map(String::as_str)
                .unwrap_or_else(|| KEYS.iter().find(|(k, _, _)| *k == key).expect("known key").1)
        };

        let n: u32 = number(get("n"), "n")?;
        if n < 2 {
            bail!("n must be at least 2, got {n}");
        }
        let base_mass: f64 = number(get("base_mass"), "base_mass")?;
        if !(base_mass > 0.0) {
            bail!("base_mass must be positive");
        }
        let level: u32 = number(get("quadrature.level"), "quadrature.level")?;
        let quadrature = QuadratureSettings {
            half_width: match get("quadrature.half_width") {
                "auto" => None,
                v => Some(positive(v, "quadrature.half_width")?),
            },
            base_panels: number(get("quadrature.base_panels"), "quadrature.base_panels")?,
            order: number(get("quadrature.order"), "quadrature.order")?,
            level,
        };
        if quadrature.base_panels == 0 || quadrature.order == 0 {
            bail!("quadrature panels and order must be positive");
        }
        let eta = match get("fusion.eta") {
            "calibrate" => EtaMode::Calibrate,
            "closed-form" => EtaMode::ClosedForm,
            v => bail!("fusion.eta must be calibrate or closed-form, got {v}"),
        };
        let pairs = pairs
            .into_iter()
            .map(|(label, fields)| pair_spec(label, &fields))
            .collect::<Result<Vec<_>>>()?;
        let vector = |key: &str| -> Result<Option<FockVector>> {
            match get(key) {
                "edge" => Ok(None),
                v => parse_vector(v).map(Some).with_context(|| format!("in {key}")),
            }
        };
        Ok(Self {
            n,
            base_mass,
            output_dir: PathBuf::from(get("output.dir")),
            quadrature,
            max_level: number(get("quadrature.max_level"), "quadrature.max_level")?,
            real_points: number(get("axioms.real_points"), "axioms.real_points")?,
            real_half_width: positive(get("axioms.real_half_width"), "axioms.real_half_width")?,
            strip_points: number(get("axioms.strip_points"), "axioms.strip_points")?,
            strip_half_width: positive(get("axioms.strip_half_width"), "axioms.strip_half_width")?,
            eta,
            default_pairs: boolean(get("weak.default_pairs"), "weak.default_pairs")?,
            pairs,
            bra: vector("vector.bra")?,
            ket: vector("vector.ket")?,
        })
    }

    /// Levels of the refinement study, always covering the verdict level.
    pub fn levels(&self) -> Vec<u32> {
        (0..=self.max_level.max(self.quadrature.level)).collect()
    }
}

fn number<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse().ok().with_context(|| format!("{key}: cannot parse {v:?}"))
}

fn positive(v: &str, key: &str) -> Result<f64> {
    let x: f64 = number(v, key)?;
    if !(x > 0.0) {
        bail!("{key} must be positive, got {v}");
    }
    Ok(x)
}

fn boolean(v: &str, key: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => bail!("{key} must be true or false, got {v:?}"),
    }
}

fn fields(entry: &str) -> Result<Vec<f64>> {
    entry
        .split(':')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {x:?} in {entry:?}"))
        })
        .collect()
}

fn entries(v: &str) -> impl Iterator<Item = &str> {
    v.split(';').map(str::trim).filter(|e| !e.is_empty())
}

fn species(x: f64, entry: &str) -> Result<u32> {
    if x < 0.0 || x.fract() != 0.0 {
        bail!("particle type must be a non-negative integer in {entry:?}");
    }
    Ok(x as u32)
}

/// `type:x0:x1:radius:re[:im]; …`
pub fn parse_test_function(v: &str) -> Result<TestFunction> {
    let mut f = TestFunction::zero();
    for e in entries(v) {
        let x = fields(e)?;
        if !(5..=6).contains(&x.len()) {
            bail!("test-function entry {e:?} needs type:x0:x1:radius:re[:im]");
        }
        let amp = Complex64::new(x[4], x.get(5).copied().unwrap_or(0.0));
        let bump = Bump::new([x[1], x[2]], x[3], amp).with_context(|| format!("in {e:?}"))?;
        f = f.with(species(x[0], e)?, bump);
    }
    Ok(f)
}

/// `type:re:im:width:center; …` with `0:re[:im]` for the vacuum part.
pub fn parse_vector(v: &str) -> Result<FockVector> {
    let mut out = FockVector::zero();
    for e in entries(v) {
        let x = fields(e)?;
        let s = species(*x.first().context("empty vector entry")?, e)?;
        if s == 0 {
            if !(2..=3).contains(&x.len()) {
                bail!("vacuum entry {e:?} needs 0:re[:im]");
            }
            out.vacuum += Complex64::new(x[1], x.get(2).copied().unwrap_or(0.0));
            continue;
        }
        if x.len() != 5 {
            bail!("vector entry {e:?} needs type:re:im:width:center");
        }
        if !(x[3] > 0.0) {
            bail!("Gaussian width must be positive in {e:?}");
        }
        out = out.plus(&FockVector::gaussian(s, Complex64::new(x[1], x[2]), x[3], x[4]));
    }
    Ok(out)
}

fn translation(v: Option<&String>) -> Result<[f64; 2]> {
    let Some(v) = v else { return Ok([0.0, 0.0]) };
    match fields(v)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => bail!("translation {v:?} needs x0:x1"),
    }
}

fn pair_spec(label: String, fields: &BTreeMap<String, String>) -> Result<PairSpec> {
    let f = fields.get("f").with_context(|| format!("pair.{label}.f is missing"))?;
    let g = fields.get("g").with_context(|| format!("pair.{label}.g is missing"))?;
    Ok(PairSpec {
        f: parse_test_function(f).with_context(|| format!("in pair.{label}.f"))?,
        g: parse_test_function(g).with_context(|| format!("in pair.{label}.g"))?,
        left: translation(fields.get("left")).with_context(|| format!("in pair.{label}.left"))?,
        right: translation(fields.get("right")).with_context(|| format!("in pair.{label}.right"))?,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.n, 3);
        assert_eq!(c.base_mass, 1.0);
        assert_eq!(c.quadrature, QuadratureSettings::default());
        assert_eq!(c.levels(), vec![0, 1, 2]);
        assert_eq!(c.eta, EtaMode::Calibrate);
        assert!(c.default_pairs && c.pairs.is_empty() && c.bra.is_none());
        assert_eq!(c.output_dir, PathBuf::from("znwedge-out"));
    }

    #[test]
    fn full_file() {
        let c = RunConfig::parse(
            "# comment\n n = 4 \nquadrature.level = 2 # trailing\nquadrature.half_width = 6.5\n\
             fusion.eta = closed-form\nweak.default_pairs = false\n\
             pair.a.f = 1:0:-1:0.5:1:0.5; 3:0.1:-1.2:0.4:2\npair.a.g = 3:0:1:0.5:1\npair.a.right = 0.5:0\n\
             vector.ket = 0:1; 1:0.5:0:1:0.2\n",
        )
        .unwrap();
        assert_eq!(c.n, 4);
        assert_eq!(c.quadrature.level, 2);
        assert_eq!(c.quadrature.half_width, Some(6.5));
        assert_eq!(c.eta, EtaMode::ClosedForm);
        assert!(!c.default_pairs);
        let p = &c.pairs[0];
        assert_eq!(p.label, "a");
        assert_eq!(p.f.bumps(1)[0].amplitude, Complex64::new(1.0, 0.5));
        assert_eq!(p.f.bumps(3).len(), 1);
        assert_eq!(p.right, [0.5, 0.0]);
        assert_eq!(p.left, [0.0, 0.0]);
        let ket = c.ket.unwrap();
        assert_eq!(ket.vacuum, Complex64::new(1.0, 0.0));
        assert_eq!(ket.species().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nope = 1",
            "n = 1",
            "n = three",
            "n = 3\nn = 4",
            "quadrature.order = 0",
            "base_mass = -1",
            "fusion.eta = guess",
            "weak.default_pairs = yes",
            "pair.a.f = 1:0:-1:0.5:1",
            "pair.a.h = 1",
            "pair.a/b.f = 1:0:-1:0.5:1",
            "pair.a.f = 1:0:-1:-0.5:1\npair.a.g = 2:0:1:0.5:1",
            "vector.bra = 1:1:0:-1:0",
            "just text",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text:?} accepted");
        }
    }
}
