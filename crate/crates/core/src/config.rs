//! TOML configuration files. Rational entries are strings such as `"3/5"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{parse_rational, Rational};
use crate::fractal_measures::region::RealQuadric;
use crate::fractal_measures::{Chart, SelfSimilarMeasure, Similarity};
use crate::neighborhood_decay::{GraphPatch, Obstacle, QuadraticMap};
use crate::rational_geometry::{QuadraticHypersurface, RationalBox, RationalPoint};

fn rationals(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse_rational(s)).collect()
}

fn matrix(m: &[Vec<String>]) -> Result<Vec<Vec<Rational>>> {
    m.iter().map(|r| rationals(r)).collect()
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<String>,
    pub upper: Vec<String>,
}

impl BoxConfig {
    pub fn build(&self) -> Result<RationalBox> {
        RationalBox::new(rationals(&self.lower)?, rationals(&self.upper)?)
    }
}

/// Integral quadric; `quadratic` is the symmetric matrix in row-major order.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadricConfig {
    pub dimension: usize,
    pub quadratic: Vec<i64>,
    pub linear: Vec<i64>,
    pub constant: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<String>>,
}

impl QuadricConfig {
    pub fn build(&self) -> Result<QuadraticHypersurface> {
        let d = self.dimension;
        if self.quadratic.len() != d * d {
            return Err(Error::Config(format!("quadratic needs {} entries, found {}", d * d, self.quadratic.len())));
        }
        let a = self.quadratic.chunks(d).map(<[i64]>::to_vec).collect();
        let z = QuadraticHypersurface::new(a, self.linear.clone(), self.constant)?;
        match &self.base_point {
            Some(p) => z.with_base_point(RationalPoint::from_rationals(&rationals(p)?)?),
            None => Ok(z),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub ratio: String,
    /// Identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<String>>>,
    pub translation: Vec<String>,
}

/// An IFS given either by a preset name or by its maps, weights and open set.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapConfig>,
    /// Uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_set: Option<BoxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
}

pub const MEASURE_PRESETS: [&str; 5] = ["middle_thirds", "centered_cantor", "four_corner", "square_tiling", "cantor_square"];

impl MeasureConfig {
    pub fn preset(name: &str) -> Self {
        MeasureConfig { preset: Some(name.into()), maps: Vec::new(), weights: None, open_set: None, rho0: None }
    }

    pub fn build(&self) -> Result<SelfSimilarMeasure> {
        let mu = match self.preset.as_deref() {
            Some(name) => {
                if !self.maps.is_empty() || self.open_set.is_some() || self.weights.is_some() {
                    return Err(Error::Config("a preset takes no maps, weights or open set".into()));
                }
                match name {
                    "middle_thirds" => SelfSimilarMeasure::middle_thirds(),
                    "centered_cantor" => SelfSimilarMeasure::centered_cantor(),
                    "four_corner" => SelfSimilarMeasure::four_corner(),
                    "square_tiling" => SelfSimilarMeasure::square_tiling(),
                    "cantor_square" => SelfSimilarMeasure::cantor_square(),
                    other => return Err(Error::Config(format!("unknown measure preset {other:?}; known: {MEASURE_PRESETS:?}"))),
                }
            }
            None => {
                let maps = self
                    .maps
                    .iter()
                    .map(|m| {
                        let ratio = parse_rational(&m.ratio)?;
                        let t = rationals(&m.translation)?;
                        match &m.rotation {
                            Some(o) => Similarity::new(ratio, matrix(o)?, t),
                            None => Similarity::scaling(ratio, t),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let open = self.open_set.as_ref().ok_or_else(|| Error::Config("open_set is required".into()))?.build()?;
                let weights = match &self.weights {
                    Some(w) => rationals(w)?,
                    None => {
                        let n = maps.len().max(1) as i64;
                        vec![Rational::new(1.into(), n.into()); maps.len()]
                    }
                };
                SelfSimilarMeasure::new(maps, weights, open, None)?
            }
        };
        Ok(match self.rho0 {
            Some(r) => mu.with_rho0(r),
            None => mu,
        })
    }
}

/// A graph chart of a real quadric, by preset or by coefficients.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    /// `upper_circle` or `upper_hemisphere`, with `limit` bounding the chart coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eliminated: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxConfig>,
}

impl ChartConfig {
    pub fn build(&self) -> Result<Chart> {
        if let Some(name) = &self.preset {
            let lim = parse_rational(self.limit.as_deref().ok_or_else(|| Error::Config("preset chart needs limit".into()))?)?;
            return match name.as_str() {
                "upper_circle" => Chart::upper_circle(lim),
                "upper_hemisphere" => Chart::upper_hemisphere(lim),
                other => Err(Error::Config(format!("unknown chart preset {other:?}"))),
            };
        }
        let missing = |k: &str| Error::Config(format!("chart field {k} is required"));
        let q = RealQuadric::new(
            matrix(self.quadratic.as_ref().ok_or_else(|| missing("quadratic"))?)?,
            rationals(self.linear.as_ref().ok_or_else(|| missing("linear"))?)?,
            parse_rational(self.constant.as_deref().ok_or_else(|| missing("constant"))?)?,
        )?;
        Chart::new(
            q,
            self.eliminated.ok_or_else(|| missing("eliminated"))?,
            self.sign.ok_or_else(|| missing("sign"))?,
            self.domain.as_ref().ok_or_else(|| missing("domain"))?.build()?,
        )
    }
}

/// Real quadric `xᵀAx + bᵀx + c` with rational entries.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RealQuadricConfig {
    pub quadratic: Vec<Vec<String>>,
    pub linear: Vec<String>,
    pub constant: String,
}

impl RealQuadricConfig {
    pub fn build(&self) -> Result<RealQuadric> {
        RealQuadric::new(matrix(&self.quadratic)?, rationals(&self.linear)?, parse_rational(&self.constant)?)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Hyperplane { label: String, normal: Vec<String>, offset: String },
    Quadric { label: String, quadratic: Vec<Vec<String>>, linear: Vec<String>, constant: String },
    /// Graph of the constant `value` over `[lo, hi]`.
    Constant { label: String, value: String, lo: f64, hi: f64 },
    /// Graph of `u²` over `[lo, hi]`.
    Parabola { label: String, lo: f64, hi: f64, k2: f64 },
}

impl ObstacleConfig {
    pub fn label(&self) -> &str {
        match self {
            ObstacleConfig::Hyperplane { label, .. }
            | ObstacleConfig::Quadric { label, .. }
            | ObstacleConfig::Constant { label, .. }
            | ObstacleConfig::Parabola { label, .. } => label,
        }
    }

    pub fn build(&self) -> Result<Obstacle> {
        Ok(match self {
            ObstacleConfig::Hyperplane { normal, offset, .. } => {
                let n = rationals(normal)?;
                let t = parse_rational(offset)?;
                let f: Vec<f64> = n.iter().map(crate::exact::to_f64).collect();
                let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::Config("hyperplane normal vanishes".into()));
                }
                Obstacle::Hyperplane { normal: f.iter().map(|v| v / norm).collect(), offset: crate::exact::to_f64(&t) / norm }
            }
            ObstacleConfig::Quadric { quadratic, linear, constant, .. } => {
                Obstacle::Quadric(RealQuadric::new(matrix(quadratic)?, rationals(linear)?, parse_rational(constant)?)?)
            }
            ObstacleConfig::Constant { value, lo, hi, .. } => Obstacle::Graph(GraphPatch::constant(parse_rational(value)?, *lo, *hi)?),
            ObstacleConfig::Parabola { lo, hi, k2, .. } => Obstacle::Graph(GraphPatch::parabola(*lo, *hi, *k2)?),
        })
    }
}

/// Either an explicit list or `base·ratio^j`, `j < count`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ScaleGrid {
    List(Vec<f64>),
    Geometric { base: f64, ratio: f64, count: usize },
}

impl ScaleGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ScaleGrid::List(v) => v.clone(),
            ScaleGrid::Geometric { base, ratio, count } => crate::fractal_measures::commensurate_scales(*base, *ratio, *count),
        }
    }
}

/// A measure file path (relative to the referring file) or an inline table.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MeasureRef {
    Path(PathBuf),
    Inline(MeasureConfig),
}

impl MeasureRef {
    pub fn resolve(&self, base: &Path) -> Result<(MeasureConfig, Option<PathBuf>)> {
        match self {
            MeasureRef::Path(p) => {
                let full = base.join(p);
                Ok((read_toml(&full)?, Some(full)))
            }
            MeasureRef::Inline(m) => Ok((m.clone(), None)),
        }
    }
}

/// Nonsingular map applied to the measure before measuring decay.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    ShearParabola { domain: BoxConfig },
    Affine { matrix: Vec<Vec<String>>, shift: Vec<String>, domain: BoxConfig },
}

impl MapSpec {
    pub fn build(&self) -> Result<QuadraticMap> {
        match self {
            MapSpec::ShearParabola { domain } => QuadraticMap::shear_parabola(domain.build()?),
            MapSpec::Affine { matrix: m, shift, domain } => QuadraticMap::affine(matrix(m)?, rationals(shift)?, domain.build()?),
        }
    }
}

/// Decay experiment: obstacles are measured on shared balls; with `pushforward`, hyperplanes
/// sampled through support points of `Φ[μ]` are used instead.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub measure: MeasureRef,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
    pub eps: ScaleGrid,
    pub radii: Vec<f64>,
    pub samples: usize,
    #[serde(default = "default_tries")]
    pub tries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Required with obstacles; under a map it defaults to `0.9·α̂` of the source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Explicit ball centers; sampled near each obstacle when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pushforward: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniformity_factor: Option<f64>,
}

fn default_tries() -> usize {
    400
}

/// Parses `"2,1,1/2"` into rationals.
pub fn rational_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(|t| parse_rational(t.trim())).collect()
}

/// Parses `"0.5,1,1.5"` or `"lo:step:hi"` into floats.
pub fn float_list(s: &str) -> Result<Vec<f64>> {
    let bad = |t: &str| Error::InvalidInput(format!("not a number: {t:?}"));
    let parse = |t: &str| -> Result<f64> {
        let t = t.trim();
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => parse_rational(t).map(|r| crate::exact::to_f64(&r)).map_err(|_| bad(t)),
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (lo, step, hi) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0 && hi >= lo) {
            return Err(Error::InvalidInput(format!("bad range {s:?}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        // rounded to 12 digits so the grid prints cleanly
        return Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    s.split(',').map(parse).collect()
}

/// Parses `"l1,l2:u1,u2"` into a box.
pub fn box_spec(s: &str) -> Result<RationalBox> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| Error::InvalidInput(format!("box must be lower:upper, got {s:?}")))?;
    RationalBox::new(rational_list(lo)?, rational_list(hi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    #[test]
    fn circle_quadric_file() {
        let c: QuadricConfig =
            toml::from_str("dimension = 2\nquadratic = [1, 0, 0, 1]\nlinear = [0, 0]\nconstant = -1\nbase_point = [\"3/5\", \"4/5\"]")
                .unwrap();
        let z = c.build().unwrap();
        assert_eq!(z.base_point().unwrap(), &RationalPoint::from_i64(&[3, 4], 5).unwrap());
        let bad: QuadricConfig = toml::from_str("dimension = 2\nquadratic = [1, 0, 1]\nlinear = [0, 0]\nconstant = -1").unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn inline_ifs_matches_preset() {
        let text = r#"
            weights = ["1/2", "1/2"]
            [[maps]]
            ratio = "1/3"
            translation = ["0"]
            [[maps]]
            ratio = "1/3"
            translation = ["2/3"]
            [open_set]
            lower = ["0"]
            upper = ["1"]
        "#;
        let m: MeasureConfig = toml::from_str(text).unwrap();
        let mu = m.build().unwrap();
        let preset = MeasureConfig::preset("middle_thirds").build().unwrap();
        assert_eq!(mu.maps(), preset.maps());
        assert_eq!(mu.cylinder_measure(&[0, 1]).unwrap(), rat(1, 4));
        assert!(MeasureConfig::preset("nope").build().is_err());
    }

    #[test]
    fn lists_and_boxes() {
        assert_eq!(rational_list("2, 1,1/2").unwrap(), vec![int(2), int(1), rat(1, 2)]);
        assert_eq!(float_list("0.5:0.25:1").unwrap(), vec![0.5, 0.75, 1.0]);
        assert_eq!(float_list("1,3/2").unwrap(), vec![1.0, 1.5]);
        assert!(float_list("x").is_err());
        let b = box_spec("-2,-2:2,2").unwrap();
        assert_eq!(b.lower(), &[int(-2), int(-2)]);
        assert!(box_spec("1,2").is_err());
    }

    #[test]
    fn obstacle_tags() {
        let spec: DecaySpec = toml::from_str(
            r#"
            measure = { preset = "cantor_square" }
            eps = { base = 1.0, ratio = 0.5, count = 4 }
            radii = [0.25]
            samples = 2
            beta = 0.5
            [[obstacles]]
            kind = "hyperplane"
            label = "y=2/9"
            normal = ["0", "2"]
            offset = "4/9"
            "#,
        )
        .unwrap();
        let Obstacle::Hyperplane { normal, offset } = spec.obstacles[0].build().unwrap() else { panic!() };
        assert_eq!(normal, vec![0.0, 1.0]);
        assert!((offset - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(spec.eps.values().len(), 4);
    }
}
