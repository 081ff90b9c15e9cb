//! Plain `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;

use endohyp::spectral::MIN_TYPE_SAMPLES;
use endohyp::{Endomorphism, Manifold, Model, Point};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest grid the driver accepts, in cells.
const MAX_CELLS: usize = 1 << 24;

const KEYS: &[&str] = &[
    "model",
    "k",
    "amplitude",
    "kappa",
    "matrix",
    "c_re",
    "c_im",
    "grid",
    "depth",
    "eps",
    "seed",
    "samples_per_cell",
    "bloat",
    "type_samples",
    "n_test",
    "fattening",
    "pairs",
    "horizon",
    "max_period",
    "point",
    "iterations",
    "tree_depth",
    "burn_in",
    "budget",
    "basins",
];

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Origin::Line(n) => write!(f, "config error at line {n}, key `{}`: {}", self.key, self.message),
            Origin::Flag => write!(f, "config error in --{}: {}", self.key.replace('_', "-"), self.message),
            Origin::Missing => write!(f, "config error, key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw settings with the line each one came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (Origin, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError {
                    origin: Origin::Line(n),
                    key: body.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim().to_string();
            let err = |message: String| ConfigError {
                origin: Origin::Line(n),
                key: key.clone(),
                message,
            };
            if !KEYS.contains(&key.as_str()) {
                return Err(err("unknown key".into()));
            }
            if let Some((Origin::Line(prev), _)) = entries.get(&key) {
                return Err(err(format!("already set at line {prev}")));
            }
            entries.insert(key.clone(), (Origin::Line(n), value.trim().to_string()));
        }
        Ok(RawConfig { entries })
    }

    /// Set a value from a command-line flag, replacing any config value.
    pub fn set_flag(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), (Origin::Flag, value));
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.entries.get(key).map_or(Origin::Missing, |e| e.0.clone()),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, ConfigError> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| self.error(key, format!("cannot parse `{v}`"))),
            None => default.ok_or_else(|| self.error(key, "missing required key")),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split([',', ' '])
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.error(key, format!("cannot parse `{s}` as a number")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub model: Model,
    pub grid: usize,
    pub depth: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
    pub samples_per_cell: usize,
    pub bloat: f64,
    pub type_samples: usize,
    pub n_test: usize,
    pub fattening: usize,
    pub pairs: usize,
    pub horizon: usize,
    pub max_period: usize,
    pub point: Option<Point>,
    pub iterations: usize,
    pub tree_depth: usize,
    pub burn_in: usize,
    pub budget: usize,
    pub basins: bool,
}

fn positive(raw: &RawConfig, key: &str, v: usize, max: usize) -> Result<usize, ConfigError> {
    if v == 0 || v > max {
        return Err(raw.error(key, format!("must lie in 1..={max}, got {v}")));
    }
    Ok(v)
}

fn model(raw: &RawConfig) -> Result<Model, ConfigError> {
    let name: String = raw.get("model", None)?;
    let model = match name.as_str() {
        "circle_mul" => Model::CircleMul { k: raw.get("k", None)? },
        "torus_linear" => {
            let text = raw.raw("matrix").ok_or_else(|| raw.error("matrix", "missing required key"))?;
            let matrix = text
                .split(';')
                .map(|row| {
                    row.split_whitespace()
                        .map(|s| s.parse::<i64>().map_err(|_| raw.error("matrix", format!("cannot parse `{s}`"))))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Model::TorusLinear { matrix }
        }
        "quadratic" => Model::Quadratic {
            c: Complex64::new(raw.get("c_re", Some(0.0))?, raw.get("c_im", Some(0.0))?),
        },
        "product" => Model::Product {
            k: raw.get("k", Some(2))?,
            amplitude: raw.get("amplitude", Some(0.1))?,
        },
        "forced_circle" => Model::ForcedCircle {
            k: raw.get("k", Some(2))?,
            amplitude: raw.get("amplitude", Some(0.1))?,
            kappa: raw.get("kappa", Some(0.02))?,
        },
        other => return Err(raw.error("model", format!("unknown model `{other}`"))),
    };
    Endomorphism::new(model.clone()).map_err(|e| raw.error("model", e.to_string()))?;
    Ok(model)
}

fn point(raw: &RawConfig, m: Manifold) -> Result<Option<Point>, ConfigError> {
    if raw.raw("point").is_some_and(|v| v.trim() == "inf") {
        return match m {
            Manifold::Sphere => Ok(Some(Point::infinity())),
            _ => Err(raw.error("point", "`inf` is only a point of the sphere")),
        };
    }
    let Some(v) = raw.floats("point")? else {
        return Ok(None);
    };
    let p = match m {
        Manifold::Sphere if v.len() == 2 => Point::finite(Complex64::new(v[0], v[1])),
        Manifold::Sphere => return Err(raw.error("point", "expected `re im` or `inf`")),
        _ => Point::on_torus(&v).map_err(|e| raw.error("point", e.to_string()))?,
    };
    if p.dim() != m.dim() {
        return Err(raw.error("point", format!("expected {} coordinates", m.dim())));
    }
    Ok(Some(p))
}

impl RunConfig {
    /// Validate every setting against the preconditions of the operations it feeds.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let model = model(raw)?;
        let manifold = Endomorphism::new(model.clone()).expect("validated above").manifold();
        let grid = positive(raw, "grid", raw.get("grid", Some(128))?, 1 << 16)?;
        let cells = match manifold {
            Manifold::Sphere => grid.checked_mul(grid).and_then(|g| g.checked_mul(2)),
            m => grid.checked_pow(m.dim() as u32),
        };
        if grid < 2 || cells.is_none_or(|c| c > MAX_CELLS) {
            return Err(raw.error("grid", format!("grid {grid} gives too few or too many cells")));
        }
        let eps = raw.floats("eps")?.unwrap_or_else(|| endohyp::spectral::DEFAULT_EPS_LIST.to_vec());
        if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
            return Err(raw.error("eps", "need a nonempty list of values in (0, 0.5]"));
        }
        let bloat: f64 = raw.get("bloat", Some(endohyp::spectral::DEFAULT_BLOAT))?;
        if !(bloat.is_finite() && bloat >= 0.0) {
            return Err(raw.error("bloat", "must be finite and nonnegative"));
        }
        let samples_per_cell: usize = raw.get("samples_per_cell", Some(endohyp::spectral::DEFAULT_SAMPLES_PER_CELL))?;
        if !(4..=1024).contains(&samples_per_cell) {
            return Err(raw.error("samples_per_cell", "must lie in 4..=1024"));
        }
        let type_samples: usize = raw.get("type_samples", Some(24))?;
        if !(MIN_TYPE_SAMPLES..=4096).contains(&type_samples) {
            return Err(raw.error(
                "type_samples",
                format!("must lie in {MIN_TYPE_SAMPLES}..=4096 for a supermajority verdict"),
            ));
        }
        Ok(RunConfig {
            grid,
            depth: positive(raw, "depth", raw.get("depth", Some(endohyp::hyperbolic::DEFAULT_DEPTH))?, 256)?,
            eps,
            seed: raw.get("seed", Some(0))?,
            samples_per_cell,
            bloat,
            type_samples,
            n_test: positive(raw, "n_test", raw.get("n_test", Some(endohyp::spectral::DEFAULT_N_TEST))?, 10_000)?,
            fattening: positive(raw, "fattening", raw.get("fattening", Some(3))?, 64)?,
            pairs: positive(raw, "pairs", raw.get("pairs", Some(2000))?, 1_000_000)?,
            horizon: positive(raw, "horizon", raw.get("horizon", Some(endohyp::hyperbolic::DEFAULT_HORIZON))?, 256)?,
            max_period: positive(raw, "max_period", raw.get("max_period", Some(8))?, 12)?,
            point: point(raw, manifold)?,
            iterations: raw.get("iterations", Some(10))?,
            tree_depth: raw.get("tree_depth", Some(3))?,
            burn_in: raw.get("burn_in", Some(100))?,
            budget: positive(raw, "budget", raw.get("budget", Some(1000))?, 1_000_000)?,
            basins: raw.get("basins", Some(false))?,
            model,
        })
    }

    pub fn endomorphism(&self) -> Endomorphism {
        Endomorphism::new(self.model.clone()).expect("model validated when the config was built")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_raw(&RawConfig::parse(text)?)
    }

    #[test]
    fn product_defaults() {
        let c = parse("model = product # comment\n\n# whole line\ngrid = 64\n").unwrap();
        assert_eq!(c.model, Model::Product { k: 2, amplitude: 0.1 });
        assert_eq!(c.grid, 64);
        assert_eq!(c.eps, vec![0.2, 0.1, 0.05, 0.025]);
    }

    #[test]
    fn matrix_and_complex() {
        let c = parse("model = torus_linear\nmatrix = 3 1; 1 1\n").unwrap();
        assert_eq!(c.model, Model::TorusLinear { matrix: vec![vec![3, 1], vec![1, 1]] });
        let c = parse("model = quadratic\nc_re = 0.2\nc_im = 0.2\npoint = inf\n").unwrap();
        assert_eq!(c.model, Model::Quadratic { c: Complex64::new(0.2, 0.2) });
        assert!(c.point.unwrap().is_infinite());
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = parse("model = product\n\ngrdi = 3\n").unwrap_err();
        assert_eq!((e.origin, e.key.as_str()), (Origin::Line(3), "grdi"));
        let e = parse("model = product\ngrid = -4\n").unwrap_err();
        assert_eq!((e.origin, e.key.as_str()), (Origin::Line(2), "grid"));
        let e = parse("model = circle_mul\nk = 1\n").unwrap_err();
        assert_eq!((e.origin, e.key.as_str()), (Origin::Line(1), "model"));
        let e = parse("model = product\neps = 0.1, 0\n").unwrap_err();
        assert_eq!(e.key, "eps");
        let e = parse("grid = 8\n").unwrap_err();
        assert_eq!((e.origin, e.key.as_str()), (Origin::Missing, "model"));
        let e = parse("model = product\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 3") && e.message.contains("line 2"));
    }

    #[test]
    fn flags_override_lines() {
        let mut raw = RawConfig::parse("model = product\ngrid = 64\n").unwrap();
        raw.set_flag("grid", "1".into());
        let e = RunConfig::from_raw(&raw).unwrap_err();
        assert_eq!(e.origin, Origin::Flag);
        assert_eq!(e.to_string(), "config error in --grid: grid 1 gives too few or too many cells");
    }

    #[test]
    fn echo_round_trips() {
        let c = parse("model = forced_circle\npoint = 0.1 0.2\neps = 0.1 0.05\n").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }

    proptest::proptest! {
        #[test]
        fn any_valid_config_round_trips(
            amplitude in 0.01f64..0.1,
            t in -0.99f64..0.99,
            eps in proptest::collection::vec(1e-6f64..0.5, 1..6),
            seed in proptest::num::u64::ANY,
            x in 0.0f64..1.0,
        ) {
            let kappa = 0.5 * amplitude * t;
            let eps: Vec<String> = eps.iter().map(|e| e.to_string()).collect();
            let text = format!(
                "model = forced_circle\namplitude = {amplitude}\nkappa = {kappa}\neps = {}\nseed = {seed}\npoint = {x} 0.5\n",
                eps.join(", ")
            );
            let c = parse(&text).unwrap();
            let json = serde_json::to_string(&c).unwrap();
            proptest::prop_assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
        }
    }
}
