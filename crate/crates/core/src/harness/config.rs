use std::path::PathBuf;

use serde_json::{json, Map, Value};

use crate::estimators::EstimatorKind;
use crate::models::{FamilySpec, ModelFamily, SigmaSpec};
use crate::numerics::{BoxBounds, Vector};
use crate::preferences::Channel;

use super::HarnessError;

const KNOWN_KEYS: [&str; 13] = [
    "family",
    "d",
    "sigma",
    "b",
    "theta_star",
    "n_max",
    "checkpoints",
    "runs",
    "base_seed",
    "estimators",
    "channels",
    "box",
    "output",
];

/// Smallest allowed `n_max` and first point of the geometric grid.
pub const MIN_N: usize = 10;
pub const DEFAULT_CHECKPOINTS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaStarSpec {
    /// Each coordinate drawn independently from U[lo, hi] per run.
    Uniform { lo: f64, hi: f64 },
    Fixed(Vector),
}

impl ThetaStarSpec {
    fn to_json(&self) -> Value {
        match self {
            ThetaStarSpec::Uniform { lo, hi } => Value::String(format!("uniform:[{lo},{hi}]")),
            ThetaStarSpec::Fixed(v) => json!(v.iter().collect::<Vec<_>>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub channel: Channel,
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family_spec: FamilySpec,
    pub family: ModelFamily,
    pub theta_star: ThetaStarSpec,
    pub n_max: usize,
    /// Strictly increasing, ending at `n_max`.
    pub checkpoints: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorSpec>,
    pub bounds: BoxBounds,
    pub output: Option<PathBuf>,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

fn as_usize(v: &Value, key: &str) -> Result<usize, HarnessError> {
    match v.as_u64() {
        Some(x) => Ok(x as usize),
        None => cfg_err(format!("{key} must be a non-negative integer, got {v}")),
    }
}

fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>, HarnessError> {
    let arr = v
        .as_array()
        .ok_or_else(|| HarnessError::Config(format!("{key} must be an array of numbers")))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| HarnessError::Config(format!("{key}: {x} is not a number")))
        })
        .collect()
}

/// `K` log-spaced integers from [`MIN_N`] to `n_max`, duplicates removed.
pub fn geometric_checkpoints(n_max: usize, count: usize) -> Vec<usize> {
    if count <= 1 || n_max <= MIN_N {
        return vec![n_max];
    }
    let ratio = (n_max as f64 / MIN_N as f64).ln();
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            ((MIN_N as f64) * (ratio * t).exp()).round() as usize
        })
        .collect();
    *out.last_mut().expect("count >= 2") = n_max;
    out.dedup();
    out
}

fn parse_uniform(s: &str) -> Option<(f64, f64)> {
    let body = s.trim().strip_prefix("uniform:")?.trim();
    let body = body.strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = body.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_family(obj: &Map<String, Value>) -> Result<FamilySpec, HarnessError> {
    let name = obj
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| HarnessError::Config("missing string key \"family\"".into()))?;
    let d = obj.get("d").map(|v| as_usize(v, "d")).transpose()?;
    let reject = |key: &str| -> Result<(), HarnessError> {
        if obj.contains_key(key) {
            cfg_err(format!("key {key:?} does not apply to family {name:?}"))
        } else {
            Ok(())
        }
    };
    match name {
        "gaussian" => {
            reject("b")?;
            let sigma = match obj.get("sigma") {
                None => SigmaSpec::default(),
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|e| HarnessError::Config(format!("bad sigma: {e}")))?,
            };
            Ok(FamilySpec::Gaussian {
                d: d.unwrap_or(1),
                sigma,
            })
        }
        "laplace" | "rayleigh" => {
            reject("sigma")?;
            if d.is_some_and(|d| d != 1) {
                return cfg_err(format!("family {name:?} is one-dimensional"));
            }
            if name == "rayleigh" {
                reject("b")?;
                return Ok(FamilySpec::Rayleigh);
            }
            let b = match obj.get("b") {
                None => 1.0,
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| HarnessError::Config("b must be a number".into()))?,
            };
            Ok(FamilySpec::Laplace { b })
        }
        other => cfg_err(format!(
            "unknown family {other:?} (expected gaussian, laplace or rayleigh)"
        )),
    }
}

fn parse_estimators(
    obj: &Map<String, Value>,
    family: &ModelFamily,
) -> Result<Vec<EstimatorSpec>, HarnessError> {
    let list = obj
        .get("estimators")
        .ok_or_else(|| HarnessError::Config("missing key \"estimators\"".into()))?
        .as_array()
        .ok_or_else(|| HarnessError::Config("estimators must be an array of names".into()))?;
    if list.is_empty() {
        return cfg_err("estimators must not be empty");
    }
    let mut out: Vec<EstimatorSpec> = Vec::new();
    for v in list {
        let name = v
            .as_str()
            .ok_or_else(|| HarnessError::Config(format!("estimator {v} is not a string")))?;
        let kind: EstimatorKind = name.parse().map_err(HarnessError::Config)?;
        if out.iter().any(|e| e.kind.to_string() == kind.to_string()) {
            return cfg_err(format!("estimator {kind} listed twice"));
        }
        if kind.requires_scalar() && family.dim() != 1 {
            return cfg_err(format!("estimator {kind} needs a one-dimensional family"));
        }
        if kind == EstimatorKind::TrMle && matches!(family, ModelFamily::Rayleigh) {
            return cfg_err("estimator trmle is not available for rayleigh");
        }
        out.push(EstimatorSpec {
            kind,
            channel: kind.channel(),
        });
    }
    if let Some(ch) = obj.get("channels") {
        let map = ch
            .as_object()
            .ok_or_else(|| HarnessError::Config("channels must map estimator names to channels".into()))?;
        for (name, v) in map {
            let kind: EstimatorKind = name.parse().map_err(HarnessError::Config)?;
            let channel: Channel = v
                .as_str()
                .ok_or_else(|| HarnessError::Config(format!("channel for {name} must be a string")))?
                .parse()
                .map_err(HarnessError::Config)?;
            let spec = out
                .iter_mut()
                .find(|e| e.kind.to_string() == kind.to_string())
                .ok_or_else(|| HarnessError::Config(format!("channel given for unlisted estimator {name}")))?;
            if kind != EstimatorKind::So && channel != kind.channel() {
                return cfg_err(format!("estimator {kind} only runs on the {} channel", kind.channel()));
            }
            spec.channel = channel;
        }
    }
    Ok(out)
}

fn parse_box(v: Option<&Value>, family: &ModelFamily) -> Result<BoxBounds, HarnessError> {
    let d = family.dim();
    let bounds = match v {
        None => return Ok(family.default_bounds()),
        Some(Value::Array(_)) => {
            let lh = as_f64_list(v.expect("some"), "box")?;
            if lh.len() != 2 {
                return cfg_err("box as an array must be [lo, hi]");
            }
            BoxBounds::uniform(d, lh[0], lh[1])
        }
        Some(Value::Object(m)) => {
            if m.keys().any(|k| k != "lower" && k != "upper") || m.len() != 2 {
                return cfg_err("box object needs exactly the keys lower and upper");
            }
            let lo = as_f64_list(&m["lower"], "box.lower")?;
            let hi = as_f64_list(&m["upper"], "box.upper")?;
            if lo.len() != d || hi.len() != d {
                return cfg_err(format!("box bounds must have {d} entries"));
            }
            BoxBounds::new(Vector::from_vec(lo), Vector::from_vec(hi))
        }
        Some(other) => return cfg_err(format!("box must be [lo, hi] or {{lower, upper}}, got {other}")),
    };
    let bounds = bounds.map_err(|e| HarnessError::Config(format!("bad box: {e}")))?;
    let defaults = family.default_bounds();
    if let ModelFamily::Rayleigh = family {
        if bounds.upper[0] > defaults.upper[0] {
            return cfg_err(format!("rayleigh box must stay below {}", defaults.upper[0]));
        }
    }
    Ok(bounds)
}

fn parse_theta_star(
    v: Option<&Value>,
    family: &ModelFamily,
    bounds: &BoxBounds,
) -> Result<ThetaStarSpec, HarnessError> {
    let spec = match v {
        None => match family {
            ModelFamily::Rayleigh => ThetaStarSpec::Uniform { lo: -2.0, hi: -1.0 },
            _ => ThetaStarSpec::Uniform { lo: 1.0, hi: 2.0 },
        },
        Some(Value::String(s)) => {
            let (lo, hi) = parse_uniform(s).ok_or_else(|| {
                HarnessError::Config(format!("theta_star {s:?} is not of the form uniform:[a,b]"))
            })?;
            if !(lo <= hi) {
                return cfg_err("theta_star range must have a <= b");
            }
            ThetaStarSpec::Uniform { lo, hi }
        }
        Some(v @ Value::Array(_)) => ThetaStarSpec::Fixed(Vector::from_vec(as_f64_list(v, "theta_star")?)),
        Some(other) => return cfg_err(format!("theta_star must be a string or an array, got {other}")),
    };
    let d = family.dim();
    let corners: Vec<Vector> = match &spec {
        ThetaStarSpec::Uniform { lo, hi } => vec![Vector::from_element(d, *lo), Vector::from_element(d, *hi)],
        ThetaStarSpec::Fixed(t) => {
            if t.len() != d {
                return cfg_err(format!("theta_star has {} entries, family dimension is {d}", t.len()));
            }
            vec![t.clone()]
        }
    };
    for c in &corners {
        family
            .check_param(c)
            .map_err(|e| HarnessError::Config(format!("theta_star: {e}")))?;
        if !bounds.contains(c, 0.0) {
            return cfg_err("theta_star range must lie inside the box");
        }
    }
    Ok(spec)
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self, HarnessError> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| HarnessError::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, HarnessError> {
        let obj = v
            .as_object()
            .ok_or_else(|| HarnessError::Config("config must be a JSON object".into()))?;
        if let Some(k) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return cfg_err(format!("unknown key {k:?}"));
        }
        let family_spec = parse_family(obj)?;
        let family = family_spec
            .build()
            .map_err(|e| HarnessError::Config(format!("family: {e}")))?;

        let n_max = as_usize(
            obj.get("n_max")
                .ok_or_else(|| HarnessError::Config("missing key \"n_max\"".into()))?,
            "n_max",
        )?;
        if n_max < MIN_N {
            return cfg_err(format!("n_max must be at least {MIN_N}"));
        }
        let checkpoints = match obj.get("checkpoints") {
            None => geometric_checkpoints(n_max, DEFAULT_CHECKPOINTS),
            Some(Value::String(s)) => {
                let k = s
                    .strip_prefix("geometric:")
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| HarnessError::Config(format!("checkpoints {s:?} is not geometric:<count>")))?;
                geometric_checkpoints(n_max, k)
            }
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| as_usize(x, "checkpoints"))
                .collect::<Result<Vec<_>, _>>()?,
            Some(other) => return cfg_err(format!("checkpoints must be geometric:<count> or a list, got {other}")),
        };
        if checkpoints.first().is_none_or(|&c| c == 0)
            || checkpoints.windows(2).any(|w| w[0] >= w[1])
            || checkpoints.last() != Some(&n_max)
        {
            return cfg_err("checkpoints must be positive, strictly increasing and end at n_max");
        }

        let runs = as_usize(
            obj.get("runs")
                .ok_or_else(|| HarnessError::Config("missing key \"runs\"".into()))?,
            "runs",
        )?;
        if runs == 0 {
            return cfg_err("runs must be at least 1");
        }
        let base_seed = match obj.get("base_seed") {
            None => 0,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| HarnessError::Config("base_seed must be a 64-bit unsigned integer".into()))?,
        };
        let estimators = parse_estimators(obj, &family)?;
        let bounds = parse_box(obj.get("box"), &family)?;
        let theta_star = parse_theta_star(obj.get("theta_star"), &family, &bounds)?;
        let output = match obj.get("output") {
            None => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return cfg_err(format!("output must be a path string, got {other}")),
        };
        Ok(Self {
            family_spec,
            family,
            theta_star,
            n_max,
            checkpoints,
            runs,
            base_seed,
            estimators,
            bounds,
            output,
        })
    }

    /// Canonical JSON of the resolved configuration (output path omitted).
    pub fn to_json(&self) -> Value {
        let mut obj = match serde_json::to_value(&self.family_spec) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        obj.insert("theta_star".into(), self.theta_star.to_json());
        obj.insert("n_max".into(), json!(self.n_max));
        obj.insert("checkpoints".into(), json!(self.checkpoints));
        obj.insert("runs".into(), json!(self.runs));
        obj.insert("base_seed".into(), json!(self.base_seed));
        obj.insert(
            "estimators".into(),
            json!(self.estimators.iter().map(|e| e.kind.to_string()).collect::<Vec<_>>()),
        );
        let channels: Map<String, Value> = self
            .estimators
            .iter()
            .map(|e| (e.kind.to_string(), json!(e.channel.to_string())))
            .collect();
        obj.insert("channels".into(), Value::Object(channels));
        obj.insert(
            "box".into(),
            json!({
                "lower": self.bounds.lower.iter().collect::<Vec<_>>(),
                "upper": self.bounds.upper.iter().collect::<Vec<_>>(),
            }),
        );
        Value::Object(obj)
    }

    /// Whether ℓ₂ errors differ from family-norm errors and get their own output.
    pub fn reports_l2(&self) -> bool {
        match &self.family {
            ModelFamily::Gaussian(g) => {
                let d = g.dim();
                g.sigma() != &crate::numerics::Matrix::identity(d, d)
            }
            _ => false,
        }
    }
}
