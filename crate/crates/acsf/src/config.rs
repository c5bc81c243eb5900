//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "preset": "fig9_hyperbolic",
//!   "scheme": "fdriem",
//!   "model": {"variant": "kfold", "params": {"k": 3, "delta": 0.124}},
//!   "metric": {"variant": "cone", "params": {"slope": 1.7320508}},
//!   "J": 128, "dt": 1e-4, "T": 0.5,
//!   "forcing": {"delta": 0.5},
//!   "initial": {"shape": "circle", "center": [0, 0], "radius": 1},
//!   "splitting": {"shifted": {"c": 0}},
//!   "observers": {"stride": 100, "kinds": ["series", "snapshot"]}
//! }
//! ```
//!
//! Every field is optional when `preset` is given; the remaining fields then
//! override the preset. Without a preset `scheme`, one of `model`/`metric`,
//! `dt` and `T` are required.

use std::f64::consts::TAU;
use std::path::Path;

use acsf_core::harness::{equidistribute, Preset, PresetCheck};
use acsf_core::metric::{ConformalFactor, HeightField};
use acsf_core::schemes::ManufacturedForcing;
use acsf_core::{
    AnisotropyModel, BgnAnisotropy, DiscreteCurve, Mat2, MetricField, NewtonSettings, Scheme, SchemeConfig, Splitting,
    Vec2,
};
use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Fdani,
    Fdbgn,
    Fdriem,
    Fdhypbol,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Scheme {
        match s {
            SchemeName::Fdani => Scheme::Fdani,
            SchemeName::Fdbgn => Scheme::Fdbgn,
            SchemeName::Fdriem => Scheme::Fdriem,
            SchemeName::Fdhypbol => Scheme::Fdhypbol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Isotropic,
    Kfold {
        k: u32,
        delta: f64,
    },
    Elliptic {
        delta: f64,
    },
    BgnRegular {
        #[serde(rename = "L")]
        l: usize,
        delta: f64,
    },
    /// Row-major symmetric positive definite matrices.
    Bgn {
        matrices: Vec<[[f64; 2]; 2]>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> anyhow::Result<AnisotropyModel> {
        Ok(match self {
            ModelSpec::Isotropic => AnisotropyModel::Isotropic,
            ModelSpec::Kfold { k, delta } => AnisotropyModel::smooth_k_fold(*k, *delta)?,
            ModelSpec::Elliptic { delta } => AnisotropyModel::elliptic(*delta)?,
            ModelSpec::BgnRegular { l, delta } => AnisotropyModel::Bgn(BgnAnisotropy::regular(*l, *delta)?),
            ModelSpec::Bgn { matrices } => AnisotropyModel::Bgn(BgnAnisotropy::new(
                matrices
                    .iter()
                    .map(|m| Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]))
                    .collect(),
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
pub enum MetricSpec {
    Hyperbolic,
    Flat,
    Conformal { factor: f64 },
    Cone { slope: f64 },
    TwoMountains { lambda1: f64, lambda2: f64 },
    Plane { slope: [f64; 2] },
    Paraboloid { curvature: f64 },
}

impl MetricSpec {
    pub fn build(&self) -> anyhow::Result<MetricField> {
        Ok(match *self {
            MetricSpec::Hyperbolic => MetricField::hyperbolic(),
            MetricSpec::Flat => MetricField::flat(),
            MetricSpec::Conformal { factor } => {
                if !(factor > 0.0) {
                    bail!("conformal factor must be positive");
                }
                MetricField::Conformal(ConformalFactor::Constant(factor))
            }
            MetricSpec::Cone { slope } => MetricField::cone(slope)?,
            MetricSpec::TwoMountains { lambda1, lambda2 } => MetricField::two_mountains(lambda1, lambda2)?,
            MetricSpec::Plane { slope } => MetricField::Graph(HeightField::Plane {
                slope: Vec2::new(slope[0], slope[1]),
            }),
            MetricSpec::Paraboloid { curvature } => MetricField::Graph(HeightField::Paraboloid { curvature }),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum InitialSpec {
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// `(a cos 2πρ, b sin 2πρ)` interpolated at the nodes.
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
    },
    /// Closed polygon resampled equidistantly in arclength.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl InitialSpec {
    pub fn build(&self, nodes: usize) -> anyhow::Result<DiscreteCurve> {
        Ok(match self {
            InitialSpec::Circle { center, radius } => {
                DiscreteCurve::circle(nodes, Vec2::new(center[0], center[1]), *radius)?
            }
            InitialSpec::Ellipse { center, a, b } => {
                let c = Vec2::new(center[0], center[1]);
                let pts = (0..nodes)
                    .map(|j| {
                        let t = TAU * j as f64 / nodes as f64;
                        c + Vec2::new(a * t.cos(), b * t.sin())
                    })
                    .collect();
                DiscreteCurve::new(pts, 0.0)?
            }
            InitialSpec::Polygon { vertices } => {
                let v: Vec<Vec2> = vertices.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                equidistribute(&v, nodes)?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingSpec {
    Shifted { c: f64 },
    Explicit,
}

impl SplittingSpec {
    pub fn build(self) -> anyhow::Result<Splitting> {
        Ok(match self {
            SplittingSpec::Shifted { c } => Splitting::shifted(c)?,
            SplittingSpec::Explicit => Splitting::Explicit,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: u32,
}

impl Default for NewtonSpec {
    fn default() -> Self {
        let d = NewtonSettings::default();
        NewtonSpec {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            max_halvings: d.max_halvings,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// `series.csv` with energy, ratio and Newton iterations per step.
    Series,
    /// `snap_<step>.csv` and `snap_<step>.svg`.
    Snapshot,
    /// `snap_<step>_3d.csv` for graph-like metrics.
    Embedding,
    /// Errors against the manufactured exact solution.
    Errors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObserverSpec {
    /// Snapshot stride in steps; `0` means preset snapshot times, or first and last step.
    pub stride: usize,
    pub kinds: Vec<ObserverKind>,
    /// SVG view box `[x, y, width, height]`; fitted to the curves when absent.
    pub viewbox: Option<[f64; 4]>,
}

impl Default for ObserverSpec {
    fn default() -> Self {
        ObserverSpec {
            stride: 0,
            kinds: vec![ObserverKind::Series, ObserverKind::Snapshot, ObserverKind::Embedding],
            viewbox: None,
        }
    }
}

impl ObserverSpec {
    pub fn wants(&self, kind: ObserverKind) -> bool {
        self.kinds.contains(&kind)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, rename = "J", skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton: Option<NewtonSpec>,
    #[serde(default)]
    pub observers: ObserverSpec,
}

/// A configuration resolved into runnable pieces.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub name: String,
    pub config: SchemeConfig,
    pub initial: DiscreteCurve,
    pub snapshot_steps: Vec<usize>,
    pub check: Option<PresetCheck>,
    pub observers: ObserverSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn for_preset(name: &str) -> Self {
        ExperimentConfig {
            preset: Some(name.to_owned()),
            ..Default::default()
        }
    }

    fn model(&self) -> anyhow::Result<Option<AnisotropyModel>> {
        match (&self.model, &self.metric) {
            (Some(_), Some(_)) => bail!("give either `model` or `metric`, not both"),
            (Some(m), None) => m.build().map(Some),
            (None, Some(g)) => Ok(Some(g.build()?.induced_anisotropy())),
            (None, None) => Ok(None),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let base = match &self.preset {
            Some(name) => Some(Preset::by_name(name).map_err(|_| anyhow!("unknown preset `{name}`"))?),
            None => None,
        };
        let scheme = match (self.scheme, &base) {
            (Some(s), _) => Scheme::from(s),
            (None, Some(p)) => p.config.scheme,
            (None, None) => bail!("`scheme` is required without a preset"),
        };
        let model = match (self.model()?, &base) {
            (Some(m), _) => m,
            (None, Some(p)) => p.config.model.clone(),
            (None, None) => bail!("`model` or `metric` is required without a preset"),
        };
        let dt = self
            .dt
            .or(base.as_ref().map(|p| p.config.dt))
            .ok_or_else(|| anyhow!("`dt` is required without a preset"))?;
        let final_time = self
            .final_time
            .or(base.as_ref().map(|p| p.config.final_time()))
            .ok_or_else(|| anyhow!("`T` is required without a preset"))?;
        let nodes = self.nodes.or(base.as_ref().map(|p| p.initial.len())).unwrap_or(128);

        let initial = match (&self.initial, &base) {
            (Some(spec), _) => spec.build(nodes)?,
            (None, Some(p)) if p.initial.len() == nodes => p.initial.clone(),
            (None, Some(p)) => equidistribute(p.initial.positions(), nodes)?,
            (None, None) => match self.forcing {
                Some(_) => InitialSpec::Ellipse {
                    center: [0.0; 2],
                    a: 1.0,
                    b: 0.5,
                }
                .build(nodes)?,
                None => DiscreteCurve::circle(nodes, Vec2::ZERO, 1.0)?,
            },
        };

        let mut config = SchemeConfig::new(scheme, model, dt, final_time)?;
        if let Some(p) = &base {
            config.splitting = p.config.splitting;
            config.newton = p.config.newton;
            config.forcing = p.config.forcing;
        }
        if let Some(f) = self.forcing {
            config = config.with_forcing(ManufacturedForcing::new(f.delta)?);
        }
        if let Some(s) = self.splitting {
            config = config.with_splitting(s.build()?);
        }
        if let Some(n) = self.newton {
            config.newton = NewtonSettings {
                tolerance: n.tolerance,
                max_iterations: n.max_iterations,
                max_halvings: n.max_halvings,
            };
        }
        config.validate()?;

        let snapshot_steps = if self.observers.stride > 0 {
            let mut v: Vec<usize> = (0..=config.steps).step_by(self.observers.stride).collect();
            if v.last() != Some(&config.steps) {
                v.push(config.steps);
            }
            v
        } else {
            match &base {
                Some(p) if self.dt.is_none() && self.final_time.is_none() => p.snapshot_steps(),
                _ => vec![0, config.steps],
            }
        };
        // a changed J, dt or T invalidates quantitative preset checks
        let check = match &base {
            Some(p)
                if self.nodes.is_none() && self.dt.is_none() && self.final_time.is_none() && self.initial.is_none() =>
            {
                p.check
            }
            _ => None,
        };
        Ok(Resolved {
            name: base.as_ref().map_or_else(|| "custom".to_owned(), |p| p.name.to_owned()),
            config,
            initial,
            snapshot_steps,
            check,
            observers: self.observers.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"{
            "scheme": "fdani",
            "model": {"variant": "kfold", "params": {"k": 3, "delta": 0.124}},
            "J": 64, "dt": 1e-3, "T": 0.01,
            "initial": {"shape": "circle", "radius": 1},
            "observers": {"stride": 5, "kinds": ["series"]}
        }"#;
        let r = ExperimentConfig::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(r.config.steps, 10);
        assert_eq!(r.initial.len(), 64);
        assert_eq!(r.snapshot_steps, vec![0, 5, 10]);
    }

    #[test]
    fn preset_overrides() {
        let mut c = ExperimentConfig::for_preset("fig9_hyperbolic");
        let r = c.resolve().unwrap();
        assert!(r.check.is_some());
        assert_eq!(r.config.steps, 1400);
        c.final_time = Some(0.01);
        let r = c.resolve().unwrap();
        assert!(r.check.is_none());
        assert_eq!(r.config.steps, 100);
    }

    #[test]
    fn rejects_model_and_metric() {
        let text = r#"{"scheme": "fdriem", "model": {"variant": "isotropic"},
            "metric": {"variant": "cone", "params": {"slope": 1}}, "dt": 1e-3, "T": 0.1}"#;
        assert!(ExperimentConfig::from_json(text).unwrap().resolve().is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(ExperimentConfig::from_json(r#"{"sheme": "fdani"}"#).is_err());
    }

    #[test]
    fn serializes_round_trip() {
        let c = ExperimentConfig {
            scheme: Some(SchemeName::Fdriem),
            metric: Some(MetricSpec::TwoMountains {
                lambda1: 5.0,
                lambda2: 1.0,
            }),
            nodes: Some(32),
            dt: Some(1e-3),
            final_time: Some(0.1),
            splitting: Some(SplittingSpec::Explicit),
            ..Default::default()
        };
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
