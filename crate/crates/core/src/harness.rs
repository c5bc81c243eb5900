//! Experiment definitions: discrete energy, convergence orders, the two
//! convergence suites and the named showcase presets.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::aniso::{AnisotropyModel, BgnAnisotropy};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::geom::{error_norms, DiscreteCurve, PeriodicMesh};
use crate::linalg::Vec2;
use crate::math;
use crate::metric::MetricField;
use crate::schemes::{run_flow, ManufacturedForcing, Scheme, SchemeConfig, StepRecord, Trajectory};

/// `E^h = (gamma(x, x_ρ^⊥), a(x))^h` with one-sided nodal limits.
pub fn discrete_energy(model: &AnisotropyModel, curve: &DiscreteCurve) -> Result<f64> {
    let mesh = curve.mesh();
    let h = mesh.h();
    let mut sum = 0.0;
    for e in 0..mesh.len() {
        let q = (curve.chord(e) * (1.0 / h)).perp();
        for node in [e, mesh.next(e)] {
            let z = curve.node(node);
            let locate = |err| match err {
                Error::OutsideDomain { point } => Error::NodeOutsideDomain { node, point },
                other => other,
            };
            let (a, _) = model.weight(z).map_err(locate)?;
            sum += model.density(z, q).map_err(locate)? * a;
        }
    }
    Ok(0.5 * h * sum)
}

/// Orders `log(e_{k-1}/e_k) / log(J_k/J_{k-1})` between consecutive levels.
pub fn eoc(errors: &[f64], levels: &[usize]) -> Result<Vec<f64>> {
    if errors.len() != levels.len() {
        return Err(Error::SizeMismatch {
            expected: levels.len(),
            actual: errors.len(),
        });
    }
    if let Some(&bad) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    Ok(errors
        .windows(2)
        .zip(levels.windows(2))
        .map(|(e, j)| math::ln(e[0] / e[1]) / math::ln(j[1] as f64 / j[0] as f64))
        .collect())
}

/// The two convergence experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Forced elliptic flow with `fdani`, `T = 0.45`.
    Table1,
    /// Cone `b = sqrt(3)`, `r(0) = 1` with `fdriem`, `T = 0.5`.
    Table2,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table2 => "table2",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "table1" => Some(Suite::Table1),
            "table2" => Some(Suite::Table2),
            _ => None,
        }
    }

    pub fn final_time(&self) -> f64 {
        match self {
            Suite::Table1 => 0.45,
            Suite::Table2 => 0.5,
        }
    }

    pub fn exact(&self) -> ExactSolution {
        match self {
            Suite::Table1 => ExactSolution::WulffEllipse { delta: 0.5 },
            Suite::Table2 => ExactSolution::ConeCircle {
                slope: math::sqrt(3.0),
                r0: 1.0,
            },
        }
    }

    /// Scheme configuration at `J` nodes with `dt = h^2`.
    pub fn config(&self, nodes: usize) -> Result<SchemeConfig> {
        let h = 1.0 / nodes as f64;
        let dt = h * h;
        match self {
            Suite::Table1 => {
                Ok(
                    SchemeConfig::new(Scheme::Fdani, AnisotropyModel::elliptic(0.5)?, dt, self.final_time())?
                        .with_forcing(ManufacturedForcing::new(0.5)?),
                )
            }
            Suite::Table2 => SchemeConfig::new(
                Scheme::Fdriem,
                MetricField::cone(math::sqrt(3.0))?.induced_anisotropy(),
                dt,
                self.final_time(),
            ),
        }
    }

    pub fn initial(&self, nodes: usize) -> Result<DiscreteCurve> {
        DiscreteCurve::interpolate(PeriodicMesh::new(nodes)?, &self.exact().at(0.0)?, 0.0)
    }

    /// Reference errors reported in the literature at `J = 32, 64, 128, 256`.
    pub fn reference(&self) -> ReferenceTable {
        match self {
            Suite::Table1 => ReferenceTable {
                levels: [32, 64, 128, 256],
                l2: [1.2337e-02, 3.1870e-03, 8.0360e-04, 2.0133e-04],
                h1: [2.8140e-01, 1.4076e-01, 7.0386e-02, 3.5194e-02],
            },
            Suite::Table2 => ReferenceTable {
                levels: [32, 64, 128, 256],
                l2: [1.6096e-02, 4.2080e-03, 1.0635e-03, 2.6656e-04],
                h1: [3.5595e-01, 1.7805e-01, 8.9032e-02, 4.4517e-02],
            },
        }
    }
}

/// Published max-in-time errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceTable {
    pub levels: [usize; 4],
    pub l2: [f64; 4],
    pub h1: [f64; 4],
}

impl ReferenceTable {
    pub fn lookup(&self, nodes: usize) -> Option<(f64, f64)> {
        self.levels
            .iter()
            .position(|&j| j == nodes)
            .map(|k| (self.l2[k], self.h1[k]))
    }
}

/// Errors against the exact solution at one time level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord {
    pub step: usize,
    pub time: f64,
    pub l2: f64,
    pub h1: f64,
}

/// One mesh level of a convergence suite.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub nodes: usize,
    pub dt: f64,
    pub steps: usize,
    pub max_l2: f64,
    pub max_h1: f64,
    pub errors: Vec<ErrorRecord>,
    pub trajectory: Trajectory,
}

/// Runs one level, measuring the errors at every time step.
pub fn run_level(suite: Suite, nodes: usize) -> Result<LevelResult> {
    let config = suite.config(nodes)?;
    let exact = suite.exact();
    let mut errors = Vec::with_capacity(config.steps + 1);
    let trajectory = run_flow(suite.initial(nodes)?, &config, |curve, rec: &StepRecord| {
        let n = error_norms(curve, &exact.at(curve.time())?);
        errors.push(ErrorRecord {
            step: rec.step,
            time: rec.time,
            l2: n.l2,
            h1: n.h1,
        });
        Ok(())
    })?;
    let max_l2 = errors.iter().fold(0.0f64, |m, e| m.max(e.l2));
    let max_h1 = errors.iter().fold(0.0f64, |m, e| m.max(e.h1));
    Ok(LevelResult {
        nodes,
        dt: config.dt,
        steps: config.steps,
        max_l2,
        max_h1,
        errors,
        trajectory,
    })
}

/// Closed polyline resampled at `nodes` points equidistributed in arclength,
/// starting at the first vertex.
pub fn equidistribute(vertices: &[Vec2], nodes: usize) -> Result<DiscreteCurve> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for k in 0..n {
        let l = (vertices[(k + 1) % n] - vertices[k]).norm();
        cumulative.push(cumulative[k] + l);
    }
    let total = cumulative[n];
    if !(total > 0.0) {
        return Err(Error::DegenerateElement { element: 0 });
    }
    let mut seg = 0;
    let positions = (0..nodes)
        .map(|j| {
            let s = total * j as f64 / nodes as f64;
            while cumulative[seg + 1] < s {
                seg += 1;
            }
            let len = cumulative[seg + 1] - cumulative[seg];
            let w = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
            vertices[seg] + (vertices[(seg + 1) % n] - vertices[seg]) * w
        })
        .collect();
    DiscreteCurve::new(positions, 0.0)
}

/// Fine polyline of an arc of the circle of radius `r` about `c`, end point excluded.
fn arc(c: Vec2, r: f64, from: f64, to: f64, pieces: usize) -> impl Iterator<Item = Vec2> {
    (0..pieces).map(move |k| c + Vec2::from_angle(from + (to - from) * k as f64 / pieces as f64) * r)
}

/// Extra assertion attached to a preset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PresetCheck {
    /// Terminal node distance to the exact hyperbolic circle below the threshold.
    HyperbolicCircle { a0: f64, r0: f64, threshold: f64 },
    /// Terminal nodal geodesic curvature below the threshold.
    GeodesicLimit { threshold: f64 },
}

/// Outcome of a [`PresetCheck`].
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl PresetCheck {
    pub fn evaluate(&self, config: &SchemeConfig, curve: &DiscreteCurve) -> Result<CheckOutcome> {
        match *self {
            PresetCheck::HyperbolicCircle { a0, r0, threshold } => {
                let (c, r) = ExactSolution::HyperbolicCircle { a0, r0 }.circle(curve.time())?;
                let value = curve
                    .positions()
                    .iter()
                    .fold(0.0f64, |m, x| m.max(((*x - c).norm() - r).abs()));
                Ok(CheckOutcome {
                    name: "max radial deviation".into(),
                    value,
                    threshold,
                    passed: value < threshold,
                })
            }
            PresetCheck::GeodesicLimit { threshold } => {
                let field = config
                    .metric()
                    .ok_or(Error::InvalidParameter("geodesic check needs a metric"))?;
                let value = field
                    .geodesic_curvature(curve)?
                    .iter()
                    .fold(0.0f64, |m, k| m.max(k.abs()));
                Ok(CheckOutcome {
                    name: "max geodesic curvature".into(),
                    value,
                    threshold,
                    passed: value < threshold,
                })
            }
        }
    }
}

/// A named showcase run.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: SchemeConfig,
    pub initial: DiscreteCurve,
    pub snapshot_times: Vec<f64>,
    pub check: Option<PresetCheck>,
}

pub const PRESET_NAMES: [&str; 12] = [
    "fig1_ellipse",
    "fig4_kfold3",
    "fig4_kfold6",
    "fig5_square",
    "fig6_oott",
    "fig7_almgren_taylor",
    "fig9_hyperbolic",
    "fig10_cone_homotopic",
    "fig10_cone_winding",
    "fig11_mountains_small",
    "fig11_mountains_uneven",
    "fig12_mountains_stuck",
];

fn times(start: f64, step: f64, count: usize, extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count).map(|k| start + step * k as f64).collect();
    v.extend_from_slice(extra);
    v
}

impl Preset {
    pub fn by_name(name: &str) -> Result<Preset> {
        let unit = || DiscreteCurve::circle(128, Vec2::ZERO, 1.0);
        let preset = match name {
            "fig1_ellipse" => {
                let pts: Vec<Vec2> = (0..4096)
                    .map(|k| {
                        let t = TAU * k as f64 / 4096.0;
                        Vec2::new(math::cos(t), 0.5 * math::sin(t))
                    })
                    .collect();
                Preset {
                    name: "fig1_ellipse",
                    description: "elliptic anisotropy (delta = 0.5) with fdani from its equidistributed Wulff shape",
                    config: SchemeConfig::new(Scheme::Fdani, AnisotropyModel::elliptic(0.5)?, 1e-4, 0.499)?,
                    initial: equidistribute(&pts, 128)?,
                    snapshot_times: times(0.0, 0.05, 10, &[0.499]),
                    check: None,
                }
            }
            "fig4_kfold3" | "fig4_kfold6" => {
                let (k, delta) = if name == "fig4_kfold3" { (3, 0.124) } else { (6, 0.028) };
                Preset {
                    name: if k == 3 { "fig4_kfold3" } else { "fig4_kfold6" },
                    description: "smooth k-fold anisotropy with fdani from the unit circle",
                    config: SchemeConfig::new(Scheme::Fdani, AnisotropyModel::smooth_k_fold(k, delta)?, 1e-4, 0.5)?,
                    initial: unit()?,
                    snapshot_times: times(0.0, 0.05, 11, &[]),
                    check: None,
                }
            }
            "fig5_square" => Preset {
                name: "fig5_square",
                description: "regularized square anisotropy (L = 2, delta = 1e-2) with fdbgn from the unit circle",
                config: SchemeConfig::new(
                    Scheme::Fdbgn,
                    AnisotropyModel::Bgn(BgnAnisotropy::regular(2, 1e-2)?),
                    1e-4,
                    0.35,
                )?,
                initial: unit()?,
                snapshot_times: times(0.0, 0.05, 8, &[]),
                check: None,
            },
            "fig6_oott" => {
                // three quarters of the unit circle, then the square [-2,0]x[0,2]
                let mut pts: Vec<Vec2> = arc(Vec2::ZERO, 1.0, PI, PI + 3.0 * FRAC_PI_2, 3000).collect();
                pts.extend_from_slice(&[
                    Vec2::new(0.0, 1.0),
                    Vec2::new(0.0, 2.0),
                    Vec2::new(-2.0, 2.0),
                    Vec2::new(-2.0, 0.0),
                ]);
                Preset {
                    name: "fig6_oott",
                    description:
                        "circular arc merged with a square, L = 2, delta = 1e-2, fdbgn (reconstructed initial curve)",
                    config: SchemeConfig::new(
                        Scheme::Fdbgn,
                        AnisotropyModel::Bgn(BgnAnisotropy::regular(2, 1e-2)?),
                        1e-4,
                        0.75,
                    )?,
                    initial: equidistribute(&pts, 256)?,
                    snapshot_times: times(0.0, 0.1, 8, &[0.75]),
                    check: None,
                }
            }
            "fig7_almgren_taylor" => {
                let pts = [
                    (1.0, 0.0),
                    (4.0, 0.0),
                    (5.0, 1.0),
                    (5.0, 4.0),
                    (4.0, 5.0),
                    (3.0, 5.0),
                    (2.0, 4.0),
                    (1.0, 4.0),
                    (0.0, 3.0),
                    (0.0, 1.0),
                ]
                .map(|(x, y)| Vec2::new(x, y));
                Preset {
                    name: "fig7_almgren_taylor",
                    description: "octagon-admissible polygon, L = 4, delta = 1e-4, fdbgn (reconstructed initial curve)",
                    config: SchemeConfig::new(
                        Scheme::Fdbgn,
                        AnisotropyModel::Bgn(BgnAnisotropy::regular(4, 1e-4)?),
                        1e-4,
                        3.4,
                    )?,
                    initial: equidistribute(&pts, 512)?,
                    snapshot_times: times(0.0, 0.4, 9, &[3.4]),
                    check: None,
                }
            }
            "fig9_hyperbolic" => Preset {
                name: "fig9_hyperbolic",
                description: "hyperbolic half plane with fdhypbol from the unit circle about (2, 0)",
                config: SchemeConfig::new(
                    Scheme::Fdhypbol,
                    MetricField::hyperbolic().induced_anisotropy(),
                    1e-4,
                    0.14,
                )?,
                initial: DiscreteCurve::circle(128, Vec2::new(2.0, 0.0), 1.0)?,
                snapshot_times: times(0.0, 0.02, 8, &[]),
                check: Some(PresetCheck::HyperbolicCircle {
                    a0: 2.0,
                    r0: 1.0,
                    threshold: 6e-3,
                }),
            },
            "fig10_cone_homotopic" => Preset {
                name: "fig10_cone_homotopic",
                description: "cone b = sqrt(3), circle away from the apex, fdriem (reconstructed initial curve)",
                config: SchemeConfig::new(
                    Scheme::Fdriem,
                    MetricField::cone(math::sqrt(3.0))?.induced_anisotropy(),
                    1e-4,
                    1.8,
                )?,
                initial: DiscreteCurve::circle(128, Vec2::new(2.5, 0.0), 1.4)?,
                snapshot_times: alloc::vec![0.0, 1.0, 1.8],
                check: None,
            },
            "fig10_cone_winding" => Preset {
                name: "fig10_cone_winding",
                description:
                    "cone b = sqrt(3), off-centre circle around the apex, fdriem (reconstructed initial curve)",
                config: SchemeConfig::new(
                    Scheme::Fdriem,
                    MetricField::cone(math::sqrt(3.0))?.induced_anisotropy(),
                    1e-4,
                    1.1,
                )?,
                initial: DiscreteCurve::circle(128, Vec2::new(0.3, 0.0), 0.8)?,
                snapshot_times: alloc::vec![0.0, 0.2, 0.6, 1.0, 1.1],
                check: None,
            },
            "fig11_mountains_small" | "fig11_mountains_uneven" | "fig12_mountains_stuck" => {
                let (l1, l2, t, n, d) = match name {
                    "fig11_mountains_small" => (
                        1.0,
                        1.0,
                        2.2,
                        "fig11_mountains_small",
                        "two mountains (1, 1), fdriem from the circle of radius 2",
                    ),
                    "fig11_mountains_uneven" => (
                        5.0,
                        1.0,
                        4.0,
                        "fig11_mountains_uneven",
                        "two mountains (5, 1), fdriem from the circle of radius 2",
                    ),
                    _ => (
                        5.0,
                        5.0,
                        4.0,
                        "fig12_mountains_stuck",
                        "two mountains (5, 5), fdriem from the circle of radius 2",
                    ),
                };
                let mut snaps = alloc::vec![0.0, 1.0, 2.0];
                snaps.push(t);
                Preset {
                    name: n,
                    description: d,
                    config: SchemeConfig::new(
                        Scheme::Fdriem,
                        MetricField::two_mountains(l1, l2)?.induced_anisotropy(),
                        1e-4,
                        t,
                    )?,
                    initial: DiscreteCurve::circle(128, Vec2::ZERO, 2.0)?,
                    snapshot_times: snaps,
                    check: if n == "fig12_mountains_stuck" {
                        Some(PresetCheck::GeodesicLimit { threshold: 1e-2 })
                    } else {
                        None
                    },
                }
            }
            _ => return Err(Error::InvalidParameter("unknown preset")),
        };
        Ok(preset)
    }

    /// Steps at which snapshots are due.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|&t| crate::schemes::step_count(t, self.config.dt).min(self.config.steps))
            .collect();
        steps.dedup();
        steps
    }
}
