//! Experiment orchestration and the JSON report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use acsf_core::harness::{discrete_energy, eoc, run_level, LevelResult, Suite};
use acsf_core::schemes::{run_flow, FlowStatus, StepRecord};
use acsf_core::{geom, AnisotropyModel, Convexity, DiscreteCurve, ExactSolution, ParametricCurve, Vec2};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ObserverKind, Resolved};
use crate::output::{self, SeriesRow};

/// Relative tolerance on the reference error tables.
pub const TABLE_TOLERANCE: f64 = 0.02;
/// Slack allowed in the energy monotonicity check, relative to the energy.
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckRow {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckRow {
            name: name.into(),
            value,
            threshold,
            passed: value < threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckRow {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }
}

/// One mesh level in an error table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    #[serde(rename = "J")]
    pub nodes: usize,
    pub dt: f64,
    pub steps: usize,
    pub l2: f64,
    pub h1: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EocTable {
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub label: String,
    pub status: String,
    pub rows: Vec<SeriesRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: serde_json::Value,
    pub series: Vec<RunSeries>,
    pub errors: Vec<LevelRow>,
    pub eoc: EocTable,
    pub status: String,
    pub checks: Vec<CheckRow>,
    pub wall_clock_s: f64,
    pub files: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&mut self, out: &Path) -> anyhow::Result<PathBuf> {
        let path = out.join("report.json");
        self.files.push(file_name(&path));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn prepare(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// Checks that the energy never increases by more than the relative slack.
pub fn energy_monotone(rows: &[SeriesRow]) -> CheckRow {
    let worst = rows
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    CheckRow {
        name: "energy non-increasing".into(),
        value: worst.max(0.0),
        threshold: ENERGY_SLACK,
        passed: !(worst > ENERGY_SLACK),
    }
}

/// Runs a resolved configuration, writing outputs under `out`.
pub fn run_resolved(resolved: &Resolved, echo: serde_json::Value, out: &Path) -> anyhow::Result<ExperimentReport> {
    prepare(out)?;
    let start = Instant::now();
    let cfg = &resolved.config;
    let obs = &resolved.observers;
    let exact = cfg.forcing.map(|f| ExactSolution::WulffEllipse { delta: f.delta });
    let embed = cfg
        .metric()
        .filter(|m| m.is_graph() && obs.wants(ObserverKind::Embedding));
    let viewbox = obs
        .viewbox
        .unwrap_or_else(|| output::fit_viewbox([resolved.initial.positions()]));
    let mut files = Vec::new();
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut snaps = resolved.snapshot_steps.iter().peekable();
    let mut last_curve: Option<DiscreteCurve> = None;

    let mut observe = |curve: &DiscreteCurve, rec: &StepRecord| -> anyhow::Result<()> {
        let mut row = SeriesRow {
            step: rec.step,
            t: rec.time,
            energy: rec.energy,
            length: discrete_energy(&cfg.model, curve)?,
            ratio: rec.ratio,
            newton_iters: rec.newton_iterations,
            l2_err: None,
            h1_err: None,
        };
        if let (Some(ex), true) = (exact, obs.wants(ObserverKind::Errors)) {
            let n = geom::error_norms(curve, &ex.at(curve.time())?);
            row.l2_err = Some(n.l2);
            row.h1_err = Some(n.h1);
        }
        rows.push(row);
        while snaps.next_if(|&&s| s < rec.step).is_some() {}
        if snaps.next_if(|&&s| s == rec.step).is_some() && obs.wants(ObserverKind::Snapshot) {
            let stem = format!("snap_{}", rec.step);
            let csv = out.join(format!("{stem}.csv"));
            output::write_curve_csv(&csv, curve)?;
            let svg = out.join(format!("{stem}.svg"));
            output::write_svg(&svg, &[curve.positions()], viewbox)?;
            files.push(file_name(&csv));
            files.push(file_name(&svg));
            if let Some(m) = embed {
                let p = out.join(format!("{stem}_3d.csv"));
                output::write_points3_csv(&p, &m.graph_embed(curve)?)?;
                files.push(file_name(&p));
            }
        }
        last_curve = Some(curve.clone());
        Ok(())
    };
    let mut failure = None;
    let traj = run_flow(resolved.initial.clone(), cfg, |c, r| {
        observe(c, r).map_err(|e| {
            failure = Some(e);
            acsf_core::Error::InvalidParameter("observer failed")
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let traj = traj.with_context(|| format!("running {}", resolved.name))?;
    // the final curve is always snapshotted when the run ends early
    if traj.status == FlowStatus::Extinct && obs.wants(ObserverKind::Snapshot) {
        if let Some(c) = &last_curve {
            let step = traj.records.last().map_or(0, |r| r.step);
            let svg = out.join(format!("snap_{step}.svg"));
            if !svg.exists() {
                output::write_curve_csv(&out.join(format!("snap_{step}.csv")), c)?;
                output::write_svg(&svg, &[c.positions()], viewbox)?;
                files.push(format!("snap_{step}.csv"));
                files.push(file_name(&svg));
            }
        }
    }

    let mut checks = Vec::new();
    if cfg.forcing.is_none() {
        checks.push(energy_monotone(&rows));
    }
    if let Some(check) = resolved.check {
        let c = check.evaluate(cfg, &traj.curve)?;
        checks.push(CheckRow {
            name: c.name,
            value: c.value,
            threshold: c.threshold,
            passed: c.passed,
        });
    }
    if obs.wants(ObserverKind::Series) {
        let p = out.join("series.csv");
        output::write_series_csv(&p, &rows)?;
        files.push(file_name(&p));
    }
    let mut report = ExperimentReport {
        config: echo,
        series: vec![RunSeries {
            label: resolved.name.clone(),
            status: traj.status.as_str().into(),
            rows,
        }],
        errors: Vec::new(),
        eoc: EocTable::default(),
        status: traj.status.as_str().into(),
        checks,
        wall_clock_s: start.elapsed().as_secs_f64(),
        files,
    };
    report.write(out)?;
    Ok(report)
}

pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> anyhow::Result<ExperimentReport> {
    let resolved = config.resolve()?;
    run_resolved(&resolved, serde_json::to_value(config)?, out)
}

pub fn run_showcase(preset: &str, out: &Path) -> anyhow::Result<ExperimentReport> {
    run_experiment(&ExperimentConfig::for_preset(preset), out)
}

/// Error table with EOC columns between consecutive levels.
pub fn error_table(levels: &[LevelResult]) -> anyhow::Result<(Vec<LevelRow>, EocTable)> {
    let nodes: Vec<usize> = levels.iter().map(|l| l.nodes).collect();
    let l2: Vec<f64> = levels.iter().map(|l| l.max_l2).collect();
    let h1: Vec<f64> = levels.iter().map(|l| l.max_h1).collect();
    let table = EocTable {
        l2: eoc(&l2, &nodes)?,
        h1: eoc(&h1, &nodes)?,
    };
    let rows = levels
        .iter()
        .enumerate()
        .map(|(k, l)| LevelRow {
            nodes: l.nodes,
            dt: l.dt,
            steps: l.steps,
            l2: l.max_l2,
            h1: l.max_h1,
            eoc_l2: k.checked_sub(1).map(|i| table.l2[i]),
            eoc_h1: k.checked_sub(1).map(|i| table.h1[i]),
        })
        .collect();
    Ok((rows, table))
}

/// Runs the levels of a suite concurrently.
pub fn run_levels(suite: Suite, levels: &[usize]) -> anyhow::Result<Vec<LevelResult>> {
    if levels.is_empty() {
        bail!("no levels given");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        bail!("levels must be strictly ascending");
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = levels.iter().map(|&j| s.spawn(move || run_level(suite, j))).collect();
        handles
            .into_iter()
            .zip(levels)
            .map(|(h, j)| {
                h.join()
                    .map_err(|_| anyhow::anyhow!("level J={j} panicked"))?
                    .with_context(|| format!("level J={j}"))
            })
            .collect()
    })
}

/// Comparisons against the reference table for the levels it lists.
pub fn reference_checks(suite: Suite, rows: &[LevelRow], table: &EocTable) -> Vec<CheckRow> {
    let reference = suite.reference();
    let mut checks = Vec::new();
    for r in rows {
        if let Some((l2, h1)) = reference.lookup(r.nodes) {
            checks.push(CheckRow::below(
                format!("{} J={} L2 relative deviation", suite.name(), r.nodes),
                (r.l2 - l2).abs() / l2,
                TABLE_TOLERANCE,
            ));
            checks.push(CheckRow::below(
                format!("{} J={} H1 relative deviation", suite.name(), r.nodes),
                (r.h1 - h1).abs() / h1,
                TABLE_TOLERANCE,
            ));
        }
    }
    if let (Some(&l2), Some(&h1)) = (table.l2.last(), table.h1.last()) {
        if suite == Suite::Table1 {
            checks.push(CheckRow::at_least("L2 EOC at finest pair", l2, 1.9));
        }
        checks.push(CheckRow::below(
            "|H1 EOC - 1| at finest pair",
            (h1 - 1.0).abs(),
            0.05 + 1e-12,
        ));
    }
    checks
}

pub fn run_convergence(suite: Suite, levels: &[usize], out: &Path) -> anyhow::Result<ExperimentReport> {
    prepare(out)?;
    let start = Instant::now();
    let results = run_levels(suite, levels)?;
    let (rows, table) = error_table(&results)?;
    let mut files = Vec::new();
    let p = out.join("errors.csv");
    output::write_errors_csv(&p, &rows)?;
    files.push(file_name(&p));
    let mut series = Vec::new();
    for l in &results {
        let rs: Vec<SeriesRow> = l
            .trajectory
            .records
            .iter()
            .zip(&l.errors)
            .map(|(r, e)| SeriesRow {
                step: r.step,
                t: r.time,
                energy: r.energy,
                length: f64::NAN,
                ratio: r.ratio,
                newton_iters: r.newton_iterations,
                l2_err: Some(e.l2),
                h1_err: Some(e.h1),
            })
            .collect();
        let p = out.join(format!("series_J{}.csv", l.nodes));
        output::write_series_csv(&p, &rs)?;
        files.push(file_name(&p));
        series.push(RunSeries {
            label: format!("J={}", l.nodes),
            status: l.trajectory.status.as_str().into(),
            rows: rs,
        });
    }
    let status = if results.iter().all(|l| l.trajectory.status == FlowStatus::Completed) {
        "completed"
    } else {
        "extinct"
    };
    let checks = reference_checks(suite, &rows, &table);
    let mut report = ExperimentReport {
        config: serde_json::json!({
            "suite": suite.name(),
            "levels": levels,
            "T": suite.final_time(),
            "dt": "h^2",
        }),
        series,
        errors: rows,
        eoc: table,
        status: status.into(),
        checks,
        wall_clock_s: start.elapsed().as_secs_f64(),
        files,
    };
    report.write(out)?;
    Ok(report)
}

/// Frank diagram and Wulff shape samples of a space-independent model.
pub fn run_wulff(model: &AnisotropyModel, samples: usize, out: &Path) -> anyhow::Result<ExperimentReport> {
    if !model.is_space_independent() {
        bail!("Wulff shapes need a space-independent model");
    }
    prepare(out)?;
    let start = Instant::now();
    let wulff = model.sample_wulff(samples)?;
    let frank = model.sample_frank(samples)?;
    let mut files = Vec::new();
    for (name, pts) in [("wulff", &wulff), ("frank", &frank)] {
        let csv = out.join(format!("{name}.csv"));
        output::write_points_csv(&csv, pts)?;
        let svg = out.join(format!("{name}.svg"));
        output::write_svg(&svg, &[pts], output::fit_viewbox([&pts[..]]))?;
        files.push(file_name(&csv));
        files.push(file_name(&svg));
    }
    let convex = model.assert_convex();
    let mut checks = vec![CheckRow {
        name: "convexity".into(),
        value: match convex {
            Convexity::Convex => 0.0,
            Convexity::Violated { direction } => direction.angle(),
        },
        threshold: 0.0,
        passed: convex.is_convex(),
    }];
    checks.push(CheckRow::below(
        "Wulff polygon turning defect",
        turning_defect(&wulff),
        1e-9,
    ));
    let mut report = ExperimentReport {
        config: serde_json::json!({ "model": format!("{model:?}"), "samples": samples }),
        series: Vec::new(),
        errors: Vec::new(),
        eoc: EocTable::default(),
        status: "completed".into(),
        checks,
        wall_clock_s: start.elapsed().as_secs_f64(),
        files,
    };
    report.write(out)?;
    Ok(report)
}

/// Largest negative cross product of consecutive edges, relative to their lengths;
/// zero for a convex anticlockwise polygon.
pub fn turning_defect(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|k| {
            let a = points[(k + 1) % n] - points[k];
            let b = points[(k + 2) % n] - points[(k + 1) % n];
            -a.cross(b) / (a.norm() * b.norm()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0f64, f64::max)
}

/// Distance of a curve to an exact parameterization at the nodes.
pub fn nodal_distance(curve: &DiscreteCurve, exact: &impl ParametricCurve) -> f64 {
    let mesh = curve.mesh();
    (0..curve.len())
        .map(|j| (curve.node(j) - exact.position(mesh.node(j))).norm())
        .fold(0.0, f64::max)
}
