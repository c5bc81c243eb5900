//! CSV and SVG emission, plus readers for the CSV formats.
//!
//! Floats are written in Rust's shortest round-trip exponent form, so
//! re-parsing a file reproduces every finite value bitwise.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use acsf_core::{DiscreteCurve, Vec2};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// One row of a time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    /// Lumped `(Φ, 1)^h`, the quantity the schemes decrease.
    pub energy: f64,
    /// Discrete energy `E^h`.
    pub length: f64,
    pub ratio: f64,
    pub newton_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l2_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h1_err: Option<f64>,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn parse_f64(s: &str) -> anyhow::Result<f64> {
    s.trim().parse().with_context(|| format!("bad number `{s}`"))
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(path: &Path, header: &[&str]) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if got.iter().map(String::as_str).ne(header.iter().copied()) {
        bail!("{}: expected header {:?}, found {:?}", path.display(), header, got);
    }
    r.records().map(|rec| rec?.iter().map(parse_f64).collect()).collect()
}

/// `rho,x1,x2` with `rho = j/J`.
pub fn write_curve_csv(path: &Path, curve: &DiscreteCurve) -> anyhow::Result<()> {
    let j = curve.len() as f64;
    write_rows(
        path,
        &["rho", "x1", "x2"],
        curve
            .positions()
            .iter()
            .enumerate()
            .map(|(k, x)| vec![fmt_f64(k as f64 / j), fmt_f64(x.x), fmt_f64(x.y)]),
    )
}

pub fn read_curve_csv(path: &Path) -> anyhow::Result<Vec<Vec2>> {
    Ok(read_rows(path, &["rho", "x1", "x2"])?
        .into_iter()
        .map(|r| Vec2::new(r[1], r[2]))
        .collect())
}

/// `x1,x2` closed polyline, first point not repeated.
pub fn write_points_csv(path: &Path, points: &[Vec2]) -> anyhow::Result<()> {
    write_rows(
        path,
        &["x1", "x2"],
        points.iter().map(|x| vec![fmt_f64(x.x), fmt_f64(x.y)]),
    )
}

pub fn read_points_csv(path: &Path) -> anyhow::Result<Vec<Vec2>> {
    Ok(read_rows(path, &["x1", "x2"])?
        .into_iter()
        .map(|r| Vec2::new(r[0], r[1]))
        .collect())
}

pub fn write_points3_csv(path: &Path, points: &[[f64; 3]]) -> anyhow::Result<()> {
    write_rows(
        path,
        &["x1", "x2", "x3"],
        points.iter().map(|p| p.iter().map(|&v| fmt_f64(v)).collect()),
    )
}

pub fn read_points3_csv(path: &Path) -> anyhow::Result<Vec<[f64; 3]>> {
    Ok(read_rows(path, &["x1", "x2", "x3"])?
        .into_iter()
        .map(|r| [r[0], r[1], r[2]])
        .collect())
}

const SERIES_HEADER: [&str; 7] = ["step", "t", "energy", "ratio", "newton_iters", "l2_err", "h1_err"];

/// `step,t,energy,ratio,newton_iters[,l2_err,h1_err]`; the error columns
/// appear when every row carries errors.
pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> anyhow::Result<()> {
    let errors = !rows.is_empty() && rows.iter().all(|r| r.l2_err.is_some() && r.h1_err.is_some());
    let header = if errors {
        &SERIES_HEADER[..]
    } else {
        &SERIES_HEADER[..5]
    };
    write_rows(
        path,
        header,
        rows.iter().map(|r| {
            let mut v = vec![
                r.step.to_string(),
                fmt_f64(r.t),
                fmt_f64(r.energy),
                fmt_f64(r.ratio),
                r.newton_iters.to_string(),
            ];
            if errors {
                v.push(fmt_f64(r.l2_err.unwrap_or(f64::NAN)));
                v.push(fmt_f64(r.h1_err.unwrap_or(f64::NAN)));
            }
            v
        }),
    )
}

/// Reads a series back; `length` is not part of the file and comes back as NaN.
pub fn read_series_csv(path: &Path) -> anyhow::Result<Vec<SeriesRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let n = r.headers()?.len();
    let header = match n {
        5 => &SERIES_HEADER[..5],
        7 => &SERIES_HEADER[..],
        _ => bail!("{}: unexpected series header", path.display()),
    };
    read_rows(path, header)?
        .into_iter()
        .map(|v| {
            Ok(SeriesRow {
                step: v[0] as usize,
                t: v[1],
                energy: v[2],
                length: f64::NAN,
                ratio: v[3],
                newton_iters: v[4] as usize,
                l2_err: v.get(5).copied(),
                h1_err: v.get(6).copied(),
            })
        })
        .collect()
}

/// `J,dt,steps,l2,h1,eoc_l2,eoc_h1`; EOC cells of the first level are empty.
pub fn write_errors_csv(path: &Path, rows: &[crate::report::LevelRow]) -> anyhow::Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    write_rows(
        path,
        &["J", "dt", "steps", "l2", "h1", "eoc_l2", "eoc_h1"],
        rows.iter().map(|r| {
            vec![
                r.nodes.to_string(),
                fmt_f64(r.dt),
                r.steps.to_string(),
                fmt_f64(r.l2),
                fmt_f64(r.h1),
                opt(r.eoc_l2),
                opt(r.eoc_h1),
            ]
        }),
    )
}

/// View box `[x, y, width, height]` in curve coordinates.
pub fn fit_viewbox<'a>(curves: impl IntoIterator<Item = &'a [Vec2]>) -> [f64; 4] {
    let (mut lo, mut hi) = (
        Vec2::new(f64::INFINITY, f64::INFINITY),
        Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for c in curves {
        for p in c {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    if !(lo.x <= hi.x && lo.y <= hi.y) {
        return [-1.0, -1.0, 2.0, 2.0];
    }
    let pad = 0.05 * (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
    [lo.x - pad, lo.y - pad, hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad]
}

/// Closed polylines in an SVG document; the `x2` axis points up.
pub fn svg_document(curves: &[&[Vec2]], viewbox: [f64; 4]) -> String {
    let [x, y, w, h] = viewbox;
    let stroke = 0.004 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="{}">"#,
        x,
        -(y + h),
        w,
        h,
        (600.0 * h / w).round()
    );
    for c in curves {
        let _ = write!(
            s,
            r#"<polygon fill="none" stroke="black" stroke-width="{stroke}" points=""#
        );
        for (k, p) in c.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{},{}", p.x, -p.y);
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, curves: &[&[Vec2]], viewbox: [f64; 4]) -> anyhow::Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(svg_document(curves, viewbox).as_bytes())?;
    Ok(())
}
