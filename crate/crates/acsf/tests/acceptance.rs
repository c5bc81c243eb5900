//! Acceptance criteria. Prints one PASS/FAIL line per criterion, with the
//! failing sub-checks indented below it.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` are expected to fail; they are
//! printed as FAIL all the same. The process exits nonzero if the set of
//! failing criteria differs from that list in either direction.

use std::process::ExitCode;
use std::time::Instant;

use acsf::checks;
use acsf::config::{ExperimentConfig, ModelSpec, ObserverKind};
use acsf::core::harness::Suite;
use acsf::report::{error_table, reference_checks, run_experiment, run_levels, CheckRow};

const ENERGY_CHECK: &str = "energy non-increasing";

const LEVELS: [usize; 4] = [32, 64, 128, 256];

/// Criteria that fail with the current implementation.
const KNOWN_DEVIATIONS: [&str; 3] = ["2", "4", "7b"];

struct Criterion {
    id: &'static str,
    title: &'static str,
    rows: Vec<CheckRow>,
    seconds: f64,
}

impl Criterion {
    fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.passed)
    }
}

fn error_row(name: impl Into<String>, e: anyhow::Error) -> CheckRow {
    CheckRow {
        name: format!("{}: {e:#}", name.into()),
        value: f64::NAN,
        threshold: f64::NAN,
        passed: false,
    }
}

fn table(suite: Suite) -> Vec<CheckRow> {
    let levels = match run_levels(suite, &LEVELS) {
        Ok(l) => l,
        Err(e) => return vec![error_row(suite.name(), e)],
    };
    match error_table(&levels) {
        Ok((rows, eoc)) => reference_checks(suite, &rows, &eoc),
        Err(e) => vec![error_row(suite.name(), e)],
    }
}

fn preset_runs(presets: &[(&str, &str, Option<(usize, f64)>)]) -> Vec<CheckRow> {
    let dir = tempfile::tempdir().expect("temporary directory");
    std::thread::scope(|s| {
        let handles: Vec<_> = presets
            .iter()
            .map(|&(label, preset, bgn)| {
                let out = dir.path().join(label);
                s.spawn(move || {
                    let mut cfg = ExperimentConfig::for_preset(preset);
                    cfg.observers.kinds = vec![ObserverKind::Series];
                    if let Some((l, t)) = bgn {
                        cfg.model = Some(ModelSpec::BgnRegular { l, delta: 1e-4 });
                        cfg.final_time = Some(t);
                    }
                    (label, run_experiment(&cfg, &out))
                })
            })
            .collect();
        let mut rows = Vec::new();
        for h in handles {
            let (label, result) = h.join().expect("preset thread");
            match result {
                Ok(r) => {
                    for c in r.checks {
                        rows.push(CheckRow {
                            name: format!("{label} ({}): {}", r.status, c.name),
                            ..c
                        });
                    }
                }
                Err(e) => rows.push(error_row(label, e)),
            }
        }
        rows
    })
}

const QUALITATIVE: [(&str, &str, Option<(usize, f64)>); 10] = [
    ("fig5_square", "fig5_square", None),
    ("fig6_oott", "fig6_oott", None),
    ("fig7_almgren_taylor L=2", "fig7_almgren_taylor", Some((2, 16.0))),
    ("fig7_almgren_taylor L=3", "fig7_almgren_taylor", Some((3, 6.4))),
    ("fig7_almgren_taylor L=4", "fig7_almgren_taylor", None),
    ("fig10_cone_homotopic", "fig10_cone_homotopic", None),
    ("fig10_cone_winding", "fig10_cone_winding", None),
    ("fig11_mountains_small", "fig11_mountains_small", None),
    ("fig11_mountains_uneven", "fig11_mountains_uneven", None),
    ("fig12_mountains_stuck", "fig12_mountains_stuck", None),
];

fn criteria() -> Vec<Criterion> {
    type Job = (&'static str, &'static str, fn() -> Vec<CheckRow>);
    let jobs: [Job; 10] = [
        ("1", "error table, elliptic anisotropy with forcing", || {
            table(Suite::Table1)
        }),
        ("2", "error table, cone", || table(Suite::Table2)),
        ("3", "hyperbolic circle at T = 0.14", || {
            preset_runs(&[("fig9_hyperbolic", "fig9_hyperbolic", None)])
        }),
        ("4", "unconditional stability", checks::stability_suite),
        ("5a", "cyclic solve vs dense solve", || vec![checks::cyclic_vs_dense(1)]),
        ("5b", "derivatives and Jacobians vs finite differences", || {
            let mut v = checks::derivative_checks(2, 200);
            v.push(checks::jacobian_checks(3));
            v
        }),
        ("5c", "anisotropic vs geodesic curvature", checks::curvature_agreement),
        ("5d", "H identity", || vec![checks::h_identity(4, 10_000)]),
        ("6", "FDANI and FDBGN coincide for L = 1", || {
            vec![checks::scheme_coincidence(50)]
        }),
        ("7", "qualitative runs complete with monotone energy", || {
            preset_runs(&QUALITATIVE)
        }),
    ];
    let mut out: Vec<Criterion> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(id, title, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let rows = f();
                    Criterion {
                        id,
                        title,
                        rows,
                        seconds: t.elapsed().as_secs_f64(),
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread"))
            .collect()
    });
    // the terminal geodesic curvature of the stuck-curve run is not part of
    // criterion 7 but is reported next to it
    let seventh = out.iter_mut().find(|c| c.id == "7").expect("criterion 7");
    let (energy, geodesic): (Vec<_>, Vec<_>) = seventh.rows.drain(..).partition(|r| r.name.ends_with(ENERGY_CHECK));
    seventh.rows = energy;
    let seconds = seventh.seconds;
    out.push(Criterion {
        id: "7b",
        title: "stuck curve approaches a closed geodesic",
        rows: geodesic,
        seconds,
    });
    out
}

fn main() -> ExitCode {
    // the standard test harness flags are accepted and ignored
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let all = criteria();
    let mut unexpected = Vec::new();
    for c in &all {
        let known = KNOWN_DEVIATIONS.contains(&c.id);
        let tag = match (c.passed(), known) {
            (true, false) | (false, true) => "",
            (true, true) => "  [listed as a known deviation but passed]",
            (false, false) => "  [unexpected]",
        };
        println!(
            "{} {:<3} {} ({} checks, {:.1} s){}{}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            c.rows.len(),
            c.seconds,
            if known && !c.passed() {
                "  [known deviation]"
            } else {
                ""
            },
            tag
        );
        for r in c.rows.iter().filter(|r| !r.passed) {
            println!("       {}: {:.4e} (threshold {:.4e})", r.name, r.value, r.threshold);
        }
        if c.passed() == known {
            unexpected.push(c.id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes: {unexpected:?}");
        ExitCode::FAILURE
    }
}
