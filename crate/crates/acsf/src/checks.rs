//! Invariant suites run by `acsf check` and the acceptance tests.

use std::f64::consts::TAU;

use acsf_core::metric::ConformalFactor;
use acsf_core::schemes::{run_flow, step, StepSystem};
use acsf_core::solver::cyclic_solve;
use acsf_core::{
    AnisotropyModel, BgnAnisotropy, CyclicBlockTridiagonal, DiscreteCurve, Mat2, MetricField, Scheme, SchemeConfig,
    Vec2,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{CheckRow, ENERGY_SLACK};

/// A model with the scheme that runs it and a circle inside its domain.
#[derive(Clone, Debug)]
pub struct Bundled {
    pub name: &'static str,
    pub scheme: Scheme,
    pub model: AnisotropyModel,
    pub center: Vec2,
    pub radius: f64,
}

impl Bundled {
    pub fn circle(&self, nodes: usize) -> DiscreteCurve {
        DiscreteCurve::circle(nodes, self.center, self.radius).expect("valid circle")
    }

    /// Point sampler for the model's domain.
    fn sample_z(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        match &self.model {
            AnisotropyModel::MetricInduced(MetricField::Conformal(ConformalFactor::Hyperbolic)) => {
                Vec2::new(rng.gen_range(0.5..3.0), rng.gen_range(-2.0..2.0))
            }
            AnisotropyModel::MetricInduced(MetricField::Cone { .. }) => {
                Vec2::from_angle(rng.gen_range(0.0..TAU)) * rng.gen_range(0.2..2.0)
            }
            AnisotropyModel::MetricInduced(MetricField::TwoMountains { .. }) => {
                Vec2::new(rng.gen_range(-1.5..3.5), rng.gen_range(-1.5..1.5))
            }
            _ => Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        }
    }
}

pub fn bundled_models() -> Vec<Bundled> {
    let b = |name, scheme, model| Bundled {
        name,
        scheme,
        model,
        center: Vec2::ZERO,
        radius: 1.0,
    };
    let regular = |l, d| AnisotropyModel::Bgn(BgnAnisotropy::regular(l, d).expect("valid"));
    let metric = |m: MetricField| m.induced_anisotropy();
    vec![
        b("isotropic", Scheme::Fdani, AnisotropyModel::Isotropic),
        b(
            "kfold3",
            Scheme::Fdani,
            AnisotropyModel::smooth_k_fold(3, 0.124).expect("valid"),
        ),
        b(
            "kfold6",
            Scheme::Fdani,
            AnisotropyModel::smooth_k_fold(6, 0.028).expect("valid"),
        ),
        b(
            "elliptic",
            Scheme::Fdani,
            AnisotropyModel::elliptic(0.5).expect("valid"),
        ),
        b(
            "elliptic",
            Scheme::Fdbgn,
            AnisotropyModel::elliptic(0.5).expect("valid"),
        ),
        b("bgn_L2", Scheme::Fdbgn, regular(2, 1e-2)),
        b("bgn_L4", Scheme::Fdbgn, regular(4, 1e-4)),
        b(
            "cone",
            Scheme::Fdriem,
            metric(MetricField::cone(3f64.sqrt()).expect("valid")),
        ),
        Bundled {
            center: Vec2::new(2.5, 0.0),
            radius: 1.4,
            ..b(
                "cone_offset",
                Scheme::Fdriem,
                metric(MetricField::cone(3f64.sqrt()).expect("valid")),
            )
        },
        Bundled {
            radius: 2.0,
            ..b(
                "mountains_1_1",
                Scheme::Fdriem,
                metric(MetricField::two_mountains(1.0, 1.0).expect("valid")),
            )
        },
        Bundled {
            radius: 2.0,
            ..b(
                "mountains_5_1",
                Scheme::Fdriem,
                metric(MetricField::two_mountains(5.0, 1.0).expect("valid")),
            )
        },
        Bundled {
            radius: 2.0,
            ..b(
                "mountains_5_5",
                Scheme::Fdriem,
                metric(MetricField::two_mountains(5.0, 5.0).expect("valid")),
            )
        },
        Bundled {
            center: Vec2::new(2.0, 0.0),
            ..b("hyperbolic", Scheme::Fdriem, metric(MetricField::hyperbolic()))
        },
        Bundled {
            center: Vec2::new(2.0, 0.0),
            ..b("hyperbolic", Scheme::Fdhypbol, metric(MetricField::hyperbolic()))
        },
    ]
}

pub const STABILITY_STEPS: [f64; 3] = [1e-4, 1e-2, 1.0];
pub const STABILITY_NODES: [usize; 2] = [16, 64];

/// Worst relative energy increase over 20 steps from a circle, per model,
/// over all time steps and meshes. Runs that fail to step are reported as failures.
pub fn stability_suite() -> Vec<CheckRow> {
    bundled_models()
        .iter()
        .map(|m| {
            let name = format!("stability {} {}", m.scheme.name(), m.name);
            let mut worst = 0.0f64;
            for dt in STABILITY_STEPS {
                for nodes in STABILITY_NODES {
                    let config = match SchemeConfig::new(m.scheme, m.model.clone(), dt, 20.0 * dt) {
                        Ok(c) => c,
                        Err(_) => return CheckRow::below(name, f64::INFINITY, ENERGY_SLACK),
                    };
                    match run_flow(m.circle(nodes), &config, |_, _| Ok(())) {
                        Ok(t) => {
                            for w in t.records.windows(2) {
                                worst = worst.max((w[1].energy - w[0].energy) / w[0].energy.abs());
                            }
                        }
                        Err(e) => {
                            return CheckRow {
                                name: format!("{name} (dt={dt}, J={nodes}: {e})"),
                                value: f64::INFINITY,
                                threshold: ENERGY_SLACK,
                                passed: false,
                            }
                        }
                    }
                }
            }
            CheckRow {
                passed: worst <= ENERGY_SLACK,
                ..CheckRow::below(name, worst, ENERGY_SLACK)
            }
        })
        .collect()
}

fn random_mat(rng: &mut ChaCha8Rng) -> Mat2 {
    Mat2::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

/// Random cyclic system with diagonal shift keeping it away from singularity.
pub fn random_cyclic(rng: &mut ChaCha8Rng, n: usize) -> CyclicBlockTridiagonal {
    let mut a = CyclicBlockTridiagonal::zeros(n).expect("n >= 3");
    for i in 0..n {
        a.lower[i] = random_mat(rng);
        a.upper[i] = random_mat(rng);
        a.diag[i] = random_mat(rng) + Mat2::scalar(rng.gen_range(2.5..4.0));
    }
    a
}

/// Dense LU solve as an oracle for the cyclic solver.
pub fn dense_solve(a: &CyclicBlockTridiagonal, rhs: &[Vec2]) -> Option<Vec<Vec2>> {
    let d = a.to_dense();
    let n = d.len();
    let m = DMatrix::from_fn(n, n, |r, c| d[r][c]);
    let b = DVector::from_iterator(n, rhs.iter().flat_map(|v| [v.x, v.y]));
    let x = m.lu().solve(&b)?;
    Some((0..n / 2).map(|i| Vec2::new(x[2 * i], x[2 * i + 1])).collect())
}

fn max_rel(a: &[Vec2], b: &[Vec2]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.max_abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((*x - *y).max_abs())) / scale.max(f64::MIN_POSITIVE)
}

/// Cyclic solve against dense LU for J = 3..=32.
pub fn cyclic_vs_dense(seed: u64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in 3..=32 {
        for _ in 0..4 {
            let a = random_cyclic(&mut rng, n);
            let rhs: Vec<Vec2> = (0..n)
                .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let fast = match cyclic_solve(&a, &rhs) {
                Ok(x) => x,
                Err(_) => return CheckRow::below("cyclic solve vs dense LU", f64::INFINITY, 1e-10),
            };
            let Some(dense) = dense_solve(&a, &rhs) else { continue };
            worst = worst.max(max_rel(&fast, &dense));
        }
    }
    CheckRow {
        passed: worst <= 1e-10,
        ..CheckRow::below("cyclic solve vs dense LU", worst, 1e-10)
    }
}

/// Tracks the worst scaled discrepancy of a family of comparisons.
struct Worst(f64);

impl Worst {
    fn scalar(&mut self, analytic: f64, fd: f64) {
        self.0 = self.0.max((analytic - fd).abs() / (1.0 + analytic.abs()));
    }

    fn vec(&mut self, analytic: Vec2, fd: Vec2) {
        self.scalar(analytic.x, fd.x);
        self.scalar(analytic.y, fd.y);
    }

    fn mat(&mut self, analytic: Mat2, fd: Mat2) {
        for i in 0..2 {
            for j in 0..2 {
                self.scalar(analytic.get(i, j), fd.get(i, j));
            }
        }
    }
}

const FD_STEP: f64 = 1e-5;
pub const FIRST_ORDER_TOL: f64 = 1e-6;
pub const SECOND_ORDER_TOL: f64 = 1e-5;

fn central<T, F>(f: F, x: Vec2, k: usize) -> T
where
    F: Fn(Vec2) -> T,
    T: core::ops::Sub<Output = T> + core::ops::Mul<f64, Output = T>,
{
    let e = Vec2::unit(k) * FD_STEP;
    (f(x + e) - f(x - e)) * (0.5 / FD_STEP)
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::from_angle(rng.gen_range(0.0..TAU)) * rng.gen_range(0.5..2.0)
}

/// Analytic derivatives of `gamma`, `Phi` and `G` against central differences.
pub fn derivative_checks(seed: u64, samples: usize) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g1, mut g2, mut p1, mut p2, mut m1, mut m2, mut chr) = (
        Worst(0.0),
        Worst(0.0),
        Worst(0.0),
        Worst(0.0),
        Worst(0.0),
        Worst(0.0),
        Worst(0.0),
    );
    let mut errors = Vec::new();
    for m in bundled_models() {
        if m.name == "bgn_L4" {
            // the 1e-4 regularization puts third derivatives out of reach of differences
            continue;
        }
        for _ in 0..samples {
            let z = m.sample_z(&mut rng);
            let p = random_direction(&mut rng);
            let mut run = || -> acsf_core::Result<()> {
                let model = &m.model;
                let d = model.density_jet(z, p)?;
                let dens_p = |q: Vec2| model.density(z, q).unwrap_or(f64::NAN);
                let dens_z = |y: Vec2| model.density(y, p).unwrap_or(f64::NAN);
                let gp = |q: Vec2| {
                    model
                        .density_jet(z, q)
                        .map(|j| j.grad_p)
                        .unwrap_or(Vec2::new(f64::NAN, f64::NAN))
                };
                let gpz = |y: Vec2| {
                    model
                        .density_jet(y, p)
                        .map(|j| j.grad_p)
                        .unwrap_or(Vec2::new(f64::NAN, f64::NAN))
                };
                for k in 0..2 {
                    g1.scalar(d.grad_p[k], central(dens_p, p, k));
                    g1.scalar(d.grad_z[k], central(dens_z, z, k));
                }
                g2.mat(d.hess_p, Mat2::from_cols(central(gp, p, 0), central(gp, p, 1)));
                g2.mat(d.mixed, Mat2::from_cols(central(gpz, z, 0), central(gpz, z, 1)));

                let phi = model.phi_jet(z, p)?;
                let f_p = |q: Vec2| model.phi(z, q).unwrap_or(f64::NAN);
                let f_z = |y: Vec2| model.phi(y, p).unwrap_or(f64::NAN);
                let fp = |q: Vec2| {
                    model
                        .phi_jet(z, q)
                        .map(|j| j.grad_p)
                        .unwrap_or(Vec2::new(f64::NAN, f64::NAN))
                };
                let fpz = |y: Vec2| {
                    model
                        .phi_jet(y, p)
                        .map(|j| j.grad_p)
                        .unwrap_or(Vec2::new(f64::NAN, f64::NAN))
                };
                for k in 0..2 {
                    p1.scalar(phi.grad_p[k], central(f_p, p, k));
                    p1.scalar(phi.grad_z[k], central(f_z, z, k));
                }
                if let (Some(h), Some(mx)) = (phi.hess_p, phi.mixed) {
                    p2.mat(h, Mat2::from_cols(central(fp, p, 0), central(fp, p, 1)));
                    p2.mat(mx, Mat2::from_cols(central(fpz, z, 0), central(fpz, z, 1)));
                }

                if let AnisotropyModel::MetricInduced(field) = model {
                    let jet = field.eval(z)?;
                    let g = |y: Vec2| field.eval(y).map(|j| j.g).unwrap_or(Mat2::new(f64::NAN, 0.0, 0.0, 0.0));
                    for i in 0..2 {
                        m1.mat(jet.dg[i], central(g, z, i));
                        let dgi = |y: Vec2| {
                            field
                                .eval(y)
                                .map(|j| j.dg[i])
                                .unwrap_or(Mat2::new(f64::NAN, 0.0, 0.0, 0.0))
                        };
                        for j in 0..2 {
                            m2.mat(jet.ddg[i][j], central(dgi, z, j));
                        }
                    }
                    // Γ^k_ij = ½ G^{kl} (∂_i G_lj + ∂_j G_li - ∂_l G_ij) from differenced G
                    let dg = [central(g, z, 0), central(g, z, 1)];
                    let ginv = jet.g.inverse().ok_or(acsf_core::Error::OutsideDomain { point: z })?;
                    let c = field.christoffel(z)?;
                    for k in 0..2 {
                        for i in 0..2 {
                            for j in 0..2 {
                                let mut s = 0.0;
                                for l in 0..2 {
                                    s += 0.5 * ginv.get(k, l) * (dg[i].get(l, j) + dg[j].get(l, i) - dg[l].get(i, j));
                                }
                                chr.scalar(c.get(k, i, j), s);
                            }
                        }
                    }
                }
                Ok(())
            };
            if let Err(e) = run() {
                errors.push(format!("{} at {:?}: {e}", m.name, z));
            }
        }
    }
    let row = |name: &str, w: Worst, tol: f64| CheckRow {
        name: name.into(),
        value: if errors.is_empty() { w.0 } else { f64::INFINITY },
        threshold: tol,
        passed: errors.is_empty() && w.0 <= tol,
    };
    vec![
        row("gamma first derivatives", g1, FIRST_ORDER_TOL),
        row("gamma second derivatives", g2, SECOND_ORDER_TOL),
        row("Phi first derivatives", p1, FIRST_ORDER_TOL),
        row("Phi second derivatives", p2, SECOND_ORDER_TOL),
        row("G first derivatives", m1, FIRST_ORDER_TOL),
        row("G second derivatives", m2, SECOND_ORDER_TOL),
        row("Christoffel symbols", chr, SECOND_ORDER_TOL),
    ]
}

/// Newton Jacobians of every scheme against differenced residuals.
pub fn jacobian_checks(seed: u64) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Worst(0.0);
    let mut failed = false;
    for m in bundled_models() {
        if m.name == "bgn_L4" {
            continue;
        }
        let nodes = 8;
        let wobble: Vec<Vec2> = m
            .circle(nodes)
            .positions()
            .iter()
            .map(|x| *x + Vec2::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
            .collect();
        let old = DiscreteCurve::new(wobble, 0.0).expect("valid");
        let Ok(config) = SchemeConfig::new(m.scheme, m.model.clone(), 1e-2, 1.0) else {
            failed = true;
            continue;
        };
        let Ok(sys) = StepSystem::new(&config, &old, 1e-2) else {
            failed = true;
            continue;
        };
        let x: Vec<Vec2> = old
            .positions()
            .iter()
            .map(|p| *p + Vec2::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)))
            .collect();
        let (Ok(jac), Ok(_)) = (sys.jacobian(&x), sys.residual(&x)) else {
            failed = true;
            continue;
        };
        let dense = jac.to_dense();
        for col in 0..2 * nodes {
            let shift = |s: f64| {
                let mut y = x.clone();
                if col % 2 == 0 {
                    y[col / 2].x += s;
                } else {
                    y[col / 2].y += s;
                }
                sys.residual(&y)
            };
            let (Ok(rp), Ok(rm)) = (shift(FD_STEP), shift(-FD_STEP)) else {
                failed = true;
                continue;
            };
            for row in 0..nodes {
                let fd = (rp[row] - rm[row]) * (0.5 / FD_STEP);
                w.vec(Vec2::new(dense[2 * row][col], dense[2 * row + 1][col]), fd);
            }
        }
    }
    CheckRow {
        name: "scheme Jacobians".into(),
        value: if failed { f64::INFINITY } else { w.0 },
        threshold: SECOND_ORDER_TOL,
        passed: !failed && w.0 <= SECOND_ORDER_TOL,
    }
}

/// Smooth test curve `c + (1 + 0.2 cos 4πρ)(r cos 2πρ, r sin 2πρ)` with exact derivatives.
fn smooth_curve(c: Vec2, r: f64, rho: f64) -> [Vec2; 3] {
    let (t, u) = (TAU * rho, 2.0 * TAU * rho);
    let s = 1.0 + 0.2 * u.cos();
    let s1 = -0.2 * 2.0 * TAU * u.sin();
    let s2 = -0.2 * 4.0 * TAU * TAU * u.cos();
    let e = Vec2::new(t.cos(), t.sin()) * r;
    let e1 = Vec2::new(-t.sin(), t.cos()) * (r * TAU);
    let e2 = e * (-TAU * TAU);
    [c + e * s, e1 * s + e * s1, e2 * s + e1 * (2.0 * s1) + e * s2]
}

/// Discrete anisotropic and geodesic curvatures of metric-induced models:
/// they agree to roundoff and both converge to the exact geodesic curvature.
pub fn curvature_agreement() -> Vec<CheckRow> {
    let levels = [32usize, 64, 128, 256];
    let mut rows = Vec::new();
    for m in bundled_models() {
        let AnisotropyModel::MetricInduced(field) = m.model else {
            continue;
        };
        if m.scheme == Scheme::Fdhypbol {
            continue;
        }
        let r = 0.6 * m.radius;
        let mut errs = Vec::new();
        let mut gap = 0.0f64;
        let mut failed = false;
        for &n in &levels {
            let pts = (0..n)
                .map(|j| smooth_curve(m.center, r, j as f64 / n as f64)[0])
                .collect();
            let curve = DiscreteCurve::new(pts, 0.0).expect("valid");
            let (Ok(ka), Ok(kg)) = (m.model.anisotropic_curvature(&curve), field.geodesic_curvature(&curve)) else {
                failed = true;
                break;
            };
            let mut err = 0.0f64;
            for j in 0..n {
                let [x, d1, d2] = smooth_curve(m.center, r, j as f64 / n as f64);
                let Ok(exact) = field.geodesic_curvature_at(x, d1, d2) else {
                    failed = true;
                    break;
                };
                err = err.max((ka[j] - exact).abs());
                gap = gap.max((ka[j] - kg[j]).abs() / (1.0 + kg[j].abs()));
            }
            errs.push(err);
        }
        let order = if failed || errs.len() < 2 {
            f64::NAN
        } else {
            (errs[errs.len() - 2] / errs[errs.len() - 1]).ln() / 2f64.ln()
        };
        rows.push(CheckRow {
            name: format!("curvature order {}", m.name),
            value: order,
            threshold: 1.9,
            passed: !failed && order >= 1.9,
        });
        rows.push(CheckRow {
            name: format!("anisotropic vs geodesic curvature {}", m.name),
            value: if failed { f64::INFINITY } else { gap },
            threshold: 1e-10,
            passed: !failed && gap <= 1e-10,
        });
    }
    rows
}

/// `H w · w = a^2 gamma^2 / |gamma_p|^2 |w|^2` at random samples, with the
/// right-hand side in closed form from `G` for metric-induced models.
pub fn h_identity(seed: u64, samples: usize) -> CheckRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = bundled_models();
    let mut worst = 0.0f64;
    let mut failed = false;
    for k in 0..samples {
        let m = &models[k % models.len()];
        let z = m.sample_z(&mut rng);
        let p = random_direction(&mut rng);
        let w = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let rhs = || -> acsf_core::Result<f64> {
            Ok(match &m.model {
                AnisotropyModel::MetricInduced(field) => {
                    let g = field.eval(z)?;
                    let gp = g.g * p;
                    g.det * g.g.quad(p) * g.g.quad(p) / gp.norm_squared() * w.norm_squared()
                }
                model => {
                    let (a, _) = model.weight(z)?;
                    let d = model.density_jet(z, p.perp())?;
                    a * a * d.value * d.value / d.grad_p.norm_squared() * w.norm_squared()
                }
            })
        };
        match (m.model.h_matrix(z, p), rhs()) {
            (Ok(h), Ok(r)) => worst = worst.max((h.quad(w) - r).abs() / r.abs().max(f64::MIN_POSITIVE)),
            _ => failed = true,
        }
    }
    CheckRow {
        name: "H quadratic form identity".into(),
        value: if failed { f64::INFINITY } else { worst },
        threshold: 1e-12,
        passed: !failed && worst <= 1e-12,
    }
}

/// FDANI and FDBGN trajectories for a single-matrix BGN model.
pub fn scheme_coincidence(steps: usize) -> CheckRow {
    let model =
        AnisotropyModel::Bgn(BgnAnisotropy::new(vec![Mat2::new(1.0, 0.3, 0.3, 0.5)]).expect("positive definite"));
    let pts: Vec<Vec2> = (0..64)
        .map(|j| {
            let [x, ..] = smooth_curve(Vec2::ZERO, 1.0, j as f64 / 64.0);
            x
        })
        .collect();
    let dt = 1e-3;
    let run = || -> acsf_core::Result<f64> {
        let a = SchemeConfig::new(Scheme::Fdani, model.clone(), dt, steps as f64 * dt)?.with_steps(steps);
        let b = SchemeConfig::new(Scheme::Fdbgn, model.clone(), dt, steps as f64 * dt)?.with_steps(steps);
        let mut ca = DiscreteCurve::new(pts.clone(), 0.0)?;
        let mut cb = ca.clone();
        let mut worst = 0.0f64;
        for _ in 0..steps {
            ca = step(&a, &ca)?.curve;
            cb = step(&b, &cb)?.curve;
            worst = worst.max(ca.max_distance(&cb)?);
        }
        Ok(worst)
    };
    let value = run().unwrap_or(f64::INFINITY);
    CheckRow::below(format!("FDANI vs FDBGN, L = 1, {steps} steps"), value, 1e-8)
}

/// Every suite with its default sample sizes.
pub fn all_checks() -> Vec<CheckRow> {
    let mut rows = stability_suite();
    rows.push(cyclic_vs_dense(1));
    rows.extend(derivative_checks(2, 200));
    rows.push(jacobian_checks(3));
    rows.extend(curvature_agreement());
    rows.push(h_identity(4, 10_000));
    rows.push(scheme_coincidence(50));
    rows
}
