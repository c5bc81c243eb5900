//! Fully discrete schemes: assembly of the nonlinear (or linear) system for one
//! implicit time step, the step itself, and the time loop.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::aniso::AnisotropyModel;
use crate::error::{Error, Result};
use crate::geom::{ratio, DiscreteCurve};
use crate::linalg::{Mat2, Vec2};
use crate::math;
use crate::metric::{MetricField, Splitting};
use crate::solver::{cyclic_solve, max_norm, newton_solve, CyclicBlockTridiagonal, NewtonSettings};

/// The four fully discrete schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Space-independent anisotropy, implicit `Phi_0'`, solved by Newton.
    Fdani,
    /// BGN anisotropy with the frozen matrix `B`; one linear solve per step.
    Fdbgn,
    /// Riemannian metric with lumped `G(x^m)` stiffness and split gradient term.
    Fdriem,
    /// Conformally flat metric `G = g Id`.
    Fdhypbol,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Fdani, Scheme::Fdbgn, Scheme::Fdriem, Scheme::Fdhypbol];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fdani => "fdani",
            Scheme::Fdbgn => "fdbgn",
            Scheme::Fdriem => "fdriem",
            Scheme::Fdhypbol => "fdhypbol",
        }
    }
}

/// Right hand side making the shrinking ellipse an exact solution of the
/// forced flow for the elliptic anisotropy with parameter `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedForcing {
    pub delta: f64,
}

impl ManufacturedForcing {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be positive"));
        }
        Ok(ManufacturedForcing { delta })
    }

    /// `f = H_0(x_ρ) x_t - [Phi_0'(x_ρ)]_ρ` on the exact solution.
    pub fn eval(&self, rho: f64, t: f64) -> Result<Vec2> {
        if !(t < 0.5) {
            return Err(Error::PastExtinction(t));
        }
        let d = self.delta;
        let s = math::sqrt(1.0 - 2.0 * t);
        let (sn, cs) = (math::sin(TAU * rho), math::cos(TAU * rho));
        let x_rho = Vec2::new(-sn, d * cs) * (TAU * s);
        let x_rhorho = Vec2::new(cs, d * sn) * (-TAU * TAU * s);
        let x_t = Vec2::new(cs, d * sn) * (-1.0 / s);
        let h0 = AnisotropyModel::elliptic(d)?.h_matrix(Vec2::ZERO, x_rho)?;
        Ok(h0 * x_t - Vec2::new(d * d * x_rhorho.x, x_rhorho.y))
    }
}

/// Everything needed to advance a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// For `Fdriem` and `Fdhypbol` this must be `MetricInduced`.
    pub model: AnisotropyModel,
    pub splitting: Splitting,
    pub dt: f64,
    pub steps: usize,
    pub newton: NewtonSettings,
    pub forcing: Option<ManufacturedForcing>,
}

impl SchemeConfig {
    /// `steps = ceil(final_time / dt)`, treating ratios within `1e-9` of an integer as exact.
    pub fn new(scheme: Scheme, model: AnisotropyModel, dt: f64, final_time: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        if !(final_time >= 0.0) || !final_time.is_finite() {
            return Err(Error::InvalidParameter("final time must be nonnegative"));
        }
        let config = SchemeConfig {
            scheme,
            model,
            splitting: Splitting::default(),
            dt,
            steps: step_count(final_time, dt),
            newton: NewtonSettings::default(),
            forcing: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_forcing(mut self, forcing: ManufacturedForcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn final_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn metric(&self) -> Option<&MetricField> {
        match &self.model {
            AnisotropyModel::MetricInduced(f) => Some(f),
            _ => None,
        }
    }

    /// Checks that the model fits the scheme.
    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        match self.scheme {
            Scheme::Fdani if !self.model.is_space_independent() => {
                Err(Error::InvalidParameter("fdani needs a space-independent anisotropy"))
            }
            Scheme::Fdbgn if self.model.as_bgn().is_none() => {
                Err(Error::InvalidParameter("fdbgn needs a BGN anisotropy"))
            }
            Scheme::Fdriem if self.metric().is_none() => {
                Err(Error::InvalidParameter("fdriem needs a metric-induced model"))
            }
            Scheme::Fdhypbol if !matches!(self.metric(), Some(MetricField::Conformal(_))) => {
                Err(Error::InvalidParameter("fdhypbol needs a conformally flat metric"))
            }
            _ if self.forcing.is_some() && self.scheme != Scheme::Fdani => Err(Error::InvalidParameter(
                "manufactured forcing is only available for fdani",
            )),
            _ => Ok(()),
        }
    }
}

/// Number of uniform steps covering `[0, final_time]`.
pub fn step_count(final_time: f64, dt: f64) -> usize {
    let r = final_time / dt;
    let n = math::round(r);
    if (r - n).abs() <= 1e-9 * r.max(1.0) {
        n as usize
    } else {
        math::ceil(r) as usize
    }
}

/// Lumped energy `(Phi(x, x_ρ), 1)^h`.
pub fn lumped_energy(model: &AnisotropyModel, curve: &DiscreteCurve) -> Result<f64> {
    let mesh = curve.mesh();
    let h = mesh.h();
    let mut sum = 0.0;
    for e in 0..mesh.len() {
        let d = curve.chord(e) * (1.0 / h);
        let (a, b) = (curve.node(e), curve.node(mesh.next(e)));
        sum += node_phi(model, a, d, e)? + node_phi(model, b, d, mesh.next(e))?;
    }
    Ok(0.5 * h * sum)
}

fn node_phi(model: &AnisotropyModel, z: Vec2, p: Vec2, node: usize) -> Result<f64> {
    model.phi(z, p).map_err(|e| locate(e, node))
}

fn locate(e: Error, node: usize) -> Error {
    match e {
        Error::OutsideDomain { point } => Error::NodeOutsideDomain { node, point },
        other => other,
    }
}

/// The system `F(x^{m+1}) = 0` of one time step, frozen at `x^m`.
#[derive(Clone, Debug)]
pub struct StepSystem<'a> {
    config: &'a SchemeConfig,
    old: &'a [Vec2],
    h: f64,
    /// Lumped nodal mass divided by `dt`.
    mass: Vec<Mat2>,
    /// Per element: `B(d^m_e)` for fdbgn, averaged `G(x^m)` for the metric schemes.
    stiffness: Vec<Mat2>,
    /// Per node: `G_{-,z_l}(x^m_i)`.
    explicit_grad: Vec<[Mat2; 2]>,
    /// Per node: `h f(q_i, t_{m+1})`.
    load: Vec<Vec2>,
}

impl<'a> StepSystem<'a> {
    pub fn new(config: &'a SchemeConfig, old: &'a DiscreteCurve, t_next: f64) -> Result<Self> {
        config.validate()?;
        old.check_nondegenerate()?;
        let mesh = old.mesh();
        let n = mesh.len();
        let h = mesh.h();
        let x = old.positions();
        let d: Vec<Vec2> = (0..n).map(|e| old.chord(e) * (1.0 / h)).collect();
        let model = &config.model;
        let inv_dt = 1.0 / config.dt;

        let mut mass = Vec::with_capacity(n);
        for i in 0..n {
            let prev = mesh.prev(i);
            let m = match config.scheme {
                Scheme::Fdani | Scheme::Fdbgn => {
                    model.h_matrix(Vec2::ZERO, d[prev])? + model.h_matrix(Vec2::ZERO, d[i])?
                }
                Scheme::Fdriem => {
                    let a = model.h_matrix(x[i], d[prev]).map_err(|e| locate(e, i))?;
                    a + model.h_matrix(x[i], d[i]).map_err(|e| locate(e, i))?
                }
                Scheme::Fdhypbol => {
                    let g = conformal_value(config, x[i], i)?;
                    Mat2::scalar(g * g * (d[prev].norm_squared() + d[i].norm_squared()))
                }
            };
            mass.push(m * (0.5 * h * inv_dt));
        }

        let mut stiffness = Vec::new();
        let mut explicit_grad = Vec::new();
        match config.scheme {
            Scheme::Fdani => {}
            Scheme::Fdbgn => {
                let bgn = model.as_bgn().expect("validated");
                stiffness = d.iter().map(|&p| bgn.b_matrix(p)).collect();
            }
            Scheme::Fdriem | Scheme::Fdhypbol => {
                let field = config.metric().expect("validated");
                let g: Vec<Mat2> = x
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| field.eval(z).map(|j| j.g).map_err(|e| locate(e, i)))
                    .collect::<Result<_>>()?;
                stiffness = (0..n).map(|e| (g[e] + g[mesh.next(e)]) * 0.5).collect();
                explicit_grad = x
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| config.splitting.minus(field, z).map(|j| j.dg).map_err(|e| locate(e, i)))
                    .collect::<Result<_>>()?;
            }
        }

        let load = match &config.forcing {
            Some(f) => (0..n)
                .map(|i| f.eval(mesh.node(i), t_next).map(|v| v * h))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };

        Ok(StepSystem {
            config,
            old: x,
            h,
            mass,
            stiffness,
            explicit_grad,
            load,
        })
    }

    /// Whether one linear solve yields the exact step.
    pub fn is_linear(&self) -> bool {
        match self.config.scheme {
            Scheme::Fdbgn => true,
            Scheme::Fdani => matches!(self.config.model, AnisotropyModel::Isotropic),
            // the gradient term is quadratic in x^{m+1}_ρ for either splitting
            Scheme::Fdriem | Scheme::Fdhypbol => false,
        }
    }

    fn len(&self) -> usize {
        self.old.len()
    }

    fn chords(&self, x: &[Vec2]) -> Result<Vec<Vec2>> {
        let n = self.len();
        if x.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        Ok((0..n).map(|e| (x[(e + 1) % n] - x[e]) * (1.0 / self.h)).collect())
    }

    /// Nodal residual `F(x)`.
    pub fn residual(&self, x: &[Vec2]) -> Result<Vec<Vec2>> {
        let n = self.len();
        let d = self.chords(x)?;
        let mut r: Vec<Vec2> = (0..n).map(|i| self.mass[i] * (x[i] - self.old[i])).collect();
        match self.config.scheme {
            Scheme::Fdani => {
                let flux: Vec<Vec2> = d
                    .iter()
                    .map(|&p| self.config.model.phi_jet(Vec2::ZERO, p).map(|j| j.grad_p))
                    .collect::<Result<_>>()?;
                for i in 0..n {
                    r[i] += flux[(i + n - 1) % n] - flux[i];
                }
            }
            Scheme::Fdbgn => {
                for i in 0..n {
                    let prev = (i + n - 1) % n;
                    r[i] += self.stiffness[prev] * d[prev] - self.stiffness[i] * d[i];
                }
            }
            Scheme::Fdriem | Scheme::Fdhypbol => {
                let field = self.config.metric().expect("validated");
                for i in 0..n {
                    let prev = (i + n - 1) % n;
                    r[i] += self.stiffness[prev] * d[prev] - self.stiffness[i] * d[i];
                    let plus = self.config.splitting.plus(field, x[i]).map_err(|e| locate(e, i))?;
                    let mut g = [0.0; 2];
                    for (l, gl) in g.iter_mut().enumerate() {
                        let s = plus.dg[l] + self.explicit_grad[i][l];
                        *gl = 0.25 * self.h * (s.quad(d[prev]) + s.quad(d[i]));
                    }
                    r[i] += Vec2::new(g[0], g[1]);
                }
            }
        }
        for (ri, li) in r.iter_mut().zip(&self.load) {
            *ri -= *li;
        }
        Ok(r)
    }

    /// Analytic Jacobian of [`residual`](Self::residual).
    pub fn jacobian(&self, x: &[Vec2]) -> Result<CyclicBlockTridiagonal> {
        let n = self.len();
        let d = self.chords(x)?;
        let mut a = CyclicBlockTridiagonal::zeros(n)?;
        a.diag.copy_from_slice(&self.mass);
        let inv_h = 1.0 / self.h;
        let stiff: Vec<Mat2> = match self.config.scheme {
            Scheme::Fdani => d
                .iter()
                .enumerate()
                .map(|(e, &p)| {
                    self.config
                        .model
                        .phi_jet(Vec2::ZERO, p)?
                        .hess_p
                        .ok_or(Error::DegenerateElement { element: e })
                })
                .collect::<Result<_>>()?,
            _ => self.stiffness.clone(),
        };
        for i in 0..n {
            let prev = (i + n - 1) % n;
            a.diag[i] += (stiff[prev] + stiff[i]) * inv_h;
            a.lower[i] -= stiff[prev] * inv_h;
            a.upper[i] -= stiff[i] * inv_h;
        }
        if matches!(self.config.scheme, Scheme::Fdriem | Scheme::Fdhypbol) {
            let field = self.config.metric().expect("validated");
            for i in 0..n {
                let prev = (i + n - 1) % n;
                let plus = self.config.splitting.plus(field, x[i]).map_err(|e| locate(e, i))?;
                let mut diag_rows = [Vec2::ZERO; 2];
                let mut lower_rows = [Vec2::ZERO; 2];
                let mut upper_rows = [Vec2::ZERO; 2];
                for l in 0..2 {
                    let s = plus.dg[l] + self.explicit_grad[i][l];
                    let (sp, si) = (s * d[prev], s * d[i]);
                    let curv = Vec2::new(
                        plus.ddg[l][0].quad(d[prev]) + plus.ddg[l][0].quad(d[i]),
                        plus.ddg[l][1].quad(d[prev]) + plus.ddg[l][1].quad(d[i]),
                    );
                    diag_rows[l] = curv * (0.25 * self.h) + (sp - si) * 0.5;
                    lower_rows[l] = sp * -0.5;
                    upper_rows[l] = si * 0.5;
                }
                a.diag[i] += Mat2::from_cols(diag_rows[0], diag_rows[1]).transpose();
                a.lower[i] += Mat2::from_cols(lower_rows[0], lower_rows[1]).transpose();
                a.upper[i] += Mat2::from_cols(upper_rows[0], upper_rows[1]).transpose();
            }
        }
        Ok(a)
    }
}

fn conformal_value(config: &SchemeConfig, z: Vec2, node: usize) -> Result<f64> {
    match config.metric() {
        Some(MetricField::Conformal(f)) => f.jet(z).map(|j| j.value).map_err(|e| locate(e, node)),
        _ => Err(Error::InvalidParameter("fdhypbol needs a conformally flat metric")),
    }
}

/// Result of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub curve: DiscreteCurve,
    pub energy_before: f64,
    pub energy_after: f64,
    pub newton_iterations: usize,
    /// Max norm of the assembled residual at the accepted solution.
    pub residual: f64,
}

/// Advances `curve` by one step of the configured scheme.
pub fn step(config: &SchemeConfig, curve: &DiscreteCurve) -> Result<StepReport> {
    let t_next = curve.time() + config.dt;
    let system = StepSystem::new(config, curve, t_next)?;
    let energy_before = lumped_energy(&config.model, curve)?;
    let (positions, iterations, residual) = if system.is_linear() {
        let x0 = curve.positions();
        let jac = system.jacobian(x0)?;
        let f0 = system.residual(x0)?;
        let neg: Vec<Vec2> = f0.iter().map(|v| -*v).collect();
        let dx = cyclic_solve(&jac, &neg)?;
        let x: Vec<Vec2> = x0.iter().zip(&dx).map(|(a, b)| *a + *b).collect();
        let r = max_norm(&system.residual(&x)?);
        (x, 1, r)
    } else {
        let out = newton_solve(
            |x| system.residual(x),
            |x| system.jacobian(x),
            curve.positions().to_vec(),
            &config.newton,
        )?;
        (out.solution, out.iterations, out.residual)
    };
    let next = DiscreteCurve::new(positions, t_next)?;
    let energy_after = lumped_energy(&config.model, &next)?;
    Ok(StepReport {
        curve: next,
        energy_before,
        energy_after,
        newton_iterations: iterations,
        residual,
    })
}

/// Convenience wrappers naming the individual schemes.
pub fn step_fdani(
    curve: &DiscreteCurve,
    model: &AnisotropyModel,
    dt: f64,
    forcing: Option<ManufacturedForcing>,
) -> Result<StepReport> {
    let mut config = SchemeConfig::new(Scheme::Fdani, model.clone(), dt, dt)?;
    config.forcing = forcing;
    step(&config, curve)
}

pub fn step_fdbgn(curve: &DiscreteCurve, model: &AnisotropyModel, dt: f64) -> Result<StepReport> {
    step(&SchemeConfig::new(Scheme::Fdbgn, model.clone(), dt, dt)?, curve)
}

pub fn step_fdriem(
    curve: &DiscreteCurve,
    field: &MetricField,
    dt: f64,
    splitting: Splitting,
    newton: NewtonSettings,
) -> Result<StepReport> {
    let mut config = SchemeConfig::new(Scheme::Fdriem, field.induced_anisotropy(), dt, dt)?.with_splitting(splitting);
    config.newton = newton;
    step(&config, curve)
}

pub fn step_fdhypbol(
    curve: &DiscreteCurve,
    field: &MetricField,
    dt: f64,
    splitting: Splitting,
    newton: NewtonSettings,
) -> Result<StepReport> {
    let mut config = SchemeConfig::new(Scheme::Fdhypbol, field.induced_anisotropy(), dt, dt)?.with_splitting(splitting);
    config.newton = newton;
    step(&config, curve)
}

/// Summary of one time level of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub ratio: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowStatus {
    Completed,
    /// The curve shrank below resolution before the final time.
    Extinct,
}

impl FlowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowStatus::Completed => "completed",
            FlowStatus::Extinct => "extinct",
        }
    }
}

/// Records of every time level plus the final curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub curve: DiscreteCurve,
    pub status: FlowStatus,
}

pub const EXTINCT_ELEMENT: f64 = 1e-10;
pub const EXTINCT_ENERGY: f64 = 1e-12;

/// Runs `config.steps` steps; `observer` sees every time level including the initial one.
pub fn run_flow<O>(initial: DiscreteCurve, config: &SchemeConfig, mut observer: O) -> Result<Trajectory>
where
    O: FnMut(&DiscreteCurve, &StepRecord) -> Result<()>,
{
    config.validate()?;
    initial.check_nondegenerate()?;
    let first = StepRecord {
        step: 0,
        time: initial.time(),
        energy: lumped_energy(&config.model, &initial)?,
        ratio: ratio(&initial)?,
        newton_iterations: 0,
        residual: 0.0,
    };
    observer(&initial, &first).map_err(|e| e.at_step(0))?;
    let mut records = alloc::vec![first];
    let mut curve = initial;
    let mut status = FlowStatus::Completed;
    for m in 1..=config.steps {
        if curve.min_element_length() < EXTINCT_ELEMENT || records.last().map_or(false, |r| r.energy < EXTINCT_ENERGY) {
            status = FlowStatus::Extinct;
            break;
        }
        let report = step(config, &curve).map_err(|e| e.at_step(m))?;
        let rec = StepRecord {
            step: m,
            time: report.curve.time(),
            energy: report.energy_after,
            ratio: ratio(&report.curve).unwrap_or(f64::INFINITY),
            newton_iterations: report.newton_iterations,
            residual: report.residual,
        };
        curve = report.curve;
        observer(&curve, &rec).map_err(|e| e.at_step(m))?;
        records.push(rec);
    }
    Ok(Trajectory { records, curve, status })
}
