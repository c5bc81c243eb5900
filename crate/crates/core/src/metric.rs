//! Riemannian metrics on planar charts, convex splittings, and the geodesic
//! curvature of curves measured in the metric.

use alloc::vec::Vec;

use crate::aniso::{curve_frame, AnisotropyModel};
use crate::error::{Error, Result};
use crate::geom::DiscreteCurve;
use crate::linalg::{Mat2, Vec2};
use crate::math;

/// Radius of the excluded disk around the cone apex.
pub const APEX_EXCLUSION: f64 = 1e-8;

/// Scalar factor `g(z)` of a conformally flat metric `G = g Id`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConformalFactor {
    Constant(f64),
    /// `g(z) = z_1^{-2}` on the half plane `z_1 > 0`.
    Hyperbolic,
}

/// Value, gradient and Hessian of a scalar field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

impl ConformalFactor {
    pub fn contains(&self, z: Vec2) -> bool {
        match self {
            ConformalFactor::Constant(_) => z.is_finite(),
            ConformalFactor::Hyperbolic => z.x > 0.0 && z.is_finite(),
        }
    }

    pub fn jet(&self, z: Vec2) -> Result<ScalarJet> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain { point: z });
        }
        Ok(match *self {
            ConformalFactor::Constant(c) => ScalarJet {
                value: c,
                grad: Vec2::ZERO,
                hess: Mat2::ZERO,
            },
            ConformalFactor::Hyperbolic => {
                let inv = 1.0 / z.x;
                let inv2 = inv * inv;
                ScalarJet {
                    value: inv2,
                    grad: Vec2::new(-2.0 * inv2 * inv, 0.0),
                    hess: Mat2::diag(6.0 * inv2 * inv2, 0.0),
                }
            }
        })
    }
}

/// Height function `phi` of a graph surface `F(z) = (z, phi(z))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeightField {
    /// `phi(z) = slope · z`.
    Plane { slope: Vec2 },
    /// `phi(z) = curvature |z|^2 / 2`.
    Paraboloid { curvature: f64 },
}

/// Derivatives of a height function up to third order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeightJet {
    pub value: f64,
    pub grad: Vec2,
    pub hess: Mat2,
    /// `third[i][j]` is the vector `∂_i ∂_j ∇phi`.
    pub third: [[Vec2; 2]; 2],
}

impl HeightJet {
    fn zero() -> Self {
        HeightJet {
            value: 0.0,
            grad: Vec2::ZERO,
            hess: Mat2::ZERO,
            third: [[Vec2::ZERO; 2]; 2],
        }
    }

    fn add_scaled(&mut self, s: f64, o: &HeightJet) {
        self.value += s * o.value;
        self.grad += o.grad * s;
        self.hess += o.hess * s;
        for i in 0..2 {
            for j in 0..2 {
                self.third[i][j] += o.third[i][j] * s;
            }
        }
    }
}

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Smooth compactly supported bump `psi(s) = exp(-1/(1-s))` for `s < 1`, zero otherwise,
/// together with its first three derivatives.
pub fn bump(s: f64) -> [f64; 4] {
    if !(s < 1.0) {
        return [0.0; 4];
    }
    let u = 1.0 / (1.0 - s);
    let e = math::exp(-u);
    if e == 0.0 {
        return [0.0; 4];
    }
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u2 * u2;
    [
        e,
        -e * u2,
        e * (u4 - 2.0 * u3),
        e * (-u4 * u2 + 6.0 * u4 * u - 6.0 * u4),
    ]
}

/// Jet of `lambda psi(|z - c|^2)`.
fn bump_jet(lambda: f64, center: Vec2, z: Vec2) -> HeightJet {
    let d = z - center;
    let [p0, p1, p2, p3] = bump(d.norm_squared());
    let mut jet = HeightJet::zero();
    if lambda == 0.0 {
        return jet;
    }
    jet.value = lambda * p0;
    jet.grad = d * (2.0 * lambda * p1);
    jet.hess = (Mat2::outer(d, d) * (4.0 * p2) + Mat2::scalar(2.0 * p1)) * lambda;
    for i in 0..2 {
        for j in 0..2 {
            let mut v = Vec2::ZERO;
            for k in 0..2 {
                let c = 8.0 * p3 * d[i] * d[j] * d[k]
                    + 4.0 * p2 * (delta(i, k) * d[j] + delta(j, k) * d[i] + delta(i, j) * d[k]);
                if k == 0 {
                    v.x = c;
                } else {
                    v.y = c;
                }
            }
            jet.third[i][j] = v * lambda;
        }
    }
    jet
}

/// Jet of `b |z|`.
fn cone_jet(b: f64, z: Vec2) -> HeightJet {
    let r = z.norm();
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let mut jet = HeightJet::zero();
    jet.value = b * r;
    jet.grad = z * (b / r);
    jet.hess = (Mat2::scalar(1.0 / r) - Mat2::outer(z, z) * (1.0 / r3)) * b;
    for i in 0..2 {
        for j in 0..2 {
            let mut v = Vec2::ZERO;
            for k in 0..2 {
                let c = -(delta(i, j) * z[k] + delta(i, k) * z[j] + delta(j, k) * z[i]) / r3
                    + 3.0 * z[i] * z[j] * z[k] / r5;
                if k == 0 {
                    v.x = b * c;
                } else {
                    v.y = b * c;
                }
            }
            jet.third[i][j] = v;
        }
    }
    jet
}

/// A Riemannian metric `G(z)` on a planar chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricField {
    /// `G = g(z) Id`.
    Conformal(ConformalFactor),
    /// First fundamental form of the graph of a height function.
    Graph(HeightField),
    /// Right circular cone `phi(z) = b |z|`, singular at the apex.
    Cone { slope: f64 },
    /// Two bumps `lambda_1 psi(|z|^2) + lambda_2 psi(|z - (2,0)|^2)`.
    TwoMountains { lambda1: f64, lambda2: f64 },
}

/// `G`, its first and second partial derivatives, and `det G` at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricJet {
    pub g: Mat2,
    /// `dg[i] = ∂G/∂z_i`.
    pub dg: [Mat2; 2],
    /// `ddg[i][j] = ∂²G/∂z_i∂z_j`.
    pub ddg: [[Mat2; 2]; 2],
    pub det: f64,
}

/// Christoffel symbols, `symbols[k][i][j] = Γ^k_{ij}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChristoffelData {
    pub symbols: [[[f64; 2]; 2]; 2],
}

impl ChristoffelData {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.symbols[k][i][j]
    }

    /// The vector with components `Γ^k_{ij} u_i v_j`.
    pub fn contract(&self, u: Vec2, v: Vec2) -> Vec2 {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    *o += self.symbols[k][i][j] * u[i] * v[j];
                }
            }
        }
        Vec2::new(out[0], out[1])
    }
}

impl MetricField {
    pub fn hyperbolic() -> Self {
        MetricField::Conformal(ConformalFactor::Hyperbolic)
    }

    pub fn flat() -> Self {
        MetricField::Conformal(ConformalFactor::Constant(1.0))
    }

    pub fn cone(slope: f64) -> Result<Self> {
        if !(slope >= 0.0) || !slope.is_finite() {
            return Err(Error::InvalidParameter("cone slope must be nonnegative"));
        }
        Ok(MetricField::Cone { slope })
    }

    pub fn two_mountains(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::InvalidParameter("mountain heights must be nonnegative"));
        }
        Ok(MetricField::TwoMountains { lambda1, lambda2 })
    }

    /// Whether `z` lies in the admissible domain.
    pub fn contains(&self, z: Vec2) -> bool {
        if !z.is_finite() {
            return false;
        }
        match self {
            MetricField::Conformal(f) => f.contains(z),
            MetricField::Cone { .. } => z.norm() > APEX_EXCLUSION,
            MetricField::Graph(_) | MetricField::TwoMountains { .. } => true,
        }
    }

    pub fn is_graph(&self) -> bool {
        !matches!(self, MetricField::Conformal(_))
    }

    /// Height function jet for graph-type metrics.
    pub fn height(&self, z: Vec2) -> Result<HeightJet> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain { point: z });
        }
        match *self {
            MetricField::Conformal(_) => Err(Error::InvalidParameter("a conformal metric has no graph embedding")),
            MetricField::Graph(HeightField::Plane { slope }) => {
                let mut jet = HeightJet::zero();
                jet.value = slope.dot(z);
                jet.grad = slope;
                Ok(jet)
            }
            MetricField::Graph(HeightField::Paraboloid { curvature }) => {
                let mut jet = HeightJet::zero();
                jet.value = 0.5 * curvature * z.norm_squared();
                jet.grad = z * curvature;
                jet.hess = Mat2::scalar(curvature);
                Ok(jet)
            }
            MetricField::Cone { slope } => Ok(cone_jet(slope, z)),
            MetricField::TwoMountains { lambda1, lambda2 } => {
                let mut jet = bump_jet(lambda1, Vec2::ZERO, z);
                jet.add_scaled(1.0, &bump_jet(lambda2, Vec2::new(2.0, 0.0), z));
                Ok(jet)
            }
        }
    }

    /// `G(z)` with its first and second derivatives.
    pub fn eval(&self, z: Vec2) -> Result<MetricJet> {
        if !self.contains(z) {
            return Err(Error::OutsideDomain { point: z });
        }
        let jet = match self {
            MetricField::Conformal(f) => {
                let s = f.jet(z)?;
                MetricJet {
                    g: Mat2::scalar(s.value),
                    dg: [Mat2::scalar(s.grad.x), Mat2::scalar(s.grad.y)],
                    ddg: [
                        [Mat2::scalar(s.hess.m11), Mat2::scalar(s.hess.m12)],
                        [Mat2::scalar(s.hess.m21), Mat2::scalar(s.hess.m22)],
                    ],
                    det: s.value * s.value,
                }
            }
            _ => {
                let h = self.height(z)?;
                let n = h.grad;
                let g = Mat2::IDENTITY + Mat2::outer(n, n);
                let di = [h.hess.row(0), h.hess.row(1)];
                let dg = [
                    Mat2::outer(di[0], n) + Mat2::outer(n, di[0]),
                    Mat2::outer(di[1], n) + Mat2::outer(n, di[1]),
                ];
                let mut ddg = [[Mat2::ZERO; 2]; 2];
                for (i, row) in ddg.iter_mut().enumerate() {
                    for (j, entry) in row.iter_mut().enumerate() {
                        let t = h.third[i][j];
                        *entry = Mat2::outer(t, n)
                            + Mat2::outer(di[i], di[j])
                            + Mat2::outer(di[j], di[i])
                            + Mat2::outer(n, t);
                    }
                }
                MetricJet {
                    g,
                    dg,
                    ddg,
                    det: 1.0 + n.norm_squared(),
                }
            }
        };
        Ok(jet)
    }

    /// Christoffel symbols of the second kind from the analytic metric derivatives.
    pub fn christoffel(&self, z: Vec2) -> Result<ChristoffelData> {
        let jet = self.eval(z)?;
        let ginv = jet.g.inverse().ok_or(Error::OutsideDomain { point: z })?;
        let mut symbols = [[[0.0; 2]; 2]; 2];
        // first kind: [ij, l] = 1/2 (g_{li,j} + g_{lj,i} - g_{ij,l})
        for (k, sk) in symbols.iter_mut().enumerate() {
            for (i, si) in sk.iter_mut().enumerate() {
                for (j, sij) in si.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for l in 0..2 {
                        let first = 0.5 * (jet.dg[j].get(l, i) + jet.dg[i].get(l, j) - jet.dg[l].get(i, j));
                        acc += ginv.get(k, l) * first;
                    }
                    *sij = acc;
                }
            }
        }
        Ok(ChristoffelData { symbols })
    }

    /// Geodesic curvature at a point of a smooth curve with parameter derivatives `x_rho`, `x_rhorho`.
    pub fn geodesic_curvature_at(&self, x: Vec2, x_rho: Vec2, x_rhorho: Vec2) -> Result<f64> {
        let speed2 = x_rho.norm_squared();
        if !(speed2 > 0.0) {
            return Err(Error::ZeroDirection);
        }
        let jet = self.eval(x)?;
        let ginv = jet.g.inverse().ok_or(Error::OutsideDomain { point: x })?;
        let tau = x_rho * (1.0 / math::sqrt(speed2));
        let nu = tau.perp();
        let kappa = x_rhorho.dot(nu) / speed2;
        let gamma = math::sqrt(ginv.quad(nu));
        let christ = self.christoffel(x)?;
        let correction = christ.contract(tau, tau).dot(nu);
        Ok((kappa + correction) / (gamma * jet.g.quad(tau)))
    }

    /// Nodal geodesic curvature of a discrete curve using central differences.
    pub fn geodesic_curvature(&self, curve: &DiscreteCurve) -> Result<Vec<f64>> {
        curve.check_nondegenerate()?;
        (0..curve.len())
            .map(|j| {
                let (x, d1, d2) = curve_frame(curve, j);
                self.geodesic_curvature_at(x, d1, d2).map_err(|e| match e {
                    Error::OutsideDomain { point } => Error::NodeOutsideDomain { node: j, point },
                    other => other,
                })
            })
            .collect()
    }

    /// Lift nodes through `F(z) = (z_1, z_2, phi(z))`.
    pub fn graph_embed(&self, curve: &DiscreteCurve) -> Result<Vec<[f64; 3]>> {
        if !self.is_graph() {
            return Err(Error::InvalidParameter("a conformal metric has no graph embedding"));
        }
        curve
            .positions()
            .iter()
            .enumerate()
            .map(|(j, &z)| {
                self.height(z)
                    .map(|h| [z.x, z.y, h.value])
                    .map_err(|_| Error::NodeOutsideDomain { node: j, point: z })
            })
            .collect()
    }

    /// The anisotropy whose weighted energy is the Riemannian length.
    pub fn induced_anisotropy(&self) -> AnisotropyModel {
        AnisotropyModel::MetricInduced(*self)
    }
}

/// Decomposition `G = G_+ + G_-` with `G_+` treated implicitly and `G_-` explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Splitting {
    /// `G_+ = G + c|z|^2 Id`, `G_- = -c|z|^2 Id`; `c = 0` treats `G` fully implicitly.
    Shifted { c: f64 },
    /// `G_+ = 0`, `G_- = G`: the metric derivative is frozen at `x^m`.
    Explicit,
}

impl Default for Splitting {
    fn default() -> Self {
        Splitting::Shifted { c: 0.0 }
    }
}

impl Splitting {
    pub fn shifted(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter("splitting shift must be nonnegative"));
        }
        Ok(Splitting::Shifted { c })
    }

    /// Whether `G_+` depends on the unknown.
    pub fn is_implicit(&self) -> bool {
        matches!(self, Splitting::Shifted { .. })
    }

    fn shift_jet(c: f64, z: Vec2) -> MetricJet {
        let s = c * z.norm_squared();
        MetricJet {
            g: Mat2::scalar(s),
            dg: [Mat2::scalar(2.0 * c * z.x), Mat2::scalar(2.0 * c * z.y)],
            ddg: [[Mat2::scalar(2.0 * c), Mat2::ZERO], [Mat2::ZERO, Mat2::scalar(2.0 * c)]],
            det: s * s,
        }
    }

    fn zero_jet() -> MetricJet {
        MetricJet {
            g: Mat2::ZERO,
            dg: [Mat2::ZERO; 2],
            ddg: [[Mat2::ZERO; 2]; 2],
            det: 0.0,
        }
    }

    /// `G_+` with derivatives.
    pub fn plus(&self, field: &MetricField, z: Vec2) -> Result<MetricJet> {
        match *self {
            Splitting::Explicit => Ok(Self::zero_jet()),
            Splitting::Shifted { c } => {
                let mut g = field.eval(z)?;
                if c != 0.0 {
                    let s = Self::shift_jet(c, z);
                    g.g += s.g;
                    for i in 0..2 {
                        g.dg[i] += s.dg[i];
                        for j in 0..2 {
                            g.ddg[i][j] += s.ddg[i][j];
                        }
                    }
                    g.det = g.g.det();
                }
                Ok(g)
            }
        }
    }

    /// `G_-` with derivatives.
    pub fn minus(&self, field: &MetricField, z: Vec2) -> Result<MetricJet> {
        match *self {
            Splitting::Explicit => field.eval(z),
            Splitting::Shifted { c } => {
                if !field.contains(z) {
                    return Err(Error::OutsideDomain { point: z });
                }
                let mut s = Self::shift_jet(c, z);
                s.g = -s.g;
                for i in 0..2 {
                    s.dg[i] = -s.dg[i];
                    for j in 0..2 {
                        s.ddg[i][j] = -s.ddg[i][j];
                    }
                }
                s.det = s.g.det();
                Ok(s)
            }
        }
    }
}
