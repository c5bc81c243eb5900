//! Anisotropic densities `gamma(z, p)` with spatial weight `a(z)`, the derived
//! quantities `Phi`, `H` and `B`, duals and Wulff shapes, and convexity checks.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::DiscreteCurve;
use crate::linalg::{Mat2, Vec2};
use crate::math;
use crate::metric::MetricField;

/// Density `gamma(z, p)` together with its first and second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityJet {
    pub value: f64,
    pub grad_p: Vec2,
    pub hess_p: Mat2,
    pub grad_z: Vec2,
    /// Entry `(i, j)` is `∂²gamma/∂p_i∂z_j`.
    pub mixed: Mat2,
}

/// `Phi(z, p) = a(z)^2 gamma(z, p^⊥)^2 / 2` and its derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiJet {
    pub value: f64,
    pub grad_p: Vec2,
    pub grad_z: Vec2,
    /// Undefined at `p = 0`.
    pub hess_p: Option<Mat2>,
    /// Entry `(i, j)` is `∂²Phi/∂p_i∂z_j`; undefined at `p = 0`.
    pub mixed: Option<Mat2>,
}

/// A sum of elliptic norms `gamma_0(p) = Σ sqrt(Λ_l p · p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BgnAnisotropy {
    matrices: Vec<Mat2>,
    tilde: Vec<Mat2>,
    tilde_sum: Mat2,
}

impl BgnAnisotropy {
    /// Validates that every matrix is symmetric positive definite.
    pub fn new(matrices: Vec<Mat2>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidParameter("BGN anisotropy needs at least one matrix"));
        }
        for m in &matrices {
            if !m.is_finite() || (m.m12 - m.m21).abs() > 1e-12 * m.max_abs() {
                return Err(Error::InvalidParameter("BGN matrices must be symmetric"));
            }
            if !(m.sym_eigenvalues().0 > 0.0) {
                return Err(Error::InvalidParameter("BGN matrices must be positive definite"));
            }
        }
        let tilde: Vec<Mat2> = matrices.iter().map(Mat2::adjugate).collect();
        let tilde_sum = tilde.iter().fold(Mat2::ZERO, |acc, &m| acc + m);
        Ok(BgnAnisotropy {
            matrices,
            tilde,
            tilde_sum,
        })
    }

    /// `gamma_0(p) = sqrt(p_1^2 + delta^2 p_2^2)`.
    pub fn elliptic(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be positive"));
        }
        Self::new(alloc::vec![Mat2::diag(1.0, delta * delta)])
    }

    /// `L` rotated copies of `diag(1, delta^2)` at angles `l pi / L`.
    pub fn regular(l: usize, delta: f64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("L must be at least 1"));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be positive"));
        }
        let d = Mat2::diag(1.0, delta * delta);
        let matrices = (1..=l)
            .map(|k| {
                let q = Mat2::rotation(PI * k as f64 / l as f64);
                q.transpose() * d * q
            })
            .collect();
        Self::new(matrices)
    }

    pub fn matrices(&self) -> &[Mat2] {
        &self.matrices
    }

    /// `det(Λ_l) Λ_l^{-1}` for each `l`.
    pub fn tilde_matrices(&self) -> &[Mat2] {
        &self.tilde
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    fn jet(&self, p: Vec2) -> (f64, Vec2, Mat2) {
        let mut value = 0.0;
        let mut grad = Vec2::ZERO;
        let mut hess = Mat2::ZERO;
        for m in &self.matrices {
            let mp = *m * p;
            let s = math::sqrt(mp.dot(p));
            value += s;
            grad += mp * (1.0 / s);
            hess += *m * (1.0 / s) - Mat2::outer(mp, mp) * (1.0 / (s * s * s));
        }
        (value, grad, hess)
    }

    /// The matrix `B(p)` with `B(p) p = Phi_0'(p)`.
    pub fn b_matrix(&self, p: Vec2) -> Mat2 {
        if p == Vec2::ZERO {
            return self.tilde_sum * self.len() as f64;
        }
        let mut gamma = 0.0;
        let mut acc = Mat2::ZERO;
        for t in &self.tilde {
            let s = math::sqrt(t.quad(p));
            gamma += s;
            acc += *t * (1.0 / s);
        }
        acc * gamma
    }
}

/// Result of a convexity certification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Convexity {
    Convex,
    /// A unit direction `p` at which `gamma_pp q · q <= 0` for `q ⊥ p`.
    Violated {
        direction: Vec2,
    },
}

impl Convexity {
    pub fn is_convex(&self) -> bool {
        matches!(self, Convexity::Convex)
    }
}

/// The anisotropy families supported by the schemes.
#[derive(Clone, Debug, PartialEq)]
pub enum AnisotropyModel {
    Isotropic,
    /// `gamma_0(p) = |p| (1 + delta cos(k theta))` in polar coordinates.
    SmoothKFold {
        k: u32,
        delta: f64,
    },
    Bgn(BgnAnisotropy),
    /// `gamma(z, p) = sqrt(G^{-1}(z) p · p)` with weight `a(z) = sqrt(det G(z))`.
    MetricInduced(MetricField),
}

const CONVEXITY_DIRECTIONS: usize = 720;

impl AnisotropyModel {
    pub fn smooth_k_fold(k: u32, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("k must be at least 2"));
        }
        if !(delta >= 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in [0, 1)"));
        }
        Ok(AnisotropyModel::SmoothKFold { k, delta })
    }

    pub fn elliptic(delta: f64) -> Result<Self> {
        BgnAnisotropy::elliptic(delta).map(AnisotropyModel::Bgn)
    }

    pub fn is_space_independent(&self) -> bool {
        !matches!(self, AnisotropyModel::MetricInduced(_))
    }

    pub fn as_bgn(&self) -> Option<&BgnAnisotropy> {
        match self {
            AnisotropyModel::Bgn(b) => Some(b),
            _ => None,
        }
    }

    /// Weight `a(z)` and its gradient.
    pub fn weight(&self, z: Vec2) -> Result<(f64, Vec2)> {
        match self {
            AnisotropyModel::MetricInduced(field) => {
                let jet = field.eval(z)?;
                let ginv = jet.g.inverse().ok_or(Error::OutsideDomain { point: z })?;
                let a = math::sqrt(jet.det);
                let grad = Vec2::new(
                    0.5 * (ginv * jet.dg[0]).trace() * a,
                    0.5 * (ginv * jet.dg[1]).trace() * a,
                );
                Ok((a, grad))
            }
            _ => Ok((1.0, Vec2::ZERO)),
        }
    }

    /// `gamma(z, p)` alone.
    pub fn density(&self, z: Vec2, p: Vec2) -> Result<f64> {
        match self {
            AnisotropyModel::Isotropic => Ok(p.norm()),
            AnisotropyModel::SmoothKFold { k, delta } => {
                Ok(p.norm() * (1.0 + delta * math::cos(*k as f64 * p.angle())))
            }
            AnisotropyModel::Bgn(b) => Ok(b.matrices.iter().map(|m| math::sqrt(m.quad(p))).sum()),
            AnisotropyModel::MetricInduced(field) => {
                let jet = field.eval(z)?;
                let ginv = jet.g.inverse().ok_or(Error::OutsideDomain { point: z })?;
                Ok(math::sqrt(ginv.quad(p).max(0.0)))
            }
        }
    }

    /// `gamma` and all first and second derivatives needed by the schemes.
    pub fn density_jet(&self, z: Vec2, p: Vec2) -> Result<DensityJet> {
        if p == Vec2::ZERO || !p.is_finite() {
            return Err(Error::ZeroDirection);
        }
        let (value, grad_p, hess_p) = match self {
            AnisotropyModel::Isotropic => {
                let r = p.norm();
                let u = p * (1.0 / r);
                (r, u, (Mat2::IDENTITY - Mat2::outer(u, u)) * (1.0 / r))
            }
            AnisotropyModel::SmoothKFold { k, delta } => {
                let r = p.norm();
                let theta = p.angle();
                let kf = *k as f64;
                let (s, c) = (math::sin(kf * theta), math::cos(kf * theta));
                let f = 1.0 + delta * c;
                let f1 = -kf * delta * s;
                let f2 = -kf * kf * delta * c;
                let er = p * (1.0 / r);
                let et = er.perp();
                (r * f, er * f + et * f1, Mat2::outer(et, et) * ((f + f2) / r))
            }
            AnisotropyModel::Bgn(b) => b.jet(p),
            AnisotropyModel::MetricInduced(field) => {
                let jet = field.eval(z)?;
                let ginv = jet.g.inverse().ok_or(Error::OutsideDomain { point: z })?;
                let gp = ginv * p;
                let gamma = math::sqrt(gp.dot(p));
                let hess = ginv * (1.0 / gamma) - Mat2::outer(gp, gp) * (1.0 / (gamma * gamma * gamma));
                let mut grad_z = Vec2::ZERO;
                let mut cols = [Vec2::ZERO; 2];
                for j in 0..2 {
                    let dginv = -(ginv * jet.dg[j] * ginv);
                    let dp = dginv * p;
                    let q = dp.dot(p);
                    let gz = q / (2.0 * gamma);
                    if j == 0 {
                        grad_z.x = gz;
                    } else {
                        grad_z.y = gz;
                    }
                    cols[j] = dp * (1.0 / gamma) - gp * (0.5 * q / (gamma * gamma * gamma));
                }
                return Ok(DensityJet {
                    value: gamma,
                    grad_p: gp * (1.0 / gamma),
                    hess_p: hess,
                    grad_z,
                    mixed: Mat2::from_cols(cols[0], cols[1]),
                });
            }
        };
        Ok(DensityJet {
            value,
            grad_p,
            hess_p,
            grad_z: Vec2::ZERO,
            mixed: Mat2::ZERO,
        })
    }

    /// `Phi(z, p)` and its derivatives; defined for all `p`, with the second
    /// derivatives left out at `p = 0`.
    pub fn phi_jet(&self, z: Vec2, p: Vec2) -> Result<PhiJet> {
        let (a, grad_a) = self.weight(z)?;
        if p == Vec2::ZERO {
            return Ok(PhiJet {
                value: 0.0,
                grad_p: Vec2::ZERO,
                grad_z: Vec2::ZERO,
                hess_p: None,
                mixed: None,
            });
        }
        let q = p.perp();
        let d = self.density_jet(z, q)?;
        let a2 = a * a;
        let g = d.value;
        // ∇_p gamma(z, R p) = R^T gamma_p and R^T v = -v^⊥
        let rt = |v: Vec2| -v.perp();
        let r = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let grad_p = rt(d.grad_p) * (a2 * g);
        let hess_p = r.transpose() * (Mat2::outer(d.grad_p, d.grad_p) + d.hess_p * g) * r * a2;
        let grad_z = d.grad_z * (a2 * g) + grad_a * (a * g * g);
        let mut cols = [Vec2::ZERO; 2];
        for (j, col) in cols.iter_mut().enumerate() {
            let v = d.grad_p * (2.0 * a * grad_a[j] * g) + d.grad_p * (a2 * d.grad_z[j]) + d.mixed.col(j) * (a2 * g);
            *col = rt(v);
        }
        Ok(PhiJet {
            value: 0.5 * a2 * g * g,
            grad_p,
            grad_z,
            hess_p: Some(hess_p),
            mixed: Some(Mat2::from_cols(cols[0], cols[1])),
        })
    }

    /// `Phi(z, p)` alone, zero at `p = 0`.
    pub fn phi(&self, z: Vec2, p: Vec2) -> Result<f64> {
        if p == Vec2::ZERO {
            self.weight(z)?;
            return Ok(0.0);
        }
        let (a, _) = self.weight(z)?;
        let g = self.density(z, p.perp())?;
        Ok(0.5 * a * a * g * g)
    }

    /// The DeTurck matrix `H(z, p)`.
    pub fn h_matrix(&self, z: Vec2, p: Vec2) -> Result<Mat2> {
        if p == Vec2::ZERO {
            return Err(Error::ZeroDirection);
        }
        let (a, _) = self.weight(z)?;
        let q = p.perp();
        let d = self.density_jet(z, q)?;
        let s = d.grad_p.dot(p);
        let pre = a * a * d.value / d.grad_p.norm_squared();
        Ok(Mat2::new(d.value, s, -s, d.value) * pre)
    }

    /// Coefficient `alpha` with `H(z, p) w · w = alpha |w|^2`.
    pub fn h_coercivity(&self, z: Vec2, p: Vec2) -> Result<f64> {
        let (a, _) = self.weight(z)?;
        let d = self.density_jet(z, p.perp())?;
        Ok(a * a * d.value * d.value / d.grad_p.norm_squared())
    }

    /// `B(p)` of a BGN model.
    pub fn b_matrix(&self, p: Vec2) -> Result<Mat2> {
        self.as_bgn()
            .map(|b| b.b_matrix(p))
            .ok_or(Error::InvalidParameter("B is defined for BGN anisotropies only"))
    }

    fn require_space_independent(&self) -> Result<()> {
        if self.is_space_independent() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "operation needs a space-independent anisotropy",
            ))
        }
    }

    /// Dual `gamma_0^*(q) = max_{|p| = 1} p · q / gamma_0(p)`.
    pub fn dual(&self, q: Vec2) -> Result<f64> {
        self.require_space_independent()?;
        if q == Vec2::ZERO {
            return Ok(0.0);
        }
        let f = |theta: f64| {
            let p = Vec2::from_angle(theta);
            p.dot(q) / self.density(Vec2::ZERO, p).unwrap_or(f64::INFINITY)
        };
        const GRID: usize = 2048;
        let step = 2.0 * PI / GRID as f64;
        let (mut best, mut best_val) = (0.0, f64::NEG_INFINITY);
        for i in 0..GRID {
            let t = i as f64 * step;
            let v = f(t);
            if v > best_val {
                best = t;
                best_val = v;
            }
        }
        // golden-section refinement on the bracketing cells
        let inv_phi = 0.5 * (math::sqrt(5.0) - 1.0);
        let (mut lo, mut hi) = (best - step, best + step);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = f(d);
            }
        }
        Ok(best_val.max(fc).max(fd))
    }

    /// `n` points on the boundary of the Wulff shape `{gamma_0^* <= 1}`.
    pub fn sample_wulff(&self, n: usize) -> Result<Vec<Vec2>> {
        self.require_space_independent()?;
        (0..n)
            .map(|i| {
                let u = Vec2::from_angle(2.0 * PI * i as f64 / n as f64);
                self.dual(u).map(|s| u * (1.0 / s))
            })
            .collect()
    }

    /// `n` points on the boundary of the Frank diagram `{gamma_0 <= 1}`.
    pub fn sample_frank(&self, n: usize) -> Result<Vec<Vec2>> {
        self.require_space_independent()?;
        (0..n)
            .map(|i| {
                let u = Vec2::from_angle(2.0 * PI * i as f64 / n as f64);
                self.density(Vec2::ZERO, u).map(|g| u * (1.0 / g))
            })
            .collect()
    }

    /// Strict convexity of `gamma(z, ·)` at the given point.
    pub fn assert_convex_at(&self, z: Vec2) -> Result<Convexity> {
        if let AnisotropyModel::SmoothKFold { k, delta } = self {
            let kf = *k as f64;
            return Ok(if *delta < 1.0 / (kf * kf - 1.0) {
                Convexity::Convex
            } else {
                let theta = PI / kf;
                Convexity::Violated {
                    direction: Vec2::from_angle(theta),
                }
            });
        }
        for i in 0..CONVEXITY_DIRECTIONS {
            let p = Vec2::from_angle(2.0 * PI * i as f64 / CONVEXITY_DIRECTIONS as f64);
            let d = self.density_jet(z, p)?;
            if !(d.hess_p.quad(p.perp()) > 0.0) {
                return Ok(Convexity::Violated { direction: p });
            }
        }
        Ok(Convexity::Convex)
    }

    /// Strict convexity, checked at the origin of the chart for space-dependent models.
    pub fn assert_convex(&self) -> Convexity {
        let z = match self {
            AnisotropyModel::MetricInduced(MetricField::Conformal(crate::metric::ConformalFactor::Hyperbolic)) => {
                Vec2::new(1.0, 0.0)
            }
            AnisotropyModel::MetricInduced(MetricField::Cone { .. }) => Vec2::new(1.0, 0.0),
            _ => Vec2::ZERO,
        };
        self.assert_convex_at(z)
            .unwrap_or(Convexity::Violated { direction: Vec2::ZERO })
    }

    /// Anisotropic curvature at a point of a smooth curve.
    pub fn anisotropic_curvature_at(&self, x: Vec2, x_rho: Vec2, x_rhorho: Vec2) -> Result<f64> {
        let speed2 = x_rho.norm_squared();
        if !(speed2 > 0.0) {
            return Err(Error::ZeroDirection);
        }
        let tau = x_rho * (1.0 / math::sqrt(speed2));
        let nu = tau.perp();
        let kappa = x_rhorho.dot(nu) / speed2;
        let d = self.density_jet(x, nu)?;
        let (a, grad_a) = self.weight(x)?;
        Ok(kappa * d.hess_p.quad(tau) - d.mixed.trace() - grad_a.dot(d.grad_p) / a)
    }

    /// Nodal anisotropic curvature from central differences.
    pub fn anisotropic_curvature(&self, curve: &DiscreteCurve) -> Result<Vec<f64>> {
        curve.check_nondegenerate()?;
        (0..curve.len())
            .map(|j| {
                let (x, d1, d2) = curve_frame(curve, j);
                self.anisotropic_curvature_at(x, d1, d2).map_err(|e| match e {
                    Error::OutsideDomain { point } => Error::NodeOutsideDomain { node: j, point },
                    other => other,
                })
            })
            .collect()
    }
}

/// Node position with central first and second differences.
pub(crate) fn curve_frame(curve: &DiscreteCurve, j: usize) -> (Vec2, Vec2, Vec2) {
    let mesh = curve.mesh();
    let h = mesh.h();
    let x = curve.node(j);
    let xp = curve.node(mesh.next(j));
    let xm = curve.node(mesh.prev(j));
    (x, (xp - xm) * (0.5 / h), (xp - x * 2.0 + xm) * (1.0 / (h * h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn isotropic_density() {
        let m = AnisotropyModel::Isotropic;
        let d = m.density_jet(Vec2::new(7.0, -1.0), Vec2::new(3.0, 4.0)).unwrap();
        assert!(close(d.value, 5.0, 1e-15));
        assert!((d.grad_p - Vec2::new(0.6, 0.8)).max_abs() < 1e-15);
        assert_eq!(d.grad_z, Vec2::ZERO);
    }

    #[test]
    fn k_fold_on_axis() {
        let m = AnisotropyModel::smooth_k_fold(3, 0.124).unwrap();
        assert!(close(m.density(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap(), 1.124, 1e-15));
    }

    #[test]
    fn elliptic_minor_axis() {
        let m = AnisotropyModel::elliptic(0.5).unwrap();
        assert!(close(m.density(Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn zero_direction_rejected() {
        let m = AnisotropyModel::Isotropic;
        assert_eq!(m.density_jet(Vec2::ZERO, Vec2::ZERO), Err(Error::ZeroDirection));
        assert!(m.h_matrix(Vec2::ZERO, Vec2::ZERO).is_err());
        let phi = m.phi_jet(Vec2::ZERO, Vec2::ZERO).unwrap();
        assert_eq!(phi.value, 0.0);
        assert!(phi.hess_p.is_none());
    }

    #[test]
    fn elliptic_phi_gradient() {
        let m = AnisotropyModel::elliptic(0.5).unwrap();
        let p = Vec2::new(1.0, 2.0);
        let j = m.phi_jet(Vec2::ZERO, p).unwrap();
        assert!(close(j.value, 0.5 * (4.0 + 0.25), 1e-14));
        assert!((j.grad_p - Vec2::new(0.25, 2.0)).max_abs() < 1e-14);
    }

    #[test]
    fn h_matrix_examples() {
        let iso = AnisotropyModel::Isotropic;
        let h = iso.h_matrix(Vec2::ZERO, Vec2::new(0.0, 2.0)).unwrap();
        assert!((h - Mat2::scalar(4.0)).max_abs() < 1e-14);
        let ell = AnisotropyModel::elliptic(0.5).unwrap();
        let h = ell.h_matrix(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((h - Mat2::IDENTITY).max_abs() < 1e-14);
    }

    #[test]
    fn b_matrix_examples() {
        let iso = BgnAnisotropy::new(alloc::vec![Mat2::IDENTITY]).unwrap();
        assert!((iso.b_matrix(Vec2::new(0.3, -2.0)) - Mat2::IDENTITY).max_abs() < 1e-14);
        let two = BgnAnisotropy::regular(2, 0.3).unwrap();
        let s = two.tilde_matrices()[0] + two.tilde_matrices()[1];
        assert!((two.b_matrix(Vec2::ZERO) - s * 2.0).max_abs() < 1e-15);
    }

    #[test]
    fn bgn_rejects_indefinite() {
        assert!(BgnAnisotropy::new(alloc::vec![Mat2::diag(1.0, -1.0)]).is_err());
        assert!(BgnAnisotropy::new(alloc::vec![Mat2::new(1.0, 0.5, 0.0, 1.0)]).is_err());
        assert!(BgnAnisotropy::new(alloc::vec![]).is_err());
    }

    #[test]
    fn duals() {
        let iso = AnisotropyModel::Isotropic;
        assert!(close(iso.dual(Vec2::new(3.0, 4.0)).unwrap(), 5.0, 1e-12));
        let ell = AnisotropyModel::elliptic(0.5).unwrap();
        assert!(close(ell.dual(Vec2::new(0.0, 1.0)).unwrap(), 2.0, 1e-10));
    }

    #[test]
    fn convexity_threshold() {
        assert!(AnisotropyModel::smooth_k_fold(6, 0.028)
            .unwrap()
            .assert_convex()
            .is_convex());
        assert!(!AnisotropyModel::smooth_k_fold(6, 0.2)
            .unwrap()
            .assert_convex()
            .is_convex());
        assert!(AnisotropyModel::Bgn(BgnAnisotropy::regular(4, 1e-4).unwrap())
            .assert_convex()
            .is_convex());
    }

    #[test]
    fn circle_curvature() {
        let c = DiscreteCurve::circle(256, Vec2::new(1.0, 1.0), 2.0).unwrap();
        let k = AnisotropyModel::Isotropic.anisotropic_curvature(&c).unwrap();
        assert!(k.iter().all(|v| (v - 0.5).abs() < 1e-4));
    }
}
