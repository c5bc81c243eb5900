//! Closed-form solutions used as references in convergence experiments.

use core::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::ParametricCurve;
use crate::linalg::Vec2;
use crate::math;

/// Shrinking exact solutions with explicit parameterizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExactSolution {
    /// `x = (1-2t)^{1/2} (cos 2πρ, δ sin 2πρ)`, a shrinking Wulff shape of the elliptic anisotropy.
    WulffEllipse { delta: f64 },
    /// `x = (r0^2 - 2t/(1+b^2))^{1/2} (cos 2πρ, sin 2πρ)` on the cone of slope `b`.
    ConeCircle { slope: f64, r0: f64 },
    /// Translating and shrinking circles in the hyperbolic half plane.
    HyperbolicCircle { a0: f64, r0: f64 },
}

/// An exact solution frozen at a time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactAt {
    solution: ExactSolution,
    t: f64,
}

impl ExactSolution {
    pub fn extinction_time(&self) -> f64 {
        match *self {
            ExactSolution::WulffEllipse { .. } => 0.5,
            ExactSolution::ConeCircle { slope, r0 } => 0.5 * r0 * r0 * (1.0 + slope * slope),
            ExactSolution::HyperbolicCircle { a0, r0 } => {
                // r(t)^2 = r0^2 - a0^2 (1 - e^{-2t}) vanishes
                let q = 1.0 - r0 * r0 / (a0 * a0);
                if q <= 0.0 {
                    f64::INFINITY
                } else {
                    -0.5 * math::ln(q)
                }
            }
        }
    }

    pub fn at(&self, t: f64) -> Result<ExactAt> {
        if !(t >= 0.0) || t >= self.extinction_time() {
            return Err(Error::PastExtinction(t));
        }
        Ok(ExactAt { solution: *self, t })
    }

    /// Scale factor `s(t)` and its time derivative.
    fn scale(&self, t: f64) -> (f64, f64) {
        match *self {
            ExactSolution::WulffEllipse { .. } => {
                let s = math::sqrt(1.0 - 2.0 * t);
                (s, -1.0 / s)
            }
            ExactSolution::ConeCircle { slope, r0 } => {
                let c = 1.0 / (1.0 + slope * slope);
                let s = math::sqrt(r0 * r0 - 2.0 * c * t);
                (s, -c / s)
            }
            ExactSolution::HyperbolicCircle { a0, r0 } => {
                let e2 = math::exp(-2.0 * t);
                let s = math::sqrt(r0 * r0 - a0 * a0 * (1.0 - e2));
                (s, -a0 * a0 * e2 / s)
            }
        }
    }

    /// Centre `c(t)` and its time derivative.
    fn center(&self, t: f64) -> (Vec2, Vec2) {
        match *self {
            ExactSolution::HyperbolicCircle { a0, .. } => {
                let a = a0 * math::exp(-t);
                (Vec2::new(a, 0.0), Vec2::new(-a, 0.0))
            }
            _ => (Vec2::ZERO, Vec2::ZERO),
        }
    }

    fn aspect(&self) -> f64 {
        match *self {
            ExactSolution::WulffEllipse { delta } => delta,
            _ => 1.0,
        }
    }

    /// Radius and centre of the circular solutions.
    pub fn circle(&self, t: f64) -> Result<(Vec2, f64)> {
        self.at(t)?;
        Ok((self.center(t).0, self.scale(t).0))
    }
}

impl ExactAt {
    pub fn time(&self) -> f64 {
        self.t
    }

    fn shape(&self, rho: f64) -> Vec2 {
        let (s, c) = (math::sin(TAU * rho), math::cos(TAU * rho));
        Vec2::new(c, self.solution.aspect() * s)
    }

    /// `x_t(ρ, t)`.
    pub fn velocity(&self, rho: f64) -> Vec2 {
        let (_, ds) = self.solution.scale(self.t);
        self.shape(rho) * ds + self.solution.center(self.t).1
    }

    /// `x_ρρ(ρ, t)`.
    pub fn second_derivative(&self, rho: f64) -> Vec2 {
        let (s, _) = self.solution.scale(self.t);
        self.shape(rho) * (-TAU * TAU * s)
    }
}

impl ParametricCurve for ExactAt {
    fn position(&self, rho: f64) -> Vec2 {
        let (s, _) = self.solution.scale(self.t);
        self.solution.center(self.t).0 + self.shape(rho) * s
    }

    fn derivative(&self, rho: f64) -> Vec2 {
        let (s, _) = self.solution.scale(self.t);
        let (sn, cs) = (math::sin(TAU * rho), math::cos(TAU * rho));
        Vec2::new(-sn, self.solution.aspect() * cs) * (TAU * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extinction_times() {
        assert_eq!(ExactSolution::WulffEllipse { delta: 0.5 }.extinction_time(), 0.5);
        let cone = ExactSolution::ConeCircle {
            slope: 3f64.sqrt(),
            r0: 1.0,
        };
        assert!((cone.extinction_time() - 2.0).abs() < 1e-15);
        assert!(cone.at(2.0).is_err());
        let hyp = ExactSolution::HyperbolicCircle { a0: 2.0, r0: 1.0 };
        let t = hyp.extinction_time();
        assert!((t - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_radius_at_final_time() {
        let hyp = ExactSolution::HyperbolicCircle { a0: 2.0, r0: 1.0 };
        let (c, r) = hyp.circle(0.14).unwrap();
        assert!((c.x - 2.0 * (-0.14f64).exp()).abs() < 1e-15);
        assert!((r - 0.1521).abs() < 1e-4);
    }

    #[test]
    fn time_derivative_matches_difference() {
        let sol = ExactSolution::WulffEllipse { delta: 0.5 };
        let (t, e) = (0.2, 1e-6);
        let a = sol.at(t + e).unwrap();
        let b = sol.at(t - e).unwrap();
        let v = sol.at(t).unwrap().velocity(0.3);
        let fd = (a.position(0.3) - b.position(0.3)) * (0.5 / e);
        assert!((v - fd).max_abs() < 1e-8);
    }
}
