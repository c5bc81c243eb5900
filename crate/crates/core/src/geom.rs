//! Periodic meshes, piecewise linear closed curves and mass-lumped quadrature.
//!
//! Nodes are stored as `0..J`; node `J` is node `0`. Element `e` is the
//! interval `[q_e, q_{e+1}]` and joins nodes `e` and `(e + 1) % J`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::math;

/// Uniform partition of the periodic unit interval with `J` elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicMesh {
    nodes: usize,
}

impl PeriodicMesh {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::TooFewNodes(nodes));
        }
        Ok(PeriodicMesh { nodes })
    }

    /// Number of nodes, which equals the number of elements.
    #[inline]
    pub fn len(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Element length `h = 1/J`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    /// Parameter value `q_j = j/J`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.nodes as f64
    }

    #[inline]
    pub fn next(&self, j: usize) -> usize {
        if j + 1 == self.nodes {
            0
        } else {
            j + 1
        }
    }

    #[inline]
    pub fn prev(&self, j: usize) -> usize {
        if j == 0 {
            self.nodes - 1
        } else {
            j - 1
        }
    }
}

/// A smooth closed curve `rho -> x(rho)` with its parameter derivative, `rho` in `[0, 1)`.
pub trait ParametricCurve {
    fn position(&self, rho: f64) -> Vec2;
    fn derivative(&self, rho: f64) -> Vec2;
}

/// Nodal values of a continuous piecewise linear closed curve.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurve {
    mesh: PeriodicMesh,
    positions: Vec<Vec2>,
    time: f64,
}

impl DiscreteCurve {
    pub fn new(positions: Vec<Vec2>, time: f64) -> Result<Self> {
        let mesh = PeriodicMesh::new(positions.len())?;
        if !(time >= 0.0) {
            return Err(Error::InvalidParameter("curve time must be nonnegative"));
        }
        Ok(DiscreteCurve { mesh, positions, time })
    }

    /// Nodal interpolant `pi^h x` of a parametric curve.
    pub fn interpolate<C: ParametricCurve + ?Sized>(mesh: PeriodicMesh, curve: &C, time: f64) -> Result<Self> {
        let positions = (0..mesh.len()).map(|j| curve.position(mesh.node(j))).collect();
        DiscreteCurve::new(positions, time)
    }

    /// Equidistributed polygon inscribed in a circle, traversed anti-clockwise.
    pub fn circle(nodes: usize, center: Vec2, radius: f64) -> Result<Self> {
        let mesh = PeriodicMesh::new(nodes)?;
        let positions = (0..nodes)
            .map(|j| center + radius * Vec2::from_angle(core::f64::consts::TAU * mesh.node(j)))
            .collect();
        DiscreteCurve::new(positions, 0.0)
    }

    #[inline]
    pub fn mesh(&self) -> PeriodicMesh {
        self.mesh
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    #[inline]
    pub fn node(&self, j: usize) -> Vec2 {
        self.positions[j]
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn into_positions(self) -> Vec<Vec2> {
        self.positions
    }

    /// Chord vector of element `e`, `x(q_{e+1}) - x(q_e)`.
    #[inline]
    pub fn chord(&self, e: usize) -> Vec2 {
        self.positions[self.mesh.next(e)] - self.positions[e]
    }

    pub fn element_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|e| self.chord(e).norm()).collect()
    }

    pub fn min_element_length(&self) -> f64 {
        (0..self.len())
            .map(|e| self.chord(e).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Fails on the first element of zero length.
    pub fn check_nondegenerate(&self) -> Result<()> {
        for e in 0..self.len() {
            let c = self.chord(e);
            if !(c.norm() > 0.0) {
                return Err(Error::DegenerateElement { element: e });
            }
        }
        Ok(())
    }

    /// Piecewise constant derivative `x_rho` on each element.
    pub fn element_derivative(&self) -> ElementField<Vec2> {
        let inv_h = self.len() as f64;
        ElementField((0..self.len()).map(|e| self.chord(e) * inv_h).collect())
    }

    /// Polygon perimeter.
    pub fn length(&self) -> f64 {
        (0..self.len()).map(|e| self.chord(e).norm()).sum()
    }

    /// Signed enclosed area, positive for anti-clockwise curves.
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|j| self.positions[j].cross(self.positions[self.mesh.next(j)]))
            .sum::<f64>()
    }

    /// Largest nodal distance to another curve on the same mesh.
    pub fn max_distance(&self, other: &DiscreteCurve) -> Result<f64> {
        if other.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max))
    }
}

/// Values that are constant on each element.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementField<T>(pub Vec<T>);

impl<T: Copy> ElementField<T> {
    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, e: usize) -> T {
        self.0[e]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// Nodal values of a continuous piecewise linear function.
#[derive(Clone, Copy, Debug)]
pub struct Nodal<'a, T>(pub &'a [T]);

/// Arbitrary one-sided limits per element: `[value at q_e^+, value at q_{e+1}^-]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Endpoints<T>(pub Vec<[T; 2]>);

/// A piecewise continuous function that may jump at nodes.
pub trait OneSided {
    type Value: Copy;

    /// Number of elements.
    fn elements(&self) -> usize;
    /// Limit at the left end of element `e`, `u(q_e^+)`.
    fn left(&self, e: usize) -> Self::Value;
    /// Limit at the right end of element `e`, `u(q_{e+1}^-)`.
    fn right(&self, e: usize) -> Self::Value;
}

impl<T: Copy> OneSided for Nodal<'_, T> {
    type Value = T;

    fn elements(&self) -> usize {
        self.0.len()
    }

    fn left(&self, e: usize) -> T {
        self.0[e]
    }

    fn right(&self, e: usize) -> T {
        self.0[(e + 1) % self.0.len()]
    }
}

impl<T: Copy> OneSided for ElementField<T> {
    type Value = T;

    fn elements(&self) -> usize {
        self.0.len()
    }

    fn left(&self, e: usize) -> T {
        self.0[e]
    }

    fn right(&self, e: usize) -> T {
        self.0[e]
    }
}

impl<T: Copy> OneSided for Endpoints<T> {
    type Value = T;

    fn elements(&self) -> usize {
        self.0.len()
    }

    fn left(&self, e: usize) -> T {
        self.0[e][0]
    }

    fn right(&self, e: usize) -> T {
        self.0[e][1]
    }
}

/// Pointwise product used by the inner products (scalar product for vectors).
pub trait Pairing: Copy {
    fn pair(self, other: Self) -> f64;
}

impl Pairing for f64 {
    #[inline]
    fn pair(self, other: f64) -> f64 {
        self * other
    }
}

impl Pairing for Vec2 {
    #[inline]
    fn pair(self, other: Vec2) -> f64 {
        self.dot(other)
    }
}

/// Mass-lumped inner product `(u, v)^h = 1/2 sum_j h_j [(u v)(q_j^-) + (u v)(q_{j-1}^+)]`.
pub fn lumped_inner<T, U, V>(mesh: PeriodicMesh, u: &U, v: &V) -> Result<f64>
where
    T: Pairing,
    U: OneSided<Value = T> + ?Sized,
    V: OneSided<Value = T> + ?Sized,
{
    for n in [u.elements(), v.elements()] {
        if n != mesh.len() {
            return Err(Error::SizeMismatch {
                expected: mesh.len(),
                actual: n,
            });
        }
    }
    let h = mesh.h();
    let sum: f64 = (0..mesh.len())
        .map(|e| u.right(e).pair(v.right(e)) + u.left(e).pair(v.left(e)))
        .sum();
    Ok(0.5 * h * sum)
}

/// Ratio of the longest to the shortest element.
pub fn ratio(curve: &DiscreteCurve) -> Result<f64> {
    let mut longest: f64 = 0.0;
    let mut shortest = f64::INFINITY;
    for e in 0..curve.len() {
        let l = curve.chord(e).norm();
        if !(l > 0.0) {
            return Err(Error::DegenerateElement { element: e });
        }
        longest = longest.max(l);
        shortest = shortest.min(l);
    }
    Ok(longest / shortest)
}

/// L2 and H1 errors of a discrete curve against a smooth parameterization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `‖x - x_h‖_0` and `‖x - x_h‖_1` with three-point Gauss quadrature on every element.
pub fn error_norms<C: ParametricCurve + ?Sized>(curve: &DiscreteCurve, exact: &C) -> ErrorNorms {
    let mesh = curve.mesh();
    let h = mesh.h();
    let mut l2 = 0.0;
    let mut semi = 0.0;
    for e in 0..mesh.len() {
        let a = curve.node(e);
        let b = curve.node(mesh.next(e));
        let slope = (b - a) * (1.0 / h);
        let q0 = mesh.node(e);
        for (xi, w) in GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS) {
            let s = 0.5 * (xi + 1.0);
            let rho = q0 + s * h;
            let discrete = a + (b - a) * s;
            l2 += 0.5 * h * w * (exact.position(rho) - discrete).norm_squared();
            semi += 0.5 * h * w * (exact.derivative(rho) - slope).norm_squared();
        }
    }
    ErrorNorms {
        l2: math::sqrt(l2),
        h1: math::sqrt(l2 + semi),
    }
}
