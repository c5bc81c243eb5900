//! Direct solver for periodic block-tridiagonal systems with 2x2 blocks and a
//! damped Newton iteration built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = r[i]`, indices mod `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicBlockTridiagonal {
    pub lower: Vec<Mat2>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
}

impl CyclicBlockTridiagonal {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewNodes(n));
        }
        Ok(CyclicBlockTridiagonal {
            lower: vec![Mat2::ZERO; n],
            diag: vec![Mat2::ZERO; n],
            upper: vec![Mat2::ZERO; n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut a = Self::zeros(n)?;
        a.diag.fill(Mat2::IDENTITY);
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.diag.len();
        if n < 3 {
            return Err(Error::TooFewNodes(n));
        }
        for len in [self.lower.len(), self.upper.len()] {
            if len != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// `A x`.
    pub fn apply(&self, x: &[Vec2]) -> Result<Vec<Vec2>> {
        self.check()?;
        let n = self.len();
        if x.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        Ok((0..n)
            .map(|i| self.lower[i] * x[(i + n - 1) % n] + self.diag[i] * x[i] + self.upper[i] * x[(i + 1) % n])
            .collect())
    }

    /// Row-major dense `2J x 2J` copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for (col, m) in [
                ((i + n - 1) % n, self.lower[i]),
                (i, self.diag[i]),
                ((i + 1) % n, self.upper[i]),
            ] {
                for r in 0..2 {
                    for c in 0..2 {
                        a[2 * i + r][2 * col + c] += m.get(r, c);
                    }
                }
            }
        }
        a
    }
}

fn inv(m: Mat2, row: usize) -> Result<Mat2> {
    m.inverse().ok_or(Error::SingularSystem { row })
}

/// Solves `A x = rhs` by block elimination with the last unknown kept as a border.
pub fn cyclic_solve(a: &CyclicBlockTridiagonal, rhs: &[Vec2]) -> Result<Vec<Vec2>> {
    a.check()?;
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let last = n - 1;
    // eliminate rows 0..n-2; coupling to x[last] is tracked in e
    let mut d = vec![Mat2::ZERO; last];
    let mut e = vec![Mat2::ZERO; last];
    let mut r = vec![Vec2::ZERO; last];
    let mut dinv = vec![Mat2::ZERO; last];
    d[0] = a.diag[0];
    e[0] = a.lower[0];
    r[0] = rhs[0];
    dinv[0] = inv(d[0], 0)?;
    for i in 1..last {
        let f = a.lower[i] * dinv[i - 1];
        d[i] = a.diag[i] - f * a.upper[i - 1];
        r[i] = rhs[i] - f * r[i - 1];
        let own = if i == last - 1 { a.upper[i] } else { Mat2::ZERO };
        e[i] = own - f * e[i - 1];
        dinv[i] = inv(d[i], i)?;
    }
    // x[i] = alpha[i] + beta[i] x[last]
    let mut alpha = vec![Vec2::ZERO; last];
    let mut beta = vec![Mat2::ZERO; last];
    alpha[last - 1] = dinv[last - 1] * r[last - 1];
    beta[last - 1] = -(dinv[last - 1] * e[last - 1]);
    for i in (0..last - 1).rev() {
        alpha[i] = dinv[i] * (r[i] - a.upper[i] * alpha[i + 1]);
        beta[i] = -(dinv[i] * (a.upper[i] * beta[i + 1] + e[i]));
    }
    let s = a.diag[last] + a.lower[last] * beta[last - 1] + a.upper[last] * beta[0];
    let t = rhs[last] - a.lower[last] * alpha[last - 1] - a.upper[last] * alpha[0];
    let xl = inv(s, last)? * t;
    let mut x: Vec<Vec2> = (0..last).map(|i| alpha[i] + beta[i] * xl).collect();
    x.push(xl);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { row: last });
    }
    Ok(x)
}

/// Tolerances for [`newton_solve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    /// Absolute tolerance on the max norm of the residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest damping factor is `2^-max_halvings`.
    pub max_halvings: u32,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tolerance: 1e-10,
            max_iterations: 20,
            max_halvings: 8,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("Newton tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("Newton needs at least one iteration"));
        }
        Ok(())
    }
}

/// Outcome of a Newton solve.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub solution: Vec<Vec2>,
    pub iterations: usize,
    pub residual: f64,
}

const ROUNDOFF_STEP: f64 = 8.0 * f64::EPSILON;

pub(crate) fn max_norm(v: &[Vec2]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.max_abs()))
}

/// Damped Newton iteration `J(x) dx = -F(x)`, halving the step while the residual grows.
pub fn newton_solve<F, J>(
    mut residual: F,
    mut jacobian: J,
    x0: Vec<Vec2>,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome>
where
    F: FnMut(&[Vec2]) -> Result<Vec<Vec2>>,
    J: FnMut(&[Vec2]) -> Result<CyclicBlockTridiagonal>,
{
    settings.validate()?;
    let mut x = x0;
    let mut f = residual(&x)?;
    let mut norm = max_norm(&f);
    let mut iterations = 0;
    while !(norm <= settings.tolerance) {
        if iterations == settings.max_iterations || !norm.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: norm,
            });
        }
        let jac = jacobian(&x)?;
        let neg: Vec<Vec2> = f.iter().map(|v| -*v).collect();
        let dx = cyclic_solve(&jac, &neg)?;
        iterations += 1;
        // the residual can sit above an absolute tolerance purely through roundoff
        if max_norm(&dx) <= ROUNDOFF_STEP * (1.0 + max_norm(&x)) {
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += *d);
            norm = max_norm(&residual(&x)?);
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for k in 0..=settings.max_halvings {
            let trial: Vec<Vec2> = x.iter().zip(&dx).map(|(a, d)| *a + *d * lambda).collect();
            // a trial may leave the model's domain; shrink the step in that case
            match residual(&trial) {
                Ok(ft) => {
                    let nt = max_norm(&ft);
                    if nt < norm || k == settings.max_halvings {
                        accepted = Some((trial, ft, nt));
                        break;
                    }
                }
                Err(e) if k == settings.max_halvings => return Err(e),
                Err(_) => {}
            }
            lambda *= 0.5;
        }
        let (xn, fnew, nn) = accepted.expect("loop always accepts or returns");
        x = xn;
        f = fnew;
        norm = nn;
    }
    Ok(NewtonOutcome {
        solution: x,
        iterations,
        residual: norm,
    })
}
