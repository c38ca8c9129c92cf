//! Finite-dimensional symplectic objects and inclusion-membership tests.
//!
//! The phase space is `R^n x R^n` with the Euclidean pairing, so the duality
//! product is the dot product and the symplectic form is
//! `omega(z', z'') = <x', y''> - <x'', y'>`. Membership in the dissipative
//! inclusion is tested through exact distances to structured subdifferential
//! sets, never by sampling.

use crate::dissipation::DissipationSpec;
use crate::error::{Error, Result};
use crate::vecmath::{all_finite, axpy, dot, norm, sub};

/// Relative tolerance for validating oracle gradients against centered
/// finite differences.
pub const TOL_FD: f64 = 1e-5;

/// A point `z = (x, y)` of phase space: paired state and costate vectors of
/// equal dimension, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidDimension {
                context: "phase point",
                expected: x.len(),
                got: y.len(),
            });
        }
        if !all_finite(&x) || !all_finite(&y) {
            return Err(Error::NonFinite("phase point"));
        }
        Ok(PhasePoint { x, y })
    }

    pub fn zeros(n: usize) -> Self {
        PhasePoint {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.x) && all_finite(&self.y)
    }

    /// `self + alpha * other`, for building shifted rates in tests and
    /// membership checks.
    pub fn add_scaled(&self, alpha: f64, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            x: axpy(alpha, &other.x, &self.x),
            y: axpy(alpha, &other.y, &self.y),
        }
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> f64 {
        (dot(&self.x, &self.x) + dot(&self.y, &self.y)).sqrt()
    }
}

/// Callbacks for a scalar observable or Hamiltonian on phase space:
/// `H(t, z)`, its partial gradients, and its explicit time derivative.
pub trait Hamiltonian {
    fn value(&self, t: f64, z: &PhasePoint) -> f64;
    fn grad_x(&self, t: f64, z: &PhasePoint) -> Vec<f64>;
    fn grad_y(&self, t: f64, z: &PhasePoint) -> Vec<f64>;
    fn partial_t(&self, _t: f64, _z: &PhasePoint) -> f64 {
        0.0
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn value(&self, t: f64, z: &PhasePoint) -> f64 {
        (**self).value(t, z)
    }
    fn grad_x(&self, t: f64, z: &PhasePoint) -> Vec<f64> {
        (**self).grad_x(t, z)
    }
    fn grad_y(&self, t: f64, z: &PhasePoint) -> Vec<f64> {
        (**self).grad_y(t, z)
    }
    fn partial_t(&self, t: f64, z: &PhasePoint) -> f64 {
        (**self).partial_t(t, z)
    }
}

/// Symplectic form `omega(z1, z2) = <x1, y2> - <x2, y1>`.
pub fn omega(z1: &PhasePoint, z2: &PhasePoint) -> Result<f64> {
    if z1.dim() != z2.dim() {
        return Err(Error::InvalidDimension {
            context: "omega",
            expected: z1.dim(),
            got: z2.dim(),
        });
    }
    Ok(dot(&z1.x, &z2.y) - dot(&z2.x, &z1.y))
}

/// Symplectic gradient `X_f = (grad_y f, -grad_x f)` at `(t, z)`.
pub fn symplectic_gradient<H: Hamiltonian>(h: &H, t: f64, z: &PhasePoint) -> Result<PhasePoint> {
    let gx = h.grad_x(t, z);
    let gy = h.grad_y(t, z);
    if gx.len() != z.dim() || gy.len() != z.dim() {
        return Err(Error::InvalidDimension {
            context: "oracle gradient",
            expected: z.dim(),
            got: gx.len().max(gy.len()),
        });
    }
    if !all_finite(&gx) || !all_finite(&gy) {
        return Err(Error::OracleError(
            "gradient oracle returned non-finite values".into(),
        ));
    }
    Ok(PhasePoint {
        x: gy,
        y: gx.iter().map(|g| -g).collect(),
    })
}

/// Poisson bracket `{f, g}(z) = omega(X_f(z), X_g(z))`.
pub fn poisson_bracket<F: Hamiltonian, G: Hamiltonian>(
    f: &F,
    g: &G,
    t: f64,
    z: &PhasePoint,
) -> Result<f64> {
    let xf = symplectic_gradient(f, t, z)?;
    let xg = symplectic_gradient(g, t, z)?;
    omega(&xf, &xg)
}

/// Check the oracle gradients against centered finite differences with step
/// `1e-6 * (1 + |z|)`. Returns the worst relative error, or an error when it
/// exceeds `tol` (use [`TOL_FD`] for the standard check).
pub fn validate_gradients<H: Hamiltonian>(
    h: &H,
    t: f64,
    z: &PhasePoint,
    tol: f64,
) -> Result<f64> {
    let step = 1e-6 * (1.0 + z.norm());
    let n = z.dim();
    let gx = h.grad_x(t, z);
    let gy = h.grad_y(t, z);
    let mut scale = norm(&gx).max(norm(&gy)).max(1.0);
    let mut worst = 0.0_f64;
    let bump = |block_x: bool, i: usize| -> f64 {
        let mut zp = z.clone();
        let mut zm = z.clone();
        if block_x {
            zp.x[i] += step;
            zm.x[i] -= step;
        } else {
            zp.y[i] += step;
            zm.y[i] -= step;
        }
        (h.value(t, &zp) - h.value(t, &zm)) / (2.0 * step)
    };
    for i in 0..n {
        let fd_x = bump(true, i);
        let fd_y = bump(false, i);
        scale = scale.max(fd_x.abs()).max(fd_y.abs());
        worst = worst.max((fd_x - gx[i]).abs()).max((fd_y - gy[i]).abs());
    }
    let rel = worst / scale;
    if rel > tol {
        return Err(Error::OracleError(format!(
            "gradient oracle disagrees with finite differences: relative error {rel:.3e} > {tol:.3e}"
        )));
    }
    Ok(rel)
}

/// Distance from the defect `zdot - X_H` to the symplectic subdifferential
/// `X(R(z, .))(zdot)`; zero exactly when the inclusion holds at `(t, z, zdot)`.
///
/// Mapping through the symplectic pairing, `z' = (x', y')` lies in the
/// symplectic subdifferential iff the conventional subgradient candidate
/// `(-y', x')` lies in `dR(zdot)`. The dissipation acts on the x-block of the
/// rate, so the candidate splits into a structured part `-(ydot + grad_x H)`
/// tested against the per-component intervals, and a free part
/// `xdot - grad_y H` tested against `{0}`.
pub fn inclusion_residual<H: Hamiltonian>(
    h: &H,
    r: &DissipationSpec,
    t: f64,
    z: &PhasePoint,
    zdot: &PhasePoint,
) -> Result<f64> {
    if z.dim() != zdot.dim() {
        return Err(Error::InvalidDimension {
            context: "inclusion_residual",
            expected: z.dim(),
            got: zdot.dim(),
        });
    }
    if let Some(d) = r.dim() {
        if d != z.dim() {
            return Err(Error::InvalidDimension {
                context: "inclusion_residual dissipation",
                expected: z.dim(),
                got: d,
            });
        }
    }
    if !r.eval(&z.x, &zdot.x)?.is_finite() {
        return Err(Error::DomainError(
            "rate lies outside the dissipation domain".into(),
        ));
    }
    let gx = h.grad_x(t, z);
    let gy = h.grad_y(t, z);
    let mut acc = 0.0;
    for i in 0..z.dim() {
        let xi = -(zdot.y[i] + gx[i]);
        let d = r.subdiff_interval(i, zdot.x[i])?.distance(xi);
        acc += d * d;
        let free = zdot.x[i] - gy[i];
        acc += free * free;
    }
    Ok(acc.sqrt())
}

/// Slack of the test-function inequality
/// `R(z, zdot - X_f) - R(z, zdot) - d/dt[f o z] + {f, H}(z)`,
/// nonnegative for every observable `f` exactly when the inclusion holds.
///
/// `d/dt[f o z]` is expanded by the chain rule
/// `<grad_x f, xdot> + <grad_y f, ydot> + df/dt` rather than by differencing
/// a trajectory.
pub fn test_inequality<H: Hamiltonian, F: Hamiltonian>(
    h: &H,
    r: &DissipationSpec,
    f: &F,
    t: f64,
    z: &PhasePoint,
    zdot: &PhasePoint,
) -> Result<f64> {
    let xf = symplectic_gradient(f, t, z)?;
    let shifted = sub(&zdot.x, &xf.x);
    let r_shifted = r.eval(&z.x, &shifted)?;
    let r_rate = r.eval(&z.x, &zdot.x)?;
    if !r_rate.is_finite() {
        return Err(Error::DomainError(
            "rate lies outside the dissipation domain".into(),
        ));
    }
    if !r_shifted.is_finite() {
        return Ok(f64::INFINITY);
    }
    let fgx = f.grad_x(t, z);
    let fgy = f.grad_y(t, z);
    let df_dt = dot(&fgx, &zdot.x) + dot(&fgy, &zdot.y) + f.partial_t(t, z);
    let bracket = poisson_bracket(f, h, t, z)?;
    Ok(r_shifted - r_rate - df_dt + bracket)
}

/// Quadratic observable
/// `f(z) = 1/2 x'Ax + x'By + 1/2 y'Cy + a'x + b'y + const`
/// with `A`, `C` symmetric; gradients in closed form. The workhorse for
/// property tests of the bracket and inclusion machinery.
#[derive(Debug, Clone)]
pub struct Quadratic {
    n: usize,
    a_xx: Vec<f64>,
    b_xy: Vec<f64>,
    c_yy: Vec<f64>,
    lin_x: Vec<f64>,
    lin_y: Vec<f64>,
    constant: f64,
}

impl Quadratic {
    pub fn new(
        n: usize,
        a_xx: Vec<f64>,
        b_xy: Vec<f64>,
        c_yy: Vec<f64>,
        lin_x: Vec<f64>,
        lin_y: Vec<f64>,
        constant: f64,
    ) -> Result<Self> {
        if a_xx.len() != n * n || b_xy.len() != n * n || c_yy.len() != n * n {
            return Err(Error::InvalidDimension {
                context: "quadratic matrices",
                expected: n * n,
                got: a_xx.len(),
            });
        }
        if lin_x.len() != n || lin_y.len() != n {
            return Err(Error::InvalidDimension {
                context: "quadratic linear parts",
                expected: n,
                got: lin_x.len(),
            });
        }
        let symmetrize = |m: Vec<f64>| -> Vec<f64> {
            let mut s = m.clone();
            for i in 0..n {
                for j in 0..n {
                    s[i * n + j] = 0.5 * (m[i * n + j] + m[j * n + i]);
                }
            }
            s
        };
        Ok(Quadratic {
            n,
            a_xx: symmetrize(a_xx),
            b_xy,
            c_yy: symmetrize(c_yy),
            lin_x,
            lin_y,
            constant,
        })
    }

    /// Separable quadratic `1/2 (kx |x|^2 + ky |y|^2)`.
    pub fn separable(n: usize, kx: f64, ky: f64) -> Self {
        let mut a_xx = vec![0.0; n * n];
        let mut c_yy = vec![0.0; n * n];
        for i in 0..n {
            a_xx[i * n + i] = kx;
            c_yy[i * n + i] = ky;
        }
        Quadratic {
            n,
            a_xx,
            b_xy: vec![0.0; n * n],
            c_yy,
            lin_x: vec![0.0; n],
            lin_y: vec![0.0; n],
            constant: 0.0,
        }
    }

    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let mat = |rng: &mut R| -> Vec<f64> {
            (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let vecr = |rng: &mut R| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        Quadratic::new(
            n,
            mat(rng),
            mat(rng),
            mat(rng),
            vecr(rng),
            vecr(rng),
            rng.random_range(-1.0..1.0),
        )
        .expect("consistent dimensions")
    }

    fn matvec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
        (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
    }

    fn matvec_t(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| (0..n).map(|i| m[i * n + j] * v[i]).sum())
            .collect()
    }
}

impl Hamiltonian for Quadratic {
    fn value(&self, _t: f64, z: &PhasePoint) -> f64 {
        let ax = Self::matvec(&self.a_xx, &z.x, self.n);
        let by = Self::matvec(&self.b_xy, &z.y, self.n);
        let cy = Self::matvec(&self.c_yy, &z.y, self.n);
        0.5 * dot(&z.x, &ax)
            + dot(&z.x, &by)
            + 0.5 * dot(&z.y, &cy)
            + dot(&self.lin_x, &z.x)
            + dot(&self.lin_y, &z.y)
            + self.constant
    }

    fn grad_x(&self, _t: f64, z: &PhasePoint) -> Vec<f64> {
        let ax = Self::matvec(&self.a_xx, &z.x, self.n);
        let by = Self::matvec(&self.b_xy, &z.y, self.n);
        (0..self.n).map(|i| ax[i] + by[i] + self.lin_x[i]).collect()
    }

    fn grad_y(&self, _t: f64, z: &PhasePoint) -> Vec<f64> {
        let btx = Self::matvec_t(&self.b_xy, &z.x, self.n);
        let cy = Self::matvec(&self.c_yy, &z.y, self.n);
        (0..self.n).map(|i| btx[i] + cy[i] + self.lin_y[i]).collect()
    }
}

/// Linear observable `f(z) = omega(z, anchor)`; its symplectic gradient is
/// the constant field `-anchor`.
#[derive(Debug, Clone)]
pub struct OmegaWith {
    pub anchor: PhasePoint,
}

impl Hamiltonian for OmegaWith {
    fn value(&self, _t: f64, z: &PhasePoint) -> f64 {
        omega(z, &self.anchor).expect("anchor dimension")
    }
    fn grad_x(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        self.anchor.y.clone()
    }
    fn grad_y(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        self.anchor.x.iter().map(|v| -v).collect()
    }
}

/// Which block of the phase point a [`Coordinate`] observable reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
}

/// Coordinate observable `f(z) = x_i` or `f(z) = y_i`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate {
    pub block: Block,
    pub index: usize,
    pub dim: usize,
}

impl Hamiltonian for Coordinate {
    fn value(&self, _t: f64, z: &PhasePoint) -> f64 {
        match self.block {
            Block::X => z.x[self.index],
            Block::Y => z.y[self.index],
        }
    }
    fn grad_x(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        if self.block == Block::X {
            g[self.index] = 1.0;
        }
        g
    }
    fn grad_y(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        if self.block == Block::Y {
            g[self.index] = 1.0;
        }
        g
    }
}

/// A constant observable; `X_f = 0` and every bracket with it vanishes.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub value: f64,
    pub dim: usize,
}

impl Hamiltonian for Constant {
    fn value(&self, _t: f64, _z: &PhasePoint) -> f64 {
        self.value
    }
    fn grad_x(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn grad_y(&self, _t: f64, _z: &PhasePoint) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}
