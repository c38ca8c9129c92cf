//! Convex dissipation functions and the machinery they induce.
//!
//! Every spec in the catalog is separable across components and carries
//! closed-form evaluation, proximal, and subdifferential oracles. The
//! 1-homogeneous specs act as dissipation metrics and induce a curve length,
//! a point-to-point distance, and a partition-supremum variation; for the
//! monotone curves produced by the integrators these three agree.

use crate::error::{Error, Result};
use crate::vecmath::all_finite;

/// Slack allowed when checking that a damage state sits in `[0, 1]`, to
/// absorb floating-point drift from time stepping.
pub const STATE_BOX_TOL: f64 = 1e-12;

/// Absolute tolerance for partition-refinement convergence in
/// [`dissipation_variation`].
pub const TOL_VAR: f64 = 1e-10;

/// Maximum number of dyadic refinements in [`dissipation_variation`].
pub const MAX_REFINEMENTS: u32 = 20;

/// A convex dissipation function `R(z, v)`, nonnegative with `R(z, 0) = 0`.
///
/// State dependence enters only through domain indicators (the damage kind
/// requires the state in `[0, 1]`); the rate dependence is separable per
/// component.
#[derive(Debug, Clone, PartialEq)]
pub enum DissipationSpec {
    /// No dissipation: classical Hamiltonian flow.
    Zero,
    /// Quadratic (viscous) dissipation `½ Σ wᵢ vᵢ²`; rate-dependent.
    Rayleigh { weights: Vec<f64> },
    /// Weighted 1-norm `Σ βᵢ |vᵢ|`; rate-independent (dry friction).
    WeightedNorm { beta: Vec<f64> },
    /// Damage dissipation `β Σ cellᵢ vᵢ` restricted to `vᵢ ≥ 0` and state
    /// `dᵢ ∈ [0, 1]`; `+∞` outside.
    DamageDissipation { beta: f64, cell_weights: Vec<f64> },
}

/// One-dimensional subdifferential of a separable dissipation component,
/// always an interval (possibly unbounded below).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SubdiffInterval {
    /// Euclidean distance from `xi` to the interval.
    pub fn distance(&self, xi: f64) -> f64 {
        if xi < self.lo {
            self.lo - xi
        } else if xi > self.hi {
            xi - self.hi
        } else {
            0.0
        }
    }
}

impl DissipationSpec {
    pub fn zero() -> Self {
        DissipationSpec::Zero
    }

    pub fn rayleigh(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::DomainError(
                "Rayleigh weights must be positive".into(),
            ));
        }
        Ok(DissipationSpec::Rayleigh { weights })
    }

    pub fn weighted_norm(beta: Vec<f64>) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(Error::DomainError(
                "WeightedNorm coefficients must be positive".into(),
            ));
        }
        Ok(DissipationSpec::WeightedNorm { beta })
    }

    pub fn damage(beta: f64, cell_weights: Vec<f64>) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::DomainError("beta must be nonnegative".into()));
        }
        if cell_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::DomainError("cell weights must be positive".into()));
        }
        Ok(DissipationSpec::DamageDissipation { beta, cell_weights })
    }

    /// Degree of positive homogeneity in the rate (Zero counts as 1 by
    /// convention, so it participates in the metric machinery).
    pub fn homogeneity(&self) -> u8 {
        match self {
            DissipationSpec::Rayleigh { .. } => 2,
            _ => 1,
        }
    }

    /// Component count, when the spec fixes one (`Zero` matches any).
    pub fn dim(&self) -> Option<usize> {
        match self {
            DissipationSpec::Zero => None,
            DissipationSpec::Rayleigh { weights } => Some(weights.len()),
            DissipationSpec::WeightedNorm { beta } => Some(beta.len()),
            DissipationSpec::DamageDissipation { cell_weights, .. } => Some(cell_weights.len()),
        }
    }

    fn check_dim(&self, n: usize, context: &'static str) -> Result<()> {
        match self.dim() {
            Some(d) if d != n => Err(Error::InvalidDimension {
                context,
                expected: d,
                got: n,
            }),
            _ => Ok(()),
        }
    }

    fn state_admissible(&self, state: &[f64]) -> bool {
        match self {
            DissipationSpec::DamageDissipation { .. } => state
                .iter()
                .all(|d| *d >= -STATE_BOX_TOL && *d <= 1.0 + STATE_BOX_TOL),
            _ => true,
        }
    }

    /// Evaluate `R(state, rate)`. Returns `+∞` when the rate (or the state,
    /// for the damage kind) leaves the effective domain.
    pub fn eval(&self, state: &[f64], rate: &[f64]) -> Result<f64> {
        self.check_dim(rate.len(), "dissipation eval")?;
        match self {
            DissipationSpec::Zero => Ok(0.0),
            DissipationSpec::Rayleigh { weights } => Ok(0.5
                * weights
                    .iter()
                    .zip(rate)
                    .map(|(w, v)| w * v * v)
                    .sum::<f64>()),
            DissipationSpec::WeightedNorm { beta } => {
                Ok(beta.iter().zip(rate).map(|(b, v)| b * v.abs()).sum())
            }
            DissipationSpec::DamageDissipation { beta, cell_weights } => {
                if state.len() != rate.len() {
                    return Err(Error::InvalidDimension {
                        context: "dissipation eval state",
                        expected: rate.len(),
                        got: state.len(),
                    });
                }
                if !self.state_admissible(state) || rate.iter().any(|v| *v < 0.0) {
                    return Ok(f64::INFINITY);
                }
                Ok(cell_weights
                    .iter()
                    .zip(rate)
                    .map(|(c, v)| c * beta * v)
                    .sum())
            }
        }
    }

    /// Proximal map `argmin_v ½‖v − w‖² + τ R(·, v)` with the state frozen
    /// (domain indicators on the rate are enforced; the state box is not a
    /// function of `v`). Closed form for every catalog kind.
    pub fn prox(&self, w: &[f64], tau: f64) -> Result<Vec<f64>> {
        let taus = vec![tau; w.len()];
        self.prox_scaled(w, &taus)
    }

    /// Proximal map with a per-component step `τᵢ`, used by the split
    /// integrator under a diagonal change of variables.
    pub fn prox_scaled(&self, w: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w.len(), "prox")?;
        if taus.len() != w.len() {
            return Err(Error::InvalidDimension {
                context: "prox step vector",
                expected: w.len(),
                got: taus.len(),
            });
        }
        if taus.iter().any(|t| *t <= 0.0) {
            return Err(Error::DomainError("prox requires tau > 0".into()));
        }
        let out = match self {
            DissipationSpec::Zero => w.to_vec(),
            DissipationSpec::Rayleigh { weights } => w
                .iter()
                .zip(weights)
                .zip(taus)
                .map(|((wi, c), tau)| wi / (1.0 + tau * c))
                .collect(),
            DissipationSpec::WeightedNorm { beta } => w
                .iter()
                .zip(beta)
                .zip(taus)
                .map(|((wi, b), tau)| shrink(*wi, tau * b))
                .collect(),
            DissipationSpec::DamageDissipation { beta, cell_weights } => w
                .iter()
                .zip(cell_weights)
                .zip(taus)
                .map(|((wi, c), tau)| (wi - tau * beta * c).max(0.0))
                .collect(),
        };
        Ok(out)
    }

    /// Proximal map of the anchored distance `v ↦ D(anchor, v)` for metric
    /// (1-homogeneous) kinds: `argmin_v ½‖v − w‖² + τ D(anchor, v)`.
    pub fn prox_distance(&self, anchor: &[f64], w: &[f64], tau: f64) -> Result<Vec<f64>> {
        self.check_dim(w.len(), "prox_distance")?;
        if tau <= 0.0 {
            return Err(Error::DomainError("prox requires tau > 0".into()));
        }
        match self {
            DissipationSpec::Zero => Ok(w.to_vec()),
            DissipationSpec::Rayleigh { .. } => Err(Error::UnsupportedDissipation(
                "distance is defined only for 1-homogeneous specs",
            )),
            DissipationSpec::WeightedNorm { beta } => Ok(w
                .iter()
                .zip(anchor)
                .zip(beta)
                .map(|((wi, a), b)| a + shrink(wi - a, tau * b))
                .collect()),
            DissipationSpec::DamageDissipation { beta, cell_weights } => Ok(w
                .iter()
                .zip(anchor)
                .zip(cell_weights)
                .map(|((wi, a), c)| (wi - tau * beta * c).clamp(a.max(0.0), 1.0))
                .collect()),
        }
    }

    /// Subdifferential `∂ρᵢ(v)` of the i-th rate component, as an interval.
    pub fn subdiff_interval(&self, component: usize, v: f64) -> Result<SubdiffInterval> {
        let point = |s: f64| SubdiffInterval { lo: s, hi: s };
        match self {
            DissipationSpec::Zero => Ok(point(0.0)),
            DissipationSpec::Rayleigh { weights } => Ok(point(weights[component] * v)),
            DissipationSpec::WeightedNorm { beta } => {
                let b = beta[component];
                if v > 0.0 {
                    Ok(point(b))
                } else if v < 0.0 {
                    Ok(point(-b))
                } else {
                    Ok(SubdiffInterval { lo: -b, hi: b })
                }
            }
            DissipationSpec::DamageDissipation { beta, cell_weights } => {
                let b = beta * cell_weights[component];
                if v > 0.0 {
                    Ok(point(b))
                } else if v == 0.0 {
                    Ok(SubdiffInterval {
                        lo: f64::NEG_INFINITY,
                        hi: b,
                    })
                } else {
                    Err(Error::DomainError(format!(
                        "rate component {component} = {v} outside [0, +inf)"
                    )))
                }
            }
        }
    }

    /// Euclidean distance from the candidate subgradient `xi` to the set
    /// `∂R(·, rate)`, aggregated over components.
    pub fn subdiff_distance(&self, rate: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_dim(rate.len(), "subdiff_distance")?;
        if xi.len() != rate.len() {
            return Err(Error::InvalidDimension {
                context: "subdiff_distance",
                expected: rate.len(),
                got: xi.len(),
            });
        }
        let mut acc = 0.0;
        for (i, (v, x)) in rate.iter().zip(xi).enumerate() {
            let d = self.subdiff_interval(i, *v)?.distance(*x);
            acc += d * d;
        }
        Ok(acc.sqrt())
    }
}

/// Soft-threshold shrinkage `sign(w)·max(0, |w| − t)`.
pub fn shrink(w: f64, t: f64) -> f64 {
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

/// A piecewise-linear curve in state space, the discrete stand-in for curves
/// `z : [0, T] → X × Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePolyline {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl CurvePolyline {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != points.len() || times.is_empty() {
            return Err(Error::InvalidDimension {
                context: "polyline times vs points",
                expected: times.len(),
                got: points.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError(
                "polyline times must be strictly increasing".into(),
            ));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim || !all_finite(p)) {
            return Err(Error::NonFinite("polyline points"));
        }
        Ok(CurvePolyline { times, points })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Linear interpolation at parameter `s`, clamped to the time range.
    pub fn value_at(&self, s: f64) -> Vec<f64> {
        let n = self.times.len();
        if s <= self.times[0] {
            return self.points[0].clone();
        }
        if s >= self.times[n - 1] {
            return self.points[n - 1].clone();
        }
        let k = match self
            .times
            .binary_search_by(|t| t.partial_cmp(&s).expect("finite times"))
        {
            Ok(i) => return self.points[i].clone(),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = (s - t0) / (t1 - t0);
        self.points[k]
            .iter()
            .zip(&self.points[k + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// Dissipation length `Σ R(z_k, (z_{k+1} − z_k)/Δt_k)·Δt_k` of a polyline.
///
/// For 1-homogeneous specs this reduces to `Σ R(z_k, z_{k+1} − z_k)` and is
/// independent of the parametrization.
pub fn dissipation_length(spec: &DissipationSpec, curve: &CurvePolyline) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..curve.times.len().saturating_sub(1) {
        let dt = curve.times[k + 1] - curve.times[k];
        let rate: Vec<f64> = curve.points[k]
            .iter()
            .zip(&curve.points[k + 1])
            .map(|(a, b)| (b - a) / dt)
            .collect();
        let r = spec.eval(&curve.points[k], &rate)?;
        total += r * dt;
        if !total.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    // The segment formula only sees left endpoints; a state-constrained spec
    // must also reject a curve whose final point leaves the box.
    if !spec.state_admissible(curve.points.last().expect("nonempty")) {
        return Ok(f64::INFINITY);
    }
    Ok(total)
}

/// Dissipation distance `D(z1, z2)`: the infimum of dissipation lengths over
/// curves joining `z1` to `z2`. Only metric (1-homogeneous) kinds are
/// supported; for those the infimum is attained by the straight segment.
pub fn dissipation_distance(spec: &DissipationSpec, z1: &[f64], z2: &[f64]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::InvalidDimension {
            context: "dissipation_distance",
            expected: z1.len(),
            got: z2.len(),
        });
    }
    match spec {
        DissipationSpec::Zero => Ok(0.0),
        DissipationSpec::Rayleigh { .. } => Err(Error::UnsupportedDissipation(
            "distance is defined only for 1-homogeneous specs",
        )),
        DissipationSpec::WeightedNorm { beta } => {
            spec.check_dim(z1.len(), "dissipation_distance")?;
            Ok(beta
                .iter()
                .zip(z1.iter().zip(z2))
                .map(|(b, (a, c))| b * (c - a).abs())
                .sum())
        }
        DissipationSpec::DamageDissipation { beta, cell_weights } => {
            spec.check_dim(z1.len(), "dissipation_distance")?;
            if !spec.state_admissible(z1)
                || !spec.state_admissible(z2)
                || z1.iter().zip(z2).any(|(a, b)| b < a)
            {
                return Ok(f64::INFINITY);
            }
            Ok(cell_weights
                .iter()
                .zip(z1.iter().zip(z2))
                .map(|(c, (a, b))| c * beta * (b - a))
                .sum())
        }
    }
}

/// Dissipation variation: supremum of `Σ D(z(s_{j−1}), z(s_j))` over
/// partitions, realized as nested dyadic refinements of the parameter
/// interval. Refinement stops once the value changes by less than
/// [`TOL_VAR`] or after [`MAX_REFINEMENTS`] doublings.
pub fn dissipation_variation(spec: &DissipationSpec, curve: &CurvePolyline) -> Result<f64> {
    if spec.homogeneity() != 1 {
        return Err(Error::UnsupportedDissipation(
            "variation is defined only for 1-homogeneous specs",
        ));
    }
    let (t0, t1) = (curve.times[0], *curve.times.last().expect("nonempty"));
    if curve.times.len() == 1 {
        return Ok(0.0);
    }
    let sum_at_depth = |depth: u32| -> Result<f64> {
        let n = 1usize << depth;
        let mut sum = 0.0;
        let mut prev = curve.value_at(t0);
        for j in 1..=n {
            let s = t0 + (t1 - t0) * (j as f64) / (n as f64);
            let next = curve.value_at(s);
            sum += dissipation_distance(spec, &prev, &next)?;
            if !sum.is_finite() {
                return Ok(f64::INFINITY);
            }
            prev = next;
        }
        Ok(sum)
    };
    let mut prev = sum_at_depth(0)?;
    if !prev.is_finite() {
        return Ok(f64::INFINITY);
    }
    for depth in 1..=MAX_REFINEMENTS {
        let cur = sum_at_depth(depth)?;
        if !cur.is_finite() {
            return Ok(f64::INFINITY);
        }
        if (cur - prev).abs() < TOL_VAR {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}
