//! Domain types shared by every module.
//!
//! Units are natural, with hbar = c = eps0 = 1. Lengths and inverse energies
//! share one unit; shift values carry an implicit factor 1/eps0.

use serde::Serialize;

use crate::error::{Error, Result};

/// A layer of index `n_l` and thickness `l` on top of a substrate of index `n_s`.
/// Vacuum occupies `z > l/2`, the layer `|z| < l/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stack {
    n_l: f64,
    n_s: f64,
    l: f64,
}

impl Stack {
    pub fn new(n_l: f64, n_s: f64, l: f64) -> Result<Self> {
        validate_stack(Stack { n_l, n_s, l })
    }

    /// A bare half-space of index `n`.
    pub fn half_space(n: f64) -> Result<Self> {
        Self::new(n, n, 0.0)
    }

    pub fn n_l(&self) -> f64 {
        self.n_l
    }

    pub fn n_s(&self) -> f64 {
        self.n_s
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Same indices, thickness replaced.
    pub fn with_l(&self, l: f64) -> Result<Self> {
        Self::new(self.n_l, self.n_s, l)
    }

    /// True when the layer is invisible: zero thickness or matched indices.
    pub fn is_half_space(&self) -> bool {
        self.l == 0.0 || self.n_l == self.n_s
    }
}

pub fn validate_stack(stack: Stack) -> Result<Stack> {
    let Stack { n_l, n_s, l } = stack;
    if !(n_l.is_finite() && n_s.is_finite() && l.is_finite()) {
        return Err(Error::InvalidParameter("non-finite stack parameter".into()));
    }
    if n_l < 1.0 || n_s < 1.0 {
        return Err(Error::InvalidParameter("index < 1".into()));
    }
    if l < 0.0 {
        return Err(Error::InvalidParameter("negative L".into()));
    }
    Ok(stack)
}

/// One dipole transition i -> j of the atom.
///
/// `e` is the signed energy E_j - E_i; negative values are downward transitions
/// available to an excited atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    e: f64,
    mu_par_sq: f64,
    mu_perp_sq: f64,
}

impl Transition {
    pub fn new(e: f64, mu_par_sq: f64, mu_perp_sq: f64) -> Result<Self> {
        if !(e.is_finite() && mu_par_sq.is_finite() && mu_perp_sq.is_finite()) {
            return Err(Error::InvalidParameter("non-finite transition parameter".into()));
        }
        if e == 0.0 {
            return Err(Error::InvalidParameter("transition energy must be nonzero".into()));
        }
        if mu_par_sq < 0.0 || mu_perp_sq < 0.0 {
            return Err(Error::InvalidParameter("negative dipole moment squared".into()));
        }
        if mu_par_sq == 0.0 && mu_perp_sq == 0.0 {
            return Err(Error::InvalidParameter("both dipole components vanish".into()));
        }
        Ok(Transition { e, mu_par_sq, mu_perp_sq })
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn mu_par_sq(&self) -> f64 {
        self.mu_par_sq
    }

    pub fn mu_perp_sq(&self) -> f64 {
        self.mu_perp_sq
    }

    pub fn is_downward(&self) -> bool {
        self.e < 0.0
    }
}

/// Distance of the atom from the vacuum-layer interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationPoint {
    z: f64,
}

impl EvaluationPoint {
    pub fn new(z: f64) -> Result<Self> {
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::InvalidParameter("Z must be finite and positive".into()));
        }
        Ok(EvaluationPoint { z })
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Polarization {
    Te,
    Tm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Te, Polarization::Tm];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl ShiftResult {
    pub fn zero() -> Self {
        ShiftResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true }
    }

    pub fn scaled(self, factor: f64) -> Self {
        ShiftResult {
            value: self.value * factor,
            abs_error: self.abs_error * factor.abs(),
            ..self
        }
    }
}

impl std::ops::Add for ShiftResult {
    type Output = ShiftResult;

    fn add(self, rhs: ShiftResult) -> ShiftResult {
        ShiftResult {
            value: self.value + rhs.value,
            abs_error: self.abs_error + rhs.abs_error,
            evaluations: self.evaluations + rhs.evaluations,
            converged: self.converged && rhs.converged,
        }
    }
}

/// Dimensionless distances a = |E| Z and b = |E| L.
pub fn reduced_units(transition: &Transition, point: &EvaluationPoint, stack: &Stack) -> (f64, f64) {
    let e = transition.e().abs();
    (e * point.z(), e * stack.l())
}
