//! Electrostatic Green's function of the layered half-space and electrostatic shifts.
//!
//! Positions are measured from the centre of the layer, so both points lie in
//! vacuum when z, z' > L/2; `s = z + z'` and the image depth is `s - L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, bessel_j1, bessel_j1_over_x, integrate_semi_infinite_vec, Quadrature, QuadratureConfig};
use crate::types::{ShiftResult, Stack};

const PI: f64 = std::f64::consts::PI;

/// Quasi-static reflection kernel (alpha - beta e^{-2kL}) / (1 - alpha beta e^{-2kL}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageKernel {
    pub alpha: f64,
    pub beta: f64,
    pub r_im: f64,
    pub l: f64,
}

impl ImageKernel {
    pub fn new(stack: &Stack) -> Self {
        let (nl2, ns2) = (stack.n_l().powi(2), stack.n_s().powi(2));
        let alpha = (nl2 - 1.0) / (nl2 + 1.0);
        let beta = (nl2 - ns2) / (nl2 + ns2);
        ImageKernel { alpha, beta, r_im: alpha * beta, l: stack.l() }
    }

    pub fn at(&self, k: f64) -> f64 {
        let x = (-2.0 * k * self.l).exp();
        (self.alpha - self.beta * x) / (1.0 - self.r_im * x)
    }
}

/// Reflected part G_H of the electrostatic Green's function at transverse
/// separation `rho` and `s = z + z'`.
pub fn greens_reflected(stack: &Stack, rho: f64, s: f64, cfg: &QuadratureConfig) -> Result<Quadrature> {
    let d = image_depth(stack, rho, s)?;
    let kern = ImageKernel::new(stack);
    let q = integrate_semi_infinite_vec(
        |k| [(-k * d).exp() * kern.at(k) * bessel_j0(k * rho)],
        0.0,
        d,
        &[],
        cfg,
    );
    let mut out = q.component(0);
    out.value *= -1.0 / (4.0 * PI);
    out.abs_error /= 4.0 * PI;
    Ok(out)
}

fn image_depth(stack: &Stack, rho: f64, s: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter("rho must be finite and non-negative".into()));
    }
    let d = s - stack.l();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter("need s = z + z' > L".into()));
    }
    Ok(d)
}

/// Mixed second derivatives d_i d'_j G_H (i acting on r, j on r'), for the
/// transverse separation (dx, dy) = r_par - r'_par and `s = z + z'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensHessian {
    pub value: [[f64; 3]; 3],
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn greens_hessian(stack: &Stack, dx: f64, dy: f64, s: f64, cfg: &QuadratureConfig) -> Result<GreensHessian> {
    let rho = dx.hypot(dy);
    let d = image_depth(stack, rho, s)?;
    let kern = ImageKernel::new(stack);
    // k^2 K e^{-kd} times J0(k rho), J1(k rho)/(k rho), J1(k rho)
    let q = integrate_semi_infinite_vec(
        |k| {
            let w = k * k * (-k * d).exp() * kern.at(k);
            let u = k * rho;
            [w * bessel_j0(u), w * bessel_j1_over_x(u), w * bessel_j1(u)]
        },
        0.0,
        d,
        &[],
        cfg,
    );
    let [a0, a1x, a1] = q.values;
    let n = if rho > 0.0 { [dx / rho, dy / rho] } else { [1.0, 0.0] };
    let mut m = [[0.0; 3]; 3];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[i][j] = a0 * n[i] * n[j] - a1x * (2.0 * n[i] * n[j] - delta);
        }
        m[i][2] = a1 * n[i];
        m[2][i] = -a1 * n[i];
    }
    m[2][2] = a0;
    let pre = -1.0 / (4.0 * PI);
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= pre;
        }
    }
    let abs_error = q.abs_errors.iter().fold(0.0f64, |acc, e| acc.max(*e)) * 2.0 / (4.0 * PI);
    Ok(GreensHessian { value: m, abs_error, evaluations: q.evaluations, converged: q.converged })
}

/// int_0^inf k^2 e^{-2kZ} K(k) dk
pub fn electrostatic_integral(stack: &Stack, z: f64, cfg: &QuadratureConfig) -> Result<Quadrature> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidParameter("Z must be finite and positive".into()));
    }
    let kern = ImageKernel::new(stack);
    Ok(integrate_semi_infinite_vec(|k| [k * k * (-2.0 * k * z).exp() * kern.at(k)], 0.0, 2.0 * z, &[], cfg).component(0))
}

fn to_shift(q: Quadrature, factor: f64) -> ShiftResult {
    ShiftResult {
        value: q.value * factor,
        abs_error: q.abs_error * factor.abs(),
        evaluations: q.evaluations,
        converged: q.converged,
    }
}

/// Non-retarded shift -(1/16 pi)(mu_par^2 + 2 mu_perp^2) int k^2 e^{-2kZ} K dk.
pub fn electrostatic_shift(stack: &Stack, mu_par_sq: f64, mu_perp_sq: f64, z: f64, cfg: &QuadratureConfig) -> Result<ShiftResult> {
    let q = electrostatic_integral(stack, z, cfg)?;
    Ok(to_shift(q, -(mu_par_sq + 2.0 * mu_perp_sq) / (16.0 * PI)))
}

/// Electrostatic shift of a bare half-space of index `n`.
pub fn halfspace_electrostatic(n: f64, mu_par_sq: f64, mu_perp_sq: f64, z: f64) -> f64 {
    let n2 = n * n;
    -(n2 - 1.0) / (n2 + 1.0) * (mu_par_sq + 2.0 * mu_perp_sq) / (64.0 * PI * z.powi(3))
}

/// Image-series form: the half-space shift of the layer material plus a
/// geometric series in alpha*beta. `terms = None` truncates automatically.
pub fn electrostatic_shift_series(
    stack: &Stack,
    mu_par_sq: f64,
    mu_perp_sq: f64,
    z: f64,
    terms: Option<usize>,
) -> Result<ShiftResult> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidParameter("Z must be finite and positive".into()));
    }
    let nl = stack.n_l();
    if nl == 1.0 {
        return Err(Error::SeriesSingular);
    }
    let mu = mu_par_sq + 2.0 * mu_perp_sq;
    let base = halfspace_electrostatic(nl, mu_par_sq, mu_perp_sq, z);
    let r = ImageKernel::new(stack).r_im;
    let l = stack.l();
    let pre = mu / (16.0 * PI) * nl * nl / (nl.powi(4) - 1.0);
    let mut sum = 0.0;
    let mut used = 0usize;
    if r != 0.0 {
        let mut rv = 1.0;
        let max_terms = terms.unwrap_or(100_000);
        for nu in 1..=max_terms {
            rv *= r;
            sum += rv / (z + nu as f64 * l).powi(3);
            used = nu;
            if terms.is_none() {
                // a priori tail bound from the geometric ratio
                let tail = (rv * r).abs() / ((1.0 - r.abs()) * (z + (nu + 1) as f64 * l).powi(3));
                if tail <= 1e-16 * (sum * pre + base).abs() / pre.abs().max(1e-300) {
                    break;
                }
            }
        }
    }
    Ok(ShiftResult { value: base + pre * sum, abs_error: 0.0, evaluations: used, converged: true })
}

/// Dipole energy (1/2) sum_i <mu_i^2> d_i d'_i G_H at coincident points,
/// with the parallel moment split equally between x and y.
pub fn dipole_energy_from_green(
    mu_par_sq: f64,
    mu_perp_sq: f64,
    z: f64,
    stack: &Stack,
    cfg: &QuadratureConfig,
) -> Result<ShiftResult> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidParameter("Z must be finite and positive".into()));
    }
    let h = greens_hessian(stack, 0.0, 0.0, 2.0 * z + stack.l(), cfg)?;
    let m = h.value;
    let value = 0.5 * (0.5 * mu_par_sq * (m[0][0] + m[1][1]) + mu_perp_sq * m[2][2]);
    Ok(ShiftResult {
        value,
        abs_error: h.abs_error * (mu_par_sq + mu_perp_sq),
        evaluations: h.evaluations,
        converged: h.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn vacuum_is_zero() {
        let v = Stack::new(1.0, 1.0, 0.4).unwrap();
        assert_eq!(greens_reflected(&v, 0.3, 2.0, &cfg()).unwrap().value, 0.0);
        assert_eq!(dipole_energy_from_green(1.0, 1.0, 1.0, &v, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn single_image_charge() {
        let s = Stack::new(1.5, 1.5, 0.0).unwrap();
        let (rho, sz) = (0.3, 2.0);
        let want = -(1.25 / 3.25) / (4.0 * PI) / (rho * rho + sz * sz as f64).sqrt();
        let got = greens_reflected(&s, rho, sz, &cfg()).unwrap().value;
        assert!((got - want).abs() < 1e-11 * want.abs());
    }

    #[test]
    fn halfspace_shift() {
        let s = Stack::new(1.5, 1.5, 0.6).unwrap();
        let got = electrostatic_shift(&s, 1.0, 0.5, 0.8, &cfg()).unwrap().value;
        let want = halfspace_electrostatic(1.5, 1.0, 0.5, 0.8);
        assert!((got - want).abs() < 1e-10 * want.abs());
        let s2 = Stack::new(2.0, 2.0, 0.0).unwrap();
        let d = dipole_energy_from_green(1.0, 1.0, 1.0, &s2, &cfg()).unwrap().value;
        assert!((d + 3.0 * 0.6 / (64.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn far_vacuum_layer() {
        let s = Stack::new(1.0, 2.0, 200.0).unwrap();
        let v = electrostatic_shift(&s, 1.0, 1.0, 1.0, &cfg()).unwrap().value;
        assert!(v.abs() < 1e-6 * halfspace_electrostatic(2.0, 1.0, 1.0, 1.0).abs());
    }

    #[test]
    fn series_errors_and_trivial_cases() {
        let s = Stack::new(1.0, 1.5, 0.3).unwrap();
        assert_eq!(electrostatic_shift_series(&s, 1.0, 1.0, 1.0, None), Err(Error::SeriesSingular));
        let m = Stack::new(1.8, 1.8, 0.3).unwrap();
        let v = electrostatic_shift_series(&m, 1.0, 1.0, 1.0, None).unwrap();
        assert_eq!(v.value, halfspace_electrostatic(1.8, 1.0, 1.0, 1.0));
    }

    #[test]
    fn hessian_symmetries() {
        let s = Stack::new(2.0, 1.5, 0.5).unwrap();
        let h = greens_hessian(&s, 0.3, 0.0, 2.0, &cfg()).unwrap().value;
        assert!(h[0][1].abs() < 1e-14 && h[1][2].abs() < 1e-14);
        assert!((h[0][2] + h[2][0]).abs() < 1e-14);
        // trace of the transverse block plus zz vanishes: G_H is harmonic
        // in r, so d_x^2 + d_y^2 + d_z^2 = 0, and d'_i = -d_i, d'_z = d_z.
        assert!((h[0][0] + h[1][1] - h[2][2]).abs() < 1e-10 * h[2][2].abs());
    }
}
