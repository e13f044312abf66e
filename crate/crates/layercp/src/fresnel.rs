//! Fresnel coefficients of single interfaces and of the layer + substrate stack.
//!
//! Geometry: vacuum for z > L/2, layer for |z| < L/2, substrate for z < -L/2.
//! Wave vectors share the transverse part k_par; the z-components obey
//! kz_i^2 = (n_i^2 - 1) k_par^2 + n_i^2 kz^2.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{Polarization, Stack};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVectorSet {
    pub k_par: f64,
    pub kz: C64,
    pub kzl: C64,
    pub kzs: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Side {
    Left,
    Right,
}

/// Amplitudes of one travelling mode: reflected, the two layer waves, transmitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub r: C64,
    pub i: C64,
    pub j: C64,
    pub t: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaBranch {
    Travelling,
    Evanescent,
}

/// z-component in a medium of index `n`. Propagating values keep the sign of
/// `kz`; otherwise the root with non-negative imaginary part is taken, which is
/// also the continuation of the propagating branch into the upper half plane.
pub fn medium_kz(n: f64, k_par: f64, kz: C64) -> C64 {
    if n == 1.0 {
        return kz;
    }
    let radicand = (n * n - 1.0) * k_par * k_par + n * n * kz * kz;
    let mut w = radicand.sqrt();
    if w.im < 0.0 {
        w = -w;
    }
    if kz.im == 0.0 && kz.re < 0.0 && w.im == 0.0 {
        w = -w;
    }
    w
}

pub fn wave_vectors(stack: &Stack, k_par: f64, kz: C64) -> WaveVectorSet {
    WaveVectorSet {
        k_par,
        kz,
        kzl: medium_kz(stack.n_l(), k_par, kz),
        kzs: medium_kz(stack.n_s(), k_par, kz),
    }
}

/// Reflection and transmission for a wave in medium b hitting medium a.
pub fn single_interface(n_b: f64, n_a: f64, kz_b: C64, kz_a: C64, pol: Polarization) -> Result<(C64, C64)> {
    let (pb, pa, tfac) = match pol {
        Polarization::Te => (kz_b, kz_a, 1.0),
        Polarization::Tm => (kz_b / (n_b * n_b), kz_a / (n_a * n_a), 1.0 / (n_a * n_b)),
    };
    let den = pb + pa;
    let scale = pb.norm() + pa.norm();
    if den.norm() <= 1e-300 || den.norm() <= 1e-15 * scale || !den.is_finite() {
        return Err(Error::DegenerateIncidence);
    }
    Ok(((pb - pa) / den, 2.0 * kz_b * tfac / den))
}

struct Interfaces {
    vl: (C64, C64),
    lv: (C64, C64),
    ls: (C64, C64),
    sl: (C64, C64),
}

fn interfaces(stack: &Stack, wv: &WaveVectorSet, pol: Polarization) -> Result<Interfaces> {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    Ok(Interfaces {
        vl: single_interface(1.0, nl, wv.kz, wv.kzl, pol)?,
        lv: single_interface(nl, 1.0, wv.kzl, wv.kz, pol)?,
        ls: single_interface(nl, ns, wv.kzl, wv.kzs, pol)?,
        sl: single_interface(ns, nl, wv.kzs, wv.kzl, pol)?,
    })
}

fn checked_denominator(d: C64, kz: C64) -> Result<C64> {
    if d.norm() < 1e-13 || !d.is_finite() {
        Err(Error::DispersionPole(kz))
    } else {
        Ok(d)
    }
}

/// All amplitudes of the left- or right-incident travelling mode.
pub fn stack_coefficients(stack: &Stack, wv: &WaveVectorSet, pol: Polarization, side: Side) -> Result<CoefficientSet> {
    let l = stack.l();
    let f = interfaces(stack, wv, pol)?;
    let (kz, kzl, kzs) = (wv.kz, wv.kzl, wv.kzs);
    let e2 = (2.0 * I * kzl * l).exp();
    match side {
        Side::Left => {
            let d = checked_denominator(1.0 + f.sl.0 * f.lv.0 * e2, kz)?;
            Ok(CoefficientSet {
                r: (f.sl.0 + f.lv.0 * e2) / d * (-I * kzs * l).exp(),
                i: f.sl.1 * (I * (kzl - kzs) * l / 2.0).exp() / d,
                j: f.sl.1 * f.lv.0 * (I * (3.0 * kzl - kzs) * l / 2.0).exp() / d,
                t: f.sl.1 * f.lv.1 * (I * (2.0 * kzl - kzs - kz) * l / 2.0).exp() / d,
            })
        }
        Side::Right => {
            let d = checked_denominator(1.0 + f.vl.0 * f.ls.0 * e2, kz)?;
            Ok(CoefficientSet {
                r: (f.vl.0 + f.ls.0 * e2) / d * (-I * kz * l).exp(),
                i: f.vl.1 * (I * (kzl - kz) * l / 2.0).exp() / d,
                j: f.vl.1 * f.ls.0 * (I * (3.0 * kzl - kz) * l / 2.0).exp() / d,
                t: f.vl.1 * f.ls.1 * (I * (2.0 * kzl - kzs - kz) * l / 2.0).exp() / d,
            })
        }
    }
}

/// Right-incidence reflection coefficient with the phase exp(-i kz L) removed.
pub fn amended_reflection(stack: &Stack, wv: &WaveVectorSet, pol: Polarization) -> Result<C64> {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    let (rvl, _) = single_interface(1.0, nl, wv.kz, wv.kzl, pol)?;
    let (rls, _) = single_interface(nl, ns, wv.kzl, wv.kzs, pol)?;
    let e2 = (2.0 * I * wv.kzl * stack.l()).exp();
    let d = checked_denominator(1.0 + rvl * rls * e2, wv.kz)?;
    Ok((rvl + rls * e2) / d)
}

/// As [`amended_reflection`] without the pole guard; used where the caller
/// integrates across guided-mode poles symmetrically.
pub fn amended_reflection_unguarded(stack: &Stack, wv: &WaveVectorSet, pol: Polarization) -> Result<C64> {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    let (rvl, _) = single_interface(1.0, nl, wv.kz, wv.kzl, pol)?;
    let (rls, _) = single_interface(nl, ns, wv.kzl, wv.kzs, pol)?;
    let e2 = (2.0 * I * wv.kzl * stack.l()).exp();
    Ok((rvl + rls * e2) / (1.0 + rvl * rls * e2))
}

/// Amended reflection on the imaginary frequency axis of the ground-state
/// kernel: kz_i = i x E sqrt((n_i^2 - 1) y^2 + 1), 0 <= y <= 1.
pub fn scaled_reflection_imaginary_axis(stack: &Stack, e_scale: f64, x: f64, y: f64, pol: Polarization) -> f64 {
    let xi = |n: f64| ((n * n - 1.0) * y * y + 1.0).sqrt();
    let xe = x * e_scale.abs();
    let wv = WaveVectorSet {
        k_par: xe * (1.0 - y * y).max(0.0).sqrt(),
        kz: C64::new(0.0, xe),
        kzl: C64::new(0.0, xe * xi(stack.n_l())),
        kzs: C64::new(0.0, xe * xi(stack.n_s())),
    };
    amended_reflection(stack, &wv, pol).map(|r| r.re).unwrap_or(f64::NAN)
}

/// Wave vectors of the resonant excited-state integrals, parametrised by eta.
pub fn eta_wave_vectors(stack: &Stack, e_scale: f64, eta: f64, branch: EtaBranch) -> WaveVectorSet {
    let e = e_scale.abs();
    match branch {
        EtaBranch::Travelling => {
            let kzi = |n: f64| C64::new(e * (n * n - 1.0 + eta * eta).sqrt(), 0.0);
            WaveVectorSet {
                k_par: e * (1.0 - eta * eta).max(0.0).sqrt(),
                kz: C64::new(e * eta, 0.0),
                kzl: kzi(stack.n_l()),
                kzs: kzi(stack.n_s()),
            }
        }
        EtaBranch::Evanescent => {
            let kzi = |n: f64| {
                let rad = n * n - 1.0 - eta * eta;
                if rad >= 0.0 {
                    C64::new(e * rad.sqrt(), 0.0)
                } else {
                    C64::new(0.0, e * (-rad).sqrt())
                }
            };
            WaveVectorSet {
                k_par: e * (1.0 + eta * eta).sqrt(),
                kz: C64::new(0.0, e * eta),
                kzl: kzi(stack.n_l()),
                kzs: kzi(stack.n_s()),
            }
        }
    }
}

pub fn eta_reflection(stack: &Stack, e_scale: f64, eta: f64, branch: EtaBranch, pol: Polarization) -> Result<C64> {
    amended_reflection_unguarded(stack, &eta_wave_vectors(stack, e_scale, eta, branch), pol)
}

/// Polarization vector of a plane wave with transverse wave number `k_par`
/// along azimuth `phi`, z-component `kz`, in a medium where |k| = `k_norm`
/// (n times the vacuum frequency). Unit length only for real wave vectors.
pub fn polarization_vector(pol: Polarization, k_par: f64, phi: f64, kz: C64, k_norm: f64) -> [C64; 3] {
    let (s, c) = phi.sin_cos();
    match pol {
        Polarization::Te => [C64::new(s, 0.0), C64::new(-c, 0.0), C64::new(0.0, 0.0)],
        Polarization::Tm => [c * kz / k_norm, s * kz / k_norm, C64::new(-k_par / k_norm, 0.0)],
    }
}
