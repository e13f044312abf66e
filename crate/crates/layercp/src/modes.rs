//! Normal modes of the layered half-space: travelling modes incident from
//! either side and modes trapped in the layer by total internal reflection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fresnel::{
    amended_reflection, polarization_vector, single_interface, stack_coefficients, wave_vectors, Side, C64,
};
use crate::greens::greens_hessian;
use crate::numerics::{
    bessel_j0, bessel_j1, bessel_j1_over_x, find_roots_bracketed, integrate_finite_vec, integrate_semi_infinite_vec,
    QuadratureConfig,
};
use crate::types::{Polarization, Stack};

const PI: f64 = std::f64::consts::PI;
const I: C64 = C64::new(0.0, 1.0);
/// Scan cells per unit of accumulated phase when bracketing trapped modes.
const CELLS_PER_PHASE: f64 = 64.0;

/// Full dispersion function 1 + r^{vl} r^{ls} exp(2 i kzl L) at vacuum z-component `kz`.
pub fn dispersion(stack: &Stack, k_par: f64, kz: C64, pol: Polarization) -> C64 {
    let wv = wave_vectors(stack, k_par, kz);
    let (nl, ns) = (stack.n_l(), stack.n_s());
    match (
        single_interface(1.0, nl, wv.kz, wv.kzl, pol),
        single_interface(nl, ns, wv.kzl, wv.kzs, pol),
    ) {
        (Ok((rvl, _)), Ok((rls, _))) => 1.0 + rvl * rls * (2.0 * I * wv.kzl * stack.l()).exp(),
        _ => C64::new(f64::NAN, f64::NAN),
    }
}

/// Open interval of decay constants q that can host trapped modes at `k_par`.
/// Empty unless n_l > n_s and L > 0.
pub fn trapped_window(stack: &Stack, k_par: f64) -> Option<(f64, f64)> {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    if !(nl > ns && stack.l() > 0.0 && k_par > 0.0) {
        return None;
    }
    Some((k_par * (1.0 - 1.0 / (ns * ns)).sqrt(), k_par * (1.0 - 1.0 / (nl * nl)).sqrt()))
}

struct Guide {
    k_par: f64,
    nl2: f64,
    ns2: f64,
    l: f64,
    wl: f64,
    ws: f64,
}

impl Guide {
    fn new(stack: &Stack, k_par: f64, pol: Polarization) -> Self {
        let (nl2, ns2) = (stack.n_l().powi(2), stack.n_s().powi(2));
        let (wl, ws) = match pol {
            Polarization::Te => (1.0, 1.0),
            Polarization::Tm => (1.0 / nl2, 1.0 / ns2),
        };
        Guide { k_par, nl2, ns2, l: stack.l(), wl, ws }
    }

    fn kzl_max(&self) -> f64 {
        self.k_par * (self.nl2 / self.ns2 - 1.0).max(0.0).sqrt()
    }

    fn q_of_kzl(&self, kzl: f64) -> f64 {
        (((self.nl2 - 1.0) * self.k_par * self.k_par - kzl * kzl).max(0.0) / self.nl2).sqrt()
    }

    fn kappa_s(&self, q: f64) -> f64 {
        (self.ns2 * q * q - (self.ns2 - 1.0) * self.k_par * self.k_par).max(0.0).sqrt()
    }

    fn kzl_of_q(&self, q: f64) -> f64 {
        ((self.nl2 - 1.0) * self.k_par * self.k_par - self.nl2 * q * q).max(0.0).sqrt()
    }

    fn reduced(&self, q: f64, kzl: f64) -> f64 {
        let p = kzl * self.wl;
        let phi = (self.kappa_s(q) * self.ws).atan2(p) - kzl * self.l;
        q * phi.cos() + p * phi.sin()
    }

    /// Continuous phase whose crossings of multiples of pi are the roots.
    fn phase(&self, kzl: f64) -> f64 {
        let q = self.q_of_kzl(kzl);
        let p = kzl * self.wl;
        (self.kappa_s(q) * self.ws).atan2(p) + q.atan2(p) - kzl * self.l
    }
}

/// Real reduced dispersion function on the trapped window; its zeros are the
/// trapped modes. It is a smooth, sign-changing form of `dispersion(i q)`.
pub fn reduced_dispersion(stack: &Stack, k_par: f64, q: f64, pol: Polarization) -> f64 {
    let g = Guide::new(stack, k_par, pol);
    g.reduced(q, g.kzl_of_q(q))
}

/// Continuous phase along the trapped window; trapped modes sit where it
/// crosses a non-positive multiple of pi. It equals pi at the upper edge of
/// the window and decreases (for the usual guides) towards the lower edge.
pub fn trapped_phase(stack: &Stack, k_par: f64, q: f64, pol: Polarization) -> f64 {
    let g = Guide::new(stack, k_par, pol);
    g.phase(g.kzl_of_q(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappedRoot {
    pub pol: Polarization,
    pub k_par: f64,
    /// Decay constant in vacuum; the vacuum z-component is i q.
    pub q: f64,
    /// Real z-component inside the layer.
    pub kzl: f64,
    /// Decay constant in the substrate.
    pub kappa_s: f64,
    /// |dispersion(i q)|
    pub residual: f64,
}

/// Trapped modes at `k_par`, ordered by decreasing q (fundamental first).
pub fn find_trapped_modes(stack: &Stack, k_par: f64, pol: Polarization, cfg: &QuadratureConfig) -> Result<Vec<TrappedRoot>> {
    find_trapped_modes_with_scan(stack, k_par, pol, None, cfg)
}

/// As [`find_trapped_modes`] with an explicit number of scan cells.
pub fn find_trapped_modes_with_scan(
    stack: &Stack,
    k_par: f64,
    pol: Polarization,
    scan_points: Option<usize>,
    cfg: &QuadratureConfig,
) -> Result<Vec<TrappedRoot>> {
    if !(k_par >= 0.0 && k_par.is_finite()) {
        return Err(Error::InvalidParameter("k_par must be finite and non-negative".into()));
    }
    if trapped_window(stack, k_par).is_none() {
        return Ok(Vec::new());
    }
    let g = Guide::new(stack, k_par, pol);
    let hi = g.kzl_max();
    let lo = hi * 1e-12;
    let end_phase = g.phase(hi);
    let expected = if end_phase <= 0.0 { (-end_phase / PI).floor() as usize + 1 } else { 0 };
    let cells = scan_points
        .unwrap_or_else(|| (CELLS_PER_PHASE * (hi * g.l + PI)).ceil() as usize)
        .max(4);
    let f = |kzl: f64| g.reduced(g.q_of_kzl(kzl), kzl);
    let exact_cfg = QuadratureConfig { abs_tol: 0.0, ..*cfg };
    let roots = find_roots_bracketed(f, lo, hi, cells, &exact_cfg);
    if roots.len() < expected {
        return Err(Error::ScanTooCoarse);
    }
    Ok(roots
        .into_iter()
        .map(|(kzl, _)| {
            let q = g.q_of_kzl(kzl);
            TrappedRoot {
                pol,
                k_par,
                q,
                kzl,
                kappa_s: g.kappa_s(q),
                residual: dispersion(stack, k_par, C64::new(0.0, q), pol).norm(),
            }
        })
        .collect())
}

/// Amplitudes of a trapped mode with the layer upward wave set to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappedAmplitudes {
    /// vacuum amplitude T^{lv}
    pub t_vac: C64,
    /// layer downward amplitude V
    pub v: C64,
    /// substrate amplitude T^{ls}
    pub t_sub: C64,
    pub t_lv: C64,
    pub t_ls: C64,
    pub r_lv: C64,
    pub r_ls: C64,
}

pub fn trapped_amplitudes(stack: &Stack, root: &TrappedRoot) -> Result<TrappedAmplitudes> {
    let (nl, ns, l) = (stack.n_l(), stack.n_s(), stack.l());
    let kz = C64::new(0.0, root.q);
    let kzl = C64::new(root.kzl, 0.0);
    let kzs = C64::new(0.0, root.kappa_s);
    let (r_lv, t_lv) = single_interface(nl, 1.0, kzl, kz, root.pol)?;
    let (r_ls, t_ls) = single_interface(nl, ns, kzl, kzs, root.pol)?;
    Ok(TrappedAmplitudes {
        t_vac: t_lv * (I * (kzl - kz) * l / 2.0).exp(),
        v: r_lv * (I * kzl * l).exp(),
        t_sub: t_ls / r_ls * (-I * (kzl + kzs) * l / 2.0).exp(),
        t_lv,
        t_ls,
        r_lv,
        r_ls,
    })
}

/// Bracket B in N = 1 / (2 pi sqrt(B)); B is the z-integral of n^2 |profile|^2.
pub fn trapped_bracket(stack: &Stack, root: &TrappedRoot) -> Result<f64> {
    let amp = trapped_amplitudes(stack, root)?;
    let (nl2, ns2, l) = (stack.n_l().powi(2), stack.n_s().powi(2), stack.l());
    let (k, q, kzl, ks) = (root.k_par, root.q, root.kzl, root.kappa_s);
    let w2 = k * k - q * q;
    // e*(k_l^+) . e(k_l^-) and |e|^2 on the evanescent sides
    let (dot, e_sub, e_vac) = match root.pol {
        Polarization::Te => (1.0, 1.0, 1.0),
        Polarization::Tm => (
            (k * k - kzl * kzl) / (nl2 * w2),
            (ks * ks + k * k) / (ns2 * w2),
            (q * q + k * k) / w2,
        ),
    };
    let side = |n2: f64, e2: f64, t: C64, r: C64, kappa: f64| {
        n2 / 2.0 * e2 * t.norm_sqr() / kappa - nl2 / kzl * r.im * dot
    };
    let sub = side(ns2, e_sub, amp.t_ls, amp.r_ls, ks);
    let vac = side(1.0, e_vac, amp.t_lv, amp.r_lv, q);
    Ok(2.0 * nl2 * l + sub + vac)
}

/// Normalisation constant N of a trapped mode.
pub fn trapped_normalization(stack: &Stack, root: &TrappedRoot) -> Result<f64> {
    let b = trapped_bracket(stack, root)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::NormalizationBreakdown(b));
    }
    Ok(1.0 / (2.0 * PI * b.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeKind {
    /// incident from the substrate; `label` is the substrate z-component
    Left,
    /// incident from vacuum; `label` is the vacuum z-component
    Right,
    /// trapped in the layer; `label` is the vacuum decay constant q
    Trapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub pol: Polarization,
    pub kx: f64,
    pub ky: f64,
    pub label: f64,
}

impl Mode {
    pub fn k_par(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    /// Vacuum z-component, imaginary for evanescent tails.
    pub fn vacuum_kz(&self, stack: &Stack) -> C64 {
        let k2 = self.k_par().powi(2);
        match self.kind {
            ModeKind::Right => C64::new(self.label, 0.0),
            ModeKind::Trapped => C64::new(0.0, self.label),
            ModeKind::Left => {
                let ns2 = stack.n_s().powi(2);
                let kz2 = (k2 + self.label * self.label) / ns2 - k2;
                if kz2 >= 0.0 {
                    C64::new(kz2.sqrt(), 0.0)
                } else {
                    C64::new(0.0, (-kz2).sqrt())
                }
            }
        }
    }

    pub fn omega(&self, stack: &Stack) -> f64 {
        let kz = self.vacuum_kz(stack);
        (self.k_par().powi(2) + (kz * kz).re).max(0.0).sqrt()
    }
}

/// Vector potential mode function at `pos` (centred coordinates).
pub fn mode_function(stack: &Stack, mode: &Mode, pos: [f64; 3]) -> Result<[C64; 3]> {
    let k = mode.k_par();
    if !(k > 0.0 && mode.label > 0.0) {
        return Err(Error::InvalidParameter("mode needs k_par > 0 and a positive label".into()));
    }
    let phi = mode.ky.atan2(mode.kx);
    let kz = mode.vacuum_kz(stack);
    let omega = mode.omega(stack);
    let wv = wave_vectors(stack, k, kz);
    let (nl, ns) = (stack.n_l(), stack.n_s());
    let half = stack.l() / 2.0;
    let z = pos[2];
    let plane = (I * (mode.kx * pos[0] + mode.ky * pos[1])).exp();
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut add = |amp: C64, kzw: C64, n: f64| {
        let e = polarization_vector(mode.pol, k, phi, kzw, n * omega);
        let w = amp * (I * kzw * z).exp() * plane;
        for (o, ei) in out.iter_mut().zip(e) {
            *o += w * ei;
        }
    };
    let region = if z >= half { 0 } else if z >= -half { 1 } else { 2 };
    let cube = (2.0 * PI).powf(1.5);
    match mode.kind {
        ModeKind::Left => {
            let c = stack_coefficients(stack, &wv, mode.pol, Side::Left)?;
            let n0 = 1.0 / (cube * ns);
            match region {
                0 => add(n0 * c.t, wv.kz, 1.0),
                1 => {
                    add(n0 * c.i, wv.kzl, nl);
                    add(n0 * c.j, -wv.kzl, nl);
                }
                _ => {
                    add(C64::new(n0, 0.0), wv.kzs, ns);
                    add(n0 * c.r, -wv.kzs, ns);
                }
            }
        }
        ModeKind::Right => {
            let c = stack_coefficients(stack, &wv, mode.pol, Side::Right)?;
            let n0 = 1.0 / cube;
            match region {
                0 => {
                    add(C64::new(n0, 0.0), -wv.kz, 1.0);
                    add(n0 * c.r, wv.kz, 1.0);
                }
                1 => {
                    add(n0 * c.i, -wv.kzl, nl);
                    add(n0 * c.j, wv.kzl, nl);
                }
                _ => add(n0 * c.t, -wv.kzs, ns),
            }
        }
        ModeKind::Trapped => {
            let g = Guide::new(stack, k, mode.pol);
            let kzl = g.kzl_of_q(mode.label);
            let root = TrappedRoot {
                pol: mode.pol,
                k_par: k,
                q: mode.label,
                kzl,
                kappa_s: g.kappa_s(mode.label),
                residual: 0.0,
            };
            let amp = trapped_amplitudes(stack, &root)?;
            let n0 = trapped_normalization(stack, &root)?;
            let kzl = C64::new(kzl, 0.0);
            let kzs = C64::new(0.0, root.kappa_s);
            match region {
                0 => add(n0 * amp.t_vac, kz, 1.0),
                1 => {
                    add(C64::new(n0, 0.0), kzl, nl);
                    add(n0 * amp.v, -kzl, nl);
                }
                _ => add(n0 * amp.t_sub, -kzs, ns),
            }
        }
    }
    Ok(out)
}

/// Component pair (i, j) of the reflected Green's tensor compared by the audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditResult {
    pub mode_sum: f64,
    /// imaginary part of the mode sum, zero up to quadrature error
    pub mode_sum_imag: f64,
    pub target: f64,
    pub residual: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Mode-sum reconstruction of the reflected Green's tensor
/// -d_i d'_j G_H(r, r') for two points in vacuum separated by `rho` along x.
///
/// The sum over all modes reduces to (i) the cross term of the right-incident
/// travelling modes, an integral of R^R over the whole real kz axis, (ii) the
/// left-incident modes that are evanescent in vacuum and (iii) the trapped
/// modes. The kz-integral (i) is taken over [-K, K] plus two vertical rays
/// into the upper half plane.
pub fn completeness_audit(
    stack: &Stack,
    z: f64,
    zp: f64,
    rho: f64,
    comp: (usize, usize),
    cfg: &QuadratureConfig,
) -> Result<AuditResult> {
    let half = stack.l() / 2.0;
    if !(z > half && zp > half && z.is_finite() && zp.is_finite()) {
        return Err(Error::InvalidParameter("both points must lie in vacuum".into()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter("rho must be finite and non-negative".into()));
    }
    let (ci, cj) = comp;
    if ci > 2 || cj > 2 {
        return Err(Error::InvalidParameter("component index must be 0, 1 or 2".into()));
    }
    let s = z + zp;
    let d = s - stack.l();
    let target = -greens_hessian(stack, rho, 0.0, s, cfg)?.value[ci][cj];
    let zero_by_symmetry = matches!((ci, cj), (0, 1) | (1, 0) | (1, 2) | (2, 1));
    if zero_by_symmetry {
        return Ok(AuditResult {
            mode_sum: 0.0,
            mode_sum_imag: 0.0,
            target,
            residual: target.abs(),
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }

    let inner = QuadratureConfig {
        rel_tol: (cfg.rel_tol * 1e-2).max(1e-12),
        abs_tol: 0.0,
        max_subdivisions: cfg.max_subdivisions.max(2000),
        ..*cfg
    };
    let failure = std::sync::Mutex::new(None::<Error>);
    let flag = std::sync::atomic::AtomicBool::new(true);
    let evals = std::sync::atomic::AtomicUsize::new(0);

    let outer = |k: f64| -> [f64; 2] {
        match per_k(stack, k, s, d, &inner) {
            Ok((g, conv, n)) => {
                if !conv {
                    flag.store(false, std::sync::atomic::Ordering::Relaxed);
                }
                evals.fetch_add(n, std::sync::atomic::Ordering::Relaxed);
                let u = k * rho;
                let (j0, j1x, j1) = (bessel_j0(u), bessel_j1_over_x(u), bessel_j1(u));
                let [g_te, g_a, g_b, g_c] = g;
                let v = match (ci, cj) {
                    (0, 0) => j1x * g_te + (j0 - j1x) * g_a,
                    (1, 1) => (j0 - j1x) * g_te + j1x * g_a,
                    (2, 2) => j0 * g_c,
                    (0, 2) => -I * j1 * g_b,
                    _ => I * j1 * g_b,
                };
                let v = v * (k / (4.0 * PI * PI));
                [v.re, v.im]
            }
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                [0.0, 0.0]
            }
        }
    };
    let q = integrate_semi_infinite_vec(outer, 0.0, d, &[], cfg);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mode_sum = q.values[0];
    Ok(AuditResult {
        mode_sum,
        mode_sum_imag: q.values[1],
        target,
        residual: (mode_sum - target).abs(),
        abs_error: q.abs_errors[0],
        evaluations: q.evaluations + evals.into_inner(),
        converged: q.converged && flag.into_inner(),
    })
}

/// The four kz-integrals g(k) for TE and the three TM weights
/// -kz^2/w^2, k kz/w^2, k^2/w^2 (w^2 = k^2 + kz^2).
fn per_k(stack: &Stack, k: f64, s: f64, d: f64, cfg: &QuadratureConfig) -> Result<([C64; 4], bool, usize)> {
    let weights = |kz: C64| {
        let w2 = k * k + kz * kz;
        [-kz * kz / w2, k * kz / w2, C64::new(k * k, 0.0) / w2]
    };
    let cross = |kz: C64| -> Result<[C64; 4]> {
        let wv = wave_vectors(stack, k, kz);
        let e = (I * kz * d).exp();
        let rte = amended_reflection(stack, &wv, Polarization::Te)? * e;
        let rtm = amended_reflection(stack, &wv, Polarization::Tm)? * e;
        let w = weights(kz);
        Ok([rte, rtm * w[0], rtm * w[1], rtm * w[2]])
    };
    let err = std::cell::RefCell::new(None::<Error>);
    let flat = |v: Result<[C64; 4]>| -> [f64; 8] {
        match v {
            Ok(v) => [v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im, v[3].re, v[3].im],
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                [0.0; 8]
            }
        }
    };
    let big_k = 1.5 * k + 2.0 / d;
    // absolute floor on the scale of the largest component, |R| <= 1 over 2K
    let cfg = &QuadratureConfig { abs_tol: cfg.abs_tol.max(cfg.rel_tol * big_k), ..*cfg };
    let real = integrate_finite_vec(|x| flat(cross(C64::new(x, 0.0))), &[-big_k, 0.0, big_k], cfg);
    let rays = integrate_semi_infinite_vec(
        |t| {
            flat(cross(C64::new(big_k, t)).and_then(|a| {
                let b = cross(C64::new(-big_k, t))?;
                Ok([0, 1, 2, 3].map(|m| I * (a[m] - b[m])))
            }))
        },
        0.0,
        d,
        &[],
        cfg,
    );

    // left-incident modes evanescent in vacuum
    let ns = stack.n_s();
    let gamma = k * (ns * ns - 1.0).sqrt() / ns;
    let evan = integrate_finite_vec(
        |t| {
            let kz = C64::new(0.0, t);
            flat((|| {
                let wv = wave_vectors(stack, k, kz);
                let w = weights(kz);
                let te = stack_coefficients(stack, &wv, Polarization::Te, Side::Left)?.t.norm_sqr();
                let tm = stack_coefficients(stack, &wv, Polarization::Tm, Side::Left)?.t.norm_sqr();
                let f = t / wv.kzs.re * (-t * s).exp();
                Ok([C64::new(te * f, 0.0), tm * f * w[0], tm * f * w[1], tm * f * w[2]])
            })())
        },
        &[0.0, gamma],
        cfg,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }

    let mut out = [C64::new(0.0, 0.0); 4];
    for m in 0..4 {
        let pick = |v: &[f64; 8]| C64::new(v[2 * m], v[2 * m + 1]);
        out[m] = pick(&real.values) + pick(&rays.values) + pick(&evan.values);
    }
    let cube = (2.0 * PI).powi(3);
    for pol in Polarization::BOTH {
        for root in find_trapped_modes(stack, k, pol, cfg)? {
            let amp = trapped_amplitudes(stack, &root)?;
            let n = trapped_normalization(stack, &root)?;
            let f = cube * n * n * amp.t_vac.norm_sqr() * (-root.q * s).exp();
            match pol {
                Polarization::Te => out[0] += f,
                Polarization::Tm => {
                    let w = weights(C64::new(0.0, root.q));
                    for m in 0..3 {
                        out[m + 1] += f * w[m];
                    }
                }
            }
        }
    }
    let conv = real.converged && rays.converged && evan.converged;
    Ok((out, conv, real.evaluations + rays.evaluations + evan.evaluations))
}
