//! Exact energy-shift kernels.
//!
//! Everything is expressed in the reduced variables a = |E| Z and b = |E| L;
//! the stack supplies the two indices and its own thickness is ignored.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fresnel::{eta_reflection, scaled_reflection_imaginary_axis, EtaBranch, C64};
use crate::modes::{reduced_dispersion, trapped_phase};
use crate::numerics::{
    find_roots_bracketed, integrate_finite_vec, refine_bracket, Bracket, integrate_principal_value_vec, integrate_semi_infinite_vec, QuadratureConfig,
    QuadratureN,
};
use crate::types::{reduced_units, EvaluationPoint, Polarization, ShiftResult, Stack, Transition};

const PI: f64 = std::f64::consts::PI;

/// Double integrals I_par, I_perp of the non-resonant shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundKernel {
    pub i_par: f64,
    pub i_perp: f64,
    /// sign of E; the assembled shift carries E^3
    pub sign: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl GroundKernel {
    /// Shift (E^3 / 8 pi^2)(mu_par^2 I_par + mu_perp^2 I_perp) for |E| = `e_abs`.
    pub fn assemble(&self, e_abs: f64, mu_par_sq: f64, mu_perp_sq: f64) -> ShiftResult {
        let pre = self.sign * e_abs.powi(3) / (8.0 * PI * PI);
        ShiftResult {
            value: pre * (mu_par_sq * self.i_par + mu_perp_sq * self.i_perp),
            abs_error: pre.abs() * (mu_par_sq + mu_perp_sq) * self.abs_error,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter("a must be finite and positive".into()));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter("b must be finite and non-negative".into()));
    }
    Ok(())
}

/// Ground-state kernel at reduced distance `a` and reduced thickness `b`.
pub fn ground_kernel(stack: &Stack, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<GroundKernel> {
    check_ab(a, b)?;
    let st = stack.with_l(b)?;
    if st.n_l() == 1.0 && st.n_s() == 1.0 {
        return Ok(GroundKernel { i_par: 0.0, i_perp: 0.0, sign: 1.0, abs_error: 0.0, evaluations: 0, converged: true });
    }
    let inner_cfg = QuadratureConfig { rel_tol: cfg.rel_tol * 1e-2, abs_tol: 0.0, ..*cfg };
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let inner_ok = std::sync::atomic::AtomicBool::new(true);
    let outer = |x: f64| -> [f64; 2] {
        let inner = |y: f64| {
            let w = 1.0 / (1.0 + x * x * y * y);
            let te = scaled_reflection_imaginary_axis(&st, 1.0, x, y, Polarization::Te);
            let tm = scaled_reflection_imaginary_axis(&st, 1.0, x, y, Polarization::Tm);
            [w * (y * y * te - tm), w * 2.0 * (y * y - 1.0) * tm]
        };
        let breaks: Vec<f64> = if x > 1.0 { vec![0.0, 1.0 / x, 1.0] } else { vec![0.0, 1.0] };
        let q = integrate_finite_vec(inner, &breaks, &inner_cfg);
        evals.fetch_add(q.evaluations, std::sync::atomic::Ordering::Relaxed);
        if !q.converged {
            inner_ok.store(false, std::sync::atomic::Ordering::Relaxed);
        }
        let f = x.powi(3) * (-2.0 * a * x).exp();
        [f * q.values[0], f * q.values[1]]
    };
    let q = integrate_semi_infinite_vec(outer, 0.0, 2.0 * a, &[], cfg);
    Ok(GroundKernel {
        i_par: q.values[0],
        i_perp: q.values[1],
        sign: 1.0,
        abs_error: q.abs_errors[0].max(q.abs_errors[1]),
        evaluations: evals.into_inner(),
        converged: q.converged && inner_ok.into_inner(),
    })
}

/// Non-resonant kernel of a transition with energy sign `e_sign`: the ground
/// kernel with |E| in the exponent and the sign of E^3 kept for assembly.
pub fn excited_nonresonant_kernel(stack: &Stack, a: f64, b: f64, e_sign: f64, cfg: &QuadratureConfig) -> Result<GroundKernel> {
    if !(e_sign == 1.0 || e_sign == -1.0) {
        return Err(Error::InvalidParameter("sign must be +1 or -1".into()));
    }
    let mut k = ground_kernel(stack, a, b, cfg)?;
    k.sign = e_sign;
    Ok(k)
}

/// Resonant kernel: the shift of a downward transition is
/// (|E|^3 / 8 pi)(mu_par^2 K_par + mu_perp^2 K_perp).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonantKernel {
    pub k_par: f64,
    pub k_perp: f64,
    /// Same integrals with Im in place of Re; diagnostic only.
    pub im_par: f64,
    pub im_perp: f64,
    /// Guided-mode poles (in eta) of the TE and TM integrands.
    pub poles_te: Vec<f64>,
    pub poles_tm: Vec<f64>,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl ResonantKernel {
    pub fn pole_list(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.poles_te.iter().chain(&self.poles_tm).copied().collect();
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        v
    }

    pub fn assemble(&self, e_abs: f64, mu_par_sq: f64, mu_perp_sq: f64) -> ShiftResult {
        let pre = e_abs.powi(3) / (8.0 * PI);
        ShiftResult {
            value: pre * (mu_par_sq * self.k_par + mu_perp_sq * self.k_perp),
            abs_error: pre * (mu_par_sq + mu_perp_sq) * self.abs_error,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }
}

/// Guided-mode poles of the evanescent resonant integrand, in eta, for the
/// reduced stack (thickness b, |E| = 1). They lie strictly inside
/// (sqrt(n_s^2 - 1), sqrt(n_l^2 - 1)).
pub fn guided_poles(stack: &Stack, b: f64, pol: Polarization, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let st = stack.with_l(b)?;
    let (nl2, ns2) = (st.n_l().powi(2), st.n_s().powi(2));
    if !(nl2 > ns2 && b > 0.0) {
        return Ok(Vec::new());
    }
    // On shell: k_par^2 = 1 + eta^2, q = eta; scan uniformly in the layer
    // z-component kzl = sqrt(n_l^2 - 1 - eta^2).
    let kzl_max = (nl2 - ns2).sqrt();
    let eta_of = |kzl: f64| (nl2 - 1.0 - kzl * kzl).max(0.0).sqrt();
    let h = |kzl: f64| {
        let eta = eta_of(kzl);
        reduced_dispersion(&st, (1.0 + eta * eta).sqrt(), eta, pol)
    };
    let eta_s = (ns2 - 1.0).sqrt();
    let end_phase = trapped_phase(&st, (1.0 + eta_s * eta_s).sqrt(), eta_s, pol);
    let expected = if end_phase <= 0.0 { (-end_phase / PI).floor() as usize + 1 } else { 0 };
    let cells = (64.0 * (kzl_max * b + PI)).ceil() as usize;
    let exact = QuadratureConfig { abs_tol: 0.0, ..*cfg };
    let roots = find_roots_bracketed(h, kzl_max * 1e-12, kzl_max, cells, &exact);
    if roots.len() < expected {
        return Err(Error::MissingPole(eta_s));
    }
    // polish in eta itself: the kzl -> eta map amplifies errors near eta = 0
    let g = |eta: f64| reduced_dispersion(&st, (1.0 + eta * eta).sqrt(), eta, pol);
    let mut poles: Vec<f64> = roots
        .into_iter()
        .map(|(k, _)| {
            let e0 = eta_of(k);
            let d = 1e-10 * e0.max(1e-3);
            match Bracket::new(e0 - d, e0 + d, g(e0 - d), g(e0 + d)) {
                Some(br) => refine_bracket(&g, br, 0.0).0,
                None => e0,
            }
        })
        .collect();
    poles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(poles)
}

/// Resonant kernel at reduced distance `a` and thickness `b`.
pub fn resonant_kernel(stack: &Stack, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<ResonantKernel> {
    check_ab(a, b)?;
    let st = stack.with_l(b)?;
    let (nl, ns) = (st.n_l(), st.n_s());
    if nl == 1.0 && ns == 1.0 {
        return Ok(ResonantKernel {
            k_par: 0.0,
            k_perp: 0.0,
            im_par: 0.0,
            im_perp: 0.0,
            poles_te: Vec::new(),
            poles_tm: Vec::new(),
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let err = std::sync::Mutex::new(None::<Error>);
    let refl = |eta: f64, branch: EtaBranch, pol: Polarization| -> C64 {
        match eta_reflection(&st, 1.0, eta, branch, pol) {
            Ok(r) => r,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        }
    };

    // travelling modes, eta in [0, 1]: -Re i int e^{2 i a eta} {...}
    let trav = integrate_finite_vec(
        |eta| {
            let ph = C64::new(0.0, 1.0) * C64::new(0.0, 2.0 * a * eta).exp();
            let te = refl(eta, EtaBranch::Travelling, Polarization::Te);
            let tm = refl(eta, EtaBranch::Travelling, Polarization::Tm);
            let p = ph * (te - eta * eta * tm);
            let q = ph * 2.0 * (1.0 - eta * eta) * tm;
            [-p.re, -q.re, -p.im, -q.im]
        },
        &[0.0, 1.0],
        cfg,
    );

    // evanescent modes, eta in [0, inf): -Re int e^{-2 a eta} {...}
    let te_part = |eta: f64| {
        let r = refl(eta, EtaBranch::Evanescent, Polarization::Te) * (-2.0 * a * eta).exp();
        [-r.re, -r.im]
    };
    let tm_part = |eta: f64| {
        let r = refl(eta, EtaBranch::Evanescent, Polarization::Tm) * (-2.0 * a * eta).exp();
        [-(eta * eta * r.re), -(2.0 * (1.0 + eta * eta) * r.re), -(eta * eta * r.im), -(2.0 * (1.0 + eta * eta) * r.im)]
    };
    let eta_s = (ns * ns - 1.0).sqrt();
    let eta_l = (nl * nl - 1.0).sqrt();
    let (lo, hi) = (eta_s.min(eta_l), eta_s.max(eta_l));
    let poles_te = guided_poles(stack, b, Polarization::Te, cfg)?;
    let poles_tm = guided_poles(stack, b, Polarization::Tm, cfg)?;

    // Inside the guided window R is real, so the imaginary components (listed
    // in `im`) are dropped there rather than integrated as round-off noise.
    let piecewise = |f: &dyn Fn(f64) -> [f64; 4], im: &[usize], poles: &[f64]| -> Result<QuadratureN<4>> {
        let mut q = integrate_finite_vec(f, &[0.0, lo], cfg);
        if hi > lo {
            let real_only = |eta: f64| {
                let mut v = f(eta);
                for &i in im {
                    v[i] = 0.0;
                }
                v
            };
            let mid = if poles.is_empty() {
                integrate_finite_vec(real_only, &[lo, hi], cfg)
            } else {
                integrate_principal_value_vec(real_only, lo, hi, poles, cfg)?
            };
            q = q.add(&mid);
        }
        Ok(q.add(&integrate_semi_infinite_vec(f, hi, 2.0 * a, &[], cfg)))
    };
    let te4 = |eta: f64| {
        let v = te_part(eta);
        [v[0], v[1], 0.0, 0.0]
    };
    let ev_te = piecewise(&te4, &[1], &poles_te)?;
    let ev_tm = piecewise(&tm_part, &[2, 3], &poles_tm)?;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }

    let k_par = trav.values[0] + ev_te.values[0] + ev_tm.values[0];
    let k_perp = trav.values[1] + ev_tm.values[1];
    let im_par = trav.values[2] + ev_te.values[1] + ev_tm.values[2];
    let im_perp = trav.values[3] + ev_tm.values[3];
    let abs_error = trav.abs_errors[0] + trav.abs_errors[1] + ev_te.abs_errors[0] + ev_tm.abs_errors[0] + ev_tm.abs_errors[1];
    Ok(ResonantKernel {
        k_par,
        k_perp,
        im_par,
        im_perp,
        poles_te,
        poles_tm,
        abs_error,
        evaluations: trav.evaluations + ev_te.evaluations + ev_tm.evaluations,
        converged: trav.converged && ev_te.converged && ev_tm.converged,
    })
}

/// Shift of an atom at `point` summed over `transitions`: the non-resonant part
/// of every transition plus the resonant part of the downward ones.
pub fn total_shift(stack: &Stack, transitions: &[Transition], point: &EvaluationPoint, cfg: &QuadratureConfig) -> Result<ShiftResult> {
    let mut total = ShiftResult::zero();
    for t in transitions {
        let (a, b) = reduced_units(t, point, stack);
        let e = t.e().abs();
        let sign = t.e().signum();
        let nr = excited_nonresonant_kernel(stack, a, b, sign, cfg)?;
        total = total + nr.assemble(e, t.mu_par_sq(), t.mu_perp_sq());
        if t.is_downward() {
            let rk = resonant_kernel(stack, a, b, cfg)?;
            total = total + rk.assemble(e, t.mu_par_sq(), t.mu_perp_sq());
        }
    }
    Ok(total)
}
