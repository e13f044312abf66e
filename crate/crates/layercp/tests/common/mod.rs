//! Brute-force reference implementations for the test suite.
//!
//! Nothing here calls the library's quadrature, root finders, special
//! functions or reflection coefficients: every rule is fixed-grid and every
//! physical formula is re-derived in the simplest form available.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use serde::Serialize;

pub const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub main: f64,
    pub oracle: f64,
    pub deviation: f64,
    pub grid: String,
}

impl OracleReport {
    pub fn new(quantity: &str, main: f64, oracle: f64, floor: f64, grid: &str) -> Self {
        OracleReport {
            quantity: quantity.to_string(),
            main,
            oracle,
            deviation: deviation(main, oracle, floor),
            grid: grid.to_string(),
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).unwrap()
    }
}

pub fn deviation(main: f64, oracle: f64, floor: f64) -> f64 {
    (main - oracle).abs() / oracle.abs().max(floor)
}

/// Composite midpoint rule on [lo, hi].
pub fn midpoint<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    // pairwise-ish accumulation in blocks keeps round-off small for large n
    let mut total = 0.0;
    let mut block = 0.0;
    for i in 0..n {
        block += f(lo + (i as f64 + 0.5) * h);
        if i % 1024 == 1023 {
            total += block;
            block = 0.0;
        }
    }
    (total + block) * h
}

/// Composite midpoint rule over [0, x_max] x [0, 1].
pub fn brute_double_quadrature<F: Fn(f64, f64) -> f64 + Sync>(f: F, grid: (usize, usize), x_max: f64) -> f64 {
    use rayon::prelude::*;
    let (nx, ny) = grid;
    let hx = x_max / nx as f64;
    let rows: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) * hx;
            midpoint(|y| f(x, y), 0.0, 1.0, ny)
        })
        .collect();
    rows.iter().sum::<f64>() * hx
}

/// Exhaustive sign-change scan with uniform `step`; brackets are refined by
/// plain bisection.
pub fn fine_scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + i as f64 * step };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            roots.push(bisect(&f, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Double-double number hi + lo, enough for the Bessel power series.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        let t = two_sum(self.1, o.1);
        let v = two_sum(s.0, s.1 + t.0);
        two_sum(v.0, v.1 + t.1)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        two_sum(p, e + self.0 * o.1 + self.1 * o.0)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.0 / d;
        let r = self.add(Dd(-q1 * d, -(q1.mul_add(d, -(q1 * d)))));
        let q2 = r.0 / d;
        two_sum(q1, q2)
    }
}

/// J_order(x) by its power series in double-double arithmetic; accurate to
/// round-off for |x| <= 36.
fn bessel_series_dd(order: u32, x: f64) -> f64 {
    let half = Dd(0.5 * x, 0.0);
    let mq = half.mul(half);
    let mq = Dd(-mq.0, -mq.1);
    let mut term = if order == 0 { Dd(1.0, 0.0) } else { half };
    let mut sum = term;
    for k in 1..400u32 {
        term = term.mul(mq).div_f64((k * (k + order)) as f64);
        sum = sum.add(term);
        if term.0.abs() < 1e-40 {
            break;
        }
    }
    sum.0 + sum.1
}

/// (1/pi) int_0^pi cos(order t - x sin t) dt by the trapezoid rule, which
/// converges geometrically for this periodic integrand.
fn bessel_trapezoid(order: u32, x: f64) -> f64 {
    let n = (2.0 * x.abs()) as usize + 64;
    let h = PI / n as f64;
    let m = order as f64;
    let f = |t: f64| (m * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..n {
        s += f(k as f64 * h);
    }
    s * h / PI
}

pub fn bessel_j0(x: f64) -> f64 {
    if x.abs() <= 36.0 {
        bessel_series_dd(0, x)
    } else {
        bessel_trapezoid(0, x)
    }
}

pub fn bessel_j1(x: f64) -> f64 {
    if x.abs() <= 36.0 {
        bessel_series_dd(1, x)
    } else {
        bessel_trapezoid(1, x)
    }
}

/// Image-charge series for the reflected electrostatic Green's function:
/// the kernel (alpha - beta e^{-2kL}) / (1 - alpha beta e^{-2kL}) expanded in
/// e^{-2kL}, each term integrated in closed form.
pub fn image_series_green(n_l: f64, n_s: f64, l: f64, rho: f64, s: f64, terms: usize) -> f64 {
    let (nl2, ns2) = (n_l * n_l, n_s * n_s);
    let alpha = (nl2 - 1.0) / (nl2 + 1.0);
    let beta = (nl2 - ns2) / (nl2 + ns2);
    let d = s - l;
    let mut sum = alpha / rho.hypot(d);
    let mut ratio = 1.0;
    for nu in 1..=terms {
        sum += beta * (alpha * alpha - 1.0) * ratio / rho.hypot(d + 2.0 * nu as f64 * l);
        ratio *= alpha * beta;
    }
    -sum / (4.0 * PI)
}

/// Same expansion applied to -(mu/16 pi) int k^2 e^{-2kZ} K(k) dk.
pub fn image_series_electrostatic(n_l: f64, n_s: f64, l: f64, z: f64, mu_par: f64, mu_perp: f64, terms: usize) -> f64 {
    let (nl2, ns2) = (n_l * n_l, n_s * n_s);
    let alpha = (nl2 - 1.0) / (nl2 + 1.0);
    let beta = (nl2 - ns2) / (nl2 + ns2);
    let mut sum = alpha / (4.0 * z.powi(3));
    let mut ratio = 1.0;
    for nu in 1..=terms {
        sum += beta * (alpha * alpha - 1.0) * ratio / (4.0 * (z + nu as f64 * l).powi(3));
        ratio *= alpha * beta;
    }
    -(mu_par + 2.0 * mu_perp) / (16.0 * PI) * sum
}

/// Terms needed for |alpha beta|^terms < 1e-16.
pub fn image_terms(n_l: f64, n_s: f64) -> usize {
    let (nl2, ns2) = (n_l * n_l, n_s * n_s);
    let r = ((nl2 - 1.0) / (nl2 + 1.0) * (nl2 - ns2) / (nl2 + ns2)).abs();
    if r == 0.0 {
        1
    } else {
        ((-16.0 * 10f64.ln()) / r.ln()).ceil() as usize + 1
    }
}

/// Layered reflection on the ground-state integration axis, written out in
/// real arithmetic: kz_i = i x xi_i with xi_i = sqrt((n_i^2 - 1) y^2 + 1).
pub fn reflection_imag_axis(n_l: f64, n_s: f64, b: f64, x: f64, y: f64, te: bool) -> f64 {
    let xl = ((n_l * n_l - 1.0) * y * y + 1.0).sqrt();
    let xs = ((n_s * n_s - 1.0) * y * y + 1.0).sqrt();
    let (pv, pl, ps) = if te { (1.0, xl, xs) } else { (1.0, xl / (n_l * n_l), xs / (n_s * n_s)) };
    let r1 = (pv - pl) / (pv + pl);
    let r2 = (pl - ps) / (pl + ps);
    let e = (-2.0 * x * xl * b).exp();
    (r1 + r2 * e) / (1.0 + r1 * r2 * e)
}

/// Ground-state kernel (I_par, I_perp) by brute midpoint quadrature.
pub fn ground_kernel_oracle(n_l: f64, n_s: f64, a: f64, b: f64, grid: (usize, usize)) -> (f64, f64) {
    let x_max = 40.0 / a;
    let par = brute_double_quadrature(
        |x, y| {
            let w = x.powi(3) * (-2.0 * a * x).exp() / (1.0 + x * x * y * y);
            w * (y * y * reflection_imag_axis(n_l, n_s, b, x, y, true) - reflection_imag_axis(n_l, n_s, b, x, y, false))
        },
        grid,
        x_max,
    );
    let perp = brute_double_quadrature(
        |x, y| {
            let w = x.powi(3) * (-2.0 * a * x).exp() / (1.0 + x * x * y * y);
            w * 2.0 * (y * y - 1.0) * reflection_imag_axis(n_l, n_s, b, x, y, false)
        },
        grid,
        x_max,
    );
    (par, perp)
}

/// z-component in medium i for the resonant integrals (|E| = 1):
/// travelling sqrt(n^2 - 1 + eta^2), evanescent sqrt(n^2 - 1 - eta^2) with
/// the decaying root i sqrt(.) when the radicand is negative. Vacuum: 1*eta
/// (travelling) or i eta (evanescent).
fn eta_kz(n: f64, eta: f64, travelling: bool) -> C {
    if n == 1.0 {
        return if travelling { C::new(eta, 0.0) } else { C::new(0.0, eta) };
    }
    let rad = if travelling { n * n - 1.0 + eta * eta } else { n * n - 1.0 - eta * eta };
    if rad >= 0.0 {
        C::new(rad.sqrt(), 0.0)
    } else {
        C::new(0.0, (-rad).sqrt())
    }
}

/// Amended layered reflection coefficient for the resonant integrals.
pub fn eta_reflection_oracle(n_l: f64, n_s: f64, b: f64, eta: f64, travelling: bool, te: bool) -> C {
    let kz = if travelling { C::new(eta, 0.0) } else { C::new(0.0, eta) };
    let kl = eta_kz(n_l, eta, travelling);
    let ks = eta_kz(n_s, eta, travelling);
    let (pv, pl, ps) = if te { (kz, kl, ks) } else { (kz, kl / (n_l * n_l), ks / (n_s * n_s)) };
    let r1 = (pv - pl) / (pv + pl);
    let r2 = (pl - ps) / (pl + ps);
    let e = (C::new(0.0, 2.0) * kl * b).exp();
    (r1 + r2 * e) / (1.0 + r1 * r2 * e)
}

/// Characteristic function of the guided modes of the asymmetric slab in the
/// textbook form (k^2 - p_v p_s) sin(k L) - k (p_v + p_s) cos(k L), where k is
/// the transverse wavenumber in the layer and p_v, p_s the decay constants of
/// the claddings (scaled by n_l^2 / n_c^2 for TM). Arguments: in-plane
/// wavenumber `k_par`, vacuum decay constant `q`.
pub fn slab_characteristic(n_l: f64, n_s: f64, l: f64, k_par: f64, q: f64, te: bool) -> f64 {
    let (nl2, ns2) = (n_l * n_l, n_s * n_s);
    let w2 = k_par * k_par - q * q;
    let kl = (nl2 * w2 - k_par * k_par).max(0.0).sqrt();
    let gs = (k_par * k_par - ns2 * w2).max(0.0).sqrt();
    let (pv, ps) = if te { (q, gs) } else { (nl2 * q, nl2 / ns2 * gs) };
    (kl * kl - pv * ps) * (kl * l).sin() - kl * (pv + ps) * (kl * l).cos()
}

/// Open window of vacuum decay constants that admit guided modes.
pub fn guided_window(n_l: f64, n_s: f64, k_par: f64) -> Option<(f64, f64)> {
    if n_l <= n_s {
        return None;
    }
    Some((k_par * (1.0 - 1.0 / (n_s * n_s)).sqrt(), k_par * (1.0 - 1.0 / (n_l * n_l)).sqrt()))
}

/// Guided-mode decay constants by a sign scan with step `rel_step` of the window.
pub fn guided_roots(n_l: f64, n_s: f64, l: f64, k_par: f64, te: bool, rel_step: f64) -> Vec<f64> {
    match guided_window(n_l, n_s, k_par) {
        None => Vec::new(),
        Some((lo, hi)) => {
            let w = hi - lo;
            // endpoints are trivial zeros of the characteristic function
            let (a, b) = (lo + 1e-12 * w, hi - 1e-12 * w);
            fine_scan_roots(|q| slab_characteristic(n_l, n_s, l, k_par, q, te), a, b, rel_step * w)
        }
    }
}

/// Guided-mode poles of the evanescent resonant integrand, in eta (|E| = 1):
/// k_par^2 = 1 + eta^2, q = eta.
pub fn resonant_poles(n_l: f64, n_s: f64, b: f64, te: bool) -> Vec<f64> {
    if n_l <= n_s {
        return Vec::new();
    }
    let (lo, hi) = ((n_s * n_s - 1.0).sqrt(), (n_l * n_l - 1.0).sqrt());
    let w = hi - lo;
    let f = |eta: f64| slab_characteristic(n_l, n_s, b, (1.0 + eta * eta).sqrt(), eta, te);
    fine_scan_roots(f, lo + 1e-12 * w, hi - 1e-12 * w, 1e-5 * w)
}

/// Principal value of int_lo^hi f by subtraction of the simple poles: the
/// residues are estimated from symmetric differences, the remainder is
/// integrated by the midpoint rule and the pole terms analytically.
pub fn pv_subtraction<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, poles: &[f64], n: usize) -> f64 {
    let res: Vec<f64> = poles
        .iter()
        .map(|&p| {
            let t = 1e-7 * (hi - lo);
            t * (f(p + t) - f(p - t)) / 2.0
        })
        .collect();
    let g = |x: f64| f(x) - poles.iter().zip(&res).map(|(p, c)| c / (x - p)).sum::<f64>();
    let analytic: f64 = poles.iter().zip(&res).map(|(p, c)| c * ((hi - p) / (p - lo)).ln()).sum();
    midpoint(g, lo, hi, n) + analytic
}

/// Resonant kernel (K_par, K_perp) by brute quadrature with subtracted poles.
pub fn resonant_kernel_oracle(n_l: f64, n_s: f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let i = C::new(0.0, 1.0);
    let trav = |eta: f64, par: bool| {
        let ph = i * (C::new(0.0, 2.0 * a * eta)).exp();
        let te = eta_reflection_oracle(n_l, n_s, b, eta, true, true);
        let tm = eta_reflection_oracle(n_l, n_s, b, eta, true, false);
        let v = if par { ph * (te - eta * eta * tm) } else { ph * 2.0 * (1.0 - eta * eta) * tm };
        -v.re
    };
    let ev = |eta: f64, par: bool| {
        let d = (-2.0 * a * eta).exp();
        let tm = eta_reflection_oracle(n_l, n_s, b, eta, false, false).re;
        if par {
            let te = eta_reflection_oracle(n_l, n_s, b, eta, false, true).re;
            -d * (te + eta * eta * tm)
        } else {
            -d * 2.0 * (1.0 + eta * eta) * tm
        }
    };
    let (es, el) = ((n_s * n_s - 1.0).sqrt(), (n_l * n_l - 1.0).sqrt());
    let (lo, hi) = (es.min(el), es.max(el));
    let top = hi + 40.0 / a;
    let pte = resonant_poles(n_l, n_s, b, true);
    let ptm = resonant_poles(n_l, n_s, b, false);
    let mut all: Vec<f64> = pte.iter().chain(&ptm).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out = [0.0; 2];
    for (k, par) in [true, false].into_iter().enumerate() {
        let mut v = midpoint(|e| trav(e, par), 0.0, 1.0, n);
        if lo > 0.0 {
            v += midpoint(|e| ev(e, par), 0.0, lo, n);
        }
        if hi > lo {
            let poles: &[f64] = if par { &all } else { &ptm };
            v += pv_subtraction(|e| ev(e, par), lo, hi, poles, n);
        }
        v += midpoint(|e| ev(e, par), hi, top, n);
        out[k] = v;
    }
    (out[0], out[1])
}

/// Reproducible uniform draws for the randomized sweeps.
pub struct Draws(proptest::test_runner::TestRunner);

impl Draws {
    pub fn new() -> Self {
        Draws(proptest::test_runner::TestRunner::deterministic())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use proptest::strategy::{Strategy, ValueTree};
        (lo..hi).new_tree(&mut self.0).unwrap().current()
    }
}

/// First-order change of the retarded half-space coefficients per unit layer
/// thickness, (a_par, a_perp), by the midpoint rule. Derived from
/// d/dL of the layered reflection at L = 0 on the imaginary axis:
/// dR/dL = -2 x xi_l r2 (1 - r1^2) / (1 + r1 r2)^2.
pub fn layer_coefficients_oracle(n_l: f64, n_s: f64, n: usize) -> (f64, f64) {
    let (l2, s2) = (n_l * n_l, n_s * n_s);
    let slope = |y: f64, te: bool| {
        let xl = ((l2 - 1.0) * y * y + 1.0).sqrt();
        let xs = ((s2 - 1.0) * y * y + 1.0).sqrt();
        let (pl, ps) = if te { (xl, xs) } else { (xl / l2, xs / s2) };
        let r1 = (1.0 - pl) / (1.0 + pl);
        let r2 = (pl - ps) / (pl + ps);
        xl * r2 * (1.0 - r1 * r1) / (1.0 + r1 * r2).powi(2)
    };
    let par = midpoint(|y| 3.0 * (y * y * slope(y, true) - slope(y, false)), 0.0, 1.0, n);
    let perp = midpoint(|y| 3.0 * (y * y - 1.0) * slope(y, false), 0.0, 1.0, n);
    (par, perp)
}
