//! Closed-form limits of the shift: electrostatic and retarded, thin and thick
//! layers, half-space retarded coefficients and the resonant excited-state
//! envelope. Used as fast estimators and as oracles for the exact kernels.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{electrostatic_integral, electrostatic_shift_series, halfspace_electrostatic};
use crate::numerics::{integrate_finite_vec, QuadratureConfig};
use crate::types::{Stack, Transition};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ElectrostaticThin,
    ElectrostaticThick,
    RetardedThin,
    RetardedThick,
    ExcitedNonretarded,
    ExcitedRetarded,
    HalfspaceRetarded,
    HalfspaceElectrostatic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub value: f64,
    pub regime: Regime,
    pub validity_note: String,
}

fn estimate(value: f64, regime: Regime, note: &str) -> AsymptoticEstimate {
    AsymptoticEstimate { value, regime, validity_note: note.to_string() }
}

fn check_z(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("Z must be finite and positive".into()))
    }
}

/// Coefficients (a1, a2) of the thin-layer electrostatic expansion.
pub fn thin_layer_electrostatic_coefficients(stack: &Stack) -> (f64, f64) {
    let (l2, s2) = (stack.n_l().powi(2), stack.n_s().powi(2));
    let d = l2 * l2 - s2 * s2;
    let a1 = 3.0 / l2 * d / (s2 + 1.0).powi(2);
    let a2 = -6.0 / (l2 * l2) * d * (s2 + l2 * l2) / (s2 + 1.0).powi(3);
    (a1, a2)
}

pub fn halfspace_electrostatic_estimate(n: f64, mu_par_sq: f64, mu_perp_sq: f64, z: f64) -> Result<AsymptoticEstimate> {
    check_z(z)?;
    Ok(estimate(halfspace_electrostatic(n, mu_par_sq, mu_perp_sq, z), Regime::HalfspaceElectrostatic, "2|E|Z << 1"))
}

/// Electrostatic shift for Z >> L to second order in L/Z.
pub fn thin_layer_electrostatic(stack: &Stack, mu_par_sq: f64, mu_perp_sq: f64, z: f64) -> Result<AsymptoticEstimate> {
    check_z(z)?;
    let (a1, a2) = thin_layer_electrostatic_coefficients(stack);
    let x = stack.l() / z;
    let base = halfspace_electrostatic(stack.n_s(), mu_par_sq, mu_perp_sq, z);
    let value = base - (mu_par_sq + 2.0 * mu_perp_sq) / (64.0 * PI * z.powi(3)) * (a1 * x + a2 * x * x);
    Ok(estimate(value, Regime::ElectrostaticThin, "2|E|Z << 1 and L << Z"))
}

/// Image-series form of the electrostatic shift, suited to Z << L.
pub fn thick_layer_electrostatic(
    stack: &Stack,
    mu_par_sq: f64,
    mu_perp_sq: f64,
    z: f64,
    terms: Option<usize>,
) -> Result<AsymptoticEstimate> {
    let r = electrostatic_shift_series(stack, mu_par_sq, mu_perp_sq, z, terms)?;
    Ok(estimate(r.value, Regime::ElectrostaticThick, "2|E|Z << 1; converges for any L"))
}

const CLOSED_FORM_RANGE: (f64, f64) = (1.05, 30.0);

/// Retarded half-space coefficients (c_par, c_perp). Both vanish at n = 1 and
/// tend to 4/3 for a perfect reflector.
pub fn halfspace_retarded_coefficients(n: f64) -> Result<(f64, f64)> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::InvalidParameter("index must be finite and >= 1".into()));
    }
    if n == 1.0 {
        return Ok((0.0, 0.0));
    }
    if n >= CLOSED_FORM_RANGE.0 && n <= CLOSED_FORM_RANGE.1 {
        return Ok(halfspace_closed_form(n));
    }
    // outside the well-conditioned range: c_par = int (R_TM - y^2 R_TE),
    // c_perp = 2 int (1 - y^2) R_TM over y in [0, 1]
    let n2 = n * n;
    let q = integrate_finite_vec(
        |y| {
            let xi = ((n2 - 1.0) * y * y + 1.0).sqrt();
            let te = (1.0 - xi) / (1.0 + xi);
            let tm = (n2 - xi) / (n2 + xi);
            [tm - y * y * te, 2.0 * (1.0 - y * y) * tm]
        },
        &[0.0, 1.0],
        &QuadratureConfig { rel_tol: 1e-13, abs_tol: 0.0, ..Default::default() },
    );
    Ok((q.values[0], q.values[1]))
}

fn halfspace_closed_form(n: f64) -> (f64, f64) {
    let n2 = n * n;
    let m = (n2 - 1.0).sqrt();
    let s = (n2 + 1.0).sqrt();
    let l1 = ((s + 1.0) / (n * (s + n))).ln();
    let l2 = (m + n).ln();
    let c_par = -(2.0 / 3.0 * n2 + n - 8.0 / 3.0) / (n2 - 1.0)
        + 2.0 * n2 * n2 / ((n2 - 1.0) * s) * l1
        + (2.0 * n2 * n2 - 2.0 * n2 - 1.0) / m.powi(3) * l2;
    let c_perp = (4.0 * n2 * n2 - 2.0 * n2 * n - 4.0 / 3.0 * n2 + 4.0 / 3.0) / (n2 - 1.0)
        - 4.0 * n2.powi(3) / ((n2 - 1.0) * s) * l1
        - 2.0 * n2 * (2.0 * n2 * n2 - 2.0 * n2 + 1.0) / m.powi(3) * l2;
    (c_par, c_perp)
}

/// Leading retarded shift of a bare half-space of index `n`.
pub fn halfspace_retarded(n: f64, transition: &Transition, z: f64) -> Result<AsymptoticEstimate> {
    check_z(z)?;
    let (cp, cq) = halfspace_retarded_coefficients(n)?;
    let value = -3.0 / (64.0 * PI * PI * z.powi(4)) * (cp * transition.mu_par_sq() + cq * transition.mu_perp_sq()) / transition.e();
    Ok(estimate(value, Regime::HalfspaceRetarded, "2|E|Z >> 1"))
}

/// First-order thin-layer retarded coefficients (a_par, a_perp).
pub fn retarded_layer_coefficients(stack: &Stack) -> Result<(f64, f64)> {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    if ns == 1.0 {
        return Err(Error::SlabLimit);
    }
    if (ns - 1.0).abs() < 1e-3 {
        return Ok(slab_coefficients(nl));
    }
    Ok(layer_coefficients_quadrature(nl, ns))
}

/// Slab (n_s = 1) limit of the thin-layer retarded coefficients.
pub fn slab_coefficients(n_l: f64) -> (f64, f64) {
    let l2 = n_l * n_l;
    ((l2 - 1.0) * (9.0 * l2 + 5.0) / (10.0 * l2), (l2 - 1.0) * (5.0 * l2 + 4.0) / (10.0 * l2))
}

// a_par = 3 int (y^2 D_TE - D_TM), a_perp = 3 int (y^2 - 1) D_TM with
// D = xi_l r2 (1 - r1^2) / (1 + r1 r2)^2, the first-order change of the
// reflection coefficient on the imaginary axis.
fn layer_coefficients_quadrature(nl: f64, ns: f64) -> (f64, f64) {
    let (l2, s2) = (nl * nl, ns * ns);
    let d = |r1: f64, r2: f64, xl: f64| xl * r2 * (1.0 - r1 * r1) / (1.0 + r1 * r2).powi(2);
    let q = integrate_finite_vec(
        |y| {
            let xl = ((l2 - 1.0) * y * y + 1.0).sqrt();
            let xs = ((s2 - 1.0) * y * y + 1.0).sqrt();
            let te = d((1.0 - xl) / (1.0 + xl), (xl - xs) / (xl + xs), xl);
            let (pl, ps) = (xl / l2, xs / s2);
            let tm = d((1.0 - pl) / (1.0 + pl), (pl - ps) / (pl + ps), xl);
            [3.0 * (y * y * te - tm), 3.0 * (y * y - 1.0) * tm]
        },
        &[0.0, 1.0],
        &QuadratureConfig { rel_tol: 1e-13, abs_tol: 0.0, ..Default::default() },
    );
    (q.values[0], q.values[1])
}

/// Retarded shift for Z >> L to first order in L/Z.
pub fn thin_layer_retarded(stack: &Stack, transition: &Transition, z: f64) -> Result<AsymptoticEstimate> {
    check_z(z)?;
    let (ap, aq) = retarded_layer_coefficients(stack)?;
    let base = halfspace_retarded(stack.n_s(), transition, z)?.value;
    let corr = (ap * transition.mu_par_sq() + 2.0 * aq * transition.mu_perp_sq()) / transition.e();
    let value = base - corr / (16.0 * PI * PI * z.powi(4)) * stack.l() / z;
    Ok(estimate(value, Regime::RetardedThin, "2|E|Z >> 1 and L << Z"))
}

/// Non-retarded resonant shift summed over the downward transitions.
pub fn excited_nonretarded_resonant(
    stack: &Stack,
    transitions: &[Transition],
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<AsymptoticEstimate> {
    let q = electrostatic_integral(stack, z, cfg)?;
    let mu: f64 = transitions
        .iter()
        .filter(|t| t.is_downward())
        .map(|t| t.mu_par_sq() + 2.0 * t.mu_perp_sq())
        .sum();
    Ok(estimate(-mu / (8.0 * PI) * q.value, Regime::ExcitedNonretarded, "2|E|Z << 1"))
}

/// Normal-incidence amplitudes (r_vl, r_ls) and the optical thickness tau = n_l L.
pub fn normal_incidence(stack: &Stack) -> (f64, f64, f64) {
    let (nl, ns) = (stack.n_l(), stack.n_s());
    ((1.0 - nl) / (1.0 + nl), (nl - ns) / (nl + ns), nl * stack.l())
}

/// Oscillating factor F(E, Z) of the retarded resonant shift,
/// Delta E = -(|E|^2 / 8 pi Z) |mu_par|^2 F.
pub fn retarded_resonant_factor(stack: &Stack, e_abs: f64, z: f64) -> f64 {
    let (rv, rs, tau) = normal_incidence(stack);
    let num = rv * (1.0 + rs * rs) * (2.0 * e_abs * z).cos()
        + rv * rv * rs * (2.0 * e_abs * (z - tau)).cos()
        + rs * (2.0 * e_abs * (z + tau)).cos();
    let den = 1.0 + 2.0 * rv * rs * (2.0 * e_abs * tau).cos() + rv * rv * rs * rs;
    num / den
}

/// Modulus of the normal-incidence reflection of the stack: the envelope
/// amplitude of [`retarded_resonant_factor`].
pub fn retarded_resonant_envelope(stack: &Stack, e_abs: f64) -> f64 {
    let (rv, rs, tau) = normal_incidence(stack);
    let (c, s) = ((2.0 * e_abs * tau).cos(), (2.0 * e_abs * tau).sin());
    let num = (rv + rs * c).hypot(rs * s);
    let den = (1.0 + rv * rs * c).hypot(rv * rs * s);
    num / den
}

/// Leading retarded resonant shift summed over the downward transitions.
pub fn excited_retarded_resonant(stack: &Stack, transitions: &[Transition], z: f64) -> Result<AsymptoticEstimate> {
    check_z(z)?;
    let value = transitions
        .iter()
        .filter(|t| t.is_downward())
        .map(|t| {
            let e = t.e().abs();
            -e * e * t.mu_par_sq() / (8.0 * PI * z) * retarded_resonant_factor(stack, e, z)
        })
        .sum();
    Ok(estimate(value, Regime::ExcitedRetarded, "2|E|Z >> 1, best for |E| L << 1"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonancePoint {
    pub kappa: u32,
    pub l_res: f64,
    pub l_antires: f64,
    /// With n_s > n_l the two conditions exchange their meaning.
    pub swapped: bool,
}

/// Layer thicknesses at which the layer is optically resonant / anti-resonant
/// for the transition wavelength 2 pi / |E|.
pub fn resonance_condition(stack: &Stack, e_abs: f64, kappa_max: u32) -> Result<Vec<ResonancePoint>> {
    if !(e_abs > 0.0 && e_abs.is_finite()) {
        return Err(Error::InvalidParameter("|E| must be finite and positive".into()));
    }
    let half_lambda = PI / e_abs;
    let swapped = stack.n_s() > stack.n_l();
    Ok((0..=kappa_max)
        .map(|k| ResonancePoint {
            kappa: k,
            l_res: half_lambda * (k as f64 + 0.5) / stack.n_l(),
            l_antires: half_lambda * k as f64 / stack.n_l(),
            swapped,
        })
        .collect())
}
