//! Two-level (charge states 0 and 1) model of the box coupled to the cavity and the
//! mechanics, with the square-root expansion of the qubit ground energy.
//!
//! The qubit energy −½·sqrt(B̃₁² + B̃₂² + B̃₃²) is expanded in the operator-valued
//! corrections to B. Photon- and phonon-number dependent parts of the result are read
//! off as the radiation-pressure and cross-Kerr couplings.

use crate::circuit::{direct_coupling, CouplingResult, ModelTag};
use crate::network::{infinite_bias_limits, NetworkCaps};
use crate::params::{cos_pi, sin_pi, BiasPoint, ValidatedParams, E_CHARGE, HBAR};
use nalgebra::Complex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbativeError {
    #[error("qubit splitting vanishes at n_g = {n_g}, f = {f}: the expansion in 1/B is undefined")]
    DegeneratePoint { n_g: f64, f: f64 },
    #[error("expansion order must be 2 or 3, got {0}")]
    UnsupportedOrder(u8),
}

/// The qubit field (B₁, B₂, B₃) in joule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitFields {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b_norm: f64,
}

pub fn qubit_fields(v: &ValidatedParams, bias: &BiasPoint) -> QubitFields {
    let b1 = v.e_j * cos_pi(bias.f);
    let b2 = v.e_j * v.asymmetry * sin_pi(bias.f);
    let b3 = -4.0 * v.e_c * (1.0 - 2.0 * bias.n_g0);
    QubitFields {
        b1,
        b2,
        b3,
        b_norm: (b1 * b1 + b2 * b2 + b3 * b3).sqrt(),
    }
}

/// Couplings of the qubit to the cavity (g1..g4 through the junctions, g_cp and g_cm
/// through the island charge) and to the mechanics (g_m), all in joule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficients {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g_m: f64,
    pub g_cp: f64,
    pub g_cm: f64,
    pub eta: f64,
}

/// 1/C_Σ1c of the network with the bias capacitor taken to infinity.
pub fn island_cavity_inverse_capacitance(v: &ValidatedParams) -> f64 {
    infinite_bias_limits(&network_caps(v)).exact.inv_c_sigma1c
}

pub(crate) fn network_caps(v: &ValidatedParams) -> NetworkCaps {
    NetworkCaps {
        c_j: v.c_j,
        c_g1: v.raw.c_g10,
        c_g2: v.raw.c_g2,
        c_c: v.raw.c_cavity,
    }
}

pub fn coupling_coefficients(v: &ValidatedParams, bias: &BiasPoint) -> CouplingCoefficients {
    let q = qubit_fields(v, bias);
    let eta = v.eta;
    let dng = v.gate.dng_dx;
    let x_zp = v.raw.x_zp;
    let charge_scale = 2.0 * E_CHARGE * island_cavity_inverse_capacitance(v) * v.q_zp;
    CouplingCoefficients {
        g1: -q.b1 * eta / 2.0,
        g2: q.b1 * eta * eta / 4.0,
        g3: q.b2 * eta / 2.0,
        g4: q.b2 * eta * eta / 4.0,
        g_m: 4.0 * v.e_c * dng * x_zp,
        g_cp: charge_scale * bias.n_g0,
        g_cm: charge_scale * dng * x_zp,
        eta,
    }
}

/// Coefficients of the operator polynomial under the square root, joule².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreekCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub xi5: f64,
}

impl GreekCoefficients {
    pub fn xi(&self) -> [f64; 5] {
        [self.xi1, self.xi2, self.xi3, self.xi4, self.xi5]
    }
}

pub fn greek_coefficients(q: &QubitFields, c: &CouplingCoefficients) -> GreekCoefficients {
    let QubitFields { b1, b2, b3, .. } = *q;
    let CouplingCoefficients { g1, g2, g3, g4, g_m, g_cp, g_cm, .. } = *c;
    GreekCoefficients {
        alpha: -4.0 * (b1 * g3 + b2 * g1),
        beta: 4.0 * (g3 * g3 + g1 * g1 - b1 * g2 - b2 * g4),
        rho: 8.0 * (g2 * g3 + g1 * g4),
        delta: 4.0 * (g2 * g2 + g4 * g4),
        epsilon: 4.0 * b3 * g_m,
        lambda: 4.0 * g_m * g_m,
        xi1: 4.0 * b3 * g_cp,
        xi2: 4.0 * g_cp * g_cp,
        xi3: 4.0 * (2.0 * g_cp * g_m - b3 * g_cm),
        xi4: -8.0 * g_cp * g_cm,
        xi5: -8.0 * g_m * g_cm,
    }
}

/// Expansion order and whether the small cavity-charge (ξ) terms are kept. Order 3
/// never has them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expansion {
    pub order: u8,
    pub keep_xi: bool,
}

impl Expansion {
    pub const SECOND: Expansion = Expansion { order: 2, keep_xi: true };
    pub const THIRD: Expansion = Expansion { order: 3, keep_xi: false };
}

fn check(q: &QubitFields, bias: &BiasPoint, e: Expansion) -> Result<(), PerturbativeError> {
    if e.order != 2 && e.order != 3 {
        return Err(PerturbativeError::UnsupportedOrder(e.order));
    }
    if q.b_norm == 0.0 {
        return Err(PerturbativeError::DegeneratePoint { n_g: bias.n_g0, f: bias.f });
    }
    Ok(())
}

/// ħg_rp in joule.
pub fn grp_energy(q: &QubitFields, g: &GreekCoefficients, e: Expansion) -> f64 {
    let b = q.b_norm;
    let GreekCoefficients { alpha, beta, rho, delta, epsilon, lambda, .. } = *g;
    let [_, xi2, _, xi4, _] = if e.keep_xi { g.xi() } else { [0.0; 5] };
    match e.order {
        2 => {
            xi4 / (2.0 * b)
                - (epsilon * (beta + 6.0 * delta + xi2) + xi4 * (2.0 * beta - 3.0 * delta + 3.0 * lambda))
                    / (4.0 * b.powi(3))
        }
        _ => {
            epsilon / (16.0 * b.powi(5))
                * (-4.0 * b * b * (beta + 6.0 * delta)
                    + third_order_bracket(alpha, beta, rho, delta)
                    + 18.0 * (beta * lambda + 6.0 * delta * lambda))
        }
    }
}

/// ħg_CK in joule.
pub fn gck_energy(q: &QubitFields, g: &GreekCoefficients, e: Expansion) -> f64 {
    let b = q.b_norm;
    let GreekCoefficients { alpha, beta, rho, delta, epsilon, lambda, .. } = *g;
    let [_, _, xi3, xi4, xi5] = if e.keep_xi { g.xi() } else { [0.0; 5] };
    match e.order {
        2 => {
            (2.0 * lambda * (beta + 6.0 * delta)
                + xi3 * xi3
                + 6.0 * xi4 * xi4
                + 6.0 * xi5 * xi5
                + 2.0 * epsilon * xi4
                + 2.0 * lambda * xi4)
                / (4.0 * b.powi(3))
        }
        _ => {
            let curvature = beta + 6.0 * delta;
            -(lambda * (-4.0 * b * b * curvature + third_order_bracket(alpha, beta, rho, delta))
                + 3.0 * curvature * epsilon * epsilon
                + 18.0 * curvature * lambda * lambda)
                / (8.0 * b.powi(5))
        }
    }
}

fn third_order_bracket(alpha: f64, beta: f64, rho: f64, delta: f64) -> f64 {
    3.0 * alpha * alpha
        + 36.0 * alpha * rho
        + 135.0 * rho * rho
        + 18.0 * (beta * beta + 15.0 * beta * delta + 70.0 * delta * delta)
}

/// g_rp in rad/s.
pub fn grp_perturbative(
    v: &ValidatedParams,
    bias: &BiasPoint,
    e: Expansion,
) -> Result<f64, PerturbativeError> {
    let q = qubit_fields(v, bias);
    check(&q, bias, e)?;
    let g = greek_coefficients(&q, &coupling_coefficients(v, bias));
    Ok(grp_energy(&q, &g, e) / HBAR)
}

/// g_CK in rad/s.
pub fn gck_perturbative(
    v: &ValidatedParams,
    bias: &BiasPoint,
    e: Expansion,
) -> Result<f64, PerturbativeError> {
    let q = qubit_fields(v, bias);
    check(&q, bias, e)?;
    let g = greek_coefficients(&q, &coupling_coefficients(v, bias));
    Ok(gck_energy(&q, &g, e) / HBAR)
}

/// Both couplings as a row. ω_c is the bare LC frequency: the two-level model does not
/// load the cavity.
pub fn evaluate(
    v: &ValidatedParams,
    bias: &BiasPoint,
    e: Expansion,
) -> Result<CouplingResult, PerturbativeError> {
    let q = qubit_fields(v, bias);
    check(&q, bias, e)?;
    let g = greek_coefficients(&q, &coupling_coefficients(v, bias));
    let model = if e.order == 2 {
        ModelTag::Perturbative2
    } else {
        ModelTag::Perturbative3
    };
    Ok(CouplingResult::new(
        model,
        v.omega_c0,
        grp_energy(&q, &g, e) / HBAR,
        direct_coupling(v),
        gck_energy(&q, &g, e) / HBAR,
    ))
}

/// Number-state moments ⟨n| xᵃ pᵇ |n⟩ with x = a + a†, p = −i(a − a†).
///
/// Each moment is a polynomial in n of degree ≤ (a + b)/2 with integer coefficients
/// times a power of i. The table stores those polynomials for a + b ≤ 8.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    /// Indexed [a][b]; `None` when a + b > MAX_DEGREE.
    entries: Vec<Vec<Option<Moment>>>,
}

/// i^phase · Σ coeffs[k]·nᵏ, phase 0 or 1
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Moment {
    pub phase: u8,
    pub coeffs: Vec<i64>,
}

impl Moment {
    pub fn at(&self, n: u32) -> Complex<f64> {
        let n = n as f64;
        let real = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * n + c as f64);
        let unit = match self.phase % 4 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        };
        unit * real
    }
}

impl MomentTable {
    pub const MAX_DEGREE: usize = 8;

    pub fn build() -> Self {
        let d = Self::MAX_DEGREE;
        let entries = (0..=d)
            .map(|a| (0..=d).map(|b| (a + b <= d).then(|| moment(a, b))).collect())
            .collect();
        MomentTable { entries }
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&Moment> {
        self.entries.get(a)?.get(b)?.as_ref()
    }
}

/// Exact ⟨n|xᵃpᵇ|n⟩ with the i-phase stripped off, by walking every ladder word.
fn moment_value(a: usize, b: usize, n: i64) -> (u8, i64) {
    // p = −i(a − a†): each p contributes (−i) and a sign −1 on raising steps
    let len = a + b;
    let mut total = 0i64;
    for word in 0..(1u32 << len) {
        // bit set = raising operator; the rightmost factor acts first
        let mut level = n;
        let mut amp_sq: i64 = 1;
        let mut sign = 1i64;
        let mut ok = true;
        for pos in (0..len).rev() {
            let raise = word >> pos & 1 == 1;
            if raise {
                level += 1;
                amp_sq *= level;
                if pos >= a {
                    sign = -sign;
                }
            } else {
                if level == 0 {
                    ok = false;
                    break;
                }
                amp_sq *= level;
                level -= 1;
            }
        }
        if ok && level == n {
            // a closed path visits each rung twice, so amp_sq is a perfect square
            total += sign * isqrt(amp_sq);
        }
    }
    // (−i)^b = i^(3b)
    ((3 * b % 4) as u8, total)
}

fn isqrt(v: i64) -> i64 {
    let r = (v as f64).sqrt().round() as i64;
    debug_assert_eq!(r * r, v);
    r
}

/// Fits the integer polynomial through n = 0..=deg by Newton forward differences.
fn moment(a: usize, b: usize) -> Moment {
    let deg = (a + b) / 2;
    let (phase, _) = moment_value(a, b, 0);
    let samples: Vec<i64> = (0..=deg as i64).map(|n| moment_value(a, b, n).1).collect();
    // forward differences Δᵏf(0)
    let mut diffs = Vec::with_capacity(deg + 1);
    let mut row = samples;
    while !row.is_empty() {
        diffs.push(row[0]);
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
    }
    // Σ Δᵏf(0)·C(n, k), expanded into monomials; C(n,k)·k! has integer coefficients
    let mut coeffs = vec![0i64; deg + 1];
    let mut falling = vec![1i64]; // n(n−1)…(n−k+1)
    let mut factorial = 1i64;
    for (k, dk) in diffs.iter().enumerate() {
        if k > 0 {
            factorial *= k as i64;
            let mut next = vec![0i64; falling.len() + 1];
            for (i, c) in falling.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * (k as i64 - 1);
            }
            falling = next;
        }
        for (i, c) in falling.iter().enumerate() {
            let term = dk * c;
            debug_assert_eq!(term % factorial, 0);
            coeffs[i] += term / factorial;
        }
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    // keep the phase at 1 or i
    if phase >= 2 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
    Moment { phase: phase % 2, coeffs }
}
