//! Charge-basis diagonalization of the split Cooper-pair box and n_g-derivatives of its bands.
//!
//! Energies are handled internally in units of h·1 GHz and converted at the boundary.

use crate::params::{cos_pi, sin_pi, BiasPoint, ValidatedParams, GHZ};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

pub const DEFAULT_TRUNCATION: usize = 10;
pub const MAX_TRUNCATION: usize = 40;
/// Doubling M may move any returned energy by at most this many E_C.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Bands closer than this many E_C count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Step of the symmetric difference used for the slope at an exact crossing.
pub const CROSSING_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("charge truncation m = {0} is below the minimum of 2")]
    TruncationTooSmall(usize),
    #[error("band energies not converged at m = {0}")]
    ConvergenceFailure(usize),
    #[error("band {band} is degenerate with a neighbour (gap {gap:e} E_C)")]
    DegenerateBand { band: usize, gap: f64 },
    #[error("exact level crossing at n_g = {n_g}: curvature is not analytic")]
    NonAnalytic { n_g: f64 },
    #[error("band index {0} out of range")]
    BandOutOfRange(usize),
}

/// E_J·sqrt(cos²πf + d²sin²πf).
pub fn effective_ej(v: &ValidatedParams, f: f64) -> f64 {
    let c = cos_pi(f);
    let s = sin_pi(f);
    v.e_j * (c * c + v.asymmetry * v.asymmetry * s * s).sqrt()
}

/// Tridiagonal charge Hamiltonian over n ∈ [n_center − m, n_center + m], in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeHamiltonian {
    pub n_center: i64,
    pub m: usize,
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
}

impl ChargeHamiltonian {
    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i.abs_diff(j) == 1 {
                self.off_diagonal
            } else {
                0.0
            }
        })
    }
}

pub fn build_charge_hamiltonian(
    v: &ValidatedParams,
    bias: &BiasPoint,
    m: usize,
) -> Result<ChargeHamiltonian, SpectrumError> {
    if m < 2 {
        return Err(SpectrumError::TruncationTooSmall(m));
    }
    let center = bias.n_g0.round() as i64;
    let diagonal = (0..2 * m + 1)
        .map(|i| {
            let n = (center - m as i64 + i as i64) as f64;
            4.0 * v.e_c * (n - bias.n_g0).powi(2)
        })
        .collect();
    Ok(ChargeHamiltonian {
        n_center: center,
        m,
        diagonal,
        off_diagonal: -0.5 * effective_ej(v, bias.f),
    })
}

/// Dimensionless problem in GHz units; everything below works on this.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    e_c: f64,
    e_j_eff: f64,
}

impl Scaled {
    fn new(v: &ValidatedParams, f: f64) -> Self {
        Scaled {
            e_c: v.e_c / GHZ,
            e_j_eff: effective_ej(v, f) / GHZ,
        }
    }
}

struct Eig {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    charges: Vec<f64>,
}

fn solve(s: Scaled, n_g: f64, center: i64, m: usize) -> Eig {
    let dim = 2 * m + 1;
    let charges: Vec<f64> = (0..dim)
        .map(|i| (center - m as i64 + i as i64) as f64)
        .collect();
    let off = -0.5 * s.e_j_eff;
    let h = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            4.0 * s.e_c * (charges[i] - n_g).powi(2)
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Eig {
        values,
        vectors,
        charges,
    }
}

/// Smallest M (10, 20 or 40) whose lowest `bands` energies agree with the doubled window.
fn converged_truncation(s: Scaled, n_g: f64, center: i64, bands: usize) -> Result<usize, SpectrumError> {
    let mut m = DEFAULT_TRUNCATION.max(bands + 2);
    let mut current = solve(s, n_g, center, m);
    while 2 * m <= MAX_TRUNCATION {
        let next = solve(s, n_g, center, 2 * m);
        let worst = (0..bands)
            .map(|k| (current.values[k] - next.values[k]).abs())
            .fold(0.0, f64::max);
        if worst < CONVERGENCE_TOL * s.e_c {
            return Ok(m);
        }
        m *= 2;
        current = next;
    }
    Err(SpectrumError::ConvergenceFailure(m))
}

fn expect_charge(e: &Eig, k: usize) -> f64 {
    e.vectors
        .column(k)
        .iter()
        .zip(&e.charges)
        .map(|(a, n)| a * a * n)
        .sum()
}

fn neighbour_gap(values: &[f64], k: usize) -> f64 {
    let below = if k > 0 { values[k] - values[k - 1] } else { f64::INFINITY };
    below.min(values[k + 1] - values[k])
}

/// Band energies and, once [`band_derivatives`] has run, their n_g-derivatives (joules).
#[derive(Debug, Clone, PartialEq)]
pub struct CpbSpectrum {
    pub band_energies: Vec<f64>,
    pub band: usize,
    /// ∂ⁿE_band/∂n_gⁿ for n = 1..4; zero when not computed.
    pub derivatives: [f64; 4],
    pub derivative_error: [f64; 4],
    pub truncation_m: usize,
    pub n_g: f64,
    pub f: f64,
}

/// Lowest `k_max + 1` band energies, converged in the charge truncation.
pub fn band_energies(
    v: &ValidatedParams,
    bias: &BiasPoint,
    k_max: usize,
) -> Result<CpbSpectrum, SpectrumError> {
    let s = Scaled::new(v, bias.f);
    let center = bias.n_g0.round() as i64;
    let m = converged_truncation(s, bias.n_g0, center, k_max + 1)?;
    let e = solve(s, bias.n_g0, center, m);
    Ok(CpbSpectrum {
        band_energies: e.values[..=k_max].iter().map(|x| x * GHZ).collect(),
        band: 0,
        derivatives: [0.0; 4],
        derivative_error: [0.0; 4],
        truncation_m: m,
        n_g: bias.n_g0,
        f: bias.f,
    })
}

/// ∂E_k/∂n_g = −8E_C(⟨n⟩_k − n_g) from the eigenvector.
pub fn band_first_derivative_hf(
    v: &ValidatedParams,
    bias: &BiasPoint,
    k: usize,
) -> Result<f64, SpectrumError> {
    let s = Scaled::new(v, bias.f);
    let center = bias.n_g0.round() as i64;
    let m = converged_truncation(s, bias.n_g0, center, k + 2)?;
    let e = solve(s, bias.n_g0, center, m);
    let gap = neighbour_gap(&e.values, k);
    if gap < DEGENERACY_TOL * s.e_c {
        return Err(SpectrumError::DegenerateBand {
            band: k,
            gap: gap / s.e_c,
        });
    }
    Ok(-8.0 * s.e_c * (expect_charge(&e, k) - bias.n_g0) * GHZ)
}

/// Orders 1..=`max_order` (at most 4) of band `k`. Order 1 is Hellmann–Feynman; higher
/// orders are perturbation sums over the other bands of the same diagonalization.
pub fn band_derivatives(
    v: &ValidatedParams,
    bias: &BiasPoint,
    k: usize,
    max_order: usize,
) -> Result<CpbSpectrum, SpectrumError> {
    let max_order = max_order.clamp(1, 4);
    let s = Scaled::new(v, bias.f);
    let x0 = bias.n_g0;
    let center = x0.round() as i64;
    let m = converged_truncation(s, x0, center, k + 2)?;
    let e0 = solve(s, x0, center, m);
    if k + 1 >= e0.values.len() {
        return Err(SpectrumError::BandOutOfRange(k));
    }
    let gap = neighbour_gap(&e0.values, k);
    let mut out = CpbSpectrum {
        band_energies: e0.values[..=k + 1].iter().map(|x| x * GHZ).collect(),
        band: k,
        derivatives: [0.0; 4],
        derivative_error: [0.0; 4],
        truncation_m: m,
        n_g: x0,
        f: bias.f,
    };
    if gap < DEGENERACY_TOL * s.e_c {
        if s.e_j_eff == 0.0 {
            if max_order >= 2 {
                return Err(SpectrumError::NonAnalytic { n_g: x0 });
            }
            // exact crossing: symmetric difference of the energies
            let h = CROSSING_STEP;
            let ep = solve(s, x0 + h, center, m).values[k];
            let em = solve(s, x0 - h, center, m).values[k];
            out.derivatives[0] = (ep - em) / (2.0 * h) * GHZ;
            return Ok(out);
        }
        return Err(SpectrumError::DegenerateBand {
            band: k,
            gap: gap / s.e_c,
        });
    }

    // eigenvector rounding goes as eps·‖H‖/gap; the charging diagonal sets ‖H‖
    let conditioning = 4.0 * s.e_c * (m as f64 + 1.0).powi(2) / gap;
    let (values, errors) = pencil_derivatives(&e0, k, s.e_c, x0, conditioning);
    for order in 0..max_order {
        out.derivatives[order] = values[order] * GHZ;
        out.derivative_error[order] = errors[order] * GHZ;
    }
    Ok(out)
}

/// Rayleigh–Schrödinger series of band `k` in the gate charge.
///
/// H(n_g + t) = H(n_g) + t·B + 4E_C·t² with B = −8E_C(N − n_g), so the scalar t² term
/// only adds 8E_C to the curvature and everything else comes from the linear pencil.
/// Returns ∂ⁿE/∂n_gⁿ for n = 1..4 and rounding estimates, GHz units.
fn pencil_derivatives(e: &Eig, k: usize, e_c: f64, n_g: f64, conditioning: f64) -> ([f64; 4], [f64; 4]) {
    let dim = e.values.len();
    let weighted = DMatrix::from_fn(dim, dim, |r, c| e.vectors[(r, c)] * (e.charges[r] - n_g));
    let b = e.vectors.transpose() * weighted * (-8.0 * e_c);
    let bkk = b[(k, k)];
    let resolvent =
        DVector::from_fn(dim, |j, _| if j == k { 0.0 } else { 1.0 / (e.values[k] - e.values[j]) });
    let u = b.column(k).component_mul(&resolvent);
    let bu = &b * &u;

    let uu = u.dot(&u);
    let c2 = b.column(k).dot(&u);
    let c3 = u.dot(&bu) - bkk * uu;
    let c4 = bu.component_mul(&bu).dot(&resolvent) - c2 * uu
        - 2.0 * bkk * u.component_mul(&resolvent).dot(&bu)
        + bkk * bkk * u.component_mul(&u).dot(&resolvent);

    // bounds with every matrix element replaced by the norm of B, so that rounding in
    // entries that vanish by parity is still covered
    let b_norm = b.norm();
    let r_max = resolvent.amax();
    let s2 = b.column(k).norm() * u.norm();
    let s3 = (b_norm + bkk.abs()) * uu;
    let s4 = (r_max * b_norm * b_norm + c2.abs() + 2.0 * bkk.abs() * r_max * b_norm + bkk * bkk * r_max) * uu;

    let hf = -8.0 * e_c * (expect_charge(e, k) - n_g);
    let values = [hf, 2.0 * c2 + 8.0 * e_c, 6.0 * c3, 24.0 * c4];
    let scale = [8.0 * e_c * (1.0 + n_g.abs()), 2.0 * s2 + 8.0 * e_c, 6.0 * s3, 24.0 * s4];
    let errors = std::array::from_fn(|i| f64::EPSILON * (i as f64 + 2.0) * conditioning * scale[i]);
    (values, errors)
}
