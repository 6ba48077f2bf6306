//! Exact diagonalization of qubit ⊗ cavity ⊗ mechanics in truncated Fock spaces.
//!
//! The two-level box sees the operator-valued fields B̃₁, B̃₂, B̃₃ built from the cavity
//! quadratures and the mechanical displacement. Couplings are read off the dressed
//! spectrum without any expansion in 1/B, so this model checks the perturbative one.

use crate::circuit::{direct_coupling, CouplingResult, ModelTag};
use crate::network::infinite_bias_limits;
use crate::params::{BiasPoint, ValidatedParams, E_CHARGE, GHZ, HBAR};
use crate::perturbative::{coupling_coefficients, network_caps, qubit_fields};
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_CUTOFF: usize = 4;
pub const MAX_CUTOFF: usize = 32;
pub const MAX_DIMENSION: usize = 8192;
/// Dressed states must keep at least this weight on their bare label.
pub const MIN_OVERLAP: f64 = 0.5;
/// Relative change allowed when a cutoff is doubled.
pub const CUTOFF_DRIFT_TOL: f64 = 1e-2;

type C64 = Complex<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cutoff {0} outside [{MIN_CUTOFF}, {MAX_CUTOFF}]")]
    InvalidCutoff(usize),
    #[error("Hilbert space dimension {0} exceeds {MAX_DIMENSION}")]
    DimensionCap(usize),
    #[error("level ({n_a}, {n_b}) keeps only {overlap:.3} of its bare state: hybridized, no labels")]
    LabelingAmbiguous { n_a: usize, n_b: usize, overlap: f64 },
    #[error("qubit splitting vanishes: no ground state to label against")]
    DegenerateQubit,
    #[error("{quantity} moves by {drift:.3e} (relative) when cutoffs go to {n_cavity}×{n_mech}")]
    Unconverged {
        quantity: &'static str,
        drift: f64,
        n_cavity: usize,
        n_mech: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockConfig {
    pub n_cavity: usize,
    pub n_mech: usize,
    pub include_direct_cm: bool,
    pub include_h1_h2: bool,
    /// Mechanics drive h₁(b + b†), joule. Only used with `include_h1_h2`.
    pub h1: f64,
    /// Mechanics squeeze h₂(b² + b†²), joule. Only used with `include_h1_h2`.
    pub h2: f64,
    /// Measure the displacement from the equilibrium the qubit ground state pulls the
    /// resonator to, by adding +(B₃g_m/B)·x_m.
    pub recentre_mechanics: bool,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig {
            n_cavity: 8,
            n_mech: 8,
            include_direct_cm: false,
            include_h1_h2: false,
            h1: 0.0,
            h2: 0.0,
            recentre_mechanics: true,
        }
    }
}

impl FockConfig {
    pub fn validate(&self) -> Result<usize, FockError> {
        for n in [self.n_cavity, self.n_mech] {
            if !(MIN_CUTOFF..=MAX_CUTOFF).contains(&n) {
                return Err(FockError::InvalidCutoff(n));
            }
        }
        let dim = 2 * self.n_cavity * self.n_mech;
        if dim > MAX_DIMENSION {
            return Err(FockError::DimensionCap(dim));
        }
        Ok(dim)
    }

    pub fn with_cutoffs(&self, n_cavity: usize, n_mech: usize) -> Self {
        FockConfig {
            n_cavity,
            n_mech,
            ..*self
        }
    }
}

/// Every coefficient that enters the tripartite Hamiltonian, in joule.
///
/// Kept separate from the matrix assembly so tests can switch couplings off one by one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripartiteTerms {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub g_m: f64,
    pub g_cp: f64,
    pub g_cm: f64,
    pub cavity_quantum: f64,
    pub mech_quantum: f64,
    /// Direct cavity-mechanics term: cm_static·p_c + cm_motional·p_c·x_m.
    pub cm_static: f64,
    pub cm_motional: f64,
    pub h1: f64,
    pub h2: f64,
    pub recentre: bool,
}

impl TripartiteTerms {
    pub fn new(v: &ValidatedParams, bias: &BiasPoint, cfg: &FockConfig) -> Self {
        let q = qubit_fields(v, bias);
        let c = coupling_coefficients(v, bias);
        let (cm_static, cm_motional) = if cfg.include_direct_cm {
            let k = infinite_bias_limits(&network_caps(v)).direct_cm_factor;
            let s = 2.0 * E_CHARGE * k * v.q_zp;
            (s * bias.n_g0, s * v.gate.dng_dx * v.raw.x_zp)
        } else {
            (0.0, 0.0)
        };
        let (h1, h2) = if cfg.include_h1_h2 { (cfg.h1, cfg.h2) } else { (0.0, 0.0) };
        TripartiteTerms {
            b1: q.b1,
            b2: q.b2,
            b3: q.b3,
            g1: c.g1,
            g2: c.g2,
            g3: c.g3,
            g4: c.g4,
            g_m: c.g_m,
            g_cp: c.g_cp,
            g_cm: c.g_cm,
            cavity_quantum: HBAR * v.omega_c0,
            mech_quantum: HBAR * v.raw.omega_m,
            cm_static,
            cm_motional,
            h1,
            h2,
            recentre: cfg.recentre_mechanics,
        }
    }

    pub fn b_norm(&self) -> f64 {
        (self.b1 * self.b1 + self.b2 * self.b2 + self.b3 * self.b3).sqrt()
    }

    /// Lower eigenvector of −½(B₁σx + B₂σy + B₃σz).
    pub fn qubit_ground(&self) -> Result<[C64; 2], FockError> {
        let b = self.b_norm();
        if b == 0.0 {
            return Err(FockError::DegenerateQubit);
        }
        // ground state is aligned with (B₁, B₂, B₃) on the Bloch sphere
        let cos_t = self.b3 / b;
        let up = ((1.0 + cos_t) / 2.0).sqrt();
        let down = ((1.0 - cos_t) / 2.0).sqrt();
        let perp = self.b1.hypot(self.b2);
        let phase = if perp > 0.0 {
            C64::new(self.b1 / perp, self.b2 / perp)
        } else {
            C64::new(1.0, 0.0)
        };
        Ok([C64::new(up, 0.0), phase * down])
    }
}

/// Single-mode operators truncated to `n` levels, built in a larger space first so that
/// products are exact within the kept block.
struct ModeOps {
    number: DMatrix<C64>,
    x: DMatrix<C64>,
    x2: DMatrix<C64>,
    p: DMatrix<C64>,
    /// b² + b†²
    squeeze: DMatrix<C64>,
}

impl ModeOps {
    fn new(n: usize) -> Self {
        let big = n + 2;
        let a = DMatrix::<C64>::from_fn(big, big, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let ad = a.adjoint();
        let x = &a + &ad;
        let p = (&a - &ad) * C64::new(0.0, -1.0);
        let cut = |m: DMatrix<C64>| m.view((0, 0), (n, n)).into_owned();
        ModeOps {
            number: cut(&ad * &a),
            x2: cut(&x * &x),
            squeeze: cut(&a * &a + &ad * &ad),
            x: cut(x),
            p: cut(p),
        }
    }
}

fn pauli() -> [DMatrix<C64>; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

fn kron3(q: &DMatrix<C64>, c: &DMatrix<C64>, m: &DMatrix<C64>) -> DMatrix<C64> {
    q.kronecker(&c.kronecker(m))
}

/// Dense Hamiltonian in GHz·h units, basis |σ⟩⊗|n_a⟩⊗|n_b⟩, shifted up by B/2 so the
/// bare qubit ground sits at zero.
pub fn build_tripartite_hamiltonian(
    t: &TripartiteTerms,
    cfg: &FockConfig,
) -> Result<DMatrix<C64>, FockError> {
    let dim = cfg.validate()?;
    let cav = ModeOps::new(cfg.n_cavity);
    let mech = ModeOps::new(cfg.n_mech);
    let [id2, sx, sy, sz] = pauli();
    let ic = DMatrix::<C64>::identity(cfg.n_cavity, cfg.n_cavity);
    let im = DMatrix::<C64>::identity(cfg.n_mech, cfg.n_mech);
    let r = |e: f64| C64::new(e / GHZ, 0.0);

    let mut h = kron3(&id2, &cav.number, &im) * r(t.cavity_quantum)
        + kron3(&id2, &ic, &mech.number) * r(t.mech_quantum);

    let field1 = &ic * r(t.b1) - &cav.x * r(2.0 * t.g3) - &cav.x2 * r(2.0 * t.g2);
    let field2 = &ic * r(t.b2) - &cav.x * r(2.0 * t.g1) - &cav.x2 * r(2.0 * t.g4);
    h -= kron3(&sx, &field1, &im) * C64::new(0.5, 0.0);
    h -= kron3(&sy, &field2, &im) * C64::new(0.5, 0.0);
    let field3 = ic.kronecker(&im) * r(t.b3) + ic.kronecker(&mech.x) * r(2.0 * t.g_m)
        + cav.p.kronecker(&im) * r(2.0 * t.g_cp)
        - cav.p.kronecker(&mech.x) * r(2.0 * t.g_cm);
    h -= sz.kronecker(&field3) * C64::new(0.5, 0.0);

    let b = t.b_norm();
    if t.recentre && b > 0.0 {
        h += kron3(&id2, &ic, &mech.x) * r(t.b3 * t.g_m / b);
    }
    if t.cm_static != 0.0 || t.cm_motional != 0.0 {
        h += kron3(&id2, &cav.p, &im) * r(t.cm_static)
            + kron3(&id2, &cav.p, &mech.x) * r(t.cm_motional);
    }
    if t.h1 != 0.0 || t.h2 != 0.0 {
        h += kron3(&id2, &ic, &mech.x) * r(t.h1) + kron3(&id2, &ic, &mech.squeeze) * r(t.h2);
    }
    for k in 0..dim {
        h[(k, k)] += r(b / 2.0);
    }
    Ok(h)
}

/// The four lowest-excitation levels of the qubit-ground sector, labeled by the bare
/// product state they overlap most.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DressedLevels {
    /// [n_a][n_b], joule, relative to the bare qubit ground energy.
    pub energies: [[f64; 2]; 2],
    pub overlaps: [[f64; 2]; 2],
    /// ⟨x_m⟩ in the labeled eigenstates (units of x_zp).
    pub displacement: [[f64; 2]; 2],
}

impl DressedLevels {
    pub fn min_overlap(&self) -> f64 {
        self.overlaps.iter().flatten().fold(1.0, |m, &x| m.min(x))
    }
}

pub fn dressed_levels(
    h: &DMatrix<C64>,
    t: &TripartiteTerms,
    cfg: &FockConfig,
) -> Result<DressedLevels, FockError> {
    let g = t.qubit_ground()?;
    let (nc, nm) = (cfg.n_cavity, cfg.n_mech);
    let eig = SymmetricEigen::new(h.clone());
    let mech = ModeOps::new(nm);
    let x_m = kron3(
        &DMatrix::identity(2, 2),
        &DMatrix::identity(nc, nc),
        &mech.x,
    );
    let mut out = DressedLevels {
        energies: [[0.0; 2]; 2],
        overlaps: [[0.0; 2]; 2],
        displacement: [[0.0; 2]; 2],
    };
    for n_a in 0..2 {
        for n_b in 0..2 {
            let mut bare = DVector::<C64>::zeros(2 * nc * nm);
            for (s, amp) in g.iter().enumerate() {
                bare[s * nc * nm + n_a * nm + n_b] = *amp;
            }
            let (best, overlap) = (0..eig.eigenvalues.len())
                .map(|i| (i, eig.eigenvectors.column(i).dotc(&bare).norm_sqr()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if overlap < MIN_OVERLAP {
                return Err(FockError::LabelingAmbiguous { n_a, n_b, overlap });
            }
            let psi = eig.eigenvectors.column(best);
            out.energies[n_a][n_b] = eig.eigenvalues[best] * GHZ;
            out.overlaps[n_a][n_b] = overlap;
            out.displacement[n_a][n_b] = psi.dotc(&(&x_m * psi)).re;
        }
    }
    Ok(out)
}

/// g_CK = [E(1,1) − E(1,0) − E(0,1) + E(0,0)]/ħ.
pub fn extract_gck(levels: &DressedLevels) -> f64 {
    let e = levels.energies;
    (e[1][1] - e[1][0] - e[0][1] + e[0][0]) / HBAR
}

/// g_rp = ω_m·(⟨x_m⟩₁₀ − ⟨x_m⟩₀₀)/2: one photon displaces the resonator by 2g_rp/ω_m.
pub fn extract_grp(levels: &DressedLevels, omega_m: f64) -> f64 {
    let x = levels.displacement;
    omega_m * (x[1][0] - x[0][0]) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub g_ck: f64,
    pub g_rp: f64,
    pub levels: DressedLevels,
    pub n_cavity: usize,
    pub n_mech: usize,
}

/// One diagonalization at the configured cutoffs.
pub fn extract(
    v: &ValidatedParams,
    bias: &BiasPoint,
    cfg: &FockConfig,
) -> Result<OracleResult, FockError> {
    let t = TripartiteTerms::new(v, bias, cfg);
    let h = build_tripartite_hamiltonian(&t, cfg)?;
    let levels = dressed_levels(&h, &t, cfg)?;
    Ok(OracleResult {
        g_ck: extract_gck(&levels),
        g_rp: extract_grp(&levels, v.raw.omega_m),
        levels,
        n_cavity: cfg.n_cavity,
        n_mech: cfg.n_mech,
    })
}

/// Relative change, with an absolute floor (rad/s) for couplings that vanish by symmetry.
pub fn drift(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Absolute floor for drift checks, rad/s.
pub const DRIFT_FLOOR: f64 = 1e-3;

/// Extraction that is repeated with each cutoff doubled (capped at the maximum); fails
/// unless both couplings stay within [`CUTOFF_DRIFT_TOL`].
pub fn extract_converged(
    v: &ValidatedParams,
    bias: &BiasPoint,
    cfg: &FockConfig,
) -> Result<OracleResult, FockError> {
    let base = extract(v, bias, cfg)?;
    let grow = |n: usize| (2 * n).min(MAX_CUTOFF);
    for check in [
        cfg.with_cutoffs(grow(cfg.n_cavity), cfg.n_mech),
        cfg.with_cutoffs(cfg.n_cavity, grow(cfg.n_mech)),
    ] {
        if check == *cfg {
            continue;
        }
        let other = extract(v, bias, &check)?;
        for (quantity, a, b) in [
            ("g_ck", base.g_ck, other.g_ck),
            ("g_rp", base.g_rp, other.g_rp),
        ] {
            let d = drift(a, b, DRIFT_FLOOR);
            if d > CUTOFF_DRIFT_TOL {
                return Err(FockError::Unconverged {
                    quantity,
                    drift: d,
                    n_cavity: check.n_cavity,
                    n_mech: check.n_mech,
                });
            }
        }
    }
    Ok(base)
}

/// Converged oracle couplings as a row; ω_c is the bare cavity.
pub fn evaluate(
    v: &ValidatedParams,
    bias: &BiasPoint,
    cfg: &FockConfig,
) -> Result<CouplingResult, FockError> {
    let r = extract_converged(v, bias, cfg)?;
    Ok(CouplingResult::new(
        ModelTag::FockOracle,
        v.omega_c0,
        r.g_rp,
        direct_coupling(v),
        r.g_ck,
    ))
}
