//! The three-node capacitance network (island 1, island 2, cavity node) and its inverse.

use crate::params::E_CHARGE;
use nalgebra::Matrix3;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("capacitance matrix is singular")]
    SingularNetwork,
}

/// The four capacitances that enter the network once C_B is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkCaps {
    pub c_j: f64,
    pub c_g1: f64,
    pub c_g2: f64,
    pub c_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapMatrix {
    pub entries: Matrix3<f64>,
    pub c_b: f64,
}

pub fn cap_matrix(c: &NetworkCaps, c_b: f64) -> CapMatrix {
    let NetworkCaps { c_j, c_g1, c_g2, c_c } = *c;
    CapMatrix {
        entries: Matrix3::new(
            c_j + c_g1, -c_g1, c_j / 2.0,
            -c_g1, c_g1 + c_g2 + c_b, -c_g2 / 2.0,
            c_j / 2.0, -c_g2 / 2.0, c_c + c_j / 4.0 + c_g2 / 4.0,
        ),
        c_b,
    }
}

/// Entries of the inverse capacitance matrix, named by the charge pair they couple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseShorthands {
    pub inv_c_sigma1: f64,
    pub inv_c_sigma2: f64,
    pub inv_c_sigmac: f64,
    pub inv_c_sigma12: f64,
    pub inv_c_sigma1c: f64,
    pub inv_c_sigma2c: f64,
}

impl InverseShorthands {
    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.inv_c_sigma1, self.inv_c_sigma12, self.inv_c_sigma1c,
            self.inv_c_sigma12, self.inv_c_sigma2, self.inv_c_sigma2c,
            self.inv_c_sigma1c, self.inv_c_sigma2c, self.inv_c_sigmac,
        )
    }
}

/// Denominator shared by all closed forms, split as c_b·slope + offset.
fn denominator_parts(c: &NetworkCaps) -> (f64, f64) {
    let NetworkCaps { c_j, c_g1, c_g2, c_c } = *c;
    let slope = c_g1 * (4.0 * c_c + c_g2) + c_j * (4.0 * c_c + c_g1 + c_g2);
    let offset = 4.0 * (c_c * c_g1 * c_g2 + c_j * c_g1 * c_g2 + c_c * c_j * (c_g1 + c_g2));
    (slope, offset)
}

/// Closed-form inverse at finite C_B.
///
/// Four numerators differ from the commonly printed forms; these versions agree with
/// the numeric inverse (see the oracle tests).
pub fn inverse_shorthands_closed_form(
    c: &NetworkCaps,
    c_b: f64,
) -> Result<InverseShorthands, NetworkError> {
    let NetworkCaps { c_j, c_g1, c_g2, c_c } = *c;
    let (slope, offset) = denominator_parts(c);
    let den = c_b * slope + offset;
    if den == 0.0 || !den.is_finite() {
        return Err(NetworkError::SingularNetwork);
    }
    let n1 = c_g1 * c_g2
        + 4.0 * c_c * (c_g1 + c_g2)
        + c_j * (c_g1 + c_g2)
        + c_b * (4.0 * c_c + c_g2 + c_j);
    let n2 = c_g2 * c_j + 4.0 * c_c * (c_g1 + c_j) + c_g1 * (c_g2 + c_j);
    let nc = 4.0 * c_g1 * (c_b + c_g2) + 4.0 * c_j * (c_b + c_g1 + c_g2);
    let n12 = 4.0 * c_c * c_g1 - c_g2 * c_j + c_g1 * (c_g2 + c_j);
    let n1c = 2.0 * c_g1 * c_g2 - 2.0 * c_j * (c_b + c_g1 + c_g2);
    let n2c = 2.0 * c_g1 * (c_g2 - c_j) + 2.0 * c_g2 * c_j;
    Ok(InverseShorthands {
        inv_c_sigma1: n1 / den,
        inv_c_sigma2: n2 / den,
        inv_c_sigmac: nc / den,
        inv_c_sigma12: n12 / den,
        inv_c_sigma1c: n1c / den,
        inv_c_sigma2c: n2c / den,
    })
}

/// Straight numeric inversion of the 3×3 matrix.
pub fn inverse_numeric(m: &CapMatrix) -> Result<InverseShorthands, NetworkError> {
    let inv = m.entries.try_inverse().ok_or(NetworkError::SingularNetwork)?;
    Ok(InverseShorthands {
        inv_c_sigma1: inv[(0, 0)],
        inv_c_sigma2: inv[(1, 1)],
        inv_c_sigmac: inv[(2, 2)],
        inv_c_sigma12: inv[(0, 1)],
        inv_c_sigma1c: inv[(0, 2)],
        inv_c_sigma2c: inv[(1, 2)],
    })
}

/// C_B → ∞ forms plus the C_c-dominant approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteBias {
    pub exact: InverseShorthands,
    /// −2e·n_g/V_g, i.e. C_g1 − C_g2·C_J/(4C_c + C_g2 + C_J).
    pub gate_coupling: f64,
    /// C_Σ12/(C_Σ1·C_Σ2c), the prefactor of the direct cavity-island-2 term.
    pub direct_cm_factor: f64,
    pub approx: InverseShorthands,
    pub approx_gate_coupling: f64,
}

impl InfiniteBias {
    /// n_g at gate voltage v_gate.
    pub fn gate_charge(&self, v_gate: f64) -> f64 {
        -self.gate_coupling * v_gate / (2.0 * E_CHARGE)
    }
}

pub fn infinite_bias_limits(c: &NetworkCaps) -> InfiniteBias {
    let NetworkCaps { c_j, c_g1, c_g2, c_c } = *c;
    let (slope, _) = denominator_parts(c);
    let n12 = 4.0 * c_c * c_g1 - c_g2 * c_j + c_g1 * (c_g2 + c_j);
    let n2c = 2.0 * c_g1 * (c_g2 - c_j) + 2.0 * c_g2 * c_j;
    let inv1 = (4.0 * c_c + c_g2 + c_j) / slope;
    let exact = InverseShorthands {
        inv_c_sigma1: inv1,
        inv_c_sigma2: 0.0,
        inv_c_sigmac: 4.0 * (c_g1 + c_j) / slope,
        inv_c_sigma12: 0.0,
        inv_c_sigma1c: -2.0 * c_j / slope,
        inv_c_sigma2c: 0.0,
    };
    let approx = InverseShorthands {
        inv_c_sigma1: 1.0 / (c_g1 + c_j),
        inv_c_sigma2: 0.0,
        inv_c_sigmac: 1.0 / c_c,
        inv_c_sigma12: 0.0,
        inv_c_sigma1c: -c_j / (2.0 * c_c * (c_g1 + c_j)),
        inv_c_sigma2c: 0.0,
    };
    InfiniteBias {
        exact,
        gate_coupling: c_g1 - c_g2 * c_j / (4.0 * c_c + c_g2 + c_j),
        direct_cm_factor: inv1 * n2c / n12,
        approx,
        approx_gate_coupling: c_g1,
    }
}
