//! Physical constants, the circuit parameter record and everything derived from it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602176634e-19;
/// Planck constant (J s).
pub const H_PLANCK: f64 = 6.62607015e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = H_PLANCK / (2.0 * PI);
/// Superconducting flux quantum h/2e (Wb).
pub const PHI0: f64 = H_PLANCK / (2.0 * E_CHARGE);
/// Energy of one GHz photon, h·1 GHz (J).
pub const GHZ: f64 = H_PLANCK * 1e9;

/// Default mechanical angular frequency, 2π·10 MHz.
pub const DEFAULT_OMEGA_M: f64 = 2.0 * PI * 10e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConsts {
    pub e_charge: f64,
    pub h_planck: f64,
    pub hbar: f64,
    pub phi0: f64,
}

impl PhysConsts {
    pub const SI: PhysConsts = PhysConsts {
        e_charge: E_CHARGE,
        h_planck: H_PLANCK,
        hbar: HBAR,
        phi0: PHI0,
    };
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{0}` must be strictly positive and finite")]
    NonPositiveParameter(&'static str),
    #[error("x_zp ({x_zp:e} m) is not small compared to the gate gap ({gap:e} m)")]
    XzpExceedsGap { x_zp: f64, gap: f64 },
    #[error("Josephson energy `{0}` is negative")]
    NegativeJosephsonEnergy(&'static str),
    #[error("c_g10 = {c_g10:e} F already exceeds the total island capacitance {c_sigma:e} F implied by E_C")]
    InfeasibleCharging { c_g10: f64, c_sigma: f64 },
    #[error("parameter input: {0}")]
    Input(String),
}

/// Full parameter record, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    pub c_cavity: f64,
    pub l_cavity: f64,
    /// Static (x = 0) moving-gate capacitance.
    pub c_g10: f64,
    pub c_g2: f64,
    pub c_j1: f64,
    pub c_j2: f64,
    pub e_j1: f64,
    pub e_j2: f64,
    pub v_gate: f64,
    /// Parallel-plate gap of the moving gate at rest.
    pub gap_d0: f64,
    pub x_zp: f64,
    pub omega_m: f64,
    #[serde(default)]
    pub band_index: usize,
}

impl Default for CircuitParams {
    /// The reference device: E_C/h = 30 GHz, E_J/h = 7.5 GHz, symmetric junctions,
    /// 99% of the island capacitance in the moving gate, a 5 GHz / 100 Ω cavity and
    /// x_zp chosen so that the bare geometric coupling is about 2π·10 Hz.
    fn default() -> Self {
        params_from_energies(
            30.0 * GHZ,
            7.5 * GHZ,
            0.0,
            DEFAULT_GATE_FRACTION * island_capacitance(30.0 * GHZ),
            &Rest::default(),
        )
        .expect("reference device is feasible")
    }
}

/// Share of the island capacitance sitting in the moving gate for the reference device.
pub const DEFAULT_GATE_FRACTION: f64 = 0.99;

/// Everything in [`CircuitParams`] that is not fixed by E_C, E_J, d and c_g10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rest {
    pub c_cavity: f64,
    pub l_cavity: f64,
    pub c_g2: f64,
    pub v_gate: f64,
    pub gap_d0: f64,
    pub x_zp: f64,
    pub omega_m: f64,
    pub band_index: usize,
}

impl Default for Rest {
    fn default() -> Self {
        Rest {
            c_cavity: 0.318e-12,
            l_cavity: 3.18e-9,
            c_g2: 64e-15,
            v_gate: 10.0,
            gap_d0: 50e-9,
            x_zp: 1.017e-13,
            omega_m: DEFAULT_OMEGA_M,
            band_index: 0,
        }
    }
}

/// C_Σ1 = e²/(2E_C).
pub fn island_capacitance(e_c: f64) -> f64 {
    E_CHARGE * E_CHARGE / (2.0 * e_c)
}

/// Back-solves capacitances and junction energies from target E_C, E_J and asymmetry d.
pub fn params_from_energies(
    e_c_target: f64,
    e_j_target: f64,
    d: f64,
    c_g10: f64,
    rest: &Rest,
) -> Result<CircuitParams, ParamError> {
    if !(e_c_target > 0.0 && e_c_target.is_finite()) {
        return Err(ParamError::NonPositiveParameter("e_c"));
    }
    if e_j_target < 0.0 {
        return Err(ParamError::NegativeJosephsonEnergy("e_j"));
    }
    let c_sigma = island_capacitance(e_c_target);
    if c_g10 >= c_sigma {
        return Err(ParamError::InfeasibleCharging { c_g10, c_sigma });
    }
    let c_j = c_sigma - c_g10;
    Ok(CircuitParams {
        c_cavity: rest.c_cavity,
        l_cavity: rest.l_cavity,
        c_g10,
        c_g2: rest.c_g2,
        c_j1: c_j / 2.0,
        c_j2: c_j / 2.0,
        e_j1: (1.0 + d) * e_j_target / 2.0,
        e_j2: (1.0 - d) * e_j_target / 2.0,
        v_gate: rest.v_gate,
        gap_d0: rest.gap_d0,
        x_zp: rest.x_zp,
        omega_m: rest.omega_m,
        band_index: rest.band_index,
    })
}

/// Derivatives of the parallel-plate moving gate C(x) = C_g10·d0/(d0 − x) at x = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateGeometry {
    pub c_g1_prime: f64,
    pub c_g1_double_prime: f64,
    /// ∂n_g/∂x = −C′·V_g/(2e).
    pub dng_dx: f64,
}

impl GateGeometry {
    pub fn new(c_g10: f64, gap_d0: f64, v_gate: f64) -> Self {
        let c1 = c_g10 / gap_d0;
        GateGeometry {
            c_g1_prime: c1,
            c_g1_double_prime: 2.0 * c_g10 / (gap_d0 * gap_d0),
            dng_dx: -c1 * v_gate / (2.0 * E_CHARGE),
        }
    }
}

/// Parallel-plate gate capacitance at displacement x.
pub fn gate_capacitance_at(c_g10: f64, gap_d0: f64, x: f64) -> f64 {
    c_g10 * gap_d0 / (gap_d0 - x)
}

/// Validated parameters with all derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    pub raw: CircuitParams,
    pub c_j: f64,
    pub e_j: f64,
    /// Junction asymmetry d = (E_J1 − E_J2)/E_J.
    pub asymmetry: f64,
    pub e_c: f64,
    pub c_sigma1: f64,
    pub z0: f64,
    pub eta: f64,
    pub q_zp: f64,
    pub phi_zp: f64,
    /// Bare LC frequency 1/sqrt(L_c C_c).
    pub omega_c0: f64,
    pub gate: GateGeometry,
}

fn positive(name: &'static str, v: f64) -> Result<(), ParamError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ParamError::NonPositiveParameter(name))
    }
}

/// x_zp must stay below this fraction of the gap for the Taylor expansion in x to make sense.
pub const XZP_GAP_LIMIT: f64 = 1e-2;

pub fn validate(p: &CircuitParams) -> Result<ValidatedParams, ParamError> {
    positive("c_cavity", p.c_cavity)?;
    positive("l_cavity", p.l_cavity)?;
    positive("c_g10", p.c_g10)?;
    positive("c_g2", p.c_g2)?;
    positive("c_j1", p.c_j1)?;
    positive("c_j2", p.c_j2)?;
    positive("gap_d0", p.gap_d0)?;
    positive("x_zp", p.x_zp)?;
    positive("omega_m", p.omega_m)?;
    if !p.v_gate.is_finite() {
        return Err(ParamError::Input("v_gate must be finite".into()));
    }
    if !(p.e_j1 >= 0.0) || !p.e_j1.is_finite() {
        return Err(ParamError::NegativeJosephsonEnergy("e_j1"));
    }
    if !(p.e_j2 >= 0.0) || !p.e_j2.is_finite() {
        return Err(ParamError::NegativeJosephsonEnergy("e_j2"));
    }
    if p.x_zp >= XZP_GAP_LIMIT * p.gap_d0 {
        return Err(ParamError::XzpExceedsGap {
            x_zp: p.x_zp,
            gap: p.gap_d0,
        });
    }
    let c_j = p.c_j1 + p.c_j2;
    let e_j = p.e_j1 + p.e_j2;
    // junction labels are arbitrary, so only |d| is physical
    let asymmetry = if e_j > 0.0 {
        ((p.e_j1 - p.e_j2) / e_j).abs()
    } else {
        0.0
    };
    let c_sigma1 = p.c_g10 + c_j;
    let e_c = E_CHARGE * E_CHARGE / (2.0 * c_sigma1);
    let z0 = (p.l_cavity / p.c_cavity).sqrt();
    Ok(ValidatedParams {
        raw: p.clone(),
        c_j,
        e_j,
        asymmetry,
        e_c,
        c_sigma1,
        z0,
        eta: (E_CHARGE * E_CHARGE * z0 / (2.0 * HBAR)).sqrt(),
        q_zp: (HBAR / (2.0 * z0)).sqrt(),
        phi_zp: (HBAR * z0 / 2.0).sqrt(),
        omega_c0: 1.0 / (p.l_cavity * p.c_cavity).sqrt(),
        gate: GateGeometry::new(p.c_g10, p.gap_d0, p.v_gate),
    })
}

/// cos(πf), exactly zero at half-integer f.
pub fn cos_pi(f: f64) -> f64 {
    let r = f.rem_euclid(2.0);
    if r == 0.5 || r == 1.5 {
        0.0
    } else {
        (PI * f).cos()
    }
}

/// sin(πf), exactly zero at integer f.
pub fn sin_pi(f: f64) -> f64 {
    let r = f.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        0.0
    } else {
        (PI * f).sin()
    }
}

/// Bias point: static gate charge in Cooper pairs and reduced flux Φ_E/Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub n_g0: f64,
    pub f: f64,
}

impl BiasPoint {
    pub fn new(n_g0: f64, f: f64) -> Self {
        BiasPoint { n_g0, f }
    }
}

/// Parameter input as found in JSON configs. Either the capacitance form
/// (c_j1, c_j2, e_j1, e_j2) or the energy form (e_c, e_j, asymmetry, c_g10 or
/// gate_fraction). Any energy may be given as `<name>_ghz` instead of joules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsInput {
    pub c_cavity: Option<f64>,
    pub l_cavity: Option<f64>,
    pub c_g10: Option<f64>,
    pub gate_fraction: Option<f64>,
    pub c_g2: Option<f64>,
    pub c_j1: Option<f64>,
    pub c_j2: Option<f64>,
    pub e_j1: Option<f64>,
    pub e_j1_ghz: Option<f64>,
    pub e_j2: Option<f64>,
    pub e_j2_ghz: Option<f64>,
    pub e_c: Option<f64>,
    pub e_c_ghz: Option<f64>,
    pub e_j: Option<f64>,
    pub e_j_ghz: Option<f64>,
    pub asymmetry: Option<f64>,
    pub v_gate: Option<f64>,
    pub gap_d0: Option<f64>,
    pub x_zp: Option<f64>,
    pub omega_m: Option<f64>,
    pub band_index: Option<usize>,
}

fn energy(
    joule: Option<f64>,
    ghz: Option<f64>,
    name: &str,
) -> Result<Option<f64>, ParamError> {
    match (joule, ghz) {
        (Some(_), Some(_)) => Err(ParamError::Input(format!(
            "both `{name}` and `{name}_ghz` given"
        ))),
        (Some(j), None) => Ok(Some(j)),
        (None, Some(g)) => Ok(Some(g * GHZ)),
        (None, None) => Ok(None),
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64, ParamError> {
    v.ok_or_else(|| ParamError::Input(format!("missing `{name}`")))
}

impl ParamsInput {
    /// Resolves to a full parameter record. Missing cavity/gate/mechanics fields
    /// fall back to the reference device.
    pub fn resolve(&self) -> Result<CircuitParams, ParamError> {
        let base = Rest::default();
        let rest = Rest {
            c_cavity: self.c_cavity.unwrap_or(base.c_cavity),
            l_cavity: self.l_cavity.unwrap_or(base.l_cavity),
            c_g2: self.c_g2.unwrap_or(base.c_g2),
            v_gate: self.v_gate.unwrap_or(base.v_gate),
            gap_d0: self.gap_d0.unwrap_or(base.gap_d0),
            x_zp: self.x_zp.unwrap_or(base.x_zp),
            omega_m: self.omega_m.unwrap_or(base.omega_m),
            band_index: self.band_index.unwrap_or(base.band_index),
        };
        let e_c = energy(self.e_c, self.e_c_ghz, "e_c")?;
        let e_j = energy(self.e_j, self.e_j_ghz, "e_j")?;
        let e_j1 = energy(self.e_j1, self.e_j1_ghz, "e_j1")?;
        let e_j2 = energy(self.e_j2, self.e_j2_ghz, "e_j2")?;
        if let Some(e_c) = e_c {
            if self.c_j1.is_some() || self.c_j2.is_some() || e_j1.is_some() || e_j2.is_some() {
                return Err(ParamError::Input(
                    "energy form (e_c) cannot be mixed with c_j1/c_j2/e_j1/e_j2".into(),
                ));
            }
            let c_g10 = match (self.c_g10, self.gate_fraction) {
                (Some(_), Some(_)) => {
                    return Err(ParamError::Input(
                        "give either `c_g10` or `gate_fraction`".into(),
                    ))
                }
                (Some(c), None) => c,
                (None, frac) => {
                    frac.unwrap_or(DEFAULT_GATE_FRACTION) * island_capacitance(e_c)
                }
            };
            params_from_energies(
                e_c,
                need(e_j, "e_j")?,
                self.asymmetry.unwrap_or(0.0),
                c_g10,
                &rest,
            )
        } else {
            if e_j.is_some() || self.asymmetry.is_some() || self.gate_fraction.is_some() {
                return Err(ParamError::Input(
                    "e_j/asymmetry/gate_fraction need the energy form (e_c)".into(),
                ));
            }
            Ok(CircuitParams {
                c_cavity: rest.c_cavity,
                l_cavity: rest.l_cavity,
                c_g10: need(self.c_g10, "c_g10")?,
                c_g2: rest.c_g2,
                c_j1: need(self.c_j1, "c_j1")?,
                c_j2: need(self.c_j2, "c_j2")?,
                e_j1: need(e_j1, "e_j1")?,
                e_j2: need(e_j2, "e_j2")?,
                v_gate: rest.v_gate,
                gap_d0: rest.gap_d0,
                x_zp: rest.x_zp,
                omega_m: rest.omega_m,
                band_index: rest.band_index,
            })
        }
    }
}

impl From<&CircuitParams> for ParamsInput {
    fn from(p: &CircuitParams) -> Self {
        ParamsInput {
            c_cavity: Some(p.c_cavity),
            l_cavity: Some(p.l_cavity),
            c_g10: Some(p.c_g10),
            c_g2: Some(p.c_g2),
            c_j1: Some(p.c_j1),
            c_j2: Some(p.c_j2),
            e_j1: Some(p.e_j1),
            e_j2: Some(p.e_j2),
            v_gate: Some(p.v_gate),
            gap_d0: Some(p.gap_d0),
            x_zp: Some(p.x_zp),
            omega_m: Some(p.omega_m),
            band_index: Some(p.band_index),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn flux_quantum_and_hbar() {
        assert_eq!(PHI0, H_PLANCK / (2.0 * E_CHARGE));
        assert!(rel(HBAR * 2.0 * PI, H_PLANCK) < 1e-15);
    }

    #[test]
    fn cavity_impedance_and_frequency() {
        let v = validate(&CircuitParams::default()).unwrap();
        assert!(rel(v.z0, 100.0) < 1e-12);
        assert!(rel(v.omega_c0 / (2.0 * PI), 5.0e9) < 2e-3);
    }

    #[test]
    fn zero_point_charge_and_eta() {
        let v = validate(&CircuitParams::default()).unwrap();
        // independent evaluation with the constants written out
        let hbar = 6.62607015e-34 / (2.0 * std::f64::consts::PI);
        let e = 1.602176634e-19;
        let eta = (e * e * 100.0 / (2.0 * hbar)).sqrt();
        assert!(rel(v.eta, eta) < 1e-12);
        assert!((v.eta - 0.1103).abs() < 1e-3);
        assert!(rel(v.q_zp, 7.26e-19) < 1e-3);
        assert!(rel(2.0 * v.phi_zp * v.q_zp, HBAR) < 1e-12);
    }

    #[test]
    fn charging_capacitance_at_30ghz() {
        let cs = island_capacitance(30.0 * GHZ);
        assert!(rel(cs, 0.6456e-15) < 1e-3, "{cs:e}");
    }

    #[test]
    fn symmetric_split() {
        let p = params_from_energies(30.0 * GHZ, 5.0 * GHZ, 0.0, 0.3e-15, &Rest::default()).unwrap();
        assert!(rel(p.e_j1, 2.5 * GHZ) < 1e-15);
        assert_eq!(p.e_j1, p.e_j2);
        assert_eq!(validate(&p).unwrap().asymmetry, 0.0);
        let v = validate(&CircuitParams::default()).unwrap();
        assert!(rel(v.e_j / v.e_c, 0.25) < 1e-12);
    }

    #[test]
    fn infeasible_gate() {
        let cs = island_capacitance(30.0 * GHZ);
        let err = params_from_energies(30.0 * GHZ, 1.0 * GHZ, 0.0, 1.01 * cs, &Rest::default());
        assert!(matches!(err, Err(ParamError::InfeasibleCharging { .. })));
    }

    #[test]
    fn rejects_bad_records() {
        let mut p = CircuitParams::default();
        p.c_cavity = 0.0;
        assert_eq!(validate(&p), Err(ParamError::NonPositiveParameter("c_cavity")));
        let mut p = CircuitParams::default();
        p.e_j2 = -1e-24;
        assert_eq!(validate(&p), Err(ParamError::NegativeJosephsonEnergy("e_j2")));
        let mut p = CircuitParams::default();
        p.x_zp = p.gap_d0;
        assert!(matches!(validate(&p), Err(ParamError::XzpExceedsGap { .. })));
    }

    #[test]
    fn trig_zeros_are_exact() {
        assert_eq!(cos_pi(0.5), 0.0);
        assert_eq!(cos_pi(-0.5), 0.0);
        assert_eq!(cos_pi(1.5), 0.0);
        assert_eq!(sin_pi(1.0), 0.0);
        assert_eq!(cos_pi(0.0), 1.0);
        assert!((cos_pi(0.25) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ghz_keys_resolve() {
        let json = r#"{"e_c_ghz": 30, "e_j_ghz": 7.5, "gate_fraction": 0.99}"#;
        let input: ParamsInput = serde_json::from_str(json).unwrap();
        let p = input.resolve().unwrap();
        assert_eq!(p, CircuitParams::default());
        let back = ParamsInput::from(&p).resolve().unwrap();
        assert_eq!(back, p);
        let clash = r#"{"e_c_ghz": 30, "e_c": 1e-23, "e_j_ghz": 1}"#;
        let input: ParamsInput = serde_json::from_str(clash).unwrap();
        assert!(input.resolve().is_err());
    }

    proptest! {
        #[test]
        fn energy_round_trip(ec in 1.0f64..400.0, ej in 0.0f64..50.0, d in 0.0f64..0.99, frac in 0.01f64..0.99) {
            let e_c = ec * GHZ;
            let p = params_from_energies(e_c, ej * GHZ, d, frac * island_capacitance(e_c), &Rest::default()).unwrap();
            let v = validate(&p).unwrap();
            prop_assert!(rel(v.e_c, e_c) < 1e-12);
            if ej > 0.0 {
                prop_assert!((v.asymmetry - d).abs() < 1e-12);
            }
        }

        #[test]
        fn zero_point_product(z in 1.0f64..1000.0) {
            let mut p = CircuitParams::default();
            p.l_cavity = z * z * p.c_cavity;
            let v = validate(&p).unwrap();
            prop_assert!(rel(2.0 * v.phi_zp * v.q_zp, HBAR) < 1e-12);
        }

        #[test]
        fn gate_derivatives_match_parallel_plate(c in 1e-17f64..1e-14, d0 in 1e-8f64..1e-6) {
            let g = GateGeometry::new(c, d0, 10.0);
            let h = d0 * 1e-4;
            let cp = |x: f64| gate_capacitance_at(c, d0, x);
            let d1 = (cp(h) - cp(-h)) / (2.0 * h);
            let d2 = (cp(h) - 2.0 * cp(0.0) + cp(-h)) / (h * h);
            prop_assert!(rel(d1, g.c_g1_prime) < 1e-6);
            prop_assert!(rel(d2, g.c_g1_double_prime) < 1e-6);
        }
    }
}
