//! Quantum-capacitance model: the CPB acts as an effective capacitance in series with
//! C_g2, loading the cavity. Couplings follow from x-derivatives of the loaded frequency.

use crate::params::{gate_capacitance_at, BiasPoint, ValidatedParams, E_CHARGE};
use crate::spectrum::{band_derivatives, CpbSpectrum, SpectrumError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// |C_eff + C_g2| below this fraction of C_g2 is treated as a divergent series branch.
pub const SERIES_TOL: f64 = 1e-9;
/// Default pure cross-Kerr gate: |g_rp| < this × |g_CK|.
pub const DEFAULT_CK_GATE: f64 = 1e-3;
/// Typical cavity linewidth band κ/2π in Hz.
pub const KAPPA_BAND_HZ: (f64, f64) = (1e6, 10e6);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("C_eff = {c_eff:e} F cancels C_g2 = {c_g2:e} F: the series branch diverges")]
    SeriesDivergence { c_eff: f64, c_g2: f64 },
    #[error("not in the pure cross-Kerr regime: |g_rp/g_ck| = {ratio:e} exceeds {gate:e}")]
    NotInPureCkRegime { ratio: f64, gate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Circuit,
    Perturbative2,
    Perturbative3,
    FockOracle,
}

impl ModelTag {
    pub const ALL: [ModelTag; 4] = [
        ModelTag::Circuit,
        ModelTag::Perturbative2,
        ModelTag::Perturbative3,
        ModelTag::FockOracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Circuit => "circuit",
            ModelTag::Perturbative2 => "perturbative2",
            ModelTag::Perturbative3 => "perturbative3",
            ModelTag::FockOracle => "fock_oracle",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Couplings at one bias point, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub omega_c: f64,
    pub g_rp: f64,
    pub g_0: f64,
    pub g_ck: f64,
    pub enhancement: f64,
    pub model: ModelTag,
}

impl CouplingResult {
    pub fn new(model: ModelTag, omega_c: f64, g_rp: f64, g_0: f64, g_ck: f64) -> Self {
        let enhancement = if g_0 != 0.0 { g_rp / g_0 } else { f64::NAN };
        CouplingResult {
            omega_c,
            g_rp,
            g_0,
            g_ck,
            enhancement,
            model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCapacitance {
    pub value: f64,
    /// ∂C_eff/∂x
    pub d1: f64,
    /// ∂²C_eff/∂x²
    pub d2: f64,
    pub d1_error: f64,
    pub d2_error: f64,
    pub band: usize,
}

/// C_eff and its first two x-derivatives at x = 0.
pub fn effective_capacitance(
    v: &ValidatedParams,
    bias: &BiasPoint,
) -> Result<EffectiveCapacitance, CircuitError> {
    let s = band_derivatives(v, bias, v.raw.band_index, 4)?;
    Ok(capacitance_from_band(v, &s))
}

/// Same as [`effective_capacitance`], from an already computed band spectrum.
pub fn capacitance_from_band(v: &ValidatedParams, s: &CpbSpectrum) -> EffectiveCapacitance {
    let band = s.band;
    let [_, e2, e3, e4] = s.derivatives;
    let [_, r2, r3, r4] = s.derivative_error;
    let cg = v.raw.c_g10;
    let cj = v.c_j;
    let cs = cg + cj;
    let c1 = v.gate.c_g1_prime;
    let c2 = v.gate.c_g1_double_prime;
    let vg = v.raw.v_gate;
    let e = E_CHARGE;
    let e_sq = e * e;

    let value = cg * cj / cs - cg * cg / (4.0 * e_sq) * e2;

    let d1 = -cj * cg * c1 / (cs * cs) + cj * c1 / cs - cg * c1 / (2.0 * e_sq) * e2
        + cg * cg * c1 / (8.0 * e_sq * e) * vg * e3;
    let d1_error = (cg * c1 / (2.0 * e_sq) * r2).abs()
        + (cg * cg * c1 / (8.0 * e_sq * e) * vg * r3).abs();

    // geometric part is the exact second derivative of C_g1·C_J/(C_g1 + C_J)
    let geometric = -2.0 * cj * cj * c1 * c1 / cs.powi(3) + cj * cj * c2 / (cs * cs);
    let dng = vg * c1 / (2.0 * e);
    let a2 = 2.0 * c1 * c1 + 2.0 * cg * c2;
    let a3 = 2.0 * cg * c1 * c1 * vg / e + cg * cg * c2 * vg / (2.0 * e);
    let a4 = cg * cg * dng * dng;
    let d2 = geometric - (a2 * e2 - a3 * e3 + a4 * e4) / (4.0 * e_sq);
    let d2_error = ((a2 * r2).abs() + (a3 * r3).abs() + (a4 * r4).abs()) / (4.0 * e_sq);

    EffectiveCapacitance {
        value,
        d1,
        d2,
        d1_error,
        d2_error,
        band,
    }
}

/// C_c + (1/C_g2 + 1/C_eff)⁻¹, written so that C_eff = 0 is harmless.
pub fn total_capacitance(c_c: f64, c_g2: f64, c_eff: f64) -> Result<f64, CircuitError> {
    let series = c_g2 + c_eff;
    let c_tot = c_c + c_g2 * c_eff / series;
    if series.abs() < SERIES_TOL * c_g2 || !(c_tot > 0.0) || !c_tot.is_finite() {
        return Err(CircuitError::SeriesDivergence { c_eff, c_g2 });
    }
    Ok(c_tot)
}

/// Loaded cavity frequency with the moving gate displaced by x.
///
/// Motion changes C_g1 through the parallel-plate law and shifts the gate charge by
/// −ΔC_g1·V_g/2e; the band structure keeps its x = 0 charging energy.
pub fn cavity_frequency(
    v: &ValidatedParams,
    bias: &BiasPoint,
    x: f64,
) -> Result<f64, CircuitError> {
    let cg = gate_capacitance_at(v.raw.c_g10, v.raw.gap_d0, x);
    let n_g = bias.n_g0 - (cg - v.raw.c_g10) * v.raw.v_gate / (2.0 * E_CHARGE);
    let s = band_derivatives(v, &BiasPoint::new(n_g, bias.f), v.raw.band_index, 2)?;
    let cs = cg + v.c_j;
    let c_eff = cg * v.c_j / cs - cg * cg / (4.0 * E_CHARGE * E_CHARGE) * s.derivatives[1];
    let c_tot = total_capacitance(v.raw.c_cavity, v.raw.c_g2, c_eff)?;
    Ok(1.0 / (v.raw.l_cavity * c_tot).sqrt())
}

/// Loaded frequency and its first two x-derivatives from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyExpansion {
    pub omega_c: f64,
    pub d1: f64,
    pub d2: f64,
    pub c_eff: EffectiveCapacitance,
}

pub fn frequency_expansion(
    v: &ValidatedParams,
    bias: &BiasPoint,
) -> Result<FrequencyExpansion, CircuitError> {
    expansion_from_capacitance(v, effective_capacitance(v, bias)?)
}

pub fn expansion_from_capacitance(
    v: &ValidatedParams,
    ce: EffectiveCapacitance,
) -> Result<FrequencyExpansion, CircuitError> {
    let cc = v.raw.c_cavity;
    let cg2 = v.raw.c_g2;
    let c_tot = total_capacitance(cc, cg2, ce.value)?;
    let w = 1.0 / (v.raw.l_cavity * c_tot).sqrt();
    let series = cg2 + ce.value;
    let den = cc * cg2 + (cc + cg2) * ce.value;
    let d1 = -0.5 * cg2 * cg2 / (series * series) * w / c_tot * ce.d1;
    let d2 = 0.25 * w * cg2 * cg2 * ce.d1 * ce.d1
        * (cg2 * (4.0 * cc + 3.0 * cg2) + 4.0 * (cc + cg2) * ce.value)
        / (series * series * den * den)
        - 0.5 * w * cg2 * cg2 * ce.d2 / (series * den);
    Ok(FrequencyExpansion {
        omega_c: w,
        d1,
        d2,
        c_eff: ce,
    })
}

/// g_rp = −(∂ω_c/∂x)·x_zp.
pub fn radiation_pressure_coupling(
    v: &ValidatedParams,
    bias: &BiasPoint,
) -> Result<f64, CircuitError> {
    Ok(-frequency_expansion(v, bias)?.d1 * v.raw.x_zp)
}

/// g_CK = (∂²ω_c/∂x²)·x_zp².
pub fn cross_kerr_coupling(v: &ValidatedParams, bias: &BiasPoint) -> Result<f64, CircuitError> {
    Ok(frequency_expansion(v, bias)?.d2 * v.raw.x_zp * v.raw.x_zp)
}

/// Geometric coupling through C_g1 alone, with no CPB in the circuit.
pub fn direct_coupling(v: &ValidatedParams) -> f64 {
    direct_coupling_per_metre(v) * v.raw.x_zp
}

fn direct_coupling_per_metre(v: &ValidatedParams) -> f64 {
    let cg1 = v.raw.c_g10;
    let cg2 = v.raw.c_g2;
    let c_d = v.raw.c_cavity + cg1 * cg2 / (cg1 + cg2);
    let w = 1.0 / (v.raw.l_cavity * c_d).sqrt();
    -0.5 * cg2 * cg2 / ((cg1 + cg2) * (cg1 + cg2)) * w / c_d * v.gate.c_g1_prime
}

/// x_zp that makes |g_0| equal `target` (rad/s).
pub fn x_zp_for_direct_coupling(v: &ValidatedParams, target: f64) -> f64 {
    target.abs() / direct_coupling_per_metre(v).abs()
}

/// All circuit-model couplings at one bias point.
pub fn evaluate(v: &ValidatedParams, bias: &BiasPoint) -> Result<CouplingResult, CircuitError> {
    let fx = frequency_expansion(v, bias)?;
    let x = v.raw.x_zp;
    Ok(CouplingResult::new(
        ModelTag::Circuit,
        fx.omega_c,
        -fx.d1 * x,
        direct_coupling(v),
        fx.d2 * x * x,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaVerdict {
    BelowBand,
    WithinBand,
    AboveBand,
}

/// Parameters of ω_c a†a + ω_m b†b + g_CK a†a b†b, with the linewidth comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossKerrHamiltonian {
    pub omega_c: f64,
    pub omega_m: f64,
    pub g_ck: f64,
    pub g_rp: f64,
    pub gate: f64,
    pub g_ck_hz: f64,
    pub kappa_band_hz: (f64, f64),
    pub g_ck_over_kappa: (f64, f64),
    pub verdict: KappaVerdict,
}

pub fn effective_ck_hamiltonian(
    v: &ValidatedParams,
    bias: &BiasPoint,
    gate: f64,
) -> Result<CrossKerrHamiltonian, CircuitError> {
    let r = evaluate(v, bias)?;
    let ratio = (r.g_rp / r.g_ck).abs();
    if !(ratio < gate) {
        return Err(CircuitError::NotInPureCkRegime { ratio, gate });
    }
    let hz = r.g_ck.abs() / (2.0 * PI);
    let (lo, hi) = KAPPA_BAND_HZ;
    let verdict = if hz < lo {
        KappaVerdict::BelowBand
    } else if hz > hi {
        KappaVerdict::AboveBand
    } else {
        KappaVerdict::WithinBand
    };
    Ok(CrossKerrHamiltonian {
        omega_c: r.omega_c,
        omega_m: v.raw.omega_m,
        g_ck: r.g_ck,
        g_rp: r.g_rp,
        gate,
        g_ck_hz: r.g_ck / (2.0 * PI),
        kappa_band_hz: KAPPA_BAND_HZ,
        g_ck_over_kappa: (hz / hi, hz / lo),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{params_from_energies, validate, CircuitParams, Rest, GHZ};
    use proptest::prelude::*;

    fn reference() -> ValidatedParams {
        validate(&CircuitParams::default()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Richardson-extrapolated central difference of ω_c(x), step x_zp/100.
    fn fd_first(v: &ValidatedParams, b: &BiasPoint) -> f64 {
        let w = |x: f64| cavity_frequency(v, b, x).unwrap();
        let d = |h: f64| (w(h) - w(-h)) / (2.0 * h);
        let h = v.raw.x_zp / 100.0;
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    /// Five-point second difference, step x_zp/30.
    fn fd_second(v: &ValidatedParams, b: &BiasPoint) -> f64 {
        fd_second_step(v, b, v.raw.x_zp / 30.0)
    }

    fn fd_second_step(v: &ValidatedParams, b: &BiasPoint, h: f64) -> f64 {
        let w = |x: f64| cavity_frequency(v, b, x).unwrap();
        (-w(2.0 * h) + 16.0 * w(h) - 30.0 * w(0.0) + 16.0 * w(-h) - w(-2.0 * h)) / (12.0 * h * h)
    }

    #[test]
    fn parabola_limit_of_effective_capacitance() {
        let mut p = CircuitParams::default();
        p.e_j1 = 0.0;
        p.e_j2 = 0.0;
        let v = validate(&p).unwrap();
        let c = effective_capacitance(&v, &BiasPoint::new(0.25, 0.0)).unwrap();
        let cg = p.c_g10;
        let want = cg * (v.c_j - cg) / v.c_sigma1;
        assert!(rel(c.value, want) < 1e-8);
    }

    #[test]
    fn small_gate_fraction_gives_geometric_capacitance() {
        let e_c = 30.0 * GHZ;
        let cs = crate::params::island_capacitance(e_c);
        let p = params_from_energies(e_c, 0.0, 0.0, 1e-4 * cs, &Rest::default()).unwrap();
        let v = validate(&p).unwrap();
        let c = effective_capacitance(&v, &BiasPoint::new(0.25, 0.0)).unwrap();
        assert!(rel(c.value, p.c_g10) < 1e-3);
    }

    #[test]
    fn quantum_term_is_large_and_positive_near_degeneracy() {
        let v = reference();
        let c = effective_capacitance(&v, &BiasPoint::new(0.48, 0.0)).unwrap();
        // ground-band curvature is strongly negative there, so −C_g1²E″/4e² is large
        assert!(c.value > 5.0 * v.raw.c_g10);
        let far = effective_capacitance(&v, &BiasPoint::new(0.1, 0.0)).unwrap();
        assert!(far.value < 0.0);
    }

    #[test]
    fn loaded_frequency_limits() {
        let v = reference();
        let cc = v.raw.c_cavity;
        let cg2 = v.raw.c_g2;
        assert_eq!(total_capacitance(cc, cg2, 0.0).unwrap(), cc);
        let huge = total_capacitance(cc, cg2, 1e6 * cg2).unwrap();
        assert!(rel(huge, cc + cg2) < 1e-5);
        assert!(matches!(
            total_capacitance(cc, cg2, -cg2),
            Err(CircuitError::SeriesDivergence { .. })
        ));
        // positive C_eff near degeneracy loads the cavity down, negative C_eff pulls it up
        let near = cavity_frequency(&v, &BiasPoint::new(0.48, 0.0), 0.0).unwrap();
        assert!(near < v.omega_c0);
        let far = cavity_frequency(&v, &BiasPoint::new(0.3, 0.0), 0.0).unwrap();
        assert!(far > v.omega_c0);
    }

    #[test]
    fn direct_coupling_tuned_to_ten_hertz() {
        let v = reference();
        let g0 = direct_coupling(&v);
        assert!(g0 < 0.0);
        assert!((g0.abs() / (2.0 * PI) - 10.0).abs() < 0.05, "{}", g0 / (2.0 * PI));
        let mut p = v.raw.clone();
        p.gap_d0 = 1e300;
        let flat = validate(&p).unwrap();
        assert!(direct_coupling(&flat).abs() < 1e-280);
        let x = x_zp_for_direct_coupling(&v, 2.0 * PI * 10.0);
        assert!(rel(x, v.raw.x_zp) < 5e-3);
    }

    #[test]
    fn degeneracy_keeps_only_the_unenhanced_residual() {
        let v = reference();
        let at_half = evaluate(&v, &BiasPoint::new(0.5, 0.0)).unwrap();
        let near = evaluate(&v, &BiasPoint::new(0.47, 0.0)).unwrap();
        assert!(at_half.g_rp.abs() < 1e-4 * near.g_rp.abs());
        assert!(at_half.g_ck != 0.0);
    }

    #[test]
    fn closed_forms_match_frequency_differences() {
        let v = reference();
        for (n_g, f) in [(0.3, 0.0), (0.45, 0.1), (0.7, 0.3), (0.12, 0.0)] {
            let b = BiasPoint::new(n_g, f);
            let fx = frequency_expansion(&v, &b).unwrap();
            assert!(rel(fx.d1, fd_first(&v, &b)) < 1e-6, "{n_g} {f}");
            assert!(rel(fx.d2, fd_second(&v, &b)) < 1e-4, "{n_g} {f}");
        }
    }

    #[test]
    fn geometric_second_derivative_needs_both_cross_terms() {
        // With V_g = 0 and E_J = 0 only the geometric and curvature terms survive.
        let mut p = CircuitParams::default();
        p.v_gate = 0.0;
        p.e_j1 = 0.0;
        p.e_j2 = 0.0;
        p.c_j1 = 2.0 * p.c_g10;
        p.c_j2 = 2.0 * p.c_g10;
        p.c_g2 = 3.0 * p.c_g10;
        let v = validate(&p).unwrap();
        let b = BiasPoint::new(0.2, 0.0);
        let fx = frequency_expansion(&v, &b).unwrap();
        // motion alone barely moves ω_c here, so difference on the gap scale
        let h = 1e-3 * v.raw.gap_d0;
        assert!(rel(fx.d2, fd_second_step(&v, &b, h)) < 1e-5);
        // the single-term version misses −C_J C′²/C_Σ² once
        let ce = fx.c_eff;
        let (cj, cs, c1) = (v.c_j, v.c_sigma1, v.gate.c_g1_prime);
        let printed_d2 = ce.d2 + cj * c1 * c1 / (cs * cs);
        assert!(rel(printed_d2, ce.d2) > 1e-2);
    }

    #[test]
    fn pure_ck_report_at_degeneracy() {
        let v = reference();
        let r = effective_ck_hamiltonian(&v, &BiasPoint::new(0.5, 0.0), DEFAULT_CK_GATE).unwrap();
        assert!(r.g_ck != 0.0);
        assert_eq!(r.omega_m, v.raw.omega_m);
        assert!(matches!(
            effective_ck_hamiltonian(&v, &BiasPoint::new(0.3, 0.0), DEFAULT_CK_GATE),
            Err(CircuitError::NotInPureCkRegime { .. })
        ));
    }

    #[test]
    fn crossing_is_reported_not_computed() {
        let v = reference();
        assert!(matches!(
            evaluate(&v, &BiasPoint::new(0.5, 0.5)),
            Err(CircuitError::Spectrum(SpectrumError::NonAnalytic { .. }))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn charge_mirror(delta in 0.03f64..0.45, f in 0.0f64..0.45) {
            let v = reference();
            let a = cavity_frequency(&v, &BiasPoint::new(0.5 + delta, f), 0.0).unwrap();
            let b = cavity_frequency(&v, &BiasPoint::new(0.5 - delta, f), 0.0).unwrap();
            prop_assert!(rel(a, b) < 1e-12);
            // E‴ is the only mirror-odd ingredient; without it both couplings are even
            let even = |n_g: f64| {
                let mut s = band_derivatives(&v, &BiasPoint::new(n_g, f), 0, 4).unwrap();
                s.derivatives[2] = 0.0;
                let fx = expansion_from_capacitance(&v, capacitance_from_band(&v, &s)).unwrap();
                let scale = (fx.d1 / fx.c_eff.d1).abs();
                (fx.d1, fx.d2, scale * fx.c_eff.d1_error, fx)
            };
            let (p1, p2, pe, pf) = even(0.5 + delta);
            let (m1, m2, me, mf) = even(0.5 - delta);
            prop_assert!((p1 - m1).abs() <= 1e-10 * p1.abs() + pe + me);
            let d2_err = |fx: &FrequencyExpansion| (fx.d2 / fx.c_eff.d2 * fx.c_eff.d2_error).abs();
            let both = d2_err(&pf) + d2_err(&mf);
            prop_assert!((p2 - m2).abs() <= 1e-10 * p2.abs() + both);
        }

        #[test]
        fn flux_mirror(n_g in 0.05f64..0.45, f in 0.0f64..0.45) {
            let v = reference();
            let a = evaluate(&v, &BiasPoint::new(n_g, f)).unwrap();
            let b = evaluate(&v, &BiasPoint::new(n_g, -f)).unwrap();
            prop_assert_eq!(a.g_rp, b.g_rp);
            prop_assert_eq!(a.g_ck, b.g_ck);
        }

        #[test]
        fn enhancement_is_ratio(n_g in 0.05f64..0.45) {
            let v = reference();
            let r = evaluate(&v, &BiasPoint::new(n_g, 0.0)).unwrap();
            prop_assert_eq!(r.enhancement, r.g_rp / r.g_0);
        }
    }
}
