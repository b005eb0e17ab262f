//! Effective-circuit descriptions of an amplified EPR link.
//!
//! Scenario: Alice keeps one arm of an EPR state (per-mode variance V) and
//! sends the other through a thermal-loss channel purified as an entangling
//! cloner (Eve holds an EPR of variance V_E; one arm is mixed with the
//! transmitted mode on a beamsplitter of transmission T). Bob amplifies his
//! received mode with gain g. Modes are ordered (A, B, E1, E2) throughout:
//! E1 is the cloner arm that interacted with B, E2 the arm Eve keeps.
//!
//! Three descriptions of the result are implemented:
//!
//! - [`effective_single_side`]: a (chi', T', xi') reparameterization of the
//!   reduced Alice-Bob state. Its effective transmission can exceed 1, at
//!   which point the amplifier stops being interpretable as a beamsplitter
//!   on Bob's side alone.
//! - [`cloner_nla_cm`]: the full four-mode covariance matrix in closed form
//!   (with [`cloner_nla_pipeline`] as the independent construction route).
//! - [`solve_equivalent_circuit`] / [`reconstruct_equivalent_cm`]: an exact
//!   two-beamsplitter circuit (T_A on Alice's side, T_B on Bob's) with
//!   rescaled EPR variances (V', V_E') that reproduces the same four-mode
//!   state.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::nla::{nla_transform, GainProfile, NlaResult};
use crate::state::{xi_to_ve, GaussianState};
use crate::symplectic::{beamsplitter, BsConvention};

/// Effective single-side channel parameters. No range is enforced:
/// `t_eff > 1` is a meaningful output marking the breakdown of the
/// beamsplitter interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSingleSide {
    pub chi_eff: f64,
    pub t_eff: f64,
    pub xi_eff: f64,
}

/// Solves for effective parameters (chi', T', xi') such that sending
/// EPR(chi') through a (T', xi') channel reproduces the reduced Alice-Bob
/// covariance matrix of the amplified link:
///
/// ```text
/// chi' = chi sqrt(1 + 2 T (1 - g^2) / ((g^2 - 1) T xi - 2))
/// T'   = 4 g^2 T / ([(g^2 - 1) T (xi - 2) - 2] [(g^2 - 1) T xi - 2])
/// xi'  = -xi [(g^2 - 1) T (xi - 2) - 2] / 2
/// ```
///
/// At g = 1 this is the identity (chi, T, xi). At T = 1 the amplified
/// state is exactly EPR(g chi), so it reduces to chi' = g chi, T' = 1,
/// xi' = 0.
pub fn effective_single_side(chi: f64, t: f64, xi: f64, g: f64) -> Result<EffectiveSingleSide> {
    if !(0.0..1.0).contains(&chi) {
        return Err(NlaError::InvalidParameter(format!(
            "EPR parameter {chi} outside [0, 1)"
        )));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} outside (0, 1]"
        )));
    }
    if xi < 0.0 {
        return Err(NlaError::InvalidParameter(format!("excess noise {xi} < 0")));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "gain {g} is not a positive finite number"
        )));
    }
    // convergence of the underlying amplified link
    let v_e = xi_to_ve(t, xi)?;
    let v_a = (1.0 + chi * chi) / (1.0 - chi * chi);
    let v_b = t * v_a + (1.0 - t) * v_e;
    let g2 = g * g;
    let n = v_b + 1.0 - g2 * (v_b - 1.0);
    if n <= 0.0 {
        return Err(NlaError::NonConvergent { denominator: n });
    }

    let a1 = (g2 - 1.0) * t * xi - 2.0;
    let a2 = (g2 - 1.0) * t * (xi - 2.0) - 2.0;
    if a1.abs() < 1e-14 || a2.abs() < 1e-14 {
        return Err(NlaError::SolverFailure(format!(
            "effective-parameter denominator vanished: {a1:.3e}, {a2:.3e}"
        )));
    }
    let chi_rad = 1.0 + 2.0 * t * (1.0 - g2) / a1;
    if chi_rad < 0.0 {
        return Err(NlaError::SolverFailure(format!(
            "effective chi' radicand {chi_rad:.3e} negative"
        )));
    }
    Ok(EffectiveSingleSide {
        chi_eff: chi * chi_rad.sqrt(),
        t_eff: 4.0 * g2 * t / (a2 * a1),
        xi_eff: -0.5 * a2 * xi,
    })
}

/// Thermal-loss map on one mode written purely in (T, xi) form:
/// the diagonal block maps to T Sigma_mm + (1 - T + T xi) I, cross blocks
/// and mean scale by sqrt(T). For T in (0, 1] this is the physical channel
/// of [`crate::state::gaussian_channel`]; the algebraic continuation to
/// T > 1 is what the effective single-side parameterization produces, so
/// it is accepted here (T > 0 required for the sqrt).
pub fn apply_channel_t_xi(
    state: &GaussianState,
    mode: usize,
    t: f64,
    xi: f64,
) -> Result<GaussianState> {
    let n = state.n_modes();
    if mode >= n {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: mode + 1,
        });
    }
    if t <= 0.0 {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} must be positive"
        )));
    }
    let rt = t.sqrt();
    let mut cov = state.cov().clone();
    let mut mean = state.mean().clone();
    for q in 0..2 {
        let r = 2 * mode + q;
        mean[r] *= rt;
        for col in 0..2 * n {
            cov[(r, col)] *= rt;
        }
        for row in 0..2 * n {
            cov[(row, r)] *= rt;
        }
    }
    for q in 0..2 {
        let r = 2 * mode + q;
        cov[(r, r)] += 1.0 - t + t * xi;
    }
    GaussianState::from_parts(mean, cov)
}

fn validate_cloner_inputs(v: f64, v_e: f64, t: f64, g: f64) -> Result<f64> {
    if v < 1.0 || v_e < 1.0 {
        return Err(NlaError::InvalidParameter(format!(
            "EPR variances must be >= 1, got V = {v}, V_E = {v_e}"
        )));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} outside (0, 1]"
        )));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "gain {g} is not a positive finite number"
        )));
    }
    let v_b = t * v + (1.0 - t) * v_e;
    let n = v_b + 1.0 - g * g * (v_b - 1.0);
    if n <= 0.0 {
        return Err(NlaError::NonConvergent { denominator: n });
    }
    Ok(n)
}

/// Closed form for the four-mode cloner-plus-amplifier covariance matrix,
/// mode order (A, B, E1, E2). Every entry carries the common factor 1/N,
/// N = V_B + 1 - g^2 (V_B - 1) with V_B = T V + (1 - T) V_E. Entry list
/// (I = identity block pattern, Z = sigma_z pattern):
///
/// ```text
/// V_A'    = [V + T + (1-T) V V_E + g^2 (V - T - (1-T) V V_E)] / N        (I)
/// V_B'    = [V_B + 1 + g^2 (V_B - 1)] / N                                (I)
/// V_E1'   = [(1-T) V + T V_E + V V_E + g^2 ((1-T) V + T V_E - V V_E)]/N  (I)
/// V_E2'   = [V_E + 1 + T (V V_E - 1) + g^2 (V_E - 1 - T (V V_E - 1))]/N  (I)
/// c_AB'   = 2 g sqrt(T (V^2-1)) / N                                      (Z)
/// c_AE1'  = -[(V_E+1) - g^2 (V_E-1)] sqrt((1-T)(V^2-1)) / N              (Z)
/// c_AE2'  = (g^2-1) sqrt(T (1-T)(V^2-1)(V_E^2-1)) / N                    (I)
/// c_BE1'  = 2 g sqrt(T (1-T)) (V_E - V) / N                              (I)
/// c_BE2'  = 2 g sqrt((1-T)(V_E^2-1)) / N                                 (Z)
/// c_E1E2' = [(V+1) - g^2 (V-1)] sqrt(T (V_E^2-1)) / N                    (Z)
/// ```
///
/// Must agree entrywise with [`cloner_nla_pipeline`]; the test suite
/// enforces that over a parameter grid.
pub fn cloner_nla_cm(v: f64, v_e: f64, t: f64, g: f64) -> Result<DMatrix<f64>> {
    let n = validate_cloner_inputs(v, v_e, t, g)?;
    let g2 = g * g;
    let v_b = t * v + (1.0 - t) * v_e;

    let va = (v + t + (1.0 - t) * v * v_e + g2 * (v - t - (1.0 - t) * v * v_e)) / n;
    let vb = (v_b + 1.0 + g2 * (v_b - 1.0)) / n;
    let ve1 = ((1.0 - t) * v + t * v_e + v * v_e + g2 * ((1.0 - t) * v + t * v_e - v * v_e)) / n;
    let ve2 = (v_e + 1.0 + t * (v * v_e - 1.0) + g2 * (v_e - 1.0 - t * (v * v_e - 1.0))) / n;

    let c_ab = 2.0 * g * (t * (v * v - 1.0)).sqrt() / n;
    let c_ae1 = -((v_e + 1.0) - g2 * (v_e - 1.0)) * ((1.0 - t) * (v * v - 1.0)).sqrt() / n;
    let c_ae2 = (g2 - 1.0) * (t * (1.0 - t) * (v * v - 1.0) * (v_e * v_e - 1.0)).sqrt() / n;
    let c_be1 = 2.0 * g * (t * (1.0 - t)).sqrt() * (v_e - v) / n;
    let c_be2 = 2.0 * g * ((1.0 - t) * (v_e * v_e - 1.0)).sqrt() / n;
    let c_e1e2 = ((v + 1.0) - g2 * (v - 1.0)) * (t * (v_e * v_e - 1.0)).sqrt() / n;

    let mut m = DMatrix::zeros(8, 8);
    let set_diag = |m: &mut DMatrix<f64>, mode: usize, val: f64| {
        m[(2 * mode, 2 * mode)] = val;
        m[(2 * mode + 1, 2 * mode + 1)] = val;
    };
    // pattern: true = identity block, false = sigma_z block
    let set_cross = |m: &mut DMatrix<f64>, i: usize, j: usize, val: f64, identity: bool| {
        let s = if identity { 1.0 } else { -1.0 };
        m[(2 * i, 2 * j)] = val;
        m[(2 * j, 2 * i)] = val;
        m[(2 * i + 1, 2 * j + 1)] = s * val;
        m[(2 * j + 1, 2 * i + 1)] = s * val;
    };
    set_diag(&mut m, 0, va);
    set_diag(&mut m, 1, vb);
    set_diag(&mut m, 2, ve1);
    set_diag(&mut m, 3, ve2);
    set_cross(&mut m, 0, 1, c_ab, false);
    set_cross(&mut m, 0, 2, c_ae1, false);
    set_cross(&mut m, 0, 3, c_ae2, true);
    set_cross(&mut m, 1, 2, c_be1, true);
    set_cross(&mut m, 1, 3, c_be2, false);
    set_cross(&mut m, 2, 3, c_e1e2, false);
    Ok(m)
}

/// The same four-mode state built step by step: EPR(V) on (A, B), EPR(V_E)
/// on (E1, E2), beamsplitter of transmission T on (B, E1) (MinusLower
/// convention), then the amplifier on mode B. The independent route for
/// validating [`cloner_nla_cm`].
pub fn cloner_nla_pipeline(v: f64, v_e: f64, t: f64, g: f64, tol: f64) -> Result<NlaResult> {
    validate_cloner_inputs(v, v_e, t, g)?;
    let init = GaussianState::epr_from_variance(v)?.tensor(&GaussianState::epr_from_variance(v_e)?);
    let bs = beamsplitter(4, 1, 2, t, BsConvention::MinusLower)?;
    let mixed = init.apply_symplectic(&bs)?;
    nla_transform(&mixed, &GainProfile::single(4, 1, g)?, tol)
}

/// Equivalent-circuit solution: EPR variances (V', V_E') and beamsplitter
/// transmissions (T_A on Alice's side, T_B on Bob's). When V < V_E the
/// Alice-side beamsplitter needs the opposite sign convention
/// (`flipped_convention = true`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentCircuit {
    pub v_prime: f64,
    pub v_e_prime: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub flipped_convention: bool,
}

/// Solves for the equivalent circuit reproducing the four-mode state of
/// [`cloner_nla_cm`]. V' is the root of a quadratic whose branch is
/// selected by sign(V - V_E); (T_A, T_B, V_E') follow rationally. The
/// decomposition is not unique at V = V_E, which is rejected as degenerate.
/// Close to the gain boundary the solve suffers catastrophic cancellation;
/// out-of-range intermediate values are reported as solver failures rather
/// than clamped.
pub fn solve_equivalent_circuit(v: f64, v_e: f64, t: f64, g: f64) -> Result<EquivalentCircuit> {
    validate_cloner_inputs(v, v_e, t, g)?;
    if (v - v_e).abs() < 1e-8 {
        return Err(NlaError::DegenerateInput((v - v_e).abs()));
    }
    let g2 = g * g;

    let b = 1.0 + v + v_e + v * v_e + g2 * (-1.0 + v + v_e - v * v_e);
    let d2 = -1.0 - t * v + (t - 1.0) * v_e + g2 * (-1.0 + t * (v - v_e) + v_e);
    let c = d2 * ((1.0 - g2) * t * v_e + v * (1.0 - t + v_e + g2 * (-1.0 + t + v_e)));
    let disc = b * b + 4.0 * c;
    if disc < 0.0 {
        return Err(NlaError::SolverFailure(format!(
            "negative branch discriminant {disc:.3e}"
        )));
    }
    if d2.abs() < 1e-12 {
        return Err(NlaError::SolverFailure(format!(
            "vanishing quadratic coefficient {d2:.3e}"
        )));
    }
    let sign = if v > v_e { -1.0 } else { 1.0 };
    let v_prime =
        (g2 * (v - 1.0) * (v_e - 1.0) - (1.0 + v) * (1.0 + v_e) + sign * disc.sqrt()) / (2.0 * d2);

    let d = (-1.0 - v) * (1.0 + v_e)
        + 2.0 * (1.0 + t * (v - v_e) + v_e) * v_prime
        + g2 * ((v - 1.0) * (v_e - 1.0) - 2.0 * (-1.0 + t * (v - v_e) + v_e) * v_prime);
    if d.abs() < 1e-12 {
        return Err(NlaError::SolverFailure(format!(
            "vanishing transmission denominator {d:.3e}"
        )));
    }
    let t_a = ((1.0 + v_e) * (v_prime - 1.0)
        + t * (1.0 - v * v_e + v * v_prime - v_e * v_prime)
        + g2 * ((1.0 - v_e) * (1.0 + v_prime)
            + t * (-1.0 + v * v_e - v * v_prime + v_e * v_prime)))
        / d;
    let t_b = ((-1.0 - g2) * t * v_e
        + (1.0 + g2 + (g2 - 1.0) * (t - 1.0) * v_e) * v_prime
        + v * (-1.0 + t - v_e + t * v_prime + g2 * (-1.0 + t + v_e - t * v_prime)))
        / d;
    let v_e_prime = ((-1.0 - v) * (1.0 + v_e)
        + (1.0 + t * (v - v_e) + v_e) * v_prime
        + g2 * (1.0
            + v_prime
            + v_e * (-1.0 + (t - 1.0) * v_prime)
            + v * (-1.0 + v_e - t * v_prime)))
        / d2;

    let clamp_unit = |x: f64, name: &str| -> Result<f64> {
        if (-1e-9..=1.0 + 1e-9).contains(&x) {
            Ok(x.clamp(0.0, 1.0))
        } else {
            Err(NlaError::SolverFailure(format!(
                "{name} = {x} outside [0, 1]"
            )))
        }
    };
    let t_a = clamp_unit(t_a, "T_A")?;
    let t_b = clamp_unit(t_b, "T_B")?;
    for (val, name) in [(v_prime, "V'"), (v_e_prime, "V_E'")] {
        if val < 1.0 - 1e-6 || !val.is_finite() {
            return Err(NlaError::SolverFailure(format!(
                "{name} = {val} below the physical floor (gain too close to the boundary)"
            )));
        }
    }
    Ok(EquivalentCircuit {
        v_prime: v_prime.max(1.0),
        v_e_prime: v_e_prime.max(1.0),
        t_a,
        t_b,
        flipped_convention: v < v_e,
    })
}

/// Builds the four-mode covariance matrix from an equivalent-circuit
/// solution: EPR(V') on (A, B), EPR(V_E') on (E1, E2), beamsplitter T_B on
/// (B, E1) (MinusLower), beamsplitter T_A on (A, E2) (MinusUpper, or
/// MinusLower when the convention flag is set).
pub fn reconstruct_equivalent_cm(params: &EquivalentCircuit) -> Result<DMatrix<f64>> {
    let init = GaussianState::epr_from_variance(params.v_prime)?
        .tensor(&GaussianState::epr_from_variance(params.v_e_prime)?);
    let bs_b = beamsplitter(4, 1, 2, params.t_b, BsConvention::MinusLower)?;
    let conv_a = if params.flipped_convention {
        BsConvention::MinusLower
    } else {
        BsConvention::MinusUpper
    };
    let bs_a = beamsplitter(4, 0, 3, params.t_a, conv_a)?;
    let out = init.apply_symplectic(&bs_b)?.apply_symplectic(&bs_a)?;
    Ok(out.cov().clone())
}
