//! The ideal noiseless linear amplifier g^(a†a) as a Gaussian map.
//!
//! The map is Gaussian but not symplectic: it has a state-dependent
//! convergence bound past which the limiting output stops being a physical
//! state. Two independent algebraic forms are implemented. The production
//! path works with logarithmic gains l = ln g and is regular at g = 1:
//!
//! ```text
//! Sigma_out = (cosh l - Sigma sinh l)^-1 (Sigma cosh l - sinh l)
//! d_out     = (cosh l - Sigma sinh l)^-1 d
//! ```
//!
//! The linear-gain form (Sigma_out = g [g^2 + 1 - Sigma (g^2 - 1)]^-1
//! [Sigma (g^2 + 1) - (g^2 - 1)] g^-1, d_out = 2 g [...]^-1 d) is retained
//! solely as an independent route for cross-checking; the two are
//! algebraically identical wherever both are defined.

use nalgebra::{DMatrix, DVector};

use crate::error::{NlaError, Result};
use crate::state::{GaussianState, TwoModeStandardForm};
use crate::symplectic::is_physical;

/// Per-mode amplifier gains. g_k = 1 means no amplifier on mode k; g_k > 1
/// amplifies, 0 < g_k < 1 deamplifies (also a valid heralded operation).
#[derive(Debug, Clone, PartialEq)]
pub struct GainProfile {
    gains: Vec<f64>,
}

impl GainProfile {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(NlaError::InvalidParameter("empty gain profile".into()));
        }
        for &g in &gains {
            if !(g > 0.0 && g.is_finite()) {
                return Err(NlaError::InvalidParameter(format!(
                    "gain {g} is not a positive finite number"
                )));
            }
        }
        Ok(GainProfile { gains })
    }

    /// The same gain on every mode.
    pub fn uniform(n_modes: usize, g: f64) -> Result<Self> {
        Self::new(vec![g; n_modes])
    }

    /// Gain `g` on `mode`, unit gain elsewhere.
    pub fn single(n_modes: usize, mode: usize, g: f64) -> Result<Self> {
        if mode >= n_modes {
            return Err(NlaError::DimensionMismatch {
                expected: n_modes,
                found: mode + 1,
            });
        }
        let mut gains = vec![1.0; n_modes];
        gains[mode] = g;
        Self::new(gains)
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn n_modes(&self) -> usize {
        self.gains.len()
    }

    pub fn is_identity(&self) -> bool {
        self.gains.iter().all(|&g| g == 1.0)
    }

    /// Linear-gain matrix: direct sum of g_k I_2.
    pub fn g_matrix(&self) -> DMatrix<f64> {
        self.per_quadrature(|g| g)
    }

    /// Logarithmic-gain matrix l: direct sum of ln(g_k) I_2.
    pub fn log_gain_matrix(&self) -> DMatrix<f64> {
        self.per_quadrature(|g| g.ln())
    }

    /// The matrix G: direct sum of ((g_k + 1)/(g_k - 1)) I_2, defined only
    /// when every g_k differs from 1.
    pub fn g_cap_matrix(&self) -> Result<DMatrix<f64>> {
        if self.gains.contains(&1.0) {
            return Err(NlaError::InvalidParameter(
                "G matrix undefined at unit gain".into(),
            ));
        }
        Ok(self.per_quadrature(|g| (g + 1.0) / (g - 1.0)))
    }

    fn per_quadrature(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let diag: Vec<f64> = self.gains.iter().flat_map(|&g| [f(g), f(g)]).collect();
        DMatrix::from_diagonal(&DVector::from_vec(diag))
    }
}

/// Output of [`nla_transform`]: the limiting state plus convergence
/// diagnostics.
///
/// `converged` is true iff the denominator (cosh l - Sigma sinh l) is
/// positive definite *and* the output covariance matrix is physical. When
/// `converged` is false the state fields still hold the algebraic
/// continuation of the formulas (useful for divergence diagnostics) unless
/// the denominator was numerically singular, in which case the input state
/// is echoed back unchanged.
#[derive(Debug, Clone)]
pub struct NlaResult {
    pub state: GaussianState,
    pub converged: bool,
    /// Smallest eigenvalue (smallest real part, for non-uniform gain
    /// profiles where the denominator is non-symmetric) of
    /// (cosh l - Sigma sinh l).
    pub min_denominator_eig: f64,
    /// Smallest symplectic eigenvalue of the output covariance matrix.
    pub lambda_minus_out: f64,
}

/// Applies the amplifier map in logarithmic-gain form.
///
/// Unit gain on every mode returns the input exactly. A numerically
/// singular denominator is reported through `converged = false` rather
/// than an error; hard errors are reserved for malformed inputs.
pub fn nla_transform(state: &GaussianState, gains: &GainProfile, tol: f64) -> Result<NlaResult> {
    let n = state.n_modes();
    if gains.n_modes() != n {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: gains.n_modes(),
        });
    }
    if gains.is_identity() {
        let (_, lambda) = is_physical(state.cov(), tol);
        return Ok(NlaResult {
            state: state.clone(),
            converged: true,
            min_denominator_eig: 1.0,
            lambda_minus_out: lambda,
        });
    }

    let cosh_l = gains.per_quadrature(|g| g.ln().cosh());
    let sinh_l = gains.per_quadrature(|g| g.ln().sinh());
    let denom = &cosh_l - state.cov() * &sinh_l;
    let (denom_pd, min_eig) = denominator_spectrum(&denom);

    let numer = state.cov() * &cosh_l - &sinh_l;
    let lu = denom.clone().lu();
    let (out_state, solvable) = match (lu.solve(&numer), lu.solve(state.mean())) {
        (Some(cov), Some(mean)) => {
            let cov = 0.5 * (&cov + cov.transpose());
            (GaussianState::from_parts_unchecked(mean, cov), true)
        }
        _ => (state.clone(), false),
    };
    let (physical, lambda_minus_out) = if solvable {
        is_physical(out_state.cov(), tol)
    } else {
        (false, f64::NAN)
    };
    Ok(NlaResult {
        state: out_state,
        converged: denom_pd && solvable && physical,
        min_denominator_eig: min_eig,
        lambda_minus_out,
    })
}

/// Positive-definiteness flag and smallest eigenvalue (real part) of the
/// denominator matrix. For uniform gains the matrix is symmetric and the
/// spectrum real; non-uniform profiles give a matrix similar to a symmetric
/// one in the common cases, and any residual imaginary parts beyond
/// round-off are treated as a positivity failure.
fn denominator_spectrum(denom: &DMatrix<f64>) -> (bool, f64) {
    let scale = denom.amax().max(1.0);
    if (denom - denom.transpose()).amax() < 1e-12 * scale {
        let sym = 0.5 * (denom + denom.transpose());
        let eigs = sym.symmetric_eigenvalues();
        let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        (min > 1e-10 * scale, min)
    } else {
        let eigs = denom.clone().complex_eigenvalues();
        let min_re = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let max_im = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        (min_re > 1e-10 * scale && max_im < 1e-9 * scale, min_re)
    }
}

/// Applies the amplifier map in linear-gain form. Exists solely as an
/// independent algebraic route for cross-checking [`nla_transform`];
/// errors on a singular bracket instead of reporting diagnostics.
pub fn nla_transform_linear_form(
    state: &GaussianState,
    gains: &GainProfile,
) -> Result<GaussianState> {
    let n = state.n_modes();
    if gains.n_modes() != n {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: gains.n_modes(),
        });
    }
    let a = gains.per_quadrature(|g| g * g + 1.0);
    let b = gains.per_quadrature(|g| g * g - 1.0);
    let g_mat = gains.g_matrix();
    let g_inv = gains.per_quadrature(|g| 1.0 / g);

    let bracket = &a - state.cov() * &b;
    let lu = bracket.clone().lu();
    let numer = state.cov() * &a - &b;
    let solved_cov = lu
        .solve(&numer)
        .ok_or_else(|| NlaError::SolverFailure("singular linear-form bracket".into()))?;
    let solved_mean = lu
        .solve(state.mean())
        .ok_or_else(|| NlaError::SolverFailure("singular linear-form bracket".into()))?;

    let cov = &g_mat * solved_cov * &g_inv;
    let cov = 0.5 * (&cov + cov.transpose());
    let mean = 2.0 * &g_mat * solved_mean;
    Ok(GaussianState::from_parts_unchecked(mean, cov))
}

/// The gain bound printed for a single mode of variance V > 1:
/// (V + 1)/(V - 1). The convergence condition for the amplifier map is
/// g^2 < (V + 1)/(V - 1), so this quantity bounds the *squared* gain; the
/// bound on the gain itself is its square root, [`max_gain`]. V <= 1
/// (coherent or squeezed-vacuum inputs) puts no bound on the gain.
pub fn max_gain_single_mode(v: f64) -> f64 {
    if v <= 1.0 {
        f64::INFINITY
    } else {
        (v + 1.0) / (v - 1.0)
    }
}

/// Largest convergent gain for a single mode of variance V:
/// sqrt((V + 1)/(V - 1)), infinite for V <= 1. For an EPR state of
/// per-mode variance V this equals 1/chi exactly.
pub fn max_gain(v: f64) -> f64 {
    max_gain_single_mode(v).sqrt()
}

/// Largest convergent gain for the EPR-through-channel scenario: the
/// amplified mode has variance V_B = T V_A + (1 - T) V_E, giving the bound
/// g < sqrt((V_B + 1)/(V_B - 1)). Infinite when V_B <= 1 (chi = 0 through
/// a vacuum-environment channel).
pub fn epr_channel_max_gain(chi: f64, t: f64, v_e: f64) -> Result<f64> {
    let (_, v_b) = epr_channel_variances(chi, t, v_e)?;
    Ok(max_gain(v_b))
}

fn epr_channel_variances(chi: f64, t: f64, v_e: f64) -> Result<(f64, f64)> {
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
    if v_e < 1.0 {
        return Err(NlaError::InvalidParameter(format!(
            "environment variance {v_e} < 1"
        )));
    }
    let v_a = (1.0 + chi * chi) / (1.0 - chi * chi);
    let v_b = t * v_a + (1.0 - t) * v_e;
    Ok((v_a, v_b))
}

/// Closed form for an EPR state sent through a thermal-loss channel on mode
/// B and then amplified on mode B with gain g. Output entries, with
/// N = V_B + 1 - g^2 (V_B - 1):
///
/// ```text
/// V_A' = [V_A (V_B + 1) - T (V_A^2 - 1) + g^2 (T (V_A^2 - 1) - V_A (V_B - 1))] / N
/// V_B' = [V_B + 1 + g^2 (V_B - 1)] / N
/// c'   = 2 g sqrt(T (V_A^2 - 1)) / N
/// ```
///
/// N <= 0 is the non-convergent regime and is reported as an error. Must
/// match the general pipeline (EPR constructor, channel, amplifier map);
/// that agreement is enforced by the test suite.
pub fn epr_channel_nla(chi: f64, t: f64, v_e: f64, g: f64) -> Result<TwoModeStandardForm> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "gain {g} is not a positive finite number"
        )));
    }
    let (v_a, v_b) = epr_channel_variances(chi, t, v_e)?;
    let g2 = g * g;
    let n = v_b + 1.0 - g2 * (v_b - 1.0);
    if n <= 0.0 {
        return Err(NlaError::NonConvergent { denominator: n });
    }
    let va_out = (v_a * (v_b + 1.0) - t * (v_a * v_a - 1.0)
        + g2 * (t * (v_a * v_a - 1.0) - v_a * (v_b - 1.0)))
        / n;
    let vb_out = (v_b + 1.0 + g2 * (v_b - 1.0)) / n;
    let c_out = 2.0 * g * (t * (v_a * v_a - 1.0)).sqrt() / n;
    Ok(TwoModeStandardForm::new(va_out, vb_out, c_out))
}

/// Pointwise Wigner-space multiplier of the amplifier operator:
/// exp(((g - 1)/(g + 1)) (x^2 + p^2)). Radially increasing and unbounded
/// for g > 1, radially decreasing for g < 1, identically 1 at g = 1. This
/// is the heuristic phase-space picture only; convergence statements come
/// from the covariance-matrix map, not from this kernel.
pub fn wigner_kernel(g: f64, x: f64, p: f64) -> f64 {
    assert!(g > 0.0, "wigner_kernel requires g > 0");
    (((g - 1.0) / (g + 1.0)) * (x * x + p * p)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    #[test]
    fn unit_gain_is_identity() {
        let s = GaussianState::epr(0.4)
            .unwrap()
            .with_mean(&[0.1, 0.2, 0.3, 0.4])
            .unwrap();
        let r = nla_transform(&s, &GainProfile::uniform(2, 1.0).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        assert_eq!(r.state, s);
    }

    #[test]
    fn vacuum_is_a_fixed_point() {
        for g in [0.5, 1.5, 3.0, 10.0] {
            let r = nla_transform(
                &GaussianState::vacuum(1),
                &GainProfile::uniform(1, g).unwrap(),
                1e-9,
            )
            .unwrap();
            assert!(r.converged, "g = {g}");
            assert!((r.state.cov() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        }
    }

    #[test]
    fn coherent_amplifies_linearly() {
        let s = GaussianState::coherent(1.0, 1.0);
        let r = nla_transform(&s, &GainProfile::uniform(1, 2.0).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.state.cov() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert_abs_diff_eq!(r.state.mean()[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.state.mean()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn thermal_closed_form_values() {
        // V = 1.5, g = 2: d scales by 8, variance becomes 9
        let s = GaussianState::thermal(1.5)
            .unwrap()
            .with_mean(&[1.0, 1.0])
            .unwrap();
        let r = nla_transform(&s, &GainProfile::uniform(1, 2.0).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.state.mean()[0], 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.state.mean()[1], 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.state.cov()[(0, 0)], 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.state.cov()[(1, 1)], 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.state.cov()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_bound_values() {
        assert_abs_diff_eq!(max_gain_single_mode(1.5), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(max_gain(1.5), 5.0f64.sqrt(), epsilon = 1e-12);
        assert!(max_gain_single_mode(1.0).is_infinite());
        assert!(max_gain_single_mode(0.5).is_infinite());
        // EPR per-mode variance: bound equals 1/chi
        let chi = 0.4;
        let v = (1.0 + chi * chi) / (1.0 - chi * chi);
        assert_abs_diff_eq!(max_gain(v), 1.0 / chi, epsilon = 1e-12);
    }

    #[test]
    fn thermal_boundary_bracketing() {
        // V = 1.5: boundary at g^2 = 5
        let s = GaussianState::thermal(1.5).unwrap();
        let below =
            nla_transform(&s, &GainProfile::uniform(1, 4.99f64.sqrt()).unwrap(), 1e-9).unwrap();
        assert!(below.converged);
        assert!(below.min_denominator_eig > 0.0);
        let above =
            nla_transform(&s, &GainProfile::uniform(1, 5.01f64.sqrt()).unwrap(), 1e-9).unwrap();
        assert!(!above.converged);
        assert!(above.min_denominator_eig < 0.0);
    }

    #[test]
    fn deamplification_always_converges() {
        let s = GaussianState::thermal(8.0).unwrap();
        let r = nla_transform(&s, &GainProfile::uniform(1, 0.3).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        assert!(r.state.cov()[(0, 0)] < 8.0);
    }

    #[test]
    fn log_and_linear_forms_agree() {
        let s = GaussianState::epr(0.5)
            .unwrap()
            .with_mean(&[0.7, -0.3, 0.2, 1.1])
            .unwrap();
        for g in [0.6, 1.3, 1.8] {
            let gains = GainProfile::single(2, 1, g).unwrap();
            let log_route = nla_transform(&s, &gains, 1e-9).unwrap();
            let lin_route = nla_transform_linear_form(&s, &gains).unwrap();
            assert!(
                (log_route.state.cov() - lin_route.cov()).amax() < 1e-10,
                "g = {g}"
            );
            assert!((log_route.state.mean() - lin_route.mean()).amax() < 1e-10);
        }
    }

    #[test]
    fn epr_channel_closed_form_matches_pipeline() {
        use crate::state::{gaussian_channel, ChannelSpec};
        let (chi, t, v_e, g) = (0.4, 0.8, 1.1, 1.5);
        let sf = epr_channel_nla(chi, t, v_e, g).unwrap();

        let s = GaussianState::epr(chi).unwrap();
        let spec = ChannelSpec::from_ve(t, v_e).unwrap();
        let after_channel = gaussian_channel(&s, 1, &spec).unwrap();
        let r =
            nla_transform(&after_channel, &GainProfile::single(2, 1, g).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.state.cov() - sf.to_cov()).amax() < 1e-12);
        // frozen entries
        assert_abs_diff_eq!(sf.va, 1.9499626587005234, epsilon = 1e-12);
        assert_abs_diff_eq!(sf.vb, 1.9168035847647507, epsilon = 1e-12);
        assert_abs_diff_eq!(sf.c, 1.6031555327855112, epsilon = 1e-12);
    }

    #[test]
    fn epr_channel_nla_rejects_nonconvergent_gain() {
        let err = epr_channel_nla(0.4, 1.0, 1.0, 2.6).unwrap_err();
        assert!(matches!(err, NlaError::NonConvergent { .. }));
    }

    #[test]
    fn lossless_amplification_rescales_chi() {
        // EPR(0.5), g = 1.5 on mode B -> pure EPR(0.75)
        let s = GaussianState::epr(0.5).unwrap();
        let r = nla_transform(&s, &GainProfile::single(2, 1, 1.5).unwrap(), 1e-9).unwrap();
        assert!(r.converged);
        let expect = GaussianState::epr(0.75).unwrap();
        assert!((r.state.cov() - expect.cov()).amax() < 1e-10);
        assert_abs_diff_eq!(r.state.purity().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn wigner_kernel_shape() {
        assert_eq!(wigner_kernel(1.0, 3.0, -2.0), 1.0);
        assert!(wigner_kernel(2.0, 1.0, 0.0) > 1.0);
        assert!(wigner_kernel(2.0, 2.0, 0.0) > wigner_kernel(2.0, 1.0, 0.0));
        assert!(wigner_kernel(0.5, 1.0, 0.0) < 1.0);
    }

    #[test]
    fn g_cap_matrix_undefined_at_unit_gain() {
        assert!(GainProfile::uniform(2, 1.0)
            .unwrap()
            .g_cap_matrix()
            .is_err());
        let g = GainProfile::uniform(1, 3.0)
            .unwrap()
            .g_cap_matrix()
            .unwrap();
        assert_abs_diff_eq!(g[(0, 0)], 2.0, epsilon = 1e-15);
    }
}
