//! Gaussian states, constructors, the thermal-loss channel and state
//! measures: purity, partial transposition, logarithmic negativity and
//! two-mode fidelity.
//!
//! A Gaussian state is (d, Sigma): a mean vector of length 2N and a
//! symmetric 2N x 2N covariance matrix, hbar = 2 (vacuum variance 1).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::symplectic::{beamsplitter, is_physical, omega, symplectic_eigenvalues, BsConvention};
use crate::DEFAULT_TOL;

/// N-mode Gaussian state: mean vector (length 2N) and covariance matrix
/// (2N x 2N), quadrature ordering (x1, p1, ..., xN, pN).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// JSON interchange form: `{"n_modes": N, "mean": [2N], "cov": [[2N x 2N]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateJson {
    n_modes: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl From<GaussianState> for StateJson {
    fn from(s: GaussianState) -> Self {
        let n = s.n_modes();
        let cov = (0..2 * n)
            .map(|i| (0..2 * n).map(|j| s.cov[(i, j)]).collect())
            .collect();
        StateJson {
            n_modes: n,
            mean: s.mean.iter().copied().collect(),
            cov,
        }
    }
}

impl TryFrom<StateJson> for GaussianState {
    type Error = NlaError;

    fn try_from(j: StateJson) -> Result<Self> {
        let dim = 2 * j.n_modes;
        if j.mean.len() != dim {
            return Err(NlaError::DimensionMismatch {
                expected: dim,
                found: j.mean.len(),
            });
        }
        if j.cov.len() != dim || j.cov.iter().any(|row| row.len() != dim) {
            return Err(NlaError::DimensionMismatch {
                expected: dim,
                found: j.cov.iter().map(|r| r.len()).max().unwrap_or(0),
            });
        }
        let mean = DVector::from_vec(j.mean);
        let cov = DMatrix::from_fn(dim, dim, |i, k| j.cov[i][k]);
        GaussianState::from_parts(mean, cov)
    }
}

impl GaussianState {
    /// Builds a state from raw parts, validating shape and symmetry.
    /// The covariance matrix is symmetrized to absorb round-off; asymmetry
    /// beyond 1e-9 (relative) is rejected. Physicality is *not* enforced:
    /// non-physical matrices arise legitimately (partial transposition,
    /// over-gained amplifier outputs) and are diagnosed by the caller.
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(NlaError::InvalidParameter(format!(
                "mean length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(NlaError::DimensionMismatch {
                expected: dim,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-9 * scale {
            return Err(NlaError::InvalidParameter(
                "covariance matrix is not symmetric".into(),
            ));
        }
        let cov = 0.5 * (&cov + cov.transpose());
        Ok(GaussianState { mean, cov })
    }

    /// Internal constructor for outputs already known to be well-formed
    /// (symmetrized covariance, matching dimensions).
    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        GaussianState::from_parts(mean, cov).expect("internally constructed state is well-formed")
    }

    /// N-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Self {
        GaussianState {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode coherent state: identity covariance, mean (dx, dp).
    pub fn coherent(dx: f64, dp: f64) -> Self {
        GaussianState {
            mean: DVector::from_vec(vec![dx, dp]),
            cov: DMatrix::identity(2, 2),
        }
    }

    /// Single-mode thermal state: Sigma = V I, zero mean. Requires V >= 1.
    pub fn thermal(v: f64) -> Result<Self> {
        if v < 1.0 {
            return Err(NlaError::InvalidParameter(format!(
                "thermal variance {v} < 1"
            )));
        }
        Ok(GaussianState {
            mean: DVector::zeros(2),
            cov: DMatrix::identity(2, 2) * v,
        })
    }

    /// Single-mode x-squeezed state: Sigma = diag(1/V, V), zero mean.
    /// Requires V >= 1 (V is the anti-squeezed p variance).
    pub fn squeezed(v: f64) -> Result<Self> {
        if v < 1.0 {
            return Err(NlaError::InvalidParameter(format!(
                "squeezed variance {v} < 1"
            )));
        }
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / v, v]));
        Ok(GaussianState {
            mean: DVector::zeros(2),
            cov,
        })
    }

    /// Two-mode squeezed vacuum (EPR state) with parameter chi in [0, 1):
    /// per-mode variance V = (1 + chi^2)/(1 - chi^2), correlation block
    /// +c sigma_z with c = 2 chi / (1 - chi^2) = sqrt(V^2 - 1).
    ///
    /// The +c sign matches the Fock expansion sqrt(1 - chi^2) sum chi^n |n,n>
    /// for chi > 0; the opposite sign is the same state up to a local
    /// (x, p) -> (-x, -p) on one mode.
    pub fn epr(chi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&chi) {
            return Err(NlaError::InvalidParameter(format!(
                "EPR parameter {chi} outside [0, 1)"
            )));
        }
        let v = (1.0 + chi * chi) / (1.0 - chi * chi);
        Self::epr_from_variance(v)
    }

    /// EPR state parameterized by its per-mode variance V >= 1
    /// (chi = sqrt((V-1)/(V+1))).
    pub fn epr_from_variance(v: f64) -> Result<Self> {
        if v < 1.0 {
            return Err(NlaError::InvalidParameter(format!("EPR variance {v} < 1")));
        }
        let c = (v * v - 1.0).sqrt();
        let mut cov = DMatrix::identity(4, 4) * v;
        cov[(0, 2)] = c;
        cov[(2, 0)] = c;
        cov[(1, 3)] = -c;
        cov[(3, 1)] = -c;
        Ok(GaussianState {
            mean: DVector::zeros(4),
            cov,
        })
    }

    /// Replaces the mean vector (length must be 2 n_modes).
    pub fn with_mean(mut self, mean: &[f64]) -> Result<Self> {
        if mean.len() != self.mean.len() {
            return Err(NlaError::DimensionMismatch {
                expected: self.mean.len(),
                found: mean.len(),
            });
        }
        self.mean = DVector::from_column_slice(mean);
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Tensor product: `self` modes first, then `other` modes.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (da, db) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Gaussian partial trace: keeps the listed modes (in the listed order),
    /// discarding the rest.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        let n = self.n_modes();
        if modes.is_empty() {
            return Err(NlaError::InvalidParameter("no modes kept".into()));
        }
        let mut seen = vec![false; n];
        for &m in modes {
            if m >= n {
                return Err(NlaError::DimensionMismatch {
                    expected: n,
                    found: m + 1,
                });
            }
            if seen[m] {
                return Err(NlaError::InvalidParameter(format!("mode {m} listed twice")));
            }
            seen[m] = true;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_fn(idx.len(), |i, _| self.mean[idx[i]]);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(GaussianState { mean, cov })
    }

    /// Applies a symplectic (or any linear phase-space) transform:
    /// Sigma -> S Sigma S^T (symmetrized), d -> S d.
    pub fn apply_symplectic(&self, s: &DMatrix<f64>) -> Result<GaussianState> {
        let dim = self.mean.len();
        if s.nrows() != dim || s.ncols() != dim {
            return Err(NlaError::DimensionMismatch {
                expected: dim,
                found: s.nrows().max(s.ncols()),
            });
        }
        let cov = s * &self.cov * s.transpose();
        Ok(GaussianState {
            mean: s * &self.mean,
            cov: 0.5 * (&cov + cov.transpose()),
        })
    }

    /// Purity 1/sqrt(det Sigma). Errors when det Sigma < 1 beyond tolerance,
    /// which signals a non-physical input.
    pub fn purity(&self) -> Result<f64> {
        let det = self.cov.determinant();
        if det < 1.0 - 1e-9 {
            let (_, lambda_min) = is_physical(&self.cov, DEFAULT_TOL);
            return Err(NlaError::NonPhysical { lambda_min });
        }
        Ok(1.0 / det.sqrt().max(1.0))
    }
}

/// Partial transpose of a covariance matrix: sign-flips the p rows and
/// columns of the listed modes. Involutive; the result is generally not a
/// physical covariance matrix (that failure certifies entanglement).
pub fn partial_transpose(cov: &DMatrix<f64>, modes: &[usize]) -> Result<DMatrix<f64>> {
    let dim = cov.nrows();
    if cov.ncols() != dim || !dim.is_multiple_of(2) {
        return Err(NlaError::DimensionMismatch {
            expected: dim,
            found: cov.ncols(),
        });
    }
    let n = dim / 2;
    let mut sign = vec![1.0; dim];
    for &m in modes {
        if m >= n {
            return Err(NlaError::DimensionMismatch {
                expected: n,
                found: m + 1,
            });
        }
        sign[2 * m + 1] = -1.0;
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        sign[i] * sign[j] * cov[(i, j)]
    }))
}

/// Two-mode covariance matrix in standard form: diagonal blocks va I and
/// vb I, correlation block c sigma_z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeStandardForm {
    pub va: f64,
    pub vb: f64,
    pub c: f64,
}

impl TwoModeStandardForm {
    pub fn new(va: f64, vb: f64, c: f64) -> Self {
        TwoModeStandardForm { va, vb, c }
    }

    /// The full 4 x 4 covariance matrix.
    pub fn to_cov(self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = self.va;
        m[(1, 1)] = self.va;
        m[(2, 2)] = self.vb;
        m[(3, 3)] = self.vb;
        m[(0, 2)] = self.c;
        m[(2, 0)] = self.c;
        m[(1, 3)] = -self.c;
        m[(3, 1)] = -self.c;
        m
    }

    /// The zero-mean Gaussian state with this covariance matrix.
    pub fn to_state(self) -> GaussianState {
        GaussianState {
            mean: DVector::zeros(4),
            cov: self.to_cov(),
        }
    }

    /// Validates that a 4 x 4 covariance matrix is in standard form
    /// (within `tol`, relative) and extracts the entries.
    pub fn from_cov(cov: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if cov.nrows() != 4 || cov.ncols() != 4 {
            return Err(NlaError::DimensionMismatch {
                expected: 4,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        let scale = cov.amax().max(1.0);
        let sf = TwoModeStandardForm {
            va: 0.5 * (cov[(0, 0)] + cov[(1, 1)]),
            vb: 0.5 * (cov[(2, 2)] + cov[(3, 3)]),
            c: 0.25 * (cov[(0, 2)] + cov[(2, 0)] - cov[(1, 3)] - cov[(3, 1)]),
        };
        let resid = (cov - sf.to_cov()).amax();
        if resid > tol * scale {
            return Err(NlaError::NotStandardForm(format!(
                "residual {resid:.3e} exceeds {:.3e}",
                tol * scale
            )));
        }
        Ok(sf)
    }

    /// Symplectic eigenvalues (lambda_minus, lambda_plus) of the partially
    /// transposed state: lambda_pm = sqrt((Delta pm sqrt(Delta^2 - 4 det)) / 2)
    /// with Delta = va^2 + vb^2 + 2 c^2 and det = (va vb - c^2)^2.
    ///
    /// The radicand Delta^2 - 4 det equals (va^2 - vb^2)^2 + 4 c^2 (va + vb)^2
    /// and is clamped at zero against round-off.
    pub fn pt_eigs(&self) -> (f64, f64) {
        let (a, b, c) = (self.va, self.vb, self.c);
        let delta = a * a + b * b + 2.0 * c * c;
        let det = (a * b - c * c).powi(2);
        let rad = (delta * delta - 4.0 * det).max(0.0).sqrt();
        let lm = (0.5 * (delta - rad)).max(0.0).sqrt();
        let lp = (0.5 * (delta + rad)).sqrt();
        (lm, lp)
    }

    /// Logarithmic negativity max(0, -ln lambda_minus_pt), natural log.
    /// Errors when the (un-transposed) state is itself non-physical.
    pub fn log_negativity(&self) -> Result<f64> {
        let (ok, lambda_min) = is_physical(&self.to_cov(), DEFAULT_TOL);
        if !ok {
            return Err(NlaError::NonPhysical { lambda_min });
        }
        let (lm, _) = self.pt_eigs();
        Ok((-lm.ln()).max(0.0))
    }
}

/// Logarithmic negativity of an arbitrary two-mode covariance matrix via
/// partial transposition of mode B and a full symplectic eigensolve.
pub fn log_negativity_cov(cov: &DMatrix<f64>) -> Result<f64> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(NlaError::DimensionMismatch {
            expected: 4,
            found: cov.nrows().max(cov.ncols()),
        });
    }
    let (ok, lambda_min) = is_physical(cov, DEFAULT_TOL);
    if !ok {
        return Err(NlaError::NonPhysical { lambda_min });
    }
    let pt = partial_transpose(cov, &[1])?;
    let eigs = symplectic_eigenvalues(&pt)?;
    let lm = eigs[0];
    Ok((-lm.ln()).max(0.0))
}

/// Fidelity between two zero-mean two-mode Gaussian states in standard
/// form: F = 1 / (sqrt(Gamma) + sqrt(Lambda) - sqrt((sqrt(Gamma) +
/// sqrt(Lambda))^2 - Theta)), hbar = 2 normalization.
///
/// The inner radicand vanishes identically for pure state pairs and can
/// land slightly negative in floating point; it is clamped at zero. A
/// radicand negative beyond round-off scale signals an invalid input pair.
pub fn fidelity_two_mode(s1: &TwoModeStandardForm, s2: &TwoModeStandardForm) -> Result<f64> {
    for s in [s1, s2] {
        let (ok, lambda_min) = is_physical(&s.to_cov(), DEFAULT_TOL);
        if !ok {
            return Err(NlaError::NonPhysical { lambda_min });
        }
    }
    let (va, vb, c) = (s1.va, s1.vb, s1.c);
    let (wa, wb, d) = (s2.va, s2.vb, s2.c);

    let gamma_bracket = 1.0 - 2.0 * c * d
        + va * (-vb * d * d + wa)
        + vb * (1.0 + va * wa) * wb
        + c * c * (d * d - wa * wb);
    let gamma = gamma_bracket * gamma_bracket / 16.0;

    let lam1 = c.powi(4) + c * c * (2.0 - 2.0 * va * vb) + (va * va - 1.0) * (vb * vb - 1.0);
    let lam2 = d.powi(4) + d * d * (2.0 - 2.0 * wa * wb) + (wa * wa - 1.0) * (wb * wb - 1.0);
    let lambda = lam1 * lam2 / 16.0;

    let theta_bracket = (c + d).powi(2) - (va + wa) * (vb + wb);
    let theta = theta_bracket * theta_bracket / 16.0;

    finish_fidelity(gamma, lambda, theta)
}

/// Fidelity between two zero-mean two-mode Gaussian states with arbitrary
/// 4 x 4 covariance matrices, via the determinant invariants:
/// Gamma = det(Omega S1 Omega S2 - I)/16, Lambda = det(S1 + i Omega)
/// det(S2 + i Omega)/16, Theta = det(S1 + S2)/16. Algebraically identical
/// to [`fidelity_two_mode`] on standard-form inputs; kept as an independent
/// evaluation route.
pub fn fidelity_two_mode_cov(c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> Result<f64> {
    for c in [c1, c2] {
        if c.nrows() != 4 || c.ncols() != 4 {
            return Err(NlaError::DimensionMismatch {
                expected: 4,
                found: c.nrows().max(c.ncols()),
            });
        }
        let (ok, lambda_min) = is_physical(c, DEFAULT_TOL);
        if !ok {
            return Err(NlaError::NonPhysical { lambda_min });
        }
    }
    let om = omega(2);
    let gamma = (&om * c1 * &om * c2 - DMatrix::<f64>::identity(4, 4)).determinant() / 16.0;

    let det_plus_iomega = |c: &DMatrix<f64>| -> f64 {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            num_complex::Complex64::new(c[(i, j)], om[(i, j)])
        });
        // det(Sigma + i Omega) is real for symmetric Sigma
        m.determinant().re
    };
    let lambda = det_plus_iomega(c1) * det_plus_iomega(c2) / 16.0;
    let theta = (c1 + c2).determinant() / 16.0;

    finish_fidelity(gamma, lambda, theta)
}

fn finish_fidelity(gamma: f64, lambda: f64, theta: f64) -> Result<f64> {
    // Gamma >= 0 and Lambda >= 0 for physical inputs, but Lambda is a
    // product of (nu^2 - 1) factors that rounds below zero on near-pure
    // states; clamp round-off-scale negatives, reject anything larger.
    let scale = theta.abs().max(gamma.abs()).max(1.0);
    let clamp = |v: f64| {
        if v < 0.0 && v > -1e-10 * scale {
            0.0
        } else {
            v
        }
    };
    let (gamma, lambda) = (clamp(gamma), clamp(lambda));
    if gamma < 0.0 || lambda < 0.0 {
        return Err(NlaError::SolverFailure(format!(
            "negative fidelity invariant: Gamma = {gamma:.3e}, Lambda = {lambda:.3e}"
        )));
    }
    let s = gamma.sqrt() + lambda.sqrt();
    let rad = s * s - theta;
    // identically zero for pure pairs; tolerate round-off scale only
    if rad < -1e-8 * s * s.max(1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "fidelity radicand {rad:.3e} negative beyond tolerance"
        )));
    }
    let denom = s - rad.max(0.0).sqrt();
    if denom <= 0.0 {
        return Err(NlaError::SolverFailure(format!(
            "fidelity denominator {denom:.3e} not positive"
        )));
    }
    Ok((1.0 / denom).min(1.0))
}

/// Thermal-loss channel on one mode, parameterized by transmission T and
/// environment variance V_E, or equivalently excess noise xi with
/// V_E = (1 - T + T xi)/(1 - T). Both parameterizations are stored;
/// consistency is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    t: f64,
    v_e: f64,
    xi: f64,
}

impl ChannelSpec {
    /// Channel from (T, V_E). T = 1 is the identity channel (V_E is then
    /// inert and the stored excess noise is 0).
    pub fn from_ve(t: f64, v_e: f64) -> Result<Self> {
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
        let xi = if t < 1.0 { ve_to_xi(t, v_e)? } else { 0.0 };
        Ok(ChannelSpec { t, v_e, xi })
    }

    /// Channel from (T, xi). T = 1 requires xi = 0.
    pub fn from_xi(t: f64, xi: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(NlaError::InvalidParameter(format!(
                "transmission {t} outside (0, 1]"
            )));
        }
        if xi < 0.0 {
            return Err(NlaError::InvalidParameter(format!("excess noise {xi} < 0")));
        }
        if t == 1.0 {
            if xi != 0.0 {
                return Err(NlaError::InvalidParameter(
                    "T = 1 channel requires xi = 0".into(),
                ));
            }
            return Ok(ChannelSpec { t, v_e: 1.0, xi });
        }
        Ok(ChannelSpec {
            t,
            v_e: xi_to_ve(t, xi)?,
            xi,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn v_e(&self) -> f64 {
        self.v_e
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn is_identity(&self) -> bool {
        self.t == 1.0
    }

    /// Variance of a mode of input variance `v_in` after the channel.
    pub fn output_variance(&self, v_in: f64) -> f64 {
        self.t * v_in + (1.0 - self.t) * self.v_e
    }
}

/// Environment variance from excess noise: V_E = (1 - T + T xi)/(1 - T).
/// At T = 1 only xi = 0 is meaningful (identity channel, V_E = 1).
pub fn xi_to_ve(t: f64, xi: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} outside (0, 1]"
        )));
    }
    if t == 1.0 {
        if xi != 0.0 {
            return Err(NlaError::InvalidParameter(
                "T = 1 channel requires xi = 0".into(),
            ));
        }
        return Ok(1.0);
    }
    Ok((1.0 - t + t * xi) / (1.0 - t))
}

/// Excess noise from environment variance: xi = (1 - T)(V_E - 1)/T.
pub fn ve_to_xi(t: f64, v_e: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} outside (0, 1]"
        )));
    }
    Ok((1.0 - t) * (v_e - 1.0) / t)
}

/// Thermal-loss channel on `mode` (closed form): the mode's diagonal block
/// becomes T Sigma_mm + (1 - T) V_E I, its cross blocks scale by sqrt(T),
/// and its mean scales by sqrt(T). Equivalent to mixing with a thermal
/// ancilla of variance V_E on a beamsplitter of transmission T and
/// discarding the ancilla.
pub fn gaussian_channel(
    state: &GaussianState,
    mode: usize,
    spec: &ChannelSpec,
) -> Result<GaussianState> {
    let n = state.n_modes();
    if mode >= n {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: mode + 1,
        });
    }
    if spec.is_identity() {
        return Ok(state.clone());
    }
    let (t, v_e) = (spec.t(), spec.v_e());
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
        // diagonal block picked up sqrt(T) twice above: T Sigma_mm; add noise
        cov[(r, r)] += (1.0 - t) * v_e;
    }
    GaussianState::from_parts(mean, cov)
}

/// Thermal-loss channel via its dilation: append a thermal ancilla, apply a
/// beamsplitter (MinusLower convention, ancilla reflected), discard the
/// ancilla. Exists as an independent route for cross-checking
/// [`gaussian_channel`].
pub fn gaussian_channel_dilation(
    state: &GaussianState,
    mode: usize,
    spec: &ChannelSpec,
) -> Result<GaussianState> {
    let n = state.n_modes();
    if mode >= n {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: mode + 1,
        });
    }
    if spec.is_identity() {
        return Ok(state.clone());
    }
    let joint = state.tensor(&GaussianState::thermal(spec.v_e())?);
    let bs = beamsplitter(n + 1, mode, n, spec.t(), BsConvention::MinusLower)?;
    let keep: Vec<usize> = (0..n).collect();
    joint.apply_symplectic(&bs)?.reduced(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thermal_one_is_vacuum() {
        let s = GaussianState::thermal(1.0).unwrap();
        assert_eq!(s, GaussianState::vacuum(1));
    }

    #[test]
    fn squeezed_covariance_entries() {
        let s = GaussianState::squeezed(1.5).unwrap();
        assert_abs_diff_eq!(s.cov()[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.cov()[(1, 1)], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn thermal_purity() {
        let s = GaussianState::thermal(1.5).unwrap();
        assert_abs_diff_eq!(s.purity().unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn purity_rejects_subvacuum() {
        let bad =
            GaussianState::from_parts(DVector::zeros(2), DMatrix::identity(2, 2) * 0.5).unwrap();
        assert!(matches!(bad.purity(), Err(NlaError::NonPhysical { .. })));
    }

    #[test]
    fn epr_zero_is_two_mode_vacuum() {
        let s = GaussianState::epr(0.0).unwrap();
        assert_eq!(s, GaussianState::vacuum(2));
    }

    #[test]
    fn epr_entries_and_purity() {
        let s = GaussianState::epr(0.4).unwrap();
        let v = (1.0 + 0.16) / (1.0 - 0.16);
        assert_abs_diff_eq!(s.cov()[(0, 0)], v, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.380952380952381, epsilon = 1e-12);
        let c = 2.0 * 0.4 / (1.0 - 0.16);
        assert_abs_diff_eq!(s.cov()[(0, 2)], c, epsilon = 1e-12);
        assert_abs_diff_eq!(s.cov()[(1, 3)], -c, epsilon = 1e-12);
        // pure state: det Sigma = 1
        assert_abs_diff_eq!(s.cov().determinant(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s.purity().unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn epr_rejects_chi_at_one() {
        assert!(GaussianState::epr(1.0).is_err());
        assert!(GaussianState::epr(-0.1).is_err());
    }

    #[test]
    fn vacuum_through_beamsplitter_is_vacuum() {
        let s = GaussianState::vacuum(2);
        let bs = beamsplitter(2, 0, 1, 0.3, BsConvention::MinusLower).unwrap();
        let out = s.apply_symplectic(&bs).unwrap();
        assert!((out.cov() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
        assert!(out.mean().amax() < 1e-15);
    }

    #[test]
    fn partial_transpose_is_involutive() {
        let s = GaussianState::epr(0.4).unwrap();
        let pt = partial_transpose(s.cov(), &[1]).unwrap();
        let back = partial_transpose(&pt, &[1]).unwrap();
        assert!((s.cov() - back).amax() < 1e-15);
    }

    #[test]
    fn pt_of_epr_is_nonphysical_with_known_eigenvalue() {
        let s = GaussianState::epr(0.4).unwrap();
        let pt = partial_transpose(s.cov(), &[1]).unwrap();
        let (ok, lm) = is_physical(&pt, 1e-9);
        assert!(!ok);
        // (1 - chi)/(1 + chi) = 3/7
        assert_abs_diff_eq!(lm, 3.0 / 7.0, epsilon = 1e-10);
    }

    #[test]
    fn pt_closed_form_matches_eigensolve() {
        let sf =
            TwoModeStandardForm::from_cov(GaussianState::epr(0.4).unwrap().cov(), 1e-12).unwrap();
        let (lm, lp) = sf.pt_eigs();
        assert_abs_diff_eq!(lm, 3.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lm * lp, 1.0, epsilon = 1e-12);
        let pt = partial_transpose(&sf.to_cov(), &[1]).unwrap();
        let eigs = symplectic_eigenvalues(&pt).unwrap();
        assert_abs_diff_eq!(eigs[0], lm, epsilon = 1e-10);
        assert_abs_diff_eq!(eigs[1], lp, epsilon = 1e-10);
    }

    #[test]
    fn log_negativity_values() {
        let sf =
            TwoModeStandardForm::from_cov(GaussianState::epr(0.4).unwrap().cov(), 1e-12).unwrap();
        assert_abs_diff_eq!(
            sf.log_negativity().unwrap(),
            (7.0f64 / 3.0).ln(),
            epsilon = 1e-12
        );
        // product state is separable
        let prod = TwoModeStandardForm::new(1.5, 2.0, 0.0);
        assert_eq!(prod.log_negativity().unwrap(), 0.0);
    }

    #[test]
    fn standard_form_validator_rejects_off_form() {
        let mut cov = GaussianState::epr(0.4).unwrap().cov().clone();
        cov[(0, 1)] = 0.05;
        cov[(1, 0)] = 0.05;
        assert!(TwoModeStandardForm::from_cov(&cov, 1e-9).is_err());
    }

    #[test]
    fn channel_spec_conversions() {
        assert_abs_diff_eq!(xi_to_ve(0.5, 0.1).unwrap(), 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(ve_to_xi(0.5, 1.1).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(xi_to_ve(0.3, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        // round trip
        for (t, xi) in [(0.2, 0.05), (0.7, 1.3), (0.95, 0.4)] {
            let ve = xi_to_ve(t, xi).unwrap();
            assert_abs_diff_eq!(ve_to_xi(t, ve).unwrap(), xi, epsilon = 1e-14);
        }
        assert!(xi_to_ve(1.0, 0.1).is_err());
        assert_abs_diff_eq!(xi_to_ve(1.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn channel_closed_form_entries() {
        // EPR(0.4) mode B through T = 0.5, V_E = 1.1
        let s = GaussianState::epr(0.4).unwrap();
        let spec = ChannelSpec::from_ve(0.5, 1.1).unwrap();
        let out = gaussian_channel(&s, 1, &spec).unwrap();
        let va = 1.380952380952381;
        assert_abs_diff_eq!(out.cov()[(0, 0)], va, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cov()[(2, 2)], 0.5 * va + 0.5 * 1.1, epsilon = 1e-12);
        let c = 2.0 * 0.4 / (1.0 - 0.16);
        assert_abs_diff_eq!(out.cov()[(0, 2)], 0.5f64.sqrt() * c, epsilon = 1e-12);
    }

    #[test]
    fn channel_identity_at_full_transmission() {
        let s = GaussianState::epr(0.3).unwrap();
        let spec = ChannelSpec::from_ve(1.0, 1.5).unwrap();
        let out = gaussian_channel(&s, 1, &spec).unwrap();
        assert_eq!(&out, &s);
    }

    #[test]
    fn channel_matches_dilation() {
        let s = GaussianState::epr(0.4)
            .unwrap()
            .with_mean(&[0.3, -0.2, 1.0, 0.5])
            .unwrap();
        let spec = ChannelSpec::from_ve(0.7, 1.25).unwrap();
        let a = gaussian_channel(&s, 1, &spec).unwrap();
        let b = gaussian_channel_dilation(&s, 1, &spec).unwrap();
        assert!((a.cov() - b.cov()).amax() < 1e-12);
        assert!((a.mean() - b.mean()).amax() < 1e-12);
    }

    #[test]
    fn fidelity_identical_states_is_one() {
        let sf = TwoModeStandardForm::new(1.9, 1.4, 0.8);
        assert_abs_diff_eq!(fidelity_two_mode(&sf, &sf).unwrap(), 1.0, epsilon = 1e-9);
        let epr =
            TwoModeStandardForm::from_cov(GaussianState::epr(0.2).unwrap().cov(), 1e-12).unwrap();
        assert_abs_diff_eq!(fidelity_two_mode(&epr, &epr).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_pure_epr_overlap_law() {
        // |<EPR(a)|EPR(b)>|^2 = (1 - a^2)(1 - b^2)/(1 - a b)^2
        let (a, b) = (0.3, 0.5);
        let s1 =
            TwoModeStandardForm::from_cov(GaussianState::epr(a).unwrap().cov(), 1e-12).unwrap();
        let s2 =
            TwoModeStandardForm::from_cov(GaussianState::epr(b).unwrap().cov(), 1e-12).unwrap();
        let expect = (1.0 - a * a) * (1.0 - b * b) / (1.0 - a * b).powi(2);
        // exactly 273/289
        assert_abs_diff_eq!(expect, 0.944636678200692, epsilon = 1e-12);
        let f = fidelity_two_mode(&s1, &s2).unwrap();
        assert_abs_diff_eq!(f, expect, epsilon = 1e-7);
        // symmetric under swap; for pure pairs the clamped inner radicand
        // sits at the rounding floor and its square root limits agreement
        // to ~1e-8, same as the closed-form comparison above
        let g = fidelity_two_mode(&s2, &s1).unwrap();
        assert_abs_diff_eq!(f, g, epsilon = 1e-7);
    }

    #[test]
    fn fidelity_routes_agree() {
        let s1 =
            TwoModeStandardForm::new(1.9499626587005234, 1.9168035847647507, 1.6031555327855112);
        let s2 =
            TwoModeStandardForm::new(1.2478107977659796, 1.2995242363648898, 0.5850707697882209);
        let f1 = fidelity_two_mode(&s1, &s2).unwrap();
        let f2 = fidelity_two_mode_cov(&s1.to_cov(), &s2.to_cov()).unwrap();
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-10);
        // frozen value from an independent truncated-Fock density-matrix overlap
        assert_abs_diff_eq!(f1, 0.8719844083639817, epsilon = 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let s = GaussianState::epr(0.4)
            .unwrap()
            .with_mean(&[1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"n_modes\":2"));
        let back: GaussianState = serde_json::from_str(&text).unwrap();
        assert!((s.cov() - back.cov()).amax() < 1e-15);
        assert!((s.mean() - back.mean()).amax() < 1e-15);
    }

    #[test]
    fn json_rejects_mismatched_dims() {
        let text = r#"{"n_modes": 2, "mean": [0, 0], "cov": [[1]]}"#;
        assert!(serde_json::from_str::<GaussianState>(text).is_err());
    }

    #[test]
    fn reduced_keeps_selected_modes() {
        let s = GaussianState::epr(0.4).unwrap();
        let a = s.reduced(&[0]).unwrap();
        assert_eq!(a.n_modes(), 1);
        let v = (1.0 + 0.16) / (1.0 - 0.16);
        assert_abs_diff_eq!(a.cov()[(0, 0)], v, epsilon = 1e-12);
        // reduction of a pure EPR arm is a thermal state
        assert_abs_diff_eq!(a.cov()[(0, 1)], 0.0, epsilon = 1e-15);
    }
}
