//! Symplectic-form foundations: the form itself, beamsplitter and squeezer
//! symplectics, Williamson spectra, and covariance-matrix physicality tests.
//!
//! Quadrature ordering is r = (x1, p1, ..., xN, pN); the symplectic form is
//! the direct sum of N copies of [[0, 1], [-1, 0]]. A covariance matrix is
//! physical iff it is positive definite and its smallest symplectic
//! eigenvalue is >= 1 (hbar = 2 units).

use nalgebra::DMatrix;

use crate::error::{NlaError, Result};

/// Sign convention for the two-mode beamsplitter rotation.
///
/// Both choices are valid symplectics; they differ by which output port
/// carries the reflected-beam minus sign. Mixing conventions inside one
/// pipeline changes cross-correlation signs, so the choice is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConvention {
    /// i' = sqrt(T) i + sqrt(1-T) j,  j' = -sqrt(1-T) i + sqrt(T) j.
    MinusLower,
    /// i' = sqrt(T) i - sqrt(1-T) j,  j' = +sqrt(1-T) i + sqrt(T) j.
    MinusUpper,
}

/// The 2N x 2N symplectic form: block diagonal with N copies of [[0,1],[-1,0]].
///
/// # Panics
/// Panics if `n_modes == 0`.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    assert!(n_modes >= 1, "omega requires at least one mode");
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// Beamsplitter symplectic of transmission `t` on modes `(i, j)` of an
/// `n_modes`-mode system; identity on all other modes.
pub fn beamsplitter(
    n_modes: usize,
    mode_i: usize,
    mode_j: usize,
    t: f64,
    convention: BsConvention,
) -> Result<DMatrix<f64>> {
    if mode_i >= n_modes || mode_j >= n_modes {
        return Err(NlaError::DimensionMismatch {
            expected: n_modes,
            found: mode_i.max(mode_j) + 1,
        });
    }
    if mode_i == mode_j {
        return Err(NlaError::InvalidParameter(
            "beamsplitter modes must differ".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(NlaError::InvalidParameter(format!(
            "beamsplitter transmission {t} outside [0, 1]"
        )));
    }
    let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
    let (su, sl) = match convention {
        BsConvention::MinusLower => (s, -s),
        BsConvention::MinusUpper => (-s, s),
    };
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * mode_i + q, 2 * mode_j + q);
        m[(a, a)] = c;
        m[(a, b)] = su;
        m[(b, a)] = sl;
        m[(b, b)] = c;
    }
    Ok(m)
}

/// Single-mode squeezer symplectic diag(e^-r, e^r) on `mode`, identity elsewhere.
///
/// Applied to vacuum it gives the x-squeezed state diag(e^-2r, e^2r).
pub fn squeezer(n_modes: usize, mode: usize, r: f64) -> Result<DMatrix<f64>> {
    if mode >= n_modes {
        return Err(NlaError::DimensionMismatch {
            expected: n_modes,
            found: mode + 1,
        });
    }
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * mode, 2 * mode)] = (-r).exp();
    m[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    Ok(m)
}

/// Whether `s` satisfies S Omega S^T = Omega to within `tol` (max-norm).
pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> bool {
    let n = s.nrows();
    if n != s.ncols() || !n.is_multiple_of(2) || n == 0 {
        return false;
    }
    let om = omega(n / 2);
    let resid = s * &om * s.transpose() - &om;
    resid.amax() < tol
}

/// The N symplectic eigenvalues of a symmetric 2N x 2N covariance matrix,
/// ascending: the moduli of the eigenvalues of i Omega Sigma, each counted
/// once (the spectrum of Omega Sigma is symmetric under negation, so the
/// 2N eigenvalues pair up).
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = sigma.nrows();
    if n != sigma.ncols() || !n.is_multiple_of(2) || n == 0 {
        return Err(NlaError::DimensionMismatch {
            expected: n,
            found: sigma.ncols(),
        });
    }
    let scale = sigma.amax().max(1.0);
    if (sigma - sigma.transpose()).amax() > 1e-9 * scale {
        return Err(NlaError::InvalidParameter(
            "covariance matrix is not symmetric".into(),
        ));
    }
    let m = omega(n / 2) * sigma;
    let eigs = m.complex_eigenvalues();
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.partial_cmp(b).expect("moduli are finite"));
    // eigenvalues come in +/- pairs; adjacent moduli must agree
    let pair_tol = 1e-9 * scale.max(moduli.last().copied().unwrap_or(1.0));
    let mut out = Vec::with_capacity(n / 2);
    for k in 0..n / 2 {
        let (a, b) = (moduli[2 * k], moduli[2 * k + 1]);
        if (a - b).abs() > pair_tol {
            return Err(NlaError::SolverFailure(format!(
                "symplectic spectrum failed to pair: |{a} - {b}| > {pair_tol}"
            )));
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Physicality test: positive definite with smallest symplectic eigenvalue
/// at least 1 - tol. Returns the flag together with the smallest symplectic
/// eigenvalue for diagnostics (the eigenvalue is reported even when the
/// positive-definiteness test already fails).
pub fn is_physical(sigma: &DMatrix<f64>, tol: f64) -> (bool, f64) {
    let sym = 0.5 * (sigma + sigma.transpose());
    let lambda_min = match symplectic_eigenvalues(&sym) {
        Ok(l) => l.first().copied().unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };
    let pd = nalgebra::Cholesky::new(sym).is_some();
    (pd && lambda_min >= 1.0 - tol, lambda_min)
}
