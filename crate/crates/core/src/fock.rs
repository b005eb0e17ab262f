//! Truncated Fock-space oracle.
//!
//! Everything in this module works in a photon-number basis truncated at a
//! per-mode cutoff and knows nothing about covariance matrices. It exists to
//! cross-check the Gaussian closed forms by brute force: build a state,
//! apply the amplifier weights g^n and beamsplitter unitaries directly, then
//! extract first and second quadrature moments with [`cm_from_fock`] and
//! compare. Agreement is limited by the truncation tail, so tests pick
//! cutoffs where the tail is provably below the comparison tolerance.
//!
//! Conventions match the Gaussian side: vacuum variance 1, quadratures
//! x = a + a^dag and p = i(a^dag - a), so a coherent state alpha has mean
//! (2 Re alpha, 2 Im alpha).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{NlaError, Result};
use crate::state::GaussianState;

/// Largest total Hilbert-space dimension accepted when building states.
const MAX_TOTAL_DIM: usize = 10_000_000;
/// Largest total dimension for dense mixed-state unitaries.
const MAX_MIXED_DIM: usize = 4096;

#[derive(Debug, Clone)]
enum Repr {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

/// A multimode state in the truncated photon-number basis. Mode m keeps
/// photon numbers 0..=cutoff_m (dimension cutoff_m + 1); basis indices are
/// row-major with the last mode fastest. `leaked_weight` records the
/// probability mass the constructors dropped at the cutoff; operations keep
/// it as an advisory marker of how trustworthy the truncation is.
#[derive(Debug, Clone)]
pub struct FockState {
    dims: Vec<usize>,
    repr: Repr,
    leaked_weight: f64,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * dims[m + 1];
    }
    s
}

impl FockState {
    /// Wraps an explicit amplitude vector (length = product of per-mode
    /// dimensions, each dimension = cutoff + 1). The vector is normalized.
    pub fn from_pure(dims: Vec<usize>, amplitudes: DVector<Complex64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(NlaError::InvalidParameter(
                "every mode needs dimension >= 1".into(),
            ));
        }
        if amplitudes.len() != total {
            return Err(NlaError::DimensionMismatch {
                expected: total,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(NlaError::InvalidParameter(
                "amplitude vector must be finite and nonzero".into(),
            ));
        }
        Ok(FockState {
            dims,
            repr: Repr::Pure(amplitudes / Complex64::new(norm, 0.0)),
            leaked_weight: 0.0,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    /// Probability mass dropped beyond the cutoff when the state was built.
    pub fn leaked_weight(&self) -> f64 {
        self.leaked_weight
    }

    /// Tensor product, this state's modes first. Two pure states stay pure;
    /// any mixed factor promotes the product to a density matrix, which is
    /// only accepted up to a moderate total dimension.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let total = self.total_dim() * other.total_dim();
        if total > MAX_TOTAL_DIM {
            return Err(NlaError::Overflow(format!(
                "tensor product dimension {total} exceeds {MAX_TOTAL_DIM}"
            )));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let leaked = 1.0 - (1.0 - self.leaked_weight) * (1.0 - other.leaked_weight);
        let repr = match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => {
                let mut v = DVector::zeros(total);
                for (i, ai) in a.iter().enumerate() {
                    for (j, bj) in b.iter().enumerate() {
                        v[i * b.len() + j] = ai * bj;
                    }
                }
                Repr::Pure(v)
            }
            _ => {
                if total > MAX_MIXED_DIM {
                    return Err(NlaError::Overflow(format!(
                        "mixed tensor product dimension {total} exceeds {MAX_MIXED_DIM}"
                    )));
                }
                Repr::Mixed(self.density().kronecker(&other.density()))
            }
        };
        Ok(FockState {
            dims,
            repr,
            leaked_weight: leaked,
        })
    }

    fn density(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Repr::Pure(v) => v * v.adjoint(),
            Repr::Mixed(rho) => rho.clone(),
        }
    }

    fn mode_dim_check(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(NlaError::DimensionMismatch {
                expected: self.dims.len(),
                found: mode + 1,
            });
        }
        Ok(())
    }
}

/// Applies x_m = a + a^dag (which = 0) or p_m = i(a^dag - a) (which = 1)
/// to a basis vector. Amplitude raised past the cutoff is dropped.
fn apply_quadrature(
    v: &DVector<Complex64>,
    dims: &[usize],
    str_: &[usize],
    mode: usize,
    which: usize,
) -> DVector<Complex64> {
    let s = str_[mode];
    let d = dims[mode];
    let mut out = DVector::zeros(v.len());
    for i in 0..v.len() {
        let vi = v[i];
        if vi == Complex64::ZERO {
            continue;
        }
        let n = (i / s) % d;
        if which == 0 {
            if n > 0 {
                out[i - s] += (n as f64).sqrt() * vi;
            }
            if n + 1 < d {
                out[i + s] += ((n + 1) as f64).sqrt() * vi;
            }
        } else {
            if n > 0 {
                out[i - s] -= Complex64::i() * (n as f64).sqrt() * vi;
            }
            if n + 1 < d {
                out[i + s] += Complex64::i() * ((n + 1) as f64).sqrt() * vi;
            }
        }
    }
    out
}

fn column_quadrature(
    m: &DMatrix<Complex64>,
    dims: &[usize],
    str_: &[usize],
    mode: usize,
    which: usize,
) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        let col = apply_quadrature(&m.column(c).clone_owned(), dims, str_, mode, which);
        out.set_column(c, &col);
    }
    out
}

/// Coherent state with amplitude alpha, mean quadratures (2 Re a, 2 Im a).
pub fn fock_coherent(cutoff: usize, alpha: Complex64) -> Result<FockState> {
    if cutoff == 0 {
        return Err(NlaError::InvalidParameter("cutoff must be >= 1".into()));
    }
    let dim = cutoff + 1;
    let mut v = DVector::zeros(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut captured = 0.0;
    for n in 0..dim {
        v[n] = c;
        captured += c.norm_sqr();
        c *= alpha / Complex64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    Ok(FockState {
        dims: vec![dim],
        repr: Repr::Pure(v.clone() / Complex64::new(v.norm(), 0.0)),
        leaked_weight: (1.0 - captured).max(0.0),
    })
}

/// Squeezed vacuum with x-variance 1/V and p-variance V (V >= 1):
/// amplitudes c_2n proportional to (-tanh r)^n sqrt((2n)!) / (2^n n!)
/// with r = ln(V) / 2.
pub fn fock_squeezed(cutoff: usize, v: f64) -> Result<FockState> {
    if cutoff == 0 {
        return Err(NlaError::InvalidParameter("cutoff must be >= 1".into()));
    }
    if !(v >= 1.0 && v.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "antisqueezed variance {v} must be >= 1"
        )));
    }
    let r = v.ln() / 2.0;
    let th = r.tanh();
    let dim = cutoff + 1;
    let mut amp = DVector::zeros(dim);
    let mut c = (1.0 / r.cosh()).sqrt();
    let mut captured = 0.0;
    let mut n = 0usize;
    while 2 * n < dim {
        amp[2 * n] = Complex64::new(c, 0.0);
        captured += c * c;
        c *= -th * (((2 * n + 1) * (2 * n + 2)) as f64).sqrt() / (2.0 * (n as f64 + 1.0));
        n += 1;
    }
    Ok(FockState {
        dims: vec![dim],
        repr: Repr::Pure(amp.clone() / Complex64::new(amp.norm(), 0.0)),
        leaked_weight: (1.0 - captured).max(0.0),
    })
}

/// Thermal state of variance V as a diagonal density matrix with geometric
/// weights (1 - q) q^n, q = (V - 1) / (V + 1).
pub fn fock_thermal(cutoff: usize, v: f64) -> Result<FockState> {
    if cutoff == 0 {
        return Err(NlaError::InvalidParameter("cutoff must be >= 1".into()));
    }
    if !(v >= 1.0 && v.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "thermal variance {v} must be >= 1"
        )));
    }
    let q = (v - 1.0) / (v + 1.0);
    let dim = cutoff + 1;
    let mut rho = DMatrix::zeros(dim, dim);
    let mut p = 1.0 - q;
    let mut captured = 0.0;
    for n in 0..dim {
        rho[(n, n)] = Complex64::new(p, 0.0);
        captured += p;
        p *= q;
    }
    let tr = Complex64::new(captured, 0.0);
    Ok(FockState {
        dims: vec![dim],
        repr: Repr::Mixed(rho / tr),
        leaked_weight: (1.0 - captured).max(0.0),
    })
}

/// Two-mode squeezed vacuum sum chi^n |n, n> (normalized), the purification
/// used throughout the oracle tests. Warns on stderr when the truncation
/// tail chi^(2 cutoff) is not negligible.
pub fn fock_epr(cutoff: usize, chi: f64) -> Result<FockState> {
    if cutoff == 0 {
        return Err(NlaError::InvalidParameter("cutoff must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&chi) {
        return Err(NlaError::InvalidParameter(format!(
            "EPR parameter {chi} outside [0, 1)"
        )));
    }
    if chi.powi(2 * cutoff as i32) >= 1e-12 {
        eprintln!(
            "warning: EPR truncation tail chi^(2 cutoff) = {:.3e} at cutoff {cutoff} is above 1e-12",
            chi.powi(2 * cutoff as i32)
        );
    }
    let dim = cutoff + 1;
    let mut v = DVector::zeros(dim * dim);
    let scale = (1.0 - chi * chi).sqrt();
    let mut c = scale;
    let mut captured = 0.0;
    for n in 0..dim {
        v[n * dim + n] = Complex64::new(c, 0.0);
        captured += c * c;
        c *= chi;
    }
    Ok(FockState {
        dims: vec![dim, dim],
        repr: Repr::Pure(v.clone() / Complex64::new(v.norm(), 0.0)),
        leaked_weight: (1.0 - captured).max(0.0),
    })
}

/// Amplifier weights g^n on one mode, normalized with the reference photon
/// number chosen so no weight exceeds 1 (n_ref = cutoff for g > 1, else 0).
/// The result is renormalized; the guard rejects cutoffs where g^cutoff
/// itself would overflow.
pub fn apply_nla_fock(state: &FockState, mode: usize, g: f64) -> Result<FockState> {
    state.mode_dim_check(mode)?;
    if !(g > 0.0 && g.is_finite()) {
        return Err(NlaError::InvalidParameter(format!(
            "gain {g} is not a positive finite number"
        )));
    }
    let d = state.dims[mode];
    let cutoff = (d - 1) as f64;
    if cutoff * g.ln().abs() > 700.0 {
        return Err(NlaError::Overflow(format!(
            "g^cutoff with g = {g}, cutoff = {d} - 1 is not representable"
        )));
    }
    let n_ref = if g > 1.0 { cutoff } else { 0.0 };
    let str_ = strides(&state.dims);
    let s = str_[mode];
    let weight = |i: usize| -> f64 {
        let n = ((i / s) % d) as f64;
        ((n - n_ref) * g.ln()).exp()
    };
    // Normalize in two stages with real-scalar divisions only: the raw
    // weighted entries can sit near the f64 underflow floor, where complex
    // division (which squares the denominator) would flush to zero.
    // Component max instead of modulus: |z|^2 would underflow first.
    let peak = |entries: &mut dyn Iterator<Item = Complex64>| -> Result<f64> {
        let m = entries
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            Ok(m)
        } else {
            Err(NlaError::Overflow(
                "amplified state has vanishing or non-finite weight".into(),
            ))
        }
    };
    let repr = match &state.repr {
        Repr::Pure(v) => {
            let mut out = v.clone();
            for i in 0..out.len() {
                out[i] *= weight(i);
            }
            let out = out.unscale(peak(&mut out.iter().copied())?);
            let norm = out.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(NlaError::Overflow(
                    "amplified state has vanishing or non-finite norm".into(),
                ));
            }
            Repr::Pure(out.unscale(norm))
        }
        Repr::Mixed(rho) => {
            let mut out = rho.clone();
            for r in 0..out.nrows() {
                for c in 0..out.ncols() {
                    out[(r, c)] *= weight(r) * weight(c);
                }
            }
            let out = out.unscale(peak(&mut out.iter().copied())?);
            let tr: f64 = (0..out.nrows()).map(|i| out[(i, i)].re).sum();
            if !(tr > 0.0 && tr.is_finite()) {
                return Err(NlaError::Overflow(
                    "amplified state has vanishing or non-finite trace".into(),
                ));
            }
            Repr::Mixed(out.unscale(tr))
        }
    };
    Ok(FockState {
        dims: state.dims.clone(),
        repr,
        leaked_weight: state.leaked_weight,
    })
}

/// Photon-number-sector decomposition of the two-mode beamsplitter
/// generator theta (a_i^dag a_j - a_j^dag a_i), theta = acos(sqrt(T)).
/// Returns, per total photon number N, the tuple (N, lowest kept photon
/// number in mode i, sector unitary exp(G_N)).
fn beamsplitter_sectors(di: usize, dj: usize, theta: f64) -> Vec<(usize, usize, DMatrix<f64>)> {
    let mut sectors = Vec::new();
    for total in 0..=(di - 1 + dj - 1) {
        let k_min = total.saturating_sub(dj - 1);
        let k_max = total.min(di - 1);
        if k_min > k_max {
            continue;
        }
        let size = k_max - k_min + 1;
        let mut gen = DMatrix::zeros(size, size);
        for r in 0..size.saturating_sub(1) {
            let k = k_min + r;
            let coupling = theta * (((k + 1) * (total - k)) as f64).sqrt();
            gen[(r + 1, r)] = coupling;
            gen[(r, r + 1)] = -coupling;
        }
        sectors.push((total, k_min, gen.exp()));
    }
    sectors
}

/// Beamsplitter of transmission T on modes (i, j), matching the Gaussian
/// convention that keeps + on mode i and puts - on the lower row:
/// a_i -> sqrt(T) a_i + sqrt(1-T) a_j. Photon number is conserved, so the
/// unitary is applied sector by sector; sectors clipped by the cutoff are
/// rotated within the kept subspace, which stays unitary.
pub fn beamsplitter_fock(state: &FockState, i: usize, j: usize, t: f64) -> Result<FockState> {
    state.mode_dim_check(i)?;
    state.mode_dim_check(j)?;
    if i == j {
        return Err(NlaError::InvalidParameter(
            "beamsplitter needs two distinct modes".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(NlaError::InvalidParameter(format!(
            "transmission {t} outside [0, 1]"
        )));
    }
    let theta = t.sqrt().acos();
    let (di, dj) = (state.dims[i], state.dims[j]);
    let str_ = strides(&state.dims);
    let (si, sj) = (str_[i], str_[j]);
    let sectors = beamsplitter_sectors(di, dj, theta);

    match &state.repr {
        Repr::Pure(v) => {
            let mut out = v.clone();
            // indices with modes i and j both zero enumerate the spectator space
            let rest: Vec<usize> = (0..v.len())
                .filter(|&idx| (idx / si) % di == 0 && (idx / sj) % dj == 0)
                .collect();
            let mut local = DVector::zeros(di.min(dj));
            for &base in &rest {
                for (n_total, k_min, u) in &sectors {
                    let size = u.nrows();
                    for r in 0..size {
                        let k = k_min + r;
                        local[r] = out[base + k * si + (n_total - k) * sj];
                    }
                    for r in 0..size {
                        let mut acc = Complex64::ZERO;
                        for c in 0..size {
                            acc += u[(r, c)] * local[c];
                        }
                        let k = k_min + r;
                        out[base + k * si + (n_total - k) * sj] = acc;
                    }
                }
            }
            Ok(FockState {
                dims: state.dims.clone(),
                repr: Repr::Pure(out),
                leaked_weight: state.leaked_weight,
            })
        }
        Repr::Mixed(rho) => {
            let dim = state.total_dim();
            if dim > MAX_MIXED_DIM {
                return Err(NlaError::Overflow(format!(
                    "mixed-state beamsplitter needs total dimension <= {MAX_MIXED_DIM}, got {dim}"
                )));
            }
            let mut u_full = DMatrix::<Complex64>::zeros(dim, dim);
            let rest: Vec<usize> = (0..dim)
                .filter(|&idx| (idx / si) % di == 0 && (idx / sj) % dj == 0)
                .collect();
            for &base in &rest {
                for (n_total, k_min, u) in &sectors {
                    let size = u.nrows();
                    for r in 0..size {
                        for c in 0..size {
                            let row = base + (k_min + r) * si + (n_total - (k_min + r)) * sj;
                            let col = base + (k_min + c) * si + (n_total - (k_min + c)) * sj;
                            u_full[(row, col)] = Complex64::new(u[(r, c)], 0.0);
                        }
                    }
                }
            }
            let out = &u_full * rho * u_full.adjoint();
            Ok(FockState {
                dims: state.dims.clone(),
                repr: Repr::Mixed(out),
                leaked_weight: state.leaked_weight,
            })
        }
    }
}

/// Extracts the mean vector and covariance matrix from a Fock state:
/// d_k = <r_k> and Sigma_kl = Re<r_k r_l> - d_k d_l, which is exactly the
/// symmetrized second central moment. Returns a Gaussian state carrying
/// those moments (no Gaussianity is assumed or checked here).
pub fn cm_from_fock(state: &FockState) -> Result<GaussianState> {
    let n_modes = state.n_modes();
    let nq = 2 * n_modes;
    let str_ = strides(&state.dims);
    let mut mean = DVector::zeros(nq);
    let mut cov = DMatrix::zeros(nq, nq);
    match &state.repr {
        Repr::Pure(v) => {
            let norm2 = v.norm_squared();
            let applied: Vec<DVector<Complex64>> = (0..nq)
                .map(|k| apply_quadrature(v, &state.dims, &str_, k / 2, k % 2))
                .collect();
            for k in 0..nq {
                mean[k] = v.dotc(&applied[k]).re / norm2;
            }
            for k in 0..nq {
                for l in k..nq {
                    let second = applied[k].dotc(&applied[l]).re / norm2;
                    let c = second - mean[k] * mean[l];
                    cov[(k, l)] = c;
                    cov[(l, k)] = c;
                }
            }
        }
        Repr::Mixed(rho) => {
            let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
            let applied: Vec<DMatrix<Complex64>> = (0..nq)
                .map(|k| column_quadrature(rho, &state.dims, &str_, k / 2, k % 2))
                .collect();
            for k in 0..nq {
                let t: f64 = (0..rho.nrows()).map(|i| applied[k][(i, i)].re).sum();
                mean[k] = t / tr;
            }
            for k in 0..nq {
                for l in k..nq {
                    // Re tr(r_k r_l rho) equals the symmetrized moment
                    let second = column_quadrature(&applied[l], &state.dims, &str_, k / 2, k % 2);
                    let t: f64 = (0..second.nrows()).map(|i| second[(i, i)].re).sum();
                    let c = t / tr - mean[k] * mean[l];
                    cov[(k, l)] = c;
                    cov[(l, k)] = c;
                }
            }
        }
    }
    GaussianState::from_parts(mean, cov)
}

/// Purity of the reduced state on the kept modes. Pure states use the Gram
/// matrix of the kept-vs-traced matricization, so the full density matrix
/// is never formed; mixed states only support keeping every mode.
pub fn reduced_purity(state: &FockState, keep: &[usize]) -> Result<f64> {
    let n = state.n_modes();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&m| m >= n) {
        return Err(NlaError::InvalidParameter(
            "kept modes must be distinct and in range".into(),
        ));
    }
    match &state.repr {
        Repr::Mixed(rho) => {
            if keep_sorted.len() != n {
                return Err(NlaError::InvalidParameter(
                    "partial trace of a mixed state is not supported".into(),
                ));
            }
            let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
            let fro2: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
            Ok(fro2 / (tr * tr))
        }
        Repr::Pure(v) => {
            if keep_sorted.len() == n {
                return Ok(1.0);
            }
            let traced: Vec<usize> = (0..n).filter(|m| !keep_sorted.contains(m)).collect();
            let str_ = strides(&state.dims);
            let kept_dim: usize = keep_sorted.iter().map(|&m| state.dims[m]).product();
            let traced_dim: usize = traced.iter().map(|&m| state.dims[m]).product();
            // matricize: row = kept multi-index, column = traced multi-index
            let mut m = DMatrix::<Complex64>::zeros(kept_dim, traced_dim);
            for idx in 0..v.len() {
                let mut row = 0usize;
                for &km in &keep_sorted {
                    row = row * state.dims[km] + (idx / str_[km]) % state.dims[km];
                }
                let mut col = 0usize;
                for &tm in &traced {
                    col = col * state.dims[tm] + (idx / str_[tm]) % state.dims[tm];
                }
                m[(row, col)] = v[idx];
            }
            // tr(rho_keep^2) = ||M^dag M||_F^2 for rho_keep = M M^dag
            let gram = m.adjoint() * &m;
            let tr: f64 = (0..gram.nrows()).map(|i| gram[(i, i)].re).sum();
            let fro2: f64 = gram.iter().map(|z| z.norm_sqr()).sum();
            Ok(fro2 / (tr * tr))
        }
    }
}

/// Largest fully symmetrized third central moment |<Dr_k Dr_l Dr_m>| over
/// all quadrature triples. Vanishes for Gaussian states, so a large value
/// flags non-Gaussianity. Pure states only.
pub fn max_third_central_moment(state: &FockState) -> Result<f64> {
    let v = match &state.repr {
        Repr::Pure(v) => v,
        Repr::Mixed(_) => {
            return Err(NlaError::InvalidParameter(
                "third-moment witness supports pure states only".into(),
            ))
        }
    };
    let nq = 2 * state.n_modes();
    let str_ = strides(&state.dims);
    let norm2 = v.norm_squared();
    let applied: Vec<DVector<Complex64>> = (0..nq)
        .map(|k| apply_quadrature(v, &state.dims, &str_, k / 2, k % 2))
        .collect();
    let mean: Vec<f64> = (0..nq).map(|k| v.dotc(&applied[k]).re / norm2).collect();
    let centered: Vec<DVector<Complex64>> = (0..nq)
        .map(|k| &applied[k] - v * Complex64::new(mean[k], 0.0))
        .collect();
    // pair applications Dr_l Dr_m |psi>
    let mut pair = vec![vec![DVector::<Complex64>::zeros(0); nq]; nq];
    for l in 0..nq {
        for m in 0..nq {
            let raw = apply_quadrature(&centered[m], &state.dims, &str_, l / 2, l % 2);
            pair[l][m] = raw - &centered[m] * Complex64::new(mean[l], 0.0);
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..nq {
        for l in k..nq {
            for m in l..nq {
                let perms = [
                    (k, l, m),
                    (k, m, l),
                    (l, k, m),
                    (l, m, k),
                    (m, k, l),
                    (m, l, k),
                ];
                let mut acc = Complex64::ZERO;
                for (a, b, c) in perms {
                    acc += centered[a].dotc(&pair[b][c]);
                }
                worst = worst.max((acc.re / (6.0 * norm2)).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nla::{nla_transform, GainProfile};
    use crate::state::TwoModeStandardForm;
    use crate::symplectic::{beamsplitter, BsConvention};
    use approx::assert_abs_diff_eq;

    #[test]
    fn coherent_state_moments() {
        let st = fock_coherent(40, Complex64::new(0.25, 0.15)).unwrap();
        let gs = cm_from_fock(&st).unwrap();
        assert_abs_diff_eq!(gs.mean()[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(gs.mean()[1], 0.3, epsilon = 1e-10);
        assert!((gs.cov() - DMatrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn thermal_state_moments() {
        let st = fock_thermal(120, 1.5).unwrap();
        let gs = cm_from_fock(&st).unwrap();
        assert!(gs.mean().amax() < 1e-12);
        assert_abs_diff_eq!(gs.cov()[(0, 0)], 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(gs.cov()[(1, 1)], 1.5, epsilon = 1e-9);
        assert!(gs.cov()[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn squeezed_state_moments() {
        let st = fock_squeezed(60, 1.8).unwrap();
        let gs = cm_from_fock(&st).unwrap();
        assert_abs_diff_eq!(gs.cov()[(0, 0)], 1.0 / 1.8, epsilon = 1e-9);
        assert_abs_diff_eq!(gs.cov()[(1, 1)], 1.8, epsilon = 1e-9);
    }

    #[test]
    fn epr_state_moments() {
        let st = fock_epr(40, 0.4).unwrap();
        let gs = cm_from_fock(&st).unwrap();
        let sf = TwoModeStandardForm::from_cov(gs.cov(), 1e-8).unwrap();
        let v = 1.380952380952381;
        assert_abs_diff_eq!(sf.va, v, epsilon = 1e-9);
        assert_abs_diff_eq!(sf.vb, v, epsilon = 1e-9);
        assert_abs_diff_eq!(sf.c, (v * v - 1.0f64).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn lossless_amplification_rescales_epr() {
        let st = fock_epr(60, 0.4).unwrap();
        let amped = apply_nla_fock(&st, 1, 1.5).unwrap();
        let gs = cm_from_fock(&amped).unwrap();
        let sf = TwoModeStandardForm::from_cov(gs.cov(), 1e-8).unwrap();
        // chi' = 1.5 * 0.4 = 0.6 => V' = 1.36/0.64, c' = sqrt(V'^2 - 1)
        assert_abs_diff_eq!(sf.va, 2.125, epsilon = 1e-9);
        assert_abs_diff_eq!(sf.vb, 2.125, epsilon = 1e-9);
        assert_abs_diff_eq!(sf.c, 1.875, epsilon = 1e-9);
        assert_abs_diff_eq!(gs.purity().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn thermal_amplification_matches_gaussian_map() {
        let st = fock_thermal(200, 1.5).unwrap();
        let amped = apply_nla_fock(&st, 0, 1.2).unwrap();
        let gs = cm_from_fock(&amped).unwrap();
        // (V(g^2+1) - (g^2-1)) / ((g^2+1) - V(g^2-1)) at V = 1.5, g^2 = 1.44
        let expect = 3.22 / 1.78;
        assert_abs_diff_eq!(gs.cov()[(0, 0)], expect, epsilon = 1e-9);
        assert_abs_diff_eq!(gs.cov()[(1, 1)], expect, epsilon = 1e-9);
        let direct = nla_transform(
            &crate::state::GaussianState::thermal(1.5).unwrap(),
            &GainProfile::uniform(1, 1.2).unwrap(),
            1e-9,
        )
        .unwrap();
        assert!(direct.converged);
        assert_abs_diff_eq!(direct.state.cov()[(0, 0)], expect, epsilon = 1e-12);
    }

    #[test]
    fn beamsplitter_preserves_norm_and_matches_gaussian_route() {
        let a = fock_coherent(25, Complex64::new(0.3, -0.2)).unwrap();
        let b = fock_squeezed(25, 1.6).unwrap();
        let joint = a.tensor(&b).unwrap();
        let split = beamsplitter_fock(&joint, 0, 1, 0.7).unwrap();
        if let Repr::Pure(v) = &split.repr {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        } else {
            panic!("expected pure state");
        }
        let fock_gs = cm_from_fock(&split).unwrap();

        let gauss_in = cm_from_fock(&joint).unwrap();
        let s = beamsplitter(2, 0, 1, 0.7, BsConvention::MinusLower).unwrap();
        let gauss_out = gauss_in.apply_symplectic(&s).unwrap();
        assert!((fock_gs.mean() - gauss_out.mean()).amax() < 1e-8);
        assert!((fock_gs.cov() - gauss_out.cov()).amax() < 1e-7);
    }

    #[test]
    fn beamsplitter_mixed_route_agrees_with_pure_route() {
        let a = fock_coherent(7, Complex64::new(0.2, 0.1)).unwrap();
        let b = fock_coherent(7, Complex64::new(-0.1, 0.3)).unwrap();
        let pure = beamsplitter_fock(&a.tensor(&b).unwrap(), 0, 1, 0.42).unwrap();
        let mixed_in = FockState {
            dims: vec![8, 8],
            repr: Repr::Mixed(a.tensor(&b).unwrap().density()),
            leaked_weight: 0.0,
        };
        let mixed = beamsplitter_fock(&mixed_in, 0, 1, 0.42).unwrap();
        let gp = cm_from_fock(&pure).unwrap();
        let gm = cm_from_fock(&mixed).unwrap();
        assert!((gp.mean() - gm.mean()).amax() < 1e-10);
        assert!((gp.cov() - gm.cov()).amax() < 1e-10);
    }

    #[test]
    fn divergent_gain_never_settles_with_cutoff() {
        // g^2 q = 1.152 > 1 at V = 1.5, g = 2.4: the extracted variance
        // keeps growing as the cutoff doubles instead of converging
        let v40 = cm_from_fock(&apply_nla_fock(&fock_thermal(40, 1.5).unwrap(), 0, 2.4).unwrap())
            .unwrap()
            .cov()[(0, 0)];
        let v80 = cm_from_fock(&apply_nla_fock(&fock_thermal(80, 1.5).unwrap(), 0, 2.4).unwrap())
            .unwrap()
            .cov()[(0, 0)];
        let v160 = cm_from_fock(&apply_nla_fock(&fock_thermal(160, 1.5).unwrap(), 0, 2.4).unwrap())
            .unwrap()
            .cov()[(0, 0)];
        assert!(v80 > v40 + 20.0);
        assert!(v160 > v80 + 20.0);
    }

    #[test]
    fn convergent_gain_settles_with_cutoff() {
        let out = |cutoff| {
            cm_from_fock(&apply_nla_fock(&fock_thermal(cutoff, 1.5).unwrap(), 0, 1.4).unwrap())
                .unwrap()
                .cov()[(0, 0)]
        };
        assert!((out(80) - out(160)).abs() < 1e-8);
    }

    #[test]
    fn overflow_guard_rejects_unrepresentable_weights() {
        let st = fock_thermal(60, 1.5).unwrap();
        let err = apply_nla_fock(&st, 0, 1e6).unwrap_err();
        assert!(matches!(err, NlaError::Overflow(_)));
    }

    #[test]
    fn reduced_purity_of_epr_arm_is_thermal() {
        let st = fock_epr(50, 0.4).unwrap();
        let v = 1.380952380952381;
        assert_abs_diff_eq!(reduced_purity(&st, &[0]).unwrap(), 1.0 / v, epsilon = 1e-9);
        assert_abs_diff_eq!(reduced_purity(&st, &[0, 1]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn third_moments_vanish_for_gaussian_but_not_crafted_state() {
        let amped = apply_nla_fock(
            &fock_coherent(50, Complex64::new(0.3, 0.1)).unwrap(),
            0,
            1.3,
        )
        .unwrap();
        assert!(max_third_central_moment(&amped).unwrap() < 1e-8);

        let mut v = DVector::zeros(8);
        v[0] = Complex64::new(1.0, 0.0);
        v[1] = Complex64::new(1.0, 0.0);
        v[2] = Complex64::new(0.5, 0.0);
        let crafted = FockState::from_pure(vec![8], v).unwrap();
        assert!(max_third_central_moment(&crafted).unwrap() > 0.05);
    }
}
