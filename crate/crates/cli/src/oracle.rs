//! Fock-space oracle comparisons exposed by `nla oracle-check`.
//!
//! Each case builds a state in the truncated photon-number basis, pushes it
//! through the amplifier (and beamsplitter, where the scenario has one) on
//! that side, extracts first and second moments, and compares them against
//! the Gaussian closed forms. Residuals are infinity-norm differences over
//! means and covariance entries together. Tolerances assume the default
//! cutoff or larger; shrinking the cutoff below the truncation tail of a
//! case makes it fail honestly.

use anyhow::Result;
use clap::ValueEnum;
use num_complex::Complex64;

use nla_core::effective::cloner_nla_cm;
use nla_core::fock::{
    apply_nla_fock, beamsplitter_fock, cm_from_fock, fock_coherent, fock_epr, fock_squeezed,
    fock_thermal,
};
use nla_core::nla::{epr_channel_nla, nla_transform, GainProfile};
use nla_core::state::GaussianState;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Case {
    All,
    Coherent,
    Thermal,
    Squeezed,
    Lossless,
    Channel,
    FourMode,
}

pub struct CaseResult {
    pub name: &'static str,
    pub residual: f64,
    pub tol: f64,
}

fn state_residual(a: &GaussianState, b: &GaussianState) -> f64 {
    let dm = (a.mean() - b.mean()).amax();
    let dc = (a.cov() - b.cov()).amax();
    dm.max(dc)
}

fn coherent_case(cutoff: usize) -> Result<CaseResult> {
    let (alpha, g) = (Complex64::new(0.3, 0.2), 1.6);
    let fock = apply_nla_fock(&fock_coherent(cutoff.max(30), alpha)?, 0, g)?;
    let from_fock = cm_from_fock(&fock)?;
    let input = GaussianState::coherent(2.0 * alpha.re, 2.0 * alpha.im);
    let direct = nla_transform(&input, &GainProfile::uniform(1, g)?, nla_core::DEFAULT_TOL)?;
    Ok(CaseResult {
        name: "coherent",
        residual: state_residual(&from_fock, &direct.state),
        tol: 1e-8,
    })
}

fn thermal_case(cutoff: usize) -> Result<CaseResult> {
    let (v, g) = (1.5, 1.2);
    let fock = apply_nla_fock(&fock_thermal(cutoff.max(40) * 3, v)?, 0, g)?;
    let from_fock = cm_from_fock(&fock)?;
    let direct = nla_transform(
        &GaussianState::thermal(v)?,
        &GainProfile::uniform(1, g)?,
        nla_core::DEFAULT_TOL,
    )?;
    Ok(CaseResult {
        name: "thermal",
        residual: state_residual(&from_fock, &direct.state),
        tol: 1e-8,
    })
}

fn squeezed_case(cutoff: usize) -> Result<CaseResult> {
    let (v, g) = (1.6, 1.3);
    let fock = apply_nla_fock(&fock_squeezed(cutoff.max(60), v)?, 0, g)?;
    let from_fock = cm_from_fock(&fock)?;
    let direct = nla_transform(
        &GaussianState::squeezed(v)?,
        &GainProfile::uniform(1, g)?,
        nla_core::DEFAULT_TOL,
    )?;
    Ok(CaseResult {
        name: "squeezed",
        residual: state_residual(&from_fock, &direct.state),
        tol: 1e-8,
    })
}

fn lossless_case(cutoff: usize) -> Result<CaseResult> {
    let (chi, g) = (0.4, 1.5);
    let fock = apply_nla_fock(&fock_epr(cutoff.max(60), chi)?, 1, g)?;
    let from_fock = cm_from_fock(&fock)?;
    let direct = epr_channel_nla(chi, 1.0, 1.0, g)?.to_state();
    let residual = state_residual(&from_fock, &direct);
    // the amplified pure state must stay pure
    let purity_gap = (from_fock.purity()? - 1.0).abs();
    Ok(CaseResult {
        name: "lossless",
        residual: residual.max(purity_gap),
        tol: 1e-8,
    })
}

fn channel_case(cutoff: usize) -> Result<CaseResult> {
    let (chi, t, v_e, g) = (0.4_f64, 0.8, 1.1_f64, 1.5);
    let chi_e = ((v_e - 1.0) / (v_e + 1.0)).sqrt();
    let cutoff_b = cutoff.max(40);
    let cutoff_e = (cutoff_b / 3).max(12);
    let joint = fock_epr(cutoff_b, chi)?.tensor(&fock_epr(cutoff_e, chi_e)?)?;
    let mixed = beamsplitter_fock(&joint, 1, 2, t)?;
    let amped = apply_nla_fock(&mixed, 1, g)?;
    let reduced = cm_from_fock(&amped)?.reduced(&[0, 1])?;
    let direct = epr_channel_nla(chi, t, v_e, g)?.to_state();
    Ok(CaseResult {
        name: "channel",
        residual: state_residual(&reduced, &direct),
        tol: 1e-5,
    })
}

fn four_mode_case(cutoff: usize) -> Result<CaseResult> {
    let (chi, t, v_e, g) = (0.4_f64, 0.5, 1.1_f64, 1.5);
    let v = (1.0 + chi * chi) / (1.0 - chi * chi);
    let chi_e = ((v_e - 1.0) / (v_e + 1.0)).sqrt();
    let per_mode = cutoff.clamp(12, 16);
    let joint = fock_epr(per_mode, chi)?.tensor(&fock_epr(per_mode, chi_e)?)?;
    let mixed = beamsplitter_fock(&joint, 1, 2, t)?;
    let amped = apply_nla_fock(&mixed, 1, g)?;
    let from_fock = cm_from_fock(&amped)?;
    let closed = cloner_nla_cm(v, v_e, t, g)?;
    Ok(CaseResult {
        name: "four-mode",
        residual: (from_fock.cov() - closed).amax(),
        tol: 1e-4,
    })
}

pub fn run_cases(case: Case, cutoff: usize) -> Result<Vec<CaseResult>> {
    let mut out = Vec::new();
    let want = |c: Case| case == Case::All || case == c;
    if want(Case::Coherent) {
        out.push(coherent_case(cutoff)?);
    }
    if want(Case::Thermal) {
        out.push(thermal_case(cutoff)?);
    }
    if want(Case::Squeezed) {
        out.push(squeezed_case(cutoff)?);
    }
    if want(Case::Lossless) {
        out.push(lossless_case(cutoff)?);
    }
    if want(Case::Channel) {
        out.push(channel_case(cutoff)?);
    }
    if want(Case::FourMode) {
        out.push(four_mode_case(cutoff)?);
    }
    Ok(out)
}
