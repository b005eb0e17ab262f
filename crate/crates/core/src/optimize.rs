//! Fidelity optimization for entanglement distillation by amplification.
//!
//! Task: given a target EPR state (parameter chi_target) and a fixed
//! thermal-loss channel (T, V_E), choose the source EPR parameter chi and
//! the amplifier gain g so that sending EPR(chi) through the channel and
//! amplifying Bob's mode lands as close as possible to the target, measured
//! by two-mode fidelity. The g = 1 row of the search space is the
//! no-amplifier baseline, reported separately so the advantage is visible.
//!
//! The search is a dense coarse grid followed by a shrinking axis-aligned
//! pattern search from the best grid point. Moves are only accepted on
//! improvement, so the refined result is never worse than the best coarse
//! point, and the overall result is never worse than the baseline (g = 1 is
//! a valid amplifier setting).

use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::nla::{epr_channel_max_gain, epr_channel_nla};
use crate::state::{fidelity_two_mode, TwoModeStandardForm};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Coarse grid resolution per axis.
    pub grid: usize,
    /// Pattern-search iterations after the grid stage.
    pub refine_iters: usize,
    /// Fraction of the convergence gain bound used as the grid's upper gain.
    pub gain_margin: f64,
    /// Upper gain when the bound is infinite (chi -> 0 vacuum-like channel).
    pub max_unbounded_gain: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid: 40,
            refine_iters: 60,
            gain_margin: 0.999,
            max_unbounded_gain: 50.0,
        }
    }
}

/// Optimization result. `chi`, `gain`, `fidelity` describe the best
/// amplified protocol found; the baseline fields describe the best g = 1
/// protocol. `fidelity >= baseline_fidelity` always holds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FidelityOptimum {
    pub chi: f64,
    pub gain: f64,
    pub fidelity: f64,
    pub baseline_chi: f64,
    pub baseline_fidelity: f64,
}

fn target_form(chi_target: f64) -> TwoModeStandardForm {
    let v = (1.0 + chi_target * chi_target) / (1.0 - chi_target * chi_target);
    TwoModeStandardForm::new(v, v, (v * v - 1.0).sqrt())
}

/// Maximizes the fidelity to EPR(chi_target) over the source parameter chi
/// and gain g for a fixed (T, V_E) channel.
pub fn optimize_fidelity(
    chi_target: f64,
    t: f64,
    v_e: f64,
    cfg: &OptimizerConfig,
) -> Result<FidelityOptimum> {
    if !(chi_target > 0.0 && chi_target < 1.0) {
        return Err(NlaError::InvalidParameter(format!(
            "target EPR parameter {chi_target} outside (0, 1)"
        )));
    }
    if cfg.grid < 4 {
        return Err(NlaError::InvalidParameter(format!(
            "grid resolution {} too small",
            cfg.grid
        )));
    }
    // validate (t, v_e) once up front
    epr_channel_max_gain(0.5, t, v_e)?;

    let target = target_form(chi_target);
    let eval = |chi: f64, g: f64| -> f64 {
        if !(chi > 0.0 && chi < 1.0 && g > 0.0) {
            return f64::NEG_INFINITY;
        }
        epr_channel_nla(chi, t, v_e, g)
            .and_then(|sf| fidelity_two_mode(&sf, &target))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let gain_cap = |chi: f64| -> f64 {
        let bound = epr_channel_max_gain(chi, t, v_e).unwrap_or(1.0);
        if bound.is_finite() {
            cfg.gain_margin * bound
        } else {
            cfg.max_unbounded_gain
        }
    };

    // coarse grid
    let lin = |lo: f64, hi: f64, i: usize, n: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut best = (chi_target, 1.0, f64::NEG_INFINITY);
    let mut chi_step = 0.0;
    for i in 0..cfg.grid {
        let chi = lin(0.02, 0.98, i, cfg.grid);
        chi_step = (0.98 - 0.02) / (cfg.grid - 1) as f64;
        let g_hi = gain_cap(chi);
        for j in 0..cfg.grid {
            let g = lin(0.5, g_hi, j, cfg.grid);
            let f = eval(chi, g);
            if f > best.2 {
                best = (chi, g, f);
            }
        }
    }

    // pattern search, shrinking steps, improvement-only moves
    let refine = |mut x: (f64, f64, f64), mut steps: (f64, f64), fix_gain: bool| {
        for _ in 0..cfg.refine_iters {
            let mut moved = false;
            let candidates = [
                (x.0 + steps.0, x.1),
                (x.0 - steps.0, x.1),
                (x.0, x.1 + steps.1),
                (x.0, x.1 - steps.1),
            ];
            let n_cand = if fix_gain { 2 } else { 4 };
            for &(chi, g) in candidates.iter().take(n_cand) {
                let chi = chi.clamp(1e-6, 1.0 - 1e-6);
                let f = eval(chi, g);
                if f > x.2 {
                    x = (chi, g, f);
                    moved = true;
                }
            }
            if !moved {
                steps = (steps.0 / 2.0, steps.1 / 2.0);
                if steps.0 < 1e-12 {
                    break;
                }
            }
        }
        x
    };
    let g_step = (gain_cap(best.0) - 0.5) / (cfg.grid - 1) as f64;
    let best = refine(best, (chi_step, g_step), false);

    // no-amplifier baseline: denser 1-D scan over chi at g = 1
    let n1 = 4 * cfg.grid;
    let mut base = (chi_target, 1.0, f64::NEG_INFINITY);
    for i in 0..n1 {
        let chi = lin(0.005, 0.995, i, n1);
        let f = eval(chi, 1.0);
        if f > base.2 {
            base = (chi, 1.0, f);
        }
    }
    let base = refine(base, ((0.995 - 0.005) / (n1 - 1) as f64, 0.0), true);

    let (chi, gain, fidelity) = if base.2 > best.2 { base } else { best };
    Ok(FidelityOptimum {
        chi,
        gain,
        fidelity,
        baseline_chi: base.0,
        baseline_fidelity: base.2,
    })
}
