//! Parameter sweeps producing the library's standard data tables.
//!
//! A [`SweepSpec`] names a scenario and its fixed parameters plus a grid for
//! the swept variable; [`run`] evaluates one row per grid point and returns
//! a [`SweepTable`]. Points where the amplifier map does not converge (or a
//! solver legitimately fails) keep their x-cell but leave every observable
//! cell empty, so plotted curves simply stop at the boundary.
//!
//! Rows are independent, so with the `parallel` feature they are evaluated
//! with rayon ([`run_parallel`]); [`run_sequential`] is always available and
//! produces bit-identical output, which the benchmark suite relies on.
//!
//! [`preset`] returns the specs behind the library's standard figures,
//! named fig1..fig9 (fig7 is a circuit schematic and has no data).

use serde::{Deserialize, Serialize};

use crate::effective::{effective_single_side, solve_equivalent_circuit};
use crate::error::{NlaError, Result};
use crate::nla::{epr_channel_nla, nla_transform, GainProfile};
use crate::optimize::{optimize_fidelity, OptimizerConfig};
use crate::state::{ve_to_xi, GaussianState};

/// Inclusive linear grid for the swept variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Grid { start, stop, count }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(NlaError::InvalidParameter(format!(
                "bad grid: start {}, stop {}, count {}",
                self.start, self.stop, self.count
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// One sweep scenario with its fixed parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum SweepSpec {
    /// Single-mode amplification of coherent, thermal and squeezed inputs
    /// sharing one displacement: output means and variances vs gain.
    AmplifierMoments { v: f64, d: [f64; 2], gains: Grid },
    /// EPR state through a thermal-loss channel, amplified on the received
    /// mode: log-negativity and purity vs gain, one curve per transmission.
    EprChannelScan {
        chi: f64,
        v_e: f64,
        transmissions: Vec<f64>,
        gains: Grid,
    },
    /// Effective single-side channel parameters (chi', T', xi') vs gain.
    EffectiveParams {
        chi: f64,
        t: f64,
        v_e: f64,
        gains: Grid,
    },
    /// Equivalent two-beamsplitter circuit (T_A, T_B, V', V_E') vs gain.
    EquivalentCircuitScan {
        chi: f64,
        t: f64,
        v_e: f64,
        gains: Grid,
    },
    /// Fidelity to a target EPR state, optimized over source parameter and
    /// gain, vs the target parameter; one amplified and one unit-gain
    /// baseline column per transmission.
    FidelityScan {
        t_values: Vec<f64>,
        v_e: f64,
        chi_targets: Grid,
        #[serde(default = "default_opt_grid")]
        opt_grid: usize,
    },
}

fn default_opt_grid() -> usize {
    40
}

/// Sweep output: column names (the swept variable first) and one row per
/// grid point. Empty cells mark non-convergent or unsolvable points.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        match self {
            SweepSpec::AmplifierMoments { v, d, gains } => {
                if *v < 1.0 || !v.is_finite() {
                    return Err(NlaError::InvalidParameter(format!("variance {v} < 1")));
                }
                if d.iter().any(|x| !x.is_finite()) {
                    return Err(NlaError::InvalidParameter("non-finite displacement".into()));
                }
                gains.validate()
            }
            SweepSpec::EprChannelScan {
                chi,
                v_e,
                transmissions,
                gains,
            } => {
                if transmissions.is_empty() {
                    return Err(NlaError::InvalidParameter(
                        "at least one transmission required".into(),
                    ));
                }
                for &t in transmissions {
                    crate::nla::epr_channel_max_gain(*chi, t, *v_e)?;
                }
                gains.validate()
            }
            SweepSpec::EffectiveParams { chi, t, v_e, gains } => {
                crate::nla::epr_channel_max_gain(*chi, *t, *v_e)?;
                gains.validate()
            }
            SweepSpec::EquivalentCircuitScan { chi, t, v_e, gains } => {
                crate::nla::epr_channel_max_gain(*chi, *t, *v_e)?;
                gains.validate()
            }
            SweepSpec::FidelityScan {
                t_values,
                v_e,
                chi_targets,
                opt_grid,
            } => {
                if t_values.is_empty() {
                    return Err(NlaError::InvalidParameter(
                        "at least one transmission required".into(),
                    ));
                }
                for &t in t_values {
                    crate::nla::epr_channel_max_gain(0.5, t, *v_e)?;
                }
                if *opt_grid < 4 {
                    return Err(NlaError::InvalidParameter(format!(
                        "optimizer grid {opt_grid} too small"
                    )));
                }
                chi_targets.validate()
            }
        }
    }

    fn header(&self) -> Vec<String> {
        match self {
            SweepSpec::AmplifierMoments { .. } => [
                "g",
                "coherent_dx",
                "coherent_dp",
                "coherent_vx",
                "coherent_vp",
                "thermal_dx",
                "thermal_dp",
                "thermal_vx",
                "thermal_vp",
                "squeezed_dx",
                "squeezed_dp",
                "squeezed_vx",
                "squeezed_vp",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            SweepSpec::EprChannelScan { transmissions, .. } => {
                let mut h = vec!["g".to_string()];
                for t in transmissions {
                    h.push(format!("logneg_t{t}"));
                    h.push(format!("purity_t{t}"));
                }
                h
            }
            SweepSpec::EffectiveParams { .. } => ["g", "chi_eff", "t_eff", "xi_eff"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            SweepSpec::EquivalentCircuitScan { .. } => ["g", "t_a", "t_b", "v_prime", "v_e_prime"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            SweepSpec::FidelityScan { t_values, .. } => {
                let mut h = vec!["chi_target".to_string()];
                for t in t_values {
                    h.push(format!("fidelity_t{t}"));
                    h.push(format!("baseline_t{t}"));
                }
                h
            }
        }
    }

    fn xs(&self) -> Vec<f64> {
        match self {
            SweepSpec::AmplifierMoments { gains, .. }
            | SweepSpec::EprChannelScan { gains, .. }
            | SweepSpec::EffectiveParams { gains, .. }
            | SweepSpec::EquivalentCircuitScan { gains, .. } => gains.values(),
            SweepSpec::FidelityScan { chi_targets, .. } => chi_targets.values(),
        }
    }

    /// One row of observable cells for a swept value; the runner prepends x.
    fn row(&self, x: f64) -> Vec<Option<f64>> {
        match self {
            SweepSpec::AmplifierMoments { v, d, gains: _ } => {
                let mut cells = Vec::with_capacity(12);
                let inputs = [
                    GaussianState::coherent(d[0], d[1]),
                    GaussianState::thermal(*v)
                        .and_then(|s| s.with_mean(d))
                        .expect("validated"),
                    GaussianState::squeezed(*v)
                        .and_then(|s| s.with_mean(d))
                        .expect("validated"),
                ];
                for input in &inputs {
                    let out = GainProfile::uniform(1, x)
                        .and_then(|gp| nla_transform(input, &gp, crate::DEFAULT_TOL));
                    match out {
                        Ok(r) if r.converged => {
                            cells.push(Some(r.state.mean()[0]));
                            cells.push(Some(r.state.mean()[1]));
                            cells.push(Some(r.state.cov()[(0, 0)]));
                            cells.push(Some(r.state.cov()[(1, 1)]));
                        }
                        _ => cells.extend([None; 4]),
                    }
                }
                cells
            }
            SweepSpec::EprChannelScan {
                chi,
                v_e,
                transmissions,
                gains: _,
            } => {
                let mut cells = Vec::with_capacity(2 * transmissions.len());
                for &t in transmissions {
                    match epr_channel_nla(*chi, t, *v_e, x) {
                        Ok(sf) => {
                            cells.push(sf.log_negativity().ok());
                            cells.push(sf.to_state().purity().ok());
                        }
                        Err(_) => cells.extend([None; 2]),
                    }
                }
                cells
            }
            SweepSpec::EffectiveParams { chi, t, v_e, .. } => {
                let eff = ve_to_xi(*t, *v_e).and_then(|xi| effective_single_side(*chi, *t, xi, x));
                match eff {
                    Ok(e) => vec![Some(e.chi_eff), Some(e.t_eff), Some(e.xi_eff)],
                    Err(_) => vec![None; 3],
                }
            }
            SweepSpec::EquivalentCircuitScan { chi, t, v_e, .. } => {
                let v = (1.0 + chi * chi) / (1.0 - chi * chi);
                match solve_equivalent_circuit(v, *v_e, *t, x) {
                    Ok(sol) => vec![
                        Some(sol.t_a),
                        Some(sol.t_b),
                        Some(sol.v_prime),
                        Some(sol.v_e_prime),
                    ],
                    Err(_) => vec![None; 4],
                }
            }
            SweepSpec::FidelityScan {
                t_values,
                v_e,
                opt_grid,
                ..
            } => {
                let cfg = OptimizerConfig {
                    grid: *opt_grid,
                    ..OptimizerConfig::default()
                };
                let mut cells = Vec::with_capacity(2 * t_values.len());
                for &t in t_values {
                    match optimize_fidelity(x, t, *v_e, &cfg) {
                        Ok(opt) => {
                            cells.push(Some(opt.fidelity));
                            cells.push(Some(opt.baseline_fidelity));
                        }
                        Err(_) => cells.extend([None; 2]),
                    }
                }
                cells
            }
        }
    }
}

fn assemble(spec: &SweepSpec, cells: Vec<Vec<Option<f64>>>) -> SweepTable {
    let rows = spec
        .xs()
        .into_iter()
        .zip(cells)
        .map(|(x, mut c)| {
            let mut row = Vec::with_capacity(c.len() + 1);
            row.push(Some(x));
            row.append(&mut c);
            row
        })
        .collect();
    SweepTable {
        header: spec.header(),
        rows,
    }
}

/// Evaluates every row sequentially. Always available; output is
/// bit-identical to the parallel path.
pub fn run_sequential(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let cells = spec.xs().iter().map(|&x| spec.row(x)).collect();
    Ok(assemble(spec, cells))
}

/// Evaluates rows with rayon. `threads` caps the worker count via a local
/// thread pool; `None` uses the global default.
#[cfg(feature = "parallel")]
pub fn run_parallel(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepTable> {
    use rayon::prelude::*;
    spec.validate()?;
    let xs = spec.xs();
    let compute = || -> Vec<Vec<Option<f64>>> { xs.par_iter().map(|&x| spec.row(x)).collect() };
    let cells = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| NlaError::SolverFailure(format!("thread pool: {e}")))?;
            pool.install(compute)
        }
        None => compute(),
    };
    Ok(assemble(spec, cells))
}

/// Default entry point: parallel when the `parallel` feature is enabled,
/// sequential otherwise.
pub fn run(spec: &SweepSpec) -> Result<SweepTable> {
    #[cfg(feature = "parallel")]
    {
        run_parallel(spec, None)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(spec)
    }
}

/// Named presets fig1..fig9 behind the library's standard figures. fig1 and
/// fig2 share a table (means and variances), as do fig3/fig4 (entanglement
/// and purity) and fig8/fig9 (circuit transmissions and variances). fig7 is
/// a schematic with no data and is reported as an invalid preset.
pub fn preset(name: &str) -> Result<SweepSpec> {
    match name {
        "fig1" | "fig2" => Ok(SweepSpec::AmplifierMoments {
            v: 1.5,
            d: [1.0, 1.0],
            gains: Grid::new(1.0, 2.2, 121),
        }),
        "fig3" | "fig4" => Ok(SweepSpec::EprChannelScan {
            chi: 0.4,
            v_e: 1.1,
            transmissions: vec![1.0, 0.8, 0.5],
            gains: Grid::new(1.0, 3.0, 201),
        }),
        "fig5" => Ok(SweepSpec::FidelityScan {
            t_values: vec![1.0, 0.9, 0.5],
            v_e: 1.01,
            chi_targets: Grid::new(0.05, 0.95, 19),
            opt_grid: 40,
        }),
        "fig6" => Ok(SweepSpec::EffectiveParams {
            chi: 0.4,
            t: 0.5,
            v_e: 1.1,
            gains: Grid::new(1.0, 3.0, 201),
        }),
        "fig7" => Err(NlaError::InvalidParameter(
            "fig7 is a circuit schematic; it has no data sweep".into(),
        )),
        "fig8" | "fig9" => Ok(SweepSpec::EquivalentCircuitScan {
            chi: 0.4,
            t: 0.5,
            v_e: 1.1,
            gains: Grid::new(1.0, 3.0, 201),
        }),
        other => Err(NlaError::InvalidParameter(format!(
            "unknown preset {other:?} (expected fig1..fig9)"
        ))),
    }
}

/// Renders a table as CSV: header row, then one line per row with every
/// number at 12 significant digits and empty cells left blank. The output
/// is deterministic byte for byte for a given spec.
pub fn to_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row
            .iter()
            .map(|c| match c {
                Some(v) => format!("{v:.11e}"),
                None => String::new(),
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn presets_resolve_and_schematic_is_rejected() {
        for name in [
            "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig8", "fig9",
        ] {
            assert!(preset(name).is_ok(), "{name}");
        }
        assert!(preset("fig7").is_err());
        assert!(preset("fig10").is_err());
    }

    #[test]
    fn amplifier_moments_rows_match_closed_form() {
        let spec = SweepSpec::AmplifierMoments {
            v: 1.5,
            d: [1.0, 1.0],
            gains: Grid::new(2.0, 2.0, 1),
        };
        let table = run_sequential(&spec).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        // coherent: mean scales by g, variance stays 1
        assert_abs_diff_eq!(row[1].unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row[3].unwrap(), 1.0, epsilon = 1e-12);
        // thermal V = 1.5 at g = 2: mean 8 d, variance 9
        assert_abs_diff_eq!(row[5].unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(row[7].unwrap(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn nonconvergent_cells_are_empty_but_x_remains() {
        let spec = SweepSpec::EprChannelScan {
            chi: 0.4,
            v_e: 1.1,
            transmissions: vec![1.0, 0.5],
            gains: Grid::new(2.7, 2.7, 1),
        };
        // g = 2.7 is past the T = 1 boundary (2.5) but inside T = 0.5 (3.05)
        let table = run_sequential(&spec).unwrap();
        let row = &table.rows[0];
        assert_abs_diff_eq!(row[0].unwrap(), 2.7, epsilon = 1e-15);
        assert!(row[1].is_none() && row[2].is_none());
        assert!(row[3].is_some() && row[4].is_some());
    }

    #[test]
    fn csv_is_deterministic_and_blank_cells_render_empty() {
        let spec = preset("fig6").unwrap();
        let a = to_csv(&run_sequential(&spec).unwrap());
        let b = to_csv(&run_sequential(&spec).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("g,chi_eff,t_eff,xi_eff\n"));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_agree_bit_for_bit() {
        let spec = preset("fig3").unwrap();
        let seq = to_csv(&run_sequential(&spec).unwrap());
        let par = to_csv(&run_parallel(&spec, Some(3)).unwrap());
        assert_eq!(seq, par);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = preset("fig8").unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: SweepSpec = serde_json::from_str(&text).unwrap();
        let a = to_csv(&run_sequential(&spec).unwrap());
        let b = to_csv(&run_sequential(&back).unwrap());
        assert_eq!(a, b);
    }
}
