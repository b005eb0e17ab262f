//! `nla`: command-line front end for the noiseless-linear-amplifier
//! Gaussian toolkit.
//!
//! Subcommands cover single-state amplification, the EPR-through-channel
//! scenario, effective-parameter and equivalent-circuit decompositions,
//! CSV parameter sweeps (with named figure presets), fidelity optimization,
//! and Fock-space oracle checks.
//!
//! Exit codes: 0 success, 1 oracle mismatch, 2 invalid input, 3 amplifier
//! map non-convergent (or numerically unrepresentable).

mod oracle;

use std::fs;
use std::io::Read as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nla_core::effective::{
    cloner_nla_cm, effective_single_side, reconstruct_equivalent_cm, solve_equivalent_circuit,
};
use nla_core::nla::{epr_channel_max_gain, epr_channel_nla, nla_transform, GainProfile};
use nla_core::optimize::{optimize_fidelity, OptimizerConfig};
use nla_core::state::{ve_to_xi, xi_to_ve, GaussianState};
use nla_core::sweep::{self, SweepSpec};
use nla_core::NlaError;

#[derive(Parser)]
#[command(
    name = "nla",
    version,
    about = "Gaussian toolkit for the ideal noiseless linear amplifier",
    long_about = "Applies the noiseless linear amplifier g^(n) to Gaussian states as a \
                  closed-form map on covariance matrices, with convergence bounds, \
                  entanglement and fidelity measures, effective-circuit decompositions, \
                  parameter sweeps, and Fock-space oracle checks.\n\n\
                  Exit codes: 0 success, 1 oracle mismatch, 2 invalid input, \
                  3 non-convergent amplifier map."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplify a Gaussian state given as JSON ({"n_modes", "mean", "cov"})
    Amplify(AmplifyArgs),
    /// EPR state through a thermal-loss channel, amplified on the received mode
    EprChannel(EprChannelArgs),
    /// Effective single-side channel parameters (chi', T', xi')
    Effective(EffectiveArgs),
    /// Equivalent two-beamsplitter circuit (V', V_E', T_A, T_B)
    EquivalentCircuit(EquivalentArgs),
    /// Run a parameter sweep and emit CSV
    Sweep(SweepArgs),
    /// Optimize fidelity to a target EPR state over source parameter and gain
    OptimizeFidelity(OptimizeArgs),
    /// Cross-check the Gaussian closed forms against the Fock-space oracle
    OracleCheck(OracleArgs),
}

/// Thermal-loss channel parameters. The environment can be given either as
/// the cloner variance V_E or as input-referred excess noise xi.
#[derive(Args)]
struct ChannelArgs {
    /// Channel transmission T in (0, 1]
    #[arg(short = 't', long)]
    transmission: f64,
    /// Environment (cloner) variance V_E >= 1
    #[arg(
        long,
        conflicts_with = "excess_noise",
        required_unless_present = "excess_noise"
    )]
    env_variance: Option<f64>,
    /// Excess noise xi >= 0, referred to the channel input
    #[arg(long)]
    excess_noise: Option<f64>,
}

impl ChannelArgs {
    fn v_e(&self) -> Result<f64> {
        match (self.env_variance, self.excess_noise) {
            (Some(v_e), None) => Ok(v_e),
            (None, Some(xi)) => Ok(xi_to_ve(self.transmission, xi)?),
            _ => bail!("give exactly one of --env-variance and --excess-noise"),
        }
    }

    fn xi(&self) -> Result<f64> {
        match (self.env_variance, self.excess_noise) {
            (Some(v_e), None) => Ok(ve_to_xi(self.transmission, v_e)?),
            (None, Some(xi)) => Ok(xi),
            _ => bail!("give exactly one of --env-variance and --excess-noise"),
        }
    }
}

#[derive(Args)]
struct AmplifyArgs {
    /// Input state JSON file; "-" reads stdin
    #[arg(long, default_value = "-")]
    input: String,
    /// Output file; omitted writes stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Uniform gain applied to every mode
    #[arg(
        short = 'g',
        long,
        conflicts_with = "gains",
        required_unless_present = "gains"
    )]
    gain: Option<f64>,
    /// Per-mode gains, comma separated (one per mode)
    #[arg(long, value_delimiter = ',')]
    gains: Option<Vec<f64>>,
    /// Relative tolerance for the near-singular denominator test
    #[arg(long, default_value_t = nla_core::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct EprChannelArgs {
    /// EPR parameter chi in [0, 1)
    #[arg(long)]
    chi: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Amplifier gain g > 0
    #[arg(short = 'g', long)]
    gain: f64,
    /// Logarithm base for the reported log-negativity
    #[arg(long, value_enum, default_value = "e")]
    log_base: LogBase,
}

#[derive(Args)]
struct EffectiveArgs {
    /// EPR parameter chi in [0, 1)
    #[arg(long)]
    chi: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Amplifier gain g > 0
    #[arg(short = 'g', long)]
    gain: f64,
}

#[derive(Args)]
struct EquivalentArgs {
    /// EPR parameter chi in [0, 1)
    #[arg(
        long,
        conflicts_with = "variance",
        required_unless_present = "variance"
    )]
    chi: Option<f64>,
    /// EPR per-mode variance V >= 1 (alternative to --chi)
    #[arg(long)]
    variance: Option<f64>,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Amplifier gain g > 0
    #[arg(short = 'g', long)]
    gain: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Named preset (fig1..fig9)
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// JSON sweep specification file
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output CSV file; omitted writes stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Force single-threaded evaluation
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Target EPR parameter chi_T in (0, 1)
    #[arg(long)]
    chi_target: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Coarse optimizer grid resolution per axis
    #[arg(long, default_value_t = 40)]
    grid: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Which comparison to run
    #[arg(long, value_enum, default_value = "all")]
    case: oracle::Case,
    /// Base per-mode photon-number cutoff (oracle accuracy scales with it)
    #[arg(long, default_value_t = 40)]
    cutoff: usize,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum LogBase {
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
    #[value(name = "10")]
    Ten,
}

impl LogBase {
    fn divisor(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::Ten => std::f64::consts::LN_10,
        }
    }

    fn label(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
            LogBase::Ten => "10",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<NlaError>() {
                Some(NlaError::NonConvergent { .. }) | Some(NlaError::Overflow(_)) => {
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Amplify(args) => amplify(args),
        Command::EprChannel(args) => epr_channel(args),
        Command::Effective(args) => effective(args),
        Command::EquivalentCircuit(args) => equivalent_circuit(args),
        Command::Sweep(args) => run_sweep(args),
        Command::OptimizeFidelity(args) => optimize(args),
        Command::OracleCheck(args) => oracle_check(args),
    }
}

fn read_state(input: &str) -> Result<GaussianState> {
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading state from stdin")?;
        buf
    } else {
        fs::read_to_string(input).with_context(|| format!("reading {input}"))?
    };
    serde_json::from_str(&text).context("parsing state JSON")
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct AmplifyOutput {
    state: GaussianState,
    converged: bool,
    min_denominator_eig: Option<f64>,
    lambda_minus_out: Option<f64>,
}

fn amplify(args: AmplifyArgs) -> Result<ExitCode> {
    let state = read_state(&args.input)?;
    let profile = match (args.gain, args.gains) {
        (Some(g), None) => GainProfile::uniform(state.n_modes(), g)?,
        (None, Some(gains)) => {
            if gains.len() != state.n_modes() {
                bail!(
                    "gain list has {} entries for a state with {} modes",
                    gains.len(),
                    state.n_modes()
                );
            }
            GainProfile::new(gains)?
        }
        _ => bail!("give exactly one of --gain and --gains"),
    };
    let result = nla_transform(&state, &profile, args.tol)?;
    let converged = result.converged;
    let out = AmplifyOutput {
        state: result.state,
        converged,
        min_denominator_eig: finite(result.min_denominator_eig),
        lambda_minus_out: finite(result.lambda_minus_out),
    };
    emit(&args.output, &to_json(&out)?)?;
    Ok(if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

#[derive(Serialize)]
struct EprChannelOutput {
    va: f64,
    vb: f64,
    c: f64,
    log_negativity: f64,
    log_base: &'static str,
    purity: f64,
    gain_bound: Option<f64>,
}

fn epr_channel(args: EprChannelArgs) -> Result<ExitCode> {
    let v_e = args.channel.v_e()?;
    let t = args.channel.transmission;
    let sf = epr_channel_nla(args.chi, t, v_e, args.gain)?;
    let out = EprChannelOutput {
        va: sf.va,
        vb: sf.vb,
        c: sf.c,
        log_negativity: sf.log_negativity()? / args.log_base.divisor(),
        log_base: args.log_base.label(),
        purity: sf.to_state().purity()?,
        gain_bound: finite(epr_channel_max_gain(args.chi, t, v_e)?),
    };
    emit(&None, &to_json(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn effective(args: EffectiveArgs) -> Result<ExitCode> {
    let xi = args.channel.xi()?;
    let eff = effective_single_side(args.chi, args.channel.transmission, xi, args.gain)?;
    emit(&None, &to_json(&eff)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EquivalentOutput {
    v_prime: f64,
    v_e_prime: f64,
    t_a: f64,
    t_b: f64,
    flipped_convention: bool,
    reconstruction_residual: f64,
}

fn equivalent_circuit(args: EquivalentArgs) -> Result<ExitCode> {
    let v = match (args.chi, args.variance) {
        (Some(chi), None) => {
            if !(0.0..1.0).contains(&chi) {
                bail!("EPR parameter {chi} outside [0, 1)");
            }
            (1.0 + chi * chi) / (1.0 - chi * chi)
        }
        (None, Some(v)) => v,
        _ => bail!("give exactly one of --chi and --variance"),
    };
    let v_e = args.channel.v_e()?;
    let t = args.channel.transmission;
    let sol = solve_equivalent_circuit(v, v_e, t, args.gain)?;
    let target = cloner_nla_cm(v, v_e, t, args.gain)?;
    let rebuilt = reconstruct_equivalent_cm(&sol)?;
    let out = EquivalentOutput {
        v_prime: sol.v_prime,
        v_e_prime: sol.v_e_prime,
        t_a: sol.t_a,
        t_b: sol.t_b,
        flipped_convention: sol.flipped_convention,
        reconstruction_residual: (rebuilt - target).amax(),
    };
    emit(&None, &to_json(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("NLA_NUM_THREADS") {
        Ok(text) => {
            let n: usize = text
                .parse()
                .with_context(|| format!("NLA_NUM_THREADS={text:?} is not a thread count"))?;
            if n == 0 {
                bail!("NLA_NUM_THREADS must be at least 1");
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context("reading NLA_NUM_THREADS"),
    }
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode> {
    let spec: SweepSpec = match (&args.preset, &args.spec) {
        (Some(name), None) => sweep::preset(name)?,
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).context("parsing sweep spec JSON")?
        }
        _ => bail!("give exactly one of --preset and --spec"),
    };
    let table = if args.sequential {
        sweep::run_sequential(&spec)?
    } else {
        #[cfg(feature = "parallel")]
        {
            sweep::run_parallel(&spec, thread_cap()?)?
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = thread_cap()?;
            sweep::run_sequential(&spec)?
        }
    };
    emit(&args.output, &sweep::to_csv(&table))?;
    Ok(ExitCode::SUCCESS)
}

fn optimize(args: OptimizeArgs) -> Result<ExitCode> {
    let cfg = OptimizerConfig {
        grid: args.grid,
        ..OptimizerConfig::default()
    };
    let v_e = args.channel.v_e()?;
    let opt = optimize_fidelity(args.chi_target, args.channel.transmission, v_e, &cfg)?;
    emit(&None, &to_json(&opt)?)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle_check(args: OracleArgs) -> Result<ExitCode> {
    let results = oracle::run_cases(args.case, args.cutoff)?;
    let mut all_pass = true;
    for r in &results {
        let pass = r.residual <= r.tol;
        all_pass &= pass;
        println!(
            "{:<12} residual {:12.5e}  tol {:8.1e}  {}",
            r.name,
            r.residual,
            r.tol,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("oracle check failed");
        Ok(ExitCode::from(1))
    }
}
