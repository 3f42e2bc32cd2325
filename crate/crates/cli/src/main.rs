//! `ntf`: batch front-end for bosonic-qubit noise-transfer analysis.
//!
//! Subcommands emit figure-ready CSV/JSON files plus a `run_config.json`
//! documenting exactly what produced them; every output embeds the SHA-256
//! of that configuration. Exit codes: 0 success, 2 flag/config validation,
//! 3 numeric failure, 4 unbalanced circuit, 5 Monte Carlo / analytic
//! disagreement.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ntf_core::circuits::{iterate, run_ideal, run_lossy, LossConfig};
use ntf_core::domains::{
    auto_partition, domain_stats, sweep_variance, DomainPartition, PartitionChoice, SweepFamily,
};
use ntf_core::monte_carlo::{
    analytic_report, compare_with_analytic, run_trials, CircuitModel, SpikeModel, TrialConfig,
};
use ntf_core::oracle::{push_marginal, validate_transfer, ChannelSpec};
use ntf_core::states::{Quadrature, StateModel};
use ntf_core::CoreError;

use config::{
    LossArgs, ModelArg, OutFormat, QuadratureArg, RunConfig, SpikeModelArg, StateName, StateSpec, SweepParam,
};

const OUT_DIR_ENV: &str = "NTF_OUT_DIR";

#[derive(Parser)]
#[command(name = "ntf", version, about = "Noise-transfer analysis of cat and GKP qubits")]
struct Cli {
    /// Load the run configuration from a JSON file instead of flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (defaults to $NTF_OUT_DIR, then the working directory).
    #[arg(long, global = true)]
    path: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct StateFlags {
    /// State family.
    #[arg(long, value_enum)]
    state: StateNameArg,
    /// Coherent/cat displacement parameter.
    #[arg(long)]
    alpha: Option<f64>,
    /// GKP logical value (0 or 1).
    #[arg(long)]
    mu: Option<u8>,
    /// Squeezed variance for squeezed/GKP states.
    #[arg(long)]
    delta2: Option<f64>,
    /// Apply a quarter rotation (swaps the quadrature roles).
    #[arg(long, default_value_t = false)]
    rotated: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, PartialEq)]
enum StateNameArg {
    Vacuum,
    Coherent,
    Squeezed,
    Cat,
    Gkp,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum QuadArg {
    Q,
    P,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum OutArg {
    Csv,
    Json,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModelFlag {
    Ideal,
    Lossy,
}

#[derive(Args, Clone, Copy)]
struct LossFlags {
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long = "eta-g", default_value_t = 1.0)]
    eta_g: f64,
    #[arg(long = "eta-m", default_value_t = 1.0)]
    eta_m: f64,
    #[arg(long = "eta-d", default_value_t = 1.0)]
    eta_d: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a state's density and its domain-partitioned statistics.
    StateStats {
        #[command(flatten)]
        state: StateFlags,
        #[arg(long, value_enum)]
        quadrature: QuadArg,
        /// `sign`, `lattice:PERIOD[:OFFSET]`, `single`, or `auto`.
        #[arg(long, default_value = "auto")]
        domains: String,
        #[arg(long, value_enum, default_value = "csv")]
        out: OutArg,
        /// Number of density grid points.
        #[arg(long, default_value_t = 8193)]
        points: usize,
    },
    /// Sweep the domain variance over a state-family parameter.
    Sweep {
        #[arg(long, value_enum)]
        state: StateNameArg,
        #[arg(long, value_enum)]
        param: SweepParamArg,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        mu: Option<u8>,
        #[arg(long, default_value_t = false)]
        rotated: bool,
        #[arg(long, value_enum, default_value = "csv")]
        out: OutArg,
    },
    /// Run the teleportation circuit and write its report.
    Circuit {
        #[arg(long, value_enum)]
        model: ModelFlag,
        #[arg(long)]
        delta2: f64,
        #[command(flatten)]
        loss: LossFlags,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Monte Carlo trials compared against the analytic prediction
    /// (exit 5 on disagreement).
    Mc {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        model: ModelFlag,
        #[arg(long)]
        delta2: f64,
        #[command(flatten)]
        loss: LossFlags,
        #[arg(long, default_value_t = 0)]
        mu: u8,
        #[arg(long = "spike-model", value_enum, default_value = "gaussian")]
        spike_model: SpikeArg,
        #[arg(long = "max-z", default_value_t = 3.0)]
        max_z: f64,
    },
    /// Push a state through a loss channel and validate the variance
    /// transfer against the convolution oracle.
    LossOracle {
        #[command(flatten)]
        state: StateFlags,
        #[arg(long, value_enum, default_value = "q")]
        quadrature: QuadArg,
        #[arg(long)]
        eta: f64,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SweepParamArg {
    Alpha,
    Delta2,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SpikeArg {
    Gaussian,
    Exact,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dir = cli
        .path
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    match execute(&config, &dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

enum CliError {
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn exit_code_for(e: &CliError) -> u8 {
    match e {
        CliError::Core(core) => match core {
            CoreError::ParameterOutOfRange(_)
            | CoreError::DegenerateRange(_)
            | CoreError::InvalidPartition(_)
            | CoreError::ConfigMismatch(_) => 2,
            CoreError::UnbalancedCircuit { .. } => 4,
            _ => 3,
        },
        CliError::Io(_) => 1,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err("--config replaces the subcommand; pass one or the other".into());
        }
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        return serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()));
    }
    let command = cli.command.as_ref().ok_or("a subcommand or --config is required")?;
    Ok(config_from_command(command))
}

fn config_from_command(cmd: &Command) -> RunConfig {
    let state_spec = |s: &StateFlags| StateSpec {
        state: match s.state {
            StateNameArg::Vacuum => StateName::Vacuum,
            StateNameArg::Coherent => StateName::Coherent,
            StateNameArg::Squeezed => StateName::Squeezed,
            StateNameArg::Cat => StateName::Cat,
            StateNameArg::Gkp => StateName::Gkp,
        },
        alpha: s.alpha,
        mu: s.mu,
        delta2: s.delta2,
        rotated: s.rotated,
    };
    let loss_args = |l: &LossFlags| LossArgs { eta: l.eta, eta_g: l.eta_g, eta_m: l.eta_m, eta_d: l.eta_d };
    match cmd {
        Command::StateStats { state, quadrature, domains, out, points } => RunConfig::StateStats {
            state: state_spec(state),
            quadrature: quad_arg(*quadrature),
            domains: domains.clone(),
            out: out_arg(*out),
            points: *points,
        },
        Command::Sweep { state, param, from, to, steps, mu, rotated, out } => RunConfig::Sweep {
            state: match state {
                StateNameArg::Cat => StateName::Cat,
                StateNameArg::Gkp => StateName::Gkp,
                StateNameArg::Vacuum => StateName::Vacuum,
                StateNameArg::Coherent => StateName::Coherent,
                StateNameArg::Squeezed => StateName::Squeezed,
            },
            param: match param {
                SweepParamArg::Alpha => SweepParam::Alpha,
                SweepParamArg::Delta2 => SweepParam::Delta2,
            },
            from: *from,
            to: *to,
            steps: *steps,
            mu: *mu,
            rotated: *rotated,
            out: out_arg(*out),
        },
        Command::Circuit { model, delta2, loss, rounds } => RunConfig::Circuit {
            model: model_arg(*model),
            delta2: *delta2,
            loss: loss_args(loss),
            rounds: *rounds,
        },
        Command::Mc { trials, seed, model, delta2, loss, mu, spike_model, max_z } => RunConfig::Mc {
            trials: *trials,
            seed: *seed,
            model: model_arg(*model),
            delta2: *delta2,
            loss: loss_args(loss),
            mu: *mu,
            spike_model: match spike_model {
                SpikeArg::Gaussian => SpikeModelArg::Gaussian,
                SpikeArg::Exact => SpikeModelArg::Exact,
            },
            max_z: *max_z,
        },
        Command::LossOracle { state, quadrature, eta } => RunConfig::LossOracle {
            state: state_spec(state),
            quadrature: quad_arg(*quadrature),
            eta: *eta,
        },
    }
}

fn quad_arg(q: QuadArg) -> QuadratureArg {
    match q {
        QuadArg::Q => QuadratureArg::Q,
        QuadArg::P => QuadratureArg::P,
    }
}

fn out_arg(o: OutArg) -> OutFormat {
    match o {
        OutArg::Csv => OutFormat::Csv,
        OutArg::Json => OutFormat::Json,
    }
}

fn model_arg(m: ModelFlag) -> ModelArg {
    match m {
        ModelFlag::Ideal => ModelArg::Ideal,
        ModelFlag::Lossy => ModelArg::Lossy,
    }
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

fn build_state(spec: &StateSpec) -> Result<StateModel, CoreError> {
    let base = match spec.state {
        StateName::Vacuum => StateModel::vacuum(),
        StateName::Coherent => StateModel::coherent(
            spec.alpha
                .ok_or_else(|| CoreError::ParameterOutOfRange("coherent state needs --alpha".into()))?,
        )?,
        StateName::Squeezed => StateModel::squeezed(
            spec.delta2
                .ok_or_else(|| CoreError::ParameterOutOfRange("squeezed state needs --delta2".into()))?,
        )?,
        StateName::Cat => StateModel::cat(
            spec.alpha
                .ok_or_else(|| CoreError::ParameterOutOfRange("cat state needs --alpha".into()))?,
        )?,
        StateName::Gkp => StateModel::gkp(
            spec.mu
                .ok_or_else(|| CoreError::ParameterOutOfRange("gkp state needs --mu".into()))?,
            spec.delta2
                .ok_or_else(|| CoreError::ParameterOutOfRange("gkp state needs --delta2".into()))?,
        )?,
    };
    Ok(if spec.rotated { base.rotated() } else { base })
}

fn parse_domains(arg: &str, state: &StateModel, quadrature: Quadrature) -> Result<DomainPartition, CoreError> {
    match arg {
        "auto" => auto_partition(state, quadrature),
        "sign" => Ok(DomainPartition::SignSplit),
        "single" => Ok(DomainPartition::single()),
        other => {
            let rest = other
                .strip_prefix("lattice:")
                .ok_or_else(|| CoreError::InvalidPartition(format!("unrecognized --domains value '{other}'")))?;
            let mut parts = rest.split(':');
            let period: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CoreError::InvalidPartition(format!("bad lattice period in '{other}'")))?;
            let offset: f64 = match parts.next() {
                None => 0.0,
                Some(s) => s
                    .parse()
                    .map_err(|_| CoreError::InvalidPartition(format!("bad lattice offset in '{other}'")))?,
            };
            DomainPartition::lattice_with_offset(period, offset)
        }
    }
}

fn to_quadrature(q: QuadratureArg) -> Quadrature {
    match q {
        QuadratureArg::Q => Quadrature::Q,
        QuadratureArg::P => Quadrature::P,
    }
}

fn loss_config(loss: &LossArgs) -> LossConfig {
    LossConfig { eta: loss.eta, eta_g: loss.eta_g, eta_m: loss.eta_m, eta_d: loss.eta_d }
}

fn write_run_config(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    output::write_atomic(&dir.join("run_config.json"), &format!("{text}\n"))?;
    Ok(())
}

fn execute(config: &RunConfig, dir: &Path) -> Result<ExitCode, CliError> {
    write_run_config(dir, config)?;
    let hash = config.hash();
    match config {
        RunConfig::StateStats { state, quadrature, domains, out, points } => {
            let model = build_state(state)?;
            let quad = to_quadrature(*quadrature);
            let partition = parse_domains(domains, &model, quad)?;
            let grid = model.auto_density_grid(quad, (*points).max(2))?;
            let stats = domain_stats(&model, quad, &partition)?;
            match out {
                OutFormat::Csv => {
                    let mut density = String::from("x,density\n");
                    for i in 0..grid.len() {
                        density.push_str(&format!("{},{}\n", grid.x(i), grid.values[i]));
                    }
                    let p1 = output::write_csv(dir, "density.csv", &hash, &density)?;
                    let p2 = output::write_csv(dir, "domain_stats.csv", &hash, &stats.to_csv())?;
                    println!("wrote {} and {}", p1.display(), p2.display());
                }
                OutFormat::Json => {
                    let p1 = output::write_json(dir, "density.json", &hash, serde_json::to_value(&grid).unwrap())?;
                    let payload = serde_json::json!({
                        "partition": partition,
                        "stats": stats,
                    });
                    let p2 = output::write_json(dir, "domain_stats.json", &hash, payload)?;
                    println!("wrote {} and {}", p1.display(), p2.display());
                }
            }
            println!("V = {}, clipped_fraction = {}", stats.variance, stats.clipped_fraction);
            Ok(ExitCode::SUCCESS)
        }
        RunConfig::Sweep { state, param, from, to, steps, mu, rotated, out } => {
            let family = match (state, param) {
                (StateName::Cat, SweepParam::Alpha) => SweepFamily::CatAlpha,
                (StateName::Gkp, SweepParam::Delta2) => {
                    SweepFamily::GkpDelta2 { mu: mu.unwrap_or(0), rotated: *rotated }
                }
                _ => {
                    return Err(CoreError::ParameterOutOfRange(
                        "supported sweeps: cat over alpha, gkp over delta2".into(),
                    )
                    .into())
                }
            };
            let vq = sweep_variance(family, *from, *to, *steps, Quadrature::Q, &PartitionChoice::Auto)?;
            let vp = sweep_variance(family, *from, *to, *steps, Quadrature::P, &PartitionChoice::Auto)?;
            let rows: Vec<(f64, f64, f64, f64)> = vq
                .iter()
                .zip(&vp)
                .map(|(a, b)| {
                    (a.param, a.stats.variance, b.stats.variance, a.stats.clipped_fraction.max(b.stats.clipped_fraction))
                })
                .collect();
            match out {
                OutFormat::Csv => {
                    let mut body = String::from("param,v_q,v_p,clipped_fraction\n");
                    for (param, v_q, v_p, clip) in &rows {
                        body.push_str(&format!("{param},{v_q},{v_p},{clip}\n"));
                    }
                    let p = output::write_csv(dir, "sweep.csv", &hash, &body)?;
                    println!("wrote {}", p.display());
                }
                OutFormat::Json => {
                    let payload: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(param, v_q, v_p, clip)| {
                            serde_json::json!({"param": param, "v_q": v_q, "v_p": v_p, "clipped_fraction": clip})
                        })
                        .collect();
                    let p = output::write_json(dir, "sweep.json", &hash, serde_json::Value::Array(payload))?;
                    println!("wrote {}", p.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        RunConfig::Circuit { model, delta2, loss, rounds } => {
            let cfg = match model {
                ModelArg::Ideal => LossConfig::ideal(),
                ModelArg::Lossy => loss_config(loss),
            };
            let reports = if *rounds <= 1 {
                vec![if cfg.is_ideal() { run_ideal(*delta2, *delta2)? } else { run_lossy(*delta2, &cfg)? }]
            } else {
                iterate(*rounds, *delta2, &cfg)?
            };
            let payload = if reports.len() == 1 {
                report_json(&reports[0])
            } else {
                serde_json::Value::Array(reports.iter().map(report_json).collect())
            };
            let p = output::write_json(dir, "circuit_report.json", &hash, payload)?;
            println!("wrote {}", p.display());
            println!("V1 = {}, V2 = {}, p_none = {}", reports[0].v1, reports[0].v2, reports[0].logical.p_none);
            Ok(ExitCode::SUCCESS)
        }
        RunConfig::Mc { trials, seed, model, delta2, loss, mu, spike_model, max_z } => {
            let circuit = match model {
                ModelArg::Ideal => CircuitModel::Ideal,
                ModelArg::Lossy => CircuitModel::Lossy(loss_config(loss)),
            };
            let cfg = TrialConfig {
                trials: *trials,
                seed: *seed,
                circuit,
                delta2: *delta2,
                input_mu: *mu,
                spike_model: match spike_model {
                    SpikeModelArg::Gaussian => SpikeModel::Gaussian,
                    SpikeModelArg::Exact => SpikeModel::ExactMarginal,
                },
            };
            let outcome = run_trials(&cfg)?;
            let report = analytic_report(&cfg)?;
            let cmp = compare_with_analytic(&outcome, &report, *max_z)?;
            let p1 = output::write_json(dir, "mc_outcome.json", &hash, serde_json::to_value(&outcome).unwrap())?;
            let p2 = output::write_csv(dir, "mc_comparison.csv", &hash, &cmp.to_csv())?;
            println!("wrote {} and {}", p1.display(), p2.display());
            println!("max |z| = {} (threshold {})", cmp.max_abs_z, cmp.threshold);
            if cmp.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("monte carlo tallies disagree with the analytic prediction");
                Ok(ExitCode::from(5))
            }
        }
        RunConfig::LossOracle { state, quadrature, eta } => {
            let model = build_state(state)?;
            let quad = to_quadrature(*quadrature);
            let spec = ChannelSpec::Loss { eta: *eta };
            let validation = validate_transfer(&model, quad, &spec)?;
            let grid = model.auto_density_grid(quad, 1 << 14)?;
            let pushed = push_marginal(&grid, &spec)?;
            let mut density = String::from("x,density\n");
            for i in 0..pushed.len() {
                density.push_str(&format!("{},{}\n", pushed.x(i), pushed.values[i]));
            }
            let p1 = output::write_csv(dir, "pushed_density.csv", &hash, &density)?;
            let p2 = output::write_json(dir, "loss_oracle.json", &hash, serde_json::to_value(validation).unwrap())?;
            println!("wrote {} and {}", p1.display(), p2.display());
            println!(
                "oracle V = {}, formula V = {}, rel err = {}",
                validation.oracle_v, validation.formula_v, validation.rel_err
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Stable JSON shape for circuit reports.
fn report_json(r: &ntf_core::circuits::CircuitReport) -> serde_json::Value {
    serde_json::json!({
        "v1": r.v1,
        "v2": r.v2,
        "gains": r.gains,
        "q_out": r.q_out,
        "p_out": r.p_out,
        "q_out_pretty": r.q_out.to_string(),
        "p_out_pretty": r.p_out.to_string(),
        "ladders": r.ladders,
        "logical": r.logical,
        "v_q_out": r.v_q_out,
        "v_p_out": r.v_p_out,
        "delta2": r.delta2_input,
        "loss": r.cfg,
    })
}
