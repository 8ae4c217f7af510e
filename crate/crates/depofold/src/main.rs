//! Command-line front end: target generation, raw sampling, depolarization
//! estimation, single-circuit mitigation, full sweeps, analytic shot-cost
//! prediction, and the estimation-circuit convergence study.
//!
//! Circuits cross the boundary as JSON (`{"n_qubits", "measured", "gates"}`),
//! sweep results leave as CSV, everything else as JSON on stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use depofold::analytics::{
    ezne_variance_exact, layered_u, mse_avg, overhead, overhead_cnot_qzne_exact,
    rida_threshold_shots, OverheadQuery,
};
use depofold::circuit::Circuit;
use depofold::error::{Error, Result};
use depofold::harness::{
    convergence_study, generate_targets, optimal_p, rows_to_csv, run_experiment, ExperimentConfig,
};
use depofold::mitigation::{
    cnot_estimate_p, cnot_qzne_pipeline, ezne_trex_pipeline, raw_pipeline, rida_estimate_p,
    rida_pipeline, sampled_expectation, Method, PipelineOptions, DEFAULT_EST_CIRCUITS,
    DEFAULT_EST_SHOTS, FOLD_FACTORS,
};
use depofold::noise::NoiseModel;
use depofold::rng::derive_seed;
use depofold::simulator::sample;

#[derive(Parser)]
#[command(
    name = "depofold",
    version,
    about = "Depolarization-based error mitigation on a noisy density-matrix simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Noise and sampling knobs shared by the circuit-level subcommands.
#[derive(Args, Clone)]
struct NoiseArgs {
    /// Noise-strength multiplier applied to the base model.
    #[arg(long, default_value_t = 1.0)]
    noise_multiplier: f64,
    /// Coherent over-rotation (radians) after every entangling gate.
    #[arg(long, default_value_t = 0.0)]
    coherent_angle: f64,
    /// Pauli-twirl ensemble size while sampling (0 disables gate twirling).
    #[arg(long, default_value_t = 0)]
    twirls: usize,
    /// Classical readout twirl while sampling.
    #[arg(long, value_parser = parse_on_off, default_value = "on")]
    twirl_readout: bool,
}

impl NoiseArgs {
    fn model(&self) -> Result<NoiseModel> {
        let mut model = NoiseModel::kingston();
        model.coherent_angle_rad = self.coherent_angle;
        model.scale(self.noise_multiplier)
    }

    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            twirls: self.twirls,
            twirl_readout: self.twirl_readout,
        }
    }
}

fn parse_on_off(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected 'on' or 'off', got '{other}'")),
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::from_str(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate ansatz targets calibrated to uniform error-free truths.
    Targets {
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        #[arg(long, default_value_t = 12)]
        layers: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 2025)]
        seed: u64,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a circuit under noise and print the measured-pattern counts.
    Simulate {
        /// Circuit JSON file.
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 4096)]
        shots: u64,
        #[arg(long, default_value_t = 2025)]
        seed: u64,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Estimate the depolarization probability of a circuit's noise.
    EstimateP {
        /// Circuit JSON file.
        #[arg(long)]
        circuit: PathBuf,
        /// rida, cnot-qzne or cnot-qzne-rot (the others carry no estimate).
        #[arg(long, default_value = "rida", value_parser = parse_method)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_EST_CIRCUITS)]
        est_circuits: usize,
        #[arg(long, default_value_t = DEFAULT_EST_SHOTS)]
        est_shots: u64,
        #[arg(long, default_value_t = 2025)]
        seed: u64,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Run one mitigation method end to end on a circuit.
    Mitigate {
        /// Circuit JSON file.
        #[arg(long)]
        circuit: PathBuf,
        /// raw, rida, trex-ezne, cnot-qzne or cnot-qzne-rot.
        #[arg(long, default_value = "rida", value_parser = parse_method)]
        method: Method,
        /// Target-circuit shot budget (split over fold factors where the
        /// method extrapolates).
        #[arg(long, default_value_t = 1 << 17)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_EST_CIRCUITS)]
        est_circuits: usize,
        /// Estimation budget; doubles as the calibration budget for
        /// trex-ezne.
        #[arg(long, default_value_t = DEFAULT_EST_SHOTS)]
        est_shots: u64,
        #[arg(long, default_value_t = 2025)]
        seed: u64,
        /// Exit nonzero when a singular inversion forced a raw fallback.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Sweep (qubits, multiplier, shots, method) and report RMSE rows.
    Sweep {
        /// Experiment config as JSON; omitted fields take the desk-scale
        /// defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the full-size grid as the base config instead.
        #[arg(long, conflicts_with = "config")]
        paper_scale: bool,
        #[arg(long, value_delimiter = ',')]
        qubits: Option<Vec<usize>>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        shots: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        strings: Option<usize>,
        #[arg(long)]
        est_circuits: Option<usize>,
        #[arg(long)]
        est_shots: Option<u64>,
        /// Inject this coherent over-rotation (radians); enables twirling.
        #[arg(long)]
        coherent_angle: Option<f64>,
        #[arg(long)]
        twirls: Option<usize>,
        #[arg(long, value_parser = parse_on_off)]
        twirl_readout: Option<bool>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero when any row recorded a singularity fallback.
        #[arg(long)]
        strict: bool,
    },
    /// Print analytic shot-cost and error predictions per method.
    Predict {
        /// Per-layer noise amplification factor (≥ 1).
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 12)]
        layers: u32,
        /// Target variance for the shot-cost predictions.
        #[arg(long, default_value_t = 1e-4)]
        sigma2: f64,
        /// Depolarization probability for the error predictions.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Shot budget for the error predictions.
        #[arg(long, default_value_t = 1 << 17)]
        shots: u64,
        /// Observable weights (comma-separated) entering the shot costs.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        weights: Vec<f64>,
    },
    /// Resample estimation-circuit subsets and report pooling convergence.
    Convergence {
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        #[arg(long, default_value_t = 12)]
        layers: usize,
        /// Trial targets used to fit the reference probability.
        #[arg(long, default_value_t = 100)]
        strings: usize,
        /// Shots per trial target.
        #[arg(long, default_value_t = 1 << 17)]
        shots: u64,
        /// Pool size: estimation circuits drawn for the family.
        #[arg(long, default_value_t = 10)]
        est_circuits: usize,
        #[arg(long, default_value_t = 1_000_000)]
        est_shots: u64,
        /// Subset sizes to resample; defaults to 1,2,5,... capped at the
        /// pool size.
        #[arg(long, value_delimiter = ',')]
        subset_sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 5000)]
        resamples: usize,
        #[arg(long, default_value_t = 2025)]
        seed: u64,
        /// Write CSV here in addition to the JSON summary on stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    Circuit::from_json(&text)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| {
                Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))
            })?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON serialization cannot fail")
}

fn run_targets(
    qubits: usize,
    layers: usize,
    count: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let batch = generate_targets(qubits, layers, count, seed)?;
    for report in &batch.skipped {
        eprintln!("warning: {report}");
    }
    let payload = json!({
        "qubits": qubits,
        "layers": layers,
        "batch": batch,
    });
    write_output(out, &pretty(&payload))?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(circuit: &Path, shots: u64, seed: u64, noise: &NoiseArgs) -> Result<ExitCode> {
    let circuit = read_circuit(circuit)?;
    let model = noise.model()?;
    let data = sample(&circuit, &model, shots, noise.twirl_readout, seed)?;
    // Fold the twirl masks back out so the report shows logical patterns.
    let npat = 1 << data.measured.len();
    let mut dist = vec![0u64; npat];
    for (idx, &count) in data.counts.iter().enumerate() {
        let (mask, bits) = (idx / npat, idx % npat);
        dist[bits ^ mask] += count;
    }
    let width = data.measured.len();
    let patterns: serde_json::Map<String, serde_json::Value> = dist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(bits, &c)| (format!("{bits:0width$b}"), json!(c)))
        .collect();
    let payload = json!({
        "shots": data.total_shots,
        // Highest measured qubit is the leftmost pattern bit.
        "measured": data.measured,
        "readout_twirled": data.twirled,
        "counts": patterns,
        "signed_mean_product": data.signed_mean_product()?,
    });
    println!("{}", pretty(&payload));
    Ok(ExitCode::SUCCESS)
}

fn run_estimate_p(
    circuit: &Path,
    method: Method,
    est_circuits: usize,
    est_shots: u64,
    seed: u64,
    noise: &NoiseArgs,
) -> Result<ExitCode> {
    let circuit = read_circuit(circuit)?;
    let model = noise.model()?;
    let opts = noise.options();
    let payload = match method {
        Method::Rida => {
            let est = rida_estimate_p(&circuit, &model, est_circuits, est_shots, &opts, seed)?;
            json!({ "method": method.label(), "estimate": est })
        }
        Method::CnotQzne | Method::CnotQzneRot => {
            let with_rotations = method == Method::CnotQzneRot;
            let ests = cnot_estimate_p(&circuit, &model, est_shots, with_rotations, &opts, seed)?;
            json!({
                "method": method.label(),
                "fold_factors": FOLD_FACTORS,
                "estimates": ests,
            })
        }
        Method::Raw | Method::TrexEzne => {
            return Err(Error::InvalidArgument(format!(
                "method '{method}' carries no depolarization estimate"
            )));
        }
    };
    println!("{}", pretty(&payload));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn run_mitigate(
    circuit: &Path,
    method: Method,
    shots: u64,
    est_circuits: usize,
    est_shots: u64,
    seed: u64,
    strict: bool,
    noise: &NoiseArgs,
) -> Result<ExitCode> {
    let circuit = read_circuit(circuit)?;
    let model = noise.model()?;
    let opts = noise.options();
    let value = match method {
        Method::Raw => raw_pipeline(&circuit, &model, shots, &opts, seed)?,
        Method::Rida => rida_pipeline(
            &circuit,
            &model,
            est_circuits,
            est_shots,
            shots,
            &opts,
            seed,
        )?,
        Method::TrexEzne => ezne_trex_pipeline(&circuit, &model, shots, est_shots, &opts, seed)?,
        Method::CnotQzne | Method::CnotQzneRot => cnot_qzne_pipeline(
            &circuit,
            &model,
            shots,
            est_shots,
            method == Method::CnotQzneRot,
            &opts,
            seed,
        )?,
    };
    let flagged = value.fallback;
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("JSON serialization cannot fail")
    );
    if strict && flagged {
        eprintln!("strict: a singular inversion fell back to the raw value");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    base: ExperimentConfig,
    qubits: Option<Vec<usize>>,
    layers: Option<usize>,
    multipliers: Option<Vec<f64>>,
    shots: Option<Vec<u64>>,
    methods: Option<Vec<Method>>,
    strings: Option<usize>,
    est_circuits: Option<usize>,
    est_shots: Option<u64>,
    coherent_angle: Option<f64>,
    twirls: Option<usize>,
    twirl_readout: Option<bool>,
    seed: Option<u64>,
    out: Option<&Path>,
    strict: bool,
) -> Result<ExitCode> {
    let mut cfg = base;
    if let Some(v) = qubits {
        cfg.n_qubits = v;
    }
    if let Some(v) = layers {
        cfg.layers = v;
    }
    if let Some(v) = multipliers {
        cfg.multipliers = v;
    }
    if let Some(v) = shots {
        cfg.shots = v;
    }
    if let Some(v) = methods {
        cfg.methods = v;
    }
    if let Some(v) = strings {
        cfg.n_strings = v;
    }
    if let Some(v) = est_circuits {
        cfg.n_est_circuits = v;
    }
    if let Some(v) = est_shots {
        cfg.est_shots = v;
    }
    if let Some(v) = coherent_angle {
        cfg.coherent = v != 0.0;
        cfg.coherent_angle_rad = v;
    }
    if let Some(v) = twirls {
        cfg.twirls = v;
    }
    if let Some(v) = twirl_readout {
        cfg.twirl_readout = v;
    }
    if let Some(v) = seed {
        cfg.master_seed = v;
    }
    let rows = run_experiment(&cfg)?;
    write_output(out, &rows_to_csv(&rows))?;
    let flagged: u64 = rows.iter().map(|r| r.fallbacks).sum();
    if strict && flagged > 0 {
        eprintln!("strict: {flagged} case(s) fell back to the raw value");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_predict(
    gamma: f64,
    layers: u32,
    sigma2: f64,
    p: f64,
    shots: u64,
    weights: Vec<f64>,
) -> Result<ExitCode> {
    let query = OverheadQuery {
        gamma,
        layers,
        sigma2,
        weights,
    };
    let u = layered_u(gamma, layers)?;
    let payload = json!({
        "inputs": {
            "gamma": gamma,
            "layers": layers,
            "sigma2": sigma2,
            "p": p,
            "shots": shots,
            "weights": query.weights,
            "signal_decay_u": u,
        },
        "methods": {
            "raw": {
                "predicted_shots": overhead(Method::Raw, &query)?,
                "predicted_mse": mse_avg(Method::Raw, p, shots)?,
            },
            "rida": {
                "predicted_shots": overhead(Method::Rida, &query)?,
                "predicted_mse": mse_avg(Method::Rida, p, shots)?,
                "threshold_shots": rida_threshold_shots(p)?,
            },
            "trex_ezne": {
                "predicted_shots": overhead(Method::TrexEzne, &query)?,
                "extrapolation_variance": ezne_variance_exact(u, shots)?,
            },
            "cnot_qzne": {
                "predicted_shots": overhead(Method::CnotQzne, &query)?,
                "predicted_shots_exact": overhead_cnot_qzne_exact(&query)?,
            },
        },
    });
    println!("{}", pretty(&payload));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn run_convergence(
    qubits: usize,
    layers: usize,
    strings: usize,
    shots: u64,
    est_circuits: usize,
    est_shots: u64,
    subset_sizes: Option<Vec<usize>>,
    resamples: usize,
    seed: u64,
    out: Option<&Path>,
    noise: &NoiseArgs,
) -> Result<ExitCode> {
    let model = noise.model()?;
    let opts = noise.options();
    let batch = generate_targets(qubits, layers, strings, derive_seed(seed, "targets", &[]))?;
    for report in &batch.skipped {
        eprintln!("warning: {report}");
    }
    if batch.cases.is_empty() {
        return Err(Error::ResourceLimit(
            "target generation produced no cases".into(),
        ));
    }
    let truths: Vec<f64> = batch.cases.iter().map(|c| c.truth).collect();
    let raws: Vec<f64> = batch
        .cases
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let circuit = case.circuit(qubits, layers)?;
            sampled_expectation(
                &circuit,
                &model,
                shots,
                &opts,
                false,
                derive_seed(seed, "trial", &[i as u64]),
            )
        })
        .collect::<Result<_>>()?;
    let reference = optimal_p(&truths, &raws)?;

    // The family shares one structure; pool per-circuit estimates from a
    // representative member.
    let representative = batch.cases[0].circuit(qubits, layers)?;
    let estimate = rida_estimate_p(
        &representative,
        &model,
        est_circuits,
        est_shots,
        &opts,
        derive_seed(seed, "pool", &[]),
    )?;
    let pool: Vec<f64> = estimate.per_circuit.iter().map(|(m, _)| 1.0 - m).collect();

    let sizes = subset_sizes.unwrap_or_else(|| {
        let mut sizes: Vec<usize> = [1usize, 2, 5, 10, 20, 50]
            .iter()
            .copied()
            .filter(|&k| k < pool.len())
            .collect();
        sizes.push(pool.len());
        sizes
    });
    let rows = convergence_study(&pool, reference, &sizes, resamples, derive_seed(seed, "resample", &[]))?;

    if out.is_some() {
        let mut csv = String::from("subset_size,mean_abs_error\n");
        for row in &rows {
            csv.push_str(&format!("{},{:.16e}\n", row.subset_size, row.mean_abs_error));
        }
        write_output(out, &csv)?;
    }
    let payload = json!({
        "reference_p": reference,
        "pooled_p": estimate.p_hat,
        "pool_size": pool.len(),
        "rows": rows,
    });
    println!("{}", pretty(&payload));
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Targets {
            qubits,
            layers,
            count,
            seed,
            out,
        } => run_targets(qubits, layers, count, seed, out.as_deref()),
        Command::Simulate {
            circuit,
            shots,
            seed,
            noise,
        } => run_simulate(&circuit, shots, seed, &noise),
        Command::EstimateP {
            circuit,
            method,
            est_circuits,
            est_shots,
            seed,
            noise,
        } => run_estimate_p(&circuit, method, est_circuits, est_shots, seed, &noise),
        Command::Mitigate {
            circuit,
            method,
            shots,
            est_circuits,
            est_shots,
            seed,
            strict,
            noise,
        } => run_mitigate(
            &circuit,
            method,
            shots,
            est_circuits,
            est_shots,
            seed,
            strict,
            &noise,
        ),
        Command::Sweep {
            config,
            paper_scale,
            qubits,
            layers,
            multipliers,
            shots,
            methods,
            strings,
            est_circuits,
            est_shots,
            coherent_angle,
            twirls,
            twirl_readout,
            seed,
            out,
            strict,
        } => {
            let base = match config {
                Some(path) => load_config(&path)?,
                None if paper_scale => ExperimentConfig::paper_scale(),
                None => ExperimentConfig::default(),
            };
            run_sweep(
                base,
                qubits,
                layers,
                multipliers,
                shots,
                methods,
                strings,
                est_circuits,
                est_shots,
                coherent_angle,
                twirls,
                twirl_readout,
                seed,
                out.as_deref(),
                strict,
            )
        }
        Command::Predict {
            gamma,
            layers,
            sigma2,
            p,
            shots,
            weights,
        } => run_predict(gamma, layers, sigma2, p, shots, weights),
        Command::Convergence {
            qubits,
            layers,
            strings,
            shots,
            est_circuits,
            est_shots,
            subset_sizes,
            resamples,
            seed,
            out,
            noise,
        } => run_convergence(
            qubits,
            layers,
            strings,
            shots,
            est_circuits,
            est_shots,
            subset_sizes,
            resamples,
            seed,
            out.as_deref(),
            &noise,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
