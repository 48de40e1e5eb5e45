//! Command-line interface: `target`, `drives`, `simulate`, `sweep`, `analyze`.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failures, 2 on
//! malformed input.

pub mod config;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::gaussian::SqueezingSpec;
use crate::graph::{GraphKind, GraphTarget};
use crate::model::{
    build_drift_diffusion, closed_form_eigenvalues, drive_schedule, step_drift_spectrum, validate_regime,
    RegimeReport,
};
use crate::numerics::{eigenvalues, hurwitz_violations};
use crate::protocol::{noise_sweep, run_switching, squeezing_sweep, SwitchTime};
use config::{Config, Resolved, SqueezingConfig, SweepSection};
use output::{matrix_csv, num, unitary_table, Manifest, OutputDir, Table};

pub const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or malformed input; exit code 2.
    Input(String),
    /// Validation or numerical failure; exit code 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mechgraph", version, about = "Dissipative preparation of mechanical graph states")]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Treat failed regime checks as errors
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reserved; the dynamics is deterministic
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Target covariance, graph unitary and nullifier spectrum
    Target(GraphArgs),
    /// Drive amplitudes and phases of every switching step
    Drives(GraphArgs),
    /// Fidelity trajectory of one switching run
    Simulate,
    /// Optimized fidelity over a noise or squeezing grid
    Sweep,
    /// Step spectra, relaxation times and regime checks
    Analyze(GraphArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Built-in graph `kind-N` or an adjacency file; overrides the config
    #[arg(long)]
    pub graph: Option<String>,
    /// Target squeezing in dB; overrides the config
    #[arg(long, conflicts_with = "r")]
    pub db: Option<f64>,
    /// Target Bogoliubov ratio; overrides the config
    #[arg(long)]
    pub r: Option<f64>,
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot configure thread pool: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    match &cli.command {
        Command::Target(args) => {
            apply_overrides(&mut config, args);
            cmd_target(&config, &out)
        }
        Command::Drives(args) => {
            apply_overrides(&mut config, args);
            cmd_drives(&config, &out, cli.strict)
        }
        Command::Simulate => {
            require_config(cli)?;
            cmd_simulate(&config, &out, cli.strict)
        }
        Command::Sweep => {
            require_config(cli)?;
            cmd_sweep(&config, &out, cli.strict)
        }
        Command::Analyze(args) => {
            apply_overrides(&mut config, args);
            cmd_analyze(&config, cli.out.as_deref())
        }
    }
}

fn require_config(cli: &Cli) -> Result<(), CliError> {
    match cli.config {
        Some(_) => Ok(()),
        None => Err(CliError::Input("this command needs --config".into())),
    }
}

fn apply_overrides(config: &mut Config, args: &GraphArgs) {
    if let Some(graph) = &args.graph {
        config.graph = Some(graph.clone());
    }
    if args.db.is_some() || args.r.is_some() {
        config.squeezing = Some(SqueezingConfig {
            db: args.db,
            r: args.r,
            xi: None,
        });
    }
}

fn config_json(config: &Config) -> Value {
    serde_json::to_value(config).unwrap_or(Value::Null)
}

fn squeezing_json(s: SqueezingSpec) -> Value {
    json!({ "r": s.r, "xi": s.xi, "db": s.db })
}

fn check_regime(report: &RegimeReport, strict: bool) -> Result<(), CliError> {
    let failed: Vec<String> = report
        .warnings()
        .map(|c| format!("{} ratio {:.3e} exceeds {} ({})", c.name, c.ratio, c.threshold, c.detail))
        .collect();
    if failed.is_empty() {
        return Ok(());
    }
    if strict {
        return Err(CliError::Runtime(format!("regime check failed: {}", failed.join("; "))));
    }
    for line in failed {
        eprintln!("warning: {line}");
    }
    Ok(())
}

fn cmd_target(config: &Config, out: &Path) -> Result<(), CliError> {
    let (adjacency, label) = config.graph()?;
    let squeezing = config.squeezing()?;
    let target = GraphTarget::new(adjacency, squeezing)?;
    let purity = target.state()?.purity();
    let mut spectrum: Vec<f64> = target.nullifier_covariance().symmetric_eigen().eigenvalues.iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);

    let mut dir = OutputDir::create(out)?;
    dir.write("adjacency.csv", &matrix_csv(target.adjacency.matrix()))?;
    dir.write("unitary.csv", &unitary_table(&target.unitary).render())?;
    dir.write("covariance.csv", &matrix_csv(&target.covariance))?;
    let mut table = Table::new("index,eigenvalue");
    for (i, x) in spectrum.iter().enumerate() {
        table.row(&[(i + 1).to_string(), num(*x)]);
    }
    dir.write("nullifier_spectrum.csv", &table.render())?;
    dir.finish(Manifest::new(
        "target",
        config_json(config),
        json!({
            "covariance.csv": "quadrature ordering (q_1..q_N, p_1..p_N), vacuum = 1/2",
            "unitary.csv": "phase in radians on [0, 2pi)",
        }),
        json!({
            "graph": label,
            "n_nodes": target.n_nodes(),
            "squeezing": squeezing_json(squeezing),
            "purity": purity,
            "polar_residual": target.polar_residual(),
            "nullifier_residual": target.nullifier_residual(),
        }),
    ))?;
    println!("{label}: N = {}, {:.4} dB, purity {purity:.12}", target.n_nodes(), squeezing.db);
    Ok(())
}

fn cmd_drives(config: &Config, out: &Path, strict: bool) -> Result<(), CliError> {
    let resolved = Resolved::from_config(config)?;
    let params = &resolved.params;
    let schedule = drive_schedule(&resolved.target.unitary, params)?;
    let regime = validate_regime(params, &schedule, config.epsilon());
    check_regime(&regime, strict)?;

    let mut table = Table::new("step,j,alpha_minus,alpha_plus,phi_minus,phi_plus");
    for row in schedule.table(params) {
        table.row(&[
            row.step.to_string(),
            row.mode.to_string(),
            num(row.alpha_minus),
            num(row.alpha_plus),
            num(row.phi_minus),
            num(row.phi_plus),
        ]);
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("drives.csv", &table.render())?;
    dir.write("unitary.csv", &unitary_table(&resolved.target.unitary).render())?;
    dir.finish(Manifest::new(
        "drives",
        config_json(config),
        json!({
            "drives.csv": "alpha in units of beta/g_j, phi in radians on [0, 2pi)",
        }),
        json!({
            "graph": resolved.graph_label,
            "squeezing": squeezing_json(resolved.target.squeezing),
            "beta_rad_per_s": params.beta,
            "beta_over_kappa": params.beta / params.kappa,
            "regime": regime,
        }),
    ))?;
    println!("{}: {} steps written", resolved.graph_label, schedule.steps.len());
    Ok(())
}

fn cmd_simulate(config: &Config, out: &Path, strict: bool) -> Result<(), CliError> {
    let resolved = Resolved::from_config(config)?;
    let params = &resolved.params;
    let protocol = config.protocol(params.has_mechanical_noise())?;
    let schedule = drive_schedule(&resolved.target.unitary, params)?;
    let regime = validate_regime(params, &schedule, config.epsilon());
    check_regime(&regime, strict)?;

    let trajectory = run_switching(&resolved.target, params, &protocol)?;
    let steady = protocol.switch_time == SwitchTime::Steady;
    let mut table = Table::new("time,kappa_units,step_index,fidelity");
    for i in 0..trajectory.times.len() {
        let t = trajectory.times[i];
        let seconds = if steady { t } else { t / params.kappa };
        table.row(&[
            num(seconds),
            num(t),
            trajectory.step_index[i].to_string(),
            num(trajectory.fidelities[i]),
        ]);
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("trajectory.csv", &table.render())?;
    dir.write("final_covariance.csv", &matrix_csv(trajectory.final_state.cov()))?;
    dir.finish(Manifest::new(
        "simulate",
        config_json(config),
        json!({
            "trajectory.csv": if steady {
                "steady mode: time and kappa_units count completed steps"
            } else {
                "time in s, kappa_units = kappa * time"
            },
            "final_covariance.csv": "resonator quadratures (q_1..q_N, p_1..p_N), vacuum = 1/2",
        }),
        json!({
            "graph": resolved.graph_label,
            "squeezing": squeezing_json(resolved.target.squeezing),
            "protocol": protocol,
            "beta_rad_per_s": params.beta,
            "beta_over_kappa": params.beta / params.kappa,
            "occupations": params.occupations(),
            "regime": regime,
            "final_fidelity": trajectory.final_fidelity(),
            "step_boundaries": trajectory.step_boundaries,
            "max_unclamped_fidelity": trajectory.max_unclamped_fidelity,
            "min_physicality_margin": trajectory.min_physicality_margin,
        }),
    ))?;
    println!("{}: final fidelity {:.12}", resolved.graph_label, trajectory.final_fidelity());
    Ok(())
}

fn graph_kind(spec: &str) -> Result<GraphKind, CliError> {
    spec.parse()
        .or_else(|_| match spec.rsplit_once('-') {
            Some((kind, n)) if n.chars().all(|c| c.is_ascii_digit()) => kind.parse(),
            _ => spec.parse(),
        })
        .map_err(|e: crate::Error| CliError::Input(e.to_string()))
}

fn cmd_sweep(config: &Config, out: &Path, strict: bool) -> Result<(), CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Input("config has no `sweep` section".into()))?;
    let mut dir = OutputDir::create(out)?;
    let derived = match sweep {
        SweepSection::Noise {
            gamma_over_kappa,
            temperatures_mk,
        } => {
            let resolved = Resolved::from_config(config)?;
            let params = &resolved.params;
            let schedule = drive_schedule(&resolved.target.unitary, params)?;
            let regime = validate_regime(params, &schedule, config.epsilon());
            check_regime(&regime, strict)?;
            let protocol = config.protocol(true)?;
            let gammas: Vec<f64> = gamma_over_kappa.iter().map(|g| g * params.kappa).collect();
            let kelvin: Vec<f64> = temperatures_mk.iter().map(|t| t * 1e-3).collect();
            let result = noise_sweep(&resolved.target, params, &protocol, &gammas, &kelvin, config.bounds())?;
            let mut table = Table::new("gamma,T_mK,fidelity,t_opt");
            for (i, g) in gamma_over_kappa.iter().enumerate() {
                for (j, t) in temperatures_mk.iter().enumerate() {
                    table.row(&[num(*g), num(*t), num(result.fidelity[i][j]), num(result.t_opt[i][j])]);
                }
            }
            dir.write("noise_sweep.csv", &table.render())?;
            json!({
                "graph": resolved.graph_label,
                "squeezing": squeezing_json(resolved.target.squeezing),
                "protocol": protocol,
                "beta_over_kappa": params.beta / params.kappa,
                "regime": regime,
                "columns": "gamma = gamma/kappa, T_mK in mK, t_opt = optimal per-step duration in 1/kappa",
            })
        }
        SweepSection::Squeezing { n_nodes, db } => {
            let spec = config.graph.as_deref().unwrap_or("linear");
            let kind = graph_kind(spec)?;
            let template = config.params_template()?;
            let protocol = config.protocol(template.gamma > 0.0)?;
            let mut regime_failures = Vec::new();
            for &n in n_nodes {
                for &d in db {
                    let squeezing = SqueezingSpec::from_db(d)?;
                    let target = GraphTarget::new(crate::graph::builtin_graph(kind, n)?, squeezing)?;
                    let params = template.build(n, squeezing)?;
                    let report = validate_regime(&params, &drive_schedule(&target.unitary, &params)?, config.epsilon());
                    if !report.all_passed() {
                        regime_failures.push(json!({ "n_nodes": n, "dB": d, "report": report }));
                    }
                    if let Err(e) = check_regime(&report, strict) {
                        return Err(CliError::Runtime(format!("N = {n}, {d} dB: {e}")));
                    }
                }
            }
            let points = squeezing_sweep(kind, &template, &protocol, n_nodes, db, config.bounds())?;
            let mut table = Table::new("n_nodes,dB,fidelity,t_opt");
            for p in &points {
                table.row(&[p.n_nodes.to_string(), num(p.db), num(p.fidelity), num(p.t_opt)]);
            }
            dir.write("squeezing_sweep.csv", &table.render())?;
            json!({
                "graph_kind": kind.to_string(),
                "template": template,
                "protocol": protocol,
                "regime_failures": regime_failures,
                "columns": "dB = target squeezing, t_opt = optimal per-step duration in 1/kappa",
            })
        }
    };
    dir.finish(Manifest::new("sweep", config_json(config), json!({}), derived))?;
    println!("sweep written to {}", out.display());
    Ok(())
}

fn complex_json(z: &[nalgebra::Complex<f64>]) -> Value {
    Value::Array(z.iter().map(|z| json!([z.re, z.im])).collect())
}

fn cmd_analyze(config: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let resolved = Resolved::from_config(config)?;
    let params = &resolved.params;
    let noise = config.protocol(params.has_mechanical_noise())?.mechanical_noise;
    let schedule = drive_schedule(&resolved.target.unitary, params)?;
    let spectrum = step_drift_spectrum(params.kappa, params.beta, params.r);
    let regime = validate_regime(params, &schedule, config.epsilon());

    println!(
        "{}: N = {}, r = {:.6}, {:.4} dB, beta/kappa = {:.6}",
        resolved.graph_label,
        resolved.target.n_nodes(),
        params.r,
        resolved.target.squeezing.db,
        params.beta / params.kappa
    );
    let k = params.kappa;
    println!(
        "lambda+ = {:.6e}{:+.6e}i kappa, lambda- = {:.6e}{:+.6e}i kappa",
        spectrum.lambda_plus.re / k,
        spectrum.lambda_plus.im / k,
        spectrum.lambda_minus.re / k,
        spectrum.lambda_minus.im / k
    );
    println!(
        "tau = {:.6} /kappa, tau_min = {:.6} /kappa, {}",
        spectrum.tau * k,
        spectrum.tau_min * k,
        if spectrum.critical_or_faster { "critically damped or faster" } else { "underdamped cooling" }
    );

    let mut steps = Vec::new();
    for (i, step) in schedule.steps.iter().enumerate() {
        let dd = build_drift_diffusion(step, params, noise)?;
        let ev = eigenvalues(&dd.drift)?;
        let offending = hurwitz_violations(&dd.drift)?;
        let scale = ev.iter().map(|z| z.norm()).fold(k, f64::max);
        let zeros = offending.iter().filter(|z| z.norm() <= 1e-9 * scale).count();
        let growing = offending.len() - zeros;
        let verdict = if offending.is_empty() {
            "Hurwitz".to_string()
        } else if growing == 0 {
            format!("not Hurwitz, {zeros} zero eigenvalues")
        } else {
            format!("not Hurwitz, {zeros} zero and {growing} non-decaying eigenvalues")
        };
        println!("step {}: {verdict}", i + 1);
        steps.push(json!({
            "step": i + 1,
            "hurwitz": offending.is_empty(),
            "zero_eigenvalues": zeros,
            "eigenvalues": complex_json(&ev),
            "closed_form_noiseless": complex_json(&closed_form_eigenvalues(step, params)?),
        }));
    }
    for c in &regime.checks {
        println!(
            "{}: ratio {:.3e} {} {}",
            c.name,
            c.ratio,
            if c.passed { "<=" } else { ">" },
            c.threshold
        );
    }

    if let Some(out) = out {
        let analysis = json!({
            "graph": resolved.graph_label,
            "squeezing": squeezing_json(resolved.target.squeezing),
            "mechanical_noise": noise,
            "lambda_plus": [spectrum.lambda_plus.re, spectrum.lambda_plus.im],
            "lambda_minus": [spectrum.lambda_minus.re, spectrum.lambda_minus.im],
            "tau_kappa_units": spectrum.tau * k,
            "tau_min_kappa_units": spectrum.tau_min * k,
            "critical_or_faster": spectrum.critical_or_faster,
            "steps": steps,
            "regime": regime,
        });
        let mut dir = OutputDir::create(out)?;
        let text = serde_json::to_string_pretty(&analysis).map_err(|e| CliError::Runtime(e.to_string()))?;
        dir.write("analysis.json", &(text + "\n"))?;
        dir.finish(Manifest::new(
            "analyze",
            config_json(config),
            json!({ "analysis.json": "eigenvalues in rad/s as [re, im]" }),
            json!({ "beta_rad_per_s": params.beta, "occupations": params.occupations() }),
        ))?;
    }
    Ok(())
}
