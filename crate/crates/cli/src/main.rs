//! Command line front end for the degenerate two-level pump-probe solver.
//!
//! Every mode reads a TOML config, computes one table, and writes it as CSV
//! or JSON to a file (with a digest manifest) or to stdout.  Exit codes:
//! 0 success, 2 configuration or usage error, 3 computation error, 4 I/O
//! error.

mod config;
mod export;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtls_core::analytic::{f_function, f_function_steady, LambdaParams, NParams};
use dtls_core::engine::{Engine, TurnOnMode};
use dtls_core::spectra::{self, fwm_signal, ScanConfig, SpectrumGrid};
use num_complex::Complex64;
use serde_json::json;

use config::{linspace, FileConfig};
use export::{Rendered, SpectrumRow};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Compute(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn compute_err(e: impl fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Copy, Clone, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; writes to stdout (without a manifest) when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for detuning scans; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Integration step override in units of 1/gamma.
    #[arg(long)]
    step: Option<f64>,
    /// Overwrite an output whose manifest records different data.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "dtls",
    version,
    about = "Time-resolved probe spectra of driven degenerate two-level transitions"
)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Tabulate the universal transient lineshape function and its steady limit.
    FFunction(CommonArgs),
    /// Exact vs adiabatic transparency transients of the driven three-state chain.
    AnalyticLambda(CommonArgs),
    /// Exact vs adiabatic absorption transients of the driven four-state chain.
    AnalyticN(CommonArgs),
    /// Detuning-time absorption surface from the degenerate-level solver.
    Scan(CommonArgs),
    /// Time-resolved signals at a single probe detuning.
    Trace(CommonArgs),
    /// Nonperturbative phase-cycled reference vs the perturbative solver.
    OracleCompare(CommonArgs),
}

impl Mode {
    fn common(&self) -> &CommonArgs {
        match self {
            Mode::FFunction(c)
            | Mode::AnalyticLambda(c)
            | Mode::AnalyticN(c)
            | Mode::Scan(c)
            | Mode::Trace(c)
            | Mode::OracleCompare(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Mode::FFunction(_) => "f-function",
            Mode::AnalyticLambda(_) => "analytic-lambda",
            Mode::AnalyticN(_) => "analytic-n",
            Mode::Scan(_) => "scan",
            Mode::Trace(_) => "trace",
            Mode::OracleCompare(_) => "oracle-compare",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.mode) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(mode: &Mode) -> Result<(), CliError> {
    let common = mode.common();
    if let Some(h) = common.step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Config(format!(
                "--step must be a positive finite number, got {h}"
            )));
        }
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let cfg = FileConfig::load(&common.config)?;
    let rendered = match mode {
        Mode::FFunction(_) => run_f_function(&cfg),
        Mode::AnalyticLambda(_) => run_analytic_lambda(&cfg),
        Mode::AnalyticN(_) => run_analytic_n(&cfg),
        Mode::Scan(_) => run_scan(&cfg, common),
        Mode::Trace(_) => run_trace(&cfg, common),
        Mode::OracleCompare(_) => run_oracle_compare(&cfg, common),
    }?;
    let config_echo = serde_json::to_value(&cfg)
        .map_err(|e| CliError::Io(format!("config echo failed: {e}")))?;
    let wrapped = Rendered {
        csv: rendered.csv,
        json: json!({
            "mode": mode.name(),
            "config": config_echo,
            "data": rendered.json,
        }),
    };
    export::write_output(
        &wrapped,
        common.format,
        common.out.as_deref(),
        mode.name(),
        &common.config,
        common.force,
    )
}

fn run_f_function(cfg: &FileConfig) -> Result<Rendered, CliError> {
    let sec = FileConfig::require(&cfg.f_function, "f_function", "f-function")?;
    if sec.tau_values.is_empty() {
        return Err(CliError::Config("[f_function]: tau_values must not be empty".into()));
    }
    if sec.y_count == 0 {
        return Err(CliError::Config("[f_function]: y_count must be at least 1".into()));
    }
    let ys = linspace(sec.y_min, sec.y_max, sec.y_count);
    let mut rows = Vec::with_capacity(sec.tau_values.len() * ys.len());
    for &tau in &sec.tau_values {
        for &y in &ys {
            let f = f_function(sec.x, y, tau).map_err(config_err)?;
            let f_steady = f_function_steady(sec.x, y).map_err(config_err)?;
            rows.push(vec![Some(sec.x), Some(y), Some(tau), Some(f), Some(f_steady)]);
        }
    }
    Ok(export::render_table(
        "x,y,tau,f,f_steady",
        &rows,
        json!({ "x": sec.x, "tau_values": sec.tau_values }),
    ))
}

fn run_analytic_lambda(cfg: &FileConfig) -> Result<Rendered, CliError> {
    let sec = FileConfig::require(&cfg.analytic_lambda, "analytic_lambda", "analytic-lambda")?;
    let probe = Complex64::new(sec.probe_rabi, 0.0);
    let build = |pump: f64| match sec.branching_to_pump_ground {
        Some(b) => LambdaParams::new(sec.gamma, b, sec.gamma - b, pump, probe),
        None => LambdaParams::symmetric(sec.gamma, pump, probe),
    };
    let params = build(sec.pump_rabi).map_err(config_err)?;
    let pump_off = build(0.0).map_err(config_err)?;
    if sec.deltas.is_empty() {
        return Err(CliError::Config("[analytic_lambda]: deltas must not be empty".into()));
    }
    let mut rows = Vec::new();
    for &delta in &sec.deltas {
        for w in params.regime_warnings(delta) {
            eprintln!("warning: {w}");
        }
        let exact = params
            .evolve(delta, sec.t_final, sec.time_samples)
            .map_err(compute_err)?;
        let baseline = pump_off
            .evolve(delta, sec.t_final, sec.time_samples)
            .map_err(compute_err)?;
        let alpha_lin = params.linear_absorption(delta);
        for (j, &t) in exact.times.iter().enumerate() {
            // The adiabatic columns assume the probe-side ground state holds
            // the full population, matching the exact solver's initial state.
            let nl = params.nonlinear_absorption(delta, t, 1.0).map_err(compute_err)?;
            rows.push(vec![
                Some(delta),
                Some(t),
                Some(exact.absorption[j]),
                Some(alpha_lin + nl),
                Some(exact.absorption[j] - baseline.absorption[j]),
                Some(nl),
            ]);
        }
    }
    Ok(export::render_table(
        "delta,time,alpha,alpha_adiabatic,delta_alpha,delta_alpha_adiabatic",
        &rows,
        json!({
            "pumping_rate": params.beta(),
            "narrow_feature_fwhm": params.narrow_fwhm(),
            "transient_amplitude": params.k_coefficient(1.0),
        }),
    ))
}

fn run_analytic_n(cfg: &FileConfig) -> Result<Rendered, CliError> {
    let sec = FileConfig::require(&cfg.analytic_n, "analytic_n", "analytic-n")?;
    let probe = Complex64::new(sec.probe_rabi, 0.0);
    let params =
        NParams::new(sec.gamma, sec.pump_rabi, probe, sec.coupling_ratio).map_err(config_err)?;
    let pump_off = NParams::new(sec.gamma, 0.0, probe, 0.0).map_err(config_err)?;
    if sec.deltas.is_empty() {
        return Err(CliError::Config("[analytic_n]: deltas must not be empty".into()));
    }
    let zero = params.zero_order();
    let mut rows = Vec::new();
    for &delta in &sec.deltas {
        for w in params.regime_warnings(delta) {
            eprintln!("warning: {w}");
        }
        let exact = params
            .evolve(delta, sec.t_final, sec.time_samples)
            .map_err(compute_err)?;
        let baseline = pump_off
            .evolve(delta, sec.t_final, sec.time_samples)
            .map_err(compute_err)?;
        let alpha_lin = params.linear_absorption(delta);
        for (j, &t) in exact.times.iter().enumerate() {
            let nl = params.nonlinear_absorption(delta, t).map_err(compute_err)?;
            rows.push(vec![
                Some(delta),
                Some(t),
                Some(exact.absorption[j]),
                Some(alpha_lin + nl),
                Some(exact.absorption[j] - baseline.absorption[j]),
                Some(nl),
            ]);
        }
    }
    Ok(export::render_table(
        "delta,time,alpha,alpha_adiabatic,delta_alpha,delta_alpha_adiabatic",
        &rows,
        json!({
            "pumping_rate": params.beta(),
            "narrowed_pumping_rate": params.narrowed_beta(),
            "transient_amplitude": params.kprime(),
            "zero_order": {
                "probed_ground": zero.probed_ground,
                "cycling_excited": zero.cycling_excited,
                "pump_coherence": [zero.pump_coherence.re, zero.pump_coherence.im],
            },
        }),
    ))
}

fn grid_rows(grid: &SpectrumGrid, flip_detuning: bool) -> Vec<SpectrumRow> {
    let mut rows = Vec::with_capacity(grid.delta_values.len() * grid.time_values.len());
    for (i, &d) in grid.delta_values.iter().enumerate() {
        for (j, &t) in grid.time_values.iter().enumerate() {
            rows.push(SpectrumRow {
                delta: if flip_detuning { -d } else { d },
                time: t,
                alpha_s: grid.alpha_s[i][j],
                alpha_fwm: grid.alpha_fwm.as_ref().map(|m| m[i][j]),
                delta_alpha: grid.delta_alpha.as_ref().map(|m| m[i][j]),
            });
        }
    }
    rows
}

fn report_engine_warnings(engine: &Engine) -> Vec<String> {
    let warnings: Vec<String> = engine.warnings().iter().map(|w| w.to_string()).collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    warnings
}

fn scan_to_rendered(
    engine: &Engine,
    scan_config: &ScanConfig,
    cfg: &FileConfig,
) -> Result<Rendered, CliError> {
    let warnings = report_engine_warnings(engine);
    let grid = spectra::scan(engine, scan_config).map_err(compute_err)?;
    let out = cfg.output();
    let rows = grid_rows(&grid, out.flip_detuning_axis);
    let mut details = json!({
        "delta_values": grid.delta_values,
        "time_values": grid.time_values,
        "warnings": warnings,
    });
    if grid.delta_alpha.is_some() && !grid.time_values.is_empty() {
        if let Ok(shape) = grid.difference_lineshape(grid.time_values.len() - 1) {
            details["final_difference_lineshape"] =
                serde_json::to_value(shape).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(export::render_spectrum(&rows, out.gamma_mhz, details))
}

fn run_scan(cfg: &FileConfig, common: &CommonArgs) -> Result<Rendered, CliError> {
    let engine = cfg.build_engine("scan")?;
    let sec = FileConfig::require(&cfg.scan, "scan", "scan")?;
    if sec.delta_count == 0 {
        return Err(CliError::Config("[scan]: delta_count must be at least 1".into()));
    }
    let scan_config = ScanConfig {
        deltas: linspace(sec.delta_min, sec.delta_max, sec.delta_count),
        t_final: sec.t_final,
        time_samples: sec.time_samples,
        turn_on: sec.turn_on,
        include_fwm: sec.include_fwm,
        include_linear: sec.include_linear,
        step: common.step,
    };
    scan_to_rendered(&engine, &scan_config, cfg)
}

fn run_trace(cfg: &FileConfig, common: &CommonArgs) -> Result<Rendered, CliError> {
    let engine = cfg.build_engine("trace")?;
    let sec = FileConfig::require(&cfg.trace, "trace", "trace")?;
    let scan_config = ScanConfig {
        deltas: vec![sec.delta],
        t_final: sec.t_final,
        time_samples: sec.time_samples,
        turn_on: sec.turn_on,
        include_fwm: sec.include_fwm,
        include_linear: sec.include_linear,
        step: common.step,
    };
    scan_to_rendered(&engine, &scan_config, cfg)
}

fn run_oracle_compare(cfg: &FileConfig, common: &CommonArgs) -> Result<Rendered, CliError> {
    let engine = cfg.build_engine("oracle-compare")?;
    let sec = FileConfig::require(&cfg.trace, "trace", "oracle-compare")?;
    if !matches!(sec.turn_on, TurnOnMode::Simultaneous) {
        return Err(CliError::Config(
            "[trace]: the nonperturbative reference starts both fields at t = 0; \
             set turn_on = \"simultaneous\""
                .into(),
        ));
    }
    report_engine_warnings(&engine);
    let perturbative = engine
        .evolve_first_order(
            sec.delta,
            TurnOnMode::Simultaneous,
            sec.t_final,
            sec.time_samples,
            common.step,
        )
        .map_err(compute_err)?;
    let reference = engine
        .oracle_probe_response(sec.delta, sec.t_final, sec.time_samples, common.step)
        .map_err(compute_err)?;
    let mut rows = Vec::with_capacity(perturbative.times.len());
    let mut max_dev_s: f64 = 0.0;
    let mut max_dev_fwm: f64 = 0.0;
    for (j, &t) in perturbative.times.iter().enumerate() {
        let a_s = perturbative.stationary_absorption[j];
        let a_fwm = fwm_signal(perturbative.fwm_amplitude[j], sec.delta, t);
        max_dev_s = max_dev_s.max((a_s - reference.stationary_absorption[j]).abs());
        max_dev_fwm = max_dev_fwm.max((a_fwm - reference.fwm_absorption[j]).abs());
        rows.push(vec![
            Some(t),
            Some(a_s),
            Some(reference.stationary_absorption[j]),
            Some(a_fwm),
            Some(reference.fwm_absorption[j]),
        ]);
    }
    eprintln!(
        "oracle-compare: max |stationary deviation| = {max_dev_s:.3e}, \
         max |wave-mixing deviation| = {max_dev_fwm:.3e}"
    );
    Ok(export::render_table(
        "time,alpha_S,alpha_S_reference,alpha_FWM,alpha_FWM_reference",
        &rows,
        json!({
            "delta": sec.delta,
            "max_stationary_deviation": max_dev_s,
            "max_wave_mixing_deviation": max_dev_fwm,
        }),
    ))
}
