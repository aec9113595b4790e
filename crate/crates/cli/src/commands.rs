use serde::Serialize;

use qst_core::analysis::{as_real, crossover, fit_power, free_exponent_fit, FreeExponentFit, PowerLawFit};
use qst_core::chain::{front_trajectory, intrinsic_error_curve, validate_front_vs_full, ChainSchedule, TransferStep};
use qst_core::model::{rwa_residual, QutritSystem, Waveform, COUPLER_MAX_MHZ};
use qst_core::noise::{decoherence_channel, decoherence_error_curve};
use qst_core::pulse::{analytic_params, TrapezoidPulse};
use qst_core::transfer::{
    evolve_transfer, optimize_pulse, population_trace, qst_fidelity, transfer_report, OptimizerOptions, TransferReport,
};

use crate::config::ExperimentConfig;
use crate::output::{csv, json, sidecar_name, write_atomic, Cell};
use crate::CliError;

/// How the transfer pulse is chosen for commands that need one.
#[derive(Debug, Clone, Copy, Default)]
pub struct PulseChoice {
    pub g_max: Option<f64>,
    pub t_qst: Option<f64>,
    pub analytic: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulseInfo {
    pub g_max_mhz: f64,
    pub t_qst_ns: f64,
    pub t_ramp_ns: f64,
    pub source: &'static str,
}

impl PulseInfo {
    fn pulse(&self) -> Result<TrapezoidPulse, CliError> {
        Ok(TrapezoidPulse::new(self.g_max_mhz, self.t_qst_ns, self.t_ramp_ns)?)
    }
}

fn check_cap(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.coupling_cap > COUPLER_MAX_MHZ {
        return Err(CliError::Config(format!(
            "coupling_cap {} MHz exceeds the model bound of {COUPLER_MAX_MHZ} MHz",
            cfg.coupling_cap
        )));
    }
    Ok(())
}

fn optimizer_options(cfg: &ExperimentConfig) -> OptimizerOptions {
    OptimizerOptions { dt: cfg.dt, ..OptimizerOptions::default() }
}

fn analytic_seed(cfg: &ExperimentConfig) -> Result<PulseInfo, CliError> {
    let a = analytic_params(cfg.eta, cfg.t_ramp, 3)?;
    if a.exceeds_cap(cfg.coupling_cap) {
        return Err(CliError::Config(format!(
            "analytic g_max = {} MHz exceeds the {} MHz coupling cap at eta = {} MHz",
            a.g_max, cfg.coupling_cap, cfg.eta
        )));
    }
    Ok(PulseInfo { g_max_mhz: a.g_max, t_qst_ns: a.t_qst, t_ramp_ns: cfg.t_ramp, source: "analytic" })
}

pub fn resolve_pulse(cfg: &ExperimentConfig, choice: PulseChoice) -> Result<PulseInfo, CliError> {
    check_cap(cfg)?;
    match (choice.g_max, choice.t_qst) {
        (Some(g), Some(t)) => {
            if g > cfg.coupling_cap {
                return Err(CliError::Config(format!("g_max {g} MHz exceeds the {} MHz coupling cap", cfg.coupling_cap)));
            }
            let info = PulseInfo { g_max_mhz: g, t_qst_ns: t, t_ramp_ns: cfg.t_ramp, source: "explicit" };
            info.pulse()?;
            Ok(info)
        }
        (None, None) => {
            let seed = analytic_seed(cfg)?;
            if choice.analytic {
                return Ok(seed);
            }
            let opt = optimize_pulse(cfg.eta, cfg.t_ramp, (seed.g_max_mhz, seed.t_qst_ns), &optimizer_options(cfg))?;
            if !opt.converged {
                return Err(CliError::Convergence(format!(
                    "pulse optimizer stopped after {} sweeps without converging (best fidelity {})",
                    opt.sweeps, opt.best.fidelity
                )));
            }
            Ok(PulseInfo { g_max_mhz: opt.best.g_max, t_qst_ns: opt.best.t_qst, t_ramp_ns: cfg.t_ramp, source: "optimized" })
        }
        _ => Err(CliError::Config("--g-max-mhz and --t-qst-ns must be given together".into())),
    }
}

#[derive(Serialize)]
struct AnalyticEntry {
    g_max_mhz: f64,
    t_qst_ns: f64,
    exceeds_coupling_cap: bool,
    simulation: Option<TransferReport>,
}

#[derive(Serialize)]
struct OptimizedEntry {
    #[serde(flatten)]
    report: TransferReport,
    evaluations: usize,
    sweeps: usize,
    converged: bool,
}

#[derive(Serialize)]
struct Table1<'a> {
    config: &'a ExperimentConfig,
    analytic: AnalyticEntry,
    optimized: Option<OptimizedEntry>,
}

pub fn table1(cfg: &ExperimentConfig, analytic_only: bool) -> Result<(), CliError> {
    check_cap(cfg)?;
    let a = analytic_params(cfg.eta, cfg.t_ramp, 3)?;
    let exceeds = a.exceeds_cap(cfg.coupling_cap);
    let mut table = Table1 {
        config: cfg,
        analytic: AnalyticEntry { g_max_mhz: a.g_max, t_qst_ns: a.t_qst, exceeds_coupling_cap: exceeds, simulation: None },
        optimized: None,
    };
    let mut failure = None;
    if exceeds {
        log::warn!("analytic g_max = {} MHz exceeds the {} MHz coupling cap; skipping simulation", a.g_max, cfg.coupling_cap);
    } else {
        table.analytic.simulation = Some(transfer_report(cfg.eta, cfg.t_ramp, a.g_max, a.t_qst, cfg.dt)?);
        if !analytic_only {
            let opt = optimize_pulse(cfg.eta, cfg.t_ramp, (a.g_max, a.t_qst), &optimizer_options(cfg))?;
            if !opt.converged {
                failure = Some(CliError::Convergence(format!(
                    "pulse optimizer stopped after {} sweeps without converging",
                    opt.sweeps
                )));
            }
            table.optimized =
                Some(OptimizedEntry { report: opt.best, evaluations: opt.evaluations, sweeps: opt.sweeps, converged: opt.converged });
        }
    }
    write_atomic(&cfg.output_dir, "table1.json", &json(&table)?)?;
    failure.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    config: &'a ExperimentConfig,
    pulse: PulseInfo,
    #[serde(flatten)]
    extra: T,
}

fn write_csv_with_sidecar<T: Serialize>(
    cfg: &ExperimentConfig,
    name: &str,
    body: &str,
    pulse: PulseInfo,
    extra: T,
) -> Result<(), CliError> {
    write_atomic(&cfg.output_dir, name, body)?;
    write_atomic(&cfg.output_dir, &sidecar_name(name), &json(&Sidecar { config: cfg, pulse, extra })?)?;
    Ok(())
}

#[derive(Serialize)]
struct SampleSpacing {
    dt_out_ns: f64,
}

pub fn populations(cfg: &ExperimentConfig, choice: PulseChoice, dt_out: f64) -> Result<(), CliError> {
    if !(dt_out >= cfg.dt) {
        return Err(CliError::Config(format!("dt_out {dt_out} ns must be at least dt = {} ns", cfg.dt)));
    }
    let info = resolve_pulse(cfg, choice)?;
    let trace = population_trace(&info.pulse()?, cfg.eta, cfg.dt, dt_out)?;
    let body = csv(
        &["t_ns", "p01", "p02"],
        trace.iter().map(|s| vec![Cell::Real(s.t), Cell::Real(s.p01), Cell::Real(s.p02)]),
    );
    write_csv_with_sidecar(cfg, "fig2b.csv", &body, info, SampleSpacing { dt_out_ns: dt_out })
}

#[derive(Serialize)]
struct ScheduleMeta {
    n_qutrits: usize,
    dt_out_ns: f64,
    total_duration_ns: f64,
}

pub fn schedule(cfg: &ExperimentConfig, choice: PulseChoice, n_qutrits: usize, dt_out: f64) -> Result<(), CliError> {
    if n_qutrits < 2 {
        return Err(CliError::Config(format!("a chain needs at least 2 qutrits, got {n_qutrits}")));
    }
    if !(dt_out > 0.0) {
        return Err(CliError::Config(format!("dt_out must be positive, got {dt_out}")));
    }
    let info = resolve_pulse(cfg, choice)?;
    let sched = ChainSchedule::for_chain(info.pulse()?, n_qutrits)?;
    let mut header = vec!["t_ns".to_string()];
    header.extend((1..n_qutrits).map(|k| format!("g{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = sched.samples(dt_out)?.into_iter().map(|(t, gs)| {
        let mut row = vec![Cell::Real(t)];
        row.extend(gs.into_iter().map(Cell::Real));
        row
    });
    let body = csv(&header, rows);
    let meta = ScheduleMeta { n_qutrits, dt_out_ns: dt_out, total_duration_ns: sched.total_duration() };
    write_csv_with_sidecar(cfg, "fig3.csv", &body, info, meta)
}

#[derive(Serialize)]
struct FitEntry {
    #[serde(flatten)]
    fit: PowerLawFit,
    k_star: Option<f64>,
}

#[derive(Serialize)]
struct Diagnostics {
    intrinsic_free_fit: FreeExponentFit,
    decoherence_free_fit: FreeExponentFit,
    intrinsic_error_first_step_renormalized: f64,
}

#[derive(Serialize)]
struct Fits<'a> {
    config: &'a ExperimentConfig,
    pulse: PulseInfo,
    intrinsic: FitEntry,
    decoherence: FitEntry,
    k_star: Option<f64>,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct StepCount {
    n_steps: usize,
}

pub fn errors(cfg: &ExperimentConfig, choice: PulseChoice) -> Result<(), CliError> {
    let info = resolve_pulse(cfg, choice)?;
    let step = TransferStep::new(info.pulse()?, cfg.eta, cfg.dt)?;
    let intrinsic = intrinsic_error_curve(&step, cfg.n_steps, true)?;
    let decoherence = decoherence_error_curve(cfg.n_steps, info.t_qst_ns, cfg.t1, cfg.t2)?;

    let quartic = fit_power(&as_real(&intrinsic), 4)?;
    let linear = fit_power(&as_real(&decoherence), 1)?;
    let k_star = crossover(&quartic, &linear).ok();
    let renormalized = front_trajectory(&step, 1, true)?[0].normalized_infidelity();
    let fits = Fits {
        config: cfg,
        pulse: info,
        intrinsic: FitEntry { fit: quartic, k_star },
        decoherence: FitEntry { fit: linear, k_star },
        k_star,
        diagnostics: Diagnostics {
            intrinsic_free_fit: free_exponent_fit(&as_real(&intrinsic))?,
            decoherence_free_fit: free_exponent_fit(&as_real(&decoherence))?,
            intrinsic_error_first_step_renormalized: renormalized,
        },
    };

    let body = csv(
        &["k", "error_intrinsic", "error_decoherence"],
        intrinsic
            .iter()
            .zip(&decoherence)
            .map(|(&(k, ei), &(_, ed))| vec![Cell::Int(k), Cell::Real(ei), Cell::Real(ed)]),
    );
    write_csv_with_sidecar(cfg, "fig4.csv", &body, info, StepCount { n_steps: cfg.n_steps })?;
    write_atomic(&cfg.output_dir, "fits.json", &json(&fits)?)?;
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub const FRONT_TOL: f64 = 1e-10;
pub const KRAUS_TOL: f64 = 1e-12;
pub const CHOI_TOL: f64 = -1e-10;
pub const DT_HALVING_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-9;
/// Clock frequencies (MHz) for the rotating-wave check.
pub const RWA_CLOCKS_MHZ: [f64; 3] = [2000.0, 4000.0, 8000.0];
/// The counter-rotating terms need steps well below `1/(2ω)`.
const RWA_MAX_DT: f64 = 1e-3;

fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<Check>, CliError> {
    let info = resolve_pulse(cfg, PulseChoice { analytic: true, ..Default::default() })?;
    let pulse = info.pulse()?;
    let mut checks = Vec::new();

    let step = TransferStep::new(pulse, cfg.eta, cfg.dt)?;
    let unitarity = step.propagator.unitarity_defect();
    checks.push(Check { name: "unitarity", pass: unitarity < UNITARITY_TOL, detail: format!("{unitarity:.2e}") });

    for n in 2..=4 {
        let diff = validate_front_vs_full(n, &step, true)?;
        checks.push(Check {
            name: ["front_vs_full_n2", "front_vs_full_n3", "front_vs_full_n4"][n - 2],
            pass: diff < FRONT_TOL,
            detail: format!("{diff:.2e}"),
        });
    }

    let rwa_dt = cfg.dt.min(RWA_MAX_DT);
    let residuals = RWA_CLOCKS_MHZ
        .iter()
        .map(|&w| {
            let sys = QutritSystem::resonant_chain(cfg.eta, vec![Waveform::Trapezoid(pulse)])?.with_clock(w);
            rwa_residual(&sys, (0.0, pulse.t_end()), rwa_dt)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check {
        name: "rwa_residual_sweep",
        pass: decreasing,
        detail: RWA_CLOCKS_MHZ
            .iter()
            .zip(&residuals)
            .map(|(w, r)| format!("{} GHz: {r:.3e}", w / 1000.0))
            .collect::<Vec<_>>()
            .join(", "),
    });

    let mut kraus = 0.0f64;
    let mut choi = f64::INFINITY;
    for t in [info.t_qst_ns, cfg.n_steps as f64 * info.t_qst_ns] {
        let ch = decoherence_channel(t, cfg.t1, cfg.t2)?;
        kraus = kraus.max(ch.completeness_defect());
        choi = choi.min(ch.choi_min_eigenvalue()?);
    }
    checks.push(Check {
        name: "kraus_completeness",
        pass: kraus < KRAUS_TOL && choi >= CHOI_TOL,
        detail: format!("defect {kraus:.2e}, min Choi eigenvalue {choi:.2e}"),
    });

    let f = qst_fidelity(&step.propagator)?;
    let f_half = qst_fidelity(&evolve_transfer(&pulse, cfg.eta, cfg.dt / 2.0)?)?;
    let change = (f - f_half).abs();
    checks.push(Check {
        name: "dt_halving",
        pass: change < DT_HALVING_TOL,
        detail: format!("fidelity {f:.12} vs {f_half:.12} at dt/2, change {change:.2e}"),
    });
    Ok(checks)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let checks = run_checks(cfg)?;
    let mut failed = Vec::new();
    for c in &checks {
        println!("check {}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
        if !c.pass {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("failed checks: {}", failed.join(", "))))
    }
}
