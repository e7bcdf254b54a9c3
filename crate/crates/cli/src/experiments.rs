//! Experiment runners: each writes its CSV files into the run directory and
//! returns the headline values plus the body of `report.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use holonomy::metrics::SingleQubitRun;
use holonomy::path::{
    error_sensitivity_qs, inverse_engineer, qs_closed_form, standard_path, synthesize_at_cap, ControlWaveform, HolonomySpec, PathSpec,
};
use holonomy::sweep::{robustness_scan, SweepResult, SweepSpec};
use holonomy::transmon::{drive_grid, effective_couplings_closed_form, mhz, stark_compensation_curve, TwoQubitDeviceParams};
use holonomy::two_qubit::{s2_amplitudes, schedule_two_qubit_drives, simulate_two_qubit_gate, TwoQubitRunOptions, TwoQubitSetup};

use crate::config::{Experiment, FidelityMethod, Frequency, NamedGate, SingleQubitSetup, TwoQubitPlan};
use crate::error::CliError;

/// Waveform samples per path segment in `waveform*.csv`.
const WAVEFORM_SAMPLES: usize = 500;
/// Rows in `schedule_*.csv`.
const SCHEDULE_SAMPLES: usize = 1001;

#[derive(Clone, Debug, PartialEq)]
pub struct Headline {
    pub label: String,
    pub value: f64,
}

impl Headline {
    fn new(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value }
    }
}

pub struct RunOutput {
    pub headlines: Vec<Headline>,
    pub report: Value,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

pub fn run(experiment: &Experiment, dir: &Path) -> Result<RunOutput, CliError> {
    match experiment {
        Experiment::SingleGate(setup) => single_gate(setup, dir),
        Experiment::GateFidelity { setup, samples, method, dynamics_points } => {
            gate_fidelity(setup, *samples, *method, *dynamics_points, dir)
        }
        Experiment::RobustnessScan { spec, gammas } => match gammas {
            None => scan(spec, dir),
            Some(g) => scan_over_gamma(spec, g, dir),
        },
        Experiment::TwoQubit(plan) => two_qubit(plan, dir),
        Experiment::StarkCurve { device, max_drive, points } => stark_curve(device, *max_drive, *points, dir),
        Experiment::QsTable { n_values } => qs_table(n_values, dir),
    }
}

fn waveform(setup: &SingleQubitSetup, spec: HolonomySpec) -> Result<ControlWaveform, CliError> {
    Ok(match setup.tau_ns {
        Some(tau) => inverse_engineer(&standard_path(tau, spec, setup.n)?, setup.omega_max)?,
        None => synthesize_at_cap(spec, setup.n, setup.omega_max)?.1,
    })
}

fn gate_params(setup: &SingleQubitSetup, gate: &NamedGate, wf: &ControlWaveform) -> Value {
    json!({
        "theta": gate.spec.theta,
        "phi": gate.spec.phi,
        "gamma": gate.spec.gamma,
        "n": setup.n,
        "tau_ns": wf.tau_ns(),
        "omega_max_rad_per_ns": setup.omega_max,
        "model": setup.model.name(),
        "decoherence": setup.decoherence,
        "anharmonicity_rad_per_ns": setup.params.anharmonicity,
        "decay_rate_rad_per_ns": setup.params.decay_rate,
        "dephasing_rate_rad_per_ns": setup.params.dephasing_rate,
        "dt_ns": setup.dt,
    })
}

fn runner(setup: &SingleQubitSetup, gate: &NamedGate, wf: &ControlWaveform) -> Result<SingleQubitRun, CliError> {
    Ok(SingleQubitRun::new(gate.spec, wf, &setup.params, setup.model, setup.decoherence, setup.dt)?)
}

fn single_gate(setup: &SingleQubitSetup, dir: &Path) -> Result<RunOutput, CliError> {
    let gate = &setup.gates[0];
    let wf = waveform(setup, gate.spec)?;
    let mut out = create(dir, "waveform.csv")?;
    wf.write_csv(&mut out, WAVEFORM_SAMPLES)?;
    finish(out)?;
    let report = runner(setup, gate, &wf)?.report(&gate.label, None, gate_params(setup, gate, &wf))?;
    let mut out = create(dir, "trajectory.csv")?;
    holonomy::metrics::write_single_qubit_trajectory(&report.populations, &mut out)?;
    finish(out)?;
    Ok(RunOutput {
        headlines: vec![Headline::new(&gate.label, report.state_fidelity)],
        report: json!({ "experiment": "single-gate", "results": [report] }),
    })
}

fn gate_fidelity(
    setup: &SingleQubitSetup,
    samples: usize,
    method: FidelityMethod,
    dynamics_points: usize,
    dir: &Path,
) -> Result<RunOutput, CliError> {
    let mut headlines = Vec::new();
    let mut results = Vec::new();
    for gate in &setup.gates {
        let wf = waveform(setup, gate.spec)?;
        let mut out = create(dir, &format!("waveform_{}.csv", gate.label))?;
        wf.write_csv(&mut out, WAVEFORM_SAMPLES)?;
        finish(out)?;
        let run = runner(setup, gate, &wf)?;
        let mut report = run.report(&gate.label, None, gate_params(setup, gate, &wf))?;
        let fg = match method {
            FidelityMethod::Direct => run.gate_fidelity(samples)?,
            FidelityMethod::Channel => run.gate_fidelity_channel(samples)?,
        };
        report.gate_fidelity = Some(fg);
        let curve = run.gate_fidelity_dynamics(dynamics_points, samples)?;
        let mut out = create(dir, &format!("gate_fidelity_{}.csv", gate.label))?;
        writeln!(out, "t_ns,gate_fidelity")?;
        for (t, f) in curve {
            writeln!(out, "{t:.16e},{f:.16e}")?;
        }
        finish(out)?;
        headlines.push(Headline::new(&gate.label, fg));
        results.push(json!({
            "method": match method { FidelityMethod::Direct => "direct", FidelityMethod::Channel => "channel" },
            "samples": samples,
            "report": report,
        }));
    }
    Ok(RunOutput { headlines, report: json!({ "experiment": "gate-fidelity", "results": results }) })
}

fn fmt_n(n: f64) -> String {
    format!("n={n}")
}

fn sweep_headlines(result: &SweepResult, suffix: &str) -> Vec<Headline> {
    let mut h: Vec<Headline> = result.scores().iter().map(|(n, s)| Headline::new(format!("{}{suffix}", fmt_n(*n)), *s)).collect();
    if let (Some((n, _)), true) = (result.optimum, result.scores().len() > 1) {
        h.push(Headline::new(format!("optimal_n{suffix}"), n));
    }
    h
}

fn scan(spec: &SweepSpec, dir: &Path) -> Result<RunOutput, CliError> {
    let result = robustness_scan(spec)?;
    let mut out = create(dir, "sweep.csv")?;
    result.write_csv(&mut out)?;
    finish(out)?;
    let summary: Value = serde_json::from_str(&result.summary_json()?).map_err(|e| CliError::Simulation(e.to_string()))?;
    Ok(RunOutput {
        headlines: sweep_headlines(&result, ""),
        report: json!({ "experiment": "robustness-scan", "spec": spec, "summary": summary }),
    })
}

fn scan_over_gamma(spec: &SweepSpec, gammas: &[Frequency], dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = create(dir, "sweep.csv")?;
    writeln!(out, "gamma_rad_per_ns,n,epsilon,gate_fidelity,tau_ns")?;
    let mut headlines = Vec::new();
    let mut summaries = Vec::new();
    for gamma in gammas {
        let rate = gamma.rad_per_ns;
        let spec = SweepSpec {
            decoherence: rate > 0.0,
            params: holonomy::transmon::TransmonParams { decay_rate: rate, dephasing_rate: rate, ..spec.params },
            ..spec.clone()
        };
        let result = robustness_scan(&spec)?;
        for row in &result.rows {
            let f = row.gate_fidelity.map_or_else(|| "nan".to_string(), |f| format!("{f:.16e}"));
            writeln!(out, "{rate:.16e},{},{:.16e},{f},{:.16e}", row.n, row.epsilon, row.tau_ns)?;
        }
        headlines.extend(sweep_headlines(&result, &format!("@{}", gamma.text)));
        let summary: Value = serde_json::from_str(&result.summary_json()?).map_err(|e| CliError::Simulation(e.to_string()))?;
        summaries.push(json!({ "gamma": gamma.text, "gamma_rad_per_ns": rate, "summary": summary }));
    }
    finish(out)?;
    Ok(RunOutput { headlines, report: json!({ "experiment": "robustness-scan", "spec": spec, "per_gamma": summaries }) })
}

fn two_qubit(plan: &TwoQubitPlan, dir: &Path) -> Result<RunOutput, CliError> {
    let setup = TwoQubitSetup::new(plan.device)?;
    let mut out = create(dir, "stark_curve.csv")?;
    setup.stark.write_csv(&mut out)?;
    finish(out)?;
    for &comp in &plan.compensation {
        let schedule = schedule_two_qubit_drives(&plan.gate, &setup.stark, comp)?;
        let mut out = create(dir, &format!("schedule_{}.csv", on_off(comp)))?;
        schedule.write_csv(&mut out, SCHEDULE_SAMPLES)?;
        finish(out)?;
    }
    let jobs: Vec<(String, bool)> =
        plan.initial.iter().flat_map(|i| plan.compensation.iter().map(move |c| (i.clone(), *c))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|(initial, comp)| {
            let options = TwoQubitRunOptions { compensation: *comp, decoherence: plan.decoherence, dt: plan.dt };
            simulate_two_qubit_gate(&setup, &plan.gate, &s2_amplitudes(initial)?, &options)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut headlines = Vec::new();
    let mut results = Vec::new();
    for ((initial, comp), outcome) in jobs.iter().zip(&outcomes) {
        let label = format!("{initial}/{}", on_off(*comp));
        let mut out = create(dir, &format!("trajectory_{initial}_{}.csv", on_off(*comp)))?;
        outcome.write_trajectory_csv(&mut out)?;
        finish(out)?;
        headlines.push(Headline::new(&label, outcome.fidelity));
        let params = json!({ "gate": plan.gate, "static_shift_rad_per_ns": setup.stark.static_shift() });
        results.push(json!({ "label": label, "report": outcome.report(initial, params) }));
    }
    Ok(RunOutput { headlines, report: json!({ "experiment": "two-qubit", "device": plan.device, "results": results }) })
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn stark_curve(device: &TwoQubitDeviceParams, max_drive: f64, points: usize, dir: &Path) -> Result<RunOutput, CliError> {
    let curve = stark_compensation_curve(&device.noiseless(), &drive_grid(max_drive, points))?;
    let (g, delta, alpha) = (device.couplings[0], device.detuning, device.qubits[0].anharmonicity);
    let mut out = create(dir, "stark_curve.csv")?;
    writeln!(out, "omega_drive_rad_per_ns,delta_s_rad_per_ns,g_eff_rad_per_ns,g_eff_closed_form_rad_per_ns")?;
    for s in curve.samples() {
        let closed = effective_couplings_closed_form(g, s.omega_drive, delta, alpha)?.g_eff;
        writeln!(out, "{:.16e},{:.16e},{:.16e},{closed:.16e}", s.omega_drive, s.delta_s, s.g_eff)?;
    }
    finish(out)?;
    let mhz1 = mhz(1.0);
    Ok(RunOutput {
        headlines: vec![Headline::new("max_coupling_mhz", curve.max_coupling() / mhz1)],
        report: json!({
            "experiment": "stark-curve",
            "device": device,
            "static_shift_rad_per_ns": curve.static_shift(),
            "max_drive_rad_per_ns": curve.max_drive(),
            "max_coupling_rad_per_ns": curve.max_coupling(),
        }),
    })
}

fn qs_table(n_values: &[f64], dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = create(dir, "qs.csv")?;
    writeln!(out, "n,qs,qs_closed_form")?;
    let mut headlines = Vec::new();
    let mut rows = Vec::new();
    for &n in n_values {
        // q_s does not depend on the duration; any τ gives the same value.
        let qs = error_sensitivity_qs(&PathSpec::family(50.0, HolonomySpec::not_gate(), n)?)?;
        let closed = qs_closed_form(n);
        writeln!(out, "{n},{qs:.16e},{closed:.16e}")?;
        headlines.push(Headline::new(fmt_n(n), qs));
        rows.push(json!({ "n": n, "qs": qs, "qs_closed_form": closed }));
    }
    finish(out)?;
    Ok(RunOutput { headlines, report: json!({ "experiment": "qs-table", "rows": rows }) })
}
