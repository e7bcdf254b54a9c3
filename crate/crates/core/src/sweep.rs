//! Robustness scans over amplitude error `ε` and the path family index `n`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_schrodinger, EvolutionOptions, DEFAULT_DT_NS};
use crate::error::{Error, Result};
use crate::metrics::{SingleQubitRun, GATE_FIDELITY_SAMPLES};
use crate::path::{bright_dark_basis, synthesize_at_cap, ControlWaveform, HolonomySpec, PathSpec};
use crate::transmon::{mhz, single_qubit_hamiltonian, DriveModel, TransmonParams};

/// `Ω → (1 + ε)Ω` with phases untouched.
pub fn apply_systematic_error(waveform: &ControlWaveform, epsilon: f64) -> ControlWaveform {
    waveform.scaled(1.0 + epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Mean,
    WorstCase,
}

impl Criterion {
    fn score(self, values: &[f64]) -> f64 {
        match self {
            Criterion::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Criterion::WorstCase => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Inclusive uniform grid `min..=max` with `steps` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for EpsilonRange {
    fn default() -> Self {
        Self { min: -0.1, max: 0.1, steps: 21 }
    }
}

impl EpsilonRange {
    pub fn values(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub gate: HolonomySpec,
    pub epsilon: EpsilonRange,
    pub n_values: Vec<f64>,
    pub decoherence: bool,
    pub params: TransmonParams,
    pub model: DriveModel,
    pub omega_max: f64,
    pub dt: f64,
    pub criterion: Criterion,
    pub gate_samples: usize,
}

impl Default for SweepSpec {
    /// NOT gate, `n ∈ {0, 0.1, …, 1}`, 21 errors in `[−0.1, 0.1]`, leaky
    /// model with decoherence, `Ω_max = 2π×16 MHz`.
    fn default() -> Self {
        Self {
            gate: HolonomySpec::not_gate(),
            epsilon: EpsilonRange::default(),
            n_values: (0..=10).map(|i| i as f64 / 10.0).collect(),
            decoherence: true,
            params: TransmonParams::default(),
            model: DriveModel::Leaky4,
            omega_max: mhz(16.0),
            dt: DEFAULT_DT_NS,
            criterion: Criterion::Mean,
            gate_samples: GATE_FIDELITY_SAMPLES,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let e = &self.epsilon;
        if e.steps < 2 {
            return Err(Error::InvalidParameter(format!("epsilon grid needs at least 2 steps, got {}", e.steps)));
        }
        if !(-0.5..=0.5).contains(&e.min) || !(-0.5..=0.5).contains(&e.max) || e.min > e.max {
            return Err(Error::InvalidParameter(format!("epsilon range [{}, {}] outside [-0.5, 0.5]", e.min, e.max)));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|n| !(*n >= 0.0)) {
            return Err(Error::InvalidParameter("n values must be non-empty and non-negative".into()));
        }
        if !(self.omega_max > 0.0) || !(self.dt > 0.0) || self.gate_samples < 2 {
            return Err(Error::InvalidParameter("omega_max, dt and gate_samples must be positive".into()));
        }
        self.params.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub epsilon: f64,
    /// `None` when the cell's simulation failed.
    pub gate_fidelity: Option<f64>,
    pub tau_ns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `(n*, criterion value)` over the `n` with no failed cells.
    pub optimum: Option<(f64, f64)>,
    pub criterion: Criterion,
}

impl SweepResult {
    /// Criterion value per `n`, skipping `n` with failed cells.
    pub fn scores(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < self.rows.len() {
            let n = self.rows[i].n;
            let block: Vec<&SweepRow> = self.rows[i..].iter().take_while(|r| r.n == n).collect();
            i += block.len();
            let values: Option<Vec<f64>> = block.iter().map(|r| r.gate_fidelity).collect();
            if let Some(values) = values {
                out.push((n, self.criterion.score(&values)));
            }
        }
        out
    }

    pub fn fidelity(&self, n: f64, epsilon: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.n - n).abs() < 1e-12 && (r.epsilon - epsilon).abs() < 1e-12)
            .and_then(|r| r.gate_fidelity)
    }

    /// CSV `n,epsilon,gate_fidelity,tau_ns`; failed cells read `nan`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,epsilon,gate_fidelity,tau_ns")?;
        for r in &self.rows {
            let f = r.gate_fidelity.map_or("nan".to_string(), |f| format!("{f:.16e}"));
            writeln!(out, "{:.16e},{:.16e},{f},{:.16e}", r.n, r.epsilon, r.tau_ns)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        let failed: Vec<_> = self.rows.iter().filter(|r| r.gate_fidelity.is_none()).collect();
        let v = serde_json::json!({
            "optimal_n": self.optimum.map(|o| o.0),
            "criterion": self.criterion,
            "criterion_value": self.optimum.map(|o| o.1),
            "scores": self.scores().iter().map(|(n, s)| serde_json::json!({"n": n, "score": s})).collect::<Vec<_>>(),
            "failed_cells": failed,
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn run_cell(spec: &SweepSpec, waveform: &ControlWaveform, epsilon: f64) -> Result<f64> {
    let wf = apply_systematic_error(waveform, epsilon);
    let run = SingleQubitRun::new(spec.gate, &wf, &spec.params, spec.model, spec.decoherence, spec.dt)?;
    run.gate_fidelity_channel(spec.gate_samples)
}

/// Gate fidelity over the `(n, ε)` grid, each path rescaled so its peak is `Ω_max`.
pub fn robustness_scan(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let epsilons = spec.epsilon.values();
    let paths: Vec<Result<(PathSpec, ControlWaveform)>> =
        spec.n_values.par_iter().map(|&n| synthesize_at_cap(spec.gate, n, spec.omega_max)).collect();
    let cells: Vec<(usize, f64)> =
        (0..spec.n_values.len()).flat_map(|i| epsilons.iter().map(move |&e| (i, e))).collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(i, epsilon)| {
            let n = spec.n_values[i];
            match &paths[i] {
                Ok((path, wf)) => {
                    let outcome = run_cell(spec, wf, epsilon);
                    if let Err(e) = &outcome {
                        log::warn!("sweep cell n={n} ε={epsilon} failed: {e}");
                    }
                    SweepRow {
                        n,
                        epsilon,
                        tau_ns: path.tau_ns(),
                        error: outcome.as_ref().err().map(|e| e.to_string()),
                        gate_fidelity: outcome.ok(),
                    }
                }
                Err(e) => SweepRow { n, epsilon, gate_fidelity: None, tau_ns: f64::NAN, error: Some(e.to_string()) },
            }
        })
        .collect();
    let mut result = SweepResult { rows, optimum: None, criterion: spec.criterion };
    result.optimum = result.scores().into_iter().fold(None, |best: Option<(f64, f64)>, (n, s)| match best {
        Some((_, b)) if b >= s => best,
        _ => Some((n, s)),
    });
    Ok(result)
}

/// `P = |⟨Ψ(τ/2)|Ψ_ε(τ/2)⟩|²` starting from `|b⟩` in the ideal three-level model.
pub fn excitation_profile(path: &PathSpec, waveform: &ControlWaveform, epsilon: f64, dt: f64) -> Result<f64> {
    let spec = path.holonomy();
    let params = TransmonParams::default().noiseless();
    let (bright, _) = bright_dark_basis(spec.theta, spec.phi);
    let half = 0.5 * path.tau_ns();
    let opts = EvolutionOptions { max_samples: 2, ..EvolutionOptions::with_dt(dt) };
    let exact = single_qubit_hamiltonian(waveform, spec.theta, &params, DriveModel::Ideal3)?;
    let perturbed = exact.with_waveform(apply_systematic_error(waveform, epsilon));
    let a = evolve_schrodinger(&exact, &bright, 0.0, half, &opts)?.final_state;
    let b = evolve_schrodinger(&perturbed, &bright, 0.0, half, &opts)?.final_state;
    Ok(a.inner(&b)?.norm_sqr())
}
