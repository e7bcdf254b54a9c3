//! TOML experiment configuration.
//!
//! Every frequency is a string with an explicit unit: `"16 MHz"`, `"5 kHz"`,
//! `"1 GHz"` (all read as `2π × f`) or `"0.1 rad/ns"`. A bare number is
//! rejected. Anything not given falls back to the library defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use holonomy::path::HolonomySpec;
use holonomy::sweep::{Criterion, EpsilonRange, SweepSpec};
use holonomy::transmon::{DriveModel, TransmonParams, TwoQubitDeviceParams};
use holonomy::two_qubit::{TwoQubitGateSpec, S2_LABELS};

use crate::error::CliError;

/// A frequency in rad/ns, remembering how it was written.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequency {
    pub text: String,
    pub rad_per_ns: f64,
}

impl Frequency {
    pub fn parse(text: &str) -> Result<Self, String> {
        let trimmed = text.trim();
        let split = trimmed
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| format!("frequency {text:?} has no unit; use Hz, kHz, MHz, GHz or rad/ns"))?;
        let (number, unit) = trimmed.split_at(split);
        let value: f64 = number.trim().parse().map_err(|_| format!("frequency {text:?} does not start with a number"))?;
        let scale = match unit.trim() {
            "Hz" => 2.0 * PI * 1e-9,
            "kHz" => 2.0 * PI * 1e-6,
            "MHz" => 2.0 * PI * 1e-3,
            "GHz" => 2.0 * PI,
            "rad/ns" => 1.0,
            "rad/us" => 1e-3,
            other => return Err(format!("unknown frequency unit {other:?} in {text:?}")),
        };
        if !value.is_finite() {
            return Err(format!("frequency {text:?} is not finite"));
        }
        Ok(Self { text: trimmed.to_string(), rad_per_ns: value * scale })
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Frequency;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a frequency string with a unit, such as \"16 MHz\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Frequency, E> {
                Frequency::parse(v).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Frequency, E> {
                Err(E::custom(format!("frequency {v} has no unit; write it as a string such as \"{v} MHz\"")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Frequency, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V)
    }
}

/// One name or a list of names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Names {
    One(String),
    Many(Vec<String>),
}

impl Names {
    pub fn to_vec(&self) -> Vec<String> {
        match self {
            Names::One(s) => vec![s.clone()],
            Names::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Option<String>,
    pub device: Option<DeviceSection>,
    pub gate: Option<GateSection>,
    pub fidelity: Option<FidelitySection>,
    pub sweep: Option<SweepSection>,
    pub two_qubit: Option<TwoQubitSection>,
    pub stark: Option<StarkSection>,
    pub qs: Option<QsSection>,
    pub output: Option<OutputSection>,
    pub assert: Option<AssertSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// `ideal3` or `leaky4`.
    pub model: Option<String>,
    pub anharmonicity: Option<Frequency>,
    pub decay_rate: Option<Frequency>,
    pub dephasing_rate: Option<Frequency>,
    pub decoherence: Option<bool>,
    pub dt_ns: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    /// `not`, `hadamard`, or a list of them; otherwise `theta`, `phi`, `gamma`.
    pub name: Option<Names>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<f64>,
    pub omega_max: Option<Frequency>,
    /// Fixed duration; when absent the shortest duration under `omega_max` is used.
    pub tau_ns: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySection {
    pub samples: Option<usize>,
    /// `direct` (one run per input) or `channel` (four probe runs).
    pub method: Option<String>,
    /// Number of intervals in the recorded `F^G(t)` curve.
    pub dynamics_points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_values: Option<Vec<f64>>,
    pub epsilon_min: Option<f64>,
    pub epsilon_max: Option<f64>,
    pub epsilon_steps: Option<usize>,
    /// `mean` or `worst-case`.
    pub criterion: Option<String>,
    /// Decoherence rates `Γ₁ = Γ₂` to scan; overrides the device rates.
    pub gamma: Option<Vec<Frequency>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitSection {
    pub detuning: Option<Frequency>,
    pub coupling: Option<Frequency>,
    pub auxiliary_anharmonicity: Option<Frequency>,
    pub vartheta: Option<f64>,
    pub gamma: Option<f64>,
    pub phi: Option<f64>,
    pub tau_ns: Option<f64>,
    pub n: Option<f64>,
    pub coupling_cap: Option<Frequency>,
    /// Computational input states, such as `fgg` or `fgf`.
    pub initial: Option<Names>,
    pub compensation: Option<Vec<bool>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkSection {
    pub max_drive: Option<Frequency>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsSection {
    pub n_values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// Expected headline values, keyed by result label, checked under `--assert`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertSection {
    pub expected: BTreeMap<String, f64>,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    SingleGate,
    GateFidelity,
    RobustnessScan,
    TwoQubit,
    StarkCurve,
    QsTable,
}

impl ExperimentKind {
    pub const ALL: [(&'static str, ExperimentKind); 6] = [
        ("single-gate", ExperimentKind::SingleGate),
        ("gate-fidelity", ExperimentKind::GateFidelity),
        ("robustness-scan", ExperimentKind::RobustnessScan),
        ("two-qubit", ExperimentKind::TwoQubit),
        ("stark-curve", ExperimentKind::StarkCurve),
        ("qs-table", ExperimentKind::QsTable),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).expect("listed")
    }
}

#[derive(Clone, Debug)]
pub struct NamedGate {
    pub label: String,
    pub spec: HolonomySpec,
}

#[derive(Clone, Debug)]
pub struct SingleQubitSetup {
    pub gates: Vec<NamedGate>,
    pub params: TransmonParams,
    pub model: DriveModel,
    pub decoherence: bool,
    pub dt: f64,
    pub n: f64,
    pub omega_max: f64,
    pub tau_ns: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityMethod {
    Direct,
    Channel,
}

#[derive(Clone, Debug)]
pub struct TwoQubitPlan {
    pub device: TwoQubitDeviceParams,
    pub gate: TwoQubitGateSpec,
    pub initial: Vec<String>,
    pub compensation: Vec<bool>,
    pub decoherence: bool,
    pub dt: f64,
}

/// A validated experiment with every parameter resolved to library types.
#[derive(Clone, Debug)]
pub enum Experiment {
    SingleGate(SingleQubitSetup),
    GateFidelity { setup: SingleQubitSetup, samples: usize, method: FidelityMethod, dynamics_points: usize },
    RobustnessScan { spec: SweepSpec, gammas: Option<Vec<Frequency>> },
    TwoQubit(TwoQubitPlan),
    StarkCurve { device: TwoQubitDeviceParams, max_drive: f64, points: usize },
    QsTable { n_values: Vec<f64> },
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::SingleGate(_) => ExperimentKind::SingleGate,
            Experiment::GateFidelity { .. } => ExperimentKind::GateFidelity,
            Experiment::RobustnessScan { .. } => ExperimentKind::RobustnessScan,
            Experiment::TwoQubit(_) => ExperimentKind::TwoQubit,
            Experiment::StarkCurve { .. } => ExperimentKind::StarkCurve,
            Experiment::QsTable { .. } => ExperimentKind::QsTable,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub experiment: Experiment,
    pub output_dir: String,
    pub assert: Option<AssertSection>,
}

pub fn parse(text: &str) -> Result<Config, CliError> {
    toml::from_str(text).map_err(|e| CliError::config(format!("cannot parse config: {}", e.message().trim())))
}

/// Collects problems instead of stopping at the first one.
#[derive(Default)]
struct Problems {
    missing: Vec<String>,
    invalid: Vec<String>,
}

impl Problems {
    fn finish(self) -> Result<(), CliError> {
        if self.missing.is_empty() && self.invalid.is_empty() {
            return Ok(());
        }
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing fields: {}", self.missing.join(", ")));
        }
        parts.extend(self.invalid.iter().cloned());
        Err(CliError::Config { message: parts.join("; "), missing: self.missing })
    }
}

fn named_gate(name: &str) -> Option<HolonomySpec> {
    match name {
        "not" => Some(HolonomySpec::not_gate()),
        "hadamard" => Some(HolonomySpec::hadamard()),
        _ => None,
    }
}

impl Config {
    /// Resolve against library defaults. `output_override` replaces `output.dir`.
    pub fn resolve(&self, output_override: Option<&str>) -> Result<Plan, CliError> {
        let mut p = Problems::default();
        let kind = match self.experiment.as_deref() {
            None => {
                p.missing.push("experiment".into());
                None
            }
            Some(name) => {
                let kind = ExperimentKind::ALL.iter().find(|(n, _)| *n == name).map(|(_, k)| *k);
                if kind.is_none() {
                    let names: Vec<&str> = ExperimentKind::ALL.iter().map(|(n, _)| *n).collect();
                    p.invalid.push(format!("unknown experiment {name:?}; expected one of {}", names.join(", ")));
                }
                kind
            }
        };
        let output_dir = output_override.map(str::to_string).or_else(|| self.output.as_ref().and_then(|o| o.dir.clone()));
        if output_dir.is_none() {
            p.missing.push("output.dir".into());
        }
        if let Some(a) = &self.assert {
            if !(a.tolerance >= 0.0) || a.expected.is_empty() {
                p.invalid.push("assert needs a non-negative tolerance and at least one expected value".into());
            }
        }
        let device = self.device.clone().unwrap_or_default();
        let experiment = kind.and_then(|k| self.resolve_kind(k, &device, &mut p));
        p.finish()?;
        Ok(Plan {
            experiment: experiment.expect("no problems implies a resolved experiment"),
            output_dir: output_dir.expect("checked above"),
            assert: self.assert.clone(),
        })
    }

    fn resolve_kind(&self, kind: ExperimentKind, device: &DeviceSection, p: &mut Problems) -> Option<Experiment> {
        match kind {
            ExperimentKind::SingleGate => {
                let setup = self.single_qubit(device, p)?;
                if setup.gates.len() != 1 {
                    p.invalid.push("single-gate takes exactly one gate".into());
                    return None;
                }
                Some(Experiment::SingleGate(setup))
            }
            ExperimentKind::GateFidelity => {
                let fid = self.fidelity.clone().unwrap_or_default();
                let method = match fid.method.as_deref().unwrap_or("direct") {
                    "direct" => FidelityMethod::Direct,
                    "channel" => FidelityMethod::Channel,
                    other => {
                        p.invalid.push(format!("fidelity.method must be direct or channel, got {other:?}"));
                        FidelityMethod::Direct
                    }
                };
                let samples = fid.samples.unwrap_or(holonomy::metrics::GATE_FIDELITY_SAMPLES);
                if samples < 2 {
                    p.invalid.push("fidelity.samples must be at least 2".into());
                }
                let dynamics_points = fid.dynamics_points.unwrap_or(200);
                if dynamics_points == 0 {
                    p.invalid.push("fidelity.dynamics_points must be positive".into());
                }
                let setup = self.single_qubit(device, p)?;
                Some(Experiment::GateFidelity { setup, samples, method, dynamics_points })
            }
            ExperimentKind::RobustnessScan => self.sweep(device, p),
            ExperimentKind::TwoQubit => self.two_qubit_plan(device, p).map(Experiment::TwoQubit),
            ExperimentKind::StarkCurve => {
                let device = two_qubit_device(device, self.two_qubit.as_ref(), p)?;
                let stark = self.stark.clone().unwrap_or_default();
                let max_drive = stark.max_drive.map_or(holonomy::transmon::mhz(420.0), |f| f.rad_per_ns);
                let points = stark.points.unwrap_or(43);
                if !(max_drive > 0.0) || points < 2 {
                    p.invalid.push("stark.max_drive must be positive and stark.points at least 2".into());
                    return None;
                }
                Some(Experiment::StarkCurve { device, max_drive, points })
            }
            ExperimentKind::QsTable => {
                let n_values = self.qs.as_ref().and_then(|q| q.n_values.clone()).unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
                if n_values.is_empty() || n_values.iter().any(|n| !(*n >= 0.0)) {
                    p.invalid.push("qs.n_values must be non-empty and non-negative".into());
                    return None;
                }
                Some(Experiment::QsTable { n_values })
            }
        }
    }

    fn single_qubit(&self, device: &DeviceSection, p: &mut Problems) -> Option<SingleQubitSetup> {
        let (params, model, decoherence, dt) = single_device(device, p)?;
        let Some(gate) = &self.gate else {
            p.missing.push("gate.name".into());
            return None;
        };
        let gates = match (&gate.name, gate.theta, gate.phi, gate.gamma) {
            (Some(names), None, None, None) => {
                let mut out = Vec::new();
                for name in names.to_vec() {
                    match named_gate(&name) {
                        Some(spec) => out.push(NamedGate { label: name, spec }),
                        None => p.invalid.push(format!("unknown gate {name:?}; expected not or hadamard")),
                    }
                }
                out
            }
            (None, Some(theta), Some(phi), Some(gamma)) => {
                vec![NamedGate { label: "custom".into(), spec: HolonomySpec::new(theta, phi, gamma) }]
            }
            (None, ..) => {
                for (key, v) in [("gate.theta", gate.theta), ("gate.phi", gate.phi), ("gate.gamma", gate.gamma)] {
                    if v.is_none() {
                        p.missing.push(key.into());
                    }
                }
                return None;
            }
            (Some(_), ..) => {
                p.invalid.push("give either gate.name or gate.theta/phi/gamma, not both".into());
                return None;
            }
        };
        let n = gate.n.unwrap_or(0.0);
        let omega_max = gate.omega_max.as_ref().map_or(holonomy::transmon::mhz(16.0), |f| f.rad_per_ns);
        if !(n >= 0.0) || !(omega_max > 0.0) || gate.tau_ns.is_some_and(|t| !(t > 0.0)) {
            p.invalid.push("gate.n must be non-negative, gate.omega_max and gate.tau_ns positive".into());
            return None;
        }
        if gates.is_empty() {
            return None;
        }
        Some(SingleQubitSetup { gates, params, model, decoherence, dt, n, omega_max, tau_ns: gate.tau_ns })
    }

    fn sweep(&self, device: &DeviceSection, p: &mut Problems) -> Option<Experiment> {
        let setup = self.single_qubit(device, p)?;
        if setup.gates.len() != 1 {
            p.invalid.push("robustness-scan takes exactly one gate".into());
            return None;
        }
        let s = self.sweep.clone().unwrap_or_default();
        let defaults = SweepSpec::default();
        let criterion = match s.criterion.as_deref().unwrap_or("mean") {
            "mean" => Criterion::Mean,
            "worst-case" => Criterion::WorstCase,
            other => {
                p.invalid.push(format!("sweep.criterion must be mean or worst-case, got {other:?}"));
                return None;
            }
        };
        let spec = SweepSpec {
            gate: setup.gates[0].spec,
            epsilon: EpsilonRange {
                min: s.epsilon_min.unwrap_or(defaults.epsilon.min),
                max: s.epsilon_max.unwrap_or(defaults.epsilon.max),
                steps: s.epsilon_steps.unwrap_or(defaults.epsilon.steps),
            },
            n_values: s.n_values.unwrap_or(defaults.n_values),
            decoherence: setup.decoherence,
            params: setup.params,
            model: setup.model,
            omega_max: setup.omega_max,
            dt: setup.dt,
            criterion,
            gate_samples: self.fidelity.as_ref().and_then(|f| f.samples).unwrap_or(defaults.gate_samples),
        };
        if let Err(e) = spec.validate() {
            p.invalid.push(e.to_string());
            return None;
        }
        if let Some(g) = &s.gamma {
            if g.is_empty() || g.iter().any(|f| !(f.rad_per_ns >= 0.0)) {
                p.invalid.push("sweep.gamma must be a non-empty list of non-negative rates".into());
                return None;
            }
        }
        Some(Experiment::RobustnessScan { spec, gammas: s.gamma })
    }

    fn two_qubit_plan(&self, device: &DeviceSection, p: &mut Problems) -> Option<TwoQubitPlan> {
        let params = two_qubit_device(device, self.two_qubit.as_ref(), p)?;
        let section = self.two_qubit.clone().unwrap_or_default();
        let defaults = TwoQubitGateSpec::default();
        let gate = TwoQubitGateSpec {
            vartheta: section.vartheta.unwrap_or(defaults.vartheta),
            gamma: section.gamma.unwrap_or(defaults.gamma),
            phi: section.phi.unwrap_or(defaults.phi),
            tau_ns: section.tau_ns.unwrap_or(defaults.tau_ns),
            n: section.n.unwrap_or(defaults.n),
            coupling_cap: section.coupling_cap.map(|f| f.rad_per_ns),
        };
        if let Err(e) = gate.validate() {
            p.invalid.push(e.to_string());
        }
        let initial = section.initial.map_or_else(|| vec!["fgg".to_string()], |n| n.to_vec());
        for label in &initial {
            if !S2_LABELS.contains(&label.as_str()) {
                p.invalid.push(format!("two_qubit.initial {label:?} is not one of {}", S2_LABELS.join(", ")));
            }
        }
        let compensation = section.compensation.unwrap_or_else(|| vec![true]);
        if initial.is_empty() || compensation.is_empty() {
            p.invalid.push("two_qubit.initial and two_qubit.compensation must be non-empty".into());
        }
        let dt = device.dt_ns.unwrap_or(holonomy::dynamics::DEFAULT_DT_NS);
        Some(TwoQubitPlan { device: params, gate, initial, compensation, decoherence: device.decoherence.unwrap_or(false), dt })
    }
}

fn rates(device: &DeviceSection, mut params: TransmonParams) -> TransmonParams {
    if let Some(a) = &device.anharmonicity {
        params.anharmonicity = a.rad_per_ns;
    }
    if let Some(r) = &device.decay_rate {
        params.decay_rate = r.rad_per_ns;
    }
    if let Some(r) = &device.dephasing_rate {
        params.dephasing_rate = r.rad_per_ns;
    }
    params
}

fn single_device(device: &DeviceSection, p: &mut Problems) -> Option<(TransmonParams, DriveModel, bool, f64)> {
    let model = match device.model.as_deref().unwrap_or("leaky4") {
        "leaky4" => DriveModel::Leaky4,
        "ideal3" => DriveModel::Ideal3,
        other => {
            p.invalid.push(format!("device.model must be ideal3 or leaky4, got {other:?}"));
            return None;
        }
    };
    let params = TransmonParams { levels: model.levels(), ..rates(device, TransmonParams::default()) };
    let dt = device.dt_ns.unwrap_or(holonomy::dynamics::DEFAULT_DT_NS);
    if !(dt > 0.0) {
        p.invalid.push("device.dt_ns must be positive".into());
        return None;
    }
    if let Err(e) = params.validate() {
        p.invalid.push(e.to_string());
        return None;
    }
    Some((params, model, device.decoherence.unwrap_or(true), dt))
}

fn two_qubit_device(device: &DeviceSection, section: Option<&TwoQubitSection>, p: &mut Problems) -> Option<TwoQubitDeviceParams> {
    let mut params = TwoQubitDeviceParams::default();
    for q in &mut params.qubits {
        *q = rates(device, *q);
    }
    params.auxiliary = TransmonParams { anharmonicity: params.auxiliary.anharmonicity, ..rates(device, params.auxiliary) };
    if let Some(s) = section {
        if let Some(d) = &s.detuning {
            params.detuning = d.rad_per_ns;
        }
        if let Some(g) = &s.coupling {
            params.couplings = [g.rad_per_ns; 2];
        }
        if let Some(a) = &s.auxiliary_anharmonicity {
            params.auxiliary.anharmonicity = a.rad_per_ns;
        }
    }
    if let Err(e) = params.validate() {
        p.invalid.push(e.to_string());
        return None;
    }
    Some(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_scale_by_two_pi() {
        let f = Frequency::parse("16 MHz").unwrap();
        assert!((f.rad_per_ns - 2.0 * PI * 0.016).abs() < 1e-15);
        assert!((Frequency::parse("5kHz").unwrap().rad_per_ns - 2.0 * PI * 5e-6).abs() < 1e-18);
        assert!((Frequency::parse("1 GHz").unwrap().rad_per_ns - 2.0 * PI).abs() < 1e-15);
        assert_eq!(Frequency::parse("0.25 rad/ns").unwrap().rad_per_ns, 0.25);
    }

    #[test]
    fn frequency_without_unit_is_rejected() {
        assert!(Frequency::parse("16").is_err());
        assert!(Frequency::parse("16 furlongs").is_err());
        let err = parse("experiment = \"single-gate\"\n[gate]\nname = \"not\"\nomega_max = 16.0\n").unwrap_err();
        assert!(err.to_string().contains("no unit"), "{err}");
    }

    #[test]
    fn empty_config_lists_missing_fields() {
        let err = parse("").unwrap().resolve(None).unwrap_err();
        match err {
            CliError::Config { missing, .. } => assert_eq!(missing, vec!["experiment", "output.dir"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gate_needs_name_or_angles() {
        let cfg = parse("experiment = \"single-gate\"\n[gate]\ntheta = 1.0\n[output]\ndir = \"x\"\n").unwrap();
        match cfg.resolve(None).unwrap_err() {
            CliError::Config { missing, .. } => assert_eq!(missing, vec!["gate.phi", "gate.gamma"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("experiment = \"qs-table\"\n[gate]\nnmae = \"not\"\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "experiment = \"gate-fidelity\"\n[device]\nanharmonicity = \"400 MHz\"\n[gate]\nname = [\"not\", \"hadamard\"]\n";
        let cfg = parse(text).unwrap();
        let again = parse(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
