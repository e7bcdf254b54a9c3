//! State and gate fidelities, leakage, and the single-qubit gate runner.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{evolve_lindblad, evolve_schrodinger, EvolutionOptions, EvolutionResult, NoiseModel, Trajectory};
use crate::error::{Error, Result};
use crate::path::{holonomy_target, ControlWaveform, HolonomySpec};
use crate::quantum::{level, DensityMatrix, StateVector, C64, I, ONE, ZERO};
use crate::transmon::{single_qubit_hamiltonian, DriveModel, SingleQubitHamiltonian, TransmonParams};

pub const GATE_FIDELITY_SAMPLES: usize = 1001;

/// `⟨ψ|ρ|ψ⟩`.
pub fn state_fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    if rho.dim() != target.len() {
        return Err(Error::InvalidDimension(format!("ρ has dimension {} but target has {}", rho.dim(), target.len())));
    }
    if (target.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("target state is not normalized".into()));
    }
    let f = rho.overlap(target)?;
    debug_assert!(f.im.abs() < 1e-10, "fidelity has imaginary part {}", f.im);
    Ok(f.re)
}

/// `|⟨target|ψ⟩|²`.
pub fn pure_state_fidelity(psi: &StateVector, target: &StateVector) -> Result<f64> {
    Ok(target.inner(psi)?.norm_sqr())
}

/// `1 − Tr(P ρ)` for the projector onto the listed basis states.
pub fn leakage(rho: &DensityMatrix, computational: &[usize]) -> Result<f64> {
    if let Some(&i) = computational.iter().find(|&&i| i >= rho.dim()) {
        return Err(Error::InvalidDimension(format!("basis index {i} out of range")));
    }
    let inside: f64 = computational.iter().map(|&i| rho.population(i)).sum();
    Ok((1.0 - inside).max(0.0))
}

/// `samples` angles uniform on `[0, 2π]`, both ends included.
pub fn theta_grid(samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least two samples, got {samples}")));
    }
    Ok((0..samples).map(|i| 2.0 * PI * i as f64 / (samples - 1) as f64).collect())
}

fn on_gf(levels: usize, g: C64, f: C64) -> Result<StateVector> {
    let mut v = DVector::from_element(levels, ZERO);
    v[level::G] = g;
    v[level::F] = f;
    StateVector::new(v, vec![levels])
}

/// `cos θ′|g⟩ + sin θ′|f⟩`.
pub fn gate_input_state(levels: usize, theta: f64) -> Result<StateVector> {
    on_gf(levels, C64::from(theta.cos()), C64::from(theta.sin()))
}

/// Ideal image of [`gate_input_state`] under the holonomy, in `{g, f}`.
pub fn gate_target_state(holonomy: &HolonomySpec, levels: usize, theta: f64) -> Result<StateVector> {
    let u = holonomy_target(holonomy);
    let (c, s) = (theta.cos(), theta.sin());
    on_gf(levels, u[(0, 0)] * c + u[(0, 1)] * s, u[(1, 0)] * c + u[(1, 1)] * s)
}

/// Average state fidelity over `samples` input states, each run through `runner`.
///
/// Runs are distributed over the rayon pool; the sum is taken in grid order.
pub fn gate_fidelity_average<R>(runner: R, holonomy: &HolonomySpec, levels: usize, samples: usize) -> Result<f64>
where
    R: Fn(&StateVector) -> Result<DensityMatrix> + Sync,
{
    let grid = theta_grid(samples)?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&theta| {
            let rho = runner(&gate_input_state(levels, theta)?)?;
            state_fidelity(&rho, &gate_target_state(holonomy, levels, theta)?)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / samples as f64)
}

/// Images of `|g⟩⟨g|`, `|f⟩⟨f|` and `|g⟩⟨f|` under a linear channel.
#[derive(Clone, Debug)]
pub struct ChannelImages {
    pub gg: DMatrix<C64>,
    pub ff: DMatrix<C64>,
    pub gf: DMatrix<C64>,
}

/// The four physical inputs `|g⟩, |f⟩, (|g⟩+|f⟩)/√2, (|g⟩+i|f⟩)/√2` whose
/// images determine the channel on the `{g, f}` block.
pub fn channel_probe_states(levels: usize) -> Result<[StateVector; 4]> {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    Ok([on_gf(levels, ONE, ZERO)?, on_gf(levels, ZERO, ONE)?, on_gf(levels, h, h)?, on_gf(levels, h, h * I)?])
}

impl ChannelImages {
    /// From the images of [`channel_probe_states`], in that order.
    pub fn from_probes(images: [DMatrix<C64>; 4]) -> Self {
        let [gg, ff, plus, plus_i] = images;
        let half = (&gg + &ff) * C64::from(0.5);
        // |+⟩⟨+| = ½(gg + ff + gf + fg), |+i⟩⟨+i| = ½(gg + ff − i gf + i fg)
        let gf = (&plus - &half) + (&plus_i - &half) * I;
        Self { gg, ff, gf }
    }

    /// `E(|ψ⟩⟨ψ|)` for `|ψ⟩ = cos θ′|g⟩ + sin θ′|f⟩`.
    pub fn image(&self, theta: f64) -> DMatrix<C64> {
        let (c, s) = (theta.cos(), theta.sin());
        let cross = &self.gf * C64::from(c * s);
        &self.gg * C64::from(c * c) + &self.ff * C64::from(s * s) + &cross + cross.adjoint()
    }

    pub fn gate_fidelity(&self, holonomy: &HolonomySpec, samples: usize) -> Result<f64> {
        let levels = self.gg.nrows();
        let grid = theta_grid(samples)?;
        let mut total = 0.0;
        for &theta in &grid {
            let target = gate_target_state(holonomy, levels, theta)?;
            let a = target.amplitudes();
            total += (a.adjoint() * self.image(theta) * a)[(0, 0)].re;
        }
        Ok(total / samples as f64)
    }
}

/// Headline observables of one run.
#[derive(Clone, Debug, Serialize)]
pub struct FidelityReport {
    pub gate: String,
    pub model: String,
    pub state_fidelity: f64,
    pub gate_fidelity: Option<f64>,
    pub leakage_final: f64,
    pub params: serde_json::Value,
    #[serde(skip)]
    pub populations: Trajectory,
}

impl FidelityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// CSV `t_ns,pop_g,pop_e,pop_f,pop_h,fidelity`; `pop_h` is zero for three levels.
pub fn write_single_qubit_trajectory<W: Write>(trajectory: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "t_ns,pop_g,pop_e,pop_f,pop_h,fidelity")?;
    for (i, t) in trajectory.times.iter().enumerate() {
        let p = &trajectory.populations[i];
        let pop = |k: usize| p.get(k).copied().unwrap_or(0.0);
        let f = trajectory.fidelity.get(i).copied().unwrap_or(f64::NAN);
        writeln!(out, "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{f:.16e}", pop(0), pop(1), pop(2), pop(3))?;
    }
    Ok(())
}

/// One driven transmon under a synthesized waveform, with or without noise.
#[derive(Clone, Debug)]
pub struct SingleQubitRun {
    pub holonomy: HolonomySpec,
    pub hamiltonian: SingleQubitHamiltonian,
    pub noise: NoiseModel,
    pub dt: f64,
}

impl SingleQubitRun {
    pub fn new(
        holonomy: HolonomySpec,
        waveform: &ControlWaveform,
        params: &TransmonParams,
        model: DriveModel,
        decoherence: bool,
        dt: f64,
    ) -> Result<Self> {
        let hamiltonian = single_qubit_hamiltonian(waveform, holonomy.theta, params, model)?;
        let noise = if decoherence { NoiseModel::single(model.levels(), params)? } else { NoiseModel::none() };
        Ok(Self { holonomy, hamiltonian, noise, dt })
    }

    pub fn levels(&self) -> usize {
        self.hamiltonian.model().levels()
    }

    pub fn tau_ns(&self) -> f64 {
        self.hamiltonian.waveform().tau_ns()
    }

    pub fn evolve(&self, initial: &StateVector, opts: &EvolutionOptions) -> Result<EvolutionResult<DensityMatrix>> {
        let opts = EvolutionOptions { dt: self.dt, ..opts.clone() };
        let tau = self.tau_ns();
        if self.noise.is_empty() {
            let r = evolve_schrodinger(&self.hamiltonian, initial, 0.0, tau, &opts)?;
            Ok(EvolutionResult {
                final_state: r.final_state.to_density(),
                trajectory: r.trajectory,
                max_drift: r.max_drift,
                min_eigenvalue: r.min_eigenvalue,
                steps: r.steps,
            })
        } else {
            evolve_lindblad(&self.hamiltonian, &self.noise, &initial.to_density(), 0.0, tau, &opts)
        }
    }

    pub fn final_state(&self, initial: &StateVector) -> Result<DensityMatrix> {
        let opts = EvolutionOptions { max_samples: 2, ..Default::default() };
        Ok(self.evolve(initial, &opts)?.final_state)
    }

    /// Fidelity of `cos θ′|g⟩ + sin θ′|f⟩` against its ideal image.
    pub fn state_fidelity(&self, theta: f64) -> Result<f64> {
        let rho = self.final_state(&gate_input_state(self.levels(), theta)?)?;
        state_fidelity(&rho, &gate_target_state(&self.holonomy, self.levels(), theta)?)
    }

    /// Average over `samples` inputs, one simulation each.
    pub fn gate_fidelity(&self, samples: usize) -> Result<f64> {
        gate_fidelity_average(|psi| self.final_state(psi), &self.holonomy, self.levels(), samples)
    }

    /// Same average from four simulations, using linearity of the channel.
    pub fn channel(&self) -> Result<ChannelImages> {
        let probes = channel_probe_states(self.levels())?;
        let images: Vec<DMatrix<C64>> = probes
            .par_iter()
            .map(|p| Ok(self.final_state(p)?.matrix().clone()))
            .collect::<Result<_>>()?;
        let images: [DMatrix<C64>; 4] = images.try_into().expect("four probes");
        Ok(ChannelImages::from_probes(images))
    }

    pub fn gate_fidelity_channel(&self, samples: usize) -> Result<f64> {
        self.channel()?.gate_fidelity(&self.holonomy, samples)
    }

    /// `(t, F^G(t))` at `points + 1` equally spaced times: the probe states are
    /// propagated interval by interval and the channel average is taken
    /// against the final targets at every stop.
    pub fn gate_fidelity_dynamics(&self, points: usize, samples: usize) -> Result<Vec<(f64, f64)>> {
        if points == 0 {
            return Err(Error::InvalidParameter("gate fidelity dynamics needs at least one interval".into()));
        }
        let tau = self.tau_ns();
        let times: Vec<f64> = (0..=points).map(|k| tau * k as f64 / points as f64).collect();
        let probes = channel_probe_states(self.levels())?;
        let opts = EvolutionOptions { dt: self.dt, max_samples: 2, ..Default::default() };
        let histories: Vec<Vec<DMatrix<C64>>> = probes
            .par_iter()
            .map(|p| {
                let mut out = vec![p.to_density().matrix().clone()];
                if self.noise.is_empty() {
                    let mut psi = p.clone();
                    for w in times.windows(2) {
                        psi = evolve_schrodinger(&self.hamiltonian, &psi, w[0], w[1], &opts)?.final_state;
                        out.push(psi.to_density().matrix().clone());
                    }
                } else {
                    let mut rho = p.to_density();
                    for w in times.windows(2) {
                        rho = evolve_lindblad(&self.hamiltonian, &self.noise, &rho, w[0], w[1], &opts)?.final_state;
                        out.push(rho.matrix().clone());
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let images = std::array::from_fn(|p| histories[p][k].clone());
                Ok((t, ChannelImages::from_probes(images).gate_fidelity(&self.holonomy, samples)?))
            })
            .collect()
    }

    /// Run from `|g⟩` with a recorded trajectory and summarize.
    pub fn report(&self, gate: &str, gate_samples: Option<usize>, params: serde_json::Value) -> Result<FidelityReport> {
        let levels = self.levels();
        let target = gate_target_state(&self.holonomy, levels, 0.0)?;
        let opts = EvolutionOptions::default().with_target(target.clone());
        let run = self.evolve(&gate_input_state(levels, 0.0)?, &opts)?;
        let gate_fidelity = gate_samples.map(|s| self.gate_fidelity(s)).transpose()?;
        Ok(FidelityReport {
            gate: gate.to_string(),
            model: self.hamiltonian.model().name().to_string(),
            state_fidelity: state_fidelity(&run.final_state, &target)?,
            gate_fidelity,
            leakage_final: leakage(&run.final_state, &[level::G, level::F])?,
            params,
            populations: run.trajectory,
        })
    }
}
