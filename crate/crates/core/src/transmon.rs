//! Transmon Hamiltonians: the driven single qubit (ideal three-level and leaky
//! four-level), the two-qubit plus auxiliary system in the drive frame, the
//! second-order effective couplings and the cross-Stark compensation curve.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::numerics::{self, Pchip};
use crate::path::ControlWaveform;
use crate::quantum::{annihilation_op, basis_index, label_index, level, Operator, C64, ZERO};

/// Angular frequency of `mhz` megahertz, in rad/ns.
pub fn mhz(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e-3
}

/// Per-transmon constants. Rates and anharmonicity are angular (rad/ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    pub levels: usize,
    pub anharmonicity: f64,
    pub decay_rate: f64,
    pub dephasing_rate: f64,
}

impl Default for TransmonParams {
    /// Four levels, α = 2π×400 MHz, Γ₁ = Γ₂ = 2π×5 kHz.
    fn default() -> Self {
        Self { levels: 4, anharmonicity: mhz(400.0), decay_rate: mhz(0.005), dephasing_rate: mhz(0.005) }
    }
}

impl TransmonParams {
    pub fn noiseless(self) -> Self {
        Self { decay_rate: 0.0, dephasing_rate: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=4).contains(&self.levels) {
            return Err(Error::InvalidDimension(format!("transmon levels must be 3 or 4, got {}", self.levels)));
        }
        if !(self.anharmonicity > 0.0) {
            return Err(Error::InvalidParameter(format!("anharmonicity must be positive, got {}", self.anharmonicity)));
        }
        if !(self.decay_rate >= 0.0 && self.dephasing_rate >= 0.0) {
            return Err(Error::InvalidParameter("decay and dephasing rates must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveModel {
    /// `Ω e^{iφ₁}|b⟩⟨e| + h.c.` on `{g, e, f}`.
    Ideal3,
    /// Four levels with the off-resonant cross couplings of both tones.
    Leaky4,
}

impl DriveModel {
    pub fn levels(self) -> usize {
        match self {
            DriveModel::Ideal3 => 3,
            DriveModel::Leaky4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriveModel::Ideal3 => "ideal3",
            DriveModel::Leaky4 => "leaky4",
        }
    }
}

/// Rotating-frame Hamiltonian of one driven transmon.
///
/// Tone 1 (`Ω₁`, resonant with g↔e) and tone 2 (`Ω₂`, resonant with e↔f) are
/// recovered from `Ω` and `θ` through `Ω₁/2 = Ω sin(θ/2)` and
/// `Ω₂/√2 = Ω cos(θ/2)`. In the leaky model tone 2 also drives g↔e at
/// detuning `−α` and f↔h resonantly, and tone 1 drives e↔f at detuning `+α`.
#[derive(Clone, Debug)]
pub struct SingleQubitHamiltonian {
    waveform: ControlWaveform,
    theta: f64,
    anharmonicity: f64,
    model: DriveModel,
}

pub fn single_qubit_hamiltonian(
    waveform: &ControlWaveform,
    theta: f64,
    params: &TransmonParams,
    model: DriveModel,
) -> Result<SingleQubitHamiltonian> {
    params.validate()?;
    if model == DriveModel::Leaky4 && params.levels < 4 {
        return Err(Error::InvalidDimension("the leaky model needs four levels".into()));
    }
    Ok(SingleQubitHamiltonian { waveform: waveform.clone(), theta, anharmonicity: params.anharmonicity, model })
}

impl SingleQubitHamiltonian {
    pub fn waveform(&self) -> &ControlWaveform {
        &self.waveform
    }

    pub fn model(&self) -> DriveModel {
        self.model
    }

    pub fn with_waveform(&self, waveform: ControlWaveform) -> Self {
        Self { waveform, ..self.clone() }
    }
}

impl Hamiltonian for SingleQubitHamiltonian {
    fn dims(&self) -> Vec<usize> {
        vec![self.model.levels()]
    }

    fn write(&self, t: f64, out: &mut DMatrix<C64>) {
        out.fill(ZERO);
        let c = self.waveform.at(t);
        let (s, co) = (self.theta / 2.0).sin_cos();
        let half1 = c.omega * s;
        let half2 = c.omega * co / SQRT_2;
        let tone1 = C64::from_polar(1.0, c.phi1);
        let tone2 = C64::from_polar(1.0, c.phi2);
        let mut ge = tone1 * half1;
        let mut ef = tone2 * (SQRT_2 * half2);
        if self.model == DriveModel::Leaky4 {
            let a = self.anharmonicity;
            ge += tone2 * half2 * C64::from_polar(1.0, -a * t);
            ef += tone1 * (SQRT_2 * half1) * C64::from_polar(1.0, a * t);
            let fh = tone2 * (3f64.sqrt() * half2);
            out[(2, 3)] = fh;
            out[(3, 2)] = fh.conj();
            out[(3, 3)] = C64::from(-a);
        }
        out[(0, 1)] = ge;
        out[(1, 0)] = ge.conj();
        out[(1, 2)] = ef;
        out[(2, 1)] = ef.conj();
    }
}

/// Device constants of two qubits coupled to one auxiliary transmon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitDeviceParams {
    pub qubits: [TransmonParams; 2],
    pub auxiliary: TransmonParams,
    /// `g₁, g₂` (rad/ns).
    pub couplings: [f64; 2],
    /// `Δ = ω_ge^k − ω_A` (rad/ns).
    pub detuning: f64,
}

impl Default for TwoQubitDeviceParams {
    /// Δ = 2π×1 GHz, g = 2π×65 MHz, α = 2π×400 MHz, α_A = 2π×370 MHz.
    fn default() -> Self {
        let qubit = TransmonParams::default();
        Self {
            qubits: [qubit; 2],
            auxiliary: TransmonParams { anharmonicity: mhz(370.0), ..qubit },
            couplings: [mhz(65.0); 2],
            detuning: mhz(1000.0),
        }
    }
}

impl TwoQubitDeviceParams {
    pub fn noiseless(self) -> Self {
        Self {
            qubits: [self.qubits[0].noiseless(), self.qubits[1].noiseless()],
            auxiliary: self.auxiliary.noiseless(),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for q in self.qubits.iter().chain(std::iter::once(&self.auxiliary)) {
            q.validate()?;
        }
        for q in &self.qubits {
            if !(self.detuning > q.anharmonicity) {
                return Err(Error::InvalidParameter(format!(
                    "detuning {} must exceed the qubit anharmonicity {}",
                    self.detuning, q.anharmonicity
                )));
            }
        }
        let (a1, a2) = (self.qubits[0].anharmonicity, self.qubits[1].anharmonicity);
        if (a1 - a2).abs() > 1e-12 * a1.abs() {
            return Err(Error::InvalidParameter(
                "a common drive frame needs equal qubit anharmonicities for two-photon resonance".into(),
            ));
        }
        Ok(())
    }

    /// `δ_k = α_k − Δ`.
    pub fn qubit_detuning(&self, k: usize) -> f64 {
        self.qubits[k].anharmonicity - self.detuning
    }

    /// `δ_A = 2δ_k − α_k`.
    pub fn auxiliary_detuning(&self) -> f64 {
        2.0 * self.qubit_detuning(0) - self.qubits[0].anharmonicity
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.qubits[0].levels, self.auxiliary.levels, self.qubits[1].levels]
    }
}

/// Drive values at one instant: amplitudes `Ω̃_k`, phases `φ̃_k`, and the
/// common drive-frequency shift `s` that lowers every `δ` by `s`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveSnapshot {
    pub omega: [f64; 2],
    pub phase: [f64; 2],
    pub shift: f64,
}

/// Precomputed operators for the system `|l⟩₁ ⊗ |m⟩_A ⊗ |s⟩₂`.
#[derive(Clone, Debug)]
pub struct TwoQubitSystem {
    params: TwoQubitDeviceParams,
    dims: [usize; 3],
    static_part: DMatrix<C64>,
    excitations: Vec<f64>,
    lowering: [Vec<(usize, usize, f64)>; 2],
}

fn nonzeros(op: &Operator) -> Vec<(usize, usize, f64)> {
    let m = op.matrix();
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)] != ZERO {
                out.push((r, c, m[(r, c)].re));
            }
        }
    }
    out
}

fn ladder_energy(n: f64, detuning: f64, anharmonicity: f64) -> f64 {
    detuning * n - 0.5 * anharmonicity * (n - 1.0) * n
}

impl TwoQubitSystem {
    pub fn new(params: TwoQubitDeviceParams) -> Result<Self> {
        params.validate()?;
        let dims = params.dims();
        let n: usize = dims.iter().product();
        let b1 = annihilation_op(dims[0])?.embed(0, &dims)?;
        let a = annihilation_op(dims[1])?.embed(1, &dims)?;
        let b2 = annihilation_op(dims[2])?.embed(2, &dims)?;
        let mut static_part = DMatrix::<C64>::zeros(n, n);
        let mut excitations = vec![0.0; n];
        for (index, e) in excitations.iter_mut().enumerate() {
            let l = (index / (dims[1] * dims[2])) as f64;
            let m = ((index / dims[2]) % dims[1]) as f64;
            let s = (index % dims[2]) as f64;
            let energy = ladder_energy(l, params.qubit_detuning(0), params.qubits[0].anharmonicity)
                + ladder_energy(m, params.auxiliary_detuning(), params.auxiliary.anharmonicity)
                + ladder_energy(s, params.qubit_detuning(1), params.qubits[1].anharmonicity);
            static_part[(index, index)] = C64::from(energy);
            *e = l + m + s;
        }
        for (b, g) in [(&b1, params.couplings[0]), (&b2, params.couplings[1])] {
            let exchange = a.matrix() * b.matrix().adjoint() * C64::from(g);
            static_part += &exchange + exchange.adjoint();
        }
        Ok(Self { params, dims, static_part, excitations, lowering: [nonzeros(&b1), nonzeros(&b2)] })
    }

    pub fn params(&self) -> &TwoQubitDeviceParams {
        &self.params
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.excitations.len()
    }

    /// Basis index of a label such as `"fgg"`.
    pub fn index(&self, label: &str) -> Result<usize> {
        label_index(&self.dims, label)
    }

    /// Total excitation number of each basis state.
    pub fn excitations(&self) -> &[f64] {
        &self.excitations
    }

    pub fn write(&self, drive: &DriveSnapshot, out: &mut DMatrix<C64>) {
        out.copy_from(&self.static_part);
        for (i, n) in self.excitations.iter().enumerate() {
            out[(i, i)] -= C64::from(drive.shift * n);
        }
        for k in 0..2 {
            let amp = C64::from_polar(0.5 * drive.omega[k], drive.phase[k]);
            for &(r, c, v) in &self.lowering[k] {
                let x = amp * v;
                out[(r, c)] += x;
                out[(c, r)] += x.conj();
            }
        }
    }

    /// Real version for drives with phases `0` and `π` (sign `±1` per qubit).
    pub fn write_real(&self, omega: [f64; 2], signs: [f64; 2], shift: f64, out: &mut DMatrix<f64>) {
        let n = self.dim();
        for c in 0..n {
            for r in 0..n {
                out[(r, c)] = self.static_part[(r, c)].re;
            }
            out[(c, c)] -= shift * self.excitations[c];
        }
        for k in 0..2 {
            let amp = 0.5 * omega[k] * signs[k];
            for &(r, c, v) in &self.lowering[k] {
                out[(r, c)] += amp * v;
                out[(c, r)] += amp * v;
            }
        }
    }

    pub fn hamiltonian(&self, drive: &DriveSnapshot) -> Operator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        self.write(drive, &mut m);
        Operator::new(m, self.dims.to_vec()).expect("dims match by construction")
    }
}

/// `H₀ + H′` in the drive frame for one drive snapshot.
pub fn two_qubit_full_hamiltonian(params: &TwoQubitDeviceParams, drive: &DriveSnapshot) -> Result<Operator> {
    Ok(TwoQubitSystem::new(*params)?.hamiltonian(drive))
}

/// Closed-form second-order shifts and Raman coupling of one qubit and the auxiliary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCouplings {
    pub eta_ge: f64,
    pub eta_fg: f64,
    pub g_eff: f64,
}

/// `η_ge = Ω̃²/(4(Δ−α)) − g²/Δ`, `η_fg = 3Ω̃²/(4(Δ+α)) + 2g²/(Δ−α)`,
/// `g̃ = √2 g Ω̃/(2(Δ−α)) − √2 g Ω̃/(2Δ)`.
pub fn effective_couplings_closed_form(g: f64, omega: f64, delta: f64, alpha: f64) -> Result<EffectiveCouplings> {
    for (den, what) in [(delta, "Δ = 0"), (delta - alpha, "Δ = α"), (delta + alpha, "Δ = −α")] {
        if den.abs() < 1e-14 * (delta.abs() + alpha.abs()).max(1.0) {
            return Err(Error::SingularDetuning(what.into()));
        }
    }
    Ok(EffectiveCouplings {
        eta_ge: omega * omega / (4.0 * (delta - alpha)) - g * g / delta,
        eta_fg: 3.0 * omega * omega / (4.0 * (delta + alpha)) + 2.0 * g * g / (delta - alpha),
        g_eff: SQRT_2 * g * omega / (2.0 * (delta - alpha)) - SQRT_2 * g * omega / (2.0 * delta),
    })
}

/// Second-order shift of `|f,g⟩` through the intermediate `|e,g⟩` reached by
/// the drive, `−Ω̃²/(2Δ)`, which the closed-form `η_fg` above does not carry.
pub fn eta_fg_drive_term(omega: f64, delta: f64) -> f64 {
    -omega * omega / (2.0 * delta)
}

/// `−P H′ K H′ P` on a degenerate subspace of a diagonal `H₀`, with
/// `K = Σ_{n∉P} |n⟩⟨n| / (ε_n − ε)`.
pub fn second_order_perturbation(h0: &Operator, hp: &Operator, subspace: &[usize]) -> Result<Operator> {
    let n = h0.dim();
    if hp.dim() != n {
        return Err(Error::InvalidDimension(format!("H₀ has dimension {n} but H′ has {}", hp.dim())));
    }
    if subspace.is_empty() || subspace.iter().any(|&i| i >= n) {
        return Err(Error::InvalidDimension("subspace indices out of range".into()));
    }
    let m0 = h0.matrix();
    let scale = m0.iter().map(|v| v.norm()).fold(1.0, f64::max);
    for c in 0..n {
        for r in 0..n {
            if r != c && m0[(r, c)].norm() > 1e-12 * scale {
                return Err(Error::Precondition("H₀ must be diagonal".into()));
            }
        }
    }
    let energy = m0[(subspace[0], subspace[0])].re;
    if subspace.iter().any(|&i| (m0[(i, i)].re - energy).abs() > 1e-10 * scale) {
        return Err(Error::Precondition("subspace is not degenerate in H₀".into()));
    }
    let v = hp.matrix();
    let first_order = subspace
        .iter()
        .flat_map(|&i| subspace.iter().map(move |&j| (i, j)))
        .map(|(i, j)| v[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if first_order > 0.0 {
        log::warn!("first-order term P H' P is nonzero (Frobenius norm {first_order:e})");
    }
    let k = subspace.len();
    let mut out = DMatrix::<C64>::zeros(k, k);
    for m in (0..n).filter(|m| !subspace.contains(m)) {
        let coupled = subspace.iter().any(|&i| v[(m, i)] != ZERO);
        if !coupled {
            continue;
        }
        let gap = m0[(m, m)].re - energy;
        if gap.abs() < 1e-12 * scale {
            return Err(Error::Precondition(format!("intermediate state {m} is degenerate with the subspace")));
        }
        for (a, &i) in subspace.iter().enumerate() {
            for (b, &j) in subspace.iter().enumerate() {
                out[(a, b)] -= v[(i, m)] * v[(m, j)] / gap;
            }
        }
    }
    Operator::new(out, vec![k])
}

/// One qubit plus the auxiliary, `|l⟩_k ⊗ |m⟩_A` with four levels each:
/// returns `(H₀, H′)`.
pub fn qubit_auxiliary_pair(
    g: f64,
    omega: f64,
    phase: f64,
    delta: f64,
    alpha: f64,
    alpha_aux: f64,
) -> Result<(Operator, Operator)> {
    let dims = [4, 4];
    let b = annihilation_op(4)?.embed(0, &dims)?;
    let a = annihilation_op(4)?.embed(1, &dims)?;
    let dk = alpha - delta;
    let da = 2.0 * dk - alpha;
    let mut h0 = DMatrix::<C64>::zeros(16, 16);
    for l in 0..4 {
        for m in 0..4 {
            let i = basis_index(&dims, &[l, m])?;
            let e = ladder_energy(l as f64, dk, alpha) + ladder_energy(m as f64, da, alpha_aux);
            h0[(i, i)] = C64::from(e);
        }
    }
    let exchange = a.matrix() * b.matrix().adjoint() * C64::from(g);
    let drive = b.matrix() * C64::from_polar(0.5 * omega, phase);
    let hp = &exchange + exchange.adjoint() + &drive + drive.adjoint();
    Ok((Operator::new(h0, dims.to_vec())?, Operator::new(hp, dims.to_vec())?))
}

/// `(Ω̃, Δ_s, g̃)` sample of the compensation curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkSample {
    pub omega_drive: f64,
    pub delta_s: f64,
    pub g_eff: f64,
}

/// Drive-frequency shift `Δ_s(Ω̃)` that keeps `|B⟩` and `|E⟩` degenerate, and
/// the per-qubit effective coupling `g̃(Ω̃)` at that shift.
///
/// `Δ_s` is measured from `static_shift`, the root at `Ω̃ = 0`, which absorbs
/// the dispersive shifts caused by the static couplings alone.
#[derive(Clone, Debug)]
pub struct StarkCurve {
    samples: Vec<StarkSample>,
    static_shift: f64,
    shift_interp: Pchip,
    coupling_interp: Option<Pchip>,
}

impl StarkCurve {
    pub fn new(samples: Vec<StarkSample>, static_shift: f64) -> Result<Self> {
        if samples.len() < 2 || samples[0].omega_drive != 0.0 {
            return Err(Error::InvalidParameter("a Stark curve needs at least two samples starting at zero drive".into()));
        }
        let x: Vec<f64> = samples.iter().map(|s| s.omega_drive).collect();
        let shift_interp = Pchip::new(x.clone(), samples.iter().map(|s| s.delta_s).collect())?;
        // Coupling inversion uses the strictly increasing prefix of the g̃ column.
        let mut end = 1;
        while end < samples.len() && samples[end].g_eff > samples[end - 1].g_eff {
            end += 1;
        }
        let coupling_interp = if end >= 2 {
            Some(Pchip::new(samples[..end].iter().map(|s| s.g_eff).collect(), x[..end].to_vec())?)
        } else {
            None
        };
        Ok(Self { samples, static_shift, shift_interp, coupling_interp })
    }

    pub fn samples(&self) -> &[StarkSample] {
        &self.samples
    }

    pub fn static_shift(&self) -> f64 {
        self.static_shift
    }

    pub fn max_drive(&self) -> f64 {
        self.samples[self.samples.len() - 1].omega_drive
    }

    /// Largest coupling the curve can deliver by inversion.
    pub fn max_coupling(&self) -> f64 {
        self.coupling_interp.as_ref().map_or(0.0, |p| p.x_range().1)
    }

    pub fn delta_s(&self, omega_drive: f64) -> f64 {
        self.shift_interp.eval(omega_drive)
    }

    /// Drive amplitude producing coupling `g_eff` (monotone interpolation).
    pub fn drive_for_coupling(&self, g_eff: f64) -> Result<f64> {
        let interp = self.coupling_interp.as_ref().ok_or_else(|| {
            Error::InvalidParameter("Stark curve has no increasing coupling branch".into())
        })?;
        let (lo, hi) = interp.x_range();
        if g_eff > hi * (1.0 + 1e-12) {
            return Err(Error::AmplitudeExceeded { peak: g_eff, cap: hi, required_tau_ns: f64::NAN });
        }
        if g_eff <= lo {
            return Ok(0.0);
        }
        Ok(interp.eval(g_eff))
    }

    /// CSV `omega_drive_rad_per_ns,delta_s_rad_per_ns,g_eff_rad_per_ns`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "omega_drive_rad_per_ns,delta_s_rad_per_ns,g_eff_rad_per_ns")?;
        for s in &self.samples {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", s.omega_drive, s.delta_s, s.g_eff)?;
        }
        Ok(())
    }
}

/// Indices of `{fgg, geg, ggf}`.
pub fn single_excitation_indices(system: &TwoQubitSystem) -> [usize; 3] {
    let dims = system.dims();
    let idx = |l, m, s| basis_index(&dims, &[l, m, s]).expect("labels in range");
    [idx(level::F, level::G, level::G), idx(level::G, level::E, level::G), idx(level::G, level::G, level::F)]
}

/// Effective Hamiltonian on a group of bare states: take the eigenvectors of
/// `h` with the largest weight on `group`, orthonormalize their projections
/// (des Cloizeaux) and return `S diag(λ) Sᵀ` in the bare-state order of `group`.
pub fn block_effective_hamiltonian(h: &DMatrix<f64>, group: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let (vectors, values) = (eig.eigenvectors, eig.eigenvalues);
    let k = group.len();
    let mut weights: Vec<(usize, f64)> = (0..vectors.ncols())
        .map(|c| (c, group.iter().map(|&r| vectors[(r, c)].powi(2)).sum::<f64>()))
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(values[a.0].total_cmp(&values[b.0])));
    let mut chosen: Vec<usize> = weights[..k].iter().map(|w| w.0).collect();
    chosen.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let x = DMatrix::from_fn(k, k, |i, j| vectors[(group[i], chosen[j])]);
    let svd = x.svd(true, true);
    let s = svd.u.expect("u requested") * svd.v_t.expect("v requested");
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, chosen.iter().map(|&c| values[c])));
    let heff = &s * lambda * s.transpose();
    let full = DMatrix::from_fn(h.nrows(), k, |r, j| vectors[(r, chosen[j])]);
    let dressed = full * s.transpose();
    (heff, dressed)
}

/// `⟨B|H_eff|B⟩ − ⟨E|H_eff|E⟩` at symmetric drive `Ω̃` and common shift `s`,
/// with `φ̃₁ = 0`, `φ̃₂ = −π` so that `|B⟩ = (|fgg⟩ − |ggf⟩)/√2`; also returns
/// the per-qubit coupling `|⟨fgg|H_eff|geg⟩|`.
pub fn stark_mismatch(system: &TwoQubitSystem, omega_drive: f64, shift: f64, scratch: &mut DMatrix<f64>) -> (f64, f64) {
    system.write_real([omega_drive; 2], [1.0, -1.0], shift, scratch);
    let group = single_excitation_indices(system);
    let (heff, _) = block_effective_hamiltonian(scratch, &group);
    let eta_b = 0.5 * (heff[(0, 0)] + heff[(2, 2)] - heff[(0, 2)] - heff[(2, 0)]);
    (eta_b - heff[(1, 1)], heff[(0, 1)].abs())
}

fn solve_shift(system: &TwoQubitSystem, omega_drive: f64, center: f64, scratch: &mut DMatrix<f64>) -> Result<(f64, f64)> {
    let p = system.params();
    let g = p.couplings[0].max(p.couplings[1]);
    let mut half = (omega_drive * omega_drive / p.detuning).max(g * g / p.detuning).max(1e-6);
    let mut f = |s: f64| stark_mismatch(system, omega_drive, s, scratch).0;
    for _ in 0..=10 {
        let (lo, hi) = (center - half, center + half);
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() {
            let root = numerics::brent(&mut f, lo, hi, 1e-13, 200)?;
            let (_, g_eff) = stark_mismatch(system, omega_drive, root, scratch);
            return Ok((root, g_eff));
        }
        half *= 2.0;
    }
    let (flo, fhi) = (f(center - half / 2.0), f(center + half / 2.0));
    Err(Error::SearchFailure {
        message: format!("no sign change of η_B − η_E at drive {omega_drive}: endpoint mismatches {flo:e}, {fhi:e}"),
        low: center - half / 2.0,
        high: center + half / 2.0,
    })
}

/// Compensation curve over an ascending drive grid starting at zero.
pub fn stark_compensation_curve(params: &TwoQubitDeviceParams, grid: &[f64]) -> Result<StarkCurve> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("drive grid must start at 0 and increase strictly".into()));
    }
    let system = TwoQubitSystem::new(*params)?;
    let n = system.dim();
    let mut scratch = DMatrix::zeros(n, n);
    let mut roots = Vec::with_capacity(grid.len());
    let mut center = 0.0;
    for &omega in grid {
        let (root, g_eff) = solve_shift(&system, omega, center, &mut scratch)?;
        roots.push((omega, root, g_eff));
        center = root;
    }
    let static_shift = roots[0].1;
    let samples = roots
        .into_iter()
        .map(|(omega_drive, root, g_eff)| StarkSample { omega_drive, delta_s: root - static_shift, g_eff })
        .collect();
    StarkCurve::new(samples, static_shift)
}

/// Uniform drive grid `0..=max` with `points` entries.
pub fn drive_grid(max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| max * i as f64 / (points - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{bright_dark_basis, inverse_engineer, standard_path, HolonomySpec};
    use crate::quantum::{StateVector, ONE};
    use nalgebra::DVector;

    #[test]
    fn ideal_model_dark_state_is_decoupled() {
        let spec = HolonomySpec::new(0.9, 0.4, PI);
        let path = standard_path(51.0, spec, 0.0).unwrap();
        let wf = inverse_engineer(&path, 1.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), DriveModel::Ideal3).unwrap();
        let (_, dark) = bright_dark_basis(spec.theta, spec.phi);
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..200 {
            h.write(51.0 * i as f64 / 199.0, &mut m);
            assert!((&m * dark.amplitudes()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_waveform_gives_zero_coupling() {
        let wf = ControlWaveform::zero(10.0, 1.0, 0.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, 1.0, &TransmonParams::default(), DriveModel::Ideal3).unwrap();
        assert!(h.operator(3.0).matrix().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let spec = HolonomySpec::hadamard();
        let path = standard_path(60.0, spec, 0.6).unwrap();
        let wf = inverse_engineer(&path, 1.0).unwrap();
        for model in [DriveModel::Ideal3, DriveModel::Leaky4] {
            let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), model).unwrap();
            for i in 0..50 {
                assert!(h.operator(1.2 * i as f64).hermiticity_error() < 1e-13);
            }
        }
    }

    #[test]
    fn ideal_couplings_match_bright_state() {
        let spec = HolonomySpec::new(1.1, -0.6, PI);
        let path = standard_path(51.0, spec, 0.0).unwrap();
        let wf = inverse_engineer(&path, 1.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), DriveModel::Ideal3).unwrap();
        let (bright, _) = bright_dark_basis(spec.theta, spec.phi);
        let t = 17.0;
        let c = wf.at(t);
        let e = StateVector::basis(&[3], 1).unwrap();
        // H|e⟩ = Ω e^{iφ₁} |b⟩
        let applied = h.operator(t).apply(&e).unwrap();
        let expected = bright.amplitudes() * C64::from_polar(c.omega, c.phi1);
        assert!((applied - expected).norm() < 1e-14);
    }

    #[test]
    fn free_two_qubit_hamiltonian_is_diagonal() {
        let p = TwoQubitDeviceParams { couplings: [0.0, 0.0], ..Default::default() };
        let sys = TwoQubitSystem::new(p).unwrap();
        let h = sys.hamiltonian(&DriveSnapshot::default());
        let m = h.matrix();
        for r in 0..64 {
            for c in 0..64 {
                if r != c {
                    assert_eq!(m[(r, c)], ZERO);
                }
            }
        }
        let dk = p.qubit_detuning(0);
        let f = sys.index("fgg").unwrap();
        assert!((m[(f, f)].re - (2.0 * dk - p.qubits[0].anharmonicity)).abs() < 1e-12);
        let e = sys.index("geg").unwrap();
        assert!((m[(f, f)].re - m[(e, e)].re).abs() < 1e-12);
        assert!((m[(e, e)].re - p.auxiliary_detuning()).abs() < 1e-12);
    }

    #[test]
    fn full_hamiltonian_is_hermitian() {
        let sys = TwoQubitSystem::new(Default::default()).unwrap();
        for (i, phase) in [0.3, -2.0, 1.7].iter().enumerate() {
            let drive = DriveSnapshot { omega: [0.4 * i as f64, 1.1], phase: [*phase, 0.2], shift: 0.05 * i as f64 };
            assert!(sys.hamiltonian(&drive).hermiticity_error() < 1e-14);
        }
    }

    #[test]
    fn real_writer_matches_complex_writer() {
        let sys = TwoQubitSystem::new(Default::default()).unwrap();
        let drive = DriveSnapshot { omega: [0.7, 0.7], phase: [0.0, PI], shift: 0.1 };
        let h = sys.hamiltonian(&drive);
        let mut real = DMatrix::zeros(64, 64);
        sys.write_real([0.7, 0.7], [1.0, -1.0], 0.1, &mut real);
        for (a, b) in h.matrix().iter().zip(real.iter()) {
            assert!((a.re - b).abs() < 1e-14 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_zero_drive() {
        let c = effective_couplings_closed_form(0.4, 0.0, 6.0, 2.5).unwrap();
        assert_eq!(c.g_eff, 0.0);
        assert!((c.eta_ge + 0.16 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_singular_detuning() {
        assert!(matches!(effective_couplings_closed_form(0.4, 1.0, 0.0, 2.5), Err(Error::SingularDetuning(_))));
        assert!(matches!(effective_couplings_closed_form(0.4, 1.0, 2.5, 2.5), Err(Error::SingularDetuning(_))));
    }

    #[test]
    fn closed_form_coupling_identity() {
        for (g, w, d, a) in [(0.4, 1.3, 6.28, 2.51), (0.1, 0.2, 3.0, 1.0), (1.0, 2.0, -4.0, 1.5)] {
            let c = effective_couplings_closed_form(g, w, d, a).unwrap();
            let compact = g * w * a / (SQRT_2 * d * (d - a));
            assert!((c.g_eff - compact).abs() < 1e-12 * compact.abs());
        }
    }

    #[test]
    fn perturbation_vanishes_without_coupling() {
        let h0 = Operator::diagonal(&[0.0, 1.0, 0.0]);
        let hp = Operator::zeros(&[3]);
        let out = second_order_perturbation(&h0, &hp, &[0, 2]).unwrap();
        assert!(out.matrix().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn perturbation_lambda_raman() {
        let (g1, g2, delta) = (0.03, 0.05, 1.2);
        let h0 = Operator::diagonal(&[0.0, delta, 0.0]);
        let mut v = DMatrix::<C64>::zeros(3, 3);
        v[(0, 1)] = C64::from(g1);
        v[(1, 0)] = C64::from(g1);
        v[(1, 2)] = C64::from(g2);
        v[(2, 1)] = C64::from(g2);
        let out = second_order_perturbation(&h0, &Operator::from_matrix(v).unwrap(), &[0, 2]).unwrap();
        assert!((out.get(0, 1).re + g1 * g2 / delta).abs() < 1e-15);
        assert!((out.get(0, 0).re + g1 * g1 / delta).abs() < 1e-15);
    }

    #[test]
    fn perturbation_preconditions() {
        let h0 = Operator::diagonal(&[0.0, 1.0, 0.5]);
        let hp = Operator::zeros(&[3]);
        assert!(matches!(second_order_perturbation(&h0, &hp, &[0, 2]), Err(Error::Precondition(_))));
        let mut m = DMatrix::<C64>::identity(3, 3);
        m[(0, 1)] = ONE;
        let offdiag = Operator::from_matrix(m).unwrap();
        assert!(matches!(second_order_perturbation(&offdiag, &hp, &[0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn perturbation_on_qubit_auxiliary_pair() {
        let (g, w, d, a, phase) = (mhz(65.0), mhz(200.0), mhz(1000.0), mhz(400.0), 0.7);
        let (h0, hp) = qubit_auxiliary_pair(g, w, phase, d, a, mhz(370.0)).unwrap();
        let ge = basis_index(&[4, 4], &[0, 1]).unwrap();
        let fg = basis_index(&[4, 4], &[2, 0]).unwrap();
        let out = second_order_perturbation(&h0, &hp, &[ge, fg]).unwrap();
        let c = effective_couplings_closed_form(g, w, d, a).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(out.get(0, 0).re, c.eta_ge) < 1e-12);
        assert!(rel(out.get(1, 1).re, c.eta_fg + eta_fg_drive_term(w, d)) < 1e-12);
        let off = out.get(1, 0);
        assert!((off - C64::from_polar(c.g_eff, -phase)).norm() < 1e-12 * c.g_eff);
    }

    #[test]
    fn block_effective_hamiltonian_reproduces_isolated_block() {
        // With no coupling out of the group the effective block is the block itself.
        let mut h = DMatrix::<f64>::zeros(4, 4);
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.1;
        h[(0, 1)] = 0.2;
        h[(1, 0)] = 0.2;
        h[(2, 2)] = 5.0;
        h[(3, 3)] = -4.0;
        let (heff, _) = block_effective_hamiltonian(&h, &[0, 1]);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((heff[(i, j)] - h[(i, j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn stark_curve_basic_properties() {
        let params = TwoQubitDeviceParams::default();
        let curve = stark_compensation_curve(&params, &drive_grid(mhz(400.0), 11)).unwrap();
        let s = curve.samples();
        assert_eq!(s[0].delta_s, 0.0);
        assert!(s[0].g_eff < 1e-9);
        for w in s.windows(2) {
            assert!(w[1].delta_s.abs() >= w[0].delta_s.abs());
            assert!(w[1].g_eff > w[0].g_eff);
        }
        let sys = TwoQubitSystem::new(params).unwrap();
        let mut scratch = DMatrix::zeros(64, 64);
        for p in s {
            let (mismatch, _) = stark_mismatch(&sys, p.omega_drive, p.delta_s + curve.static_shift(), &mut scratch);
            assert!(mismatch.abs() < 1e-6);
        }
        // Small-drive slope follows the closed form.
        let (d, a, g) = (params.detuning, params.qubits[0].anharmonicity, params.couplings[0]);
        let slope = g * a / (SQRT_2 * d * (d - a));
        let ratio = s[1].g_eff / (slope * s[1].omega_drive);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn stark_curve_rejects_bad_grid() {
        let p = TwoQubitDeviceParams::default();
        assert!(stark_compensation_curve(&p, &[0.1, 0.2]).is_err());
        assert!(stark_compensation_curve(&p, &[0.0, 0.2, 0.2]).is_err());
    }

    #[test]
    fn stark_curve_inversion_round_trip() {
        let samples = vec![
            StarkSample { omega_drive: 0.0, delta_s: 0.0, g_eff: 0.0 },
            StarkSample { omega_drive: 1.0, delta_s: -0.1, g_eff: 0.02 },
            StarkSample { omega_drive: 2.0, delta_s: -0.3, g_eff: 0.045 },
        ];
        let curve = StarkCurve::new(samples, 0.1).unwrap();
        for g in [0.0, 0.01, 0.02, 0.03, 0.045] {
            let w = curve.drive_for_coupling(g).unwrap();
            let back = Pchip::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.02, 0.045]).unwrap().eval(w);
            assert!((back - g).abs() < 2e-3, "g={g}");
        }
        assert!(matches!(curve.drive_for_coupling(0.05), Err(Error::AmplitudeExceeded { .. })));
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("omega_drive_rad_per_ns,delta_s_rad_per_ns,g_eff_rad_per_ns\n"));
    }

    #[test]
    fn dims_and_indices() {
        let sys = TwoQubitSystem::new(Default::default()).unwrap();
        assert_eq!(sys.dims(), [4, 4, 4]);
        assert_eq!(single_excitation_indices(&sys), [32, 4, 2]);
        let v = DVector::from_element(64, ONE);
        assert_eq!(v.len(), sys.dim());
    }
}
