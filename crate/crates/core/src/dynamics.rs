//! Fixed-step RK4 propagation of pure states, unitaries and density matrices.
//!
//! Each step evaluates `H` at `t`, `t + dt/2` and `t + dt`; the end-point
//! evaluation is reused as the start of the next step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quantum::kernel::SparseCols;
use crate::quantum::{DensityMatrix, Operator, StateVector, C64, I, ZERO};
use crate::transmon::TransmonParams;

pub const DEFAULT_DT_NS: f64 = 0.005;
pub const MAX_TRAJECTORY_SAMPLES: usize = 2001;
/// Largest tolerated drift of `‖ψ‖²` or `tr ρ`.
pub const DRIFT_TOL: f64 = 1e-6;
/// Most negative tolerated eigenvalue of `ρ`.
pub const POSITIVITY_TOL: f64 = 1e-6;

/// Time-dependent Hermitian generator in rad/ns.
pub trait Hamiltonian: Sync {
    fn dims(&self) -> Vec<usize>;

    /// Overwrite the `dim × dim` buffer `out` with `H(t)`.
    fn write(&self, t: f64, out: &mut DMatrix<C64>);

    fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    fn operator(&self, t: f64) -> Operator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        self.write(t, &mut m);
        Operator::new(m, self.dims()).expect("Hamiltonian dims match its buffer")
    }
}

impl Hamiltonian for Operator {
    fn dims(&self) -> Vec<usize> {
        Operator::dims(self).to_vec()
    }

    fn write(&self, _t: f64, out: &mut DMatrix<C64>) {
        out.copy_from(self.matrix());
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionOptions {
    pub dt: f64,
    pub max_samples: usize,
    /// State whose population is recorded in `Trajectory::fidelity`.
    pub target: Option<StateVector>,
    /// States whose populations are recorded instead of the basis populations.
    pub readout: Vec<StateVector>,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT_NS, max_samples: MAX_TRAJECTORY_SAMPLES, target: None, readout: Vec::new() }
    }
}

impl EvolutionOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn with_target(self, target: StateVector) -> Self {
        Self { target: Some(target), ..self }
    }
}

/// Decimated record of basis populations and, optionally, target fidelity.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub fidelity: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult<S> {
    pub final_state: S,
    pub trajectory: Trajectory,
    /// Largest `|‖ψ‖² − 1|` or `|tr ρ − 1|` seen.
    pub max_drift: f64,
    /// Smallest eigenvalue of `ρ` over the recorded samples (`0` for pure states).
    pub min_eigenvalue: f64,
    pub steps: usize,
}

struct Stepper {
    steps: usize,
    h: f64,
    stride: usize,
}

impl Stepper {
    fn new(t0: f64, t1: f64, opts: &EvolutionOptions) -> Result<Self> {
        if !(opts.dt > 0.0) || !opts.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", opts.dt)));
        }
        if !(t1 >= t0) {
            return Err(Error::InvalidParameter(format!("end time {t1} precedes start {t0}")));
        }
        let steps = (((t1 - t0) / opts.dt) - 1e-9).ceil().max(0.0) as usize;
        let h = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
        let slots = opts.max_samples.max(2) - 1;
        let stride = steps.div_ceil(slots).max(1);
        Ok(Self { steps, h, stride })
    }

    fn records(&self, k: usize) -> bool {
        k % self.stride == 0 || k == self.steps
    }
}

/// Writes `H(t)` into a dense buffer and its sparse view, optionally
/// subtracting a fixed anti-Hermitian part `i K`.
struct Generator<'a, H: Hamiltonian + ?Sized> {
    h: &'a H,
    n: usize,
    dense: DMatrix<C64>,
    damping: Option<DMatrix<C64>>,
}

impl<'a, H: Hamiltonian + ?Sized> Generator<'a, H> {
    fn new(h: &'a H, damping: Option<DMatrix<C64>>) -> Self {
        let n = h.dim();
        Self { h, n, dense: DMatrix::zeros(n, n), damping }
    }

    fn fill(&mut self, t: f64, out: &mut SparseCols) {
        self.h.write(t, &mut self.dense);
        if let Some(k) = &self.damping {
            self.dense -= k * I;
        }
        out.refill(self.dense.as_slice(), self.n);
    }
}

fn pure_overlap(target: &StateVector, psi: &[C64]) -> f64 {
    target.amplitudes().iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

fn mixed_overlap(target: &StateVector, rho: &[C64]) -> f64 {
    let a = target.amplitudes();
    let n = a.len();
    let mut f = ZERO;
    for c in 0..n {
        if a[c] == ZERO {
            continue;
        }
        let col: C64 = (0..n).map(|r| a[r].conj() * rho[c * n + r]).sum();
        f += col * a[c];
    }
    f.re
}

/// Integrate `i dψ/dt = H ψ` from `t0` to `t1`.
pub fn evolve_schrodinger<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    opts: &EvolutionOptions,
) -> Result<EvolutionResult<StateVector>> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::InvalidDimension(format!("state has dimension {} but H has {n}", psi0.len())));
    }
    let stepper = Stepper::new(t0, t1, opts)?;
    let mut generator = Generator::new(h, None);
    let (mut h_start, mut h_mid, mut h_end) =
        (SparseCols::with_capacity(n), SparseCols::with_capacity(n), SparseCols::with_capacity(n));
    let mut psi: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut scratch = vec![ZERO; n];
    let mut k = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let minus_i = -I;
    let mut trajectory = Trajectory::default();
    let mut max_drift = 0.0f64;
    let record = |t: f64, psi: &[C64], trajectory: &mut Trajectory| {
        trajectory.times.push(t);
        trajectory.populations.push(if opts.readout.is_empty() {
            psi.iter().map(|a| a.norm_sqr()).collect()
        } else {
            opts.readout.iter().map(|o| pure_overlap(o, psi)).collect()
        });
        if let Some(target) = &opts.target {
            trajectory.fidelity.push(pure_overlap(target, psi));
        }
    };
    record(t0, &psi, &mut trajectory);
    generator.fill(t0, &mut h_start);
    let hstep = stepper.h;
    for step in 1..=stepper.steps {
        let t = t0 + (step - 1) as f64 * hstep;
        generator.fill(t + 0.5 * hstep, &mut h_mid);
        generator.fill(t + hstep, &mut h_end);
        h_start.mul_into(&psi, 1, minus_i, &mut k[0]);
        axpy(&psi, &k[0], 0.5 * hstep, &mut scratch);
        h_mid.mul_into(&scratch, 1, minus_i, &mut k[1]);
        axpy(&psi, &k[1], 0.5 * hstep, &mut scratch);
        h_mid.mul_into(&scratch, 1, minus_i, &mut k[2]);
        axpy(&psi, &k[2], hstep, &mut scratch);
        h_end.mul_into(&scratch, 1, minus_i, &mut k[3]);
        rk4_combine(&mut psi, &k, hstep);
        std::mem::swap(&mut h_start, &mut h_end);
        let drift = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > DRIFT_TOL {
            return Err(Error::Accuracy { drift, dt: hstep });
        }
        if stepper.records(step) {
            record(if step == stepper.steps { t1 } else { t + hstep }, &psi, &mut trajectory);
        }
    }
    let final_state = StateVector::from_raw(DVector::from_vec(psi), psi0.dims().to_vec());
    Ok(EvolutionResult { final_state, trajectory, max_drift, min_eigenvalue: 0.0, steps: stepper.steps })
}

fn axpy(x: &[C64], k: &[C64], a: f64, out: &mut [C64]) {
    for ((o, x), k) in out.iter_mut().zip(x).zip(k) {
        *o = x + k * a;
    }
}

fn rk4_combine(x: &mut [C64], k: &[Vec<C64>; 4], h: f64) {
    let w = h / 6.0;
    for (i, v) in x.iter_mut().enumerate() {
        *v += (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) * w;
    }
}

/// `U(t1, t0)` by propagating all basis columns together.
pub fn propagator<H: Hamiltonian + ?Sized>(h: &H, t0: f64, t1: f64, dt: f64) -> Result<Operator> {
    let n = h.dim();
    let opts = EvolutionOptions::with_dt(dt);
    let stepper = Stepper::new(t0, t1, &opts)?;
    let mut generator = Generator::new(h, None);
    let (mut h_start, mut h_mid, mut h_end) =
        (SparseCols::with_capacity(n), SparseCols::with_capacity(n), SparseCols::with_capacity(n));
    let mut u: Vec<C64> = DMatrix::<C64>::identity(n, n).as_slice().to_vec();
    let mut scratch = vec![ZERO; n * n];
    let mut k = [vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n]];
    let minus_i = -I;
    generator.fill(t0, &mut h_start);
    let hstep = stepper.h;
    for step in 1..=stepper.steps {
        let t = t0 + (step - 1) as f64 * hstep;
        generator.fill(t + 0.5 * hstep, &mut h_mid);
        generator.fill(t + hstep, &mut h_end);
        h_start.mul_into(&u, n, minus_i, &mut k[0]);
        axpy(&u, &k[0], 0.5 * hstep, &mut scratch);
        h_mid.mul_into(&scratch, n, minus_i, &mut k[1]);
        axpy(&u, &k[1], 0.5 * hstep, &mut scratch);
        h_mid.mul_into(&scratch, n, minus_i, &mut k[2]);
        axpy(&u, &k[2], hstep, &mut scratch);
        h_end.mul_into(&scratch, n, minus_i, &mut k[3]);
        rk4_combine(&mut u, &k, hstep);
        std::mem::swap(&mut h_start, &mut h_end);
    }
    let m = DMatrix::from_vec(n, n, u);
    let drift = (m.adjoint() * &m - DMatrix::<C64>::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if drift > DRIFT_TOL {
        return Err(Error::Accuracy { drift, dt: hstep });
    }
    Operator::new(m, h.dims())
}

/// Collapse operator `A` with rate `Γ`, entering as `Γ(AρA† − ½{A†A, ρ})`.
#[derive(Clone, Debug)]
pub struct CollapseOperator {
    pub rate: f64,
    pub operator: Operator,
}

#[derive(Clone, Debug, Default)]
pub struct NoiseModel {
    pub channels: Vec<CollapseOperator>,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.iter().all(|c| c.rate == 0.0)
    }

    /// Relaxation `σ₁ = Σ √(j+1)|j⟩⟨j+1|` at `Γ₁` and dephasing
    /// `σ₂ = Σ j|j⟩⟨j|` at `Γ₂` on each listed transmon of a product space.
    pub fn transmons(dims: &[usize], params: &[(usize, TransmonParams)]) -> Result<Self> {
        let mut channels = Vec::new();
        for &(position, p) in params {
            let levels = *dims
                .get(position)
                .ok_or_else(|| Error::InvalidDimension(format!("no subsystem at position {position}")))?;
            let lowering = crate::quantum::annihilation_op(levels)?.embed(position, dims)?;
            let number = crate::quantum::number_op(levels)?.embed(position, dims)?;
            if p.decay_rate > 0.0 {
                channels.push(CollapseOperator { rate: p.decay_rate, operator: lowering });
            }
            if p.dephasing_rate > 0.0 {
                channels.push(CollapseOperator { rate: p.dephasing_rate, operator: number });
            }
        }
        Ok(Self { channels })
    }

    /// Single transmon truncated to `levels`.
    pub fn single(levels: usize, params: &TransmonParams) -> Result<Self> {
        Self::transmons(&[levels], &[(0, *params)])
    }

    /// `K = ½ Σ Γ A†A`.
    fn damping(&self, n: usize) -> DMatrix<C64> {
        let mut k = DMatrix::zeros(n, n);
        for c in &self.channels {
            let a = c.operator.matrix();
            k += a.adjoint() * a * C64::from(0.5 * c.rate);
        }
        k
    }

    /// Nonzero entries `(row, col, √Γ a)` of each `√Γ A`.
    fn jumps(&self) -> Vec<Vec<(usize, usize, C64)>> {
        self.channels
            .iter()
            .filter(|c| c.rate > 0.0)
            .map(|c| {
                let a = c.operator.matrix();
                let s = c.rate.sqrt();
                let mut entries = Vec::new();
                for col in 0..a.ncols() {
                    for row in 0..a.nrows() {
                        if a[(row, col)] != ZERO {
                            entries.push((row, col, a[(row, col)] * s));
                        }
                    }
                }
                entries
            })
            .collect()
    }
}

/// `dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ Γ AρA†` with `H_eff = H − iK`.
struct LindbladRhs {
    n: usize,
    jumps: Vec<Vec<(usize, usize, C64)>>,
    product: Vec<C64>,
}

impl LindbladRhs {
    fn eval(&mut self, heff: &SparseCols, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        heff.mul_into(rho, n, -I, &mut self.product);
        for c in 0..n {
            for r in 0..n {
                out[c * n + r] = self.product[c * n + r] + self.product[r * n + c].conj();
            }
        }
        for entries in &self.jumps {
            for &(r1, c1, v1) in entries {
                for &(r2, c2, v2) in entries {
                    out[r2 * n + r1] += v1 * v2.conj() * rho[c2 * n + c1];
                }
            }
        }
    }
}

fn min_eigenvalue(rho: &[C64], n: usize) -> f64 {
    let m = DMatrix::from_column_slice(n, n, rho);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Integrate the Lindblad equation from `t0` to `t1`.
pub fn evolve_lindblad<H: Hamiltonian + ?Sized>(
    h: &H,
    noise: &NoiseModel,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    opts: &EvolutionOptions,
) -> Result<EvolutionResult<DensityMatrix>> {
    let n = h.dim();
    if rho0.dim() != n {
        return Err(Error::InvalidDimension(format!("ρ has dimension {} but H has {n}", rho0.dim())));
    }
    if let Some(c) = noise.channels.iter().find(|c| c.operator.dim() != n) {
        return Err(Error::InvalidDimension(format!("collapse operator has dimension {}", c.operator.dim())));
    }
    let stepper = Stepper::new(t0, t1, opts)?;
    let mut generator = Generator::new(h, Some(noise.damping(n)));
    let (mut h_start, mut h_mid, mut h_end) =
        (SparseCols::with_capacity(n), SparseCols::with_capacity(n), SparseCols::with_capacity(n));
    let mut rhs = LindbladRhs { n, jumps: noise.jumps(), product: vec![ZERO; n * n] };
    let mut rho: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let mut scratch = vec![ZERO; n * n];
    let mut k = [vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n]];
    let mut trajectory = Trajectory::default();
    let mut max_drift = 0.0f64;
    let mut lowest = f64::INFINITY;
    let mut record = |t: f64, rho: &[C64], trajectory: &mut Trajectory| -> Result<()> {
        trajectory.times.push(t);
        trajectory.populations.push(if opts.readout.is_empty() {
            (0..n).map(|i| rho[i * n + i].re).collect()
        } else {
            opts.readout.iter().map(|o| mixed_overlap(o, rho)).collect()
        });
        if let Some(target) = &opts.target {
            trajectory.fidelity.push(mixed_overlap(target, rho));
        }
        let low = min_eigenvalue(rho, n);
        lowest = lowest.min(low);
        if low < -POSITIVITY_TOL {
            return Err(Error::Positivity { min_eigenvalue: low, t_ns: t });
        }
        Ok(())
    };
    record(t0, &rho, &mut trajectory)?;
    generator.fill(t0, &mut h_start);
    let hstep = stepper.h;
    for step in 1..=stepper.steps {
        let t = t0 + (step - 1) as f64 * hstep;
        generator.fill(t + 0.5 * hstep, &mut h_mid);
        generator.fill(t + hstep, &mut h_end);
        rhs.eval(&h_start, &rho, &mut k[0]);
        axpy(&rho, &k[0], 0.5 * hstep, &mut scratch);
        rhs.eval(&h_mid, &scratch, &mut k[1]);
        axpy(&rho, &k[1], 0.5 * hstep, &mut scratch);
        rhs.eval(&h_mid, &scratch, &mut k[2]);
        axpy(&rho, &k[2], hstep, &mut scratch);
        rhs.eval(&h_end, &scratch, &mut k[3]);
        rk4_combine(&mut rho, &k, hstep);
        symmetrize(&mut rho, n);
        std::mem::swap(&mut h_start, &mut h_end);
        let trace: f64 = (0..n).map(|i| rho[i * n + i].re).sum();
        let drift = (trace - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > DRIFT_TOL {
            return Err(Error::Accuracy { drift, dt: hstep });
        }
        if stepper.records(step) {
            record(if step == stepper.steps { t1 } else { t + hstep }, &rho, &mut trajectory)?;
        }
    }
    let final_state = DensityMatrix::from_raw(DMatrix::from_vec(n, n, rho), rho0.dims().to_vec());
    Ok(EvolutionResult { final_state, trajectory, max_drift, min_eigenvalue: lowest, steps: stepper.steps })
}

fn symmetrize(rho: &mut [C64], n: usize) {
    for c in 0..n {
        rho[c * n + c].im = 0.0;
        for r in (c + 1)..n {
            let avg = 0.5 * (rho[c * n + r] + rho[r * n + c].conj());
            rho[c * n + r] = avg;
            rho[r * n + c] = avg.conj();
        }
    }
}

/// `exp(−iHt)` of a time-independent Hermitian operator by eigendecomposition.
pub fn exact_propagator(h: &Operator, t: f64) -> Result<Operator> {
    if !h.is_hermitian(1e-10) {
        return Err(Error::InvalidParameter("exact propagation needs a Hermitian operator".into()));
    }
    let eig = h.matrix().clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    let v = eig.eigenvectors;
    Operator::new(&v * phases * v.adjoint(), Operator::dims(h).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{annihilation_op, ONE};
    use std::f64::consts::PI;

    struct Rabi {
        omega: f64,
    }

    impl Hamiltonian for Rabi {
        fn dims(&self) -> Vec<usize> {
            vec![2]
        }
        fn write(&self, _t: f64, out: &mut DMatrix<C64>) {
            out.fill(ZERO);
            out[(0, 1)] = C64::from(self.omega / 2.0);
            out[(1, 0)] = C64::from(self.omega / 2.0);
        }
    }

    struct Chirped;

    impl Hamiltonian for Chirped {
        fn dims(&self) -> Vec<usize> {
            vec![2]
        }
        fn write(&self, t: f64, out: &mut DMatrix<C64>) {
            out.fill(ZERO);
            let c = C64::from_polar(0.3 * (0.2 * t).cos(), 0.4 * t);
            out[(0, 1)] = c;
            out[(1, 0)] = c.conj();
            out[(1, 1)] = C64::from(0.1 * t);
        }
    }

    #[test]
    fn rabi_flop_completes() {
        let psi0 = StateVector::basis(&[2], 0).unwrap();
        let r = evolve_schrodinger(&Rabi { omega: 1.0 }, &psi0, 0.0, PI, &EvolutionOptions::with_dt(0.01)).unwrap();
        assert!((r.final_state.population(1) - 1.0).abs() < 1e-10);
        assert!(r.trajectory.times.len() <= MAX_TRAJECTORY_SAMPLES);
        assert_eq!(*r.trajectory.times.last().unwrap(), PI);
    }

    #[test]
    fn static_propagator_matches_exponential() {
        let a = annihilation_op(4).unwrap();
        let x = a.add(&a.dagger()).unwrap();
        let h = x.add(&Operator::diagonal(&[0.0, 0.3, -0.2, 1.0])).unwrap();
        let u = propagator(&h, 0.0, 3.0, 0.002).unwrap();
        let exact = exact_propagator(&h, 3.0).unwrap();
        assert!(crate::quantum::max_abs_diff(u.matrix(), exact.matrix()) < 1e-10);
    }

    #[test]
    fn propagator_agrees_with_state_evolution() {
        let u = propagator(&Chirped, 0.0, 20.0, 0.005).unwrap();
        let psi0 = StateVector::normalized(DVector::from_vec(vec![C64::new(0.6, 0.1), C64::new(0.0, -0.79)]), vec![2]).unwrap();
        let r = evolve_schrodinger(&Chirped, &psi0, 0.0, 20.0, &EvolutionOptions::default()).unwrap();
        let via_u = u.apply(&psi0).unwrap();
        assert!((via_u - r.final_state.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn lindblad_without_noise_matches_pure_evolution() {
        let psi0 = StateVector::basis(&[2], 0).unwrap();
        let pure = evolve_schrodinger(&Chirped, &psi0, 0.0, 15.0, &EvolutionOptions::default()).unwrap();
        let mixed = evolve_lindblad(&Chirped, &NoiseModel::none(), &psi0.to_density(), 0.0, 15.0, &EvolutionOptions::default()).unwrap();
        let expected = pure.final_state.to_density();
        let diff = crate::quantum::max_abs_diff(mixed.final_state.matrix(), expected.matrix());
        assert!(diff < 1e-10, "{diff:e}");
    }

    #[test]
    fn free_decay_is_exponential() {
        let gamma = 0.05;
        let p = TransmonParams { levels: 3, anharmonicity: 1.0, decay_rate: gamma, dephasing_rate: 0.0 };
        let noise = NoiseModel::single(3, &p).unwrap();
        let h = Operator::zeros(&[3]);
        let rho0 = StateVector::basis(&[3], 1).unwrap().to_density();
        let r = evolve_lindblad(&h, &noise, &rho0, 0.0, 10.0, &EvolutionOptions::with_dt(0.01)).unwrap();
        assert!((r.final_state.population(1) - (-gamma * 10.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dephasing_decays_coherence() {
        let gamma = 0.02;
        let p = TransmonParams { levels: 3, anharmonicity: 1.0, decay_rate: 0.0, dephasing_rate: gamma };
        let noise = NoiseModel::single(3, &p).unwrap();
        let h = Operator::zeros(&[3]);
        let plus = StateVector::normalized(DVector::from_vec(vec![ONE, ZERO, ONE]), vec![3]).unwrap();
        let r = evolve_lindblad(&h, &noise, &plus.to_density(), 0.0, 10.0, &EvolutionOptions::with_dt(0.01)).unwrap();
        // |g⟩⟨f| decays at Γ (2 − 0)² / 2.
        let expected = 0.5 * (-gamma * 2.0 * 10.0f64).exp();
        assert!((r.final_state.matrix()[(0, 2)].re - expected).abs() < 1e-10);
    }

    #[test]
    fn decimation_caps_samples() {
        let psi0 = StateVector::basis(&[2], 0).unwrap();
        let opts = EvolutionOptions { dt: 0.001, max_samples: 101, target: Some(psi0.clone()), readout: Vec::new() };
        let r = evolve_schrodinger(&Rabi { omega: 0.4 }, &psi0, 0.0, 10.0, &opts).unwrap();
        assert!(r.trajectory.times.len() <= 101);
        assert_eq!(r.trajectory.fidelity.len(), r.trajectory.times.len());
        assert_eq!(r.trajectory.fidelity[0], 1.0);
    }

    #[test]
    fn coarse_step_reports_accuracy_error() {
        let psi0 = StateVector::basis(&[2], 0).unwrap();
        let r = evolve_schrodinger(&Rabi { omega: 10.0 }, &psi0, 0.0, 10.0, &EvolutionOptions::with_dt(0.2));
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let psi0 = StateVector::basis(&[3], 0).unwrap();
        assert!(evolve_schrodinger(&Rabi { omega: 1.0 }, &psi0, 0.0, 1.0, &EvolutionOptions::default()).is_err());
        let psi0 = StateVector::basis(&[2], 0).unwrap();
        assert!(evolve_schrodinger(&Rabi { omega: 1.0 }, &psi0, 0.0, 1.0, &EvolutionOptions::with_dt(0.0)).is_err());
        assert!(evolve_schrodinger(&Rabi { omega: 1.0 }, &psi0, 1.0, 0.0, &EvolutionOptions::default()).is_err());
    }
}
