//! Evolution paths `(χ(t), φ(t))`, inverse engineering of the drive controls,
//! dynamical phase, systematic-error sensitivity and target holonomies.
//!
//! The evolution state in the `{|b⟩, |e⟩}` subspace is
//! `e^{-if/2} (cos(χ/2) e^{-iφ/2}, sin(χ/2) e^{iφ/2})`, and the Schrödinger
//! equation under `H = Ω e^{iφ₁}|b⟩⟨e| + h.c.` reduces to
//!
//! ```text
//! ḟ = -φ̇ / cos χ,   χ̇ = -2Ω sin(φ₁ + φ),   φ̇ = -2Ω cot χ cos(φ₁ + φ).
//! ```
//!
//! Eliminating `φ̇` with the first relation gives the regular pair
//! `2Ω sin β = -χ̇`, `2Ω cos β = ḟ sin χ` with `β = φ₁ + φ`, which is what the
//! inverse engineering solves.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;
use crate::quantum::{StateVector, C64, ZERO};

/// Default number of waveform samples per path segment.
pub const SAMPLES_PER_SEGMENT: usize = 2000;
/// Absolute tolerance of the path quadratures.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Rotation `e^{iγ/2} e^{-i(γ/2) n·σ}` about `n = (sinθ cosφ, -sinθ sinφ, cosθ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomySpec {
    pub theta: f64,
    pub phi: f64,
    pub gamma: f64,
}

impl HolonomySpec {
    pub fn new(theta: f64, phi: f64, gamma: f64) -> Self {
        Self { theta, phi, gamma }
    }

    pub fn not_gate() -> Self {
        Self::new(FRAC_PI_2, 0.0, PI)
    }

    pub fn hadamard() -> Self {
        Self::new(PI / 4.0, 0.0, PI)
    }

    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, -st * sp, ct]
    }
}

/// Target gate on the qubit basis `{g, f}`.
pub fn holonomy_target(spec: &HolonomySpec) -> DMatrix<C64> {
    let (st, ct) = spec.theta.sin_cos();
    let (sg, cg) = (spec.gamma / 2.0).sin_cos();
    let n_sigma = DMatrix::from_row_slice(
        2,
        2,
        &[C64::from(ct), C64::from_polar(st, spec.phi), C64::from_polar(st, -spec.phi), C64::from(-ct)],
    );
    let rotation = DMatrix::<C64>::identity(2, 2) * C64::from(cg) - n_sigma * C64::new(0.0, sg);
    rotation * C64::from_polar(1.0, spec.gamma / 2.0)
}

/// Bright and dark amplitudes on `(g, f)`.
pub fn bright_dark_amplitudes(theta: f64, phi: f64) -> ([C64; 2], [C64; 2]) {
    let (s, c) = (theta / 2.0).sin_cos();
    let bright = [C64::from(s), -C64::from_polar(c, -phi)];
    let dark = [-C64::from_polar(c, phi), C64::from(-s)];
    (bright, dark)
}

/// `|b⟩ = sin(θ/2)|g⟩ − cos(θ/2)e^{−iφ}|f⟩` and `|d⟩ = −cos(θ/2)e^{iφ}|g⟩ − sin(θ/2)|f⟩`
/// in the three-level space `{g, e, f}`.
pub fn bright_dark_basis(theta: f64, phi: f64) -> (StateVector, StateVector) {
    let (b, d) = bright_dark_amplitudes(theta, phi);
    let embed = |v: [C64; 2]| StateVector::from_raw(DVector::from_vec(vec![v[0], ZERO, v[1]]), vec![3]);
    (embed(b), embed(d))
}

/// Phase profile `φ(t)` of one segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseProfile {
    /// `φ = sign·(π/5)·sin(2πt/τ) + offset`.
    Modulated { sign: f64, offset: f64 },
    /// `φ = offset − (4n/3)·sin³χ`, the primitive of `φ̇ = −ḟ cos χ` for `f = n(2χ − sin 2χ)`.
    Family { n: f64, offset: f64 },
}

/// Path values and derivatives at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub chi: f64,
    pub chi_dot: f64,
    pub phi: f64,
    pub phi_dot: f64,
    pub f_dot: f64,
}

/// One half of the loop, with `χ = π sin²(πt/τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub start_ns: f64,
    pub end_ns: f64,
    tau_ns: f64,
    pub profile: PhaseProfile,
}

impl PathSegment {
    pub fn chi(&self, t: f64) -> f64 {
        PI * (PI * t / self.tau_ns).sin().powi(2)
    }

    pub fn chi_dot(&self, t: f64) -> f64 {
        PI * PI / self.tau_ns * (2.0 * PI * t / self.tau_ns).sin()
    }

    pub fn phi(&self, t: f64) -> f64 {
        match self.profile {
            PhaseProfile::Modulated { sign, offset } => sign * PI / 5.0 * (2.0 * PI * t / self.tau_ns).sin() + offset,
            PhaseProfile::Family { n, offset } => offset - 4.0 * n / 3.0 * self.chi(t).sin().powi(3),
        }
    }

    pub fn point(&self, t: f64) -> PathPoint {
        let chi = self.chi(t);
        let chi_dot = self.chi_dot(t);
        let omega_t = 2.0 * PI / self.tau_ns;
        let (phi_dot, f_dot) = match self.profile {
            PhaseProfile::Modulated { sign, .. } => {
                let c = (omega_t * t).cos();
                let phi_dot = sign * PI / 5.0 * omega_t * c;
                // cos χ = sin((π/2) cos(2πt/τ)), so ḟ = -φ̇/cos χ = -sign·(4π/5τ)·x/sin x.
                let x = FRAC_PI_2 * c;
                let x_over_sin = if x.abs() < 1e-8 { 1.0 + x * x / 6.0 } else { x / x.sin() };
                (phi_dot, -sign * 4.0 * PI / (5.0 * self.tau_ns) * x_over_sin)
            }
            PhaseProfile::Family { n, .. } => {
                let f_dot = 4.0 * n * chi.sin().powi(2) * chi_dot;
                (-f_dot * chi.cos(), f_dot)
            }
        };
        PathPoint { chi, chi_dot, phi: self.phi(t), phi_dot, f_dot }
    }

    /// `f(t) − f(start)`.
    pub fn f_relative(&self, t: f64) -> Result<f64> {
        match self.profile {
            PhaseProfile::Family { n, .. } => {
                let g = |chi: f64| n * (2.0 * chi - (2.0 * chi).sin());
                Ok(g(self.chi(t)) - g(self.chi(self.start_ns)))
            }
            PhaseProfile::Modulated { .. } => {
                numerics::integrate(|s| self.point(s).f_dot, self.start_ns, t, 1e-13)
            }
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_ns - self.start_ns
    }
}

/// The two-segment cyclic path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    tau_ns: f64,
    n: f64,
    holonomy: HolonomySpec,
    segments: [PathSegment; 2],
}

/// Modulated path for `n = 0`, otherwise the zero-sensitivity family.
pub fn standard_path(tau_ns: f64, holonomy: HolonomySpec, n: f64) -> Result<PathSpec> {
    if n == 0.0 {
        PathSpec::modulated(tau_ns, holonomy)
    } else {
        PathSpec::family(tau_ns, holonomy, n)
    }
}

fn check_tau(tau_ns: f64) -> Result<()> {
    if !(tau_ns > 0.0 && tau_ns.is_finite()) {
        return Err(Error::InvalidParameter(format!("path duration must be positive, got {tau_ns}")));
    }
    Ok(())
}

impl PathSpec {
    /// `φ = ∓(π/5) sin(2πt/τ) − π/2` on the first half and `... − γ − π/2` on the second.
    pub fn modulated(tau_ns: f64, holonomy: HolonomySpec) -> Result<Self> {
        check_tau(tau_ns)?;
        let first = PhaseProfile::Modulated { sign: -1.0, offset: -FRAC_PI_2 };
        let second = PhaseProfile::Modulated { sign: 1.0, offset: -holonomy.gamma - FRAC_PI_2 };
        Ok(Self::with_profiles(tau_ns, 0.0, holonomy, first, second))
    }

    /// The family `f(χ) = n(2χ − sin 2χ)` anchored at `φ(0) = 0`, `φ(τ/2) = −γ`.
    /// `n = 0` gives the constant-phase path.
    pub fn family(tau_ns: f64, holonomy: HolonomySpec, n: f64) -> Result<Self> {
        check_tau(tau_ns)?;
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("family index must be non-negative, got {n}")));
        }
        let first = PhaseProfile::Family { n, offset: 0.0 };
        let second = PhaseProfile::Family { n, offset: -holonomy.gamma };
        Ok(Self::with_profiles(tau_ns, n, holonomy, first, second))
    }

    fn with_profiles(tau_ns: f64, n: f64, holonomy: HolonomySpec, first: PhaseProfile, second: PhaseProfile) -> Self {
        let half = tau_ns / 2.0;
        let segments = [
            PathSegment { start_ns: 0.0, end_ns: half, tau_ns, profile: first },
            PathSegment { start_ns: half, end_ns: tau_ns, tau_ns, profile: second },
        ];
        Self { tau_ns, n, holonomy, segments }
    }

    /// Same path shape stretched to a new duration.
    pub fn with_duration(&self, tau_ns: f64) -> Result<Self> {
        check_tau(tau_ns)?;
        let [a, b] = self.segments;
        Ok(Self::with_profiles(tau_ns, self.n, self.holonomy, a.profile, b.profile))
    }

    pub fn tau_ns(&self) -> f64 {
        self.tau_ns
    }

    pub fn family_index(&self) -> f64 {
        self.n
    }

    pub fn holonomy(&self) -> &HolonomySpec {
        &self.holonomy
    }

    pub fn segments(&self) -> &[PathSegment; 2] {
        &self.segments
    }

    /// Index of the segment owning `t`; the midpoint belongs to the first.
    pub fn segment_index(&self, t: f64) -> usize {
        usize::from(t > self.tau_ns / 2.0)
    }

    pub fn point(&self, t: f64) -> PathPoint {
        self.segments[self.segment_index(t)].point(t)
    }

    /// Evolution state amplitudes on `(|b⟩, |e⟩)` with the global phase `f` dropped.
    pub fn evolution_state(&self, t: f64) -> [C64; 2] {
        let p = self.point(t);
        let (s, c) = (p.chi / 2.0).sin_cos();
        [C64::from_polar(c, -p.phi / 2.0), C64::from_polar(s, p.phi / 2.0)]
    }
}

/// One waveform sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub t_ns: f64,
    pub omega: f64,
    pub phi1: f64,
    pub phi2: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Source {
    Path(PathSpec),
    Samples(Vec<ControlSample>),
}

/// Drive amplitude `Ω(t)` and phases `φ₁(t)`, `φ₂(t) = φ − φ₁(t) − π`.
///
/// Waveforms synthesized from a path are evaluated analytically at any `t`, so
/// integrators are free to probe between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlWaveform {
    source: Source,
    theta: f64,
    phi: f64,
    tau_ns: f64,
    amplitude_scale: f64,
    max_amplitude: f64,
}

fn raw_controls(p: &PathPoint) -> (f64, f64) {
    let y = -p.chi_dot;
    let x = p.f_dot * p.chi.sin();
    (0.5 * y.hypot(x), y.atan2(x) - p.phi)
}

impl ControlWaveform {
    /// Piecewise-linear waveform through explicit samples (first at `t = 0`).
    pub fn from_samples(samples: Vec<ControlSample>, theta: f64, phi: f64, max_amplitude: f64) -> Result<Self> {
        if samples.len() < 2 || samples[0].t_ns != 0.0 {
            return Err(Error::InvalidParameter("waveform needs at least two samples starting at t = 0".into()));
        }
        if samples.windows(2).any(|w| w[1].t_ns <= w[0].t_ns) {
            return Err(Error::InvalidParameter("waveform sample times must increase".into()));
        }
        let tau_ns = samples[samples.len() - 1].t_ns;
        let samples = samples.into_iter().map(|s| ControlSample { phi2: phi - s.phi1 - PI, ..s }).collect();
        Ok(Self { source: Source::Samples(samples), theta, phi, tau_ns, amplitude_scale: 1.0, max_amplitude })
    }

    /// `Ω ≡ 0` over `[0, τ]`.
    pub fn zero(tau_ns: f64, theta: f64, phi: f64) -> Result<Self> {
        check_tau(tau_ns)?;
        let sample = |t_ns| ControlSample { t_ns, omega: 0.0, phi1: 0.0, phi2: 0.0 };
        Self::from_samples(vec![sample(0.0), sample(tau_ns)], theta, phi, 0.0)
    }

    pub fn tau_ns(&self) -> f64 {
        self.tau_ns
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn max_amplitude(&self) -> f64 {
        self.max_amplitude
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    pub fn path(&self) -> Option<&PathSpec> {
        match &self.source {
            Source::Path(p) => Some(p),
            Source::Samples(_) => None,
        }
    }

    /// Copy with the amplitude multiplied by `factor`; phases untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { amplitude_scale: self.amplitude_scale * factor, ..self.clone() }
    }

    /// Controls at time `t` (clamped to `[0, τ]`).
    pub fn at(&self, t: f64) -> ControlSample {
        let t = t.clamp(0.0, self.tau_ns);
        let (omega, phi1) = match &self.source {
            Source::Path(path) => path_controls(path, t),
            Source::Samples(samples) => {
                let k = samples.partition_point(|s| s.t_ns <= t).clamp(1, samples.len() - 1);
                let (a, b) = (&samples[k - 1], &samples[k]);
                let w = (t - a.t_ns) / (b.t_ns - a.t_ns);
                (a.omega + w * (b.omega - a.omega), a.phi1 + w * (b.phi1 - a.phi1))
            }
        };
        ControlSample { t_ns: t, omega: self.amplitude_scale * omega, phi1, phi2: self.phi - phi1 - PI }
    }

    /// Uniform samples, `per_segment` intervals on each half (shared midpoint).
    pub fn samples(&self, per_segment: usize) -> Vec<ControlSample> {
        let count = 2 * per_segment.max(1);
        (0..=count).map(|i| self.at(self.tau_ns * i as f64 / count as f64)).collect()
    }

    /// Largest `|Ω(t)|`.
    pub fn peak_amplitude(&self) -> f64 {
        match &self.source {
            Source::Path(path) => self.amplitude_scale * peak_amplitude(path),
            Source::Samples(samples) => samples.iter().map(|s| (self.amplitude_scale * s.omega).abs()).fold(0.0, f64::max),
        }
    }

    /// CSV with header `t_ns,omega_rad_per_ns,phi1_rad,phi2_rad`.
    pub fn write_csv<W: Write>(&self, mut out: W, per_segment: usize) -> Result<()> {
        writeln!(out, "t_ns,omega_rad_per_ns,phi1_rad,phi2_rad")?;
        for s in self.samples(per_segment) {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t_ns, s.omega, s.phi1, s.phi2)?;
        }
        Ok(())
    }
}

/// Controls along a path. Points within a hair of a segment boundary take the
/// one-sided linear extrapolation of the phase from the two nearest interior
/// samples, and zero amplitude.
fn path_controls(path: &PathSpec, t: f64) -> (f64, f64) {
    let idx = path.segment_index(t);
    let seg = &path.segments[idx];
    let h = seg.duration() / SAMPLES_PER_SEGMENT as f64;
    let eps = 1e-9 * path.tau_ns;
    let boundary = if (t - seg.start_ns).abs() < eps {
        Some((seg.start_ns, 1.0))
    } else if (seg.end_ns - t).abs() < eps {
        Some((seg.end_ns, -1.0))
    } else {
        None
    };
    match boundary {
        None => raw_controls(&seg.point(t)),
        Some((tb, dir)) => {
            let (_, p1) = raw_controls(&seg.point(tb + dir * h));
            let (_, p2) = raw_controls(&seg.point(tb + dir * 2.0 * h));
            (0.0, 2.0 * p1 - p2)
        }
    }
}

/// Peak drive amplitude demanded by a path.
pub fn peak_amplitude(path: &PathSpec) -> f64 {
    path.segments
        .iter()
        .map(|seg| numerics::scan_max(|t| raw_controls(&seg.point(t)).0, seg.start_ns, seg.end_ns, 4 * SAMPLES_PER_SEGMENT).1)
        .fold(0.0, f64::max)
}

/// Duration at which the path's peak amplitude equals `omega_max` (Ω scales as 1/τ).
pub fn duration_for_peak(path: &PathSpec, omega_max: f64) -> Result<f64> {
    if !(omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude cap must be positive, got {omega_max}")));
    }
    Ok(path.tau_ns * peak_amplitude(path) / omega_max)
}

/// Solve for `(Ω, φ₁)` along the path; fails if the peak exceeds `omega_max`.
pub fn inverse_engineer(path: &PathSpec, omega_max: f64) -> Result<ControlWaveform> {
    if !(omega_max > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude cap must be positive, got {omega_max}")));
    }
    let peak = peak_amplitude(path);
    if !peak.is_finite() {
        return Err(Error::Singularity { t_ns: f64::NAN });
    }
    if peak > omega_max * (1.0 + 1e-9) {
        return Err(Error::AmplitudeExceeded { peak, cap: omega_max, required_tau_ns: path.tau_ns * peak / omega_max });
    }
    let h = path.holonomy;
    Ok(ControlWaveform {
        source: Source::Path(path.clone()),
        theta: h.theta,
        phi: h.phi,
        tau_ns: path.tau_ns,
        amplitude_scale: 1.0,
        max_amplitude: omega_max,
    })
}

/// Path stretched so its peak amplitude is exactly `omega_max`, with its waveform.
pub fn synthesize_at_cap(holonomy: HolonomySpec, n: f64, omega_max: f64) -> Result<(PathSpec, ControlWaveform)> {
    let unit = standard_path(1.0, holonomy, n)?;
    let tau = duration_for_peak(&unit, omega_max)?;
    let path = unit.with_duration(tau)?;
    let waveform = inverse_engineer(&path, omega_max * (1.0 + 1e-12))?;
    Ok((path, waveform))
}

/// Residuals of the `χ̇` and `φ̇` relations for controls `(Ω, φ₁)` at `t`.
pub fn eq_residuals(path: &PathSpec, sample: &ControlSample) -> (f64, f64) {
    let p = path.point(sample.t_ns);
    let beta = sample.phi1 + p.phi;
    let r_chi = p.chi_dot + 2.0 * sample.omega * beta.sin();
    let r_phi = p.phi_dot + 2.0 * sample.omega * beta.cos() / p.chi.tan();
    (r_chi, r_phi)
}

/// `γ_d = ∫ φ̇ sin²χ / (2 cos χ) dt = −½ ∫ ḟ sin²χ dt` over the loop.
pub fn dynamical_phase(path: &PathSpec) -> Result<f64> {
    path.segments.iter().try_fold(0.0, |acc, seg| {
        let part = numerics::integrate(
            |t| {
                let p = seg.point(t);
                -0.5 * p.f_dot * p.chi.sin().powi(2)
            },
            seg.start_ns,
            seg.end_ns,
            QUADRATURE_TOL,
        )?;
        Ok(acc + part)
    })
}

/// `q_s = |∫₀^{τ/2} e^{−if} χ̇ sin²χ dt|²` with `f(0) = 0`.
pub fn error_sensitivity_qs(path: &PathSpec) -> Result<f64> {
    let seg = &path.segments[0];
    let mut failure = None;
    let integral = numerics::integrate_complex(
        |t| {
            let f = seg.f_relative(t).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            });
            let chi = seg.chi(t);
            C64::from_polar(seg.chi_dot(t) * chi.sin().powi(2), -f)
        },
        seg.start_ns,
        seg.end_ns,
        QUADRATURE_TOL,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral.norm_sqr())
}

/// `sin²(nπ)/(2n)²`, with the `n → 0` limit `π²/4`.
pub fn qs_closed_form(n: f64) -> f64 {
    if n.abs() < 1e-8 {
        return PI * PI / 4.0;
    }
    ((n * PI).sin() / (2.0 * n)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ONE;

    const OMEGA_MAX: f64 = 2.0 * PI * 0.016;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn modulated_quarter_point() {
        let path = standard_path(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        let p = path.point(51.0 / 4.0);
        assert!(close(p.chi, FRAC_PI_2, 1e-14));
        assert!(close(p.phi, -7.0 * PI / 10.0, 1e-14));
    }

    #[test]
    fn endpoints_and_midpoint() {
        for n in [0.0, 0.3, 1.0] {
            let path = standard_path(40.0, HolonomySpec::hadamard(), n).unwrap();
            assert!(path.point(0.0).chi.abs() < 1e-12);
            assert!(path.point(40.0).chi.abs() < 1e-12);
            assert!(close(path.point(20.0).chi, PI, 1e-12));
        }
    }

    #[test]
    fn rejects_negative_n_and_tau() {
        assert!(matches!(standard_path(10.0, HolonomySpec::not_gate(), -0.1), Err(Error::InvalidParameter(_))));
        assert!(matches!(standard_path(0.0, HolonomySpec::not_gate(), 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn family_anchors() {
        let h = HolonomySpec::new(1.0, 0.2, 2.5);
        let path = standard_path(80.0, h, 0.6).unwrap();
        assert!(path.point(0.0).phi.abs() < 1e-14);
        assert!(close(path.segments()[1].phi(40.0), -2.5, 1e-12));
    }

    #[test]
    fn family_phase_rate_matches_finite_difference() {
        let path = standard_path(100.0, HolonomySpec::not_gate(), 0.6).unwrap();
        let seg = path.segments()[0];
        let h = 1e-5;
        for i in 1..50 {
            let t = i as f64;
            let fd = (seg.phi(t + h) - seg.phi(t - h)) / (2.0 * h);
            let p = seg.point(t);
            let expected = -4.0 * 0.6 * p.chi.sin().powi(2) * p.chi.cos() * p.chi_dot;
            assert!((fd - expected).abs() < 1e-6, "t={t}: {fd} vs {expected}");
            assert!((p.phi_dot - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn modulated_f_dot_matches_definition_away_from_singularity() {
        let path = standard_path(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        for i in 1..100 {
            let t = 51.0 * i as f64 / 100.0;
            let p = path.point(t);
            if p.chi.cos().abs() > 1e-3 {
                let direct = -p.phi_dot / p.chi.cos();
                assert!((direct - p.f_dot).abs() < 1e-10 * (1.0 + direct.abs()), "t={t}");
            }
        }
    }

    #[test]
    fn constant_phase_controls() {
        let path = PathSpec::family(50.0, HolonomySpec::not_gate(), 0.0).unwrap();
        let wf = inverse_engineer(&path, 1.0).unwrap();
        for s in wf.samples(200).iter().filter(|s| s.t_ns > 0.0 && s.t_ns < 50.0 && s.t_ns != 25.0) {
            let p = path.point(s.t_ns);
            assert!(((s.phi1 + p.phi).sin().abs() - 1.0).abs() < 1e-12);
            assert!((s.omega - p.chi_dot.abs() / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn modulated_peak_matches_published_duration() {
        let (path, wf) = synthesize_at_cap(HolonomySpec::not_gate(), 0.0, OMEGA_MAX).unwrap();
        assert!((path.tau_ns() - 51.0).abs() < 0.5, "tau = {}", path.tau_ns());
        assert!((wf.peak_amplitude() - OMEGA_MAX).abs() < 1e-9);
    }

    #[test]
    fn family_peak_has_closed_form() {
        // Peak of Ω·τ for the family is (π²/2)·sqrt(1 + 16 n²).
        for n in [0.2, 0.6, 1.0, 1.7] {
            let path = PathSpec::family(1.0, HolonomySpec::not_gate(), n).unwrap();
            let expected = PI * PI / 2.0 * (1.0 + 16.0 * n * n).sqrt();
            assert!((peak_amplitude(&path) - expected).abs() < 1e-7 * expected, "n={n}");
        }
    }

    #[test]
    fn amplitude_cap_reports_required_duration() {
        let path = standard_path(30.0, HolonomySpec::not_gate(), 0.0).unwrap();
        match inverse_engineer(&path, OMEGA_MAX) {
            Err(Error::AmplitudeExceeded { required_tau_ns, .. }) => assert!((required_tau_ns - 50.654).abs() < 0.01),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_residuals() {
        for n in [0.0, 0.25, 0.6, 1.0, 2.0] {
            let path = standard_path(60.0, HolonomySpec::hadamard(), n).unwrap();
            let wf = inverse_engineer(&path, 10.0).unwrap();
            for s in wf.samples(SAMPLES_PER_SEGMENT) {
                if [0.0, 30.0, 60.0].contains(&s.t_ns) {
                    continue;
                }
                let (a, b) = eq_residuals(&path, &s);
                assert!(a.abs() < 1e-8 && b.abs() < 1e-8, "n={n} t={} residuals {a:e} {b:e}", s.t_ns);
            }
        }
    }

    #[test]
    fn endpoint_phase_is_extrapolated() {
        let path = standard_path(60.0, HolonomySpec::not_gate(), 0.6).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        let h = 30.0 / SAMPLES_PER_SEGMENT as f64;
        let s0 = wf.at(0.0);
        let s1 = wf.at(h);
        let s2 = wf.at(2.0 * h);
        assert_eq!(s0.omega, 0.0);
        assert!((s0.phi1 - (2.0 * s1.phi1 - s2.phi1)).abs() < 1e-12);
        assert!(wf.samples(100).iter().all(|s| s.phi1.is_finite()));
    }

    #[test]
    fn second_phase_constraint() {
        let path = standard_path(60.0, HolonomySpec::new(0.7, 1.3, 2.0), 0.4).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        for s in wf.samples(500) {
            assert!((s.phi1 + s.phi2 + PI - 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn dynamical_phase_vanishes() {
        for n in [0.0, 0.6, 1.0] {
            let path = standard_path(51.0, HolonomySpec::not_gate(), n).unwrap();
            assert!(dynamical_phase(&path).unwrap().abs() < 1e-6, "n={n}");
        }
        let flat = PathSpec::family(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        assert_eq!(dynamical_phase(&flat).unwrap(), 0.0);
    }

    #[test]
    fn sensitivity_limits() {
        let flat = PathSpec::family(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        assert!((error_sensitivity_qs(&flat).unwrap() - PI * PI / 4.0).abs() < 1e-8);
        for n in [1.0, 2.0, 3.0] {
            let path = standard_path(51.0, HolonomySpec::not_gate(), n).unwrap();
            assert!(error_sensitivity_qs(&path).unwrap() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn sensitivity_of_modulated_path_is_finite() {
        let path = standard_path(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        let q = error_sensitivity_qs(&path).unwrap();
        assert!(q > 0.0 && q < PI * PI / 4.0);
    }

    #[test]
    fn target_gates() {
        let not = holonomy_target(&HolonomySpec::not_gate());
        // e^{iπ/2}·(−i σ_x) = σ_x
        assert!((not[(0, 1)] - ONE).norm() < 1e-12 && (not[(1, 0)] - ONE).norm() < 1e-12);
        assert!(not[(0, 0)].norm() < 1e-12 && not[(1, 1)].norm() < 1e-12);
        let had = holonomy_target(&HolonomySpec::hadamard());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [r, r, r, -r];
        for (i, e) in expected.iter().enumerate() {
            assert!((had[(i / 2, i % 2)] - C64::from(*e)).norm() < 1e-12);
        }
        let id = holonomy_target(&HolonomySpec::new(0.4, 0.9, 0.0));
        assert!((id - DMatrix::<C64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn target_equals_dark_bright_decomposition() {
        let spec = HolonomySpec::new(0.8, -1.1, 2.2);
        let (b, d) = bright_dark_amplitudes(spec.theta, spec.phi);
        let u = holonomy_target(&spec);
        let phase = C64::from_polar(1.0, spec.gamma);
        for i in 0..2 {
            for j in 0..2 {
                let expected = d[i] * d[j].conj() + phase * b[i] * b[j].conj();
                assert!((u[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bright_dark_examples() {
        let (b, _) = bright_dark_basis(PI, 0.0);
        assert!((b.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        let (b, d) = bright_dark_basis(FRAC_PI_2, 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.amplitudes()[0] - C64::from(r)).norm() < 1e-15);
        assert!((b.amplitudes()[2] - C64::from(-r)).norm() < 1e-15);
        assert!(b.inner(&d).unwrap().norm() < 1e-12);
    }

    #[test]
    fn waveform_csv_layout() {
        let path = standard_path(51.0, HolonomySpec::not_gate(), 0.0).unwrap();
        let wf = inverse_engineer(&path, 1.0).unwrap();
        let mut buf = Vec::new();
        wf.write_csv(&mut buf, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t_ns,omega_rad_per_ns,phi1_rad,phi2_rad"));
        assert_eq!(lines.count(), 21);
    }

    #[test]
    fn sampled_waveform_interpolates() {
        let s = |t_ns, omega| ControlSample { t_ns, omega, phi1: 0.0, phi2: 0.0 };
        let wf = ControlWaveform::from_samples(vec![s(0.0, 0.0), s(2.0, 1.0)], 1.0, 0.0, 1.0).unwrap();
        assert!((wf.at(0.5).omega - 0.25).abs() < 1e-15);
        assert_eq!(wf.scaled(0.0).at(1.0).omega, 0.0);
        assert!(ControlWaveform::from_samples(vec![s(1.0, 0.0), s(2.0, 1.0)], 1.0, 0.0, 1.0).is_err());
    }
}
