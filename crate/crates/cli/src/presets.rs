//! Built-in configurations for the standard experiments.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset { name: $name, summary: $summary, text: include_str!(concat!("../presets/", $name, ".toml")) }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("fig2b", "NOT gate from |g⟩: waveform, populations, fidelity"),
    preset!("fig2c", "Hadamard gate from |g⟩: waveform, populations, fidelity"),
    preset!("fig2d", "gate fidelity of NOT and Hadamard over 1001 inputs, and F^G(t)"),
    preset!("fig3a", "NOT-gate fidelity vs amplitude error, n = 0, 0.6, 1, no decoherence"),
    preset!("fig3b", "NOT-gate fidelity vs amplitude error and Γ, n = 0.6"),
    preset!("fig3c", "NOT-gate fidelity vs amplitude error and Γ, n = 0"),
    preset!("fig3d", "NOT-gate fidelity vs amplitude error and Γ, n = 1"),
    preset!("fig4", "two-qubit gate from |fgg⟩ and |fgf⟩ on the full Hamiltonian"),
    preset!("fig5a", "Stark-shift compensation Δ_s vs drive amplitude"),
    preset!("fig5b", "effective coupling g̃ vs drive amplitude"),
    preset!("qs-table", "error sensitivity q_s for n = 0, 0.5, 1"),
    preset!("two-qubit", "two-qubit gate; choose --initial and --compensation"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for p in PRESETS {
            let cfg = crate::config::parse(p.text).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            cfg.resolve(Some("out")).unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn standard_experiments_are_covered() {
        for name in ["fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5a", "fig5b"] {
            assert!(find(name).is_some(), "{name}");
        }
    }
}
