//! Built-in estimation cases and the published results they are checked against.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::resource::EstimationCase;

/// Published totals for one case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PublishedTotals {
    pub eps_max: f64,
    pub t_count: f64,
    pub t_depth: f64,
    pub logical_qubits: f64,
}

const fn case(
    bins: u32,
    steps: u64,
    n_eps: u32,
    d_eps: u32,
    m_eps: u32,
    rot: f64,
    est: f64,
    c: f64,
) -> EstimationCase {
    EstimationCase {
        bins,
        steps,
        n_eps,
        d_eps,
        m_eps,
        eps_rotation: rot,
        eps_estimation: est,
        eps_c: c,
        delta: 0.01,
        eps_arcsin: None,
        eps_calculation: None,
        readout_bin: 1,
    }
}

/// Preset names in order.
pub const PRESET_NAMES: [&str; 5] = [
    "paper-case-1",
    "paper-case-2",
    "paper-case-3",
    "paper-case-4",
    "paper-case-5",
];

const CASES: [EstimationCase; 5] = [
    case(40, 2000, 42, 5, 15, 1e-13, 9.9e-3, 1e-8),
    case(126, 2000, 46, 6, 12, 1e-14, 9.9e-3, 1e-8),
    case(400, 2000, 49, 8, 10, 1e-15, 9.9e-3, 1e-8),
    case(40, 20000, 46, 6, 12, 1e-14, 9.9e-3, 1e-9),
    case(40, 2000, 49, 8, 10, 1e-15, 9.9e-4, 1e-10),
];

const TOTALS: [PublishedTotals; 5] = [
    PublishedTotals {
        eps_max: 1.0e-2,
        t_count: 4.9e14,
        t_depth: 3.5e14,
        logical_qubits: 1.9e4,
    },
    PublishedTotals {
        eps_max: 1.0e-2,
        t_count: 6.1e15,
        t_depth: 4.7e15,
        logical_qubits: 2.5e4,
    },
    PublishedTotals {
        eps_max: 1.0e-2,
        t_count: 8.2e16,
        t_depth: 6.5e16,
        logical_qubits: 3.4e4,
    },
    PublishedTotals {
        eps_max: 1.0e-2,
        t_count: 6.2e15,
        t_depth: 4.7e15,
        logical_qubits: 1.8e5,
    },
    PublishedTotals {
        eps_max: 1.0e-3,
        t_count: 8.7e15,
        t_depth: 6.9e15,
        logical_qubits: 1.9e4,
    },
];

/// Looks up a preset by name (`paper-case-1` .. `paper-case-5`).
pub fn preset(name: &str) -> Result<EstimationCase> {
    PRESET_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|k| CASES[k].clone())
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            ))
        })
}

/// Published totals for a preset.
pub fn published_totals(name: &str) -> Option<PublishedTotals> {
    PRESET_NAMES
        .iter()
        .position(|&n| n == name)
        .map(|k| TOTALS[k])
}

/// All presets with their published totals.
pub fn all_presets() -> Vec<(&'static str, EstimationCase, PublishedTotals)> {
    PRESET_NAMES
        .iter()
        .zip(CASES.iter())
        .zip(TOTALS.iter())
        .map(|((n, c), t)| (*n, c.clone(), *t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        let c = preset("paper-case-4").unwrap();
        assert_eq!((c.bins, c.steps, c.eps_c), (40, 20000, 1e-9));
        assert!(preset("paper-case-9").is_err());
        assert_eq!(published_totals("paper-case-3").unwrap().t_count, 8.2e16);
        assert_eq!(all_presets().len(), 5);
    }
}
