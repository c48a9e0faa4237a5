//! Explicit-Euler master-equation solver and a Gillespie cross-check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state_space::{MassDistribution, TransitionTable};

/// One time slice of the state distribution.
///
/// Entries are kept in the occupation-vector order so every reduction over
/// them is performed in the same sequence, which keeps results bit-stable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    bins: u32,
    step: u64,
    entries: BTreeMap<MassDistribution, f64>,
}

impl ProbabilityTable {
    /// All probability on a single state.
    pub fn point(state: MassDistribution) -> Self {
        let bins = state.bins();
        let mut entries = BTreeMap::new();
        entries.insert(state, 1.0);
        Self {
            bins,
            step: 0,
            entries,
        }
    }

    /// Builds a table from explicit entries. Duplicate states are summed.
    pub fn from_entries(
        bins: u32,
        step: u64,
        entries: impl IntoIterator<Item = (MassDistribution, f64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (state, p) in entries {
            if state.bins() != bins {
                return Err(Error::InvalidParameter(format!(
                    "state {state} has {} bins, expected {bins}",
                    state.bins()
                )));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} for {state}"
                )));
            }
            *map.entry(state).or_insert(0.0) += p;
        }
        Ok(Self {
            bins,
            step,
            entries: map,
        })
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    /// Number of Euler steps taken since the initial condition.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, state: &MassDistribution) -> f64 {
        self.entries.get(state).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MassDistribution, f64)> + '_ {
        self.entries.iter().map(|(s, &p)| (s, p))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Largest absolute entry difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, p) in self.iter() {
            worst = worst.max((p - other.get(s)).abs());
        }
        for (s, q) in other.iter() {
            if !self.entries.contains_key(s) {
                worst = worst.max(q.abs());
            }
        }
        worst
    }
}

fn check_bin(bins: u32, bin: u32) -> Result<()> {
    if bin == 0 || bin > bins {
        return Err(Error::Bin {
            bin: bin as usize,
            max: bins as usize,
        });
    }
    Ok(())
}

/// Advances the distribution by one time step.
///
/// Each state keeps `1 - sum_h r_h` of its probability and sends `r_h` to the
/// post-collision state of label `h`; this is the discrete master equation
/// written from the donor side.
pub fn euler_step(p: &ProbabilityTable, table: &TransitionTable) -> Result<ProbabilityTable> {
    if p.bins != table.bins() {
        return Err(Error::InvalidParameter(format!(
            "table has {} bins but the transition table has {}",
            p.bins,
            table.bins()
        )));
    }
    let entries: Vec<(&MassDistribution, f64)> = p.iter().collect();
    let outflows: Vec<Result<Vec<(MassDistribution, f64)>>> = entries
        .par_iter()
        .map(|&(state, prob)| {
            table.check_step(state)?;
            let mut out = Vec::new();
            let mut moved = 0.0;
            for k in 0..table.label_count() {
                let r = table.rate_unchecked(state, k);
                if r > 0.0 {
                    let next = table.apply_transition(state, k + 1)?;
                    out.push((next, prob * r));
                    moved += r;
                }
            }
            out.push((state.clone(), prob * (1.0 - moved)));
            Ok(out)
        })
        .collect();

    let mut next = BTreeMap::new();
    for flow in outflows {
        for (state, mass) in flow? {
            *next.entry(state).or_insert(0.0) += mass;
        }
    }
    Ok(ProbabilityTable {
        bins: p.bins,
        step: p.step + 1,
        entries: next,
    })
}

/// Applies [`euler_step`] `steps` times.
pub fn evolve(
    p0: &ProbabilityTable,
    table: &TransitionTable,
    steps: u64,
) -> Result<ProbabilityTable> {
    evolve_with(p0, table, steps, |_| {})
}

/// Like [`evolve`], calling `observe` on the initial table and after every step.
pub fn evolve_with(
    p0: &ProbabilityTable,
    table: &TransitionTable,
    steps: u64,
    mut observe: impl FnMut(&ProbabilityTable),
) -> Result<ProbabilityTable> {
    let mut p = p0.clone();
    observe(&p);
    for _ in 0..steps {
        p = euler_step(&p, table)?;
        observe(&p);
    }
    Ok(p)
}

/// Probability that bin `bin` holds exactly `value` droplets.
pub fn marginal(p: &ProbabilityTable, bin: u32, value: u32) -> Result<f64> {
    check_bin(p.bins, bin)?;
    Ok(p.iter()
        .filter(|(s, _)| s.count(bin) == value)
        .map(|(_, q)| q)
        .sum())
}

/// Expected droplet count of bin `bin`.
pub fn expected_count(p: &ProbabilityTable, bin: u32) -> Result<f64> {
    check_bin(p.bins, bin)?;
    Ok(p.iter().map(|(s, q)| s.count(bin) as f64 * q).sum())
}

/// Expected counts of every bin, index `k` holding bin `k + 1`.
pub fn expected_counts(p: &ProbabilityTable) -> Vec<f64> {
    let mut out = vec![0.0; p.bins as usize];
    for (s, q) in p.iter() {
        for (slot, &c) in out.iter_mut().zip(s.counts()) {
            *slot += c as f64 * q;
        }
    }
    out
}

/// Gillespie run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsaConfig {
    pub n_runs: u32,
    pub seed: u64,
    pub t_end: f64,
}

impl SsaConfig {
    fn validate(&self) -> Result<()> {
        if self.n_runs < 2 {
            return Err(Error::InvalidParameter(format!(
                "SSA needs at least 2 runs for a standard error, got {}",
                self.n_runs
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad SSA horizon {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

fn trajectory(
    table: &TransitionTable,
    initial: &MassDistribution,
    t_end: f64,
    rng: &mut ChaCha8Rng,
) -> MassDistribution {
    let labels = table.label_count();
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut props = vec![0.0; labels];
    loop {
        let mut total = 0.0;
        for (k, slot) in props.iter_mut().enumerate() {
            *slot = table.pair_propensity(&state, k);
            total += *slot;
        }
        if total <= 0.0 {
            return state;
        }
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / total;
        if t > t_end {
            return state;
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = labels - 1;
        for (k, &a) in props.iter().enumerate() {
            if a > 0.0 {
                chosen = k;
                if pick < a {
                    break;
                }
                pick -= a;
            }
        }
        let (i, j) = table.pairs()[chosen];
        state = state
            .collide(i, j)
            .expect("positive propensity implies a feasible collision");
    }
}

/// Final states of `cfg.n_runs` Gillespie trajectories, one ChaCha stream per run.
pub fn ssa_final_states(
    table: &TransitionTable,
    cfg: &SsaConfig,
    initial: &MassDistribution,
) -> Result<Vec<MassDistribution>> {
    cfg.validate()?;
    if initial.bins() != table.bins() {
        return Err(Error::InvalidParameter(
            "initial state and table disagree on N".into(),
        ));
    }
    Ok((0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(run);
            trajectory(table, initial, cfg.t_end, &mut rng)
        })
        .collect())
}

fn summarize(samples: impl Iterator<Item = f64>, n: usize) -> Estimate {
    let values: Vec<f64> = samples.collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Estimate {
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}

/// Mean droplet count of `bin` at `cfg.t_end` over independent SSA runs.
pub fn ssa_estimate(
    table: &TransitionTable,
    cfg: &SsaConfig,
    initial: &MassDistribution,
    bin: u32,
) -> Result<Estimate> {
    check_bin(table.bins(), bin)?;
    let finals = ssa_final_states(table, cfg, initial)?;
    Ok(summarize(
        finals.iter().map(|s| s.count(bin) as f64),
        finals.len(),
    ))
}

/// [`ssa_estimate`] for every bin from a single batch of trajectories.
pub fn ssa_estimate_all(
    table: &TransitionTable,
    cfg: &SsaConfig,
    initial: &MassDistribution,
) -> Result<Vec<Estimate>> {
    let finals = ssa_final_states(table, cfg, initial)?;
    Ok((1..=table.bins())
        .map(|bin| summarize(finals.iter().map(|s| s.count(bin) as f64), finals.len()))
        .collect())
}
