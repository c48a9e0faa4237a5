//! Probability-level simulation of the sequential probability division.
//!
//! Every amplitude in the quantum state is the square root of a non-negative
//! probability and distinct histories live in orthogonal register states, so
//! tracking squared amplitudes per history is an exact functional model.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::master::ProbabilityTable;
use crate::state_space::{MassDistribution, TransitionTable};

/// Default ceiling on the number of tree-mode branches.
pub const DEFAULT_BRANCH_CAP: u128 = 1 << 22;

/// A history of applied labels (0 = no collision) with its current state and probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryBranch {
    pub history: Vec<usize>,
    pub state: MassDistribution,
    pub prob: f64,
}

impl HistoryBranch {
    pub fn root(state: MassDistribution) -> Self {
        Self {
            history: Vec::new(),
            state,
            prob: 1.0,
        }
    }

    /// History rendered as dash-separated labels (empty for the root).
    pub fn history_string(&self) -> String {
        self.history
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Division bookkeeping of one state for a single time step.
///
/// Vectors are indexed by label: `rates[0]` is the no-collision probability,
/// `retained[h]` is `s_h` for `h` in `1..=H+1` (with `s_{H+1} = 1`), and
/// `modified[h]` is `r_h / s_{h+1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisionLedger {
    pub rates: Vec<f64>,
    pub retained: Vec<f64>,
    pub modified: Vec<f64>,
}

impl DivisionLedger {
    pub fn new(table: &TransitionTable, state: &MassDistribution) -> Result<Self> {
        table.check_step(state)?;
        let h_max = table.label_count();
        let mut rates = vec![0.0; h_max + 1];
        for (k, slot) in rates.iter_mut().enumerate().skip(1) {
            *slot = table.rate_unchecked(state, k - 1);
        }
        let mut retained = vec![0.0; h_max + 2];
        let mut modified = vec![0.0; h_max + 1];
        retained[h_max + 1] = 1.0;
        for h in (1..=h_max).rev() {
            retained[h] = retained[h + 1] - rates[h];
            modified[h] = if retained[h + 1] > 0.0 {
                (rates[h] / retained[h + 1]).min(1.0)
            } else {
                0.0
            };
        }
        rates[0] = retained[1];
        Ok(Self {
            rates,
            retained,
            modified,
        })
    }

    pub fn label_count(&self) -> usize {
        self.rates.len() - 1
    }

    /// Probabilities obtained by peeling off `r'_h` of the remaining mass from
    /// `h = H` down to 1; index 0 holds the leftover.
    pub fn sequential_products(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rates.len()];
        let mut remaining = 1.0;
        for h in (1..=self.label_count()).rev() {
            out[h] = remaining * self.modified[h];
            remaining *= 1.0 - self.modified[h];
        }
        out[0] = remaining;
        out
    }

    /// Largest gap between the sequential products and the direct rates.
    pub fn sequential_identity_error(&self) -> f64 {
        self.sequential_products()
            .iter()
            .zip(&self.rates)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Child of a single division sweep: the history-register value it ends with,
/// the label that actually produced it and its share of the parent probability.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Child {
    register: usize,
    produced_by: usize,
    share: f64,
}

// Runs the descending division with the increment-if-nonzero register rule.
// The increment follows every division except the last one (H - 1 times).
fn divide_with_registers(ledger: &DivisionLedger) -> Vec<Child> {
    let h_max = ledger.label_count();
    let mut children: Vec<Child> = Vec::new();
    let mut remaining = 1.0;
    for h in (1..=h_max).rev() {
        let rp = ledger.modified[h];
        if rp > 0.0 {
            children.push(Child {
                register: 1,
                produced_by: h,
                share: remaining * rp,
            });
            remaining *= 1.0 - rp;
        }
        if h > 1 {
            for c in children.iter_mut() {
                c.register += 1;
            }
        }
    }
    if remaining > 0.0 {
        children.push(Child {
            register: 0,
            produced_by: 0,
            share: remaining,
        });
    }
    children
}

fn split_state(
    table: &TransitionTable,
    state: &MassDistribution,
    prob: f64,
) -> Result<Vec<(usize, MassDistribution, f64)>> {
    let ledger = DivisionLedger::new(table, state)?;
    divide_with_registers(&ledger)
        .into_iter()
        .filter(|c| c.share * prob != 0.0)
        .map(|c| {
            debug_assert_eq!(c.register, c.produced_by);
            let next = if c.register == 0 {
                state.clone()
            } else {
                table.apply_transition(state, c.register)?
            };
            Ok((c.register, next, prob * c.share))
        })
        .collect()
}

/// One time step of the division applied to every branch.
pub fn divide_step(
    branches: &[HistoryBranch],
    table: &TransitionTable,
) -> Result<Vec<HistoryBranch>> {
    let split: Vec<Result<Vec<HistoryBranch>>> = branches
        .par_iter()
        .map(|b| {
            Ok(split_state(table, &b.state, b.prob)?
                .into_iter()
                .map(|(label, state, prob)| {
                    let mut history = Vec::with_capacity(b.history.len() + 1);
                    history.extend_from_slice(&b.history);
                    history.push(label);
                    HistoryBranch {
                        history,
                        state,
                        prob,
                    }
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for children in split {
        out.extend(children?);
    }
    Ok(out)
}

/// Keeps every history for `steps` steps. Fails up front when `(H+1)^steps`
/// could exceed `branch_cap`.
pub fn run_tree(
    table: &TransitionTable,
    initial: &MassDistribution,
    steps: u32,
    branch_cap: u128,
) -> Result<Vec<HistoryBranch>> {
    let width = table.label_count() as u128 + 1;
    let bound = width.checked_pow(steps);
    if bound.is_none_or(|b| b > branch_cap) {
        return Err(Error::ResourceLimit {
            what: format!(
                "tree mode may need (H+1)^M = {width}^{steps} branches; use merged mode instead"
            ),
            limit: branch_cap,
        });
    }
    let mut branches = vec![HistoryBranch::root(initial.clone())];
    for _ in 0..steps {
        branches = divide_step(&branches, table)?;
    }
    Ok(branches)
}

/// Divides and then merges branches by state after every step.
pub fn run_merged(
    table: &TransitionTable,
    initial: &MassDistribution,
    steps: u32,
) -> Result<ProbabilityTable> {
    let mut p = ProbabilityTable::point(initial.clone());
    for _ in 0..steps {
        p = merged_step(&p, table)?;
    }
    Ok(p)
}

/// One merged-mode step: divide every state and sum children in state order.
pub fn merged_step(p: &ProbabilityTable, table: &TransitionTable) -> Result<ProbabilityTable> {
    let entries: Vec<(&MassDistribution, f64)> = p.iter().collect();
    let split: Vec<Result<Vec<(usize, MassDistribution, f64)>>> = entries
        .par_iter()
        .map(|&(s, q)| split_state(table, s, q))
        .collect();
    let mut merged = BTreeMap::new();
    for children in split {
        for (_, state, q) in children? {
            *merged.entry(state).or_insert(0.0) += q;
        }
    }
    ProbabilityTable::from_entries(p.bins(), p.step() + 1, merged)
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub enum DivisionOutput {
    Tree(Vec<HistoryBranch>),
    Merged(ProbabilityTable),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Tree,
    Merged,
}

pub fn run(
    table: &TransitionTable,
    initial: &MassDistribution,
    steps: u32,
    mode: RunMode,
    branch_cap: u128,
) -> Result<DivisionOutput> {
    match mode {
        RunMode::Tree => run_tree(table, initial, steps, branch_cap).map(DivisionOutput::Tree),
        RunMode::Merged => run_merged(table, initial, steps).map(DivisionOutput::Merged),
    }
}

/// Sums branch probabilities over histories.
pub fn marginalize(branches: &[HistoryBranch], bins: u32) -> Result<ProbabilityTable> {
    let step = branches.first().map_or(0, |b| b.history.len() as u64);
    ProbabilityTable::from_entries(
        bins,
        step,
        branches.iter().map(|b| (b.state.clone(), b.prob)),
    )
}

/// Anything that can list states with their probabilities.
pub trait WeightedStates {
    fn bins(&self) -> u32;
    fn for_each_state(&self, f: &mut dyn FnMut(&MassDistribution, f64));
}

impl WeightedStates for ProbabilityTable {
    fn bins(&self) -> u32 {
        ProbabilityTable::bins(self)
    }
    fn for_each_state(&self, f: &mut dyn FnMut(&MassDistribution, f64)) {
        for (s, p) in self.iter() {
            f(s, p);
        }
    }
}

impl WeightedStates for [HistoryBranch] {
    fn bins(&self) -> u32 {
        self.first().map_or(0, |b| b.state.bins())
    }
    fn for_each_state(&self, f: &mut dyn FnMut(&MassDistribution, f64)) {
        for b in self {
            f(&b.state, b.prob);
        }
    }
}

/// Width of the droplet-count register of bin `i`: `ceil(log2(floor(N/i) + 1))`.
pub fn count_register_width(n: u32, bin: u32) -> u32 {
    let max = (n / bin) as u64;
    64 - max.leading_zeros()
}

/// Probability of reading the flag qubit as zero when bin `bin`'s count is
/// loaded as an amplitude `sqrt(n_i / d)`, `d = 2^q_i`.
pub fn readout_probability(states: &(impl WeightedStates + ?Sized), bin: u32) -> Result<f64> {
    let n = states.bins();
    if bin == 0 || bin > n {
        return Err(Error::Bin {
            bin: bin as usize,
            max: n as usize,
        });
    }
    let d = (1u64 << count_register_width(n, bin)) as f64;
    let mut acc = 0.0;
    states.for_each_state(&mut |s, p| acc += s.count(bin) as f64 / d * p);
    Ok(acc)
}

/// Expected count of bin `bin` recovered from the flag-qubit readout.
pub fn amplitude_expectation(states: &(impl WeightedStates + ?Sized), bin: u32) -> Result<f64> {
    let d = (1u64 << count_register_width(states.bins(), bin.max(1))) as f64;
    Ok(d * readout_probability(states, bin)?)
}

/// Outcome of [`history_label_semantics_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistoryCheck {
    pub branches: usize,
    pub label_mismatches: usize,
    pub replay_mismatches: usize,
}

impl HistoryCheck {
    pub fn passed(&self) -> bool {
        self.label_mismatches == 0 && self.replay_mismatches == 0
    }
}

/// Replays the register increments for every branch of a `steps`-step tree
/// and checks that (a) each recorded register value equals the label that
/// produced the branch and (b) replaying the history from `initial`
/// reproduces the branch state.
pub fn history_label_semantics_check(
    table: &TransitionTable,
    initial: &MassDistribution,
    steps: u32,
    branch_cap: u128,
) -> Result<HistoryCheck> {
    let mut label_mismatches = 0;
    let mut frontier = vec![HistoryBranch::root(initial.clone())];
    for _ in 0..steps {
        let mut next = Vec::new();
        for b in &frontier {
            let ledger = DivisionLedger::new(table, &b.state)?;
            for c in divide_with_registers(&ledger) {
                if c.register != c.produced_by {
                    label_mismatches += 1;
                }
                let state = if c.produced_by == 0 {
                    b.state.clone()
                } else {
                    table.apply_transition(&b.state, c.produced_by)?
                };
                let mut history = b.history.clone();
                history.push(c.register);
                next.push(HistoryBranch {
                    history,
                    state,
                    prob: b.prob * c.share,
                });
            }
        }
        if next.len() as u128 > branch_cap {
            return Err(Error::ResourceLimit {
                what: "history check exceeded the branch cap".into(),
                limit: branch_cap,
            });
        }
        frontier = next;
    }
    let replay_mismatches = frontier
        .iter()
        .filter(|b| replay(table, initial, &b.history).map_or(true, |s| s != b.state))
        .count();
    Ok(HistoryCheck {
        branches: frontier.len(),
        label_mismatches,
        replay_mismatches,
    })
}

/// Applies a label history to `initial`, skipping zeros.
pub fn replay(
    table: &TransitionTable,
    initial: &MassDistribution,
    history: &[usize],
) -> Result<MassDistribution> {
    let mut s = initial.clone();
    for &h in history {
        if h != 0 {
            s = table.apply_transition(&s, h)?;
        }
    }
    Ok(s)
}
