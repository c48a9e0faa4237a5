//! Droplet mass-distribution states, transition labels and collection kernels.
//!
//! A state is an occupation vector `(n_1, ..., n_N)` over `N` mass bins with
//! bin `i` holding droplets of mass `i * x_1`. The total mass `sum i * n_i`
//! equals `N` for every reachable state, so the state space is exactly the set
//! of integer partitions of `N`.
//!
//! A collision between one droplet from bin `i` and one from bin `j` (`i <= j`,
//! `i + j <= N`) is a *transition*. Transitions are numbered `1..=H` in
//! lexicographic order of `(i, j)`; label `0` means "no collision".

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `N` accepted by [`enumerate_states`] unless the caller raises it.
pub const DEFAULT_STATE_CAP: u32 = 60;

/// Occupation vector of a closed droplet population.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassDistribution {
    counts: Vec<u32>,
}

impl MassDistribution {
    /// Builds a state from raw counts, checking that the total mass equals the
    /// number of bins.
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidParameter(
                "a state needs at least one bin".into(),
            ));
        }
        let n = counts.len() as u64;
        let mass: u64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as u64 + 1) * c as u64)
            .sum();
        if mass != n {
            return Err(Error::InvalidParameter(format!(
                "total mass {mass} differs from the bin count {n}"
            )));
        }
        Ok(Self { counts })
    }

    /// All `N` droplets in the first bin.
    pub fn monodisperse(n: u32) -> Self {
        let mut counts = vec![0; n as usize];
        counts[0] = n;
        Self { counts }
    }

    /// A single droplet holding all the mass; no collision can leave it.
    pub fn absorbing(n: u32) -> Self {
        let mut counts = vec![0; n as usize];
        counts[n as usize - 1] = 1;
        Self { counts }
    }

    pub fn bins(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Droplet count in 1-based bin `i`; bins past `N` are empty.
    pub fn count(&self, i: u32) -> u32 {
        if i == 0 {
            return 0;
        }
        self.counts.get(i as usize - 1).copied().unwrap_or(0)
    }

    pub fn total_mass(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as u64 + 1) * c as u64)
            .sum()
    }

    /// Whether a collision between bins `i` and `j` can happen from this state.
    pub fn can_collide(&self, i: u32, j: u32) -> bool {
        if i == j {
            self.count(i) >= 2
        } else {
            self.count(i) >= 1 && self.count(j) >= 1
        }
    }

    /// Merges one droplet of bin `i` with one of bin `j`. Returns `None` when a
    /// source bin is under-populated or the product bin lies outside the grid.
    pub fn collide(&self, i: u32, j: u32) -> Option<Self> {
        if i == 0 || j == 0 || (i + j) as usize > self.counts.len() || !self.can_collide(i, j) {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[i as usize - 1] -= 1;
        counts[j as usize - 1] -= 1;
        counts[(i + j) as usize - 1] += 1;
        Some(Self { counts })
    }
}

impl fmt::Display for MassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, c) in self.counts.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for MassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Number of integer partitions `p(n)`, by the standard coin-change recurrence.
///
/// Fails only when the count no longer fits in 128 bits (around `n = 1300`).
pub fn partition_count_exact(n: u32) -> Result<u128> {
    let n = n as usize;
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for total in part..=n {
            p[total] =
                p[total]
                    .checked_add(p[total - part])
                    .ok_or_else(|| Error::ResourceLimit {
                        what: format!("partition count of {n} overflows 128 bits"),
                        limit: u128::MAX,
                    })?;
        }
    }
    Ok(p[n])
}

/// Hardy-Ramanujan leading-order estimate of the partition count,
/// `exp(pi * sqrt(2N/3)) / (4 N sqrt 3)`.
pub fn partition_count_asymptotic(n: u32) -> f64 {
    let n = n as f64;
    (std::f64::consts::PI * (2.0 * n / 3.0).sqrt()).exp() / (4.0 * n * 3f64.sqrt())
}

/// Every state with total mass `n`, from the monodisperse state down to the
/// single-droplet state (descending lexicographic order of the count vector).
///
/// `cap` bounds `n`; the error reports how many states the request implied.
pub fn enumerate_states(n: u32, cap: u32) -> Result<Vec<MassDistribution>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if n > cap {
        let count = partition_count_exact(n)
            .map(|c| c.to_string())
            .unwrap_or_else(|_| "more than 2^128".into());
        return Err(Error::ResourceLimit {
            what: format!("N = {n} has {count} states"),
            limit: cap as u128,
        });
    }
    let expected = partition_count_exact(n)? as usize;
    let mut out = Vec::with_capacity(expected);
    let mut counts = vec![0u32; n as usize];
    fill_bins(1, n, &mut counts, &mut out);
    debug_assert_eq!(out.len(), expected);
    Ok(out)
}

// Assigns bin `bin` every feasible count, largest first, then recurses.
fn fill_bins(bin: u32, remaining: u32, counts: &mut Vec<u32>, out: &mut Vec<MassDistribution>) {
    if remaining == 0 {
        out.push(MassDistribution {
            counts: counts.clone(),
        });
        return;
    }
    if bin as usize > counts.len() {
        return;
    }
    for c in (0..=remaining / bin).rev() {
        counts[bin as usize - 1] = c;
        fill_bins(bin + 1, remaining - c * bin, counts, out);
    }
    counts[bin as usize - 1] = 0;
}

/// Closed-form number of collision pairs: `N^2/4` for even `N`, `(N^2-1)/4` for odd.
pub fn label_count(n: u32) -> usize {
    (n as usize * n as usize) / 4
}

/// Collection kernel `K(i, j)`, a collision rate per droplet pair per unit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(i, j) = k0`
    Constant { k0: f64 },
    /// `K(i, j) = k0 (i + j)`
    Sum { k0: f64 },
    /// `K(i, j) = k0 i j`
    Product { k0: f64 },
    /// Explicit `(i, j, K)` entries; unlisted pairs fall back to `default`.
    Table {
        entries: Vec<(u32, u32, f64)>,
        #[serde(default)]
        default: Option<f64>,
    },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Constant { k0: 1.0 }
    }
}

impl KernelSpec {
    pub fn evaluate(&self, i: u32, j: u32) -> Result<f64> {
        let value = match self {
            KernelSpec::Constant { k0 } => *k0,
            KernelSpec::Sum { k0 } => k0 * (i as u64 + j as u64) as f64,
            KernelSpec::Product { k0 } => k0 * (i as u64 * j as u64) as f64,
            KernelSpec::Table { entries, default } => entries
                .iter()
                .find(|&&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i))
                .map(|e| e.2)
                .or(*default)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("kernel table has no entry for ({i},{j})"))
                })?,
        };
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kernel value K({i},{j}) = {value} is not a finite non-negative number"
            )));
        }
        Ok(value)
    }
}

/// Parses the command-line kernel shorthand `constant:K0`, `sum:K0` or `product:K0`.
impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s.split_once(':').unwrap_or((s, "1"));
        let k0: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad kernel constant in `{s}`")))?;
        match kind.trim() {
            "constant" => Ok(KernelSpec::Constant { k0 }),
            "sum" => Ok(KernelSpec::Sum { k0 }),
            "product" => Ok(KernelSpec::Product { k0 }),
            other => Err(Error::Config(format!(
                "unknown kernel `{other}` (expected constant, sum or product)"
            ))),
        }
    }
}

/// Label-to-pair bijection together with per-pair kernel values and the time step.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    n: u32,
    pairs: Vec<(u32, u32)>,
    kernel: Vec<f64>,
    dt: f64,
}

impl TransitionTable {
    pub fn new(n: u32, kernel: &KernelSpec, dt: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::EmptyTable(n));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let mut pairs = Vec::with_capacity(label_count(n));
        for i in 1..=n / 2 {
            for j in i..=n - i {
                pairs.push((i, j));
            }
        }
        let kernel = pairs
            .iter()
            .map(|&(i, j)| kernel.evaluate(i, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            pairs,
            kernel,
            dt,
        })
    }

    pub fn bins(&self) -> u32 {
        self.n
    }

    /// `H`, the number of non-trivial labels.
    pub fn label_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    fn index(&self, h: usize) -> Result<usize> {
        if h == 0 || h > self.pairs.len() {
            return Err(Error::Label {
                label: h,
                max: self.pairs.len(),
            });
        }
        Ok(h - 1)
    }

    /// Bins `(i, j)` collided by label `h`.
    pub fn pair(&self, h: usize) -> Result<(u32, u32)> {
        Ok(self.pairs[self.index(h)?])
    }

    /// Label of the pair `(i, j)` in either order.
    pub fn label_of(&self, i: u32, j: u32) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.pairs.binary_search(&key).ok().map(|k| k + 1)
    }

    pub fn kernel(&self, h: usize) -> Result<f64> {
        Ok(self.kernel[self.index(h)?])
    }

    /// Probability `r_h` that label `h` fires within one step from `state`:
    /// `K n_i n_j dt` for distinct bins and `K n_i (n_i - 1) dt / 2` for equal bins.
    pub fn transition_rate(&self, state: &MassDistribution, h: usize) -> Result<f64> {
        let k = self.index(h)?;
        Ok(self.rate_unchecked(state, k))
    }

    // `k` is the zero-based label index.
    pub(crate) fn rate_unchecked(&self, state: &MassDistribution, k: usize) -> f64 {
        self.pair_propensity(state, k) * self.dt
    }

    /// Continuous-time propensity of zero-based label index `k` (no `dt` factor).
    pub(crate) fn pair_propensity(&self, state: &MassDistribution, k: usize) -> f64 {
        let (i, j) = self.pairs[k];
        let ni = state.count(i) as f64;
        if i == j {
            0.5 * self.kernel[k] * ni * (ni - 1.0).max(0.0)
        } else {
            self.kernel[k] * ni * state.count(j) as f64
        }
    }

    /// `sum_h r_h(state)`, the probability that any collision occurs this step.
    pub fn total_rate(&self, state: &MassDistribution) -> f64 {
        (0..self.pairs.len())
            .map(|k| self.rate_unchecked(state, k))
            .sum()
    }

    /// Rejects the step when the collision probabilities of `state` exceed one.
    pub fn check_step(&self, state: &MassDistribution) -> Result<()> {
        let total = self.total_rate(state);
        if total > 1.0 {
            return Err(Error::StepSize {
                total,
                state: state.clone(),
            });
        }
        Ok(())
    }

    /// Post-collision state for label `h`.
    pub fn apply_transition(&self, state: &MassDistribution, h: usize) -> Result<MassDistribution> {
        let (i, j) = self.pair(h)?;
        state
            .collide(i, j)
            .ok_or_else(|| Error::InfeasibleTransition {
                label: h,
                i,
                j,
                state: state.clone(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(c: &[u32]) -> MassDistribution {
        MassDistribution::new(c.to_vec()).unwrap()
    }

    #[test]
    fn two_bin_states() {
        let states = enumerate_states(2, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(states, vec![md(&[2, 0]), md(&[0, 1])]);
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partition_count_exact(1).unwrap(), 1);
        assert_eq!(partition_count_exact(5).unwrap(), 7);
        assert_eq!(partition_count_exact(40).unwrap(), 37338);
        assert_eq!(enumerate_states(5, DEFAULT_STATE_CAP).unwrap().len(), 7);
        assert!(partition_count_exact(2000).is_err());
    }

    #[test]
    fn state_cap_names_count() {
        let err = enumerate_states(61, DEFAULT_STATE_CAP).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1121505"), "{msg}");
        assert!(enumerate_states(61, 61).is_ok());
    }

    #[test]
    fn asymptotic_values() {
        let a1 = partition_count_asymptotic(1);
        assert!((a1 - 1.8767).abs() < 1e-4, "{a1}");
        let a40 = partition_count_asymptotic(40);
        assert!((a40 / 3.99e4 - 1.0).abs() < 0.01, "{a40}");
    }

    #[test]
    fn small_tables() {
        let k = KernelSpec::default();
        let t3 = TransitionTable::new(3, &k, 0.1).unwrap();
        assert_eq!(t3.pairs(), &[(1, 1), (1, 2)]);
        let t2 = TransitionTable::new(2, &k, 0.1).unwrap();
        assert_eq!(t2.pairs(), &[(1, 1)]);
        assert_eq!(
            TransitionTable::new(40, &k, 0.1).unwrap().label_count(),
            400
        );
        assert!(matches!(
            TransitionTable::new(1, &k, 0.1),
            Err(Error::EmptyTable(1))
        ));
        assert!(TransitionTable::new(4, &k, 0.0).is_err());
    }

    #[test]
    fn rates() {
        let k = KernelSpec::Constant { k0: 1.0 };
        let t2 = TransitionTable::new(2, &k, 0.1).unwrap();
        assert!((t2.transition_rate(&md(&[2, 0]), 1).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(t2.transition_rate(&md(&[0, 1]), 1).unwrap(), 0.0);
        let t3 = TransitionTable::new(3, &k, 0.1).unwrap();
        assert!((t3.transition_rate(&md(&[1, 1, 0]), 2).unwrap() - 0.1).abs() < 1e-15);
        assert!(matches!(
            t3.transition_rate(&md(&[3, 0, 0]), 3),
            Err(Error::Label { .. })
        ));
        assert!(matches!(
            t3.transition_rate(&md(&[3, 0, 0]), 0),
            Err(Error::Label { .. })
        ));
    }

    #[test]
    fn transitions() {
        let k = KernelSpec::default();
        let t2 = TransitionTable::new(2, &k, 0.1).unwrap();
        assert_eq!(t2.apply_transition(&md(&[2, 0]), 1).unwrap(), md(&[0, 1]));
        let t3 = TransitionTable::new(3, &k, 0.1).unwrap();
        assert_eq!(
            t3.apply_transition(&md(&[1, 1, 0]), 2).unwrap(),
            md(&[0, 0, 1])
        );
        assert!(matches!(
            t3.apply_transition(&md(&[1, 1, 0]), 1),
            Err(Error::InfeasibleTransition { .. })
        ));
        let t6 = TransitionTable::new(6, &k, 0.01).unwrap();
        let h = t6.label_of(1, 1).unwrap();
        assert_eq!(
            t6.apply_transition(&MassDistribution::monodisperse(6), h)
                .unwrap(),
            md(&[4, 1, 0, 0, 0, 0])
        );
    }

    #[test]
    fn kernels() {
        assert_eq!(KernelSpec::Sum { k0: 0.5 }.evaluate(1, 3).unwrap(), 2.0);
        assert_eq!(KernelSpec::Product { k0: 0.5 }.evaluate(2, 3).unwrap(), 3.0);
        let table = KernelSpec::Table {
            entries: vec![(1, 2, 0.25)],
            default: None,
        };
        assert_eq!(table.evaluate(2, 1).unwrap(), 0.25);
        assert!(table.evaluate(1, 1).is_err());
        assert!(KernelSpec::Constant { k0: -1.0 }.evaluate(1, 1).is_err());
        assert_eq!(
            "sum:2".parse::<KernelSpec>().unwrap(),
            KernelSpec::Sum { k0: 2.0 }
        );
        assert!("brownian:1".parse::<KernelSpec>().is_err());
        let json = r#"{"kind":"constant","k0":0.5}"#;
        let k: KernelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(k, KernelSpec::Constant { k0: 0.5 });
    }

    #[test]
    fn rejects_bad_states() {
        assert!(MassDistribution::new(vec![1, 0]).is_err());
        assert!(MassDistribution::new(vec![]).is_err());
    }
}
