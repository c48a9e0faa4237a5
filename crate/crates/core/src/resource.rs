//! Fault-tolerant cost model: closed-form primitive costs, their composition
//! into the per-label, per-step and amplitude-estimation levels, register
//! counts and the error budget.
//!
//! T-counts and T-depths are exact integers. The only floating-point terms are
//! the logarithmic rotation-synthesis costs, which are ceiled before they
//! enter the integer sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arcsine::published_eps;
use crate::division::count_register_width;
use crate::error::{Error, Result};
use crate::state_space::label_count;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// T-count, T-depth and ancilla requirement of a circuit block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCost {
    pub t_count: u128,
    pub t_depth: u128,
    pub ancilla: u64,
}

impl GateCost {
    pub const ZERO: GateCost = GateCost {
        t_count: 0,
        t_depth: 0,
        ancilla: 0,
    };

    /// Runs `other` after `self`: counts and depths add, ancillas are reused.
    pub fn then(self, other: GateCost) -> GateCost {
        GateCost {
            t_count: self.t_count + other.t_count,
            t_depth: self.t_depth + other.t_depth,
            ancilla: self.ancilla.max(other.ancilla),
        }
    }

    /// `k` sequential repetitions.
    pub fn times(self, k: u128) -> GateCost {
        GateCost {
            t_count: self.t_count * k,
            t_depth: self.t_depth * k,
            ancilla: self.ancilla,
        }
    }
}

impl std::iter::Sum for GateCost {
    fn sum<I: Iterator<Item = GateCost>>(iter: I) -> GateCost {
        iter.fold(GateCost::ZERO, GateCost::then)
    }
}

/// Fixed-point arithmetic primitives with their register widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Primitive {
    Toffoli { n: u32 },
    Add { n: u32 },
    Sub { n: u32 },
    CAdd { n: u32 },
    CSub { n: u32 },
    AddConst { n: u32 },
    Comp { n: u32 },
    CompConst { n: u32 },
    MulInt { n: u32, m: u32 },
    MulUi { n: u32 },
    MulConstIntUi { n: u32, m: u32 },
    Sqrt { n: u32 },
    Div { n: u32 },
    Arcsin { n: u32, degree: u32, pieces: u32 },
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Toffoli { .. } => "Toffoli",
            Primitive::Add { .. } => "ADD",
            Primitive::Sub { .. } => "SUB",
            Primitive::CAdd { .. } => "c-ADD",
            Primitive::CSub { .. } => "c-SUB",
            Primitive::AddConst { .. } => "ADD_CONST",
            Primitive::Comp { .. } => "COMP",
            Primitive::CompConst { .. } => "COMP_CONST",
            Primitive::MulInt { .. } => "MUL_INT",
            Primitive::MulUi { .. } => "MUL_UI",
            Primitive::MulConstIntUi { .. } => "MUL_CONST_INT_UI",
            Primitive::Sqrt { .. } => "SQRT",
            Primitive::Div { .. } => "DIV",
            Primitive::Arcsin { .. } => "ARCSIN",
        }
    }

    /// Builds a primitive from its name and width list. Two-width primitives
    /// take `[n, m]`; `ARCSIN` takes `[n, degree, pieces]`.
    pub fn from_name(name: &str, widths: &[u32]) -> Result<Primitive> {
        let need = |k: usize| -> Result<()> {
            if widths.len() != k {
                return Err(Error::Cost(format!(
                    "{name} takes {k} width(s), got {}",
                    widths.len()
                )));
            }
            if widths.contains(&0) {
                return Err(Error::Cost(format!("{name}: widths must be at least 1")));
            }
            Ok(())
        };
        let key = name.to_ascii_uppercase().replace('-', "_");
        let one = |f: fn(u32) -> Primitive| -> Result<Primitive> {
            need(1)?;
            Ok(f(widths[0]))
        };
        match key.as_str() {
            "TOFFOLI" => one(|n| Primitive::Toffoli { n }),
            "ADD" => one(|n| Primitive::Add { n }),
            "SUB" => one(|n| Primitive::Sub { n }),
            "C_ADD" | "CADD" => one(|n| Primitive::CAdd { n }),
            "C_SUB" | "CSUB" => one(|n| Primitive::CSub { n }),
            "ADD_CONST" => one(|n| Primitive::AddConst { n }),
            "COMP" => one(|n| Primitive::Comp { n }),
            "COMP_CONST" => one(|n| Primitive::CompConst { n }),
            "MUL_UI" => one(|n| Primitive::MulUi { n }),
            "SQRT" => one(|n| Primitive::Sqrt { n }),
            "DIV" => one(|n| Primitive::Div { n }),
            "MUL_INT" => {
                need(2)?;
                Ok(Primitive::MulInt {
                    n: widths[0],
                    m: widths[1],
                })
            }
            "MUL_CONST_INT_UI" => {
                need(2)?;
                Ok(Primitive::MulConstIntUi {
                    n: widths[0],
                    m: widths[1],
                })
            }
            "ARCSIN" => {
                need(3)?;
                Ok(Primitive::Arcsin {
                    n: widths[0],
                    degree: widths[1],
                    pieces: widths[2],
                })
            }
            _ => Err(Error::Cost(format!("unknown primitive `{name}`"))),
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Primitive::MulInt { n, m } | Primitive::MulConstIntUi { n, m } => {
                write!(f, "{}({n},{m})", self.name())
            }
            Primitive::Arcsin { n, degree, pieces } => {
                write!(f, "ARCSIN({n},d={degree},M={pieces})")
            }
            Primitive::Toffoli { n }
            | Primitive::Add { n }
            | Primitive::Sub { n }
            | Primitive::CAdd { n }
            | Primitive::CSub { n }
            | Primitive::AddConst { n }
            | Primitive::Comp { n }
            | Primitive::CompConst { n }
            | Primitive::MulUi { n }
            | Primitive::Sqrt { n }
            | Primitive::Div { n } => write!(f, "{}({n})", self.name()),
        }
    }
}

/// Parses `NAME(w1,w2,...)`, e.g. `DIV(42)` or `ARCSIN(42,5,15)`.
impl FromStr for Primitive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Primitive> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::Cost(format!("expected NAME(widths) in `{s}`")))?;
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Cost(format!("missing `)` in `{s}`")))?;
        let widths = inner
            .split(',')
            .map(|w| {
                let w = w.trim();
                let w = w.rsplit_once('=').map_or(w, |(_, v)| v);
                w.parse::<u32>()
                    .map_err(|_| Error::Cost(format!("bad width `{w}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Primitive::from_name(name, &widths)
    }
}

/// Cost of one primitive plus a flag when a formula had to be clamped at zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimitiveCost {
    pub primitive: Primitive,
    pub cost: GateCost,
    pub clamped: bool,
}

fn clamp(v: i128, clamped: &mut bool) -> u128 {
    if v < 0 {
        *clamped = true;
        0
    } else {
        v as u128
    }
}

fn ceil_log2(x: u32) -> i128 {
    if x <= 1 {
        0
    } else {
        (32 - (x - 1).leading_zeros()) as i128
    }
}

/// Closed-form T-count of `MUL_CONST_INT_UI`, which goes negative
/// for widths such as `(12, 42)`. Kept for reporting only.
pub fn mul_const_int_ui_closed_form(n: u32, m: u32) -> i128 {
    let (n, m) = (n as i128, m as i128);
    8 * n * m - 4 * n * n - 2 * m * m - 4 * n - 6 * m
}

/// Evaluates the closed-form cost formulas. Negative results (tiny widths)
/// clamp to zero and set [`PrimitiveCost::clamped`].
pub fn primitive_cost(p: &Primitive) -> PrimitiveCost {
    let mut clamped = false;
    let (count, depth, anc): (i128, i128, i128) = match *p {
        Primitive::Toffoli { n } => {
            let n = n as i128;
            (4 * n - 8, n - 2, n - 1)
        }
        Primitive::Add { n } | Primitive::Sub { n } => {
            let n = n as i128;
            (4 * n - 4, 2 * n - 2, n - 1)
        }
        Primitive::CAdd { n } | Primitive::CSub { n } => {
            let n = n as i128;
            (8 * n - 4, 4 * n - 2, 2 * n - 1)
        }
        Primitive::AddConst { n } => {
            let n = n as i128;
            (4 * n - 8, 2 * n - 4, 2 * n - 2)
        }
        Primitive::Comp { n } | Primitive::CompConst { n } => {
            let n = n as i128;
            (8 * n - 16, 4 * n - 8, 2 * n - 1)
        }
        Primitive::MulInt { n, m } => {
            let (n, m) = (n as i128, m as i128);
            (8 * n * m - 4 * n * n, 4 * n * m - 2 * n * n, 2 * n - 1)
        }
        Primitive::MulUi { n } => {
            let n = n as i128;
            (4 * n * n, 2 * n * n, 2 * n - 1)
        }
        Primitive::MulConstIntUi { n, m } => {
            // (m - n) full-width adders plus adders of shrinking width n - i.
            let (n, m) = (n as i128, m as i128);
            (
                (m - n) * (4 * n - 4) + 2 * n * n - 2 * n,
                (m - n) * (2 * n - 2) + n * n - n,
                n - 1,
            )
        }
        Primitive::Sqrt { n } => {
            let n = n as i128;
            (8 * n * n + 16 * n - 32, 4 * n * n + 8 * n - 16, 6 * n)
        }
        Primitive::Div { n } => {
            let n = n as i128;
            (18 * n * n - 30 * n, 9 * n * n - 15 * n, 2 * n - 1)
        }
        Primitive::Arcsin { n, degree, pieces } => {
            let (n, d, m) = (n as i128, degree as i128, pieces as i128);
            let lg = ceil_log2(pieces);
            (
                32 * m * (n - 2) + 8 * d * (n * n + n - 1) + 16 * d * m * (lg - 1),
                4 * d * (2 * n * n).max(m * (lg - 1)) + 16 * m * (n - 2) + 4 * d * (n - 1),
                (d + 4) * n + 2 * lg,
            )
        }
    };
    let cost = GateCost {
        t_count: clamp(count, &mut clamped),
        t_depth: clamp(depth, &mut clamped),
        ancilla: clamp(anc, &mut clamped) as u64,
    };
    PrimitiveCost {
        primitive: *p,
        cost,
        clamped,
    }
}

/// Parameters of one resource-estimation case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationCase {
    /// Number of mass bins `N`.
    #[serde(alias = "N")]
    pub bins: u32,
    /// Number of time steps `M`.
    #[serde(alias = "M")]
    pub steps: u64,
    /// Width of the arithmetic registers.
    pub n_eps: u32,
    /// Arcsine polynomial degree.
    pub d_eps: u32,
    /// Arcsine piece count.
    pub m_eps: u32,
    pub eps_rotation: f64,
    pub eps_estimation: f64,
    pub eps_c: f64,
    pub delta: f64,
    /// Arcsine approximation error; looked up from the published table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_arcsin: Option<f64>,
    /// Replaces the default `2^(1 - n_eps) + eps_arcsin` arithmetic error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_calculation: Option<f64>,
    /// Bin whose expected count is read out.
    #[serde(default = "default_bin")]
    pub readout_bin: u32,
}

fn default_bin() -> u32 {
    1
}

impl EstimationCase {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.bins < 2 {
            return bad(format!("N must be at least 2, got {}", self.bins));
        }
        if self.steps == 0 {
            return bad("M must be at least 1".into());
        }
        if self.n_eps < 2 || self.d_eps == 0 || self.m_eps == 0 {
            return bad("n_eps >= 2, d_eps >= 1 and m_eps >= 1 are required".into());
        }
        for (name, v) in [
            ("eps_rotation", self.eps_rotation),
            ("eps_estimation", self.eps_estimation),
            ("eps_c", self.eps_c),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.readout_bin == 0 || self.readout_bin > self.bins {
            return Err(Error::Bin {
                bin: self.readout_bin as usize,
                max: self.bins as usize,
            });
        }
        Ok(())
    }

    pub fn labels(&self) -> u64 {
        label_count(self.bins) as u64
    }

    /// History register width `ceil(log2(H + 1))`.
    pub fn history_width(&self) -> u32 {
        64 - self.labels().leading_zeros()
    }

    fn count_width(&self, bin: u32) -> u32 {
        count_register_width(self.bins, bin)
    }

    /// Arcsine error used in the budget.
    pub fn arcsine_error(&self) -> Result<f64> {
        self.eps_arcsin
            .or_else(|| published_eps(self.d_eps, self.m_eps as usize))
            .ok_or_else(|| {
                Error::Cost(format!(
                    "no tabulated arcsine error for d = {}, M = {}; set eps_arcsin",
                    self.d_eps, self.m_eps
                ))
            })
    }

    /// Arithmetic error per division: the override, or one register ulp plus the arcsine error.
    pub fn calculation_error(&self) -> Result<f64> {
        match self.eps_calculation {
            Some(e) => Ok(e),
            None => Ok(2f64.powi(1 - self.n_eps as i32) + self.arcsine_error()?),
        }
    }
}

fn cost(p: Primitive) -> GateCost {
    primitive_cost(&p).cost
}

/// Probability-calculation block.
pub fn gate_cost_up(c: &EstimationCase) -> GateCost {
    let q1 = c.count_width(1);
    let n = c.n_eps;
    [
        cost(Primitive::MulInt { n: q1, m: q1 }),
        cost(Primitive::MulConstIntUi { n: 2 * q1, m: n }),
        cost(Primitive::Comp { n }),
        cost(Primitive::CSub { n }).times(2),
        cost(Primitive::Sqrt { n }).times(2),
        cost(Primitive::Div { n }),
        cost(Primitive::Arcsin {
            n,
            degree: c.d_eps,
            pieces: c.m_eps,
        }),
    ]
    .into_iter()
    .sum()
}

/// Uncompute block: the probability calculation plus one subtraction.
pub fn gate_cost_uq(c: &EstimationCase) -> GateCost {
    gate_cost_up(c).then(cost(Primitive::Sub { n: c.n_eps }))
}

/// Restores the retained-probability register.
pub fn gate_cost_ur(c: &EstimationCase) -> GateCost {
    let q1 = c.count_width(1);
    cost(Primitive::MulInt { n: q1, m: q1 })
        .times(2)
        .then(
            cost(Primitive::MulConstIntUi {
                n: 2 * q1,
                m: c.n_eps,
            })
            .times(2),
        )
        .then(cost(Primitive::Add { n: c.n_eps }))
}

/// Controlled rotation, with rotation synthesis error `eps_rotation`.
pub fn gate_cost_usin(c: &EstimationCase) -> GateCost {
    let n = c.n_eps as f64;
    let qh = c.history_width() as f64;
    let lg = (4.0 / c.eps_rotation).log2();
    GateCost {
        t_count: (12.0 * n + 6.6 * lg + 8.0 * qh - 16.0).ceil().max(0.0) as u128,
        t_depth: (3.0 * n + 1.15 * lg + 2.0 * qh - 3.0).ceil().max(0.0) as u128,
        ancilla: 5 * c.n_eps as u64 + 2,
    }
}

/// Label increment on the history register.
pub fn gate_cost_uadd(c: &EstimationCase) -> GateCost {
    let qh = c.history_width();
    cost(Primitive::AddConst { n: qh }).then(cost(Primitive::Toffoli { n: qh }))
}

/// How many history-controlled Toffolis an equal-bin shift uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualPairShift {
    /// Two Toffolis per equal-bin shift.
    #[default]
    TwoToffoli,
    /// One Toffoli per equal-bin shift.
    OneToffoli,
}

/// Mass-distribution update for the collision of bins `i` and `j`.
pub fn gate_cost_ushift(
    c: &EstimationCase,
    i: u32,
    j: u32,
    variant: EqualPairShift,
) -> Result<GateCost> {
    if i == 0 || j < i || i + j > c.bins {
        return Err(Error::Cost(format!(
            "({i},{j}) is not a collision pair for N = {}",
            c.bins
        )));
    }
    let qh = c.history_width();
    let tof = cost(Primitive::Toffoli { n: qh });
    Ok(if i != j {
        tof.times(2)
            .then(cost(Primitive::CAdd {
                n: c.count_width(i + j),
            }))
            .then(cost(Primitive::CSub {
                n: c.count_width(i),
            }))
            .then(cost(Primitive::CSub {
                n: c.count_width(j),
            }))
    } else {
        let tofs = match variant {
            EqualPairShift::TwoToffoli => 2,
            EqualPairShift::OneToffoli => 1,
        };
        tof.times(tofs)
            .then(cost(Primitive::CAdd {
                n: c.count_width(2 * i),
            }))
            .then(cost(Primitive::CSub {
                n: c.count_width(i),
            }))
    })
}

fn all_shifts(c: &EstimationCase, variant: EqualPairShift) -> GateCost {
    let mut total = GateCost::ZERO;
    for i in 1..=c.bins / 2 {
        for j in i..=c.bins - i {
            total =
                total.then(gate_cost_ushift(c, i, j, variant).expect("enumerated pairs are valid"));
        }
    }
    total
}

/// Amplitude loading of bin `bin`'s count; the depth is taken equal to the count.
pub fn gate_cost_uc(c: &EstimationCase, bin: u32) -> Result<GateCost> {
    if bin == 0 || bin > c.bins {
        return Err(Error::Bin {
            bin: bin as usize,
            max: c.bins as usize,
        });
    }
    let i = (c.bins / bin) as f64;
    let t = (1.15 * i * (i / c.eps_c).log2()).ceil().max(0.0) as u128;
    Ok(GateCost {
        t_count: t,
        t_depth: t,
        ancilla: 0,
    })
}

/// Grover-oracle applications of iterative amplitude estimation,
/// `ceil((1.4/eps) ln((2/delta) log2(pi/(4 eps))))`.
pub fn oracle_iterations(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0 and delta in (0,1), got {eps}, {delta}"
        )));
    }
    let lg = (std::f64::consts::PI / (4.0 * eps)).log2();
    let inner = 2.0 / delta * lg;
    if !(lg > 0.0 && inner > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "estimation error {eps} is too close to pi/4 for the iteration bound"
        )));
    }
    Ok((1.4 / eps * inner.ln()).ceil() as u64)
}

/// `2 N_or M H (eps_calc + eps_rot) + 2 N_or eps_c + eps_est`.
pub fn error_budget(c: &EstimationCase, eps_calculation: f64) -> Result<f64> {
    let n_or = oracle_iterations(c.eps_estimation, c.delta)? as f64;
    Ok(error_budget_with(
        n_or,
        c.steps as f64,
        c.labels() as f64,
        eps_calculation,
        c.eps_rotation,
        c.eps_c,
        c.eps_estimation,
    ))
}

/// [`error_budget`] with every term explicit.
pub fn error_budget_with(
    oracle_calls: f64,
    steps: f64,
    labels: f64,
    eps_calculation: f64,
    eps_rotation: f64,
    eps_c: f64,
    eps_estimation: f64,
) -> f64 {
    2.0 * oracle_calls * steps * labels * (eps_calculation + eps_rotation)
        + 2.0 * oracle_calls * eps_c
        + eps_estimation
}

/// Logical-qubit breakdown.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitCounts {
    /// Droplet-count registers, one per bin.
    pub main: u64,
    /// History registers, one per time step.
    pub history: u64,
    pub retained_probability: u64,
    pub angle: u64,
    /// Scratch register from the short count (`3 q_1 + 5 n + 1`).
    pub scratch: u64,
    /// Scratch register summed from its listed sub-registers (`4 q_1 + 5 n + 1`).
    pub scratch_tally: u64,
    pub readout: u64,
    /// Largest ancilla requirement of any primitive or block used.
    pub arithmetic: u64,
    pub total: u64,
}

impl QubitCounts {
    /// Auxiliary qubits (everything except the main and history registers).
    pub fn auxiliary(&self) -> u64 {
        self.retained_probability + self.angle + self.scratch + self.readout + self.arithmetic
    }
}

pub fn register_counts(c: &EstimationCase) -> QubitCounts {
    let main: u64 = (1..=c.bins).map(|i| c.count_width(i) as u64).sum();
    let history = c.steps * c.history_width() as u64;
    let n = c.n_eps as u64;
    let q1 = c.count_width(1) as u64;
    let arithmetic = [
        gate_cost_up(c),
        gate_cost_uq(c),
        gate_cost_ur(c),
        gate_cost_usin(c),
        gate_cost_uadd(c),
        all_shifts(c, EqualPairShift::TwoToffoli),
    ]
    .iter()
    .map(|g| g.ancilla)
    .max()
    .unwrap_or(0);
    let mut q = QubitCounts {
        main,
        history,
        retained_probability: n,
        angle: n,
        scratch: 3 * q1 + 5 * n + 1,
        scratch_tally: 4 * q1 + 5 * n + 1,
        readout: 1,
        arithmetic,
        total: 0,
    };
    q.total = q.main + q.history + q.auxiliary();
    q
}

/// Per-block costs of one case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateBreakdown {
    pub u_p: GateCost,
    pub u_sin: GateCost,
    pub u_q: GateCost,
    pub u_r: GateCost,
    pub u_add: GateCost,
    /// Sum of the shifts over all labels (two Toffolis for equal pairs).
    pub u_shift_all: GateCost,
    /// Same sum with one Toffoli for equal pairs.
    pub u_shift_all_one_toffoli: GateCost,
    pub u_c: GateCost,
    /// `U_P + U_sin + U_Q + U_R`: one label's division.
    pub division: GateCost,
    pub time_step: GateCost,
    pub evolution: GateCost,
    /// `2 (U_t + U_c)`.
    pub oracle: GateCost,
}

/// Invocation counts linking the levels of the hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Invocations {
    pub divisions_per_step: u64,
    pub increments_per_step: u64,
    pub shifts_per_step: u64,
    pub steps: u64,
    pub oracle_calls: u64,
    /// Oracle calls at two preparations each, plus one un-amplified preparation.
    pub preparations: u64,
}

/// Error-budget terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub eps_arcsin: f64,
    pub eps_calculation: f64,
    pub eps_max: f64,
}

/// Totals as reported per case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Totals {
    pub t_count: u128,
    pub t_depth: u128,
    pub logical_qubits: u64,
}

/// Full resource report of one case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceReport {
    pub schema_version: u32,
    pub case: EstimationCase,
    pub primitives: Vec<PrimitiveCost>,
    pub gates: GateBreakdown,
    pub invocations: Invocations,
    pub qubits: QubitCounts,
    pub error: ErrorBudget,
    pub totals: Totals,
    pub warnings: Vec<String>,
}

impl ResourceReport {
    /// Recomputes the totals from the breakdown and compares.
    pub fn is_self_consistent(&self) -> bool {
        let g = &self.gates;
        let inv = &self.invocations;
        let h = inv.divisions_per_step as u128;
        let step = g.division.t_count * h
            + g.u_add.t_count * inv.increments_per_step as u128
            + g.u_shift_all.t_count;
        let evolution = step * inv.steps as u128;
        let t_count = (evolution + g.u_c.t_count) * inv.preparations as u128;
        let q = &self.qubits;
        t_count == self.totals.t_count
            && step == g.time_step.t_count
            && q.main + q.history + q.auxiliary() == self.totals.logical_qubits
    }

    /// Cost of the un-amplified preparation as a share of the total.
    pub fn preparation_share(&self) -> f64 {
        1.0 / self.invocations.preparations as f64
    }
}

/// Case totals and the full breakdown.
pub fn estimate_case(c: &EstimationCase) -> Result<ResourceReport> {
    c.validate()?;
    let mut warnings = Vec::new();
    let q1 = c.count_width(1);
    let qh = c.history_width();
    let n = c.n_eps;
    let primitives: Vec<PrimitiveCost> = [
        Primitive::MulInt { n: q1, m: q1 },
        Primitive::MulConstIntUi { n: 2 * q1, m: n },
        Primitive::Comp { n },
        Primitive::CSub { n },
        Primitive::Sqrt { n },
        Primitive::Div { n },
        Primitive::Arcsin {
            n,
            degree: c.d_eps,
            pieces: c.m_eps,
        },
        Primitive::Sub { n },
        Primitive::Add { n },
        Primitive::AddConst { n: qh },
        Primitive::Toffoli { n: qh },
    ]
    .iter()
    .map(primitive_cost)
    .collect();
    for p in &primitives {
        if p.clamped {
            warnings.push(format!(
                "{} formula is negative at these widths; clamped to 0",
                p.primitive
            ));
        }
    }
    let closed = mul_const_int_ui_closed_form(2 * q1, n);
    let derived = primitive_cost(&Primitive::MulConstIntUi { n: 2 * q1, m: n })
        .cost
        .t_count;
    if closed != derived as i128 {
        warnings.push(format!(
            "MUL_CONST_INT_UI({},{n}): closed form gives {closed}, adder sum gives {derived}; using the adder sum",
            2 * q1
        ));
    }

    let u_p = gate_cost_up(c);
    let u_sin = gate_cost_usin(c);
    let u_q = gate_cost_uq(c);
    let u_r = gate_cost_ur(c);
    let u_add = gate_cost_uadd(c);
    let u_shift_all = all_shifts(c, EqualPairShift::TwoToffoli);
    let u_shift_all_one_toffoli = all_shifts(c, EqualPairShift::OneToffoli);
    let u_c = gate_cost_uc(c, c.readout_bin)?;

    let h = c.labels() as u128;
    let division = u_p.then(u_sin).then(u_q).then(u_r);
    let time_step = division.times(h).then(u_add.times(h - 1)).then(u_shift_all);
    let evolution = time_step.times(c.steps as u128);
    let prep = evolution.then(u_c);
    let oracle = prep.times(2);
    let oracle_calls = oracle_iterations(c.eps_estimation, c.delta)?;
    let preparations = 2 * oracle_calls + 1;
    let total = prep.times(preparations as u128);

    let qubits = register_counts(c);
    let eps_arcsin = c.arcsine_error()?;
    let eps_calculation = c.calculation_error()?;
    let eps_max = error_budget(c, eps_calculation)?;
    warnings.push(format!(
        "total includes one un-amplified preparation ({:.3}% of the T-count)",
        100.0 / preparations as f64
    ));

    Ok(ResourceReport {
        schema_version: SCHEMA_VERSION,
        case: c.clone(),
        primitives,
        gates: GateBreakdown {
            u_p,
            u_sin,
            u_q,
            u_r,
            u_add,
            u_shift_all,
            u_shift_all_one_toffoli,
            u_c,
            division,
            time_step,
            evolution,
            oracle,
        },
        invocations: Invocations {
            divisions_per_step: h as u64,
            increments_per_step: h as u64 - 1,
            shifts_per_step: h as u64,
            steps: c.steps,
            oracle_calls,
            preparations,
        },
        totals: Totals {
            t_count: total.t_count,
            t_depth: total.t_depth,
            logical_qubits: qubits.total,
        },
        qubits,
        error: ErrorBudget {
            eps_arcsin,
            eps_calculation,
            eps_max,
        },
        warnings,
    })
}

/// One row of a scaling study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub bins: u32,
    pub t_count: u128,
    /// T-count relative to the first row.
    pub ratio: f64,
}

/// T-count versus `N` with every other parameter taken from `base`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln T` against `ln N`.
    pub loglog_slope: f64,
}

pub fn scaling_report(bins: &[u32], base: &EstimationCase) -> Result<ScalingReport> {
    if bins.len() < 2 {
        return Err(Error::InvalidParameter(
            "scaling needs at least two N values".into(),
        ));
    }
    let mut rows = Vec::with_capacity(bins.len());
    for &n in bins {
        let c = EstimationCase {
            bins: n,
            ..base.clone()
        };
        let t = estimate_case(&c)?.totals.t_count;
        rows.push(ScalingRow {
            bins: n,
            t_count: t,
            ratio: 0.0,
        });
    }
    let first = rows[0].t_count as f64;
    for r in rows.iter_mut() {
        r.ratio = r.t_count as f64 / first;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.bins as f64).ln(), (r.t_count as f64).ln()))
        .collect();
    Ok(ScalingReport {
        loglog_slope: loglog_slope(&pts),
        rows,
    })
}

/// Least-squares slope through `(x, y)` points.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
