//! Bit-exact emulation of the fixed-point arithmetic behind the transition
//! angle of one probability division.
//!
//! Real-mode words have one integer bit and `n - 1` fractional bits, covering
//! `[0, 2)`. Integer-mode words are plain `n`-bit unsigned integers. Every
//! operation truncates toward zero.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arcsine::QuantizedPiecewise;
use crate::ddouble::DD;
use crate::error::{Error, Result};

/// Widest register the emulator accepts; products of two words fit in 128 bits.
pub const MAX_WIDTH: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Real,
    Integer,
}

/// An `width`-bit register value.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointValue {
    pub bits: u128,
    pub width: u32,
    pub mode: Mode,
}

impl fmt::Debug for FixedPointValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0w$b}", self.bits, w = self.width as usize)?;
        match self.mode {
            Mode::Real => write!(f, " (~{})", self.to_f64()),
            Mode::Integer => write!(f, " ({})", self.bits),
        }
    }
}

impl fmt::Display for FixedPointValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0w$b}", self.bits, w = self.width as usize)
    }
}

fn check_width(op: &'static str, width: u32) -> Result<()> {
    if !(1..=MAX_WIDTH).contains(&width) {
        return Err(Error::fixed(
            op,
            format!("width {width} outside 1..={MAX_WIDTH}"),
        ));
    }
    Ok(())
}

fn mask(width: u32) -> u128 {
    (1u128 << width) - 1
}

// Splits a finite non-negative f64 into an integer mantissa and binary exponent.
fn decompose(x: f64) -> (u128, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac as u128, -1074)
    } else {
        ((frac | (1u64 << 52)) as u128, exp - 1075)
    }
}

// floor(m * 2^e) for a non-negative integer m.
fn shift_floor(m: u128, e: i32) -> Option<u128> {
    if e >= 0 {
        if m != 0 && (e as u32 >= 128 || m.leading_zeros() < e as u32) {
            return None;
        }
        Some(m << e)
    } else if -e >= 128 {
        Some(0)
    } else {
        Some(m >> (-e))
    }
}

impl FixedPointValue {
    /// Real-mode word from raw bits.
    pub fn real(bits: u128, width: u32) -> Result<Self> {
        check_width("real", width)?;
        if bits > mask(width) {
            return Err(Error::fixed(
                "real",
                format!("{bits} does not fit in {width} bits"),
            ));
        }
        Ok(Self {
            bits,
            width,
            mode: Mode::Real,
        })
    }

    /// Integer-mode word.
    pub fn integer(value: u128, width: u32) -> Result<Self> {
        check_width("integer", width)?;
        if value > mask(width) {
            return Err(Error::fixed(
                "integer",
                format!("{value} does not fit in {width} bits"),
            ));
        }
        Ok(Self {
            bits: value,
            width,
            mode: Mode::Integer,
        })
    }

    pub fn frac_bits(&self) -> u32 {
        match self.mode {
            Mode::Real => self.width - 1,
            Mode::Integer => 0,
        }
    }

    /// The represented value in double-double (exact for widths up to 60).
    pub fn to_dd(&self) -> DD {
        DD::from_scaled(self.bits as i128, self.frac_bits())
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }

    /// `1.0` in a real-mode register: only the integer bit set.
    pub fn one(width: u32) -> Result<Self> {
        Self::real(1u128 << (width - 1), width)
    }
}

/// Encodes `x` by truncation. Real mode accepts `[0, 2)`, integer mode whole numbers.
pub fn fp_encode(x: f64, width: u32, mode: Mode) -> Result<FixedPointValue> {
    check_width("encode", width)?;
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::fixed(
            "encode",
            format!("{x} is not a finite non-negative value"),
        ));
    }
    match mode {
        Mode::Real => {
            if x >= 2.0 {
                return Err(Error::fixed("encode", format!("{x} outside [0, 2)")));
            }
            let (m, e) = decompose(x);
            let bits = shift_floor(m, e + width as i32 - 1).expect("x < 2 fits");
            FixedPointValue::real(bits.min(mask(width)), width)
        }
        Mode::Integer => {
            if x.fract() != 0.0 || x >= 2f64.powi(width as i32) {
                return Err(Error::fixed(
                    "encode",
                    format!("{x} is not an integer in [0, 2^{width})"),
                ));
            }
            FixedPointValue::integer(x as u128, width)
        }
    }
}

pub fn fp_decode(v: &FixedPointValue) -> f64 {
    v.to_f64()
}

fn same_shape(op: &'static str, a: &FixedPointValue, b: &FixedPointValue) -> Result<()> {
    if a.width != b.width || a.mode != b.mode {
        return Err(Error::fixed(
            op,
            format!("operand shapes differ: {a:?} vs {b:?}"),
        ));
    }
    Ok(())
}

/// Ripple addition; a carry out of the top bit is an error.
pub fn fp_add(a: &FixedPointValue, b: &FixedPointValue) -> Result<FixedPointValue> {
    same_shape("add", a, b)?;
    let s = a.bits + b.bits;
    if s > mask(a.width) {
        return Err(Error::fixed(
            "add",
            format!("carry out of {} bits", a.width),
        ));
    }
    Ok(FixedPointValue { bits: s, ..*a })
}

/// Subtraction `a - b` with `a >= b`.
pub fn fp_sub(a: &FixedPointValue, b: &FixedPointValue) -> Result<FixedPointValue> {
    same_shape("sub", a, b)?;
    let bits = a
        .bits
        .checked_sub(b.bits)
        .ok_or_else(|| Error::fixed("sub", "borrow out: subtrahend exceeds minuend"))?;
    Ok(FixedPointValue { bits, ..*a })
}

/// `a >= b`.
pub fn fp_compare(a: &FixedPointValue, b: &FixedPointValue) -> Result<bool> {
    same_shape("compare", a, b)?;
    Ok(a.bits >= b.bits)
}

/// Integer product of an `n`-bit and an `m`-bit word, `n + m` bits wide.
pub fn fp_mul_int(a: &FixedPointValue, b: &FixedPointValue) -> Result<FixedPointValue> {
    if a.mode != Mode::Integer || b.mode != Mode::Integer {
        return Err(Error::fixed("mul_int", "both operands must be integers"));
    }
    FixedPointValue::integer(a.bits * b.bits, a.width + b.width)
}

/// Product of two reals in `[0, 1]`, truncated back to the common width.
pub fn fp_mul_ui(a: &FixedPointValue, b: &FixedPointValue) -> Result<FixedPointValue> {
    same_shape("mul_ui", a, b)?;
    if a.mode != Mode::Real {
        return Err(Error::fixed("mul_ui", "operands must be reals"));
    }
    let one = 1u128 << a.frac_bits();
    if a.bits > one || b.bits > one {
        return Err(Error::fixed("mul_ui", "operands must lie in [0, 1]"));
    }
    FixedPointValue::real((a.bits * b.bits) >> a.frac_bits(), a.width)
}

/// Integer word times a real constant, giving an `m`-bit real.
///
/// The constant is used at its full binary value; the only rounding is the
/// final truncation to `m - 1` fractional bits.
pub fn fp_mul_const_int_ui(a: &FixedPointValue, constant: f64, m: u32) -> Result<FixedPointValue> {
    check_width("mul_const_int_ui", m)?;
    if a.mode != Mode::Integer {
        return Err(Error::fixed(
            "mul_const_int_ui",
            "first operand must be an integer",
        ));
    }
    if !(constant.is_finite() && constant >= 0.0) {
        return Err(Error::fixed(
            "mul_const_int_ui",
            format!("bad constant {constant}"),
        ));
    }
    let (mant, e) = decompose(constant);
    let prod = a.bits * mant;
    let bits = shift_floor(prod, e + m as i32 - 1)
        .filter(|&b| b <= mask(m))
        .ok_or_else(|| {
            Error::fixed(
                "mul_const_int_ui",
                format!("product {} * {constant} >= 2", a.bits),
            )
        })?;
    FixedPointValue::real(bits, m)
}

/// Non-restoring integer square root, `floor(sqrt(d))`.
pub fn isqrt_nonrestoring(d: u128) -> u128 {
    let pairs = (128 - d.leading_zeros()).div_ceil(2);
    let mut q: i128 = 0;
    let mut r: i128 = 0;
    for i in (0..pairs).rev() {
        let digit = ((d >> (2 * i)) & 3) as i128;
        if r >= 0 {
            r = ((r << 2) | digit) - ((q << 2) | 1);
        } else {
            r = ((r << 2) | digit) + ((q << 2) | 3);
        }
        q = if r >= 0 { (q << 1) | 1 } else { q << 1 };
    }
    q as u128
}

/// Square root of a real in `[0, 1]`, truncated to the same width.
pub fn fp_sqrt(a: &FixedPointValue) -> Result<FixedPointValue> {
    if a.mode != Mode::Real {
        return Err(Error::fixed("sqrt", "operand must be real"));
    }
    if a.bits > 1u128 << a.frac_bits() {
        return Err(Error::fixed("sqrt", "operand must lie in [0, 1]"));
    }
    // sqrt(A / 2^f) * 2^f = sqrt(A * 2^f)
    FixedPointValue::real(isqrt_nonrestoring(a.bits << a.frac_bits()), a.width)
}

/// Restoring long division `a / b` for `0 <= a <= b`, `b > 0`.
pub fn fp_div(a: &FixedPointValue, b: &FixedPointValue) -> Result<FixedPointValue> {
    same_shape("div", a, b)?;
    if b.bits == 0 {
        return Err(Error::fixed("div", "division by zero"));
    }
    if a.bits > b.bits {
        return Err(Error::fixed(
            "div",
            "dividend exceeds divisor; quotient would leave [0, 1]",
        ));
    }
    let mut rem = a.bits;
    let mut q: u128 = 0;
    for _ in 0..a.width {
        q <<= 1;
        if rem >= b.bits {
            rem -= b.bits;
            q |= 1;
        }
        rem <<= 1;
    }
    FixedPointValue::real(q, a.width)
}

/// Result of [`fp_arcsin_pp`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArcsinOutput {
    pub value: FixedPointValue,
    pub piece: usize,
    /// Input lay past 0.5 and the last piece was extrapolated.
    pub extrapolated: bool,
}

/// Piecewise-polynomial arcsine: the piece is picked by comparing against the
/// left edges, then a Horner scheme in `x - start` runs with truncating products.
///
/// Inputs above 0.5 are rejected unless `allow_extrapolation` is set.
pub fn fp_arcsin_pp(
    a: &FixedPointValue,
    pieces: &QuantizedPiecewise,
    allow_extrapolation: bool,
) -> Result<ArcsinOutput> {
    if a.mode != Mode::Real || a.width != pieces.width {
        return Err(Error::fixed(
            "arcsin_pp",
            format!("input must be a {}-bit real, got {a:?}", pieces.width),
        ));
    }
    let half = 1u128 << (a.frac_bits() - 1);
    let extrapolated = a.bits > half;
    if extrapolated && !allow_extrapolation {
        return Err(Error::fixed(
            "arcsin_pp",
            format!("input {} outside [0, 0.5]", a.to_f64()),
        ));
    }
    let piece = pieces
        .starts
        .partition_point(|&s| s <= a.bits)
        .saturating_sub(1);
    let u = (a.bits - pieces.starts[piece]) as i128;
    let f = pieces.frac_bits;
    let coeffs = &pieces.coeffs[piece];
    let mut acc = *coeffs.last().expect("at least one coefficient");
    for &c in coeffs.iter().rev().skip(1) {
        acc = ((acc * u) >> f) + c;
    }
    let bits = acc.clamp(0, mask(a.width) as i128) as u128;
    Ok(ArcsinOutput {
        value: FixedPointValue::real(bits, a.width)?,
        piece,
        extrapolated,
    })
}

/// Every register of one transition-angle evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineTrace {
    pub count_i: FixedPointValue,
    pub count_j: FixedPointValue,
    pub rate_constant: f64,
    pub retained: FixedPointValue,
    pub product: FixedPointValue,
    pub rate: FixedPointValue,
    pub retained_quarter: FixedPointValue,
    pub complement: bool,
    pub branch_value: FixedPointValue,
    pub sqrt_branch: FixedPointValue,
    pub sqrt_retained: FixedPointValue,
    pub quotient: FixedPointValue,
    pub arcsin: ArcsinOutput,
    pub theta: FixedPointValue,
}

/// Angle, trace and errors against double-double references.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineResult {
    pub theta: FixedPointValue,
    pub trace: PipelineTrace,
    /// `arcsin sqrt(r / s)` with the exact rate and the register value of `s`.
    pub exact: f64,
    /// `|theta - exact|`.
    pub error: f64,
    /// Error against `arcsin sqrt(r / s)` evaluated at the register value of `r`,
    /// i.e. excluding the truncation of the rate itself.
    pub downstream_error: f64,
}

fn bit_length(v: u32) -> u32 {
    (32 - v.leading_zeros()).max(1)
}

fn theta_reference(ratio: DD) -> DD {
    let ratio = if ratio.hi > 1.0 { DD::ONE } else { ratio };
    ratio.sqrt().asin()
}

/// How the angle stage evaluates `arcsin`.
#[derive(Clone, Copy, Debug)]
pub enum AngleUnit<'a> {
    /// The quantized piecewise polynomial.
    Piecewise {
        pieces: &'a QuantizedPiecewise,
        allow_extrapolation: bool,
    },
    /// Correctly truncated arcsine on `[0, 1]`, isolating the other stages.
    Reference,
}

/// Which side of the `r >= s/4` comparison to take.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Branch {
    #[default]
    Auto,
    Direct,
    Complement,
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions<'a> {
    pub width: u32,
    pub angle: AngleUnit<'a>,
    pub branch: Branch,
}

impl<'a> PipelineOptions<'a> {
    /// Piecewise angle stage at the pieces' width, automatic branch, no extrapolation.
    pub fn piecewise(pieces: &'a QuantizedPiecewise) -> Self {
        Self {
            width: pieces.width,
            angle: AngleUnit::Piecewise {
                pieces,
                allow_extrapolation: false,
            },
            branch: Branch::Auto,
        }
    }

    pub fn reference(width: u32) -> Self {
        Self {
            width,
            angle: AngleUnit::Reference,
            branch: Branch::Auto,
        }
    }
}

fn reference_arcsin(a: &FixedPointValue) -> Result<ArcsinOutput> {
    if a.bits > 1u128 << a.frac_bits() {
        return Err(Error::fixed("arcsin", "input exceeds 1"));
    }
    let bits = floor_dd(a.to_dd().asin(), a.frac_bits());
    Ok(ArcsinOutput {
        value: FixedPointValue::real(bits, a.width)?,
        piece: 0,
        extrapolated: false,
    })
}

/// Transition angle for counts `n_i`, `n_j`, rate constant `k_dt`
/// (`K * dt`) and retained probability `s_next`.
///
/// For an equal-bin pair pass `(n_i, n_i - 1, K dt / 2)`.
pub fn emulate_up_pipeline(
    n_i: u32,
    n_j: u32,
    k_dt: f64,
    s_next: f64,
    opts: &PipelineOptions<'_>,
) -> Result<PipelineResult> {
    let width = opts.width;
    if let AngleUnit::Piecewise { pieces, .. } = opts.angle {
        if pieces.width != width {
            return Err(Error::fixed(
                "pipeline",
                "piecewise coefficients were quantized for another width",
            ));
        }
    }
    let count_width = bit_length(n_i.max(n_j));
    let count_i = FixedPointValue::integer(n_i as u128, count_width)?;
    let count_j = FixedPointValue::integer(n_j as u128, count_width)?;
    let retained = fp_encode(s_next, width, Mode::Real)?;
    if retained.bits == 0 {
        return Err(Error::fixed(
            "pipeline",
            "retained probability must be positive",
        ));
    }
    if retained.bits > 1u128 << (width - 1) {
        return Err(Error::fixed("pipeline", "retained probability exceeds 1"));
    }
    let product = fp_mul_int(&count_i, &count_j)?;
    let rate = fp_mul_const_int_ui(&product, k_dt, width)?;
    if rate.bits > retained.bits {
        return Err(Error::fixed(
            "pipeline",
            "rate exceeds retained probability",
        ));
    }
    let retained_quarter = FixedPointValue {
        bits: retained.bits >> 2,
        ..retained
    };
    let complement = match opts.branch {
        Branch::Auto => fp_compare(&rate, &retained_quarter)?,
        Branch::Direct => false,
        Branch::Complement => true,
    };
    let branch_value = if complement {
        fp_sub(&retained, &rate)?
    } else {
        rate
    };
    let sqrt_branch = fp_sqrt(&branch_value)?;
    let sqrt_retained = fp_sqrt(&retained)?;
    let quotient = fp_div(&sqrt_branch, &sqrt_retained)?;
    let arcsin = match opts.angle {
        AngleUnit::Piecewise {
            pieces,
            allow_extrapolation,
        } => fp_arcsin_pp(&quotient, pieces, allow_extrapolation)?,
        AngleUnit::Reference => reference_arcsin(&quotient)?,
    };
    let theta = if complement {
        let half_pi = FixedPointValue::real(floor_dd(DD::FRAC_PI_2, width - 1), width)?;
        fp_sub(&half_pi, &arcsin.value)?
    } else {
        arcsin.value
    };

    let s_dd = retained.to_dd();
    let exact_rate = DD::new(k_dt).mul_f64(n_i as f64 * n_j as f64);
    let exact = theta_reference(exact_rate / s_dd);
    let downstream = theta_reference(rate.to_dd() / s_dd);
    let got = theta.to_dd();
    Ok(PipelineResult {
        theta,
        exact: exact.to_f64(),
        error: (got - exact).abs().to_f64(),
        downstream_error: (got - downstream).abs().to_f64(),
        trace: PipelineTrace {
            count_i,
            count_j,
            rate_constant: k_dt,
            retained,
            product,
            rate,
            retained_quarter,
            complement,
            branch_value,
            sqrt_branch,
            sqrt_retained,
            quotient,
            arcsin,
            theta,
        },
    })
}

// floor(x * 2^bits) for positive x.
fn floor_dd(x: DD, bits: u32) -> u128 {
    let s = x.ldexp(bits as i32);
    let hi = s.hi.floor();
    let rest = (s - DD::new(hi)).to_f64().floor();
    (hi as i128 + rest as i128) as u128
}

/// Pipeline inputs drawn for a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepInput {
    pub n_i: u32,
    pub n_j: u32,
    pub k_dt: f64,
    pub s_next: f64,
}

/// Deterministic pseudo-random inputs keeping the arcsine argument in `[0, 0.5]`:
/// counts in `1..=40`, `s` in `[0.5, 1]`, and the ratio `r / s` drawn from
/// `[0, 1/4)` (direct branch, four draws in five) or `[3/4, 1]` (complement branch).
pub fn sweep_inputs(samples: usize, seed: u64) -> Vec<SweepInput> {
    (0..samples as u64)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n_i = rng.gen_range(1..=40u32);
            let n_j = rng.gen_range(1..=40u32);
            let s_next = rng.gen_range(0.5..=1.0);
            let ratio = if rng.gen_bool(0.8) {
                rng.gen_range(0.0..0.25)
            } else {
                rng.gen_range(0.75..=1.0)
            };
            let k_dt = ratio * s_next / (n_i as f64 * n_j as f64);
            SweepInput {
                n_i,
                n_j,
                k_dt,
                s_next,
            }
        })
        .collect()
}

/// Error statistics of a pipeline sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub width: u32,
    pub samples: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub max_downstream_error: f64,
    pub mean_downstream_error: f64,
    /// Inputs skipped because rounding pushed the rate above the retained probability.
    pub skipped: usize,
}

/// Runs the pipeline over [`sweep_inputs`] and reports the errors.
pub fn sweep(pieces: &QuantizedPiecewise, samples: usize, seed: u64) -> Result<SweepReport> {
    let inputs = sweep_inputs(samples, seed);
    let results: Vec<Option<(f64, f64)>> = inputs
        .par_iter()
        .map(|x| {
            emulate_up_pipeline(
                x.n_i,
                x.n_j,
                x.k_dt,
                x.s_next,
                &PipelineOptions::piecewise(pieces),
            )
            .ok()
            .map(|r| (r.error, r.downstream_error))
        })
        .collect();
    let ok: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    if ok.is_empty() {
        return Err(Error::fixed(
            "sweep",
            "no sample produced a valid pipeline run",
        ));
    }
    let k = ok.len() as f64;
    Ok(SweepReport {
        width: pieces.width,
        samples: ok.len(),
        max_error: ok.iter().map(|e| e.0).fold(0.0, f64::max),
        mean_error: ok.iter().map(|e| e.0).sum::<f64>() / k,
        max_downstream_error: ok.iter().map(|e| e.1).fold(0.0, f64::max),
        mean_downstream_error: ok.iter().map(|e| e.1).sum::<f64>() / k,
        skipped: results.len() - ok.len(),
    })
}

/// Largest end-to-end pipeline error over a fixed-seed sweep, an empirical
/// stand-in for the arithmetic error of one division.
pub fn estimate_eps_calculation(pieces: &QuantizedPiecewise, samples: usize) -> Result<f64> {
    Ok(sweep(pieces, samples, 0x5eed)?.max_error)
}
