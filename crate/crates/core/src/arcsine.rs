//! Piecewise Chebyshev approximation of `arcsin` on `[0, 0.5]`.
//!
//! Each piece is a degree-`d` Chebyshev series fitted by least squares on a
//! uniform grid of the piece. The least-squares solve and the error
//! measurement both run in double-double against a double-double arcsine so
//! that targets down to `1e-15` are resolved; only the stored coefficients are
//! rounded to `f64`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ddouble::DD;
use crate::error::{Error, Result};
use crate::resource::{primitive_cost, Primitive};

/// Upper end of the approximation domain.
pub const DOMAIN_END: f64 = 0.5;
/// Grid points per piece used while searching.
pub const DEFAULT_GRID: usize = 4096;
/// Bisections of a single subdomain before giving up.
pub const MAX_BISECTIONS: u32 = 64;

/// Minimum piece counts for `(eps, degree)` as published with the method.
pub const PUBLISHED_PIECE_COUNTS: [(f64, u32, usize); 14] = [
    (1e-12, 4, 43),
    (1e-12, 5, 15),
    (1e-12, 6, 9),
    (1e-13, 5, 25),
    (1e-13, 6, 12),
    (1e-13, 7, 7),
    (1e-14, 5, 35),
    (1e-14, 6, 18),
    (1e-14, 7, 10),
    (1e-14, 8, 7),
    (1e-15, 6, 27),
    (1e-15, 7, 13),
    (1e-15, 8, 10),
    (1e-15, 9, 11),
];

/// Published piece count for a `(degree, pieces)` pair, returning its `eps`.
pub fn published_eps(degree: u32, pieces: usize) -> Option<f64> {
    PUBLISHED_PIECE_COUNTS
        .iter()
        .find(|&&(_, d, m)| d == degree && m == pieces)
        .map(|r| r.0)
}

/// One Chebyshev piece on `[start, end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevPiece {
    pub start: f64,
    pub end: f64,
    /// Coefficients of `T_0 .. T_d` in the variable `(2x - start - end) / (end - start)`.
    pub coeffs: Vec<f64>,
}

impl ChebyshevPiece {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn local(&self, x: DD) -> DD {
        let width = self.end - self.start;
        if width == 0.0 {
            return DD::ZERO;
        }
        (x.mul_f64(2.0) - DD::new(self.start) - DD::new(self.end)) / DD::new(width)
    }

    /// Clenshaw evaluation in double-double.
    pub fn eval(&self, x: DD) -> DD {
        let u = self.local(x);
        let two_u = u.mul_f64(2.0);
        let mut b1 = DD::ZERO;
        let mut b2 = DD::ZERO;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = two_u * b1 - b2 + DD::new(c);
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + DD::new(self.coeffs[0])
    }

    /// Coefficients of the same polynomial in powers of `x - origin`.
    pub fn monomial_about(&self, origin: DD) -> Vec<DD> {
        let d = self.degree();
        let width = self.end - self.start;
        let (scale, shift) = if width == 0.0 {
            (DD::ZERO, DD::ZERO)
        } else {
            let scale = DD::new(2.0) / DD::new(width);
            let shift =
                (origin.mul_f64(2.0) - DD::new(self.start) - DD::new(self.end)) / DD::new(width);
            (scale, shift)
        };
        // Local variable as a polynomial in v = x - origin: shift + scale * v.
        let mut t_prev = vec![DD::ONE];
        let mut t_cur = vec![shift, scale];
        let mut out = vec![DD::ZERO; d + 1];
        out[0] = DD::new(self.coeffs[0]);
        if d >= 1 {
            for (k, t) in t_cur.iter().enumerate() {
                out[k] = out[k] + t.mul_f64(self.coeffs[1]);
            }
        }
        for k in 2..=d {
            let mut next = vec![DD::ZERO; k + 1];
            for (p, &t) in t_cur.iter().enumerate() {
                next[p] = next[p] + (t * shift).mul_f64(2.0);
                next[p + 1] = next[p + 1] + (t * scale).mul_f64(2.0);
            }
            for (p, &t) in t_prev.iter().enumerate() {
                next[p] = next[p] - t;
            }
            for (p, t) in next.iter().enumerate() {
                out[p] = out[p] + t.mul_f64(self.coeffs[k]);
            }
            t_prev = std::mem::replace(&mut t_cur, next);
        }
        out
    }
}

fn grid_point(start: f64, end: f64, k: usize, grid: usize) -> DD {
    if grid <= 1 {
        return DD::new(start);
    }
    let frac = DD::new(k as f64) / DD::new((grid - 1) as f64);
    DD::new(start) + frac.mul_f64(end - start)
}

/// Least-squares Chebyshev fit of `arcsin` on `[start, end]` sampled at `grid` points.
pub fn chebyshev_fit(start: f64, end: f64, degree: usize, grid: usize) -> Result<ChebyshevPiece> {
    if !(0.0..=DOMAIN_END).contains(&start) || !(start..=DOMAIN_END).contains(&end) {
        return Err(Error::Fit(format!(
            "subdomain [{start}, {end}] outside [0, 0.5]"
        )));
    }
    let basis = UniformBasis::new(degree, grid.max(degree + 1));
    Ok(basis.fit(start, end, &basis.samples(start, end)))
}

/// Chebyshev basis on `grid` uniform nodes of `[-1, 1]` with the factored Gram
/// matrix, all in double-double.
///
/// The nodes do not depend on the subinterval, so one basis serves every fit of
/// a search. Solving the normal equations in double-double keeps the rounding
/// of the solve far below the smallest targets; an f64 solve leaves noise near
/// `1e-16` that visibly moves piece counts at `1e-15`.
struct UniformBasis {
    p: usize,
    m: usize,
    // Row-major m x p values T_k(u_row).
    values: Vec<DD>,
    // Lower Cholesky factor of the Gram matrix, row-major p x p.
    chol: Vec<DD>,
}

impl UniformBasis {
    fn new(degree: usize, grid: usize) -> UniformBasis {
        let p = degree + 1;
        let m = grid.max(p);
        let mut values = Vec::with_capacity(m * p);
        for k in 0..m {
            let u = if m == 1 {
                DD::ZERO
            } else {
                DD::new((2 * k) as f64) / DD::new((m - 1) as f64) - DD::ONE
            };
            let (mut t0, mut t1) = (DD::ONE, u);
            values.push(t0);
            if p > 1 {
                values.push(t1);
            }
            for _ in 2..p {
                let t2 = (u * t1).mul_f64(2.0) - t0;
                values.push(t2);
                t0 = t1;
                t1 = t2;
            }
        }
        let mut gram = vec![DD::ZERO; p * p];
        for row in values.chunks(p) {
            for i in 0..p {
                for j in 0..=i {
                    gram[i * p + j] = gram[i * p + j] + row[i] * row[j];
                }
            }
        }
        let mut chol = vec![DD::ZERO; p * p];
        for i in 0..p {
            for j in 0..=i {
                let mut acc = gram[i * p + j];
                for k in 0..j {
                    acc = acc - chol[i * p + k] * chol[j * p + k];
                }
                chol[i * p + j] = if i == j {
                    acc.sqrt()
                } else {
                    acc / chol[j * p + j]
                };
            }
        }
        UniformBasis { p, m, values, chol }
    }

    fn samples(&self, start: f64, end: f64) -> Vec<(DD, DD)> {
        (0..self.m)
            .map(|k| {
                let x = grid_point(start, end, k, self.m);
                (x, x.asin())
            })
            .collect()
    }

    fn fit(&self, start: f64, end: f64, samples: &[(DD, DD)]) -> ChebyshevPiece {
        let p = self.p;
        if end == start {
            let mut coeffs = vec![0.0; p];
            coeffs[0] = DD::new(start).asin().to_f64();
            return ChebyshevPiece { start, end, coeffs };
        }
        let mut rhs = vec![DD::ZERO; p];
        for (row, s) in self.values.chunks(p).zip(samples) {
            for (r, &t) in rhs.iter_mut().zip(row) {
                *r = *r + t * s.1;
            }
        }
        // Forward then backward substitution with the Cholesky factor.
        for i in 0..p {
            let mut acc = rhs[i];
            for k in 0..i {
                acc = acc - self.chol[i * p + k] * rhs[k];
            }
            rhs[i] = acc / self.chol[i * p + i];
        }
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for k in i + 1..p {
                acc = acc - self.chol[k * p + i] * rhs[k];
            }
            rhs[i] = acc / self.chol[i * p + i];
        }
        ChebyshevPiece {
            start,
            end,
            coeffs: rhs.iter().map(|c| c.to_f64()).collect(),
        }
    }

    fn fit_and_measure(&self, start: f64, end: f64) -> (ChebyshevPiece, f64) {
        let samples = self.samples(start, end);
        let piece = self.fit(start, end, &samples);
        let err = samples
            .iter()
            .map(|&(x, y)| (piece.eval(x) - y).abs().to_f64())
            .fold(0.0, f64::max);
        (piece, err)
    }
}

/// Largest `|piece(x) - arcsin(x)|` over `grid` uniform points of the piece.
pub fn linf_error(piece: &ChebyshevPiece, grid: usize) -> f64 {
    (0..grid.max(1))
        .map(|k| {
            let x = grid_point(piece.start, piece.end, k, grid);
            (piece.eval(x) - x.asin()).abs().to_f64()
        })
        .fold(0.0, f64::max)
}

/// Tiling of `[0, 0.5]` by Chebyshev pieces meeting a common error target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub degree: usize,
    pub eps: f64,
    pub pieces: Vec<ChebyshevPiece>,
    /// Largest search-grid error over all pieces.
    pub max_error: f64,
}

impl PiecewisePolynomial {
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// Index of the piece containing `x`; inputs past the end use the last piece.
    pub fn locate(&self, x: f64) -> usize {
        self.pieces
            .partition_point(|p| p.end <= x)
            .min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: DD) -> DD {
        self.pieces[self.locate(x.to_f64())].eval(x)
    }

    /// Maximum error of every piece on a grid `factor` times denser than `grid`.
    pub fn verify(&self, grid: usize, factor: usize) -> f64 {
        self.pieces
            .par_iter()
            .map(|p| linf_error(p, grid * factor))
            .reduce(|| 0.0, f64::max)
    }

    /// True when pieces start at 0, end at 0.5 and share every interior edge.
    pub fn is_contiguous(&self) -> bool {
        self.pieces.first().is_some_and(|p| p.start == 0.0)
            && self.pieces.last().is_some_and(|p| p.end == DOMAIN_END)
            && self.pieces.windows(2).all(|w| w[0].end == w[1].start)
    }
}

/// Greedy left-to-right tiling: from the current left edge, halve the right
/// endpoint towards it until the fit error drops below `eps`, then continue
/// from that right endpoint.
pub fn min_pieces(degree: usize, eps: f64, grid: usize) -> Result<PiecewisePolynomial> {
    if degree == 0 {
        return Err(Error::Fit("degree must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Fit(format!(
            "target error must be positive, got {eps}"
        )));
    }
    let basis = UniformBasis::new(degree, grid.max(degree + 2));
    let mut pieces = Vec::new();
    let mut max_error: f64 = 0.0;
    let mut start = 0.0;
    while start < DOMAIN_END {
        let mut end = DOMAIN_END;
        let mut accepted = None;
        for _ in 0..MAX_BISECTIONS {
            let (piece, err) = basis.fit_and_measure(start, end);
            if err < eps {
                accepted = Some((piece, err));
                break;
            }
            end = 0.5 * (start + end);
        }
        let (piece, err) = accepted.ok_or_else(|| {
            Error::Fit(format!(
                "degree {degree} cannot reach {eps:e} from x = {start} within {MAX_BISECTIONS} bisections; raise the degree"
            ))
        })?;
        max_error = max_error.max(err);
        start = piece.end;
        pieces.push(piece);
    }
    Ok(PiecewisePolynomial {
        degree,
        eps,
        pieces,
        max_error,
    })
}

/// T-count of the piecewise arcsine at register width `width`.
pub fn arcsine_t_count(width: u32, degree: u32, pieces: u32) -> u128 {
    primitive_cost(&Primitive::Arcsin {
        n: width,
        degree,
        pieces,
    })
    .cost
    .t_count
}

/// Picks the `(degree, pieces)` candidate with the smallest arcsine T-count;
/// ties go to the smaller degree.
pub fn choose_config(candidates: &[(u32, u32)], width: u32) -> Option<(u32, u32)> {
    candidates
        .iter()
        .copied()
        .min_by_key(|&(d, m)| (arcsine_t_count(width, d, m), d))
}

/// Published `(degree, pieces)` candidates for a target error.
pub fn published_candidates(eps: f64) -> Vec<(u32, u32)> {
    PUBLISHED_PIECE_COUNTS
        .iter()
        .filter(|r| (r.0 / eps - 1.0).abs() < 1e-9)
        .map(|r| (r.1, r.2 as u32))
        .collect()
}

/// Fixed-point form of a piecewise polynomial, ready for bit-level evaluation.
///
/// Every piece is re-expanded in powers of `x - start` where `start` is the
/// truncated left edge, and all values are integers scaled by `2^frac_bits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedPiecewise {
    pub width: u32,
    pub frac_bits: u32,
    pub degree: usize,
    /// Left edges as unsigned words.
    pub starts: Vec<u128>,
    /// Signed monomial coefficients per piece, constant term first.
    pub coeffs: Vec<Vec<i128>>,
}

impl PiecewisePolynomial {
    /// Quantizes to an `width`-bit register with `width - 1` fractional bits.
    pub fn quantize(&self, width: u32) -> Result<QuantizedPiecewise> {
        if !(2..=crate::fixedpoint::MAX_WIDTH).contains(&width) {
            return Err(Error::fixed(
                "quantize",
                format!("width {width} outside 2..={}", crate::fixedpoint::MAX_WIDTH),
            ));
        }
        let frac_bits = width - 1;
        let scale = (frac_bits) as i32;
        let mut starts = Vec::with_capacity(self.pieces.len());
        let mut coeffs = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let start_bits = (p.start * 2f64.powi(scale)).floor() as u128;
            let origin = DD::from_scaled(start_bits as i128, frac_bits);
            let mono = p.monomial_about(origin);
            coeffs.push(mono.iter().map(|c| floor_scaled(*c, frac_bits)).collect());
            starts.push(start_bits);
        }
        Ok(QuantizedPiecewise {
            width,
            frac_bits,
            degree: self.degree,
            starts,
            coeffs,
        })
    }
}

// floor(x * 2^bits) for a double-double x.
fn floor_scaled(x: DD, bits: u32) -> i128 {
    let s = x.ldexp(bits as i32);
    let hi = s.hi.floor();
    let rest = (s - DD::new(hi)).to_f64().floor();
    hi as i128 + rest as i128
}

/// One computed table row next to the published count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub eps: f64,
    pub degree: u32,
    pub pieces: usize,
    pub published: usize,
    pub max_error: f64,
    pub verified_error: f64,
}

/// Recomputes every published `(eps, degree)` row in parallel.
pub fn reproduce_table(grid: usize) -> Result<Vec<TableRow>> {
    PUBLISHED_PIECE_COUNTS
        .par_iter()
        .map(|&(eps, degree, published)| {
            let pp = min_pieces(degree as usize, eps, grid)?;
            Ok(TableRow {
                eps,
                degree,
                pieces: pp.piece_count(),
                published,
                max_error: pp.max_error,
                verified_error: pp.verify(grid, 10),
            })
        })
        .collect()
}
