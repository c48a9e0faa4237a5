//! Double-double arithmetic (about 32 significant digits), used as the
//! reference for arcsine fits and the fixed-point pipeline.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };
    pub const PI: DD = DD {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const FRAC_PI_2: DD = DD {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766e-17,
    };

    pub const fn new(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> DD {
        let (hi, lo) = quick_two_sum(hi, lo);
        DD { hi, lo }
    }

    /// Exact value of a signed 128-bit integer (rounded only beyond 106 bits).
    pub fn from_i128(v: i128) -> DD {
        let hi = v as f64;
        // |v - hi| < 2^75, so the residual fits back into i128.
        let rest = v - hi as i128;
        DD::renorm(hi, rest as f64)
    }

    /// `v * 2^-shift`, exact whenever `v` fits in 106 bits.
    pub fn from_scaled(v: i128, shift: u32) -> DD {
        DD::from_i128(v).ldexp(-(shift as i32))
    }

    /// Multiplication by `2^e`; exact barring under/overflow.
    pub fn ldexp(self, e: i32) -> DD {
        let s = 2f64.powi(e);
        DD {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        DD::renorm(p, e + self.lo * b)
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let s = DD::new(self.hi.sqrt());
        s + (self - s * s) / s.mul_f64(2.0)
    }

    /// Sine and cosine by Taylor series; intended for `|x| <= 2`.
    pub fn sin_cos(self) -> (DD, DD) {
        let x2 = self * self;
        let mut sin = self;
        let mut cos = DD::ONE;
        let mut term_s = self;
        let mut term_c = DD::ONE;
        let mut k = 1.0;
        loop {
            term_s = -(term_s * x2) / DD::new((k + 1.0) * (k + 2.0));
            term_c = -(term_c * x2) / DD::new(k * (k + 1.0));
            sin = sin + term_s;
            cos = cos + term_c;
            if term_s.hi.abs() < 1e-34 && term_c.hi.abs() < 1e-34 {
                break;
            }
            k += 2.0;
        }
        (sin, cos)
    }

    /// Arcsine on `[0, 1]`.
    ///
    /// Below 0.7 one Newton step refines the libm value; above it the
    /// half-angle identity `asin x = pi/2 - 2 asin sqrt((1 - x)/2)` keeps the
    /// Newton step away from the vertical tangent at 1.
    pub fn asin(self) -> DD {
        if self.hi > 0.7 {
            let half = ((DD::ONE - self).mul_f64(0.5)).sqrt();
            return DD::FRAC_PI_2 - half.asin().mul_f64(2.0);
        }
        let y = DD::new(self.to_f64().asin());
        let (s, c) = y.sin_cos();
        y - (s - self) / c
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> DD {
        DD::new(x)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        DD::renorm(s, e + f)
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        DD::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        DD::renorm(q1, q2) + DD::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asin_known_values() {
        // pi/6 to 32 digits.
        let half = DD::new(0.5).asin();
        let err = half - DD::PI / DD::new(6.0);
        assert!(err.to_f64().abs() < 1e-30, "{err:?}");
        let one = DD::ONE.asin() - DD::FRAC_PI_2;
        assert!(one.to_f64().abs() < 1e-30);
        assert_eq!(DD::ZERO.asin().to_f64(), 0.0);
    }

    #[test]
    fn asin_inverts_sin() {
        for k in 1..200 {
            let x = DD::new(k as f64 / 200.0);
            let (s, _) = x.asin().sin_cos();
            assert!((s - x).to_f64().abs() < 1e-30, "{k}");
        }
    }

    #[test]
    fn sqrt_and_scaling() {
        let two = DD::new(2.0).sqrt();
        assert!((two * two - DD::new(2.0)).to_f64().abs() < 1e-31);
        let v = (1i128 << 100) + 3;
        let d = DD::from_scaled(v, 100);
        assert_eq!(d.hi, 1.0);
        assert_eq!(d.lo, 3.0 * 2f64.powi(-100));
    }
}
