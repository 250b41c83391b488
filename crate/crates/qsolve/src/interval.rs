//! Closed intervals over the extended reals with outward-rounded arithmetic.
//!
//! Every operation guarantees containment: if `x ∈ I` and `y ∈ J` then
//! `x op y ∈ I op J`. Endpoint arithmetic uses round-to-nearest plus an exact
//! residual check (TwoSum / FMA), so results of `+ - * / sqrt` are the tightest
//! representable enclosures; transcendental functions are widened by a few ulps
//! to absorb libm error.

use std::fmt;

/// The empty interval is represented as `[+inf, -inf]`, which makes hulls and
/// intersections come out right without special cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

pub const EMPTY: Interval = Interval {
    lo: f64::INFINITY,
    hi: f64::NEG_INFINITY,
};

pub const FULL: Interval = Interval {
    lo: f64::NEG_INFINITY,
    hi: f64::INFINITY,
};

impl Interval {
    /// Builds `[lo, hi]`, collapsing invalid bounds to the empty interval.
    /// Signed zeros are normalized so endpoint comparisons are bitwise-stable.
    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(!lo.is_nan() && !hi.is_nan(), "NaN interval endpoint");
        if !(lo <= hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return EMPTY;
        }
        Interval {
            lo: lo + 0.0,
            hi: hi + 0.0,
        }
    }

    pub fn point(v: f64) -> Interval {
        Interval::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_finite(&self) -> bool {
        !self.is_empty() && self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Smallest interval containing both operands (the interval hull).
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Upper bound on `hi - lo`; empty intervals have width 0.
    pub fn width(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        if self.lo.is_infinite() || self.hi.is_infinite() {
            return f64::INFINITY;
        }
        add_hi(self.hi, -self.lo)
    }

    pub fn midpoint(&self) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        match (self.lo.is_infinite(), self.hi.is_infinite()) {
            (true, true) => 0.0,
            (true, false) => {
                if self.hi > 0.0 {
                    -2.0 * self.hi - 1.0
                } else {
                    2.0 * self.hi - 1.0
                }
            }
            (false, true) => {
                if self.lo < 0.0 {
                    -2.0 * self.lo + 1.0
                } else {
                    2.0 * self.lo + 1.0
                }
            }
            (false, false) => {
                let m = 0.5 * self.lo + 0.5 * self.hi;
                if m.is_finite() && self.contains(m) {
                    m
                } else {
                    self.lo + 0.5 * (self.hi - self.lo)
                }
            }
        }
    }

    /// True when the interval is too narrow to split: width at most 16 ulps
    /// of the midpoint magnitude.
    pub fn is_atomic(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        if self.lo.is_infinite() || self.hi.is_infinite() {
            return false;
        }
        let m = self.midpoint();
        !(self.lo < m && m < self.hi) || self.width() <= 16.0 * ulp_of(m.abs())
    }

    /// Splits at the midpoint into two halves sharing one endpoint.
    pub fn split(&self) -> Result<(Interval, Interval), AtomicInterval> {
        if self.is_atomic() {
            return Err(AtomicInterval(*self));
        }
        let m = self.midpoint();
        debug_assert!(self.lo < m && m < self.hi);
        Ok((Interval::new(self.lo, m), Interval::new(m, self.hi)))
    }

    pub fn neg(&self) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        Interval::new(-self.hi, -self.lo)
    }

    pub fn add(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return EMPTY;
        }
        Interval::new(add_lo(self.lo, other.lo), add_hi(self.hi, other.hi))
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return EMPTY;
        }
        let (a, b) = (self, other);
        let los = [
            mul_lo(a.lo, b.lo),
            mul_lo(a.lo, b.hi),
            mul_lo(a.hi, b.lo),
            mul_lo(a.hi, b.hi),
        ];
        let his = [
            mul_hi(a.lo, b.lo),
            mul_hi(a.lo, b.hi),
            mul_hi(a.hi, b.lo),
            mul_hi(a.hi, b.hi),
        ];
        let lo = los.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = his.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    /// Quotient enclosure. A divisor containing zero gives the whole real
    /// line (the point divisor `[0,0]` gives the empty set: no quotient is
    /// defined anywhere on it).
    pub fn div(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return EMPTY;
        }
        if other.contains(0.0) {
            if other.is_point() {
                return EMPTY;
            }
            return FULL;
        }
        let (a, b) = (self, other);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &[a.lo, a.hi] {
            for &y in &[b.lo, b.hi] {
                if x.is_infinite() && y.is_infinite() {
                    continue; // extreme quotients come from finite denominators
                }
                lo = lo.min(div_lo(x, y));
                hi = hi.max(div_hi(x, y));
            }
        }
        Interval::new(lo, hi)
    }

    /// Multiplicative inverse, with the same zero-divisor convention as `div`.
    pub fn recip(&self) -> Interval {
        Interval::point(1.0).div(self)
    }

    pub fn abs(&self) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    /// Integer power with dedicated even/odd rules, so `x^2` on `[-1,1]`
    /// is `[0,1]` rather than `[-1,1]`.
    pub fn powi(&self, n: i32) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        if n == 0 {
            return Interval::point(1.0);
        }
        if n < 0 {
            let m = n.unsigned_abs();
            return self.powi_unsigned(m).recip();
        }
        self.powi_unsigned(n as u32)
    }

    fn powi_unsigned(&self, n: u32) -> Interval {
        if n % 2 == 1 {
            // odd powers are monotone
            Interval::new(spow_lo(self.lo, n), spow_hi(self.hi, n))
        } else if self.lo >= 0.0 {
            Interval::new(upow_lo(self.lo, n), upow_hi(self.hi, n))
        } else if self.hi <= 0.0 {
            Interval::new(upow_lo(-self.hi, n), upow_hi(-self.lo, n))
        } else {
            Interval::new(0.0, upow_hi(self.lo.abs().max(self.hi), n))
        }
    }

    /// Square root over the natural domain: evaluates on `self ∩ [0, ∞)`.
    pub fn sqrt(&self) -> Interval {
        let dom = self.intersect(&Interval::new(0.0, f64::INFINITY));
        if dom.is_empty() {
            return EMPTY;
        }
        Interval::new(sqrt_lo(dom.lo), sqrt_hi(dom.hi))
    }

    pub fn exp(&self) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        let lo = step_down(self.lo.exp(), LIBM_SLOP).max(0.0);
        let hi = step_up(self.hi.exp(), LIBM_SLOP);
        Interval::new(lo, hi)
    }

    /// Natural logarithm over the natural domain `(0, ∞)`.
    pub fn ln(&self) -> Interval {
        let dom = self.intersect(&Interval::new(0.0, f64::INFINITY));
        if dom.is_empty() || dom.hi == 0.0 {
            return EMPTY;
        }
        let lo = if dom.lo == 0.0 {
            f64::NEG_INFINITY
        } else {
            step_down(dom.lo.ln(), LIBM_SLOP)
        };
        let hi = step_up(dom.hi.ln(), LIBM_SLOP);
        Interval::new(lo, hi)
    }

    pub fn sin(&self) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        if !self.is_finite() || self.width() >= 7.0 {
            return Interval::new(-1.0, 1.0);
        }
        let s0 = self.lo.sin();
        let s1 = self.hi.sin();
        let mut lo = step_down(s0.min(s1), LIBM_SLOP).max(-1.0);
        let mut hi = step_up(s0.max(s1), LIBM_SLOP).min(1.0);
        if contains_multiple(self.lo, self.hi, half_pi()) {
            hi = 1.0;
        }
        if contains_multiple(self.lo, self.hi, half_pi().neg()) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    pub fn cos(&self) -> Interval {
        if self.is_empty() {
            return EMPTY;
        }
        if !self.is_finite() || self.width() >= 7.0 {
            return Interval::new(-1.0, 1.0);
        }
        let c0 = self.lo.cos();
        let c1 = self.hi.cos();
        let mut lo = step_down(c0.min(c1), LIBM_SLOP).max(-1.0);
        let mut hi = step_up(c0.max(c1), LIBM_SLOP).min(1.0);
        if contains_multiple(self.lo, self.hi, Interval::point(0.0)) {
            hi = 1.0;
        }
        if contains_multiple(self.lo, self.hi, pi()) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "empty")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicInterval(pub Interval);

impl fmt::Display for AtomicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "interval {} is too narrow to split", self.0)
    }
}

impl std::error::Error for AtomicInterval {}

/// Widening applied to endpoint values of libm functions (sin, cos, exp, ln),
/// which are not correctly rounded. Four ulps comfortably covers the ~1 ulp
/// error of common libms.
const LIBM_SLOP: u32 = 4;

/// Distance to the next representable number away from `x` (toward +inf).
pub fn ulp_of(x: f64) -> f64 {
    let ax = x.abs();
    if ax.is_infinite() {
        return f64::INFINITY;
    }
    ax.next_up() - ax
}

pub fn step_down(x: f64, n: u32) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = y.next_down();
    }
    y
}

pub fn step_up(x: f64, n: u32) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = y.next_up();
    }
    y
}

/// Largest representable value `<= a + b` (exact when the sum is exact).
pub(crate) fn add_lo(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_infinite() {
        // overflow of finite operands rounds past MAX; a truly infinite
        // operand makes the sum genuinely infinite
        if s > 0.0 && a.is_finite() && b.is_finite() {
            return f64::MAX;
        }
        return s;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err.is_nan() || err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// Smallest representable value `>= a + b`.
pub(crate) fn add_hi(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_infinite() {
        if s < 0.0 && a.is_finite() && b.is_finite() {
            return f64::MIN;
        }
        return s;
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err.is_nan() || err > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Lower bound of `a * b`, mapping the indeterminate `0 * inf` to 0 (an
/// interval endpoint at infinity stands for arbitrarily large reals, never
/// for an actual infinite factor).
pub(crate) fn mul_lo(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p.is_nan() {
        return 0.0;
    }
    if p.is_infinite() {
        if p > 0.0 && a.is_finite() && b.is_finite() {
            return f64::MAX;
        }
        return p;
    }
    let err = a.mul_add(b, -p);
    if err.is_nan() || err < 0.0 {
        p.next_down()
    } else {
        p
    }
}

pub(crate) fn mul_hi(a: f64, b: f64) -> f64 {
    let p = a * b;
    if p.is_nan() {
        return 0.0;
    }
    if p.is_infinite() {
        if p < 0.0 && a.is_finite() && b.is_finite() {
            return f64::MIN;
        }
        return p;
    }
    let err = a.mul_add(b, -p);
    if err.is_nan() || err > 0.0 {
        p.next_up()
    } else {
        p
    }
}

/// Lower bound of `a / b` for `b != 0` (and not inf/inf).
pub(crate) fn div_lo(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q.is_infinite() {
        if q > 0.0 && a.is_finite() {
            return f64::MAX;
        }
        return q;
    }
    // err = q*b - a, exact; tells us which side of the true quotient q is on
    let err = q.mul_add(b, -a);
    let too_big = if b > 0.0 { err > 0.0 } else { err < 0.0 };
    if err.is_nan() || too_big {
        q.next_down()
    } else {
        q
    }
}

pub(crate) fn div_hi(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q.is_infinite() {
        if q < 0.0 && a.is_finite() {
            return f64::MIN;
        }
        return q;
    }
    let err = q.mul_add(b, -a);
    let too_small = if b > 0.0 { err < 0.0 } else { err > 0.0 };
    if err.is_nan() || too_small {
        q.next_up()
    } else {
        q
    }
}

pub(crate) fn sqrt_lo(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let r = x.sqrt();
    if r.is_infinite() {
        return r;
    }
    let err = r.mul_add(r, -x);
    if err > 0.0 {
        r.next_down()
    } else {
        r
    }
}

pub(crate) fn sqrt_hi(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let r = x.sqrt();
    if r.is_infinite() {
        return r;
    }
    let err = r.mul_add(r, -x);
    if err < 0.0 {
        r.next_up()
    } else {
        r
    }
}

/// Lower bound of `x^n` for `x >= 0`, by square-and-multiply with downward
/// rounding at every step (products of nonnegative lower bounds compose).
fn upow_lo(x: f64, n: u32) -> f64 {
    debug_assert!(x >= 0.0 && n > 0);
    let mut acc = 1.0;
    let mut base = x;
    let mut n = n;
    loop {
        if n & 1 == 1 {
            acc = mul_lo(acc, base);
        }
        n >>= 1;
        if n == 0 {
            return acc;
        }
        base = mul_lo(base, base);
    }
}

fn upow_hi(x: f64, n: u32) -> f64 {
    debug_assert!(x >= 0.0 && n > 0);
    let mut acc = 1.0;
    let mut base = x;
    let mut n = n;
    loop {
        if n & 1 == 1 {
            acc = mul_hi(acc, base);
        }
        n >>= 1;
        if n == 0 {
            return acc;
        }
        base = mul_hi(base, base);
    }
}

/// Signed odd-power lower bound: negative bases round via the magnitude.
fn spow_lo(x: f64, n: u32) -> f64 {
    if x >= 0.0 {
        upow_lo(x, n)
    } else {
        -upow_hi(-x, n)
    }
}

fn spow_hi(x: f64, n: u32) -> f64 {
    if x >= 0.0 {
        upow_hi(x, n)
    } else {
        -upow_lo(-x, n)
    }
}

/// Enclosure of pi (the f64 constant rounds down from the real value).
pub fn pi() -> Interval {
    Interval {
        lo: std::f64::consts::PI,
        hi: std::f64::consts::PI.next_up(),
    }
}

fn half_pi() -> Interval {
    Interval {
        lo: std::f64::consts::FRAC_PI_2,
        hi: std::f64::consts::FRAC_PI_2.next_up(),
    }
}

fn two_pi() -> Interval {
    Interval {
        lo: 2.0 * std::f64::consts::PI,
        hi: (2.0 * std::f64::consts::PI).next_up(),
    }
}

/// Conservative test for `∃ k ∈ ℤ: off + 2πk ∈ [lo, hi]`. Each candidate
/// critical point is enclosed in an interval, so the test can only err toward
/// `true`, and shrinking `[lo, hi]` never turns a `false` into a `true`.
fn contains_multiple(lo: f64, hi: f64, off: Interval) -> bool {
    let tp = two_pi();
    let k0 = ((lo - off.hi) / tp.hi).floor() - 1.0;
    let k1 = ((hi - off.lo) / tp.lo).ceil() + 1.0;
    if !k0.is_finite() || !k1.is_finite() || k1 - k0 > 16.0 {
        return true;
    }
    let mut k = k0;
    while k <= k1 {
        let c = Interval::point(k).mul(&tp).add(&off);
        if c.lo <= hi && lo <= c.hi {
            return true;
        }
        k += 1.0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn exact_endpoint_arithmetic() {
        assert_eq!(iv(1.0, 2.0).add(&iv(10.0, 20.0)), iv(11.0, 22.0));
        assert_eq!(iv(-1.0, 2.0).mul(&iv(3.0, 4.0)), iv(-4.0, 8.0));
        assert_eq!(iv(1.0, 4.0).sqrt(), iv(1.0, 2.0));
        assert_eq!(iv(0.0, 4.0).split().unwrap(), (iv(0.0, 2.0), iv(2.0, 4.0)));
    }

    #[test]
    fn containment_under_inexact_arithmetic() {
        // 0.1 + 0.2 is inexact; the enclosure must contain the true sum
        let s = iv(0.1, 0.1).add(&iv(0.2, 0.2));
        assert!(s.lo < s.hi);
        assert!(s.lo <= 0.1 + 0.2 && 0.1 + 0.2 <= s.hi);
        assert!(s.width() <= 2.0 * ulp_of(0.3));
    }

    #[test]
    fn even_powers_fold_sign() {
        assert_eq!(iv(-1.0, 1.0).powi(2), iv(0.0, 1.0));
        assert_eq!(iv(-3.0, -2.0).powi(2), iv(4.0, 9.0));
        assert_eq!(iv(-2.0, 1.0).powi(3), iv(-8.0, 1.0));
    }

    #[test]
    fn division_by_zero_spanning_interval() {
        assert_eq!(iv(1.0, 2.0).div(&iv(-1.0, 1.0)), FULL);
        assert_eq!(iv(1.0, 2.0).div(&iv(0.0, 0.0)), EMPTY);
        assert_eq!(iv(4.0, 8.0).div(&iv(2.0, 4.0)), iv(1.0, 4.0));
    }

    #[test]
    fn sqrt_clips_to_domain() {
        assert_eq!(iv(-1.0, 4.0).sqrt(), iv(0.0, 2.0));
        assert_eq!(iv(-3.0, -1.0).sqrt(), EMPTY);
    }

    #[test]
    fn sine_over_half_period() {
        let s = iv(0.0, std::f64::consts::PI).sin();
        assert_eq!(s.hi(), 1.0, "pi/2 lies inside, so the max is exact");
        assert!(s.lo() <= 0.0 && s.lo() >= -1e-12);
        let c = iv(-0.1, 0.1).cos();
        assert_eq!(c.hi(), 1.0);
        assert!(c.lo() <= 0.1f64.cos() && c.lo() >= 0.1f64.cos() - 1e-12);
        // a full period covers everything
        assert_eq!(iv(0.0, 7.0).sin(), iv(-1.0, 1.0));
    }

    #[test]
    fn hull_and_intersection() {
        assert_eq!(iv(0.0, 1.0).hull(&iv(2.0, 3.0)), iv(0.0, 3.0));
        assert_eq!(EMPTY.hull(&iv(1.0, 2.0)), iv(1.0, 2.0));
        assert_eq!(iv(0.0, 1.0).intersect(&iv(2.0, 3.0)), EMPTY);
        assert!(EMPTY.subset_of(&iv(0.0, 0.0)));
        assert!(!iv(0.0, 1.0).subset_of(&EMPTY));
    }

    #[test]
    fn split_rejects_atomic_intervals() {
        let one_ulp = Interval::new(1.0, 1.0f64.next_up());
        assert!(one_ulp.split().is_err());
        assert!(Interval::point(3.0).split().is_err());
        let (a, b) = iv(-1.0, 1.0).split().unwrap();
        assert_eq!(a, iv(-1.0, 0.0));
        assert_eq!(b, iv(0.0, 1.0));
    }

    #[test]
    fn negative_zero_is_normalized() {
        let i = Interval::new(-0.0, 1.0);
        assert!(i.lo().is_sign_positive());
    }

    #[test]
    fn infinite_endpoints() {
        let r = iv(0.0, f64::INFINITY).add(&iv(1.0, 1.0));
        assert_eq!(r, iv(1.0, f64::INFINITY));
        let m = iv(0.0, 0.0).mul(&FULL);
        assert_eq!(m, iv(0.0, 0.0));
        let m2 = iv(0.0, 1.0).mul(&iv(2.0, f64::INFINITY));
        assert_eq!(m2, iv(0.0, f64::INFINITY));
    }

    #[test]
    fn exp_ln_enclose() {
        let e = iv(0.0, 1.0).exp();
        assert!(e.lo() <= 1.0 && 1.0 <= e.hi());
        assert!(e.contains(std::f64::consts::E) || e.hi() >= std::f64::consts::E);
        let l = iv(0.0, 1.0).ln();
        assert_eq!(l.lo(), f64::NEG_INFINITY);
        assert!(l.hi() >= 0.0 && l.hi() <= 1e-12);
        assert_eq!(iv(-2.0, 0.0).ln(), EMPTY);
    }
}
