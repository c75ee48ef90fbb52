//! Scalar backends.
//!
//! Every numerical routine in the crate is generic over [`Real`], which is
//! implemented for `f64` (binary64) and for [`Ext`], a 128-bit-significand
//! software float. The perturbations studied here are of size `1/N^3` to
//! `1/N^4` sitting on top of O(1) traces, so binary64 loses roughly
//! `log10(N^3)` digits and the extended backend exists to recover them.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Serialize};

/// Working precision of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// IEEE binary64.
    #[default]
    #[serde(alias = "std")]
    Standard,
    /// Software float with a 128-bit significand.
    #[serde(alias = "ext")]
    Extended,
}

impl Precision {
    pub fn unit_roundoff(self) -> f64 {
        match self {
            Precision::Standard => f64::EPSILON / 2.0,
            Precision::Extended => EXT_UNIT_ROUNDOFF,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Precision::Standard => "std",
            Precision::Extended => "ext",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "std" | "standard" => Ok(Precision::Standard),
            "ext" | "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected std or ext)")),
        }
    }
}

/// Real scalar usable as the component type of `num_complex::Complex`.
pub trait Real:
    Num + Neg<Output = Self> + Clone + PartialOrd + fmt::Debug + Send + Sync + 'static
{
    const PRECISION: Precision;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact for integers up to 2^53 in binary64 and 2^128 in extended.
    fn from_u64(n: u64) -> Self;
    fn from_ext(x: &Ext) -> Self;
    fn to_ext(&self) -> Ext;

    fn pi() -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn cbrt(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;

    fn unit_roundoff() -> f64 {
        Self::PRECISION.unit_roundoff()
    }

    fn from_i64(n: i64) -> Self {
        let m = Self::from_u64(n.unsigned_abs());
        if n < 0 {
            -m
        } else {
            m
        }
    }

    fn hypot(&self, other: &Self) -> Self {
        (self.clone() * self.clone() + other.clone() * other.clone()).sqrt()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `(p, e)` with `p = fl(a*b)` and, where the backend supports it, `p + e = a*b` exactly.
    fn two_prod(&self, b: &Self) -> (Self, Self) {
        (self.clone() * b.clone(), Self::zero())
    }
}

/// `(s, e)` with `s = fl(a + b)` and `s + e = a + b` exactly.
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a.clone() + b.clone();
    let bb = s.clone() - a.clone();
    let e = (a - (s.clone() - bb.clone())) + (b - bb);
    (s, e)
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Standard;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_ext(x: &Ext) -> Self {
        x.to_f64()
    }
    fn to_ext(&self) -> Ext {
        Ext::from_f64(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn cbrt(&self) -> Self {
        f64::cbrt(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
    fn two_prod(&self, b: &Self) -> (Self, Self) {
        let p = self * b;
        (p, self.mul_add(*b, -p))
    }
}

/// Significand width of [`Ext`] in bits.
pub const EXT_BITS: usize = 128;
/// 2^-128.
pub const EXT_UNIT_ROUNDOFF: f64 = 2.938_735_877_055_718_8e-39;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Extended-precision real with a 128-bit significand, round-to-nearest-even.
#[derive(Clone)]
pub struct Ext(BigFloat);

impl Ext {
    fn wrap(x: BigFloat) -> Self {
        Ext(x)
    }

    pub fn from_f64(x: f64) -> Self {
        Ext(BigFloat::from_f64(x, EXT_BITS))
    }

    /// Nearest binary64 value (ties resolved on the top 128 bits).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let Some((words, _, sign, exponent, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        if self.0.is_zero() {
            return 0.0;
        }
        // value = 0.m * 2^e with the significand top-aligned, least significant word first.
        let len = words.len();
        let hi = words[len - 1] as u128;
        let lo = if len >= 2 { words[len - 2] as u128 } else { 0 };
        let top = (hi << 64) | lo;
        let mag = top as f64;
        let scaled = scale_by_pow2(mag, exponent as i64 - 128);
        match sign {
            Sign::Neg => -scaled,
            Sign::Pos => scaled,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let v = with_consts(|cc| BigFloat::parse(s, astro_float::Radix::Dec, EXT_BITS, RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Ext(v))
        }
    }
}

fn scale_by_pow2(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl fmt::Debug for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ext({})", self.0)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PartialEq for Ext {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! ext_binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl $trait for Ext {
            type Output = Ext;
            fn $method(self, rhs: Ext) -> Ext {
                Ext::wrap(self.0.$op(&rhs.0, EXT_BITS, RM))
            }
        }
        impl<'a> $trait<&'a Ext> for &'a Ext {
            type Output = Ext;
            fn $method(self, rhs: &'a Ext) -> Ext {
                Ext::wrap(self.0.$op(&rhs.0, EXT_BITS, RM))
            }
        }
    };
}

ext_binop!(Add, add, add);
ext_binop!(Sub, sub, sub);
ext_binop!(Mul, mul, mul);
ext_binop!(Div, div, div);

impl Rem for Ext {
    type Output = Ext;
    fn rem(self, rhs: Ext) -> Ext {
        Ext::wrap(self.0.rem(&rhs.0))
    }
}

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext::wrap(self.0.neg())
    }
}

impl Zero for Ext {
    fn zero() -> Self {
        Ext(BigFloat::from_word(0, EXT_BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Ext {
    fn one() -> Self {
        Ext(BigFloat::from_word(1, EXT_BITS))
    }
}

impl Num for Ext {
    type FromStrRadixErr = String;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(format!("radix {radix} not supported"));
        }
        Ext::parse(s).ok_or_else(|| format!("cannot parse `{s}`"))
    }
}

impl Real for Ext {
    const PRECISION: Precision = Precision::Extended;

    fn from_f64(x: f64) -> Self {
        Ext::from_f64(x)
    }
    fn to_f64(&self) -> f64 {
        Ext::to_f64(self)
    }
    fn from_u64(n: u64) -> Self {
        Ext(BigFloat::from_word(n, EXT_BITS))
    }
    fn from_ext(x: &Ext) -> Self {
        x.clone()
    }
    fn to_ext(&self) -> Ext {
        self.clone()
    }
    fn pi() -> Self {
        Ext(with_consts(|cc| cc.pi(EXT_BITS, RM)))
    }
    fn sin(&self) -> Self {
        Ext(with_consts(|cc| self.0.sin(EXT_BITS, RM, cc)))
    }
    fn cos(&self) -> Self {
        Ext(with_consts(|cc| self.0.cos(EXT_BITS, RM, cc)))
    }
    fn sqrt(&self) -> Self {
        Ext(self.0.sqrt(EXT_BITS, RM))
    }
    fn cbrt(&self) -> Self {
        Ext(self.0.cbrt(EXT_BITS, RM))
    }
    fn atan2(&self, x: &Self) -> Self {
        let y = self;
        if x.0.is_zero() {
            if y.0.is_zero() {
                return Ext::zero();
            }
            let half_pi = Ext::pi() / Ext::from_u64(2);
            return if y.0.is_negative() { -half_pi } else { half_pi };
        }
        let base = Ext(with_consts(|cc| (y / x).0.atan(EXT_BITS, RM, cc)));
        if x.0.is_positive() {
            base
        } else if y.0.is_negative() {
            base - Ext::pi()
        } else {
            base + Ext::pi()
        }
    }
    fn abs(&self) -> Self {
        Ext(self.0.abs())
    }
    fn is_finite(&self) -> bool {
        !(self.0.is_nan() || self.0.is_inf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_roundtrips_binary64() {
        for &x in &[0.0, 1.0, -1.0, 0.1, std::f64::consts::PI, 1e-300, -3.5e17, 2.0f64.powi(-60)] {
            assert_eq!(Ext::from_f64(x).to_f64(), x, "{x}");
        }
    }

    #[test]
    fn ext_rounds_to_nearest_binary64() {
        let third = Ext::one() / Ext::from_u64(3);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
        let tenth = Ext::parse("0.1").unwrap();
        assert_eq!(tenth.to_f64(), 0.1);
    }

    #[test]
    fn ext_elementary_functions_match_binary64() {
        let x = Ext::from_f64(0.7);
        assert!((x.sin().to_f64() - 0.7f64.sin()).abs() < 1e-16);
        assert!((x.cos().to_f64() - 0.7f64.cos()).abs() < 1e-16);
        assert!((x.sqrt().to_f64() - 0.7f64.sqrt()).abs() < 1e-16);
        assert!((x.cbrt().to_f64() - 0.7f64.cbrt()).abs() < 1e-16);
        assert_eq!(Ext::pi().to_f64(), std::f64::consts::PI);
    }

    #[test]
    fn ext_atan2_quadrants() {
        for &(y, x) in &[(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (0.0, -1.0), (2.0, 0.0), (-2.0, 0.0)] {
            let got = Ext::from_f64(y).atan2(&Ext::from_f64(x)).to_f64();
            assert!((got - f64::atan2(y, x)).abs() < 1e-15, "atan2({y},{x}) = {got}");
        }
    }

    #[test]
    fn ext_resolves_cancellation_binary64_cannot() {
        // 2 - 2cos(h) - h^2 = -h^4/12 + ...; binary64 has no correct digits at h = 1e-4.
        let h = Ext::from_f64(1e-4);
        let two = Ext::from_u64(2);
        let v = &(&two - &(&two * &h.cos())) - &(&h * &h);
        let expected = -1e-16 / 12.0;
        assert!(((v.to_f64() - expected) / expected).abs() < 1e-7);
    }

    #[test]
    fn precision_parses_cli_spellings() {
        assert_eq!("std".parse::<Precision>().unwrap(), Precision::Standard);
        assert_eq!("ext".parse::<Precision>().unwrap(), Precision::Extended);
        assert!("quad".parse::<Precision>().is_err());
    }
}
