//! Signed fixed-point arithmetic for the amplitude datapath.
//!
//! Two formats are used:
//!
//! * [`FixedReal`]: sign + 1 integer bit + 16 fractional bits, two's
//!   complement, range `[-2, 2 - 2^-16]`. Amplitude components live here.
//! * [`ExtendedReal`]: sign + 8 integer bits + 32 fractional bits, range
//!   `[-256, 256 - 2^-32]`. Used for probability sums, square roots and
//!   reciprocals, where doubling the fractional precision keeps
//!   accumulated error below the amplitude ULP.
//!
//! All rounding is to nearest with ties to even. Ties are common in this
//! datapath (every product with a `±1/2` matrix entry lands on one), and
//! rounding them away from zero would grow the state norm on every such
//! gate. Results that leave
//! the representable range saturate to the boundary and raise a sticky
//! [`Overflow`] flag supplied by the caller.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fractional bits of [`FixedReal`].
pub const FRAC_BITS: u32 = 16;
/// Fractional bits of [`ExtendedReal`].
pub const EXT_FRAC_BITS: u32 = 32;
/// Integer bits (excluding sign) of [`ExtendedReal`].
pub const EXT_INT_BITS: u32 = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("value {0} is outside the fixed-point range")]
    Range(f64),
    #[error("raw value {0} is outside the fixed-point range")]
    RawRange(i64),
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("reciprocal of {0} does not fit the extended format")]
    RecipDomain(f64),
}

/// Sticky overflow indicator, set when any saturating operation clips.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Overflow(bool);

impl Overflow {
    pub fn new() -> Self {
        Self(false)
    }

    #[inline]
    pub fn raise(&mut self) {
        self.0 = true;
    }

    #[inline]
    pub fn is_set(&self) -> bool {
        self.0
    }

    pub fn merge(&mut self, other: Overflow) {
        self.0 |= other.0;
    }
}

/// Shift right by `shift` bits rounding to nearest, ties to even.
#[inline]
pub(crate) fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let floor = v >> shift;
    let rem = v - (floor << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Real value in sign + 1.16 fixed point.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixedReal(i32);

impl FixedReal {
    pub const MIN_RAW: i32 = -(1 << (FRAC_BITS + 1));
    pub const MAX_RAW: i32 = (1 << (FRAC_BITS + 1)) - 1;
    pub const ZERO: FixedReal = FixedReal(0);
    pub const ONE: FixedReal = FixedReal(1 << FRAC_BITS);
    pub const MIN: FixedReal = FixedReal(Self::MIN_RAW);
    pub const MAX: FixedReal = FixedReal(Self::MAX_RAW);

    pub fn from_raw(raw: i32) -> Result<Self, NumericError> {
        if (Self::MIN_RAW..=Self::MAX_RAW).contains(&raw) {
            Ok(Self(raw))
        } else {
            Err(NumericError::RawRange(raw as i64))
        }
    }

    /// Clamp a wide raw value into range, raising `flag` if it had to clip.
    #[inline]
    pub fn saturate(raw: i128, flag: &mut Overflow) -> Self {
        if raw > Self::MAX_RAW as i128 {
            flag.raise();
            Self::MAX
        } else if raw < Self::MIN_RAW as i128 {
            flag.raise();
            Self::MIN
        } else {
            Self(raw as i32)
        }
    }

    /// Nearest representable value to `x`.
    ///
    /// Accepts `|x| <= 2 - 2^-17`; the single tie at the upper bound rounds
    /// to the largest representable value.
    pub fn quantize(x: f64) -> Result<Self, NumericError> {
        let limit = 2.0 - (-17f64).exp2();
        if !x.is_finite() || x.abs() > limit {
            return Err(NumericError::Range(x));
        }
        // Scaling by a power of two is exact, so `round` sees the true value.
        let scaled = (x * (1u64 << FRAC_BITS) as f64).round_ties_even() as i128;
        Ok(Self::saturate(scaled, &mut Overflow::new()))
    }

    #[inline]
    pub fn raw(self) -> i32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u64 << FRAC_BITS) as f64
    }

    #[inline]
    pub fn add(self, other: Self, flag: &mut Overflow) -> Self {
        Self::saturate(self.0 as i128 + other.0 as i128, flag)
    }

    #[inline]
    pub fn sub(self, other: Self, flag: &mut Overflow) -> Self {
        Self::saturate(self.0 as i128 - other.0 as i128, flag)
    }

    #[inline]
    pub fn neg(self, flag: &mut Overflow) -> Self {
        Self::saturate(-(self.0 as i128), flag)
    }

    /// Product rounded once from the exact 32-fractional-bit result.
    #[inline]
    pub fn mul(self, other: Self, flag: &mut Overflow) -> Self {
        let exact = self.0 as i128 * other.0 as i128;
        Self::saturate(round_shift(exact, FRAC_BITS), flag)
    }

    pub fn to_extended(self) -> ExtendedReal {
        ExtendedReal((self.0 as i64) << (EXT_FRAC_BITS - FRAC_BITS))
    }
}

impl fmt::Debug for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.to_f64(), self.0)
    }
}

impl fmt::Display for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

/// Complex amplitude with [`FixedReal`] components.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedComplex {
    pub re: FixedReal,
    pub im: FixedReal,
}

impl FixedComplex {
    pub const ZERO: FixedComplex = FixedComplex { re: FixedReal::ZERO, im: FixedReal::ZERO };
    pub const ONE: FixedComplex = FixedComplex { re: FixedReal::ONE, im: FixedReal::ZERO };
    pub const J: FixedComplex = FixedComplex { re: FixedReal::ZERO, im: FixedReal::ONE };

    pub const fn new(re: FixedReal, im: FixedReal) -> Self {
        Self { re, im }
    }

    pub fn from_raw(re: i32, im: i32) -> Result<Self, NumericError> {
        Ok(Self { re: FixedReal::from_raw(re)?, im: FixedReal::from_raw(im)? })
    }

    pub fn quantize(re: f64, im: f64) -> Result<Self, NumericError> {
        Ok(Self { re: FixedReal::quantize(re)?, im: FixedReal::quantize(im)? })
    }

    pub fn to_f64(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(self) -> bool {
        self.re.0 == 0 && self.im.0 == 0
    }

    /// Componentwise saturating sum.
    #[inline]
    pub fn cadd(self, other: Self, flag: &mut Overflow) -> Self {
        Self { re: self.re.add(other.re, flag), im: self.im.add(other.im, flag) }
    }

    #[inline]
    pub fn csub(self, other: Self, flag: &mut Overflow) -> Self {
        Self { re: self.re.sub(other.re, flag), im: self.im.sub(other.im, flag) }
    }

    /// Complex product. Both components are formed exactly from the four
    /// raw products and rounded once.
    #[inline]
    pub fn cmul(self, other: Self, flag: &mut Overflow) -> Self {
        Self::dot(&[(self, other)], flag)
    }

    /// `Σ a_k · b_k` accumulated exactly and rounded once per component,
    /// the multiply-accumulate shape of a DSP column.
    #[inline]
    pub fn dot(terms: &[(FixedComplex, FixedComplex)], flag: &mut Overflow) -> Self {
        let mut re: i128 = 0;
        let mut im: i128 = 0;
        for (a, b) in terms {
            let (ar, ai) = (a.re.0 as i128, a.im.0 as i128);
            let (br, bi) = (b.re.0 as i128, b.im.0 as i128);
            re += ar * br - ai * bi;
            im += ar * bi + ai * br;
        }
        Self {
            re: FixedReal::saturate(round_shift(re, FRAC_BITS), flag),
            im: FixedReal::saturate(round_shift(im, FRAC_BITS), flag),
        }
    }

    #[inline]
    pub fn neg(self, flag: &mut Overflow) -> Self {
        Self { re: self.re.neg(flag), im: self.im.neg(flag) }
    }

    /// Multiply by `j`: `j·(x + jy) = -y + jx`. Only a sign and a swap.
    #[inline]
    pub fn mul_j(self, flag: &mut Overflow) -> Self {
        Self { re: self.im.neg(flag), im: self.re }
    }

    /// Multiply by `-j`: `-j·(x + jy) = y - jx`.
    #[inline]
    pub fn mul_neg_j(self, flag: &mut Overflow) -> Self {
        Self { re: self.im, im: self.re.neg(flag) }
    }

    pub fn conj(self, flag: &mut Overflow) -> Self {
        Self { re: self.re, im: self.im.neg(flag) }
    }

    /// Exact `re² + im²`. Cannot overflow: the worst case is 8.
    #[inline]
    pub fn mag_sq(self) -> ExtendedReal {
        let re = self.re.0 as i64;
        let im = self.im.0 as i64;
        ExtendedReal(re * re + im * im)
    }

    /// Scale both components by an extended-precision factor, rounding once.
    #[inline]
    pub fn scale(self, factor: ExtendedReal, flag: &mut Overflow) -> Self {
        let f = factor.0 as i128;
        Self {
            re: FixedReal::saturate(round_shift(self.re.0 as i128 * f, EXT_FRAC_BITS), flag),
            im: FixedReal::saturate(round_shift(self.im.0 as i128 * f, EXT_FRAC_BITS), flag),
        }
    }
}

impl fmt::Debug for FixedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

/// Real value in sign + 8.32 fixed point.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExtendedReal(i64);

impl ExtendedReal {
    pub const MIN_RAW: i64 = -(1 << (EXT_FRAC_BITS + EXT_INT_BITS));
    pub const MAX_RAW: i64 = (1 << (EXT_FRAC_BITS + EXT_INT_BITS)) - 1;
    pub const ZERO: ExtendedReal = ExtendedReal(0);
    pub const ONE: ExtendedReal = ExtendedReal(1 << EXT_FRAC_BITS);
    pub const MAX: ExtendedReal = ExtendedReal(Self::MAX_RAW);
    pub const MIN: ExtendedReal = ExtendedReal(Self::MIN_RAW);

    pub fn from_raw(raw: i64) -> Result<Self, NumericError> {
        if (Self::MIN_RAW..=Self::MAX_RAW).contains(&raw) {
            Ok(Self(raw))
        } else {
            Err(NumericError::RawRange(raw))
        }
    }

    /// `2^exp` for `-32 <= exp <= 7`.
    pub const fn pow2(exp: i32) -> Self {
        Self(1i64 << (EXT_FRAC_BITS as i32 + exp))
    }

    #[inline]
    pub fn saturate(raw: i128, flag: &mut Overflow) -> Self {
        if raw > Self::MAX_RAW as i128 {
            flag.raise();
            Self::MAX
        } else if raw < Self::MIN_RAW as i128 {
            flag.raise();
            Self::MIN
        } else {
            Self(raw as i64)
        }
    }

    pub fn quantize(x: f64) -> Result<Self, NumericError> {
        let limit = 256.0 - (-33f64).exp2();
        if !x.is_finite() || x.abs() > limit {
            return Err(NumericError::Range(x));
        }
        let scaled = (x * (1u64 << EXT_FRAC_BITS) as f64).round_ties_even() as i128;
        Ok(Self::saturate(scaled, &mut Overflow::new()))
    }

    #[inline]
    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u64 << EXT_FRAC_BITS) as f64
    }

    #[inline]
    pub fn add(self, other: Self, flag: &mut Overflow) -> Self {
        Self::saturate(self.0 as i128 + other.0 as i128, flag)
    }

    #[inline]
    pub fn sub(self, other: Self, flag: &mut Overflow) -> Self {
        Self::saturate(self.0 as i128 - other.0 as i128, flag)
    }

    pub fn abs(self) -> Self {
        // |MIN_RAW| fits in i64 comfortably.
        Self(self.0.abs())
    }

    /// Digit-by-digit square root of the raw value. The result `r` is the
    /// largest representable value with `r² <= x`.
    pub fn sqrt(self) -> Result<Self, NumericError> {
        if self.0 < 0 {
            return Err(NumericError::NegativeSqrt(self.to_f64()));
        }
        // value = raw/2^32, sqrt(value)·2^32 = sqrt(raw·2^32).
        let root = isqrt_u128((self.0 as u128) << EXT_FRAC_BITS);
        Ok(Self(root as i64))
    }

    /// Nearest representable `1/x`. Fails when `x <= 0` or the reciprocal
    /// would exceed the 8 integer bits.
    pub fn recip(self) -> Result<Self, NumericError> {
        if self.0 <= 0 {
            return Err(NumericError::RecipDomain(self.to_f64()));
        }
        // 1/(raw/2^32)·2^32 = 2^64/raw, rounded half up (operands positive).
        let num: u128 = 1u128 << (2 * EXT_FRAC_BITS);
        let d = self.0 as u128;
        let q = (num + d / 2) / d;
        if q > Self::MAX_RAW as u128 {
            return Err(NumericError::RecipDomain(self.to_f64()));
        }
        Ok(Self(q as i64))
    }
}

impl fmt::Debug for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.to_f64(), self.0)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

/// Non-restoring digit-by-digit integer square root: `floor(sqrt(v))`.
pub fn isqrt_u128(v: u128) -> u128 {
    let mut rem = v;
    let mut root: u128 = 0;
    // Highest power of four not above v.
    let mut bit: u128 = 1u128 << 126;
    while bit > v {
        bit >>= 2;
    }
    while bit != 0 {
        if rem >= root + bit {
            rem -= root + bit;
            root = (root >> 1) + bit;
        } else {
            root >>= 1;
        }
        bit >>= 2;
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fr(raw: i32) -> FixedReal {
        FixedReal::from_raw(raw).unwrap()
    }

    fn fc(re: i32, im: i32) -> FixedComplex {
        FixedComplex::from_raw(re, im).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(FixedReal::quantize(0.0).unwrap().raw(), 0);
        assert_eq!(FixedReal::quantize(std::f64::consts::FRAC_1_SQRT_2).unwrap().raw(), 46341);
        assert_eq!(FixedReal::quantize(-1.0).unwrap().raw(), -65536);
        // Ties go to even.
        assert_eq!(FixedReal::quantize(1.5 / 65536.0).unwrap().raw(), 2);
        assert_eq!(FixedReal::quantize(-1.5 / 65536.0).unwrap().raw(), -2);
        assert_eq!(FixedReal::quantize(2.5 / 65536.0).unwrap().raw(), 2);
        assert_eq!(FixedReal::quantize(-2.5 / 65536.0).unwrap().raw(), -2);
        assert_eq!(FixedReal::quantize(2.0 - (-17f64).exp2()).unwrap(), FixedReal::MAX);
        assert!(matches!(FixedReal::quantize(2.0), Err(NumericError::Range(_))));
        assert!(FixedReal::quantize(f64::NAN).is_err());
    }

    #[test]
    fn cadd_examples() {
        let mut f = Overflow::new();
        assert_eq!(FixedComplex::ONE.cadd(fc(-65536, 0), &mut f), FixedComplex::ZERO);
        assert!(!f.is_set());
        let h = fc(46341, 0);
        assert_eq!(h.cadd(h, &mut f).re.raw(), 92682);
        assert!(!f.is_set());
        let s = FixedComplex::J.cadd(FixedComplex::J, &mut f);
        assert_eq!(s.im.raw(), FixedReal::MAX_RAW);
        assert!(f.is_set());
    }

    #[test]
    fn cmul_examples() {
        let mut f = Overflow::new();
        let v = fc(12345, -54321);
        assert_eq!(FixedComplex::ONE.cmul(v, &mut f), v);
        assert_eq!(FixedComplex::J.cmul(FixedComplex::J, &mut f), fc(-65536, 0));
        let h = fc(46341, 0);
        let p = h.cmul(h, &mut f);
        assert!((p.re.to_f64() - 0.5).abs() <= (-16f64).exp2());
        assert_eq!(p.im.raw(), 0);
        assert!(!f.is_set());
    }

    #[test]
    fn mag_sq_examples() {
        assert_eq!(FixedComplex::ONE.mag_sq(), ExtendedReal::ONE);
        assert_eq!(fc(0, -65536).mag_sq(), ExtendedReal::ONE);
        let m = fc(46341, 46341).mag_sq();
        assert_eq!(m.raw(), 2 * 46341i64 * 46341);
        assert!((m.to_f64() - 1.000_002_157_4).abs() < 1e-10);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(ExtendedReal::ONE.sqrt().unwrap(), ExtendedReal::ONE);
        assert_eq!(ExtendedReal::pow2(-2).sqrt().unwrap(), ExtendedReal::pow2(-1));
        let r = ExtendedReal::pow2(-1).sqrt().unwrap();
        assert!((r.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() <= (-32f64).exp2());
        assert!(ExtendedReal::from_raw(-1).unwrap().sqrt().is_err());
    }

    #[test]
    fn recip_examples() {
        assert_eq!(ExtendedReal::ONE.recip().unwrap(), ExtendedReal::ONE);
        assert_eq!(ExtendedReal::pow2(-1).recip().unwrap(), ExtendedReal::pow2(1));
        let x = ExtendedReal::quantize(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let r = x.recip().unwrap();
        assert!((r.to_f64() - 1.0 / x.to_f64()).abs() <= (-30f64).exp2());
        assert!((r.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-7);
        assert!(ExtendedReal::ZERO.recip().is_err());
        assert!(ExtendedReal::pow2(-14).recip().is_err());
        // 1/x must stay below 256.
        assert!(ExtendedReal::pow2(-8).recip().is_err());
        assert!(ExtendedReal::from_raw((1 << 24) + 1).unwrap().recip().is_ok());
    }

    #[test]
    fn isqrt_small_exhaustive() {
        for v in 0u128..20_000 {
            let r = isqrt_u128(v);
            assert!(r * r <= v && (r + 1) * (r + 1) > v, "v={v}");
        }
        assert_eq!(isqrt_u128(u128::MAX), u64::MAX as u128);
    }

    #[test]
    fn sqrt_monotone_on_grid() {
        let mut prev = ExtendedReal::ZERO;
        for raw in (0..(1i64 << 34)).step_by(1 << 14) {
            let r = ExtendedReal::from_raw(raw).unwrap().sqrt().unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn extended_contains_fixed() {
        for raw in [FixedReal::MIN_RAW, -1, 0, 1, 46341, FixedReal::MAX_RAW] {
            let e = fr(raw).to_extended();
            assert_eq!(e.to_f64(), fr(raw).to_f64());
        }
    }

    fn raw17() -> impl Strategy<Value = i32> {
        FixedReal::MIN_RAW..=FixedReal::MAX_RAW
    }

    proptest! {
        #[test]
        fn cmul_single_rounding(ar in raw17(), ai in raw17(), br in raw17(), bi in raw17()) {
            let mut f = Overflow::new();
            let p = fc(ar, ai).cmul(fc(br, bi), &mut f);
            // Oracle: the exact integer product fits an f64 mantissa and scaling by
            // 2^-16 is exact, so f64's ties-to-even rounding gives the reference.
            let exact_re = ar as i128 * br as i128 - ai as i128 * bi as i128;
            let exact_im = ar as i128 * bi as i128 + ai as i128 * br as i128;
            let round = |v: i128| -> i128 { (v as f64 / 65536.0).round_ties_even() as i128 };
            let clamp = |v: i128| v.clamp(FixedReal::MIN_RAW as i128, FixedReal::MAX_RAW as i128);
            prop_assert_eq!(p.re.raw() as i128, clamp(round(exact_re)));
            prop_assert_eq!(p.im.raw() as i128, clamp(round(exact_im)));
            let clipped = clamp(round(exact_re)) != round(exact_re) || clamp(round(exact_im)) != round(exact_im);
            prop_assert_eq!(f.is_set(), clipped);
        }

        #[test]
        fn mag_sq_exact(re in raw17(), im in raw17()) {
            let m = fc(re, im).mag_sq();
            prop_assert_eq!(m.raw(), re as i64 * re as i64 + im as i64 * im as i64);
        }

        #[test]
        fn quantize_round_trip(raw in raw17()) {
            let v = fr(raw);
            prop_assert_eq!(FixedReal::quantize(v.to_f64()).unwrap(), v);
        }

        #[test]
        fn sqrt_bracket(raw in 0i64..=ExtendedReal::MAX_RAW) {
            let r = ExtendedReal::from_raw(raw).unwrap().sqrt().unwrap().raw() as u128;
            let x = (raw as u128) << 32;
            prop_assert!(r * r <= x && (r + 1) * (r + 1) > x);
        }

        #[test]
        fn sqrt_monotone(a in 0i64..=ExtendedReal::MAX_RAW, b in 0i64..=ExtendedReal::MAX_RAW) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = |raw| ExtendedReal::from_raw(raw).unwrap().sqrt().unwrap();
            prop_assert!(s(lo) <= s(hi));
        }

        #[test]
        fn recip_nearest(raw in (1i64 << 24) + 1..=ExtendedReal::MAX_RAW) {
            let q = ExtendedReal::from_raw(raw).unwrap().recip().unwrap().raw() as i128;
            // |q·raw - 2^64| <= raw/2 characterizes the nearest quotient.
            let err = (q * raw as i128 - (1i128 << 64)).abs();
            prop_assert!(2 * err <= raw as i128);
        }
    }
}
