//! Gate definitions and the gate-pool kernels.
//!
//! One-input gates carry their matrix twice: exactly, over the ring
//! `{(a + b√2) / 2^k}` extended with `j`, and quantized to [`FixedComplex`].
//! Two-input gates are generalized permutation matrices with entries in
//! `{1, -1, j, -j}` and are stored as an action table (source row plus a
//! phase), so their kernel contains no multiplier at all.

use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{FixedComplex, FixedReal, Overflow};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GateError {
    #[error("{0} is procedural and has no static matrix")]
    NotStaticMatrix(GateKind),
    #[error("{0} is not a two-input gate")]
    NotTwoInput(GateKind),
    #[error("{0} is not a one-input gate")]
    NotOneInput(GateKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Nop,
    X,
    Y,
    Z,
    H,
    /// √X (√NOT).
    V,
    SqrtY,
    S,
    Sdg,
    T,
    Tdg,
    Ex,
    Ey,
    Ez,
    M,
    Cnot,
    Cy,
    Cz,
    SqrtZz,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 20] = [
        GateKind::Nop,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::V,
        GateKind::SqrtY,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Ex,
        GateKind::Ey,
        GateKind::Ez,
        GateKind::M,
        GateKind::Cnot,
        GateKind::Cy,
        GateKind::Cz,
        GateKind::SqrtZz,
        GateKind::Swap,
    ];

    /// One-input gates with a fixed matrix.
    pub const STATIC_ONE_INPUT: [GateKind; 11] = [
        GateKind::Nop,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::V,
        GateKind::SqrtY,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
    ];

    pub const TWO_INPUT: [GateKind; 5] = [GateKind::Cnot, GateKind::Cy, GateKind::Cz, GateKind::SqrtZz, GateKind::Swap];

    pub fn is_two_input(self) -> bool {
        Self::TWO_INPUT.contains(&self)
    }

    pub fn is_error_gate(self) -> bool {
        matches!(self, GateKind::Ex | GateKind::Ey | GateKind::Ez)
    }

    pub fn is_measurement(self) -> bool {
        self == GateKind::M
    }

    /// Lowercase keyword used by the circuit text format.
    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::Nop => "nop",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::V => "v",
            GateKind::SqrtY => "sy",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Ex => "ex",
            GateKind::Ey => "ey",
            GateKind::Ez => "ez",
            GateKind::M => "m",
            GateKind::Cnot => "cnot",
            GateKind::Cy => "cy",
            GateKind::Cz => "cz",
            GateKind::SqrtZz => "szz",
            GateKind::Swap => "swap",
        }
    }

    /// Case-insensitive keyword lookup.
    pub fn from_keyword(word: &str) -> Option<Self> {
        let lower = word.to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.keyword() == lower)
    }

    /// The Pauli an error gate applies when it fires.
    pub fn error_pauli(self) -> Option<GateKind> {
        match self {
            GateKind::Ex => Some(GateKind::X),
            GateKind::Ey => Some(GateKind::Y),
            GateKind::Ez => Some(GateKind::Z),
            _ => None,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Exact real `(a + b·√2) / 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Surd {
    a: i64,
    b: i64,
    k: u32,
}

impl Surd {
    pub const ZERO: Surd = Surd { a: 0, b: 0, k: 0 };
    pub const ONE: Surd = Surd { a: 1, b: 0, k: 0 };
    pub const HALF: Surd = Surd { a: 1, b: 0, k: 1 };
    /// `1/√2 = √2/2`.
    pub const FRAC_1_SQRT_2: Surd = Surd { a: 0, b: 1, k: 1 };

    pub const fn new(a: i64, b: i64, k: u32) -> Self {
        Self { a, b, k }
    }

    fn normalized(mut self) -> Self {
        if self.a == 0 && self.b == 0 {
            return Self::ZERO;
        }
        while self.k > 0 && self.a % 2 == 0 && self.b % 2 == 0 {
            self.a /= 2;
            self.b /= 2;
            self.k -= 1;
        }
        self
    }

    fn lift(self, k: u32) -> (i64, i64) {
        let s = k - self.k;
        (self.a << s, self.b << s)
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn to_f64(self) -> f64 {
        (self.a as f64 + self.b as f64 * std::f64::consts::SQRT_2) / (1u64 << self.k) as f64
    }

    /// Integer value in `{-1, 0, 1}` if the surd is one.
    fn as_unit_sign(self) -> Option<i8> {
        let s = self.normalized();
        match (s.a, s.b, s.k) {
            (0, 0, _) => Some(0),
            (1, 0, 0) => Some(1),
            (-1, 0, 0) => Some(-1),
            _ => None,
        }
    }
}

impl Add for Surd {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        let k = self.k.max(o.k);
        let (a1, b1) = self.lift(k);
        let (a2, b2) = o.lift(k);
        Self { a: a1 + a2, b: b1 + b2, k }.normalized()
    }
}

impl Neg for Surd {
    type Output = Self;

    fn neg(self) -> Self {
        Self { a: -self.a, b: -self.b, k: self.k }
    }
}

impl Mul for Surd {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        Self { a: self.a * o.a + 2 * self.b * o.b, b: self.a * o.b + self.b * o.a, k: self.k + o.k }.normalized()
    }
}

impl Add for ExactComplex {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Mul for ExactComplex {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re + -(self.im * o.im), im: self.re * o.im + self.im * o.re }
    }
}

/// Exact complex entry over [`Surd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: Surd,
    pub im: Surd,
}

impl ExactComplex {
    pub const ZERO: Self = Self { re: Surd::ZERO, im: Surd::ZERO };
    pub const ONE: Self = Self { re: Surd::ONE, im: Surd::ZERO };

    pub const fn new(re: Surd, im: Surd) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn to_complex64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn quantize(self) -> FixedComplex {
        FixedComplex::quantize(self.re.to_f64(), self.im.to_f64()).expect("gate entries have magnitude <= 1")
    }

    /// The phase this entry represents if it is one of `{1, -1, j, -j}`.
    fn as_phase(self) -> Option<Phase> {
        match (self.re.as_unit_sign()?, self.im.as_unit_sign()?) {
            (1, 0) => Some(Phase::One),
            (-1, 0) => Some(Phase::MinusOne),
            (0, 1) => Some(Phase::J),
            (0, -1) => Some(Phase::MinusJ),
            _ => None,
        }
    }
}

/// Unit phases realizable with sign flips and a re/im swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    MinusOne,
    J,
    MinusJ,
}

impl Phase {
    #[inline]
    pub fn apply(self, x: FixedComplex, flag: &mut Overflow) -> FixedComplex {
        match self {
            Phase::One => x,
            Phase::MinusOne => x.neg(flag),
            Phase::J => x.mul_j(flag),
            Phase::MinusJ => x.mul_neg_j(flag),
        }
    }

    pub fn conj(self) -> Self {
        match self {
            Phase::J => Phase::MinusJ,
            Phase::MinusJ => Phase::J,
            p => p,
        }
    }

    pub fn to_exact(self) -> ExactComplex {
        let (re, im) = match self {
            Phase::One => (Surd::ONE, Surd::ZERO),
            Phase::MinusOne => (-Surd::ONE, Surd::ZERO),
            Phase::J => (Surd::ZERO, Surd::ONE),
            Phase::MinusJ => (Surd::ZERO, -Surd::ONE),
        };
        ExactComplex { re, im }
    }
}

/// Mirror of the exact matrix used by the sign-only fast path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SignEntry {
    Zero,
    Unit(Phase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix1 {
    exact: [[ExactComplex; 2]; 2],
    quantized: [[FixedComplex; 2]; 2],
    sign_only: Option<[[SignEntry; 2]; 2]>,
}

fn c(re: Surd, im: Surd) -> ExactComplex {
    ExactComplex::new(re, im)
}

impl GateMatrix1 {
    pub fn from_exact(exact: [[ExactComplex; 2]; 2]) -> Self {
        let quantized = exact.map(|row| row.map(ExactComplex::quantize));
        let sign_row = |row: [ExactComplex; 2]| -> Option<[SignEntry; 2]> {
            let mut out = [SignEntry::Zero; 2];
            for (o, e) in out.iter_mut().zip(row) {
                *o = if e == ExactComplex::ZERO { SignEntry::Zero } else { SignEntry::Unit(e.as_phase()?) };
            }
            Some(out)
        };
        let sign_only = match (sign_row(exact[0]), sign_row(exact[1])) {
            (Some(r0), Some(r1)) => Some([r0, r1]),
            _ => None,
        };
        Self { exact, quantized, sign_only }
    }

    pub fn exact(&self) -> &[[ExactComplex; 2]; 2] {
        &self.exact
    }

    pub fn quantized(&self) -> &[[FixedComplex; 2]; 2] {
        &self.quantized
    }

    /// True when every entry is in `{0, ±1, ±j}` and the kernel is exact.
    pub fn is_sign_only(&self) -> bool {
        self.sign_only.is_some()
    }

    /// Conjugate transpose, computed exactly.
    pub fn adjoint(&self) -> Self {
        let e = &self.exact;
        Self::from_exact([[e[0][0].conj(), e[1][0].conj()], [e[0][1].conj(), e[1][1].conj()]])
    }

    pub fn to_dense(&self) -> [[Complex64; 2]; 2] {
        self.exact.map(|row| row.map(ExactComplex::to_complex64))
    }

    /// `G₁ψ` for one amplitude pair. Sign-only matrices only move and
    /// negate components; the rest accumulate each row exactly and round
    /// once.
    #[inline]
    pub fn apply(&self, pair: [FixedComplex; 2], flag: &mut Overflow) -> [FixedComplex; 2] {
        if let Some(signs) = &self.sign_only {
            return signs.map(|row| {
                let mut acc = FixedComplex::ZERO;
                for (e, x) in row.iter().zip(pair) {
                    if let SignEntry::Unit(p) = e {
                        acc = acc.cadd(p.apply(x, flag), flag);
                    }
                }
                acc
            });
        }
        let q = &self.quantized;
        [
            FixedComplex::dot(&[(q[0][0], pair[0]), (q[0][1], pair[1])], flag),
            FixedComplex::dot(&[(q[1][0], pair[0]), (q[1][1], pair[1])], flag),
        ]
    }

    /// `U†U = I` in exact arithmetic.
    pub fn is_exactly_unitary(&self) -> bool {
        let e = &self.exact;
        (0..2).all(|r| {
            (0..2).all(|col| {
                let s = (0..2).fold(ExactComplex::ZERO, |acc, k| acc + e[k][r].conj() * e[k][col]);
                s == if r == col { ExactComplex::ONE } else { ExactComplex::ZERO }
            })
        })
    }

    /// `max |U†U − I|` over entries in double precision.
    pub fn dense_unitarity_error(&self) -> f64 {
        dense_unitarity_error(self.to_dense().map(|r| r.to_vec()).as_ref())
    }

    /// `max |U†U − I|` for the quantized entries, computed exactly from
    /// raw integers.
    pub fn quantized_unitarity_error(&self) -> f64 {
        let q = &self.quantized;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for col in 0..2 {
                let (mut re, mut im) = (0i64, 0i64);
                for row in q {
                    let (ar, ai) = (row[r].re.raw() as i64, -(row[r].im.raw() as i64));
                    let (br, bi) = (row[col].re.raw() as i64, row[col].im.raw() as i64);
                    re += ar * br - ai * bi;
                    im += ar * bi + ai * br;
                }
                let target = if r == col { 1i64 << 32 } else { 0 };
                let dev = ((re - target) as f64).hypot(im as f64) / (1u64 << 32) as f64;
                worst = worst.max(dev);
            }
        }
        worst
    }
}

/// `max |U†U − I|` for a dense square matrix.
pub fn dense_unitarity_error(m: &[Vec<Complex64>]) -> f64 {
    let d = m.len();
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for col in 0..d {
            let s: Complex64 = (0..d).map(|k| m[k][r].conj() * m[k][col]).sum();
            let target = if r == col { 1.0 } else { 0.0 };
            worst = worst.max((s - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Static matrix of a one-input gate.
pub fn one_input_matrix(kind: GateKind) -> Result<GateMatrix1, GateError> {
    if kind.is_two_input() {
        return Err(GateError::NotOneInput(kind));
    }
    let (z, one, half, r) = (Surd::ZERO, Surd::ONE, Surd::HALF, Surd::FRAC_1_SQRT_2);
    let (m_one, m_half, m_r) = (-one, -half, -r);
    let e = match kind {
        GateKind::Nop => [[c(one, z), c(z, z)], [c(z, z), c(one, z)]],
        GateKind::X => [[c(z, z), c(one, z)], [c(one, z), c(z, z)]],
        // Printed as [[0, j], [-j, 0]]; the controlled form uses the same block.
        GateKind::Y => [[c(z, z), c(z, one)], [c(z, m_one), c(z, z)]],
        GateKind::Z => [[c(one, z), c(z, z)], [c(z, z), c(m_one, z)]],
        GateKind::H => [[c(r, z), c(r, z)], [c(r, z), c(m_r, z)]],
        GateKind::V => [[c(half, half), c(half, m_half)], [c(half, m_half), c(half, half)]],
        GateKind::SqrtY => [[c(half, half), c(m_half, m_half)], [c(half, half), c(half, half)]],
        GateKind::S => [[c(one, z), c(z, z)], [c(z, z), c(z, one)]],
        GateKind::Sdg => [[c(one, z), c(z, z)], [c(z, z), c(z, m_one)]],
        GateKind::T => [[c(one, z), c(z, z)], [c(z, z), c(r, r)]],
        GateKind::Tdg => [[c(one, z), c(z, z)], [c(z, z), c(r, m_r)]],
        GateKind::Ex | GateKind::Ey | GateKind::Ez | GateKind::M => return Err(GateError::NotStaticMatrix(kind)),
        _ => unreachable!("two-input kinds rejected above"),
    };
    Ok(GateMatrix1::from_exact(e))
}

/// Output row `r` takes `phase · input[src]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowAction {
    pub src: u8,
    pub phase: Phase,
}

/// Two-input gate as a generalized permutation. The quartet sub-index is
/// `(bit1 = j, bit0 = i)`, so for controlled gates `j` is the control.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateMatrix2 {
    rows: [RowAction; 4],
}

impl GateMatrix2 {
    pub fn from_actions(rows: [RowAction; 4]) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[RowAction; 4] {
        &self.rows
    }

    /// Action table of the conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut rows = self.rows;
        for (r, a) in self.rows.iter().enumerate() {
            rows[a.src as usize] = RowAction { src: r as u8, phase: a.phase.conj() };
        }
        Self { rows }
    }

    pub fn to_exact(&self) -> [[ExactComplex; 4]; 4] {
        let mut m = [[ExactComplex::ZERO; 4]; 4];
        for (r, a) in self.rows.iter().enumerate() {
            m[r][a.src as usize] = a.phase.to_exact();
        }
        m
    }

    pub fn to_dense(&self) -> [[Complex64; 4]; 4] {
        self.to_exact().map(|row| row.map(ExactComplex::to_complex64))
    }

    /// One nonzero per row and per column.
    pub fn is_generalized_permutation(&self) -> bool {
        let mut seen = [false; 4];
        self.rows.iter().all(|a| !std::mem::replace(&mut seen[a.src as usize], true))
    }

    pub fn is_exactly_unitary(&self) -> bool {
        let e = self.to_exact();
        (0..4).all(|r| {
            (0..4).all(|col| {
                let s = (0..4).fold(ExactComplex::ZERO, |acc, k| acc + e[k][r].conj() * e[k][col]);
                s == if r == col { ExactComplex::ONE } else { ExactComplex::ZERO }
            })
        })
    }

    /// `G₂ψ` for one quartet: selection plus sign/swap, never a multiply.
    #[inline]
    pub fn apply(&self, quartet: [FixedComplex; 4]) -> [FixedComplex; 4] {
        // Negating the most negative raw value is the only way to clip, and
        // normalized amplitudes never reach it.
        let mut flag = Overflow::new();
        self.rows.map(|a| a.phase.apply(quartet[a.src as usize], &mut flag))
    }
}

/// Table of a two-input gate.
pub fn two_input_matrix(kind: GateKind) -> Result<GateMatrix2, GateError> {
    use Phase::*;
    let row = |src: u8, phase: Phase| RowAction { src, phase };
    let rows = match kind {
        GateKind::Cnot => [row(0, One), row(1, One), row(3, One), row(2, One)],
        GateKind::Cy => [row(0, One), row(1, One), row(3, J), row(2, MinusJ)],
        GateKind::Cz => [row(0, One), row(1, One), row(2, One), row(3, MinusOne)],
        GateKind::SqrtZz => [row(0, One), row(1, J), row(2, J), row(3, MinusOne)],
        GateKind::Swap => [row(0, One), row(2, One), row(1, One), row(3, One)],
        other => return Err(GateError::NotTwoInput(other)),
    };
    Ok(GateMatrix2 { rows })
}

/// Quantized `1/√2`. `e^{±jπ/4}` quantizes to this value in both components.
pub fn frac_1_sqrt_2() -> FixedReal {
    FixedReal::quantize(Surd::FRAC_1_SQRT_2.to_f64()).expect("in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fc(re: i32, im: i32) -> FixedComplex {
        FixedComplex::from_raw(re, im).unwrap()
    }

    fn amp() -> impl Strategy<Value = FixedComplex> {
        (-65536i32..=65536, -65536i32..=65536).prop_map(|(r, i)| fc(r, i))
    }

    #[test]
    fn universal_set_present() {
        for k in [GateKind::H, GateKind::T, GateKind::Cnot] {
            assert!(GateKind::ALL.contains(&k));
        }
    }

    #[test]
    fn table_matrices() {
        let h = one_input_matrix(GateKind::H).unwrap().to_dense();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [[r, r], [r, -r]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - Complex64::new(expect[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let x = one_input_matrix(GateKind::X).unwrap();
        assert_eq!(x.to_dense()[0][1], Complex64::new(1.0, 0.0));
        assert_eq!(x.to_dense()[0][0], Complex64::new(0.0, 0.0));
        let t = one_input_matrix(GateKind::T).unwrap().to_dense();
        assert!((t[1][1] - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        assert_eq!(t[0][0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn procedural_gates_have_no_matrix() {
        for k in [GateKind::M, GateKind::Ex, GateKind::Ey, GateKind::Ez] {
            assert_eq!(one_input_matrix(k), Err(GateError::NotStaticMatrix(k)));
        }
        assert_eq!(one_input_matrix(GateKind::Cnot), Err(GateError::NotOneInput(GateKind::Cnot)));
        assert_eq!(two_input_matrix(GateKind::H), Err(GateError::NotTwoInput(GateKind::H)));
    }

    #[test]
    fn two_input_tables() {
        let cnot = two_input_matrix(GateKind::Cnot).unwrap();
        let q = [fc(1, 0), fc(2, 0), fc(3, 0), fc(4, 0)];
        assert_eq!(cnot.apply(q), [q[0], q[1], q[3], q[2]]);
        let swap = two_input_matrix(GateKind::Swap).unwrap();
        assert_eq!(swap.apply(q), [q[0], q[2], q[1], q[3]]);
        let szz = two_input_matrix(GateKind::SqrtZz).unwrap().to_dense();
        let j = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!([szz[0][0], szz[1][1], szz[2][2], szz[3][3]], [one, j, j, -one]);
    }

    #[test]
    fn cy_rotates_lower_block() {
        let cy = two_input_matrix(GateKind::Cy).unwrap();
        let (a, b, c_, d) = (fc(1, 2), fc(3, 4), fc(5, 6), fc(7, 8));
        let out = cy.apply([a, b, c_, d]);
        // j·(7 + 8j) = -8 + 7j ; -j·(5 + 6j) = 6 - 5j
        assert_eq!(out, [a, b, fc(-8, 7), fc(6, -5)]);
    }

    #[test]
    fn sqrt_zz_on_uniform_quartet() {
        let h = FixedComplex::quantize(0.5, 0.0).unwrap();
        let out = two_input_matrix(GateKind::SqrtZz).unwrap().apply([h; 4]);
        assert_eq!(out, [h, fc(0, 32768), fc(0, 32768), fc(-32768, 0)]);
    }

    #[test]
    fn every_matrix_is_unitary() {
        for k in GateKind::STATIC_ONE_INPUT {
            let m = one_input_matrix(k).unwrap();
            assert!(m.is_exactly_unitary(), "{k}");
            assert!(m.dense_unitarity_error() <= 1e-15, "{k}");
            assert!(m.quantized_unitarity_error() <= 4.0 * (-16f64).exp2(), "{k}");
        }
        for k in GateKind::TWO_INPUT {
            let m = two_input_matrix(k).unwrap();
            assert!(m.is_generalized_permutation(), "{k}");
            assert!(m.is_exactly_unitary(), "{k}");
            let dense: Vec<Vec<_>> = m.to_dense().iter().map(|r| r.to_vec()).collect();
            assert!(dense_unitarity_error(&dense) <= 1e-15);
        }
    }

    #[test]
    fn t_phase_shares_the_frac_1_sqrt_2_constant() {
        let t = one_input_matrix(GateKind::T).unwrap();
        assert_eq!(t.quantized()[1][1], fc(46341, 46341));
        assert_eq!(frac_1_sqrt_2().raw(), 46341);
    }

    #[test]
    fn sign_only_classification() {
        let sign_only = [GateKind::Nop, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::Sdg];
        for k in GateKind::STATIC_ONE_INPUT {
            assert_eq!(one_input_matrix(k).unwrap().is_sign_only(), sign_only.contains(&k), "{k}");
        }
    }

    #[test]
    fn apply1_examples() {
        let mut f = Overflow::new();
        let pair = [fc(123, -456), fc(-789, 1011)];
        assert_eq!(one_input_matrix(GateKind::Nop).unwrap().apply(pair, &mut f), pair);
        let h = one_input_matrix(GateKind::H).unwrap();
        let out = h.apply([FixedComplex::ONE, FixedComplex::ZERO], &mut f);
        assert_eq!(out, [fc(46341, 0), fc(46341, 0)]);
        let z = one_input_matrix(GateKind::Z).unwrap();
        assert_eq!(z.apply(pair, &mut f), [pair[0], fc(789, -1011)]);
        assert!(!f.is_set());
    }

    #[test]
    fn keywords_round_trip() {
        for k in GateKind::ALL {
            assert_eq!(GateKind::from_keyword(k.keyword()), Some(k));
            assert_eq!(GateKind::from_keyword(&k.keyword().to_uppercase()), Some(k));
        }
        assert_eq!(GateKind::from_keyword("toffoli"), None);
    }

    proptest! {
        #[test]
        fn apply2_exactly_invertible(k in 0usize..5, q in proptest::array::uniform4(amp())) {
            let m = two_input_matrix(GateKind::TWO_INPUT[k]).unwrap();
            prop_assert_eq!(m.adjoint().apply(m.apply(q)), q);
        }

        #[test]
        fn sign_only_is_a_rearrangement(k in 0usize..6, p in proptest::array::uniform2(amp())) {
            let kinds = [GateKind::Nop, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::Sdg];
            let mut f = Overflow::new();
            let out = one_input_matrix(kinds[k]).unwrap().apply(p, &mut f);
            let mut inputs: Vec<i32> = p.iter().flat_map(|a| [a.re.raw().abs(), a.im.raw().abs()]).collect();
            let mut outputs: Vec<i32> = out.iter().flat_map(|a| [a.re.raw().abs(), a.im.raw().abs()]).collect();
            inputs.sort_unstable();
            outputs.sort_unstable();
            prop_assert_eq!(inputs, outputs);
        }

        #[test]
        fn gate_then_adjoint_returns_input(k in 0usize..11, re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, th in 0.0f64..std::f64::consts::TAU) {
            // Normalized pair so the gate outputs stay in range.
            let norm = (re0 * re0 + im0 * im0).sqrt().max(1e-9);
            let (s, c_) = th.sin_cos();
            let a = FixedComplex::quantize(re0 / norm * c_, im0 / norm * c_).unwrap();
            let b = FixedComplex::quantize(s * 0.6, s * 0.8).unwrap();
            let m = one_input_matrix(GateKind::STATIC_ONE_INPUT[k]).unwrap();
            let mut f = Overflow::new();
            let back = m.adjoint().apply(m.apply([a, b], &mut f), &mut f);
            prop_assert!(!f.is_set());
            for (x, y) in back.iter().zip([a, b]) {
                prop_assert!((x.re.raw() - y.re.raw()).abs() <= 4);
                prop_assert!((x.im.raw() - y.im.raw()).abs() <= 4);
            }
        }
    }
}
