//! Quantum state register and initialization.
//!
//! The register stores `2^n` amplitudes in *physical* order: logical qubit
//! `k` sits at index bit `ordering.position(k)`. Gate evaluation moves the
//! ordering around instead of restoring it after every gate, so readers that
//! care about logical indices must go through [`QuantumStateRegister::logical_amplitudes`]
//! or restore the identity ordering first.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::numerics::{ExtendedReal, FixedComplex, NumericError, Overflow};
use crate::permnet::{self, PermError};

/// Largest supported qubit count.
pub const N_MAX: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit count {0} outside 1..={N_MAX}")]
    QubitCount(usize),
    #[error("basis index {index} out of range for {n} qubits")]
    IndexRange { n: usize, index: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("state cannot be normalized: all amplitudes are (numerically) zero")]
    Degenerate,
    #[error("state norm {0} exceeds the extended accumulator range")]
    NormOverflow(f64),
    #[error("invalid ordering: {0}")]
    Ordering(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Permutation(#[from] PermError),
}

/// Map from logical qubit to the index bit currently holding it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitOrdering {
    perm: Vec<u8>,
}

impl QubitOrdering {
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n as u8).collect() }
    }

    /// `positions[k]` is the bit position of logical qubit `k`.
    pub fn from_positions(positions: Vec<u8>) -> Result<Self, StateError> {
        let n = positions.len();
        let mut seen = vec![false; n];
        for &p in &positions {
            let p = p as usize;
            if p >= n || seen[p] {
                return Err(StateError::Ordering(format!("{positions:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self { perm: positions })
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn position(&self, qubit: usize) -> usize {
        self.perm[qubit] as usize
    }

    pub fn positions(&self) -> &[u8] {
        &self.perm
    }

    /// Logical qubit sitting at `bit`.
    pub fn qubit_at(&self, bit: usize) -> usize {
        self.perm.iter().position(|&p| p as usize == bit).expect("ordering is a permutation")
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| k == p as usize)
    }

    /// Logical index of physical index `phys` under this ordering.
    pub fn logical_index(&self, phys: usize) -> usize {
        self.perm.iter().enumerate().fold(0, |acc, (k, &p)| acc | (((phys >> p) & 1) << k))
    }

    /// Physical index of logical index `logical` under this ordering.
    pub fn physical_index(&self, logical: usize) -> usize {
        self.perm.iter().enumerate().fold(0, |acc, (k, &p)| acc | (((logical >> k) & 1) << p))
    }

    pub(crate) fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm.iter().all(|&p| {
            let p = p as usize;
            p < seen.len() && !std::mem::replace(&mut seen[p], true)
        })
    }
}

impl fmt::Display for QubitOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.perm.iter().enumerate() {
            if k > 0 {
                f.write_char(',')?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// The QSR: amplitudes, their current qubit ordering, and measurement marks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStateRegister {
    n: usize,
    pub(crate) amps: Vec<FixedComplex>,
    pub(crate) ordering: QubitOrdering,
    pub(crate) measured: Vec<Option<u8>>,
}

fn check_n(n: usize) -> Result<(), StateError> {
    if (1..=N_MAX).contains(&n) {
        Ok(())
    } else {
        Err(StateError::QubitCount(n))
    }
}

/// Normalization drift budget `ε(n) = 2^n · 2^-15`.
pub fn norm_tolerance(n: usize) -> ExtendedReal {
    ExtendedReal::from_raw(1i64 << (n + 17)).expect("n <= N_MAX")
}

impl QuantumStateRegister {
    /// Sharp basis state `|index⟩`.
    pub fn init_basis(n: usize, index: usize) -> Result<Self, StateError> {
        check_n(n)?;
        if index >= 1 << n {
            return Err(StateError::IndexRange { n, index });
        }
        let mut amps = vec![FixedComplex::ZERO; 1 << n];
        amps[index] = FixedComplex::ONE;
        Ok(Self { n, amps, ordering: QubitOrdering::identity(n), measured: vec![None; n] })
    }

    /// Load arbitrary (possibly unnormalized) amplitudes.
    ///
    /// Amplitudes are quantized first and then normalized in fixed point by
    /// the same reciprocal-square-root scaling the measurement unit uses.
    pub fn init_arbitrary(n: usize, raw: &[(f64, f64)]) -> Result<Self, StateError> {
        check_n(n)?;
        if raw.len() != 1 << n {
            return Err(StateError::Length { expected: 1 << n, got: raw.len() });
        }
        let amps = raw.iter().map(|&(re, im)| FixedComplex::quantize(re, im)).collect::<Result<Vec<_>, _>>()?;
        let mut qsr = Self { n, amps, ordering: QubitOrdering::identity(n), measured: vec![None; n] };
        qsr.normalize()?;
        Ok(qsr)
    }

    fn normalize(&mut self) -> Result<(), StateError> {
        let mut flag = Overflow::new();
        let norm = self.amps.iter().fold(ExtendedReal::ZERO, |acc, a| acc.add(a.mag_sq(), &mut flag));
        if flag.is_set() {
            return Err(StateError::NormOverflow(norm.to_f64()));
        }
        if norm == ExtendedReal::ZERO {
            return Err(StateError::Degenerate);
        }
        let factor = norm.sqrt()?.recip().map_err(|_| StateError::Degenerate)?;
        for a in &mut self.amps {
            *a = a.scale(factor, &mut flag);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Amplitudes in physical (current ordering) layout.
    pub fn amplitudes(&self) -> &[FixedComplex] {
        &self.amps
    }

    /// Amplitudes indexed by logical basis state, regardless of ordering.
    pub fn logical_amplitudes(&self) -> Vec<FixedComplex> {
        if self.ordering.is_identity() {
            return self.amps.clone();
        }
        let mut out = vec![FixedComplex::ZERO; self.amps.len()];
        for (phys, &a) in self.amps.iter().enumerate() {
            out[self.ordering.logical_index(phys)] = a;
        }
        out
    }

    pub fn ordering(&self) -> &QubitOrdering {
        &self.ordering
    }

    /// Sharp value of `qubit` if it has been measured.
    pub fn measured(&self, qubit: usize) -> Option<u8> {
        self.measured.get(qubit).copied().flatten()
    }

    pub fn all_measured(&self) -> bool {
        self.measured.iter().all(Option::is_some)
    }

    /// `Σ |amp|²`, exact in the extended format.
    pub fn norm_sq(&self) -> ExtendedReal {
        let mut flag = Overflow::new();
        self.amps.iter().fold(ExtendedReal::ZERO, |acc, a| acc.add(a.mag_sq(), &mut flag))
    }

    /// Route the register back to identity ordering through the network.
    pub fn restore_identity(&mut self) -> Result<(), StateError> {
        if self.ordering.is_identity() {
            return Ok(());
        }
        let target = QubitOrdering::identity(self.n);
        permnet::reorder(&mut self.amps, &self.ordering, &target)?;
        self.ordering = target;
        Ok(())
    }

    /// Text dump: `n=<n> ordering=<perm>` then `index_hex re_raw im_raw` per amplitude.
    pub fn dump(&self) -> String {
        let mut out = format!("n={} ordering={}\n", self.n, self.ordering);
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(out, "{:#x} {} {}", i, a.re.raw(), a.im.raw());
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn zeroed(n: usize) -> Self {
        Self {
            n,
            amps: vec![FixedComplex::ZERO; 1 << n],
            ordering: QubitOrdering::identity(n),
            measured: vec![None; n],
        }
    }
}
