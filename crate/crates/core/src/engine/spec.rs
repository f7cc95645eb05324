use std::fmt;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::gatelib::GateKind;

/// A gate instance: `{G₁, i}` or `{G₂, i, j}`.
///
/// For two-input gates `j` is the qubit placed at the next-most-significant
/// quartet bit, which makes it the control of CNOT/CY/CZ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub i: usize,
    pub j: Option<usize>,
    pub p_err: Option<f64>,
}

impl GateSpec {
    pub fn one(kind: GateKind, i: usize) -> Self {
        Self { kind, i, j: None, p_err: None }
    }

    pub fn two(kind: GateKind, target: usize, control: usize) -> Self {
        Self { kind, i: target, j: Some(control), p_err: None }
    }

    pub fn error(kind: GateKind, i: usize, p: f64) -> Self {
        Self { kind, i, j: None, p_err: Some(p) }
    }

    pub fn measure(i: usize) -> Self {
        Self::one(GateKind::M, i)
    }

    /// Check the spec against a register of `n` qubits.
    pub fn validate(&self, n: usize) -> Result<(), EngineError> {
        let bad = |reason: String| Err(EngineError::InvalidGate { gate: *self, reason });
        if self.i >= n {
            return bad(format!("qubit {} out of range for {n} qubits", self.i));
        }
        match (self.kind.is_two_input(), self.j) {
            (true, None) => return bad("two-input gate needs a second qubit".into()),
            (true, Some(j)) if j >= n => return bad(format!("qubit {j} out of range for {n} qubits")),
            (true, Some(j)) if j == self.i => return bad(format!("duplicate qubit {j}")),
            (false, Some(_)) => return bad("one-input gate takes a single qubit".into()),
            _ => {}
        }
        match (self.kind.is_error_gate(), self.p_err) {
            (true, None) => bad("error gate needs a probability".into()),
            (true, Some(p)) if !(0.0..=1.0).contains(&p) => bad(format!("probability {p} outside [0, 1]")),
            (false, Some(_)) => bad("only error gates take a probability".into()),
            _ => Ok(()),
        }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.i).chain(self.j)
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.i)?;
        if let Some(j) = self.j {
            write!(f, " {j}")?;
        }
        if let Some(p) = self.p_err {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

/// Ordered gate list, evaluated head first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    gates: Vec<GateSpec>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, gate: GateSpec) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<(), EngineError> {
        self.gates.iter().try_for_each(|g| g.validate(n))
    }

    /// Copy without measurement gates.
    pub fn without_measurements(&self) -> Self {
        self.gates.iter().filter(|g| !g.kind.is_measurement()).copied().collect()
    }

    /// Exact inverse of a circuit of static gates. `V`, `√Y` and `√ZZ` have no
    /// inverse kind in the gate set and are undone by three repetitions.
    /// Returns `None` if the circuit contains measurement or error gates.
    pub fn inverse(&self) -> Option<Self> {
        let mut out = Circuit::new();
        for g in self.gates.iter().rev() {
            use GateKind::*;
            let (kind, reps) = match g.kind {
                M | Ex | Ey | Ez => return None,
                S => (Sdg, 1),
                Sdg => (S, 1),
                T => (Tdg, 1),
                Tdg => (T, 1),
                V | SqrtY | SqrtZz => (g.kind, 3),
                k => (k, 1),
            };
            for _ in 0..reps {
                out.push(GateSpec { kind, ..*g });
            }
        }
        Some(out)
    }
}

impl FromIterator<GateSpec> for Circuit {
    fn from_iter<I: IntoIterator<Item = GateSpec>>(iter: I) -> Self {
        Self { gates: iter.into_iter().collect() }
    }
}

impl Extend<GateSpec> for Circuit {
    fn extend<I: IntoIterator<Item = GateSpec>>(&mut self, iter: I) {
        self.gates.extend(iter);
    }
}
