//! Double-precision reference simulator and comparison metrics.
//!
//! The oracle shares nothing with the engine except gate definitions (taken
//! from their exact form) and the random stream. Gates act on index pairs
//! and quartets chosen by bit arithmetic, with no operand routing and no
//! fixed point, so agreement between the two is meaningful evidence.

use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{readout_tolerance, sharpness_tolerance, Circuit, EngineError, RandomSource};
use crate::gatelib::{one_input_matrix, two_input_matrix, GateKind};
use crate::histogram::{format_state, TrialHistogram};
use crate::qstate::{QuantumStateRegister, StateError, N_MAX};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    n: usize,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub qubit: usize,
    pub bit: u8,
    pub p0: f64,
    pub sharp: bool,
}

impl OracleState {
    pub fn basis(n: usize, index: usize) -> Result<Self, StateError> {
        if !(1..=N_MAX).contains(&n) {
            return Err(StateError::QubitCount(n));
        }
        if index >= 1 << n {
            return Err(StateError::IndexRange { n, index });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// The engine register's amplitudes, read exactly, in logical order.
    pub fn from_register(qsr: &QuantumStateRegister) -> Self {
        let amps = qsr
            .logical_amplitudes()
            .into_iter()
            .map(|a| {
                let (re, im) = a.to_f64();
                Complex64::new(re, im)
            })
            .collect();
        Self { n: qsr.n(), amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn apply1(&mut self, kind: GateKind, q: usize) {
        let m = one_input_matrix(kind).expect("static one-input gate").to_dense();
        let bit = 1 << q;
        for lo in (0..self.amps.len()).filter(|x| x & bit == 0) {
            let hi = lo | bit;
            let (a, b) = (self.amps[lo], self.amps[hi]);
            self.amps[lo] = m[0][0] * a + m[0][1] * b;
            self.amps[hi] = m[1][0] * a + m[1][1] * b;
        }
    }

    /// Quartet sub-index `k = b0 + 2·b1` with `b0` the bit of `i`, `b1` of `j`.
    fn apply2(&mut self, kind: GateKind, i: usize, j: usize) {
        let m = two_input_matrix(kind).expect("two-input gate").to_dense();
        let (bi, bj) = (1 << i, 1 << j);
        for base in (0..self.amps.len()).filter(|x| x & (bi | bj) == 0) {
            let idx = [base, base | bi, base | bj, base | bi | bj];
            let v = idx.map(|x| self.amps[x]);
            for (r, &out) in idx.iter().enumerate() {
                self.amps[out] = (0..4).map(|c| m[r][c] * v[c]).sum();
            }
        }
    }

    fn measure(&mut self, q: usize, rng: &mut RandomSource) -> OracleOutcome {
        let bit_mask = 1 << q;
        let p0: f64 = self.amps.iter().enumerate().filter(|(x, _)| x & bit_mask == 0).map(|(_, a)| a.norm_sqr()).sum();
        let tau = sharpness_tolerance(self.n).to_f64();
        let (bit, sharp) = if p0 <= tau {
            (1, true)
        } else if (p0 - 1.0).abs() <= tau {
            (0, true)
        } else {
            (if rng.next_prn().to_f64() < p0 { 0 } else { 1 }, false)
        };
        if !sharp {
            let p_win = if bit == 0 { p0 } else { 1.0 - p0 };
            let factor = 1.0 / p_win.sqrt();
            for (x, a) in self.amps.iter_mut().enumerate() {
                let on = u8::from(x & bit_mask != 0);
                *a = if on == bit { *a * factor } else { Complex64::new(0.0, 0.0) };
            }
        }
        OracleOutcome { qubit: q, bit, p0, sharp }
    }

    /// Readout with the engine's rule, so both sides classify trials alike.
    pub fn readout(&self) -> Result<usize, EngineError> {
        let rho = readout_tolerance(self.n).to_f64();
        let mut found = None;
        for (x, a) in self.amps.iter().enumerate() {
            let m = a.norm_sqr();
            if m >= 1.0 - rho && found.is_none() {
                found = Some(x);
            } else if m > rho {
                return Err(EngineError::NotSharp);
            }
        }
        found.ok_or(EngineError::NotSharp)
    }
}

/// Run `circuit` from `|0…0⟩`, drawing from `rng` exactly where the engine does.
pub fn oracle_evaluate(
    circuit: &Circuit,
    n: usize,
    rng: &mut RandomSource,
) -> Result<(OracleState, Vec<OracleOutcome>), EngineError> {
    let mut state = OracleState::basis(n, 0)?;
    let outcomes = oracle_apply(&mut state, circuit, rng)?;
    Ok((state, outcomes))
}

/// Run `circuit` on an existing state.
pub fn oracle_apply(
    state: &mut OracleState,
    circuit: &Circuit,
    rng: &mut RandomSource,
) -> Result<Vec<OracleOutcome>, EngineError> {
    circuit.validate(state.n)?;
    let mut outcomes = Vec::new();
    for g in circuit.gates() {
        match (g.kind, g.j) {
            (GateKind::M, _) => outcomes.push(state.measure(g.i, rng)),
            (kind, Some(j)) => state.apply2(kind, g.i, j),
            (kind, None) => match kind.error_pauli() {
                Some(pauli) => {
                    if rng.next_prn().to_f64() < g.p_err.unwrap_or(0.0) {
                        state.apply1(pauli, g.i);
                    }
                }
                None => state.apply1(kind, g.i),
            },
        }
    }
    Ok(outcomes)
}

/// One row of the per-state table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub state: String,
    pub count: [u64; 2],
    pub mu: [f64; 2],
}

/// Agreement metrics between two states or two sampled distributions.
///
/// For states the components are the real and imaginary parts of every
/// amplitude; for distributions they are the per-state frequencies over the
/// union of both supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub labels: [String; 2],
    pub max_abs_diff: f64,
    pub euclidean: f64,
    pub mae: f64,
    pub mae_std: f64,
    /// States sampled on both sides, sorted by index.
    pub rows: Vec<ComparisonRow>,
    /// Trials landing on states the other side never produced.
    pub others: [u64; 2],
    pub unsharp: [u64; 2],
    pub trials: [u64; 2],
}

impl ComparisonReport {
    fn from_diffs(labels: [&str; 2], diffs: &[f64]) -> Self {
        let len = diffs.len().max(1) as f64;
        let mae = diffs.iter().sum::<f64>() / len;
        let var = diffs.iter().map(|d| (d - mae).powi(2)).sum::<f64>() / len;
        Self {
            labels: labels.map(String::from),
            max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
            euclidean: diffs.iter().map(|d| d * d).sum::<f64>().sqrt(),
            mae,
            mae_std: var.sqrt(),
            rows: Vec::new(),
            others: [0; 2],
            unsharp: [0; 2],
            trials: [0; 2],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-state table followed by the summary statistics.
    pub fn to_table(&self) -> String {
        let [a, b] = &self.labels;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>12} {:>10} {:>12} {:>10}",
            "state",
            format!("{a} n"),
            format!("{a} mu"),
            format!("{b} n"),
            format!("{b} mu")
        );
        let mut line = |label: &str, c: [u64; 2], m: [f64; 2]| {
            let _ = writeln!(s, "{label:<10} {:>12} {:>10.5} {:>12} {:>10.5}", c[0], m[0], c[1], m[1]);
        };
        for r in &self.rows {
            line(&r.state, r.count, r.mu);
        }
        let frac =
            |c: [u64; 2]| [0, 1].map(|k| if self.trials[k] == 0 { 0.0 } else { c[k] as f64 / self.trials[k] as f64 });
        line("others", self.others, frac(self.others));
        if self.unsharp != [0, 0] {
            line("unsharp", self.unsharp, frac(self.unsharp));
        }
        let _ = writeln!(s, "euclidean distance {:.6e}", self.euclidean);
        let _ = writeln!(s, "mean absolute error {:.6e}", self.mae);
        let _ = writeln!(s, "mae std deviation {:.6e}", self.mae_std);
        let _ = writeln!(s, "max abs difference {:.6e}", self.max_abs_diff);
        s
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table())
    }
}

/// Component-wise comparison of an engine register (read exactly as
/// `raw / 2^16`) with an oracle state, both in logical order.
pub fn compare_states(qsr: &QuantumStateRegister, oracle: &OracleState) -> Result<ComparisonReport, StateError> {
    if qsr.n() != oracle.n {
        return Err(StateError::Length { expected: oracle.amps.len(), got: qsr.amplitudes().len() });
    }
    let engine = OracleState::from_register(qsr);
    let diffs: Vec<f64> =
        engine.amps.iter().zip(&oracle.amps).flat_map(|(e, o)| [(e.re - o.re).abs(), (e.im - o.im).abs()]).collect();
    Ok(ComparisonReport::from_diffs(["engine", "oracle"], &diffs))
}

/// Distance between two sampled distributions. Frequencies are
/// `count / trials`, where unsharp trials count toward `trials`.
pub fn compare_distributions(h1: &TrialHistogram, h2: &TrialHistogram, labels: [&str; 2]) -> ComparisonReport {
    let states: std::collections::BTreeSet<usize> = h1.counts().keys().chain(h2.counts().keys()).copied().collect();
    let diffs: Vec<f64> = states.iter().map(|&s| (h1.mu(s) - h2.mu(s)).abs()).collect();
    let mut report = ComparisonReport::from_diffs(labels, &diffs);
    let n = h1.n().max(h2.n());
    for &s in &states {
        match (h1.count(s), h2.count(s)) {
            (0, c) => report.others[1] += c,
            (c, 0) => report.others[0] += c,
            (c1, c2) => {
                report.rows.push(ComparisonRow { state: format_state(s, n), count: [c1, c2], mu: [h1.mu(s), h2.mu(s)] })
            }
        }
    }
    report.unsharp = [h1.unsharp(), h2.unsharp()];
    report.trials = [h1.trials(), h2.trials()];
    report
}
