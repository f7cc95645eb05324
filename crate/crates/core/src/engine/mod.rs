//! Circuit evaluation: gate issue, operand routing through the permutation
//! network, the one- and two-input gate pools, the measurement pipeline and
//! the result reporting readout.
//!
//! Every gate first routes the register so its operand qubit(s) occupy the
//! low index bits, then runs the pool kernel over disjoint pairs (indices
//! `2c, 2c+1`) or quartets (`4c..4c+3`). In [`Mode::Deferred`] the register
//! keeps whatever ordering the last gate left behind and the next route is
//! computed relative to it; the identity ordering is restored once, after
//! the last gate. [`Mode::Literal`] routes to the gate's ordering and back
//! around every gate. Both modes produce bit-identical results.

mod random;
mod spec;

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

pub use random::{trial_seed, Prn, RandomSource};
pub use spec::{Circuit, GateSpec};

use crate::gatelib::{one_input_matrix, two_input_matrix, GateError, GateKind, GateMatrix1, GateMatrix2};
use crate::numerics::{ExtendedReal, FixedComplex, NumericError, Overflow};
use crate::permnet::{target_ordering, BenesNetwork, IndexMap, PermError, SwitchSettings};
use crate::qstate::{QuantumStateRegister, QubitOrdering, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid gate `{gate}`: {reason}")]
    InvalidGate { gate: GateSpec, reason: String },
    #[error("register has {got} qubits, engine expects {expected}")]
    QubitCount { expected: usize, got: usize },
    #[error("gate `{gate}` saturated the fixed-point range")]
    Overflow { gate: GateSpec },
    #[error("measurement of qubit {qubit} collapsed onto probability {probability}, below the representable floor")]
    NumericalCollapse { qubit: usize, probability: f64 },
    #[error("register is not in a single basis state")]
    NotSharp,
    #[error(transparent)]
    Permutation(#[from] PermError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl EngineError {
    /// Failures of the arithmetic rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, EngineError::Overflow { .. } | EngineError::NumericalCollapse { .. } | EngineError::Numeric(_))
    }
}

/// Measurement sharpness tolerance `τ(n) = 2^n · 2^-17`.
pub fn sharpness_tolerance(n: usize) -> ExtendedReal {
    ExtendedReal::from_raw(1i64 << (n + 15)).expect("n <= N_MAX")
}

/// Readout tolerance `ρ(n) = 2^n · 2^-14`.
pub fn readout_tolerance(n: usize) -> ExtendedReal {
    ExtendedReal::from_raw(1i64 << (n + 18)).expect("n <= N_MAX")
}

/// Smallest winning probability the collapse unit will rescale.
pub const MEASUREMENT_FLOOR: ExtendedReal = ExtendedReal::pow2(-14);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Remember the ordering between gates; restore once at the end.
    #[default]
    Deferred,
    /// Route to the gate ordering and straight back around every gate.
    Literal,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deferred" => Ok(Mode::Deferred),
            "literal" => Ok(Mode::Literal),
            other => Err(format!("unknown mode `{other}` (expected deferred or literal)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementOutcome {
    pub qubit: usize,
    pub bit: u8,
    pub p0: ExtendedReal,
    /// The qubit was already sharp; no random draw was made.
    pub sharp: bool,
}

/// Deterministic work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    /// One- and two-input gate pool evaluations (error gates included).
    pub gate_evaluations: u64,
    /// Passes through the permutation network on behalf of gates.
    pub permutation_passes: u64,
    /// Measurement probability reductions.
    pub measurement_reductions: u64,
    /// Final passes restoring the identity ordering after a circuit.
    pub restore_passes: u64,
}

impl std::ops::AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.gate_evaluations += o.gate_evaluations;
        self.permutation_passes += o.permutation_passes;
        self.measurement_reductions += o.measurement_reductions;
        self.restore_passes += o.restore_passes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub seq: usize,
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub prn: Option<Prn>,
    pub ordering_after: QubitOrdering,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qubits: Vec<String> = self.qubits.iter().map(ToString::to_string).collect();
        write!(f, "{} {} {} ", self.seq, self.kind, qubits.join(","))?;
        match self.prn {
            Some(p) => write!(f, "{}", p.to_f64())?,
            None => f.write_str("-")?,
        }
        write!(f, " {}", self.ordering_after)
    }
}

/// One routed pass, kept for `--dump-routing`.
#[derive(Debug, Clone)]
pub struct RoutingEntry {
    pub seq: Option<usize>,
    pub from: QubitOrdering,
    pub to: QubitOrdering,
    pub settings: Rc<SwitchSettings>,
}

impl fmt::Display for RoutingEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seq {
            Some(s) => writeln!(f, "# gate {s}: {} -> {}", self.from, self.to)?,
            None => writeln!(f, "# restore: {} -> {}", self.from, self.to)?,
        }
        f.write_str(&self.settings.dump())
    }
}

/// Simulation unit for a fixed register size.
///
/// Routes are cached per `(from, to)` ordering pair, so repeated trials of
/// the same circuit only route each distinct pass once.
#[derive(Debug)]
pub struct Engine {
    n: usize,
    mode: Mode,
    net: BenesNetwork,
    routes: HashMap<(QubitOrdering, QubitOrdering), Rc<SwitchSettings>>,
    one_input: HashMap<GateKind, GateMatrix1>,
    two_input: HashMap<GateKind, GateMatrix2>,
    counts: OpCounts,
    seq: usize,
    trace: Option<Vec<TraceEntry>>,
    routing: Option<Vec<RoutingEntry>>,
}

impl Engine {
    pub fn new(n: usize, mode: Mode) -> Result<Self, EngineError> {
        let net = BenesNetwork::new(n)?;
        let one_input = GateKind::STATIC_ONE_INPUT
            .into_iter()
            .map(|k| Ok((k, one_input_matrix(k)?)))
            .collect::<Result<_, GateError>>()?;
        let two_input =
            GateKind::TWO_INPUT.into_iter().map(|k| Ok((k, two_input_matrix(k)?))).collect::<Result<_, GateError>>()?;
        Ok(Self {
            n,
            mode,
            net,
            routes: HashMap::new(),
            one_input,
            two_input,
            counts: OpCounts::default(),
            seq: 0,
            trace: None,
            routing: None,
        })
    }

    /// Record a [`TraceEntry`] per gate.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Record the switch settings of every pass.
    pub fn with_routing_log(mut self) -> Self {
        self.routing = Some(Vec::new());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn counts(&self) -> OpCounts {
        self.counts
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or_default()
    }

    pub fn routing_log(&self) -> &[RoutingEntry] {
        self.routing.as_deref().unwrap_or_default()
    }

    /// Clear counters, trace and routing log (the route cache is kept).
    pub fn reset(&mut self) {
        self.counts = OpCounts::default();
        self.seq = 0;
        if let Some(t) = &mut self.trace {
            t.clear();
        }
        if let Some(r) = &mut self.routing {
            r.clear();
        }
    }

    fn check_register(&self, qsr: &QuantumStateRegister) -> Result<(), EngineError> {
        if qsr.n() != self.n {
            return Err(EngineError::QubitCount { expected: self.n, got: qsr.n() });
        }
        Ok(())
    }

    fn settings_for(&mut self, from: &QubitOrdering, to: &QubitOrdering) -> Result<Rc<SwitchSettings>, EngineError> {
        let key = (from.clone(), to.clone());
        if let Some(s) = self.routes.get(&key) {
            return Ok(Rc::clone(s));
        }
        let map = IndexMap::new(from.clone(), to.clone())?;
        let settings = Rc::new(self.net.route(&map)?);
        self.routes.insert(key, Rc::clone(&settings));
        Ok(settings)
    }

    /// One pass through the network, leaving the register in `target` order.
    fn pass(
        &mut self,
        qsr: &mut QuantumStateRegister,
        target: QubitOrdering,
        seq: Option<usize>,
    ) -> Result<(), EngineError> {
        let settings = self.settings_for(&qsr.ordering, &target)?;
        self.net.apply_in_place(&settings, &mut qsr.amps)?;
        if let Some(log) = &mut self.routing {
            log.push(RoutingEntry { seq, from: qsr.ordering.clone(), to: target.clone(), settings });
        }
        qsr.ordering = target;
        debug_assert!(qsr.ordering.is_valid());
        Ok(())
    }

    /// Route operands into the low bits (Gate Operand Selector + network).
    fn stage(&mut self, qsr: &mut QuantumStateRegister, i: usize, j: Option<usize>) -> Result<(), EngineError> {
        let target = target_ordering(&qsr.ordering, i, j)?;
        self.pass(qsr, target, Some(self.seq))?;
        self.counts.permutation_passes += 1;
        Ok(())
    }

    fn unstage(&mut self, qsr: &mut QuantumStateRegister) -> Result<(), EngineError> {
        if self.mode == Mode::Literal {
            self.pass(qsr, QubitOrdering::identity(self.n), Some(self.seq))?;
            self.counts.permutation_passes += 1;
        }
        Ok(())
    }

    fn record(&mut self, spec: &GateSpec, prn: Option<Prn>, qsr: &QuantumStateRegister) {
        if let Some(t) = &mut self.trace {
            t.push(TraceEntry {
                seq: self.seq,
                kind: spec.kind,
                qubits: spec.qubits().collect(),
                prn,
                ordering_after: qsr.ordering.clone(),
            });
        }
        self.seq += 1;
    }

    /// Apply a non-measurement one-input gate (including error gates).
    /// Returns the random draw an error gate consumed.
    pub fn evaluate_gate1(
        &mut self,
        qsr: &mut QuantumStateRegister,
        spec: &GateSpec,
        rng: &mut RandomSource,
    ) -> Result<Option<Prn>, EngineError> {
        self.check_register(qsr)?;
        spec.validate(self.n)?;
        if spec.kind.is_two_input() {
            return Err(GateError::NotOneInput(spec.kind).into());
        }
        if spec.kind.is_measurement() {
            return Err(GateError::NotStaticMatrix(spec.kind).into());
        }
        let (kind, prn) = match spec.kind.error_pauli() {
            Some(pauli) => {
                let prn = rng.next_prn();
                let fire = prn.to_f64() < spec.p_err.unwrap_or(0.0);
                (if fire { pauli } else { GateKind::Nop }, Some(prn))
            }
            None => (spec.kind, None),
        };
        self.stage(qsr, spec.i, None)?;
        let m = &self.one_input[&kind];
        let mut flag = Overflow::new();
        for pair in qsr.amps.chunks_exact_mut(2) {
            let out = m.apply([pair[0], pair[1]], &mut flag);
            pair.copy_from_slice(&out);
        }
        if flag.is_set() {
            return Err(EngineError::Overflow { gate: *spec });
        }
        self.unstage(qsr)?;
        self.counts.gate_evaluations += 1;
        self.record(spec, prn, qsr);
        Ok(prn)
    }

    /// Apply a two-input gate: qubit `i` at quartet bit 0, `j` at bit 1.
    pub fn evaluate_gate2(
        &mut self,
        qsr: &mut QuantumStateRegister,
        spec: &GateSpec,
        _rng: &mut RandomSource,
    ) -> Result<(), EngineError> {
        self.check_register(qsr)?;
        spec.validate(self.n)?;
        if !spec.kind.is_two_input() {
            return Err(GateError::NotTwoInput(spec.kind).into());
        }
        self.stage(qsr, spec.i, spec.j)?;
        let m = &self.two_input[&spec.kind];
        for quartet in qsr.amps.chunks_exact_mut(4) {
            let out = m.apply([quartet[0], quartet[1], quartet[2], quartet[3]]);
            quartet.copy_from_slice(&out);
        }
        self.unstage(qsr)?;
        self.counts.gate_evaluations += 1;
        self.record(spec, None, qsr);
        Ok(())
    }

    /// Measure `qubit`, collapsing the register onto the sampled outcome.
    pub fn measure(
        &mut self,
        qsr: &mut QuantumStateRegister,
        qubit: usize,
        rng: &mut RandomSource,
    ) -> Result<MeasurementOutcome, EngineError> {
        self.check_register(qsr)?;
        let spec = GateSpec::measure(qubit);
        spec.validate(self.n)?;
        self.stage(qsr, qubit, None)?;

        let p0 = even_probability(&qsr.amps);
        let tau = sharpness_tolerance(self.n);
        let mut flag = Overflow::new();
        let distance_to_one = p0.sub(ExtendedReal::ONE, &mut flag).abs();
        let (bit, prn) = if p0 <= tau {
            (1u8, None)
        } else if distance_to_one <= tau {
            (0u8, None)
        } else {
            let prn = rng.next_prn();
            let bit = if (prn.raw() as i64) < p0.raw() { 0 } else { 1 };
            (bit, Some(prn))
        };

        if prn.is_some() {
            let p_win = if bit == 0 { p0 } else { ExtendedReal::ONE.sub(p0, &mut flag) };
            let collapse = || EngineError::NumericalCollapse { qubit, probability: p_win.to_f64() };
            if p_win < MEASUREMENT_FLOOR {
                return Err(collapse());
            }
            let factor = p_win.sqrt().and_then(ExtendedReal::recip).map_err(|_| collapse())?;
            let keep = bit as usize;
            for pair in qsr.amps.chunks_exact_mut(2) {
                pair[keep] = pair[keep].scale(factor, &mut flag);
                pair[1 - keep] = FixedComplex::ZERO;
            }
            if flag.is_set() {
                return Err(EngineError::Overflow { gate: spec });
            }
        }
        qsr.measured[qubit] = Some(bit);

        self.unstage(qsr)?;
        self.counts.measurement_reductions += 1;
        self.record(&spec, prn, qsr);
        Ok(MeasurementOutcome { qubit, bit, p0, sharp: prn.is_none() })
    }

    /// Evaluate `circuit` in order, then restore the identity ordering.
    /// The whole circuit is validated before the register is touched.
    pub fn evaluate_circuit(
        &mut self,
        qsr: &mut QuantumStateRegister,
        circuit: &Circuit,
        rng: &mut RandomSource,
    ) -> Result<Vec<MeasurementOutcome>, EngineError> {
        self.check_register(qsr)?;
        circuit.validate(self.n)?;
        let mut outcomes = Vec::new();
        for spec in circuit.gates() {
            if spec.kind.is_two_input() {
                self.evaluate_gate2(qsr, spec, rng)?;
            } else if spec.kind.is_measurement() {
                outcomes.push(self.measure(qsr, spec.i, rng)?);
            } else {
                self.evaluate_gate1(qsr, spec, rng)?;
            }
        }
        if self.mode == Mode::Deferred && !circuit.is_empty() {
            self.pass(qsr, QubitOrdering::identity(self.n), None)?;
            self.counts.restore_passes += 1;
        }
        Ok(outcomes)
    }
}

/// `Σ_c |amps[2c]|²` reduced over a balanced binary tree, so the
/// association order is fixed regardless of how the leaves are produced.
fn even_probability(amps: &[FixedComplex]) -> ExtendedReal {
    fn reduce(amps: &[FixedComplex], lo: usize, hi: usize, flag: &mut Overflow) -> ExtendedReal {
        if hi - lo == 1 {
            return amps[2 * lo].mag_sq();
        }
        let mid = lo + (hi - lo) / 2;
        let left = reduce(amps, lo, mid, flag);
        let right = reduce(amps, mid, hi, flag);
        left.add(right, flag)
    }
    reduce(amps, 0, amps.len() / 2, &mut Overflow::new())
}

/// Result reporting: the index of the single surviving basis state.
///
/// Succeeds only when one amplitude has `|a|² ≥ 1 − ρ(n)` and every other
/// has `|a|² ≤ ρ(n)`. Works on logical indices whatever the ordering.
pub fn rrm_readout(qsr: &QuantumStateRegister) -> Result<usize, EngineError> {
    let rho = readout_tolerance(qsr.n());
    let mut flag = Overflow::new();
    let high = ExtendedReal::ONE.sub(rho, &mut flag);
    let mut found = None;
    for (phys, a) in qsr.amplitudes().iter().enumerate() {
        let m = a.mag_sq();
        if m >= high && found.is_none() {
            found = Some(qsr.ordering().logical_index(phys));
        } else if m > rho {
            return Err(EngineError::NotSharp);
        }
    }
    found.ok_or(EngineError::NotSharp)
}
