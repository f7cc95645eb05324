//! Circuit text format, test-circuit builders and the random verification
//! circuit generator.
//!
//! ```text
//! # name: bell
//! qubits 2
//! h 0
//! cnot 1 0      # <gate> <target> <control>
//! ex 0 0.25     # error gates take a probability
//! m 0
//! m 1
//! ```
//!
//! The first non-comment line declares the register size. Keywords are
//! case-insensitive. For two-input gates the first qubit is the target and
//! the second the control (the quartet's high bit). Comments run from `#`
//! to end of line; `# name:` and `# seed:` comments carry metadata.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{Circuit, GateSpec};
use crate::gatelib::GateKind;
use crate::qstate::N_MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitDocument {
    pub n: usize,
    pub circuit: Circuit,
    pub name: Option<String>,
    pub seed: Option<u64>,
}

impl CircuitDocument {
    pub fn new(n: usize, circuit: Circuit) -> Self {
        Self { n, circuit, name: None, seed: None }
    }

    pub fn gates(&self) -> &[GateSpec] {
        self.circuit.gates()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("need at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("at most {N_MAX} qubits are supported, got {0}")]
    TooManyQubits(usize),
    #[error("need at least one iteration")]
    NoIterations,
}

/// A token and its 1-based column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn metadata<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    comment.trim().strip_prefix(key)?.strip_prefix(':').map(str::trim)
}

/// Parse and validate a circuit document.
pub fn parse(text: &str) -> Result<CircuitDocument, ParseError> {
    let mut doc: Option<CircuitDocument> = None;
    let (mut name, mut seed) = (None, None);
    let mut last = (1, 1);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |column: usize, message: String| ParseError { line, column, message };
        let (body, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(v) = metadata(c, "name") {
                name = Some(v.to_string());
            } else if let Some(v) = metadata(c, "seed") {
                seed = Some(v.parse().map_err(|_| err(raw.find('#').unwrap() + 1, format!("bad seed `{v}`")))?);
            }
        }
        let toks = tokens(body);
        let Some(&(col, word)) = toks.first() else { continue };
        last = (line, col);
        let Some(doc) = doc.as_mut() else {
            if !word.eq_ignore_ascii_case("qubits") {
                return Err(err(col, "expected `qubits <n>` header".into()));
            }
            let (ncol, nword) = *toks.get(1).ok_or_else(|| err(col + word.len(), "missing qubit count".into()))?;
            let n: usize = nword.parse().map_err(|_| err(ncol, format!("bad qubit count `{nword}`")))?;
            if !(1..=N_MAX).contains(&n) {
                return Err(err(ncol, format!("qubit count must be between 1 and {N_MAX}")));
            }
            if let Some(&(c, t)) = toks.get(2) {
                return Err(err(c, format!("unexpected `{t}`")));
            }
            doc = Some(CircuitDocument::new(n, Circuit::new()));
            continue;
        };
        let kind = GateKind::from_keyword(word).ok_or_else(|| err(col, format!("unknown gate `{word}`")))?;
        let mut args = toks[1..].iter().copied();
        let mut qubit = |what: &str| -> Result<usize, ParseError> {
            let (c, t) = args.next().ok_or_else(|| err(col, format!("missing {what}")))?;
            let q: usize = t.parse().map_err(|_| err(c, format!("bad qubit index `{t}`")))?;
            if q >= doc.n {
                return Err(err(c, format!("qubit index {q} out of range for {} qubits", doc.n)));
            }
            Ok(q)
        };
        let i = qubit(if kind.is_two_input() { "target qubit" } else { "qubit" })?;
        let j = if kind.is_two_input() {
            let j = qubit("control qubit")?;
            if j == i {
                return Err(err(toks[2].0, format!("duplicate qubit {j}")));
            }
            Some(j)
        } else {
            None
        };
        let p_err = if kind.is_error_gate() {
            let (c, t) = args.next().ok_or_else(|| err(col, "missing probability for error gate".into()))?;
            let p: f64 = t.parse().map_err(|_| err(c, format!("bad probability `{t}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(c, format!("probability {p} outside [0, 1]")));
            }
            Some(p)
        } else {
            None
        };
        if let Some((c, t)) = args.next() {
            return Err(err(c, format!("unexpected `{t}`")));
        }
        doc.circuit.push(GateSpec { kind, i, j, p_err });
    }
    let mut doc =
        doc.ok_or(ParseError { line: last.0, column: last.1, message: "missing `qubits <n>` header".into() })?;
    doc.name = name;
    doc.seed = seed;
    Ok(doc)
}

/// Canonical text: metadata comments, `qubits <n>`, one lowercase gate per line.
pub fn serialize(doc: &CircuitDocument) -> String {
    doc.to_string()
}

impl fmt::Display for CircuitDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            writeln!(f, "# name: {name}")?;
        }
        if let Some(seed) = self.seed {
            writeln!(f, "# seed: {seed}")?;
        }
        writeln!(f, "qubits {}", self.n)?;
        for g in self.circuit.gates() {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// H on every qubit, measure qubit 0, CNOT (target 1, control 0), then
/// measure the remaining qubits.
pub fn simple_test_circuit(n: usize) -> Result<CircuitDocument, GenerateError> {
    check_size(n)?;
    let mut c: Circuit = (0..n).map(|q| GateSpec::one(GateKind::H, q)).collect();
    c.push(GateSpec::measure(0));
    c.push(GateSpec::two(GateKind::Cnot, 1, 0));
    c.extend((1..n).map(GateSpec::measure));
    Ok(CircuitDocument { name: Some(format!("simple-{n}")), ..CircuitDocument::new(n, c) })
}

/// Gates drawn uniformly per qubit per iteration. `S` appears twice: once
/// for itself and once standing in for √Z, which is the same matrix.
pub const RANDOM_GATE_LIST: [GateKind; 10] = [
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::S,
    GateKind::Sdg,
    GateKind::T,
    GateKind::Tdg,
    GateKind::V,
    GateKind::SqrtY,
    GateKind::S,
];

/// Random verification circuit: an H layer, then per iteration a CNOT chain
/// `CNOT(target q+1, control q)` for `q = 0..n-1` followed by one random gate
/// per qubit, and finally a measurement of every qubit.
pub fn random_circuit(n: usize, iterations: usize, seed: u64) -> Result<CircuitDocument, GenerateError> {
    check_size(n)?;
    if iterations == 0 {
        return Err(GenerateError::NoIterations);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Circuit = (0..n).map(|q| GateSpec::one(GateKind::H, q)).collect();
    for _ in 0..iterations {
        c.extend((0..n - 1).map(|q| GateSpec::two(GateKind::Cnot, q + 1, q)));
        for q in 0..n {
            c.push(GateSpec::one(RANDOM_GATE_LIST[rng.gen_range(0..RANDOM_GATE_LIST.len())], q));
        }
    }
    c.extend((0..n).map(GateSpec::measure));
    Ok(CircuitDocument {
        name: Some(format!("random-n{n}-i{iterations}")),
        seed: Some(seed),
        ..CircuitDocument::new(n, c)
    })
}

fn check_size(n: usize) -> Result<(), GenerateError> {
    match n {
        0 | 1 => Err(GenerateError::TooFewQubits(n)),
        n if n > N_MAX => Err(GenerateError::TooManyQubits(n)),
        _ => Ok(()),
    }
}
