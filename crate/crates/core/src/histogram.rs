//! Trial histograms: counts of readout states over repeated simulations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `0x`-prefixed hex label, zero-padded to the width of `n` bits.
pub fn format_state(index: usize, n: usize) -> String {
    format!("0x{:0w$x}", index, w = n.div_ceil(4).max(1))
}

#[derive(Debug, Error, PartialEq)]
pub enum HistogramError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("state {0:#x} does not fit the register")]
    StateRange(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrialHistogram {
    n: usize,
    counts: BTreeMap<usize, u64>,
    unsharp: u64,
}

impl TrialHistogram {
    pub fn new(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `None` records a trial whose readout was not sharp.
    pub fn record(&mut self, readout: Option<usize>) {
        match readout {
            Some(s) => *self.counts.entry(s).or_default() += 1,
            None => self.unsharp += 1,
        }
    }

    pub fn merge(&mut self, other: &TrialHistogram) {
        for (&s, &c) in &other.counts {
            *self.counts.entry(s).or_default() += c;
        }
        self.unsharp += other.unsharp;
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn count(&self, state: usize) -> u64 {
        self.counts.get(&state).copied().unwrap_or(0)
    }

    pub fn unsharp(&self) -> u64 {
        self.unsharp
    }

    /// Total trials, unsharp ones included.
    pub fn trials(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.unsharp
    }

    pub fn mu(&self, state: usize) -> f64 {
        match self.trials() {
            0 => 0.0,
            t => self.count(state) as f64 / t as f64,
        }
    }

    /// Header `state,count,mu`, rows sorted by state, then an `unsharp` row
    /// if any trial failed readout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,count,mu\n");
        for (&s, &c) in &self.counts {
            out += &format!("{},{c},{}\n", format_state(s, self.n), self.mu(s));
        }
        if self.unsharp > 0 {
            let mu = self.unsharp as f64 / self.trials() as f64;
            out += &format!("unsharp,{},{mu}\n", self.unsharp);
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). The `mu` column is derived data
    /// and is not read back.
    pub fn from_csv(text: &str, n: usize) -> Result<Self, HistogramError> {
        let mut h = Self::new(n);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let bad = |line, reason: &str| HistogramError::Parse { line, reason: reason.into() };
        match lines.next() {
            Some((_, "state,count,mu")) => {}
            _ => return Err(bad(1, "expected header `state,count,mu`")),
        }
        for (line, l) in lines.filter(|(_, l)| !l.is_empty()) {
            let fields: Vec<&str> = l.split(',').collect();
            let [state, count, _mu] = fields[..] else {
                return Err(bad(line, "expected three fields"));
            };
            let count: u64 = count.parse().map_err(|_| bad(line, "bad count"))?;
            if state == "unsharp" {
                h.unsharp += count;
                continue;
            }
            let hex = state.strip_prefix("0x").ok_or_else(|| bad(line, "state must start with 0x"))?;
            let s = usize::from_str_radix(hex, 16).map_err(|_| bad(line, "bad hex state"))?;
            if n < usize::BITS as usize && s >> n != 0 {
                return Err(HistogramError::StateRange(s));
            }
            *h.counts.entry(s).or_default() += count;
        }
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        let doc = HistogramJson {
            n: self.n,
            trials: self.trials(),
            rows: self
                .counts
                .iter()
                .map(|(&s, &count)| JsonRow { state: format_state(s, self.n), count, mu: self.mu(s) })
                .collect(),
            unsharp: self.unsharp,
        };
        serde_json::to_string_pretty(&doc).expect("histogram serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    n: usize,
    trials: u64,
    rows: Vec<JsonRow>,
    unsharp: u64,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    state: String,
    count: u64,
    mu: f64,
}
