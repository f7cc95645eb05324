//! Repeated-trial sampling into [`TrialHistogram`]s.
//!
//! Trial `t` draws from `RandomSource::new(trial_seed(seed, t))`, so any
//! single trial can be replayed and the histogram does not depend on how
//! trials are spread over worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{rrm_readout, trial_seed, Circuit, Engine, EngineError, Mode, RandomSource};
use crate::histogram::TrialHistogram;
use crate::oracle::oracle_evaluate;
use crate::qstate::QuantumStateRegister;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Engine,
    Oracle,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Engine => "engine",
            Backend::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SampleConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `1` runs serially on the calling thread.
    pub jobs: usize,
    pub mode: Mode,
}

impl SampleConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, jobs: 1, mode: Mode::Deferred }
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }
}

/// Seed for the second side of a comparison, independent of `seed`'s own
/// trial stream.
pub fn companion_seed(seed: u64) -> u64 {
    trial_seed(seed ^ 0x6A09_E667_F3BC_C908, 0)
}

const BLOCK: u64 = 1024;

fn sample_block(
    circuit: &Circuit,
    n: usize,
    backend: Backend,
    cfg: &SampleConfig,
    range: std::ops::Range<u64>,
) -> Result<TrialHistogram, EngineError> {
    let mut hist = TrialHistogram::new(n);
    let mut engine = match backend {
        Backend::Engine => Some(Engine::new(n, cfg.mode)?),
        Backend::Oracle => None,
    };
    for t in range {
        let mut rng = RandomSource::new(trial_seed(cfg.seed, t));
        let readout = match &mut engine {
            Some(e) => {
                let mut q = QuantumStateRegister::init_basis(n, 0)?;
                e.evaluate_circuit(&mut q, circuit, &mut rng)?;
                rrm_readout(&q)
            }
            None => oracle_evaluate(circuit, n, &mut rng)?.0.readout(),
        };
        match readout {
            Ok(s) => hist.record(Some(s)),
            Err(EngineError::NotSharp) => hist.record(None),
            Err(e) => return Err(e),
        }
    }
    Ok(hist)
}

/// Run `cfg.trials` independent trials of `circuit` from `|0…0⟩`.
pub fn sample(
    circuit: &Circuit,
    n: usize,
    backend: Backend,
    cfg: &SampleConfig,
) -> Result<TrialHistogram, EngineError> {
    circuit.validate(n)?;
    let blocks: Vec<_> =
        (0..cfg.trials.div_ceil(BLOCK)).map(|b| b * BLOCK..((b + 1) * BLOCK).min(cfg.trials)).collect();
    let run = || {
        blocks.par_iter().map(|r| sample_block(circuit, n, backend, cfg, r.clone())).try_reduce(
            || TrialHistogram::new(n),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )
    };
    if cfg.jobs <= 1 {
        let mut hist = TrialHistogram::new(n);
        for r in blocks.iter().cloned() {
            hist.merge(&sample_block(circuit, n, backend, cfg, r)?);
        }
        return Ok(hist);
    }
    rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().expect("thread pool").install(run)
}
